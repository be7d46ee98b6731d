use super::SmallGraph;

/// Number of spanning trees: determinant of a Laplacian minor by fraction-free
/// (Bareiss) elimination in exact integers. Zero for disconnected graphs.
pub fn spanning_trees(g: &SmallGraph) -> u64 {
    let n = g.n;
    if n <= 1 {
        return 1;
    }
    let m = n - 1;
    let mut a = vec![vec![0i128; m]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = if i == j {
                g.degree(i + 1) as i128
            } else if g.has_edge(i + 1, j + 1) {
                -1
            } else {
                0
            };
        }
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for p in 0..m {
        if a[p][p] == 0 {
            match (p + 1..m).find(|&r| a[r][p] != 0) {
                Some(r) => {
                    a.swap(p, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in p + 1..m {
            for j in p + 1..m {
                a[i][j] = (a[i][j] * a[p][p] - a[i][p] * a[p][j]) / prev;
            }
        }
        prev = a[p][p];
    }
    (sign * a[m - 1][m - 1]) as u64
}
