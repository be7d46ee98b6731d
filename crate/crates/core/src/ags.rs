//! Adaptive graphlet sampling: sample one treelet shape at a time and switch
//! to the shape least likely to land on already covered classes whenever a
//! class reaches the covering threshold.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::buildup::TableSet;
use crate::count::Count;
use crate::error::{Error, Result};
use crate::estimate::{self, EstimateReport};
use crate::graph::Graph;
use crate::graphlet::{census, extract_induced, GraphletSignature, SignatureCache, SpanningProfile};
use crate::pipeline::{self, Budget};
use crate::rng;
use crate::sampler::{BufferConfig, SamplerState, TableSampler};

const BATCH: u64 = 256;

/// c̄ = ⌈(4/ε²) ln(2s/δ)⌉.
pub fn covering_threshold(epsilon: f64, delta: f64, s: u128) -> Result<u64> {
    if !(epsilon > 0.0 && delta > 0.0 && delta < 1.0) || s == 0 {
        return Err(Error::invalid("covering threshold needs ε > 0, 0 < δ < 1 and s ≥ 1"));
    }
    let c = (4.0 / (epsilon * epsilon) * (2.0 * s as f64 / delta).ln()).ceil();
    if !c.is_finite() || c > u64::MAX as f64 {
        return Err(Error::invalid("covering threshold out of range"));
    }
    Ok((c as u64).max(1))
}

#[derive(Clone, Debug)]
pub struct AgsConfig {
    pub threshold: u64,
    pub budget: Budget,
    pub seed: u64,
    pub threads: usize,
    pub buffer: BufferConfig,
    /// Also accumulate every weight sample by sample over all classes, to
    /// cross-check the lazy form. Only for k ≤ 8.
    pub eager_weights: bool,
}

impl AgsConfig {
    pub fn new(threshold: u64, budget: Budget, seed: u64) -> AgsConfig {
        AgsConfig {
            threshold,
            budget,
            seed,
            threads: 0,
            buffer: BufferConfig::default(),
            eager_weights: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpochLog {
    pub epoch: u64,
    pub shape: usize,
    pub samples: u64,
    pub covered: usize,
}

#[derive(Clone, Debug)]
pub struct AgsOutcome {
    pub report: EstimateReport,
    pub threshold: u64,
    /// n_j, samples drawn from each shape.
    pub shape_samples: Vec<u64>,
    pub epochs: Vec<EpochLog>,
    /// Eagerly accumulated weights, when requested.
    pub eager: Option<BTreeMap<GraphletSignature, BigRational>>,
}

/// Next shape to sample: argmin over eligible `j` of
/// `(1/t_j) Σ_{i∈C} σ_ij ĉ_i`. Shapes with `t_j = 0` are skipped and shapes
/// scoring at least `1 - 1/c̄` are marked retired. `None` when nothing is left.
pub fn select_next_treelet(
    totals: &[BigRational],
    covered: &[(&[u64], BigRational)],
    threshold: u64,
    retired: &mut [bool],
) -> Option<usize> {
    let limit = BigRational::one() - BigRational::new(BigInt::one(), BigInt::from(threshold.max(1)));
    let mut best: Option<(usize, BigRational)> = None;
    for (j, t) in totals.iter().enumerate() {
        if retired[j] || t.is_zero() {
            continue;
        }
        let mut score = BigRational::zero();
        for (sigma, c) in covered {
            if sigma[j] > 0 {
                score += c * BigInt::from(sigma[j]);
            }
        }
        score /= t;
        if !covered.is_empty() && score >= limit {
            retired[j] = true;
            continue;
        }
        if best.as_ref().is_none_or(|(_, b)| score < *b) {
            best = Some((j, score));
        }
    }
    best.map(|(j, _)| j)
}

static CLASSES: [OnceLock<Vec<GraphletSignature>>; 9] = [const { OnceLock::new() }; 9];

/// Every connected class on `k ≤ 8` nodes, computed once per process.
pub fn all_classes(k: usize) -> Result<&'static [GraphletSignature]> {
    if !(1..=8).contains(&k) {
        return Err(Error::invalid("class listing is limited to k ≤ 8"));
    }
    if let Some(v) = CLASSES[k].get() {
        return Ok(v);
    }
    let v = census::connected_classes(k)?;
    Ok(CLASSES[k].get_or_init(|| v))
}

struct ClassState {
    hits: u64,
    profile: Arc<SpanningProfile>,
}

fn rat(x: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn weight(profile: &SpanningProfile, shape_samples: &[u64], totals: &[BigRational]) -> BigRational {
    let mut w = BigRational::zero();
    for (j, &n) in shape_samples.iter().enumerate() {
        if n > 0 && profile.sigma[j] > 0 && !totals[j].is_zero() {
            w += rat(n * profile.sigma[j]) / &totals[j];
        }
    }
    w
}

/// Runs AGS over a built table set. `progress` is called once per epoch.
pub fn ags_run(
    tables: &TableSet,
    graph: &Graph,
    cfg: &AgsConfig,
    mut progress: impl FnMut(&EpochLog),
) -> Result<AgsOutcome> {
    cfg.budget.validate()?;
    if cfg.threshold == 0 {
        return Err(Error::invalid("covering threshold must be positive"));
    }
    let k = tables.k();
    let start = Instant::now();
    let sampler = TableSampler::new(tables, graph)?;
    let profiles = pipeline::profile_cache_for(tables)?;
    let signatures = SignatureCache::new();
    let p = estimate::coloring_probability(k, tables.lambda())?;
    let star = tables.catalog().star();
    let skip = tables.round_skipped();
    // Round-skipped tables hold no star counts; stars are counted from the
    // colors instead so every shape estimates the same colorful count.
    let stars = if skip { sampler.colorful_stars()? } else { None };
    let star_total = stars.map_or(Count::ZERO, |s| s.total());
    let totals: Vec<BigRational> = tables
        .shape_totals()
        .iter()
        .enumerate()
        .map(|(j, s)| {
            if skip && j == star {
                estimate::rational_from_count(&star_total)
            } else {
                estimate::rational_from_count(&s.total)
            }
        })
        .collect();
    let class_limit = if k <= 8 { Some(census::class_count(k)? as usize) } else { None };
    let listed = if k <= 8 { Some(all_classes(k)?) } else { None };
    let mut eager: Option<BTreeMap<GraphletSignature, (Arc<SpanningProfile>, BigRational)>> = if cfg.eager_weights {
        let list = listed.ok_or_else(|| Error::invalid("eager weights need k ≤ 8"))?;
        Some(
            list.iter()
                .map(|s| Ok((*s, (profiles.get(*s)?, BigRational::zero()))))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };

    let pool = pipeline::pool(cfg.threads)?;
    let wave = (pool.current_num_threads() as u64).max(1) * 2;
    let mut classes: HashMap<GraphletSignature, ClassState> = HashMap::new();
    let mut covered: Vec<GraphletSignature> = Vec::new();
    let mut shape_samples = vec![0u64; totals.len()];
    let mut retired = vec![false; totals.len()];
    let mut epochs = Vec::new();
    let mut samples = 0u64;

    let mut current = totals
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.is_zero())
        .fold(None::<(usize, &BigRational)>, |best, (j, t)| match best {
            Some((_, b)) if b >= t => best,
            _ => Some((j, t)),
        })
        .map(|(j, _)| j);

    let mut epoch = 0u64;
    'epochs: while let Some(j) = current {
        let mut next_batch = 0u64;
        let mut coverage_event = false;
        loop {
            let remaining = cfg.budget.samples.map(|n| n - samples);
            if remaining == Some(0) || cfg.budget.time.is_some_and(|t| start.elapsed() >= t) {
                break;
            }
            let batches: Vec<(u64, u64)> = (0..wave)
                .map(|i| {
                    let before = i * BATCH;
                    let size = remaining.map_or(BATCH, |r| r.saturating_sub(before).min(BATCH));
                    (next_batch + i, size)
                })
                .filter(|&(_, size)| size > 0)
                .collect();
            next_batch += wave;
            let results: Vec<Result<Vec<GraphletSignature>>> = pool.install(|| {
                batches
                    .par_iter()
                    .map(|&(b, size)| {
                        let mut rng = rng::sample_stream(cfg.seed, epoch, b);
                        let mut st = SamplerState::new(cfg.buffer);
                        (0..size)
                            .map(|_| {
                                let nodes = if let (true, Some(stars)) = (j == star, stars) {
                                    stars.sample(graph, &mut rng)?
                                } else {
                                    sampler.sample_shape_copy(&mut st, &mut rng, j)?.nodes
                                };
                                Ok(signatures.signature(&extract_induced(graph, &nodes)?))
                            })
                            .collect()
                    })
                    .collect()
            });
            for r in results {
                for sig in r? {
                    samples += 1;
                    shape_samples[j] += 1;
                    if let Some(e) = eager.as_mut() {
                        for (profile, w) in e.values_mut() {
                            if profile.sigma[j] > 0 {
                                *w += rat(profile.sigma[j]) / &totals[j];
                            }
                        }
                    }
                    let entry = match classes.get_mut(&sig) {
                        Some(c) => c,
                        None => {
                            let profile = profiles.get(sig)?;
                            classes.entry(sig).or_insert(ClassState { hits: 0, profile })
                        }
                    };
                    entry.hits += 1;
                    if entry.hits == cfg.threshold {
                        covered.push(sig);
                        coverage_event = true;
                        break;
                    }
                }
                if coverage_event {
                    break;
                }
            }
            if coverage_event {
                break;
            }
        }
        let log = EpochLog {
            epoch,
            shape: j,
            samples,
            covered: covered.len(),
        };
        progress(&log);
        epochs.push(log);
        epoch += 1;
        if !coverage_event || class_limit == Some(covered.len()) {
            break 'epochs;
        }
        let rows: Vec<(&[u64], BigRational)> = covered
            .iter()
            .map(|s| {
                let c = &classes[s];
                let w = weight(&c.profile, &shape_samples, &totals);
                (c.profile.sigma.as_slice(), rat(c.hits) / w)
            })
            .collect();
        current = select_next_treelet(&totals, &rows, cfg.threshold, &mut retired);
    }

    let mut rows: Vec<(GraphletSignature, u64, BigRational, bool)> = classes
        .iter()
        .map(|(sig, c)| {
            (
                *sig,
                c.hits,
                weight(&c.profile, &shape_samples, &totals),
                c.hits >= cfg.threshold,
            )
        })
        .collect();
    if let Some(list) = listed {
        for sig in list {
            if !classes.contains_key(sig) {
                rows.push((*sig, 0, BigRational::zero(), false));
            }
        }
    }
    rows.sort_by_key(|r| r.0);
    let total = estimate::rational_from_count(&tables.total()) + estimate::rational_from_count(&star_total);
    let report = estimate::ags_estimate(k, rows, &total, samples, &p);
    Ok(AgsOutcome {
        report,
        threshold: cfg.threshold,
        shape_samples,
        epochs,
        eager: eager.map(|e| e.into_iter().map(|(s, (_, w))| (s, w)).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buildup::{build, BuildOptions};
    use crate::graph::ColoredGraph;
    use crate::oracle;
    
    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn threshold_formula() {
        assert_eq!(covering_threshold(0.1, 0.05, 21).unwrap(), 2694);
        assert_eq!(covering_threshold(2.0, 2.0 / std::f64::consts::E, 1).unwrap(), 1);
        assert!(covering_threshold(0.0, 0.1, 3).is_err());
        assert!(covering_threshold(0.1, 1.0, 3).is_err());
    }

    #[test]
    fn selection_avoids_the_covered_shape() {
        // shape 0 is the star, shape 1 the path; the star class only spans the star
        let totals = vec![r(10, 1), r(5, 1)];
        let sigma = [1u64, 0];
        let mut retired = vec![false; 2];
        let pick = select_next_treelet(&totals, &[(&sigma, r(3, 1))], 1000, &mut retired);
        assert_eq!(pick, Some(1));
        assert_eq!(retired, vec![false, false]);
    }

    #[test]
    fn selection_retires_and_terminates() {
        let totals = vec![r(4, 1)];
        let sigma = [1u64];
        let mut retired = vec![false];
        assert_eq!(select_next_treelet(&totals, &[(&sigma, r(1, 1))], 1000, &mut retired), Some(0));
        assert_eq!(select_next_treelet(&totals, &[(&sigma, r(4, 1))], 1000, &mut retired), None);
        assert!(retired[0]);
        let zero = vec![BigRational::zero(), BigRational::zero()];
        assert_eq!(select_next_treelet(&zero, &[], 10, &mut [false, false]), None);
        // ties go to the smallest id
        assert_eq!(select_next_treelet(&[r(2, 1), r(2, 1)], &[], 10, &mut [false, false]), Some(0));
    }

    fn tables_for(edges: &[(u32, u32)], n: usize, k: usize, seed: u64, opts: BuildOptions) -> (tempfile::TempDir, TableSet, Graph) {
        let g = Graph::from_edges(n, edges).unwrap();
        let cg = ColoredGraph::uniform(Arc::new(g.clone()), k, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let t = build(&cg, &opts, dir.path()).unwrap();
        (dir, t, g)
    }

    #[test]
    fn star_only_graph_covers_the_star_class_then_stops() {
        // a tree of diameter 2: every 4-node connected set is a star
        let edges: Vec<(u32, u32)> = (1..8).map(|i| (0, i)).collect();
        for opts in [BuildOptions::for_k(4), BuildOptions { skip_round: false, zero_root: true, ..BuildOptions::for_k(4) }] {
            let (_d, t, g) = tables_for(&edges, 8, 4, 5, opts);
            let cfg = AgsConfig::new(200, Budget::samples(100_000), 9);
            let out = ags_run(&t, &g, &cfg, |_| {}).unwrap();
            let covered: Vec<_> = out.report.classes.iter().filter(|c| c.covered).collect();
            assert_eq!(covered.len(), 1);
            assert_eq!(out.report.total_samples, 200);
            assert_eq!(out.report.classes.len(), 6);
            // only one class: the colorful estimate is the colorful count itself
            let cg = ColoredGraph::uniform(Arc::new(g.clone()), 4, 5).unwrap();
            let exact = crate::oracle::exact_colorful_graphlet_counts(&cg, 4).unwrap();
            assert_eq!(covered[0].colorful, r(exact[&covered[0].signature] as i64, 1));
        }
    }

    #[test]
    fn zero_budget_reports_every_class_uncovered() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)];
        let (_d, t, g) = tables_for(&edges, 4, 4, 1, BuildOptions::for_k(4));
        let cfg = AgsConfig::new(10, Budget::samples(0), 1);
        let out = ags_run(&t, &g, &cfg, |_| {}).unwrap();
        assert_eq!(out.report.classes.len(), 6);
        assert!(out.report.classes.iter().all(|c| !c.covered && c.count.is_zero()));
    }

    #[test]
    fn lazy_and_eager_weights_agree_and_coverage_is_monotone() {
        let edges: Vec<(u32, u32)> = vec![
            (0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2), (5, 6), (6, 7), (7, 5), (4, 5), (7, 8), (8, 9), (9, 3), (2, 8),
        ];
        for opts in [BuildOptions::for_k(4), BuildOptions { skip_round: false, zero_root: false, ..BuildOptions::for_k(4) }] {
            let (_d, t, g) = tables_for(&edges, 10, 4, 3, opts);
            let mut cfg = AgsConfig::new(30, Budget::samples(2000), 4);
            cfg.eager_weights = true;
            let out = ags_run(&t, &g, &cfg, |_| {}).unwrap();
            let eager = out.eager.as_ref().unwrap();
            for c in &out.report.classes {
                if c.samples > 0 {
                    assert_eq!(c.weight, eager[&c.signature]);
                }
            }
            assert!(out.epochs.windows(2).all(|w| w[0].covered <= w[1].covered && w[0].samples <= w[1].samples));
            assert!(out.epochs.len() >= 2);
        }
    }

    #[test]
    fn same_seed_same_report_for_any_thread_count() {
        let edges: Vec<(u32, u32)> = (0..12u32).flat_map(|i| [(i, (i + 1) % 12), (i, (i + 3) % 12)]).collect();
        let (_d, t, g) = tables_for(&edges, 12, 4, 2, BuildOptions::for_k(4));
        let run = |threads| {
            let mut cfg = AgsConfig::new(50, Budget::samples(3000), 8);
            cfg.threads = threads;
            ags_run(&t, &g, &cfg, |_| {}).unwrap().report.to_csv_string()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn colorful_estimates_track_the_oracle() {
        let edges: Vec<(u32, u32)> = vec![
            (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3), (1, 4), (6, 0), (6, 1), (7, 6), (7, 2), (8, 7), (8, 5),
        ];
        let opts = BuildOptions { skip_round: false, zero_root: true, ..BuildOptions::for_k(4) };
        let mut est: HashMap<GraphletSignature, f64> = HashMap::new();
        let mut truth: HashMap<GraphletSignature, f64> = HashMap::new();
        for seed in 0..30 {
            let (_d, t, g) = tables_for(&edges, 9, 4, 100 + seed, opts);
            let cg = ColoredGraph::uniform(Arc::new(g.clone()), 4, 100 + seed).unwrap();
            for (sig, c) in oracle::exact_colorful_graphlet_counts(&cg, 4).unwrap() {
                *truth.entry(sig).or_default() += c as f64;
            }
            let cfg = AgsConfig::new(100, Budget::samples(20_000), seed);
            let out = ags_run(&t, &g, &cfg, |_| {}).unwrap();
            for c in &out.report.classes {
                *est.entry(c.signature).or_default() += num_traits::ToPrimitive::to_f64(&c.colorful).unwrap();
            }
        }
        for (sig, &c) in &truth {
            assert!((est[sig] - c).abs() <= 0.1 * c, "{sig}: {} vs {c}", est[sig]);
        }
    }
}
