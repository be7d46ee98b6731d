//! Graphlet count estimates from sample tallies.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::count::{self, Count};
use crate::error::{Error, Result};
use crate::graphlet::GraphletSignature;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Uniform,
    Ags,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Uniform => "uniform",
            Mode::Ags => "ags",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassEstimate {
    pub signature: GraphletSignature,
    /// ĉ_i: estimated colorful copies.
    pub colorful: BigRational,
    /// ĝ_i: estimated induced copies.
    pub count: BigRational,
    pub frequency: f64,
    pub samples: u64,
    pub covered: bool,
    /// w_i under AGS, the sample share hits/N under uniform sampling.
    pub weight: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub k: usize,
    pub mode: Mode,
    /// Colorful treelet total used as the sampling normalizer.
    pub total: BigRational,
    pub colorful_probability: BigRational,
    pub total_samples: u64,
    pub classes: Vec<ClassEstimate>,
}

pub fn rational_from_count(c: &Count) -> BigRational {
    BigRational::from_integer(BigInt::from(count::to_biguint(c)))
}

/// The rational written by the shortest decimal that round-trips to `x`, so
/// that a parameter given as `0.2` is exactly one fifth.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("{x} is not finite")));
    }
    let text = format!("{}", x.abs());
    let (int, frac) = text.split_once('.').unwrap_or((&text, ""));
    let digits: BigInt = format!("{int}{frac}").parse().expect("decimal digits");
    let value = BigRational::new(digits, BigInt::from(10u32).pow(frac.len() as u32));
    Ok(if x < 0.0 { -value } else { value })
}

/// `k!/k^k`.
pub fn colorful_probability(k: usize) -> BigRational {
    let num: BigInt = (1..=k as u64).map(BigInt::from).product();
    BigRational::new(num, BigInt::from(k as u64).pow(k as u32))
}

/// Probability that a `j`-subset carrying colorset `colors` is colorful under
/// biased coloring: color 0 has probability `1 - λ(k-1)`, the others `λ`.
pub fn biased_set_probability(k: usize, lambda: f64, colors: u16) -> Result<BigRational> {
    crate::graph::check_lambda(k, lambda)?;
    let l = rational_from_f64(lambda)?;
    let j = colors.count_ones() as u64;
    let mut p: BigRational = (1..=j).map(|i| BigRational::from_integer(BigInt::from(i))).product();
    let others = j - u64::from(colors & 1);
    for _ in 0..others {
        p *= &l;
    }
    if colors & 1 == 1 {
        p *= BigRational::one() - &l * BigRational::from_integer(BigInt::from(k as u64 - 1));
    }
    Ok(p)
}

/// Exact probability that a `k`-set is colorful under biased coloring:
/// `k! λ^(k-1) (1 - λ(k-1))`.
pub fn biased_correction(k: usize, lambda: f64) -> Result<BigRational> {
    biased_set_probability(k, lambda, ((1u32 << k) - 1) as u16)
}

/// Colorful probability of a `k`-set under the coloring that built a table.
pub fn coloring_probability(k: usize, lambda: Option<f64>) -> Result<BigRational> {
    match lambda {
        Some(l) => biased_correction(k, l),
        None => Ok(colorful_probability(k)),
    }
}

fn finish(mut classes: Vec<ClassEstimate>) -> Vec<ClassEstimate> {
    let sum: BigRational = classes.iter().map(|c| c.count.clone()).sum();
    for c in &mut classes {
        c.frequency = if sum.is_zero() {
            0.0
        } else {
            (&c.count / &sum).to_f64().unwrap_or(0.0)
        };
    }
    classes
}

/// ĝ_i = t · hits_i / (σ_i · N · p) for every observed class.
pub fn uniform_estimate(
    k: usize,
    tallies: &BTreeMap<GraphletSignature, u64>,
    total: &BigRational,
    sigma: &BTreeMap<GraphletSignature, u64>,
    samples: u64,
    p: &BigRational,
) -> Result<EstimateReport> {
    if samples == 0 {
        return Err(Error::invalid("no samples taken"));
    }
    let n = BigRational::from_integer(BigInt::from(samples));
    let mut classes = Vec::with_capacity(tallies.len());
    for (sig, &hits) in tallies {
        let s = *sigma
            .get(sig)
            .filter(|&&s| s > 0)
            .ok_or_else(|| Error::invalid(format!("no spanning trees for class {sig}")))?;
        let h = BigRational::from_integer(BigInt::from(hits));
        let colorful = total * &h / (BigRational::from_integer(BigInt::from(s)) * &n);
        classes.push(ClassEstimate {
            signature: *sig,
            count: &colorful / p,
            colorful,
            frequency: 0.0,
            samples: hits,
            covered: hits > 0,
            weight: h / &n,
        });
    }
    Ok(EstimateReport {
        k,
        mode: Mode::Uniform,
        total: total.clone(),
        colorful_probability: p.clone(),
        total_samples: samples,
        classes: finish(classes),
    })
}

/// ĉ_i = c_i / w_i and ĝ_i = ĉ_i / p; classes with no hits get estimate 0.
pub fn ags_estimate(
    k: usize,
    rows: Vec<(GraphletSignature, u64, BigRational, bool)>,
    total: &BigRational,
    samples: u64,
    p: &BigRational,
) -> EstimateReport {
    let classes = rows
        .into_iter()
        .map(|(signature, hits, weight, covered)| {
            let colorful = if hits == 0 || weight.is_zero() {
                BigRational::zero()
            } else {
                BigRational::from_integer(BigInt::from(hits)) / &weight
            };
            ClassEstimate {
                signature,
                count: &colorful / p,
                colorful,
                frequency: 0.0,
                samples: hits,
                covered,
                weight,
            }
        })
        .collect();
    EstimateReport {
        k,
        mode: Mode::Ags,
        total: total.clone(),
        colorful_probability: p.clone(),
        total_samples: samples,
        classes: finish(classes),
    }
}

/// Decimal rendering rounded half up to `digits` fractional digits.
pub fn to_decimal(x: &BigRational, digits: u32) -> String {
    let scale = BigInt::from(10u32).pow(digits);
    let neg = x.is_negative();
    let a = x.abs() * BigRational::from_integer(scale.clone());
    let scaled = (a + BigRational::new(BigInt::one(), BigInt::from(2))).floor().to_integer();
    let int = &scaled / &scale;
    let frac = (&scaled % &scale).to_biguint().unwrap_or_else(BigUint::zero);
    let sign = if neg && !scaled.is_zero() { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{int}");
    }
    format!("{sign}{int}.{frac:0>width$}", width = digits as usize)
}

impl EstimateReport {
    pub fn get(&self, sig: &GraphletSignature) -> Option<&ClassEstimate> {
        self.classes.iter().find(|c| c.signature == *sig)
    }

    /// ĝ for a class as a float; 0 when absent.
    pub fn count_f64(&self, sig: &GraphletSignature) -> f64 {
        self.get(sig).and_then(|c| c.count.to_f64()).unwrap_or(0.0)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
        self.write_csv_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        self.write_csv_to(&mut w).expect("in-memory csv");
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
    }

    fn write_csv_to<W: std::io::Write>(&self, w: &mut csv::Writer<W>) -> std::io::Result<()> {
        w.write_record(["signature_hex", "count_estimate", "frequency", "samples", "covered", "mode"])?;
        for c in &self.classes {
            w.write_record([
                c.signature.to_hex(),
                to_decimal(&c.count, 6),
                format!("{:.12e}", c.frequency),
                c.samples.to_string(),
                c.covered.to_string(),
                self.mode.to_string(),
            ])?;
        }
        Ok(())
    }
}

/// err_H per class: `(estimate - truth) / truth`, `-1` for a missed class and
/// `+inf` for an estimate of a class whose true count is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativeErrors {
    pub rows: Vec<(GraphletSignature, f64, f64, f64)>,
}

impl RelativeErrors {
    pub fn error_of(&self, sig: &GraphletSignature) -> Option<f64> {
        self.rows.iter().find(|r| r.0 == *sig).map(|r| r.3)
    }

    /// Classes with |err| <= 0.25.
    pub fn within_quarter(&self) -> usize {
        self.rows.iter().filter(|r| r.3.abs() <= 0.25).count()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
        let io = |e: csv::Error| Error::io(path, e.into());
        w.write_record(["signature_hex", "truth", "estimate", "err"]).map_err(io)?;
        for (sig, truth, est, err) in &self.rows {
            w.write_record([sig.to_hex(), truth.to_string(), est.to_string(), err.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub fn relative_error(report: &EstimateReport, truth: &BTreeMap<GraphletSignature, f64>) -> RelativeErrors {
    let mut sigs: Vec<GraphletSignature> = truth.keys().copied().collect();
    for c in &report.classes {
        if !truth.contains_key(&c.signature) {
            sigs.push(c.signature);
        }
    }
    sigs.sort_unstable();
    sigs.dedup();
    let rows = sigs
        .into_iter()
        .map(|sig| {
            let t = truth.get(&sig).copied().unwrap_or(0.0);
            let e = report.count_f64(&sig);
            (sig, t, e, relative_error_value(e, t))
        })
        .collect();
    RelativeErrors { rows }
}

pub fn relative_error_value(estimate: f64, truth: f64) -> f64 {
    if truth == 0.0 {
        if estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else if estimate == 0.0 {
        -1.0
    } else {
        (estimate - truth) / truth
    }
}
