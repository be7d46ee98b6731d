//! Uniform graphlet sampling end to end: draw node sets, identify their
//! classes and turn the tallies into estimates.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rayon::prelude::*;

use crate::buildup::TableSet;
use crate::error::{Error, Result};
use crate::estimate::{self, EstimateReport};
use crate::graph::Graph;
use crate::graphlet::{extract_induced, GraphletSignature, ProfileCache, SignatureCache, TableSemantics};
use crate::rng;
use crate::sampler::{BufferConfig, SamplerState, Source, TableSampler};

const BATCH: u64 = 1024;

/// Sample budget: a count, a wall-clock limit, or both (whichever ends first).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub samples: Option<u64>,
    pub time: Option<Duration>,
}

impl Budget {
    pub fn samples(n: u64) -> Budget {
        Budget {
            samples: Some(n),
            time: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_none() && self.time.is_none() {
            return Err(Error::invalid("a sample count or a time budget is required"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SampleConfig {
    pub budget: Budget,
    pub seed: u64,
    pub threads: usize,
    pub buffer: BufferConfig,
}

impl SampleConfig {
    pub fn new(budget: Budget, seed: u64) -> SampleConfig {
        SampleConfig {
            budget,
            seed,
            threads: 0,
            buffer: BufferConfig::default(),
        }
    }
}

pub fn semantics_of(tables: &TableSet) -> TableSemantics {
    TableSemantics {
        skip_round: tables.round_skipped(),
        zero_root: tables.zero_rooted(),
    }
}

pub fn profile_cache_for(tables: &TableSet) -> Result<ProfileCache> {
    ProfileCache::new(
        tables.k(),
        semantics_of(tables),
        Arc::clone(tables.catalog()),
        tables.index_tables().cloned(),
    )
}

/// The normalizer of the uniform mixture: `t + p S` when round-skipped, `t` otherwise.
pub fn effective_total(tables: &TableSet, p: &BigRational) -> BigRational {
    let t = estimate::rational_from_count(&tables.total());
    if tables.round_skipped() {
        t + p * estimate::rational_from_count(&tables.star_total())
    } else {
        t
    }
}

#[derive(Clone, Debug, Default)]
pub struct UniformTallies {
    pub hits: BTreeMap<GraphletSignature, u64>,
    pub samples: u64,
    pub star_samples: u64,
}

pub(crate) fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))
}

/// Draws uniform graphlet samples in fixed-size batches, each with its own
/// random stream, so a sample-count budget gives the same tallies for any
/// thread count.
pub fn uniform_tallies(
    sampler: &TableSampler<'_>,
    graph: &Graph,
    cfg: &SampleConfig,
    signatures: &SignatureCache,
) -> Result<UniformTallies> {
    cfg.budget.validate()?;
    let start = Instant::now();
    let pool = pool(cfg.threads)?;
    let wave = (pool.current_num_threads() as u64).max(1) * 4;
    let mut out = UniformTallies::default();
    let mut next_batch = 0u64;
    loop {
        let remaining = cfg.budget.samples.map(|n| n - out.samples);
        if remaining == Some(0) || cfg.budget.time.is_some_and(|t| start.elapsed() >= t) {
            break;
        }
        let batches: Vec<(u64, u64)> = (0..wave)
            .map(|i| next_batch + i)
            .map(|b| {
                let before = (b - next_batch) * BATCH;
                let size = remaining.map_or(BATCH, |r| r.saturating_sub(before).min(BATCH));
                (b, size)
            })
            .filter(|&(_, size)| size > 0)
            .collect();
        next_batch += wave;
        let results: Vec<Result<(Vec<GraphletSignature>, u64)>> = pool.install(|| {
            batches
                .par_iter()
                .map(|&(b, size)| {
                    let mut rng = rng::sample_stream(cfg.seed, b >> 20, b & 0xF_FFFF);
                    let mut st = SamplerState::new(cfg.buffer);
                    let mut sigs = Vec::with_capacity(size as usize);
                    let mut stars = 0;
                    for _ in 0..size {
                        let s = sampler.sample_uniform_graphlet(&mut st, &mut rng)?;
                        if s.source == Source::Star {
                            stars += 1;
                        }
                        sigs.push(signatures.signature(&extract_induced(graph, &s.nodes)?));
                    }
                    Ok((sigs, stars))
                })
                .collect()
        });
        for r in results {
            let (sigs, stars) = r?;
            out.samples += sigs.len() as u64;
            out.star_samples += stars;
            for s in sigs {
                *out.hits.entry(s).or_insert(0) += 1;
            }
        }
    }
    Ok(out)
}

/// Uniform sampling followed by the estimator ĝ_i = T hits_i / (σ_i N p).
pub fn run_uniform(tables: &TableSet, graph: &Graph, cfg: &SampleConfig) -> Result<EstimateReport> {
    let sampler = TableSampler::new(tables, graph)?;
    let signatures = SignatureCache::new();
    let tallies = uniform_tallies(&sampler, graph, cfg, &signatures)?;
    let profiles = profile_cache_for(tables)?;
    let mut sigma = BTreeMap::new();
    for sig in tallies.hits.keys() {
        sigma.insert(*sig, profiles.get(*sig)?.total());
    }
    let p = estimate::coloring_probability(tables.k(), tables.lambda())?;
    let total = effective_total(tables, &p);
    estimate::uniform_estimate(tables.k(), &tallies.hits, &total, &sigma, tallies.samples, &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buildup::{build, BuildOptions};
    use crate::graph::ColoredGraph;
    use crate::oracle;
    use num_bigint::BigInt;

    #[test]
    fn triangle_estimate_is_four_and_a_half() {
        let g = Arc::new(Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap());
        let cg = ColoredGraph::with_colors(Arc::clone(&g), 3, vec![0, 1, 2]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let t = build(&cg, &BuildOptions::for_k(3), dir.path()).unwrap();
        let r = run_uniform(&t, &g, &SampleConfig::new(Budget::samples(1000), 1)).unwrap();
        assert_eq!(r.classes.len(), 1);
        assert_eq!(r.classes[0].count, BigRational::new(BigInt::from(9), BigInt::from(2)));
        assert!(run_uniform(&t, &g, &SampleConfig::new(Budget::default(), 1)).is_err());
    }

    #[test]
    fn tallies_do_not_depend_on_threads() {
        let edges: Vec<(u32, u32)> = (0..14u32).flat_map(|i| [(i, (i + 1) % 14), (i, (i + 4) % 14)]).collect();
        let g = Arc::new(Graph::from_edges(14, &edges).unwrap());
        let cg = ColoredGraph::uniform(Arc::clone(&g), 5, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let t = build(&cg, &BuildOptions::for_k(5), dir.path()).unwrap();
        let run = |threads| {
            let mut cfg = SampleConfig::new(Budget::samples(5000), 11);
            cfg.threads = threads;
            run_uniform(&t, &g, &cfg).unwrap().to_csv_string()
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn colorful_estimates_track_the_oracle() {
        let edges: Vec<(u32, u32)> = vec![
            (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3), (1, 4), (6, 0), (6, 1), (7, 6), (7, 2), (8, 7), (8, 5),
        ];
        let g = Arc::new(Graph::from_edges(9, &edges).unwrap());
        for opts in [BuildOptions::for_k(4), BuildOptions { skip_round: false, zero_root: true, ..BuildOptions::for_k(4) }] {
            let mut est: BTreeMap<GraphletSignature, f64> = BTreeMap::new();
            let mut truth: BTreeMap<GraphletSignature, f64> = BTreeMap::new();
            for seed in 0..20 {
                let cg = ColoredGraph::uniform(Arc::clone(&g), 4, seed).unwrap();
                let dir = tempfile::tempdir().unwrap();
                let t = build(&cg, &opts, dir.path()).unwrap();
                // a coloring without colorful copies estimates zero everywhere
                let r = match run_uniform(&t, &g, &SampleConfig::new(Budget::samples(20_000), seed)) {
                    Err(Error::NoneExist(_)) => Vec::new(),
                    r => r.unwrap().classes,
                };
                for c in &r {
                    *est.entry(c.signature).or_default() += num_traits::ToPrimitive::to_f64(&c.colorful).unwrap();
                }
                // the star branch samples uncolored stars, so its share of a class
                // is estimated at the level p·g rather than the colorful count
                let colorful = oracle::exact_colorful_graphlet_counts(&cg, 4).unwrap();
                let profiles = profile_cache_for(&t).unwrap();
                let star = t.catalog().star();
                for (sig, gi) in oracle::exact_graphlet_counts(&g, 4).unwrap() {
                    let c = *colorful.get(&sig).unwrap_or(&0) as f64;
                    let e = if t.round_skipped() {
                        let sigma = &profiles.get(sig).unwrap().sigma;
                        let st = sigma[star] as f64;
                        let all: u64 = sigma.iter().sum();
                        ((all as f64 - st) * c + st * 24.0 / 256.0 * gi as f64) / all as f64
                    } else {
                        c
                    };
                    *truth.entry(sig).or_default() += e;
                }
            }
            for (sig, &c) in &truth {
                let e = est.get(sig).copied().unwrap_or(0.0);
                assert!((e - c).abs() <= 0.1 * c.max(1.0), "{sig}: {e} vs {c} skip={}", opts.skip_round);
            }
        }
    }
}
