//! Monte-Carlo estimate of the transition probability from simulated walkers.
//!
//! `n` walkers leave the source and take `t` uniform-neighbour steps each. Every landing
//! at steps `1..=t` counts as a visit (the start position does not), and the estimate
//! for target `j` is `x_j / (n * t * k_j)`. Walker `w` from source `s` draws from its own
//! stream seeded by `(seed, s, w)`, so results do not depend on thread scheduling.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::WalkConfig;
use crate::graph::Graph;
use crate::seed;

/// Below this many total steps a source is sampled on the calling thread.
const PARALLEL_STEPS: usize = 1 << 16;
const WALKER_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitCounts {
    pub source: usize,
    pub walkers: usize,
    pub t: usize,
    pub counts: BTreeMap<usize, u64>,
}

impl VisitCounts {
    pub fn get(&self, node: usize) -> u64 {
        self.counts.get(&node).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn estimate(&self, g: &Graph, target: usize) -> EtScore {
        let x = self.get(target);
        let value = if x == 0 {
            0.0
        } else {
            x as f64 / (self.walkers as f64 * self.t as f64 * g.degree(target) as f64)
        };
        EtScore {
            source: self.source,
            target,
            value,
            is_zero_estimate: x == 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtScore {
    pub source: usize,
    pub target: usize,
    pub value: f64,
    pub is_zero_estimate: bool,
}

fn run_walkers(g: &Graph, source: usize, cfg: &WalkConfig, walkers: std::ops::Range<usize>, out: &mut Vec<u32>) {
    for w in walkers {
        let mut rng = seed::stream(&[cfg.seed, source as u64, w as u64]);
        let mut at = source;
        for _ in 0..cfg.t {
            let nbrs = g.neighbors(at);
            at = nbrs[rng.random_range(0..nbrs.len())] as usize;
            out.push(at as u32);
        }
    }
}

fn tally(mut visits: Vec<u32>) -> BTreeMap<usize, u64> {
    visits.sort_unstable();
    let mut counts = BTreeMap::new();
    for chunk in visits.chunk_by(|a, b| a == b) {
        counts.insert(chunk[0] as usize, chunk.len() as u64);
    }
    counts
}

pub fn sample_visits(g: &Graph, source: usize, cfg: &WalkConfig) -> Result<VisitCounts> {
    cfg.validate()?;
    g.check_node(source)?;
    if g.degree(source) == 0 {
        return Err(Error::IsolatedNode(source));
    }
    let total = cfg.walkers * cfg.t;
    let visits = if total < PARALLEL_STEPS {
        let mut out = Vec::with_capacity(total);
        run_walkers(g, source, cfg, 0..cfg.walkers, &mut out);
        out
    } else {
        let chunks: Vec<Vec<u32>> = (0..cfg.walkers.div_ceil(WALKER_CHUNK))
            .into_par_iter()
            .map(|c| {
                let lo = c * WALKER_CHUNK;
                let hi = (lo + WALKER_CHUNK).min(cfg.walkers);
                let mut out = Vec::with_capacity((hi - lo) * cfg.t);
                run_walkers(g, source, cfg, lo..hi, &mut out);
                out
            })
            .collect();
        chunks.concat()
    };
    Ok(VisitCounts {
        source,
        walkers: cfg.walkers,
        t: cfg.t,
        counts: tally(visits),
    })
}

/// Estimates for every visited node, in index order. With `include_zeros`, every other
/// node gets an explicit zero-estimate record as well.
pub fn estimate_from_source(g: &Graph, source: usize, cfg: &WalkConfig, include_zeros: bool) -> Result<Vec<EtScore>> {
    let visits = sample_visits(g, source, cfg)?;
    Ok(if include_zeros {
        (0..g.node_count()).map(|j| visits.estimate(g, j)).collect()
    } else {
        visits.counts.keys().map(|&j| visits.estimate(g, j)).collect()
    })
}

/// One estimate per requested target, zero estimates included, in the order given.
pub fn estimate_targets(g: &Graph, source: usize, targets: &[usize], cfg: &WalkConfig) -> Result<Vec<EtScore>> {
    for &j in targets {
        g.check_node(j)?;
    }
    let visits = sample_visits(g, source, cfg)?;
    Ok(targets.iter().map(|&j| visits.estimate(g, j)).collect())
}

/// Estimates for arbitrary `(source, target)` pairs, sampling each distinct source once.
pub fn estimate_pairs(g: &Graph, pairs: &[(usize, usize)], cfg: &WalkConfig) -> Result<Vec<EtScore>> {
    let mut by_source: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, &(i, j)) in pairs.iter().enumerate() {
        g.check_node(j)?;
        by_source.entry(i).or_default().push(k);
    }
    let groups: Vec<(usize, Vec<usize>)> = by_source.into_iter().collect();
    let sampled: Vec<(Vec<usize>, VisitCounts)> = groups
        .into_par_iter()
        .map(|(src, idxs)| sample_visits(g, src, cfg).map(|v| (idxs, v)))
        .collect::<Result<_>>()?;
    let mut out = vec![None; pairs.len()];
    for (idxs, visits) in &sampled {
        for &k in idxs {
            out[k] = Some(visits.estimate(g, pairs[k].1));
        }
    }
    Ok(out.into_iter().map(|s| s.expect("every pair scored")).collect())
}

/// Share of pairs for which no walker from the source ever landed on the target.
pub fn zero_estimate_fraction(g: &Graph, cfg: &WalkConfig, pairs: &[(usize, usize)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("empty pair sample".into()));
    }
    let scores = estimate_pairs(g, pairs, cfg)?;
    let zeros = scores.iter().filter(|s| s.is_zero_estimate).count();
    Ok(zeros as f64 / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::transition_row;
    use crate::graph::fixtures::*;
    use proptest::prelude::*;

    #[test]
    fn k2_single_step_always_lands_on_neighbour() {
        let v = sample_visits(&k2(), 0, &WalkConfig::new(1, 7, 3)).unwrap();
        assert_eq!(v.counts, BTreeMap::from([(1, 7)]));
    }

    #[test]
    fn k2_two_steps_alternate() {
        let v = sample_visits(&k2(), 0, &WalkConfig::new(2, 5, 9)).unwrap();
        assert_eq!(v.counts, BTreeMap::from([(0, 5), (1, 5)]));
    }

    #[test]
    fn k2_estimate_is_exactly_one() {
        for n in [1, 13, 400] {
            let s = estimate_from_source(&k2(), 0, &WalkConfig::new(1, n, 1), false).unwrap();
            assert_eq!(s.len(), 1);
            assert_eq!(s[0].value, 1.0);
            assert!(!s[0].is_zero_estimate);
        }
    }

    #[test]
    fn triangle_estimate_within_three_standard_errors() {
        let g = triangle();
        let cfg = WalkConfig::new(2, 100_000, 2024);
        let v = sample_visits(&g, 0, &cfg).unwrap();
        let nt = (cfg.walkers * cfg.t) as f64;
        let p = (0.5 + 0.25) / 2.0;
        let freq = v.get(1) as f64 / nt;
        let se = (p * (1.0 - p) / nt).sqrt();
        assert!((freq - p).abs() <= 3.0 * se, "freq {freq} vs {p} (se {se})");

        // ET = freq / k_1, so its standard error scales by the same 1/k_1
        let et = v.estimate(&g, 1).value;
        let exact = transition_row(&g, 0, &WalkConfig::with_t(2)).unwrap().values[1];
        assert_eq!(exact, 3.0 / 16.0);
        assert!((et - exact).abs() <= 3.0 * se / 2.0, "ET {et} vs T {exact}");
    }

    #[test]
    fn unreachable_target_is_flagged_zero() {
        let g = path(6);
        let s = estimate_from_source(&g, 0, &WalkConfig::new(2, 50, 0), true).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s[5].is_zero_estimate);
        assert_eq!(s[5].value, 0.0);
        assert!(s[3].is_zero_estimate);
    }

    #[test]
    fn zero_fraction_cases() {
        assert_eq!(zero_estimate_fraction(&k2(), &WalkConfig::new(1, 3, 0), &[(0, 1)]).unwrap(), 0.0);
        // two triangles bridged by one edge; far corners are 3 hops apart
        let g = Graph::from_index_edges(6, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)]).unwrap();
        let f = zero_estimate_fraction(&g, &WalkConfig::new(2, 4, 0), &[(0, 4), (0, 5), (1, 5)]).unwrap();
        assert_eq!(f, 1.0);
        assert!(zero_estimate_fraction(&g, &WalkConfig::new(2, 4, 0), &[]).is_err());
    }

    #[test]
    fn parallel_path_matches_sequential() {
        let g = crate::testing::random_connected(40, 0.1, 5);
        // 70k steps goes through the chunked parallel path
        let big = WalkConfig::new(7, 10_000, 11);
        let a = sample_visits(&g, 4, &big).unwrap();
        let mut seq = Vec::new();
        run_walkers(&g, 4, &big, 0..big.walkers, &mut seq);
        assert_eq!(a.counts, tally(seq));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_visits(&g, 4, &big).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn pairs_reuse_source_samples() {
        let g = cycle(8);
        let cfg = WalkConfig::new(3, 200, 1);
        let pairs = [(0, 1), (2, 3), (0, 3), (0, 1)];
        let s = estimate_pairs(&g, &pairs, &cfg).unwrap();
        assert_eq!(s[0], s[3]);
        let direct = estimate_targets(&g, 0, &[3], &cfg).unwrap();
        assert_eq!(s[2], direct[0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn counts_conserve_steps(g in crate::testing::connected_graph(2..=25), t in 1usize..8, n in 1usize..60, s in any::<u64>()) {
            let src = (s % g.node_count() as u64) as usize;
            let v = sample_visits(&g, src, &WalkConfig::new(t, n, s)).unwrap();
            prop_assert_eq!(v.total(), (n * t) as u64);
            let again = sample_visits(&g, src, &WalkConfig::new(t, n, s)).unwrap();
            prop_assert_eq!(v, again);
        }
    }
}
