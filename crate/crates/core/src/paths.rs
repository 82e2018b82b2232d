//! Shortest-path length and the average shortest-path transition probability.
//!
//! A single BFS from the source yields the shortest-path DAG. Walking it in BFS order,
//! each node accumulates the number of shortest paths reaching it and the mean, over those
//! paths, of the product of `1/k_v` across every node on the path (both endpoints
//! included, which keeps the measure symmetric).

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::score::{Measure, PairScore};

const UNSEEN: u32 = u32::MAX;

/// Path counts above this are combined in log space when forming mean weights.
pub const DEFAULT_LOG_COUNT_THRESHOLD: f64 = 9_007_199_254_740_992.0; // 2^53

#[derive(Debug, Clone)]
pub struct ShortestPathDag<'g> {
    graph: &'g Graph,
    source: usize,
    dist: Vec<u32>,
    path_count: Vec<f64>,
    ln_count: Vec<f64>,
    mean_prob: Vec<f64>,
    order: Vec<u32>,
}

impl<'g> ShortestPathDag<'g> {
    pub fn build(g: &'g Graph, source: usize) -> Result<Self> {
        Self::build_with_threshold(g, source, DEFAULT_LOG_COUNT_THRESHOLD)
    }

    pub fn build_with_threshold(g: &'g Graph, source: usize, log_threshold: f64) -> Result<Self> {
        g.check_node(source)?;
        if g.degree(source) == 0 {
            return Err(Error::IsolatedNode(source));
        }
        let n = g.node_count();
        let mut dist = vec![UNSEEN; n];
        let mut path_count = vec![0.0; n];
        let mut ln_count = vec![f64::NEG_INFINITY; n];
        let mut mean_prob = vec![0.0; n];
        let mut order = Vec::new();

        dist[source] = 0;
        path_count[source] = 1.0;
        ln_count[source] = 0.0;
        mean_prob[source] = 1.0 / g.degree(source) as f64;

        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            order.push(u as u32);
            for &v in g.neighbors(u) {
                let v = v as usize;
                if dist[v] == UNSEEN {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }

        // Every predecessor of v precedes it in BFS order, so one forward pass suffices.
        for &v in order.iter().skip(1) {
            let v = v as usize;
            let d = dist[v];
            let preds = || g.neighbors(v).iter().map(|&u| u as usize).filter(|&u| dist[u] + 1 == d);

            let count: f64 = preds().map(|u| path_count[u]).sum();
            let max_ln = preds().map(|u| ln_count[u]).fold(f64::NEG_INFINITY, f64::max);
            let ln = max_ln + preds().map(|u| (ln_count[u] - max_ln).exp()).sum::<f64>().ln();

            let weighted: f64 = if count.is_finite() && count <= log_threshold {
                preds().map(|u| path_count[u] / count * mean_prob[u]).sum()
            } else {
                preds().map(|u| (ln_count[u] - ln).exp() * mean_prob[u]).sum()
            };
            path_count[v] = count;
            ln_count[v] = ln;
            mean_prob[v] = weighted / g.degree(v) as f64;
        }

        Ok(ShortestPathDag {
            graph: g,
            source,
            dist,
            path_count,
            ln_count,
            mean_prob,
            order,
        })
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn distance(&self, v: usize) -> Option<usize> {
        match self.dist[v] {
            UNSEEN => None,
            d => Some(d as usize),
        }
    }

    /// Number of shortest paths from the source; exact up to 2^53.
    pub fn path_count(&self, v: usize) -> f64 {
        self.path_count[v]
    }

    /// Natural log of [`Self::path_count`], finite even when the count overflows.
    pub fn ln_path_count(&self, v: usize) -> f64 {
        self.ln_count[v]
    }

    /// Sum over shortest paths of the per-path degree-reciprocal product.
    pub fn prob_sum(&self, v: usize) -> f64 {
        self.mean_prob[v] * self.path_count[v]
    }

    /// Mean per-path product, i.e. the ST value for `(source, v)`.
    pub fn mean_prob(&self, v: usize) -> f64 {
        self.mean_prob[v]
    }

    pub fn predecessors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let d = self.dist[v];
        self.graph
            .neighbors(v)
            .iter()
            .map(|&u| u as usize)
            .filter(move |&u| d != UNSEEN && d > 0 && self.dist[u] + 1 == d)
    }

    /// Reached nodes in BFS order, source first.
    pub fn reached(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().map(|&v| v as usize)
    }

    fn check_target(&self, target: usize) -> Result<()> {
        self.graph.check_node(target)?;
        if target == self.source {
            return Err(Error::SameNode(target));
        }
        if self.dist[target] == UNSEEN {
            return Err(Error::Unreachable {
                from: self.source,
                target,
            });
        }
        Ok(())
    }

    pub fn sp(&self, target: usize) -> Result<usize> {
        self.check_target(target)?;
        Ok(self.dist[target] as usize)
    }

    pub fn st(&self, target: usize) -> Result<f64> {
        self.check_target(target)?;
        Ok(self.mean_prob[target])
    }
}

fn distinct(g: &Graph, i: usize, j: usize) -> Result<()> {
    g.check_node(i)?;
    g.check_node(j)?;
    if i == j {
        return Err(Error::SameNode(i));
    }
    Ok(())
}

pub fn shortest_path_length(g: &Graph, i: usize, j: usize) -> Result<usize> {
    distinct(g, i, j)?;
    ShortestPathDag::build(g, i)?.sp(j)
}

pub fn st_probability(g: &Graph, i: usize, j: usize) -> Result<f64> {
    distinct(g, i, j)?;
    ShortestPathDag::build(g, i)?.st(j)
}

/// SP and ST from each source to every reachable node (or only to `targets` when given).
/// Scores come out grouped by source in the order of `sources`, SP before ST for each pair.
pub fn st_batch(g: &Graph, sources: &[usize], targets: Option<&[usize]>) -> Result<Vec<PairScore>> {
    let per_source: Vec<Vec<PairScore>> = sources
        .par_iter()
        .map(|&s| {
            let dag = ShortestPathDag::build(g, s)?;
            let mut out = Vec::new();
            let mut emit = |j: usize| -> Result<()> {
                out.push(PairScore::new(s, j, Measure::Sp, dag.sp(j)? as f64));
                out.push(PairScore::new(s, j, Measure::Stp, dag.st(j)?));
                Ok(())
            };
            match targets {
                Some(ts) => {
                    for &j in ts.iter().filter(|&&j| j != s) {
                        emit(j)?;
                    }
                }
                None => {
                    let mut reached: Vec<usize> = dag.reached().filter(|&j| j != s).collect();
                    reached.sort_unstable();
                    for j in reached {
                        emit(j)?;
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_source.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::testing::{bfs_distance, connected_graph, enumerate_shortest_paths};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn sp_examples() {
        assert_eq!(shortest_path_length(&k2(), 0, 1).unwrap(), 1);
        assert_eq!(shortest_path_length(&path(3), 0, 2).unwrap(), 2);
        assert_eq!(shortest_path_length(&cycle(4), 0, 2).unwrap(), 2);
    }

    #[test]
    fn st_examples() {
        assert_eq!(st_probability(&k2(), 0, 1).unwrap(), 1.0);
        assert_eq!(st_probability(&path(3), 0, 2).unwrap(), 0.5);
        assert_eq!(st_probability(&cycle(4), 0, 2).unwrap(), 0.125);
    }

    #[test]
    fn errors() {
        assert!(matches!(st_probability(&k2(), 1, 1), Err(Error::SameNode(1))));
        let g = Graph::from_index_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(shortest_path_length(&g, 0, 3), Err(Error::Unreachable { .. })));
        assert!(matches!(st_probability(&g, 0, 9), Err(Error::NodeOutOfRange { .. })));
    }

    #[test]
    fn dag_bookkeeping_on_c4() {
        let g = cycle(4);
        let dag = ShortestPathDag::build(&g, 0).unwrap();
        assert_eq!(dag.path_count(0), 1.0);
        assert_eq!(dag.prob_sum(0), 0.5);
        assert_eq!(dag.path_count(2), 2.0);
        assert_eq!(dag.prob_sum(2), 0.25);
        let mut preds: Vec<usize> = dag.predecessors(2).collect();
        preds.sort();
        assert_eq!(preds, vec![1, 3]);
        assert_eq!(dag.predecessors(0).count(), 0);
    }

    #[test]
    fn batch_on_path() {
        let scores = st_batch(&path(3), &[0], None).unwrap();
        let got: Vec<(usize, Measure, f64)> = scores.iter().map(|s| (s.target, s.measure, s.value)).collect();
        assert_eq!(
            got,
            vec![
                (1, Measure::Sp, 1.0),
                (1, Measure::Stp, 0.5),
                (2, Measure::Sp, 2.0),
                (2, Measure::Stp, 0.5),
            ]
        );
        assert!(st_batch(&path(3), &[], None).unwrap().is_empty());
    }

    #[test]
    fn batch_symmetric_on_c4() {
        let scores = st_batch(&cycle(4), &[0, 2], Some(&[0, 2])).unwrap();
        let st: Vec<f64> = scores.iter().filter(|s| s.measure == Measure::Stp).map(|s| s.value).collect();
        assert_eq!(st.len(), 2);
        assert_eq!(st[0], st[1]);
    }

    #[test]
    fn c6_depends_only_on_distance() {
        let g = cycle(6);
        let two: Vec<f64> = (0..6).map(|i| st_probability(&g, i, (i + 2) % 6).unwrap()).collect();
        assert!(two.iter().all(|&v| v == two[0]));
        assert_eq!(two[0], 0.125);
        // the antipode has two paths of four nodes each
        assert_eq!(st_probability(&g, 0, 3).unwrap(), 1.0 / 16.0);
    }

    #[test]
    fn log_space_weights_agree_with_linear() {
        // 5x5 grid: counts are binomial coefficients
        let idx = |r: usize, c: usize| r * 5 + c;
        let mut edges = Vec::new();
        for r in 0..5 {
            for c in 0..5 {
                if r + 1 < 5 {
                    edges.push((idx(r, c), idx(r + 1, c)));
                }
                if c + 1 < 5 {
                    edges.push((idx(r, c), idx(r, c + 1)));
                }
            }
        }
        let g = Graph::from_index_edges(25, edges).unwrap();
        let lin = ShortestPathDag::build(&g, 0).unwrap();
        let log = ShortestPathDag::build_with_threshold(&g, 0, 0.0).unwrap();
        assert_eq!(lin.path_count(24), 70.0);
        assert_abs_diff_eq!(lin.ln_path_count(24), 70f64.ln(), epsilon = 1e-12);
        for v in 1..25 {
            assert_abs_diff_eq!(lin.mean_prob(v), log.mean_prob(v), epsilon = 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sp_matches_reference_bfs(g in connected_graph(2..=40)) {
            let n = g.node_count();
            for i in 0..n {
                let dag = ShortestPathDag::build(&g, i).unwrap();
                for j in 0..n {
                    prop_assert_eq!(dag.distance(j), bfs_distance(&g, i, j));
                }
            }
        }

        #[test]
        fn st_matches_enumeration_and_is_symmetric(g in connected_graph(2..=10)) {
            let n = g.node_count();
            for i in 0..n {
                let dag = ShortestPathDag::build(&g, i).unwrap();
                for j in 0..n {
                    if i == j { continue; }
                    let (count, mean) = enumerate_shortest_paths(&g, i, j);
                    prop_assert_eq!(dag.path_count(j), count as f64);
                    let st = dag.st(j).unwrap();
                    prop_assert!((st - mean).abs() <= 1e-12);
                    prop_assert!(st > 0.0 && st <= 1.0);
                    prop_assert!((st - st_probability(&g, j, i).unwrap()).abs() <= 1e-12);
                    let pred_sum: f64 = dag.predecessors(j).map(|u| dag.path_count(u)).sum();
                    prop_assert_eq!(dag.path_count(j), pred_sum);
                }
            }
        }
    }
}
