//! Exact symmetrized transition probability by row-wise propagation.
//!
//! For a source `i`, the walk distribution is pushed through the adjacency `t` times.
//! The per-step distributions are summed and the entry for `j` is divided by `t * k_j`,
//! giving `T_ij = (1/t) * sum_{tau=1..t} (P^tau)_ij / k_j` with `P = D^-1 A`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Node-count guard for [`transition_matrix_dense`].
pub const DEFAULT_DENSE_GUARD: usize = 20_000;

/// Walk length, walkers per source, and RNG seed.
///
/// The exact measure only reads `t`; the estimator uses all three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub t: usize,
    pub walkers: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            t: 10,
            walkers: 1000,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn new(t: usize, walkers: usize, seed: u64) -> Self {
        WalkConfig { t, walkers, seed }
    }

    pub fn with_t(t: usize) -> Self {
        WalkConfig {
            t,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::InvalidParameter("walk length t must be at least 1".into()));
        }
        if self.walkers == 0 {
            return Err(Error::InvalidParameter("walkers per source must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TpRow {
    pub source: usize,
    pub t: usize,
    pub values: Vec<f64>,
}

impl TpRow {
    pub fn get(&self, target: usize) -> f64 {
        self.values[target]
    }
}

fn check_source(g: &Graph, source: usize) -> Result<()> {
    g.check_node(source)?;
    if g.degree(source) == 0 {
        return Err(Error::IsolatedNode(source));
    }
    Ok(())
}

/// One step of `dist <- dist * P`, skipping zero mass.
fn propagate(g: &Graph, cur: &[f64], next: &mut [f64]) {
    next.iter_mut().for_each(|x| *x = 0.0);
    for (u, &mass) in cur.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let share = mass / g.degree(u) as f64;
        for &v in g.neighbors(u) {
            next[v as usize] += share;
        }
    }
}

/// Accumulated `sum_{tau=1..t} (P^tau)_{source, .}` before any normalization.
fn step_sum(g: &Graph, source: usize, t: usize) -> Vec<f64> {
    let n = g.node_count();
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut acc = vec![0.0; n];
    cur[source] = 1.0;
    for _ in 0..t {
        propagate(g, &cur, &mut next);
        for (a, &x) in acc.iter_mut().zip(&next) {
            *a += x;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    acc
}

/// Row `source` of `P^tau`: where a walker starting at `source` sits after exactly `tau` steps.
pub fn step_distribution(g: &Graph, source: usize, tau: usize) -> Result<Vec<f64>> {
    check_source(g, source)?;
    let n = g.node_count();
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    cur[source] = 1.0;
    for _ in 0..tau {
        propagate(g, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}

/// The un-averaged, un-symmetrized step sum. Debug aid only.
#[doc(hidden)]
pub fn raw_step_sum(g: &Graph, source: usize, cfg: &WalkConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_source(g, source)?;
    Ok(step_sum(g, source, cfg.t))
}

pub fn transition_row(g: &Graph, source: usize, cfg: &WalkConfig) -> Result<TpRow> {
    if cfg.t == 0 {
        return Err(Error::InvalidParameter("walk length t must be at least 1".into()));
    }
    check_source(g, source)?;
    let t = cfg.t as f64;
    let mut values = step_sum(g, source, cfg.t);
    for (j, v) in values.iter_mut().enumerate() {
        if *v != 0.0 {
            *v /= t * g.degree(j) as f64;
        }
    }
    Ok(TpRow {
        source,
        t: cfg.t,
        values,
    })
}

pub fn transition_pair(g: &Graph, i: usize, j: usize, cfg: &WalkConfig) -> Result<f64> {
    g.check_node(j)?;
    Ok(transition_row(g, i, cfg)?.values[j])
}

/// Rows for many sources, computed in parallel. Output order follows `sources`.
pub fn transition_rows(g: &Graph, sources: &[usize], cfg: &WalkConfig) -> Result<Vec<TpRow>> {
    sources
        .par_iter()
        .map(|&s| transition_row(g, s, cfg))
        .collect()
}

/// Full `N x N` matrix. Refuses graphs above `max_nodes`.
pub fn transition_matrix_dense(g: &Graph, cfg: &WalkConfig, max_nodes: usize) -> Result<DMatrix<f64>> {
    let n = g.node_count();
    if n > max_nodes {
        return Err(Error::TooLarge {
            nodes: n,
            limit: max_nodes,
        });
    }
    let sources: Vec<usize> = (0..n).collect();
    let rows = transition_rows(g, &sources, cfg)?;
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i].values[j]))
}
