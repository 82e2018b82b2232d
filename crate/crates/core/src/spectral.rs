//! Embedding from the leading eigenpairs of the transition-probability matrix.
//!
//! The matrix `T = (1/t) sum_tau P^tau D^-1` is symmetric but not necessarily positive
//! semidefinite. Eigenpairs are ranked by eigenvalue magnitude; node vectors are the
//! eigenvector entries scaled by `sqrt(|lambda|)` and the sign stays on the eigenvalue, so
//! `T ~= sum_r sign(lambda_r) v_r v_r^T`.
//!
//! Small graphs use a dense symmetric eigensolver. Larger graphs use block subspace
//! iteration with Rayleigh-Ritz extraction, applying `T` matrix-free by propagation.

use std::cmp::Ordering;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{transition_matrix_dense, WalkConfig};
use crate::graph::Graph;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedOptions {
    /// Use the dense eigensolver up to this many nodes.
    pub dense_limit: usize,
    /// Refuse graphs larger than this.
    pub max_nodes: usize,
    /// Required relative eigen-residual `||T u - lambda u|| / ||u||`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        EmbedOptions {
            dense_limit: 2_000,
            max_nodes: 50_000,
            tolerance: 1e-8,
            max_iterations: 3_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub t: usize,
    pub ids: Vec<String>,
    /// Signed eigenvalues, descending by magnitude.
    pub eigenvalues: Vec<f64>,
    /// `N x d`, row `i` is node `i`'s vector.
    pub vectors: DMatrix<f64>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn node_count(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vector(&self, node: usize) -> Vec<f64> {
        self.vectors.row(node).iter().copied().collect()
    }

    /// `sum_r sign(lambda_r) v_r v_r^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let signs = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|l| if *l < 0.0 { -1.0 } else { 1.0 }),
        ));
        &self.vectors * signs * self.vectors.transpose()
    }
}

/// Matrix-free `T x`: `(1/t) sum_{tau=1..t} P^tau D^-1 x`.
pub fn apply_transition(g: &Graph, t: usize, x: &[f64]) -> Vec<f64> {
    let n = g.node_count();
    let mut z: Vec<f64> = (0..n)
        .map(|i| match g.degree(i) {
            0 => 0.0,
            k => x[i] / k as f64,
        })
        .collect();
    let mut next = vec![0.0; n];
    let mut acc = vec![0.0; n];
    for _ in 0..t {
        for (i, out) in next.iter_mut().enumerate() {
            let k = g.degree(i);
            *out = if k == 0 {
                0.0
            } else {
                g.neighbors(i).iter().map(|&j| z[j as usize]).sum::<f64>() / k as f64
            };
        }
        std::mem::swap(&mut z, &mut next);
        acc.iter_mut().zip(&z).for_each(|(a, v)| *a += v);
    }
    acc.iter_mut().for_each(|a| *a /= t as f64);
    acc
}

fn apply_block(g: &Graph, t: usize, q: &DMatrix<f64>) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = (0..q.ncols())
        .into_par_iter()
        .map(|c| apply_transition(g, t, q.column(c).as_slice()))
        .collect();
    DMatrix::from_fn(q.nrows(), q.ncols(), |r, c| cols[c][r])
}

fn by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Flip so the largest-magnitude entry is positive (first such entry on ties).
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn finish(g: &Graph, t: usize, pairs: Vec<(f64, Vec<f64>)>) -> Embedding {
    let n = g.node_count();
    let d = pairs.len();
    let mut vectors = DMatrix::zeros(n, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for (c, (lambda, mut u)) in pairs.into_iter().enumerate() {
        fix_sign(&mut u);
        let scale = lambda.abs().sqrt();
        for r in 0..n {
            vectors[(r, c)] = u[r] * scale;
        }
        eigenvalues.push(lambda);
    }
    Embedding {
        t,
        ids: g.ids().to_vec(),
        eigenvalues,
        vectors,
    }
}

fn embed_dense(g: &Graph, cfg: &WalkConfig, d: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    let m = transition_matrix_dense(g, cfg, usize::MAX)?;
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    Ok(by_magnitude(&values)
        .into_iter()
        .take(d)
        .map(|c| (values[c], eig.eigenvectors.column(c).iter().copied().collect()))
        .collect())
}

fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

fn embed_iterative(g: &Graph, cfg: &WalkConfig, d: usize, opts: &EmbedOptions) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = g.node_count();
    let block = (d + d.max(8)).min(n);
    let mut rng = seed::stream(&[opts.seed, 0x5eed]);
    let mut q = orthonormalize(DMatrix::from_fn(n, block, |_, _| rng.random::<f64>() - 0.5));
    let mut worst = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let y = apply_block(g, cfg.t, &q);
        let h = q.transpose() * &y;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let theta: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let order = by_magnitude(&theta);
        let s = DMatrix::from_fn(block, block, |r, c| eig.eigenvectors[(r, order[c])]);
        let ritz = &q * &s;
        let ty = &y * &s;
        worst = (0..d)
            .map(|c| {
                let lambda = theta[order[c]];
                (ty.column(c) - ritz.column(c) * lambda).norm() / ritz.column(c).norm()
            })
            .fold(0.0, f64::max);
        if worst <= opts.tolerance {
            return Ok((0..d)
                .map(|c| (theta[order[c]], ritz.column(c).iter().copied().collect()))
                .collect());
        }
        q = orthonormalize(ty);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        residual: worst,
    })
}

pub fn embed(g: &Graph, cfg: &WalkConfig, d: usize) -> Result<Embedding> {
    embed_with(g, cfg, d, &EmbedOptions::default())
}

pub fn embed_with(g: &Graph, cfg: &WalkConfig, d: usize, opts: &EmbedOptions) -> Result<Embedding> {
    if cfg.t == 0 {
        return Err(Error::InvalidParameter("walk length t must be at least 1".into()));
    }
    let n = g.node_count();
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!("dimension {d} outside 1..={n}")));
    }
    if n > opts.max_nodes {
        return Err(Error::TooLarge {
            nodes: n,
            limit: opts.max_nodes,
        });
    }
    if let Some(i) = (0..n).find(|&i| g.degree(i) == 0) {
        return Err(Error::IsolatedNode(i));
    }
    let pairs = if n <= opts.dense_limit || d * 2 >= n {
        embed_dense(g, cfg, d)?
    } else {
        embed_iterative(g, cfg, d, opts)?
    };
    Ok(finish(g, cfg.t, pairs))
}

pub fn cosine_similarity(e: &Embedding, i: usize, j: usize) -> Result<f64> {
    for x in [i, j] {
        if x >= e.node_count() {
            return Err(Error::NodeOutOfRange {
                index: x,
                node_count: e.node_count(),
            });
        }
    }
    let a = e.vectors.row(i);
    let b = e.vectors.row(j);
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 {
        return Err(Error::ZeroVector(i));
    }
    if nb == 0.0 {
        return Err(Error::ZeroVector(j));
    }
    Ok((a.dot(&b) / (na * nb)).clamp(-1.0, 1.0))
}

/// One cell of a dimension x context-window grid. The window maps onto the walk length,
/// which is only a loose analogue of a skip-gram context window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SweepPoint {
    pub dims: usize,
    pub window: usize,
    pub t: usize,
}

pub const DEFAULT_SWEEP_DIMS: [usize; 3] = [32, 64, 128];
pub const DEFAULT_SWEEP_WINDOWS: [usize; 2] = [2, 10];

pub fn sweep_grid(dims: &[usize], windows: &[usize]) -> Vec<SweepPoint> {
    windows
        .iter()
        .flat_map(|&w| dims.iter().map(move |&d| SweepPoint { dims: d, window: w, t: w }))
        .collect()
}

/// Text export: two `#` header lines (walk length, eigenvalues) followed by one CSV row
/// per node, `id,v_1,...,v_d`.
pub fn write_embedding<W: Write>(e: &Embedding, mut w: W) -> Result<()> {
    let io = |err| Error::io("<embedding>", err);
    writeln!(w, "# t,{}", e.t).map_err(io)?;
    let eig: Vec<String> = e.eigenvalues.iter().map(|l| format!("{l:?}")).collect();
    writeln!(w, "# eigenvalues,{}", eig.join(",")).map_err(io)?;
    let mut out = csv::Writer::from_writer(w);
    for (i, id) in e.ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(e.vectors.row(i).iter().map(|x| format!("{x:?}")));
        out.write_record(&rec).map_err(crate::score::csv_err)?;
    }
    out.flush().map_err(io)
}

pub fn read_embedding<R: BufRead>(r: R) -> Result<Embedding> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: "<embedding>".into(),
        line,
        message,
    };
    let parse_f64 = |s: &str, line: usize| s.trim().parse::<f64>().map_err(|e| parse_err(line, e.to_string()));
    let mut lines = r.lines();
    let mut header = |expect: &str, line: usize| -> Result<Vec<String>> {
        let text = lines
            .next()
            .ok_or_else(|| parse_err(line, "missing header".into()))?
            .map_err(|e| Error::io("<embedding>", e))?;
        let fields: Vec<String> = text.split(',').map(str::to_string).collect();
        if fields.first().map(String::as_str) != Some(expect) {
            return Err(parse_err(line, format!("expected {expect:?} header")));
        }
        Ok(fields[1..].to_vec())
    };
    let t = header("# t", 1)?
        .first()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(1, "bad walk length".into()))?;
    let eigenvalues = header("# eigenvalues", 2)?
        .iter()
        .map(|s| parse_f64(s, 2))
        .collect::<Result<Vec<f64>>>()?;
    let d = eigenvalues.len();
    let rest: String = lines
        .map(|l| l.map(|s| s + "\n"))
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io("<embedding>", e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(rest.as_bytes());
    let mut ids = Vec::new();
    let mut flat = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(crate::score::csv_err)?;
        if rec.len() != d + 1 {
            return Err(parse_err(k + 3, format!("expected {} fields, got {}", d + 1, rec.len())));
        }
        ids.push(rec[0].to_string());
        for f in rec.iter().skip(1) {
            flat.push(parse_f64(f, k + 3)?);
        }
    }
    Ok(Embedding {
        t,
        vectors: DMatrix::from_row_slice(ids.len(), d, &flat),
        ids,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use approx::assert_abs_diff_eq;

    fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm()
    }

    #[test]
    fn full_rank_reconstructs() {
        for (g, t) in [(triangle(), 2), (cycle(6), 3), (crate::testing::random_connected(30, 0.15, 3), 10)] {
            let cfg = WalkConfig::with_t(t);
            let e = embed(&g, &cfg, g.node_count()).unwrap();
            let m = transition_matrix_dense(&g, &cfg, 100).unwrap();
            assert!(frob(&e.reconstruct(), &m) <= 1e-8);
            let mags: Vec<f64> = e.eigenvalues.iter().map(|l| l.abs()).collect();
            assert!(mags.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn reconstruction_error_non_increasing_in_dimension() {
        let g = crate::testing::random_connected(25, 0.2, 9);
        let cfg = WalkConfig::with_t(5);
        let m = transition_matrix_dense(&g, &cfg, 100).unwrap();
        let errs: Vec<f64> = (1..=25).map(|d| frob(&embed(&g, &cfg, d).unwrap().reconstruct(), &m)).collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{errs:?}");
    }

    #[test]
    fn triangle_one_dim_vectors_coincide() {
        let e = embed(&triangle(), &WalkConfig::with_t(2), 1).unwrap();
        let v: Vec<f64> = (0..3).map(|i| e.vectors[(i, 0)]).collect();
        assert_abs_diff_eq!(v[0], v[1], epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], v[2], epsilon = 1e-12);
    }

    #[test]
    fn triangle_full_rank_cosines_equal() {
        let e = embed(&triangle(), &WalkConfig::with_t(2), 3).unwrap();
        let c01 = cosine_similarity(&e, 0, 1).unwrap();
        assert_abs_diff_eq!(c01, cosine_similarity(&e, 1, 2).unwrap(), epsilon = 1e-9);
        assert_abs_diff_eq!(c01, cosine_similarity(&e, 0, 2).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn cosine_basics() {
        let e = Embedding {
            t: 1,
            ids: vec!["a".into(), "b".into(), "z".into()],
            eigenvalues: vec![1.0, 1.0],
            vectors: DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        };
        assert_eq!(cosine_similarity(&e, 0, 1).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&e, 1, 1).unwrap(), 1.0);
        assert!(matches!(cosine_similarity(&e, 0, 2), Err(Error::ZeroVector(2))));
    }

    #[test]
    fn residuals_small() {
        let g = crate::testing::random_connected(40, 0.1, 1);
        let cfg = WalkConfig::with_t(10);
        let e = embed(&g, &cfg, 6).unwrap();
        let m = transition_matrix_dense(&g, &cfg, 100).unwrap();
        for (c, &lambda) in e.eigenvalues.iter().enumerate() {
            let u = e.vectors.column(c) / lambda.abs().sqrt();
            assert!((&m * &u - &u * lambda).norm() <= 1e-8 * u.norm());
        }
    }

    #[test]
    fn iterative_matches_dense() {
        let g = crate::testing::random_connected(120, 0.05, 4);
        let cfg = WalkConfig::with_t(4);
        let dense = embed(&g, &cfg, 4).unwrap();
        let opts = EmbedOptions {
            dense_limit: 0,
            ..Default::default()
        };
        let iter = embed_with(&g, &cfg, 4, &opts).unwrap();
        for c in 0..4 {
            assert_abs_diff_eq!(dense.eigenvalues[c], iter.eigenvalues[c], epsilon = 1e-9);
        }
        assert!(frob(&dense.reconstruct(), &iter.reconstruct()) <= 1e-6);
    }

    #[test]
    fn matrix_free_apply_matches_dense() {
        let g = cycle(7);
        let cfg = WalkConfig::with_t(3);
        let m = transition_matrix_dense(&g, &cfg, 10).unwrap();
        let x: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
        let y = apply_transition(&g, 3, &x);
        let want = &m * DVector::from_vec(x);
        for i in 0..7 {
            assert_abs_diff_eq!(y[i], want[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn dimension_guard() {
        let cfg = WalkConfig::with_t(2);
        assert!(embed(&triangle(), &cfg, 0).is_err());
        assert!(embed(&triangle(), &cfg, 4).is_err());
        let opts = EmbedOptions {
            max_nodes: 2,
            ..Default::default()
        };
        assert!(matches!(embed_with(&triangle(), &cfg, 1, &opts), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn sweep_covers_grid() {
        let grid = sweep_grid(&DEFAULT_SWEEP_DIMS, &DEFAULT_SWEEP_WINDOWS);
        assert_eq!(grid.len(), 6);
        assert!(grid.iter().all(|p| p.t == p.window));
    }

    #[test]
    fn text_export_round_trips() {
        let g = crate::testing::random_connected(12, 0.2, 2);
        let e = embed(&g, &WalkConfig::with_t(3), 4).unwrap();
        let mut buf = Vec::new();
        write_embedding(&e, &mut buf).unwrap();
        let back = read_embedding(buf.as_slice()).unwrap();
        assert_eq!(back, e);
    }
}
