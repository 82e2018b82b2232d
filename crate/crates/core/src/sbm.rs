//! Stochastic block model graphs and runtime benchmarks over them.

use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{transition_matrix_dense, transition_row, WalkConfig};
use crate::graph::{largest_component, Graph};
use crate::paths::ShortestPathDag;
use crate::seed;
use crate::spectral::{cosine_similarity, embed_with, EmbedOptions};
use crate::walk::sample_visits;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
    /// Permit `p_out > p_in`.
    #[serde(default)]
    pub allow_disassortative: bool,
}

impl SbmSpec {
    pub fn new(block_sizes: Vec<usize>, p_in: f64, p_out: f64, seed: u64) -> Self {
        SbmSpec {
            block_sizes,
            p_in,
            p_out,
            seed,
            allow_disassortative: false,
        }
    }

    /// `blocks` equal blocks over `nodes` nodes, with probabilities chosen so that the
    /// expected mean degree is `mean_degree` and `p_in / p_out = ratio`.
    pub fn planted(nodes: usize, blocks: usize, mean_degree: f64, ratio: f64, seed: u64) -> Result<Self> {
        if blocks == 0 || nodes < blocks {
            return Err(Error::InvalidParameter(format!("cannot split {nodes} nodes into {blocks} blocks")));
        }
        if ratio <= 0.0 {
            return Err(Error::InvalidParameter("p_in / p_out ratio must be positive".into()));
        }
        let sizes: Vec<usize> = (0..blocks)
            .map(|b| nodes / blocks + usize::from(b < nodes % blocks))
            .collect();
        let n = nodes as f64;
        let within: f64 = sizes.iter().map(|&s| (s * s.saturating_sub(1)) as f64).sum();
        let across = n * n - sizes.iter().map(|&s| (s * s) as f64).sum::<f64>();
        let p_in = mean_degree * n / (within + across / ratio);
        let spec = SbmSpec::new(sizes, p_in, p_in / ratio, seed);
        spec.validate()?;
        Ok(spec)
    }

    pub fn node_count(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.p_in, self.p_out] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
            }
        }
        if !self.allow_disassortative && self.p_out > self.p_in {
            return Err(Error::InvalidParameter(format!(
                "p_out {} exceeds p_in {} (set allow_disassortative)",
                self.p_out, self.p_in
            )));
        }
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return Err(Error::InvalidParameter("block sizes must be positive".into()));
        }
        Ok(())
    }

    /// Expected number of edges.
    pub fn expected_edges(&self) -> f64 {
        let within: f64 = self
            .block_sizes
            .iter()
            .map(|&s| (s * s.saturating_sub(1) / 2) as f64)
            .sum();
        let n = self.node_count() as f64;
        let all = n * (n - 1.0) / 2.0;
        self.p_in * within + self.p_out * (all - within)
    }
}

#[derive(Debug, Clone)]
pub struct SbmGraph {
    pub graph: Graph,
    /// Block of each node.
    pub blocks: Vec<usize>,
}

/// Gap to the next success in a Bernoulli(p) sequence.
fn geometric_skip<R: Rng>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    (u.ln() / (1.0 - p).ln()).floor() as u64
}

/// Plain (not degree-corrected) SBM: every unordered pair is an edge independently with
/// probability `p_in` inside a block and `p_out` across blocks. Pairs are visited with
/// geometric skips, so cost scales with the number of edges rather than `N^2`.
pub fn generate_sbm(spec: &SbmSpec) -> Result<SbmGraph> {
    spec.validate()?;
    let mut starts = Vec::with_capacity(spec.block_sizes.len());
    let mut blocks = Vec::with_capacity(spec.node_count());
    let mut acc = 0;
    for (b, &s) in spec.block_sizes.iter().enumerate() {
        starts.push(acc);
        acc += s;
        blocks.extend(std::iter::repeat_n(b, s));
    }
    let mut rng = seed::stream(&[spec.seed, 0x5b]);
    let mut edges = Vec::new();
    for a in 0..spec.block_sizes.len() {
        for b in a..spec.block_sizes.len() {
            let (sa, sb) = (spec.block_sizes[a], spec.block_sizes[b]);
            let (p, total) = if a == b {
                (spec.p_in, (sa * (sa - 1) / 2) as u64)
            } else {
                (spec.p_out, (sa * sb) as u64)
            };
            if p <= 0.0 || total == 0 {
                continue;
            }
            let mut idx = geometric_skip(&mut rng, p);
            while idx < total {
                let (x, y) = if a == b { triangular(idx, sa) } else { ((idx / sb as u64) as usize, (idx % sb as u64) as usize) };
                edges.push((starts[a] + x, starts[b] + y));
                idx += 1 + geometric_skip(&mut rng, p);
            }
        }
    }
    Ok(SbmGraph {
        graph: Graph::from_index_edges(spec.node_count(), edges)?,
        blocks,
    })
}

/// Maps a linear index over pairs `(i, j)`, `i < j < s`, in row-major order.
fn triangular(idx: u64, s: usize) -> (usize, usize) {
    let s = s as u64;
    // row i starts at i*s - i*(i+1)/2 - ... solve by float then fix up
    let tot = |i: u64| i * (2 * s - i - 1) / 2;
    let mut i = {
        let b = (2 * s - 1) as f64;
        ((b - (b * b - 8.0 * idx as f64).max(0.0).sqrt()) / 2.0).floor() as u64
    };
    while i > 0 && tot(i) > idx {
        i -= 1;
    }
    while tot(i + 1) <= idx {
        i += 1;
    }
    let j = i + 1 + (idx - tot(i));
    (i as usize, j as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BenchMethod {
    /// Exact rows for the workload sources.
    #[serde(rename = "TP")]
    TpRows,
    /// The full exact matrix.
    #[serde(rename = "TP-DENSE")]
    TpDense,
    #[serde(rename = "ETP")]
    Etp,
    #[serde(rename = "SP")]
    Sp,
    #[serde(rename = "STP")]
    Stp,
    /// Embedding plus cosine lookups for the workload sources.
    #[serde(rename = "SPECTRAL")]
    Spectral,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 6] = [
        BenchMethod::TpRows,
        BenchMethod::TpDense,
        BenchMethod::Etp,
        BenchMethod::Sp,
        BenchMethod::Stp,
        BenchMethod::Spectral,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            BenchMethod::TpRows => "TP",
            BenchMethod::TpDense => "TP-DENSE",
            BenchMethod::Etp => "ETP",
            BenchMethod::Sp => "SP",
            BenchMethod::Stp => "STP",
            BenchMethod::Spectral => "SPECTRAL",
        }
    }
}

impl std::str::FromStr for BenchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchMethod::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown benchmark method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOptions {
    pub replicates: usize,
    /// Number of source nodes each method is timed on.
    pub sources: usize,
    pub walk: WalkConfig,
    pub dense_guard: usize,
    pub spectral_dims: usize,
    pub spectral_guard: usize,
    pub seed: u64,
    pub parallel_replicates: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            replicates: 10,
            sources: 100,
            walk: WalkConfig::default(),
            dense_guard: crate::exact::DEFAULT_DENSE_GUARD,
            spectral_dims: 32,
            spectral_guard: 20_000,
            seed: 0,
            parallel_replicates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub method: BenchMethod,
    pub nodes: usize,
    pub edges: usize,
    pub replicate: usize,
    /// Index into the list of specs the run was given.
    pub size_index: usize,
    pub network_seed: u64,
    /// `None` when the method was skipped by a size guard.
    pub seconds: Option<f64>,
    /// Walk steps per second, for the estimator.
    pub steps_per_second: Option<f64>,
    pub note: String,
}

impl BenchmarkRecord {
    pub fn skipped(&self) -> bool {
        self.seconds.is_none()
    }
}

fn workload_sources(g: &Graph, count: usize, seed: u64) -> Vec<usize> {
    let candidates: Vec<usize> = (0..g.node_count()).filter(|&v| g.degree(v) > 0).collect();
    let mut rng = seed::stream(&[seed, 0x50]);
    let k = count.min(candidates.len());
    let mut picked: Vec<usize> = sample(&mut rng, candidates.len(), k).into_iter().map(|i| candidates[i]).collect();
    picked.sort_unstable();
    picked
}

enum Outcome {
    Ran,
    Skipped(String),
}

fn run_method(method: BenchMethod, g: &Graph, sources: &[usize], opts: &BenchOptions) -> Result<Outcome> {
    use rayon::prelude::*;
    let n = g.node_count();
    match method {
        BenchMethod::TpRows => {
            sources
                .par_iter()
                .try_for_each(|&s| transition_row(g, s, &opts.walk).map(drop))?;
        }
        BenchMethod::TpDense => {
            if n > opts.dense_guard {
                return Ok(Outcome::Skipped(format!("N={n} above dense guard {}", opts.dense_guard)));
            }
            std::hint::black_box(transition_matrix_dense(g, &opts.walk, opts.dense_guard)?);
        }
        BenchMethod::Etp => {
            sources
                .par_iter()
                .try_for_each(|&s| sample_visits(g, s, &opts.walk).map(drop))?;
        }
        BenchMethod::Sp | BenchMethod::Stp => {
            sources.par_iter().try_for_each(|&s| -> Result<()> {
                let dag = ShortestPathDag::build(g, s)?;
                std::hint::black_box(dag.reached().map(|v| dag.mean_prob(v)).sum::<f64>());
                Ok(())
            })?;
        }
        BenchMethod::Spectral => {
            if n > opts.spectral_guard {
                return Ok(Outcome::Skipped(format!("N={n} above spectral guard {}", opts.spectral_guard)));
            }
            let eopts = EmbedOptions {
                max_nodes: opts.spectral_guard,
                ..Default::default()
            };
            let d = opts.spectral_dims.min(n);
            let e = embed_with(g, &opts.walk, d, &eopts)?;
            let mut acc = 0.0;
            for &s in sources {
                for &t in sources {
                    acc += cosine_similarity(&e, s, t).unwrap_or(0.0);
                }
            }
            std::hint::black_box(acc);
        }
    }
    Ok(Outcome::Ran)
}

fn replicate_network(spec: &SbmSpec, rep: usize, opts: &BenchOptions) -> Result<(Graph, u64)> {
    let network_seed = seed::mix(&[opts.seed, spec.seed, rep as u64]);
    let g = generate_sbm(&SbmSpec {
        seed: network_seed,
        ..spec.clone()
    })?
    .graph;
    Ok((largest_component(&g), network_seed))
}

fn time_replicate(
    methods: &[BenchMethod],
    spec: &SbmSpec,
    size_index: usize,
    rep: usize,
    opts: &BenchOptions,
) -> Result<Vec<BenchmarkRecord>> {
    let (g, network_seed) = replicate_network(spec, rep, opts)?;
    let sources = workload_sources(&g, opts.sources, network_seed);
    let mut records = Vec::with_capacity(methods.len());
    for &method in methods {
        let start = Instant::now();
        let outcome = run_method(method, &g, &sources, opts)?;
        let secs = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
        let (seconds, note) = match outcome {
            Outcome::Ran => (Some(secs), String::new()),
            Outcome::Skipped(why) => (None, why),
        };
        let steps_per_second = match (method, seconds) {
            (BenchMethod::Etp, Some(s)) => Some((sources.len() * opts.walk.walkers * opts.walk.t) as f64 / s),
            _ => None,
        };
        records.push(BenchmarkRecord {
            method,
            nodes: g.node_count(),
            edges: g.edge_count(),
            replicate: rep,
            size_index,
            network_seed,
            seconds,
            steps_per_second,
            note,
        });
    }
    Ok(records)
}

/// Times every method on `replicates` networks per spec. Each replicate regenerates the
/// network from a seed derived from the top-level seed, the spec seed, and the replicate
/// index, and keeps its largest connected component. An untimed warm-up of every method
/// on the first network precedes the timed runs. A method that hits its size guard
/// yields a skipped record.
///
/// Replicates run one after another unless `parallel_replicates` is set, in which case
/// concurrent replicates compete for cores and timings are inflated accordingly.
pub fn run_benchmark(methods: &[BenchMethod], specs: &[SbmSpec], opts: &BenchOptions) -> Result<Vec<BenchmarkRecord>> {
    use rayon::prelude::*;
    if opts.replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be at least 1".into()));
    }
    opts.walk.validate()?;
    if let Some(first) = specs.first() {
        let (g, network_seed) = replicate_network(first, 0, opts)?;
        let sources = workload_sources(&g, opts.sources, network_seed);
        for &method in methods {
            run_method(method, &g, &sources, opts)?;
        }
    }
    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|s| (0..opts.replicates).map(move |r| (s, r)))
        .collect();
    let run = |&(s, r): &(usize, usize)| time_replicate(methods, &specs[s], s, r, opts);
    let batches: Vec<Vec<BenchmarkRecord>> = if opts.parallel_replicates {
        jobs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };
    Ok(batches.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummaryRow {
    pub method: BenchMethod,
    pub size_index: usize,
    pub nodes_median: f64,
    pub edges_median: f64,
    /// `None` when every replicate was skipped.
    pub seconds_median: Option<f64>,
    pub runs: usize,
    pub skipped: usize,
}

fn median_of(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// Median runtime per (method, size), ordered by method then size.
pub fn summarize(records: &[BenchmarkRecord]) -> Vec<BenchSummaryRow> {
    let mut keys: Vec<(BenchMethod, usize)> = records.iter().map(|r| (r.method, r.size_index)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(method, size_index)| {
            let rs: Vec<&BenchmarkRecord> = records
                .iter()
                .filter(|r| r.method == method && r.size_index == size_index)
                .collect();
            BenchSummaryRow {
                method,
                size_index,
                nodes_median: median_of(rs.iter().map(|r| r.nodes as f64).collect()).unwrap_or(0.0),
                edges_median: median_of(rs.iter().map(|r| r.edges as f64).collect()).unwrap_or(0.0),
                seconds_median: median_of(rs.iter().filter_map(|r| r.seconds).collect()),
                runs: rs.iter().filter(|r| !r.skipped()).count(),
                skipped: rs.iter().filter(|r| r.skipped()).count(),
            }
        })
        .collect()
}

/// CSV with header `method,N,m,replicate,seconds,status`; skipped runs have an empty
/// `seconds` field and status `skipped`.
pub fn write_bench_csv<W: std::io::Write>(mut w: W, records: &[BenchmarkRecord]) -> std::io::Result<()> {
    writeln!(w, "method,N,m,replicate,seconds,status")?;
    for r in records {
        let secs = r.seconds.map(|s| format!("{s:.6}")).unwrap_or_default();
        let status = if r.skipped() { "skipped" } else { "ok" };
        writeln!(w, "{},{},{},{},{},{}", r.method.tag(), r.nodes, r.edges, r.replicate, secs, status)?;
    }
    Ok(())
}
