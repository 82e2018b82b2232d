use std::io::{BufReader, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args};
use serde::Serialize;
use serde_json::json;
use tpsim_core::measure::all_pairs;
use tpsim_core::paths::st_batch;
use tpsim_core::score::write_pair_scores;
use tpsim_core::spectral::{read_embedding, write_embedding};
use tpsim_core::{seed, Graph, Measure, PairScore, Scorer};

use crate::args::{read_id_pairs, GraphArgs, OutputArgs, WalkArgs};
use crate::manifest::{self, Manifest, RunFiles};
use crate::UsageError;

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("pair_spec").required(true).args(["all_pairs", "sources", "pairs", "sample_pairs"])))]
pub struct ComputeArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    /// TP, ETP, SP, STP or SPECTRAL
    #[arg(long, default_value = "TP")]
    pub measure: Measure,

    #[command(flatten)]
    pub walk: WalkArgs,

    /// Embedding dimension for SPECTRAL
    #[arg(long, default_value_t = 32)]
    pub dims: usize,

    /// Reuse a saved embedding instead of computing one
    #[arg(long)]
    pub embedding_in: Option<PathBuf>,

    /// Save the embedding computed for SPECTRAL
    #[arg(long)]
    pub embedding_out: Option<PathBuf>,

    /// Every unordered pair of papers
    #[arg(long)]
    pub all_pairs: bool,

    /// Comma-separated source papers; each is paired with every other paper it reaches
    #[arg(long, value_delimiter = ',')]
    pub sources: Vec<String>,

    /// CSV of paper pairs (columns a,b or the first two columns)
    #[arg(long)]
    pub pairs: Option<PathBuf>,

    /// Uniform random sample of this many distinct unordered pairs
    #[arg(long)]
    pub sample_pairs: Option<usize>,

    /// Drop requested pairs whose papers are not in the cleaned graph
    #[arg(long)]
    pub skip_missing: bool,

    #[command(flatten)]
    pub output: OutputArgs,
}

fn resolve_ids(g: &Graph, ids: &[(String, String)], skip_missing: bool) -> Result<(Vec<(usize, usize)>, usize)> {
    let mut out = Vec::with_capacity(ids.len());
    let mut dropped = 0;
    for (a, b) in ids {
        match (g.index_of(a), g.index_of(b)) {
            (Some(i), Some(j)) => out.push((i, j)),
            _ if skip_missing => dropped += 1,
            _ => {
                g.require_index(a)?;
                g.require_index(b)?;
            }
        }
    }
    Ok((out, dropped))
}

fn sample_pairs(n: usize, count: usize, seed_value: u64) -> Result<Vec<(usize, usize)>> {
    use rand::Rng;
    let total = n * n.saturating_sub(1) / 2;
    if count > total {
        bail!(UsageError(format!("asked for {count} pairs but the graph has only {total}")));
    }
    let mut rng = seed::stream(&[seed_value, 0x9a12]);
    let mut seen = std::collections::BTreeSet::new();
    while seen.len() < count {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            seen.insert((a.min(b), a.max(b)));
        }
    }
    Ok(seen.into_iter().collect())
}

pub fn run(args: ComputeArgs, workers: usize) -> Result<()> {
    let cfg = args.walk.config()?;
    if args.measure != Measure::Spectral && (args.embedding_in.is_some() || args.embedding_out.is_some()) {
        bail!(UsageError("--embedding-in/--embedding-out only apply to SPECTRAL".into()));
    }
    let mut inputs = args.graph.inputs();
    inputs.extend(args.pairs.iter().cloned());
    inputs.extend(args.embedding_in.iter().cloned());
    let manifest_path = args.output.manifest_path();
    let mut outputs = vec![args.output.out.clone(), manifest_path.clone()];
    outputs.extend(args.graph.outputs());
    outputs.extend(args.embedding_out.iter().cloned());
    let files = RunFiles::new(inputs, outputs);
    files.check(args.output.force)?;

    let (g, summary) = args.graph.load()?;
    let n = g.node_count();
    let mut dropped = 0;

    let scorer = match (&args.measure, &args.embedding_in) {
        (Measure::Spectral, Some(path)) => {
            let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let e = read_embedding(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
            if e.ids != g.ids() {
                bail!(UsageError(format!("{} was built for a different graph", path.display())));
            }
            Scorer::with_embedding(&g, e)?
        }
        _ => Scorer::new(&g, args.measure, cfg, args.dims)?,
    };

    let scores: Vec<PairScore> = if !args.sources.is_empty() {
        let sources = args
            .sources
            .iter()
            .map(|id| g.require_index(id))
            .collect::<tpsim_core::Result<Vec<_>>>()?;
        match args.measure {
            Measure::Sp | Measure::Stp => st_batch(&g, &sources, None)?
                .into_iter()
                .filter(|s| s.measure == args.measure)
                .collect(),
            _ => {
                let pairs: Vec<(usize, usize)> = sources
                    .iter()
                    .flat_map(|&s| (0..n).filter(move |&j| j != s).map(move |j| (s, j)))
                    .collect();
                scorer.score_pairs(&pairs)?
            }
        }
    } else {
        let pairs = if args.all_pairs {
            all_pairs(n)
        } else if let Some(count) = args.sample_pairs {
            sample_pairs(n, count, args.walk.seed)?
        } else {
            let path = args.pairs.as_ref().expect("pair spec group is required");
            let ids = read_id_pairs(path)?;
            let (pairs, d) = resolve_ids(&g, &ids, args.skip_missing).with_context(|| format!("resolving pairs in {}", path.display()))?;
            dropped = d;
            pairs
        };
        scorer.score_pairs(&pairs)?
    };

    let mut w = manifest::create(&args.output.out)?;
    write_pair_scores(&mut w, &g, &scores, cfg.t)?;
    w.flush()?;
    if let (Some(path), Some(e)) = (&args.embedding_out, scorer.embedding()) {
        let mut w = manifest::create(path)?;
        write_embedding(e, &mut w)?;
        w.flush()?;
    }

    let zero_estimates = scores.iter().filter(|s| s.zero_estimate).count();
    let m = Manifest {
        tool: "tpsim",
        version: env!("CARGO_PKG_VERSION"),
        command: "compute",
        seed: args.walk.seed,
        inputs: files.digests()?,
        config: super::config_json(&args, workers)?,
        outputs: files.outputs.iter().map(|p| p.display().to_string()).collect(),
        report: json!({
            "graph": summary,
            "pairs_scored": scores.len(),
            "pairs_dropped": dropped,
            "zero_estimates": zero_estimates,
        }),
    };
    manifest::emit(&m, &manifest_path)
}
