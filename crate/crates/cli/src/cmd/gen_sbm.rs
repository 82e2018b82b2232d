use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;
use tpsim_core::graph::{clean, CleanOptions};
use tpsim_core::sbm::{generate_sbm, SbmSpec};

use crate::args::OutputArgs;
use crate::manifest::{self, Manifest, RunFiles};
use crate::UsageError;

#[derive(Debug, Args, Serialize)]
pub struct GenSbmArgs {
    /// Explicit block sizes, comma-separated (requires --p-in and --p-out)
    #[arg(long, value_delimiter = ',', requires_all = ["p_in", "p_out"], conflicts_with = "nodes")]
    pub block_sizes: Vec<usize>,

    #[arg(long)]
    pub p_in: Option<f64>,

    #[arg(long)]
    pub p_out: Option<f64>,

    /// Total nodes, split into --blocks equal blocks
    #[arg(long)]
    pub nodes: Option<usize>,

    #[arg(long, default_value_t = 10)]
    pub blocks: usize,

    #[arg(long, default_value_t = 15.0)]
    pub mean_degree: f64,

    /// p_in / p_out
    #[arg(long, default_value_t = 20.0)]
    pub ratio: f64,

    /// Accept p_out > p_in
    #[arg(long)]
    pub allow_disassortative: bool,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Apply the degree filter and main-component selection with this minimum degree
    #[arg(long)]
    pub clean_min_degree: Option<usize>,

    /// Node blocks as CSV id,label
    #[arg(long)]
    pub labels_out: Option<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn run(args: GenSbmArgs) -> Result<()> {
    let spec = match (args.nodes, args.block_sizes.is_empty()) {
        (Some(n), true) => {
            let mut s = SbmSpec::planted(n, args.blocks, args.mean_degree, args.ratio, args.seed)?;
            s.allow_disassortative = args.allow_disassortative;
            s
        }
        (None, false) => SbmSpec {
            block_sizes: args.block_sizes.clone(),
            p_in: args.p_in.expect("required by clap"),
            p_out: args.p_out.expect("required by clap"),
            seed: args.seed,
            allow_disassortative: args.allow_disassortative,
        },
        _ => bail!(UsageError("give either --nodes or --block-sizes with --p-in/--p-out".into())),
    };
    let manifest_path = args.output.manifest_path();
    let mut outputs = vec![args.output.out.clone(), manifest_path.clone()];
    outputs.extend(args.labels_out.iter().cloned());
    let files = RunFiles::new(Vec::new(), outputs);
    files.check(args.output.force)?;

    let sbm = generate_sbm(&spec)?;
    let g = match args.clean_min_degree {
        Some(k) => clean(
            &sbm.graph,
            &CleanOptions {
                min_degree: k,
                iterate_core: false,
            },
        ),
        None => sbm.graph.clone(),
    };
    let mut w = manifest::create(&args.output.out)?;
    for (a, b) in g.edges() {
        writeln!(w, "{}\t{}", g.id(a), g.id(b))?;
    }
    w.flush()?;
    if let Some(path) = &args.labels_out {
        let mut w = manifest::create(path)?;
        writeln!(w, "id,label")?;
        for id in g.ids() {
            let block = sbm.blocks[id.parse::<usize>().expect("generator ids are indices")];
            writeln!(w, "{id},b{block}")?;
        }
        w.flush()?;
    }

    let m = Manifest {
        tool: "tpsim",
        version: env!("CARGO_PKG_VERSION"),
        command: "gen-sbm",
        seed: args.seed,
        inputs: Vec::new(),
        config: serde_json::to_value(&args)?,
        outputs: files.outputs.iter().map(|p| p.display().to_string()).collect(),
        report: json!({
            "spec": spec,
            "expected_edges": spec.expected_edges(),
            "nodes": g.node_count(),
            "edges": g.edge_count(),
            "isolated_nodes": (0..g.node_count()).filter(|&v| g.degree(v) == 0).count(),
        }),
    };
    manifest::emit(&m, &manifest_path)
}
