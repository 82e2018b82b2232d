use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;
use tpsim_core::sbm::{run_benchmark, summarize, write_bench_csv, BenchMethod, BenchOptions, SbmSpec};

use crate::args::{OutputArgs, WalkArgs};
use crate::manifest::{self, Manifest, RunFiles};
use crate::UsageError;

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Network sizes, comma-separated
    #[arg(long, value_delimiter = ',', default_value = "1000,4000,16000")]
    pub sizes: Vec<usize>,

    #[arg(long, default_value_t = 10)]
    pub blocks: usize,

    #[arg(long, default_value_t = 15.0)]
    pub mean_degree: f64,

    /// p_in / p_out
    #[arg(long, default_value_t = 20.0)]
    pub ratio: f64,

    /// Methods, comma-separated: TP, TP-DENSE, ETP, SP, STP, SPECTRAL
    #[arg(long, value_delimiter = ',', default_value = "TP,TP-DENSE,ETP,SP,STP,SPECTRAL")]
    pub methods: Vec<BenchMethod>,

    #[arg(long, default_value_t = 10)]
    pub replicates: usize,

    /// Source papers in the fixed query workload
    #[arg(long, default_value_t = 100)]
    pub sources: usize,

    #[command(flatten)]
    pub walk: WalkArgs,

    /// Largest network for the full exact matrix
    #[arg(long, default_value_t = 5000)]
    pub dense_guard: usize,

    /// Largest network for the spectral embedding
    #[arg(long, default_value_t = 20_000)]
    pub spectral_guard: usize,

    #[arg(long, default_value_t = 32)]
    pub dims: usize,

    /// Run replicates concurrently; timings then include contention
    #[arg(long)]
    pub parallel_replicates: bool,

    /// JSON summary with medians [default: <out>.summary.json]
    #[arg(long)]
    pub summary_out: Option<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn run(args: BenchArgs, workers: usize) -> Result<()> {
    let walk = args.walk.config()?;
    if args.sizes.is_empty() || args.methods.is_empty() {
        bail!(UsageError("need at least one size and one method".into()));
    }
    let summary_path = args.summary_out.clone().unwrap_or_else(|| {
        let mut name = args.output.out.as_os_str().to_owned();
        name.push(".summary.json");
        PathBuf::from(name)
    });
    let manifest_path = args.output.manifest_path();
    let files = RunFiles::new(
        Vec::new(),
        vec![args.output.out.clone(), summary_path.clone(), manifest_path.clone()],
    );
    files.check(args.output.force)?;

    let specs = args
        .sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| SbmSpec::planted(n, args.blocks, args.mean_degree, args.ratio, k as u64))
        .collect::<tpsim_core::Result<Vec<_>>>()?;
    let opts = BenchOptions {
        replicates: args.replicates,
        sources: args.sources,
        walk,
        dense_guard: args.dense_guard,
        spectral_dims: args.dims,
        spectral_guard: args.spectral_guard,
        seed: args.walk.seed,
        parallel_replicates: args.parallel_replicates,
    };
    let records = run_benchmark(&args.methods, &specs, &opts)?;

    let mut w = manifest::create(&args.output.out)?;
    write_bench_csv(&mut w, &records)?;
    w.flush()?;

    let summary = summarize(&records);
    let config = super::config_json(&args, workers)?;
    let doc = json!({
        "workload": format!(
            "{} source papers per network; TP computes their exact rows, ETP samples {} walkers of length {} from each, \
             SP/STP build their shortest-path DAGs, SPECTRAL embeds the network and compares the sources pairwise; \
             TP-DENSE computes the full matrix",
            args.sources, walk.walkers, walk.t
        ),
        "timing": if args.parallel_replicates {
            "replicates ran concurrently; times include contention between them"
        } else {
            "methods and replicates ran one at a time after one untimed warm-up per method"
        },
        "specs": specs,
        "config": config,
        "summary": summary,
        "records": records,
    });
    let mut w = manifest::create(&summary_path)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&doc)?)?;
    w.flush()?;

    let m = Manifest {
        tool: "tpsim",
        version: env!("CARGO_PKG_VERSION"),
        command: "bench",
        seed: args.walk.seed,
        inputs: Vec::new(),
        config,
        outputs: files.outputs.iter().map(|p| p.display().to_string()).collect(),
        report: json!({ "records": records.len(), "skipped": records.iter().filter(|r| r.skipped()).count(), "summary": summary }),
    };
    manifest::emit(&m, &manifest_path)
}
