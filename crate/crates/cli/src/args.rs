use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use tpsim_core::graph::{self, Delimiter, MalformedPolicy};
use tpsim_core::{CleanOptions, Graph, LoadOptions, WalkConfig};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DelimiterArg {
    Auto,
    Tab,
    Comma,
    Whitespace,
}

impl From<DelimiterArg> for Delimiter {
    fn from(d: DelimiterArg) -> Self {
        match d {
            DelimiterArg::Auto => Delimiter::Auto,
            DelimiterArg::Tab => Delimiter::Tab,
            DelimiterArg::Comma => Delimiter::Comma,
            DelimiterArg::Whitespace => Delimiter::Whitespace,
        }
    }
}

/// Citation network input and the cleaning applied to it.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GraphArgs {
    /// Edge list with one citation (two paper ids) per line
    #[arg(long, conflicts_with = "snapshot")]
    pub edges: Option<PathBuf>,

    /// Binary graph snapshot written by --save-graph; loaded as is, without cleaning
    #[arg(long)]
    pub snapshot: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = DelimiterArg::Auto)]
    pub delimiter: DelimiterArg,

    /// Drop malformed edge-list lines instead of failing
    #[arg(long)]
    pub skip_malformed: bool,

    /// Remove papers with fewer citation links than this
    #[arg(long, default_value_t = 3)]
    pub min_degree: usize,

    /// Repeat the degree filter until every remaining paper passes it
    #[arg(long)]
    pub k_core: bool,

    /// Keep the raw graph: no degree filter, no main-component selection
    #[arg(long)]
    pub no_clean: bool,

    /// Write the cleaned graph as a binary snapshot
    #[arg(long)]
    pub save_graph: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub raw_nodes: usize,
    pub raw_edges: usize,
    pub nodes: usize,
    pub edges: usize,
    pub skipped_lines: usize,
}

impl GraphArgs {
    pub fn is_given(&self) -> bool {
        self.edges.is_some() || self.snapshot.is_some()
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        self.edges.iter().chain(&self.snapshot).cloned().collect()
    }

    pub fn outputs(&self) -> Vec<PathBuf> {
        self.save_graph.iter().cloned().collect()
    }

    pub fn load(&self) -> Result<(Graph, GraphSummary)> {
        let (raw, skipped_lines) = match (&self.edges, &self.snapshot) {
            (Some(path), None) => {
                let opts = LoadOptions {
                    delimiter: self.delimiter.into(),
                    malformed: if self.skip_malformed {
                        MalformedPolicy::Skip
                    } else {
                        MalformedPolicy::Fail
                    },
                };
                let list = graph::load_edge_list(path, &opts)?;
                for (line, reason) in &list.skipped {
                    eprintln!("warning: {}:{line}: skipped ({reason})", path.display());
                }
                (graph::build_graph(&list), list.skipped.len())
            }
            (None, Some(path)) => (graph::load_snapshot(path)?, 0),
            _ => bail!(UsageError("a citation graph is required (--edges or --snapshot)".into())),
        };
        let g = if self.no_clean || self.snapshot.is_some() {
            raw.clone()
        } else {
            graph::clean(
                &raw,
                &CleanOptions {
                    min_degree: self.min_degree,
                    iterate_core: self.k_core,
                },
            )
        };
        if let Some(path) = &self.save_graph {
            graph::save_snapshot(&g, path)?;
        }
        let summary = GraphSummary {
            raw_nodes: raw.node_count(),
            raw_edges: raw.edge_count(),
            nodes: g.node_count(),
            edges: g.edge_count(),
            skipped_lines,
        };
        if g.is_empty() {
            eprintln!(
                "warning: no papers left after cleaning ({} before; min degree {})",
                raw.node_count(),
                self.min_degree
            );
        }
        Ok((g, summary))
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct WalkArgs {
    /// Walk length
    #[arg(short = 't', long = "walk-length", default_value_t = 10)]
    pub t: usize,

    /// Walkers per source for ETP
    #[arg(long, default_value_t = 1000)]
    pub walkers: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl WalkArgs {
    pub fn config(&self) -> Result<WalkConfig> {
        let cfg = WalkConfig::new(self.t, self.walkers, self.seed);
        cfg.validate()?;
        if self.t > 20 {
            eprintln!("warning: walk length {} is above 20; results approach the stationary value", self.t);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Main output file
    #[arg(short, long)]
    pub out: PathBuf,

    /// Run manifest path [default: <out>.manifest.json]
    #[arg(long)]
    pub manifest: Option<PathBuf>,

    /// Overwrite existing output files
    #[arg(long)]
    pub force: bool,
}

impl OutputArgs {
    pub fn manifest_path(&self) -> PathBuf {
        self.manifest.clone().unwrap_or_else(|| {
            let mut name = self.out.as_os_str().to_owned();
            name.push(".manifest.json");
            PathBuf::from(name)
        })
    }
}

/// Reads the first two columns of a headed CSV as id pairs, or the `a`/`b` columns when
/// the header names them.
pub fn read_id_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str, fallback: usize| headers.iter().position(|h| h.trim() == name).unwrap_or(fallback);
    let (ca, cb) = (col("a", 0), col("b", 1));
    if headers.len() < 2 {
        bail!(UsageError(format!("{}: expected at least two columns", path.display())));
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: record {}", path.display(), k + 1))?;
        match (rec.get(ca), rec.get(cb)) {
            (Some(a), Some(b)) => out.push((a.trim().to_string(), b.trim().to_string())),
            _ => bail!(UsageError(format!("{}:{}: missing id column", path.display(), k + 2))),
        }
    }
    Ok(out)
}

/// Reads a headed two-column `id,label` CSV.
pub fn read_node_labels(path: &Path) -> Result<Vec<(String, String)>> {
    read_id_pairs(path)
}
