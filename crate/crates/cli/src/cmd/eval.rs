use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;
use tpsim_core::eval::{
    auc_with_ci, coclass_pairs, discipline_matrix, histogram, log_transform, pearson, piecewise_fit, read_labeled_pairs,
    write_labeled_pairs, EvalReport, PiecewiseFit,
};
use tpsim_core::spectral::{sweep_grid, DEFAULT_SWEEP_DIMS, DEFAULT_SWEEP_WINDOWS};
use tpsim_core::{Graph, LabeledPairSet, Measure, PairSource, Provenance, Scorer, ScoredPairs, WalkConfig};

use crate::args::{read_node_labels, GraphArgs, OutputArgs, WalkArgs};
use crate::manifest::{self, Manifest, RunFiles};
use crate::UsageError;

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProvenanceArg {
    Collab,
    Coclass,
    Synthetic,
}

impl From<ProvenanceArg> for Provenance {
    fn from(p: ProvenanceArg) -> Self {
        match p {
            ProvenanceArg::Collab => Provenance::Collab,
            ProvenanceArg::Coclass => Provenance::Coclass,
            ProvenanceArg::Synthetic => Provenance::Synthetic,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Labeled pairs CSV with header a,b,label
    #[arg(long, conflicts_with = "coclass_sample")]
    pub pairs: Option<PathBuf>,

    /// How the labeled pairs were built; collab and coclass sets must be balanced
    #[arg(long, value_enum, default_value_t = ProvenanceArg::Synthetic)]
    pub provenance: ProvenanceArg,

    /// Paper discipline labels, CSV with header id,label
    #[arg(long)]
    pub labels: Option<PathBuf>,

    /// Build a co-classification pair set of about this size from --labels
    #[arg(long, requires = "labels")]
    pub coclass_sample: Option<usize>,

    /// Save the co-classification pairs
    #[arg(long, requires = "coclass_sample")]
    pub pairs_out: Option<PathBuf>,

    /// Precomputed scores CSV: two id columns, then value (measure and zero_estimate optional)
    #[arg(long)]
    pub scores: Option<PathBuf>,

    #[command(flatten)]
    pub graph: GraphArgs,

    /// Measures to evaluate, comma-separated
    #[arg(long = "measure", value_delimiter = ',', default_value = "TP")]
    pub measures: Vec<Measure>,

    #[command(flatten)]
    pub walk: WalkArgs,

    #[arg(long, default_value_t = 32)]
    pub dims: usize,

    /// Use raw TP-family values instead of their logarithm
    #[arg(long)]
    pub no_log: bool,

    /// Bootstrap resamples for the AUC interval
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,

    /// Pearson correlation of each measure with the second paper's degree
    #[arg(long)]
    pub degree_correlation: bool,

    /// Piecewise fit of every other measure against TP, split at the TP median
    #[arg(long)]
    pub piecewise: bool,

    /// Histogram CSV of the evaluated values
    #[arg(long)]
    pub hist_out: Option<PathBuf>,

    #[arg(long, default_value_t = 50)]
    pub bins: usize,

    /// Discipline-by-discipline mean similarity CSV
    #[arg(long, requires = "labels")]
    pub matrix_out: Option<PathBuf>,

    /// Row and column order for --matrix-out [default: sorted labels]
    #[arg(long, value_delimiter = ',')]
    pub order: Vec<String>,

    #[arg(long, default_value_t = 200)]
    pub samples_per_cell: usize,

    /// Evaluate SPECTRAL over dimensions 32, 64, 128 and walk lengths 2, 10
    #[arg(long)]
    pub spectral_sweep: bool,

    /// Per-pair values used for the AUC
    #[arg(long)]
    pub pair_scores_out: Option<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,
}

/// Raw scores for one measure, by position in the labeled pair set.
struct MeasureScores {
    measure: Measure,
    values: BTreeMap<usize, (f64, bool)>,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

fn scores_from_graph(
    g: &Graph,
    set: &LabeledPairSet,
    measures: &[Measure],
    cfg: WalkConfig,
    dims: usize,
) -> Result<Vec<MeasureScores>> {
    let mut positions = Vec::new();
    let mut pairs = Vec::new();
    for (k, p) in set.pairs.iter().enumerate() {
        if let (Some(i), Some(j)) = (g.index_of(&p.a), g.index_of(&p.b)) {
            if i != j {
                positions.push(k);
                pairs.push((i, j));
            }
        }
    }
    measures
        .iter()
        .map(|&m| {
            let scored = Scorer::new(g, m, cfg, dims)?.score_pairs(&pairs)?;
            Ok(MeasureScores {
                measure: m,
                values: positions
                    .iter()
                    .zip(scored)
                    .map(|(&k, s)| (k, (s.value, s.zero_estimate)))
                    .collect(),
            })
        })
        .collect()
}

type IdPair = (String, String);

fn scores_from_file(path: &Path, set: &LabeledPairSet, fallback: Measure) -> Result<Vec<MeasureScores>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let value_col = find("value").ok_or_else(|| UsageError(format!("{}: no value column", path.display())))?;
    let measure_col = find("measure");
    let zero_col = find("zero_estimate");
    // per measure: (a, b) -> (value, zero_estimate)
    let mut by_measure: BTreeMap<Measure, HashMap<IdPair, (f64, bool)>> = BTreeMap::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.with_context(|| format!("{}:{line}", path.display()))?;
        let field = |c: usize| rec.get(c).map(str::trim).unwrap_or("");
        let measure = match measure_col {
            Some(c) => field(c).parse::<Measure>().with_context(|| format!("{}:{line}", path.display()))?,
            None => fallback,
        };
        let value: f64 = field(value_col)
            .parse()
            .map_err(|_| UsageError(format!("{}:{line}: bad value {:?}", path.display(), field(value_col))))?;
        let zero = zero_col.is_some_and(|c| field(c).eq_ignore_ascii_case("true"));
        by_measure
            .entry(measure)
            .or_default()
            .insert(pair_key(field(0), field(1)), (value, zero));
    }
    Ok(by_measure
        .into_iter()
        .map(|(measure, table)| MeasureScores {
            measure,
            values: set
                .pairs
                .iter()
                .enumerate()
                .filter_map(|(k, p)| table.get(&pair_key(&p.a, &p.b)).map(|&v| (k, v)))
                .collect(),
        })
        .collect())
}

#[derive(Debug, Serialize)]
struct MeasureReport {
    #[serde(flatten)]
    auc: EvalReport,
    pairs_missing: usize,
    log_transformed: bool,
    negated: bool,
    degree_correlation: Option<f64>,
}

#[derive(Debug, Serialize)]
struct PiecewiseReport {
    x: Measure,
    y: Measure,
    fit: Option<PiecewiseFit>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct PairValueRow<'a> {
    a: &'a str,
    b: &'a str,
    label: u8,
    measure: Measure,
    raw: f64,
    value: f64,
}

pub fn run(args: EvalArgs, workers: usize) -> Result<()> {
    let cfg = args.walk.config()?;
    if args.pairs.is_none() && args.coclass_sample.is_none() {
        bail!(UsageError("give labeled pairs (--pairs) or --labels with --coclass-sample".into()));
    }
    if args.scores.is_some() == args.graph.is_given() {
        bail!(UsageError("give exactly one score source: --scores, or a graph (--edges/--snapshot)".into()));
    }
    let needs_graph = args.matrix_out.is_some() || args.spectral_sweep || args.degree_correlation;
    if needs_graph && !args.graph.is_given() {
        bail!(UsageError(
            "--matrix-out, --spectral-sweep and --degree-correlation need the graph".into()
        ));
    }
    let mut inputs: Vec<PathBuf> = args.pairs.iter().chain(&args.labels).chain(&args.scores).cloned().collect();
    inputs.extend(args.graph.inputs());
    let manifest_path = args.output.manifest_path();
    let mut outputs = vec![args.output.out.clone(), manifest_path.clone()];
    outputs.extend(args.graph.outputs());
    outputs.extend(
        args.pairs_out
            .iter()
            .chain(&args.hist_out)
            .chain(&args.matrix_out)
            .chain(&args.pair_scores_out)
            .cloned(),
    );
    let files = RunFiles::new(inputs, outputs);
    files.check(args.output.force)?;

    let graph = if args.graph.is_given() { Some(args.graph.load()?) } else { None };
    let labels: Option<Vec<(String, String)>> = args.labels.as_deref().map(read_node_labels).transpose()?;

    let set = match (&args.pairs, args.coclass_sample) {
        (Some(path), _) => {
            let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_labeled_pairs(f, args.provenance.into()).with_context(|| format!("reading {}", path.display()))?
        }
        (None, Some(size)) => {
            let mut map: BTreeMap<String, String> = labels.clone().expect("required by clap").into_iter().collect();
            if let Some((g, _)) = &graph {
                map.retain(|id, _| g.index_of(id).is_some());
            }
            let set = coclass_pairs(&map, size, args.walk.seed)?;
            if let Some(path) = &args.pairs_out {
                let mut w = manifest::create(path)?;
                write_labeled_pairs(&mut w, &set)?;
                w.flush()?;
            }
            set
        }
        (None, None) => unreachable!("checked above"),
    };
    let all_labels = set.labels();

    let measure_scores = match (&graph, &args.scores) {
        (Some((g, _)), _) => scores_from_graph(g, &set, &args.measures, cfg, args.dims)?,
        (None, Some(path)) => scores_from_file(path, &set, args.measures[0])?,
        (None, None) => unreachable!("checked above"),
    };

    let mut reports = Vec::new();
    let mut transformed: BTreeMap<Measure, BTreeMap<usize, f64>> = BTreeMap::new();
    let mut pair_rows: Vec<(usize, Measure, f64, f64)> = Vec::new();
    for ms in &measure_scores {
        let keys: Vec<usize> = ms.values.keys().copied().collect();
        let raw: Vec<f64> = keys.iter().map(|k| ms.values[k].0).collect();
        let flags: Vec<bool> = keys.iter().map(|k| ms.values[k].1).collect();
        let labels: Vec<bool> = keys.iter().map(|&k| all_labels[k]).collect();
        let mut scored = ScoredPairs::with_zero_flags(raw.clone(), labels, flags)?;
        let log = ms.measure.is_tp_family() && !args.no_log;
        if log {
            scored = log_transform(&scored)?;
        }
        let negated = !ms.measure.higher_is_similar();
        if negated {
            scored = scored.negated();
        }
        let est = auc_with_ci(&scored, args.bootstrap, args.walk.seed)
            .with_context(|| format!("AUC for {}", ms.measure))?;
        let degree_correlation = match (&graph, args.degree_correlation) {
            (Some((g, _)), true) => {
                let degrees: Vec<f64> = keys
                    .iter()
                    .map(|&k| g.degree(g.index_of(&set.pairs[k].b).expect("scored pairs are in the graph")) as f64)
                    .collect();
                match pearson(&raw, &degrees) {
                    Ok(r) => Some(r),
                    Err(e) => {
                        eprintln!("warning: degree correlation for {} undefined: {e}", ms.measure);
                        None
                    }
                }
            }
            _ => None,
        };
        reports.push(MeasureReport {
            auc: EvalReport {
                measure: ms.measure.tag().to_string(),
                auc: est.auc,
                ci_low: est.ci_low,
                ci_high: est.ci_high,
                n_pairs: keys.len(),
                zero_fraction: scored.zero_fraction(),
            },
            pairs_missing: set.len() - keys.len(),
            log_transformed: log,
            negated,
            degree_correlation,
        });
        for (i, &k) in keys.iter().enumerate() {
            pair_rows.push((k, ms.measure, raw[i], scored.values[i]));
        }
        transformed.insert(ms.measure, keys.iter().copied().zip(scored.values.iter().copied()).collect());
    }

    let mut piecewise = Vec::new();
    if args.piecewise {
        let Some(tp) = transformed.get(&Measure::Tp) else {
            bail!(UsageError("--piecewise needs TP among the measures".into()));
        };
        for (&m, other) in transformed.iter().filter(|(m, _)| **m != Measure::Tp) {
            let common: Vec<usize> = tp.keys().filter(|k| other.contains_key(k)).copied().collect();
            let x: Vec<f64> = common.iter().map(|k| tp[k]).collect();
            let y: Vec<f64> = common.iter().map(|k| other[k]).collect();
            let (fit, error) = match piecewise_fit(&x, &y) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            piecewise.push(PiecewiseReport {
                x: Measure::Tp,
                y: m,
                fit,
                error,
            });
        }
    }

    if let Some(path) = &args.hist_out {
        let mut w = csv::Writer::from_writer(manifest::create(path)?);
        w.write_record(["measure", "lo", "hi", "count"])?;
        for (m, values) in &transformed {
            let v: Vec<f64> = values.values().copied().collect();
            for bin in histogram(&v, args.bins) {
                w.write_record([m.tag().to_string(), format!("{:?}", bin.lo), format!("{:?}", bin.hi), bin.count.to_string()])?;
            }
        }
        w.flush()?;
    }

    if let Some(path) = &args.pair_scores_out {
        let mut w = csv::Writer::from_writer(manifest::create(path)?);
        for &(k, measure, raw, value) in &pair_rows {
            let p = &set.pairs[k];
            w.serialize(PairValueRow {
                a: &p.a,
                b: &p.b,
                label: p.label as u8,
                measure,
                raw,
                value,
            })?;
        }
        w.flush()?;
    }

    let mut matrix_report = serde_json::Value::Null;
    if let (Some(path), Some((g, _))) = (&args.matrix_out, &graph) {
        let labels = labels.as_ref().expect("required by clap");
        let by_id: HashMap<&str, &str> = labels.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let node_labels: Vec<Option<String>> = g.ids().iter().map(|id| by_id.get(id.as_str()).map(|l| l.to_string())).collect();
        let order: Vec<String> = if args.order.is_empty() {
            node_labels.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect()
        } else {
            args.order.clone()
        };
        let mut w = csv::Writer::from_writer(manifest::create(path)?);
        w.write_record(["measure", "row", "col", "value"])?;
        let mut per_measure = serde_json::Map::new();
        for &m in &args.measures {
            let scorer = Scorer::new(g, m, cfg, args.dims)?;
            let mat = discipline_matrix(&scorer, &node_labels, &order, args.samples_per_cell, args.walk.seed)?;
            for (r, row) in order.iter().enumerate() {
                for (c, col) in order.iter().enumerate() {
                    w.write_record([m.tag(), row, col, &format!("{:?}", mat[(r, c)])])?;
                }
            }
            let rows: Vec<Vec<f64>> = (0..order.len()).map(|r| mat.row(r).iter().copied().collect()).collect();
            per_measure.insert(m.tag().to_string(), json!(rows));
        }
        w.flush()?;
        matrix_report = json!({ "order": order, "cells": per_measure });
    }

    let mut sweep = Vec::new();
    if let (true, Some((g, _))) = (args.spectral_sweep, &graph) {
        let resolved: Vec<(usize, (usize, usize))> = set
            .pairs
            .iter()
            .enumerate()
            .filter_map(|(k, p)| Some((k, (g.index_of(&p.a)?, g.index_of(&p.b)?))))
            .filter(|(_, (i, j))| i != j)
            .collect();
        let pairs: Vec<(usize, usize)> = resolved.iter().map(|r| r.1).collect();
        let labels: Vec<bool> = resolved.iter().map(|r| all_labels[r.0]).collect();
        for point in sweep_grid(&DEFAULT_SWEEP_DIMS, &DEFAULT_SWEEP_WINDOWS) {
            let dims = point.dims.min(g.node_count());
            let walk = WalkConfig::new(point.t, cfg.walkers, cfg.seed);
            let scorer = Scorer::new(g, Measure::Spectral, walk, dims)?;
            let values = scorer.score(&pairs)?;
            let est = auc_with_ci(&ScoredPairs::new(values, labels.clone())?, args.bootstrap, args.walk.seed)?;
            sweep.push(json!({
                "dims": dims,
                "window": point.window,
                "t": point.t,
                "auc": est.auc,
                "ci_low": est.ci_low,
                "ci_high": est.ci_high,
            }));
        }
    }

    let report = json!({
        "pairs": set.len(),
        "positives": set.positives(),
        "negatives": set.negatives(),
        "measures": reports,
        "piecewise": piecewise,
        "discipline_matrix": matrix_report,
        "spectral_sweep": sweep,
        "graph": graph.as_ref().map(|(_, s)| s),
    });
    let mut w = manifest::create(&args.output.out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
    w.flush()?;

    let m = Manifest {
        tool: "tpsim",
        version: env!("CARGO_PKG_VERSION"),
        command: "eval",
        seed: args.walk.seed,
        inputs: files.digests()?,
        config: super::config_json(&args, workers)?,
        outputs: files.outputs.iter().map(|p| p.display().to_string()).collect(),
        report,
    };
    manifest::emit(&m, &manifest_path)
}
