use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;
use tpsim_core::author::{
    author_similarity_with, build_collab_pairs, collaborations_from_corpus, load_corpus, read_collaborations,
    required_paper_pairs, select_author_papers_with,
};
use tpsim_core::eval::write_labeled_pairs;
use tpsim_core::{AuthorProfile, Graph, Measure, PairSource, Scorer, SelectionOptions};

use crate::args::{read_id_pairs, GraphArgs, OutputArgs, WalkArgs};
use crate::manifest::{self, Manifest, RunFiles};
use crate::UsageError;

#[derive(Debug, Args, Serialize)]
pub struct AuthorsimArgs {
    /// Corpus CSV with columns paper_id, year, authors, labels (lists separated by ';')
    #[arg(long)]
    pub corpus: PathBuf,

    #[command(flatten)]
    pub graph: GraphArgs,

    /// TP, ETP, SP, STP or SPECTRAL
    #[arg(long, default_value = "TP")]
    pub measure: Measure,

    #[command(flatten)]
    pub walk: WalkArgs,

    #[arg(long, default_value_t = 32)]
    pub dims: usize,

    /// Last year of the paper-selection window
    #[arg(long)]
    pub focal_year: i32,

    /// Selection window length in years, including the focal year
    #[arg(long, default_value_t = 5)]
    pub window: i32,

    /// Keep papers in any author position, not just first or last
    #[arg(long)]
    pub all_positions: bool,

    /// Leave out self-pairs from papers both authors share
    #[arg(long)]
    pub exclude_shared: bool,

    /// CSV of author pairs to score (columns a,b or the first two columns)
    #[arg(long, conflicts_with = "collab")]
    pub author_pairs: Option<PathBuf>,

    /// Score future-collaboration positives and matched negatives
    #[arg(long)]
    pub collab: bool,

    /// External collaboration records (a,b,year) instead of corpus co-authorship
    #[arg(long, requires = "collab")]
    pub collaborations: Option<PathBuf>,

    /// Write the labeled collaboration pairs
    #[arg(long, requires = "collab")]
    pub collab_out: Option<PathBuf>,

    /// Write authors without usable papers, one per line with the reason
    #[arg(long)]
    pub insufficient_out: Option<PathBuf>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Serialize)]
struct AuthorScoreRow<'a> {
    author_a: &'a str,
    author_b: &'a str,
    measure: Measure,
    t: Option<usize>,
    value: f64,
    paper_pairs: usize,
}

/// Restricts a profile to papers present in the network.
fn in_network(p: &AuthorProfile, g: &Graph) -> AuthorProfile {
    AuthorProfile {
        paper_ids: p.paper_ids.iter().filter(|id| g.index_of(id).is_some()).cloned().collect(),
        ..p.clone()
    }
}

pub fn run(args: AuthorsimArgs, workers: usize) -> Result<()> {
    let cfg = args.walk.config()?;
    if !args.graph.is_given() {
        bail!(UsageError("authorsim needs the citation graph (--edges or --snapshot)".into()));
    }
    let mut inputs = vec![args.corpus.clone()];
    inputs.extend(args.graph.inputs());
    inputs.extend(args.author_pairs.iter().cloned());
    inputs.extend(args.collaborations.iter().cloned());
    let manifest_path = args.output.manifest_path();
    let mut outputs = vec![args.output.out.clone(), manifest_path.clone()];
    outputs.extend(args.graph.outputs());
    outputs.extend(args.collab_out.iter().cloned());
    outputs.extend(args.insufficient_out.iter().cloned());
    let files = RunFiles::new(inputs, outputs);
    files.check(args.output.force)?;

    let corpus = load_corpus(&args.corpus)?;
    let (g, summary) = args.graph.load()?;
    let sel = SelectionOptions {
        window_years: args.window,
        first_or_last_only: !args.all_positions,
    };
    if sel.window_years < 1 {
        bail!(UsageError("--window must be at least 1".into()));
    }

    let mut insufficient: BTreeMap<String, &'static str> = BTreeMap::new();
    let mut profiles: BTreeMap<String, AuthorProfile> = BTreeMap::new();
    for a in corpus.authors() {
        let p = select_author_papers_with(&corpus, a, args.focal_year, &sel)?;
        if p.is_insufficient() {
            insufficient.insert(a.to_string(), "no qualifying papers in window");
            continue;
        }
        let p = in_network(&p, &g);
        if p.is_insufficient() {
            insufficient.insert(a.to_string(), "no qualifying papers in the cleaned network");
            continue;
        }
        profiles.insert(a.to_string(), p);
    }

    let mut collab_counts = None;
    let requested: Vec<(String, String)> = if let Some(path) = &args.author_pairs {
        read_id_pairs(path)?
    } else if args.collab {
        let collabs = match &args.collaborations {
            Some(path) => {
                let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
                read_collaborations(f).with_context(|| format!("reading {}", path.display()))?
            }
            None => collaborations_from_corpus(&corpus),
        };
        let set = build_collab_pairs(&corpus, &collabs, args.focal_year, args.walk.seed, &sel)?;
        collab_counts = Some((set.positives(), set.negatives()));
        if let Some(path) = &args.collab_out {
            let mut w = manifest::create(path)?;
            write_labeled_pairs(&mut w, &set)?;
            w.flush()?;
        }
        set.pairs.into_iter().map(|p| (p.a, p.b)).collect()
    } else {
        let names: Vec<&String> = profiles.keys().collect();
        names
            .iter()
            .enumerate()
            .flat_map(|(k, a)| names[k + 1..].iter().map(move |b| ((*a).clone(), (*b).clone())))
            .collect()
    };

    for (a, b) in &requested {
        for x in [a, b] {
            if corpus.authored(x).is_none() {
                return Err(tpsim_core::Error::UnknownAuthor(x.clone()).into());
            }
        }
    }
    let (scorable, unscorable): (Vec<_>, Vec<_>) = requested
        .iter()
        .partition(|(a, b)| profiles.contains_key(a) && profiles.contains_key(b));

    let exclude_shared = args.exclude_shared || matches!(args.measure, Measure::Sp | Measure::Stp);
    let profile_pairs: Vec<(&AuthorProfile, &AuthorProfile)> =
        scorable.iter().map(|(a, b)| (&profiles[a], &profiles[b])).collect();
    let mut needed: BTreeSet<(String, String)> = required_paper_pairs(&profile_pairs);
    if exclude_shared {
        needed.retain(|(p, q)| p != q);
    }
    let index_pairs: Vec<(usize, usize)> = needed
        .iter()
        .map(|(p, q)| (g.index_of(p).expect("in network"), g.index_of(q).expect("in network")))
        .collect();
    let scorer = Scorer::new(&g, args.measure, cfg, args.dims)?;
    let values = scorer.score(&index_pairs)?;
    let lookup: HashMap<(&str, &str), f64> = needed
        .iter()
        .zip(&values)
        .map(|((p, q), &v)| ((p.as_str(), q.as_str()), v))
        .collect();

    let t = args.measure.uses_walk_length().then_some(cfg.t);
    let mut out = csv::Writer::from_writer(manifest::create(&args.output.out)?);
    let mut skipped_all_shared = 0;
    for (a, b) in &scorable {
        let (pa, pb) = (&profiles[a], &profiles[b]);
        let sim = |p: &str, q: &str| -> tpsim_core::Result<f64> { Ok(lookup[&(p, q)]) };
        match author_similarity_with(pa, pb, sim, exclude_shared) {
            Ok(value) => {
                let shared = if exclude_shared {
                    pa.paper_ids.iter().filter(|p| pb.paper_ids.contains(p)).count()
                } else {
                    0
                };
                out.serialize(AuthorScoreRow {
                    author_a: a,
                    author_b: b,
                    measure: args.measure,
                    t,
                    value,
                    paper_pairs: pa.paper_ids.len() * pb.paper_ids.len() - shared,
                })?;
            }
            Err(tpsim_core::Error::InsufficientData(_)) => skipped_all_shared += 1,
            Err(e) => return Err(e.into()),
        }
    }
    out.flush()?;

    if let Some(path) = &args.insufficient_out {
        let mut w = csv::Writer::from_writer(manifest::create(path)?);
        w.write_record(["author", "reason"])?;
        for (a, why) in &insufficient {
            w.write_record([a.as_str(), why])?;
        }
        w.flush()?;
    }
    for (a, why) in &insufficient {
        eprintln!("excluded author {a}: {why}");
    }

    let m = Manifest {
        tool: "tpsim",
        version: env!("CARGO_PKG_VERSION"),
        command: "authorsim",
        seed: args.walk.seed,
        inputs: files.digests()?,
        config: super::config_json(&args, workers)?,
        outputs: files.outputs.iter().map(|p| p.display().to_string()).collect(),
        report: json!({
            "graph": summary,
            "authors": corpus.authors().len(),
            "usable_authors": profiles.len(),
            "insufficient_authors": insufficient.keys().collect::<Vec<_>>(),
            "author_pairs_requested": requested.len(),
            "author_pairs_scored": scorable.len() - skipped_all_shared,
            "author_pairs_unscorable": unscorable.len() + skipped_all_shared,
            "paper_pairs_scored": index_pairs.len(),
            "shared_papers_excluded": exclude_shared,
            "collab_positives": collab_counts.map(|c| c.0),
            "collab_negatives": collab_counts.map(|c| c.1),
        }),
    };
    manifest::emit(&m, &manifest_path)
}
