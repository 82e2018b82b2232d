//! Labeled pair sets, AUC with bootstrap intervals, and the diagnostic statistics used to
//! compare measures.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::measure::PairSource;
use crate::score::csv_err;
use crate::seed;

pub const DEFAULT_BOOTSTRAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Collab,
    Coclass,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub a: String,
    pub b: String,
    #[serde(with = "label_format")]
    pub label: bool,
}

mod label_format {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*v as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        let raw = String::deserialize(d)?;
        match raw.trim().to_ascii_lowercase().as_str() {
            "1" | "true" | "positive" | "pos" => Ok(true),
            "0" | "false" | "negative" | "neg" => Ok(false),
            other => Err(serde::de::Error::custom(format!("bad label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPairSet {
    pub pairs: Vec<LabeledPair>,
    pub provenance: Provenance,
}

impl LabeledPairSet {
    /// Rejects repeated unordered pairs, and unbalanced classes for collab/coclass sets.
    pub fn new(pairs: Vec<LabeledPair>, provenance: Provenance) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &pairs {
            let key = if p.a <= p.b { (&p.a, &p.b) } else { (&p.b, &p.a) };
            if !seen.insert(key) {
                return Err(Error::InvalidParameter(format!("duplicate pair ({}, {})", p.a, p.b)));
            }
        }
        let set = LabeledPairSet { pairs, provenance };
        if provenance != Provenance::Synthetic && set.positives() != set.negatives() {
            return Err(Error::InvalidParameter(format!(
                "{} positives vs {} negatives in a balanced set",
                set.positives(),
                set.negatives()
            )));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.pairs.iter().filter(|p| p.label).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.pairs.iter().map(|p| p.label).collect()
    }

    /// Node-index pairs, failing on ids the graph does not contain.
    pub fn resolve(&self, g: &Graph) -> Result<Vec<(usize, usize)>> {
        self.pairs
            .iter()
            .map(|p| Ok((g.require_index(&p.a)?, g.require_index(&p.b)?)))
            .collect()
    }
}

/// CSV with header `a,b,label`; labels are written as `1`/`0`.
pub fn write_labeled_pairs<W: Write>(w: W, set: &LabeledPairSet) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in &set.pairs {
        out.serialize(p).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<pairs>", e))
}

pub fn read_labeled_pairs<R: Read>(r: R, provenance: Provenance) -> Result<LabeledPairSet> {
    let mut rdr = csv::Reader::from_reader(r);
    let pairs = rdr
        .deserialize()
        .map(|row| row.map_err(csv_err))
        .collect::<Result<Vec<LabeledPair>>>()?;
    LabeledPairSet::new(pairs, provenance)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredPairs {
    pub values: Vec<f64>,
    pub labels: Vec<bool>,
    pub zero_flags: Vec<bool>,
}

impl ScoredPairs {
    pub fn new(values: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        let zero_flags = vec![false; values.len()];
        Self::with_zero_flags(values, labels, zero_flags)
    }

    pub fn with_zero_flags(values: Vec<f64>, labels: Vec<bool>, zero_flags: Vec<bool>) -> Result<Self> {
        if values.len() != labels.len() || values.len() != zero_flags.len() {
            return Err(Error::InvalidParameter("values, labels and flags must align".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite score {v}")));
        }
        Ok(ScoredPairs {
            values,
            labels,
            zero_flags,
        })
    }

    pub fn from_classes(pos: &[f64], neg: &[f64]) -> Result<Self> {
        let values = pos.iter().chain(neg).copied().collect();
        let labels = pos.iter().map(|_| true).chain(neg.iter().map(|_| false)).collect();
        Self::new(values, labels)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zero_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.zero_flags.iter().filter(|&&z| z).count() as f64 / self.len() as f64
    }

    pub fn negated(&self) -> ScoredPairs {
        ScoredPairs {
            values: self.values.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    pub fn flipped_labels(&self) -> ScoredPairs {
        ScoredPairs {
            labels: self.labels.iter().map(|l| !l).collect(),
            ..self.clone()
        }
    }
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

fn auc_of(values: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let ranks = average_ranks(values);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Mann-Whitney AUC: probability that a positive outscores a negative, ties counting 1/2.
pub fn auc(scored: &ScoredPairs) -> Result<f64> {
    auc_of(&scored.values, &scored.labels).ok_or(Error::SingleClass)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucEstimate {
    pub auc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicates: usize,
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// AUC plus a 95% percentile bootstrap interval over resampled pairs. Resamples that
/// come out single-class are redrawn.
pub fn auc_with_ci(scored: &ScoredPairs, replicates: usize, seed: u64) -> Result<AucEstimate> {
    let point = auc(scored)?;
    if replicates == 0 {
        return Err(Error::InvalidParameter("bootstrap needs at least one replicate".into()));
    }
    let n = scored.len();
    let mut boots: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed::stream(&[seed, r as u64]);
            let mut values = vec![0.0; n];
            let mut labels = vec![false; n];
            loop {
                for k in 0..n {
                    let pick = rng.random_range(0..n);
                    values[k] = scored.values[pick];
                    labels[k] = scored.labels[pick];
                }
                if let Some(a) = auc_of(&values, &labels) {
                    return a;
                }
            }
        })
        .collect();
    boots.sort_by(f64::total_cmp);
    Ok(AucEstimate {
        auc: point,
        ci_low: quantile(&boots, 0.025),
        ci_high: quantile(&boots, 0.975),
        replicates,
    })
}

/// Natural log of the scores. Zeros go to one sentinel strictly below every finite log
/// value, so ranks are unchanged.
pub fn log_transform(scored: &ScoredPairs) -> Result<ScoredPairs> {
    if let Some(v) = scored.values.iter().find(|&&v| v < 0.0) {
        return Err(Error::InvalidParameter(format!("cannot log-transform negative value {v}")));
    }
    let min_log = scored
        .values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v.ln())
        .fold(f64::INFINITY, f64::min);
    let sentinel = if min_log.is_finite() { min_log - 1.0 } else { -1.0 };
    let values = scored
        .values
        .iter()
        .map(|&v| if v > 0.0 { v.ln() } else { sentinel })
        .collect();
    Ok(ScoredPairs {
        values,
        ..scored.clone()
    })
}

/// Balanced same-discipline / cross-discipline paper pairs. Every discipline anchors the
/// same number of positive and of negative pairs; `sample_size` is rounded down so that
/// the split is exact.
pub fn coclass_pairs(labels: &BTreeMap<String, String>, sample_size: usize, seed: u64) -> Result<LabeledPairSet> {
    let mut members: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (paper, disc) in labels {
        members.entry(disc.as_str()).or_default().push(paper.as_str());
    }
    if members.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "co-classification needs at least two disciplines, found {}",
            members.len()
        )));
    }
    if let Some((d, _)) = members.iter().find(|(_, m)| m.len() < 2) {
        return Err(Error::InsufficientData(format!("discipline {d:?} has fewer than two papers")));
    }
    let disciplines: Vec<&str> = members.keys().copied().collect();
    let per_disc = sample_size / 2 / disciplines.len();
    if per_disc == 0 {
        return Err(Error::InvalidParameter(format!(
            "sample size {sample_size} too small for {} disciplines",
            disciplines.len()
        )));
    }
    let mut rng = seed::stream(&[seed, 0xc0c1]);
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut pairs = Vec::with_capacity(per_disc * disciplines.len() * 2);
    let mut push = |a: &str, b: &str, label: bool, pairs: &mut Vec<LabeledPair>| -> bool {
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        if a == b || !seen.insert(key) {
            return false;
        }
        pairs.push(LabeledPair {
            a: a.to_string(),
            b: b.to_string(),
            label,
        });
        true
    };
    for (di, &disc) in disciplines.iter().enumerate() {
        let own = &members[disc];
        let max_attempts = 50 * per_disc + 1000;
        for label in [true, false] {
            let mut made = 0;
            let mut attempts = 0;
            while made < per_disc {
                attempts += 1;
                if attempts > max_attempts {
                    return Err(Error::InsufficientData(format!(
                        "could not draw {per_disc} distinct {} pairs for discipline {disc:?}",
                        if label { "positive" } else { "negative" }
                    )));
                }
                let a = *own.choose(&mut rng).expect("non-empty");
                let b = if label {
                    *own.choose(&mut rng).expect("non-empty")
                } else {
                    let mut other = rng.random_range(0..disciplines.len() - 1);
                    if other >= di {
                        other += 1;
                    }
                    *members[disciplines[other]].choose(&mut rng).expect("non-empty")
                };
                if push(a, b, label, &mut pairs) {
                    made += 1;
                }
            }
        }
    }
    LabeledPairSet::new(pairs, Provenance::Coclass)
}

/// Mean similarity per discipline pair over `samples_per_cell` random node pairs.
/// `labels[i]` is node `i`'s discipline; unlabeled nodes are ignored.
pub fn discipline_matrix(
    sim: &dyn PairSource,
    labels: &[Option<String>],
    ordering: &[String],
    samples_per_cell: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    let d = ordering.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); d];
    for (node, label) in labels.iter().enumerate() {
        if let Some(l) = label {
            let pos = ordering
                .iter()
                .position(|o| o == l)
                .ok_or_else(|| Error::InvalidParameter(format!("label {l:?} missing from ordering")))?;
            members[pos].push(node);
        }
    }
    if samples_per_cell == 0 {
        return Err(Error::InvalidParameter("samples_per_cell must be positive".into()));
    }
    let mut rng = seed::stream(&[seed, 0xd15c]);
    let mut cells = Vec::new();
    let mut pairs = Vec::new();
    for a in 0..d {
        for b in a..d {
            let ok = if a == b { members[a].len() >= 2 } else { !members[a].is_empty() && !members[b].is_empty() };
            if !ok {
                return Err(Error::InsufficientData(format!(
                    "no pairs for cell ({}, {})",
                    ordering[a], ordering[b]
                )));
            }
            for _ in 0..samples_per_cell {
                let x = *members[a].choose(&mut rng).expect("non-empty");
                let mut y = *members[b].choose(&mut rng).expect("non-empty");
                while a == b && y == x {
                    y = *members[b].choose(&mut rng).expect("non-empty");
                }
                pairs.push((x, y));
            }
            cells.push((a, b));
        }
    }
    let values = sim.score(&pairs)?;
    let mut m = DMatrix::zeros(d, d);
    for (c, &(a, b)) in cells.iter().enumerate() {
        let chunk = &values[c * samples_per_cell..(c + 1) * samples_per_cell];
        let mean = chunk.iter().sum::<f64>() / samples_per_cell as f64;
        m[(a, b)] = mean;
        m[(b, a)] = mean;
    }
    Ok(m)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter("series lengths differ".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("first series"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("second series"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Pearson correlation between `sim(i, j)` and the target degree `k_j`.
pub fn degree_correlation(sim: &dyn PairSource, g: &Graph, pairs: &[(usize, usize)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData("need at least three pairs".into()));
    }
    let values = sim.score(pairs)?;
    let degrees: Vec<f64> = pairs.iter().map(|&(_, j)| g.degree(j) as f64).collect();
    pearson(&values, &degrees).map_err(|e| match e {
        Error::ZeroVariance(_) if values.windows(2).all(|w| w[0] == w[1]) => Error::ZeroVariance("similarity"),
        Error::ZeroVariance(_) => Error::ZeroVariance("degree"),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Degenerate("OLS needs at least two aligned points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("constant x".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        n: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseFit {
    pub split: f64,
    pub low: LinearFit,
    pub high: LinearFit,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Separate least-squares lines for points with `x <= median(x)` and `x > median(x)`.
pub fn piecewise_fit(x: &[f64], y: &[f64]) -> Result<PiecewiseFit> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Degenerate("piecewise fit needs aligned, non-empty series".into()));
    }
    let split = median(x);
    let (mut lx, mut ly, mut hx, mut hy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (&a, &b) in x.iter().zip(y) {
        if a <= split {
            lx.push(a);
            ly.push(b);
        } else {
            hx.push(a);
            hy.push(b);
        }
    }
    if lx.len() < 2 || hx.len() < 2 {
        return Err(Error::Degenerate(format!(
            "{} points below and {} above the median; need two each",
            lx.len(),
            hx.len()
        )));
    }
    Ok(PiecewiseFit {
        split,
        low: ols(&lx, &ly)?,
        high: ols(&hx, &hy)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width bins over `[min, max]` of the finite values; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistBin> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in finite {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| HistBin {
            lo: lo + b as f64 * width,
            hi: lo + (b + 1) as f64 * width,
            count,
        })
        .collect()
}

/// One line of the evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub measure: String,
    pub auc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_pairs: usize,
    pub zero_fraction: f64,
}
