//! The `PairScore` record every measure emits, and its CSV form.
//!
//! CSV columns: `source_id,target_id,measure,t,value,zero_estimate`. `t` is empty for
//! measures that do not depend on the walk length (SP, STP). `zero_estimate` is `true`
//! only for ETP rows where no walker reached the target.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "TP")]
    Tp,
    #[serde(rename = "ETP")]
    Etp,
    #[serde(rename = "SP")]
    Sp,
    #[serde(rename = "STP")]
    Stp,
    #[serde(rename = "SPECTRAL")]
    Spectral,
}

impl Measure {
    pub const ALL: [Measure; 5] = [Measure::Tp, Measure::Etp, Measure::Sp, Measure::Stp, Measure::Spectral];

    pub fn tag(self) -> &'static str {
        match self {
            Measure::Tp => "TP",
            Measure::Etp => "ETP",
            Measure::Sp => "SP",
            Measure::Stp => "STP",
            Measure::Spectral => "SPECTRAL",
        }
    }

    /// SP is a distance; every other measure grows with similarity.
    pub fn higher_is_similar(self) -> bool {
        self != Measure::Sp
    }

    /// Probability-valued measures, which are compared on a log scale.
    pub fn is_tp_family(self) -> bool {
        matches!(self, Measure::Tp | Measure::Etp | Measure::Stp)
    }

    pub fn uses_walk_length(self) -> bool {
        matches!(self, Measure::Tp | Measure::Etp | Measure::Spectral)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown measure {s:?} (expected TP, ETP, SP, STP or SPECTRAL)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScore {
    pub source: usize,
    pub target: usize,
    pub measure: Measure,
    pub value: f64,
    pub zero_estimate: bool,
}

impl PairScore {
    pub fn new(source: usize, target: usize, measure: Measure, value: f64) -> Self {
        PairScore {
            source,
            target,
            measure,
            value,
            zero_estimate: false,
        }
    }
}

/// One CSV row, with node indices already resolved to external ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScoreRow {
    pub source_id: String,
    pub target_id: String,
    pub measure: Measure,
    pub t: Option<usize>,
    pub value: f64,
    pub zero_estimate: bool,
}

impl PairScoreRow {
    pub fn from_score(g: &Graph, s: &PairScore, t: usize) -> Self {
        PairScoreRow {
            source_id: g.id(s.source).to_string(),
            target_id: g.id(s.target).to_string(),
            measure: s.measure,
            t: s.measure.uses_walk_length().then_some(t),
            value: s.value,
            zero_estimate: s.zero_estimate,
        }
    }
}

pub fn write_pair_scores<W: Write>(w: W, g: &Graph, scores: &[PairScore], t: usize) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in scores {
        out.serialize(PairScoreRow::from_score(g, s, t)).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::io("<pair scores>", e))
}

pub fn read_pair_scores<R: Read>(r: R) -> Result<Vec<PairScoreRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv>", io),
        other => Error::Parse {
            path: "<csv>".into(),
            line,
            message: format!("{other:?}"),
        },
    }
}
