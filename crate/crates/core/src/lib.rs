//! Random-walk transition probability similarity for citation networks.
//!
//! Nodes are papers, edges are undirected citations. The crate scores node pairs with
//! exact transition probabilities, a Monte Carlo estimator, shortest-path measures, and
//! a spectral embedding, then evaluates those scores against labeled pairs.

extern crate self as tpsim_core;

pub mod author;
pub mod error;
pub mod eval;
pub mod exact;
pub mod graph;
pub mod measure;
pub mod paths;
pub mod sbm;
pub mod score;
pub mod seed;
pub mod spectral;
pub mod walk;

#[cfg(test)]
#[path = "../tests/common/oracles.rs"]
mod testing;

pub use author::{AuthorCorpus, AuthorProfile, Collaboration, PaperRecord, Position, SelectionOptions};
pub use error::{Error, ErrorKind, Result};
pub use eval::{AucEstimate, LabeledPair, LabeledPairSet, Provenance, ScoredPairs};
pub use exact::{TpRow, WalkConfig};
pub use graph::{CleanOptions, EdgeList, Graph, LoadOptions};
pub use measure::{PairSource, Scorer};
pub use paths::ShortestPathDag;
pub use sbm::{SbmGraph, SbmSpec};
pub use score::{Measure, PairScore};
pub use spectral::{EmbedOptions, Embedding};
pub use walk::{EtScore, VisitCounts};
