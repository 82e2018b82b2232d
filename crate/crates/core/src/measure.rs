//! Scoring arbitrary node pairs with any of the similarity measures.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{transition_row, WalkConfig};
use crate::graph::Graph;
use crate::paths::ShortestPathDag;
use crate::score::{Measure, PairScore};
use crate::spectral::{cosine_similarity, embed, Embedding};
use crate::walk::estimate_pairs;

/// Anything that can score a batch of node-index pairs.
pub trait PairSource: Sync {
    fn score(&self, pairs: &[(usize, usize)]) -> Result<Vec<f64>>;
}

impl<F> PairSource for F
where
    F: Fn(&[(usize, usize)]) -> Result<Vec<f64>> + Sync,
{
    fn score(&self, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        self(pairs)
    }
}

/// A measure bound to a graph. Spectral scoring builds its embedding once, on creation.
pub struct Scorer<'g> {
    graph: &'g Graph,
    measure: Measure,
    walk: WalkConfig,
    embedding: Option<Embedding>,
}

impl<'g> Scorer<'g> {
    pub fn new(graph: &'g Graph, measure: Measure, walk: WalkConfig, dims: usize) -> Result<Self> {
        walk.validate()?;
        let embedding = match measure {
            Measure::Spectral => Some(embed(graph, &walk, dims)?),
            _ => None,
        };
        Ok(Scorer {
            graph,
            measure,
            walk,
            embedding,
        })
    }

    pub fn with_embedding(graph: &'g Graph, embedding: Embedding) -> Result<Self> {
        if embedding.node_count() != graph.node_count() {
            return Err(Error::InvalidParameter(format!(
                "embedding has {} rows but graph has {} nodes",
                embedding.node_count(),
                graph.node_count()
            )));
        }
        Ok(Scorer {
            graph,
            measure: Measure::Spectral,
            walk: WalkConfig::with_t(embedding.t),
            embedding: Some(embedding),
        })
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn walk(&self) -> &WalkConfig {
        &self.walk
    }

    pub fn embedding(&self) -> Option<&Embedding> {
        self.embedding.as_ref()
    }

    /// Scores in the order of `pairs`. Work is grouped by source so each row, DAG, or
    /// walker batch is computed once.
    pub fn score_pairs(&self, pairs: &[(usize, usize)]) -> Result<Vec<PairScore>> {
        let g = self.graph;
        for &(i, j) in pairs {
            g.check_node(i)?;
            g.check_node(j)?;
        }
        match self.measure {
            Measure::Etp => Ok(estimate_pairs(g, pairs, &self.walk)?
                .into_iter()
                .map(|s| PairScore {
                    source: s.source,
                    target: s.target,
                    measure: Measure::Etp,
                    value: s.value,
                    zero_estimate: s.is_zero_estimate,
                })
                .collect()),
            Measure::Spectral => {
                let e = self.embedding.as_ref().expect("built on construction");
                pairs
                    .iter()
                    .map(|&(i, j)| Ok(PairScore::new(i, j, Measure::Spectral, cosine_similarity(e, i, j)?)))
                    .collect()
            }
            Measure::Tp | Measure::Sp | Measure::Stp => self.score_by_source(pairs),
        }
    }

    fn score_by_source(&self, pairs: &[(usize, usize)]) -> Result<Vec<PairScore>> {
        let g = self.graph;
        let measure = self.measure;
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &(i, _)) in pairs.iter().enumerate() {
            groups.entry(i).or_default().push(k);
        }
        let groups: Vec<(usize, Vec<usize>)> = groups.into_iter().collect();
        let scored: Vec<Vec<(usize, PairScore)>> = groups
            .par_iter()
            .map(|(src, idxs)| -> Result<Vec<(usize, PairScore)>> {
                let value_of: Box<dyn Fn(usize) -> Result<f64>> = match measure {
                    Measure::Tp => {
                        let row = transition_row(g, *src, &self.walk)?;
                        Box::new(move |j| Ok(row.values[j]))
                    }
                    Measure::Sp => {
                        let dag = ShortestPathDag::build(g, *src)?;
                        Box::new(move |j| dag.sp(j).map(|d| d as f64))
                    }
                    _ => {
                        let dag = ShortestPathDag::build(g, *src)?;
                        Box::new(move |j| dag.st(j))
                    }
                };
                idxs.iter()
                    .map(|&k| {
                        let j = pairs[k].1;
                        Ok((k, PairScore::new(*src, j, measure, value_of(j)?)))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut out = vec![None; pairs.len()];
        for (k, s) in scored.into_iter().flatten() {
            out[k] = Some(s);
        }
        Ok(out.into_iter().map(|s| s.expect("every pair scored")).collect())
    }
}

impl PairSource for Scorer<'_> {
    fn score(&self, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
        Ok(self.score_pairs(pairs)?.into_iter().map(|s| s.value).collect())
    }
}

/// Every unordered pair `i < j`, in lexicographic order.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}
