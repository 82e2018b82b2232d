//! Brute-force reference computations and graph generators for tests. Nothing here
//! calls into the propagation, DAG, or sampling code it is used to check.
#![allow(dead_code)]

use std::collections::VecDeque;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tpsim_core::Graph;

/// `(1/t) * sum over every walk i -> j of length 1..=t of the product of 1/k_v over all
/// nodes on the walk, both ends included`.
pub fn enumerate_tp(g: &Graph, i: usize, j: usize, t: usize) -> f64 {
    fn walk(g: &Graph, at: usize, target: usize, steps_left: usize, weight: f64, acc: &mut f64) {
        for &v in g.neighbors(at) {
            let v = v as usize;
            let w = weight / g.degree(v) as f64;
            if v == target {
                *acc += w;
            }
            if steps_left > 1 {
                walk(g, v, target, steps_left - 1, w, acc);
            }
        }
    }
    let mut acc = 0.0;
    walk(g, i, j, t, 1.0 / g.degree(i) as f64, &mut acc);
    acc / t as f64
}

/// Plain BFS distance; `None` when unreachable.
pub fn bfs_distance(g: &Graph, i: usize, j: usize) -> Option<usize> {
    let mut seen = vec![false; g.node_count()];
    let mut frontier = VecDeque::from([(i, 0usize)]);
    seen[i] = true;
    while let Some((u, d)) = frontier.pop_front() {
        if u == j {
            return Some(d);
        }
        for &v in g.neighbors(u) {
            let v = v as usize;
            if !seen[v] {
                seen[v] = true;
                frontier.push_back((v, d + 1));
            }
        }
    }
    None
}

/// Enumerates every simple path of length `bfs_distance(i, j)` by depth-first search and
/// returns `(path count, mean over paths of the product of 1/k_v, all nodes included)`.
pub fn enumerate_shortest_paths(g: &Graph, i: usize, j: usize) -> (u64, f64) {
    let d = bfs_distance(g, i, j).expect("connected pair");
    fn dfs(g: &Graph, at: usize, target: usize, left: usize, w: f64, on: &mut Vec<bool>, out: &mut Vec<f64>) {
        if left == 0 {
            if at == target {
                out.push(w);
            }
            return;
        }
        for &v in g.neighbors(at) {
            let v = v as usize;
            if on[v] {
                continue;
            }
            on[v] = true;
            dfs(g, v, target, left - 1, w / g.degree(v) as f64, on, out);
            on[v] = false;
        }
    }
    let mut on = vec![false; g.node_count()];
    on[i] = true;
    let mut products = Vec::new();
    dfs(g, i, j, d, 1.0 / g.degree(i) as f64, &mut on, &mut products);
    let count = products.len() as u64;
    (count, products.iter().sum::<f64>() / count as f64)
}

/// Random spanning tree plus Bernoulli(`extra`) chords. Always connected.
pub fn random_connected(n: usize, extra: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < extra {
                edges.push((a, b));
            }
        }
    }
    Graph::from_index_edges(n, edges).unwrap()
}

/// Connected and guaranteed to contain a triangle, so random walks are aperiodic.
pub fn random_connected_nonbipartite(n: usize, extra: f64, seed: u64) -> Graph {
    assert!(n >= 3);
    let base = random_connected(n, extra, seed);
    let mut edges: Vec<(usize, usize)> = base.edges().collect();
    edges.extend([(0, 1), (1, 2), (0, 2)]);
    Graph::from_index_edges(n, edges).unwrap()
}

pub fn connected_graph(nodes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Graph> {
    (nodes, 0.0f64..0.6, any::<u64>()).prop_map(|(n, p, seed)| random_connected(n, p, seed))
}

/// Mann-Whitney AUC by comparing every positive with every negative.
pub fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &p in pos {
        for &q in neg {
            if p > q {
                wins += 1.0;
            } else if p == q {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}
