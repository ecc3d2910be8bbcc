#![allow(dead_code)]

use oim_core::rr::SignedSamplePool;
use oim_core::world::combinations;
use oim_core::{Edge, Graph, NodeId, OpinionPartition};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> SmallRng {
    SmallRng::seed_from_u64(seed)
}

/// Random simple digraph on `n` nodes. Each ordered pair is an edge with
/// probability `density`; at most `max_prob` edges get a weight strictly
/// between 0 and 1, the rest weight 1.
pub fn random_graph(r: &mut SmallRng, n: usize, density: f64, max_prob: usize) -> Graph {
    let mut edges = Vec::new();
    let mut prob = 0;
    for u in 0..n as NodeId {
        for v in 0..n as NodeId {
            if u != v && r.random::<f64>() < density {
                let w = if prob < max_prob && r.random::<bool>() {
                    prob += 1;
                    [0.2, 0.35, 0.5, 0.65, 0.8][r.random_range(0..5)]
                } else {
                    1.0
                };
                edges.push(Edge::new(u, v, w));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Labels drawn with probabilities `(pos, neutral)`, the remainder negative.
/// At least one node is positive.
pub fn random_partition(r: &mut SmallRng, n: usize, pos: f64, neutral: f64) -> OpinionPartition {
    let mut signs: Vec<i32> = (0..n)
        .map(|_| {
            let x = r.random::<f64>();
            if x < pos {
                1
            } else if x < pos + neutral {
                0
            } else {
                -1
            }
        })
        .collect();
    if !signs.contains(&1) {
        signs[0] = 1;
    }
    OpinionPartition::from_signs(&signs).unwrap()
}

pub fn random_set(r: &mut SmallRng, n: usize, max_size: usize) -> Vec<NodeId> {
    let size = r.random_range(0..=max_size.min(n));
    let mut all: Vec<NodeId> = (0..n as NodeId).collect();
    for i in 0..size {
        let j = r.random_range(i..n);
        all.swap(i, j);
    }
    all.truncate(size);
    all
}

/// Size-`k` set with the largest net pool coverage, ties to the lexicographically smallest.
pub fn pool_optimum(pool: &SignedSamplePool, k: usize) -> (Vec<NodeId>, i64) {
    let mut best: Option<(Vec<NodeId>, i64)> = None;
    for s in combinations(pool.n(), k) {
        let net = pool.coverage(&s).net();
        if best.as_ref().is_none_or(|(_, b)| net > *b) {
            best = Some((s, net));
        }
    }
    best.unwrap()
}
