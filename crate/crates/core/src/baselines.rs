//! Comparison seed selectors: uniform random, opinion-aware degree discount,
//! and opinion-unaware RR greedy.

use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::opinion::OpinionPartition;
use crate::rng::rng_for;
use crate::rr::build_total_pool;
use crate::selector::greedy_im;

/// `k` distinct nodes drawn uniformly without replacement.
pub fn rand_seeds(n: usize, k: usize, rng_seed: u64) -> Result<Vec<NodeId>> {
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    let mut rng = rng_for(rng_seed, 0);
    Ok(sample(&mut rng, n, k).into_iter().map(|i| i as NodeId).collect())
}

/// Discount bookkeeping for one opinion side.
#[derive(Clone, Copy, Debug, Default)]
struct Side {
    d: f64,
    t: f64,
}

impl Side {
    fn discounted(self, p: f64) -> f64 {
        self.d - 2.0 * self.t - (self.d - self.t) * self.t * p
    }
}

#[derive(Clone, Debug)]
pub struct DegDisState {
    chosen: Vec<bool>,
    pos: Vec<Side>,
    neg: Vec<Side>,
    score: Vec<f64>,
    p: f64,
}

impl DegDisState {
    pub fn new(g: &Graph, part: &OpinionPartition) -> Self {
        let n = g.n();
        let mut pos = vec![Side::default(); n];
        let mut neg = vec![Side::default(); n];
        for v in 0..n as NodeId {
            for &u in g.out_neighbors(v) {
                match part.sign(u) {
                    1 => pos[v as usize].d += 1.0,
                    -1 => neg[v as usize].d += 1.0,
                    _ => {}
                }
            }
        }
        let score = pos.iter().zip(&neg).map(|(a, b)| a.d - b.d).collect();
        DegDisState {
            chosen: vec![false; n],
            pos,
            neg,
            score,
            p: g.mean_weight(),
        }
    }

    pub fn score(&self, v: NodeId) -> f64 {
        self.score[v as usize]
    }

    pub fn is_chosen(&self, v: NodeId) -> bool {
        self.chosen[v as usize]
    }

    /// Highest-scoring unchosen node, ties by lowest id.
    pub fn best(&self) -> Option<NodeId> {
        let mut best: Option<usize> = None;
        for v in 0..self.score.len() {
            if !self.chosen[v] && best.is_none_or(|b| self.score[v] > self.score[b]) {
                best = Some(v);
            }
        }
        best.map(|v| v as NodeId)
    }

    /// Marks `v` chosen. Each unchosen out-neighbor counts one more chosen
    /// in-neighbor on `v`'s opinion side and is rescored.
    pub fn choose(&mut self, g: &Graph, part: &OpinionPartition, v: NodeId) {
        self.chosen[v as usize] = true;
        let s = part.sign(v);
        if s == 0 {
            return;
        }
        for &u in g.out_neighbors(v) {
            let u = u as usize;
            if self.chosen[u] {
                continue;
            }
            if s > 0 {
                self.pos[u].t += 1.0;
            } else {
                self.neg[u].t += 1.0;
            }
            self.score[u] = self.pos[u].discounted(self.p) - self.neg[u].discounted(self.p);
        }
    }
}

pub fn degdis_opinion(g: &Graph, part: &OpinionPartition, k: usize) -> Result<Vec<NodeId>> {
    let n = g.n();
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    if part.len() != n {
        return Err(Error::InvalidParameter(format!(
            "partition covers {} nodes, graph has {n}",
            part.len()
        )));
    }
    let mut state = DegDisState::new(g, part);
    let mut seeds = Vec::with_capacity(k);
    while seeds.len() < k {
        let Some(v) = state.best() else { break };
        state.choose(g, part, v);
        seeds.push(v);
    }
    Ok(seeds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    Rand,
    Degdis,
    Im,
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rand" => Ok(Baseline::Rand),
            "degdis" => Ok(Baseline::Degdis),
            "im" => Ok(Baseline::Im),
            _ => Err(Error::UnknownAlgorithm(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BaselineInputs<'a> {
    pub graph: &'a Graph,
    pub partition: &'a OpinionPartition,
    pub k: usize,
    /// Pool size for `im`.
    pub samples: usize,
    pub seed: u64,
}

pub fn run_baseline(name: &str, inputs: &BaselineInputs<'_>) -> Result<Vec<NodeId>> {
    let g = inputs.graph;
    match name.parse::<Baseline>()? {
        Baseline::Rand => rand_seeds(g.n(), inputs.k, inputs.seed),
        Baseline::Degdis => degdis_opinion(g, inputs.partition, inputs.k),
        Baseline::Im => {
            if inputs.k > g.n() {
                return Err(Error::KExceedsN { k: inputs.k, n: g.n() });
            }
            greedy_im(&build_total_pool(g, inputs.samples, inputs.seed)?, inputs.k)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::arb_graph;
    use crate::graph::Edge;
    use proptest::prelude::*;

    #[test]
    fn rand_examples() {
        let mut all = rand_seeds(6, 6, 1).unwrap();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4, 5]);
        assert!(rand_seeds(6, 0, 1).unwrap().is_empty());
        assert_eq!(rand_seeds(100, 10, 9).unwrap(), rand_seeds(100, 10, 9).unwrap());
        assert!(matches!(rand_seeds(3, 4, 0), Err(Error::KExceedsN { .. })));
    }

    #[test]
    fn degdis_star_tie() {
        // c = 0 -> p1 = 1, p2 = 2, n1 = 3; x = 4 -> p3 = 5
        let g = Graph::new(
            6,
            vec![Edge::new(0, 1, 0.1), Edge::new(0, 2, 0.1), Edge::new(0, 3, 0.1), Edge::new(4, 5, 0.1)],
        )
        .unwrap();
        let part = OpinionPartition::from_signs(&[0, 1, 1, -1, 0, 1]).unwrap();
        let s = DegDisState::new(&g, &part);
        assert_eq!((s.score(0), s.score(4)), (1.0, 1.0));
        assert_eq!(degdis_opinion(&g, &part, 1).unwrap(), vec![0]);
    }

    #[test]
    fn degdis_all_negative_neighbors() {
        let g = Graph::new(3, vec![Edge::new(0, 1, 0.5), Edge::new(0, 2, 0.5), Edge::new(1, 2, 0.5)]).unwrap();
        let part = OpinionPartition::from_signs(&[-1, -1, -1]).unwrap();
        let s = DegDisState::new(&g, &part);
        assert!((0..3).all(|v| s.score(v) <= 0.0));
        assert_eq!(degdis_opinion(&g, &part, 3).unwrap(), vec![2, 1, 0]);
    }

    #[test]
    fn degdis_edgeless() {
        let g = Graph::empty(5).unwrap();
        let part = OpinionPartition::from_signs(&[1, -1, 0, 1, -1]).unwrap();
        assert_eq!(degdis_opinion(&g, &part, 3).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn dispatch() {
        let g = Graph::new(4, vec![Edge::new(0, 1, 1.0), Edge::new(0, 2, 1.0), Edge::new(2, 3, 1.0)]).unwrap();
        let part = OpinionPartition::from_signs(&[1, -1, 1, 0]).unwrap();
        let inp = BaselineInputs {
            graph: &g,
            partition: &part,
            k: 2,
            samples: 500,
            seed: 4,
        };
        assert_eq!(run_baseline("rand", &inp).unwrap(), rand_seeds(4, 2, 4).unwrap());
        assert_eq!(run_baseline("degdis", &inp).unwrap(), degdis_opinion(&g, &part, 2).unwrap());
        assert_eq!(
            run_baseline("im", &inp).unwrap(),
            greedy_im(&build_total_pool(&g, 500, 4).unwrap(), 2).unwrap()
        );
        assert!(matches!(run_baseline("imm", &inp), Err(Error::UnknownAlgorithm(_))));
    }

    /// Chen et al.'s single-sided degree discount over out-degrees.
    fn classic_degree_discount(g: &Graph, k: usize, p: f64) -> Vec<NodeId> {
        let n = g.n();
        let d: Vec<f64> = (0..n as NodeId).map(|v| g.out_degree(v) as f64).collect();
        let mut t = vec![0.0; n];
        let mut dd = d.clone();
        let mut chosen = vec![false; n];
        let mut out = Vec::new();
        for _ in 0..k {
            let v = (0..n)
                .filter(|&v| !chosen[v])
                .fold(None, |b: Option<usize>, v| match b {
                    Some(b) if dd[b] >= dd[v] => Some(b),
                    _ => Some(v),
                })
                .unwrap();
            chosen[v] = true;
            out.push(v as NodeId);
            for &u in g.out_neighbors(v as NodeId) {
                let u = u as usize;
                if !chosen[u] {
                    t[u] += 1.0;
                    dd[u] = d[u] - 2.0 * t[u] - (d[u] - t[u]) * t[u] * p;
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn baselines_return_distinct_nodes(g in arb_graph(12), k in 0usize..12, seed in any::<u64>()) {
            let k = k.min(g.n());
            let signs: Vec<i32> = (0..g.n()).map(|v| [1, 0, -1][v % 3]).collect();
            let part = OpinionPartition::from_signs(&signs).unwrap();
            let inp = BaselineInputs { graph: &g, partition: &part, k, samples: 50, seed };
            for name in ["rand", "degdis", "im"] {
                let s = run_baseline(name, &inp).unwrap();
                let mut d = s.clone();
                d.sort_unstable();
                d.dedup();
                prop_assert_eq!(s.len(), k);
                prop_assert_eq!(d.len(), k);
                prop_assert!(s.iter().all(|&v| (v as usize) < g.n()));
            }
        }

        #[test]
        fn all_positive_reduces_to_degree_discount(g in arb_graph(12), k in 0usize..12, w in 0.05f64..1.0) {
            let g = g.reweighted(|_| Ok(w)).unwrap();
            let k = k.min(g.n());
            let part = OpinionPartition::from_signs(&vec![1; g.n()]).unwrap();
            prop_assert_eq!(degdis_opinion(&g, &part, k).unwrap(), classic_degree_discount(&g, k, g.mean_weight()));
        }
    }
}
