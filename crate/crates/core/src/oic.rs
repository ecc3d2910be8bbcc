//! Forward Monte Carlo simulation of the opinion-aware independent cascade.
//!
//! Activated nodes take their own fixed opinion label, so a single run is an
//! ordinary IC cascade whose activated set is then scored by label.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::opinion::{Opinion, OpinionPartition};
use crate::rng::rng_for;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CascadeOutcome {
    /// Activated nodes, ascending.
    pub activated: Vec<NodeId>,
    pub pos_count: usize,
    pub neg_count: usize,
    pub net: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadEstimate {
    pub mean_pos: f64,
    pub mean_neg: f64,
    pub mean_net: f64,
    pub std_err_net: f64,
    pub sims: u64,
}

pub(crate) fn check_seeds(g: &Graph, seeds: &[NodeId]) -> Result<()> {
    match seeds.iter().find(|&&s| !g.contains(s)) {
        Some(&s) => Err(Error::node_out_of_range(s, g.n())),
        None => Ok(()),
    }
}

/// Reusable per-thread cascade state.
struct Cascade {
    stamp: Vec<u32>,
    epoch: u32,
    frontier: Vec<NodeId>,
    next: Vec<NodeId>,
    activated: Vec<NodeId>,
}

impl Cascade {
    fn new(n: usize) -> Self {
        Cascade {
            stamp: vec![0; n],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
            activated: Vec::new(),
        }
    }

    /// Runs one cascade; the activated set is left in `self.activated`.
    ///
    /// Each round visits frontier nodes in ascending id and their out-edges in
    /// ascending target id, drawing once per edge into a still-inactive node.
    fn run<R: Rng>(&mut self, g: &Graph, seeds: &[NodeId], rng: &mut R) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;
        self.activated.clear();
        self.frontier.clear();
        for &s in seeds {
            if self.stamp[s as usize] != epoch {
                self.stamp[s as usize] = epoch;
                self.frontier.push(s);
                self.activated.push(s);
            }
        }
        while !self.frontier.is_empty() {
            self.frontier.sort_unstable();
            self.next.clear();
            for &u in &self.frontier {
                for (&v, &w) in g.out_neighbors(u).iter().zip(g.out_weights(u)) {
                    if self.stamp[v as usize] == epoch {
                        continue;
                    }
                    if rng.random::<f64>() < w {
                        self.stamp[v as usize] = epoch;
                        self.next.push(v);
                        self.activated.push(v);
                    }
                }
            }
            std::mem::swap(&mut self.frontier, &mut self.next);
        }
    }

    fn counts(&self, part: &OpinionPartition) -> (usize, usize) {
        self.activated.iter().fold((0, 0), |(p, q), &u| match part.label(u) {
            Opinion::Positive => (p + 1, q),
            Opinion::Negative => (p, q + 1),
            Opinion::Neutral => (p, q),
        })
    }
}

/// One cascade from `seeds`, reproducible from `rng_seed`.
pub fn simulate_once(
    g: &Graph,
    part: &OpinionPartition,
    seeds: &[NodeId],
    rng_seed: u64,
) -> Result<CascadeOutcome> {
    check_seeds(g, seeds)?;
    let mut c = Cascade::new(g.n());
    c.run(g, seeds, &mut rng_for(rng_seed, 0));
    let (pos_count, neg_count) = c.counts(part);
    let mut activated = std::mem::take(&mut c.activated);
    activated.sort_unstable();
    Ok(CascadeOutcome {
        activated,
        pos_count,
        neg_count,
        net: pos_count as i64 - neg_count as i64,
    })
}

#[derive(Clone, Copy, Default)]
struct Tally {
    pos: u64,
    neg: u64,
    net_sq: u128,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            pos: self.pos + o.pos,
            neg: self.neg + o.neg,
            net_sq: self.net_sq + o.net_sq,
        }
    }
}

/// Mean positive, negative and net spread over `sims` independent cascades.
///
/// Run `i` is seeded from `(master_seed, i)`; the integer tallies make the
/// result independent of thread scheduling.
pub fn evaluate(
    g: &Graph,
    part: &OpinionPartition,
    seeds: &[NodeId],
    sims: u64,
    master_seed: u64,
) -> Result<SpreadEstimate> {
    if sims == 0 {
        return Err(Error::InvalidParameter("sims must be at least 1".into()));
    }
    check_seeds(g, seeds)?;
    let t = (0..sims)
        .into_par_iter()
        .fold(
            || (Cascade::new(g.n()), Tally::default()),
            |(mut c, t), i| {
                c.run(g, seeds, &mut rng_for(master_seed, i));
                let (p, q) = c.counts(part);
                let net = p as i128 - q as i128;
                let t = t.merge(Tally {
                    pos: p as u64,
                    neg: q as u64,
                    net_sq: (net * net) as u128,
                });
                (c, t)
            },
        )
        .map(|(_, t)| t)
        .reduce(Tally::default, Tally::merge);

    let s = sims as f64;
    let mean_pos = t.pos as f64 / s;
    let mean_neg = t.neg as f64 / s;
    let net_sum = t.pos as f64 - t.neg as f64;
    let mean_net = net_sum / s;
    let std_err_net = if sims > 1 {
        let var = ((t.net_sq as f64 - net_sum * net_sum / s) / (s - 1.0)).max(0.0);
        (var / s).sqrt()
    } else {
        0.0
    };
    Ok(SpreadEstimate {
        mean_pos,
        mean_neg,
        mean_net,
        std_err_net,
        sims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::Edge;

    fn chain(w: f64) -> (Graph, OpinionPartition) {
        let g = Graph::new(2, vec![Edge::new(0, 1, w)]).unwrap();
        let p = OpinionPartition::from_signs(&[1, -1]).unwrap();
        (g, p)
    }

    #[test]
    fn deterministic_chain() {
        let (g, p) = chain(1.0);
        let o = simulate_once(&g, &p, &[0], 7).unwrap();
        assert_eq!(o.activated, vec![0, 1]);
        assert_eq!(o.net, 0);
        let e = evaluate(&g, &p, &[0], 50, 3).unwrap();
        assert_eq!(e.mean_net, 0.0);
        assert_eq!(e.std_err_net, 0.0);
    }

    #[test]
    fn isolated_positive_seed() {
        let g = Graph::empty(1).unwrap();
        let p = OpinionPartition::from_signs(&[1]).unwrap();
        assert_eq!(simulate_once(&g, &p, &[0], 0).unwrap().net, 1);
    }

    #[test]
    fn half_edge_outcome_space() {
        let (g, p) = chain(0.5);
        let mut seen = std::collections::BTreeSet::new();
        for seed in 0..200 {
            seen.insert(simulate_once(&g, &p, &[0], seed).unwrap().net);
        }
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn half_edge_expectation() {
        // Exact value: 1 - 0.5 = 0.5.
        let (g, p) = chain(0.5);
        let e = evaluate(&g, &p, &[0], 100_000, 11).unwrap();
        assert!((e.mean_net - 0.5).abs() <= 3.0 * e.std_err_net, "{e:?}");
        assert_eq!(e.mean_net, e.mean_pos - e.mean_neg);
    }

    #[test]
    fn fixture_a_expectation() {
        // Two worlds for edge 1->3 (0-based 0->2): net 1 when live, 0 when dead.
        let (g, p) = fixtures::fixture_a();
        let e = evaluate(&g, &p, &[0], 100_000, 5).unwrap();
        assert!((e.mean_net - 0.5).abs() <= 3.0 * e.std_err_net, "{e:?}");
    }

    #[test]
    fn evaluate_is_deterministic_and_validates() {
        let (g, p) = fixtures::fixture_a();
        let a = evaluate(&g, &p, &[0, 3], 1000, 99).unwrap();
        let b = evaluate(&g, &p, &[0, 3], 1000, 99).unwrap();
        assert_eq!(a, b);
        assert!(evaluate(&g, &p, &[0], 0, 1).is_err());
        assert!(matches!(
            simulate_once(&g, &p, &[9], 1),
            Err(Error::NodeOutOfRange { node: 9, .. })
        ));
        let empty = evaluate(&g, &p, &[], 10, 1).unwrap();
        assert_eq!((empty.mean_pos, empty.mean_neg, empty.mean_net), (0.0, 0.0, 0.0));
    }

    #[test]
    fn neutral_seed_counts_as_active_but_scores_zero() {
        let (g, p) = fixtures::fixture_a();
        let o = simulate_once(&g, &p, &[3], 1).unwrap();
        assert_eq!(o.activated, vec![3]);
        assert_eq!(o.net, 0);
    }

    #[test]
    fn negative_sink_never_helps() {
        let (g, p) = fixtures::fixture_a();
        // Node 1 is negative with no out-edges: adding it lowers net by exactly one
        // in every run unless it was already reached.
        for seed in 0..100 {
            let base = simulate_once(&g, &p, &[2], seed).unwrap();
            let with = simulate_once(&g, &p, &[2, 1], seed).unwrap();
            assert!(with.net <= base.net);
        }
        assert_eq!(simulate_once(&g, &p, &[1], 0).unwrap().net, -1);
    }

    #[test]
    fn unit_weights_match_reachability() {
        let g = Graph::new(
            5,
            vec![Edge::new(0, 1, 1.0), Edge::new(1, 2, 1.0), Edge::new(3, 4, 1.0), Edge::new(2, 0, 1.0)],
        )
        .unwrap();
        let p = OpinionPartition::from_signs(&[1, -1, 1, 1, -1]).unwrap();
        let o = simulate_once(&g, &p, &[1], 3).unwrap();
        assert_eq!(o.activated, vec![0, 1, 2]);
        assert_eq!(evaluate(&g, &p, &[1], 20, 0).unwrap().mean_net, 1.0);
    }
}
