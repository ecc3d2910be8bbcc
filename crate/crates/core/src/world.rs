//! Exact expectations by enumerating every live-edge world.
//!
//! Edges of weight 0 or 1 are fixed; only the remaining "probabilistic"
//! edges are enumerated, so cost is `2^m` reachability passes for `m` such
//! edges. Worlds are processed in fixed-size chunks whose partial sums are
//! combined in index order, keeping results bit-identical across runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::oic::check_seeds;
use crate::opinion::{Opinion, OpinionPartition};

/// Largest number of probabilistic edges the oracle will enumerate.
pub const MAX_PROBABILISTIC_EDGES: usize = 24;
/// Largest number of candidate seed sets `brute_force_opt` will score.
pub const MAX_SUBSETS: u128 = 1_000_000;

const CHUNK: u64 = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub exact_net: f64,
    pub exact_pos: f64,
    pub exact_neg: f64,
    pub worlds_enumerated: u64,
}

struct Worlds<'g> {
    g: &'g Graph,
    /// Edge ids with weight strictly between 0 and 1.
    random: Vec<usize>,
}

impl<'g> Worlds<'g> {
    fn new(g: &'g Graph) -> Result<Self> {
        let random: Vec<usize> = g
            .edge_weights()
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0 && w < 1.0)
            .map(|(i, _)| i)
            .collect();
        if random.len() > MAX_PROBABILISTIC_EDGES {
            return Err(Error::BudgetExceeded(format!(
                "{} probabilistic edges, limit is {}",
                random.len(),
                MAX_PROBABILISTIC_EDGES
            )));
        }
        Ok(Worlds { g, random })
    }

    fn count(&self) -> u64 {
        1u64 << self.random.len()
    }

    /// Liveness of every edge in world `mask`, and the world's probability.
    fn world(&self, mask: u64, live: &mut [bool]) -> f64 {
        let weights = self.g.edge_weights();
        for (flag, &w) in live.iter_mut().zip(weights) {
            *flag = w >= 1.0;
        }
        let mut p = 1.0;
        for (bit, &e) in self.random.iter().enumerate() {
            let w = weights[e];
            if mask >> bit & 1 == 1 {
                live[e] = true;
                p *= w;
            } else {
                p *= 1.0 - w;
            }
        }
        p
    }

    /// Sums `f(probability, live)` over all worlds, deterministically.
    fn sum<const K: usize>(&self, f: impl Fn(f64, &[bool]) -> [f64; K] + Sync) -> [f64; K] {
        let total = self.count();
        let chunks = total.div_ceil(CHUNK);
        let partials: Vec<[f64; K]> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut live = vec![false; self.g.edge_count()];
                let mut acc = [0.0; K];
                for mask in c * CHUNK..((c + 1) * CHUNK).min(total) {
                    let p = self.world(mask, &mut live);
                    if p == 0.0 {
                        continue;
                    }
                    for (a, v) in acc.iter_mut().zip(f(p, &live)) {
                        *a += v;
                    }
                }
                acc
            })
            .collect();
        partials.into_iter().fold([0.0; K], |mut acc, part| {
            for (a, v) in acc.iter_mut().zip(part) {
                *a += v;
            }
            acc
        })
    }
}

/// Forward reachability from `seeds` over live edges.
fn reach(g: &Graph, live: &[bool], seeds: &[NodeId], seen: &mut Vec<bool>, stack: &mut Vec<NodeId>) {
    seen.clear();
    seen.resize(g.n(), false);
    stack.clear();
    for &s in seeds {
        if !seen[s as usize] {
            seen[s as usize] = true;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for (id, &v) in g.out_edge_ids(u).zip(g.out_neighbors(u)) {
            if live[id] && !seen[v as usize] {
                seen[v as usize] = true;
                stack.push(v);
            }
        }
    }
}

/// Exact positive, negative and net expected spread of `seeds`.
pub fn exact_objective(g: &Graph, part: &OpinionPartition, seeds: &[NodeId]) -> Result<OracleResult> {
    check_seeds(g, seeds)?;
    let worlds = Worlds::new(g)?;
    let [pos, neg] = worlds.sum(|p, live| {
        let mut seen = Vec::new();
        reach(g, live, seeds, &mut seen, &mut Vec::new());
        let (mut a, mut b) = (0u32, 0u32);
        for (u, _) in seen.iter().enumerate().filter(|(_, &s)| s) {
            match part.label(u as NodeId) {
                Opinion::Positive => a += 1,
                Opinion::Negative => b += 1,
                Opinion::Neutral => {}
            }
        }
        [p * a as f64, p * b as f64]
    });
    Ok(OracleResult {
        exact_net: pos - neg,
        exact_pos: pos,
        exact_neg: neg,
        worlds_enumerated: worlds.count(),
    })
}

/// `Pr[seeds activate u]` for every node `u`.
pub fn exact_activation_probs(g: &Graph, seeds: &[NodeId]) -> Result<Vec<f64>> {
    check_seeds(g, seeds)?;
    let worlds = Worlds::new(g)?;
    let n = g.n();
    let total = worlds.count();
    let chunks = total.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut live = vec![false; g.edge_count()];
            let (mut seen, mut stack) = (Vec::new(), Vec::new());
            let mut acc = vec![0.0; n];
            for mask in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let p = worlds.world(mask, &mut live);
                reach(g, &live, seeds, &mut seen, &mut stack);
                for (a, _) in acc.iter_mut().zip(&seen).filter(|(_, &s)| s) {
                    *a += p;
                }
            }
            acc
        })
        .collect();
    let mut probs = partials.into_iter().fold(vec![0.0; n], |mut acc, part| {
        acc.iter_mut().zip(part).for_each(|(a, v)| *a += v);
        acc
    });
    // Summation over worlds can overshoot 1 by an ulp.
    probs.iter_mut().for_each(|p| *p = p.clamp(0.0, 1.0));
    Ok(probs)
}

pub fn exact_activation_prob(g: &Graph, seeds: &[NodeId], u: NodeId) -> Result<f64> {
    if !g.contains(u) {
        return Err(Error::node_out_of_range(u, g.n()));
    }
    Ok(exact_activation_probs(g, seeds)?[u as usize])
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Advances `c` to the next k-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [NodeId], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if (c[i] as usize) < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// All k-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<NodeId>> {
    if k > n {
        return Vec::new();
    }
    let mut c: Vec<NodeId> = (0..k as NodeId).collect();
    let mut out = vec![c.clone()];
    while next_combination(&mut c, n) {
        out.push(c.clone());
    }
    out
}

/// Optimal size-`k` seed set by exhaustive search over all subsets.
///
/// Ties (within `1e-9` relative) resolve to the lexicographically smallest set.
pub fn brute_force_opt(g: &Graph, part: &OpinionPartition, k: usize) -> Result<(Vec<NodeId>, f64)> {
    let n = g.n();
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    let subsets = binomial(n, k);
    if subsets > MAX_SUBSETS {
        return Err(Error::BudgetExceeded(format!(
            "C({n}, {k}) = {subsets} candidate sets, limit is {MAX_SUBSETS}"
        )));
    }
    let worlds = Worlds::new(g)?;
    let candidates = combinations(n, k);
    let signs: Vec<f64> = (0..n as NodeId).map(|u| part.sign(u) as f64).collect();

    // Per world, reach(S) is the union of singleton reaches, so score every
    // candidate from one pass of n singleton searches.
    let words = n.div_ceil(64).max(1);
    let total = worlds.count();
    let chunks = total.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut live = vec![false; g.edge_count()];
            let (mut seen, mut stack) = (Vec::new(), Vec::new());
            let mut singles = vec![0u64; n * words];
            let mut union = vec![0u64; words];
            let mut acc = vec![0.0; candidates.len()];
            for mask in c * CHUNK..((c + 1) * CHUNK).min(total) {
                let p = worlds.world(mask, &mut live);
                for u in 0..n {
                    reach(g, &live, &[u as NodeId], &mut seen, &mut stack);
                    let row = &mut singles[u * words..(u + 1) * words];
                    row.iter_mut().for_each(|w| *w = 0);
                    for (v, _) in seen.iter().enumerate().filter(|(_, &s)| s) {
                        row[v / 64] |= 1 << (v % 64);
                    }
                }
                for (a, set) in acc.iter_mut().zip(&candidates) {
                    union.iter_mut().for_each(|w| *w = 0);
                    for &s in set {
                        let row = &singles[s as usize * words..(s as usize + 1) * words];
                        union.iter_mut().zip(row).for_each(|(w, r)| *w |= r);
                    }
                    let mut net = 0.0;
                    for (wi, &bits) in union.iter().enumerate() {
                        let mut b = bits;
                        while b != 0 {
                            let v = wi * 64 + b.trailing_zeros() as usize;
                            net += signs[v];
                            b &= b - 1;
                        }
                    }
                    *a += p * net;
                }
            }
            acc
        })
        .collect();
    let values = partials.into_iter().fold(vec![0.0; candidates.len()], |mut acc, part| {
        acc.iter_mut().zip(part).for_each(|(a, v)| *a += v);
        acc
    });

    let mut best = 0;
    for i in 1..values.len() {
        let tol = 1e-9 * values[best].abs().max(1.0);
        if values[i] > values[best] + tol {
            best = i;
        }
    }
    Ok((candidates[best].clone(), values[best]))
}
