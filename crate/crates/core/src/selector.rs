//! Sandwich greedy seed selection over a signed sample pool.
//!
//! The net objective `sigma = sigma+ - sigma-` is neither submodular nor
//! supermodular. Both halves are coverage functions, so each has a modular
//! upper bound (sum of singleton values) and a modular lower bound (gains
//! along a fixed permutation). Combining them gives
//!
//! * `upper(S) = sum singleton_pos - sum chain_neg >= sigma(S)`
//! * `lower(S) = sum chain_pos - sum singleton_neg <= sigma(S)`
//!
//! Greedy runs on `sigma`, `upper` and `lower`, and the best of the three
//! chains by `sigma` is returned. All arithmetic is on integer coverage
//! counts, so comparisons are exact; values are scaled only when reported.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::rr::{Coverage, SignedSamplePool};

#[derive(Clone, Debug, PartialEq)]
pub struct BoundTables {
    singleton_pos: Vec<u64>,
    singleton_neg: Vec<u64>,
    chain_pos: Vec<u64>,
    chain_neg: Vec<u64>,
    perm_pos: Vec<NodeId>,
    perm_neg: Vec<NodeId>,
    scale_num: f64,
    scale_den: f64,
}

/// Nodes ordered by descending `key`, ties by ascending id.
fn order_by_desc(key: &[u64]) -> Vec<NodeId> {
    let mut perm: Vec<NodeId> = (0..key.len() as NodeId).collect();
    perm.sort_by(|&a, &b| key[b as usize].cmp(&key[a as usize]).then(a.cmp(&b)));
    perm
}

/// Gains of each node along `perm`, counting only samples with sign `sign`.
fn chain_sweep(pool: &SignedSamplePool, perm: &[NodeId], sign: i8) -> Vec<u64> {
    let mut covered = vec![false; pool.len()];
    let mut gains = vec![0u64; pool.n()];
    for &v in perm {
        let mut g = 0;
        for &i in pool.containing(v) {
            let i = i as usize;
            if pool.sign(i) == sign && !covered[i] {
                covered[i] = true;
                g += 1;
            }
        }
        gains[v as usize] = g;
    }
    gains
}

pub fn build_bound_tables(pool: &SignedSamplePool) -> BoundTables {
    let n = pool.n();
    let mut singleton_pos = vec![0u64; n];
    let mut singleton_neg = vec![0u64; n];
    for v in 0..n {
        for &i in pool.containing(v as NodeId) {
            if pool.sign(i as usize) > 0 {
                singleton_pos[v] += 1;
            } else {
                singleton_neg[v] += 1;
            }
        }
    }
    let perm_pos = order_by_desc(&singleton_pos);
    let perm_neg = order_by_desc(&singleton_neg);
    let chain_pos = chain_sweep(pool, &perm_pos, 1);
    let chain_neg = chain_sweep(pool, &perm_neg, -1);
    BoundTables {
        singleton_pos,
        singleton_neg,
        chain_pos,
        chain_neg,
        perm_pos,
        perm_neg,
        scale_num: pool.scale_parts().0,
        scale_den: pool.scale_parts().1,
    }
}

impl BoundTables {
    pub fn n(&self) -> usize {
        self.singleton_pos.len()
    }

    fn scaled(&self, c: i64) -> f64 {
        c as f64 * self.scale_num / self.scale_den
    }

    pub fn singleton_pos_count(&self, v: NodeId) -> u64 {
        self.singleton_pos[v as usize]
    }

    pub fn singleton_neg_count(&self, v: NodeId) -> u64 {
        self.singleton_neg[v as usize]
    }

    pub fn chain_pos_count(&self, v: NodeId) -> u64 {
        self.chain_pos[v as usize]
    }

    pub fn chain_neg_count(&self, v: NodeId) -> u64 {
        self.chain_neg[v as usize]
    }

    pub fn singleton_pos(&self, v: NodeId) -> f64 {
        self.scaled(self.singleton_pos[v as usize] as i64)
    }

    pub fn singleton_neg(&self, v: NodeId) -> f64 {
        self.scaled(self.singleton_neg[v as usize] as i64)
    }

    pub fn chain_pos(&self, v: NodeId) -> f64 {
        self.scaled(self.chain_pos[v as usize] as i64)
    }

    pub fn chain_neg(&self, v: NodeId) -> f64 {
        self.scaled(self.chain_neg[v as usize] as i64)
    }

    pub fn perm_pos(&self) -> &[NodeId] {
        &self.perm_pos
    }

    pub fn perm_neg(&self) -> &[NodeId] {
        &self.perm_neg
    }

    /// Per-node value of the modular upper bound.
    pub fn upper_value_count(&self, v: NodeId) -> i64 {
        self.singleton_pos[v as usize] as i64 - self.chain_neg[v as usize] as i64
    }

    /// Per-node value of the modular lower bound.
    pub fn lower_value_count(&self, v: NodeId) -> i64 {
        self.chain_pos[v as usize] as i64 - self.singleton_neg[v as usize] as i64
    }

    pub fn upper_count(&self, set: &[NodeId]) -> i64 {
        set.iter().map(|&v| self.upper_value_count(v)).sum()
    }

    pub fn lower_count(&self, set: &[NodeId]) -> i64 {
        set.iter().map(|&v| self.lower_value_count(v)).sum()
    }

    pub fn upper_bound(&self, set: &[NodeId]) -> f64 {
        self.scaled(self.upper_count(set))
    }

    pub fn lower_bound(&self, set: &[NodeId]) -> f64 {
        self.scaled(self.lower_count(set))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SandwichOptions {
    /// Rebuild the bounds around the current chain each round.
    pub adaptive_bounds: bool,
    /// Return the best prefix of any chain rather than a full chain.
    pub best_prefix: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chain {
    Mid,
    Upper,
    Lower,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SandwichResult {
    pub chain_mid: Vec<NodeId>,
    /// Pool marginal gain of each middle-chain pick at the time it was made.
    pub mid_gains: Vec<f64>,
    pub chain_upper: Vec<NodeId>,
    pub chain_lower: Vec<NodeId>,
    pub coverage_mid: Coverage,
    pub coverage_upper: Coverage,
    pub coverage_lower: Coverage,
    pub sigma_mid: f64,
    pub sigma_upper: f64,
    pub sigma_lower: f64,
    pub returned: Vec<NodeId>,
    pub returned_from: Chain,
    pub sigma_returned: f64,
}

impl SandwichResult {
    pub fn chain(&self, which: Chain) -> &[NodeId] {
        match which {
            Chain::Mid => &self.chain_mid,
            Chain::Upper => &self.chain_upper,
            Chain::Lower => &self.chain_lower,
        }
    }
}

/// Index of the largest entry among unchosen nodes, ties by lowest id.
fn argmax_unchosen(values: &[i64], chosen: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (v, &x) in values.iter().enumerate() {
        if chosen[v] {
            continue;
        }
        if best.is_none_or(|b| x > values[b]) {
            best = Some(v);
        }
    }
    best
}

/// Greedy on signed pool coverage. `gain` starts at each node's signed
/// singleton count and is kept equal to its marginal count given the chosen
/// prefix. Returns the chain and the count gained at each step.
fn greedy_chain(pool: &SignedSamplePool, k: usize) -> (Vec<NodeId>, Vec<i64>) {
    let n = pool.n();
    let mut gain = vec![0i64; n];
    for (v, g) in gain.iter_mut().enumerate() {
        *g = pool
            .containing(v as NodeId)
            .iter()
            .map(|&i| pool.sign(i as usize) as i64)
            .sum();
    }
    let mut chosen = vec![false; n];
    let mut covered = vec![false; pool.len()];
    let mut chain = Vec::with_capacity(k);
    let mut gains = Vec::with_capacity(k);
    for _ in 0..k {
        let Some(v) = argmax_unchosen(&gain, &chosen) else { break };
        chosen[v] = true;
        chain.push(v as NodeId);
        gains.push(gain[v]);
        for &i in pool.containing(v as NodeId) {
            let i = i as usize;
            if !std::mem::replace(&mut covered[i], true) {
                let s = pool.sign(i) as i64;
                for &u in pool.sample(i).members {
                    gain[u as usize] -= s;
                }
            }
        }
    }
    (chain, gains)
}

/// Top-`k` nodes by a modular value, ties by lowest id.
fn top_k(k: usize, n: usize, value: impl Fn(NodeId) -> i64) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    order.sort_by(|&a, &b| value(b).cmp(&value(a)).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Greedy where each round's gain is `fixed(u) + sign * marginal(u)` and the
/// marginal counts samples of sign `sign` not yet covered by the chain.
fn adaptive_chain(pool: &SignedSamplePool, k: usize, fixed: impl Fn(NodeId) -> i64, sign: i8) -> Vec<NodeId> {
    let n = pool.n();
    let mut marginal = vec![0i64; n];
    for (v, m) in marginal.iter_mut().enumerate() {
        *m = pool
            .containing(v as NodeId)
            .iter()
            .filter(|&&i| pool.sign(i as usize) == sign)
            .count() as i64;
    }
    let mut chosen = vec![false; n];
    let mut covered = vec![false; pool.len()];
    let mut chain = Vec::with_capacity(k);
    let mut value = vec![0i64; n];
    for _ in 0..k {
        for v in 0..n {
            value[v] = fixed(v as NodeId) + sign as i64 * marginal[v];
        }
        let Some(v) = argmax_unchosen(&value, &chosen) else { break };
        chosen[v] = true;
        chain.push(v as NodeId);
        for &i in pool.containing(v as NodeId) {
            let i = i as usize;
            if pool.sign(i) == sign && !std::mem::replace(&mut covered[i], true) {
                for &u in pool.sample(i).members {
                    marginal[u as usize] -= 1;
                }
            }
        }
    }
    chain
}

pub fn sandwich_greedy(
    pool: &SignedSamplePool,
    k: usize,
    tables: &BoundTables,
    opts: SandwichOptions,
) -> Result<SandwichResult> {
    let n = pool.n();
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    let (chain_mid, mid_counts) = greedy_chain(pool, k);
    let (chain_upper, chain_lower) = if opts.adaptive_bounds {
        (
            adaptive_chain(pool, k, |v| tables.singleton_pos_count(v) as i64, -1),
            adaptive_chain(pool, k, |v| -(tables.singleton_neg_count(v) as i64), 1),
        )
    } else {
        (
            top_k(k, n, |v| tables.upper_value_count(v)),
            top_k(k, n, |v| tables.lower_value_count(v)),
        )
    };
    let coverage_mid = pool.coverage(&chain_mid);
    let coverage_upper = pool.coverage(&chain_upper);
    let coverage_lower = pool.coverage(&chain_lower);

    let mut returned_from = Chain::Mid;
    let mut returned = chain_mid.clone();
    let mut best = coverage_mid.net();
    if opts.best_prefix {
        best = i64::MIN;
        for (which, chain) in [(Chain::Mid, &chain_mid), (Chain::Upper, &chain_upper), (Chain::Lower, &chain_lower)] {
            let mut state = crate::rr::CoverState::new(pool);
            for (j, &v) in chain.iter().enumerate() {
                state.insert(pool, v);
                let net = state.coverage().net();
                if net > best {
                    best = net;
                    returned_from = which;
                    returned = chain[..=j].to_vec();
                }
            }
        }
    } else {
        for (which, chain, cov) in [
            (Chain::Upper, &chain_upper, coverage_upper),
            (Chain::Lower, &chain_lower, coverage_lower),
        ] {
            if cov.net() > best {
                best = cov.net();
                returned_from = which;
                returned = chain.clone();
            }
        }
    }

    let sigma = |c: Coverage| pool.scaled(c.net());
    Ok(SandwichResult {
        mid_gains: mid_counts.iter().map(|&c| pool.scaled(c)).collect(),
        sigma_mid: sigma(coverage_mid),
        sigma_upper: sigma(coverage_upper),
        sigma_lower: sigma(coverage_lower),
        sigma_returned: sigma(pool.coverage(&returned)),
        chain_mid,
        chain_upper,
        chain_lower,
        coverage_mid,
        coverage_upper,
        coverage_lower,
        returned,
        returned_from,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub ratio_upper: Option<f64>,
    pub ratio_lower: Option<f64>,
}

impl RatioReport {
    /// The larger of the defined ratios.
    pub fn best(&self) -> Option<f64> {
        match (self.ratio_upper, self.ratio_lower) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }
}

/// `sigma(S_upper) / upper(S_upper)` and, given a reference optimum,
/// `lower(S*) / sigma(S*)`. Ratios whose denominator is not positive are absent.
pub fn ratio_report(
    pool: &SignedSamplePool,
    result: &SandwichResult,
    tables: &BoundTables,
    oracle_opt: Option<&[NodeId]>,
) -> RatioReport {
    let ub = tables.upper_count(&result.chain_upper);
    let ratio_upper = (ub > 0).then(|| result.coverage_upper.net() as f64 / ub as f64);
    let ratio_lower = oracle_opt.and_then(|opt| {
        let net = pool.coverage(opt).net();
        (net > 0).then(|| tables.lower_count(opt) as f64 / net as f64)
    });
    RatioReport {
        ratio_upper,
        ratio_lower,
    }
}

/// Opinion-unaware greedy maximum coverage over a pool of unsigned samples.
pub fn greedy_im(pool_allroots: &SignedSamplePool, k: usize) -> Result<Vec<NodeId>> {
    let n = pool_allroots.n();
    if k > n {
        return Err(Error::KExceedsN { k, n });
    }
    Ok(greedy_chain(pool_allroots, k).0)
}
