//! Synthetic instances with heavy-tailed degrees and a configurable opinion mix.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, NodeId};
use crate::opinion::{Opinion, OpinionPartition};
use crate::rng::rng_for;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightScheme {
    /// `w(u, v) = 1 / indeg(v)`.
    WeightedCascade,
    Uniform(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpinionMix {
    pub positive: f64,
    pub neutral: f64,
    pub negative: f64,
}

impl OpinionMix {
    pub fn balanced() -> Self {
        OpinionMix {
            positive: 0.4,
            neutral: 0.2,
            negative: 0.4,
        }
    }

    fn validate(&self) -> Result<()> {
        let parts = [self.positive, self.neutral, self.negative];
        if parts.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || parts.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidParameter("opinion mix must be non-negative with a positive sum".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub edges: usize,
    /// Power-law exponent of the expected degree distribution, > 2.
    pub exponent: f64,
    pub weights: WeightScheme,
    pub mix: OpinionMix,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n: usize, edges: usize, seed: u64) -> Self {
        SynthConfig {
            n,
            edges,
            exponent: 2.1,
            weights: WeightScheme::WeightedCascade,
            mix: OpinionMix::balanced(),
            seed,
        }
    }
}

/// Chung-Lu style expected-degree weights `(i + 1)^(-1 / (exponent - 1))`, shuffled.
fn degree_weights<R: Rng>(n: usize, exponent: f64, rng: &mut R) -> Vec<f64> {
    let a = 1.0 / (exponent - 1.0);
    let mut w: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(-a)).collect();
    w.shuffle(rng);
    w
}

pub fn power_law_graph(cfg: &SynthConfig) -> Result<Graph> {
    let n = cfg.n;
    if n < 2 {
        return Err(Error::InvalidParameter("synthetic graphs need at least 2 nodes".into()));
    }
    if cfg.exponent.is_nan() || cfg.exponent <= 2.0 {
        return Err(Error::InvalidParameter(format!("exponent must exceed 2, got {}", cfg.exponent)));
    }
    let max_edges = n as u128 * (n as u128 - 1);
    if cfg.edges as u128 > max_edges / 2 {
        return Err(Error::InvalidParameter(format!(
            "{} edges is too dense for {n} nodes",
            cfg.edges
        )));
    }
    let mut rng = rng_for(cfg.seed, 0);
    let out_w = degree_weights(n, cfg.exponent, &mut rng);
    let in_w = degree_weights(n, cfg.exponent, &mut rng);
    let src = WeightedIndex::new(&out_w).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let dst = WeightedIndex::new(&in_w).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut seen: HashSet<(NodeId, NodeId)> = HashSet::with_capacity(cfg.edges);
    let mut edges = Vec::with_capacity(cfg.edges);
    let budget = 100 * cfg.edges as u64 + 1000;
    let mut attempts = 0u64;
    while edges.len() < cfg.edges {
        attempts += 1;
        if attempts > budget {
            return Err(Error::InvalidParameter(format!(
                "could not place {} distinct edges; lower the edge count or raise the exponent",
                cfg.edges
            )));
        }
        let (u, v) = (src.sample(&mut rng) as NodeId, dst.sample(&mut rng) as NodeId);
        if u != v && seen.insert((u, v)) {
            edges.push(Edge::new(u, v, 1.0));
        }
    }
    let mut indeg = vec![0u32; n];
    for e in &edges {
        indeg[e.dst as usize] += 1;
    }
    for e in &mut edges {
        e.weight = match cfg.weights {
            WeightScheme::WeightedCascade => 1.0 / indeg[e.dst as usize] as f64,
            WeightScheme::Uniform(p) => p,
        };
    }
    Graph::new(n, edges)
}

/// Independent labels drawn from `mix`.
pub fn random_opinions(n: usize, mix: &OpinionMix, seed: u64) -> Result<OpinionPartition> {
    mix.validate()?;
    let total = mix.positive + mix.neutral + mix.negative;
    let mut rng = rng_for(seed, 1);
    let labels = (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * total;
            if x < mix.positive {
                Opinion::Positive
            } else if x < mix.positive + mix.neutral {
                Opinion::Neutral
            } else {
                Opinion::Negative
            }
        })
        .collect();
    Ok(OpinionPartition::from_labels(labels))
}

pub fn generate(cfg: &SynthConfig) -> Result<(Graph, OpinionPartition)> {
    Ok((power_law_graph(cfg)?, random_opinions(cfg.n, &cfg.mix, cfg.seed)?))
}
