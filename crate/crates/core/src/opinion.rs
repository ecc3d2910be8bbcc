//! Opinion labels toward a target item and the positive/neutral/negative
//! partition of the user base.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{resolve_node, EmbeddingSet, IdMap, NodeId, RatingsTable};
use crate::linalg;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Opinion {
    Negative,
    Neutral,
    Positive,
}

impl Opinion {
    pub fn sign(self) -> i32 {
        match self {
            Opinion::Negative => -1,
            Opinion::Neutral => 0,
            Opinion::Positive => 1,
        }
    }

    pub fn from_sign(s: i32) -> Option<Self> {
        match s {
            -1 => Some(Opinion::Negative),
            0 => Some(Opinion::Neutral),
            1 => Some(Opinion::Positive),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scoring {
    #[default]
    InnerProduct,
    Cosine,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpinionConfig {
    /// Neutral rating value.
    pub r0: f64,
    /// Half-width of the neutral zone.
    pub tau: f64,
    pub scoring: Scoring,
}

impl OpinionConfig {
    pub fn new(r0: f64, tau: f64, scoring: Scoring) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if !r0.is_finite() {
            return Err(Error::InvalidParameter(format!("r0 must be finite, got {r0}")));
        }
        Ok(OpinionConfig { r0, tau, scoring })
    }
}

/// Predicted rating `s(h_item, h_user)`. Negative scores are returned as-is.
pub fn predict_rating(user_vec: &[f64], item_vec: &[f64], scoring: Scoring) -> Result<f64> {
    linalg::check_finite(user_vec)?;
    linalg::check_finite(item_vec)?;
    match scoring {
        Scoring::InnerProduct => linalg::dot(user_vec, item_vec),
        Scoring::Cosine => linalg::cosine(user_vec, item_vec)?.ok_or(Error::ZeroNorm),
    }
}

/// Three-way split around `r0`: positive when `r_hat - r0 >= tau`, negative
/// when `r0 - r_hat >= tau`, neutral otherwise.
pub fn classify_opinion(r_hat: f64, cfg: &OpinionConfig) -> Opinion {
    if r_hat - cfg.r0 >= cfg.tau {
        Opinion::Positive
    } else if cfg.r0 - r_hat >= cfg.tau {
        Opinion::Negative
    } else {
        Opinion::Neutral
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeutralMode {
    #[default]
    Mean,
    /// Lower median for even counts.
    Median,
}

pub fn neutral_rating(ratings: &RatingsTable, mode: NeutralMode) -> Result<f64> {
    if ratings.is_empty() {
        return Err(Error::EmptyRatings);
    }
    let mut values: Vec<f64> = ratings.values().collect();
    Ok(match mode {
        NeutralMode::Mean => values.iter().sum::<f64>() / values.len() as f64,
        NeutralMode::Median => {
            values.sort_by(f64::total_cmp);
            values[(values.len() - 1) / 2]
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpinionPartition {
    labels: Vec<Opinion>,
    positive: Vec<NodeId>,
    neutral: Vec<NodeId>,
    negative: Vec<NodeId>,
}

impl OpinionPartition {
    pub fn from_labels(labels: Vec<Opinion>) -> Self {
        let mut p = OpinionPartition {
            labels,
            positive: Vec::new(),
            neutral: Vec::new(),
            negative: Vec::new(),
        };
        for (u, &o) in p.labels.iter().enumerate() {
            match o {
                Opinion::Positive => p.positive.push(u as NodeId),
                Opinion::Neutral => p.neutral.push(u as NodeId),
                Opinion::Negative => p.negative.push(u as NodeId),
            }
        }
        p
    }

    pub fn from_signs(signs: &[i32]) -> Result<Self> {
        signs
            .iter()
            .map(|&s| {
                Opinion::from_sign(s)
                    .ok_or_else(|| Error::InvalidParameter(format!("opinion label {s}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_labels)
    }

    /// Classifies every node from its predicted rating.
    pub fn from_ratings(r_hat: &[f64], cfg: &OpinionConfig) -> Self {
        Self::from_labels(r_hat.iter().map(|&r| classify_opinion(r, cfg)).collect())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, u: NodeId) -> Opinion {
        self.labels[u as usize]
    }

    pub fn sign(&self, u: NodeId) -> i32 {
        self.labels[u as usize].sign()
    }

    pub fn labels(&self) -> &[Opinion] {
        &self.labels
    }

    pub fn positive_set(&self) -> &[NodeId] {
        &self.positive
    }

    pub fn neutral_set(&self) -> &[NodeId] {
        &self.neutral
    }

    pub fn negative_set(&self) -> &[NodeId] {
        &self.negative
    }

    /// `V+ ∪ V-` in ascending id order.
    pub fn polar_nodes(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.positive.iter().chain(&self.negative).copied().collect();
        v.sort_unstable();
        v
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.positive.len(), self.neutral.len(), self.negative.len())
    }
}

/// Predicts a rating for each of the `n` nodes against `item_vec` and classifies it.
pub fn partition_users(
    n: usize,
    users: &EmbeddingSet,
    ids: Option<&IdMap>,
    item_vec: &[f64],
    cfg: &OpinionConfig,
) -> Result<OpinionPartition> {
    let r_hat = (0..n as NodeId)
        .map(|u| predict_rating(users.node_vector(u, ids)?, item_vec, cfg.scoring))
        .collect::<Result<Vec<_>>>()?;
    Ok(OpinionPartition::from_ratings(&r_hat, cfg))
}

fn read_node_values<R: BufRead, T>(
    reader: R,
    n: usize,
    ids: Option<&IdMap>,
    mut parse: impl FnMut(&str) -> Option<T>,
) -> Result<Vec<Option<T>>> {
    let mut out: Vec<Option<T>> = (0..n).map(|_| None).collect();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(lineno, format!("expected 2 fields, found {}", fields.len())));
        }
        let u = resolve_node(fields[0], ids).map_err(|e| Error::parse(lineno, e.to_string()))?;
        if u as usize >= n {
            return Err(Error::parse(lineno, format!("node {u} out of range for {n} nodes")));
        }
        let value = parse(fields[1])
            .ok_or_else(|| Error::parse(lineno, format!("invalid value {:?}", fields[1])))?;
        if out[u as usize].replace(value).is_some() {
            return Err(Error::parse(lineno, format!("duplicate entry for node {}", fields[0])));
        }
    }
    Ok(out)
}

/// Reads `node<TAB>label` lines with labels in `{-1, 0, 1}`. Nodes without a
/// line are neutral.
pub fn read_opinions<R: BufRead>(reader: R, n: usize, ids: Option<&IdMap>) -> Result<OpinionPartition> {
    let labels = read_node_values(reader, n, ids, |s| s.parse().ok().and_then(Opinion::from_sign))?;
    Ok(OpinionPartition::from_labels(
        labels.into_iter().map(|o| o.unwrap_or(Opinion::Neutral)).collect(),
    ))
}

pub fn load_opinions(path: impl AsRef<Path>, n: usize, ids: Option<&IdMap>) -> Result<OpinionPartition> {
    read_opinions(BufReader::new(File::open(path)?), n, ids)
}

/// Reads `node<TAB>r_hat` lines. Every node must be present.
pub fn read_predicted_ratings<R: BufRead>(reader: R, n: usize, ids: Option<&IdMap>) -> Result<Vec<f64>> {
    let values = read_node_values(reader, n, ids, |s| s.parse::<f64>().ok().filter(|v| v.is_finite()))?;
    values
        .into_iter()
        .enumerate()
        .map(|(u, v)| v.ok_or_else(|| Error::InvalidParameter(format!("no predicted rating for node {u}"))))
        .collect()
}

pub fn load_predicted_ratings(path: impl AsRef<Path>, n: usize, ids: Option<&IdMap>) -> Result<Vec<f64>> {
    read_predicted_ratings(BufReader::new(File::open(path)?), n, ids)
}

pub fn write_opinions<W: std::io::Write>(part: &OpinionPartition, ids: Option<&IdMap>, mut w: W) -> Result<()> {
    for (u, o) in part.labels().iter().enumerate() {
        writeln!(w, "{}\t{}", crate::graph::node_label(u as NodeId, ids), o.sign())?;
    }
    Ok(())
}
