use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use oim_core::graph::{load_edge_list, load_embeddings, load_ratings, EdgeListOptions};
use oim_core::opinion::{
    load_opinions, load_predicted_ratings, neutral_rating, partition_users, NeutralMode, OpinionConfig, Scoring,
};
use oim_core::synth::{self, SynthConfig};
use oim_core::{Graph, IdMap, OpinionPartition, SamplingMode};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Oim,
    Rand,
    Degdis,
    Im,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Oim, Algo::Rand, Algo::Degdis, Algo::Im];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Oim => "oim",
            Algo::Rand => "rand",
            Algo::Degdis => "degdis",
            Algo::Im => "im",
        }
    }
}

impl FromStr for Algo {
    type Err = UsageError;

    fn from_str(s: &str) -> std::result::Result<Self, UsageError> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| UsageError(format!("unknown algorithm {s:?} (expected oim, rand, degdis or im)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphSource {
    File {
        path: PathBuf,
        #[serde(default)]
        undirected: bool,
        #[serde(default)]
        remap_ids: bool,
    },
    /// Generated in memory; carries its own opinion labels.
    Synthetic(SynthConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OpinionSource {
    Labels {
        path: PathBuf,
    },
    /// Predicted ratings per node, classified around `r0`.
    PredictedRatings {
        path: PathBuf,
        r0: f64,
    },
    /// Ratings fix the neutral value; embeddings give each node's predicted rating.
    Embeddings {
        ratings: Option<PathBuf>,
        r0: Option<f64>,
        user_emb: PathBuf,
        item_emb: PathBuf,
        item: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub opinions: Option<OpinionSource>,
    pub k: usize,
    pub epsilon: f64,
    /// `1 / delta = delta_scale * k * n`.
    pub delta_scale: f64,
    pub tau: f64,
    pub r0_mode: NeutralMode,
    pub scoring: Scoring,
    pub algo: Algo,
    pub mode: SamplingMode,
    pub sims: u64,
    pub seed: u64,
    pub adaptive_bounds: bool,
    pub best_prefix: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSource, opinions: Option<OpinionSource>, k: usize) -> Self {
        ExperimentConfig {
            graph,
            opinions,
            k,
            epsilon: 0.15,
            delta_scale: 100.0,
            tau: 0.5,
            r0_mode: NeutralMode::Mean,
            scoring: Scoring::InnerProduct,
            algo: Algo::Oim,
            mode: SamplingMode::RootSample,
            sims: 1000,
            seed: 0,
            adaptive_bounds: false,
            best_prefix: false,
            out: None,
        }
    }
}

pub struct Instance {
    pub graph: Graph,
    pub ids: Option<IdMap>,
    pub partition: OpinionPartition,
}

pub fn load_graph(source: &GraphSource) -> Result<(Graph, Option<IdMap>)> {
    match source {
        GraphSource::File {
            path,
            undirected,
            remap_ids,
        } => {
            let opts = EdgeListOptions {
                undirected: *undirected,
                remap_ids: *remap_ids,
                ..Default::default()
            };
            let loaded = load_edge_list(path, &opts).with_context(|| format!("reading graph {}", path.display()))?;
            Ok((loaded.graph, loaded.ids))
        }
        GraphSource::Synthetic(cfg) => Ok((synth::power_law_graph(cfg)?, None)),
    }
}

pub fn load_partition(
    source: &OpinionSource,
    n: usize,
    ids: Option<&IdMap>,
    tau: f64,
    r0_mode: NeutralMode,
    scoring: Scoring,
) -> Result<OpinionPartition> {
    let ctx = |p: &Path| format!("reading {}", p.display());
    match source {
        OpinionSource::Labels { path } => Ok(load_opinions(path, n, ids).with_context(|| ctx(path))?),
        OpinionSource::PredictedRatings { path, r0 } => {
            let cfg = OpinionConfig::new(*r0, tau, scoring)?;
            let r_hat = load_predicted_ratings(path, n, ids).with_context(|| ctx(path))?;
            Ok(OpinionPartition::from_ratings(&r_hat, &cfg))
        }
        OpinionSource::Embeddings {
            ratings,
            r0,
            user_emb,
            item_emb,
            item,
        } => {
            let r0 = match (r0, ratings) {
                (Some(r0), _) => *r0,
                (None, Some(path)) => {
                    let table = load_ratings(path, ids).with_context(|| ctx(path))?;
                    neutral_rating(&table, r0_mode)?
                }
                (None, None) => bail!(UsageError("the neutral rating needs --ratings or --r0".into())),
            };
            let cfg = OpinionConfig::new(r0, tau, scoring)?;
            let users = load_embeddings(user_emb).with_context(|| ctx(user_emb))?;
            let items = load_embeddings(item_emb).with_context(|| ctx(item_emb))?;
            let item_vec = items.require(item)?;
            Ok(partition_users(n, &users, ids, item_vec, &cfg)?)
        }
    }
}

pub fn load_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let (graph, ids) = load_graph(&cfg.graph)?;
    let partition = match (&cfg.opinions, &cfg.graph) {
        (Some(src), _) => load_partition(src, graph.n(), ids.as_ref(), cfg.tau, cfg.r0_mode, cfg.scoring)?,
        (None, GraphSource::Synthetic(s)) => synth::random_opinions(s.n, &s.mix, s.seed)?,
        (None, GraphSource::File { .. }) => {
            bail!(UsageError("no opinion source: pass --opinions, --predicted or --user-emb/--item-emb/--item".into()))
        }
    };
    Ok(Instance { graph, ids, partition })
}
