use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use oim_core::baselines::{degdis_opinion, rand_seeds};
use oim_core::graph::{
    build_jaccard_graph, load_embeddings, load_ratings, node_label, resolve_node, weights_from_embeddings,
    write_edge_list, CosineWeight,
};
use oim_core::opinion::write_opinions;
use oim_core::rng::mix_seed;
use oim_core::rr::{build_total_pool, delta_from_scale, sample_count, SigmaEstimate};
use oim_core::selector::{greedy_im, ratio_report, Chain, RatioReport, SandwichOptions};
use oim_core::synth::{self, SynthConfig};
use oim_core::world;
use oim_core::{
    build_bound_tables, build_pool, evaluate, sandwich_greedy, Error, NodeId, OpinionPartition, SamplingPlan,
    SpreadEstimate,
};
use serde::{Deserialize, Serialize};

use crate::config::{load_graph, load_instance, load_partition, Algo, ExperimentConfig, GraphSource, Instance, OpinionSource};
use crate::UsageError;

const POOL_STREAM: u64 = 0;
const EVAL_STREAM: u64 = 1;
const RAND_STREAM: u64 = 2;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub partition_ms: f64,
    pub sampling_ms: f64,
    pub selection_ms: f64,
    pub evaluation_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub nodes: usize,
    pub edges: usize,
    /// Positive, neutral and negative node counts.
    pub opinion_counts: [usize; 3],
    pub delta: Option<f64>,
    pub samples: Option<usize>,
    pub seeds: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_labels: Option<Vec<String>>,
    pub sigma: Option<SigmaEstimate>,
    pub chain: Option<Chain>,
    pub ratios: Option<RatioReport>,
    pub evaluation: SpreadEstimate,
    pub timings: Timings,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

struct Selection {
    seeds: Vec<NodeId>,
    delta: Option<f64>,
    samples: Option<usize>,
    sigma: Option<SigmaEstimate>,
    chain: Option<Chain>,
    ratios: Option<RatioReport>,
    sampling_ms: f64,
    selection_ms: f64,
}

/// Sample count and delta used by the RR-based algorithms.
fn plan_size(cfg: &ExperimentConfig, n: usize) -> Result<(usize, f64)> {
    let delta = delta_from_scale(cfg.delta_scale, cfg.k.max(1), n)?;
    Ok((sample_count(n, cfg.k.max(1), cfg.epsilon, delta)?, delta))
}

fn select_seeds(inst: &Instance, cfg: &ExperimentConfig, master: u64) -> Result<Selection> {
    let g = &inst.graph;
    let n = g.n();
    if cfg.k > n {
        return Err(Error::KExceedsN { k: cfg.k, n }.into());
    }
    let mut sel = Selection {
        seeds: Vec::new(),
        delta: None,
        samples: None,
        sigma: None,
        chain: None,
        ratios: None,
        sampling_ms: 0.0,
        selection_ms: 0.0,
    };
    match cfg.algo {
        Algo::Oim | Algo::Im => {
            let (l, delta) = plan_size(cfg, n)?;
            sel.samples = Some(l);
            sel.delta = Some(delta);
            let t = Instant::now();
            if cfg.algo == Algo::Oim {
                let plan = SamplingPlan {
                    accuracy: None,
                    l,
                    mode: cfg.mode,
                };
                let pool = build_pool(g, &inst.partition, &plan, mix_seed(master, POOL_STREAM))?;
                sel.sampling_ms = ms(t);
                let t = Instant::now();
                let tables = build_bound_tables(&pool);
                let opts = SandwichOptions {
                    adaptive_bounds: cfg.adaptive_bounds,
                    best_prefix: cfg.best_prefix,
                };
                let res = sandwich_greedy(&pool, cfg.k, &tables, opts)?;
                sel.ratios = Some(ratio_report(&pool, &res, &tables, None));
                sel.sigma = Some(pool.estimate_sigma(&res.returned));
                sel.chain = Some(res.returned_from);
                sel.seeds = res.returned;
                sel.selection_ms = ms(t);
            } else {
                let pool = build_total_pool(g, l, mix_seed(master, POOL_STREAM))?;
                sel.sampling_ms = ms(t);
                let t = Instant::now();
                sel.seeds = greedy_im(&pool, cfg.k)?;
                sel.selection_ms = ms(t);
            }
        }
        Algo::Rand => {
            let t = Instant::now();
            sel.seeds = rand_seeds(n, cfg.k, mix_seed(master, RAND_STREAM))?;
            sel.selection_ms = ms(t);
        }
        Algo::Degdis => {
            let t = Instant::now();
            sel.seeds = degdis_opinion(g, &inst.partition, cfg.k)?;
            sel.selection_ms = ms(t);
        }
    }
    Ok(sel)
}

fn evaluate_seeds(inst: &Instance, seeds: &[NodeId], sims: u64, master: u64) -> Result<SpreadEstimate> {
    Ok(evaluate(&inst.graph, &inst.partition, seeds, sims, mix_seed(master, EVAL_STREAM))?)
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let mut w = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Loads the instance, selects seeds, evaluates them and writes the record as JSON.
pub fn cmd_select(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let t = Instant::now();
    let inst = load_instance(cfg)?;
    let partition_ms = ms(t);
    let sel = select_seeds(&inst, cfg, cfg.seed)?;
    let t = Instant::now();
    let evaluation = evaluate_seeds(&inst, &sel.seeds, cfg.sims, cfg.seed)?;
    let evaluation_ms = ms(t);
    let (p, z, q) = inst.partition.counts();
    let record = RunRecord {
        config: cfg.clone(),
        nodes: inst.graph.n(),
        edges: inst.graph.edge_count(),
        opinion_counts: [p, z, q],
        delta: sel.delta,
        samples: sel.samples,
        seed_labels: inst
            .ids
            .as_ref()
            .map(|ids| sel.seeds.iter().map(|&s| node_label(s, Some(ids))).collect()),
        seeds: sel.seeds,
        sigma: sel.sigma,
        chain: sel.chain,
        ratios: sel.ratios,
        evaluation,
        timings: Timings {
            partition_ms,
            sampling_ms: sel.sampling_ms,
            selection_ms: sel.selection_ms,
            evaluation_ms,
        },
    };
    write_json(&record, cfg.out.as_deref())?;
    Ok(record)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    K,
    Epsilon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub algo: String,
    pub k: usize,
    pub epsilon: f64,
    /// RR sample count, empty for algorithms that do not sample.
    pub l: Option<usize>,
    pub repeats: usize,
    pub mean_net: f64,
    pub mean_pos: f64,
    pub mean_neg: f64,
    pub time_ms: f64,
    pub sampling_ms: f64,
    pub selection_ms: f64,
}

/// One row per value per algorithm, each averaged over `repeat` runs. On a
/// synthetic graph every repeat draws a fresh instance.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    algos: &[Algo],
    repeat: usize,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        bail!(UsageError("sweep needs at least one value".into()));
    }
    if algos.is_empty() {
        bail!(UsageError("sweep needs at least one algorithm".into()));
    }
    if repeat == 0 {
        bail!(UsageError("--repeat must be at least 1".into()));
    }
    if axis == SweepAxis::K && values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
        bail!(UsageError("k values must be non-negative integers".into()));
    }

    let instances: Vec<Instance> = (0..repeat as u64)
        .map(|r| {
            let mut c = cfg.clone();
            if let GraphSource::Synthetic(s) = &mut c.graph {
                s.seed = mix_seed(s.seed, r);
            }
            load_instance(&c)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for &value in values {
        let mut c = cfg.clone();
        match axis {
            SweepAxis::K => c.k = value as usize,
            SweepAxis::Epsilon => c.epsilon = value,
        }
        for &algo in algos {
            c.algo = algo;
            let mut row = SweepRow {
                axis_value: value,
                algo: algo.name().to_string(),
                k: c.k,
                epsilon: c.epsilon,
                l: None,
                repeats: repeat,
                mean_net: 0.0,
                mean_pos: 0.0,
                mean_neg: 0.0,
                time_ms: 0.0,
                sampling_ms: 0.0,
                selection_ms: 0.0,
            };
            for (r, inst) in instances.iter().enumerate() {
                let master = mix_seed(cfg.seed, r as u64);
                let sel = select_seeds(inst, &c, master)?;
                let eval = evaluate_seeds(inst, &sel.seeds, c.sims, master)?;
                row.l = sel.samples;
                row.mean_net += eval.mean_net;
                row.mean_pos += eval.mean_pos;
                row.mean_neg += eval.mean_neg;
                row.sampling_ms += sel.sampling_ms;
                row.selection_ms += sel.selection_ms;
            }
            let r = repeat as f64;
            row.mean_net /= r;
            row.mean_pos /= r;
            row.mean_neg /= r;
            row.sampling_ms /= r;
            row.selection_ms /= r;
            row.time_ms = row.sampling_ms + row.selection_ms;
            rows.push(row);
        }
    }

    let write = |w: Box<dyn Write>| -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        for row in &rows {
            csv.serialize(row)?;
        }
        csv.flush()?;
        Ok(())
    };
    match &cfg.out {
        Some(path) => write(Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )))?,
        None => write(Box::new(std::io::stdout()))?,
    }
    Ok(rows)
}

/// Whitespace- or comma-separated node ids; `#` starts a comment.
fn read_seed_file(path: &Path, inst: &Instance) -> Result<Vec<NodeId>> {
    let file = File::open(path).with_context(|| format!("reading seeds {}", path.display()))?;
    let mut seeds = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let id = resolve_node(tok, inst.ids.as_ref())?;
            if id as usize >= inst.graph.n() {
                return Err(Error::UnknownNode(tok.to_string()).into());
            }
            seeds.push(id);
        }
    }
    Ok(seeds)
}

/// Monte Carlo spread of the seeds listed in `seeds_path`.
pub fn cmd_evaluate(cfg: &ExperimentConfig, seeds_path: &Path) -> Result<SpreadEstimate> {
    let inst = load_instance(cfg)?;
    let seeds = read_seed_file(seeds_path, &inst)?;
    let est = evaluate_seeds(&inst, &seeds, cfg.sims, cfg.seed)?;
    write_json(&est, cfg.out.as_deref())?;
    Ok(est)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OracleOutput {
    Exact {
        seeds: Vec<NodeId>,
        exact_net: f64,
        exact_pos: f64,
        exact_neg: f64,
        worlds: u64,
    },
    Optimum {
        k: usize,
        seeds: Vec<NodeId>,
        value: f64,
    },
}

/// Exact objective of a seed file, or the exact best size-`k` set.
pub fn cmd_oracle(cfg: &ExperimentConfig, seeds_path: Option<&Path>, k: Option<usize>) -> Result<OracleOutput> {
    let inst = load_instance(cfg)?;
    let out = match (seeds_path, k) {
        (Some(path), None) => {
            let seeds = read_seed_file(path, &inst)?;
            let r = world::exact_objective(&inst.graph, &inst.partition, &seeds)?;
            OracleOutput::Exact {
                seeds,
                exact_net: r.exact_net,
                exact_pos: r.exact_pos,
                exact_neg: r.exact_neg,
                worlds: r.worlds_enumerated,
            }
        }
        (None, Some(k)) => {
            let (seeds, value) = world::brute_force_opt(&inst.graph, &inst.partition, k)?;
            OracleOutput::Optimum { k, seeds, value }
        }
        _ => bail!(UsageError("oracle needs exactly one of --seeds or --k".into())),
    };
    write_json(&out, cfg.out.as_deref())?;
    Ok(out)
}

/// Classifies every node of the graph and writes `node<TAB>label` lines.
pub fn cmd_partition(cfg: &ExperimentConfig) -> Result<OpinionPartition> {
    let (graph, ids) = load_graph(&cfg.graph)?;
    let Some(src) = &cfg.opinions else {
        bail!(UsageError("partition needs --predicted or --user-emb/--item-emb/--item".into()));
    };
    if matches!(src, OpinionSource::Labels { .. }) {
        bail!(UsageError("partition computes labels; pass predicted ratings or embeddings".into()));
    }
    let part = load_partition(src, graph.n(), ids.as_ref(), cfg.tau, cfg.r0_mode, cfg.scoring)?;
    match &cfg.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            write_opinions(&part, ids.as_ref(), &mut w)?;
            w.flush()?;
        }
        None => write_opinions(&part, ids.as_ref(), std::io::stdout().lock())?,
    }
    let (p, z, q) = part.counts();
    eprintln!("positive {p}, neutral {z}, negative {q}");
    Ok(part)
}

#[derive(Clone, Debug, PartialEq)]
pub enum JaccardWeights {
    Embeddings { user_emb: PathBuf, map: CosineWeight },
    Uniform(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum GenSpec {
    Synthetic {
        cfg: SynthConfig,
        opinions_out: Option<PathBuf>,
    },
    Jaccard {
        ratings: PathBuf,
        threshold: f64,
        weights: JaccardWeights,
    },
}

/// Writes a generated graph as an edge list (and synthetic opinions when asked).
pub fn cmd_gen(spec: &GenSpec, out: &Path) -> Result<()> {
    let create = |p: &Path| -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
    };
    let graph = match spec {
        GenSpec::Synthetic { cfg, opinions_out } => {
            let (g, part) = synth::generate(cfg)?;
            if let Some(path) = opinions_out {
                let mut w = create(path)?;
                write_opinions(&part, None, &mut w)?;
                w.flush()?;
            }
            g
        }
        GenSpec::Jaccard {
            ratings,
            threshold,
            weights,
        } => {
            let table = load_ratings(ratings, None).with_context(|| format!("reading {}", ratings.display()))?;
            let g = build_jaccard_graph(&table, *threshold)?;
            match weights {
                JaccardWeights::Embeddings { user_emb, map } => {
                    let users = load_embeddings(user_emb).with_context(|| format!("reading {}", user_emb.display()))?;
                    weights_from_embeddings(&g, &users, None, *map)?
                }
                JaccardWeights::Uniform(p) => {
                    if !(*p >= 0.0 && *p <= 1.0) {
                        bail!(UsageError(format!("uniform weight must lie in [0, 1], got {p}")));
                    }
                    g.reweighted(|_| Ok(*p))?
                }
            }
        }
    };
    let mut w = create(out)?;
    write_edge_list(&graph, None, &mut w)?;
    w.flush()?;
    eprintln!("{} nodes, {} edges", graph.n(), graph.edge_count());
    Ok(())
}
