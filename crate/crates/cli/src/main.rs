use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use oim_core::graph::CosineWeight;
use oim_core::opinion::{NeutralMode, Scoring};
use oim_core::synth::{OpinionMix, SynthConfig, WeightScheme};
use oim_core::SamplingMode;
use opinion_im::{
    cmd_evaluate, cmd_gen, cmd_oracle, cmd_partition, cmd_select, cmd_sweep, exit_code, Algo, ExperimentConfig,
    GenSpec, GraphSource, JaccardWeights, OpinionSource, SweepAxis, UsageError,
};

#[derive(Parser, Debug)]
#[command(name = "opinion-im", version, about = "Opinion-aware influence maximization experiments")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "OPINION_IM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select k seeds and evaluate them.
    Select(SelectArgs),
    /// Repeat selection over a range of k or epsilon values; CSV output.
    Sweep(SweepArgs),
    /// Monte Carlo spread of a given seed set.
    Evaluate(EvaluateArgs),
    /// Exact objective by world enumeration, or the exact optimum for --k.
    Oracle(OracleArgs),
    /// Compute opinion labels from predicted ratings or embeddings.
    Partition(PartitionArgs),
    /// Generate a synthetic graph, or a Jaccard user graph from ratings.
    Gen(GenArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum AlgoArg {
    Oim,
    Rand,
    Degdis,
    Im,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Oim => Algo::Oim,
            AlgoArg::Rand => Algo::Rand,
            AlgoArg::Degdis => Algo::Degdis,
            AlgoArg::Im => Algo::Im,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Rootsample,
    World,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum R0Arg {
    Mean,
    Median,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ScoringArg {
    Inner,
    Cosine,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum AxisArg {
    K,
    Epsilon,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum CosineArg {
    Clamp,
    Affine,
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Edge list `src dst weight`.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Add both directions of every edge.
    #[arg(long)]
    undirected: bool,
    /// Treat node ids as labels and number them in order of appearance.
    #[arg(long)]
    remap_ids: bool,

    /// Opinion labels `node label` with label in {-1, 0, 1}.
    #[arg(long)]
    opinions: Option<PathBuf>,
    /// Predicted ratings `node r_hat`; requires --r0.
    #[arg(long)]
    predicted: Option<PathBuf>,
    /// Ratings `user,item,rating`, used for the neutral rating.
    #[arg(long)]
    ratings: Option<PathBuf>,
    #[arg(long, requires_all = ["item_emb", "item"])]
    user_emb: Option<PathBuf>,
    #[arg(long)]
    item_emb: Option<PathBuf>,
    /// Target item id in the item embeddings.
    #[arg(long)]
    item: Option<String>,
    /// Neutral rating; overrides the one derived from --ratings.
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long, value_enum, default_value = "mean")]
    r0_mode: R0Arg,
    #[arg(long, value_enum, default_value = "inner")]
    scoring: ScoringArg,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,

    /// Use a synthetic power-law graph with this many nodes instead of --graph.
    #[arg(long, conflicts_with = "graph")]
    synth_n: Option<usize>,
    /// Edge count of the synthetic graph (default 5 per node).
    #[arg(long)]
    synth_edges: Option<usize>,
    #[arg(long, default_value_t = 2.1)]
    synth_exponent: f64,
    /// Positive, neutral and negative shares, e.g. 0.4,0.2,0.4.
    #[arg(long, default_value = "0.4,0.2,0.4")]
    synth_mix: String,
    #[arg(long, default_value_t = 0)]
    synth_seed: u64,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.15)]
    eps: f64,
    /// 1/delta = delta_scale * k * n.
    #[arg(long, default_value_t = 100.0)]
    delta_scale: f64,
    #[arg(long, value_enum, default_value = "oim")]
    algo: AlgoArg,
    #[arg(long, default_value_t = 1000)]
    sims: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "rootsample")]
    mode: ModeArg,
    /// Rebuild the bound functions around each chain as it grows.
    #[arg(long)]
    adaptive_bounds: bool,
    /// Return the best prefix of any chain instead of a full chain.
    #[arg(long)]
    best_prefix: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelectArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// Comma-separated values of the swept parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Algorithms to compare (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    algos: Vec<AlgoArg>,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// File of seed node ids.
    #[arg(long)]
    seeds: PathBuf,
    #[arg(long, default_value_t = 1000)]
    sims: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, conflicts_with = "k", required_unless_present = "k")]
    seeds: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Output edge list.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, required_unless_present = "ratings")]
    n: Option<usize>,
    #[arg(long, requires = "n")]
    edges: Option<usize>,
    #[arg(long, default_value_t = 2.1)]
    exponent: f64,
    #[arg(long, default_value = "0.4,0.2,0.4")]
    mix: String,
    /// Uniform activation probability instead of 1/indegree.
    #[arg(long)]
    uniform_weight: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the synthetic opinion labels.
    #[arg(long)]
    opinions_out: Option<PathBuf>,

    /// Build a user graph from shared rated items instead.
    #[arg(long, conflicts_with_all = ["n", "edges", "opinions_out"])]
    ratings: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Weight Jaccard edges by user embedding cosine similarity.
    #[arg(long, conflicts_with = "uniform_weight")]
    user_emb: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "clamp")]
    cosine: CosineArg,
}

fn parse_mix(s: &str) -> Result<OpinionMix> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| UsageError(format!("invalid opinion mix {s:?}")))?;
    let [positive, neutral, negative] = parts[..] else {
        bail!(UsageError(format!("opinion mix needs three shares, got {s:?}")));
    };
    Ok(OpinionMix {
        positive,
        neutral,
        negative,
    })
}

impl InstanceArgs {
    fn graph_source(&self) -> Result<GraphSource> {
        match (&self.graph, self.synth_n) {
            (Some(path), None) => Ok(GraphSource::File {
                path: path.clone(),
                undirected: self.undirected,
                remap_ids: self.remap_ids,
            }),
            (None, Some(n)) => {
                let mut cfg = SynthConfig::new(n, self.synth_edges.unwrap_or(5 * n), self.synth_seed);
                cfg.exponent = self.synth_exponent;
                cfg.mix = parse_mix(&self.synth_mix)?;
                Ok(GraphSource::Synthetic(cfg))
            }
            _ => bail!(UsageError("pass --graph or --synth-n".into())),
        }
    }

    fn opinion_source(&self) -> Result<Option<OpinionSource>> {
        let given = [self.opinions.is_some(), self.predicted.is_some(), self.user_emb.is_some()];
        if given.iter().filter(|&&g| g).count() > 1 {
            bail!(UsageError("use only one of --opinions, --predicted and --user-emb".into()));
        }
        if let Some(path) = &self.opinions {
            return Ok(Some(OpinionSource::Labels { path: path.clone() }));
        }
        if let Some(path) = &self.predicted {
            let Some(r0) = self.r0 else {
                bail!(UsageError("--predicted requires --r0".into()));
            };
            return Ok(Some(OpinionSource::PredictedRatings { path: path.clone(), r0 }));
        }
        if let Some(user_emb) = &self.user_emb {
            return Ok(Some(OpinionSource::Embeddings {
                ratings: self.ratings.clone(),
                r0: self.r0,
                user_emb: user_emb.clone(),
                item_emb: self.item_emb.clone().expect("required by clap"),
                item: self.item.clone().expect("required by clap"),
            }));
        }
        Ok(None)
    }

    fn config(&self, k: usize) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(self.graph_source()?, self.opinion_source()?, k);
        cfg.tau = self.tau;
        cfg.r0_mode = match self.r0_mode {
            R0Arg::Mean => NeutralMode::Mean,
            R0Arg::Median => NeutralMode::Median,
        };
        cfg.scoring = match self.scoring {
            ScoringArg::Inner => Scoring::InnerProduct,
            ScoringArg::Cosine => Scoring::Cosine,
        };
        Ok(cfg)
    }
}

fn run_config(instance: &InstanceArgs, run: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = instance.config(run.k)?;
    cfg.epsilon = run.eps;
    cfg.delta_scale = run.delta_scale;
    cfg.algo = run.algo.into();
    cfg.sims = run.sims;
    cfg.seed = run.seed;
    cfg.mode = match run.mode {
        ModeArg::Rootsample => SamplingMode::RootSample,
        ModeArg::World => SamplingMode::World,
    };
    cfg.adaptive_bounds = run.adaptive_bounds;
    cfg.best_prefix = run.best_prefix;
    cfg.out = run.out.clone();
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!(UsageError("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Select(a) => {
            cmd_select(&run_config(&a.instance, &a.run)?)?;
        }
        Command::Sweep(a) => {
            let cfg = run_config(&a.instance, &a.run)?;
            let algos: Vec<Algo> = if a.algos.is_empty() {
                Algo::ALL.to_vec()
            } else {
                a.algos.iter().map(|&x| x.into()).collect()
            };
            let axis = match a.axis {
                AxisArg::K => SweepAxis::K,
                AxisArg::Epsilon => SweepAxis::Epsilon,
            };
            cmd_sweep(&cfg, axis, &a.values, &algos, a.repeat)?;
        }
        Command::Evaluate(a) => {
            let mut cfg = a.instance.config(0)?;
            cfg.sims = a.sims;
            cfg.seed = a.seed;
            cfg.out = a.out;
            cmd_evaluate(&cfg, &a.seeds)?;
        }
        Command::Oracle(a) => {
            let mut cfg = a.instance.config(a.k.unwrap_or(0))?;
            cfg.out = a.out;
            cmd_oracle(&cfg, a.seeds.as_deref(), a.k)?;
        }
        Command::Partition(a) => {
            let mut cfg = a.instance.config(0)?;
            cfg.out = a.out;
            cmd_partition(&cfg)?;
        }
        Command::Gen(a) => {
            let spec = match &a.ratings {
                Some(ratings) => {
                    let weights = match (&a.user_emb, a.uniform_weight) {
                        (Some(p), None) => JaccardWeights::Embeddings {
                            user_emb: p.clone(),
                            map: match a.cosine {
                                CosineArg::Clamp => CosineWeight::Clamp,
                                CosineArg::Affine => CosineWeight::Affine,
                            },
                        },
                        (None, Some(w)) => JaccardWeights::Uniform(w),
                        _ => bail!(UsageError(
                            "Jaccard edges need a weighting: pass --user-emb or --uniform-weight".into()
                        )),
                    };
                    GenSpec::Jaccard {
                        ratings: ratings.clone(),
                        threshold: a.threshold,
                        weights,
                    }
                }
                None => {
                    let n = a.n.expect("required by clap");
                    let mut cfg = SynthConfig::new(n, a.edges.unwrap_or(5 * n), a.seed);
                    cfg.exponent = a.exponent;
                    cfg.mix = parse_mix(&a.mix)?;
                    if let Some(w) = a.uniform_weight {
                        cfg.weights = WeightScheme::Uniform(w);
                    }
                    GenSpec::Synthetic {
                        cfg,
                        opinions_out: a.opinions_out.clone(),
                    }
                }
            };
            cmd_gen(&spec, &a.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
