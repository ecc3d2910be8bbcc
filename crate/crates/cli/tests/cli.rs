use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use opinion_im::{cmd_sweep, Algo, ExperimentConfig, GraphSource, RunRecord, SweepAxis};
use oim_core::synth::SynthConfig;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opinion-im"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Nodes 1:+, 2:-, 3:+, 4:0; edges 1->2 (1), 1->3 (0.5), 3->4 (1).
struct Fixture {
    _dir: tempfile::TempDir,
    graph: PathBuf,
    opinions: PathBuf,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let graph = dir.path().join("g.tsv");
        let opinions = dir.path().join("o.tsv");
        std::fs::write(&graph, "# fixture\n1\t2\t1\n1\t3\t0.5\n3\t4\t1\n").unwrap();
        std::fs::write(&opinions, "1\t1\n2\t-1\n3\t1\n4\t0\n").unwrap();
        let root = dir.path().to_path_buf();
        Fixture {
            _dir: dir,
            graph,
            opinions,
            root,
        }
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let p = self.root.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn args<'a>(&'a self, cmd: &'a str) -> Vec<&'a str> {
        vec![cmd, "--graph", s(&self.graph), "--opinions", s(&self.opinions)]
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn select_picks_the_deterministic_positive_node() {
    let f = Fixture::new();
    let mut args = f.args("select");
    args.extend(["--k", "1", "--seed", "3"]);
    let v = stdout_json(&run(&args));
    assert_eq!(v["seeds"], serde_json::json!([3]));
    assert_eq!(v["evaluation"]["mean_net"], 1.0);
    assert_eq!(v["evaluation"]["sims"], 1000);
    for phase in ["partition_ms", "sampling_ms", "selection_ms", "evaluation_ms"] {
        assert!(v["timings"][phase].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn k_beyond_node_count_is_a_usage_error() {
    let f = Fixture::new();
    let mut args = f.args("select");
    args.extend(["--k", "50"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k exceeds node count"));
}

#[test]
fn bad_flags_are_usage_errors() {
    let f = Fixture::new();
    let mut args = f.args("select");
    args.extend(["--algo", "imm"]);
    assert_eq!(run(&args).status.code(), Some(2));
    assert_eq!(run(&["select", "--opinions", s(&f.opinions)]).status.code(), Some(2));
    let mut args = f.args("select");
    args.extend(["--eps", "1.5"]);
    assert_eq!(run(&args).status.code(), Some(2));
}

#[test]
fn missing_graph_is_a_runtime_error() {
    let out = run(&["select", "--graph", "/nonexistent/g.tsv", "--opinions", "/nonexistent/o.tsv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runs_are_reproducible() {
    let f = Fixture::new();
    for algo in ["rand", "oim", "im", "degdis"] {
        let mut args = f.args("select");
        args.extend(["--k", "2", "--algo", algo, "--seed", "17"]);
        let mut a = stdout_json(&run(&args));
        let mut b = stdout_json(&run(&args));
        a.as_object_mut().unwrap().remove("timings");
        b.as_object_mut().unwrap().remove("timings");
        assert_eq!(a, b, "{algo}");
    }
}

#[test]
fn record_round_trips_through_json() {
    let f = Fixture::new();
    let out_path = f.root.join("rec.json");
    let mut args = f.args("select");
    args.extend(["--k", "2", "--out", s(&out_path)]);
    assert!(run(&args).status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let rec: RunRecord = serde_json::from_str(&text).unwrap();
    assert_eq!(rec.seeds.len(), 2);
    let again: RunRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
    assert_eq!(again, rec);
}

#[test]
fn threads_flag_and_env_var() {
    let f = Fixture::new();
    let mut args = f.args("select");
    args.extend(["--k", "1", "--threads", "2"]);
    assert!(run(&args).status.success());
    let mut args = f.args("select");
    args.extend(["--k", "1"]);
    let out = bin().args(&args).env("OPINION_IM_THREADS", "1").output().unwrap();
    assert!(out.status.success());
}

#[test]
fn evaluate_matches_the_exact_value() {
    let f = Fixture::new();
    let seeds = f.file("s.txt", "1\n");
    let mut args = f.args("evaluate");
    args.extend(["--seeds", s(&seeds), "--sims", "100000", "--seed", "8"]);
    let v = stdout_json(&run(&args));
    let mean = v["mean_net"].as_f64().unwrap();
    let se = v["std_err_net"].as_f64().unwrap();
    assert!((mean - 0.5).abs() <= 3.0 * se, "{mean} ± {se}");

    let empty = f.file("e.txt", "# nobody\n");
    let mut args = f.args("evaluate");
    args.extend(["--seeds", s(&empty)]);
    let v = stdout_json(&run(&args));
    assert_eq!((v["mean_pos"].as_f64(), v["mean_neg"].as_f64(), v["mean_net"].as_f64()), (Some(0.0), Some(0.0), Some(0.0)));

    let bad = f.file("b.txt", "99\n");
    let mut args = f.args("evaluate");
    args.extend(["--seeds", s(&bad)]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_commands() {
    let f = Fixture::new();
    let mut args = f.args("oracle");
    args.extend(["--k", "1"]);
    let v = stdout_json(&run(&args));
    assert_eq!(v["seeds"], serde_json::json!([3]));
    assert_eq!(v["value"], 1.0);

    let seeds = f.file("s.txt", "1");
    let mut args = f.args("oracle");
    args.extend(["--seeds", s(&seeds)]);
    assert_eq!(stdout_json(&run(&args))["exact_net"], 0.5);

    let big: String = (0..30).map(|i| format!("{}\t{}\t0.5\n", i, i + 1)).collect();
    let g = f.file("big.tsv", &big);
    let out = run(&["oracle", "--graph", s(&g), "--opinions", s(&f.opinions), "--seeds", s(&seeds)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Monte Carlo"));
}

#[test]
fn sweep_over_k_gives_one_row_per_value_and_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep", "--synth-n", "100", "--synth-seed", "2", "--axis", "k", "--values", "1,5,10", "--sims", "50",
        "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let headers = rdr.headers().unwrap().clone();
    for col in ["axis_value", "algo", "mean_net", "time_ms", "l"] {
        assert!(headers.iter().any(|h| h == col), "missing {col}");
    }
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 12);
    for algo in ["oim", "rand", "degdis", "im"] {
        assert_eq!(rows.iter().filter(|r| &r[1] == algo).count(), 3);
    }
}

#[test]
fn sweep_over_epsilon_shrinks_the_pool() {
    let mut cfg = ExperimentConfig::new(GraphSource::Synthetic(SynthConfig::new(300, 1500, 1)), None, 5);
    cfg.sims = 20;
    let dir = tempfile::tempdir().unwrap();
    cfg.out = Some(dir.path().join("eps.csv"));
    let values: Vec<f64> = (1..=10).map(|i| 0.05 * i as f64).collect();
    let rows = cmd_sweep(&cfg, SweepAxis::Epsilon, &values, &[Algo::Oim], 1).unwrap();
    let ls: Vec<usize> = rows.iter().map(|r| r.l.unwrap()).collect();
    assert!(ls.windows(2).all(|w| w[0] > w[1]), "{ls:?}");
    assert!(cmd_sweep(&cfg, SweepAxis::Epsilon, &[], &[Algo::Oim], 1).is_err());
}

#[test]
fn partition_from_predicted_ratings() {
    let f = Fixture::new();
    let pred = f.file("r.tsv", "0\t3.0\n1\t4.0\n2\t2.0\n3\t3.4\n4\t2.6\n");
    let out = run(&["partition", "--graph", s(&f.graph), "--predicted", s(&pred), "--r0", "3.0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "0\t0\n1\t1\n2\t-1\n3\t0\n4\t0\n");
}

#[test]
fn partition_from_embeddings() {
    let f = Fixture::new();
    let users = f.file("u.tsv", "0\t0\t0\n1\t2\t0\n2\t0\t2\n3\t1\t1\n4\t-1\t0\n");
    let items = f.file("i.tsv", "movie\t1\t-1\n");
    let ratings = f.file("ratings.csv", "user,item,rating\n1,movie,1\n2,movie,-1\n");
    let out = run(&[
        "partition", "--graph", s(&f.graph), "--ratings", s(&ratings), "--user-emb", s(&users), "--item-emb",
        s(&items), "--item", "movie",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // r0 = 0; scores 0, 2, -2, 0, -1
    assert_eq!(String::from_utf8_lossy(&out.stdout), "0\t0\n1\t1\n2\t-1\n3\t0\n4\t-1\n");
}

#[test]
fn gen_synthetic_then_select() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.tsv");
    let o = dir.path().join("o.tsv");
    let out = run(&[
        "gen", "--n", "200", "--edges", "900", "--seed", "5", "--out", s(&g), "--opinions-out", s(&o),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&run(&["select", "--graph", s(&g), "--opinions", s(&o), "--k", "5", "--sims", "100"]));
    assert_eq!(v["nodes"], 200);
    assert_eq!(v["edges"], 900);
    assert_eq!(v["seeds"].as_array().unwrap().len(), 5);
}

#[test]
fn gen_jaccard_needs_a_weighting() {
    let dir = tempfile::tempdir().unwrap();
    let ratings = dir.path().join("r.csv");
    std::fs::write(&ratings, "0,a,5\n0,b,4\n1,a,3\n1,b,2\n2,c,1\n").unwrap();
    let g = dir.path().join("g.tsv");
    let out = run(&["gen", "--ratings", s(&ratings), "--threshold", "0.5", "--out", s(&g)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["gen", "--ratings", s(&ratings), "--threshold", "0.5", "--uniform-weight", "0.3", "--out", s(&g)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&g).unwrap();
    let edges: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(edges, vec!["0\t1\t0.3", "1\t0\t0.3"]);
}
