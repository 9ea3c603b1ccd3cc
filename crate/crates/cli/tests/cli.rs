use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mdl_cli::args::SchemaName;
use mdl_cli::schema::{schema, validate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mdl-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn mdl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdl")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = mdl(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().expect("number")
}

#[test]
fn complexity_examples() {
    let v = json(&["complexity", "--n", "2", "--r", "2", "--method", "exact"]);
    assert!((num(&v["comp_nats"]) - 0.9163).abs() < 1e-4);
    assert!((num(&v["normalizer"]) - 2.5).abs() < 1e-12);
    assert_eq!(num(&json(&["complexity", "--n", "7", "--r", "1"])["comp_nats"]), 0.0);
    let exact = num(&json(&["complexity", "--n", "100", "--r", "50"])["comp_nats"]);
    let approx = num(&json(&["complexity", "--n", "100", "--r", "50", "--method", "szpankowski"])["comp_nats"]);
    assert!((exact - approx).abs() <= 0.1);
}

#[test]
fn select_prefers_bernoulli_on_coin_flips() {
    let path = data("coin_flips.csv");
    let v = json(&["select", "-i", path.to_str().unwrap()]);
    assert_eq!(v["winner"], "bernoulli");
    assert_eq!(v["symbols"]["indexing"], "first_appearance");
}

#[test]
fn qnml_orientations_are_equal() {
    let path = data("pair.csv");
    let v = json(&["bn", "-i", path.to_str().unwrap(), "--score", "qnml"]);
    let o = &v["orientations"];
    assert_eq!(o["equal"], true);
    assert!((num(&o["forward_nats"]) - num(&o["backward_nats"])).abs() < 1e-9);
}

#[test]
fn simulated_type_one_rate_within_bound() {
    let v = json(&["test", "--simulate", "10000", "--n", "100", "--alpha", "0.05"]);
    assert!(num(&v["rate"]) <= 0.05 + 3.0 * (0.05f64 * 0.95 / 1e4).sqrt());
    assert_eq!(v["within_bound"], true);
}

#[test]
fn constant_column_regret_is_logarithmic() {
    let n = 500;
    let path = scratch("constant.csv", &format!("c\n{}", "1\n".repeat(n)));
    let v = json(&["preq", "-i", path.to_str().unwrap(), "--predictors", "jeffreys"]);
    let regret = num(&v["predictors"][0]["regret_nats"]);
    assert!(regret >= 0.0 && regret <= 0.5 * (n as f64).ln() + 2.0, "{regret}");
}

#[test]
fn true_point_predictor_loses_about_the_entropy() {
    let theta: f64 = 0.2;
    let n = 4000;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: String = (0..n).map(|_| if rng.random::<f64>() < theta { "1\n" } else { "0\n" }).collect();
    let path = scratch("biased.csv", &format!("z\n{rows}"));
    let curve = path.with_extension("curve.csv");
    let v = json(&[
        "preq",
        "-i",
        path.to_str().unwrap(),
        "--predictors",
        "point:0.2,jeffreys",
        "--curve",
        curve.to_str().unwrap(),
    ]);
    let entropy = -(theta * theta.ln() + (1.0 - theta) * (1.0 - theta).ln());
    let per_step = num(&v["predictors"][0]["codelength_nats"]) / n as f64;
    assert!((per_step - entropy).abs() <= 0.1 * entropy);

    let text = std::fs::read_to_string(&curve).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "step,point:0.2_cumulative_nats,jeffreys_cumulative_nats");
    let mut prev = 0.0;
    let mut steps = 0;
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cells[1] >= prev);
        prev = cells[1];
        steps += 1;
    }
    assert_eq!(steps, n);
    assert!((prev - num(&v["predictors"][0]["codelength_nats"])).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let empty = scratch("empty.csv", "");
    let out = mdl(&["preq", "-i", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    let mixed = scratch("mixed.csv", "a\n1\nH\n0\n");
    assert_eq!(mdl(&["preq", "-i", mixed.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(mdl(&["complexity", "--n", "3", "--bogus"]).status.code(), Some(2));
    assert_eq!(mdl(&["complexity", "--n", "3", "--r", "0"]).status.code(), Some(2));
    assert_eq!(mdl(&["select", "-i", "/definitely/not/here.csv"]).status.code(), Some(2));

    let header: Vec<String> = (0..65).map(|i| format!("c{i}")).collect();
    let row: Vec<&str> = (0..65).map(|i| if i % 2 == 0 { "0" } else { "1" }).collect();
    let wide = scratch("wide.csv", &format!("{}\n{}\n{}\n", header.join(","), row.join(","), row.join(",")));
    assert_eq!(mdl(&["bn", "-i", wide.to_str().unwrap()]).status.code(), Some(1));
}

fn outputs() -> Vec<(SchemaName, Vec<String>)> {
    let p = |n: &str| data(n).to_str().unwrap().to_string();
    let args = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    vec![
        (SchemaName::Complexity, args(&["complexity", "--n", "50", "--r", "3"])),
        (SchemaName::Complexity, args(&["complexity", "--n", "50", "--r", "2", "--order", "1"])),
        (
            SchemaName::Select,
            args(&["select", "-i", &p("markov_chain.csv"), "--candidates", "bernoulli,markov1,markov2-nml,uniform"]),
        ),
        (SchemaName::Varsel, args(&["varsel", "-i", &p("regression.csv"), "--response", "y", "--sigma2", "0.25"])),
        (SchemaName::Markov, args(&["markov", "-i", &p("markov_chain.csv")])),
        (SchemaName::Bn, args(&["bn", "-i", &p("network.csv"), "--score", "bdeu", "--alpha", "2"])),
        (SchemaName::Bn, args(&["bn", "-i", &p("pair.csv")])),
        (SchemaName::Preq, args(&["preq", "-i", &p("coin_flips.csv"), "--predictors", "jeffreys,switch"])),
        (SchemaName::Preq, args(&["preq", "-i", &p("regression.csv"), "--column", "y"])),
        (SchemaName::Test, args(&["test", "--data", &p("coin_flips.csv"), "--alt", "nml"])),
        (
            SchemaName::Test,
            args(&["test", "-i", &p("coin_flips.csv"), "--batch-size", "30", "--continuation", "condition"]),
        ),
        (SchemaName::Simulate, args(&["test", "--simulate", "300", "--n", "20"])),
    ]
}

#[test]
fn every_report_matches_its_schema() {
    for (name, args) in outputs() {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let v = json(&args);
        validate(&v, &schema(name)).unwrap_or_else(|e| panic!("{args:?}: {e:?}"));
        let mut bits = args.clone();
        bits.push("--bits");
        let b = json(&bits);
        validate(&b, &schema(name)).unwrap_or_else(|e| panic!("{bits:?}: {e:?}"));
    }
}

#[test]
fn published_schema_is_what_is_checked() {
    for (flag, name) in [("select", SchemaName::Select), ("bn", SchemaName::Bn), ("simulate", SchemaName::Simulate)] {
        assert_eq!(json(&["schema", flag]), schema(name));
    }
}

#[test]
fn bits_flag_divides_by_ln2() {
    let nats = json(&["complexity", "--n", "20", "--r", "4"]);
    let bits = json(&["complexity", "--n", "20", "--r", "4", "--bits"]);
    assert!((num(&bits["comp_bits"]) * std::f64::consts::LN_2 - num(&nats["comp_nats"])).abs() < 1e-12);
    assert_eq!(bits["normalizer"], nats["normalizer"]);
}

#[test]
fn tsv_lists_scalars_then_table() {
    let out = mdl(&["select", "-i", data("coin_flips.csv").to_str().unwrap(), "--format", "tsv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("winner\tbernoulli\n"));
    assert!(text.contains("\n# candidates\n"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for (_, args) in outputs() {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = mdl(&args).stdout;
        assert_eq!(first, mdl(&args).stdout, "{args:?}");
        let mut threaded = args.clone();
        threaded.extend(["--threads", "3"]);
        assert_eq!(first, mdl(&threaded).stdout, "{threaded:?}");
    }
}

#[test]
fn seed_changes_simulation() {
    let a = json(&["test", "--simulate", "2000", "--n", "30", "--alpha", "0.5", "--seed", "1"]);
    let b = json(&["test", "--simulate", "2000", "--n", "30", "--alpha", "0.5", "--seed", "2"]);
    assert_eq!(a["seed"], 1);
    assert_ne!(a["rejections"], b["rejections"]);
}

#[test]
fn output_flag_writes_file() {
    let target = scratch("report.json", "");
    let out = mdl(&["complexity", "--n", "2", "-o", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(v["n"], 2);
}
