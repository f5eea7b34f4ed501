use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_inhomo"));
    c.env_remove("INHOM_OUT_DIR");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn inhomo")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Synthetic piecewise series split 4:1 into train.csv / test.csv.
fn train_test(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    ok(dir, &["synth", "--kind", "piecewise-gp", "--n", &n.to_string(), "--seed", "5", "--out", "all.csv"]);
    let text = std::fs::read_to_string(dir.join("all.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let (mut train, mut test) = (vec![header], vec![header]);
    for (i, l) in lines.enumerate() {
        if i % 5 == 4 { test.push(l) } else { train.push(l) }
    }
    std::fs::write(dir.join("train.csv"), train.join("\n") + "\n").unwrap();
    std::fs::write(dir.join("test.csv"), test.join("\n") + "\n").unwrap();
    (dir.join("train.csv"), dir.join("test.csv"))
}

#[test]
fn inhom_writes_report_and_lvalues() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "stationary-gp", "--n", "200", "--seed", "1", "--out", "d.csv"]);
    ok(d, &["inhom", "--input", "d.csv", "--outputs", "y", "--inputs", "x1", "--delta", "0.05", "--lvalues", "lv.csv"]);

    let r = json(d.join("report.json"));
    for key in ["n", "m", "p", "incompatible_indices", "config"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["n"], 200);
    let m = r["m"].as_u64().unwrap() as f64;
    assert_eq!(r["p"].as_f64().unwrap(), m / 199.0);

    let lv = std::fs::read_to_string(d.join("lv.csv")).unwrap();
    assert_eq!(lv.lines().next().unwrap(), "index,L,band_lo,band_hi,incompatible");
    assert_eq!(lv.lines().count(), 200);
}

#[test]
fn noise_bands_from_synth() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "noisy-trend", "--n", "3000", "--out", "t.csv", "--noise-out", "a.csv"]);
    ok(d, &["inhom", "--input", "t.csv", "--outputs", "y", "--noise", "a.csv", "--out", "r.json"]);
    let r = json(d.join("r.json"));
    assert_eq!(r["config"]["tolerance"]["mode"], "per_index");
    assert!(r["p"].as_f64().unwrap() < 1e-2);
}

#[test]
fn out_dir_env_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "unit-root", "--n", "300", "--out", "w.csv"]);
    let out_dir = d.join("outputs");
    let out = bin()
        .current_dir(d)
        .env("INHOM_OUT_DIR", &out_dir)
        .args(["adf", "--input", "w.csv", "--column", "y"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let r = json(out_dir.join("adf.json"));
    for key in ["statistic", "lags_used", "reject_at", "p_value"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "stationary-gp", "--n", "50", "--out", "d.csv"]);

    let both = run(d, &["inhom", "--input", "d.csv", "--outputs", "y", "--delta", "0.05", "--beta", "0.1"]);
    assert_eq!(code(&both), 2);
    assert_eq!(code(&run(d, &["inhom", "--input", "d.csv", "--outputs", "y", "--bogus"])), 2);
    assert_eq!(code(&run(d, &["frobnicate"])), 2);
    assert_eq!(code(&run(d, &["inhom", "--outputs", "y"])), 2, "no input anywhere");
    assert_eq!(code(&run(d, &["synth", "--kind", "unit-root", "--noise-out", "x.csv"])), 2);

    assert_eq!(code(&run(d, &["inhom", "--input", "missing.csv", "--outputs", "y"])), 3);
    assert_eq!(code(&run(d, &["inhom", "--input", "d.csv", "--outputs", "nope"])), 3);

    // a flat stretch gives a zero-variance correlation window
    let mut text = String::from("t,y\n");
    for i in 0..60 {
        let y = if (20..40).contains(&i) { 1.0 } else { (i as f64 * 0.7).sin() };
        text.push_str(&format!("{i},{y}\n"));
    }
    std::fs::write(d.join("flat.csv"), text).unwrap();
    let out = run(d, &["inhom", "--input", "flat.csv", "--outputs", "y"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[numerical]"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    train_test(d, 60);
    std::fs::write(
        d.join("run.toml"),
        "rng_seed = 3\n[chain]\nmodel = \"nonstationary\"\nn_iter = 400\nn_burn = 100\nlookback = 350\n",
    )
    .unwrap();
    // lookback 350 leaves too few iterations; the flag fixes it
    assert_eq!(code(&run(d, &["fit", "--input", "train.csv", "--config", "run.toml"])), 2);
    ok(d, &["fit", "--input", "train.csv", "--config", "run.toml", "--lookback", "50", "--out", "m.json"]);
    let m = json(d.join("m.json"));
    assert_eq!(m["chain"]["lookback"], 50);
    assert_eq!(m["chain"]["n_iter"], 400);
    assert_eq!(m["chain"]["rng_seed"], 3);
    assert_eq!(m["model"], "nonstationary");

    std::fs::write(d.join("bad.toml"), "[chain]\nn_iter = 400\nlokback = 5\n").unwrap();
    let out = run(d, &["fit", "--input", "train.csv", "--config", "bad.toml"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.toml:3"));

    std::fs::write(d.join("empty.toml"), "").unwrap();
    ok(d, &["inhom", "--input", "train.csv", "--outputs", "y", "--config", "empty.toml"]);
}

#[test]
fn fit_predict_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    train_test(d, 60);
    ok(d, &[
        "fit", "--model", "nonstationary", "--input", "train.csv", "--n-iter", "600", "--n-burn", "200",
        "--lookback", "40", "--seed", "2", "--trace", "trace.csv",
    ]);
    let trace = std::fs::read_to_string(d.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "iter,ell_1,delta_1,log_post_outer,log_post_inner_1");
    assert_eq!(trace.lines().count(), 601);

    ok(d, &["predict", "--model", "model.json", "--test", "test.csv"]);
    let preds = std::fs::read_to_string(d.join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().next().unwrap(), "index,x1,truth,mean,sd");
    assert_eq!(preds.lines().count(), 13);

    ok(d, &["evaluate", "--predictions", "predictions.csv", "--model", "model.json"]);
    let s = json(d.join("summary.json"));
    assert_eq!(s["n_test"], 12);
    let c = s["C"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&c));
    assert!(s["rmse"].as_f64().unwrap() >= 0.0);
    assert_eq!(s["model"]["kind"], "nonstationary");

    // inputs only: predictions carry no truth and cannot be scored
    std::fs::write(d.join("x.csv"), "x1\n0.5\n1.5\n").unwrap();
    ok(d, &["predict", "--model", "model.json", "--test", "x.csv", "--out", "px.csv"]);
    let px = std::fs::read_to_string(d.join("px.csv")).unwrap();
    assert!(px.lines().nth(1).unwrap().starts_with("1,0.5,,"));
    assert_eq!(code(&run(d, &["evaluate", "--predictions", "px.csv"])), 3);
}

#[test]
fn tampered_model_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    train_test(d, 40);
    ok(d, &["fit", "--input", "train.csv", "--n-iter", "300", "--n-burn", "100"]);
    let text = std::fs::read_to_string(d.join("model.json")).unwrap();
    let mut m: Value = serde_json::from_str(&text).unwrap();
    m["train_y"][0] = Value::from(123.0);
    std::fs::write(d.join("model.json"), serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(code(&run(d, &["predict", "--model", "model.json", "--test", "test.csv"])), 3);
}

#[test]
fn pipeline_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    train_test(d, 60);
    let out = ok(d, &[
        "pipeline", "--train", "train.csv", "--test", "test.csv", "--models", "stationary,nonstationary",
        "--n-iter", "500", "--n-burn", "100", "--lookback", "30", "--out-dir", "cmp",
    ]);
    let table = std::fs::read_to_string(d.join("cmp/comparison.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "model,rmse,C");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("stationary,") && rows[2].starts_with("nonstationary,"));
    let c = json(d.join("cmp/comparison.json"));
    assert_eq!(c["n_train"], 48);
    assert!(c["models"]["stationary"]["C"].is_number());
    assert!(String::from_utf8_lossy(&out.stdout).contains("RMSE"));
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--kind", "piecewise-gp", "--n", "300", "--seed", "9", "--out", "a.csv"]);
    ok(d, &["synth", "--kind", "piecewise-gp", "--n", "300", "--seed", "9", "--out", "b.csv"]);
    ok(d, &["synth", "--kind", "piecewise-gp", "--n", "300", "--seed", "10", "--out", "c.csv"]);
    let read = |f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn help_lists_options_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let expect: &[(&str, &[&str])] = &[
        ("inhom", &["--input", "--outputs", "--inputs", "--delta", "--beta", "--estimator", "--half-width", "--out", "--lvalues"]),
        ("adf", &["--input", "--column", "--max-lag", "--lag-rule", "--out"]),
        ("fit", &["--model", "--input", "--config", "--out", "--trace"]),
        ("predict", &["--model", "--test", "--out"]),
        ("evaluate", &["--predictions", "--out"]),
        ("synth", &["--kind", "--n", "--seed", "--out", "--noise-out"]),
        ("pipeline", &["--train", "--test", "--models"]),
    ];
    for (sub, flags) in expect {
        let out = ok(dir.path(), &[sub, "--help"]);
        let help = String::from_utf8_lossy(&out.stdout);
        for f in *flags {
            assert!(help.contains(f), "{sub} --help lacks {f}");
        }
        assert!(help.contains("[default:"), "{sub} --help shows no defaults");
    }
}
