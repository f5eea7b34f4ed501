//! The `pipeline` subcommand driven from code: synthesise data, split it,
//! and let the command line fit, predict and compare both models.

use std::path::Path;

use inhomo::cli::dispatch;

fn main() {
    let dir = std::env::temp_dir().join("inhomo-pipeline");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();

    run(&["synth", "--kind", "piecewise-gp", "--n", "125", "--seed", "2", "--out", &p("all.csv")]);

    // every fifth row goes to the test file
    let text = std::fs::read_to_string(dir.join("all.csv")).expect("synth output");
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let (mut train, mut test) = (vec![header], vec![header]);
    for (i, l) in lines.enumerate() {
        if i % 5 == 4 { test.push(l) } else { train.push(l) }
    }
    write(&dir.join("train.csv"), &train);
    write(&dir.join("test.csv"), &test);

    run(&["inhom", "--input", &p("train.csv"), "--outputs", "y", "--out", &p("inhom.json")]);
    run(&[
        "pipeline", "--train", &p("train.csv"), "--test", &p("test.csv"),
        "--n-iter", "5000", "--n-burn", "1000", "--lookback", "50", "--seed", "2",
        "--out-dir", &p("out"),
    ]);
    println!("outputs in {}", dir.display());
}

fn run(args: &[&str]) {
    let code = dispatch(std::iter::once("inhomo").chain(args.iter().copied()));
    if code != 0 {
        std::process::exit(code);
    }
}

fn write(path: &Path, lines: &[&str]) {
    std::fs::write(path, lines.join("\n") + "\n").expect("write split");
}
