use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn msfrag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msfrag")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = msfrag(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/methylaminomethanol.jsonl")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TINY: &str = "hidden_dim = 8\nl1 = 1\nl2 = 1\nj = 1\nfourier_t = 2\nmax_epochs = 2\nbatch_size = 8\n";

/// Column `name` of the summary row `row` in an evaluate report.
fn report_value(csv: &str, row: &str, name: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == name).unwrap();
    let line = lines.find(|l| l.starts_with(&format!("{row},"))).unwrap();
    line.split(',').nth(col).unwrap().parse().unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_one() {
    let out = msfrag(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(msfrag(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(msfrag(&["fragment", "--mol", s(&bundled()), "--bogus"]).status.code(), Some(1));
}

#[test]
fn help_lists_flags_with_defaults() {
    let help = ok(&["fragment", "--help"]);
    for flag in ["--mol", "--depth", "--hydrogen-tol", "--mode", "--out", "[default: 3]", "[default: protonated]"] {
        assert!(help.contains(flag), "missing {flag}");
    }
}

#[test]
fn fragment_reports_bundled_example() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("dag.jsonl");
    let out = ok(&["fragment", "--mol", s(&bundled()), "--depth", "3", "--out", s(&dump)]);
    assert!(out.contains("nodes=10"), "{out}");
    let lines = std::fs::read_to_string(&dump).unwrap();
    assert!(lines.lines().count() >= 10);
}

#[test]
fn stochastic_verbs_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = msfrag(&["synth", "--random", "5", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json}\n").unwrap();
    assert_eq!(msfrag(&["fragment", "--mol", s(&bad)]).status.code(), Some(2));
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "hidden_dims = 8\n").unwrap();
    let data = dir.path().join("data");
    ok(&["synth", "--random", "5", "--seed", "1", "--out", s(&data)]);
    let out = msfrag(&[
        "train",
        "--data",
        s(&data),
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("m.ckpt")),
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_gradient_check_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, TINY).unwrap();
    let out = msfrag(&["gradcheck", "--mol", s(&bundled()), "--config", s(&cfg), "--seed", "1", "--tolerance", "0"]);
    assert_eq!(out.status.code(), Some(3));
    let text = ok(&["gradcheck", "--mol", s(&bundled()), "--config", s(&cfg), "--seed", "1"]);
    assert!(text.contains("failures=0"), "{text}");
}

#[test]
fn synth_train_predict_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    std::fs::write(p("run.cfg"), TINY).unwrap();

    ok(&[
        "synth",
        "--random",
        "40",
        "--seed",
        "3",
        "--os-fraction",
        "0.1",
        "--hydrogen-tol",
        "1",
        "--out",
        s(&p("data")),
    ]);
    ok(&[
        "synth",
        "--random",
        "40",
        "--seed",
        "3",
        "--os-fraction",
        "0.1",
        "--hydrogen-tol",
        "1",
        "--out",
        s(&p("again")),
    ]);
    for f in ["molecules.jsonl", "spectra.msp"] {
        assert_eq!(std::fs::read(p("data").join(f)).unwrap(), std::fs::read(p("again").join(f)).unwrap());
    }

    let train = |out: &str, seed: &str| {
        ok(&[
            "train",
            "--data",
            s(&p("data")),
            "--config",
            s(&p("run.cfg")),
            "--out",
            s(&p(out)),
            "--seed",
            seed,
            "--history",
            s(&p("history.csv")),
        ])
    };
    train("a.ckpt", "1");
    train("a2.ckpt", "1");
    train("b.ckpt", "2");
    assert_eq!(std::fs::read(p("a.ckpt")).unwrap(), std::fs::read(p("a2.ckpt")).unwrap());
    assert_eq!(std::fs::read_to_string(p("history.csv")).unwrap().lines().count(), 3);

    let mols = p("data").join("molecules.jsonl");
    let truth = p("data").join("spectra.msp");
    ok(&[
        "predict",
        "--model",
        s(&p("a.ckpt")),
        "--mol",
        s(&mols),
        "--out",
        s(&p("pred.msp")),
        "--annotated",
        s(&p("ann.jsonl")),
    ]);
    let ann = std::fs::read_to_string(p("ann.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(ann.lines().next().unwrap()).unwrap();
    assert!(first["molecule_id"].is_string() && first["top_annotations"].is_array());

    ok(&[
        "evaluate",
        "--pred",
        s(&p("pred.msp")),
        "--truth",
        s(&p("pred.msp")),
        "--metrics",
        "coshun",
        "--report",
        s(&p("self.csv")),
    ]);
    let self_csv = std::fs::read_to_string(p("self.csv")).unwrap();
    assert!((report_value(&self_csv, "mean", "coshun") - 1.0).abs() < 1e-9);

    ok(&[
        "evaluate",
        "--pred",
        s(&p("pred.msp")),
        "--truth",
        s(&truth),
        "--metrics",
        "cos001,coshun,recall,os",
        "--molecules",
        s(&mols),
        "--hydrogen-tol",
        "1",
        "--report",
        s(&p("eval.csv")),
    ]);
    let eval = std::fs::read_to_string(p("eval.csv")).unwrap();
    assert_eq!(eval.lines().count(), 40 + 3);
    let wr = report_value(&eval, "mean", "weighted_recall");
    let os = report_value(&eval, "mean", "os_measured");
    assert!((wr + os - 1.0).abs() < 1e-9);
    assert!((os - 0.1).abs() < 1e-6);

    let out = msfrag(&[
        "evaluate",
        "--pred",
        s(&p("pred.msp")),
        "--truth",
        s(&truth),
        "--metrics",
        "os",
        "--report",
        s(&p("x.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));

    ok(&[
        "retrieve",
        "--truth-spectra",
        s(&truth),
        "--corpus",
        s(&mols),
        "--model",
        s(&p("a.ckpt")),
        "--candidates",
        "5",
        "--k",
        "1,5",
        "--report",
        s(&p("rank.csv")),
    ]);
    let rank = std::fs::read_to_string(p("rank.csv")).unwrap();
    assert_eq!(rank.lines().next().unwrap(), "molecule_id,rank,top1,top5");
    let rate_line = rank.lines().last().unwrap();
    assert_eq!(rate_line.split(',').nth(3).unwrap().parse::<f64>().unwrap(), 1.0);

    ok(&[
        "ensemble",
        "--models",
        &format!("{},{}", s(&p("a.ckpt")), s(&p("b.ckpt"))),
        "--mol",
        s(&mols),
        "--truth",
        s(&truth),
        "--report",
        s(&p("ens.csv")),
    ]);
    let ens = std::fs::read_to_string(p("ens.csv")).unwrap();
    assert!(ens.starts_with("metric,value\nmodels,2\n"));
    let out = msfrag(&["ensemble", "--models", s(&p("a.ckpt")), "--mol", s(&mols), "--report", s(&p("e.csv"))]);
    assert_eq!(out.status.code(), Some(1));
}
