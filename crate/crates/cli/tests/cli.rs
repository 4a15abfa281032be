//! End-to-end runs of the `ksvd` binary.

mod common;

use std::fs;

use common::*;
use ksvd::{io, EmbeddingSide, FitOptions, KernelSpec};
use serde_json::Value;

fn metrics(path: &std::path::Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn metric(records: &[Value], name: &str) -> f64 {
    records.iter().find(|r| r["metric_name"] == name).unwrap_or_else(|| panic!("no {name}"))["value"].as_f64().unwrap()
}

#[test]
fn embed_matches_library_fit() {
    let f = Fixtures::new();
    let out = f.arg("run");
    let o = ksvd(&[
        "embed",
        "--input",
        &f.arg("x.csv"),
        "--z-input",
        &f.arg("z.csv"),
        "--kernel",
        "rbf",
        "--gamma",
        "1.5",
        "--rank",
        "3",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let x = io::load_dense_csv(f.path("x.csv")).unwrap();
    let z = io::load_dense_csv(f.path("z.csv")).unwrap();
    let model = ksvd::fit(&x, &z, &KernelSpec::Rbf { gamma: 1.5 }, None, &FitOptions::new(3)).unwrap();
    for (side, suffix) in [(EmbeddingSide::Left, "left"), (EmbeddingSide::Right, "right")] {
        let expected = f.path(&format!("lib.{suffix}.csv"));
        io::save_embeddings(&expected, &model.embeddings(side).unwrap()).unwrap();
        assert_eq!(fs::read(&expected).unwrap(), fs::read(format!("{out}.{suffix}.csv")).unwrap(), "{suffix}");
    }
    let fit: Value = serde_json::from_str(&fs::read_to_string(format!("{out}.fit.json")).unwrap()).unwrap();
    assert!(fit["residual_left"].as_f64().unwrap() <= 1e-8);
    assert!(fit["residual_right"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn identity_with_linear_kernel_has_flat_spectrum() {
    let f = Fixtures::new();
    let eye: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    write_csv(&f.path("eye.csv"), &eye);
    let out = f.arg("eye");
    let o = ksvd(&["embed", "--input", &f.arg("eye.csv"), "--kernel", "linear", "--rank", "2", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let fit: Value = serde_json::from_str(&fs::read_to_string(format!("{out}.fit.json")).unwrap()).unwrap();
    for l in fit["lambdas"].as_array().unwrap() {
        assert!((l.as_f64().unwrap() - 0.25).abs() <= 1e-12);
    }
    let left = io::load_dense_csv(format!("{out}.left.csv")).unwrap();
    assert_eq!((left.nrows(), left.ncols()), (4, 2));
}

#[test]
fn toy_graph_reports_classification_and_reconstruction() {
    let f = Fixtures::new();
    let out = f.arg("toy");
    let o = ksvd(&[
        "graph",
        "--input",
        &f.arg("toy.edges"),
        "--labels",
        &f.arg("toy_labels.txt"),
        "--kernel",
        "linear",
        "--rank",
        "2",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = metrics(&f.path("toy.metrics.jsonl"));
    for r in &m {
        for key in ["task", "metric_name", "value", "seed", "config_hash"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
    }
    assert_eq!(metric(&m, "micro_f1"), 1.0);
    assert_eq!(metric(&m, "macro_f1"), 1.0);
    assert!(metric(&m, "l1") >= 0.0 && metric(&m, "l2") >= 0.0);
}

#[test]
fn edgeless_graph_reconstructs_perfectly() {
    let f = Fixtures::new();
    fs::write(f.path("empty.edges"), "# n=5\n").unwrap();
    let out = f.arg("empty");
    let o = ksvd(&["graph", "--input", &f.arg("empty.edges"), "--gamma", "1", "--rank", "2", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = metrics(&f.path("empty.metrics.jsonl"));
    assert_eq!(metric(&m, "l1"), 0.0);
}

#[test]
fn bicluster_recovers_blocks() {
    let f = Fixtures::new();
    let out = f.arg("bc");
    let o = ksvd(&[
        "bicluster",
        "--input",
        &f.arg("block.csv"),
        "--labels",
        &f.arg("docs.txt"),
        "--term-labels",
        &f.arg("terms.txt"),
        "--kernel",
        "linear",
        "--rank",
        "3",
        "--clusters",
        "3",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = metrics(&f.path("bc.metrics.jsonl"));
    assert!((metric(&m, "doc_nmi") - 1.0).abs() <= 1e-12);
    assert!((metric(&m, "term_nmi") - 1.0).abs() <= 1e-12);
    assert_eq!(fs::read_to_string(f.path("bc.doc_labels.txt")).unwrap().lines().count(), 12);
}

#[test]
fn single_cluster_carries_no_information() {
    let f = Fixtures::new();
    let out = f.arg("one");
    let o = ksvd(&[
        "bicluster",
        "--input",
        &f.arg("block.csv"),
        "--labels",
        &f.arg("docs.txt"),
        "--kernel",
        "linear",
        "--rank",
        "3",
        "--clusters",
        "1",
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(metric(&metrics(&f.path("one.metrics.jsonl")), "doc_nmi"), 0.0);
}

#[test]
fn bench_without_threshold_stops_at_first_knob() {
    let f = Fixtures::new();
    let out = f.arg("b");
    let o = ksvd(&["bench", "--synthetic", "120", "--rank", "5", "--eps", "inf", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trials = metrics(&f.path("b.bench.jsonl"));
    assert_eq!(trials.len(), 4);
    let mut fields: Vec<&str> = trials[0].as_object().unwrap().keys().map(String::as_str).collect();
    fields.sort_unstable();
    assert_eq!(fields, ["eta", "m_sub", "n_sub", "oversample", "seconds", "seed", "solver", "success"]);
    assert!(trials.iter().all(|t| t["success"] == true));
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    let f = Fixtures::new();
    assert_eq!(code(&ksvd(&["--help"])), 0);
    assert_eq!(code(&ksvd(&["embed", "--out", &f.arg("a")])), 1);
    assert_eq!(code(&ksvd(&["embed", "--input", &f.arg("x.csv"), "--rank", "0", "--out", &f.arg("a")])), 1);
    assert_eq!(code(&ksvd(&["embed", "--input", &f.arg("missing.csv"), "--out", &f.arg("a")])), 2);
    fs::write(f.path("bad.csv"), "1,2\n3,oops\n").unwrap();
    assert_eq!(code(&ksvd(&["embed", "--input", &f.arg("bad.csv"), "--out", &f.arg("a")])), 2);
    let underflow = ksvd(&[
        "embed",
        "--input",
        &f.arg("x.csv"),
        "--z-input",
        &f.arg("z.csv"),
        "--kernel",
        "sne",
        "--gamma",
        "1e-6",
        "--out",
        &f.arg("a"),
    ]);
    assert_eq!(code(&underflow), 3, "{}", String::from_utf8_lossy(&underflow.stderr));
}

#[test]
fn same_seed_reproduces_every_file() {
    let f = Fixtures::new();
    let out = f.arg("rs");
    let args = [
        "embed",
        "--input",
        &f.arg("block.csv"),
        "--kernel",
        "rbf",
        "--compat",
        "a2",
        "--solver",
        "rsvd",
        "--oversample",
        "4",
        "--rank",
        "3",
        "--seed",
        "7",
        "--out",
        &out,
    ];
    let snapshot = || -> Vec<(std::path::PathBuf, Vec<u8>)> {
        let o = ksvd(&args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outputs(&f.path("rs")).into_iter().map(|p| (p.clone(), fs::read(p).unwrap())).collect()
    };
    let first = snapshot();
    assert_eq!(first.len(), 4);
    assert_eq!(first, snapshot());
}
