//! Fixture writers and a runner for the `ksvd` binary.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn ksvd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksvd")).args(args).output().expect("spawn ksvd")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub fn write_csv(path: &Path, rows: &[Vec<f64>]) {
    let text: String =
        rows.iter().map(|r| r.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(",") + "\n").collect();
    fs::write(path, text).unwrap();
}

pub fn write_lines<T: std::fmt::Display>(path: &Path, values: &[T]) {
    fs::write(path, values.iter().map(|v| format!("{v}\n")).collect::<String>()).unwrap();
}

/// Deterministic, generically full-rank perturbation in [-0.05, 0.05).
pub fn wiggle(i: usize, j: usize) -> f64 {
    let h = ((i as f64 * 12.9898 + j as f64 * 78.233).sin() * 43758.5453).fract();
    h * 0.05
}

pub fn points(n: usize, d: usize, shift: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..d).map(|j| ((i + shift) as f64 * 0.7 + j as f64 * 1.3).sin()).collect()).collect()
}

/// 12 documents by 9 terms in three blocks.
pub fn block_matrix() -> (Vec<Vec<f64>>, Vec<usize>, Vec<usize>) {
    let rows =
        (0..12).map(|i| (0..9).map(|j| if i / 4 == j / 3 { 1.0 } else { 0.0 } + wiggle(i, j)).collect()).collect();
    (rows, (0..12).map(|i| i / 4).collect(), (0..9).map(|j| j / 3).collect())
}

pub const TOY_EDGES: &str = "0\t1\n1\t2\n2\t0\n3\t4\n4\t5\n5\t3\n0\t2\n3\t5\n";
pub const TOY_LABELS: [usize; 6] = [0, 0, 0, 1, 1, 1];

pub struct Fixtures {
    pub dir: tempfile::TempDir,
}

impl Fixtures {
    pub fn new() -> Self {
        let f = Fixtures { dir: tempfile::tempdir().unwrap() };
        let (a, docs, terms) = block_matrix();
        write_csv(&f.path("block.csv"), &a);
        write_lines(&f.path("docs.txt"), &docs);
        write_lines(&f.path("terms.txt"), &terms);
        fs::write(f.path("toy.edges"), TOY_EDGES).unwrap();
        write_lines(&f.path("toy_labels.txt"), &TOY_LABELS);
        write_csv(&f.path("x.csv"), &points(10, 3, 0));
        write_csv(&f.path("z.csv"), &points(7, 3, 50));
        f
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn arg(&self, name: &str) -> String {
        path_str(&self.path(name)).to_string()
    }
}

/// Output files written for prefix `out`, sorted by name.
pub fn outputs(out: &Path) -> Vec<PathBuf> {
    let stem = out.file_name().unwrap().to_str().unwrap().to_string();
    let mut files: Vec<PathBuf> = fs::read_dir(out.parent().unwrap())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with(&format!("{stem}.")))
        .collect();
    files.sort();
    files
}
