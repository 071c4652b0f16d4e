//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rec_audit::parser::extract_recommendations;
use rec_audit::sim::Document;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/parser")
}

/// Breadth encoded as the `_bN` suffix of a fixture name.
pub fn breadth_of(stem: &str) -> usize {
    let (_, b) = stem.rsplit_once("_b").expect("fixture name ends in _bN");
    b.parse().expect("numeric breadth")
}

/// Parser output in the `.expected` format: one id per line, or the error offset.
pub fn render_outcome(html: &str, breadth: usize) -> String {
    match extract_recommendations(&Document::new(html), breadth) {
        Ok(ids) => ids.iter().map(|id| format!("{}\n", id.as_str())).collect(),
        Err(e) => format!("error at byte {}\n", e.offset),
    }
}

pub struct GoldenOutcome {
    pub total: usize,
    pub mismatches: Vec<String>,
}

/// Runs every parser fixture. With `UPDATE_GOLDEN=1` the expected files are
/// rewritten from the current output instead of compared.
pub fn run_golden() -> GoldenOutcome {
    let update = std::env::var("UPDATE_GOLDEN").is_ok_and(|v| v == "1");
    let mut stems: Vec<PathBuf> = fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "html"))
        .collect();
    stems.sort();
    let mut mismatches = Vec::new();
    for html_path in &stems {
        let stem = html_path.file_stem().unwrap().to_str().unwrap();
        let html = fs::read_to_string(html_path).unwrap();
        let got = render_outcome(&html, breadth_of(stem));
        let expected_path = html_path.with_extension("expected");
        if update {
            fs::write(&expected_path, &got).unwrap();
            continue;
        }
        let want = fs::read_to_string(&expected_path).unwrap_or_default();
        if got != want {
            mismatches.push(format!("{stem}: expected {want:?}, got {got:?}"));
        }
    }
    GoldenOutcome {
        total: stems.len(),
        mismatches,
    }
}
