#![allow(dead_code)]

use std::path::PathBuf;

use comm_analysis::ced::{parse_model, ModelRepository, SourceFile};
use comm_analysis::lint::LintConfig;
use comm_analysis::workspace::Workspace;

pub fn corpus(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus").join(rel)
}

pub fn sources(rel: &str) -> Vec<SourceFile> {
    Workspace::load(&corpus(rel), None).expect("corpus loads").sources
}

pub fn load(rel: &str) -> (ModelRepository, LintConfig) {
    let ws = Workspace::load(&corpus(rel), None).expect("corpus loads");
    let repo = parse_model(&ws.sources).unwrap_or_else(|e| panic!("{rel}: {e}"));
    (repo, ws.config)
}

/// Names of the seeded fixture directories, sorted.
pub fn seeded_codes() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus("seeded"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}
