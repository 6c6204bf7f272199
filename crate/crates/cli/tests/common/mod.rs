#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_anchor-absa");

/// Runs the binary inside `dir` so relative paths in manifests stay stable.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().expect("binary runs")
}

/// Like [`run`] but panics with the captured stderr on failure.
pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "`{}` failed with {:?}:\n{}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// A small synthetic pipeline run end to end; every artifact lands in `dir`.
pub fn pipeline(dir: &Path, seed: u64) {
    let seed = seed.to_string();
    let s = seed.as_str();
    ok(dir, &["synth", "--seed", s, "--sentences", "600", "--words-per-topic", "30", "--out", "syn.jsonl"]);
    ok(dir, &["ingest", "syn.jsonl", "--format", "jsonl", "--min-count", "1", "--out", "corpus.jsonl"]);
    ok(
        dir,
        &[
            "embed",
            "--seed",
            s,
            "--corpus",
            "corpus.jsonl",
            "--min-count",
            "1",
            "--dim",
            "16",
            "--epochs",
            "3",
            "--out",
            "vectors.txt",
        ],
    );
    ok(dir, &["run-cat", "--corpus", "corpus.jsonl", "--embeddings", "vectors.txt", "--out", "cat.jsonl"]);
    ok(
        dir,
        &[
            "train-abae",
            "--seed",
            s,
            "--corpus",
            "corpus.jsonl",
            "--embeddings",
            "vectors.txt",
            "--k",
            "3",
            "--epochs",
            "2",
            "--anchors",
            "cat.jsonl",
            "--sigma",
            "0.1",
            "--out",
            "model.bin",
        ],
    );
    ok(
        dir,
        &[
            "predict-abae",
            "--corpus",
            "corpus.jsonl",
            "--embeddings",
            "vectors.txt",
            "--model",
            "model.bin",
            "--auto-map",
            "--out",
            "abae.jsonl",
        ],
    );
    ok(
        dir,
        &[
            "ensemble-rule",
            "--corpus",
            "corpus.jsonl",
            "--embeddings",
            "vectors.txt",
            "--cat",
            "cat.jsonl",
            "--abae",
            "abae.jsonl",
            "--out",
            "ensemble.jsonl",
        ],
    );
    ok(dir, &["evaluate", "--pred", "ensemble.jsonl", "--gold", "corpus.jsonl", "--out", "report.json"]);
    ok(
        dir,
        &[
            "top-words",
            "--model",
            "model.bin",
            "--embeddings",
            "vectors.txt",
            "--write-mapping",
            "mapping.tsv",
        ],
    );
}

/// Artifact bytes keyed by file name; manifests lose their wall-clock timings.
pub fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let bytes = std::fs::read(&path).unwrap();
            if name.ends_with(".manifest.json") {
                let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                v.as_object_mut().unwrap().remove("timings_ms");
                (name, serde_json::to_vec(&v).unwrap())
            } else {
                (name, bytes)
            }
        })
        .collect();
    out.sort();
    out
}
