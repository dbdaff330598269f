//! File names of the stage outputs and readers for them.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use storynet_core::netbuild::{BuilderTag, LexicalNetwork};
use storynet_core::Story;

use crate::error::{CliError, Result};

pub const CORPUS: &str = "corpus.jsonl";
pub const EXCLUSIONS: &str = "exclusions.csv";
pub const NETWORKS: &str = "networks.jsonl";
pub const NETWORK_DIR: &str = "networks";
pub const FEATURES: &str = "features.csv";
pub const HISTOGRAMS: &str = "histograms.csv";
pub const TRAJECTORIES: &str = "trajectories.csv";
pub const EMOTIONS: &str = "emotions.csv";
pub const RESULTS: &str = "results.json";
pub const COMPARISON: &str = "comparison.csv";
pub const SUMMARY: &str = "summary.txt";

pub fn spread_file(retention: f64) -> String {
    format!("spread_r{retention}.csv")
}

pub fn attribution_file(target: &str) -> String {
    format!("attributions_{}.csv", file_safe(target))
}

/// Replace characters that are awkward in file names.
pub fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// `out/name`, or a missing-stage error naming `stage`.
pub fn require(out: &Path, name: &str, stage: &'static str) -> Result<PathBuf> {
    let path = out.join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(CliError::MissingStage { stage, path })
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::bad(format!("cannot read {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writer that never emits a header by itself; callers write it explicitly.
pub fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::bad(format!("{}: {e}", path.display())))
}

pub fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::bad(format!("{}: {e}", path.display()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, &item).expect("record serialises");
        buf.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(&buf).map_err(|e| CliError::io(path, e))
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    read_text(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::bad(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

pub fn read_corpus(out: &Path) -> Result<(PathBuf, Vec<Story>)> {
    let path = require(out, CORPUS, "preprocess")?;
    let stories = read_jsonl(&path)?;
    Ok((path, stories))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub story_id: String,
    pub network: LexicalNetwork,
}

pub fn read_networks(out: &Path) -> Result<(PathBuf, Vec<NetworkRecord>)> {
    let path = require(out, NETWORKS, "build")?;
    let nets = read_jsonl(&path)?;
    Ok((path, nets))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub story_id: String,
    pub builder: BuilderTag,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub density: f64,
    pub avg_local_clustering: f64,
    pub aspl_lcc: f64,
    pub diameter_lcc: usize,
    pub pagerank_centralisation: f64,
    pub n_components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadRecord {
    pub story_id: String,
    pub builder: BuilderTag,
    pub prompt_index: usize,
    pub prompt: String,
    pub seed: String,
    pub matched: bool,
    pub alpha: f64,
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    rdr.deserialize().map(|r| r.map_err(csv_err(path))).collect()
}

/// `z_<emotion>` columns of emotions.csv by story.
pub fn read_emotion_z(path: &Path) -> Result<BTreeMap<String, [f64; 8]>> {
    use storynet_core::Emotion;
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::bad(format!("{}: no `{name}` column", path.display())))
    };
    let id = col("story_id")?;
    let mut idx = [0usize; 8];
    for e in Emotion::ALL {
        idx[e.index()] = col(&format!("z_{}", e.name()))?;
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let mut z = [0.0; 8];
        for (k, &c) in idx.iter().enumerate() {
            z[k] = rec[c]
                .parse()
                .map_err(|_| CliError::bad(format!("{}: bad number `{}`", path.display(), &rec[c])))?;
        }
        out.insert(rec[id].to_string(), z);
    }
    Ok(out)
}
