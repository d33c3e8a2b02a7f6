//! Per-directory record of which stage produced which artifact from which
//! inputs, used to refuse stale upstream artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use hgc_core::config::RunConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::formats::{read_bytes, read_json, write_json};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Stage {
    Pca,
    Segment,
    Graph,
    Partition,
    Train,
    Predict,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Pca,
        Stage::Segment,
        Stage::Graph,
        Stage::Partition,
        Stage::Train,
        Stage::Predict,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Pca => "pca",
            Stage::Segment => "segment",
            Stage::Graph => "graph",
            Stage::Partition => "partition",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Eval => "eval",
        }
    }

    pub fn from_name(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Raw inputs the stage reads.
    pub fn raw_inputs(self) -> &'static [RawInput] {
        match self {
            Stage::Pca | Stage::Segment => &[RawInput::Cube],
            Stage::Graph => &[RawInput::Cube, RawInput::Labels],
            Stage::Eval => &[RawInput::Labels],
            _ => &[],
        }
    }

    /// Upstream artifacts the stage reads: producer and file name, where a
    /// trailing `/` selects every file under that directory.
    pub fn reads(self) -> &'static [(Stage, &'static str)] {
        match self {
            Stage::Pca => &[],
            Stage::Segment => &[(Stage::Pca, "pca.json")],
            Stage::Graph => &[(Stage::Pca, "pca.json"), (Stage::Segment, "segmentation.json")],
            Stage::Partition => &[(Stage::Graph, "graph.json")],
            Stage::Train => &[(Stage::Partition, "subgraphs/")],
            Stage::Predict => &[
                (Stage::Train, "model.json"),
                (Stage::Partition, "subgraphs/"),
                (Stage::Segment, "segmentation.json"),
            ],
            Stage::Eval => &[(Stage::Predict, "prediction.labels.txt"), (Stage::Graph, "graph.json")],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawInput {
    Cube,
    Labels,
}

impl RawInput {
    pub fn key(self) -> &'static str {
        match self {
            RawInput::Cube => "cube",
            RawInput::Labels => "labels",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Input name → content hash at the time the stage ran.
    pub inputs: BTreeMap<String, String>,
    /// Output file (relative to the output directory) → content hash.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub config: RunConfig,
    pub inputs: BTreeMap<String, FileRecord>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn new(config: RunConfig) -> Self {
        Self {
            version: 1,
            config,
            inputs: BTreeMap::new(),
            stages: BTreeMap::new(),
        }
    }

    pub fn load(dir: &Path) -> CliResult<Option<Manifest>> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(None);
        }
        read_json(&path).map(Some)
    }

    pub fn save(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join(MANIFEST), self)
    }

    pub fn stage(&self, s: Stage) -> Option<&StageRecord> {
        self.stages.get(s.name())
    }

    /// Records `s` and forgets every later stage.
    pub fn record(&mut self, s: Stage, rec: StageRecord) {
        self.stages.retain(|name, _| Stage::from_name(name).is_some_and(|t| t < s));
        self.stages.insert(s.name().to_owned(), rec);
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> CliResult<String> {
    Ok(sha256_hex(&read_bytes(path)?))
}

/// Hash of a cube: header and payload together.
pub fn hash_cube(header: &Path) -> CliResult<String> {
    let h: crate::formats::CubeHeader = read_json(header)?;
    let payload = header.parent().unwrap_or(Path::new(".")).join(&h.payload);
    let mut hasher = Sha256::new();
    hasher.update(read_bytes(header)?);
    hasher.update(read_bytes(&payload)?);
    Ok(format!("{:x}", hasher.finalize()))
}

pub fn hash_input(kind: RawInput, path: &Path) -> CliResult<String> {
    match kind {
        RawInput::Cube => hash_cube(path),
        RawInput::Labels => hash_file(path),
    }
}

/// Checks that every upstream artifact `s` reads still has the hash its
/// producer recorded. Returns the verified `name → hash` pairs.
pub fn verify_upstream(manifest: &Manifest, dir: &Path, s: Stage, force: bool) -> CliResult<BTreeMap<String, String>> {
    let mut seen = BTreeMap::new();
    for &(producer, name) in s.reads() {
        let rec = manifest.stage(producer).ok_or(CliError::MissingStage(producer.name()))?;
        let files: Vec<(&String, &String)> = if let Some(prefix) = name.strip_suffix('/') {
            rec.outputs.iter().filter(|(k, _)| k.starts_with(prefix) && k[prefix.len()..].starts_with('/')).collect()
        } else {
            rec.outputs.get_key_value(name).into_iter().collect()
        };
        if files.is_empty() {
            return Err(CliError::MissingStage(producer.name()));
        }
        for (file, recorded) in files {
            let path = dir.join(file);
            let now = hash_file(&path)?;
            if &now != recorded && !force {
                return Err(CliError::Stale(format!(
                    "{} changed since stage {producer} wrote it",
                    path.display()
                )));
            }
            seen.insert(file.clone(), now);
        }
    }
    Ok(seen)
}
