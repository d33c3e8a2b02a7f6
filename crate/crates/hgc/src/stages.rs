//! Stage execution against an output directory and its manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hgc_core::config::RunConfig;
use hgc_core::cube::{HsiCube, LabelMap};
use hgc_core::gcn::{AdamState, GcnModel};
use hgc_core::metrics::palette;
use hgc_core::partition::{induce_subgraphs, SubGraph};
use hgc_core::pca::PcaModel;
use hgc_core::pipeline::{self, GraphArtifact};
use hgc_core::superpixel::SuperpixelMap;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, StageContext};
use crate::formats::{self, read_json, write_atomic, write_json, MetricsFile};
use crate::manifest::{hash_file, hash_input, verify_upstream, FileRecord, Manifest, RawInput, Stage, StageRecord};

pub const CHECKPOINT_FORMAT: &str = "hgc-checkpoint";

/// Model parameters with the optimizer state of the selected epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub best_epoch: usize,
    pub model: GcnModel,
    pub optimizer: AdamState,
}

/// What a stage invocation was given on the command line.
#[derive(Debug, Clone, Default)]
pub struct StageRequest {
    pub cube: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub config: Option<RunConfig>,
    /// Externally supplied `node_id part_id` file for the partition stage.
    pub partition_file: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    pub out_dir: PathBuf,
    pub force: bool,
    pub time: bool,
}

struct Ctx<'a> {
    dir: &'a Path,
    cfg: &'a RunConfig,
    raw: BTreeMap<&'static str, PathBuf>,
    outputs: BTreeMap<String, String>,
}

impl Ctx<'_> {
    fn raw(&self, kind: RawInput) -> &Path {
        &self.raw[kind.key()]
    }

    fn cube(&self) -> CliResult<HsiCube> {
        formats::load_cube(self.raw(RawInput::Cube))
    }

    fn artifact<T: serde::de::DeserializeOwned>(&self, name: &str) -> CliResult<T> {
        read_json(&self.dir.join(name))
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        write_json(&self.dir.join(name), value)?;
        self.note(name)
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.note(name)
    }

    fn note(&mut self, name: &str) -> CliResult<()> {
        let h = hash_file(&self.dir.join(name))?;
        self.outputs.insert(name.to_owned(), h);
        Ok(())
    }

    fn subgraphs(&self, manifest: &Manifest) -> CliResult<Vec<SubGraph>> {
        let rec = manifest.stage(Stage::Partition).ok_or(CliError::MissingStage("partition"))?;
        let count = rec.outputs.keys().filter(|k| k.starts_with("subgraphs/")).count();
        (0..count).map(|i| self.artifact(&subgraph_name(i))).collect()
    }
}

pub fn subgraph_name(i: usize) -> String {
    format!("subgraphs/sub_{i}.json")
}

fn reduced(ctx: &Ctx<'_>) -> CliResult<HsiCube> {
    let cube = ctx.cube()?;
    let pca: PcaModel = ctx.artifact("pca.json")?;
    pipeline::reduce(&cube, &pca).stage("segment")
}

fn execute(stage: Stage, ctx: &mut Ctx<'_>, manifest: &Manifest, req: &StageRequest) -> CliResult<()> {
    let cfg = ctx.cfg;
    match stage {
        Stage::Pca => {
            let cube = ctx.cube()?;
            let pca = pipeline::stage_pca(&cube, cfg).stage("pca")?;
            ctx.write_json("pca.json", &pca)
        }
        Stage::Segment => {
            let r = reduced(ctx)?;
            let pca: PcaModel = ctx.artifact("pca.json")?;
            let map = pipeline::stage_segment(&r, &pca, cfg).stage("segment")?;
            log::info!("{} superpixels", map.count());
            ctx.write_json("segmentation.json", &map)?;
            ctx.write_bytes(
                "segmentation.labels.txt",
                formats::grid_text(map.width, &map.assignment).as_bytes(),
            )?;
            let overlay = formats::boundary_overlay(&map, r.band(0));
            ctx.write_bytes("segmentation.ppm", &formats::ppm_bytes(map.width, map.height, &overlay))
        }
        Stage::Graph => {
            let r = reduced(ctx)?;
            let labels = formats::load_labels(ctx.raw(RawInput::Labels), Some(&r))?;
            let map: SuperpixelMap = ctx.artifact("segmentation.json")?;
            let art = pipeline::stage_graph(&r, &map, &labels, cfg).stage("graph")?;
            let impure = art.node_labels.impure.iter().filter(|&&b| b).count();
            if impure > 0 {
                log::warn!("{impure} superpixels hold train pixels of several classes");
            }
            ctx.write_json("graph.json", &art)?;
            ctx.write_bytes("graph.edges.txt", formats::edge_list_text(&art.graph).as_bytes())?;
            ctx.write_bytes("graph.attributes.txt", formats::matrix_text(&art.graph.features).as_bytes())
        }
        Stage::Partition => {
            let art: GraphArtifact = ctx.artifact("graph.json")?;
            let (assign, subs) = match &req.partition_file {
                Some(p) => {
                    let text = formats::read_text(p)?;
                    let mut assign = formats::parse_partition(p, &text, art.graph.node_count())?;
                    let weights = assign.part_weights(&art.graph.node_weights);
                    let total: u64 = weights.iter().sum();
                    let ideal = total as f64 / assign.c as f64;
                    assign.eps_used = weights.iter().map(|&w| w as f64 / ideal - 1.0).fold(0.0, f64::max);
                    let subs = induce_subgraphs(&art.graph, &assign, &art.node_labels).stage("partition")?;
                    (assign, subs)
                }
                None => pipeline::stage_partition(&art, cfg).stage("partition")?,
            };
            if assign.eps_used > cfg.eps {
                log::warn!(
                    "balance tolerance relaxed from {} to {:.4} to fit integer part sizes",
                    cfg.eps,
                    assign.eps_used
                );
            }
            let sub_dir = ctx.dir.join("subgraphs");
            if sub_dir.exists() {
                fs::remove_dir_all(&sub_dir).map_err(|e| CliError::io(&sub_dir, e))?;
            }
            ctx.write_bytes("partition.txt", formats::partition_text(&assign).as_bytes())?;
            for (i, s) in subs.iter().enumerate() {
                ctx.write_json(&subgraph_name(i), s)?;
            }
            Ok(())
        }
        Stage::Train => {
            let subs = ctx.subgraphs(manifest)?;
            let out = pipeline::stage_train(&subs, cfg).stage("train")?;
            ctx.write_json(
                "model.json",
                &Checkpoint {
                    format: CHECKPOINT_FORMAT.into(),
                    version: 1,
                    best_epoch: out.history.best_epoch,
                    model: out.model,
                    optimizer: out.optimizer,
                },
            )?;
            ctx.write_bytes("history.csv", &formats::history_csv(&out.history)?)
        }
        Stage::Predict => {
            let ck: Checkpoint = ctx.artifact("model.json")?;
            let subs = ctx.subgraphs(manifest)?;
            let map: SuperpixelMap = ctx.artifact("segmentation.json")?;
            let pred = pipeline::stage_predict(&ck.model, &subs, &map).stage("predict")?;
            ctx.write_bytes("prediction.labels.txt", formats::grid_text(map.width, &pred).as_bytes())?;
            let pal = palette(ck.model.dims.classes);
            let px = formats::render_map(&pred, &pal).map_err(|m| CliError::format(Path::new("classification.ppm"), m))?;
            ctx.write_bytes("classification.ppm", &formats::ppm_bytes(map.width, map.height, &px))
        }
        Stage::Eval => {
            let art: GraphArtifact = ctx.artifact("graph.json")?;
            let labels: LabelMap = formats::load_labels(ctx.raw(RawInput::Labels), None)?;
            let pred_path = ctx.dir.join("prediction.labels.txt");
            let (w, h, ids) = formats::parse_grid(&pred_path, &formats::read_text(&pred_path)?)?;
            if (w, h) != (labels.width(), labels.height()) {
                return Err(CliError::format(&pred_path, "prediction and label map sizes differ"));
            }
            let pred: Vec<u16> = ids.into_iter().map(|v| v.clamp(0, i64::from(u16::MAX)) as u16).collect();
            let (confusion, report) = pipeline::stage_eval(&pred, &labels, &art.split).stage("eval")?;
            if !report.excluded.is_empty() {
                log::warn!("classes {:?} have no test pixels and are left out of AA", report.excluded);
            }
            ctx.write_json("metrics.json", &MetricsFile { report: report.clone(), confusion })?;
            ctx.write_bytes("metrics.txt", formats::metrics_table(&report).as_bytes())
        }
    }
}

/// Runs one stage: checks inputs against the manifest, executes, records.
pub fn run_stage(ws: &Workspace, stage: Stage, req: &StageRequest) -> CliResult<()> {
    let dir = ws.out_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let existing = Manifest::load(dir)?;

    let cfg = match (&req.config, &existing) {
        (Some(c), _) => c.clone(),
        (None, Some(m)) => m.config.clone(),
        (None, None) => return Err(CliError::Usage("no configuration: pass --config".into())),
    };
    let prior = existing.as_ref().map(|m| m.inputs.clone()).unwrap_or_default();
    let mut manifest = match existing {
        _ if stage == Stage::Pca => Manifest::new(cfg.clone()),
        Some(m) => {
            if m.config != cfg && !ws.force {
                return Err(CliError::Stale(
                    "configuration differs from the manifest snapshot".into(),
                ));
            }
            Manifest {
                config: cfg.clone(),
                ..m
            }
        }
        None => return Err(CliError::MissingStage("pca")),
    };

    let mut inputs = BTreeMap::new();
    let mut raw = BTreeMap::new();
    for &kind in stage.raw_inputs() {
        let given = match kind {
            RawInput::Cube => req.cube.clone(),
            RawInput::Labels => req.labels.clone(),
        };
        let recorded = manifest.inputs.get(kind.key()).cloned();
        let path = given
            .or_else(|| recorded.as_ref().or(prior.get(kind.key())).map(|r| PathBuf::from(&r.path)))
            .ok_or_else(|| CliError::Usage(format!("no {} given: pass --{}", kind.key(), kind.key())))?;
        let hash = hash_input(kind, &path)?;
        if let Some(r) = &recorded {
            if r.sha256 != hash && stage != Stage::Pca && !ws.force {
                return Err(CliError::Stale(format!(
                    "{} {} differs from the one recorded in the manifest",
                    kind.key(),
                    path.display()
                )));
            }
        }
        manifest.inputs.insert(
            kind.key().to_owned(),
            FileRecord {
                path: path.to_string_lossy().into_owned(),
                sha256: hash.clone(),
            },
        );
        inputs.insert(kind.key().to_owned(), hash);
        raw.insert(kind.key(), path);
    }
    inputs.extend(verify_upstream(&manifest, dir, stage, ws.force)?);

    let start = Instant::now();
    let mut ctx = Ctx {
        dir,
        cfg: &cfg,
        raw,
        outputs: BTreeMap::new(),
    };
    execute(stage, &mut ctx, &manifest, req)?;
    if ws.time {
        eprintln!("stage {stage}: {:.3}s", start.elapsed().as_secs_f64());
    }
    let outputs = ctx.outputs;
    manifest.record(stage, StageRecord { inputs, outputs });
    manifest.save(dir)
}

/// All stages in order, through the same code paths as `stage`.
pub fn run_all(ws: &Workspace, req: &StageRequest) -> CliResult<MetricsFile> {
    for stage in Stage::ALL {
        run_stage(ws, stage, req)?;
    }
    read_json(&ws.out_dir.join("metrics.json"))
}
