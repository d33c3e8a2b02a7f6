//! Command line: `run`, `stage`, `sweep`, `inspect`, `synth`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hgc_core::config::RunConfig;
use hgc_core::partition::SubGraph;
use hgc_core::pca::PcaModel;
use hgc_core::pipeline::GraphArtifact;
use hgc_core::superpixel::SuperpixelMap;
use hgc_core::synthetic;

use crate::config::load_run_spec;
use crate::error::{CliError, CliResult};
use crate::formats::{self, read_json, write_atomic, write_json, MetricsFile};
use crate::manifest::{Manifest, Stage};
use crate::stages::{run_all, run_stage, Checkpoint, StageRequest, Workspace};
use crate::sweep::{run_sweep, sweep_table, worker_count, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "hgc", version, about = "Superpixel graph convolution for hyperspectral images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every stage and print the metrics table.
    Run(RunArgs),
    /// Run a single stage against an output directory.
    Stage {
        stage: Stage,
        #[command(flatten)]
        args: RunArgs,
        /// `node_id part_id` lines used instead of the built-in partitioner.
        #[arg(long)]
        partition_file: Option<PathBuf>,
    },
    /// Repeat runs over a parameter grid and several seeds.
    Sweep {
        #[command(flatten)]
        args: RunArgs,
        /// JSON grid: optional `o`, `k`, `c`, `per_class` lists and `seeds`.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Print a short summary of an artifact.
    Inspect { artifact: PathBuf },
    /// Write the bundled synthetic dataset and a run file.
    Synth {
        #[arg(long, default_value = "synthetic")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run file (JSON or `key = value`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub cube: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Run even when upstream artifacts or inputs changed.
    #[arg(long)]
    pub force: bool,
    /// Print per-stage wall time to stderr.
    #[arg(long)]
    pub time: bool,
}

impl RunArgs {
    fn workspace(&self) -> Workspace {
        Workspace {
            out_dir: self.out_dir.clone(),
            force: self.force,
            time: self.time,
        }
    }

    /// Run file plus flag overrides. With `fallback`, a missing run file
    /// falls back to `fallback` (or defaults) only when `--seed` needs a base.
    fn request(&self, fallback: Option<&RunConfig>, always: bool) -> CliResult<StageRequest> {
        let mut req = StageRequest::default();
        if let Some(path) = &self.config {
            let spec = load_run_spec(path)?;
            req.cube = spec.cube;
            req.labels = spec.labels;
            req.config = Some(spec.config);
        } else if always || self.seed.is_some() {
            req.config = Some(fallback.cloned().unwrap_or_default());
        }
        if let (Some(seed), Some(cfg)) = (self.seed, req.config.as_mut()) {
            cfg.seed = seed;
        }
        if self.cube.is_some() {
            req.cube = self.cube.clone();
        }
        if self.labels.is_some() {
            req.labels = self.labels.clone();
        }
        Ok(req)
    }
}

fn require(p: &Option<PathBuf>, what: &str) -> CliResult<PathBuf> {
    let p = p.clone().ok_or_else(|| CliError::Usage(format!("no {what} given: pass --{what} or set it in the run file")))?;
    if !p.exists() {
        return Err(CliError::MissingInput(p));
    }
    Ok(p)
}

fn cmd_run(args: &RunArgs) -> CliResult<String> {
    let req = args.request(None, true)?;
    require(&req.cube, "cube")?;
    require(&req.labels, "labels")?;
    let metrics = run_all(&args.workspace(), &req)?;
    Ok(formats::metrics_table(&metrics.report))
}

fn cmd_stage(stage: Stage, args: &RunArgs, partition_file: Option<PathBuf>) -> CliResult<String> {
    let existing = Manifest::load(&args.out_dir)?;
    let mut req = args.request(existing.as_ref().map(|m| &m.config), false)?;
    for p in [&req.cube, &req.labels, &partition_file].into_iter().flatten() {
        if !p.exists() {
            return Err(CliError::MissingInput(p.clone()));
        }
    }
    req.partition_file = partition_file;
    run_stage(&args.workspace(), stage, &req)?;
    Ok(format!("stage {stage} done in {}\n", args.out_dir.display()))
}

fn cmd_sweep(args: &RunArgs, spec_path: &Path) -> CliResult<String> {
    let req = args.request(None, true)?;
    let cube = formats::load_cube(&require(&req.cube, "cube")?)?;
    let labels = formats::load_labels(&require(&req.labels, "labels")?, Some(&cube))?;
    let spec: SweepSpec = read_json(spec_path)?;
    let cfg = req.config.unwrap_or_default();
    let report = run_sweep(&cube, &labels, &cfg, &spec, worker_count())?;
    let table = sweep_table(&report);
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    write_json(&args.out_dir.join("sweep.json"), &report)?;
    write_atomic(&args.out_dir.join("sweep.txt"), table.as_bytes())?;
    Ok(table)
}

fn cmd_synth(out_dir: &Path, seed: u64) -> CliResult<String> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let (cube, labels) = synthetic::quadrants(seed);
    formats::save_cube(&out_dir.join("synthetic.hgc.json"), &cube)?;
    formats::save_labels_txt(&out_dir.join("synthetic.labels.txt"), labels.width(), labels.labels())?;
    let run = format!(
        "# synthetic quadrants, {side}x{side}x{bands}\ncube = synthetic.hgc.json\nlabels = synthetic.labels.txt\nseed = {seed}\n",
        side = synthetic::SIDE,
        bands = synthetic::BANDS,
    );
    write_atomic(&out_dir.join("synthetic.run"), run.as_bytes())?;
    Ok(format!("wrote synthetic dataset to {}\n", out_dir.display()))
}

fn size_stats(sizes: impl Iterator<Item = usize>) -> String {
    let v: Vec<usize> = sizes.collect();
    if v.is_empty() {
        return "none".into();
    }
    let sum: usize = v.iter().sum();
    format!(
        "min {} max {} mean {:.1}",
        v.iter().min().unwrap_or(&0),
        v.iter().max().unwrap_or(&0),
        sum as f64 / v.len() as f64
    )
}

fn labeled(v: &[u16]) -> usize {
    v.iter().filter(|&&l| l > 0).count()
}

fn cmd_inspect(path: &Path) -> CliResult<String> {
    if !path.exists() {
        return Err(CliError::MissingInput(path.to_path_buf()));
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    let mut s = String::new();
    let w = &mut s;
    if name.ends_with(".hgc.json") {
        let cube = formats::load_cube(path)?;
        let (lo, hi) = cube
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let _ = writeln!(w, "cube {}x{} pixels, {} bands, values in [{lo}, {hi}]", cube.width(), cube.height(), cube.bands());
    } else if name == crate::manifest::MANIFEST {
        let m: Manifest = read_json(path)?;
        let _ = writeln!(w, "seed {}, c {}, o {}, k {}", m.config.seed, m.config.c, m.config.o, m.config.k);
        for (k, r) in &m.inputs {
            let _ = writeln!(w, "input {k}: {} ({})", r.path, &r.sha256[..12.min(r.sha256.len())]);
        }
        for s in Stage::ALL {
            if let Some(r) = m.stage(s) {
                let _ = writeln!(w, "stage {s}: {} inputs, {} outputs", r.inputs.len(), r.outputs.len());
            }
        }
    } else if name == "pca.json" {
        let p: PcaModel = read_json(path)?;
        let total: f64 = p.explained_variance.iter().sum();
        let _ = writeln!(w, "pca {} bands -> {} components, explained variance {total:.6}", p.mean.len(), p.components.rows());
    } else if name == "segmentation.json" {
        let m: SuperpixelMap = read_json(path)?;
        let _ = writeln!(w, "{} superpixels over {}x{}, sizes {}", m.count(), m.width, m.height, size_stats(m.sizes.iter().copied()));
    } else if name == "graph.json" {
        let a: GraphArtifact = read_json(path)?;
        let g = &a.graph;
        let _ = writeln!(
            w,
            "graph {} nodes, {} edges, {} features, o {} k {}",
            g.node_count(),
            g.adjacency.edges().len(),
            g.features.cols(),
            g.o,
            g.k
        );
        let _ = writeln!(
            w,
            "labeled nodes: train {} val {} test {}, impure {}",
            labeled(&a.node_labels.train),
            labeled(&a.node_labels.val),
            labeled(&a.node_labels.test),
            a.node_labels.impure.iter().filter(|&&b| b).count()
        );
    } else if name.starts_with("sub_") && name.ends_with(".json") {
        let g: SubGraph = read_json(path)?;
        let _ = writeln!(
            w,
            "subgraph {} nodes, {} edges, {} train nodes",
            g.nodes.len(),
            g.adjacency.edges().len(),
            labeled(&g.labels.train)
        );
    } else if name == "model.json" {
        let c: Checkpoint = read_json(path)?;
        let d = c.model.dims;
        let _ = writeln!(
            w,
            "{} v{}: features {} conv {} hidden {} classes {}, best epoch {}, {} optimizer steps",
            c.format, c.version, d.features, d.conv, d.hidden, d.classes, c.best_epoch, c.optimizer.t
        );
    } else if name == "metrics.json" {
        let m: MetricsFile = read_json(path)?;
        w.push_str(&formats::metrics_table(&m.report));
    } else if name == "sweep.json" {
        let r: crate::sweep::SweepReport = read_json(path)?;
        w.push_str(&sweep_table(&r));
    } else if name.starts_with("partition") && name.ends_with(".txt") {
        let text = formats::read_text(path)?;
        let n = text.lines().filter(|l| !l.trim().is_empty()).count();
        let a = formats::parse_partition(path, &text, n)?;
        let _ = writeln!(w, "{} nodes in {} parts, sizes {}", n, a.c, size_stats((0..a.c).map(|p| a.part.iter().filter(|&&q| q == p).count())));
    } else if name.ends_with(".csv") {
        let text = formats::read_text(path)?;
        let rows: Vec<&str> = text.lines().skip(1).collect();
        let _ = writeln!(w, "{} epochs; last: {}", rows.len(), rows.last().unwrap_or(&""));
    } else if name.ends_with(".ppm") {
        let (width, height, _) = formats::read_ppm(path)?;
        let _ = writeln!(w, "image {width}x{height}");
    } else if name.ends_with(".pgm") || name.ends_with(".txt") {
        let l = formats::load_labels(path, None)?;
        let counts: Vec<String> = l.class_counts().iter().enumerate().skip(1).map(|(c, n)| format!("{c}:{n}")).collect();
        let _ = writeln!(w, "labels {}x{}, {} labeled, per class {}", l.width(), l.height(), l.labeled_count(), counts.join(" "));
    } else {
        return Err(CliError::Usage(format!("cannot inspect {}: unknown artifact type", path.display())));
    }
    Ok(s)
}

fn dispatch(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Stage {
            stage,
            args,
            partition_file,
        } => cmd_stage(stage, &args, partition_file),
        Command::Sweep { args, spec } => cmd_sweep(&args, &spec),
        Command::Inspect { artifact } => cmd_inspect(&artifact),
        Command::Synth { out_dir, seed } => cmd_synth(&out_dir, seed),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
