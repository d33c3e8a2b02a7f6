//! Parameter grids repeated over seeds, run on a bounded worker pool.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use hgc_core::config::RunConfig;
use hgc_core::cube::{HsiCube, LabelMap};
use hgc_core::metrics::{summarize, MetricsReport, TrialSummary};
use hgc_core::pipeline;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

/// Grid axes; omitted axes stay at the base configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub o: Option<Vec<usize>>,
    pub k: Option<Vec<usize>>,
    pub c: Option<Vec<usize>>,
    pub per_class: Option<Vec<usize>>,
    /// Seed count (offsets from the base seed) or explicit list; default 10.
    pub seeds: Option<Seeds>,
}

pub const DEFAULT_SEEDS: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: BTreeMap<String, usize>,
    pub runs: Vec<RunResult>,
    pub summary: TrialSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepSpec {
    pub fn seeds(&self, base: u64) -> Vec<u64> {
        match &self.seeds {
            None => (0..DEFAULT_SEEDS).map(|i| base + i).collect(),
            Some(Seeds::Count(n)) => (0..*n).map(|i| base + i).collect(),
            Some(Seeds::List(v)) => v.clone(),
        }
    }

    fn axes(&self) -> Vec<(&'static str, &Vec<usize>)> {
        [("o", &self.o), ("k", &self.k), ("c", &self.c), ("per_class", &self.per_class)]
            .into_iter()
            .filter_map(|(n, v)| v.as_ref().map(|v| (n, v)))
            .collect()
    }

    /// Every grid point as `(axis values, config)`, first axis slowest.
    pub fn points(&self, base: &RunConfig) -> CliResult<Vec<(BTreeMap<String, usize>, RunConfig)>> {
        let axes = self.axes();
        if axes.iter().any(|(_, v)| v.is_empty()) || self.seeds(base.seed).is_empty() {
            return Err(CliError::Usage("empty grid".into()));
        }
        let mut points = vec![(BTreeMap::new(), base.clone())];
        for (name, values) in axes {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for (params, cfg) in &points {
                for &v in values {
                    let mut p = params.clone();
                    p.insert(name.to_owned(), v);
                    let mut c = cfg.clone();
                    match name {
                        "o" => c.o = v,
                        "k" => c.k = v,
                        "c" => c.c = v,
                        _ => c.per_class = v,
                    }
                    next.push((p, c));
                }
            }
            points = next;
        }
        for (_, c) in &points {
            c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        Ok(points)
    }
}

/// Worker count: `HGC_THREADS` if set, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("HGC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every grid point for every seed and aggregates per point.
pub fn run_sweep(
    cube: &HsiCube,
    labels: &LabelMap,
    base: &RunConfig,
    spec: &SweepSpec,
    workers: usize,
) -> CliResult<SweepReport> {
    let points = spec.points(base)?;
    let seeds = spec.seeds(base.seed);
    let jobs: Vec<(usize, RunConfig)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, (_, cfg))| {
            seeds.iter().map(move |&s| {
                let mut c = cfg.clone();
                c.seed = s;
                (i, c)
            })
        })
        .collect();
    type Job = Result<(RunResult, MetricsReport), String>;
    let results: Mutex<Vec<Option<Job>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    thread::scope(|s| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some((_, cfg)) = jobs.get(j) else { break };
                let r = pipeline::run(cube, labels, cfg)
                    .map(|out| {
                        let run = RunResult {
                            seed: cfg.seed,
                            oa: out.report.oa,
                            aa: out.report.aa,
                            kappa: out.report.kappa,
                        };
                        (run, out.report)
                    })
                    .map_err(|e| format!("seed {}: {e}", cfg.seed));
                results.lock().expect("sweep results lock")[j] = Some(r);
            });
        }
    });
    let results = results.into_inner().expect("sweep results lock");

    let mut runs: Vec<Vec<RunResult>> = vec![Vec::new(); points.len()];
    let mut reports: Vec<Vec<MetricsReport>> = vec![Vec::new(); points.len()];
    for ((point, _), r) in jobs.iter().zip(results) {
        match r.expect("every job ran") {
            Ok((run, rep)) => {
                runs[*point].push(run);
                reports[*point].push(rep);
            }
            Err(e) => return Err(CliError::Usage(format!("sweep point {:?}: {e}", points[*point].0))),
        }
    }
    let rows = points
        .into_iter()
        .zip(runs)
        .zip(&reports)
        .map(|(((params, _), runs), reps)| SweepRow {
            params,
            runs,
            summary: summarize(reps),
        })
        .collect();
    let axes = spec.axes().into_iter().map(|(n, _)| n.to_owned()).collect();
    Ok(SweepReport { axes, rows })
}

fn pm((mean, std): (f64, f64)) -> String {
    format!("{:.2} ± {:.2}", mean * 100.0, std * 100.0)
}

/// One row per grid point: axis values, then OA / AA / Kappa as
/// `mean ± std` in percent.
pub fn sweep_table(report: &SweepReport) -> String {
    let mut header: Vec<String> = report.axes.clone();
    header.extend(["runs", "OA", "AA", "Kappa"].map(String::from));
    let body: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let mut cells: Vec<String> = report.axes.iter().map(|a| r.params[a].to_string()).collect();
            cells.push(r.summary.trials.to_string());
            cells.push(pm(r.summary.oa));
            cells.push(pm(r.summary.aa));
            cells.push(pm(r.summary.kappa));
            cells
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| {
            body.iter()
                .map(|r| r[i].chars().count())
                .chain([header[i].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut s = String::new();
    for row in std::iter::once(&header).chain(&body) {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}", w = w))
            .collect();
        let _ = writeln!(s, "{}", line.join("  "));
    }
    s
}
