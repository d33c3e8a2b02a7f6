//! One PASS / FAIL / SKIP line per acceptance criterion.
//!
//! Criterion 7 reads real scenes from `HGC_DATA_DIR`, laid out as
//! `<dir>/<scene>/<scene>.hgc.json` plus `<scene>.labels.txt` (or `.pgm`),
//! for the scenes `indian_pines`, `pavia_university` and `salinas`.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use hgc::formats::{load_cube, load_labels, read_json};
use hgc::sweep::{run_sweep, worker_count, Seeds, SweepReport, SweepSpec};
use hgc_core::config::RunConfig;
use hgc_core::{pipeline, synthetic};
use support::Check;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

impl From<Check> for Outcome {
    fn from(c: Check) -> Self {
        match c {
            Ok(m) => Outcome::Pass(m),
            Err(m) => Outcome::Fail(m),
        }
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic")
}

fn hgc(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_hgc"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("hgc {args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn nearest_centroid_accuracy() -> f64 {
    let (cube, labels) = synthetic::quadrants(0);
    let centroids: Vec<Vec<f64>> = (1..=synthetic::CLASSES).map(synthetic::class_spectrum).collect();
    let hits = (0..cube.pixel_count())
        .filter(|&p| {
            let s = cube.spectrum(p);
            let dist = |c: &Vec<f64>| s.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
            let best = (0..centroids.len())
                .min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b])))
                .unwrap();
            best as u16 + 1 == labels.label(p)
        })
        .count();
    hits as f64 / cube.pixel_count() as f64
}

fn end_to_end() -> Check {
    let oracle = nearest_centroid_accuracy();
    if oracle != 1.0 {
        return Err(format!("nearest-centroid oracle scores {oracle}, dataset not separable"));
    }
    let cube = load_cube(&data_dir().join("synthetic.hgc.json")).map_err(|e| e.to_string())?;
    let labels = load_labels(&data_dir().join("synthetic.labels.txt"), Some(&cube)).map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        epochs: 200,
        ..RunConfig::default()
    };
    let start = Instant::now();
    let out = pipeline::run(&cube, &labels, &cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let msg = format!("OA {} kappa {} in {secs:.2}s (200 epochs)", out.report.oa, out.report.kappa);
    if out.report.oa != 1.0 || secs >= 60.0 {
        return Err(msg);
    }
    Ok(msg)
}

fn determinism() -> Check {
    let t = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = data_dir().join("synthetic.run");
    let dirs = [t.path().join("a"), t.path().join("b")];
    for d in &dirs {
        hgc(&["run", "--config", path_str(&run), "--seed", "11", "--out-dir", path_str(d)])?;
    }
    let files = ["metrics.json", "history.csv", "classification.ppm"];
    for f in files {
        let a = fs::read(dirs[0].join(f)).map_err(|e| e.to_string())?;
        let b = fs::read(dirs[1].join(f)).map_err(|e| e.to_string())?;
        if a != b {
            return Err(format!("{f} differs between runs"));
        }
    }
    Ok(format!("{} byte-identical across two runs", files.join(", ")))
}

struct Scene {
    name: &'static str,
    o: usize,
    k: usize,
    c: usize,
    min_oa: f64,
}

const SCENES: [Scene; 3] = [
    Scene {
        name: "indian_pines",
        o: 2,
        k: 5,
        c: 5,
        min_oa: 0.90,
    },
    Scene {
        name: "pavia_university",
        o: 2,
        k: 5,
        c: 7,
        min_oa: 0.93,
    },
    Scene {
        name: "salinas",
        o: 2,
        k: 9,
        c: 5,
        min_oa: 0.95,
    },
];

fn scene_files(dir: &Path, name: &str) -> Option<(PathBuf, PathBuf)> {
    let base = dir.join(name);
    let cube = base.join(format!("{name}.hgc.json"));
    let labels = [format!("{name}.labels.txt"), format!("{name}.pgm")]
        .into_iter()
        .map(|f| base.join(f))
        .find(|p| p.exists())?;
    cube.exists().then_some((cube, labels))
}

fn reproduction() -> Outcome {
    let Some(dir) = std::env::var_os("HGC_DATA_DIR").map(PathBuf::from) else {
        return Outcome::Skip("HGC_DATA_DIR not set".into());
    };
    let mut lines = Vec::new();
    let mut failed = false;
    let mut found = 0;
    for scene in &SCENES {
        let Some((cube_path, label_path)) = scene_files(&dir, scene.name) else {
            lines.push(format!("{} absent", scene.name));
            continue;
        };
        found += 1;
        let result = (|| -> Result<f64, String> {
            let cube = load_cube(&cube_path).map_err(|e| e.to_string())?;
            let labels = load_labels(&label_path, Some(&cube)).map_err(|e| e.to_string())?;
            let cfg = RunConfig {
                o: scene.o,
                k: scene.k,
                c: scene.c,
                ..RunConfig::default()
            };
            let spec = SweepSpec {
                seeds: Some(Seeds::Count(10)),
                ..Default::default()
            };
            let r = run_sweep(&cube, &labels, &cfg, &spec, worker_count()).map_err(|e| e.to_string())?;
            Ok(r.rows[0].summary.oa.0)
        })();
        match result {
            Ok(oa) => {
                let ok = oa >= scene.min_oa;
                failed |= !ok;
                lines.push(format!(
                    "{} mean OA {:.2}% over 10 seeds (need {:.0}%)",
                    scene.name,
                    oa * 100.0,
                    scene.min_oa * 100.0
                ));
            }
            Err(e) => {
                failed = true;
                lines.push(format!("{}: {e}", scene.name));
            }
        }
    }
    let msg = lines.join("; ");
    if found == 0 {
        Outcome::Skip(format!("no scenes under {}", dir.display()))
    } else if failed {
        Outcome::Fail(msg)
    } else {
        Outcome::Pass(msg)
    }
}

fn ablation_shape() -> Check {
    let t = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = t.path().join("c_grid.json");
    fs::write(&spec, r#"{"c": [1, 3, 5, 7]}"#).map_err(|e| e.to_string())?;
    let out = t.path().join("sweep");
    let run = data_dir().join("synthetic.run");
    let table = hgc(&["sweep", "--config", path_str(&run), "--spec", path_str(&spec), "--out-dir", path_str(&out)])?;
    let report: SweepReport = read_json(&out.join("sweep.json")).map_err(|e| e.to_string())?;
    let cs: Vec<usize> = report.rows.iter().map(|r| r.params["c"]).collect();
    if cs != [1, 3, 5, 7] {
        return Err(format!("rows for c = {cs:?}"));
    }
    if let Some(r) = report.rows.iter().find(|r| r.runs.len() != 10) {
        return Err(format!("c = {} has {} runs", r.params["c"], r.runs.len()));
    }
    let body: Vec<&str> = table.lines().skip(1).collect();
    let shaped = body.len() == 4 && body.iter().all(|l| l.matches('±').count() == 3);
    if !shaped {
        return Err(format!("unexpected table:\n{table}"));
    }
    for line in table.lines() {
        println!("    {line}");
    }
    Ok("4 rows x 10 seeds, OA / AA / Kappa as mean ± std".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("oracle equivalence", || support::oracle_equivalence(200).into()),
        ("gradient correctness", || support::gradient_check(50).into()),
        ("normalization law", || support::normalization_law(20).into()),
        ("partitioner quality", || support::partitioner_quality().into()),
        ("end-to-end learning", || end_to_end().into()),
        ("determinism", || determinism().into()),
        ("full-scale reproduction", reproduction),
        ("ablation shape", || ablation_shape().into()),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, msg) = match outcome {
            Outcome::Pass(m) => ("PASS", m),
            Outcome::Fail(m) => {
                failures += 1;
                ("FAIL", m)
            }
            Outcome::Skip(m) => ("SKIP", m),
        };
        println!("{tag} criterion {} ({name}, {secs:.1}s): {msg}", i + 1);
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
