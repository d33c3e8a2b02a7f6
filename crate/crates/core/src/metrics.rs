//! Pixel-level evaluation: prediction broadcast, confusion matrices and
//! OA / AA / Kappa.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cube::LabelMap;
use crate::error::{Error, Result};
use crate::math;
use crate::superpixel::SuperpixelMap;

/// Broadcasts per-superpixel predictions to pixels.
pub fn predict_pixels(node_predictions: &[u16], map: &SuperpixelMap) -> Result<Vec<u16>> {
    if node_predictions.len() != map.count() {
        return Err(Error::Shape(format!(
            "{} node predictions for {} superpixels",
            node_predictions.len(),
            map.count()
        )));
    }
    if let Some(i) = node_predictions.iter().position(|&p| p == 0) {
        return Err(Error::Degenerate(format!("superpixel {i} received no prediction")));
    }
    Ok(map.assignment.iter().map(|&s| node_predictions[s]).collect())
}

/// `C × C` counts, rows = ground truth, columns = prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: usize,
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let classes = rows.len();
        let mut m = Self::new(classes);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != classes {
                return Err(Error::Shape("confusion matrix must be square".into()));
            }
            m.counts[i * classes..(i + 1) * classes].copy_from_slice(r);
        }
        Ok(m)
    }

    /// Count for ground-truth `truth` and prediction `pred`, both 1-based.
    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[(truth - 1) * self.classes + pred - 1]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i * self.classes..(i + 1) * self.classes].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        (0..self.classes).map(|i| self.counts[i * self.classes + j]).sum()
    }
}

pub fn confusion(pred: &[u16], truth: &LabelMap, eval_pixels: &[usize]) -> Result<ConfusionMatrix> {
    let c = truth.num_classes();
    if pred.len() != truth.labels().len() {
        return Err(Error::Shape("prediction and ground-truth sizes differ".into()));
    }
    let mut m = ConfusionMatrix::new(c);
    for &p in eval_pixels {
        let t = truth.label(p) as usize;
        if t == 0 {
            return Err(Error::InvalidParameter(format!(
                "pixel {p} in the evaluation set is unlabeled"
            )));
        }
        let y = pred[p] as usize;
        if y == 0 || y > c {
            return Err(Error::InvalidParameter(format!(
                "pixel {p} predicted as class {y} outside 1..={c}"
            )));
        }
        m.counts[(t - 1) * c + (y - 1)] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Per-class accuracy; `None` for classes absent from the evaluated set.
    pub per_class: Vec<Option<f64>>,
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
    pub evaluated: u64,
    /// Class ids (1-based) excluded from AA because they had no pixels.
    pub excluded: Vec<usize>,
}

pub fn metrics(m: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = m.total();
    if total == 0 {
        return Err(Error::Degenerate("confusion matrix is empty".into()));
    }
    let c = m.classes;
    let n = total as f64;
    let trace: u64 = (0..c).map(|i| m.counts[i * c + i]).sum();
    let oa = trace as f64 / n;
    let mut per_class = Vec::with_capacity(c);
    let mut excluded = Vec::new();
    for i in 0..c {
        let row = m.row_sum(i);
        if row == 0 {
            per_class.push(None);
            excluded.push(i + 1);
        } else {
            per_class.push(Some(m.counts[i * c + i] as f64 / row as f64));
        }
    }
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let aa = present.iter().sum::<f64>() / present.len() as f64;
    let pe = (0..c)
        .map(|i| m.row_sum(i) as f64 * m.col_sum(i) as f64)
        .sum::<f64>()
        / (n * n);
    // pe = 1 only when truth and prediction are the same single class.
    let kappa = if pe >= 1.0 { 1.0 } else { (oa - pe) / (1.0 - pe) };
    Ok(MetricsReport {
        per_class,
        oa,
        aa,
        kappa,
        evaluated: total,
        excluded,
    })
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, math::sqrt(var))
}

/// Across-trial summary of several reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub oa: (f64, f64),
    pub aa: (f64, f64),
    pub kappa: (f64, f64),
    /// Per class mean ± std over the trials where the class was evaluated.
    pub per_class: Vec<Option<(f64, f64)>>,
}

pub fn summarize(reports: &[MetricsReport]) -> TrialSummary {
    let pick = |f: fn(&MetricsReport) -> f64| mean_std(&reports.iter().map(f).collect::<Vec<_>>());
    let classes = reports.first().map_or(0, |r| r.per_class.len());
    let per_class = (0..classes)
        .map(|i| {
            let v: Vec<f64> = reports.iter().filter_map(|r| r.per_class[i]).collect();
            (!v.is_empty()).then(|| mean_std(&v))
        })
        .collect();
    TrialSummary {
        trials: reports.len(),
        oa: pick(|r| r.oa),
        aa: pick(|r| r.aa),
        kappa: pick(|r| r.kappa),
        per_class,
    }
}

/// Distinct display colours for class ids `1..=classes` (index 0 is black).
pub fn palette(classes: usize) -> Vec<[u8; 3]> {
    const BASE: [[u8; 3]; 16] = [
        [230, 25, 75],
        [60, 180, 75],
        [255, 225, 25],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
        [240, 50, 230],
        [210, 245, 60],
        [250, 190, 212],
        [0, 128, 128],
        [220, 190, 255],
        [170, 110, 40],
        [255, 250, 200],
        [128, 0, 0],
        [170, 255, 195],
    ];
    let mut out = Vec::with_capacity(classes + 1);
    out.push([0, 0, 0]);
    for i in 0..classes {
        if let Some(&c) = BASE.get(i) {
            out.push(c);
        } else {
            // Spread further classes over an RGB lattice, skipping black.
            let k = (i - BASE.len() + 1) as u32;
            out.push([
                ((k * 97) % 256) as u8,
                ((k * 57 + 64) % 256) as u8,
                ((k * 151 + 128) % 256) as u8,
            ]);
        }
    }
    out
}
