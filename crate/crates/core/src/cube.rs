//! In-memory hyperspectral cubes and ground-truth label maps.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A `width × height × bands` radiance cube.
///
/// Storage is band-sequential; within a band, pixels are row-major, so the
/// value of band `b` at `(x, y)` lives at `b·W·H + y·W + x`. Pixel indices
/// throughout the crate are `y·W + x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsiCube {
    width: usize,
    height: usize,
    bands: usize,
    data: Vec<f64>,
}

impl HsiCube {
    pub fn new(width: usize, height: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || bands == 0 {
            return Err(Error::Dimensions(format!(
                "cube dimensions must be positive, got {width}x{height}x{bands}"
            )));
        }
        if data.len() != width * height * bands {
            return Err(Error::Dimensions(format!(
                "payload length mismatch: expected {} values, got {}",
                width * height * bands,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            width,
            height,
            bands,
            data,
        })
    }

    /// Builds a cube from per-pixel spectra (pixel-interleaved input).
    pub fn from_pixels(width: usize, height: usize, pixels: &[Vec<f64>]) -> Result<Self> {
        let bands = pixels.first().map_or(0, Vec::len);
        if pixels.len() != width * height {
            return Err(Error::Dimensions(format!(
                "{} spectra for a {width}x{height} image",
                pixels.len()
            )));
        }
        let n = width * height;
        let mut data = vec![0.0; n * bands];
        for (p, spec) in pixels.iter().enumerate() {
            if spec.len() != bands {
                return Err(Error::Dimensions("ragged spectra".into()));
            }
            for (b, &v) in spec.iter().enumerate() {
                data[b * n + p] = v;
            }
        }
        Self::new(width, height, bands, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn bands(&self) -> usize {
        self.bands
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn value(&self, pixel: usize, band: usize) -> f64 {
        self.data[band * self.pixel_count() + pixel]
    }

    pub fn band(&self, band: usize) -> &[f64] {
        let n = self.pixel_count();
        &self.data[band * n..(band + 1) * n]
    }

    /// Copies the spectrum of one pixel into `out`.
    pub fn spectrum_into(&self, pixel: usize, out: &mut [f64]) {
        let n = self.pixel_count();
        for (b, o) in out.iter_mut().enumerate().take(self.bands) {
            *o = self.data[b * n + pixel];
        }
    }

    pub fn spectrum(&self, pixel: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.bands];
        self.spectrum_into(pixel, &mut out);
        out
    }

    /// Pixel-interleaved copy: row `p` holds the spectrum of pixel `p`.
    pub fn to_pixel_major(&self) -> Vec<f64> {
        let n = self.pixel_count();
        let mut out = vec![0.0; n * self.bands];
        for b in 0..self.bands {
            for (p, &v) in self.band(b).iter().enumerate() {
                out[p * self.bands + b] = v;
            }
        }
        out
    }
}

/// Per-pixel class ids: `0` is unlabeled, `1..=C` are classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u16>,
    num_classes: u16,
}

impl LabelMap {
    /// Validates that class ids form the contiguous range `1..=C`.
    pub fn new(width: usize, height: usize, labels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimensions("label map dimensions must be positive".into()));
        }
        if labels.len() != width * height {
            return Err(Error::Dimensions(format!(
                "expected {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        let max = labels.iter().copied().max().unwrap_or(0);
        let mut present = vec![false; max as usize + 1];
        for &l in &labels {
            present[l as usize] = true;
        }
        let missing: Vec<usize> = (1..=max as usize).filter(|&c| !present[c]).collect();
        if !missing.is_empty() {
            let ids: Vec<usize> = (1..=max as usize).filter(|&c| present[c]).collect();
            let remap: Vec<_> = ids
                .iter()
                .enumerate()
                .map(|(i, &c)| format!("{c}->{}", i + 1))
                .collect();
            return Err(Error::NonContiguousClasses(format!(
                "present ids {ids:?}, missing {missing:?}; remap suggestion: {}",
                remap.join(", ")
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
            num_classes: max,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, pixel: usize) -> u16 {
        self.labels[pixel]
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes as usize
    }

    /// Pixel counts per class; index 0 counts unlabeled pixels.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes() + 1];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    /// A map with no labeled pixel is valid but useless for training.
    pub fn is_empty(&self) -> bool {
        self.num_classes == 0
    }

    pub fn check_matches(&self, cube: &HsiCube) -> Result<()> {
        if self.width != cube.width() || self.height != cube.height() {
            return Err(Error::Dimensions(format!(
                "label map is {}x{} but cube is {}x{}",
                self.width,
                self.height,
                cube.width(),
                cube.height()
            )));
        }
        Ok(())
    }
}
