//! Pipeline hyperparameters.

use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every tunable of one pipeline run.
///
/// Field names double as the keys of the `key=value` and JSON config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Retained principal components.
    pub pca_dim: usize,
    /// Target superpixel count; `None` picks `W·H/14` capped at 2000.
    pub num_superpixels: Option<usize>,
    /// Spatial weight of the superpixel distance, in units of the spectral spread.
    pub compactness: f64,
    pub slic_iters: usize,
    /// Number of hop scales summed into the adjacency.
    pub o: usize,
    /// Spectral neighbours kept per node and scale.
    pub k: usize,
    /// Number of graph clusters.
    pub c: usize,
    /// Partition balance tolerance.
    pub eps: f64,
    pub hidden_units: usize,
    /// Width of the leading 1×1 feature transform.
    pub conv_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub per_class: usize,
    pub per_class_small: usize,
    pub val_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pca_dim: 30,
            num_superpixels: None,
            compactness: 0.5,
            slic_iters: 10,
            o: 2,
            k: 5,
            c: 5,
            eps: 0.1,
            hidden_units: 64,
            conv_dim: 128,
            epochs: 400,
            learning_rate: 0.005,
            seed: 0,
            per_class: 30,
            per_class_small: 15,
            val_fraction: 0.1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pca_dim", self.pca_dim),
            ("slic_iters", self.slic_iters),
            ("o", self.o),
            ("k", self.k),
            ("c", self.c),
            ("hidden_units", self.hidden_units),
            ("conv_dim", self.conv_dim),
            ("epochs", self.epochs),
            ("per_class", self.per_class),
            ("per_class_small", self.per_class_small),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if self.num_superpixels == Some(0) {
            return Err(Error::InvalidParameter("num_superpixels must be positive".into()));
        }
        if !(self.compactness > 0.0 && self.compactness.is_finite()) {
            return Err(Error::InvalidParameter("compactness must be positive".into()));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning_rate must be positive".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidParameter("val_fraction must lie in (0, 1)".into()));
        }
        if self.per_class_small > self.per_class {
            return Err(Error::InvalidParameter(
                "per_class_small must not exceed per_class".into(),
            ));
        }
        Ok(())
    }

    /// Superpixel target for an image of `pixels` pixels.
    pub fn superpixel_target(&self, pixels: usize) -> usize {
        self.num_superpixels
            .unwrap_or_else(|| (pixels / 14).clamp(1, 2000))
            .min(pixels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_k_rejected() {
        let cfg = RunConfig {
            k: 0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn auto_superpixel_target() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.superpixel_target(145 * 145), 1501);
        assert_eq!(cfg.superpixel_target(610 * 340), 2000);
        assert_eq!(cfg.superpixel_target(10), 1);
    }
}
