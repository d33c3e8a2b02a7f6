//! Seeded per-class train/validation/test sampling.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cube::LabelMap;
use crate::error::{Error, Result};
use crate::math;

/// Pixel indices per role. `train` and `val` are indexed by `class - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<Vec<usize>>,
    pub val: Vec<Vec<usize>>,
    /// Every labeled pixel not drawn for train or validation, ascending.
    pub test: Vec<usize>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn train_pixels(&self) -> impl Iterator<Item = usize> + '_ {
        self.train.iter().flatten().copied()
    }

    pub fn val_pixels(&self) -> impl Iterator<Item = usize> + '_ {
        self.val.iter().flatten().copied()
    }

    pub fn train_count(&self) -> usize {
        self.train.iter().map(Vec::len).sum()
    }

    pub fn val_count(&self) -> usize {
        self.val.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitParams {
    pub per_class: usize,
    pub per_class_small: usize,
    pub val_fraction: f64,
    pub seed: u64,
}

/// Validation share of `drawn` samples: `⌈fraction·drawn⌉`, leaving at least
/// one training sample whenever two or more were drawn.
pub fn validation_count(drawn: usize, fraction: f64) -> usize {
    // 0.1·30 evaluates to 3.0000000000000004; snap before rounding up.
    let raw = fraction * drawn as f64;
    let snapped = if (raw - math::round(raw)).abs() < 1e-9 {
        math::round(raw)
    } else {
        math::ceil(raw)
    };
    (snapped as usize).min(drawn.saturating_sub(1))
}

/// Draws `per_class` pixels from every class holding at least that many, and
/// `per_class_small` from the rest, without replacement. The first
/// `validation_count` of each class's draw go to validation.
pub fn split_samples(labels: &LabelMap, params: &SplitParams) -> Result<DatasetSplit> {
    if params.per_class_small == 0 || params.per_class_small > params.per_class {
        return Err(Error::InvalidParameter(
            "expected per_class >= per_class_small >= 1".into(),
        ));
    }
    if !(params.val_fraction > 0.0 && params.val_fraction < 1.0) {
        return Err(Error::InvalidParameter("val_fraction must lie in (0, 1)".into()));
    }
    let classes = labels.num_classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (p, &l) in labels.labels().iter().enumerate() {
        if l != 0 {
            by_class[l as usize - 1].push(p);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut train = Vec::with_capacity(classes);
    let mut val = Vec::with_capacity(classes);
    let mut drawn_mask = vec![false; labels.labels().len()];
    for (ci, mut pixels) in by_class.into_iter().enumerate() {
        let available = pixels.len();
        if available < params.per_class_small {
            return Err(Error::InsufficientSamples {
                class: ci as u16 + 1,
                available,
                required: params.per_class_small,
            });
        }
        let take = if available >= params.per_class {
            params.per_class
        } else {
            params.per_class_small
        };
        let (chosen, _) = pixels.partial_shuffle(&mut rng, take);
        let chosen = chosen.to_vec();
        for &p in &chosen {
            drawn_mask[p] = true;
        }
        let nv = validation_count(take, params.val_fraction);
        val.push(chosen[..nv].to_vec());
        train.push(chosen[nv..].to_vec());
    }

    let test = labels
        .labels()
        .iter()
        .enumerate()
        .filter(|&(p, &l)| l != 0 && !drawn_mask[p])
        .map(|(p, _)| p)
        .collect();

    Ok(DatasetSplit {
        train,
        val,
        test,
        seed: params.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(per_class: usize, small: usize, seed: u64) -> SplitParams {
        SplitParams {
            per_class,
            per_class_small: small,
            val_fraction: 0.1,
            seed,
        }
    }

    #[test]
    fn validation_count_rounding() {
        assert_eq!(validation_count(30, 0.1), 3);
        assert_eq!(validation_count(15, 0.1), 2);
        assert_eq!(validation_count(1, 0.1), 0);
        assert_eq!(validation_count(2, 0.9), 1);
    }

    #[test]
    fn small_class_gets_small_quota() {
        // Mirrors the Oats row: 20 labeled pixels, quota 30 → 15 drawn, 5 left.
        let mut labels = vec![1u16; 100];
        labels.extend(vec![2u16; 20]);
        let map = LabelMap::new(120, 1, labels).unwrap();
        let split = split_samples(&map, &params(30, 15, 7)).unwrap();
        assert_eq!(split.train[1].len() + split.val[1].len(), 15);
        assert_eq!(split.train[0].len() + split.val[0].len(), 30);
        assert_eq!(split.val[0].len(), 3);
        assert_eq!(split.test.len(), 70 + 5);
    }

    #[test]
    fn exact_quota_leaves_no_test_pixels() {
        let map = LabelMap::new(30, 1, vec![1; 30]).unwrap();
        let split = split_samples(&map, &params(30, 15, 1)).unwrap();
        assert!(split.test.is_empty());
        assert_eq!(split.train_count() + split.val_count(), 30);
    }

    #[test]
    fn too_few_pixels_is_an_error() {
        let map = LabelMap::new(10, 1, vec![1; 10]).unwrap();
        let err = split_samples(&map, &params(30, 15, 1)).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { class: 1, available: 10, .. }));
    }

    proptest! {
        #[test]
        fn split_is_a_disjoint_cover(
            labels in proptest::collection::vec(0u16..4, 60..200),
            seed in any::<u64>(),
        ) {
            // force contiguous ids 1..=3 with enough pixels each
            let mut labels = labels;
            for c in 1..=3u16 {
                for _ in 0..5 { labels.push(c); }
            }
            let n = labels.len();
            let map = LabelMap::new(n, 1, labels.clone()).unwrap();
            let split = split_samples(&map, &params(8, 5, seed)).unwrap();
            let again = split_samples(&map, &params(8, 5, seed)).unwrap();
            prop_assert_eq!(&split, &again);

            let mut seen = vec![0u8; n];
            for p in split.train_pixels().chain(split.val_pixels()).chain(split.test.iter().copied()) {
                seen[p] += 1;
            }
            for p in 0..n {
                prop_assert_eq!(seen[p] as usize, usize::from(labels[p] != 0));
            }
            for (ci, (t, v)) in split.train.iter().zip(&split.val).enumerate() {
                for &p in t.iter().chain(v) {
                    prop_assert_eq!(labels[p] as usize, ci + 1);
                }
            }
        }
    }
}
