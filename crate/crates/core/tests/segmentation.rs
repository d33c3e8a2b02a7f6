use hgc_core::cube::HsiCube;
use hgc_core::superpixel::{segment, SlicParams};
use proptest::prelude::*;

fn smooth_cube(w: usize, h: usize, phase: f64, freq: f64) -> HsiCube {
    let pixels: Vec<Vec<f64>> = (0..w * h)
        .map(|p| {
            let (x, y) = ((p % w) as f64, (p / w) as f64);
            vec![(freq * x + phase).sin() * 3.0, (freq * y - phase).cos() * 3.0, 0.1 * (x + y)]
        })
        .collect();
    HsiCube::from_pixels(w, h, &pixels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn segmentation_invariants(
        w in 4usize..30, h in 4usize..30, target_frac in 0.01f64..0.2,
        phase in 0.0f64..6.0, freq in 0.05f64..0.6, compactness in 0.1f64..10.0,
    ) {
        let cube = smooth_cube(w, h, phase, freq);
        let target = ((w * h) as f64 * target_frac).ceil() as usize;
        let params = SlicParams { target, compactness, iters: 10 };
        let map = segment(&cube, &params).unwrap();
        prop_assert_eq!(map.assignment.len(), w * h);
        prop_assert_eq!(map.sizes.iter().sum::<usize>(), w * h);
        prop_assert!(map.sizes.iter().all(|&s| s > 0));
        for (k, &s) in map.sizes.iter().enumerate() {
            prop_assert_eq!(map.assignment.iter().filter(|&&a| a == k).count(), s);
        }
        prop_assert!(map.is_contiguous());
        prop_assert_eq!(segment(&cube, &params).unwrap(), map);
    }
}

#[test]
fn count_stays_near_target_on_smooth_images() {
    for (w, h, target) in [(40, 40, 16), (60, 30, 50), (145, 145, 1501), (50, 50, 100)] {
        let cube = smooth_cube(w, h, 0.7, 0.15);
        let map = segment(&cube, &SlicParams { target, compactness: 1.0, iters: 10 }).unwrap();
        let p = map.count() as f64;
        assert!(
            p >= 0.5 * target as f64 && p <= 1.5 * target as f64,
            "{w}x{h} target {target}: {p}"
        );
    }
}

#[test]
fn too_many_superpixels_is_an_error() {
    let cube = smooth_cube(3, 3, 0.0, 0.1);
    assert!(segment(&cube, &SlicParams { target: 10, compactness: 1.0, iters: 10 }).is_err());
}
