use hgc::formats::{load_cube, load_labels, save_cube, save_labels_pgm, save_labels_txt};
use hgc_core::cube::{HsiCube, LabelMap};
use proptest::prelude::*;

fn cube() -> impl Strategy<Value = HsiCube> {
    (1usize..6, 1usize..6, 1usize..5).prop_flat_map(|(w, h, b)| {
        prop::collection::vec(-1.0e6f32..1.0e6, w * h * b)
            .prop_map(move |v| HsiCube::new(w, h, b, v.into_iter().map(f64::from).collect()).unwrap())
    })
}

/// Label maps whose ids are contiguous from 1.
fn label_map() -> impl Strategy<Value = LabelMap> {
    (1usize..7, 1usize..7, 1u16..20).prop_flat_map(|(w, h, classes)| {
        prop::collection::vec(0..=classes, w * h).prop_map(move |mut v| {
            let mut present: Vec<u16> = v.iter().copied().filter(|&c| c > 0).collect();
            present.sort_unstable();
            present.dedup();
            for x in v.iter_mut().filter(|x| **x > 0) {
                *x = present.binary_search(x).unwrap() as u16 + 1;
            }
            LabelMap::new(w, h, v).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cubes_round_trip(c in cube()) {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("c.hgc.json");
        save_cube(&p, &c).unwrap();
        prop_assert_eq!(load_cube(&p).unwrap(), c);
    }

    #[test]
    fn label_maps_round_trip(l in label_map()) {
        let d = tempfile::tempdir().unwrap();
        let t = d.path().join("l.labels.txt");
        save_labels_txt(&t, l.width(), l.labels()).unwrap();
        prop_assert_eq!(&load_labels(&t, None).unwrap(), &l);
        let g = d.path().join("l.pgm");
        save_labels_pgm(&g, &l).unwrap();
        prop_assert_eq!(&load_labels(&g, None).unwrap(), &l);
    }
}
