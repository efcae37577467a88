use proptest::prelude::*;

use trajseg::eval::{cp_score, pointwise_metrics, ConfusionMatrix};
use trajseg::geo::{smooth_five_spot_triple, vincenty_distance, GpsPoint};
use trajseg::ingest::{derive_targets, Mode};
use trajseg::models::{decode_ssd, decode_yolo, SsdOutput, YoloOutput};

fn labels() -> impl Strategy<Value = Vec<Mode>> {
    prop::collection::vec((0usize..5, 1usize..60), 1..6).prop_map(|runs| {
        runs.into_iter()
            .flat_map(|(m, n)| std::iter::repeat_n(Mode::ALL[m], n))
            .collect()
    })
}

fn point() -> impl Strategy<Value = GpsPoint> {
    (-80.0f64..80.0, -179.0f64..179.0).prop_map(|(lat, lng)| GpsPoint { t: 0.0, lat, lng })
}

proptest! {
    #[test]
    fn targets_rebuild_labels(l in labels()) {
        let t = derive_targets(&l);
        prop_assert_eq!(t.expand(), l.clone());
        prop_assert_eq!(t.segments.len(), t.cp_indices.len() + 1);
        for (c, &i) in t.cp_coords.iter().zip(&t.cp_indices) {
            prop_assert!(*c > 0.0 && *c < 1.0);
            prop_assert_eq!((c * l.len() as f64).round() as usize, i);
        }
    }

    #[test]
    fn decoders_emit_one_label_per_point(
        n in 1usize..400,
        coords in prop::collection::vec(0.0f64..1.0, 2),
        raw in prop::collection::vec(0.0f64..1.0, 125),
    ) {
        let y = decode_yolo(
            &YoloOutput { coords: coords.clone(), class_probs: raw[..15].chunks(5).map(<[f64]>::to_vec).collect() },
            n,
            400,
        );
        prop_assert_eq!(y.labels.len(), n);
        prop_assert!(y.cp_indices.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(y.cp_indices.iter().all(|&i| 0 < i && i < n));
        let s = decode_ssd(&SsdOutput { class_probs: raw.chunks(5).map(<[f64]>::to_vec).collect() }, n, 16);
        prop_assert_eq!(s.labels.len(), n);
        prop_assert_eq!(s.probs.len(), n);
    }

    #[test]
    fn geodesic_is_a_symmetric_metric(a in point(), b in point()) {
        let d = vincenty_distance(&a, &b);
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, vincenty_distance(&b, &a));
        prop_assert_eq!(vincenty_distance(&a, &a), 0.0);
    }

    #[test]
    fn smoothing_keeps_length_and_constants(v in -50.0f64..50.0, n in 1usize..80) {
        let s = smooth_five_spot_triple(&vec![v; n]);
        prop_assert_eq!(s.len(), n);
        prop_assert!(s.iter().all(|x| (x - v).abs() < 1e-9));
    }

    #[test]
    fn metrics_stay_in_unit_interval(counts in prop::collection::vec(0u64..1000, 25)) {
        let cm = ConfusionMatrix::from_counts(counts.chunks(5).map(<[u64]>::to_vec).collect()).unwrap();
        let m = pointwise_metrics(&cm).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.accuracy));
        prop_assert!((0.0..=1.0).contains(&m.weighted_f1));
    }

    #[test]
    fn cp_score_ignores_order(pts in prop::collection::vec(point(), 0..8), preds in prop::collection::vec(point(), 0..8)) {
        let a = cp_score(&pts, &preds);
        let mut rp = pts.clone();
        rp.reverse();
        let mut rq = preds.clone();
        rq.reverse();
        let b = cp_score(&rp, &rq);
        prop_assert_eq!(a, b);
        prop_assert_eq!(a.tp + a.fp, preds.len());
        prop_assert_eq!(a.tp + a.fn_, pts.len());
    }
}
