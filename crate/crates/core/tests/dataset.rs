use std::cmp::Ordering;

use proptest::prelude::*;
use smartps_core::dataset::{
    better_than, build_dataset, features_of, merge_observations, pair_rows, parse_dataset, write_dataset, Outcome,
    N_FEATURES,
};
use smartps_core::{AttributeSample, Priority};

fn prio() -> impl Strategy<Value = Priority> {
    prop_oneof![Just(Priority::WF), Just(Priority::LF)]
}

/// Rows at strictly increasing times with random attributes, priorities and outcomes.
fn trace(max: usize) -> impl Strategy<Value = Vec<AttributeSample>> {
    proptest::collection::vec(
        (0.1f64..4.0, prio(), -90.0f64..-30.0, 1.0f64..100.0, 0.0f64..50.0, 1.0f64..200.0),
        0..max,
    )
    .prop_map(|rows| {
        let mut t = 0.0;
        rows.into_iter()
            .map(|(dt, p, rssi, rtt, ag, ad)| {
                t += dt;
                AttributeSample {
                    rssi_wifi: rssi,
                    rtt_lte: rtt,
                    ag,
                    ad,
                    ..AttributeSample::blank(t, p)
                }
            })
            .collect()
    })
}

fn outcome() -> impl Strategy<Value = Outcome> {
    (0.0f64..50.0, 1.0f64..200.0).prop_map(|(ag, ad)| Outcome::new(ag, ad))
}

proptest! {
    #[test]
    fn records_are_midpoints_of_pairs(rows in trace(60), window in 0.5f64..10.0) {
        let (pairs, stats) = pair_rows(&rows, window);
        let (records, _) = build_dataset(&rows, window);
        prop_assert_eq!(records.len(), pairs.len());
        prop_assert_eq!(stats.pairs * 2 + stats.dropped, rows.len());
        prop_assert!(records.len() <= rows.len() / 2);
        for (rec, &(i, j)) in records.iter().zip(&pairs) {
            prop_assert!(rows[i].prio != rows[j].prio);
            prop_assert!(rows[j].t - rows[i].t <= window);
            let (a, b) = (features_of(&rows[i]), features_of(&rows[j]));
            for k in 0..N_FEATURES {
                prop_assert_eq!(rec.features[k], (a[k] + b[k]) / 2.0);
            }
        }
    }

    #[test]
    fn label_invariant_under_swap(fa in proptest::array::uniform12(-50.0f64..50.0), fb in proptest::array::uniform12(-50.0f64..50.0),
                                  pa in prio(), oa in outcome(), ob in outcome()) {
        let pb = pa.opposite();
        let ab = merge_observations((&fa, pa, oa), (&fb, pb, ob));
        let ba = merge_observations((&fb, pb, ob), (&fa, pa, oa));
        prop_assert_eq!(ab.features, ba.features);
        if better_than(oa, ob) != Ordering::Equal {
            prop_assert_eq!(ab.label, ba.label);
        } else {
            prop_assert_eq!(ab.label, pa);
            prop_assert_eq!(ba.label, pb);
        }
    }

    #[test]
    fn better_than_is_antisymmetric(a in outcome(), b in outcome()) {
        prop_assert_eq!(better_than(a, b), better_than(b, a).reverse());
    }

    #[test]
    fn dataset_csv_roundtrip(rows in trace(40)) {
        let (records, _) = build_dataset(&rows, 5.0);
        let text = write_dataset(&records);
        prop_assert_eq!(parse_dataset(text.as_bytes()).unwrap(), records);
    }
}

#[test]
fn pairs_lf_wf_wf_lf_into_two_records() {
    use Priority::*;
    let rows: Vec<AttributeSample> = [LF, WF, WF, LF]
        .iter()
        .enumerate()
        .map(|(i, &p)| AttributeSample::blank(i as f64, p))
        .collect();
    let (pairs, stats) = pair_rows(&rows, 5.0);
    assert_eq!(pairs, vec![(0, 1), (2, 3)]);
    assert_eq!(stats.dropped, 0);
}

#[test]
fn lone_priority_yields_nothing() {
    let rows: Vec<AttributeSample> = (0..10).map(|i| AttributeSample::blank(i as f64, Priority::WF)).collect();
    let (records, stats) = build_dataset(&rows, 5.0);
    assert!(records.is_empty());
    assert_eq!(stats.dropped, 10);
}
