mod common;

use std::thread;

use proptest::prelude::*;
use smartps_core::selector::{Observation, Policy, Reason, RefreshOutcome, SelectorConfig, SelectorState};
use smartps_core::treelearn::{Model, TreeNode};
use smartps_core::Priority;

use common::{planted_records, planted_rule};

fn constant(p: Priority) -> Model {
    Model::Tree(TreeNode::leaf(p, [1, 1]))
}

fn obs(t: f64, srtt: [f64; 2], space: [f64; 2]) -> Observation {
    Observation {
        t,
        features: [0.0; 12],
        srtt,
        cwnd_space: space,
    }
}

fn observations() -> impl Strategy<Value = Vec<Observation>> {
    proptest::collection::vec(
        (0.0f64..0.5, 1.0f64..100.0, 1.0f64..100.0, 0u8..4, proptest::array::uniform12(-90.0f64..40.0)),
        1..300,
    )
    .prop_map(|v| {
        let mut t = 0.0;
        v.into_iter()
            .map(|(dt, a, b, space, features)| {
                t += dt;
                Observation {
                    t,
                    features,
                    srtt: [a, b],
                    cwnd_space: [f64::from(space & 1), f64::from(space >> 1)],
                }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn round_robin_alternates_when_both_paths_open(n in 1usize..200) {
        let mut s = SelectorState::new(SelectorConfig::new(Policy::RoundRobin, 0), None);
        for i in 0..n {
            let d = s.decide(&obs(i as f64, [10.0, 10.0], [1.0, 1.0]));
            prop_assert_eq!(d.priority, if i % 2 == 0 { Priority::WF } else { Priority::LF });
        }
    }

    #[test]
    fn minrtt_takes_the_faster_open_path(os in observations()) {
        let mut s = SelectorState::new(SelectorConfig::new(Policy::MinRtt, 0), None);
        for o in &os {
            let d = s.decide(o);
            let faster = if o.srtt[1] < o.srtt[0] { Priority::LF } else { Priority::WF };
            let open = |p: Priority| o.cwnd_space[p.index()] > 0.0;
            if !open(faster) && open(faster.opposite()) {
                prop_assert_eq!((d.priority, d.reason), (faster.opposite(), Reason::Fallback));
            } else {
                prop_assert_eq!((d.priority, d.reason), (faster, Reason::Model));
            }
        }
    }

    #[test]
    fn zero_epsilon_never_explores(os in observations(), seed in any::<u64>()) {
        let mut cfg = SelectorConfig::new(Policy::SmartPs, seed);
        cfg.exploration_eps = 0.0;
        let mut s = SelectorState::new(cfg, Some(constant(Priority::LF)));
        for o in &os {
            prop_assert!(s.decide(o).reason != Reason::Explore);
        }
    }

    #[test]
    fn decisions_are_deterministic(os in observations(), seed in any::<u64>(), policy in 0usize..5) {
        let policy = Policy::ALL[policy];
        let model = Some(Model::Tree(TreeNode::internal(0, -60.0, TreeNode::leaf(Priority::LF, [0, 1]), TreeNode::leaf(Priority::WF, [1, 0]))));
        let mut a = SelectorState::new(SelectorConfig::new(policy, seed), model.clone());
        let mut b = SelectorState::new(SelectorConfig::new(policy, seed), model);
        for o in &os {
            prop_assert_eq!(a.decide(o), b.decide(o));
        }
    }

    #[test]
    fn explore_inverts_the_model(os in observations(), seed in any::<u64>()) {
        let mut s = SelectorState::new(SelectorConfig::new(Policy::SmartPs, seed), Some(constant(Priority::WF)));
        for o in os.iter().filter(|o| o.cwnd_space == [1.0, 1.0]) {
            let d = s.decide(o);
            if s.is_explore_window(o.t) {
                prop_assert_eq!((d.priority, d.reason), (Priority::LF, Reason::Explore));
            } else {
                prop_assert_eq!((d.priority, d.reason), (Priority::WF, Reason::Model));
            }
        }
    }
}

#[test]
fn exploration_rate_tracks_epsilon() {
    let s = SelectorState::new(SelectorConfig::new(Policy::SmartPs, 5), None);
    let windows = 20_000;
    let hits = (0..windows).filter(|&w| s.is_explore_window(w as f64 + 0.5)).count();
    let rate = hits as f64 / windows as f64;
    assert!((rate - 0.05).abs() < 0.01, "{rate}");
}

#[test]
fn snapshots_never_mix_versions() {
    let s = SelectorState::new(SelectorConfig::new(Policy::SmartPs, 0), None);
    let handle = s.model_handle();
    let writer = {
        let h = handle.clone();
        thread::spawn(move || {
            for i in 0..2000 {
                let p = if i % 2 == 0 { Priority::LF } else { Priority::WF };
                h.swap(constant(p));
            }
        })
    };
    let mut last = 0;
    for _ in 0..20_000 {
        let snap = handle.snapshot();
        assert!(snap.version >= last);
        last = snap.version;
        let expected = match snap.version {
            0 => None,
            v if v % 2 == 1 => Some(Priority::LF),
            _ => Some(Priority::WF),
        };
        assert_eq!(snap.model.as_ref().map(|m| m.classify(&[0.0; 12])), expected);
    }
    writer.join().unwrap();
    assert_eq!(handle.snapshot().version, 2000);
}

#[test]
fn refresh_between_decisions_switches_cleanly() {
    let mut cfg = SelectorConfig::new(Policy::SmartPs, 1);
    cfg.exploration_eps = 0.0;
    cfg.refresh_interval = 1.0;
    cfg.min_train = 200;
    let mut s = SelectorState::new(cfg, Some(constant(Priority::LF)));
    let records = planted_records(400, 0.0, 2);
    let probe: Vec<Observation> = planted_records(200, 0.0, 3)
        .into_iter()
        .enumerate()
        .map(|(i, r)| Observation {
            t: i as f64 * 0.001,
            features: r.features,
            srtt: [10.0, 10.0],
            cwnd_space: [1.0, 1.0],
        })
        .collect();
    for (i, r) in records.iter().enumerate() {
        s.push_record(r.clone());
        // Decisions interleaved with a refresh that is not yet due or lacks records.
        let d = s.decide(&probe[i % probe.len()]);
        assert_eq!(d.priority, Priority::LF);
        if i < 199 {
            assert_eq!(s.maybe_refresh(0.5), RefreshOutcome::NotDue);
        }
    }
    assert_eq!(s.maybe_refresh(2.0), RefreshOutcome::Refreshed { version: 1 });
    let agree = probe
        .iter()
        .filter(|o| s.decide(o).priority == planted_rule(&o.features))
        .count();
    assert!(agree as f64 / probe.len() as f64 > 0.9, "{agree}");
    assert_eq!(s.maybe_refresh(2.5), RefreshOutcome::NotDue);
}
