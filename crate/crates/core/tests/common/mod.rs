#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smartps_core::dataset::{LabeledRecord, N_FEATURES};
use smartps_core::Priority;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A three-level threshold rule over WiFi RSSI, WiFi PDR, LTE RTT, LTE SINR and WiFi PLR.
pub fn planted_rule(f: &[f64; N_FEATURES]) -> Priority {
    use Priority::*;
    if f[0] > -60.0 {
        if f[10] > 20.0 {
            WF
        } else if f[5] < 50.0 {
            LF
        } else {
            WF
        }
    } else if f[3] > 10.0 {
        LF
    } else if f[8] < 0.01 {
        WF
    } else {
        LF
    }
}

pub fn random_features(r: &mut ChaCha8Rng) -> [f64; N_FEATURES] {
    [
        r.random_range(-90.0..-30.0),
        r.random_range(-110.0..-50.0),
        r.random_range(0.0..35.0),
        r.random_range(-5.0..25.0),
        r.random_range(10.0..120.0),
        r.random_range(30.0..90.0),
        r.random_range(1.0..128.0),
        r.random_range(1.0..128.0),
        r.random_range(0.0..0.02),
        r.random_range(0.0..0.02),
        r.random_range(0.0..40.0),
        r.random_range(0.0..30.0),
    ]
}

/// Records labelled by `planted_rule`, each label flipped with probability `noise`.
pub fn planted_records(n: usize, noise: f64, seed: u64) -> Vec<LabeledRecord> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let features = random_features(&mut r);
            let mut label = planted_rule(&features);
            if r.random::<f64>() < noise {
                label = label.opposite();
            }
            LabeledRecord { features, label }
        })
        .collect()
}

/// Tau-b by enumerating every pair.
pub fn kendall_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut s, mut tx, mut ty) = (0i64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tx += 1;
            }
            if dy == 0.0 {
                ty += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                s += if (dx > 0.0) == (dy > 0.0) { 1 } else { -1 };
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as u64;
    if tx == n0 || ty == n0 {
        return None;
    }
    let t = (s as f64) / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt();
    Some(t.clamp(-1.0, 1.0))
}

pub fn entropy_oracle(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Information gain ratio of splitting `records` at `v <= threshold` on `feature`.
pub fn igr_oracle(records: &[LabeledRecord], feature: usize, threshold: f64) -> Option<f64> {
    let mut left = [0u64; 2];
    let mut right = [0u64; 2];
    for r in records {
        let side = if r.features[feature] <= threshold { &mut left } else { &mut right };
        side[r.label.index()] += 1;
    }
    let nl: u64 = left.iter().sum();
    let nr: u64 = right.iter().sum();
    if nl == 0 || nr == 0 {
        return None;
    }
    let n = (nl + nr) as f64;
    let total = [left[0] + right[0], left[1] + right[1]];
    let gain = entropy_oracle(&total)
        - (nl as f64 / n) * entropy_oracle(&left)
        - (nr as f64 / n) * entropy_oracle(&right);
    let split_info = entropy_oracle(&[nl, nr]);
    Some(gain / split_info)
}

/// Best (feature, threshold, igr) over midpoints between consecutive distinct values, with
/// features visited in ascending order and thresholds ascending.
pub fn brute_force_split(records: &[LabeledRecord], features: &[usize]) -> Option<(usize, f64, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for &f in features {
        let mut vals: Vec<f64> = records.iter().map(|r| r.features[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            if let Some(g) = igr_oracle(records, f, t) {
                if best.is_none_or(|b| g > b.2) {
                    best = Some((f, t, g));
                }
            }
        }
    }
    best
}

pub fn accuracy(classify: impl Fn(&[f64; N_FEATURES]) -> Priority, records: &[LabeledRecord]) -> f64 {
    let hits = records.iter().filter(|r| classify(&r.features) == r.label).count();
    hits as f64 / records.len() as f64
}
