//! Candidate thresholds and the information gain ratio criterion.

use std::collections::BTreeMap;

use crate::dataset::{LabeledRecord, FEATURE_BIN_WIDTHS, N_FEATURES};
use crate::featstats::entropy_of_counts;

/// Up to this many distinct values, thresholds are midpoints between raw values; above it
/// they are midpoints between occupied bins.
pub const MAX_EXACT_DISTINCT: usize = 32;

fn bin_of(v: f64, width: f64) -> i64 {
    (v / width).floor() as i64
}

/// Threshold separating occupied bins `lo < hi`: midway between the right edge of `lo` and
/// the left edge of `hi` (exactly the shared edge when they are adjacent).
fn bin_threshold(lo: i64, hi: i64, width: f64) -> f64 {
    ((lo + 1) as f64 * width + hi as f64 * width) / 2.0
}

pub fn candidate_thresholds(values: &[f64], width: f64) -> Vec<f64> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= MAX_EXACT_DISTINCT {
        return distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    }
    let mut bins: Vec<i64> = distinct.iter().map(|&v| bin_of(v, width)).collect();
    bins.dedup();
    bins.windows(2).map(|w| bin_threshold(w[0], w[1], width)).collect()
}

/// IGR of a binary split given per-side class counts; `None` if a side is empty.
pub fn igr_from_counts(left: [u64; 2], right: [u64; 2]) -> Option<f64> {
    let nl = left[0] + left[1];
    let nr = right[0] + right[1];
    if nl == 0 || nr == 0 {
        return None;
    }
    let n = (nl + nr) as f64;
    let parent = entropy_of_counts([left[0] + right[0], left[1] + right[1]]);
    let children =
        nl as f64 / n * entropy_of_counts(left) + nr as f64 / n * entropy_of_counts(right);
    let split_info = entropy_of_counts([nl, nr]);
    Some(((parent - children) / split_info).max(0.0))
}

/// IGR of splitting `records` at `features[feature] <= threshold`; `None` for an invalid
/// split with an empty side.
pub fn igr(records: &[LabeledRecord], feature: usize, threshold: f64) -> Option<f64> {
    let mut left = [0u64; 2];
    let mut right = [0u64; 2];
    for r in records {
        let side = if r.features[feature] <= threshold { &mut left } else { &mut right };
        side[r.label.index()] += 1;
    }
    igr_from_counts(left, right)
}

/// Column-major copy of a training set with precomputed bins.
pub(crate) struct Prepared {
    pub values: Vec<Vec<f64>>,
    pub bins: Vec<Vec<i64>>,
    /// Value sits on its bin's left edge, so an edge threshold sends it left.
    pub on_edge: Vec<Vec<bool>>,
    pub labels: Vec<usize>,
}

impl Prepared {
    pub fn new(records: &[LabeledRecord]) -> Prepared {
        let mut values: Vec<Vec<f64>> = (0..N_FEATURES).map(|_| Vec::with_capacity(records.len())).collect();
        let mut bins: Vec<Vec<i64>> = (0..N_FEATURES).map(|_| Vec::with_capacity(records.len())).collect();
        let mut on_edge: Vec<Vec<bool>> = (0..N_FEATURES).map(|_| Vec::with_capacity(records.len())).collect();
        for r in records {
            for f in 0..N_FEATURES {
                let v = r.features[f];
                let w = FEATURE_BIN_WIDTHS[f];
                let b = bin_of(v, w);
                values[f].push(v);
                bins[f].push(b);
                on_edge[f].push(v <= b as f64 * w);
            }
        }
        Prepared {
            values,
            bins,
            on_edge,
            labels: records.iter().map(|r| r.label.index()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub igr: f64,
}

/// Best valid split of the rows `idx` on feature `f`, scanning thresholds in ascending order
/// and keeping the first maximum.
pub(crate) fn best_split_on(
    data: &Prepared,
    f: usize,
    idx: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let mut best: Option<Split> = None;
    let total = {
        let mut c = [0u64; 2];
        for &i in idx {
            c[data.labels[i]] += 1;
        }
        c
    };
    let mut consider = |threshold: f64, left: [u64; 2]| {
        let right = [total[0] - left[0], total[1] - left[1]];
        if ((left[0] + left[1]) as usize) < min_leaf || ((right[0] + right[1]) as usize) < min_leaf {
            return;
        }
        if let Some(g) = igr_from_counts(left, right) {
            if best.is_none_or(|b| g > b.igr) {
                best = Some(Split {
                    feature: f,
                    threshold,
                    igr: g,
                });
            }
        }
    };

    if let Some(cells) = exact_cells(&data.values[f], &data.labels, idx) {
        let mut left = [0u64; 2];
        for w in cells.windows(2) {
            left[0] += w[0].1[0];
            left[1] += w[0].1[1];
            consider((w[0].0 + w[1].0) / 2.0, left);
        }
        return best;
    }

    let width = FEATURE_BIN_WIDTHS[f];
    let cells = bin_cells(&data.bins[f], &data.on_edge[f], &data.labels, idx);
    let mut left = [0u64; 2];
    for w in cells.windows(2) {
        let (lo, lo_cell) = w[0];
        let (hi, hi_cell) = w[1];
        left[0] += lo_cell.counts[0];
        left[1] += lo_cell.counts[1];
        let mut l = left;
        if hi == lo + 1 {
            l[0] += hi_cell.edge[0];
            l[1] += hi_cell.edge[1];
        }
        consider(bin_threshold(lo, hi, width), l);
    }
    best
}

/// Sorted distinct values with class counts, or `None` beyond `MAX_EXACT_DISTINCT`.
fn exact_cells(values: &[f64], labels: &[usize], idx: &[usize]) -> Option<Vec<(f64, [u64; 2])>> {
    let mut cells: Vec<(f64, [u64; 2])> = Vec::with_capacity(MAX_EXACT_DISTINCT + 1);
    for &i in idx {
        let v = values[i];
        match cells.binary_search_by(|c| c.0.total_cmp(&v)) {
            Ok(p) => cells[p].1[labels[i]] += 1,
            Err(p) => {
                if cells.len() == MAX_EXACT_DISTINCT {
                    return None;
                }
                let mut c = [0u64; 2];
                c[labels[i]] = 1;
                cells.insert(p, (v, c));
            }
        }
    }
    Some(cells)
}

#[derive(Debug, Clone, Copy, Default)]
struct BinCell {
    counts: [u64; 2],
    edge: [u64; 2],
}

fn bin_cells(bins: &[i64], on_edge: &[bool], labels: &[usize], idx: &[usize]) -> Vec<(i64, BinCell)> {
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for &i in idx {
        lo = lo.min(bins[i]);
        hi = hi.max(bins[i]);
    }
    if idx.is_empty() {
        return Vec::new();
    }
    let span = hi.saturating_sub(lo);
    if (0..=1 << 16).contains(&span) {
        let mut dense = vec![BinCell::default(); span as usize + 1];
        for &i in idx {
            let c = &mut dense[(bins[i] - lo) as usize];
            c.counts[labels[i]] += 1;
            if on_edge[i] {
                c.edge[labels[i]] += 1;
            }
        }
        dense
            .into_iter()
            .enumerate()
            .filter(|(_, c)| c.counts[0] + c.counts[1] > 0)
            .map(|(k, c)| (lo + k as i64, c))
            .collect()
    } else {
        let mut sparse: BTreeMap<i64, BinCell> = BTreeMap::new();
        for &i in idx {
            let c = sparse.entry(bins[i]).or_default();
            c.counts[labels[i]] += 1;
            if on_edge[i] {
                c.edge[labels[i]] += 1;
            }
        }
        sparse.into_iter().collect()
    }
}
