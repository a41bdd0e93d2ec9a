//! Binning, percentile summaries, Kendall tau-b and conditional information gain (CIG) for
//! ranking cross-layer attributes against application goodput (AG) and delay (AD).

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::traceio::{AttributeSample, Priority};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty input")]
    Empty,
    #[error("percentile must lie in (0, 100], got {0}")]
    Percent(f64),
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("need at least two observations, got {0}")]
    TooFew(usize),
    #[error("degenerate input: every {0} value is tied")]
    AllTied(&'static str),
    #[error("non-finite value")]
    NonFinite,
}

/// Fixed-width binning of one attribute: value `v` falls in bin `floor((v - anchor) / width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSpec {
    pub attribute: String,
    pub width: f64,
    pub anchor: f64,
    pub min_count: usize,
}

impl BinSpec {
    pub fn new(attribute: &str, width: f64) -> BinSpec {
        BinSpec {
            attribute: attribute.to_string(),
            width,
            anchor: 0.0,
            min_count: 1,
        }
    }

    pub fn with_min_count(mut self, min_count: usize) -> BinSpec {
        self.min_count = min_count;
        self
    }

    pub fn is_valid(&self) -> bool {
        self.width > 0.0 && self.width.is_finite() && self.anchor.is_finite() && self.min_count >= 1
    }

    pub fn index(&self, v: f64) -> i64 {
        ((v - self.anchor) / self.width).floor() as i64
    }

    /// Left edge of bin `k`.
    pub fn edge(&self, k: i64) -> f64 {
        self.anchor + k as f64 * self.width
    }
}

/// Groups values by bin, dropping bins with fewer than `min_count` members.
pub fn bin_values(values: &[f64], spec: &BinSpec) -> BTreeMap<i64, Vec<f64>> {
    let mut bins: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for &v in values {
        bins.entry(spec.index(v)).or_default().push(v);
    }
    bins.retain(|_, members| members.len() >= spec.min_count);
    bins
}

/// Nearest-rank percentile: the `ceil(p * n / 100)`-th smallest value.
pub fn percentile(values: &[f64], p: f64) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(StatsError::Percent(p));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (p * sorted.len() as f64 / 100.0).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Median of a small set by midpoint of the middle pair (used to aggregate across groups).
fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Number of tied pairs implied by runs of equal keys in a sorted sequence.
fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for item in sorted {
        if prev.as_ref() == Some(&item) {
            run += 1;
        } else {
            total += run * (run + 1) / 2;
            run = 0;
        }
        prev = Some(item);
    }
    total + run * (run + 1) / 2
}

/// Counts inversions (strictly decreasing pairs) while merge-sorting `ys` in place.
fn count_inversions(ys: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = ys.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = count_inversions(&mut ys[..mid], buf) + count_inversions(&mut ys[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if ys[j] < ys[i] {
            inv += (mid - i) as u64;
            buf.push(ys[j]);
            j += 1;
        } else {
            buf.push(ys[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&ys[i..mid]);
    buf.extend_from_slice(&ys[j..n]);
    ys.copy_from_slice(buf);
    inv
}

/// Kendall tau-b with tie correction, `O(n log n)`.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::Length(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooFew(n));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tied_pairs(pairs.iter().map(|p| p.0));
    let joint = tied_pairs(pairs.iter().copied());
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let swaps = count_inversions(&mut ys, &mut Vec::with_capacity(n));
    let n2 = tied_pairs(ys.iter().copied());

    if n0 == n1 {
        return Err(StatsError::AllTied("x"));
    }
    if n0 == n2 {
        return Err(StatsError::AllTied("y"));
    }
    let s = n0 as i64 - n1 as i64 - n2 as i64 + joint as i64 - 2 * swaps as i64;
    Ok(tau_b(s, n0, n1, n2))
}

/// `(C - D) / sqrt((n0 - n1) (n0 - n2))`, clamped to `[-1, 1]` against rounding.
pub fn tau_b(concordant_minus_discordant: i64, n0: u64, n1: u64, n2: u64) -> f64 {
    let denom = (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();
    (concordant_minus_discordant as f64 / denom).clamp(-1.0, 1.0)
}

/// Shannon entropy in bits of the empirical label distribution.
pub fn entropy<T: Ord>(labels: &[T]) -> f64 {
    let mut counts: BTreeMap<&T, u64> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    entropy_of_counts(counts.values().copied())
}

pub fn entropy_of_counts(counts: impl IntoIterator<Item = u64>) -> f64 {
    let counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// Normalised reduction in the entropy of binned `y` from knowing binned `x`:
/// `(H(Y) - H(Y|X)) / H(Y)`, defined as 0 when `H(Y) = 0`. `x_spec.min_count` is ignored.
pub fn cig(x: &[f64], y: &[f64], x_spec: &BinSpec, y_width: f64) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::Length(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::Empty);
    }
    let y_spec = BinSpec::new("y", y_width);
    let yb: Vec<i64> = y.iter().map(|&v| y_spec.index(v)).collect();
    let hy = entropy(&yb);
    if hy <= 0.0 {
        return Ok(0.0);
    }
    let mut joint: BTreeMap<i64, BTreeMap<i64, u64>> = BTreeMap::new();
    for (&xv, &yv) in x.iter().zip(&yb) {
        *joint.entry(x_spec.index(xv)).or_default().entry(yv).or_default() += 1;
    }
    let n = x.len() as f64;
    let hy_given_x: f64 = joint
        .values()
        .map(|ys| {
            let nx: u64 = ys.values().sum();
            nx as f64 / n * entropy_of_counts(ys.values().copied())
        })
        .sum();
    Ok(((hy - hy_given_x) / hy).clamp(0.0, 1.0))
}

/// The attribute families ranked in the correlation tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Attribute {
    Rssi,
    Sinr,
    Rsrp,
    Rsrq,
    Td,
    Rd,
    Rtt,
    Cwnd,
    Plr,
    Pdr,
}

type Column = fn(&AttributeSample) -> f64;

impl Attribute {
    pub const ALL: [Attribute; 10] = [
        Attribute::Rssi,
        Attribute::Sinr,
        Attribute::Rsrp,
        Attribute::Rsrq,
        Attribute::Td,
        Attribute::Rd,
        Attribute::Rtt,
        Attribute::Cwnd,
        Attribute::Plr,
        Attribute::Pdr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attribute::Rssi => "RSSI",
            Attribute::Sinr => "SINR",
            Attribute::Rsrp => "RSRP",
            Attribute::Rsrq => "RSRQ",
            Attribute::Td => "TD",
            Attribute::Rd => "RD",
            Attribute::Rtt => "RTT",
            Attribute::Cwnd => "CWND",
            Attribute::Plr => "PLR",
            Attribute::Pdr => "PDR",
        }
    }

    /// Bin width in the attribute's native unit. RTT and CWND widths are not given by the
    /// measurement methodology and use 5 ms / 5 packets.
    pub fn bin_width(self) -> f64 {
        match self {
            Attribute::Plr => 0.0005,
            _ => 5.0,
        }
    }

    /// Summary binning: bins with fewer than 10 samples are dropped.
    pub fn bin_spec(self) -> BinSpec {
        BinSpec::new(self.name(), self.bin_width()).with_min_count(10)
    }

    /// Per-interface columns, each tagged with the priority under which that interface
    /// carries the traffic.
    fn columns(self) -> Vec<(Column, Priority)> {
        let wf = Priority::WF;
        let lf = Priority::LF;
        match self {
            Attribute::Rssi => vec![(|s| s.rssi_wifi, wf), (|s| s.rssi_lte, lf)],
            Attribute::Sinr => vec![(|s| s.sinr_wifi, wf), (|s| s.sinr_lte, lf)],
            Attribute::Rsrp => vec![(|s| s.rsrp_lte, lf)],
            Attribute::Rsrq => vec![(|s| s.rsrq_lte, lf)],
            Attribute::Td => vec![(|s| s.td_wifi, wf)],
            Attribute::Rd => vec![(|s| s.rd_wifi, wf)],
            Attribute::Rtt => vec![(|s| s.rtt_wifi, wf), (|s| s.rtt_lte, lf)],
            Attribute::Cwnd => vec![(|s| s.cwnd_wifi, wf), (|s| s.cwnd_lte, lf)],
            Attribute::Plr => vec![(|s| s.plr_wifi, wf), (|s| s.plr_lte, lf)],
            Attribute::Pdr => vec![(|s| s.pdr_wifi, wf), (|s| s.pdr_lte, lf)],
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Goodput and delay are discretised at 5 Mbps and 5 ms for CIG.
pub const AG_BIN_WIDTH: f64 = 5.0;
pub const AD_BIN_WIDTH: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub attribute: Attribute,
    pub kendall_ag: Option<f64>,
    pub kendall_ad: Option<f64>,
    pub cig_ag: Option<f64>,
    pub cig_ad: Option<f64>,
}

impl CorrelationRow {
    pub fn is_available(&self) -> bool {
        self.kendall_ag.is_some() || self.kendall_ad.is_some() || self.cig_ag.is_some() || self.cig_ad.is_some()
    }
}

/// Kendall score of an attribute against a metric over bins: each surviving bin contributes
/// its left edge and the mean metric of its samples.
pub fn binned_kendall(x: &[f64], metric: &[f64], spec: &BinSpec) -> Result<f64, StatsError> {
    if x.len() != metric.len() {
        return Err(StatsError::Length(x.len(), metric.len()));
    }
    let mut sums: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for (&xv, &m) in x.iter().zip(metric) {
        let e = sums.entry(spec.index(xv)).or_insert((0.0, 0));
        e.0 += m;
        e.1 += 1;
    }
    let (edges, means): (Vec<f64>, Vec<f64>) = sums
        .into_iter()
        .filter(|(_, (_, c))| *c >= spec.min_count)
        .map(|(k, (s, c))| (spec.edge(k), s / c as f64))
        .unzip();
    kendall_tau_b(&edges, &means)
}

fn column_stats(rows: &[&AttributeSample], col: Column, attr: Attribute) -> [Option<f64>; 4] {
    if rows.len() < 2 {
        return [None; 4];
    }
    let x: Vec<f64> = rows.iter().map(|s| col(s)).collect();
    let ag: Vec<f64> = rows.iter().map(|s| s.ag).collect();
    let ad: Vec<f64> = rows.iter().map(|s| s.ad).collect();
    let spec = attr.bin_spec();
    [
        binned_kendall(&x, &ag, &spec).ok(),
        binned_kendall(&x, &ad, &spec).ok(),
        cig(&x, &ag, &spec, AG_BIN_WIDTH).ok(),
        cig(&x, &ad, &spec, AD_BIN_WIDTH).ok(),
    ]
}

/// Kendall and CIG of every attribute against AG and AD.
///
/// With `grouped_by_prio`, each interface's column only uses rows where that interface was
/// preferred (WiFi columns under WF, LTE columns under LF). Per-interface results are
/// aggregated by their median.
pub fn correlation_table(
    samples: &[AttributeSample],
    grouped_by_prio: bool,
) -> Result<Vec<CorrelationRow>, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    let rows = Attribute::ALL
        .iter()
        .map(|&attr| {
            let mut per_stat: [Vec<f64>; 4] = Default::default();
            for (col, prio) in attr.columns() {
                let subset: Vec<&AttributeSample> = samples
                    .iter()
                    .filter(|s| !grouped_by_prio || s.prio == prio)
                    .collect();
                for (acc, v) in per_stat.iter_mut().zip(column_stats(&subset, col, attr)) {
                    acc.extend(v);
                }
            }
            CorrelationRow {
                attribute: attr,
                kendall_ag: median(&per_stat[0]),
                kendall_ad: median(&per_stat[1]),
                cig_ag: median(&per_stat[2]),
                cig_ad: median(&per_stat[3]),
            }
        })
        .collect();
    Ok(rows)
}

/// CSV with columns `attribute,kendall_ag,kendall_ad,cig_ag,cig_ad`; unavailable cells are `NA`.
pub fn write_correlation_csv(rows: &[CorrelationRow]) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
    let mut out = String::from("attribute,kendall_ag,kendall_ad,cig_ag,cig_ad\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.attribute,
            cell(r.kendall_ag),
            cell(r.kendall_ad),
            cell(r.cig_ag),
            cell(r.cig_ad)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binning_uses_floor() {
        let spec = BinSpec::new("rssi", 5.0);
        let bins = bin_values(&[-39.0, -42.0], &spec);
        assert_eq!(bins.len(), 2);
        assert_eq!(bins[&-8], vec![-39.0]);
        assert_eq!(bins[&-9], vec![-42.0]);
        assert!(bin_values(&[-39.0, -42.0], &spec.clone().with_min_count(2)).is_empty());
        assert!(bin_values(&[], &spec).is_empty());
        assert!(bin_values(&[1.0, 1.0], &BinSpec::new("a", 5.0).with_min_count(3)).is_empty());
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile(&v, 90.0).unwrap(), 9.0);
        assert_eq!(percentile(&[7.0], 3.0).unwrap(), 7.0);
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 100.0).unwrap(), 3.0);
        assert_eq!(percentile(&[], 50.0), Err(StatsError::Empty));
        assert!(percentile(&[1.0], 0.0).is_err());
        assert!(percentile(&[1.0], 101.0).is_err());
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        let t = kendall_tau_b(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((t - 4.0 / 6.0).abs() < 1e-15);
        assert!(matches!(
            kendall_tau_b(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::AllTied("x"))
        ));
        assert!(kendall_tau_b(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau_b(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn entropy_examples() {
        use Priority::*;
        assert_eq!(entropy(&[WF, WF, LF, LF]), 1.0);
        assert_eq!(entropy(&[WF, WF, WF]), 0.0);
        let expected = -0.75 * 0.75f64.log2() - 0.25 * 0.25f64.log2();
        assert!((entropy(&[WF, WF, WF, LF]) - expected).abs() < 1e-12);
        assert!((expected - 0.8113).abs() < 1e-4);
        for k in 1..=16u32 {
            let labels: Vec<u32> = (0..k).collect();
            assert!((entropy(&labels) - f64::from(k).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn cig_examples() {
        let spec = BinSpec::new("x", 5.0);
        assert_eq!(cig(&[0.0, 10.0, 20.0], &[3.0, 3.0, 3.0], &spec, 5.0).unwrap(), 0.0);
        assert_eq!(
            cig(&[0.0, 0.0, 10.0, 10.0], &[0.0, 0.0, 10.0, 10.0], &spec, 5.0).unwrap(),
            1.0
        );
        assert_eq!(
            cig(&[0.0, 10.0, 0.0, 10.0], &[0.0, 0.0, 10.0, 10.0], &spec, 5.0).unwrap(),
            0.0
        );
        assert!(cig(&[0.0], &[0.0, 1.0], &spec, 5.0).is_err());
    }

    #[test]
    fn min_count_does_not_affect_cig() {
        let spec = BinSpec::new("x", 5.0).with_min_count(100);
        assert_eq!(
            cig(&[0.0, 0.0, 10.0, 10.0], &[0.0, 0.0, 10.0, 10.0], &spec, 5.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn table_has_ten_rows_even_when_sparse() {
        let rows = correlation_table(&[AttributeSample::blank(0.0, Priority::WF)], false).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| !r.is_available()));
        let csv = write_correlation_csv(&rows);
        assert_eq!(csv.lines().count(), 11);
        assert!(csv.contains("RSSI,NA,NA,NA,NA"));
        assert_eq!(correlation_table(&[], false), Err(StatsError::Empty));
    }
}
