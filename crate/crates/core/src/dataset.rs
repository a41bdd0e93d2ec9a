//! Turns paired WF/LF measurement rows into a binary-classification dataset.

use std::cmp::Ordering;
use std::io::Read;

use thiserror::Error;

use crate::traceio::{AttributeSample, Priority};

pub const N_FEATURES: usize = 12;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "rssi_wifi",
    "rssi_lte",
    "sinr_wifi",
    "sinr_lte",
    "rtt_wifi",
    "rtt_lte",
    "cwnd_wifi",
    "cwnd_lte",
    "plr_wifi",
    "plr_lte",
    "pdr_wifi",
    "pdr_lte",
];

/// Bin width of each feature, in feature order.
pub const FEATURE_BIN_WIDTHS: [f64; N_FEATURES] =
    [5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 0.0005, 0.0005, 5.0, 5.0];

pub type Features = [f64; N_FEATURES];

/// Relative goodput difference below which two outcomes count as an AG tie.
pub const AG_TIE_TOLERANCE: f64 = 0.01;

/// Default pairing window, seconds.
pub const DEFAULT_PAIR_WINDOW: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub features: Features,
    pub label: Priority,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    /// Mbps.
    pub ag: f64,
    /// ms.
    pub ad: f64,
}

impl Outcome {
    pub fn new(ag: f64, ad: f64) -> Outcome {
        Outcome { ag, ad }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}, column `{column}`: {message}")]
    Cell {
        line: usize,
        column: String,
        message: String,
    },
    #[error("header: {0}")]
    Header(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub fn features_of(s: &AttributeSample) -> Features {
    [
        s.rssi_wifi,
        s.rssi_lte,
        s.sinr_wifi,
        s.sinr_lte,
        s.rtt_wifi,
        s.rtt_lte,
        s.cwnd_wifi,
        s.cwnd_lte,
        s.plr_wifi,
        s.plr_lte,
        s.pdr_wifi,
        s.pdr_lte,
    ]
}

/// Compares goodput first and delay second. `Greater` means `a` performed better.
///
/// Goodputs within a factor `1 + AG_TIE_TOLERANCE` of each other are tied and fall through
/// to the delay comparison.
pub fn better_than(a: Outcome, b: Outcome) -> Ordering {
    let eps = AG_TIE_TOLERANCE;
    if a.ag > b.ag * (1.0 + eps) {
        Ordering::Greater
    } else if b.ag > a.ag * (1.0 + eps) {
        Ordering::Less
    } else {
        b.ad.partial_cmp(&a.ad).unwrap_or(Ordering::Equal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairingStats {
    pub pairs: usize,
    pub dropped: usize,
}

/// Greedily pairs each unpaired row with the next unpaired row of opposite priority at most
/// `window` seconds later. Returns index pairs in order of their first row.
pub fn pair_rows(samples: &[AttributeSample], window: f64) -> (Vec<(usize, usize)>, PairingStats) {
    let n = samples.len();
    let mut used = vec![false; n];
    let mut pairs = Vec::new();
    for i in 0..n {
        if used[i] {
            continue;
        }
        let a = &samples[i];
        let partner = (i + 1..n)
            .take_while(|&j| samples[j].t - a.t <= window)
            .find(|&j| !used[j] && samples[j].prio != a.prio);
        if let Some(j) = partner {
            used[i] = true;
            used[j] = true;
            pairs.push((i, j));
        }
    }
    let stats = PairingStats {
        pairs: pairs.len(),
        dropped: n - 2 * pairs.len(),
    };
    (pairs, stats)
}

/// Merges two observations taken under opposite priorities. Features are midpoints; the
/// label is the priority that performed better, or the earlier observation's on a full tie.
pub fn merge_observations(
    first: (&Features, Priority, Outcome),
    second: (&Features, Priority, Outcome),
) -> LabeledRecord {
    let mut features = [0.0; N_FEATURES];
    for (k, f) in features.iter_mut().enumerate() {
        *f = (first.0[k] + second.0[k]) / 2.0;
    }
    let label = match better_than(first.2, second.2) {
        Ordering::Greater | Ordering::Equal => first.1,
        Ordering::Less => second.1,
    };
    LabeledRecord { features, label }
}

pub fn merge_pair(a: &AttributeSample, b: &AttributeSample) -> LabeledRecord {
    let (first, second) = if b.t < a.t { (b, a) } else { (a, b) };
    merge_observations(
        (&features_of(first), first.prio, Outcome::new(first.ag, first.ad)),
        (&features_of(second), second.prio, Outcome::new(second.ag, second.ad)),
    )
}

pub fn build_dataset(samples: &[AttributeSample], window: f64) -> (Vec<LabeledRecord>, PairingStats) {
    let (pairs, stats) = pair_rows(samples, window);
    let records = pairs
        .iter()
        .map(|&(i, j)| merge_pair(&samples[i], &samples[j]))
        .collect();
    (records, stats)
}

/// Dataset CSV: the 12 features in fixed order followed by `label`.
pub fn write_dataset(records: &[LabeledRecord]) -> String {
    let mut out = FEATURE_NAMES.join(",");
    out.push_str(",label\n");
    for r in records {
        for f in r.features {
            out.push_str(&f.to_string());
            out.push(',');
        }
        out.push_str(r.label.as_str());
        out.push('\n');
    }
    out
}

pub fn parse_dataset<R: Read>(reader: R) -> Result<Vec<LabeledRecord>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let expected: Vec<&str> = FEATURE_NAMES.iter().copied().chain(["label"]).collect();
    let got: Vec<&str> = header.iter().collect();
    if got != expected {
        return Err(DatasetError::Header(format!(
            "expected `{}`, got `{}`",
            expected.join(","),
            got.join(",")
        )));
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let cell_err = |column: &str, message: String| DatasetError::Cell {
            line,
            column: column.to_string(),
            message,
        };
        if row.len() != N_FEATURES + 1 {
            return Err(cell_err("*", format!("expected {} cells, got {}", N_FEATURES + 1, row.len())));
        }
        let mut features = [0.0; N_FEATURES];
        for (k, f) in features.iter_mut().enumerate() {
            let v: f64 = row[k]
                .parse()
                .map_err(|_| cell_err(FEATURE_NAMES[k], format!("`{}` is not a number", &row[k])))?;
            if !v.is_finite() {
                return Err(cell_err(FEATURE_NAMES[k], format!("{v} is not finite")));
            }
            *f = v;
        }
        let label = row[N_FEATURES].parse().map_err(|e: String| cell_err("label", e))?;
        records.push(LabeledRecord { features, label });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, prio: Priority, ag: f64, ad: f64) -> AttributeSample {
        AttributeSample {
            ag,
            ad,
            ..AttributeSample::blank(t, prio)
        }
    }

    #[test]
    fn better_than_examples() {
        assert_eq!(better_than(Outcome::new(11.3, 47.0), Outcome::new(17.4, 35.0)), Ordering::Less);
        assert_eq!(better_than(Outcome::new(24.1, 58.0), Outcome::new(13.4, 43.0)), Ordering::Greater);
        assert_eq!(better_than(Outcome::new(10.0, 20.0), Outcome::new(10.0, 30.0)), Ordering::Greater);
        assert_eq!(better_than(Outcome::new(10.0, 20.0), Outcome::new(10.05, 20.0)), Ordering::Equal);
    }

    #[test]
    fn pairing_is_greedy() {
        use Priority::*;
        let s = vec![row(0.0, LF, 1.0, 1.0), row(0.1, WF, 1.0, 1.0), row(0.2, WF, 1.0, 1.0), row(0.3, LF, 1.0, 1.0)];
        let (pairs, stats) = pair_rows(&s, 5.0);
        assert_eq!(pairs, vec![(0, 1), (2, 3)]);
        assert_eq!(stats, PairingStats { pairs: 2, dropped: 0 });

        let all_wf: Vec<_> = (0..7).map(|i| row(i as f64, WF, 1.0, 1.0)).collect();
        let (pairs, stats) = pair_rows(&all_wf, 5.0);
        assert!(pairs.is_empty());
        assert_eq!(stats.dropped, 7);
    }

    #[test]
    fn pairing_respects_window() {
        use Priority::*;
        let s = vec![row(0.0, LF, 1.0, 1.0), row(6.0, WF, 1.0, 1.0)];
        assert!(pair_rows(&s, 5.0).0.is_empty());
        assert_eq!(pair_rows(&s, 6.0).0, vec![(0, 1)]);
    }

    #[test]
    fn full_tie_takes_earlier_row() {
        let a = row(1.0, Priority::LF, 10.0, 30.0);
        let b = row(2.0, Priority::WF, 10.0, 30.0);
        assert_eq!(merge_pair(&a, &b).label, Priority::LF);
        assert_eq!(merge_pair(&b, &a).label, Priority::LF);
    }

    #[test]
    fn alternating_trace_halves() {
        let s: Vec<_> = (0..10_000)
            .map(|i| row(i as f64 * 0.1, Priority::from_index(i % 2), 1.0, 1.0))
            .collect();
        let (records, stats) = build_dataset(&s, DEFAULT_PAIR_WINDOW);
        assert_eq!(records.len(), 5000);
        assert_eq!(stats.dropped, 0);
        assert!(build_dataset(&[], DEFAULT_PAIR_WINDOW).0.is_empty());
    }

    #[test]
    fn dataset_csv_roundtrip() {
        let records = vec![
            LabeledRecord {
                features: [-40.5, -30.0, 17.5, 20.0, 48.0, 21.0, 20.0, 24.0, 0.0003, 0.00005, 11.5, 14.0],
                label: Priority::WF,
            },
            LabeledRecord {
                features: [0.1; N_FEATURES],
                label: Priority::LF,
            },
        ];
        let text = write_dataset(&records);
        assert_eq!(parse_dataset(text.as_bytes()).unwrap(), records);
    }

    #[test]
    fn dataset_csv_errors_name_line() {
        let mut text = write_dataset(&[LabeledRecord {
            features: [1.0; N_FEATURES],
            label: Priority::WF,
        }]);
        text.push_str("1,1,1,1,1,1,1,1,1,1,1,1,XF\n");
        let err = parse_dataset(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("label"), "{err}");
        assert!(parse_dataset("a,b\n".as_bytes()).is_err());
    }
}
