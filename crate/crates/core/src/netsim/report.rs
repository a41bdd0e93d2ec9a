use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use super::SimError;
use crate::featstats::percentile;
use crate::selector::{Decision, Policy};

/// Per-tick invariant checks; every counter is zero on a healthy run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimChecks {
    pub ticks: u64,
    pub conservation_violations: u64,
    pub cwnd_violations: u64,
    pub capacity_violations: u64,
}

impl SimChecks {
    pub fn all_hold(&self) -> bool {
        self.conservation_violations == 0 && self.cwnd_violations == 0 && self.capacity_violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scenario: String,
    pub policy: Policy,
    pub seed: u64,
    /// Seconds per window.
    pub window: f64,
    /// Mbps of distinct in-order payload per window.
    pub ag_series: Vec<f64>,
    /// ms, one per delivered block.
    pub ad_samples: Vec<f64>,
    /// ms per window: mean delay of blocks released, or the head-of-line age during a stall.
    pub ad_series: Vec<Option<f64>>,
    /// Mean in-flight bytes per window, `[wifi, lte]`.
    pub accumulation: Vec<[f64; 2]>,
    /// Share of non-exploring decisions per window that favoured LTE.
    pub lte_share: Vec<Option<f64>>,
    /// Decisions at which the (priority, reason) pair changed.
    pub decisions: Vec<Decision>,
    pub decision_count: u64,
    pub checks: SimChecks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ag,
    Ad,
    AccumulationWifi,
    AccumulationLte,
}

impl MetricsReport {
    pub fn new(scenario: &str, policy: Policy, seed: u64, window: f64) -> MetricsReport {
        MetricsReport {
            scenario: scenario.to_string(),
            policy,
            seed,
            window,
            ag_series: Vec::new(),
            ad_samples: Vec::new(),
            ad_series: Vec::new(),
            accumulation: Vec::new(),
            lte_share: Vec::new(),
            decisions: Vec::new(),
            decision_count: 0,
            checks: SimChecks::default(),
        }
    }

    pub fn series(&self, metric: Metric) -> Vec<f64> {
        match metric {
            Metric::Ag => self.ag_series.clone(),
            Metric::Ad => self.ad_samples.clone(),
            Metric::AccumulationWifi => self.accumulation.iter().map(|a| a[0]).collect(),
            Metric::AccumulationLte => self.accumulation.iter().map(|a| a[1]).collect(),
        }
    }

    /// Start of the first window in which at least `share` of the decisions favoured LTE.
    pub fn switch_time(&self, share: f64) -> Option<f64> {
        self.lte_share
            .iter()
            .position(|s| s.is_some_and(|s| s >= share))
            .map(|i| i as f64 * self.window)
    }

    pub fn ag_csv(&self) -> String {
        let mut out = String::from("t,ag_mbps\n");
        for (i, ag) in self.ag_series.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i as f64 * self.window, ag);
        }
        out
    }

    pub fn ad_csv(&self) -> String {
        let mut out = String::from("block,ad_ms\n");
        for (i, ad) in self.ad_samples.iter().enumerate() {
            let _ = writeln!(out, "{i},{ad}");
        }
        out
    }

    pub fn accumulation_csv(&self) -> String {
        let mut out = String::from("t,wifi_bytes,lte_bytes\n");
        for (i, a) in self.accumulation.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", i as f64 * self.window, a[0], a[1]);
        }
        out
    }

    pub fn decisions_csv(&self) -> String {
        let mut out = String::from("t,priority,reason\n");
        for d in &self.decisions {
            let _ = writeln!(out, "{},{},{}", d.t, d.priority, d.reason);
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {}", self.scenario);
        let _ = writeln!(out, "policy {}", self.policy);
        let _ = writeln!(out, "seed {}", self.seed);
        for (name, metric) in [
            ("ag_mbps", Metric::Ag),
            ("ad_ms", Metric::Ad),
            ("wifi_inflight_bytes", Metric::AccumulationWifi),
            ("lte_inflight_bytes", Metric::AccumulationLte),
        ] {
            for p in [50.0, 90.0] {
                let v = report_percentiles(self, metric, p)
                    .map_or_else(|_| "NA".to_string(), |v| format!("{v:.3}"));
                let _ = writeln!(out, "{name}_p{p} {v}");
            }
        }
        let switch = self
            .switch_time(0.8)
            .map_or_else(|| "none".to_string(), |t| format!("{t:.1}"));
        let _ = writeln!(out, "switch_time_s {switch}");
        let _ = writeln!(out, "decisions {}", self.decision_count);
        let _ = writeln!(
            out,
            "invariant_violations {}",
            self.checks.conservation_violations + self.checks.cwnd_violations + self.checks.capacity_violations
        );
        out
    }

    /// Writes `ag.csv`, `ad.csv`, `accumulation.csv`, `decisions.csv` and `summary.txt`.
    pub fn write_bundle(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("ag.csv"), self.ag_csv())?;
        fs::write(dir.join("ad.csv"), self.ad_csv())?;
        fs::write(dir.join("accumulation.csv"), self.accumulation_csv())?;
        fs::write(dir.join("decisions.csv"), self.decisions_csv())?;
        fs::write(dir.join("summary.txt"), self.summary())?;
        Ok(())
    }
}

pub fn report_percentiles(report: &MetricsReport, metric: Metric, p: f64) -> Result<f64, SimError> {
    let series = report.series(metric);
    if series.is_empty() {
        return Err(SimError::EmptySeries);
    }
    percentile(&series, p).map_err(|e| SimError::Param(e.to_string()))
}
