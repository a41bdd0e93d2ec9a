//! Scenario suites and policy comparisons built on the simulator.

use std::fmt::{self, Write as _};

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{build_dataset, LabeledRecord, DEFAULT_PAIR_WINDOW};
use crate::featstats::percentile;
use crate::netsim::{run_policy, MetricsReport, SimError, SimParams};
use crate::selector::Policy;
use crate::traceio::{synthesize_trace_with, MacAttr, Scenario, Segment, TraceError, Trajectory};
use crate::treelearn::{train_serving_model, Model, ServingParams, TreeError};

/// Seconds.
pub const SCENARIO_DURATION: f64 = 60.0;
pub const VARIANTS_PER_FAMILY: usize = 5;
/// Share of LTE-favouring decisions that marks a handover.
pub const SWITCH_SHARE: f64 = 0.8;
/// Evaluation seeds are `1..=n`; training scenarios draw from this range upwards.
pub const TRAINING_SEED_BASE: u64 = 10_000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("no data: {0}")]
    Empty(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Walkaway,
    InterferenceBurst,
    Stable,
    Oscillating,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Walkaway,
        Family::InterferenceBurst,
        Family::Stable,
        Family::Oscillating,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Walkaway => "walkaway",
            Family::InterferenceBurst => "burst",
            Family::Stable => "stable",
            Family::Oscillating => "oscillating",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Attributes shared by every suite scenario: steady LTE and a noisy WiFi SINR.
fn base(start: f64, end: f64, sinr_wifi: f64) -> Segment {
    Segment::new(start, end)
        .with(MacAttr::RssiLte, Trajectory::Noisy(-60.0, 1.0))
        .with(MacAttr::SinrLte, Trajectory::Noisy(15.0, 1.0))
        .with(MacAttr::SinrWifi, Trajectory::Noisy(sinr_wifi, 1.5))
}

/// WiFi RSSI ramps from `from` to `to` over `[start, end]` and holds outside it.
fn ramp_scenario(name: &str, seed: u64, start: f64, end: f64, from: f64, to: f64) -> Scenario {
    let mut segments = Vec::new();
    if start > 0.0 {
        segments.push(base(0.0, start, 25.0).with(MacAttr::RssiWifi, Trajectory::Constant(from)));
    }
    segments.push(base(start, end, 25.0).with(MacAttr::RssiWifi, Trajectory::LinearRamp(from, to)));
    if end < SCENARIO_DURATION {
        segments.push(base(end, SCENARIO_DURATION, 25.0).with(MacAttr::RssiWifi, Trajectory::Constant(to)));
    }
    Scenario::new(name, SCENARIO_DURATION, seed, segments)
}

/// WiFi RSSI ramps from −30 to −85 dBm over 60 s while LTE stays steady.
pub fn walkaway(seed: u64) -> Scenario {
    ramp_scenario("walkaway", seed, 0.0, SCENARIO_DURATION, -30.0, -85.0)
}

fn burst_scenario(name: &str, seed: u64, depth: f64, sinr: f64, len: f64, period: f64, first: f64) -> Scenario {
    let calm = |a, b| base(a, b, 25.0).with(MacAttr::RssiWifi, Trajectory::Noisy(-45.0, 1.0));
    let mut segments = Vec::new();
    let mut t = 0.0;
    let mut next = first;
    while t < SCENARIO_DURATION {
        if next > t {
            let end = next.min(SCENARIO_DURATION);
            segments.push(calm(t, end));
            t = end;
            continue;
        }
        let end = (t + len).min(SCENARIO_DURATION);
        segments.push(base(t, end, sinr).with(MacAttr::RssiWifi, Trajectory::Noisy(depth, 1.0)));
        t = end;
        next += period;
    }
    Scenario::new(name, SCENARIO_DURATION, seed, segments)
}

fn stable_scenario(name: &str, seed: u64, rssi: f64, sinr: f64) -> Scenario {
    let seg = base(0.0, SCENARIO_DURATION, sinr).with(MacAttr::RssiWifi, Trajectory::Noisy(rssi, 1.5));
    Scenario::new(name, SCENARIO_DURATION, seed, vec![seg])
}

/// Triangle wave in WiFi RSSI between −45 dBm and `low`.
fn oscillating_scenario(name: &str, seed: u64, low: f64, period: f64) -> Scenario {
    let high = -45.0;
    let half = period / 2.0;
    let mut segments = Vec::new();
    let mut t = 0.0;
    let mut down = true;
    while t < SCENARIO_DURATION {
        let end = (t + half).min(SCENARIO_DURATION);
        let frac = (end - t) / half;
        let (a, b) = if down { (high, low) } else { (low, high) };
        let traj = Trajectory::LinearRamp(a, a + (b - a) * frac);
        segments.push(base(t, end, 25.0).with(MacAttr::RssiWifi, traj));
        t = end;
        down = !down;
    }
    Scenario::new(name, SCENARIO_DURATION, seed, segments)
}

/// One of the `VARIANTS_PER_FAMILY` parameterisations of a scenario family.
///
/// # Panics
/// If `variant >= VARIANTS_PER_FAMILY`.
pub fn suite_scenario(family: Family, variant: usize, seed: u64) -> Scenario {
    assert!(variant < VARIANTS_PER_FAMILY, "variant {variant} out of range");
    let name = format!("{}-{variant}", family.name());
    match family {
        Family::Walkaway => {
            let (start, end, from, to) = [
                (0.0, 60.0, -30.0, -85.0),
                (10.0, 50.0, -35.0, -85.0),
                (0.0, 40.0, -40.0, -85.0),
                (20.0, 60.0, -40.0, -80.0),
                (5.0, 45.0, -30.0, -80.0),
            ][variant];
            ramp_scenario(&name, seed, start, end, from, to)
        }
        Family::InterferenceBurst => {
            let (depth, sinr, len, period, first) = [
                (-70.0, 12.0, 6.0, 20.0, 10.0),
                (-68.0, 10.0, 8.0, 15.0, 5.0),
                (-72.0, 15.0, 5.0, 12.0, 8.0),
                (-66.0, 8.0, 10.0, 25.0, 12.0),
                (-74.0, 12.0, 4.0, 10.0, 6.0),
            ][variant];
            burst_scenario(&name, seed, depth, sinr, len, period, first)
        }
        Family::Stable => {
            let (rssi, sinr) = [(-40.0, 28.0), (-44.0, 25.0), (-48.0, 22.0), (-52.0, 20.0), (-46.0, 25.0)][variant];
            stable_scenario(&name, seed, rssi, sinr)
        }
        Family::Oscillating => {
            let (low, period) = [(-72.0, 20.0), (-76.0, 30.0), (-70.0, 15.0), (-78.0, 24.0), (-74.0, 40.0)][variant];
            oscillating_scenario(&name, seed, low, period)
        }
    }
}

/// Every (family, variant) pair for one seed.
pub fn suite(seed: u64) -> Vec<Scenario> {
    Family::ALL
        .iter()
        .flat_map(|&f| (0..VARIANTS_PER_FAMILY).map(move |v| suite_scenario(f, v, seed)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainParams {
    /// Seconds per synthesized row.
    pub interval: f64,
    pub pair_window: f64,
    pub serving: ServingParams,
    pub sim: SimParams,
}

impl Default for PretrainParams {
    fn default() -> Self {
        PretrainParams {
            interval: 0.5,
            pair_window: DEFAULT_PAIR_WINDOW,
            serving: ServingParams::default(),
            sim: SimParams::default(),
        }
    }
}

/// Labelled records from synthesized traces of `scenarios`, in scenario order.
pub fn training_records(scenarios: &[Scenario], params: &PretrainParams) -> Result<Vec<LabeledRecord>, ExperimentError> {
    let per: Vec<Result<Vec<LabeledRecord>, ExperimentError>> = scenarios
        .par_iter()
        .map(|s| {
            let sim = params.sim.with_seed(s.seed);
            let trace = synthesize_trace_with(s, params.interval, &sim)?;
            Ok(build_dataset(&trace, params.pair_window).0)
        })
        .collect();
    let mut records = Vec::new();
    for r in per {
        records.extend(r?);
    }
    Ok(records)
}

pub fn pretrain(scenarios: &[Scenario], params: &PretrainParams) -> Result<Model, ExperimentError> {
    let records = training_records(scenarios, params)?;
    if records.is_empty() {
        return Err(ExperimentError::Empty("training records"));
    }
    Ok(train_serving_model(&records, &params.serving)?)
}

/// Training scenarios for `families`: every variant under `seeds_per_variant` seeds drawn
/// from the training range.
pub fn training_scenarios(families: &[Family], seeds_per_variant: u64) -> Vec<Scenario> {
    let mut out = Vec::new();
    for &f in families {
        for v in 0..VARIANTS_PER_FAMILY {
            for k in 0..seeds_per_variant {
                let seed = TRAINING_SEED_BASE + 1000 * k + 100 * v as u64 + f as u64;
                out.push(suite_scenario(f, v, seed));
            }
        }
    }
    out
}

/// Start of the first window whose WiFi RSSI is at or below `cliff`.
fn cliff_time(scenario: &Scenario, window: f64, cliff: f64) -> Option<f64> {
    let n = (scenario.duration / window).round() as usize;
    (0..n)
        .map(|k| k as f64 * window)
        .find(|&t| scenario.mac_at(t).rssi_wifi <= cliff)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyHandover {
    pub policy: Policy,
    /// Seconds; `None` if the policy never handed over.
    pub switch_time: Option<f64>,
    /// 90th percentile of per-window WiFi in-flight bytes once WiFi RSSI is past the cliff.
    pub wifi_accumulation_p90: f64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkawayComparison {
    pub seed: u64,
    /// Seconds.
    pub cliff_time: f64,
    pub smartps: PolicyHandover,
    pub minrtt: PolicyHandover,
}

impl WalkawayComparison {
    /// A policy that never switches counts as switching after the run ends.
    pub fn smartps_switches_first(&self) -> bool {
        let inf = |t: Option<f64>| t.unwrap_or(f64::INFINITY);
        inf(self.smartps.switch_time) <= inf(self.minrtt.switch_time)
    }

    pub fn smartps_accumulates_less(&self) -> bool {
        self.smartps.wifi_accumulation_p90 < self.minrtt.wifi_accumulation_p90
    }
}

pub fn walkaway_comparison(seed: u64, model: &Model, params: &SimParams) -> Result<WalkawayComparison, ExperimentError> {
    let scenario = walkaway(seed);
    let params = params.with_seed(seed);
    let cliff = cliff_time(&scenario, params.metric_window, params.channel.wifi.rssi_cliff)
        .ok_or(ExperimentError::Empty("walkaway never crosses the WiFi cliff"))?;
    let first = (cliff / params.metric_window).round() as usize;
    let handover = |policy, model: Option<Model>| -> Result<PolicyHandover, ExperimentError> {
        let report = run_policy(&scenario, policy, model, &params)?;
        let after: Vec<f64> = report.accumulation.iter().skip(first).map(|a| a[0]).collect();
        let p90 = percentile(&after, 90.0).map_err(|_| ExperimentError::Empty("accumulation after the cliff"))?;
        Ok(PolicyHandover {
            policy,
            switch_time: report.switch_time(SWITCH_SHARE),
            wifi_accumulation_p90: p90,
            report,
        })
    };
    Ok(WalkawayComparison {
        seed,
        cliff_time: cliff,
        smartps: handover(Policy::SmartPs, Some(model.clone()))?,
        minrtt: handover(Policy::MinRtt, None)?,
    })
}

/// Counts of integer-millisecond delays; pooled medians over millions of blocks stay cheap.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DelayHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl DelayHistogram {
    pub fn add(&mut self, ms: f64) {
        let bin = ms.max(0.0).round() as usize;
        if bin >= self.counts.len() {
            self.counts.resize(bin + 1, 0);
        }
        self.counts[bin] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &DelayHistogram) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Nearest-rank percentile, `p` in (0, 100].
    pub fn percentile(&self, p: f64) -> Option<f64> {
        if self.total == 0 || !(p > 0.0 && p <= 100.0) {
            return None;
        }
        let rank = ((p * self.total as f64 / 100.0).ceil() as u64).clamp(1, self.total);
        let mut seen = 0;
        for (ms, &c) in self.counts.iter().enumerate() {
            seen += c;
            if seen >= rank {
                return Some(ms as f64);
            }
        }
        None
    }
}

/// Pooled results of one policy on one suite scenario across seeds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyPool {
    /// Mbps, one per run: distinct in-order payload over the run's duration.
    pub connection_ag: Vec<f64>,
    /// Mbps per metric window.
    pub ag: Vec<f64>,
    pub ad: DelayHistogram,
    pub invariant_violations: u64,
}

impl PolicyPool {
    fn add(&mut self, r: &MetricsReport) {
        if !r.ag_series.is_empty() {
            self.connection_ag.push(r.ag_series.iter().sum::<f64>() / r.ag_series.len() as f64);
        }
        self.ag.extend_from_slice(&r.ag_series);
        for &d in &r.ad_samples {
            self.ad.add(d);
        }
        let c = r.checks;
        self.invariant_violations += c.conservation_violations + c.cwnd_violations + c.capacity_violations;
    }

    fn merge(&mut self, other: &PolicyPool) {
        self.connection_ag.extend_from_slice(&other.connection_ag);
        self.ag.extend_from_slice(&other.ag);
        self.ad.merge(&other.ad);
        self.invariant_violations += other.invariant_violations;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub name: String,
    pub family: Family,
    pub smartps: PolicyPool,
    pub minrtt: PolicyPool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteComparison {
    pub seeds: Vec<u64>,
    pub scenarios: Vec<ScenarioResult>,
    /// Median over runs of each run's goodput.
    pub smartps_median_ag: f64,
    pub minrtt_median_ag: f64,
    /// Median over every metric window of every run.
    pub smartps_window_median_ag: f64,
    pub minrtt_window_median_ag: f64,
    /// Median over every delivered block.
    pub smartps_median_ad: f64,
    pub minrtt_median_ad: f64,
    pub invariant_violations: u64,
}

impl SuiteComparison {
    pub fn ag_ratio(&self) -> f64 {
        self.smartps_median_ag / self.minrtt_median_ag
    }

    pub fn ad_ratio(&self) -> f64 {
        self.smartps_median_ad / self.minrtt_median_ad
    }

    /// Per-scenario CDF points: AG and AD at percentiles 5, 10, ..., 100.
    pub fn cdf_csv(&self) -> String {
        let mut out = String::from("scenario,policy,percentile,ag_mbps,ad_ms\n");
        for s in &self.scenarios {
            for (policy, pool) in [(Policy::SmartPs, &s.smartps), (Policy::MinRtt, &s.minrtt)] {
                for p in (5..=100).step_by(5) {
                    let p = p as f64;
                    let ag = percentile(&pool.ag, p).map_or_else(|_| "NA".into(), |v| format!("{v:.3}"));
                    let ad = pool.ad.percentile(p).map_or_else(|| "NA".into(), |v| format!("{v}"));
                    let _ = writeln!(out, "{},{policy},{p},{ag},{ad}", s.name);
                }
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "runs {}", self.scenarios.len() * self.seeds.len());
        let _ = writeln!(out, "smartps_median_ag_mbps {:.3}", self.smartps_median_ag);
        let _ = writeln!(out, "minrtt_median_ag_mbps {:.3}", self.minrtt_median_ag);
        let _ = writeln!(out, "ag_ratio {:.4}", self.ag_ratio());
        let _ = writeln!(out, "smartps_window_median_ag_mbps {:.3}", self.smartps_window_median_ag);
        let _ = writeln!(out, "minrtt_window_median_ag_mbps {:.3}", self.minrtt_window_median_ag);
        let _ = writeln!(out, "smartps_median_ad_ms {:.3}", self.smartps_median_ad);
        let _ = writeln!(out, "minrtt_median_ad_ms {:.3}", self.minrtt_median_ad);
        let _ = writeln!(out, "ad_ratio {:.4}", self.ad_ratio());
        let _ = writeln!(out, "invariant_violations {}", self.invariant_violations);
        out
    }
}

/// Pools for every (scenario, policy) cell of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRuns {
    pub seeds: Vec<u64>,
    pub policies: Vec<Policy>,
    /// Scenario name, family and one pool per entry of `policies`.
    pub scenarios: Vec<(String, Family, Vec<PolicyPool>)>,
}

impl SuiteRuns {
    /// Everything `policy` produced across the suite.
    pub fn pooled(&self, policy: Policy) -> Option<PolicyPool> {
        let k = self.policies.iter().position(|&p| p == policy)?;
        let mut all = PolicyPool::default();
        for (_, _, pools) in &self.scenarios {
            all.merge(&pools[k]);
        }
        Some(all)
    }

    /// Pooled AG (per window and per connection) and AD percentiles for each policy.
    pub fn percentile_csv(&self) -> String {
        const PS: [f64; 5] = [10.0, 25.0, 50.0, 75.0, 90.0];
        let mut out = String::from("policy,metric,p10,p25,p50,p75,p90\n");
        for &policy in &self.policies {
            let pool = self.pooled(policy).unwrap_or_default();
            let rows: [(&str, Vec<Option<f64>>); 3] = [
                ("ag_mbps", PS.iter().map(|&p| percentile(&pool.ag, p).ok()).collect()),
                ("connection_ag_mbps", PS.iter().map(|&p| percentile(&pool.connection_ag, p).ok()).collect()),
                ("ad_ms", PS.iter().map(|&p| pool.ad.percentile(p)).collect()),
            ];
            for (metric, vals) in rows {
                let cells: Vec<String> = vals
                    .iter()
                    .map(|v| v.map_or_else(|| "NA".into(), |v| format!("{v:.3}")))
                    .collect();
                let _ = writeln!(out, "{policy},{metric},{}", cells.join(","));
            }
        }
        out
    }

    /// SmartPS against MinRTT; both must be among `policies`.
    pub fn comparison(&self) -> Result<SuiteComparison, ExperimentError> {
        let find = |p: Policy| {
            self.policies
                .iter()
                .position(|&q| q == p)
                .ok_or(ExperimentError::Empty("policy runs"))
        };
        let (si, mi) = (find(Policy::SmartPs)?, find(Policy::MinRtt)?);
        let scenarios: Vec<ScenarioResult> = self
            .scenarios
            .iter()
            .map(|(name, family, pools)| ScenarioResult {
                name: name.clone(),
                family: *family,
                smartps: pools[si].clone(),
                minrtt: pools[mi].clone(),
            })
            .collect();
        let mut all = [PolicyPool::default(), PolicyPool::default()];
        for s in &scenarios {
            all[0].merge(&s.smartps);
            all[1].merge(&s.minrtt);
        }
        let ag = |p: &PolicyPool| percentile(&p.connection_ag, 50.0).map_err(|_| ExperimentError::Empty("goodput samples"));
        let window_ag = |p: &PolicyPool| percentile(&p.ag, 50.0).map_err(|_| ExperimentError::Empty("goodput samples"));
        let ad = |p: &PolicyPool| p.ad.percentile(50.0).ok_or(ExperimentError::Empty("delay samples"));
        Ok(SuiteComparison {
            seeds: self.seeds.clone(),
            smartps_median_ag: ag(&all[0])?,
            minrtt_median_ag: ag(&all[1])?,
            smartps_window_median_ag: window_ag(&all[0])?,
            minrtt_window_median_ag: window_ag(&all[1])?,
            smartps_median_ad: ad(&all[0])?,
            minrtt_median_ad: ad(&all[1])?,
            invariant_violations: all[0].invariant_violations + all[1].invariant_violations,
            scenarios,
        })
    }
}

/// Runs every policy on every suite scenario for every seed. SmartPS serves `model`.
pub fn suite_runs(model: &Model, seeds: &[u64], policies: &[Policy], params: &SimParams) -> Result<SuiteRuns, ExperimentError> {
    let jobs: Vec<(Family, usize, u64, Policy)> = Family::ALL
        .iter()
        .flat_map(|&f| {
            (0..VARIANTS_PER_FAMILY)
                .flat_map(move |v| seeds.iter().flat_map(move |&s| policies.iter().map(move |&p| (f, v, s, p))))
        })
        .collect();
    let pools: Vec<Result<PolicyPool, ExperimentError>> = jobs
        .par_iter()
        .map(|&(f, v, seed, policy)| {
            let scenario = suite_scenario(f, v, seed);
            let m = (policy == Policy::SmartPs).then(|| model.clone());
            let mut pool = PolicyPool::default();
            pool.add(&run_policy(&scenario, policy, m, &params.with_seed(seed))?);
            Ok(pool)
        })
        .collect();

    let mut scenarios: Vec<(String, Family, Vec<PolicyPool>)> = Vec::new();
    for (&(f, v, _, policy), r) in jobs.iter().zip(pools) {
        let pool = r?;
        let name = format!("{}-{v}", f.name());
        if scenarios.last().is_none_or(|s| s.0 != name) {
            scenarios.push((name, f, vec![PolicyPool::default(); policies.len()]));
        }
        let k = policies.iter().position(|&p| p == policy).unwrap_or(0);
        scenarios.last_mut().unwrap().2[k].merge(&pool);
    }
    Ok(SuiteRuns {
        seeds: seeds.to_vec(),
        policies: policies.to_vec(),
        scenarios,
    })
}

/// Runs SmartPS (serving `model`) and MinRTT on every suite scenario for every seed.
pub fn suite_comparison(model: &Model, seeds: &[u64], params: &SimParams) -> Result<SuiteComparison, ExperimentError> {
    suite_runs(model, seeds, &[Policy::SmartPs, Policy::MinRtt], params)?.comparison()
}
