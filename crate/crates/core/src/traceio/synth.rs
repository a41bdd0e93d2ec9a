//! Synthetic measurement traces.
//!
//! Row `k` covers `[k * interval, (k + 1) * interval)` and alternates between WF and LF. MAC
//! attributes come from the scenario, TCP attributes from probing the mapped channel, and AG/AD
//! from simulating the whole scenario under a static policy for the row's priority.

use super::{AttributeSample, Priority, Scenario, TraceError};
use crate::netsim::{channel_map, probe, run_policy, Interface, MetricsReport, SimError, SimParams};
use crate::selector::Policy;

pub fn synthesize_trace(scenario: &Scenario, interval: f64) -> Result<Vec<AttributeSample>, TraceError> {
    let params = SimParams {
        seed: scenario.seed,
        ..SimParams::default()
    };
    synthesize_trace_with(scenario, interval, &params)
}

pub fn synthesize_trace_with(
    scenario: &Scenario,
    interval: f64,
    params: &SimParams,
) -> Result<Vec<AttributeSample>, TraceError> {
    if !(interval > 0.0 && interval.is_finite()) {
        return Err(TraceError::Interval(interval));
    }
    scenario.validate()?;
    if scenario.duration <= 0.0 {
        return Ok(Vec::new());
    }
    let sim = SimParams {
        metric_window: interval,
        duration: None,
        ..params.clone()
    };
    let simulate = |policy| {
        run_policy(scenario, policy, None, &sim).map_err(|e| match e {
            SimError::Scenario(e) => e,
            other => TraceError::Scenario(other.to_string()),
        })
    };
    let runs: [MetricsReport; 2] = [simulate(Policy::StaticWf)?, simulate(Policy::StaticLf)?];
    let n = runs[0].ag_series.len().min(runs[1].ag_series.len());
    let window = params.recv_window as f64;
    let fallback_ad = (interval * 1000.0).max(1.0);

    let samples = (0..n)
        .map(|k| {
            let t = k as f64 * interval;
            let prio = Priority::from_index(k % 2);
            let run = &runs[prio.index()];
            let mac = scenario.mac_at(t);
            let wifi = probe(&channel_map(&mac, Interface::Wifi, &params.channel), window);
            let lte = probe(&channel_map(&mac, Interface::Lte, &params.channel), window);
            AttributeSample {
                t,
                rssi_lte: mac.rssi_lte,
                rssi_wifi: mac.rssi_wifi,
                sinr_lte: mac.sinr_lte,
                sinr_wifi: mac.sinr_wifi,
                rsrp_lte: mac.rsrp_lte,
                rsrq_lte: mac.rsrq_lte,
                td_wifi: mac.td_wifi,
                rd_wifi: mac.rd_wifi,
                rtt_lte: lte.rtt,
                rtt_wifi: wifi.rtt,
                cwnd_lte: lte.cwnd,
                cwnd_wifi: wifi.cwnd,
                plr_lte: lte.plr,
                plr_wifi: wifi.plr,
                pdr_lte: lte.pdr,
                pdr_wifi: wifi.pdr,
                prio,
                radio: None,
                ag: run.ag_series[k],
                ad: run.ad_series[k].unwrap_or(fallback_ad).max(1e-3),
                label: None,
            }
        })
        .collect();
    Ok(samples)
}
