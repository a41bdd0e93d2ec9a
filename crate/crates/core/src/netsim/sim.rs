use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::channel::{channel_map, probe, ChannelConfig, PathChannel};
use super::report::{MetricsReport, SimChecks};
use super::{Interface, SimError};
use crate::dataset::Features;
use crate::rng::{derive_seed, seeded};
use crate::selector::{Decision, Observation, Policy, Reason, SelectorConfig, SelectorState, WindowOutcome};
use crate::traceio::{MacState, Priority, Scenario};
use crate::treelearn::Model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    /// Seconds; `None` runs for the scenario's duration.
    pub duration: Option<f64>,
    /// Bytes per block.
    pub block_size: usize,
    pub seed: u64,
    /// Connection-level receive window, blocks.
    pub recv_window: usize,
    /// Packets.
    pub init_cwnd: f64,
    /// ms.
    pub min_rto: f64,
    /// Seconds per AG / accumulation window.
    pub metric_window: f64,
    /// Seconds between attribute measurements fed to the selector.
    pub sample_interval: f64,
    pub channel: ChannelConfig,
    pub check_invariants: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            duration: None,
            block_size: 1500,
            seed: 0,
            recv_window: 128,
            init_cwnd: 10.0,
            min_rto: 200.0,
            metric_window: 0.1,
            sample_interval: 0.1,
            channel: ChannelConfig::default(),
            check_invariants: true,
        }
    }
}

impl SimParams {
    pub fn with_seed(&self, seed: u64) -> SimParams {
        SimParams { seed, ..self.clone() }
    }

    fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Param(m.to_string()));
        if self.block_size == 0 {
            return bad("block_size must be positive");
        }
        if self.recv_window == 0 {
            return bad("recv_window must be positive");
        }
        if !(self.init_cwnd >= 1.0) {
            return bad("init_cwnd must be at least 1");
        }
        if !(self.min_rto > 0.0) {
            return bad("min_rto must be positive");
        }
        if !(self.metric_window >= 0.001) || !(self.sample_interval >= 0.001) {
            return bad("metric_window and sample_interval must be at least one tick");
        }
        if let Some(d) = self.duration {
            if !(d >= 0.0 && d.is_finite()) {
                return bad("duration must be a non-negative number of seconds");
            }
        }
        Ok(())
    }
}

/// The selector's view of the attributes: scenario MAC values plus probe-based TCP estimates.
pub fn measure(mac: &MacState, channel: &ChannelConfig, window: f64) -> Features {
    let w = probe(&channel_map(mac, Interface::Wifi, channel), window);
    let l = probe(&channel_map(mac, Interface::Lte, channel), window);
    [
        mac.rssi_wifi,
        mac.rssi_lte,
        mac.sinr_wifi,
        mac.sinr_lte,
        w.rtt,
        l.rtt,
        w.cwnd,
        l.cwnd,
        w.plr,
        l.plr,
        w.pdr,
        l.pdr,
    ]
}

#[derive(Debug, Clone, Copy)]
struct Sent {
    seq: u64,
    /// ms, send time of this copy.
    sent: f64,
}

#[derive(Debug, Clone, Copy)]
struct Wire {
    seq: u64,
    sent: f64,
    /// ms, when the packet (or its ACK) reaches the far end.
    at: f64,
    /// Cumulative in-order delivery point carried by an ACK.
    data_ack: u64,
}

struct Path {
    ch: PathChannel,
    enabled: bool,
    cwnd: f64,
    ssthresh: f64,
    srtt: f64,
    /// Reduced window still above the outstanding flight; `cwnd` follows the flight down to it.
    drain_to: Option<f64>,
    in_flight: VecDeque<Sent>,
    link: VecDeque<Sent>,
    credit: f64,
    fwd: VecDeque<Wire>,
    back: VecDeque<Wire>,
    reinject: VecDeque<u64>,
}

impl Path {
    fn space(&self) -> usize {
        if !self.enabled {
            return 0;
        }
        (self.cwnd.floor() as usize).saturating_sub(self.in_flight.len())
    }
}

/// Per-block bookkeeping between the delivery point and the send frontier.
#[derive(Debug, Clone, Copy)]
struct Slot {
    first_tx: f64,
    arrived: bool,
}

const LOSS_TAG: u64 = 0x1055;

/// Runs `scenario` with a fresh selector for `policy`.
pub fn run_policy(
    scenario: &Scenario,
    policy: Policy,
    model: Option<Model>,
    params: &SimParams,
) -> Result<MetricsReport, SimError> {
    let mut sel = SelectorState::new(SelectorConfig::new(policy, params.seed), model);
    run(scenario, &mut sel, params)
}

pub fn run(scenario: &Scenario, selector: &mut SelectorState, params: &SimParams) -> Result<MetricsReport, SimError> {
    scenario.validate()?;
    params.validate()?;
    let duration = params.duration.unwrap_or(scenario.duration);
    let n_ticks = (duration * 1000.0).round() as u64;
    let block = params.block_size as f64;
    let w_blocks = params.recv_window as u64;
    let cap_window = params.recv_window as f64;
    let metric_ticks = ((params.metric_window * 1000.0).round() as u64).max(1);
    let sample_ticks = ((params.sample_interval * 1000.0).round() as u64).max(1);
    let explore_ticks = ((selector.config.explore_window * 1000.0).round() as u64).max(1);
    let online = selector.policy() == Policy::SmartPs;
    let mut rng = seeded(derive_seed(params.seed, LOSS_TAG));

    let mac0 = scenario.mac_at(0.0);
    let mut paths: Vec<Path> = Interface::BOTH
        .iter()
        .map(|&iface| {
            let ch = channel_map(&mac0, iface, &params.channel);
            Path {
                ch,
                enabled: params.channel.get(iface).enabled,
                cwnd: params.init_cwnd.min(cap_window),
                ssthresh: cap_window,
                // The subflow handshake gives the first RTT sample.
                srtt: ch.rtt_base,
                drain_to: None,
                in_flight: VecDeque::new(),
                link: VecDeque::new(),
                credit: 0.0,
                fwd: VecDeque::new(),
                back: VecDeque::new(),
                reinject: VecDeque::new(),
            }
        })
        .collect();

    let mut slots: VecDeque<Slot> = VecDeque::new();
    let mut delivered_upto: u64 = 0;
    let mut next_seq: u64 = 0;
    let mut data_acked: u64 = 0;
    let mut features = measure(&mac0, &params.channel, cap_window);

    let mut report = MetricsReport::new(&scenario.name, selector.policy(), params.seed, params.metric_window);
    let mut checks = SimChecks::default();
    let mut cum_capacity_bytes = 0.0;
    let mut cum_delivered_bytes = 0.0;

    // Metric-window accumulators.
    let mut win_bytes = 0.0;
    let mut win_ad = (0.0, 0usize);
    let mut win_inflight = [0.0f64; 2];
    let mut win_favor = [0u64; 2];
    // Exploration-window accumulators.
    let mut ex_bytes = 0.0;
    let mut ex_ad = (0.0, 0usize);
    let mut ex_favor = [0u64; 2];
    let mut ex_features = features;
    let mut last_logged: Option<(Priority, Reason)> = None;
    let mut in_range = Vec::with_capacity(params.recv_window + 1);

    for tick in 0..n_ticks {
        let now = tick as f64;
        let t = now / 1000.0;
        let mac = scenario.mac_at(t);
        for (p, iface) in paths.iter_mut().zip(Interface::BOTH) {
            p.ch = channel_map(&mac, iface, &params.channel);
        }
        if tick % sample_ticks == 0 {
            features = measure(&mac, &params.channel, cap_window);
        }
        if tick % explore_ticks == 0 {
            ex_features = features;
        }

        // Receiver: arrivals, in-order release, ACKs.
        for pi in 0..2 {
            while paths[pi].fwd.front().is_some_and(|w| w.at <= now) {
                let w = paths[pi].fwd.pop_front().unwrap();
                if w.seq >= delivered_upto {
                    slots[(w.seq - delivered_upto) as usize].arrived = true;
                }
                while slots.front().is_some_and(|s| s.arrived) {
                    let s = slots.pop_front().unwrap();
                    delivered_upto += 1;
                    let ad = now - s.first_tx;
                    report.ad_samples.push(ad);
                    win_ad.0 += ad;
                    win_ad.1 += 1;
                    ex_ad.0 += ad;
                    ex_ad.1 += 1;
                    win_bytes += block;
                    ex_bytes += block;
                    cum_delivered_bytes += block;
                }
                let p = &mut paths[pi];
                let at = (now + p.ch.rtt_base / 2.0).max(p.back.back().map_or(0.0, |b| b.at));
                p.back.push_back(Wire {
                    seq: w.seq,
                    sent: w.sent,
                    at,
                    data_ack: delivered_upto,
                });
            }
        }

        // Sender: ACKs and congestion control.
        for p in paths.iter_mut() {
            while p.back.front().is_some_and(|w| w.at <= now) {
                let w = p.back.pop_front().unwrap();
                data_acked = data_acked.max(w.data_ack);
                let Some(pos) = p.in_flight.iter().position(|s| s.seq == w.seq && s.sent == w.sent) else {
                    continue;
                };
                p.in_flight.remove(pos);
                p.srtt = 0.875 * p.srtt + 0.125 * (now - w.sent);
                if let Some(target) = p.drain_to {
                    p.cwnd = target.max(p.in_flight.len() as f64);
                    if p.cwnd <= target {
                        p.drain_to = None;
                    }
                } else {
                    p.cwnd += if p.cwnd < p.ssthresh { 1.0 } else { 1.0 / p.cwnd };
                    p.cwnd = p.cwnd.min(cap_window);
                }
            }
        }

        // Retransmission timeouts: packets unacknowledged past the RTO move to the other path.
        for pi in 0..2 {
            let rto = (4.0 * paths[pi].srtt).max(params.min_rto);
            let expired = paths[pi].in_flight.front().is_some_and(|s| now - s.sent >= rto);
            if !expired {
                continue;
            }
            let target = if paths[1 - pi].enabled { 1 - pi } else { pi };
            let mut stranded = Vec::new();
            paths[pi].in_flight.retain(|s| {
                if now - s.sent >= rto {
                    if s.seq >= data_acked {
                        stranded.push(s.seq);
                    }
                    false
                } else {
                    true
                }
            });
            paths[target].reinject.extend(stranded);
            let p = &mut paths[pi];
            let target = (p.drain_to.unwrap_or(p.cwnd) / 2.0).max(1.0);
            p.ssthresh = target.max(2.0);
            p.cwnd = target.max(p.in_flight.len() as f64);
            p.drain_to = (p.cwnd > target).then_some(target);
        }

        // Scheduling: reinjections first, then new blocks on the selector's path.
        let exploring = online && selector.is_explore_window(t);
        loop {
            for p in paths.iter_mut() {
                while p.space() > 0 {
                    let Some(seq) = p.reinject.pop_front() else { break };
                    if seq < data_acked {
                        continue;
                    }
                    let s = Sent { seq, sent: now };
                    p.in_flight.push_back(s);
                    p.link.push_back(s);
                }
            }
            if next_seq >= data_acked + w_blocks {
                break;
            }
            let space = [paths[0].space() as f64, paths[1].space() as f64];
            if space[0] <= 0.0 && space[1] <= 0.0 {
                break;
            }
            let d: Decision = selector.decide(&Observation {
                t,
                features,
                srtt: [paths[0].srtt, paths[1].srtt],
                cwnd_space: space,
            });
            if !exploring && d.reason != Reason::Explore {
                win_favor[d.favored().index()] += 1;
            }
            ex_favor[d.favored().index()] += 1;
            report.decision_count += 1;
            if last_logged != Some((d.priority, d.reason)) {
                report.decisions.push(d);
                last_logged = Some((d.priority, d.reason));
            }
            let p = &mut paths[d.priority.index()];
            if p.space() == 0 {
                break;
            }
            let s = Sent { seq: next_seq, sent: now };
            p.in_flight.push_back(s);
            p.link.push_back(s);
            slots.push_back(Slot {
                first_tx: now,
                arrived: false,
            });
            next_seq += 1;
        }

        // Links: serialise at capacity, drop with the channel's loss probability.
        for p in paths.iter_mut() {
            let bytes_per_tick = p.ch.capacity * 125.0;
            cum_capacity_bytes += bytes_per_tick;
            p.credit += bytes_per_tick;
            while p.credit >= block {
                let Some(s) = p.link.pop_front() else { break };
                p.credit -= block;
                if rng.random::<f64>() < p.ch.loss_p {
                    continue;
                }
                let at = (now + p.ch.rtt_base / 2.0).max(p.fwd.back().map_or(0.0, |w| w.at));
                p.fwd.push_back(Wire {
                    seq: s.seq,
                    sent: s.sent,
                    at,
                    data_ack: 0,
                });
            }
            if p.link.is_empty() {
                p.credit = p.credit.min(block);
            }
        }

        for (acc, p) in win_inflight.iter_mut().zip(&paths) {
            *acc += p.in_flight.len() as f64 * block;
        }

        if params.check_invariants {
            checks.ticks += 1;
            for p in &paths {
                if p.in_flight.len() as f64 > p.cwnd.floor().max(1.0) {
                    checks.cwnd_violations += 1;
                }
            }
            if cum_delivered_bytes > cum_capacity_bytes + 1e-6 {
                checks.capacity_violations += 1;
            }
            // Every distinct block sent but not yet delivered must be buffered at the
            // receiver, in flight on a path, or queued for reinjection.
            let span = (next_seq - delivered_upto) as usize;
            in_range.clear();
            in_range.extend(slots.iter().map(|s| s.arrived));
            let mut mark = |seq: u64| {
                if seq >= delivered_upto && seq < next_seq {
                    in_range[(seq - delivered_upto) as usize] = true;
                }
            };
            for p in &paths {
                p.in_flight.iter().for_each(|s| mark(s.seq));
                p.reinject.iter().for_each(|&seq| mark(seq));
            }
            if in_range.len() != span || in_range.iter().any(|m| !m) {
                checks.conservation_violations += 1;
            }
        }

        let end = tick + 1;
        if end % metric_ticks == 0 {
            let secs = metric_ticks as f64 / 1000.0;
            report.ag_series.push(win_bytes * 8.0 / secs / 1e6);
            report.accumulation.push([
                win_inflight[0] / metric_ticks as f64,
                win_inflight[1] / metric_ticks as f64,
            ]);
            report.ad_series.push(window_delay(win_ad, &slots, end as f64));
            let total = win_favor[0] + win_favor[1];
            report
                .lte_share
                .push((total > 0).then(|| win_favor[1] as f64 / total as f64));
            win_bytes = 0.0;
            win_ad = (0.0, 0);
            win_inflight = [0.0; 2];
            win_favor = [0; 2];
        }
        if end % explore_ticks == 0 {
            if online && ex_favor[0] + ex_favor[1] > 0 {
                let priority = if ex_favor[1] > ex_favor[0] { Priority::LF } else { Priority::WF };
                let secs = explore_ticks as f64 / 1000.0;
                if let Some(ad) = window_delay(ex_ad, &slots, end as f64) {
                    selector.observe_outcome(WindowOutcome {
                        t: (end - explore_ticks) as f64 / 1000.0,
                        priority,
                        features: ex_features,
                        ag: ex_bytes * 8.0 / secs / 1e6,
                        ad,
                    });
                }
                selector.maybe_refresh(end as f64 / 1000.0);
            }
            ex_bytes = 0.0;
            ex_ad = (0.0, 0);
            ex_favor = [0; 2];
        }
    }
    report.checks = checks;
    Ok(report)
}

/// Mean delay of blocks released in a window; during a stall, the age of the oldest
/// undelivered block at the window's end.
fn window_delay(acc: (f64, usize), slots: &VecDeque<Slot>, now: f64) -> Option<f64> {
    if acc.1 > 0 {
        Some(acc.0 / acc.1 as f64)
    } else {
        slots.front().map(|s| (now - s.first_tx).max(1.0))
    }
}
