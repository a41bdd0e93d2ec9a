//! Raw measurement schema, trace CSV files and scripted mobility scenarios.
//!
//! A trace is a time-ordered list of [`AttributeSample`]s: the MAC-layer radio attributes of
//! both interfaces, the TCP-layer state of both subflows, the path priority in force and the
//! application-level goodput/delay observed under it.

mod csv;
mod scenario;
mod synth;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use self::csv::{parse_trace, parse_trace_str, write_trace, TRACE_COLUMNS};
pub use self::scenario::{MacAttr, MacState, Scenario, Segment, Trajectory};
pub use self::synth::{synthesize_trace, synthesize_trace_with};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}, column `{column}`: {message}")]
    Cell {
        line: usize,
        column: String,
        message: String,
    },
    #[error("header: {0}")]
    Header(String),
    #[error("csv: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("sampling interval must be positive, got {0}")]
    Interval(f64),
}

/// Which path the scheduler fills first: WiFi First or LTE First.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Priority {
    WF,
    LF,
}

impl Priority {
    pub fn opposite(self) -> Priority {
        match self {
            Priority::WF => Priority::LF,
            Priority::LF => Priority::WF,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Priority::WF => "WF",
            Priority::LF => "LF",
        }
    }

    /// Index used for two-element per-path arrays: WiFi = 0, LTE = 1.
    pub fn index(self) -> usize {
        match self {
            Priority::WF => 0,
            Priority::LF => 1,
        }
    }

    pub fn from_index(i: usize) -> Priority {
        if i == 0 {
            Priority::WF
        } else {
            Priority::LF
        }
    }
}

impl fmt::Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Priority {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "WF" => Ok(Priority::WF),
            "LF" => Ok(Priority::LF),
            other => Err(format!("expected WF or LF, got `{other}`")),
        }
    }
}

/// One timestamped row of cross-layer attributes, the priority in force and the
/// application-level outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSample {
    /// Seconds since trace start.
    pub t: f64,
    /// dBm.
    pub rssi_lte: f64,
    pub rssi_wifi: f64,
    /// dB.
    pub sinr_lte: f64,
    pub sinr_wifi: f64,
    /// dBm.
    pub rsrp_lte: f64,
    /// dB.
    pub rsrq_lte: f64,
    /// WiFi PHY transmit / receive rate, Mbps.
    pub td_wifi: f64,
    pub rd_wifi: f64,
    /// Smoothed RTT, ms.
    pub rtt_lte: f64,
    pub rtt_wifi: f64,
    /// Congestion window, packets.
    pub cwnd_lte: f64,
    pub cwnd_wifi: f64,
    /// Packet loss rate as a fraction (serialized as a percentage).
    pub plr_lte: f64,
    pub plr_wifi: f64,
    /// Packet delivery rate, Mbps.
    pub pdr_lte: f64,
    pub pdr_wifi: f64,
    pub prio: Priority,
    /// Radio tag carried by raw priority cells such as `LF(4G)`; not used for learning.
    pub radio: Option<String>,
    /// Application goodput, Mbps.
    pub ag: f64,
    /// Application delay, ms.
    pub ad: f64,
    pub label: Option<Priority>,
}

impl AttributeSample {
    /// A sample with every attribute at a neutral, valid value.
    pub fn blank(t: f64, prio: Priority) -> AttributeSample {
        AttributeSample {
            t,
            rssi_lte: -80.0,
            rssi_wifi: -50.0,
            sinr_lte: 15.0,
            sinr_wifi: 20.0,
            rsrp_lte: -90.0,
            rsrq_lte: -10.0,
            td_wifi: 50.0,
            rd_wifi: 50.0,
            rtt_lte: 50.0,
            rtt_wifi: 20.0,
            cwnd_lte: 10.0,
            cwnd_wifi: 10.0,
            plr_lte: 0.0,
            plr_wifi: 0.0,
            pdr_lte: 10.0,
            pdr_wifi: 10.0,
            prio,
            radio: None,
            ag: 10.0,
            ad: 40.0,
            label: None,
        }
    }

    /// Checks the per-row invariants; returns the offending column and reason.
    pub fn check(&self) -> Result<(), (&'static str, String)> {
        let fields: [(&'static str, f64); 19] = [
            ("t", self.t),
            ("rssi_lte", self.rssi_lte),
            ("rssi_wifi", self.rssi_wifi),
            ("sinr_lte", self.sinr_lte),
            ("sinr_wifi", self.sinr_wifi),
            ("rsrp_lte", self.rsrp_lte),
            ("rsrq_lte", self.rsrq_lte),
            ("td_wifi", self.td_wifi),
            ("rd_wifi", self.rd_wifi),
            ("rtt_lte", self.rtt_lte),
            ("rtt_wifi", self.rtt_wifi),
            ("cwnd_lte", self.cwnd_lte),
            ("cwnd_wifi", self.cwnd_wifi),
            ("plr_lte", self.plr_lte),
            ("plr_wifi", self.plr_wifi),
            ("pdr_lte", self.pdr_lte),
            ("pdr_wifi", self.pdr_wifi),
            ("ag", self.ag),
            ("ad", self.ad),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err((name, format!("{v} is not finite")));
            }
        }
        let rules: [(&'static str, f64, fn(f64) -> bool, &str); 16] = [
            ("t", self.t, |v| v >= 0.0, "must be >= 0"),
            ("rssi_lte", self.rssi_lte, |v| v <= 0.0, "must be <= 0 dBm"),
            ("rssi_wifi", self.rssi_wifi, |v| v <= 0.0, "must be <= 0 dBm"),
            ("rsrp_lte", self.rsrp_lte, |v| v <= 0.0, "must be <= 0 dBm"),
            ("td_wifi", self.td_wifi, |v| v >= 0.0, "must be >= 0"),
            ("rd_wifi", self.rd_wifi, |v| v >= 0.0, "must be >= 0"),
            ("rtt_lte", self.rtt_lte, |v| v > 0.0, "must be > 0"),
            ("rtt_wifi", self.rtt_wifi, |v| v > 0.0, "must be > 0"),
            ("cwnd_lte", self.cwnd_lte, |v| v >= 1.0, "must be >= 1"),
            ("cwnd_wifi", self.cwnd_wifi, |v| v >= 1.0, "must be >= 1"),
            ("plr_lte", self.plr_lte, unit_interval, "must lie in [0, 1]"),
            ("plr_wifi", self.plr_wifi, unit_interval, "must lie in [0, 1]"),
            ("pdr_lte", self.pdr_lte, |v| v >= 0.0, "must be >= 0"),
            ("pdr_wifi", self.pdr_wifi, |v| v >= 0.0, "must be >= 0"),
            ("ag", self.ag, |v| v >= 0.0, "must be >= 0"),
            ("ad", self.ad, |v| v > 0.0, "must be > 0"),
        ];
        for (name, v, ok, why) in rules {
            if !ok(v) {
                return Err((name, format!("{v} {why}")));
            }
        }
        Ok(())
    }
}

fn unit_interval(v: f64) -> bool {
    (0.0..=1.0).contains(&v)
}
