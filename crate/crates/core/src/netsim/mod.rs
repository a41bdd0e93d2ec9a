//! Deterministic 1 ms tick simulator of one connection striped over a WiFi and an LTE subflow.

mod channel;
mod report;
mod sim;

use std::fmt;

use thiserror::Error;

pub use self::channel::{channel_map, probe, ChannelConfig, InterfaceChannel, PathChannel, ProbeReport};
pub use self::report::{report_percentiles, Metric, MetricsReport, SimChecks};
pub use self::sim::{measure, run, run_policy, SimParams};

use crate::traceio::{Priority, TraceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interface {
    Wifi,
    Lte,
}

impl Interface {
    pub const BOTH: [Interface; 2] = [Interface::Wifi, Interface::Lte];

    pub fn index(self) -> usize {
        match self {
            Interface::Wifi => 0,
            Interface::Lte => 1,
        }
    }

    pub fn of(p: Priority) -> Interface {
        match p {
            Priority::WF => Interface::Wifi,
            Priority::LF => Interface::Lte,
        }
    }
}

impl fmt::Display for Interface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interface::Wifi => "wifi",
            Interface::Lte => "lte",
        })
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] TraceError),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("empty series")]
    EmptySeries,
}
