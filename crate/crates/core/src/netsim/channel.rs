//! Mapping from MAC-layer radio state to what a subflow can achieve.
//!
//! Capacity follows a Shannon-shaped curve in SINR normalised at `sinr_ref`; random loss is a
//! logistic cliff in RSSI; the base RTT inflates with loss to account for link-layer retries.

use serde::{Deserialize, Serialize};

use super::Interface;
use crate::traceio::MacState;

/// Per-interface channel constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterfaceChannel {
    /// Mbps reached at or above `sinr_ref`.
    pub cap_max: f64,
    /// dB.
    pub sinr_ref: f64,
    /// dBm at which loss reaches 50%.
    pub rssi_cliff: f64,
    /// dB; width of the loss cliff.
    pub slope: f64,
    /// ms.
    pub rtt_floor: f64,
    /// RTT inflation per unit loss.
    pub rtt_loss_factor: f64,
    pub enabled: bool,
}

impl InterfaceChannel {
    pub fn wifi() -> InterfaceChannel {
        InterfaceChannel {
            cap_max: 40.0,
            sinr_ref: 25.0,
            rssi_cliff: -75.0,
            slope: 3.0,
            rtt_floor: 20.0,
            rtt_loss_factor: 1.0,
            enabled: true,
        }
    }

    pub fn lte() -> InterfaceChannel {
        InterfaceChannel {
            cap_max: 30.0,
            sinr_ref: 15.0,
            rssi_cliff: -95.0,
            slope: 3.0,
            rtt_floor: 45.0,
            rtt_loss_factor: 1.0,
            enabled: true,
        }
    }
}

impl Default for InterfaceChannel {
    fn default() -> Self {
        InterfaceChannel::wifi()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(default = "InterfaceChannel::wifi")]
    pub wifi: InterfaceChannel,
    #[serde(default = "InterfaceChannel::lte")]
    pub lte: InterfaceChannel,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            wifi: InterfaceChannel::wifi(),
            lte: InterfaceChannel::lte(),
        }
    }
}

impl ChannelConfig {
    pub fn get(&self, iface: Interface) -> &InterfaceChannel {
        match iface {
            Interface::Wifi => &self.wifi,
            Interface::Lte => &self.lte,
        }
    }

    pub fn get_mut(&mut self, iface: Interface) -> &mut InterfaceChannel {
        match iface {
            Interface::Wifi => &mut self.wifi,
            Interface::Lte => &mut self.lte,
        }
    }
}

/// Instantaneous path characteristics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathChannel {
    /// Mbps.
    pub capacity: f64,
    /// ms.
    pub rtt_base: f64,
    /// Per-packet loss probability.
    pub loss_p: f64,
}

fn spectral_efficiency(sinr_db: f64) -> f64 {
    (1.0 + 10f64.powf(sinr_db / 10.0)).log2()
}

pub fn channel_map(mac: &MacState, iface: Interface, cfg: &ChannelConfig) -> PathChannel {
    let c = cfg.get(iface);
    let (rssi, sinr) = match iface {
        Interface::Wifi => (mac.rssi_wifi, mac.sinr_wifi),
        Interface::Lte => (mac.rssi_lte, mac.sinr_lte),
    };
    if !c.enabled {
        return PathChannel {
            capacity: 0.0,
            rtt_base: c.rtt_floor,
            loss_p: 1.0,
        };
    }
    let capacity = c.cap_max * (spectral_efficiency(sinr) / spectral_efficiency(c.sinr_ref)).min(1.0);
    let loss_p = 1.0 / (1.0 + ((rssi - c.rssi_cliff) / c.slope).exp());
    PathChannel {
        capacity,
        rtt_base: c.rtt_floor * (1.0 + c.rtt_loss_factor * loss_p),
        loss_p,
    }
}

/// What the measurement module reports for a path after probing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeReport {
    /// ms.
    pub rtt: f64,
    /// packets.
    pub cwnd: f64,
    pub plr: f64,
    /// Mbps.
    pub pdr: f64,
}

/// Probe-based TCP-layer estimates for one path. `window` caps the congestion window
/// estimate (packets).
pub fn probe(channel: &PathChannel, window: f64) -> ProbeReport {
    let sustainable = if channel.loss_p > 0.0 {
        1.22 / channel.loss_p.sqrt()
    } else {
        f64::INFINITY
    };
    ProbeReport {
        rtt: channel.rtt_base,
        cwnd: sustainable.min(window).max(1.0),
        plr: channel.loss_p,
        pdr: channel.capacity * (1.0 - channel.loss_p),
    }
}
