//! Scripted mobility scenarios: piecewise trajectories of the MAC-layer attributes.
//!
//! Scenario files are TOML:
//!
//! ```toml
//! name = "walkaway"
//! duration = 60.0
//! seed = 7
//!
//! [[segment]]
//! start = 0.0
//! end = 60.0
//! rssi_wifi = "ramp -30 -85"
//! sinr_wifi = "noisy 25 1.5"
//! rssi_lte = -70
//! ```
//!
//! An attribute a segment does not mention continues at the value the previous segment
//! ended on (or its default in the first segment).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Deserialize;

use super::TraceError;
use crate::rng::counter_normal;

/// The MAC-layer attributes a scenario drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MacAttr {
    RssiLte,
    RssiWifi,
    SinrLte,
    SinrWifi,
    RsrpLte,
    RsrqLte,
    TdWifi,
    RdWifi,
}

impl MacAttr {
    pub const ALL: [MacAttr; 8] = [
        MacAttr::RssiLte,
        MacAttr::RssiWifi,
        MacAttr::SinrLte,
        MacAttr::SinrWifi,
        MacAttr::RsrpLte,
        MacAttr::RsrqLte,
        MacAttr::TdWifi,
        MacAttr::RdWifi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MacAttr::RssiLte => "rssi_lte",
            MacAttr::RssiWifi => "rssi_wifi",
            MacAttr::SinrLte => "sinr_lte",
            MacAttr::SinrWifi => "sinr_wifi",
            MacAttr::RsrpLte => "rsrp_lte",
            MacAttr::RsrqLte => "rsrq_lte",
            MacAttr::TdWifi => "td_wifi",
            MacAttr::RdWifi => "rd_wifi",
        }
    }

    /// Value used before any segment sets the attribute.
    pub fn default_value(self) -> f64 {
        match self {
            MacAttr::RssiLte => -60.0,
            MacAttr::RssiWifi => -45.0,
            MacAttr::SinrLte => 15.0,
            MacAttr::SinrWifi => 25.0,
            MacAttr::RsrpLte => -95.0,
            MacAttr::RsrqLte => -10.0,
            MacAttr::TdWifi => 150.0,
            MacAttr::RdWifi => 150.0,
        }
    }

    /// Physically meaningful range; generated values are clamped into it.
    pub fn range(self) -> (f64, f64) {
        match self {
            MacAttr::RssiLte | MacAttr::RssiWifi => (-120.0, 0.0),
            MacAttr::SinrLte | MacAttr::SinrWifi => (-20.0, 40.0),
            MacAttr::RsrpLte => (-140.0, -44.0),
            MacAttr::RsrqLte => (-30.0, 0.0),
            MacAttr::TdWifi | MacAttr::RdWifi => (0.0, 1000.0),
        }
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

impl FromStr for MacAttr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MacAttr::ALL
            .iter()
            .copied()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown attribute `{s}`"))
    }
}

/// MAC-layer snapshot of both interfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacState {
    pub rssi_lte: f64,
    pub rssi_wifi: f64,
    pub sinr_lte: f64,
    pub sinr_wifi: f64,
    pub rsrp_lte: f64,
    pub rsrq_lte: f64,
    pub td_wifi: f64,
    pub rd_wifi: f64,
}

impl MacState {
    pub fn get(&self, a: MacAttr) -> f64 {
        match a {
            MacAttr::RssiLte => self.rssi_lte,
            MacAttr::RssiWifi => self.rssi_wifi,
            MacAttr::SinrLte => self.sinr_lte,
            MacAttr::SinrWifi => self.sinr_wifi,
            MacAttr::RsrpLte => self.rsrp_lte,
            MacAttr::RsrqLte => self.rsrq_lte,
            MacAttr::TdWifi => self.td_wifi,
            MacAttr::RdWifi => self.rd_wifi,
        }
    }

    pub fn set(&mut self, a: MacAttr, v: f64) {
        let slot = match a {
            MacAttr::RssiLte => &mut self.rssi_lte,
            MacAttr::RssiWifi => &mut self.rssi_wifi,
            MacAttr::SinrLte => &mut self.sinr_lte,
            MacAttr::SinrWifi => &mut self.sinr_wifi,
            MacAttr::RsrpLte => &mut self.rsrp_lte,
            MacAttr::RsrqLte => &mut self.rsrq_lte,
            MacAttr::TdWifi => &mut self.td_wifi,
            MacAttr::RdWifi => &mut self.rd_wifi,
        };
        *slot = v;
    }
}

impl Default for MacState {
    fn default() -> Self {
        let mut m = MacState {
            rssi_lte: 0.0,
            rssi_wifi: 0.0,
            sinr_lte: 0.0,
            sinr_wifi: 0.0,
            rsrp_lte: 0.0,
            rsrq_lte: 0.0,
            td_wifi: 0.0,
            rd_wifi: 0.0,
        };
        for a in MacAttr::ALL {
            m.set(a, a.default_value());
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trajectory {
    Constant(f64),
    /// Linear from the first value at segment start to the second at segment end.
    LinearRamp(f64, f64),
    /// Additive Gaussian noise with the given standard deviation around a level.
    Noisy(f64, f64),
}

impl Trajectory {
    fn end_value(self) -> f64 {
        match self {
            Trajectory::Constant(v) | Trajectory::Noisy(v, _) => v,
            Trajectory::LinearRamp(_, v1) => v1,
        }
    }
}

impl fmt::Display for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trajectory::Constant(v) => write!(f, "const {v}"),
            Trajectory::LinearRamp(a, b) => write!(f, "ramp {a} {b}"),
            Trajectory::Noisy(v, s) => write!(f, "noisy {v} {s}"),
        }
    }
}

impl FromStr for Trajectory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split_whitespace().collect();
        let nums: Result<Vec<f64>, _> = parts.iter().skip(1).map(|p| p.parse::<f64>()).collect();
        let nums = nums.map_err(|_| format!("bad number in `{s}`"))?;
        if nums.iter().any(|v| !v.is_finite()) {
            return Err(format!("non-finite value in `{s}`"));
        }
        match (parts.first().copied(), nums.as_slice()) {
            (Some("const"), [v]) => Ok(Trajectory::Constant(*v)),
            (Some("ramp"), [a, b]) => Ok(Trajectory::LinearRamp(*a, *b)),
            (Some("noisy"), [v, sigma]) if *sigma >= 0.0 => Ok(Trajectory::Noisy(*v, *sigma)),
            _ => Err(format!("expected `const v`, `ramp v0 v1` or `noisy v sigma`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub trajectories: BTreeMap<MacAttr, Trajectory>,
}

impl Segment {
    pub fn new(start: f64, end: f64) -> Segment {
        Segment {
            start,
            end,
            trajectories: BTreeMap::new(),
        }
    }

    pub fn with(mut self, attr: MacAttr, traj: Trajectory) -> Segment {
        self.trajectories.insert(attr, traj);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Seconds.
    pub duration: f64,
    pub segments: Vec<Segment>,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    duration: f64,
    seed: u64,
    #[serde(default)]
    segment: Vec<RawSegment>,
}

#[derive(Deserialize)]
struct RawSegment {
    start: f64,
    end: f64,
    #[serde(flatten)]
    attrs: BTreeMap<String, toml::Value>,
}

impl Scenario {
    pub fn new(name: &str, duration: f64, seed: u64, segments: Vec<Segment>) -> Scenario {
        Scenario {
            name: name.to_string(),
            duration,
            segments,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        Scenario {
            seed,
            ..self.clone()
        }
    }

    /// Segments must tile `[0, duration]` in order without gaps or overlaps.
    pub fn validate(&self) -> Result<(), TraceError> {
        let err = |m: String| Err(TraceError::Scenario(format!("{}: {m}", self.name)));
        if !self.duration.is_finite() || self.duration < 0.0 {
            return err(format!("bad duration {}", self.duration));
        }
        if self.duration == 0.0 && self.segments.is_empty() {
            return Ok(());
        }
        let Some(first) = self.segments.first() else {
            return err("no segments".into());
        };
        if first.start != 0.0 {
            return err(format!("first segment starts at {}, not 0", first.start));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.end > seg.start) {
                return err(format!("segment {i} is empty or reversed"));
            }
            if let Some(next) = self.segments.get(i + 1) {
                if next.start != seg.end {
                    return err(format!(
                        "gap or overlap between segment {i} (ends {}) and {} (starts {})",
                        seg.end,
                        i + 1,
                        next.start
                    ));
                }
            }
        }
        let last = self.segments.last().expect("non-empty");
        if last.end != self.duration {
            return err(format!(
                "segments end at {}, duration is {}",
                last.end, self.duration
            ));
        }
        Ok(())
    }

    fn segment_index(&self, t: f64) -> usize {
        self.segments
            .iter()
            .rposition(|s| s.start <= t)
            .unwrap_or(0)
    }

    /// Value an attribute holds when entering segment `idx`.
    fn carried(&self, attr: MacAttr, idx: usize) -> f64 {
        self.segments[..idx]
            .iter()
            .rev()
            .find_map(|s| s.trajectories.get(&attr).map(|t| t.end_value()))
            .unwrap_or_else(|| attr.default_value())
    }

    /// MAC snapshot at time `t`; a pure function of the scenario and `t`.
    pub fn mac_at(&self, t: f64) -> MacState {
        let mut mac = MacState::default();
        if self.segments.is_empty() {
            return mac;
        }
        let idx = self.segment_index(t);
        let seg = &self.segments[idx];
        let key = (t.max(0.0) * 1e6).round() as u64;
        for attr in MacAttr::ALL {
            let v = match seg.trajectories.get(&attr) {
                Some(Trajectory::Constant(v)) => *v,
                Some(Trajectory::LinearRamp(a, b)) => {
                    let frac = ((t - seg.start) / (seg.end - seg.start)).clamp(0.0, 1.0);
                    a + (b - a) * frac
                }
                Some(Trajectory::Noisy(v, sigma)) => {
                    v + sigma * counter_normal(self.seed, attr.stream(), key)
                }
                None => self.carried(attr, idx),
            };
            let (lo, hi) = attr.range();
            mac.set(attr, v.clamp(lo, hi));
        }
        mac
    }

    pub fn parse(text: &str) -> Result<Scenario, TraceError> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| TraceError::Scenario(e.to_string()))?;
        let mut segments = Vec::with_capacity(raw.segment.len());
        for (i, rs) in raw.segment.into_iter().enumerate() {
            let mut seg = Segment::new(rs.start, rs.end);
            for (key, value) in rs.attrs {
                let attr: MacAttr = key
                    .parse()
                    .map_err(|m| TraceError::Scenario(format!("segment {i}: {m}")))?;
                let traj = match value {
                    toml::Value::Float(v) => Trajectory::Constant(v),
                    toml::Value::Integer(v) => Trajectory::Constant(v as f64),
                    toml::Value::String(s) => s
                        .parse()
                        .map_err(|m| TraceError::Scenario(format!("segment {i}, {key}: {m}")))?,
                    other => {
                        return Err(TraceError::Scenario(format!(
                            "segment {i}, {key}: unsupported value {other}"
                        )))
                    }
                };
                seg.trajectories.insert(attr, traj);
            }
            segments.push(seg);
        }
        let sc = Scenario {
            name: raw.name,
            duration: raw.duration,
            segments,
            seed: raw.seed,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        let mut out = format!(
            "name = {:?}\nduration = {:?}\nseed = {}\n",
            self.name, self.duration, self.seed
        );
        for seg in &self.segments {
            out.push_str(&format!(
                "\n[[segment]]\nstart = {:?}\nend = {:?}\n",
                seg.start, seg.end
            ));
            for (attr, traj) in &seg.trajectories {
                out.push_str(&format!("{} = \"{traj}\"\n", attr.name()));
            }
        }
        out
    }
}
