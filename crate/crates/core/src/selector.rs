//! Runtime path-priority policies: SmartPS (learned model with exploration, feature memory
//! and periodic retraining) and the MinRTT, round-robin and static baselines.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use log::warn;

use crate::dataset::{merge_observations, Features, LabeledRecord, Outcome};
use crate::rng::counter_uniform;
use crate::traceio::Priority;
use crate::treelearn::{train_serving_model, Model, ServingParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    SmartPs,
    MinRtt,
    RoundRobin,
    StaticWf,
    StaticLf,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::SmartPs,
        Policy::MinRtt,
        Policy::RoundRobin,
        Policy::StaticWf,
        Policy::StaticLf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::SmartPs => "smartps",
            Policy::MinRtt => "minrtt",
            Policy::RoundRobin => "rr",
            Policy::StaticWf => "wf",
            Policy::StaticLf => "lf",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Policy::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown selector `{s}` (expected smartps, minrtt, rr, wf or lf)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    Model,
    Explore,
    Fallback,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Model => "MODEL",
            Reason::Explore => "EXPLORE",
            Reason::Fallback => "FALLBACK",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub t: f64,
    pub priority: Priority,
    pub reason: Reason,
}

impl Decision {
    /// The path the policy wanted: a fallback decision favoured the other path.
    pub fn favored(&self) -> Priority {
        match self.reason {
            Reason::Fallback => self.priority.opposite(),
            _ => self.priority,
        }
    }
}

/// What a policy sees when a block is ready to send.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Seconds.
    pub t: f64,
    pub features: Features,
    /// Smoothed RTT per path, ms, indexed by `Priority::index`.
    pub srtt: [f64; 2],
    /// Free congestion-window slots per path, packets.
    pub cwnd_space: [f64; 2],
}

/// Application outcome of one measurement window run under a single priority.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowOutcome {
    pub t: f64,
    pub priority: Priority,
    pub features: Features,
    pub ag: f64,
    pub ad: f64,
}

/// An immutable serving model tagged with its generation.
#[derive(Debug)]
pub struct ModelSnapshot {
    pub version: u64,
    pub model: Option<Model>,
}

/// Shared handle to the serving model. Readers clone the current snapshot; a refresh swaps in
/// a new snapshot in one step, so a reader sees either the old or the new model in full.
#[derive(Debug, Clone)]
pub struct ModelHandle {
    inner: Arc<RwLock<Arc<ModelSnapshot>>>,
}

impl ModelHandle {
    pub fn new(model: Option<Model>) -> ModelHandle {
        ModelHandle {
            inner: Arc::new(RwLock::new(Arc::new(ModelSnapshot { version: 0, model }))),
        }
    }

    pub fn snapshot(&self) -> Arc<ModelSnapshot> {
        Arc::clone(&self.inner.read().unwrap_or_else(|e| e.into_inner()))
    }

    /// Installs `model` and returns its version.
    pub fn swap(&self, model: Model) -> u64 {
        let mut guard = self.inner.write().unwrap_or_else(|e| e.into_inner());
        let version = guard.version + 1;
        *guard = Arc::new(ModelSnapshot {
            version,
            model: Some(model),
        });
        version
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    pub policy: Policy,
    /// Probability that a SmartPS exploration window inverts the model's choice.
    pub exploration_eps: f64,
    /// Seconds.
    pub explore_window: f64,
    pub memory_capacity: usize,
    /// Seconds.
    pub refresh_interval: f64,
    pub min_train: usize,
    pub serving: ServingParams,
    pub seed: u64,
}

impl SelectorConfig {
    pub fn new(policy: Policy, seed: u64) -> SelectorConfig {
        SelectorConfig {
            policy,
            exploration_eps: 0.05,
            explore_window: 1.0,
            memory_capacity: 100_000,
            refresh_interval: 30.0,
            min_train: 500,
            serving: ServingParams::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefreshOutcome {
    NotDue,
    TooFewRecords,
    Refreshed { version: u64 },
    Failed,
}

const EXPLORE_STREAM: u64 = 0x5E1E_C701;

#[derive(Debug)]
pub struct SelectorState {
    pub config: SelectorConfig,
    model: ModelHandle,
    memory: VecDeque<LabeledRecord>,
    last_refresh: f64,
    rr_cursor: Priority,
    decisions: u64,
    cache: Option<(u64, Features, Priority)>,
    pending: Option<WindowOutcome>,
}

impl SelectorState {
    pub fn new(config: SelectorConfig, model: Option<Model>) -> SelectorState {
        SelectorState {
            config,
            model: ModelHandle::new(model),
            memory: VecDeque::new(),
            last_refresh: 0.0,
            rr_cursor: Priority::WF,
            decisions: 0,
            cache: None,
            pending: None,
        }
    }

    pub fn policy(&self) -> Policy {
        self.config.policy
    }

    pub fn model_handle(&self) -> ModelHandle {
        self.model.clone()
    }

    pub fn memory(&self) -> &VecDeque<LabeledRecord> {
        &self.memory
    }

    pub fn decisions_made(&self) -> u64 {
        self.decisions
    }

    /// Whether the exploration window containing `t` inverts SmartPS's choice.
    pub fn is_explore_window(&self, t: f64) -> bool {
        if self.config.exploration_eps <= 0.0 {
            return false;
        }
        let w = (t / self.config.explore_window).floor().max(0.0) as u64;
        counter_uniform(self.config.seed, EXPLORE_STREAM, w) < self.config.exploration_eps
    }

    fn model_choice(&mut self, features: &Features) -> Priority {
        let snap = self.model.snapshot();
        if let Some((v, f, p)) = &self.cache {
            if *v == snap.version && f == features {
                return *p;
            }
        }
        // Without a model SmartPS behaves like the default WiFi-first scheduler.
        let p = snap.model.as_ref().map_or(Priority::WF, |m| m.classify(features));
        self.cache = Some((snap.version, *features, p));
        p
    }

    pub fn decide(&mut self, obs: &Observation) -> Decision {
        self.decisions += 1;
        let has_space = |p: Priority| obs.cwnd_space[p.index()] > 0.0;
        let (wanted, reason) = match self.config.policy {
            Policy::SmartPs => {
                let p = self.model_choice(&obs.features);
                if self.is_explore_window(obs.t) {
                    (p.opposite(), Reason::Explore)
                } else {
                    (p, Reason::Model)
                }
            }
            Policy::MinRtt => {
                let faster = if obs.srtt[1] < obs.srtt[0] { Priority::LF } else { Priority::WF };
                (faster, Reason::Model)
            }
            Policy::RoundRobin => (self.rr_cursor, Reason::Model),
            Policy::StaticWf => (Priority::WF, Reason::Model),
            Policy::StaticLf => (Priority::LF, Reason::Model),
        };
        let (priority, reason) = if !has_space(wanted) && has_space(wanted.opposite()) {
            (wanted.opposite(), Reason::Fallback)
        } else {
            (wanted, reason)
        };
        if self.config.policy == Policy::RoundRobin {
            self.rr_cursor = priority.opposite();
        }
        Decision {
            t: obs.t,
            priority,
            reason,
        }
    }

    /// Pairs consecutive windows run under opposite priorities into a labeled record.
    /// Returns the record appended to the feature memory, if any.
    pub fn observe_outcome(&mut self, w: WindowOutcome) -> Option<LabeledRecord> {
        match self.pending.take() {
            Some(prev) if prev.priority != w.priority => {
                let record = merge_observations(
                    (&prev.features, prev.priority, Outcome::new(prev.ag, prev.ad)),
                    (&w.features, w.priority, Outcome::new(w.ag, w.ad)),
                );
                self.push_record(record.clone());
                Some(record)
            }
            _ => {
                self.pending = Some(w);
                None
            }
        }
    }

    pub fn push_record(&mut self, record: LabeledRecord) {
        if self.config.memory_capacity == 0 {
            return;
        }
        while self.memory.len() >= self.config.memory_capacity {
            self.memory.pop_front();
        }
        self.memory.push_back(record);
    }

    pub fn maybe_refresh(&mut self, now: f64) -> RefreshOutcome {
        if now - self.last_refresh < self.config.refresh_interval {
            return RefreshOutcome::NotDue;
        }
        if self.memory.len() < self.config.min_train.max(1) {
            return RefreshOutcome::TooFewRecords;
        }
        let records: Vec<LabeledRecord> = self.memory.iter().cloned().collect();
        let mut params = self.config.serving;
        params.forest.seed = self.config.seed.wrapping_add(self.model.snapshot().version);
        self.last_refresh = now;
        match train_serving_model(&records, &params) {
            Ok(model) => RefreshOutcome::Refreshed {
                version: self.model.swap(model),
            },
            Err(e) => {
                warn!("retraining failed, keeping previous model: {e}");
                RefreshOutcome::Failed
            }
        }
    }
}
