//! Config files, output guarding and run manifests.
//!
//! A config file is TOML. Keys in a `[verb]` table apply to that verb, top-level keys apply
//! to every verb, and `[sim]` holds simulator and channel parameters. A run manifest uses the
//! same layout, so it can be passed back with `--config` to repeat a run.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use smartps_core::netsim::SimParams;
use toml::{Table, Value};

/// Bad or missing arguments; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Default)]
pub struct Config {
    table: Table,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Config> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let table = text
            .parse::<Table>()
            .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        Ok(Config { table })
    }

    fn raw(&self, verb: &str, key: &str) -> Option<&Value> {
        self.table
            .get(verb)
            .and_then(Value::as_table)
            .and_then(|t| t.get(key))
            .or_else(|| self.table.get(key).filter(|v| !v.is_table()))
    }

    pub fn get<T: DeserializeOwned>(&self, verb: &str, key: &str) -> Result<Option<T>> {
        self.raw(verb, key)
            .map(|v| {
                v.clone()
                    .try_into::<T>()
                    .map_err(|e| usage(format!("config key `{key}` for {verb}: {e}")))
            })
            .transpose()
    }

    pub fn sim_params(&self) -> Result<SimParams> {
        match self.table.get("sim") {
            None => Ok(SimParams::default()),
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e| usage(format!("config section [sim]: {e}"))),
        }
    }
}

/// Resolves one setting: the flag if given, else the config entry, else `default`.
pub struct Resolver<'a> {
    pub config: &'a Config,
    pub verb: &'static str,
}

impl Resolver<'_> {
    pub fn or<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    pub fn opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.config.get(self.verb, key),
        }
    }

    pub fn required<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.opt(flag, key)?
            .ok_or_else(|| usage(format!("{}: --{} is required", self.verb, key.replace('_', "-"))))
    }

    pub fn path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
        match flag {
            Some(p) => Ok(p),
            None => self.required::<String>(None, key).map(PathBuf::from),
        }
    }

    pub fn flag(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.config.get(self.verb, key)?.unwrap_or(false))
    }
}

/// Refuses to replace existing outputs unless `force` is set.
pub fn guard_outputs(force: bool, paths: &[&Path]) -> Result<()> {
    if force {
        return Ok(());
    }
    for p in paths {
        let occupied = if p.is_dir() {
            fs::read_dir(p)?.next().is_some()
        } else {
            p.exists()
        };
        if occupied {
            bail!("`{}` already exists; pass --force to overwrite", p.display());
        }
    }
    Ok(())
}

pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".run-manifest.toml");
    output.with_file_name(name)
}

/// Everything needed to repeat a run: the seed, the verb's resolved settings and, for
/// simulating verbs, the full `[sim]` table.
#[derive(Debug)]
pub struct Manifest {
    verb: &'static str,
    seed: Option<u64>,
    params: Table,
    sim: Option<SimParams>,
}

impl Manifest {
    pub fn new(verb: &'static str) -> Manifest {
        Manifest {
            verb,
            seed: None,
            params: Table::new(),
            sim: None,
        }
    }

    pub fn seed(mut self, seed: u64) -> Manifest {
        self.seed = Some(seed);
        self
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Manifest {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn path(self, key: &str, path: &Path) -> Manifest {
        let s = path.display().to_string();
        self.param(key, s)
    }

    pub fn sim(mut self, sim: &SimParams) -> Manifest {
        self.sim = Some(sim.clone());
        self
    }

    pub fn to_toml(&self) -> Result<String> {
        let mut root = Table::new();
        let mut run = Table::new();
        run.insert("verb".into(), self.verb.into());
        run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        root.insert("run".into(), Value::Table(run));
        if let Some(seed) = self.seed {
            let seed = i64::try_from(seed).context("seed does not fit in a TOML integer")?;
            root.insert("seed".into(), seed.into());
        }
        root.insert(self.verb.into(), Value::Table(self.params.clone()));
        if let Some(sim) = &self.sim {
            root.insert("sim".into(), Value::try_from(sim).context("serializing [sim]")?);
        }
        Ok(toml::to_string(&root)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()?).with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> Config {
        Config {
            table: text.parse().unwrap(),
        }
    }

    #[test]
    fn flags_beat_verb_section_beat_top_level() {
        let c = config("seed = 1\nwindow = 2.0\n[train]\nseed = 7\n");
        let r = Resolver {
            config: &c,
            verb: "train",
        };
        assert_eq!(r.or(Some(9u64), "seed", 0).unwrap(), 9);
        assert_eq!(r.or(None::<u64>, "seed", 0).unwrap(), 7);
        assert_eq!(r.or(None::<f64>, "window", 5.0).unwrap(), 2.0);
        assert_eq!(r.or(None::<f64>, "interval", 0.5).unwrap(), 0.5);
        let other = Resolver {
            config: &c,
            verb: "simulate",
        };
        assert_eq!(other.or(None::<u64>, "seed", 0).unwrap(), 1);
    }

    #[test]
    fn missing_required_value_is_a_usage_error() {
        let c = Config::default();
        let r = Resolver {
            config: &c,
            verb: "simulate",
        };
        let e = r.required::<u64>(None, "seed").unwrap_err();
        assert!(e.downcast_ref::<UsageError>().is_some());
        assert!(e.to_string().contains("--seed"));
    }

    #[test]
    fn manifest_reloads_as_config() {
        let mut sim = SimParams::default();
        sim.channel.wifi.cap_max = 12.5;
        let m = Manifest::new("simulate")
            .seed(3)
            .param("selector", "minrtt")
            .path("scenario", Path::new("a.toml"))
            .sim(&sim);
        let c = config(&m.to_toml().unwrap());
        let r = Resolver {
            config: &c,
            verb: "simulate",
        };
        assert_eq!(r.required::<u64>(None, "seed").unwrap(), 3);
        assert_eq!(r.required::<String>(None, "selector").unwrap(), "minrtt");
        assert_eq!(r.path(None, "scenario").unwrap(), PathBuf::from("a.toml"));
        assert_eq!(c.sim_params().unwrap(), sim);
    }

    #[test]
    fn manifest_name_sits_next_to_output() {
        assert_eq!(
            manifest_path_for(Path::new("out/corr.csv")),
            PathBuf::from("out/corr.csv.run-manifest.toml")
        );
    }
}
