//! Run configuration: file values overlaid by command-line flags.
//!
//! The config file is TOML:
//!
//! ```toml
//! mode = "compact"          # or "conforming"
//! format = "json"           # or "text"
//! seed = 1
//! registry = "sigma.tsv"
//!
//! [schedule]
//! m = [2, 4, 8]
//! n = [4, 6, 8]
//!
//! [caps]
//! generation = 2
//! support = 16
//! weight_index = 4
//! depth = 8
//! stability_k = 3
//! arity = 3
//! product_budget = 2000
//! ```
//!
//! Anything omitted falls back to the defaults above (commands that need a
//! larger scale, like `depseq`, document their own fallbacks).

use std::path::{Path, PathBuf};

use serde::Deserialize;

use seqspace::error::{Error, Result};
use seqspace::norming::KCaps;
use seqspace::schedule::{ParameterSchedule, ScheduleMode};

#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    pub mode: Option<String>,
    pub format: Option<String>,
    pub seed: Option<u64>,
    pub registry: Option<PathBuf>,
    pub schedule: Option<ScheduleTable>,
    pub caps: Option<CapsTable>,
}

#[derive(Debug, Deserialize)]
pub struct ScheduleTable {
    pub m: Vec<u64>,
    pub n: Vec<u64>,
}

#[derive(Debug, Default, Deserialize)]
pub struct CapsTable {
    pub generation: Option<u32>,
    pub support: Option<u64>,
    pub weight_index: Option<u64>,
    pub depth: Option<u32>,
    pub stability_k: Option<u32>,
    pub arity: Option<usize>,
    pub product_budget: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Text,
}

/// Fully resolved configuration. Option fields remember whether the user set
/// a value, so commands can supply scale-appropriate defaults.
#[derive(Debug)]
pub struct RunConfig {
    pub mode: ScheduleMode,
    pub table: Option<(Vec<u64>, Vec<u64>)>,
    pub generation: Option<u32>,
    pub support: Option<u64>,
    pub weight_index: Option<u64>,
    pub depth: Option<u32>,
    pub stability_k: Option<u32>,
    pub arity: Option<usize>,
    pub product_budget: Option<usize>,
    pub seed: u64,
    pub registry: Option<PathBuf>,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn load(
        config_path: Option<&Path>,
        mode: Option<&str>,
        gen_cap: Option<u32>,
        supp_cap: Option<u64>,
        weight_cap: Option<u64>,
        depth: Option<u32>,
        seed: Option<u64>,
        registry: Option<PathBuf>,
        format: Option<&str>,
    ) -> Result<RunConfig> {
        let file: FileConfig = match config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                toml::from_str(&text).map_err(|e| Error::Parse(format!("config: {e}")))?
            }
            None => FileConfig::default(),
        };
        let mode = match mode.or(file.mode.as_deref()) {
            None | Some("compact") => ScheduleMode::Compact,
            Some("conforming") => ScheduleMode::Conforming,
            Some(other) => {
                return Err(Error::Parse(format!(
                    "mode must be compact or conforming, got {other:?}"
                )));
            }
        };
        let format = match format.or(file.format.as_deref()) {
            None | Some("json") => OutputFormat::Json,
            Some("text") => OutputFormat::Text,
            Some(other) => {
                return Err(Error::Parse(format!(
                    "format must be json or text, got {other:?}"
                )));
            }
        };
        let table = match file.schedule {
            Some(t) => {
                if mode == ScheduleMode::Conforming {
                    return Err(Error::Parse(
                        "conforming mode has a fixed schedule; remove the table".into(),
                    ));
                }
                Some((t.m, t.n))
            }
            None => None,
        };
        let caps = file.caps.unwrap_or_default();
        let config = RunConfig {
            mode,
            table,
            generation: gen_cap.or(caps.generation),
            support: supp_cap.or(caps.support),
            weight_index: weight_cap.or(caps.weight_index),
            depth: depth.or(caps.depth),
            stability_k: caps.stability_k,
            arity: caps.arity,
            product_budget: caps.product_budget,
            seed: seed.or(file.seed).unwrap_or(1),
            registry: registry.or(file.registry),
            format,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("generation", self.generation.map(u64::from)),
            ("support", self.support),
            ("weight_index", self.weight_index),
            ("depth", self.depth.map(u64::from)),
        ] {
            if value == Some(0) {
                return Err(Error::Parse(format!("cap {name} must be positive")));
            }
        }
        Ok(())
    }

    /// The schedule this run works against; `fallback` supplies the compact
    /// table when the config has none.
    pub fn schedule_with(&self, fallback: (&[u64], &[u64])) -> Result<ParameterSchedule> {
        match self.mode {
            ScheduleMode::Conforming => Ok(ParameterSchedule::conforming()),
            ScheduleMode::Compact => match &self.table {
                Some((m, n)) => ParameterSchedule::compact(m, n),
                None => ParameterSchedule::compact(fallback.0, fallback.1),
            },
        }
    }

    pub fn schedule(&self) -> Result<ParameterSchedule> {
        self.schedule_with((&[2, 4, 8], &[4, 6, 8]))
    }

    /// Context caps with per-command defaults.
    pub fn caps_with(&self, generation: u32, support: u64, weight_index: u64) -> KCaps {
        let mut caps = KCaps::new(
            self.generation.unwrap_or(generation),
            self.support.unwrap_or(support),
            self.weight_index.unwrap_or(weight_index),
        );
        if let Some(a) = self.arity {
            caps = caps.with_arity(a);
        }
        if let Some(b) = self.product_budget {
            caps = caps.with_budget(b);
        }
        caps
    }

    pub fn depth_cap(&self) -> u32 {
        self.depth.unwrap_or(8)
    }

    pub fn stability_cap(&self) -> u32 {
        self.stability_k.unwrap_or(3)
    }
}

/// Advisory lock that refuses concurrent registry writers across processes.
pub struct RegistryLock {
    path: PathBuf,
}

impl RegistryLock {
    pub fn acquire(registry: &Path) -> Result<RegistryLock> {
        let path = registry.with_extension("lock");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(RegistryLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Parse(format!(
                "registry is locked by another process (remove {} if stale)",
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RegistryLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
