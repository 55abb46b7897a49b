//! Run configuration (TOML). Command-line flags override file values.
//!
//! ```toml
//! seed = 7
//! tasks = ["box", "counting"]
//! bench_size = 1000
//!
//! [quotas]
//! counting = 120
//!
//! [generation]
//! free_space_min_area = 500
//! relation_min_dist = 50.0
//!
//! [rewards]
//! point_radius = 50.0
//! beta = 0.01
//!
//! [endpoint]
//! url = "https://api.example.com/v1"
//! model = "some-vlm"
//! concurrency = 4
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use skyforge_core::qa::{GenConfig, Task};
use skyforge_core::rewards::{DEFAULT_BETA, POINT_L1_RADIUS};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSettings {
    pub point_radius: f64,
    pub beta: f64,
}

impl Default for RewardSettings {
    fn default() -> Self {
        Self {
            point_radius: POINT_L1_RADIUS,
            beta: DEFAULT_BETA,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointSettings {
    /// Base URL; `/chat/completions` is appended.
    pub url: Option<String>,
    pub model: String,
    pub concurrency: usize,
    pub timeout_secs: u64,
    pub attempts: u32,
    pub backoff_ms: u64,
    pub max_tokens: u32,
    pub temperature: f64,
}

impl Default for EndpointSettings {
    fn default() -> Self {
        Self {
            url: None,
            model: String::from("gpt-4o"),
            concurrency: 4,
            timeout_secs: 60,
            attempts: 3,
            backoff_ms: 500,
            max_tokens: 512,
            temperature: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenes: Option<PathBuf>,
    pub tasks: Vec<Task>,
    pub seed: u64,
    pub bench_size: usize,
    /// Fixed benchmark counts for some tasks; the rest split what is left.
    pub quotas: BTreeMap<String, usize>,
    pub generation: GenConfig,
    pub rewards: RewardSettings,
    pub endpoint: EndpointSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenes: None,
            tasks: Task::ALL.to_vec(),
            seed: 0,
            bench_size: 1000,
            quotas: BTreeMap::new(),
            generation: GenConfig::default(),
            rewards: RewardSettings::default(),
            endpoint: EndpointSettings::default(),
        }
    }
}

pub fn parse_tasks(list: &str) -> CliResult<Vec<Task>> {
    if list.trim() == "all" {
        return Ok(Task::ALL.to_vec());
    }
    let mut tasks = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let t = Task::from_str(name).map_err(|_| CliError::Config(format!("unknown task {name:?}")))?;
        if !tasks.contains(&t) {
            tasks.push(t);
        }
    }
    Ok(tasks)
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn quotas(&self) -> CliResult<BTreeMap<Task, usize>> {
        self.quotas
            .iter()
            .map(|(k, &v)| {
                Task::from_str(k)
                    .map(|t| (t, v))
                    .map_err(|_| CliError::Config(format!("unknown task {k:?} in quotas")))
            })
            .collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        let g = &self.generation;
        if self.tasks.is_empty() {
            return bad("no tasks selected");
        }
        if g.free_space_min_area == 0 || g.landing_min_area == 0 {
            return bad("area thresholds must be positive");
        }
        if !(g.relation_min_dist > 0.0 && g.height_tolerance > 0.0) {
            return bad("relation distance and height tolerance must be positive");
        }
        let (lo, hi) = g.choice_options;
        if !(4 <= lo && lo <= hi && hi <= 6) {
            return bad("choice_options must satisfy 4 <= min <= max <= 6");
        }
        if g.multi_frame_len < 2 || g.max_records_per_task == 0 || !(g.counting_weight_cap >= 1.0) {
            return bad("multi_frame_len >= 2, max_records_per_task >= 1 and counting_weight_cap >= 1 are required");
        }
        if !(self.rewards.point_radius > 0.0) || !(self.rewards.beta >= 0.0) {
            return bad("point radius must be positive and beta non-negative");
        }
        if self.endpoint.concurrency == 0 || self.endpoint.attempts == 0 {
            return bad("endpoint concurrency and attempts must be at least 1");
        }
        self.quotas()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("serializable");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("seed = 9\ntasks = [\"box\", \"counting\"]\n[generation]\nrelation_min_dist = 60.0\n[quotas]\nbox = 3\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.tasks, vec![Task::Box, Task::Counting]);
        assert_eq!(c.generation.relation_min_dist, 60.0);
        assert_eq!(c.generation.free_space_min_area, 500);
        assert_eq!(c.rewards.beta, 0.01);
        assert_eq!(c.quotas().unwrap()[&Task::Box], 3);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(RunConfig::from_toml("sead = 1").is_err());
        assert!(RunConfig::from_toml("tasks = [\"boxes\"]").is_err());
        let mut c = RunConfig::default();
        c.generation.choice_options = (3, 6);
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.quotas.insert("nope".into(), 1);
        assert!(c.validate().is_err());
        assert!(parse_tasks("box,colour").is_err());
        assert_eq!(parse_tasks("all").unwrap().len(), 13);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
