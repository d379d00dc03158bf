//! Run configuration: one TOML file, `section.key=value` overrides and an
//! environment override for the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calllog::{ColumnSchema, DEFAULT_HEARD_THRESHOLD};
use crate::error::{Error, Result};
use crate::exposure::{FairnessPolicy, PolicyConfig, SlotSchedule};
use crate::metrics::ReportFormat;
use crate::recommender::forest::EnsembleConfig;
use crate::simulator::{DepthMode, ModelVariant};
use crate::user_model::FilterThresholds;

/// Environment variable that replaces `paths.output_dir`.
pub const OUTPUT_DIR_ENV: &str = "FAIRLIST_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Call-log files, read in order and concatenated.
    pub logs: Vec<PathBuf>,
    /// Optional item catalogue; when absent it is derived from the logs.
    pub items: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            logs: Vec::new(),
            items: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdsConfig {
    /// Heard fraction separating a positive listen from a skip.
    pub heard_threshold: f64,
    #[serde(flatten)]
    pub filter: FilterThresholds,
}

impl Default for ThresholdsConfig {
    fn default() -> Self {
        ThresholdsConfig {
            heard_threshold: DEFAULT_HEARD_THRESHOLD,
            filter: FilterThresholds::default(),
        }
    }
}

/// `k = "auto"` or an explicit positive integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KChoice {
    Fixed(usize),
    Auto(AutoTag),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub k: KChoice,
    /// Range searched by the elbow rule when `k = "auto"`.
    pub k_min: usize,
    pub k_max: usize,
    /// Categorical weight; derived from the data when absent.
    pub gamma: Option<f64>,
    pub seed: u64,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            k: KChoice::Fixed(5),
            k_min: 2,
            k_max: 8,
            gamma: None,
            seed: 7,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierMode {
    #[default]
    Ensemble,
    /// Uses the logged cluster labels instead of a trained model.
    Oracle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub mode: ClassifierMode,
    pub seed: u64,
    #[serde(flatten)]
    pub ensemble: EnsembleConfig,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            mode: ClassifierMode::Ensemble,
            seed: 11,
            ensemble: EnsembleConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub variants: Vec<String>,
    pub depth_mode: DepthMode,
    pub seed: u64,
    /// Topic to simulate; may be omitted when the logs hold a single topic.
    pub topic: Option<String>,
    pub run_id: String,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            variants: ModelVariant::ALL.iter().map(|v| v.name().to_string()).collect(),
            depth_mode: DepthMode::ReplayDepth,
            seed: 42,
            topic: None,
            run_id: "run".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub format: ReportFormat,
    /// Also report the Gini coefficient over per-item exposure.
    pub item_gini: bool,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            format: ReportFormat::Delimited,
            item_gini: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub schema: ColumnSchema,
    pub thresholds: ThresholdsConfig,
    pub clustering: ClusteringConfig,
    pub classifier: ClassifierConfig,
    pub policy: PolicyConfig,
    pub schedule: SlotSchedule,
    pub simulation: SimulationConfig,
    pub report: ReportConfig,
}

fn parse_override(spec: &str) -> Result<(Vec<&str>, toml::Value)> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not section.key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.len() < 2 || path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key {key:?} is not section.key")));
    }
    let raw = raw.trim();
    // A bare word that is not valid TOML is taken as a string.
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((path, value))
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, value) = parse_override(spec)?;
    let (last, parents) = path.split_last().expect("at least two parts");
    let mut cursor = table;
    for p in parents {
        let entry = cursor
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{p} is not a section")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Parses TOML text, applies `section.key=value` overrides in order, then
    /// validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: RunConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file, resolving relative paths against its directory,
    /// and applies the output-directory environment override.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml_str(&text, overrides)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_relative(base);
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            config.paths.output_dir = PathBuf::from(dir);
        }
        Ok(config)
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.paths.logs.iter_mut().for_each(fix);
        if let Some(p) = self.paths.items.as_mut() {
            fix(p);
        }
        fix(&mut self.paths.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        if !(t.heard_threshold > 0.0 && t.heard_threshold < 1.0) {
            return Err(Error::Config(format!("heard_threshold {} must lie in (0, 1)", t.heard_threshold)));
        }
        t.filter.validate()?;
        let c = &self.clustering;
        match c.k {
            KChoice::Fixed(0) => return Err(Error::Config("clustering.k must be positive".into())),
            KChoice::Auto(_) if c.k_min < 2 || c.k_max < c.k_min => {
                return Err(Error::Config(format!("invalid k range {}..={}", c.k_min, c.k_max)))
            }
            _ => {}
        }
        if c.gamma.is_some_and(|g| !(g >= 0.0)) {
            return Err(Error::Config("clustering.gamma must be >= 0".into()));
        }
        FairnessPolicy::try_from(&self.policy)?;
        self.schedule.validate()?;
        self.variants()?;
        if self.simulation.run_id.is_empty() || self.simulation.run_id.contains(['/', '\\']) {
            return Err(Error::Config(format!("run_id {:?} is not a plain file stem", self.simulation.run_id)));
        }
        Ok(())
    }

    /// Configured variants, deduplicated in canonical order.
    pub fn variants(&self) -> Result<Vec<ModelVariant>> {
        let mut v = self
            .simulation
            .variants
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<ModelVariant>>>()?;
        if v.is_empty() {
            return Err(Error::Config("simulation.variants is empty".into()));
        }
        v.sort();
        v.dedup();
        Ok(v)
    }

    pub fn fairness_policy(&self) -> Result<FairnessPolicy> {
        FairnessPolicy::try_from(&self.policy)
    }

    /// Canonical TOML of the effective configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical TOML, hex encoded. The output directory is
    /// excluded so relocating a run does not change its hash.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.paths.output_dir = PathBuf::new();
        Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exposure::AspectRule;

    #[test]
    fn defaults_follow_reference_setup() {
        let c = RunConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(c.schedule.list_length, 10);
        assert_eq!(c.schedule.horizon_hours, 100);
        assert_eq!(c.schedule.regen_interval, 1);
        assert_eq!(c.policy.min_share, 0.05);
        assert_eq!(c.clustering.k, KChoice::Fixed(5));
        assert_eq!(c.thresholds.filter.min_calls, 8);
        assert_eq!(c.variants().unwrap(), ModelVariant::ALL);
    }

    #[test]
    fn file_values_and_overrides() {
        let text = r#"
[paths]
logs = ["a.csv"]
[clustering]
k = "auto"
[policy]
aspect_rule = "equal"
[simulation]
variants = ["3c", "user_pref"]
depth_mode = "sample-depth"
"#;
        let c = RunConfig::from_toml_str(
            text,
            &[
                "simulation.seed=9".into(),
                "policy.item_rule=rating".into(),
                "schedule.list_length=5".into(),
                "clustering.k=3".into(),
                "thresholds.min_calls=3".into(),
                "classifier.n_trees=7".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.simulation.seed, 9);
        assert_eq!(c.simulation.depth_mode, DepthMode::SampleDepth);
        assert_eq!(c.schedule.list_length, 5);
        assert_eq!(c.clustering.k, KChoice::Fixed(3));
        assert_eq!(c.thresholds.filter.min_calls, 3);
        assert_eq!(c.classifier.ensemble.n_trees, 7);
        assert_eq!(c.variants().unwrap(), [ModelVariant::UserPreference, ModelVariant::Policy3c]);
        let p = c.fairness_policy().unwrap();
        assert_eq!(p.aspect_rule, AspectRule::EqualExposure);
        let auto = RunConfig::from_toml_str(text, &[]).unwrap();
        assert_eq!(auto.clustering.k, KChoice::Auto(AutoTag::Auto));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml_str("[policy]\naspect_rule = \"fair\"", &[]).is_err());
        assert!(RunConfig::from_toml_str("[simulation]\nvariants = [\"9z\"]", &[]).is_err());
        assert!(RunConfig::from_toml_str("[paths]\nlog = []", &[]).is_err());
        assert!(RunConfig::from_toml_str("", &["nodot=1".into()]).is_err());
        assert!(RunConfig::from_toml_str("", &["schedule.horizon_hours".into()]).is_err());
        assert!(RunConfig::from_toml_str("", &["thresholds.heard_threshold=1.5".into()]).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.paths.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.simulation.seed += 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        let back = RunConfig::from_toml_str(&a.to_toml().unwrap(), &[]).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "[paths]\nlogs = [\"logs.csv\"]\noutput_dir = \"o\"\n").unwrap();
        let c = RunConfig::load(&path, &[]).unwrap();
        assert_eq!(c.paths.logs[0], dir.path().join("logs.csv"));
        if std::env::var_os(OUTPUT_DIR_ENV).is_none() {
            assert_eq!(c.paths.output_dir, dir.path().join("o"));
        }
    }
}
