//! Pipeline configuration: one JSON file, paths relative to the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use topicalign_core::align::EchoRule;
use topicalign_core::analytics::TrendWeighting;
use topicalign_core::corpus::SeedPattern;
use topicalign_core::geometry::RelevanceConfig;
use topicalign_core::topicmodel::{Priors, DEFAULT_BETA, DEFAULT_ITERATIONS};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub supply_corpus: PathBuf,
    pub demand_corpus: PathBuf,
    /// Headerless `doc_id<TAB>cluster_id` file. Without it the `cluster`
    /// field of the supply records is used.
    #[serde(default)]
    pub cluster_assignment: Option<PathBuf>,
    /// One stopword per line; the bundled English list when absent.
    #[serde(default)]
    pub stoplist: Option<PathBuf>,
    /// Explicit seed document ids, replacing pattern matching.
    #[serde(default)]
    pub seed_ids: Option<PathBuf>,
    /// `category<TAB>group` file for the discipline profiles.
    #[serde(default)]
    pub category_groups: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelineationSettings {
    pub alpha: f64,
    pub keep_seed_documents: bool,
}

impl Default for DelineationSettings {
    fn default() -> Self {
        DelineationSettings {
            alpha: 0.1,
            keep_seed_documents: true,
        }
    }
}

/// Vocabulary and sampler settings for one corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSettings {
    pub topics: usize,
    /// Defaults to `50 / topics`.
    #[serde(default)]
    pub alpha_dir: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta_dir: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub min_df: usize,
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}

fn default_seed() -> u64 {
    1
}

impl ModelSettings {
    pub fn priors(&self) -> Priors {
        let mut priors = Priors::default_for(self.topics);
        if let Some(a) = self.alpha_dir {
            priors.alpha_dir = a;
        }
        priors.beta_dir = self.beta_dir;
        priors
    }

    fn validate(&self, name: &str) -> CliResult<()> {
        if self.topics == 0 {
            return Err(CliError::config(format!("{name}.topics must be at least 1")));
        }
        if self.min_df == 0 {
            return Err(CliError::config(format!("{name}.min_df must be at least 1")));
        }
        self.priors()
            .validate()
            .map_err(|e| CliError::config(format!("{name}: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignmentSettings {
    pub threshold: f64,
    pub top_n: Option<usize>,
    pub echo_rule: EchoRule,
}

impl Default for AlignmentSettings {
    fn default() -> Self {
        AlignmentSettings {
            threshold: 0.5,
            top_n: None,
            echo_rule: EchoRule::BelowGrandMean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticsSettings {
    pub cooccurrence_t: f64,
    pub core_t: f64,
    pub characteristic_t_supply: f64,
    pub characteristic_t_demand: f64,
    pub trend_weighting: TrendWeighting,
}

impl Default for AnalyticsSettings {
    fn default() -> Self {
        AnalyticsSettings {
            cooccurrence_t: 0.25,
            core_t: 0.5,
            characteristic_t_supply: 0.85,
            characteristic_t_demand: 0.85,
            trend_weighting: TrendWeighting::Tokens,
        }
    }
}

/// Refit on the documents of a few supply topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZoomSettings {
    pub enabled: bool,
    /// Zero-based supply topic indices. When absent, the two supply topics
    /// with the lowest mean distance to the demand topics.
    pub topics: Option<Vec<usize>>,
    pub threshold: f64,
    pub model: ModelSettings,
    pub characteristic_t: f64,
}

impl Default for ZoomSettings {
    fn default() -> Self {
        ZoomSettings {
            enabled: true,
            topics: None,
            threshold: 0.25,
            model: ModelSettings {
                topics: 10,
                alpha_dir: None,
                beta_dir: DEFAULT_BETA,
                iterations: DEFAULT_ITERATIONS,
                seed: 1,
                min_df: 3,
            },
            characteristic_t: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSettings {
    pub maps: bool,
    pub alignment: bool,
}

impl Default for ReportSettings {
    fn default() -> Self {
        ReportSettings {
            maps: true,
            alignment: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    #[serde(default = "default_pattern")]
    pub seed_pattern: String,
    #[serde(default)]
    pub delineation: DelineationSettings,
    pub supply: ModelSettings,
    pub demand: ModelSettings,
    #[serde(default)]
    pub relevance: RelevanceConfig,
    #[serde(default)]
    pub alignment: AlignmentSettings,
    #[serde(default)]
    pub analytics: AnalyticsSettings,
    #[serde(default)]
    pub zoom: ZoomSettings,
    #[serde(default)]
    pub reports: ReportSettings,
}

fn default_pattern() -> String {
    "obes*".to_string()
}

fn unit_open(name: &str, t: f64) -> CliResult<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} = {t} outside (0, 1)")))
    }
}

impl PipelineConfig {
    /// Reads `path` and resolves relative input paths against its directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve(base);
        Ok(config)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        fix(&mut paths.supply_corpus);
        fix(&mut paths.demand_corpus);
        fix(&mut paths.output_dir);
        for p in [
            &mut paths.cluster_assignment,
            &mut paths.stoplist,
            &mut paths.seed_ids,
            &mut paths.category_groups,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Uses `seed` for every sampler chain.
    pub fn override_seed(&mut self, seed: u64) {
        self.supply.seed = seed;
        self.demand.seed = seed;
        self.zoom.model.seed = seed;
    }

    pub fn validate(&self) -> CliResult<()> {
        let paths = &self.paths;
        let inputs = [
            Some(&paths.supply_corpus),
            Some(&paths.demand_corpus),
            paths.cluster_assignment.as_ref(),
            paths.stoplist.as_ref(),
            paths.seed_ids.as_ref(),
            paths.category_groups.as_ref(),
        ];
        for p in inputs.into_iter().flatten() {
            if !p.is_file() {
                return Err(CliError::config(format!("input file not found: {}", p.display())));
            }
        }
        SeedPattern::parse(&self.seed_pattern).map_err(CliError::config)?;
        let alpha = self.delineation.alpha;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(CliError::config(format!("delineation.alpha = {alpha} outside (0, 1]")));
        }
        self.supply.validate("supply")?;
        self.demand.validate("demand")?;
        self.relevance.validate().map_err(CliError::config)?;
        let threshold = self.alignment.threshold;
        if !(0.0..=1.0).contains(&threshold) {
            return Err(CliError::config(format!(
                "alignment.threshold = {threshold} outside [0, 1]"
            )));
        }
        let a = &self.analytics;
        unit_open("analytics.cooccurrence_t", a.cooccurrence_t)?;
        unit_open("analytics.core_t", a.core_t)?;
        unit_open("analytics.characteristic_t_supply", a.characteristic_t_supply)?;
        unit_open("analytics.characteristic_t_demand", a.characteristic_t_demand)?;
        if self.zoom.enabled {
            unit_open("zoom.threshold", self.zoom.threshold)?;
            unit_open("zoom.characteristic_t", self.zoom.characteristic_t)?;
            self.zoom.model.validate("zoom.model")?;
            if let Some(topics) = &self.zoom.topics {
                if topics.is_empty() {
                    return Err(CliError::config("zoom.topics is empty"));
                }
                if let Some(bad) = topics.iter().find(|&&t| t >= self.supply.topics) {
                    return Err(CliError::config(format!(
                        "zoom topic {bad} out of range for {} supply topics",
                        self.supply.topics
                    )));
                }
            }
        }
        Ok(())
    }

    /// Pretty JSON with paths as given (no resolution).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}
