//! Writes the synthetic dataset together with a ready-to-run config.

use std::path::{Path, PathBuf};

use topicalign_core::synth::{synthetic_dataset, DatasetSpec};
use topicalign_core::table;
use topicalign_core::Result;

use crate::config::{ModelSettings, Paths, PipelineConfig, ZoomSettings};

pub const SUPPLY_FILE: &str = "supply.jsonl";
pub const DEMAND_FILE: &str = "demand.jsonl";
pub const CLUSTERS_FILE: &str = "clusters.tsv";
pub const GROUPS_FILE: &str = "category_groups.tsv";
pub const CONFIG_FILE: &str = "config.json";
/// θ prior for the short synthetic texts; `50 / K` would swamp documents
/// of a few dozen tokens.
pub const SHORT_TEXT_ALPHA: f64 = 0.1;

/// Default config for a bundle written by [`write_bundle`]; paths are
/// relative to the bundle directory.
pub fn bundle_config() -> PipelineConfig {
    PipelineConfig {
        paths: Paths {
            supply_corpus: SUPPLY_FILE.into(),
            demand_corpus: DEMAND_FILE.into(),
            cluster_assignment: Some(CLUSTERS_FILE.into()),
            stoplist: None,
            seed_ids: None,
            category_groups: Some(GROUPS_FILE.into()),
            output_dir: "out".into(),
        },
        seed_pattern: "obes*".into(),
        delineation: Default::default(),
        supply: ModelSettings {
            topics: 20,
            alpha_dir: Some(SHORT_TEXT_ALPHA),
            beta_dir: 0.01,
            iterations: 1000,
            seed: 2013,
            min_df: 5,
        },
        demand: ModelSettings {
            topics: 30,
            alpha_dir: Some(SHORT_TEXT_ALPHA),
            beta_dir: 0.01,
            iterations: 1000,
            seed: 2015,
            min_df: 3,
        },
        relevance: Default::default(),
        alignment: Default::default(),
        analytics: Default::default(),
        zoom: ZoomSettings {
            model: ModelSettings {
                topics: 10,
                alpha_dir: Some(SHORT_TEXT_ALPHA),
                beta_dir: 0.01,
                iterations: 1000,
                seed: 2016,
                min_df: 3,
            },
            ..Default::default()
        },
        reports: Default::default(),
    }
}

/// Generates the dataset into `dir` and returns the config path.
pub fn write_bundle(dir: &Path, spec: &DatasetSpec, seed: u64) -> Result<PathBuf> {
    let data = synthetic_dataset(spec, seed)?;
    data.supply.write_jsonl(&dir.join(SUPPLY_FILE))?;
    data.demand.write_jsonl(&dir.join(DEMAND_FILE))?;
    table::write_file(&dir.join(CLUSTERS_FILE), data.assignment.to_tsv().as_bytes())?;
    table::write_file(&dir.join(GROUPS_FILE), data.grouping.to_tsv().as_bytes())?;
    let config_path = dir.join(CONFIG_FILE);
    table::write_file(&config_path, bundle_config().to_json().as_bytes())?;
    log::info!(
        "synthetic bundle: {} supply and {} demand documents in {}",
        data.supply.len(),
        data.demand.len(),
        dir.display()
    );
    Ok(config_path)
}
