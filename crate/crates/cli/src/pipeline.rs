//! Stage runner. Every stage reads its inputs from files written by earlier
//! stages, so a run can be resumed from any stage directory.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;
use topicalign_core::align::{alignment_summary, cross_distances, union_vocabulary, AlignmentResult};
use topicalign_core::analytics::{
    category_profiles, characteristic_documents, cluster_pseudo_topics, cooccurrence_graph,
    extract_subcorpus, specialization_stats, temporal_trends, CategoryGrouping,
};
use topicalign_core::corpus::{
    apply_seed_ids, match_seed, parse_documents, read_seed_ids, Corpus, DocumentFormat,
};
use topicalign_core::delineation::{
    cluster_seed_fractions, expand_corpus, included_clusters, ClusterAssignment, DelineationConfig,
};
use topicalign_core::geometry::{
    pcoa_layout, relevant_terms, topic_distance_matrix, Layout, RelevanceConfig,
};
use topicalign_core::table::{self, fmt_float, sha256_hex};
use topicalign_core::topicmodel::{corpus_topic_weights, fit, TopicModel};
use topicalign_core::vocab::{build_vocabulary, count_matrix, DocTermMatrix, Stoplist, Vocabulary};
use topicalign_core::{Error, Result};

use crate::config::{ModelSettings, PipelineConfig};
use crate::error::{CliError, CliResult, StageContext};
use crate::report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Delineate,
    Fit,
    Map,
    Align,
    Zoom,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Delineate,
        Stage::Fit,
        Stage::Map,
        Stage::Align,
        Stage::Zoom,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Delineate => "delineate",
            Stage::Fit => "fit",
            Stage::Map => "map",
            Stage::Align => "align",
            Stage::Zoom => "zoom",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| CliError::config(format!("unknown stage {s:?}")))
    }
}

/// The three fitted corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Supply,
    Demand,
    Zoom,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Supply => "supply",
            Side::Demand => "demand",
            Side::Zoom => "zoom",
        }
    }

    pub fn labels(self, k: usize) -> Vec<String> {
        let prefix = match self {
            Side::Supply => "S",
            Side::Demand => "Q",
            Side::Zoom => "Z",
        };
        (1..=k).map(|i| format!("{prefix}{i}")).collect()
    }
}

/// Paths inside the output directory.
#[derive(Debug, Clone)]
pub struct OutputDir {
    pub root: PathBuf,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        OutputDir { root: root.into() }
    }

    pub fn stage(&self, stage: Stage) -> PathBuf {
        self.root.join(stage.name())
    }

    pub fn seeds(&self) -> PathBuf {
        self.stage(Stage::Ingest).join("seeds.txt")
    }

    pub fn supply_full(&self) -> PathBuf {
        self.stage(Stage::Ingest).join("supply_full.jsonl")
    }

    pub fn clusters(&self) -> PathBuf {
        self.stage(Stage::Ingest).join("clusters.tsv")
    }

    /// The corpus a side is modelled on.
    pub fn corpus(&self, side: Side) -> PathBuf {
        match side {
            Side::Supply => self.stage(Stage::Delineate).join("supply.jsonl"),
            Side::Demand => self.stage(Stage::Ingest).join("demand.jsonl"),
            Side::Zoom => self.stage(Stage::Zoom).join("corpus.jsonl"),
        }
    }

    /// Vocabulary, matrix and model directory of a side.
    pub fn model(&self, side: Side) -> PathBuf {
        match side {
            Side::Zoom => self.stage(Stage::Zoom).join("model"),
            _ => self.stage(Stage::Fit).join(side.name()),
        }
    }

    pub fn map(&self, side: Side) -> PathBuf {
        match side {
            Side::Zoom => self.stage(Stage::Zoom).join("map"),
            _ => self.stage(Stage::Map).join(side.name()),
        }
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    table::write_file(path, contents.as_ref())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    write(path, text)
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    parse_documents(path, DocumentFormat::Jsonl)
}

fn stoplist(config: &PipelineConfig) -> Result<Stoplist> {
    match &config.paths.stoplist {
        Some(p) => Stoplist::from_file(p),
        None => Ok(Stoplist::english()),
    }
}

fn ingest(config: &PipelineConfig, out: &OutputDir) -> Result<()> {
    let mut supply = read_corpus(&config.paths.supply_corpus)?;
    let seeds = match &config.paths.seed_ids {
        Some(p) => {
            let ids = read_seed_ids(p)?;
            apply_seed_ids(&mut supply, &ids);
            ids.into_iter().filter(|id| supply.get(id).is_some()).collect()
        }
        None => match_seed(&mut supply, &config.seed_pattern)?,
    };
    let demand = read_corpus(&config.paths.demand_corpus)?;
    let assignment = match &config.paths.cluster_assignment {
        Some(p) => ClusterAssignment::read_tsv(p)?,
        None => ClusterAssignment::from_corpus(&supply)?,
    };
    log::info!(
        "ingest: {} supply documents ({} seeds), {} demand documents, {} clusters",
        supply.len(),
        seeds.len(),
        demand.len(),
        assignment.cluster_count()
    );
    supply.write_jsonl(&out.supply_full())?;
    demand.write_jsonl(&out.corpus(Side::Demand))?;
    let seed_lines: String = seeds.iter().map(|id| format!("{id}\n")).collect();
    write(&out.seeds(), seed_lines)?;
    write(&out.clusters(), assignment.to_tsv())?;
    write_json(
        &out.stage(Stage::Ingest).join("summary.json"),
        &json!({
            "supply_documents": supply.len(),
            "supply_without_text": supply.documents.iter().filter(|d| d.is_empty_text()).count(),
            "seed_documents": seeds.len(),
            "seed_pattern": if config.paths.seed_ids.is_some() { None } else { Some(&config.seed_pattern) },
            "demand_documents": demand.len(),
            "clusters": assignment.cluster_count(),
            "assigned_documents": assignment.clusters().map(|(_, n)| n).sum::<usize>(),
        }),
    )
}

/// Delineation hierarchy thresholds reported next to the configured one.
const HIERARCHY_ALPHAS: [f64; 3] = [0.5, 0.3, 0.1];

fn delineate(config: &PipelineConfig, out: &OutputDir) -> Result<()> {
    let full = read_corpus(&out.supply_full())?;
    let seeds: BTreeSet<String> = read_seed_ids(&out.seeds())?;
    let assignment = ClusterAssignment::read_tsv(&out.clusters())?;
    let settings = DelineationConfig {
        alpha: config.delineation.alpha,
        keep_seed_documents: config.delineation.keep_seed_documents,
    };
    let delineated = expand_corpus(&full, &seeds, &assignment, &settings)?;
    log::info!("delineate: {}", delineated.provenance_note);

    let fractions = cluster_seed_fractions(&assignment, &seeds)?;
    let included: BTreeSet<String> = included_clusters(&fractions, settings.alpha).into_iter().collect();
    let mut rows = String::from("cluster\tsize\tseed_fraction\tincluded\n");
    for (cluster, size) in assignment.clusters() {
        rows.push_str(&format!(
            "{cluster}\t{size}\t{}\t{}\n",
            fmt_float(fractions[cluster]),
            included.contains(cluster)
        ));
    }
    write(&out.stage(Stage::Delineate).join("cluster_fractions.tsv"), rows)?;

    let mut alphas: Vec<f64> = HIERARCHY_ALPHAS.to_vec();
    if !alphas.contains(&settings.alpha) {
        alphas.push(settings.alpha);
    }
    alphas.sort_by(|a, b| b.total_cmp(a));
    let hierarchy = alphas
        .iter()
        .map(|&alpha| {
            let c = expand_corpus(&full, &seeds, &assignment, &DelineationConfig { alpha, ..settings })?;
            Ok(json!({ "alpha": alpha, "documents": c.len() }))
        })
        .collect::<Result<Vec<_>>>()?;
    write_json(
        &out.stage(Stage::Delineate).join("summary.json"),
        &json!({
            "alpha": settings.alpha,
            "keep_seed_documents": settings.keep_seed_documents,
            "clusters_included": included.len(),
            "clusters_total": assignment.cluster_count(),
            "documents": delineated.len(),
            "provenance": delineated.provenance_note,
            "hierarchy": hierarchy,
        }),
    )?;
    delineated.write_jsonl(&out.corpus(Side::Supply))
}

/// Builds the vocabulary and matrix of `corpus`, fits the model and saves all
/// three under `dir`.
fn fit_corpus(corpus: &Corpus, stop: &Stoplist, settings: &ModelSettings, dir: &Path) -> Result<()> {
    let vocab = build_vocabulary(corpus, stop, settings.min_df)?;
    let matrix = count_matrix(corpus, &vocab);
    log::info!(
        "fit {}: {} documents, {} terms, {} tokens, K = {}",
        dir.display(),
        matrix.n_docs(),
        vocab.len(),
        matrix.total_tokens(),
        settings.topics
    );
    vocab.save(dir)?;
    matrix.save(dir)?;
    let model = fit(&matrix, settings.topics, settings.priors(), settings.iterations, settings.seed)?;
    model.save(dir, vocab.terms(), matrix.doc_ids())
}

fn fit_stage(config: &PipelineConfig, out: &OutputDir) -> Result<()> {
    let stop = stoplist(config)?;
    let supply = read_corpus(&out.corpus(Side::Supply))?;
    let demand = read_corpus(&out.corpus(Side::Demand))?;
    let (a, b) = std::thread::scope(|s| {
        let handle = s.spawn(|| fit_corpus(&supply, &stop, &config.supply, &out.model(Side::Supply)));
        let b = fit_corpus(&demand, &stop, &config.demand, &out.model(Side::Demand));
        (handle.join().expect("supply fit thread panicked"), b)
    });
    a?;
    b
}

/// Vocabulary, matrix and model of one side, cross-checked.
pub struct Fitted {
    pub vocab: Vocabulary,
    pub matrix: DocTermMatrix,
    pub model: TopicModel,
}

pub fn load_fitted(dir: &Path) -> Result<Fitted> {
    let vocab = Vocabulary::load(dir)?;
    let matrix = DocTermMatrix::load(dir, vocab.len())?.with_vocab_checksum(vocab.checksum());
    let model = TopicModel::load(dir)?;
    if model.vocab_checksum != vocab.checksum() {
        return Err(Error::VocabularyMismatch {
            expected: vocab.checksum(),
            found: model.vocab_checksum,
        });
    }
    if model.n_docs() != matrix.n_docs() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} documents, matrix {}",
            model.n_docs(),
            matrix.n_docs()
        )));
    }
    Ok(Fitted { vocab, matrix, model })
}

struct MapSettings<'a> {
    relevance: &'a RelevanceConfig,
    cooccurrence_t: f64,
    core_t: f64,
    characteristic_t: f64,
    trend_weighting: topicalign_core::analytics::TrendWeighting,
    grouping: Option<&'a CategoryGrouping>,
}

/// Geometry and analytics of one fitted side.
fn map_side(side: Side, corpus: &Corpus, fitted: &Fitted, settings: &MapSettings, dir: &Path) -> Result<()> {
    let Fitted { vocab, matrix, model } = fitted;
    if corpus.ids().ne(matrix.doc_ids().iter().map(String::as_str)) {
        return Err(Error::DimensionMismatch(format!(
            "{} corpus and matrix list different documents",
            side.name()
        )));
    }
    let labels = side.labels(model.k);
    let distances = topic_distance_matrix(model)?;
    write(&dir.join("distances.tsv"), distances.to_tsv(&labels, &labels))?;
    let weights = corpus_topic_weights(model, matrix)?;
    let weight_rows: Vec<Vec<f64>> = weights.weights.iter().map(|&w| vec![w]).collect();
    write(
        &dir.join("topic_weights.tsv"),
        table::dense_tsv("topic", &["weight".to_string()], Some(&labels), &weight_rows),
    )?;
    let layout = pcoa_layout(&distances, &weights)?;
    write(&dir.join("layout.tsv"), layout.to_tsv(&labels))?;

    let mut relevance = String::from("topic\trank\tterm\tscore\n");
    for (k, label) in labels.iter().enumerate() {
        for (rank, (term, score)) in relevant_terms(model, matrix, vocab, k, settings.relevance)?
            .into_iter()
            .enumerate()
        {
            relevance.push_str(&format!("{label}\t{}\t{term}\t{}\n", rank + 1, fmt_float(score)));
        }
    }
    write(&dir.join("relevance.tsv"), relevance)?;

    let graph = cooccurrence_graph(&model.theta, settings.cooccurrence_t)?;
    write(&dir.join("cooccurrence.tsv"), graph.to_tsv(&labels))?;
    let stats = specialization_stats(&model.theta, matrix.doc_lengths(), settings.core_t)?;
    let chars = characteristic_documents(&model.theta, settings.characteristic_t)?;
    write(&dir.join("characteristic.tsv"), chars.to_tsv(&labels, corpus))?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "topics": model.k,
            "documents": matrix.n_docs(),
            "terms": vocab.len(),
            "tokens": matrix.total_tokens(),
            "stress": layout.stress,
            "eigenvalues": layout.eigenvalues,
            "specialization": stats,
            "characteristic_threshold": chars.threshold,
            "characteristic_coverage": chars.coverage,
            "characteristic_counts": chars.lists.iter().map(Vec::len).collect::<Vec<_>>(),
        }),
    )?;

    let years: Vec<Option<i32>> = corpus.documents.iter().map(|d| d.year).collect();
    if years.iter().any(Option::is_some) {
        let trends = temporal_trends(&model.theta, matrix, &years, settings.trend_weighting)?;
        write(&dir.join("trends.tsv"), trends.to_tsv(&labels))?;
        write(&dir.join("trends_relative.tsv"), trends.relative_change_tsv(&labels))?;
    } else {
        log::info!("{}: no publication years, trends skipped", side.name());
    }
    if let Some(grouping) = settings.grouping {
        let categories: Vec<Vec<String>> = corpus.documents.iter().map(|d| d.categories.clone()).collect();
        if categories.iter().any(|c| !c.is_empty()) {
            let profiles = category_profiles(&model.theta, matrix, &categories, grouping)?;
            write(&dir.join("profiles.tsv"), profiles.to_tsv(&labels))?;
        }
    }
    Ok(())
}

fn grouping(config: &PipelineConfig) -> Result<Option<CategoryGrouping>> {
    config
        .paths
        .category_groups
        .as_deref()
        .map(CategoryGrouping::read_tsv)
        .transpose()
}

fn map_stage(config: &PipelineConfig, out: &OutputDir) -> Result<()> {
    let grouping = grouping(config)?;
    for side in [Side::Supply, Side::Demand] {
        let corpus = read_corpus(&out.corpus(side))?;
        let fitted = load_fitted(&out.model(side))?;
        let settings = MapSettings {
            relevance: &config.relevance,
            cooccurrence_t: config.analytics.cooccurrence_t,
            core_t: config.analytics.core_t,
            characteristic_t: match side {
                Side::Demand => config.analytics.characteristic_t_demand,
                _ => config.analytics.characteristic_t_supply,
            },
            trend_weighting: config.analytics.trend_weighting,
            grouping: grouping.as_ref(),
        };
        map_side(side, &corpus, &fitted, &settings, &out.map(side))?;
    }
    Ok(())
}

fn align_stage(config: &PipelineConfig, out: &OutputDir) -> Result<()> {
    let supply = load_fitted(&out.model(Side::Supply))?;
    let demand = load_fitted(&out.model(Side::Demand))?;
    let uv = union_vocabulary(&supply.vocab, &demand.vocab);
    let cross = cross_distances(&supply.model, &demand.model, &uv)?;
    let result = alignment_summary(
        &cross,
        config.alignment.threshold,
        config.alignment.top_n,
        config.alignment.echo_rule,
    )?;
    let dir = out.stage(Stage::Align);
    let labels_a = Side::Supply.labels(supply.model.k);
    let labels_b = Side::Demand.labels(demand.model.k);
    write(&dir.join("cross_distances.tsv"), cross.to_tsv(&labels_a, &labels_b))?;
    write(&dir.join("alignment.json"), result.to_json())?;
    log::info!(
        "align: union vocabulary {} terms ({} shared), {} pairs selected, grand mean {}",
        uv.len(),
        uv.shared_count,
        result.pairs.len(),
        fmt_float(result.grand_mean)
    );

    // citation clusters as pseudo-topics, against the supply topics
    let corpus = read_corpus(&out.corpus(Side::Supply))?;
    let assignment = ClusterAssignment::read_tsv(&out.clusters())?;
    let pseudo = cluster_pseudo_topics(&corpus, &assignment, &supply.vocab)?;
    let self_union = union_vocabulary(&supply.vocab, &supply.vocab);
    let pseudo_cross = cross_distances(&pseudo, &supply.model, &self_union)?;
    write(
        &dir.join("cluster_topic_distances.tsv"),
        pseudo_cross.to_tsv(&pseudo.cluster_ids, &labels_a),
    )?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "union_terms": uv.len(),
            "shared_terms": uv.shared_count,
            "supply_vocab_checksum": uv.checksum_a,
            "demand_vocab_checksum": uv.checksum_b,
            "pairs_selected": result.pairs.len(),
            "grand_mean": result.grand_mean,
            "pseudo_topic_clusters": pseudo.cluster_ids.len(),
            "pseudo_topic_clusters_omitted": pseudo.omitted,
        }),
    )
}

pub fn read_alignment(out: &OutputDir) -> Result<AlignmentResult> {
    let path = out.stage(Stage::Align).join("alignment.json");
    serde_json::from_str(&table::read_to_string(&path)?).map_err(|e| Error::Parse {
        path,
        line: e.line(),
        message: e.to_string(),
    })
}

/// The two rows with the smallest mean, ties by index.
fn closest_rows(means: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
    order.truncate(2);
    order.sort_unstable();
    order
}

fn zoom_stage(config: &PipelineConfig, out: &OutputDir) -> Result<()> {
    let zoom = &config.zoom;
    if !zoom.enabled {
        log::info!("zoom disabled");
        return Ok(());
    }
    let topics: BTreeSet<usize> = match &zoom.topics {
        Some(t) => t.iter().copied().collect(),
        None => closest_rows(&read_alignment(out)?.row_means).into_iter().collect(),
    };
    let corpus = read_corpus(&out.corpus(Side::Supply))?;
    let supply = TopicModel::load(&out.model(Side::Supply))?;
    let sub = extract_subcorpus(&corpus, &supply.theta, &topics, zoom.threshold)?;
    log::info!("zoom: {}", sub.provenance_note);
    let dir = out.stage(Stage::Zoom);
    write_json(
        &dir.join("summary.json"),
        &json!({
            "parent_topics": topics.iter().map(|&t| Side::Supply.labels(t + 1).pop()).collect::<Vec<_>>(),
            "threshold": zoom.threshold,
            "documents": sub.len(),
            "parent_documents": corpus.len(),
            "provenance": sub.provenance_note,
        }),
    )?;
    sub.write_jsonl(&out.corpus(Side::Zoom))?;
    fit_corpus(&sub, &stoplist(config)?, &zoom.model, &out.model(Side::Zoom))?;
    let fitted = load_fitted(&out.model(Side::Zoom))?;
    let grouping = grouping(config)?;
    let settings = MapSettings {
        relevance: &config.relevance,
        cooccurrence_t: config.analytics.cooccurrence_t,
        core_t: config.analytics.core_t,
        characteristic_t: zoom.characteristic_t,
        trend_weighting: config.analytics.trend_weighting,
        grouping: grouping.as_ref(),
    };
    map_side(Side::Zoom, &sub, &fitted, &settings, &out.map(Side::Zoom))
}

/// Parses `layout.tsv`. Stress and eigenvalues are not stored there.
pub fn read_layout(path: &Path) -> Result<(Vec<String>, Layout)> {
    let (labels, rows) = table::parse_dense_tsv(path, true)?;
    if rows.iter().any(|r| r.len() != 3) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected columns x, y, size".into(),
        });
    }
    let layout = Layout {
        coords: rows.iter().map(|r| (r[0], r[1])).collect(),
        sizes: rows.iter().map(|r| r[2]).collect(),
        stress: 0.0,
        eigenvalues: [0.0, 0.0],
    };
    Ok((labels, layout))
}

/// Parses `relevance.tsv` into per-label term lists.
pub fn read_relevance(path: &Path, labels: &[String]) -> Result<Vec<Vec<(String, f64)>>> {
    let text = table::read_to_string(path)?;
    let mut out = vec![Vec::new(); labels.len()];
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split('\t').collect();
        let parsed = (fields.len() == 4)
            .then(|| {
                let k = labels.iter().position(|l| l == fields[0])?;
                let score: f64 = fields[3].parse().ok()?;
                Some((k, fields[2].to_string(), score))
            })
            .flatten();
        let Some((k, term, score)) = parsed else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected topic, rank, term, score".into(),
            });
        };
        out[k].push((term, score));
    }
    Ok(out)
}

fn report_stage(config: &PipelineConfig, out: &OutputDir) -> Result<()> {
    let dir = out.stage(Stage::Report);
    let mut sides = vec![Side::Supply, Side::Demand];
    if config.zoom.enabled {
        sides.push(Side::Zoom);
    }
    let mut maps = Vec::new();
    for side in sides {
        let map_dir = out.map(side);
        let (labels, layout) = read_layout(&map_dir.join("layout.tsv"))?;
        let terms = read_relevance(&map_dir.join("relevance.tsv"), &labels)?;
        if config.reports.maps {
            let title = match side {
                Side::Supply => "Science topic map",
                Side::Demand => "Policy question topic map",
                Side::Zoom => "Sub-corpus topic map",
            };
            report::emit_map(&dir, &format!("{}_map", side.name()), title, &layout, &labels, None, &terms)?;
        }
        maps.push((labels, layout, terms));
    }
    if config.reports.alignment {
        let result = read_alignment(out)?;
        let (a, b) = (&maps[0], &maps[1]);
        report::emit_alignment_report(
            &dir,
            &result,
            report::MapSide { labels: &a.0, layout: &a.1, terms: &a.2 },
            report::MapSide { labels: &b.0, layout: &b.1, terms: &b.2 },
        )?;
    }
    Ok(())
}

fn run_stage(stage: Stage, config: &PipelineConfig, out: &OutputDir) -> CliResult<()> {
    log::info!("stage {stage}");
    let result = match stage {
        Stage::Ingest => ingest(config, out),
        Stage::Delineate => delineate(config, out),
        Stage::Fit => fit_stage(config, out),
        Stage::Map => map_stage(config, out),
        Stage::Align => align_stage(config, out),
        Stage::Zoom => zoom_stage(config, out),
        Stage::Report => report_stage(config, out),
    };
    result.stage(stage.name())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Manifest {
    pub status: String,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub stages: Vec<String>,
    pub files: Vec<ManifestEntry>,
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<ManifestEntry>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("walk stays under root");
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            if rel == "manifest.json" {
                continue;
            }
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            out.push(ManifestEntry {
                path: rel,
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            });
        }
    }
    Ok(())
}

/// Lists every file under the output directory with its checksum.
pub fn write_manifest(out: &OutputDir, stages: &[Stage], failure: Option<&CliError>) -> Result<Manifest> {
    let mut files = Vec::new();
    if out.root.is_dir() {
        collect_files(&out.root, &out.root, &mut files)?;
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        status: if failure.is_some() { "FAILED" } else { "ok" }.to_string(),
        failed_stage: failure.and_then(|e| e.stage().map(String::from)),
        error: failure.map(ToString::to_string),
        stages: stages.iter().map(|s| s.name().to_string()).collect(),
        files,
    };
    write_json(&out.manifest(), &manifest)?;
    Ok(manifest)
}

/// Runs `stages` in order and writes the manifest, also on failure.
pub fn run_stages(config: &PipelineConfig, stages: &[Stage]) -> CliResult<Manifest> {
    config.validate()?;
    let out = OutputDir::new(&config.paths.output_dir);
    fs::create_dir_all(&out.root).map_err(|e| {
        CliError::config(format!("cannot create output directory {}: {e}", out.root.display()))
    })?;
    let mut done = Vec::new();
    for &stage in stages {
        if let Err(err) = run_stage(stage, config, &out) {
            log::error!("{err}");
            done.push(stage);
            write_manifest(&out, &done, Some(&err)).stage("manifest")?;
            return Err(err);
        }
        done.push(stage);
    }
    write_manifest(&out, &done, None).stage("manifest")
}

/// Full pipeline from `from` to the report stage.
pub fn run_pipeline(config: &PipelineConfig, from: Stage) -> CliResult<Manifest> {
    let stages: Vec<Stage> = Stage::ALL.into_iter().filter(|&s| s >= from).collect();
    run_stages(config, &stages)
}
