//! Corpus-level readings of a fitted model: topic co-occurrence, document
//! specialization, characteristic documents, temporal trends, category
//! profiles, sub-corpus extraction and citation-cluster pseudo-topics.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::align::TopicTerms;
use crate::corpus::Corpus;
use crate::delineation::ClusterAssignment;
use crate::error::{Error, Result};
use crate::table;
use crate::vocab::{DocTermMatrix, Vocabulary};

pub const UNCLASSIFIED: &str = "unclassified";

fn check_threshold(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!("threshold {t} outside (0, 1)")));
    }
    Ok(())
}

fn check_rows(theta: &[Vec<f64>], matrix: &DocTermMatrix) -> Result<()> {
    if theta.len() != matrix.n_docs() {
        return Err(Error::DimensionMismatch(format!(
            "{} theta rows but {} documents",
            theta.len(),
            matrix.n_docs()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceEdge {
    pub i: usize,
    pub j: usize,
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceGraph {
    pub nodes: Vec<usize>,
    pub edges: Vec<CooccurrenceEdge>,
    pub threshold_used: f64,
}

impl CooccurrenceGraph {
    pub fn to_tsv(&self, labels: &[String]) -> String {
        let mut out = String::from("i\tj\tweight\n");
        for e in &self.edges {
            out.push_str(&format!("{}\t{}\t{}\n", labels[e.i], labels[e.j], e.weight));
        }
        out
    }
}

/// Counts, for every topic pair, the documents holding both topics at weight
/// `t` or more. Edges with no such document are omitted.
pub fn cooccurrence_graph(theta: &[Vec<f64>], t: f64) -> Result<CooccurrenceGraph> {
    check_threshold(t)?;
    let k = theta.first().map_or(0, Vec::len);
    let mut counts = vec![0usize; k * k];
    for row in theta {
        let members: Vec<usize> = (0..k).filter(|&i| row[i] >= t).collect();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                counts[i * k + j] += 1;
            }
        }
    }
    let edges = (0..k)
        .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
        .filter(|&(i, j)| counts[i * k + j] > 0)
        .map(|(i, j)| CooccurrenceEdge {
            i,
            j,
            weight: counts[i * k + j],
        })
        .collect();
    Ok(CooccurrenceGraph {
        nodes: (0..k).collect(),
        edges,
        threshold_used: t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecializationStats {
    pub documents: usize,
    /// Share of documents whose heaviest topic exceeds 0.75.
    pub frac_above_075: f64,
    /// Share of documents whose heaviest topic exceeds 0.5.
    pub frac_above_05: f64,
    pub core_threshold: f64,
    /// Documents per topic with weight above `core_threshold`.
    pub core_sizes: Vec<usize>,
}

/// Specialization of the nonempty documents (those with `n_d > 0`).
pub fn specialization_stats(
    theta: &[Vec<f64>],
    doc_lengths: &[usize],
    core_threshold: f64,
) -> Result<SpecializationStats> {
    if theta.len() != doc_lengths.len() {
        return Err(Error::DimensionMismatch("theta and lengths differ".into()));
    }
    check_threshold(core_threshold)?;
    let k = theta.first().map_or(0, Vec::len);
    let mut docs = 0;
    let (mut above_075, mut above_05) = (0, 0);
    let mut core_sizes = vec![0; k];
    for (row, &n) in theta.iter().zip(doc_lengths) {
        if n == 0 {
            continue;
        }
        docs += 1;
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        above_075 += usize::from(max > 0.75);
        above_05 += usize::from(max > 0.5);
        for (c, &w) in core_sizes.iter_mut().zip(row) {
            *c += usize::from(w > core_threshold);
        }
    }
    let frac = |n: usize| if docs == 0 { 0.0 } else { n as f64 / docs as f64 };
    Ok(SpecializationStats {
        documents: docs,
        frac_above_075: frac(above_075),
        frac_above_05: frac(above_05),
        core_threshold,
        core_sizes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicDocs {
    pub threshold: f64,
    /// Per topic, `(doc_index, weight)` by descending weight.
    pub lists: Vec<Vec<(usize, f64)>>,
    /// Share of all documents listed under at least one topic.
    pub coverage: f64,
}

/// Documents whose weight on a topic exceeds `t`, listed under that topic.
pub fn characteristic_documents(theta: &[Vec<f64>], t: f64) -> Result<CharacteristicDocs> {
    check_threshold(t)?;
    let k = theta.first().map_or(0, Vec::len);
    let mut lists = vec![Vec::new(); k];
    let mut covered = 0;
    for (d, row) in theta.iter().enumerate() {
        let mut any = false;
        for (topic, &w) in row.iter().enumerate() {
            if w > t {
                lists[topic].push((d, w));
                any = true;
            }
        }
        covered += usize::from(any);
    }
    for list in &mut lists {
        list.sort_by(|a: &(usize, f64), b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    }
    Ok(CharacteristicDocs {
        threshold: t,
        lists,
        coverage: if theta.is_empty() {
            0.0
        } else {
            covered as f64 / theta.len() as f64
        },
    })
}

impl CharacteristicDocs {
    /// `topic, doc_id, weight, title` rows.
    pub fn to_tsv(&self, labels: &[String], corpus: &Corpus) -> String {
        let mut out = String::from("topic\tdoc_id\tweight\ttitle\n");
        for (k, list) in self.lists.iter().enumerate() {
            for &(d, w) in list {
                let doc = &corpus.documents[d];
                let title = doc.title.replace(['\t', '\n', '\r'], " ");
                out.push_str(&format!("{}\t{}\t{}\t{}\n", labels[k], doc.id, table::fmt_float(w), title));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendWeighting {
    /// Documents weighted by their token count.
    #[default]
    Tokens,
    /// Every document counts once.
    Documents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendTable {
    pub years: Vec<i32>,
    /// `weights[y][k]`: share of topic k in year y.
    pub weights: Vec<Vec<f64>>,
    /// Token totals per year (document counts under document weighting).
    pub totals: Vec<f64>,
    /// `(w_yk − w_0k) / w_0k` relative to the first year.
    pub relative_change: Vec<Vec<f64>>,
    /// Documents left out for lacking a year or tokens.
    pub excluded: usize,
    pub weighting: TrendWeighting,
}

impl TrendTable {
    pub fn to_tsv(&self, labels: &[String]) -> String {
        let mut header = vec!["total".to_string()];
        header.extend(labels.iter().cloned());
        let years: Vec<String> = self.years.iter().map(|y| y.to_string()).collect();
        let rows: Vec<Vec<f64>> = self
            .weights
            .iter()
            .zip(&self.totals)
            .map(|(w, &t)| std::iter::once(t).chain(w.iter().copied()).collect())
            .collect();
        table::dense_tsv("year", &header, Some(&years), &rows)
    }

    pub fn relative_change_tsv(&self, labels: &[String]) -> String {
        let years: Vec<String> = self.years.iter().map(|y| y.to_string()).collect();
        table::dense_tsv("year", labels, Some(&years), &self.relative_change)
    }
}

/// Topic shares per year. Documents without a year, and documents without
/// tokens, are excluded and counted.
pub fn temporal_trends(
    theta: &[Vec<f64>],
    matrix: &DocTermMatrix,
    years: &[Option<i32>],
    weighting: TrendWeighting,
) -> Result<TrendTable> {
    check_rows(theta, matrix)?;
    if years.len() != theta.len() {
        return Err(Error::DimensionMismatch("years and theta differ".into()));
    }
    let k = theta.first().map_or(0, Vec::len);
    let mut by_year: BTreeMap<i32, (Vec<f64>, f64)> = BTreeMap::new();
    let mut excluded = 0;
    for ((row, &n), year) in theta.iter().zip(matrix.doc_lengths()).zip(years) {
        let Some(y) = *year else {
            excluded += 1;
            continue;
        };
        if n == 0 {
            excluded += 1;
            continue;
        }
        let mass = match weighting {
            TrendWeighting::Tokens => n as f64,
            TrendWeighting::Documents => 1.0,
        };
        let entry = by_year.entry(y).or_insert_with(|| (vec![0.0; k], 0.0));
        for (acc, &w) in entry.0.iter_mut().zip(row) {
            *acc += mass * w;
        }
        entry.1 += mass;
    }
    if by_year.is_empty() {
        return Err(Error::invalid("no documents with a year and tokens"));
    }
    let years: Vec<i32> = by_year.keys().copied().collect();
    let (weights, totals): (Vec<Vec<f64>>, Vec<f64>) = by_year
        .into_values()
        .map(|(sums, total)| (sums.iter().map(|s| s / total).collect(), total))
        .unzip();
    let first = weights[0].clone();
    let relative_change = weights
        .iter()
        .map(|w| w.iter().zip(&first).map(|(x, f)| (x - f) / f).collect())
        .collect();
    Ok(TrendTable {
        years,
        weights,
        totals,
        relative_change,
        excluded,
        weighting,
    })
}

/// Category code → group name. Codes not listed fall into
/// [`UNCLASSIFIED`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryGrouping {
    map: BTreeMap<String, String>,
}

impl CategoryGrouping {
    pub fn new(map: BTreeMap<String, String>) -> Self {
        CategoryGrouping { map }
    }

    /// Reads a headerless two-column TSV `category<TAB>group`.
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = table::read_to_string(path)?;
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (cat, group) = line.split_once('\t').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected category<TAB>group".into(),
            })?;
            map.insert(cat.to_string(), group.to_string());
        }
        Ok(CategoryGrouping { map })
    }

    pub fn group_of<'a>(&'a self, category: &'a str) -> &'a str {
        self.map.get(category).map_or(UNCLASSIFIED, String::as_str)
    }

    pub fn to_tsv(&self) -> String {
        self.map.iter().map(|(c, g)| format!("{c}\t{g}\n")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMatrix {
    pub groups: Vec<String>,
    /// `rows[k][g]`: share of topic k's mass in group g.
    pub rows: Vec<Vec<f64>>,
    /// Share of the whole corpus mass in each group.
    pub overall: Vec<f64>,
}

impl ProfileMatrix {
    pub fn to_tsv(&self, labels: &[String]) -> String {
        let mut row_labels = labels.to_vec();
        row_labels.push("overall".to_string());
        let mut rows = self.rows.clone();
        rows.push(self.overall.clone());
        table::dense_tsv("topic", &self.groups, Some(&row_labels), &rows)
    }
}

/// Fractional category profile of every topic: document d with m categories
/// adds `n_d θ_dk / m` to each of its (topic, group) cells.
pub fn category_profiles(
    theta: &[Vec<f64>],
    matrix: &DocTermMatrix,
    doc_categories: &[Vec<String>],
    grouping: &CategoryGrouping,
) -> Result<ProfileMatrix> {
    check_rows(theta, matrix)?;
    if doc_categories.len() != theta.len() {
        return Err(Error::DimensionMismatch("categories and theta differ".into()));
    }
    let k = theta.first().map_or(0, Vec::len);
    let mut mass: Vec<BTreeMap<&str, f64>> = vec![BTreeMap::new(); k];
    for ((row, &n), cats) in theta.iter().zip(matrix.doc_lengths()).zip(doc_categories) {
        if n == 0 {
            continue;
        }
        let groups: Vec<&str> = if cats.is_empty() {
            vec![UNCLASSIFIED]
        } else {
            cats.iter().map(|c| grouping.group_of(c)).collect()
        };
        let share = n as f64 / groups.len() as f64;
        for (topic, &w) in row.iter().enumerate() {
            for g in &groups {
                *mass[topic].entry(g).or_default() += share * w;
            }
        }
    }
    let groups: Vec<String> = mass
        .iter()
        .flat_map(|m| m.keys().map(|g| g.to_string()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if groups.is_empty() {
        return Err(Error::invalid("no document with tokens to profile"));
    }
    let cells: Vec<Vec<f64>> = mass
        .iter()
        .map(|m| groups.iter().map(|g| m.get(g.as_str()).copied().unwrap_or(0.0)).collect())
        .collect();
    let totals: Vec<f64> = (0..groups.len())
        .map(|g| cells.iter().map(|r| r[g]).sum())
        .collect();
    let grand: f64 = totals.iter().sum();
    let rows = cells
        .iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|x| x / s).collect()
        })
        .collect();
    Ok(ProfileMatrix {
        groups,
        rows,
        overall: totals.iter().map(|t| t / grand).collect(),
    })
}

/// Documents whose weight on any of `topics` exceeds `t`, in corpus order.
pub fn extract_subcorpus(
    corpus: &Corpus,
    theta: &[Vec<f64>],
    topics: &BTreeSet<usize>,
    t: f64,
) -> Result<Corpus> {
    check_threshold(t)?;
    if topics.is_empty() {
        return Err(Error::invalid("no topics selected"));
    }
    if theta.len() != corpus.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} theta rows but {} documents",
            theta.len(),
            corpus.len()
        )));
    }
    let k = theta.first().map_or(0, Vec::len);
    if let Some(&bad) = topics.iter().find(|&&i| i >= k) {
        return Err(Error::invalid(format!("topic {bad} out of range for {k} topics")));
    }
    let documents: Vec<_> = corpus
        .documents
        .iter()
        .zip(theta)
        .filter(|(_, row)| topics.iter().any(|&i| row[i] > t))
        .map(|(d, _)| d.clone())
        .collect();
    if documents.is_empty() {
        log::warn!("sub-corpus selection at t = {t} is empty");
    }
    let fraction = if corpus.is_empty() {
        0.0
    } else {
        documents.len() as f64 / corpus.len() as f64
    };
    let topic_list: Vec<String> = topics.iter().map(|i| i.to_string()).collect();
    Ok(Corpus {
        name: format!("{}-sub", corpus.name),
        provenance_note: format!(
            "sub-corpus of {}: topics [{}] with weight > {}, {} of {} documents ({:.2}%)",
            if corpus.name.is_empty() { "corpus" } else { &corpus.name },
            topic_list.join(", "),
            t,
            documents.len(),
            corpus.len(),
            100.0 * fraction
        ),
        documents,
    })
}

/// Aggregated term distributions of citation clusters, usable wherever a
/// fitted model's topics are.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoTopics {
    pub cluster_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Clusters dropped because their members have no in-vocabulary token.
    pub omitted: Vec<String>,
    pub vocab_checksum: String,
}

impl TopicTerms for PseudoTopics {
    fn topic_rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn vocab_checksum(&self) -> &str {
        &self.vocab_checksum
    }
}

/// One normalized term-count row per cluster, over the corpus documents
/// assigned to it. Clusters come out in canonical id order.
pub fn cluster_pseudo_topics(
    corpus: &Corpus,
    assignment: &ClusterAssignment,
    vocab: &Vocabulary,
) -> Result<PseudoTopics> {
    let mut counts: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for doc in &corpus.documents {
        let Some(cluster) = assignment.cluster_of(&doc.id) else {
            continue;
        };
        let row = counts
            .entry(cluster)
            .or_insert_with(|| vec![0; vocab.len()]);
        for token in doc.tokens() {
            if let Some(t) = vocab.index_of(&token) {
                row[t] += 1;
            }
        }
    }
    let mut cluster_ids = Vec::new();
    let mut rows = Vec::new();
    let mut omitted = Vec::new();
    for (cluster, row) in counts {
        let total: u64 = row.iter().sum();
        if total == 0 {
            omitted.push(cluster.to_string());
            continue;
        }
        cluster_ids.push(cluster.to_string());
        rows.push(row.iter().map(|&c| c as f64 / total as f64).collect());
    }
    if rows.is_empty() {
        return Err(Error::invalid(
            "no assigned document has in-vocabulary tokens",
        ));
    }
    if !omitted.is_empty() {
        log::info!("{} cluster(s) without in-vocabulary tokens omitted", omitted.len());
    }
    Ok(PseudoTopics {
        cluster_ids,
        rows,
        omitted,
        vocab_checksum: vocab.checksum(),
    })
}
