//! Seed-corpus expansion through citation micro-clusters.
//!
//! A cluster is pulled into the analysis corpus when the share of its members
//! tagged by the seed query reaches the threshold `alpha` (ties included).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::corpus::{filter_with_text, Corpus};
use crate::error::{Error, Result};
use crate::table;

/// Document → cluster membership.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterAssignment {
    doc_to_cluster: BTreeMap<String, String>,
    members: BTreeMap<String, Vec<String>>,
}

impl ClusterAssignment {
    /// Builds an assignment from `(doc, cluster)` pairs. A document listed
    /// twice with different clusters is an error.
    pub fn from_pairs<I, D, C>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (D, C)>,
        D: Into<String>,
        C: Into<String>,
    {
        let mut assignment = ClusterAssignment::default();
        for (doc, cluster) in pairs {
            let (doc, cluster) = (doc.into(), cluster.into());
            match assignment.doc_to_cluster.get(&doc) {
                Some(existing) if *existing == cluster => continue,
                Some(existing) => {
                    return Err(Error::invalid(format!(
                        "document {doc:?} assigned to both {existing:?} and {cluster:?}"
                    )))
                }
                None => {}
            }
            assignment
                .members
                .entry(cluster.clone())
                .or_default()
                .push(doc.clone());
            assignment.doc_to_cluster.insert(doc, cluster);
        }
        Ok(assignment)
    }

    /// Reads a headerless two-column TSV `doc_id<TAB>cluster_id`.
    pub fn read_tsv(path: &Path) -> Result<Self> {
        let text = table::read_to_string(path)?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            match (fields.next(), fields.next(), fields.next()) {
                (Some(doc), Some(cluster), None) if !doc.is_empty() && !cluster.is_empty() => {
                    pairs.push((doc.to_string(), cluster.to_string()))
                }
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: "expected two tab-separated fields: doc_id, cluster_id".into(),
                    })
                }
            }
        }
        Self::from_pairs(pairs)
    }

    /// Builds an assignment from the `cluster` field of each document.
    pub fn from_corpus(corpus: &Corpus) -> Result<Self> {
        Self::from_pairs(
            corpus
                .documents
                .iter()
                .filter_map(|d| d.cluster_id.as_ref().map(|c| (d.id.clone(), c.clone()))),
        )
    }

    pub fn to_tsv(&self) -> String {
        self.doc_to_cluster
            .iter()
            .map(|(d, c)| format!("{d}\t{c}\n"))
            .collect()
    }

    pub fn cluster_of(&self, doc_id: &str) -> Option<&str> {
        self.doc_to_cluster.get(doc_id).map(String::as_str)
    }

    /// Members of `cluster` in insertion order.
    pub fn members(&self, cluster: &str) -> &[String] {
        self.members.get(cluster).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Cluster ids with their member counts, in canonical order.
    pub fn clusters(&self) -> impl Iterator<Item = (&str, usize)> {
        self.members.iter().map(|(c, m)| (c.as_str(), m.len()))
    }

    pub fn cluster_count(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_to_cluster.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelineationConfig {
    pub alpha: f64,
    pub keep_seed_documents: bool,
}

impl DelineationConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let config = DelineationConfig {
            alpha,
            keep_seed_documents: true,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha {} outside (0, 1]", self.alpha)));
        }
        Ok(())
    }
}

/// Share of seed documents in every cluster. Seeds without a cluster are
/// ignored.
pub fn cluster_seed_fractions(
    assignment: &ClusterAssignment,
    seeds: &BTreeSet<String>,
) -> Result<BTreeMap<String, f64>> {
    if assignment.is_empty() {
        return Err(Error::EmptyAssignment);
    }
    let mut seeded: HashMap<&str, usize> = HashMap::new();
    for id in seeds {
        if let Some(c) = assignment.cluster_of(id) {
            *seeded.entry(c).or_default() += 1;
        }
    }
    Ok(assignment
        .clusters()
        .map(|(c, n)| {
            let s = seeded.get(c).copied().unwrap_or(0);
            (c.to_string(), s as f64 / n as f64)
        })
        .collect())
}

/// Clusters whose seed fraction is at least `alpha`, in canonical order.
pub fn included_clusters(fractions: &BTreeMap<String, f64>, alpha: f64) -> Vec<String> {
    fractions
        .iter()
        .filter(|(_, &f)| f >= alpha)
        .map(|(c, _)| c.clone())
        .collect()
}

/// Seed documents (optionally) plus every member of each cluster reaching
/// `alpha`, restricted to documents with text. Output keeps `full_corpus`
/// order.
pub fn expand_corpus(
    full_corpus: &Corpus,
    seeds: &BTreeSet<String>,
    assignment: &ClusterAssignment,
    config: &DelineationConfig,
) -> Result<Corpus> {
    config.validate()?;
    let fractions = cluster_seed_fractions(assignment, seeds)?;
    let included = included_clusters(&fractions, config.alpha);

    let present: BTreeSet<&str> = full_corpus.ids().collect();
    let mut wanted: BTreeSet<&str> = BTreeSet::new();
    let mut missing = Vec::new();
    for cluster in &included {
        for member in assignment.members(cluster) {
            if present.contains(member.as_str()) {
                wanted.insert(member);
            } else {
                missing.push(member.clone());
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::MissingMembers(missing));
    }
    if config.keep_seed_documents {
        wanted.extend(seeds.iter().map(String::as_str));
    }

    let selected = Corpus {
        name: full_corpus.name.clone(),
        documents: full_corpus
            .documents
            .iter()
            .filter(|d| wanted.contains(d.id.as_str()))
            .cloned()
            .collect(),
        provenance_note: String::new(),
    };
    let mut result = filter_with_text(&selected);
    result.provenance_note = format!(
        "delineated from {} ({} documents): alpha = {}, {} of {} clusters included, keep_seed_documents = {}, {} documents with text",
        if full_corpus.name.is_empty() { "corpus" } else { &full_corpus.name },
        full_corpus.len(),
        config.alpha,
        included.len(),
        assignment.cluster_count(),
        config.keep_seed_documents,
        result.len()
    );
    Ok(result)
}
