//! Cross-corpus topic alignment over a union vocabulary.
//!
//! Each topic of either model is re-expressed as a distribution over the
//! union of both vocabularies, after which every (A-topic, B-topic) pair gets
//! a Jensen–Shannon distance. The rectangular matrix is summarized by its row
//! and column means, a set of selected close pairs, and per-topic "echo"
//! flags marking topics that sit unusually close to the other side as a whole.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_distribution, js_divergence, DistanceKind, DistanceMatrix};
use crate::table;
use crate::topicmodel::TopicModel;
use crate::vocab::Vocabulary;

/// Anything that provides topic–term distributions tied to a vocabulary.
pub trait TopicTerms {
    fn topic_rows(&self) -> &[Vec<f64>];
    fn vocab_checksum(&self) -> &str;
}

impl TopicTerms for TopicModel {
    fn topic_rows(&self) -> &[Vec<f64>] {
        &self.phi
    }

    fn vocab_checksum(&self) -> &str {
        &self.vocab_checksum
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionVocab {
    pub terms: Vec<String>,
    pub map_a: Vec<usize>,
    pub map_b: Vec<usize>,
    pub shared_count: usize,
    pub checksum_a: String,
    pub checksum_b: String,
}

impl UnionVocab {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Sorted union of two canonical vocabularies with source→union index maps.
pub fn union_vocabulary(vocab_a: &Vocabulary, vocab_b: &Vocabulary) -> UnionVocab {
    let (a, b) = (vocab_a.terms(), vocab_b.terms());
    let mut terms = Vec::with_capacity(a.len() + b.len());
    let mut map_a = Vec::with_capacity(a.len());
    let mut map_b = Vec::with_capacity(b.len());
    let (mut i, mut j, mut shared) = (0, 0, 0);
    // merge of two sorted lists
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.cmp(y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, _) => std::cmp::Ordering::Greater,
        };
        let u = terms.len();
        match next {
            std::cmp::Ordering::Less => {
                terms.push(a[i].clone());
                map_a.push(u);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                terms.push(b[j].clone());
                map_b.push(u);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                terms.push(a[i].clone());
                map_a.push(u);
                map_b.push(u);
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    UnionVocab {
        terms,
        map_a,
        map_b,
        shared_count: shared,
        checksum_a: vocab_a.checksum(),
        checksum_b: vocab_b.checksum(),
    }
}

/// Copies the mass of `phi_row` to union positions given by `map`.
pub fn embed_topic(phi_row: &[f64], map: &[usize], union_size: usize) -> Result<Vec<f64>> {
    if phi_row.len() != map.len() {
        return Err(Error::DimensionMismatch(format!(
            "row of length {} but map of length {}",
            phi_row.len(),
            map.len()
        )));
    }
    check_distribution(phi_row)?;
    let mut out = vec![0.0; union_size];
    let mut seen = BTreeSet::new();
    for (&p, &u) in phi_row.iter().zip(map) {
        if u >= union_size {
            return Err(Error::invalid(format!(
                "map target {u} outside union of size {union_size}"
            )));
        }
        if !seen.insert(u) {
            return Err(Error::invalid(format!("map is not injective at {u}")));
        }
        out[u] = p;
    }
    Ok(out)
}

/// Distances between every topic of `a` and every topic of `b`.
pub fn cross_distances(
    a: &impl TopicTerms,
    b: &impl TopicTerms,
    uv: &UnionVocab,
) -> Result<DistanceMatrix> {
    for (model, expected) in [(a.vocab_checksum(), &uv.checksum_a), (b.vocab_checksum(), &uv.checksum_b)] {
        if model != expected {
            return Err(Error::VocabularyMismatch {
                expected: expected.clone(),
                found: model.to_string(),
            });
        }
    }
    let embed_all = |rows: &[Vec<f64>], map: &[usize]| -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| embed_topic(r, map, uv.len())).collect()
    };
    let ea = embed_all(a.topic_rows(), &uv.map_a)?;
    let eb = embed_all(b.topic_rows(), &uv.map_b)?;
    let values = ea
        .iter()
        .map(|p| eb.iter().map(|q| js_divergence(p, q)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    DistanceMatrix::new(values, DistanceKind::RectCross)
}

/// How echo flags are derived from marginal mean distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EchoRule {
    /// Marginal mean strictly below the grand mean of all entries.
    #[default]
    BelowGrandMean,
    /// Marginal mean at or below the first quartile (nearest rank) of the
    /// same side's marginal means.
    LowestQuartile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum PairSelection {
    /// Every entry strictly below the threshold.
    Threshold(f64),
    /// The N smallest entries.
    TopN(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopicPair {
    pub topic_a: usize,
    pub topic_b: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub cross: DistanceMatrix,
    pub row_means: Vec<f64>,
    pub col_means: Vec<f64>,
    pub grand_mean: f64,
    pub selection: PairSelection,
    pub echo_rule: EchoRule,
    pub pairs: Vec<TopicPair>,
    pub echo_a: Vec<bool>,
    pub echo_b: Vec<bool>,
}

impl AlignmentResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("alignment serializes") + "\n"
    }

    /// The cross matrix with each row's mean appended as a last column and
    /// the column means (then the grand mean) as a last row.
    pub fn to_margin_tsv(&self, labels_a: &[String], labels_b: &[String]) -> String {
        let mut header = labels_b.to_vec();
        header.push("mean".to_string());
        let mut rows: Vec<Vec<f64>> = self
            .cross
            .values
            .iter()
            .zip(&self.row_means)
            .map(|(r, &m)| r.iter().copied().chain([m]).collect())
            .collect();
        rows.push(self.col_means.iter().copied().chain([self.grand_mean]).collect());
        let mut row_labels = labels_a.to_vec();
        row_labels.push("mean".to_string());
        table::dense_tsv("topic", &header, Some(&row_labels), &rows)
    }
}

/// Marginal means, selected pairs and echo flags of a cross matrix.
///
/// Pairs are sorted by ascending distance, ties by `(row, col)`. With
/// `top_n` set the N smallest entries are kept regardless of `threshold`.
pub fn alignment_summary(
    cross: &DistanceMatrix,
    threshold: f64,
    top_n: Option<usize>,
    echo_rule: EchoRule,
) -> Result<AlignmentResult> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold {threshold} outside [0, 1]")));
    }
    let (r, c) = (cross.rows, cross.cols);
    if r == 0 || c == 0 {
        return Err(Error::invalid("cross matrix is empty"));
    }
    let row_means: Vec<f64> = cross.values.iter().map(|row| row.iter().sum::<f64>() / c as f64).collect();
    let col_means: Vec<f64> = (0..c)
        .map(|j| cross.values.iter().map(|row| row[j]).sum::<f64>() / r as f64)
        .collect();
    let grand_mean = cross.values.iter().flatten().sum::<f64>() / (r * c) as f64;

    let mut all: Vec<TopicPair> = (0..r)
        .flat_map(|i| {
            (0..c).map(move |j| TopicPair {
                topic_a: i,
                topic_b: j,
                distance: cross.values[i][j],
            })
        })
        .collect();
    all.sort_by(|x, y| {
        x.distance
            .total_cmp(&y.distance)
            .then((x.topic_a, x.topic_b).cmp(&(y.topic_a, y.topic_b)))
    });
    let (selection, pairs) = match top_n {
        Some(n) => (PairSelection::TopN(n), all.into_iter().take(n).collect()),
        None => (
            PairSelection::Threshold(threshold),
            all.into_iter().filter(|p| p.distance < threshold).collect(),
        ),
    };

    let flags = |means: &[f64]| -> Vec<bool> {
        match echo_rule {
            EchoRule::BelowGrandMean => means.iter().map(|&m| m < grand_mean).collect(),
            EchoRule::LowestQuartile => {
                let mut sorted = means.to_vec();
                sorted.sort_by(f64::total_cmp);
                let rank = (sorted.len() as f64 * 0.25).ceil().max(1.0) as usize;
                let q1 = sorted[rank - 1];
                means.iter().map(|&m| m <= q1).collect()
            }
        }
    };
    let echo_a = flags(&row_means);
    let echo_b = flags(&col_means);

    Ok(AlignmentResult {
        cross: cross.clone(),
        row_means,
        col_means,
        grand_mean,
        selection,
        echo_rule,
        pairs,
        echo_a,
        echo_b,
    })
}
