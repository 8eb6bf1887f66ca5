//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.
//!
//! The sampler runs a single chain from a seeded ChaCha stream. Every token's
//! topic is resampled from
//!
//! ```text
//! p(z = k) ∝ (n_dk + α) · (n_kw + β) / (n_k + V·β)
//! ```
//!
//! with the token's own assignment removed from the counts, and the point
//! estimates of θ and φ are read off the final sweep. Sweeps visit documents
//! and tokens in a fixed order, so identical inputs and seed give a
//! bit-identical model.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table;
use crate::vocab::DocTermMatrix;

/// Sweeps between two log-likelihood evaluations.
pub const LOGLIK_EVERY: usize = 10;
pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_BETA: f64 = 0.01;

/// Symmetric Dirichlet concentrations for θ (`alpha_dir`) and φ (`beta_dir`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub alpha_dir: f64,
    pub beta_dir: f64,
}

impl Priors {
    /// `alpha_dir = 50 / K`, `beta_dir = 0.01`.
    pub fn default_for(topics: usize) -> Self {
        Priors {
            alpha_dir: 50.0 / topics.max(1) as f64,
            beta_dir: DEFAULT_BETA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha_dir", self.alpha_dir), ("beta_dir", self.beta_dir)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    /// K rows over the V vocabulary terms.
    pub phi: Vec<Vec<f64>>,
    /// D rows over the K topics.
    pub theta: Vec<Vec<f64>>,
    pub priors: Priors,
    pub seed: u64,
    pub iterations: usize,
    pub vocab_checksum: String,
    /// `(sweep, log-likelihood)` pairs, sweeps counted from 1.
    pub loglik_trace: Vec<(usize, f64)>,
    /// Final topic of every token, documents in order and tokens grouped by
    /// ascending term index. Not persisted.
    pub assignments: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelMeta {
    k: usize,
    n_docs: usize,
    n_terms: usize,
    priors: Priors,
    seed: u64,
    iterations: usize,
    vocab_checksum: String,
    loglik_trace: Vec<(usize, f64)>,
}

/// Corpus share of each topic.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicWeights {
    pub weights: Vec<f64>,
}

struct Counts {
    k: usize,
    v: usize,
    doc_topic: Vec<u32>,
    // term-major so the K counts for one term are contiguous
    term_topic: Vec<u32>,
    topic_total: Vec<u32>,
}

impl Counts {
    fn estimates(&self, lengths: &[usize], priors: Priors) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (k, v) = (self.k, self.v);
        let beta_sum = v as f64 * priors.beta_dir;
        let phi = (0..k)
            .map(|t| {
                let denom = self.topic_total[t] as f64 + beta_sum;
                (0..v)
                    .map(|w| (self.term_topic[w * k + t] as f64 + priors.beta_dir) / denom)
                    .collect()
            })
            .collect();
        let alpha_sum = k as f64 * priors.alpha_dir;
        let theta = lengths
            .iter()
            .enumerate()
            .map(|(d, &n)| {
                if n == 0 {
                    return vec![1.0 / k as f64; k];
                }
                let denom = n as f64 + alpha_sum;
                (0..k)
                    .map(|t| (self.doc_topic[d * k + t] as f64 + priors.alpha_dir) / denom)
                    .collect()
            })
            .collect();
        (phi, theta)
    }
}

/// Fits a K-topic model. Documents without tokens are skipped by the sampler
/// and get a uniform θ row.
pub fn fit(
    matrix: &DocTermMatrix,
    k: usize,
    priors: Priors,
    iterations: usize,
    seed: u64,
) -> Result<TopicModel> {
    if k == 0 {
        return Err(Error::invalid("topic count must be at least 1"));
    }
    if k > u32::MAX as usize {
        return Err(Error::invalid("topic count too large"));
    }
    priors.validate()?;
    if iterations == 0 {
        return Err(Error::invalid("iterations must be at least 1"));
    }
    if matrix.total_tokens() == 0 {
        return Err(Error::invalid("document-term matrix has no nonempty row"));
    }

    let v = matrix.n_terms();
    let lengths = matrix.doc_lengths();
    let mut words: Vec<u32> = Vec::with_capacity(matrix.total_tokens());
    let mut offsets = Vec::with_capacity(matrix.n_docs() + 1);
    offsets.push(0);
    for row in matrix.rows() {
        for &(t, c) in row {
            words.extend(std::iter::repeat_n(t as u32, c as usize));
        }
        offsets.push(words.len());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Counts {
        k,
        v,
        doc_topic: vec![0; matrix.n_docs() * k],
        term_topic: vec![0; v * k],
        topic_total: vec![0; k],
    };
    let mut z: Vec<u32> = Vec::with_capacity(words.len());
    for d in 0..matrix.n_docs() {
        for &w in &words[offsets[d]..offsets[d + 1]] {
            let t = rng.random_range(0..k);
            z.push(t as u32);
            counts.doc_topic[d * k + t] += 1;
            counts.term_topic[w as usize * k + t] += 1;
            counts.topic_total[t] += 1;
        }
    }

    let alpha = priors.alpha_dir;
    let beta = priors.beta_dir;
    let beta_sum = v as f64 * beta;
    let mut cumulative = vec![0.0f64; k];
    let mut trace = Vec::new();

    for sweep in 1..=iterations {
        for d in 0..matrix.n_docs() {
            let doc_counts = d * k;
            for i in offsets[d]..offsets[d + 1] {
                let w = words[i] as usize * k;
                let old = z[i] as usize;
                counts.doc_topic[doc_counts + old] -= 1;
                counts.term_topic[w + old] -= 1;
                counts.topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (counts.doc_topic[doc_counts + t] as f64 + alpha)
                        * (counts.term_topic[w + t] as f64 + beta)
                        / (counts.topic_total[t] as f64 + beta_sum);
                    cumulative[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let new = cumulative.partition_point(|&c| c <= u).min(k - 1);

                z[i] = new as u32;
                counts.doc_topic[doc_counts + new] += 1;
                counts.term_topic[w + new] += 1;
                counts.topic_total[new] += 1;
            }
        }
        if sweep % LOGLIK_EVERY == 0 || sweep == iterations {
            let (phi, theta) = counts.estimates(lengths, priors);
            let ll = loglik_unchecked(&phi, &theta, matrix);
            if !ll.is_finite() {
                return Err(Error::Numeric(format!("log-likelihood {ll} at sweep {sweep}")));
            }
            trace.push((sweep, ll));
            log::debug!("sweep {sweep}: log-likelihood {ll:.3}");
        }
    }

    let (phi, theta) = counts.estimates(lengths, priors);
    Ok(TopicModel {
        k,
        phi,
        theta,
        priors,
        seed,
        iterations,
        vocab_checksum: matrix.vocab_checksum().to_string(),
        loglik_trace: trace,
        assignments: Some(z),
    })
}

fn loglik_unchecked(phi: &[Vec<f64>], theta: &[Vec<f64>], matrix: &DocTermMatrix) -> f64 {
    let mut total = 0.0;
    for (d, row) in matrix.rows().iter().enumerate() {
        let th = &theta[d];
        for &(w, c) in row {
            let p: f64 = th.iter().zip(phi).map(|(a, topic)| a * topic[w]).sum();
            total += c as f64 * p.ln();
        }
    }
    total
}

impl TopicModel {
    pub fn n_docs(&self) -> usize {
        self.theta.len()
    }

    pub fn n_terms(&self) -> usize {
        self.phi.first().map_or(0, Vec::len)
    }

    fn check_aligned(&self, matrix: &DocTermMatrix) -> Result<()> {
        if self.n_docs() != matrix.n_docs() || self.n_terms() != matrix.n_terms() {
            return Err(Error::DimensionMismatch(format!(
                "model is {}x{} (docs x terms) but matrix is {}x{}",
                self.n_docs(),
                self.n_terms(),
                matrix.n_docs(),
                matrix.n_terms()
            )));
        }
        Ok(())
    }

    /// Dominant topic of document `d` (lowest index on ties).
    pub fn dominant_topic(&self, d: usize) -> usize {
        argmax(&self.theta[d])
    }

    /// Writes `phi.tsv`, `theta.tsv` and `meta.json` into `dir`. Column and
    /// row headers come from `terms` and `doc_ids`.
    pub fn save(&self, dir: &Path, terms: &[String], doc_ids: &[String]) -> Result<()> {
        if terms.len() != self.n_terms() || doc_ids.len() != self.n_docs() {
            return Err(Error::DimensionMismatch(
                "labels do not match model dimensions".into(),
            ));
        }
        let topic_labels: Vec<String> = (0..self.k).map(|t| t.to_string()).collect();
        let phi = table::dense_tsv("topic", terms, Some(&topic_labels), &self.phi);
        table::write_file(&dir.join("phi.tsv"), phi.as_bytes())?;
        let theta = table::dense_tsv("doc_id", &topic_labels, Some(doc_ids), &self.theta);
        table::write_file(&dir.join("theta.tsv"), theta.as_bytes())?;
        let meta = ModelMeta {
            k: self.k,
            n_docs: self.n_docs(),
            n_terms: self.n_terms(),
            priors: self.priors,
            seed: self.seed,
            iterations: self.iterations,
            vocab_checksum: self.vocab_checksum.clone(),
            loglik_trace: self.loglik_trace.clone(),
        };
        let json = serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n";
        table::write_file(&dir.join("meta.json"), json.as_bytes())
    }

    /// Loads a saved model. Rows are renormalized after parsing to absorb the
    /// nine-digit rounding of the text format.
    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join("meta.json");
        let meta: ModelMeta = serde_json::from_str(&table::read_to_string(&meta_path)?)
            .map_err(|e| Error::Parse {
                path: meta_path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?;
        let (_, mut phi) = table::parse_dense_tsv(&dir.join("phi.tsv"), true)?;
        let (_, mut theta) = table::parse_dense_tsv(&dir.join("theta.tsv"), true)?;
        let shape_ok = phi.len() == meta.k
            && phi.iter().all(|r| r.len() == meta.n_terms)
            && theta.len() == meta.n_docs
            && theta.iter().all(|r| r.len() == meta.k);
        if !shape_ok {
            return Err(Error::DimensionMismatch(format!(
                "saved model in {} does not match meta.json",
                dir.display()
            )));
        }
        for row in phi.iter_mut().chain(theta.iter_mut()) {
            normalize(row)?;
        }
        Ok(TopicModel {
            k: meta.k,
            phi,
            theta,
            priors: meta.priors,
            seed: meta.seed,
            iterations: meta.iterations,
            vocab_checksum: meta.vocab_checksum,
            loglik_trace: meta.loglik_trace,
            assignments: None,
        })
    }
}

pub(crate) fn normalize(row: &mut [f64]) -> Result<()> {
    let sum: f64 = row.iter().sum();
    if !(sum.is_finite() && sum > 0.0) || row.iter().any(|&x| x < 0.0) {
        return Err(Error::Numeric(format!("cannot normalize row with sum {sum}")));
    }
    row.iter_mut().for_each(|x| *x /= sum);
    Ok(())
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Token-weighted mean of θ: `w_k = Σ_d n_d θ_dk / Σ_d n_d`.
pub fn corpus_topic_weights(model: &TopicModel, matrix: &DocTermMatrix) -> Result<TopicWeights> {
    if model.n_docs() != matrix.n_docs() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} documents, matrix {}",
            model.n_docs(),
            matrix.n_docs()
        )));
    }
    let total = matrix.total_tokens();
    if total == 0 {
        return Err(Error::invalid("matrix has no tokens"));
    }
    let mut weights = vec![0.0; model.k];
    for (row, &n) in model.theta.iter().zip(matrix.doc_lengths()) {
        for (w, &p) in weights.iter_mut().zip(row) {
            *w += n as f64 * p;
        }
    }
    weights.iter_mut().for_each(|w| *w /= total as f64);
    Ok(TopicWeights { weights })
}

/// `Σ_tokens ln Σ_k θ_dk φ_kw`.
pub fn log_likelihood(model: &TopicModel, matrix: &DocTermMatrix) -> Result<f64> {
    model.check_aligned(matrix)?;
    Ok(loglik_unchecked(&model.phi, &model.theta, matrix))
}
