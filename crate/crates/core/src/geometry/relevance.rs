use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topicmodel::TopicModel;
use crate::vocab::{DocTermMatrix, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelevanceConfig {
    pub lambda: f64,
    pub top_n: usize,
}

impl Default for RelevanceConfig {
    fn default() -> Self {
        RelevanceConfig {
            lambda: 0.6,
            top_n: 20,
        }
    }
}

impl RelevanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if self.top_n == 0 {
            return Err(Error::invalid("top_n must be at least 1"));
        }
        Ok(())
    }
}

/// Empirical corpus probability of each term (token counts normalized).
pub fn term_probabilities(matrix: &DocTermMatrix) -> Vec<f64> {
    let totals = matrix.term_totals();
    let sum: u64 = totals.iter().sum();
    totals
        .iter()
        .map(|&c| if sum == 0 { 0.0 } else { c as f64 / sum as f64 })
        .collect()
}

/// `λ·ln φ_w + (1−λ)·ln(φ_w / p_w)` per term; `None` where `p_w` or `φ_w` is
/// zero.
pub fn relevance_scores(phi_row: &[f64], marginal: &[f64], lambda: f64) -> Vec<Option<f64>> {
    phi_row
        .iter()
        .zip(marginal)
        .map(|(&phi, &p)| {
            (phi > 0.0 && p > 0.0).then(|| lambda * phi.ln() + (1.0 - lambda) * (phi / p).ln())
        })
        .collect()
}

/// The `top_n` most relevant terms of topic `k`, best first. Equal scores
/// keep vocabulary order.
pub fn relevant_terms(
    model: &TopicModel,
    matrix: &DocTermMatrix,
    vocab: &Vocabulary,
    k: usize,
    config: &RelevanceConfig,
) -> Result<Vec<(String, f64)>> {
    config.validate()?;
    if k >= model.k {
        return Err(Error::invalid(format!(
            "topic index {k} out of range for {} topics",
            model.k
        )));
    }
    if model.n_terms() != matrix.n_terms() || vocab.len() != matrix.n_terms() {
        return Err(Error::DimensionMismatch(
            "model, matrix and vocabulary disagree on the term count".into(),
        ));
    }
    let marginal = term_probabilities(matrix);
    let scores = relevance_scores(&model.phi[k], &marginal, config.lambda);
    let mut ranked: Vec<(usize, f64)> = scores
        .into_iter()
        .enumerate()
        .filter_map(|(w, s)| s.map(|s| (w, s)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked
        .into_iter()
        .take(config.top_n)
        .map(|(w, s)| (vocab.term(w).to_string(), s))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_scores() {
        let phi = [0.4, 0.3, 0.2, 0.1];
        let p = [0.1, 0.4, 0.25, 0.25];
        let s = relevance_scores(&phi, &p, 0.6);
        let expect = |f: f64, q: f64| 0.6 * f.ln() + 0.4 * (f / q).ln();
        for i in 0..4 {
            assert!((s[i].unwrap() - expect(phi[i], p[i])).abs() < 1e-15);
        }
        // 0.6 ln 0.4 + 0.4 ln 4 = -0.549774 + 0.554518
        assert!((s[0].unwrap() - 0.004744).abs() < 1e-6);
    }

    #[test]
    fn lambda_one_is_log_phi() {
        let phi = [0.4, 0.3, 0.2, 0.1];
        let s = relevance_scores(&phi, &[0.7, 0.1, 0.1, 0.1], 1.0);
        for i in 0..4 {
            assert_eq!(s[i].unwrap(), phi[i].ln());
        }
    }

    #[test]
    fn zero_marginal_is_skipped() {
        let s = relevance_scores(&[0.5, 0.5], &[1.0, 0.0], 0.6);
        assert!(s[0].is_some() && s[1].is_none());
    }

    #[test]
    fn config_validation() {
        assert!(RelevanceConfig { lambda: 1.2, top_n: 3 }.validate().is_err());
        assert!(RelevanceConfig { lambda: 0.5, top_n: 0 }.validate().is_err());
        assert!(RelevanceConfig::default().validate().is_ok());
    }
}
