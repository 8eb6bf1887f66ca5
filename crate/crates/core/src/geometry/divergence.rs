use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table;
use crate::topicmodel::TopicModel;

/// Allowed deviation of a probability vector's sum from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    SquareIntra,
    RectCross,
}

/// Row-major matrix of Jensen–Shannon divergences in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<Vec<f64>>,
    pub kind: DistanceKind,
}

impl DistanceMatrix {
    pub fn new(values: Vec<Vec<f64>>, kind: DistanceKind) -> Result<Self> {
        let rows = values.len();
        let cols = values.first().map_or(0, Vec::len);
        if values.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged distance matrix".into()));
        }
        if values.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("distances must lie in [0, 1]"));
        }
        let m = DistanceMatrix {
            rows,
            cols,
            values,
            kind,
        };
        if kind == DistanceKind::SquareIntra {
            m.check_square_symmetric()?;
        }
        Ok(m)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub(crate) fn check_square_symmetric(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::invalid(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        for i in 0..self.rows {
            if self.values[i][i].abs() > SYMMETRY_TOLERANCE {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if (self.values[i][j] - self.values[j][i]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::invalid(format!(
                        "distance matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// TSV with a header row of column labels and a leading label column.
    pub fn to_tsv(&self, row_labels: &[String], col_labels: &[String]) -> String {
        table::dense_tsv("topic", col_labels, Some(row_labels), &self.values)
    }
}

/// Checks that `p` is a probability vector: finite, nonnegative entries summing
/// to one within [`NORMALIZATION_TOLERANCE`].
pub fn check_distribution(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::invalid("probability entries must be finite and nonnegative"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::invalid(format!("probability vector sums to {sum}")));
    }
    Ok(())
}

/// Jensen–Shannon divergence with base-2 logarithms, so the result lies in
/// `[0, 1]`. Zero-probability terms contribute nothing.
pub fn js_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    Ok(js_unchecked(p, q))
}

pub(crate) fn js_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        let part = |x: f64| if x > 0.0 { x * (x / m).log2() } else { 0.0 };
        // summed pairwise so that swapping p and q gives identical bits
        acc += part(a) + part(b);
    }
    (0.5 * acc).clamp(0.0, 1.0)
}

/// Pairwise divergences between the rows of `rows`.
pub fn rows_distance_matrix(rows: &[Vec<f64>]) -> Result<DistanceMatrix> {
    for r in rows {
        check_distribution(r)?;
        if r.len() != rows[0].len() {
            return Err(Error::DimensionMismatch("rows differ in length".into()));
        }
    }
    let n = rows.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let d = js_unchecked(&rows[i], &rows[j]);
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    DistanceMatrix::new(values, DistanceKind::SquareIntra)
}

/// K×K divergences between the topic–term rows of `model`.
pub fn topic_distance_matrix(model: &TopicModel) -> Result<DistanceMatrix> {
    if model.k < 2 {
        return Err(Error::invalid("topic distances need at least two topics"));
    }
    rows_distance_matrix(&model.phi)
}
