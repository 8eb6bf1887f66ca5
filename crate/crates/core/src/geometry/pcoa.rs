use serde::{Deserialize, Serialize};

use super::divergence::DistanceMatrix;
use super::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::table;
use crate::topicmodel::TopicWeights;

/// Two-dimensional principal-coordinates layout of a set of topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub coords: Vec<(f64, f64)>,
    /// Bubble size per topic, equal to its corpus weight.
    pub sizes: Vec<f64>,
    /// Frobenius norm of the difference between input distances and layout
    /// Euclidean distances.
    pub stress: f64,
    /// The two leading eigenvalues of the double-centered matrix, before
    /// truncation of negatives.
    pub eigenvalues: [f64; 2],
}

impl Layout {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.coords[i], self.coords[j]);
        (a.0 - b.0).hypot(a.1 - b.1)
    }

    /// `topic, x, y, size` rows with a header.
    pub fn to_tsv(&self, labels: &[String]) -> String {
        let mut out = String::from("topic\tx\ty\tsize\n");
        for (i, &(x, y)) in self.coords.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                labels[i],
                table::fmt_float(x),
                table::fmt_float(y),
                table::fmt_float(self.sizes[i])
            ));
        }
        out
    }
}

/// Classical scaling: `B = -½ J D² J`, coordinates from the two leading
/// eigenpairs scaled by `√λ`. Axes with nonpositive eigenvalues collapse to
/// zero, and each axis is flipped so its largest-magnitude coordinate (first
/// one on ties) is positive.
pub fn pcoa_layout(dist: &DistanceMatrix, sizes: &TopicWeights) -> Result<Layout> {
    dist.check_square_symmetric()?;
    let n = dist.rows;
    if sizes.weights.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} topics but {} sizes",
            n,
            sizes.weights.len()
        )));
    }
    if sizes.weights.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
        return Err(Error::invalid("bubble sizes must be positive"));
    }

    let sq: Vec<Vec<f64>> = dist
        .values
        .iter()
        .map(|r| r.iter().map(|d| d * d).collect())
        .collect();
    let row_means: Vec<f64> = sq.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n.max(1) as f64;
    let b: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| -0.5 * (sq[i][j] - row_means[i] - row_means[j] + grand))
                .collect()
        })
        .collect();

    let eig = symmetric_eigen(&b)?;
    let mut axes = [vec![0.0; n], vec![0.0; n]];
    let mut eigenvalues = [0.0; 2];
    for (a, axis) in axes.iter_mut().enumerate() {
        let Some(&lambda) = eig.values.get(a) else {
            continue;
        };
        eigenvalues[a] = lambda;
        if lambda <= 0.0 {
            continue;
        }
        let scale = lambda.sqrt();
        for (x, v) in axis.iter_mut().zip(&eig.vectors[a]) {
            *x = v * scale;
        }
        let mut pivot = 0;
        for (i, x) in axis.iter().enumerate() {
            if x.abs() > axis[pivot].abs() {
                pivot = i;
            }
        }
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|x| *x = -*x);
        }
    }

    let coords: Vec<(f64, f64)> = (0..n).map(|i| (axes[0][i], axes[1][i])).collect();
    if coords.iter().any(|&(x, y)| !(x.is_finite() && y.is_finite())) {
        return Err(Error::Numeric("non-finite layout coordinate".into()));
    }
    let mut layout = Layout {
        coords,
        sizes: sizes.weights.clone(),
        stress: 0.0,
        eigenvalues,
    };
    let mut stress = 0.0;
    for i in 0..n {
        for j in 0..n {
            let diff = dist.values[i][j] - layout.distance(i, j);
            stress += diff * diff;
        }
    }
    layout.stress = stress.sqrt();
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DistanceKind;

    fn weights(n: usize) -> TopicWeights {
        TopicWeights {
            weights: vec![1.0 / n as f64; n],
        }
    }

    #[test]
    fn two_points_on_a_line() {
        let d = DistanceMatrix::new(vec![vec![0.0, 0.4], vec![0.4, 0.0]], DistanceKind::SquareIntra)
            .unwrap();
        let l = pcoa_layout(&d, &weights(2)).unwrap();
        let xs = [l.coords[0].0, l.coords[1].0];
        assert!((xs[0].abs() - 0.2).abs() < 1e-12 && (xs[1].abs() - 0.2).abs() < 1e-12);
        assert!(xs[0] * xs[1] < 0.0);
        assert!(l.coords.iter().all(|c| c.1 == 0.0));
        assert!(l.stress < 1e-12);
    }

    #[test]
    fn equilateral_triangle() {
        let d = DistanceMatrix::new(
            vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
            DistanceKind::SquareIntra,
        )
        .unwrap();
        let l = pcoa_layout(&d, &weights(3)).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((l.distance(i, j) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn sign_convention_makes_largest_positive() {
        let d = DistanceMatrix::new(
            vec![vec![0.0, 0.1, 0.9], vec![0.1, 0.0, 0.8], vec![0.9, 0.8, 0.0]],
            DistanceKind::SquareIntra,
        )
        .unwrap();
        let l = pcoa_layout(&d, &weights(3)).unwrap();
        let max_x = l.coords.iter().map(|c| c.0).fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        assert!(max_x > 0.0);
    }

    #[test]
    fn rejects_asymmetric_and_bad_sizes() {
        let d = DistanceMatrix {
            rows: 2,
            cols: 2,
            values: vec![vec![0.0, 0.4], vec![0.3, 0.0]],
            kind: DistanceKind::SquareIntra,
        };
        assert!(pcoa_layout(&d, &weights(2)).is_err());
        let ok = DistanceMatrix::new(vec![vec![0.0, 0.4], vec![0.4, 0.0]], DistanceKind::SquareIntra)
            .unwrap();
        assert!(pcoa_layout(&ok, &TopicWeights { weights: vec![1.0, 0.0] }).is_err());
    }
}
