//! Pairwise similarity over standardized feature rows.
//!
//! Weights come from a Gaussian kernel, `w_ij = exp(-|r_i - r_j|^2 /
//! (2 sigma^2))`, so they land in `(0, 1]` as the Dasgupta cost requires.
//! The bandwidth either is fixed or follows the median heuristic over a
//! seeded sample of row pairs.

use ndarray::ArrayView2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Kernel bandwidth choice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSpec {
    Fixed(f64),
    /// Median of pairwise Euclidean distances over `sample_size` seeded row
    /// pairs.
    MedianHeuristic { sample_size: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityConfig {
    pub sigma: SigmaSpec,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            sigma: SigmaSpec::MedianHeuristic {
                sample_size: 10_000,
                seed: 0,
            },
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Gaussian kernel weight between two rows.
pub fn similarity(row_i: &[f64], row_j: &[f64], sigma: f64) -> f64 {
    assert_eq!(row_i.len(), row_j.len());
    assert!(sigma > 0.0);
    let d = euclidean(row_i, row_j);
    (-d * d / (2.0 * sigma * sigma)).exp()
}

/// Median pairwise distance over a seeded sample. When the number of
/// distinct pairs does not exceed `sample_size`, all pairs are used.
pub fn median_heuristic_sigma(
    matrix: ArrayView2<'_, f64>,
    sample_size: usize,
    seed: u64,
) -> Result<f64> {
    let n = matrix.nrows();
    if n < 2 {
        return Err(Error::DegenerateData("need at least 2 rows for sigma".into()));
    }
    let total_pairs = n * (n - 1) / 2;
    let mut distances = Vec::new();
    if total_pairs <= sample_size {
        for i in 0..n {
            for j in (i + 1)..n {
                distances.push(euclidean(
                    matrix.row(i).as_slice().expect("contiguous row"),
                    matrix.row(j).as_slice().expect("contiguous row"),
                ));
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..sample_size {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            distances.push(euclidean(
                matrix.row(i).as_slice().expect("contiguous row"),
                matrix.row(j).as_slice().expect("contiguous row"),
            ));
        }
    }
    distances.sort_by(|a, b| a.total_cmp(b));
    let mid = distances.len() / 2;
    let median = if distances.len() % 2 == 1 {
        distances[mid]
    } else {
        (distances[mid - 1] + distances[mid]) / 2.0
    };
    if median == 0.0 {
        return Err(Error::DegenerateData(
            "median pairwise distance is 0 (sampled rows identical)".into(),
        ));
    }
    Ok(median)
}

/// Where triplet weights come from: a dense precomputed matrix (micro-scale
/// runs, tests) or the kernel evaluated on the fly against feature rows.
pub enum SimilaritySource<'a> {
    Dense { n: usize, weights: &'a [f64] },
    Kernel { rows: ArrayView2<'a, f64>, sigma: f64 },
}

impl SimilaritySource<'_> {
    pub fn len(&self) -> usize {
        match self {
            SimilaritySource::Dense { n, .. } => *n,
            SimilaritySource::Kernel { rows, .. } => rows.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self {
            SimilaritySource::Dense { n, weights } => weights[i * n + j],
            SimilaritySource::Kernel { rows, sigma } => similarity(
                rows.row(i).as_slice().expect("contiguous row"),
                rows.row(j).as_slice().expect("contiguous row"),
                *sigma,
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn identical_rows_have_weight_one() {
        let r = [1.0, -2.0, 3.0];
        assert_eq!(similarity(&r, &r, 0.7), 1.0);
    }

    #[test]
    fn distance_sigma_sqrt2_gives_inv_e() {
        let sigma = 0.9;
        let a = [0.0, 0.0];
        let b = [sigma * 2f64.sqrt(), 0.0];
        assert_abs_diff_eq!(similarity(&a, &b, sigma), (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(similarity(&a, &b, sigma), 0.3679, epsilon = 1e-4);
    }

    #[test]
    fn similarity_is_symmetric() {
        let a = [0.3, 1.2, -0.5];
        let b = [-1.0, 0.4, 2.2];
        assert_eq!(similarity(&a, &b, 1.3), similarity(&b, &a, 1.3));
    }

    #[test]
    fn two_rows_give_their_distance() {
        let m = array![[0.0, 0.0], [3.0, 4.0]];
        let sigma = median_heuristic_sigma(m.view(), 10_000, 7).unwrap();
        assert_eq!(sigma, 5.0);
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let m = array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]];
        assert!(matches!(
            median_heuristic_sigma(m.view(), 10_000, 7),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn sampled_median_matches_exhaustive_when_sample_covers_all_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let m = ndarray::Array2::from_shape_fn((100, 4), |_| rng.gen::<f64>());

        // Exhaustive oracle.
        let mut all = Vec::new();
        for i in 0..100 {
            for j in (i + 1)..100 {
                all.push(euclidean(
                    m.row(i).as_slice().unwrap(),
                    m.row(j).as_slice().unwrap(),
                ));
            }
        }
        all.sort_by(|a, b| a.total_cmp(b));
        let mid = all.len() / 2;
        let expected = if all.len() % 2 == 1 {
            all[mid]
        } else {
            (all[mid - 1] + all[mid]) / 2.0
        };

        let sigma = median_heuristic_sigma(m.view(), all.len(), 9).unwrap();
        assert_abs_diff_eq!(sigma, expected, epsilon = 1e-12);
    }
}
