//! Hyperbolic hierarchical clustering: leaf embeddings in the Poincaré ball
//! trained against a continuous relaxation of the Dasgupta cost, plus the
//! decoding of the embedding back into a binary tree.
//!
//! The discrete objective is `C_D(T; w) = sum_{i<j} w_ij |leaves(T[i v j])|`,
//! minimized over binary trees. Training replaces the tree with `n` ball
//! points and the per-pair LCA with the geodesic's closest approach to the
//! origin ([`lca`]), relaxing the objective over sampled triplets with a
//! temperature-controlled softmax ([`cost`]). Projected Riemannian gradient
//! descent ([`optimize`]) keeps points inside the ball; greedy agglomeration
//! over LCA depths ([`tree::decode_tree`]) recovers the hierarchy.

pub mod cost;
pub mod lca;
pub mod optimize;
pub mod similarity;
pub mod tree;

pub use cost::{continuous_cost, continuous_cost_grad};
pub use optimize::{optimize, optimize_weights, EpochStats, HypHCConfig, TrainingLog};
pub use similarity::{
    median_heuristic_sigma, similarity, SigmaSpec, SimilarityConfig, SimilaritySource,
};
pub use tree::{dasgupta_cost, decode_tree, BinaryTree};

use ndarray::Array2;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::hyperbolic;

/// `n` points of dimension `d`, all strictly inside the unit ball, one per
/// user.
#[derive(Debug, Clone, PartialEq)]
pub struct BallEmbedding {
    ids: Vec<String>,
    dim: usize,
    coords: Vec<f64>,
}

impl BallEmbedding {
    pub fn new(ids: Vec<String>, dim: usize, coords: Vec<f64>) -> Self {
        assert_eq!(ids.len() * dim, coords.len(), "coordinate count mismatch");
        Self { ids, dim, coords }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Raw ball coordinates as a plain matrix with columns `e_001..e_d`,
    /// consumable by any downstream learner.
    pub fn export(&self) -> FeatureMatrix {
        let columns = (1..=self.dim).map(|k| format!("e_{k:03}")).collect();
        let values = Array2::from_shape_vec((self.len(), self.dim), self.coords.clone())
            .expect("coords are row-major n x dim");
        FeatureMatrix::new(self.ids.clone(), columns, values)
    }

    /// Inverse of [`BallEmbedding::export`]; rejects rows outside the ball.
    pub fn import(matrix: &FeatureMatrix) -> Result<BallEmbedding> {
        for (i, row) in matrix.values().rows().into_iter().enumerate() {
            let norm_sq: f64 = row.iter().map(|v| v * v).sum();
            if norm_sq >= 1.0 {
                return Err(Error::NumericDomain(format!(
                    "row {i} has norm {} >= 1",
                    norm_sq.sqrt()
                )));
            }
        }
        Ok(BallEmbedding::new(
            matrix.ids().to_vec(),
            matrix.n_cols(),
            matrix.values().iter().copied().collect(),
        ))
    }

    /// Max point norm; always below 1 for a valid embedding.
    pub fn max_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| hyperbolic::norm(self.point(i)))
            .fold(0.0, f64::max)
    }
}
