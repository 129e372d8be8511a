//! Continuous Dasgupta cost over sampled triplets.
//!
//! For a triplet (i, j, k) with pairwise weights w and LCA depths d, the
//! relaxed contribution is
//!
//! ```text
//! w_ij + w_ik + w_jk - (w_ij, w_ik, w_jk) . softmax_tau(d_ij, d_ik, d_jk)
//! ```
//!
//! plus the constant `2 w` per distinct pair covered by the batch. As tau
//! goes to 0 the softmax picks the weight of the deepest pair, recovering
//! the discrete objective's triplet form.

use std::collections::HashSet;

use super::lca::{lca_depth_cf, lca_depth_with_grad};
use super::similarity::SimilaritySource;
use super::BallEmbedding;

fn softmax3(d: [f64; 3], tau: f64) -> [f64; 3] {
    let max = d[0].max(d[1]).max(d[2]);
    let e = [
        ((d[0] - max) / tau).exp(),
        ((d[1] - max) / tau).exp(),
        ((d[2] - max) / tau).exp(),
    ];
    let z = e[0] + e[1] + e[2];
    [e[0] / z, e[1] / z, e[2] / z]
}

/// Sum of covered-pair constants: `2 w_ij` for each distinct pair appearing
/// in some triplet.
fn pair_constant(triplets: &[[usize; 3]], weights: &SimilaritySource<'_>) -> f64 {
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    for &[i, j, k] in triplets {
        for (a, b) in [(i, j), (i, k), (j, k)] {
            pairs.insert((a.min(b), a.max(b)));
        }
    }
    2.0 * pairs.iter().map(|&(a, b)| weights.weight(a, b)).sum::<f64>()
}

/// Relaxed triplet term, value only.
pub(crate) fn triplet_term(
    embedding: &BallEmbedding,
    triplet: [usize; 3],
    weights: [f64; 3],
    tau: f64,
) -> f64 {
    let [i, j, k] = triplet;
    let d = [
        lca_depth_cf(embedding.point(i), embedding.point(j)),
        lca_depth_cf(embedding.point(i), embedding.point(k)),
        lca_depth_cf(embedding.point(j), embedding.point(k)),
    ];
    let sm = softmax3(d, tau);
    weights.iter().sum::<f64>() - weights.iter().zip(sm).map(|(w, s)| w * s).sum::<f64>()
}

/// Continuous cost of a triplet batch.
pub fn continuous_cost(
    embedding: &BallEmbedding,
    triplets: &[[usize; 3]],
    weights: &SimilaritySource<'_>,
    tau: f64,
) -> f64 {
    let mut total = pair_constant(triplets, weights);
    for &t in triplets {
        let [i, j, k] = t;
        let w = [
            weights.weight(i, j),
            weights.weight(i, k),
            weights.weight(j, k),
        ];
        total += triplet_term(embedding, t, w, tau);
    }
    total
}

/// Relaxed triplet term plus Euclidean gradients for exactly the three
/// points touched, in triplet order.
pub(crate) fn triplet_term_grad(
    embedding: &BallEmbedding,
    triplet: [usize; 3],
    weights: [f64; 3],
    tau: f64,
) -> (f64, [Vec<f64>; 3]) {
    let [i, j, k] = triplet;
    let dim = embedding.dim();
    let lij = lca_depth_with_grad(embedding.point(i), embedding.point(j));
    let lik = lca_depth_with_grad(embedding.point(i), embedding.point(k));
    let ljk = lca_depth_with_grad(embedding.point(j), embedding.point(k));
    let d = [lij.depth, lik.depth, ljk.depth];
    let sm = softmax3(d, tau);
    let weighted: f64 = weights.iter().zip(sm).map(|(w, s)| w * s).sum();
    let term = weights.iter().sum::<f64>() - weighted;

    // d term / d depth_l = -sm_l (w_l - weighted) / tau.
    let coeff = [
        -sm[0] * (weights[0] - weighted) / tau,
        -sm[1] * (weights[1] - weighted) / tau,
        -sm[2] * (weights[2] - weighted) / tau,
    ];
    let mut grad_i = vec![0.0; dim];
    let mut grad_j = vec![0.0; dim];
    let mut grad_k = vec![0.0; dim];
    for a in 0..dim {
        grad_i[a] = coeff[0] * lij.grad_x[a] + coeff[1] * lik.grad_x[a];
        grad_j[a] = coeff[0] * lij.grad_y[a] + coeff[2] * ljk.grad_x[a];
        grad_k[a] = coeff[1] * lik.grad_y[a] + coeff[2] * ljk.grad_y[a];
    }
    (term, [grad_i, grad_j, grad_k])
}

/// Continuous cost plus its Euclidean gradient with respect to every
/// coordinate (flat `n x dim`, row-major).
pub fn continuous_cost_grad(
    embedding: &BallEmbedding,
    triplets: &[[usize; 3]],
    weights: &SimilaritySource<'_>,
    tau: f64,
) -> (f64, Vec<f64>) {
    let dim = embedding.dim();
    let mut grads = vec![0.0; embedding.len() * dim];
    let mut total = pair_constant(triplets, weights);
    for &t in triplets {
        let [i, j, k] = t;
        let w = [
            weights.weight(i, j),
            weights.weight(i, k),
            weights.weight(j, k),
        ];
        let (term, point_grads) = triplet_term_grad(embedding, t, w, tau);
        total += term;
        for (p, g) in t.iter().zip(&point_grads) {
            for a in 0..dim {
                grads[p * dim + a] += g[a];
            }
        }
    }
    (total, grads)
}
