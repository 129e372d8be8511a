//! Projected Riemannian gradient descent on the relaxed Dasgupta cost.
//!
//! Each epoch samples a fresh batch of uniform triplets and takes one SGD
//! step per triplet: Euclidean gradient of the triplet term, conversion by
//! the squared conformal factor, a fixed-rate step and a projection back
//! inside the ball. The run is a pure function of (inputs, config, seed).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::hyperbolic::{project, riemannian_grad};

use super::cost::triplet_term_grad;
use super::similarity::{median_heuristic_sigma, SigmaSpec, SimilarityConfig, SimilaritySource};
use super::BallEmbedding;

#[derive(Debug, Clone, PartialEq)]
pub struct HypHCConfig {
    /// Ball dimension.
    pub dim: usize,
    /// Initial softmax temperature.
    pub tau: f64,
    /// Temperature multiplier applied at each third of training.
    pub anneal: f64,
    pub epochs: usize,
    /// Triplets sampled per epoch; 0 means the `50 * n` default.
    pub triplets_per_epoch: usize,
    pub learning_rate: f64,
    /// Learning-rate multiplier applied at each third of training, like
    /// `anneal` for the temperature. 1 keeps the rate constant. A decaying
    /// rate lets early epochs kick stragglers out of the origin's saddle
    /// region while late epochs still settle into tight clusters.
    pub lr_anneal: f64,
    pub seed: u64,
    /// Max-norm clamp for projection.
    pub eps_ball: f64,
    /// If positive, leaf points are kept on the sphere of this radius:
    /// only the angular layout is optimized, following the rescaling used
    /// by the gradient-based method this relaxation comes from. Pinning
    /// the norm removes the near-origin plateau where both of a point's
    /// pair depths vanish, the softmax ignores it and its gradient dies.
    /// 0 disables the constraint.
    pub rescale: f64,
}

impl Default for HypHCConfig {
    fn default() -> Self {
        HypHCConfig {
            dim: 60,
            tau: 0.05,
            anneal: 0.5,
            epochs: 50,
            triplets_per_epoch: 0,
            learning_rate: 5e-2,
            lr_anneal: 1.0,
            seed: 42,
            eps_ball: 1e-5,
            rescale: 0.0,
        }
    }
}

impl HypHCConfig {
    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidConfig("embedding dimension must be >= 2".into()));
        }
        if self.tau <= 0.0 {
            return Err(Error::InvalidConfig("temperature must be positive".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("need at least 1 epoch".into()));
        }
        if !(self.lr_anneal > 0.0) {
            return Err(Error::InvalidConfig("lr_anneal must be positive".into()));
        }
        if !(self.eps_ball > 0.0 && self.eps_ball < 1.0) {
            return Err(Error::InvalidConfig("eps_ball must lie in (0, 1)".into()));
        }
        if self.rescale != 0.0 && !(self.rescale > 0.0 && self.rescale <= 1.0 - self.eps_ball) {
            return Err(Error::InvalidConfig(
                "rescale must lie in (0, 1 - eps_ball] or be 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean relaxed triplet term over the epoch's batch, measured before
    /// each step.
    pub loss: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochStats>,
}

impl TrainingLog {
    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }

    /// Window-10 moving average of the epoch losses.
    pub fn moving_average(&self, window: usize) -> Vec<f64> {
        let losses: Vec<f64> = self.epochs.iter().map(|e| e.loss).collect();
        losses
            .windows(window.min(losses.len()).max(1))
            .map(|w| w.iter().sum::<f64>() / w.len() as f64)
            .collect()
    }
}

/// Seeded init: points uniform in the ball of radius 0.5, or uniform on
/// the constraint sphere when a rescale radius is set.
fn init_points(n: usize, dim: usize, rescale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let radius = if rescale > 0.0 {
            rescale
        } else {
            0.5 * rng.gen::<f64>().powf(1.0 / dim as f64)
        };
        coords.extend(dir.iter().map(|v| v * radius / norm));
    }
    coords
}

/// Pull a stepped point back onto the constraint sphere.
fn rescale_to(point: &[f64], radius: f64) -> Vec<f64> {
    let norm: f64 = point.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    point.iter().map(|v| v * radius / norm).collect()
}

fn sample_triplet(n: usize, rng: &mut ChaCha8Rng) -> [usize; 3] {
    let i = rng.gen_range(0..n);
    let j = loop {
        let j = rng.gen_range(0..n);
        if j != i {
            break j;
        }
    };
    let k = loop {
        let k = rng.gen_range(0..n);
        if k != i && k != j {
            break k;
        }
    };
    [i, j, k]
}

/// Train ball embeddings against an arbitrary similarity source. Row ids
/// of the result follow `ids`.
pub fn optimize_weights(
    ids: Vec<String>,
    weights: &SimilaritySource<'_>,
    config: &HypHCConfig,
) -> Result<(BallEmbedding, TrainingLog)> {
    config.validate()?;
    let n = weights.len();
    assert_eq!(ids.len(), n, "one id per embedded point");
    if n < 3 {
        return Err(Error::DegenerateData(format!("need at least 3 points, got {n}")));
    }
    let dim = config.dim;
    let triplets_per_epoch = if config.triplets_per_epoch == 0 {
        50 * n
    } else {
        config.triplets_per_epoch
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut embedding =
        BallEmbedding::new(ids, dim, init_points(n, dim, config.rescale, &mut rng));
    let mut log = TrainingLog::default();

    for epoch in 0..config.epochs {
        // Anneal the temperature and learning rate at each third of
        // training.
        let phase = (epoch * 3) / config.epochs.max(1);
        let tau = config.tau * config.anneal.powi(phase as i32);
        let lr = config.learning_rate * config.lr_anneal.powi(phase as i32);

        let mut loss_sum = 0.0;
        for _ in 0..triplets_per_epoch {
            let triplet = sample_triplet(n, &mut rng);
            let [i, j, k] = triplet;
            let w = [
                weights.weight(i, j),
                weights.weight(i, k),
                weights.weight(j, k),
            ];
            let (term, point_grads) = triplet_term_grad(&embedding, triplet, w, tau);
            loss_sum += term;
            for (&p, g) in triplet.iter().zip(&point_grads) {
                let rg = riemannian_grad(g, embedding.point(p));
                let stepped: Vec<f64> = embedding
                    .point(p)
                    .iter()
                    .zip(&rg)
                    .map(|(x, g)| x - lr * g)
                    .collect();
                let projected = if config.rescale > 0.0 {
                    rescale_to(&stepped, config.rescale)
                } else {
                    project(&stepped, config.eps_ball)
                };
                embedding.point_mut(p).copy_from_slice(&projected);
            }
        }
        log.epochs.push(EpochStats {
            epoch,
            loss: loss_sum / triplets_per_epoch as f64,
            tau,
        });
    }

    let ma = log.moving_average(10);
    if ma.windows(2).any(|w| w[1] > w[0] + 1e-9) {
        log::warn!("training loss moving average increased during optimization");
    }
    if let Some(loss) = log.final_loss() {
        log::info!("hyphc training finished, final epoch loss {loss:.6}");
    }
    Ok((embedding, log))
}

/// Train against standardized feature rows with a Gaussian kernel.
pub fn optimize(
    f_std: &FeatureMatrix,
    sim_config: &SimilarityConfig,
    config: &HypHCConfig,
) -> Result<(BallEmbedding, TrainingLog)> {
    let sigma = match sim_config.sigma {
        SigmaSpec::Fixed(s) => {
            if s <= 0.0 {
                return Err(Error::InvalidConfig("sigma must be positive".into()));
            }
            s
        }
        SigmaSpec::MedianHeuristic { sample_size, seed } => {
            median_heuristic_sigma(f_std.values().view(), sample_size, seed)?
        }
    };
    let weights = SimilaritySource::Kernel {
        rows: f_std.values().view(),
        sigma,
    };
    optimize_weights(f_std.ids().to_vec(), &weights, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyphc::tree::{dasgupta_cost, decode_tree, BinaryTree};
    use crate::hyphc::lca::lca_depth_cf;

    fn dense(n: usize, entries: &[(usize, usize, f64)]) -> Vec<f64> {
        let mut w = vec![0.0; n * n];
        for &(i, j, v) in entries {
            w[i * n + j] = v;
            w[j * n + i] = v;
        }
        w
    }

    fn micro_config(seed: u64) -> HypHCConfig {
        HypHCConfig {
            dim: 2,
            tau: 0.05,
            anneal: 0.5,
            epochs: 150,
            triplets_per_epoch: 300,
            learning_rate: 5e-2,
            seed,
            ..HypHCConfig::default()
        }
    }

    #[test]
    fn strong_pair_merges_first_and_beats_alternatives() {
        let w = dense(3, &[(0, 1, 0.95), (0, 2, 0.1), (1, 2, 0.1)]);
        let sim = SimilaritySource::Dense { n: 3, weights: &w };
        let ids = vec!["0".into(), "1".into(), "2".into()];
        let (emb, _) = optimize_weights(ids, &sim, &micro_config(7)).unwrap();
        let tree = decode_tree(&emb);
        assert!(tree.cluster_sets().contains(&vec![0, 1]));

        // Brute force over the 3 possible trees on 3 leaves.
        let weight = |i: usize, j: usize| w[i * 3 + j];
        let got = dasgupta_cost(&tree, weight);
        let best = [
            BinaryTree::from_merges(3, &[(0, 1), (3, 2)]),
            BinaryTree::from_merges(3, &[(0, 2), (3, 1)]),
            BinaryTree::from_merges(3, &[(1, 2), (3, 0)]),
        ]
        .iter()
        .map(|t| dasgupta_cost(t, weight))
        .fold(f64::INFINITY, f64::min);
        approx::assert_abs_diff_eq!(got, best, epsilon = 1e-9);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let w = dense(
            4,
            &[
                (0, 1, 0.9),
                (2, 3, 0.8),
                (0, 2, 0.2),
                (0, 3, 0.1),
                (1, 2, 0.15),
                (1, 3, 0.12),
            ],
        );
        let sim = SimilaritySource::Dense { n: 4, weights: &w };
        let ids: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let (a, log_a) = optimize_weights(ids.clone(), &sim, &micro_config(99)).unwrap();
        let (b, log_b) = optimize_weights(ids, &sim, &micro_config(99)).unwrap();
        assert_eq!(a, b);
        assert_eq!(log_a, log_b);
    }

    #[test]
    fn all_points_stay_inside_the_ball() {
        let w = dense(3, &[(0, 1, 0.5), (0, 2, 0.5), (1, 2, 0.5)]);
        let sim = SimilaritySource::Dense { n: 3, weights: &w };
        let ids: Vec<String> = (0..3).map(|i| i.to_string()).collect();
        let (emb, _) = optimize_weights(ids, &sim, &micro_config(1)).unwrap();
        assert!(emb.max_norm() <= 1.0 - 1e-5 + 1e-12);
    }

    #[test]
    fn planted_clusters_have_deeper_within_lcas() {
        // 20 points in two planted clusters of 10; within-cluster weight
        // high, across-cluster low.
        let n = 20;
        let mut entries = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let same = (i < 10) == (j < 10);
                entries.push((i, j, if same { 0.9 } else { 0.05 }));
            }
        }
        let w = dense(n, &entries);
        let sim = SimilaritySource::Dense { n, weights: &w };
        let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let config = HypHCConfig {
            dim: 2,
            epochs: 120,
            triplets_per_epoch: 2000,
            ..HypHCConfig::default()
        };
        let (emb, _) = optimize_weights(ids, &sim, &config).unwrap();

        let mut within = Vec::new();
        let mut across = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let d = lca_depth_cf(emb.point(i), emb.point(j));
                if (i < 10) == (j < 10) {
                    within.push(d);
                } else {
                    across.push(d);
                }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&within) > mean(&across),
            "within {} vs across {}",
            mean(&within),
            mean(&across)
        );
    }

    #[test]
    fn rescale_pins_every_norm_to_the_given_radius() {
        let w = dense(4, &[(0, 1, 0.9), (2, 3, 0.8), (0, 2, 0.1)]);
        let sim = SimilaritySource::Dense { n: 4, weights: &w };
        let ids: Vec<String> = (0..4).map(|i| i.to_string()).collect();
        let config = HypHCConfig { rescale: 0.9, ..micro_config(5) };
        let (emb, _) = optimize_weights(ids, &sim, &config).unwrap();
        for i in 0..4 {
            let norm: f64 = emb.point(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            approx::assert_abs_diff_eq!(norm, 0.9, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_undersized_inputs_and_bad_configs() {
        let w = dense(2, &[(0, 1, 0.5)]);
        let sim = SimilaritySource::Dense { n: 2, weights: &w };
        let ids = vec!["0".into(), "1".into()];
        assert!(matches!(
            optimize_weights(ids, &sim, &HypHCConfig::default()),
            Err(Error::DegenerateData(_))
        ));

        let w3 = dense(3, &[(0, 1, 0.5)]);
        let sim3 = SimilaritySource::Dense { n: 3, weights: &w3 };
        let ids3: Vec<String> = (0..3).map(|i| i.to_string()).collect();
        let bad = HypHCConfig {
            dim: 1,
            ..HypHCConfig::default()
        };
        assert!(matches!(
            optimize_weights(ids3, &sim3, &bad),
            Err(Error::InvalidConfig(_))
        ));
    }
}
