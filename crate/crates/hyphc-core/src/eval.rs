//! Inter-class centroid distances and the full experiment orchestrator.
//!
//! `experiment_matrix` is the one entry point that runs the whole pipeline
//! on an in-memory corpus: interaction features, user-level features, the
//! hyperbolic embedding, the comparison reducers, then every separation on
//! every feature set with a shared seed so the numbers are comparable.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::baselines::{reduce, ReducerMethod, ReducerSpec};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::features::{build_feature_matrix, build_user_level_matrix, standardize};
use crate::hyphc::{optimize, HypHCConfig, SimilarityConfig};
use crate::influencers::{build_user_set, compute_rt_scores, select_top_influencers};
use crate::ingest::{Corpus, LabelMap, UserClass, UserProfile};
use crate::learn::{all_separations, run_separation, RunConfig, SeparationSpec};

/// The five feature-set names, in result-table column order.
pub const FEATURE_SETS: [&str; 5] = ["U", "U+F", "HypHC", "SE", "FA"];

/// Per-class centroids of one reduced representation plus the three
/// pairwise Euclidean distances between them.
#[derive(Debug, Clone)]
pub struct CentroidReport {
    pub reducer: String,
    pub centroids: BTreeMap<UserClass, Vec<f64>>,
    pub deleted_suspended: f64,
    pub suspended_regular: f64,
    pub regular_deleted: f64,
}

impl CentroidReport {
    pub fn distances(&self) -> [f64; 3] {
        [self.deleted_suspended, self.suspended_regular, self.regular_deleted]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "pair,distance")?;
        writeln!(out, "deleted_suspended,{}", self.deleted_suspended)?;
        writeln!(out, "suspended_regular,{}", self.suspended_regular)?;
        writeln!(out, "regular_deleted,{}", self.regular_deleted)?;
        out.flush()?;
        Ok(())
    }
}

/// Arithmetic mean row per class; every class must be present.
pub fn class_centroids(
    matrix: &FeatureMatrix,
    labels: &LabelMap,
) -> Result<BTreeMap<UserClass, Vec<f64>>> {
    let mut sums: BTreeMap<UserClass, (Vec<f64>, usize)> = BTreeMap::new();
    for (i, id) in matrix.ids().iter().enumerate() {
        let class = labels
            .get(id)
            .copied()
            .ok_or_else(|| Error::RowMismatch(format!("id `{id}` has no label")))?;
        let (sum, count) = sums
            .entry(class)
            .or_insert_with(|| (vec![0.0; matrix.n_cols()], 0));
        for (s, v) in sum.iter_mut().zip(matrix.row(i)) {
            *s += v;
        }
        *count += 1;
    }
    let mut centroids = BTreeMap::new();
    for class in UserClass::ALL {
        let (sum, count) = sums
            .remove(&class)
            .ok_or_else(|| Error::EmptyClass(class.to_string()))?;
        centroids.insert(class, sum.into_iter().map(|s| s / count as f64).collect());
    }
    Ok(centroids)
}

/// `1 - cos(a, b)`, in [0, 2].
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    assert_eq!(a.len(), b.len(), "dimension mismatch");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(1.0 - dot / (na * nb))
}

/// Centroid report over a reduced representation. The input is
/// re-standardized here: each reducer's output lives on its own scale.
///
/// Distances are Euclidean, not cosine. After centering, the three class
/// centroids are linearly dependent through the global mean, which pins
/// their pairwise cosines to a singular-Gram surface: on it no reducer can
/// exceed another on all three pairs at once. Euclidean distances between
/// the standardized centroids carry the same separation ordering without
/// that artifact.
pub fn centroid_report(
    reduced: &FeatureMatrix,
    labels: &LabelMap,
    reducer: &str,
) -> Result<CentroidReport> {
    let (std_matrix, _) = standardize(reduced);
    let centroids = class_centroids(&std_matrix, labels)?;
    let d = |a: UserClass, b: UserClass| -> Result<f64> {
        let (ca, cb) = (&centroids[&a], &centroids[&b]);
        Ok(ca.iter().zip(cb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
    };
    Ok(CentroidReport {
        reducer: reducer.to_string(),
        deleted_suspended: d(UserClass::Deleted, UserClass::Suspended)?,
        suspended_regular: d(UserClass::Suspended, UserClass::Regular)?,
        regular_deleted: d(UserClass::Regular, UserClass::Deleted)?,
        centroids,
    })
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Influencer count p.
    pub p: usize,
    /// Target dimension shared by HypHC, SE and FA.
    pub reducer_dim: usize,
    pub se_neighbors: usize,
    pub hyphc: HypHCConfig,
    pub similarity: SimilarityConfig,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            p: 20,
            reducer_dim: 8,
            se_neighbors: 10,
            // Longer, hotter schedule than the optimizer default: at
            // experiment scale the class-level angular layout keeps
            // improving well past the point where the loss has flattened.
            // A warmer starting temperature with a steeper anneal keeps
            // early gradients alive for near-origin points, and a large
            // decaying learning rate pulls stragglers outward before
            // convergence.
            hyphc: HypHCConfig {
                epochs: 400,
                tau: 0.25,
                anneal: 0.3,
                learning_rate: 0.3,
                lr_anneal: 0.25,
                rescale: 0.9,
                ..HypHCConfig::default()
            },
            similarity: SimilarityConfig::default(),
            run: RunConfig::default(),
        }
    }
}

/// One separation's F1 per feature set, in [`FEATURE_SETS`] order.
#[derive(Debug, Clone)]
pub struct SeparationScores {
    pub separation: String,
    pub f1: Vec<(String, f64)>,
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub feature_sets: HashMap<String, FeatureMatrix>,
    pub scores: Vec<SeparationScores>,
    pub centroid_reports: Vec<CentroidReport>,
}

impl ExperimentOutput {
    pub fn f1(&self, separation: &str, set: &str) -> Option<f64> {
        self.scores
            .iter()
            .find(|s| s.separation == separation)?
            .f1
            .iter()
            .find(|(name, _)| name == set)
            .map(|(_, v)| *v)
    }

    pub fn report(&self, reducer: &str) -> Option<&CentroidReport> {
        self.centroid_reports.iter().find(|r| r.reducer == reducer)
    }

    /// One row per separation, one column per feature set.
    pub fn write_results_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        write!(out, "separation")?;
        for set in FEATURE_SETS {
            write!(out, ",{set}")?;
        }
        writeln!(out)?;
        for row in &self.scores {
            write!(out, "{}", row.separation)?;
            for (_, v) in &row.f1 {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Build the five feature sets from a corpus. Returned map keys are
/// [`FEATURE_SETS`]; reduced sets carry the standardized user-level
/// features appended after the reduced interaction columns.
pub fn build_feature_sets(
    corpus: &Corpus,
    profiles: &HashMap<String, UserProfile>,
    config: &ExperimentConfig,
) -> Result<HashMap<String, FeatureMatrix>> {
    let scores = compute_rt_scores(corpus);
    let influencers = select_top_influencers(&scores, config.p);
    if influencers.is_empty() {
        return Err(Error::DegenerateData("corpus has no retweeted accounts".into()));
    }
    let users = build_user_set(corpus, &influencers);
    let reference_time = corpus.tweets().iter().map(|t| t.created_at).max().unwrap_or(0);

    let f = build_feature_matrix(corpus, &users, &influencers);
    let (f_std, _) = standardize(&f);
    let u = build_user_level_matrix(corpus, profiles, &users, reference_time)?;
    let (u_std, _) = standardize(&u);
    let uf = f_std.concat(&u_std)?;

    let mut hyphc_config = config.hyphc.clone();
    hyphc_config.dim = config.reducer_dim;
    let (embedding, _) = optimize(&f_std, &config.similarity, &hyphc_config)?;
    let hyphc_reduced = embedding.export();

    let se_spec = ReducerSpec {
        method: ReducerMethod::Se,
        dim: config.reducer_dim,
        se_neighbors: config.se_neighbors,
    };
    let fa_spec = ReducerSpec { method: ReducerMethod::Fa, ..se_spec };
    let se_reduced = reduce(&f_std, &se_spec)?;
    let fa_reduced = reduce(&f_std, &fa_spec)?;

    let mut sets = HashMap::new();
    sets.insert("U".to_string(), u_std.clone());
    sets.insert("U+F".to_string(), uf);
    for (name, reduced) in [("HypHC", hyphc_reduced), ("SE", se_reduced), ("FA", fa_reduced)] {
        let (reduced_std, _) = standardize(&reduced);
        sets.insert(name.to_string(), reduced_std.concat(&u_std)?);
        sets.insert(format!("{name}.reduced"), reduced);
    }
    Ok(sets)
}

/// Run all six separations over the five feature sets and compute a
/// centroid report per reducer.
pub fn experiment_matrix(
    corpus: &Corpus,
    profiles: &HashMap<String, UserProfile>,
    labels: &LabelMap,
    config: &ExperimentConfig,
) -> Result<ExperimentOutput> {
    let feature_sets = build_feature_sets(corpus, profiles, config)?;
    run_experiments(feature_sets, labels, config)
}

/// The separation runs and centroid reports on prebuilt feature sets;
/// split out so the CLI can resume from stage artifacts.
pub fn run_experiments(
    feature_sets: HashMap<String, FeatureMatrix>,
    labels: &LabelMap,
    config: &ExperimentConfig,
) -> Result<ExperimentOutput> {
    let mut scores = Vec::new();
    for spec in all_separations() {
        let mut f1 = Vec::new();
        for set in FEATURE_SETS {
            let score = run_one(&feature_sets, set, labels, &spec, &config.run)?;
            f1.push((set.to_string(), score));
        }
        scores.push(SeparationScores { separation: spec.name(), f1 });
    }

    let mut centroid_reports = Vec::new();
    for name in ["HypHC", "SE", "FA"] {
        let reduced = feature_sets
            .get(&format!("{name}.reduced"))
            .ok_or_else(|| Error::UnknownFeatureSet(format!("{name}.reduced")))?;
        centroid_reports.push(centroid_report(reduced, labels, name)?);
    }
    Ok(ExperimentOutput { feature_sets, scores, centroid_reports })
}

fn run_one(
    feature_sets: &HashMap<String, FeatureMatrix>,
    set: &str,
    labels: &LabelMap,
    spec: &SeparationSpec,
    run: &RunConfig,
) -> Result<f64> {
    run_separation(feature_sets, set, labels, spec, run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::ForestConfig;
    use crate::synth::{generate, SynthConfig};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labelled_matrix(n_per_class: usize, cols: usize, seed: u64) -> (FeatureMatrix, LabelMap) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ids = Vec::new();
        let mut labels = LabelMap::new();
        for class in UserClass::ALL {
            for i in 0..n_per_class {
                let id = format!("{class}_{i}");
                labels.insert(id.clone(), class);
                ids.push(id);
            }
        }
        let values = Array2::from_shape_fn((ids.len(), cols), |_| rng.gen_range(-3.0..3.0));
        let columns = (0..cols).map(|j| format!("c{j}")).collect();
        (FeatureMatrix::new(ids, columns, values), labels)
    }

    #[test]
    fn centroids_match_naive_summation() {
        let (matrix, labels) = labelled_matrix(17, 5, 1);
        let centroids = class_centroids(&matrix, &labels).unwrap();
        for class in UserClass::ALL {
            let rows: Vec<usize> = matrix
                .ids()
                .iter()
                .enumerate()
                .filter(|(_, id)| labels[*id] == class)
                .map(|(i, _)| i)
                .collect();
            for j in 0..5 {
                let naive: f64 =
                    rows.iter().map(|&i| matrix.values()[(i, j)]).sum::<f64>() / rows.len() as f64;
                assert_abs_diff_eq!(centroids[&class][j], naive, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn centroids_require_every_class() {
        let (matrix, mut labels) = labelled_matrix(4, 3, 2);
        for id in matrix.ids() {
            if labels[id] == UserClass::Deleted {
                labels.insert(id.clone(), UserClass::Regular);
            }
        }
        assert!(matches!(
            class_centroids(&matrix, &labels),
            Err(Error::EmptyClass(c)) if c == "deleted"
        ));
    }

    #[test]
    fn centroids_invariant_under_row_permutation() {
        let (matrix, labels) = labelled_matrix(9, 4, 3);
        let direct = class_centroids(&matrix, &labels).unwrap();
        let reversed_rows: Vec<usize> = (0..matrix.n_rows()).rev().collect();
        let permuted = class_centroids(&matrix.select_rows(&reversed_rows), &labels).unwrap();
        for class in UserClass::ALL {
            for j in 0..4 {
                assert_abs_diff_eq!(direct[&class][j], permuted[&class][j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cosine_distance_hand_cases() {
        assert_abs_diff_eq!(
            cosine_distance(&[1.0, 0.0], &[1.0, 0.0]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            cosine_distance(&[1.0, 0.0], &[0.0, 5.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            cosine_distance(&[2.0, 1.0], &[-2.0, -1.0]).unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert!(matches!(
            cosine_distance(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn cosine_distance_is_scale_invariant() {
        let a = [0.3, -1.2, 0.7];
        let b = [2.0, 0.1, -0.4];
        let scaled: Vec<f64> = a.iter().map(|v| v * 37.5).collect();
        assert_abs_diff_eq!(
            cosine_distance(&a, &b).unwrap(),
            cosine_distance(&scaled, &b).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn experiment_matrix_fills_every_cell() {
        let synth_config = SynthConfig {
            n_regular: 150,
            n_collusive_groups: 4,
            group_size: 15,
            n_influencers: 10,
            ..SynthConfig::default()
        };
        let out = generate(&synth_config).unwrap();
        let corpus = Corpus::from_records(out.tweets).unwrap();
        let profiles: HashMap<String, UserProfile> =
            out.profiles.into_iter().map(|p| (p.user_id.clone(), p)).collect();
        let labels: LabelMap = out.labels.into_iter().collect();

        let config = ExperimentConfig {
            p: 10,
            reducer_dim: 4,
            hyphc: HypHCConfig { epochs: 10, ..HypHCConfig::default() },
            run: RunConfig {
                forest: ForestConfig { trees: 30, ..ForestConfig::default() },
                ..RunConfig::default()
            },
            ..ExperimentConfig::default()
        };
        let result = experiment_matrix(&corpus, &profiles, &labels, &config).unwrap();
        assert_eq!(result.scores.len(), 6);
        for row in &result.scores {
            assert_eq!(row.f1.len(), 5);
            for (set, v) in &row.f1 {
                assert!((0.0..=1.0).contains(v), "{} {set} scored {v}", row.separation);
            }
        }
        assert_eq!(result.centroid_reports.len(), 3);
        for report in &result.centroid_reports {
            for d in report.distances() {
                assert!(d.is_finite() && d >= 0.0, "{} distance {d}", report.reducer);
            }
        }

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.csv");
        result.write_results_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("separation,U,U+F,HypHC,SE,FA"));
    }
}
