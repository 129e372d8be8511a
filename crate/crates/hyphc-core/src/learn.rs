//! Classification stage: SMOTE balancing, stratified splitting, a bagged
//! decision-tree ensemble, and the separation-experiment runner.
//!
//! The forest is deliberately plain: Gini impurity, bootstrap rows, a
//! square-root feature subsample per split. What matters here is that a
//! fixed seed pins every prediction bit-for-bit, including under thread
//! parallelism, because the acceptance runs diff output artifacts.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::ingest::{LabelMap, UserClass};

/// Feature rows paired with aligned class labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Array2<f64>,
    pub labels: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<String>) -> Self {
        assert_eq!(features.nrows(), labels.len(), "label count mismatch");
        Self { features, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationMode {
    OneVsTwo,
    OneVsOne,
}

/// One binary experiment: a singled-out positive class against either the
/// union of the other two or one named opponent.
#[derive(Debug, Clone, Copy)]
pub struct SeparationSpec {
    pub mode: SeparationMode,
    pub positive: UserClass,
    /// Required for one-vs-one, ignored otherwise.
    pub negative: Option<UserClass>,
}

impl SeparationSpec {
    pub fn one_vs_two(positive: UserClass) -> Self {
        Self { mode: SeparationMode::OneVsTwo, positive, negative: None }
    }

    pub fn one_vs_one(positive: UserClass, negative: UserClass) -> Self {
        Self { mode: SeparationMode::OneVsOne, positive, negative: Some(negative) }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            SeparationMode::OneVsTwo => Ok(()),
            SeparationMode::OneVsOne => match self.negative {
                Some(neg) if neg != self.positive => Ok(()),
                Some(_) => Err(Error::InvalidConfig(
                    "one-vs-one positive and negative classes must differ".into(),
                )),
                None => Err(Error::InvalidConfig("one-vs-one needs a negative class".into())),
            },
        }
    }

    /// Short name for result tables, e.g. `suspended_vs_rest`.
    pub fn name(&self) -> String {
        match self.mode {
            SeparationMode::OneVsTwo => format!("{}_vs_rest", self.positive),
            SeparationMode::OneVsOne => {
                format!("{}_vs_{}", self.positive, self.negative.expect("validated"))
            }
        }
    }
}

/// The six separations in a fixed order: three one-vs-two tasks, then the
/// three one-vs-one pairs.
pub fn all_separations() -> Vec<SeparationSpec> {
    use UserClass::*;
    vec![
        SeparationSpec::one_vs_two(Regular),
        SeparationSpec::one_vs_two(Suspended),
        SeparationSpec::one_vs_two(Deleted),
        SeparationSpec::one_vs_one(Regular, Suspended),
        SeparationSpec::one_vs_one(Regular, Deleted),
        SeparationSpec::one_vs_one(Suspended, Deleted),
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct ForestConfig {
    pub trees: usize,
    /// `None` grows trees until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { trees: 200, max_depth: None, min_leaf: 2, seed: 42 }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 {
            return Err(Error::InvalidConfig("forest needs at least one tree".into()));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be >= 1".into()));
        }
        Ok(())
    }
}

/// Upsample every minority class to the majority count by interpolating
/// between a minority sample and one of its k nearest minority neighbors.
///
/// Original rows are passed through unchanged ahead of the synthetic ones.
pub fn smote(
    x: ArrayView2<'_, f64>,
    y: &[String],
    k: usize,
    seed: u64,
) -> Result<(Array2<f64>, Vec<String>)> {
    assert_eq!(x.nrows(), y.len(), "label count mismatch");
    if k == 0 {
        return Err(Error::InvalidConfig("smote needs k >= 1".into()));
    }
    let mut by_class: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, label) in y.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }
    let majority = by_class.values().map(Vec::len).max().unwrap_or(0);

    let mut classes: Vec<&str> = by_class.keys().copied().collect();
    classes.sort_unstable();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = y.to_vec();
    for class in classes {
        let members = &by_class[class];
        let deficit = majority - members.len();
        if deficit == 0 {
            continue;
        }
        if members.len() <= k {
            return Err(Error::InsufficientMinority {
                class: class.to_string(),
                size: members.len(),
                k,
            });
        }
        // k nearest neighbors within the class, ties by index.
        let neighbors: Vec<Vec<usize>> = members
            .iter()
            .map(|&a| {
                let mut order: Vec<usize> = members.iter().copied().filter(|&b| b != a).collect();
                order.sort_by(|&p, &q| {
                    let dp = sq_dist(x, a, p);
                    let dq = sq_dist(x, a, q);
                    dp.partial_cmp(&dq).expect("finite features").then(p.cmp(&q))
                });
                order.truncate(k);
                order
            })
            .collect();
        for _ in 0..deficit {
            let base = rng.gen_range(0..members.len());
            let mate = neighbors[base][rng.gen_range(0..k)];
            let lambda: f64 = rng.gen_range(0.0..=1.0);
            let a = members[base];
            let row: Vec<f64> = (0..x.ncols())
                .map(|j| x[(a, j)] + lambda * (x[(mate, j)] - x[(a, j)]))
                .collect();
            rows.push(row);
            labels.push(class.to_string());
        }
    }

    let mut out = Array2::zeros((y.len() + rows.len(), x.ncols()));
    out.slice_mut(ndarray::s![..y.len(), ..]).assign(&x);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[(y.len() + i, j)] = v;
        }
    }
    Ok((out, labels))
}

fn sq_dist(x: ArrayView2<'_, f64>, a: usize, b: usize) -> f64 {
    x.row(a)
        .iter()
        .zip(x.row(b).iter())
        .map(|(p, q)| (p - q) * (p - q))
        .sum()
}

/// Seeded stratified split into (train, test) row positions, both sorted.
pub fn stratified_split(
    labels: &[String],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_class: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, label) in labels.iter().enumerate() {
        by_class.entry(label).or_default().push(i);
    }
    let mut classes: Vec<&str> = by_class.keys().copied().collect();
    classes.sort_unstable();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in classes {
        let mut members = by_class[class].clone();
        members.shuffle(&mut rng);
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

enum Node {
    Leaf(u16),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    fn predict(&self, row: &[f64]) -> u16 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(class) => return *class,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// Bagged Gini trees over a fixed, lexicographically sorted class list.
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    classes: Vec<String>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

/// Majority class of `counts`; ties resolve to the smaller index, which is
/// the lexicographically smaller class name.
fn argmax_class(counts: &[usize]) -> u16 {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best as u16
}

struct TreeBuilder<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [u16],
    n_classes: usize,
    n_split_features: usize,
    min_leaf: usize,
    max_depth: Option<usize>,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &r in rows {
            counts[self.y[r] as usize] += 1;
        }
        counts
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&rows);
        let impurity = gini(&counts, rows.len());
        let depth_ok = self.max_depth.is_none_or(|d| depth < d);
        if impurity <= 1e-12 || rows.len() < 2 * self.min_leaf || !depth_ok {
            self.nodes.push(Node::Leaf(argmax_class(&counts)));
            return self.nodes.len() - 1;
        }

        // Sample the per-node feature subset without replacement.
        let m = self.x.ncols();
        let features =
            rand::seq::index::sample(&mut self.rng, m, self.n_split_features.min(m)).into_vec();

        let mut best: Option<(f64, usize, f64)> = None;
        for &f in &features {
            let mut vals: Vec<(f64, u16)> = rows.iter().map(|&r| (self.x[(r, f)], self.y[r])).collect();
            vals.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
            let mut left = vec![0usize; self.n_classes];
            let mut right = counts.clone();
            for i in 1..vals.len() {
                let (v, c) = vals[i - 1];
                left[c as usize] += 1;
                right[c as usize] -= 1;
                if v == vals[i].0 {
                    continue;
                }
                if i < self.min_leaf || vals.len() - i < self.min_leaf {
                    continue;
                }
                let weighted = (i as f64 * gini(&left, i)
                    + (vals.len() - i) as f64 * gini(&right, vals.len() - i))
                    / vals.len() as f64;
                if best.is_none_or(|(b, _, _)| weighted < b - 1e-12) {
                    best = Some((weighted, f, 0.5 * (v + vals[i].0)));
                }
            }
        }
        let Some((weighted, feature, threshold)) = best else {
            self.nodes.push(Node::Leaf(argmax_class(&counts)));
            return self.nodes.len() - 1;
        };
        if weighted >= impurity - 1e-12 {
            self.nodes.push(Node::Leaf(argmax_class(&counts)));
            return self.nodes.len() - 1;
        }

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| self.x[(r, feature)] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(0)); // placeholder until children exist
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[at] = Node::Split { feature, threshold, left, right };
        at
    }
}

/// Train a forest; class names are taken from the labels and sorted so the
/// tie-break toward the lexicographically smaller class is an index argmax.
pub fn train_forest(
    x: ArrayView2<'_, f64>,
    y: &[String],
    config: &ForestConfig,
) -> Result<RandomForest> {
    config.validate()?;
    assert_eq!(x.nrows(), y.len(), "label count mismatch");
    if y.is_empty() {
        return Err(Error::DegenerateData("empty training set".into()));
    }
    let mut classes: Vec<String> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let index: HashMap<&str, u16> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i as u16))
        .collect();
    let yi: Vec<u16> = y.iter().map(|c| index[c.as_str()]).collect();
    // Reborrow so the view's lifetime matches the local label buffer.
    let x = x.view();
    let n = x.nrows();
    let n_split_features = ((x.ncols() as f64).sqrt().floor() as usize).max(1);

    let trees: Vec<DecisionTree> = (0..config.trees)
        .into_par_iter()
        .map(|t| {
            let tree_seed = config
                .seed
                .wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed);
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x,
                y: &yi,
                n_classes: classes.len(),
                n_split_features,
                min_leaf: config.min_leaf,
                max_depth: config.max_depth,
                rng,
                nodes: Vec::new(),
            };
            builder.build(rows, 0);
            DecisionTree { nodes: builder.nodes }
        })
        .collect();

    Ok(RandomForest { trees, classes })
}

impl RandomForest {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<String> {
        (0..x.nrows())
            .map(|i| {
                let row: Vec<f64> = x.row(i).to_vec();
                let mut votes = vec![0usize; self.classes.len()];
                for tree in &self.trees {
                    votes[tree.predict(&row) as usize] += 1;
                }
                self.classes[argmax_class(&votes) as usize].clone()
            })
            .collect()
    }
}

/// Positive-class F1; 0 when precision and recall are both undefined.
pub fn f1(y_true: &[String], y_pred: &[String], positive: &str) -> f64 {
    assert_eq!(y_true.len(), y_pred.len(), "prediction count mismatch");
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t == positive, p == positive) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    if 2 * tp + fp + fn_ == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// Shared knobs for one separation run.
#[derive(Debug, Clone, Copy)]
pub struct RunConfig {
    pub test_fraction: f64,
    pub smote_k: usize,
    pub forest: ForestConfig,
    /// Governs the split and the SMOTE draws; the forest keeps its own seed.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { test_fraction: 0.2, smote_k: 5, forest: ForestConfig::default(), seed: 42 }
    }
}

/// The label name used for the merged pair in one-vs-two runs.
pub const REST_LABEL: &str = "rest";

/// Select rows and binary labels for a separation.
pub fn separation_dataset(
    features: &FeatureMatrix,
    labels: &LabelMap,
    spec: &SeparationSpec,
) -> Result<LabeledDataset> {
    spec.validate()?;
    let class_of = |id: &str| -> Result<UserClass> {
        labels
            .get(id)
            .copied()
            .ok_or_else(|| Error::RowMismatch(format!("id `{id}` has no label")))
    };
    match spec.mode {
        SeparationMode::OneVsTwo => {
            let mut y = Vec::with_capacity(features.n_rows());
            for id in features.ids() {
                let class = class_of(id)?;
                y.push(if class == spec.positive {
                    class.to_string()
                } else {
                    REST_LABEL.to_string()
                });
            }
            Ok(LabeledDataset::new(features.values().clone(), y))
        }
        SeparationMode::OneVsOne => {
            let negative = spec.negative.expect("validated");
            let mut rows = Vec::new();
            let mut y = Vec::new();
            for (i, id) in features.ids().iter().enumerate() {
                let class = class_of(id)?;
                if class == spec.positive || class == negative {
                    rows.push(i);
                    y.push(class.to_string());
                }
            }
            Ok(LabeledDataset::new(features.values().select(Axis(0), &rows), y))
        }
    }
}

/// Run one separation on one named feature set, returning the positive-class
/// F1 on the held-out fold. SMOTE touches only the training fold.
pub fn run_separation(
    feature_sets: &HashMap<String, FeatureMatrix>,
    set_name: &str,
    labels: &LabelMap,
    spec: &SeparationSpec,
    config: &RunConfig,
) -> Result<f64> {
    let features = feature_sets
        .get(set_name)
        .ok_or_else(|| Error::UnknownFeatureSet(set_name.to_string()))?;
    let dataset = separation_dataset(features, labels, spec)?;
    let (train, test) = stratified_split(&dataset.labels, config.test_fraction, config.seed)?;

    let x_train = dataset.features.select(Axis(0), &train);
    let y_train: Vec<String> = train.iter().map(|&i| dataset.labels[i].clone()).collect();
    let x_test = dataset.features.select(Axis(0), &test);
    let y_test: Vec<String> = test.iter().map(|&i| dataset.labels[i].clone()).collect();

    let (x_bal, y_bal) = smote(
        x_train.view(),
        &y_train,
        config.smote_k,
        config.seed.wrapping_add(0x5F0E_1D2C_3B4A_5968),
    )?;
    let forest = train_forest(x_bal.view(), &y_bal, &config.forest)?;
    let predictions = forest.predict(x_test.view());
    Ok(f1(&y_test, &predictions, spec.positive.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;

    fn blob(rng: &mut ChaCha8Rng, n: usize, center: &[f64], spread: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                center
                    .iter()
                    .map(|&c| c + rng.gen_range(-spread..spread))
                    .collect()
            })
            .collect()
    }

    fn to_matrix(rows: &[Vec<f64>]) -> Array2<f64> {
        let cols = rows[0].len();
        Array2::from_shape_fn((rows.len(), cols), |(i, j)| rows[i][j])
    }

    #[test]
    fn smote_balances_to_majority_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut rows = blob(&mut rng, 40, &[0.0, 0.0], 1.0);
        rows.extend(blob(&mut rng, 10, &[5.0, 5.0], 1.0));
        let mut y: Vec<String> = vec!["big".into(); 40];
        y.extend(vec!["small".into(); 10]);
        let (x2, y2) = smote(to_matrix(&rows).view(), &y, 5, 7).unwrap();
        assert_eq!(y2.len(), 80);
        assert_eq!(y2.iter().filter(|l| *l == "small").count(), 40);
        assert_eq!(x2.nrows(), 80);
        // Originals pass through untouched, in order.
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(x2.row(i).to_vec(), *row);
        }
    }

    #[test]
    fn smote_synthetic_points_lie_on_minority_segments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut rows = blob(&mut rng, 30, &[0.0, 0.0, 0.0], 2.0);
        rows.extend(blob(&mut rng, 12, &[8.0, -3.0, 1.0], 2.0));
        let mut y: Vec<String> = vec!["maj".into(); 30];
        y.extend(vec!["min".into(); 12]);
        let x = to_matrix(&rows);
        let (x2, y2) = smote(x.view(), &y, 4, 11).unwrap();

        let minority: Vec<usize> = (30..42).collect();
        for s in y.len()..y2.len() {
            assert_eq!(y2[s], "min");
            let p: Vec<f64> = x2.row(s).to_vec();
            // Some minority pair (a, b) must satisfy p = a + lambda (b - a)
            // with lambda in [0, 1].
            let on_some_segment = minority.iter().any(|&a| {
                minority.iter().any(|&b| {
                    if a == b {
                        return false;
                    }
                    let seg: Vec<f64> = (0..3).map(|j| x[(b, j)] - x[(a, j)]).collect();
                    let off: Vec<f64> = (0..3).map(|j| p[j] - x[(a, j)]).collect();
                    let seg_sq: f64 = seg.iter().map(|v| v * v).sum();
                    let lambda = off.iter().zip(&seg).map(|(o, s)| o * s).sum::<f64>() / seg_sq;
                    if !(-1e-9..=1.0 + 1e-9).contains(&lambda) {
                        return false;
                    }
                    (0..3).all(|j| (off[j] - lambda * seg[j]).abs() <= 1e-9)
                })
            });
            assert!(on_some_segment, "synthetic row {s} is off every minority segment");
        }
    }

    #[test]
    fn smote_rejects_tiny_minorities() {
        let rows = vec![
            vec![0.0],
            vec![1.0],
            vec![2.0],
            vec![10.0],
            vec![11.0],
            vec![12.0],
            vec![13.0],
            vec![14.0],
        ];
        let y: Vec<String> = ["a", "a", "a", "b", "b", "b", "b", "b"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let err = smote(to_matrix(&rows).view(), &y, 5, 0).unwrap_err();
        assert!(matches!(err, Error::InsufficientMinority { size: 3, k: 5, .. }));
    }

    #[test]
    fn stratified_split_preserves_proportions() {
        let mut y: Vec<String> = vec!["a".into(); 50];
        y.extend(vec!["b".into(); 50]);
        let (train, test) = stratified_split(&y, 0.2, 3).unwrap();
        assert_eq!(test.len(), 20);
        assert_eq!(train.len(), 80);
        assert_eq!(test.iter().filter(|&&i| i < 50).count(), 10);
        let (train2, test2) = stratified_split(&y, 0.2, 3).unwrap();
        assert_eq!((&train, &test), (&train2, &test2));
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn forest_memorizes_separable_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut rows = blob(&mut rng, 60, &[0.0, 0.0], 1.0);
        rows.extend(blob(&mut rng, 60, &[6.0, 6.0], 1.0));
        let mut y: Vec<String> = vec!["left".into(); 60];
        y.extend(vec!["right".into(); 60]);
        let x = to_matrix(&rows);
        let config = ForestConfig { trees: 50, ..ForestConfig::default() };
        let forest = train_forest(x.view(), &y, &config).unwrap();
        let pred = forest.predict(x.view());
        let correct = pred.iter().zip(&y).filter(|(p, t)| p == t).count();
        assert!(correct as f64 / y.len() as f64 >= 0.99, "only {correct}/120 correct");
    }

    #[test]
    fn forest_is_deterministic_for_a_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut rows = blob(&mut rng, 40, &[0.0, 0.0, 0.0], 3.0);
        rows.extend(blob(&mut rng, 40, &[2.0, 2.0, 2.0], 3.0));
        let mut y: Vec<String> = vec!["a".into(); 40];
        y.extend(vec!["b".into(); 40]);
        let x = to_matrix(&rows);
        let config = ForestConfig { trees: 30, seed: 9, ..ForestConfig::default() };
        let p1 = train_forest(x.view(), &y, &config).unwrap().predict(x.view());
        let p2 = train_forest(x.view(), &y, &config).unwrap().predict(x.view());
        assert_eq!(p1, p2);
    }

    #[test]
    fn forest_matches_threshold_oracle_on_stump_data() {
        // One informative feature with a clean threshold at 0; a stump
        // classifying on sign is the oracle.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200;
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let v: f64 = rng.gen_range(-1.0..1.0);
            let noise: f64 = rng.gen_range(-1.0..1.0);
            rows.push(vec![v, noise]);
            y.push(if v <= 0.0 { "neg".to_string() } else { "pos".to_string() });
        }
        let x = to_matrix(&rows);
        let (train, test) = stratified_split(&y, 0.25, 1).unwrap();
        let x_train = x.select(Axis(0), &train);
        let y_train: Vec<String> = train.iter().map(|&i| y[i].clone()).collect();
        let x_test = x.select(Axis(0), &test);
        let y_test: Vec<String> = test.iter().map(|&i| y[i].clone()).collect();

        let config = ForestConfig { trees: 50, seed: 2, ..ForestConfig::default() };
        let forest = train_forest(x_train.view(), &y_train, &config).unwrap();
        let pred = forest.predict(x_test.view());
        let oracle: Vec<String> = test
            .iter()
            .map(|&i| if x[(i, 0)] <= 0.0 { "neg".to_string() } else { "pos".to_string() })
            .collect();
        assert!(f1(&y_test, &pred, "pos") >= 0.95);
        assert_eq!(oracle, y_test);
    }

    #[test]
    fn f1_hand_cases() {
        let t: Vec<String> = ["p", "p", "p", "n", "n"].iter().map(|s| s.to_string()).collect();
        assert_eq!(f1(&t, &t, "p"), 1.0);
        // TP=2, FP=1, FN=1 -> 2/3.
        let pred: Vec<String> = ["p", "p", "n", "p", "n"].iter().map(|s| s.to_string()).collect();
        assert!((f1(&t, &pred, "p") - 2.0 / 3.0).abs() < 1e-12);
        // No true or predicted positives.
        let none: Vec<String> = vec!["n".into(); 5];
        assert_eq!(f1(&none, &none, "p"), 0.0);
    }

    #[test]
    fn f1_invariant_under_class_renaming() {
        let t: Vec<String> = ["x", "x", "y", "y", "x"].iter().map(|s| s.to_string()).collect();
        let p: Vec<String> = ["x", "y", "y", "x", "x"].iter().map(|s| s.to_string()).collect();
        let t2: Vec<String> = t.iter().map(|l| if l == "x" { "q" } else { "r" }.to_string()).collect();
        let p2: Vec<String> = p.iter().map(|l| if l == "x" { "q" } else { "r" }.to_string()).collect();
        assert_eq!(f1(&t, &p, "x"), f1(&t2, &p2, "q"));
    }

    fn three_class_fixture() -> (HashMap<String, FeatureMatrix>, LabelMap) {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut rows = Vec::new();
        let mut ids = Vec::new();
        let mut labels: LabelMap = HashMap::new();
        let centers = [
            (UserClass::Regular, [0.0, 0.0]),
            (UserClass::Suspended, [6.0, 0.0]),
            (UserClass::Deleted, [0.0, 6.0]),
        ];
        let mut n = 0;
        for (class, center) in centers {
            for _ in 0..40 {
                let id = format!("u{n:03}");
                rows.push(vec![
                    center[0] + rng.gen_range(-1.0..1.0),
                    center[1] + rng.gen_range(-1.0..1.0),
                ]);
                labels.insert(id.clone(), class);
                ids.push(id);
                n += 1;
            }
        }
        let matrix = FeatureMatrix::new(
            ids,
            vec!["f0".into(), "f1".into()],
            to_matrix(&rows),
        );
        let mut sets = HashMap::new();
        sets.insert("U".to_string(), matrix);
        (sets, labels)
    }

    #[test]
    fn separation_dataset_relabels_and_restricts() {
        let (sets, labels) = three_class_fixture();
        let features = &sets["U"];
        let one_two = separation_dataset(
            features,
            &labels,
            &SeparationSpec::one_vs_two(UserClass::Deleted),
        )
        .unwrap();
        assert_eq!(one_two.len(), 120);
        assert_eq!(one_two.labels.iter().filter(|l| *l == "deleted").count(), 40);
        assert_eq!(one_two.labels.iter().filter(|l| *l == REST_LABEL).count(), 80);

        let one_one = separation_dataset(
            features,
            &labels,
            &SeparationSpec::one_vs_one(UserClass::Regular, UserClass::Deleted),
        )
        .unwrap();
        assert_eq!(one_one.len(), 80);
        assert!(one_one.labels.iter().all(|l| l == "regular" || l == "deleted"));
    }

    #[test]
    fn run_separation_scores_separable_classes_highly_and_reproducibly() {
        let (sets, labels) = three_class_fixture();
        let config = RunConfig {
            forest: ForestConfig { trees: 40, ..ForestConfig::default() },
            ..RunConfig::default()
        };
        for spec in all_separations() {
            let score = run_separation(&sets, "U", &labels, &spec, &config).unwrap();
            let again = run_separation(&sets, "U", &labels, &spec, &config).unwrap();
            assert_eq!(score, again, "{} not reproducible", spec.name());
            assert!(score >= 0.9, "{} scored {score}", spec.name());
        }
        assert!(matches!(
            run_separation(&sets, "U+F", &labels, &all_separations()[0], &config),
            Err(Error::UnknownFeatureSet(_))
        ));
    }
}
