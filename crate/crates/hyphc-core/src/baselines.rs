//! Comparison reducers: PCA, feature agglomeration, spectral embedding.
//!
//! All three take a standardized matrix and return `n x d`. They exist to
//! give the hyperbolic embedding something to be measured against, so the
//! emphasis is on reproducibility: deterministic eigenvector signs,
//! deterministic merge tie-breaks, no randomized solvers.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

/// Which reducer to run and with what shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducerMethod {
    Pca,
    Fa,
    Se,
}

impl ReducerMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReducerMethod::Pca => "pca",
            ReducerMethod::Fa => "fa",
            ReducerMethod::Se => "se",
        }
    }
}

impl std::str::FromStr for ReducerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(ReducerMethod::Pca),
            "fa" => Ok(ReducerMethod::Fa),
            "se" => Ok(ReducerMethod::Se),
            other => Err(Error::InvalidConfig(format!("unknown reducer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReducerSpec {
    pub method: ReducerMethod,
    pub dim: usize,
    /// Neighbor count for the spectral graph; ignored by the others.
    pub se_neighbors: usize,
}

impl ReducerSpec {
    pub fn validate(&self, input_cols: usize) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidConfig("reducer dim must be >= 1".into()));
        }
        if self.dim >= input_cols {
            return Err(Error::InvalidConfig(format!(
                "reducer dim {} must be below the input dimension {input_cols}",
                self.dim
            )));
        }
        if self.method == ReducerMethod::Se && self.se_neighbors == 0 {
            return Err(Error::InvalidConfig("se_neighbors must be >= 1".into()));
        }
        Ok(())
    }
}

/// Run the reducer named by `spec` on a standardized matrix, keeping ids and
/// naming output columns `<method>_001..`.
pub fn reduce(matrix: &FeatureMatrix, spec: &ReducerSpec) -> Result<FeatureMatrix> {
    spec.validate(matrix.n_cols())?;
    let values = match spec.method {
        ReducerMethod::Pca => pca_reduce(matrix.values().view(), spec.dim)?,
        ReducerMethod::Fa => feature_agglomeration(matrix.values().view(), spec.dim)?,
        ReducerMethod::Se => {
            spectral_embedding(matrix.values().view(), spec.dim, spec.se_neighbors)?
        }
    };
    let columns = (1..=spec.dim)
        .map(|k| format!("{}_{k:03}", spec.method.as_str()))
        .collect();
    Ok(FeatureMatrix::new(matrix.ids().to_vec(), columns, values))
}

/// Eigenvalue tolerance below which a direction is treated as null.
const EIG_TOL: f64 = 1e-10;

/// Flip each eigenvector so its largest-magnitude component is positive.
/// Eigen solvers are free to return either sign; CSV output is not.
fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

/// Eigenpairs of a symmetric matrix, sorted by eigenvalue, signs fixed.
fn sorted_symmetric_eigen(m: DMatrix<f64>, ascending: bool) -> Vec<(f64, DVector<f64>)> {
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &val)| (val, eig.eigenvectors.column(i).clone_owned()))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite eigenvalues"));
    if !ascending {
        pairs.reverse();
    }
    for (_, v) in &mut pairs {
        fix_sign(v);
    }
    pairs
}

/// Projection onto the top-`d` principal directions of the covariance.
///
/// If the matrix has rank below `d`, the surplus columns are zero and a
/// warning is logged rather than failing the run.
pub fn pca_reduce(m: ArrayView2<'_, f64>, d: usize) -> Result<Array2<f64>> {
    let (n, cols) = m.dim();
    if n == 0 || d == 0 || d >= cols {
        return Err(Error::InvalidConfig(format!(
            "pca needs 1 <= d < columns, got d={d}, columns={cols}, rows={n}"
        )));
    }
    let mean: Vec<f64> = (0..cols)
        .map(|j| m.column(j).iter().sum::<f64>() / n as f64)
        .collect();
    let mut centered = DMatrix::zeros(n, cols);
    for i in 0..n {
        for j in 0..cols {
            centered[(i, j)] = m[(i, j)] - mean[j];
        }
    }
    let cov = centered.transpose() * &centered / n as f64;
    let pairs = sorted_symmetric_eigen(cov, false);
    let rank = pairs.iter().filter(|(val, _)| *val > EIG_TOL).count();
    if rank < d {
        log::warn!("pca: input rank {rank} below requested dim {d}, padding with zero columns");
    }
    let mut out = Array2::zeros((n, d));
    for (k, (val, vec)) in pairs.iter().take(d).enumerate() {
        if *val <= EIG_TOL {
            break;
        }
        let scores = &centered * vec;
        for i in 0..n {
            out[(i, k)] = scores[i];
        }
    }
    Ok(out)
}

/// Ward agglomeration of COLUMNS into `d` clusters; each output column is
/// the plain mean of its members.
///
/// Runs the Lance-Williams recurrence on a merge-cost matrix seeded with
/// `1/2 |c_i - c_j|^2`, which keeps every entry equal to the SSE increase
/// of that merge. Ties break toward the smallest cluster index pair; a
/// merged cluster keeps the smaller index. Output columns are ordered by
/// each cluster's smallest original column index.
pub fn feature_agglomeration(m: ArrayView2<'_, f64>, d: usize) -> Result<Array2<f64>> {
    let (n, cols) = m.dim();
    if d == 0 || d > cols {
        return Err(Error::InvalidConfig(format!(
            "feature agglomeration needs 1 <= d <= columns, got d={d}, columns={cols}"
        )));
    }
    let assignment = ward_column_clusters(m, d);
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); d];
    for (col, &c) in assignment.iter().enumerate() {
        clusters[c].push(col);
    }
    let mut out = Array2::zeros((n, d));
    for (k, members) in clusters.iter().enumerate() {
        for i in 0..n {
            out[(i, k)] = members.iter().map(|&j| m[(i, j)]).sum::<f64>() / members.len() as f64;
        }
    }
    Ok(out)
}

/// Cluster columns down to `d` groups; returns per-column cluster labels in
/// 0..d, numbered by each cluster's smallest member column.
fn ward_column_clusters(m: ArrayView2<'_, f64>, d: usize) -> Vec<usize> {
    let cols = m.dim().1;
    // dist[i][j] for active i < j: SSE increase of merging clusters i and j.
    let mut dist = vec![vec![0.0f64; cols]; cols];
    for i in 0..cols {
        for j in (i + 1)..cols {
            let sq: f64 = m
                .column(i)
                .iter()
                .zip(m.column(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dist[i][j] = 0.5 * sq;
        }
    }
    let mut size = vec![1usize; cols];
    let mut active = vec![true; cols];
    let mut label: Vec<usize> = (0..cols).collect();

    for _ in 0..cols.saturating_sub(d) {
        let mut best: Option<(usize, usize)> = None;
        for i in 0..cols {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..cols {
                if !active[j] {
                    continue;
                }
                if best.is_none_or(|(bi, bj)| dist[i][j] < dist[bi][bj]) {
                    best = Some((i, j));
                }
            }
        }
        let (a, b) = best.expect("more than d active clusters");
        let (na, nb) = (size[a] as f64, size[b] as f64);
        let dab = dist[a][b];
        for c in 0..cols {
            if !active[c] || c == a || c == b {
                continue;
            }
            let nc = size[c] as f64;
            let dac = dist[a.min(c)][a.max(c)];
            let dbc = dist[b.min(c)][b.max(c)];
            let merged = ((na + nc) * dac + (nb + nc) * dbc - nc * dab) / (na + nb + nc);
            dist[a.min(c)][a.max(c)] = merged;
        }
        size[a] += size[b];
        active[b] = false;
        for l in label.iter_mut() {
            if *l == b {
                *l = a;
            }
        }
    }

    // Renumber surviving clusters 0..d by their representative index, which
    // is also each cluster's smallest original column.
    let mut reps: Vec<usize> = (0..cols).filter(|&i| active[i]).collect();
    reps.sort_unstable();
    let renum: std::collections::HashMap<usize, usize> =
        reps.iter().enumerate().map(|(k, &r)| (r, k)).collect();
    label.into_iter().map(|l| renum[&l]).collect()
}

/// Laplacian eigenmap over the union of directed k-NN graphs.
///
/// Edge weights are Gaussian with the median-heuristic bandwidth taken over
/// the graph's edge distances. If the graph splits into several components
/// each is embedded on its own and a warning is logged; rows in a component
/// with too few nonzero eigenvalues are zero-padded.
pub fn spectral_embedding(m: ArrayView2<'_, f64>, d: usize, k: usize) -> Result<Array2<f64>> {
    let n = m.dim().0;
    if d == 0 || k == 0 {
        return Err(Error::InvalidConfig("spectral embedding needs d >= 1 and k >= 1".into()));
    }
    if n <= d + 1 {
        return Err(Error::InvalidConfig(format!(
            "spectral embedding needs more than d+1 = {} rows, got {n}",
            d + 1
        )));
    }
    let k = k.min(n - 1);

    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let sq: f64 = m
                .row(i)
                .iter()
                .zip(m.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let val = sq.sqrt();
            dist[i * n + j] = val;
            dist[j * n + i] = val;
        }
    }

    // Union of directed k-NN edge sets, ties broken by neighbor index.
    let mut adjacent = vec![false; n * n];
    let mut edge_dists = Vec::new();
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| {
            dist[i * n + a]
                .partial_cmp(&dist[i * n + b])
                .expect("finite distances")
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            if !adjacent[i * n + j] {
                adjacent[i * n + j] = true;
                adjacent[j * n + i] = true;
                edge_dists.push(dist[i * n + j]);
            }
        }
    }
    edge_dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let mid = edge_dists.len() / 2;
    let median = if edge_dists.len() % 2 == 1 {
        edge_dists[mid]
    } else {
        0.5 * (edge_dists[mid - 1] + edge_dists[mid])
    };
    if median <= 0.0 {
        return Err(Error::DegenerateData(
            "median edge distance is zero; rows are duplicated".into(),
        ));
    }
    let sigma = median;

    let mut weights = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            if adjacent[i * n + j] {
                let r = dist[i * n + j];
                weights[i * n + j] = (-r * r / (2.0 * sigma * sigma)).exp();
            }
        }
    }

    let components = connected_components(&adjacent, n);
    let n_components = components.iter().max().map_or(0, |&c| c + 1);
    if n_components > 1 {
        log::warn!("spectral embedding: graph has {n_components} components, embedding each independently");
    }

    let mut out = Array2::zeros((n, d));
    for comp in 0..n_components {
        let nodes: Vec<usize> = (0..n).filter(|&i| components[i] == comp).collect();
        embed_component(&weights, n, &nodes, d, &mut out);
    }
    Ok(out)
}

/// Component labels via breadth-first search over the adjacency matrix.
fn connected_components(adjacent: &[bool], n: usize) -> Vec<usize> {
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([start]);
        label[start] = next;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if adjacent[i * n + j] && label[j] == usize::MAX {
                    label[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    label
}

/// Embed one connected component into the first `d` output columns using
/// the d smallest nonzero eigenvalues of its symmetric-normalized Laplacian.
fn embed_component(weights: &[f64], n: usize, nodes: &[usize], d: usize, out: &mut Array2<f64>) {
    let c = nodes.len();
    if c == 1 {
        return;
    }
    let mut w = DMatrix::zeros(c, c);
    for (a, &i) in nodes.iter().enumerate() {
        for (b, &j) in nodes.iter().enumerate() {
            w[(a, b)] = weights[i * n + j];
        }
    }
    let deg: Vec<f64> = (0..c).map(|a| w.row(a).sum()).collect();
    let mut lap = DMatrix::identity(c, c);
    for a in 0..c {
        for b in 0..c {
            if w[(a, b)] != 0.0 {
                lap[(a, b)] -= w[(a, b)] / (deg[a] * deg[b]).sqrt();
            }
        }
    }
    let pairs = sorted_symmetric_eigen(lap, true);
    let mut col = 0;
    for (val, vec) in &pairs {
        if *val <= EIG_TOL {
            continue;
        }
        if col == d {
            break;
        }
        for (a, &i) in nodes.iter().enumerate() {
            out[(i, col)] = vec[a];
        }
        col += 1;
    }
    if col < d {
        log::warn!(
            "spectral embedding: component of {c} nodes supports only {col} of {d} requested columns"
        );
    }
}
