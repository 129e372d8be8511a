//! Binary hierarchy decoding and the discrete Dasgupta cost.

use std::collections::BTreeSet;

use super::lca::lca_depth_cf;
use super::BallEmbedding;

/// Full binary tree over `n` leaves. Leaves are nodes `0..n`; internal node
/// `k` is node `n + k`, created bottom-up so children always precede their
/// parent. The root is the last internal node, `2n - 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTree {
    n_leaves: usize,
    children: Vec<[usize; 2]>,
    parent: Vec<Option<usize>>,
    leaf_count: Vec<usize>,
}

impl BinaryTree {
    /// Build from a merge sequence; each entry joins two current roots
    /// (node ids) into a new internal node.
    pub fn from_merges(n_leaves: usize, merges: &[(usize, usize)]) -> BinaryTree {
        assert!(n_leaves >= 2);
        assert_eq!(merges.len(), n_leaves - 1, "need exactly n-1 merges");
        let total = 2 * n_leaves - 1;
        let mut children = Vec::with_capacity(n_leaves - 1);
        let mut parent = vec![None; total];
        let mut leaf_count = vec![0usize; total];
        for leaf in leaf_count.iter_mut().take(n_leaves) {
            *leaf = 1;
        }
        for (k, &(a, b)) in merges.iter().enumerate() {
            let node = n_leaves + k;
            assert!(a < node && b < node && a != b, "merge of invalid nodes");
            assert!(parent[a].is_none() && parent[b].is_none(), "node merged twice");
            parent[a] = Some(node);
            parent[b] = Some(node);
            children.push([a, b]);
            leaf_count[node] = leaf_count[a] + leaf_count[b];
        }
        let tree = BinaryTree {
            n_leaves,
            children,
            parent,
            leaf_count,
        };
        assert_eq!(tree.leaf_count[tree.root()], n_leaves, "merges must form one tree");
        tree
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn root(&self) -> usize {
        2 * self.n_leaves - 2
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.n_leaves
    }

    pub fn children(&self, node: usize) -> Option<[usize; 2]> {
        (!self.is_leaf(node)).then(|| self.children[node - self.n_leaves])
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn leaf_count(&self, node: usize) -> usize {
        self.leaf_count[node]
    }

    /// Leaves under every node; internal nodes ordered children-first.
    fn leaf_lists(&self) -> Vec<Vec<usize>> {
        let mut lists: Vec<Vec<usize>> = (0..self.n_leaves).map(|i| vec![i]).collect();
        for k in 0..self.n_leaves - 1 {
            let [a, b] = self.children[k];
            let mut merged = lists[a].clone();
            merged.extend_from_slice(&lists[b]);
            lists.push(merged);
        }
        lists
    }

    /// The set of leaf sets of internal nodes: a canonical form for
    /// comparing hierarchies regardless of merge order or child order.
    pub fn cluster_sets(&self) -> BTreeSet<Vec<usize>> {
        self.leaf_lists()
            .into_iter()
            .skip(self.n_leaves)
            .map(|mut l| {
                l.sort_unstable();
                l
            })
            .collect()
    }
}

/// Exact discrete Dasgupta cost: for every leaf pair, the pair weight times
/// the leaf count of the pair's lowest common ancestor. Computed per
/// internal node over its cross pairs.
pub fn dasgupta_cost(tree: &BinaryTree, weight: impl Fn(usize, usize) -> f64) -> f64 {
    let lists = tree.leaf_lists();
    let mut cost = 0.0;
    for k in 0..tree.n_leaves - 1 {
        let node = tree.n_leaves + k;
        let [a, b] = tree.children[k];
        let size = tree.leaf_count[node] as f64;
        for &i in &lists[a] {
            for &j in &lists[b] {
                cost += weight(i, j) * size;
            }
        }
    }
    cost
}

/// Greedy agglomeration: repeatedly merge the two clusters whose closest
/// leaf pair (by LCA depth) is deepest, i.e. single linkage over LCA-depth
/// similarity. Ties merge the earliest cluster pair in index order.
pub fn decode_tree(embedding: &BallEmbedding) -> BinaryTree {
    let n = embedding.len();
    assert!(n >= 2, "need at least 2 points to decode a tree");

    // Pairwise LCA depths, slot-indexed.
    let mut sim = vec![f64::NEG_INFINITY; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = lca_depth_cf(embedding.point(i), embedding.point(j));
            sim[i * n + j] = d;
            sim[j * n + i] = d;
        }
    }

    let mut active: Vec<bool> = vec![true; n];
    let mut node_of: Vec<usize> = (0..n).collect();
    // Best partner per slot. For max-linkage the merged row dominates the
    // rows it replaces, so stale pointers can always be redirected without
    // a rescan.
    let mut best: Vec<(usize, f64)> = (0..n)
        .map(|i| {
            let mut arg = usize::MAX;
            let mut val = f64::NEG_INFINITY;
            for j in 0..n {
                if j != i && sim[i * n + j] > val {
                    val = sim[i * n + j];
                    arg = j;
                }
            }
            (arg, val)
        })
        .collect();

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        // Deepest pair among active slots; first occurrence wins ties.
        let mut bi = usize::MAX;
        let mut bv = f64::NEG_INFINITY;
        for i in 0..n {
            if active[i] && best[i].1 > bv {
                bv = best[i].1;
                bi = i;
            }
        }
        let (i, j) = {
            let j = best[bi].0;
            (bi.min(j), bi.max(j))
        };

        merges.push((node_of[i], node_of[j]));
        node_of[i] = n + step;
        active[j] = false;

        // Merged row keeps the max; redirect other slots' best pointers.
        let mut arg = usize::MAX;
        let mut val = f64::NEG_INFINITY;
        for k in 0..n {
            if !active[k] || k == i {
                continue;
            }
            let merged = sim[i * n + k].max(sim[j * n + k]);
            sim[i * n + k] = merged;
            sim[k * n + i] = merged;
            if merged > val {
                val = merged;
                arg = k;
            }
            if best[k].0 == i || best[k].0 == j {
                best[k] = (i, merged);
            } else if merged > best[k].1 {
                best[k] = (i, merged);
            }
        }
        best[i] = (arg, val);
    }
    BinaryTree::from_merges(n, &merges)
}
