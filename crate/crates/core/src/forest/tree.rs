//! CART classification trees grown best-first on Gini impurity decrease.
//!
//! Candidate thresholds are midpoints between consecutive distinct values at a
//! node; sparse entries contribute an implicit zero. Among equal gains the
//! lowest feature index wins, then the lowest threshold.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::matrix::FeatureMatrix;
use crate::features::SparseVector;
use crate::rng::Rng;

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
    Leaf { probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    depth: usize,
    n_leaves: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub max_leaf_nodes: usize,
    pub max_features: usize,
    pub n_classes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted impurity decrease `W*G(parent) - WL*G(left) - WR*G(right)`.
    pub gain: f64,
}

impl DecisionTree {
    /// Wraps a node array whose root is at index 0.
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        fn depth_of(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + depth_of(nodes, *left as usize).max(depth_of(nodes, *right as usize))
                }
            }
        }
        let n_leaves = nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count();
        let depth = depth_of(&nodes, 0);
        DecisionTree { nodes, depth, n_leaves }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn leaf_probs(&self, x: &SparseVector) -> &[f64] {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { probs } => return probs,
                Node::Split { feature, threshold, left, right } => {
                    i = if x.get(*feature as usize) <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    /// Grows one tree. `weights[r]` is the multiplicity of row `r` (0 = absent).
    pub fn grow(x: &FeatureMatrix<'_>, y: &[usize], weights: &[u32], params: &TreeParams, rng: &mut Rng) -> Self {
        let root_rows: Vec<u32> = (0..x.n_rows() as u32).filter(|&r| weights[r as usize] > 0).collect();
        let mut builder = Builder { x, y, weights, params, nodes: Vec::new(), depth: 0, n_leaves: 1, seq: 0 };
        let mut heap = BinaryHeap::new();
        builder.nodes.push(Node::Leaf { probs: vec![] });
        if let Some(c) = builder.evaluate(0, root_rows, 0, rng) {
            heap.push(c);
        }
        while builder.n_leaves < params.max_leaf_nodes {
            let Some(cand) = heap.pop() else { break };
            for child in builder.split(cand, rng).into_iter().flatten() {
                heap.push(child);
            }
        }
        // Anything still queued stays a leaf (already written as one).
        DecisionTree { nodes: builder.nodes, depth: builder.depth, n_leaves: builder.n_leaves }
    }
}

struct Candidate {
    node: usize,
    rows: Vec<u32>,
    depth: usize,
    split: Split,
    seq: u64,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    /// Largest gain first; earlier-created node first among equals.
    fn cmp(&self, other: &Self) -> Ordering {
        self.split.gain.total_cmp(&other.split.gain).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Builder<'a, 'x> {
    x: &'a FeatureMatrix<'x>,
    y: &'a [usize],
    weights: &'a [u32],
    params: &'a TreeParams,
    nodes: Vec<Node>,
    depth: usize,
    n_leaves: usize,
    seq: u64,
}

impl Builder<'_, '_> {
    fn class_counts(&self, rows: &[u32]) -> Vec<f64> {
        let mut c = vec![0.0; self.params.n_classes];
        for &r in rows {
            c[self.y[r as usize]] += self.weights[r as usize] as f64;
        }
        c
    }

    /// Writes the node as a leaf and returns a split candidate if it may grow.
    fn evaluate(&mut self, node: usize, rows: Vec<u32>, depth: usize, rng: &mut Rng) -> Option<Candidate> {
        self.depth = self.depth.max(depth);
        let counts = self.class_counts(&rows);
        let total: f64 = counts.iter().sum();
        let probs = if total > 0.0 {
            counts.iter().map(|c| c / total).collect()
        } else {
            vec![1.0 / self.params.n_classes as f64; self.params.n_classes]
        };
        self.nodes[node] = Node::Leaf { probs };
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure || depth >= self.params.max_depth || total < 2.0 {
            return None;
        }
        let features = candidate_features(self.x.dims(), self.params.max_features, rng);
        let split = best_split(self.x, self.y, self.weights, &rows, &features, self.params.n_classes)?;
        self.seq += 1;
        Some(Candidate { node, rows, depth, split, seq: self.seq })
    }

    fn split(&mut self, cand: Candidate, rng: &mut Rng) -> [Option<Candidate>; 2] {
        let Split { feature, threshold, .. } = cand.split;
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) =
            cand.rows.iter().partition(|&&r| self.x.row(r as usize).get(feature) <= threshold);
        let left = self.nodes.len();
        self.nodes.push(Node::Leaf { probs: vec![] });
        self.nodes.push(Node::Leaf { probs: vec![] });
        self.nodes[cand.node] =
            Node::Split { feature: feature as u32, threshold, left: left as u32, right: left as u32 + 1 };
        self.n_leaves += 1;
        let l = self.evaluate(left, left_rows, cand.depth + 1, rng);
        let r = self.evaluate(left + 1, right_rows, cand.depth + 1, rng);
        [l, r]
    }
}

/// Features considered at one node, ascending.
fn candidate_features(dims: usize, max_features: usize, rng: &mut Rng) -> Vec<usize> {
    if max_features >= dims {
        return (0..dims).collect();
    }
    let mut f = sample(rng, dims, max_features.max(1)).into_vec();
    f.sort_unstable();
    f
}

fn weighted_sq_sum(counts: &[f64]) -> f64 {
    counts.iter().map(|c| c * c).sum()
}

/// Exact best split over `features` for the node holding `rows`.
pub fn best_split(
    x: &FeatureMatrix<'_>,
    y: &[usize],
    weights: &[u32],
    rows: &[u32],
    features: &[usize],
    n_classes: usize,
) -> Option<Split> {
    let mut node_counts = vec![0.0; n_classes];
    for &r in rows {
        node_counts[y[r as usize]] += weights[r as usize] as f64;
    }
    let total: f64 = node_counts.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let parent_term = weighted_sq_sum(&node_counts) / total;

    // Row membership lookup for the column scan.
    let in_node: std::collections::HashSet<u32> = rows.iter().copied().collect();
    let scan_column = |f: usize| -> Vec<(f64, usize, f64)> {
        let col = x.column(f);
        if col.len() <= rows.len() * 4 {
            col.iter()
                .filter(|(r, _)| in_node.contains(r))
                .map(|&(r, v)| (v, y[r as usize], weights[r as usize] as f64))
                .collect()
        } else {
            rows.iter()
                .filter_map(|&r| {
                    let v = x.row(r as usize).get(f);
                    (v != 0.0).then(|| (v, y[r as usize], weights[r as usize] as f64))
                })
                .collect()
        }
    };

    let mut best: Option<Split> = None;
    let mut left = vec![0.0; n_classes];
    for &f in features {
        let mut entries = scan_column(f);
        let mut zero_counts = node_counts.clone();
        for &(_, c, w) in &entries {
            zero_counts[c] -= w;
        }
        let zero_weight: f64 = zero_counts.iter().sum();
        if zero_weight > 0.5 {
            // Implicit zeros enter as one group; class weights are added below.
            entries.push((0.0, usize::MAX, zero_weight));
        }
        if entries.len() < 2 {
            continue;
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));

        left.iter_mut().for_each(|c| *c = 0.0);
        let mut left_w = 0.0;
        let mut i = 0;
        while i < entries.len() {
            let v = entries[i].0;
            while i < entries.len() && entries[i].0 == v {
                let (_, c, w) = entries[i];
                if c == usize::MAX {
                    for (l, z) in left.iter_mut().zip(&zero_counts) {
                        *l += z;
                    }
                } else {
                    left[c] += w;
                }
                left_w += w;
                i += 1;
            }
            if i == entries.len() {
                break;
            }
            let next = entries[i].0;
            let right_w = total - left_w;
            let right_sq: f64 = left.iter().zip(&node_counts).map(|(l, n)| (n - l) * (n - l)).sum();
            let gain = weighted_sq_sum(&left) / left_w + right_sq / right_w - parent_term;
            let mut threshold = v + (next - v) / 2.0;
            if threshold >= next {
                threshold = v;
            }
            if best.is_none_or(|b| gain > b.gain + GAIN_EPS) {
                best = Some(Split { feature: f, threshold, gain });
            }
        }
    }
    best.filter(|b| b.gain > GAIN_EPS)
}

/// Bootstrap multiplicities: `n` draws with replacement.
pub fn bootstrap_weights(n: usize, rng: &mut Rng) -> Vec<u32> {
    let mut w = vec![0u32; n];
    for _ in 0..n {
        w[rng.gen_range(0..n)] += 1;
    }
    w
}
