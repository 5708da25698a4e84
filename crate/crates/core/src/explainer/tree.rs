//! CART classification trees over binary features.
//!
//! Splits test a single bit (threshold 0.5): samples with the bit unset go
//! left, set go right. Each node considers a fresh random subset of
//! `ceil(sqrt(feature_len))` features and takes the largest strictly positive
//! Gini decrease, lowest feature index first on ties.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExplainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Split { feature: u32, left: u32, right: u32 },
    Leaf { positive_fraction: f64, samples: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

/// Leaf reached by a sample, with the tests taken on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionPath {
    /// `(feature, bit_set)` per split, root first.
    pub steps: Vec<(usize, bool)>,
    pub positive_fraction: f64,
    pub samples: u32,
}

impl DecisionTree {
    /// Single-leaf tree.
    pub fn leaf(positive_fraction: f64, samples: u32) -> Self {
        Self {
            nodes: vec![TreeNode::Leaf {
                positive_fraction,
                samples,
            }],
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn path(&self, features: &[u8]) -> DecisionPath {
        let mut steps = Vec::new();
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Split {
                    feature,
                    left,
                    right,
                } => {
                    let set = features[feature as usize] != 0;
                    steps.push((feature as usize, set));
                    i = if set { right } else { left } as usize;
                }
                TreeNode::Leaf {
                    positive_fraction,
                    samples,
                } => {
                    return DecisionPath {
                        steps,
                        positive_fraction,
                        samples,
                    }
                }
            }
        }
    }

    pub fn predict(&self, features: &[u8]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Split {
                    feature,
                    left,
                    right,
                } => {
                    i = if features[feature as usize] != 0 {
                        right
                    } else {
                        left
                    } as usize
                }
                TreeNode::Leaf {
                    positive_fraction, ..
                } => return positive_fraction,
            }
        }
    }

    /// Structural checks for trees read from disk.
    pub fn validate(&self, feature_len: usize) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            match *node {
                TreeNode::Split {
                    feature,
                    left,
                    right,
                } => {
                    if feature as usize >= feature_len {
                        return Err(format!("node {i}: feature {feature} out of range"));
                    }
                    for child in [left, right] {
                        // children are always stored after their parent
                        if child as usize <= i || child as usize >= self.nodes.len() {
                            return Err(format!("node {i}: child {child} out of range"));
                        }
                    }
                }
                TreeNode::Leaf {
                    positive_fraction, ..
                } => {
                    if !(0.0..=1.0).contains(&positive_fraction) {
                        return Err(format!("node {i}: fraction {positive_fraction} out of [0, 1]"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `n * gini` for a node with `pos` positives out of `n`.
fn weighted_gini(n: usize, pos: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let p = pos as f64;
    let q = n - p;
    n - (p * p + q * q) / n
}

struct Grower<'a, R> {
    rows: &'a [&'a [u8]],
    labels: &'a [bool],
    params: TreeParams,
    n_candidates: usize,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
}

impl<R: Rng> Grower<'_, R> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> u32 {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.labels[i]).count();
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            positive_fraction: pos as f64 / n as f64,
            samples: n as u32,
        });

        let min_leaf = self.params.min_samples_leaf.max(1);
        if depth >= self.params.max_depth || pos == 0 || pos == n || n < 2 * min_leaf {
            return id as u32;
        }

        let n_features = self.rows[0].len();
        let mut candidates = sample(self.rng, n_features, self.n_candidates).into_vec();
        candidates.sort_unstable();

        let parent = weighted_gini(n, pos);
        let mut best: Option<(f64, usize)> = None;
        for &f in &candidates {
            let (mut n1, mut p1) = (0, 0);
            for &i in idx.iter() {
                if self.rows[i][f] != 0 {
                    n1 += 1;
                    p1 += self.labels[i] as usize;
                }
            }
            let n0 = n - n1;
            if n0 < min_leaf || n1 < min_leaf {
                continue;
            }
            let gain = parent - weighted_gini(n0, pos - p1) - weighted_gini(n1, p1);
            if gain > 1e-12 && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, f));
            }
        }
        let Some((_, feature)) = best else {
            return id as u32;
        };

        let mut split = 0;
        for j in 0..n {
            if self.rows[idx[j]][feature] == 0 {
                idx.swap(split, j);
                split += 1;
            }
        }
        let (zeros, ones) = idx.split_at_mut(split);
        let left = self.grow(zeros, depth + 1);
        let right = self.grow(ones, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature: feature as u32,
            left,
            right,
        };
        id as u32
    }
}

pub fn candidate_count(feature_len: usize) -> usize {
    ((feature_len as f64).sqrt().ceil() as usize).clamp(1, feature_len.max(1))
}

/// Fits one tree using the caller's random stream.
pub fn fit_tree_with_rng<R: Rng>(
    rows: &[&[u8]],
    labels: &[bool],
    params: &TreeParams,
    rng: &mut R,
) -> Result<DecisionTree, ExplainError> {
    if rows.is_empty() {
        return Err(ExplainError::EmptyData);
    }
    if rows.len() != labels.len() {
        return Err(ExplainError::LengthMismatch {
            expected: rows.len(),
            got: labels.len(),
        });
    }
    let width = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != width) {
        return Err(ExplainError::LengthMismatch {
            expected: width,
            got: bad.len(),
        });
    }
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    let mut grower = Grower {
        rows,
        labels,
        params: *params,
        n_candidates: candidate_count(width),
        rng,
        nodes: Vec::new(),
    };
    if width == 0 {
        grower.params.max_depth = 0;
    }
    grower.grow(&mut idx, 0);
    Ok(DecisionTree {
        nodes: grower.nodes,
    })
}

/// Fits one tree; deterministic in `seed`.
pub fn fit_tree(
    rows: &[&[u8]],
    labels: &[bool],
    params: &TreeParams,
    seed: u64,
) -> Result<DecisionTree, ExplainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fit_tree_with_rng(rows, labels, params, &mut rng)
}
