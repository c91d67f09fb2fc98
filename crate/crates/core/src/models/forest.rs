//! CART regression forest over sparse binary features.
//!
//! A split on feature `f` sends rows with `f` set to the left child. Split
//! quality is the usual variance reduction, computed from per-feature counts
//! and target sums gathered in one pass over the node's rows.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encode::{FeatureMatrix, FeatureVector};
use crate::error::{Error, Result};
use crate::rng::{self, ChaCha8Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    /// 0 gives a single-leaf tree predicting the bootstrap mean.
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Share of features considered at each split, in (0, 1].
    pub feature_fraction: f64,
    pub seed: u64,
}

impl Default for ForestHyperparams {
    fn default() -> Self {
        ForestHyperparams {
            n_trees: 100,
            max_depth: 16,
            min_samples_split: 2,
            min_samples_leaf: 1,
            feature_fraction: 1.0 / 3.0,
            seed: 0,
        }
    }
}

impl ForestHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidArgument("n_trees must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidArgument("min_samples_split must be at least 2".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidArgument("min_samples_leaf must be at least 1".into()));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "feature_fraction must be in (0, 1], got {}",
                self.feature_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf { value: f64 },
    Split { feature: usize, present: usize, absent: usize },
}

/// Nodes in preorder; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn from_nodes(nodes: Vec<TreeNode>) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(Error::InvalidArgument("tree without nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if let TreeNode::Split { present, absent, .. } = *node {
                if present <= i || absent <= i || present >= n || absent >= n {
                    return Err(Error::InvalidArgument(format!("malformed tree at node {i}")));
                }
            }
        }
        Ok(Tree { nodes })
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn predict(&self, row: &FeatureVector) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, present, absent } => {
                    at = if row.contains(feature) { present } else { absent };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], at: usize) -> usize {
            match nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { present, absent, .. } => 1 + walk(nodes, present).max(walk(nodes, absent)),
            }
        }
        walk(&self.nodes, 0)
    }

    fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Split { feature, .. } => Some(*feature),
                TreeNode::Leaf { .. } => None,
            })
            .max()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    n_features: usize,
    trees: Vec<Tree>,
}

impl Forest {
    pub fn from_trees(n_features: usize, trees: Vec<Tree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidArgument("forest without trees".into()));
        }
        if let Some(f) = trees.iter().filter_map(Tree::max_feature).max() {
            if f >= n_features {
                return Err(Error::NodeOutOfRange { index: f, len: n_features });
            }
        }
        Ok(Forest { n_features, trees })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Mean of the tree predictions, summed in tree order.
    pub fn predict_row(&self, row: &FeatureVector) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Trains `hp.n_trees` trees on bootstrap samples. Tree `t` draws everything
/// from `ChaCha8(derive_seed(hp.seed, t))`, so the result does not depend on
/// how trees are scheduled across threads.
pub fn train_forest(x: &FeatureMatrix, hp: &ForestHyperparams) -> Result<Forest> {
    hp.validate()?;
    if x.is_empty() {
        return Err(Error::InvalidArgument("cannot train a forest on an empty matrix".into()));
    }
    if x.len() < hp.min_samples_split {
        return Err(Error::InvalidArgument(format!(
            "{} rows is below min_samples_split = {}",
            x.len(),
            hp.min_samples_split
        )));
    }
    let n_features = x.n_features();
    let trees = (0..hp.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::seeded(rng::derive_seed(hp.seed, t as u64));
            let n = x.len();
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            TreeBuilder::new(x, hp, rng).build(sample)
        })
        .collect();
    Forest::from_trees(n_features, trees)
}

struct TreeBuilder<'a> {
    rows: &'a [FeatureVector],
    targets: &'a [f64],
    hp: &'a ForestHyperparams,
    per_split: usize,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
    count: Vec<usize>,
    sum: Vec<f64>,
    touched: Vec<usize>,
}

impl<'a> TreeBuilder<'a> {
    fn new(x: &'a FeatureMatrix, hp: &'a ForestHyperparams, rng: ChaCha8Rng) -> Self {
        let n_features = x.n_features();
        TreeBuilder {
            rows: x.rows(),
            targets: x.targets(),
            hp,
            per_split: ((hp.feature_fraction * n_features as f64).ceil() as usize).clamp(1, n_features.max(1)),
            rng,
            nodes: Vec::new(),
            count: vec![0; n_features],
            sum: vec![0.0; n_features],
            touched: Vec::new(),
        }
    }

    fn build(mut self, sample: Vec<usize>) -> Tree {
        self.grow(sample, 0);
        Tree { nodes: self.nodes }
    }

    fn grow(&mut self, sample: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let total: f64 = sample.iter().map(|&i| self.targets[i]).sum();
        let n = sample.len();
        let leaf = TreeNode::Leaf { value: total / n as f64 };
        self.nodes.push(leaf);

        let first = self.targets[sample[0]];
        let pure = sample.iter().all(|&i| self.targets[i] == first);
        if pure || depth >= self.hp.max_depth || n < self.hp.min_samples_split || n < 2 * self.hp.min_samples_leaf {
            if pure {
                self.nodes[id] = TreeNode::Leaf { value: first };
            }
            return id;
        }
        let Some(feature) = self.best_split(&sample, total) else {
            return id;
        };
        let (present, absent): (Vec<usize>, Vec<usize>) = sample.into_iter().partition(|&i| self.rows[i].contains(feature));
        let p = self.grow(present, depth + 1);
        let a = self.grow(absent, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            present: p,
            absent: a,
        };
        id
    }

    /// Among a random subset of the features that vary within the node, the
    /// one with the largest variance reduction; ties go to the lower index.
    fn best_split(&mut self, sample: &[usize], total: f64) -> Option<usize> {
        for &i in sample {
            let y = self.targets[i];
            for &f in self.rows[i].indices() {
                if self.count[f] == 0 {
                    self.touched.push(f);
                }
                self.count[f] += 1;
                self.sum[f] += y;
            }
        }
        let n = sample.len();
        self.touched.sort_unstable();
        let varying: Vec<usize> = self.touched.iter().copied().filter(|&f| self.count[f] < n).collect();

        let mut candidates: Vec<usize> = if varying.len() <= self.per_split {
            varying
        } else {
            index::sample(&mut self.rng, varying.len(), self.per_split)
                .into_iter()
                .map(|j| varying[j])
                .collect()
        };
        candidates.sort_unstable();

        let min_leaf = self.hp.min_samples_leaf;
        let base = total * total / n as f64;
        let mut best: Option<(usize, f64)> = None;
        for f in candidates {
            let (nl, sl) = (self.count[f], self.sum[f]);
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let sr = total - sl;
            let gain = sl * sl / nl as f64 + sr * sr / nr as f64 - base;
            if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((f, gain));
            }
        }

        for &f in &self.touched {
            self.count[f] = 0;
            self.sum[f] = 0.0;
        }
        self.touched.clear();
        best.map(|(f, _)| f)
    }
}
