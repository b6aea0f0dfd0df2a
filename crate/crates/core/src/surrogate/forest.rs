//! Random forest of regression trees over `±1` features.
//!
//! Every split tests one feature against zero (`-1` goes left, `+1` right),
//! chosen by the largest reduction in squared error among `ceil(sqrt(F))`
//! randomly drawn non-constant features. Ties go to the lowest feature index.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_features, Regressor, Samples};
use crate::datagen::row_seed;
use crate::ising::Spin;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ForestOptions {
    pub trees: usize,
    pub max_depth: usize,
    pub seed: u64,
    /// Candidate features per split; `None` means `ceil(sqrt(F))`.
    pub features_per_split: Option<usize>,
    /// Nodes with fewer samples become leaves.
    pub min_samples_split: usize,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self { trees: 100, max_depth: 16, seed: 0, features_per_split: None, min_samples_split: 2 }
    }
}

impl ForestOptions {
    pub fn validate(&self) -> Result<()> {
        if self.trees == 0 || self.features_per_split == Some(0) {
            return Err(Error::InvalidArgument("forest needs at least one tree and one candidate feature".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `x[feature] < 0` continues at `left`, otherwise at `right`.
    Split {
        feature: usize,
        left: usize,
        right: usize,
    },
}

/// A regression tree stored as a node array rooted at index 0. Children
/// always have larger indices than their parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[Spin]) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { value } => return value,
                Node::Split { feature, left, right } => k = if x[feature] < 0 { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    fn validate(&self, n_features: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidArgument("tree has no nodes".into()));
        }
        for (k, node) in self.nodes.iter().enumerate() {
            let ok = match *node {
                Node::Leaf { value } => (0.0..=1.0).contains(&value),
                Node::Split { feature, left, right } => {
                    feature < n_features && left > k && right > k && left < self.nodes.len() && right < self.nodes.len()
                }
            };
            if !ok {
                return Err(Error::InvalidArgument(format!("malformed tree node {k}: {node:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    n_features: usize,
    max_depth: usize,
    seed: u64,
    trees: Vec<Tree>,
}

impl ForestModel {
    /// Assembles a model, checking every node.
    pub fn new(n_features: usize, max_depth: usize, seed: u64, trees: Vec<Tree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidArgument("forest has no trees".into()));
        }
        for t in &trees {
            t.validate(n_features)?;
        }
        Ok(Self { n_features, max_depth, seed, trees })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The model made of the first `count` trees.
    pub fn truncated(&self, count: usize) -> Self {
        Self { trees: self.trees[..count.clamp(1, self.trees.len())].to_vec(), ..self.clone() }
    }
}

impl Regressor for ForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, x: &[Spin]) -> Result<f64> {
        check_features(self.n_features, x)?;
        Ok(running_mean(self.trees.iter().map(|t| t.predict(x))).clamp(0.0, 1.0))
    }
}

/// Mean that is exact when every value is equal.
fn running_mean(xs: impl Iterator<Item = f64>) -> f64 {
    let mut mean = 0.0;
    for (k, x) in xs.enumerate() {
        mean += (x - mean) / (k + 1) as f64;
    }
    mean
}

fn ceil_sqrt(n: usize) -> usize {
    let mut k = libm::sqrt(n as f64) as usize;
    while k * k < n {
        k += 1;
    }
    while k > 0 && (k - 1) * (k - 1) >= n {
        k -= 1;
    }
    k
}

struct Builder<'a> {
    data: &'a Samples,
    max_depth: usize,
    min_split: usize,
    per_split: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let mean = running_mean(idx.iter().map(|&i| self.data.target(i)));
        self.nodes.push(Node::Leaf { value: mean.clamp(0.0, 1.0) });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<usize> {
        let f = self.data.n_features();
        let mut candidates: Vec<usize> = (0..f)
            .filter(|&j| {
                let first = self.data.row(idx[0])[j];
                idx.iter().any(|&i| self.data.row(i)[j] != first)
            })
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let take = self.per_split.min(candidates.len());
        candidates.partial_shuffle(&mut self.rng, take);
        candidates.truncate(take);
        candidates.sort_unstable();

        let n = idx.len() as f64;
        let total: f64 = idx.iter().map(|&i| self.data.target(i)).sum();
        let mut best: Option<(usize, f64)> = None;
        for &j in &candidates {
            let (mut n_left, mut s_left) = (0usize, 0.0);
            for &i in idx {
                if self.data.row(i)[j] < 0 {
                    n_left += 1;
                    s_left += self.data.target(i);
                }
            }
            let (nl, nr) = (n_left as f64, n - n_left as f64);
            let diff = s_left / nl - (total - s_left) / nr;
            let gain = nl * nr / n * diff * diff;
            if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        best.map(|(j, _)| j)
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let first = self.data.target(idx[0]);
        let constant = idx.iter().all(|&i| self.data.target(i) == first);
        if depth >= self.max_depth || idx.len() < self.min_split || constant {
            return self.leaf(idx);
        }
        let Some(feature) = self.best_split(idx) else {
            return self.leaf(idx);
        };
        let k = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        // Stable partition keeps the bootstrap order, so growth is deterministic.
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.data.row(i)[feature] < 0);
        let l = self.grow(&mut left, depth + 1);
        let r = self.grow(&mut right, depth + 1);
        self.nodes[k] = Node::Split { feature, left: l, right: r };
        k
    }
}

/// Grows tree number `index` of a forest, on its own bootstrap resample.
pub fn train_tree(samples: &Samples, opts: &ForestOptions, index: usize) -> Result<Tree> {
    opts.validate()?;
    if samples.len() < 2 {
        return Err(Error::InvalidArgument("a forest needs at least two training rows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(row_seed(opts.seed, index as u64));
    let n = samples.len();
    let mut idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut b = Builder {
        data: samples,
        max_depth: opts.max_depth,
        min_split: opts.min_samples_split.max(2),
        per_split: opts.features_per_split.unwrap_or_else(|| ceil_sqrt(samples.n_features()).max(1)),
        rng,
        nodes: Vec::new(),
    };
    b.grow(&mut idx, 0);
    Ok(Tree { nodes: b.nodes })
}

/// Trains `opts.trees` trees in order.
pub fn train_forest(samples: &Samples, opts: &ForestOptions) -> Result<ForestModel> {
    let trees = (0..opts.trees).map(|k| train_tree(samples, opts, k)).collect::<Result<Vec<_>>>()?;
    ForestModel::new(samples.n_features(), opts.max_depth, opts.seed, trees)
}
