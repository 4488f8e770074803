//! Random forest of CART trees grown to purity on Gini impurity.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifyError, LabeledMatrix, TrainedModel};
use crate::dataset::Label;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: Label,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Arena of nodes; index 0 is the root.
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> Label {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { label } => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

fn majority(labels: &[Label], indices: &[usize]) -> Label {
    let ad = indices.iter().filter(|&&i| labels[i] == Label::Ad).count();
    if 2 * ad >= indices.len() {
        Label::Ad
    } else {
        Label::NoAd
    }
}

/// Weighted Gini `n_l·G_l + n_r·G_r` (unnormalized) for two-class counts.
fn split_impurity(left_ad: usize, left: usize, right_ad: usize, right: usize) -> f64 {
    let gini = |ad: usize, n: usize| {
        if n == 0 {
            return 0.0;
        }
        let p = ad as f64 / n as f64;
        2.0 * p * (1.0 - p) * n as f64
    };
    gini(left_ad, left) + gini(right_ad, right)
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn best_split_on(
    rows: &[Vec<f64>],
    labels: &[Label],
    indices: &[usize],
    feature: usize,
    scratch: &mut Vec<(f64, Label)>,
) -> Option<Split> {
    scratch.clear();
    scratch.extend(indices.iter().map(|&i| (rows[i][feature], labels[i])));
    scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = scratch.len();
    let total_ad = scratch.iter().filter(|(_, l)| *l == Label::Ad).count();
    let mut left_ad = 0;
    let mut best: Option<Split> = None;
    for k in 1..n {
        if scratch[k - 1].1 == Label::Ad {
            left_ad += 1;
        }
        let (lo, hi) = (scratch[k - 1].0, scratch[k].0);
        if lo == hi {
            continue;
        }
        let impurity = split_impurity(left_ad, k, total_ad - left_ad, n - k);
        if best.as_ref().is_none_or(|b| impurity < b.impurity) {
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid >= hi { lo } else { mid };
            best = Some(Split {
                feature,
                threshold,
                impurity,
            });
        }
    }
    best
}

fn grow_tree(
    rows: &[Vec<f64>],
    labels: &[Label],
    sample: Vec<usize>,
    max_features: usize,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let width = rows[0].len();
    let mut nodes = vec![Node::Leaf { label: Label::Ad }];
    let mut stack = vec![(0usize, sample)];
    let mut features: Vec<usize> = (0..width).collect();
    let mut scratch = Vec::new();
    while let Some((slot, indices)) = stack.pop() {
        let label = majority(labels, &indices);
        let pure = indices.iter().all(|&i| labels[i] == labels[indices[0]]);
        if pure || indices.len() < 2 {
            nodes[slot] = Node::Leaf { label };
            continue;
        }

        // draw candidate features; keep drawing past the quota only while no split exists
        features.shuffle(rng);
        let mut best: Option<Split> = None;
        for (tried, &f) in features.iter().enumerate() {
            if tried >= max_features && best.is_some() {
                break;
            }
            if let Some(s) = best_split_on(rows, labels, &indices, f, &mut scratch) {
                if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else {
            nodes[slot] = Node::Leaf { label };
            continue;
        };

        let (left, right): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| rows[i][split.feature] <= split.threshold);
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { label });
        nodes.push(Node::Leaf { label });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        stack.push((r, right));
        stack.push((l, left));
    }
    DecisionTree { nodes }
}

/// Trains `trees` CART trees on bootstrap resamples, each node considering
/// `⌈√d⌉` random features.
///
/// Rows are put in a canonical order before resampling, and tree `t` draws
/// from its own ChaCha stream `t` under `seed`, so the model depends only on
/// the multiset of training rows and the seed.
pub fn train_forest(
    data: &LabeledMatrix,
    trees: usize,
    seed: u64,
) -> Result<TrainedModel, ClassifyError> {
    if trees == 0 {
        return Err(ClassifyError::InvalidParameter("trees = 0".to_string()));
    }
    data.require_both_classes()?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&data.rows()[a], &data.rows()[b]);
        ra.iter()
            .zip(rb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(data.labels()[a].cmp(&data.labels()[b]))
    });
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| data.rows()[i].clone()).collect();
    let labels: Vec<Label> = order.iter().map(|&i| data.labels()[i]).collect();

    let n = rows.len();
    let max_features = (data.width() as f64).sqrt().ceil().max(1.0) as usize;
    let forest = (0..trees)
        .map(|t| {
            let mut rng = tree_rng(seed, t);
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow_tree(&rows, &labels, sample, max_features, &mut rng)
        })
        .collect();
    Ok(TrainedModel::Forest {
        width: data.width(),
        trees: forest,
    })
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}
