use serde::{Deserialize, Serialize};

/// A weak classifier over feature vectors: `predict` is the estimated
/// probability that a stitch is correct.
pub trait Learner {
    fn predict(&self, x: &[f64]) -> f64;
}

/// Trains one learner on weighted, labelled feature vectors.
pub trait LearnerFactory {
    type Output: Learner;

    fn train(&self, xs: &[Vec<f64>], ys: &[bool], weights: &[f64]) -> Self::Output;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Taken when `x[feature] < threshold`.
        below: Box<TreeNode>,
        above: Box<TreeNode>,
    },
}

/// Decision tree whose leaves hold the weighted fraction of positives that
/// reach them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
}

impl Learner for DecisionTree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    below,
                    above,
                } => {
                    node = if x[*feature] < *threshold { below } else { above };
                }
            }
        }
    }
}

/// Grows trees that minimise weighted binary cross-entropy: each split is
/// the one whose children have the lowest weighted entropy, and each leaf
/// predicts its weighted positive fraction (the cross-entropy minimiser).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeFactory {
    pub max_depth: usize,
    /// Children lighter than this share of the total weight are not split
    /// off.
    pub min_leaf_weight: f64,
}

impl Default for TreeFactory {
    fn default() -> Self {
        Self {
            max_depth: 2,
            min_leaf_weight: 1e-4,
        }
    }
}

fn entropy(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = (pos / total).clamp(0.0, 1.0);
    let h = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    total * (h(p) + h(1.0 - p))
}

struct Split {
    feature: usize,
    threshold: f64,
    cost: f64,
}

impl TreeFactory {
    fn grow(&self, xs: &[Vec<f64>], ys: &[bool], ws: &[f64], idx: &[usize], depth: usize, min_w: f64) -> TreeNode {
        let total: f64 = idx.iter().map(|&i| ws[i]).sum();
        let pos = idx.iter().filter(|&&i| ys[i]).fold(0.0, |acc, &i| acc + ws[i]);
        let leaf = TreeNode::Leaf {
            value: if total > 0.0 { (pos / total).clamp(0.0, 1.0) } else { 0.5 },
        };
        if depth >= self.max_depth || pos <= 0.0 || pos >= total {
            return leaf;
        }
        let Some(split) = self.best_split(xs, ys, ws, idx, total, pos, min_w) else {
            return leaf;
        };
        if split.cost >= entropy(pos, total) - 1e-12 {
            return leaf;
        }
        let (lo, hi): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| xs[i][split.feature] < split.threshold);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            below: Box::new(self.grow(xs, ys, ws, &lo, depth + 1, min_w)),
            above: Box::new(self.grow(xs, ys, ws, &hi, depth + 1, min_w)),
        }
    }

    #[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
    fn best_split(
        &self,
        xs: &[Vec<f64>],
        ys: &[bool],
        ws: &[f64],
        idx: &[usize],
        total: f64,
        pos: f64,
        min_w: f64,
    ) -> Option<Split> {
        let dims = xs.get(idx[0]).map_or(0, |x| x.len());
        let mut best: Option<Split> = None;
        let mut order = idx.to_vec();
        for f in 0..dims {
            order.sort_by(|&a, &b| xs[a][f].total_cmp(&xs[b][f]).then(a.cmp(&b)));
            let (mut wl, mut pl) = (0.0, 0.0);
            for n in 0..order.len() - 1 {
                let i = order[n];
                wl += ws[i];
                if ys[i] {
                    pl += ws[i];
                }
                let (v, next) = (xs[i][f], xs[order[n + 1]][f]);
                if next <= v || wl < min_w || total - wl < min_w {
                    continue;
                }
                let cost = entropy(pl, wl) + entropy(pos - pl, total - wl);
                if best.as_ref().is_none_or(|b| cost < b.cost - 1e-15) {
                    best = Some(Split {
                        feature: f,
                        threshold: 0.5 * (v + next),
                        cost,
                    });
                }
            }
        }
        best
    }
}

impl LearnerFactory for TreeFactory {
    type Output = DecisionTree;

    fn train(&self, xs: &[Vec<f64>], ys: &[bool], weights: &[f64]) -> DecisionTree {
        assert_eq!(xs.len(), ys.len());
        assert_eq!(xs.len(), weights.len());
        let idx: Vec<usize> = (0..xs.len()).filter(|&i| weights[i] > 0.0).collect();
        if idx.is_empty() {
            return DecisionTree {
                root: TreeNode::Leaf { value: 0.5 },
            };
        }
        let total: f64 = idx.iter().map(|&i| weights[i]).sum();
        let root = self.grow(xs, ys, weights, &idx, 0, self.min_leaf_weight * total);
        DecisionTree { root }
    }
}
