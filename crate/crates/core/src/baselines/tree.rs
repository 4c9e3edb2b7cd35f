use serde::{Deserialize, Serialize};

use super::Predictor;
use crate::corpus::{FeatureKind, FeatureMask, FeatureSchema, FeatureValue, Project};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartConfig {
    pub min_leaf: usize,
    /// Levels above this count are split one-vs-rest instead of by subset.
    pub max_exhaustive_levels: usize,
}

impl Default for CartConfig {
    fn default() -> Self {
        CartConfig {
            min_leaf: 5,
            max_exhaustive_levels: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    /// Values `<=` the threshold go left.
    Threshold(f64),
    /// Levels seen on each side during training.
    Levels { left: Vec<u32>, right: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        mean: f64,
        size: usize,
    },
    Split {
        feature: usize,
        rule: SplitRule,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
        /// Branch taken by levels never seen in training.
        majority_left: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: TreeNode,
    pub min_leaf: usize,
    pub min_effort: f64,
}

impl TreeModel {
    pub fn leaf_count(&self) -> usize {
        fn count(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => count(left) + count(right),
            }
        }
        count(&self.root)
    }
}

impl Predictor for TreeModel {
    fn predict(&self, x: &Project) -> Result<f64> {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { mean, .. } => return Ok(mean.max(self.min_effort)),
                TreeNode::Split {
                    feature,
                    rule,
                    left,
                    right,
                    majority_left,
                } => {
                    let go_left = match (rule, &x.features[*feature]) {
                        (SplitRule::Threshold(t), FeatureValue::Numeric(v)) => v <= t,
                        (SplitRule::Levels { left, right }, FeatureValue::Categorical(l)) => {
                            if left.contains(l) {
                                true
                            } else if right.contains(l) {
                                false
                            } else {
                                *majority_left
                            }
                        }
                        _ => *majority_left,
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }
}

struct Candidate {
    feature: usize,
    rule: SplitRule,
    sse: f64,
}

fn sse(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values
        .clone()
        .fold((0.0, 0.0), |(n, s), v| (n + 1.0, s + v));
    if n == 0.0 {
        return 0.0;
    }
    let mean = sum / n;
    values.map(|v| (v - mean).powi(2)).sum()
}

fn best_split(
    rows: &[&Project],
    schema: &[FeatureSchema],
    mask: &FeatureMask,
    cfg: &CartConfig,
) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    let mut consider = |c: Candidate| {
        if best.as_ref().is_none_or(|b| c.sse < b.sse) {
            best = Some(c);
        }
    };
    let n = rows.len();
    for &f in mask.indices() {
        match schema[f].kind {
            FeatureKind::Numeric => {
                let mut pts: Vec<(f64, f64)> = rows
                    .iter()
                    .filter_map(|p| p.features[f].as_numeric().map(|v| (v, p.effort)))
                    .collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                let total: f64 = pts.iter().map(|p| p.1).sum();
                let total_sq: f64 = pts.iter().map(|p| p.1 * p.1).sum();
                let (mut ls, mut lsq) = (0.0, 0.0);
                for i in 0..pts.len().saturating_sub(1) {
                    ls += pts[i].1;
                    lsq += pts[i].1 * pts[i].1;
                    let nl = i + 1;
                    let nr = n - nl;
                    if pts[i].0 == pts[i + 1].0 || nl < cfg.min_leaf || nr < cfg.min_leaf {
                        continue;
                    }
                    let rs = total - ls;
                    let rsq = total_sq - lsq;
                    let s = (lsq - ls * ls / nl as f64) + (rsq - rs * rs / nr as f64);
                    consider(Candidate {
                        feature: f,
                        rule: SplitRule::Threshold((pts[i].0 + pts[i + 1].0) / 2.0),
                        sse: s.max(0.0),
                    });
                }
            }
            FeatureKind::Categorical => {
                let mut levels: Vec<u32> = rows
                    .iter()
                    .filter_map(|p| p.features[f].as_level())
                    .collect();
                levels.sort_unstable();
                levels.dedup();
                if levels.len() < 2 {
                    continue;
                }
                let subsets: Vec<Vec<u32>> = if levels.len() <= cfg.max_exhaustive_levels {
                    // Subsets containing the first level, excluding the full set.
                    (0u64..(1 << (levels.len() - 1)) - 1)
                        .map(|bits| {
                            std::iter::once(levels[0])
                                .chain(
                                    levels[1..]
                                        .iter()
                                        .enumerate()
                                        .filter(|(i, _)| bits >> i & 1 == 1)
                                        .map(|(_, &l)| l),
                                )
                                .collect()
                        })
                        .collect()
                } else {
                    levels.iter().map(|&l| vec![l]).collect()
                };
                for left in subsets {
                    let right: Vec<u32> = levels
                        .iter()
                        .copied()
                        .filter(|l| !left.contains(l))
                        .collect();
                    let in_left =
                        |p: &&&Project| p.features[f].as_level().is_some_and(|l| left.contains(&l));
                    let nl = rows.iter().filter(in_left).count();
                    if nl < cfg.min_leaf || n - nl < cfg.min_leaf {
                        continue;
                    }
                    let s = sse(rows.iter().filter(in_left).map(|p| p.effort))
                        + sse(rows.iter().filter(|p| !in_left(p)).map(|p| p.effort));
                    consider(Candidate {
                        feature: f,
                        rule: SplitRule::Levels {
                            left: left.clone(),
                            right,
                        },
                        sse: s,
                    });
                }
            }
        }
    }
    best
}

fn grow(
    rows: Vec<&Project>,
    schema: &[FeatureSchema],
    mask: &FeatureMask,
    cfg: &CartConfig,
) -> TreeNode {
    let n = rows.len();
    let mean = rows.iter().map(|p| p.effort).sum::<f64>() / n as f64;
    let leaf = TreeNode::Leaf { mean, size: n };
    if n < 2 * cfg.min_leaf {
        return leaf;
    }
    let parent = sse(rows.iter().map(|p| p.effort));
    let Some(c) = best_split(&rows, schema, mask, cfg) else {
        return leaf;
    };
    if parent - c.sse <= 1e-12 * parent.max(f64::MIN_POSITIVE) {
        return leaf;
    }
    let goes_left = |p: &Project| match (&c.rule, &p.features[c.feature]) {
        (SplitRule::Threshold(t), FeatureValue::Numeric(v)) => v <= t,
        (SplitRule::Levels { left, .. }, FeatureValue::Categorical(l)) => left.contains(l),
        _ => false,
    };
    let (left, right): (Vec<&Project>, Vec<&Project>) =
        rows.into_iter().partition(|p| goes_left(p));
    let majority_left = left.len() >= right.len();
    TreeNode::Split {
        feature: c.feature,
        rule: c.rule,
        left: Box::new(grow(left, schema, mask, cfg)),
        right: Box::new(grow(right, schema, mask, cfg)),
        majority_left,
    }
}

/// Greedy variance-reduction regression tree with default settings.
pub fn fit_cart(
    train: &[&Project],
    schema: &[FeatureSchema],
    mask: &FeatureMask,
) -> Result<TreeModel> {
    fit_cart_with(train, schema, mask, &CartConfig::default())
}

pub fn fit_cart_with(
    train: &[&Project],
    schema: &[FeatureSchema],
    mask: &FeatureMask,
    cfg: &CartConfig,
) -> Result<TreeModel> {
    if cfg.min_leaf == 0 {
        return Err(Error::InvalidParameter("min_leaf must be >= 1".into()));
    }
    if train.len() < 2 * cfg.min_leaf {
        return Err(Error::TooFewProjects {
            needed: 2 * cfg.min_leaf,
            got: train.len(),
        });
    }
    if mask.indices().iter().any(|&f| f >= schema.len()) {
        return Err(Error::InvalidMask("feature index out of range".into()));
    }
    Ok(TreeModel {
        root: grow(train.to_vec(), schema, mask, cfg),
        min_leaf: cfg.min_leaf,
        min_effort: train.iter().map(|p| p.effort).fold(f64::INFINITY, f64::min),
    })
}
