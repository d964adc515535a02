use serde::{Deserialize, Serialize};

use super::{column_means, fit_least_squares, shape, AffineForecaster, ForecastError, Result};
use crate::problems::Observation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeHyper {
    pub min_leaf: usize,
    /// Splits happen only at depths below this; the root has depth 0.
    pub max_depth: usize,
}

impl Default for TreeHyper {
    fn default() -> Self {
        Self {
            min_leaf: 25,
            max_depth: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeafPayload {
    Constant { value: Vec<f64> },
    Affine(AffineForecaster),
    Unset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub payload: LeafPayload,
    /// Training indices routed here at fit time.
    pub cohort: Vec<usize>,
}

/// Node indices point into [`TreeForecaster::nodes`], leaf indices into
/// [`TreeForecaster::leaves`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Left iff `x[feature] ≤ threshold`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        leaf: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeForecaster {
    pub hyper: TreeHyper,
    pub n_features: usize,
    pub n_outputs: usize,
    /// `nodes[0]` is the root.
    pub nodes: Vec<Node>,
    pub leaves: Vec<Leaf>,
}

impl TreeForecaster {
    pub fn leaf_index(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(ForecastError::DimensionMismatch(format!(
                "covariate of length {} for {} features",
                x.len(),
                self.n_features
            )));
        }
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { leaf } => return Ok(leaf),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let leaf = self.leaf_index(x)?;
        match &self.leaves[leaf].payload {
            LeafPayload::Constant { value } => Ok(value.clone()),
            LeafPayload::Affine(f) => f.predict(x),
            LeafPayload::Unset => Err(ForecastError::NotFitted(leaf)),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// The training rows of one leaf.
    pub fn cohort_data(&self, leaf: usize, data: &[Observation]) -> Vec<Observation> {
        self.leaves[leaf]
            .cohort
            .iter()
            .map(|&i| data[i].clone())
            .collect()
    }
}

/// Sum over outputs of the within-group sum of squares, two-pass.
pub fn split_sse(data: &[Observation], rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let m = data[rows[0]].xi.len();
    let mean = column_means(rows.iter().map(|&i| data[i].xi.as_slice()), m, rows.len());
    rows.iter()
        .map(|&i| {
            data[i]
                .xi
                .iter()
                .zip(&mean)
                .map(|(v, mu)| (v - mu).powi(2))
                .sum::<f64>()
        })
        .sum()
}

struct Candidate {
    sse: f64,
    feature: usize,
    threshold: f64,
}

/// Best split of `rows` over all features and midpoints, ties to the lowest
/// feature and then the lowest threshold.
fn best_split(data: &[Observation], rows: &[usize], min_leaf: usize) -> Option<Candidate> {
    let n = rows.len();
    let s = data[rows[0]].x.len();
    let m = data[rows[0]].xi.len();
    // Centering keeps the running sums well conditioned and makes constant
    // targets give exactly zero.
    let mean = column_means(rows.iter().map(|&i| data[i].xi.as_slice()), m, n);
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| data[i].xi.iter().zip(&mean).map(|(v, mu)| v - mu).collect())
        .collect();
    let total_sq: f64 = centered.iter().flatten().map(|v| v * v).sum();

    let mut best: Option<Candidate> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for j in 0..s {
        order.sort_by(|&a, &b| {
            data[rows[a]].x[j]
                .total_cmp(&data[rows[b]].x[j])
                .then(a.cmp(&b))
        });
        let mut sum = vec![0.0; m];
        let mut sq = 0.0;
        for k in 1..n {
            let prev = order[k - 1];
            for (acc, v) in sum.iter_mut().zip(&centered[prev]) {
                *acc += v;
            }
            sq += centered[prev].iter().map(|v| v * v).sum::<f64>();
            let lo = data[rows[prev]].x[j];
            let hi = data[rows[order[k]]].x[j];
            if !(lo < hi) || k < min_leaf || n - k < min_leaf {
                continue;
            }
            // Right-side sums follow from the totals since centered sums are 0.
            let s2: f64 = sum.iter().map(|v| v * v).sum();
            let left = sq - s2 / k as f64;
            let right = (total_sq - sq) - s2 / (n - k) as f64;
            let sse = left.max(0.0) + right.max(0.0);
            let threshold = 0.5 * (lo + hi);
            let better = match &best {
                None => true,
                Some(b) => sse < b.sse,
            };
            if better {
                best = Some(Candidate {
                    sse,
                    feature: j,
                    threshold,
                });
            }
        }
    }
    best.filter(|b| b.sse < total_sq * (1.0 - 1e-12))
}

fn grow(
    data: &[Observation],
    rows: Vec<usize>,
    depth: usize,
    hyper: &TreeHyper,
    tree: &mut TreeForecaster,
) -> usize {
    let id = tree.nodes.len();
    tree.nodes.push(Node::Leaf { leaf: usize::MAX });
    let split = if depth < hyper.max_depth && rows.len() >= 2 * hyper.min_leaf.max(1) {
        best_split(data, &rows, hyper.min_leaf.max(1))
    } else {
        None
    };
    match split {
        Some(c) => {
            let (l, r): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&i| data[i].x[c.feature] <= c.threshold);
            let left = grow(data, l, depth + 1, hyper, tree);
            let right = grow(data, r, depth + 1, hyper, tree);
            tree.nodes[id] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left,
                right,
            };
        }
        None => {
            tree.nodes[id] = Node::Leaf {
                leaf: tree.leaves.len(),
            };
            tree.leaves.push(Leaf {
                payload: LeafPayload::Unset,
                cohort: rows,
            });
        }
    }
    id
}

/// Greedy CART partition with unset leaf payloads.
pub fn fit_m5_structure(data: &[Observation], hyper: &TreeHyper) -> Result<TreeForecaster> {
    let (s, m) = shape(data)?;
    let mut tree = TreeForecaster {
        hyper: *hyper,
        n_features: s,
        n_outputs: m,
        nodes: vec![],
        leaves: vec![],
    };
    grow(data, (0..data.len()).collect(), 0, hyper, &mut tree);
    Ok(tree)
}

/// CART: leaves hold the mean target of their cohort.
pub fn fit_cart(data: &[Observation], hyper: &TreeHyper) -> Result<TreeForecaster> {
    let mut tree = fit_m5_structure(data, hyper)?;
    let m = tree.n_outputs;
    for leaf in &mut tree.leaves {
        let value = column_means(
            leaf.cohort.iter().map(|&i| data[i].xi.as_slice()),
            m,
            leaf.cohort.len(),
        );
        leaf.payload = LeafPayload::Constant { value };
    }
    Ok(tree)
}

/// Plain M5: least squares per leaf. Leaves too small for a regression keep
/// their cohort mean.
pub fn fit_m5(data: &[Observation], hyper: &TreeHyper) -> Result<TreeForecaster> {
    let mut tree = fit_m5_structure(data, hyper)?;
    let (s, m) = (tree.n_features, tree.n_outputs);
    for leaf in &mut tree.leaves {
        let cohort: Vec<Observation> = leaf.cohort.iter().map(|&i| data[i].clone()).collect();
        leaf.payload = match fit_least_squares(&cohort) {
            Ok(f) => LeafPayload::Affine(f),
            Err(ForecastError::RankDeficient { .. }) => {
                LeafPayload::Affine(AffineForecaster::constant(
                    column_means(cohort.iter().map(|o| o.xi.as_slice()), m, cohort.len()),
                    s,
                ))
            }
            Err(e) => return Err(e),
        };
    }
    Ok(tree)
}
