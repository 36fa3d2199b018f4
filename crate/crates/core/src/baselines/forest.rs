//! Extremely randomized regression trees.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::N_PARAMS;

pub const N_TREES: usize = 25;
const MIN_SAMPLES_SPLIT: usize = 2;

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64; N_PARAMS]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] < threshold { left } else { right };
                }
            }
        }
    }
}

/// Ensemble of trees grown on the full training set. Every split draws one
/// uniform threshold per feature and keeps the one with the largest variance
/// reduction.
#[derive(Debug, Clone)]
pub struct ExtraTrees {
    trees: Vec<Tree>,
}

fn sse(y: &[f64], idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / n;
    idx.iter().map(|&i| (y[i] - mean).powi(2)).sum()
}

fn grow(x: &[[f64; N_PARAMS]], y: &[f64], idx: Vec<usize>, rng: &mut impl Rng, nodes: &mut Vec<Node>) -> usize {
    let at = nodes.len();
    let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
    nodes.push(Node::Leaf(mean));
    if idx.len() < MIN_SAMPLES_SPLIT {
        return at;
    }
    let parent = sse(y, &idx);
    if parent <= 0.0 {
        return at;
    }
    let mut best: Option<(f64, usize, f64)> = None;
    for feature in 0..N_PARAMS {
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(x[i][feature]), hi.max(x[i][feature]))
        });
        if hi <= lo {
            continue;
        }
        let threshold = rng.gen_range(lo..hi);
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] < threshold);
        if l.is_empty() || r.is_empty() {
            continue;
        }
        let gain = parent - sse(y, &l) - sse(y, &r);
        if best.is_none_or(|b| gain > b.0) {
            best = Some((gain, feature, threshold));
        }
    }
    let Some((_, feature, threshold)) = best else {
        return at;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][feature] < threshold);
    let left = grow(x, y, l, rng, nodes);
    let right = grow(x, y, r, rng, nodes);
    nodes[at] = Node::Split { feature, threshold, left, right };
    at
}

impl ExtraTrees {
    pub fn fit(x: &[[f64; N_PARAMS]], y: &[f64], rng: &mut impl Rng) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::SurrogateFit(format!("{} inputs, {} targets", x.len(), y.len())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::SurrogateFit("non-finite training score".into()));
        }
        let trees = (0..N_TREES)
            .map(|_| {
                let mut nodes = Vec::new();
                grow(x, y, (0..y.len()).collect(), rng, &mut nodes);
                Tree { nodes }
            })
            .collect();
        Ok(Self { trees })
    }

    /// Mean and across-tree standard deviation at each query point.
    pub fn predict(&self, queries: &[[f64; N_PARAMS]]) -> Vec<(f64, f64)> {
        let n = self.trees.len() as f64;
        queries
            .iter()
            .map(|q| {
                let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(q)).collect();
                let mean = preds.iter().sum::<f64>() / n;
                let var = preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .collect()
    }
}
