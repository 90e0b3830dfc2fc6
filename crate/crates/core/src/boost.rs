//! Second-order gradient boosting on logistic loss.
//!
//! Positive rows have their gradient and Hessian multiplied by
//! `scale_pos_weight`; this is the booster's half of the class weighting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{midpoint, Node, Tree};
use crate::types::{FeatureVector, LabeledDataset, N_FEATURES};

/// Probability clamp used for gradients and loss.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub n_rounds: u64,
    pub learning_rate: f64,
    pub max_depth: u64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Minimum gain a split must clear.
    pub gamma: f64,
    /// Minimum Hessian sum on each side of a split.
    pub min_child_weight: f64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            n_rounds: 100,
            learning_rate: 0.3,
            max_depth: 6,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafValue {
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    pub trees: Vec<Tree<LeafValue>>,
    pub params: BoostParams,
    pub scale_pos_weight: f64,
    /// Log-odds intercept.
    pub base_score: f64,
    pub rng_seed: u64,
}

/// Gradient and Hessian of the scaled log-loss with respect to the logit.
pub fn grad_hess(p: f64, y: u8, w_pos: f64) -> (f64, f64) {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    let s = if y == 1 { w_pos } else { 1.0 };
    (s * (p - y as f64), s * p * (1.0 - p))
}

pub fn split_gain(
    g_left: f64,
    h_left: f64,
    g_right: f64,
    h_right: f64,
    lambda: f64,
    gamma: f64,
) -> f64 {
    let g = g_left + g_right;
    let h = h_left + h_right;
    0.5 * (g_left * g_left / (h_left + lambda) + g_right * g_right / (h_right + lambda)
        - g * g / (h + lambda))
        - gamma
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean weighted log-loss of logits `margins`, positives scaled by `w_pos`.
pub fn weighted_log_loss(margins: &[f64], y: &[u8], weights: &[f64], w_pos: f64) -> f64 {
    let mut total = 0.0;
    let mut mass = 0.0;
    for ((&f, &label), &w) in margins.iter().zip(y).zip(weights) {
        let (s, loss) = if label == 1 {
            (w_pos, softplus(-f))
        } else {
            (1.0, softplus(f))
        };
        total += w * s * loss;
        mass += w * s;
    }
    total / mass
}

struct Grower<'a> {
    x: &'a [FeatureVector],
    g: &'a [f64],
    h: &'a [f64],
    params: &'a BoostParams,
    nodes: Vec<Node<LeafValue>>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    fn sums(&self, idx: &[usize]) -> (f64, f64) {
        idx.iter()
            .fold((0.0, 0.0), |(g, h), &i| (g + self.g[i], h + self.h[i]))
    }

    fn best_split(&self, idx: &mut [usize], g_total: f64, h_total: f64) -> Option<BestSplit> {
        let mut best: Option<BestSplit> = None;
        for f in 0..N_FEATURES {
            idx.sort_unstable_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..idx.len() - 1 {
                let (r, next) = (idx[k], idx[k + 1]);
                gl += self.g[r];
                hl += self.h[r];
                let (lo, hi) = (self.x[r][f], self.x[next][f]);
                let mcw = self.params.min_child_weight;
                if lo == hi || hl < mcw || h_total - hl < mcw {
                    continue;
                }
                let gain = split_gain(
                    gl,
                    hl,
                    g_total - gl,
                    h_total - hl,
                    self.params.lambda,
                    self.params.gamma,
                );
                if gain > 0.0 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: midpoint(lo, hi),
                        gain,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: u64) -> usize {
        let id = self.nodes.len();
        let (g, h) = self.sums(idx);
        let leaf = LeafValue {
            value: -g / (h + self.params.lambda),
        };
        self.nodes.push(Node::Leaf(leaf));
        if depth >= self.params.max_depth || idx.len() < 2 {
            return id;
        }
        let Some(split) = self.best_split(idx, g, h) else {
            return id;
        };
        let x = self.x;
        idx.sort_unstable_by_key(|&i| (x[i][split.feature] > split.threshold, i));
        let mid = idx.partition_point(|&i| x[i][split.feature] <= split.threshold);
        let (l, r) = idx.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn validate_params(params: &BoostParams, scale_pos_weight: f64) -> Result<()> {
    if params.n_rounds == 0 {
        return Err(Error::domain("boost.n_rounds must be >= 1"));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::domain("boost.learning_rate must be in (0,1]"));
    }
    if !(params.lambda >= 0.0 && params.gamma >= 0.0 && params.min_child_weight >= 0.0) {
        return Err(Error::domain(
            "boost.lambda, boost.gamma and boost.min_child_weight must be >= 0",
        ));
    }
    if !(scale_pos_weight.is_finite() && scale_pos_weight > 0.0) {
        return Err(Error::domain("scale_pos_weight must be > 0"));
    }
    Ok(())
}

/// Fits the booster and returns it with the weighted training log-loss
/// after the intercept and after every round.
pub fn fit_boosted_traced(
    train: &LabeledDataset,
    params: &BoostParams,
    scale_pos_weight: f64,
    seed: u64,
) -> Result<(BoostModel, Vec<f64>)> {
    train.require_both_classes()?;
    validate_params(params, scale_pos_weight)?;
    let x = train.features();
    let y = train.labels();
    let w = train.weights();
    let n = x.len();

    let (mut pos, mut all) = (0.0, 0.0);
    for (&label, &wi) in y.iter().zip(w) {
        let s = if label == 1 { scale_pos_weight } else { 1.0 };
        all += wi * s;
        if label == 1 {
            pos += wi * s;
        }
    }
    let rate = pos / all;
    let base_score = (rate / (1.0 - rate)).ln();

    let mut margins = vec![base_score; n];
    let mut trace = vec![weighted_log_loss(&margins, y, w, scale_pos_weight)];
    let mut grads = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_rounds as usize);
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let (g, h) = grad_hess(sigmoid(margins[i]), y[i], scale_pos_weight);
            grads[i] = w[i] * g;
            hess[i] = w[i] * h;
        }
        let mut grower = Grower {
            x: &x,
            g: &grads,
            h: &hess,
            params,
            nodes: Vec::new(),
        };
        let mut idx: Vec<usize> = (0..n).collect();
        grower.grow(&mut idx, 0);
        let tree = Tree {
            nodes: grower.nodes,
        };
        for (m, v) in margins.iter_mut().zip(&x) {
            *m += params.learning_rate * tree.route(v).value;
        }
        trace.push(weighted_log_loss(&margins, y, w, scale_pos_weight));
        trees.push(tree);
    }

    let model = BoostModel {
        trees,
        params: params.clone(),
        scale_pos_weight,
        base_score,
        rng_seed: seed,
    };
    Ok((model, trace))
}

/// Rounds are deterministic; `seed` is recorded for provenance only.
pub fn fit_boosted(
    train: &LabeledDataset,
    params: &BoostParams,
    scale_pos_weight: f64,
    seed: u64,
) -> Result<BoostModel> {
    fit_boosted_traced(train, params, scale_pos_weight, seed).map(|(m, _)| m)
}

impl BoostModel {
    pub fn margin(&self, x: &FeatureVector) -> f64 {
        let lr = self.params.learning_rate;
        self.trees
            .iter()
            .fold(self.base_score, |acc, t| acc + lr * t.route(x).value)
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> f64 {
        boost_predict_proba(self, x)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let schema = |field: &str, message: &str| Error::ModelSchema {
            field: format!("boost.{field}"),
            message: message.into(),
        };
        if !(self.params.learning_rate > 0.0 && self.params.learning_rate <= 1.0) {
            return Err(schema("params.learning_rate", "must be in (0,1]"));
        }
        if !(self.scale_pos_weight.is_finite() && self.scale_pos_weight > 0.0) {
            return Err(schema("scale_pos_weight", "must be > 0"));
        }
        if !self.base_score.is_finite() {
            return Err(schema("base_score", "must be finite"));
        }
        if self.trees.len() as u64 > self.params.n_rounds {
            return Err(schema("trees", "more trees than n_rounds"));
        }
        for (i, t) in self.trees.iter().enumerate() {
            t.validate(&format!("boost.trees[{i}]"), |l| {
                (!l.value.is_finite()).then(|| "leaf value must be finite".to_string())
            })?;
        }
        Ok(())
    }
}

/// Strictly inside (0,1) even for extreme margins.
pub fn boost_predict_proba(model: &BoostModel, x: &FeatureVector) -> f64 {
    sigmoid(model.margin(x)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}
