//! Weighted CART trees bagged into a random forest.
//!
//! Class weighting is folded into per-sample weights before fitting, so a
//! positive sample with class weight 94 counts as 94 negatives in every
//! impurity and leaf computation.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, derived_rng, rng_from_seed, stream};
use crate::tree::{midpoint, Node, Tree};
use crate::types::{FeatureVector, LabeledDataset, N_FEATURES};

/// Smallest impurity decrease accepted as a real improvement, and the
/// margin by which a later candidate must beat the incumbent. Rounding
/// alone never reorders mathematically tied splits.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: u64,
    pub max_depth: u64,
    pub min_samples_leaf: u64,
    pub features_per_split: u64,
    /// Fit each tree on a same-size resample drawn with replacement.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 32,
            min_samples_leaf: 1,
            // ceil(sqrt(3))
            features_per_split: 2,
            bootstrap: true,
        }
    }
}

/// Weighted class totals at a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub neg: f64,
    pub pos: f64,
}

impl ClassCounts {
    pub fn positive_fraction(&self) -> f64 {
        self.pos / (self.neg + self.pos)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree<ClassCounts>>,
    pub params: ForestParams,
    /// `(negative, positive)`.
    pub class_weights: [f64; 2],
    pub rng_seed: u64,
}

fn gini(neg: f64, pos: f64) -> f64 {
    let total = neg + pos;
    if total <= 0.0 {
        return 0.0;
    }
    let (a, b) = (neg / total, pos / total);
    1.0 - a * a - b * b
}

fn totals(y: &[u8], w: &[f64], idx: &[usize]) -> ClassCounts {
    let mut c = ClassCounts { neg: 0.0, pos: 0.0 };
    for &i in idx {
        if y[i] == 1 {
            c.pos += w[i];
        } else {
            c.neg += w[i];
        }
    }
    c
}

/// Best weighted-Gini split of the rows in `idx`. `features` must be sorted
/// ascending so that ties resolve to the lowest feature, then the lowest
/// threshold.
fn best_split_rows(
    x: &[FeatureVector],
    y: &[u8],
    w: &[f64],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
    order: &mut Vec<usize>,
) -> Option<Split> {
    let n = idx.len();
    if n < 2 || n < 2 * min_leaf {
        return None;
    }
    let total = totals(y, w, idx);
    let weight = total.neg + total.pos;
    let parent = gini(total.neg, total.pos);
    if parent == 0.0 {
        return None;
    }
    let mut best: Option<Split> = None;
    for &f in features {
        order.clear();
        order.extend_from_slice(idx);
        order.sort_unstable_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
        let (mut ln, mut lp) = (0.0, 0.0);
        for i in 0..n - 1 {
            let r = order[i];
            if y[r] == 1 {
                lp += w[r];
            } else {
                ln += w[r];
            }
            let (lo, hi) = (x[r][f], x[order[i + 1]][f]);
            if lo == hi || i + 1 < min_leaf || n - i - 1 < min_leaf {
                continue;
            }
            let (rn, rp) = (total.neg - ln, total.pos - lp);
            let wl = ln + lp;
            let wr = rn + rp;
            let child = (wl / weight) * gini(ln, lp) + (wr / weight) * gini(rn, rp);
            let decrease = parent - child;
            if decrease > MIN_DECREASE
                && best.is_none_or(|b| decrease > b.impurity_decrease + MIN_DECREASE)
            {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    impurity_decrease: decrease,
                });
            }
        }
    }
    best
}

/// Split over all rows maximizing the weighted Gini decrease, or `None`
/// when no threshold lowers impurity.
pub fn best_split(
    x: &[FeatureVector],
    y: &[u8],
    weights: &[f64],
    candidate_features: &[usize],
) -> Option<Split> {
    let idx: Vec<usize> = (0..x.len()).collect();
    let mut features = candidate_features.to_vec();
    features.sort_unstable();
    features.dedup();
    best_split_rows(x, y, weights, &idx, &features, 1, &mut Vec::new())
}

struct TreeBuilder<'a> {
    x: &'a [FeatureVector],
    y: &'a [u8],
    w: &'a [f64],
    params: &'a ForestParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node<ClassCounts>>,
    order: Vec<usize>,
}

impl TreeBuilder<'_> {
    fn choose_split(&mut self, idx: &[usize]) -> Option<Split> {
        let min_leaf = self.params.min_samples_leaf as usize;
        let m = (self.params.features_per_split as usize).clamp(1, N_FEATURES);
        let mut all: Vec<usize> = (0..N_FEATURES).collect();
        all.shuffle(&mut self.rng);
        let (head, tail) = all.split_at_mut(m);
        head.sort_unstable();
        tail.sort_unstable();
        best_split_rows(self.x, self.y, self.w, idx, head, min_leaf, &mut self.order).or_else(
            || {
                // Nothing usable among the drawn features: inspect the rest.
                best_split_rows(self.x, self.y, self.w, idx, tail, min_leaf, &mut self.order)
            },
        )
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = totals(self.y, self.w, idx);
        let pure = counts.neg == 0.0 || counts.pos == 0.0;
        let split = if pure || depth >= self.params.max_depth as usize {
            None
        } else {
            self.choose_split(idx)
        };
        let Some(split) = split else {
            self.nodes.push(Node::Leaf(counts));
            return id;
        };
        self.nodes.push(Node::Leaf(counts));
        let x = self.x;
        let mid = partition(idx, |i| x[i][split.feature] <= split.threshold);
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

/// Stable in-place partition; returns the count satisfying `pred`.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| pred(i));
    let k = yes.len();
    idx[..k].copy_from_slice(&yes);
    idx[k..].copy_from_slice(&no);
    k
}

/// Grows one weighted CART tree.
pub fn fit_tree(
    x: &[FeatureVector],
    y: &[u8],
    weights: &[f64],
    params: &ForestParams,
    seed: u64,
) -> Result<Tree<ClassCounts>> {
    if x.is_empty() {
        return Err(Error::domain("cannot fit a tree on no data"));
    }
    if x.len() != y.len() || x.len() != weights.len() {
        return Err(Error::domain("feature, label and weight lengths differ"));
    }
    let mut builder = TreeBuilder {
        x,
        y,
        w: weights,
        params,
        rng: rng_from_seed(seed),
        nodes: Vec::new(),
        order: Vec::with_capacity(x.len()),
    };
    let mut idx: Vec<usize> = (0..x.len()).collect();
    builder.grow(&mut idx, 0);
    Ok(Tree {
        nodes: builder.nodes,
    })
}

/// Seed used for tree `index` of a forest trained with `seed`.
pub fn tree_seed(seed: u64, index: u64) -> u64 {
    derive_seed(seed, stream::TREE, index)
}

/// Bags `params.n_trees` trees; each sample carries
/// `weight × class_weights[label]`.
pub fn fit_forest(
    train: &LabeledDataset,
    params: &ForestParams,
    class_weights: [f64; 2],
    seed: u64,
) -> Result<ForestModel> {
    train.require_both_classes()?;
    if params.n_trees == 0 {
        return Err(Error::domain("forest needs at least one tree"));
    }
    if !class_weights.iter().all(|w| w.is_finite() && *w > 0.0) {
        return Err(Error::domain("class weights must be positive"));
    }
    let x = train.features();
    let y = train.labels();
    let w: Vec<f64> = train
        .weights()
        .iter()
        .zip(y)
        .map(|(&sw, &label)| sw * class_weights[label as usize])
        .collect();
    let n = x.len();

    let trees = (0..params.n_trees)
        .map(|t| {
            if params.bootstrap {
                let mut rng = derived_rng(seed, stream::FOREST, t);
                let draw: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let bx: Vec<_> = draw.iter().map(|&i| x[i]).collect();
                let by: Vec<_> = draw.iter().map(|&i| y[i]).collect();
                let bw: Vec<_> = draw.iter().map(|&i| w[i]).collect();
                fit_tree(&bx, &by, &bw, params, tree_seed(seed, t))
            } else {
                fit_tree(&x, y, &w, params, tree_seed(seed, t))
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ForestModel {
        trees,
        params: params.clone(),
        class_weights,
        rng_seed: seed,
    })
}

/// Mean over trees of the positive weighted fraction at the reached leaf.
pub fn forest_predict_proba(model: &ForestModel, x: &FeatureVector) -> f64 {
    let sum: f64 = model
        .trees
        .iter()
        .map(|t| t.route(x).positive_fraction())
        .sum();
    sum / model.trees.len() as f64
}

impl ForestModel {
    pub fn predict_proba(&self, x: &FeatureVector) -> f64 {
        forest_predict_proba(self, x)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::ModelSchema {
                field: "forest.trees".into(),
                message: "forest has no trees".into(),
            });
        }
        for (i, t) in self.trees.iter().enumerate() {
            t.validate(&format!("forest.trees[{i}]"), |c| {
                let ok = c.neg.is_finite()
                    && c.pos.is_finite()
                    && c.neg >= 0.0
                    && c.pos >= 0.0
                    && c.neg + c.pos > 0.0;
                (!ok).then(|| "leaf class weights must be >= 0 and not both zero".to_string())
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_timestamp;
    use crate::types::GeoSample;
    use proptest::prelude::*;
    use rand::Rng;

    fn line(xs: &[f64]) -> Vec<FeatureVector> {
        xs.iter()
            .map(|&v| FeatureVector::new(v, 0.0, 600.0))
            .collect()
    }

    fn dataset(points: &[(f64, f64, f64, u8)]) -> LabeledDataset {
        let t = parse_timestamp("2018-01-01T00:00:00Z").unwrap();
        let samples = points
            .iter()
            .map(|&(a, b, c, _)| GeoSample::new(t, a, b, c).unwrap())
            .collect();
        LabeledDataset::unweighted(samples, points.iter().map(|p| p.3).collect()).unwrap()
    }

    /// Exhaustive oracle: every feature, every midpoint, Gini recomputed
    /// from scratch for both sides.
    fn oracle_split(
        x: &[FeatureVector],
        y: &[u8],
        w: &[f64],
        features: &[usize],
    ) -> Option<(usize, f64, f64)> {
        let side = |keep: &dyn Fn(usize) -> bool| {
            let (mut n, mut p) = (0.0, 0.0);
            for i in 0..x.len() {
                if keep(i) {
                    if y[i] == 1 {
                        p += w[i]
                    } else {
                        n += w[i]
                    }
                }
            }
            (n, p)
        };
        let g = |(n, p): (f64, f64)| {
            if n + p == 0.0 {
                0.0
            } else {
                1.0 - (n / (n + p)).powi(2) - (p / (n + p)).powi(2)
            }
        };
        let (tn, tp) = side(&|_| true);
        let parent = g((tn, tp));
        let mut best: Option<(usize, f64, f64)> = None;
        for &f in features {
            let mut vals: Vec<f64> = x.iter().map(|v| v[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for pair in vals.windows(2) {
                let thr = midpoint(pair[0], pair[1]);
                let l = side(&|i| x[i][f] <= thr);
                let r = side(&|i| x[i][f] > thr);
                let dec = parent - ((l.0 + l.1) * g(l) + (r.0 + r.1) * g(r)) / (tn + tp);
                if dec > 1e-12 && best.is_none_or(|b| dec > b.2 + 1e-12) {
                    best = Some((f, thr, dec));
                }
            }
        }
        best
    }

    #[test]
    fn pure_split_on_a_line() {
        let x = line(&[1.0, 2.0, 3.0, 4.0]);
        let s = best_split(&x, &[0, 0, 1, 1], &[1.0; 4], &[0]).unwrap();
        assert_eq!((s.feature, s.threshold), (0, 2.5));
        assert!((s.impurity_decrease - 0.5).abs() < 1e-15);
        assert!(best_split(&x, &[0; 4], &[1.0; 4], &[0]).is_none());
        assert!(best_split(&line(&[5.0, 5.0]), &[0, 1], &[1.0; 2], &[0]).is_none());
    }

    #[test]
    fn ties_go_to_lowest_feature() {
        // Features 0 and 1 separate identically.
        let x = vec![
            FeatureVector::new(0.0, 0.0, 1.0),
            FeatureVector::new(1.0, 1.0, 1.0),
        ];
        let s = best_split(&x, &[0, 1], &[1.0, 1.0], &[2, 1, 0]).unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn pure_input_is_a_single_leaf() {
        let x = line(&[1.0, 2.0, 3.0]);
        let t = fit_tree(&x, &[1, 1, 1], &[1.0; 3], &ForestParams::default(), 0).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert!(fit_tree(&[], &[], &[], &ForestParams::default(), 0).is_err());
    }

    #[test]
    fn weighted_leaf_balances_one_positive() {
        // One positive among 94 negatives at identical coordinates, weight 94.
        let x = line(&[1.0; 95]);
        let mut y = vec![0u8; 95];
        y[0] = 1;
        let mut w = vec![1.0; 95];
        w[0] = 94.0;
        let t = fit_tree(&x, &y, &w, &ForestParams::default(), 0).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.route(&x[0]).positive_fraction(), 0.5);
    }

    #[test]
    fn separable_line_gives_a_stump() {
        let x = line(&[1.0, 2.0, 3.0, 4.0]);
        let params = ForestParams {
            features_per_split: 3,
            ..ForestParams::default()
        };
        let t = fit_tree(&x, &[0, 0, 1, 1], &[1.0; 4], &params, 0).unwrap();
        assert_eq!(t.depth(), 1);
        let oracle = oracle_split(&x, &[0, 0, 1, 1], &[1.0; 4], &[0, 1, 2]).unwrap();
        match t.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => assert_eq!((feature, threshold), (oracle.0, oracle.1)),
            _ => panic!("expected split"),
        }
    }

    #[test]
    fn depth_cap_and_min_leaf() {
        let pts: Vec<_> = (0..64)
            .map(|i| (i as f64, (i * 7 % 13) as f64, 600.0, (i % 3 == 0) as u8))
            .collect();
        let data = dataset(&pts);
        let params = ForestParams {
            max_depth: 3,
            min_samples_leaf: 4,
            n_trees: 5,
            ..ForestParams::default()
        };
        let m = fit_forest(&data, &params, [1.0, 1.0], 1).unwrap();
        for t in &m.trees {
            assert!(t.depth() <= 3);
        }
        let x = data.features();
        let t = fit_tree(&x, data.labels(), data.weights(), &params, 3).unwrap();
        let mut hits = vec![0usize; t.nodes.len()];
        for v in &x {
            let leaf = t.route(v) as *const ClassCounts;
            let i = t
                .nodes
                .iter()
                .position(|n| matches!(n, Node::Leaf(c) if std::ptr::eq(c, leaf)))
                .unwrap();
            hits[i] += 1;
        }
        for (i, n) in t.nodes.iter().enumerate() {
            if matches!(n, Node::Leaf(_)) {
                assert!(hits[i] >= 4, "leaf {i} holds {}", hits[i]);
            }
        }
    }

    #[test]
    fn one_tree_without_bootstrap_equals_fit_tree() {
        let pts: Vec<_> = (0..40)
            .map(|i| {
                (
                    (i * 3 % 17) as f64,
                    (i * 5 % 11) as f64,
                    600.0 + i as f64,
                    (i % 4 == 0) as u8,
                )
            })
            .collect();
        let data = dataset(&pts);
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            ..ForestParams::default()
        };
        let forest = fit_forest(&data, &params, [1.0, 1.0], 9).unwrap();
        let tree = fit_tree(
            &data.features(),
            data.labels(),
            data.weights(),
            &params,
            tree_seed(9, 0),
        )
        .unwrap();
        for v in data.features() {
            assert_eq!(
                forest_predict_proba(&forest, &v),
                tree.route(&v).positive_fraction()
            );
        }
    }

    #[test]
    fn forest_is_deterministic_and_rejects_single_class() {
        let pts: Vec<_> = (0..30)
            .map(|i| (i as f64, (i % 5) as f64, 600.0, (i % 3 == 0) as u8))
            .collect();
        let data = dataset(&pts);
        let params = ForestParams {
            n_trees: 10,
            ..ForestParams::default()
        };
        let a = fit_forest(&data, &params, [1.0, 94.0], 5).unwrap();
        let b = fit_forest(&data, &params, [1.0, 94.0], 5).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let single = dataset(&[(0.0, 0.0, 600.0, 1), (1.0, 0.0, 600.0, 1)]);
        assert!(fit_forest(&single, &params, [1.0, 1.0], 0).is_err());
    }

    #[test]
    fn prediction_is_a_mean_of_leaf_fractions() {
        let leaf = |neg, pos| Tree::leaf(ClassCounts { neg, pos });
        let model = ForestModel {
            trees: vec![leaf(4.0, 1.0), leaf(1.0, 4.0)],
            params: ForestParams::default(),
            class_weights: [1.0, 1.0],
            rng_seed: 0,
        };
        let x = FeatureVector::new(0.0, 0.0, 1.0);
        assert!((forest_predict_proba(&model, &x) - 0.5).abs() < 1e-15);
        let single = ForestModel {
            trees: vec![leaf(3.0, 1.0)],
            ..model.clone()
        };
        assert_eq!(forest_predict_proba(&single, &x), 0.25);
        let pure = ForestModel {
            trees: vec![leaf(0.0, 2.0); 3],
            ..model
        };
        assert_eq!(forest_predict_proba(&pure, &x), 1.0);
    }

    fn small_problem() -> impl Strategy<Value = (Vec<FeatureVector>, Vec<u8>, Vec<f64>)> {
        prop::collection::vec((0u8..6, 0u8..6, 0u8..3, 0u8..2, 1u8..5), 2..=12).prop_map(|rows| {
            let x = rows
                .iter()
                .map(|r| FeatureVector::new(r.0 as f64, r.1 as f64, r.2 as f64))
                .collect();
            let y = rows.iter().map(|r| r.3).collect();
            let w = rows.iter().map(|r| r.4 as f64).collect();
            (x, y, w)
        })
    }

    proptest! {
        #[test]
        fn split_matches_exhaustive_oracle((x, y, _) in small_problem()) {
            let w = vec![1.0; x.len()];
            let got = best_split(&x, &y, &w, &[0, 1, 2]);
            let want = oracle_split(&x, &y, &w, &[0, 1, 2]);
            match (got, want) {
                (None, None) => {}
                (Some(g), Some(o)) => {
                    prop_assert!((g.impurity_decrease - o.2).abs() < 1e-12);
                    prop_assert_eq!((g.feature, g.threshold), (o.0, o.1));
                }
                (g, o) => prop_assert!(false, "got {:?}, oracle {:?}", g, o),
            }
        }

        #[test]
        fn scaling_all_weights_changes_nothing((x, y, w) in small_problem(), k in -6i32..6) {
            let c = 2f64.powi(k);
            let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
            let params = ForestParams { features_per_split: 3, ..ForestParams::default() };
            let a = fit_tree(&x, &y, &w, &params, 1).unwrap();
            let b = fit_tree(&x, &y, &scaled, &params, 1).unwrap();
            prop_assert_eq!(a.nodes.len(), b.nodes.len());
            for v in &x {
                prop_assert_eq!(a.route(v).positive_fraction(), b.route(v).positive_fraction());
            }
        }

        #[test]
        fn probabilities_stay_in_unit_interval((x, y, w) in small_problem(), seed in any::<u64>()) {
            let t = fit_tree(&x, &y, &w, &ForestParams::default(), seed).unwrap();
            for v in &x {
                let p = t.route(v).positive_fraction();
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }

    fn stump_split(t: &Tree<ClassCounts>) -> Option<(usize, f64)> {
        match t.nodes[0] {
            Node::Split {
                feature, threshold, ..
            } => Some((feature, threshold)),
            Node::Leaf(_) => None,
        }
    }

    /// Raising the positive class weight can move a stump's split and push a
    /// positive out of a pure leaf, so monotonicity holds at the leaf-count
    /// level: whenever the refit keeps the same split, no training positive
    /// loses probability.
    #[test]
    fn positive_weight_is_monotone_at_the_leaf_level() {
        let params = ForestParams {
            n_trees: 1,
            max_depth: 1,
            bootstrap: false,
            features_per_split: 3,
            ..ForestParams::default()
        };
        let mut rng = rng_from_seed(17);
        let mut compared = 0;
        for _ in 0..300 {
            let n = rng.random_range(4..14);
            let pts: Vec<_> = (0..n)
                .map(|_| {
                    (
                        rng.random_range(0..5) as f64,
                        rng.random_range(0..5) as f64,
                        600.0,
                        rng.random_range(0..2u8),
                    )
                })
                .collect();
            let data = dataset(&pts);
            if data.require_both_classes().is_err() {
                continue;
            }
            let positives: Vec<FeatureVector> = data
                .samples()
                .iter()
                .zip(data.labels())
                .filter(|&(_, &l)| l == 1)
                .map(|(s, _)| s.features())
                .collect();
            let mut last: Option<(Option<(usize, f64)>, Vec<f64>)> = None;
            for wpos in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0] {
                let m = fit_forest(&data, &params, [1.0, wpos], 3).unwrap();
                let split = stump_split(&m.trees[0]);
                let probs: Vec<f64> = positives
                    .iter()
                    .map(|x| forest_predict_proba(&m, x))
                    .collect();
                if let Some((prev_split, prev)) = &last {
                    if *prev_split == split {
                        compared += 1;
                        for (a, b) in prev.iter().zip(&probs) {
                            assert!(b >= a, "weight {wpos}: {a} -> {b} on {pts:?}");
                        }
                    }
                }
                last = Some((split, probs));
            }
        }
        assert!(compared > 500, "only {compared} comparisons");
    }

    #[test]
    fn refit_can_lower_a_positive_when_the_split_moves() {
        let pts = [
            (4.0, 3.0, 600.0, 0),
            (3.0, 1.0, 600.0, 0),
            (2.0, 4.0, 600.0, 0),
            (3.0, 4.0, 600.0, 0),
            (0.0, 0.0, 600.0, 1),
            (2.0, 2.0, 600.0, 0),
            (0.0, 0.0, 600.0, 1),
            (3.0, 3.0, 600.0, 1),
            (3.0, 1.0, 600.0, 1),
            (0.0, 3.0, 600.0, 1),
        ];
        let data = dataset(&pts);
        let params = ForestParams {
            n_trees: 1,
            max_depth: 1,
            bootstrap: false,
            features_per_split: 3,
            ..ForestParams::default()
        };
        let probe = |w: f64| {
            let m = fit_forest(&data, &params, [1.0, w], 3).unwrap();
            (0..pts.len())
                .filter(|&i| pts[i].3 == 1)
                .map(|i| forest_predict_proba(&m, &data.samples()[i].features()))
                .collect::<Vec<_>>()
        };
        let (low, high) = (probe(2.0), probe(5.0));
        assert!(
            low.iter().zip(&high).any(|(a, b)| b < a),
            "{low:?} {high:?}"
        );
    }
}
