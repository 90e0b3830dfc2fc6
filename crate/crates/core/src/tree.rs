//! Binary decision trees in node-list form.
//!
//! Nodes are stored in preorder; a split's children always have larger
//! indices than the split itself, so a walk from the root terminates. Both
//! the classification trees of the forest and the regression trees of the
//! booster use this layout and differ only in the leaf payload.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FeatureVector, N_FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node<L> {
    /// `x[feature] <= threshold` routes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(L),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<L> {
    pub nodes: Vec<Node<L>>,
}

impl<L> Tree<L> {
    pub fn leaf(payload: L) -> Self {
        Self {
            nodes: vec![Node::Leaf(payload)],
        }
    }

    /// Leaf payload reached by `x`.
    pub fn route(&self, x: &FeatureVector) -> &L {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(l) => return l,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk<L>(t: &Tree<L>, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    /// Structural check for trees read from disk.
    pub fn validate(&self, field: &str, check_leaf: impl Fn(&L) -> Option<String>) -> Result<()> {
        let err = |i: usize, message: String| Error::ModelSchema {
            field: format!("{field}.nodes[{i}]"),
            message,
        };
        if self.nodes.is_empty() {
            return Err(Error::ModelSchema {
                field: format!("{field}.nodes"),
                message: "tree has no nodes".into(),
            });
        }
        let mut parents = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= N_FEATURES {
                        return Err(err(i, format!("feature index {feature} out of range")));
                    }
                    if !threshold.is_finite() {
                        return Err(err(i, "threshold is not finite".into()));
                    }
                    for &c in [left, right] {
                        if c <= i || c >= self.nodes.len() {
                            return Err(err(i, format!("child index {c} is invalid")));
                        }
                        parents[c] += 1;
                    }
                }
                Node::Leaf(l) => {
                    if let Some(message) = check_leaf(l) {
                        return Err(err(i, message));
                    }
                }
            }
        }
        if let Some(i) = (1..parents.len()).find(|&i| parents[i] != 1) {
            return Err(err(
                i,
                "node is not referenced by exactly one parent".into(),
            ));
        }
        Ok(())
    }
}

/// Threshold strictly between two consecutive distinct sorted values.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    // Adjacent floats: the midpoint rounds onto `hi`.
    if mid >= hi {
        lo
    } else {
        mid
    }
}
