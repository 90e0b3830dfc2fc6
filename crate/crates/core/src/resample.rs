//! Cluster-centroid undersampling.
//!
//! The majority class is replaced by k-means centroids with `k` equal to the
//! minority count, giving a perfectly balanced training set. Clustering is
//! Lloyd's algorithm from k-means++ seeding; the assignment step queries a
//! k-d tree over the current centroids, which returns exactly what a linear
//! scan would (lowest index on distance ties).

use std::cmp::Ordering;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, derived_rng, rng_from_seed, stream};
use crate::types::{FeatureVector, GeoSample, LabeledDataset, ResampleParams, N_FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub centroids: Vec<FeatureVector>,
    pub assignments: Vec<usize>,
    /// Sum of squared point-to-centroid distances.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after the seeding assignment and after every Lloyd step.
    pub inertia_trace: Vec<f64>,
}

const LEAF_SIZE: usize = 8;
const BRUTE_FORCE_BELOW: usize = 32;

enum KdNode {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Nearest-centroid index.
struct CentroidIndex<'a> {
    centroids: &'a [FeatureVector],
    order: Vec<usize>,
    nodes: Vec<KdNode>,
}

impl<'a> CentroidIndex<'a> {
    fn new(centroids: &'a [FeatureVector]) -> Self {
        let mut index = Self {
            centroids,
            order: (0..centroids.len()).collect(),
            nodes: Vec::new(),
        };
        if centroids.len() >= BRUTE_FORCE_BELOW {
            index.build(0, centroids.len());
        }
        index
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(KdNode::Leaf { start, end });
            return id;
        }
        let c = self.centroids;
        let slice = &mut self.order[start..end];
        let dim = (0..N_FEATURES)
            .map(|d| {
                let (lo, hi) = slice
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                        (lo.min(c[i][d]), hi.max(c[i][d]))
                    });
                (d, hi - lo)
            })
            .fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            })
            .0;
        slice.sort_unstable_by(|&a, &b| c[a][dim].total_cmp(&c[b][dim]).then(a.cmp(&b)));
        let mid = start + (end - start) / 2;
        let value = c[self.order[mid]][dim];
        self.nodes.push(KdNode::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = KdNode::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    /// `(index, squared distance)` of the nearest centroid.
    fn nearest(&self, q: &FeatureVector) -> (usize, f64) {
        if self.nodes.is_empty() {
            let mut best = (0, f64::INFINITY);
            for (j, c) in self.centroids.iter().enumerate() {
                let d = q.squared_distance(c);
                if d < best.1 {
                    best = (j, d);
                }
            }
            return best;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        best
    }

    fn search(&self, node: usize, q: &FeatureVector, best: &mut (usize, f64)) {
        match self.nodes[node] {
            KdNode::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    let d = q.squared_distance(&self.centroids[j]);
                    if d < best.1 || (d == best.1 && j < best.0) {
                        *best = (j, d);
                    }
                }
            }
            KdNode::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, q, best);
                // `<=` so that equidistant centroids with lower indices are found.
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

/// Assigns every point to its nearest centroid; returns (changed, inertia).
fn assign(
    points: &[FeatureVector],
    centroids: &[FeatureVector],
    assignments: &mut [usize],
    distances: &mut [f64],
) -> (usize, f64) {
    let index = CentroidIndex::new(centroids);
    let mut changed = 0;
    for (i, p) in points.iter().enumerate() {
        let (j, d) = index.nearest(p);
        if assignments[i] != j {
            changed += 1;
            assignments[i] = j;
        }
        distances[i] = d;
    }
    (changed, distances.iter().sum())
}

fn kmeans_plus_plus<R: Rng>(points: &[FeatureVector], k: usize, rng: &mut R) -> Vec<FeatureVector> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| p.squared_distance(&centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    acc += d;
                    chosen = Some(i);
                    if acc > target {
                        break;
                    }
                }
            }
            chosen.expect("positive total implies a positive weight")
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(p.squared_distance(&c));
        }
        centroids.push(c);
    }
    centroids
}

/// Most restarts k-means will try.
pub const MAX_RESTARTS: usize = 10;
/// Point-centroid pairs a problem may have and still get more than one
/// restart; large problems get `RESTART_BUDGET / (n * k)` restarts.
pub const RESTART_BUDGET: usize = 2_000_000;

/// Number of k-means++ restarts for `n` points and `k` clusters.
pub fn restarts_for(n: usize, k: usize) -> usize {
    (RESTART_BUDGET / n.saturating_mul(k).max(1)).clamp(1, MAX_RESTARTS)
}

/// Lloyd's k-means from k-means++ seeding.
///
/// Iterates until no assignment changes, the largest centroid move drops
/// below `tol`, or `max_iter` steps. A cluster left empty is re-seeded at
/// the point currently farthest from its centroid. Small problems are
/// restarted from fresh seedings ([`restarts_for`]) and the lowest inertia
/// wins; the first restart alone decides large ones.
pub fn kmeans(
    points: &[FeatureVector],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansResult> {
    if points.is_empty() {
        return Err(Error::domain("k-means needs at least one point"));
    }
    if k == 0 || k > points.len() {
        return Err(Error::domain(format!(
            "k must be in [1, {}], got {k}",
            points.len()
        )));
    }
    let mut best: Option<KMeansResult> = None;
    for restart in 0..restarts_for(points.len(), k) {
        let run = lloyd(
            points,
            k,
            derive_seed(seed, stream::KMEANS, restart as u64),
            max_iter,
            tol,
        );
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn lloyd(points: &[FeatureVector], k: usize, seed: u64, max_iter: usize, tol: f64) -> KMeansResult {
    let n = points.len();
    let mut rng = rng_from_seed(seed);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let mut assignments = vec![usize::MAX; n];
    let mut distances = vec![0.0; n];
    let (_, mut inertia) = assign(points, &centroids, &mut assignments, &mut distances);
    let mut trace = vec![inertia];
    let mut iterations = 0;

    let mut sums = vec![[0.0; N_FEATURES]; k];
    let mut counts = vec![0usize; k];
    let mut lo = vec![[0.0; N_FEATURES]; k];
    let mut hi = vec![[0.0; N_FEATURES]; k];

    while iterations < max_iter {
        iterations += 1;
        sums.iter_mut().for_each(|s| *s = [0.0; N_FEATURES]);
        counts.iter_mut().for_each(|c| *c = 0);
        lo.iter_mut().for_each(|v| *v = [f64::INFINITY; N_FEATURES]);
        hi.iter_mut()
            .for_each(|v| *v = [f64::NEG_INFINITY; N_FEATURES]);
        for (p, &j) in points.iter().zip(&assignments) {
            counts[j] += 1;
            for d in 0..N_FEATURES {
                sums[j][d] += p[d];
                lo[j][d] = lo[j][d].min(p[d]);
                hi[j][d] = hi[j][d].max(p[d]);
            }
        }

        let mut next = centroids.clone();
        for j in 0..k {
            if counts[j] > 0 {
                let mut c = [0.0; N_FEATURES];
                for d in 0..N_FEATURES {
                    // The rounded mean can fall a hair outside its members.
                    c[d] = (sums[j][d] / counts[j] as f64).clamp(lo[j][d], hi[j][d]);
                }
                next[j] = FeatureVector(c);
            }
        }
        for j in (0..k).filter(|&j| counts[j] == 0) {
            let far = (0..n)
                .max_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(b.cmp(&a)))
                .expect("non-empty");
            next[j] = points[far];
            distances[far] = 0.0;
            assignments[far] = j;
        }

        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| a.squared_distance(b))
            .fold(0.0, f64::max)
            .sqrt();
        centroids = next;
        let (changed, new_inertia) = assign(points, &centroids, &mut assignments, &mut distances);
        debug_assert!(
            new_inertia <= inertia * (1.0 + 1e-9) + 1e-12,
            "inertia rose from {inertia} to {new_inertia}"
        );
        inertia = new_inertia;
        trace.push(inertia);
        if changed == 0 || shift < tol {
            break;
        }
    }

    KMeansResult {
        centroids,
        assignments,
        inertia,
        iterations,
        inertia_trace: trace,
    }
}

fn class_counts(data: &LabeledDataset) -> Result<(usize, usize)> {
    data.require_both_classes()?;
    Ok((data.negatives(), data.positives()))
}

/// Majority count over minority count.
pub fn undersample_ratio(data: &LabeledDataset) -> Result<f64> {
    let (neg, pos) = class_counts(data)?;
    Ok(neg.max(pos) as f64 / neg.min(pos) as f64)
}

fn mean_timestamp(times: &[DateTime<Utc>]) -> DateTime<Utc> {
    let sum: i128 = times.iter().map(|t| t.timestamp() as i128).sum();
    let mean = (sum / times.len() as i128) as i64;
    DateTime::from_timestamp(mean, 0).expect("mean of valid timestamps is valid")
}

/// Keeps the minority class verbatim and replaces the majority class with
/// `minority_count` k-means centroids. Ties count the negative class as the
/// majority. Output weights are 1 and row order is shuffled.
pub fn undersample(
    train: &LabeledDataset,
    seed: u64,
    params: &ResampleParams,
) -> Result<LabeledDataset> {
    let (neg, pos) = class_counts(train)?;
    let majority_label = if neg >= pos { 0u8 } else { 1u8 };
    let minority_label = 1 - majority_label;
    let k = neg.min(pos);

    let majority: Vec<GeoSample> = train
        .samples()
        .iter()
        .zip(train.labels())
        .filter(|&(_, &l)| l == majority_label)
        .map(|(s, _)| *s)
        .collect();
    let minority: Vec<GeoSample> = train
        .samples()
        .iter()
        .zip(train.labels())
        .filter(|&(_, &l)| l == minority_label)
        .map(|(s, _)| *s)
        .collect();

    let raw: Vec<FeatureVector> = majority.iter().map(GeoSample::features).collect();
    let mut box_lo = [f64::INFINITY; N_FEATURES];
    let mut box_hi = [f64::NEG_INFINITY; N_FEATURES];
    for p in &raw {
        for d in 0..N_FEATURES {
            box_lo[d] = box_lo[d].min(p[d]);
            box_hi[d] = box_hi[d].max(p[d]);
        }
    }

    let (points, scale) = if params.standardize {
        standardize(&raw)
    } else {
        (raw.clone(), None)
    };
    let km_seed = derive_seed(seed, stream::UNDERSAMPLE, 0);
    let result = kmeans(&points, k, km_seed, params.max_iter as usize, params.tol)?;

    let mut members: Vec<Vec<DateTime<Utc>>> = vec![Vec::new(); k];
    for (s, &j) in majority.iter().zip(&result.assignments) {
        members[j].push(s.timestamp());
    }

    let mut samples = minority.clone();
    let mut labels = vec![minority_label; minority.len()];
    for (j, c) in result.centroids.iter().enumerate() {
        let mut c = c.0;
        if let Some((mean, sd)) = &scale {
            for d in 0..N_FEATURES {
                c[d] = c[d] * sd[d] + mean[d];
            }
        }
        for d in 0..N_FEATURES {
            c[d] = c[d].clamp(box_lo[d], box_hi[d]);
        }
        let t = if members[j].is_empty() {
            majority[0].timestamp()
        } else {
            mean_timestamp(&members[j])
        };
        samples.push(GeoSample::new(t, c[0], c[1], c[2])?);
        labels.push(majority_label);
    }

    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut derived_rng(seed, stream::SHUFFLE, 0));
    let samples = order.iter().map(|&i| samples[i]).collect();
    let labels = order.iter().map(|&i| labels[i]).collect();
    LabeledDataset::unweighted(samples, labels)
}

type Scale = ([f64; N_FEATURES], [f64; N_FEATURES]);

fn standardize(points: &[FeatureVector]) -> (Vec<FeatureVector>, Option<Scale>) {
    let n = points.len() as f64;
    let mut mean = [0.0; N_FEATURES];
    let mut sd = [0.0; N_FEATURES];
    for d in 0..N_FEATURES {
        mean[d] = points.iter().map(|p| p[d]).sum::<f64>() / n;
        let var = points.iter().map(|p| (p[d] - mean[d]).powi(2)).sum::<f64>() / n;
        sd[d] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let scaled = points
        .iter()
        .map(|p| {
            let mut c = [0.0; N_FEATURES];
            for d in 0..N_FEATURES {
                c[d] = (p[d] - mean[d]) / sd[d];
            }
            FeatureVector(c)
        })
        .collect();
    (scaled, Some((mean, sd)))
}

/// Orders feature vectors lexicographically; used to compare centroid sets.
pub fn sort_features(v: &mut [FeatureVector]) {
    v.sort_by(|a, b| {
        a.0.iter()
            .zip(b.0.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
}
