//! Supervised classification and unsupervised clustering over app
//! embeddings: k-fold cross-validation with a linear SVM and a decision
//! tree, plus k-means and DBSCAN scored by silhouette and Davies-Bouldin.

use serde::{Deserialize, Serialize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::neural::shuffle;

/// Feature rows with integer class labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Class id to display name.
    pub label_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "label id {bad} has no name (only {} known)",
                label_names.len()
            )));
        }
        Ok(LabeledDataset {
            features,
            labels,
            label_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Assignment of every sample to one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

/// Output of a clustering run. `-1` marks noise (DBSCAN only); other ids
/// are contiguous from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub labels: Vec<i32>,
    pub centroids: Option<Vec<Vec<f64>>>,
}

/// Splits `m` samples into `k` folds: seeded shuffle, then contiguous
/// slices, with the first `m % k` folds one sample larger.
pub fn kfold_split(m: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    if m < k {
        return Err(Error::InvalidArgument(format!(
            "cannot split {m} samples into {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle(&mut order, &mut rng);
    let base = m / k;
    let extra = m % k;
    let mut assignments = vec![0usize; m];
    let mut cursor = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &sample in &order[cursor..cursor + size] {
            assignments[sample] = fold;
        }
        cursor += size;
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Hyperparameters of the linear SVM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// L2 regularization strength.
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            lambda: 1e-4,
            epochs: 30,
            seed: 42,
        }
    }
}

/// One-vs-rest linear SVM. Weight rows carry the bias as a trailing
/// constant-one feature.
#[derive(Debug, Clone)]
pub struct LinearSvm {
    weights: Vec<Vec<f64>>,
    dim: usize,
}

fn distinct_classes(labels: &[usize]) -> Vec<usize> {
    let set: BTreeSet<usize> = labels.iter().copied().collect();
    set.into_iter().collect()
}

/// Trains one-vs-rest hinge-loss classifiers by stochastic subgradient
/// descent with step `1 / (lambda * t)` and seeded per-epoch shuffling.
pub fn train_linear_svm(train: &LabeledDataset, config: &SvmConfig) -> Result<LinearSvm> {
    let classes = distinct_classes(&train.labels);
    if classes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "svm training needs at least 2 classes, got {}",
            classes.len()
        )));
    }
    let dim = train.features.first().map_or(0, Vec::len);
    let n_classes = train.label_names.len();
    let mut weights = vec![vec![0.0; dim + 1]; n_classes];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for class in classes {
        let w = &mut weights[class];
        let mut t = 0u64;
        for _ in 0..config.epochs {
            shuffle(&mut order, &mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (config.lambda * t as f64);
                let x = &train.features[i];
                let y = if train.labels[i] == class { 1.0 } else { -1.0 };
                let margin = y * (dot(&w[..dim], x) + w[dim]);
                let decay = 1.0 - eta * config.lambda;
                for wv in w.iter_mut() {
                    *wv *= decay;
                }
                if margin < 1.0 {
                    for (wv, &xv) in w.iter_mut().zip(x) {
                        *wv += eta * y * xv;
                    }
                    w[dim] += eta * y;
                }
            }
        }
    }
    Ok(LinearSvm { weights, dim })
}

impl LinearSvm {
    /// Raw margin of one class for a feature row.
    pub fn margin(&self, class: usize, x: &[f64]) -> f64 {
        dot(&self.weights[class][..self.dim], x) + self.weights[class][self.dim]
    }

    /// Argmax margin; ties go to the lower class id.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut best = 0usize;
        let mut best_margin = f64::NEG_INFINITY;
        for (class, _) in self.weights.iter().enumerate() {
            let m = self.margin(class, x);
            if m > best_margin {
                best_margin = m;
                best = class;
            }
        }
        best
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hyperparameters of the decision tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone)]
enum TreeNode {
    Leaf {
        label: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART classifier with Gini impurity and midpoint thresholds.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / total as f64;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

fn majority_label(labels: &[usize], samples: &[usize], n_classes: usize) -> usize {
    let mut counts = vec![0usize; n_classes];
    for &i in samples {
        counts[labels[i]] += 1;
    }
    let mut best = 0usize;
    for (class, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = class;
        }
    }
    best
}

struct TreeBuilder<'a> {
    dataset: &'a LabeledDataset,
    config: TreeConfig,
    n_classes: usize,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    /// Best axis-aligned split of `samples`: the largest Gini decrease,
    /// ties toward the lower feature index, then the lower threshold.
    fn best_split(&self, samples: &[usize]) -> Option<(usize, f64)> {
        let total = samples.len();
        let dim = self.dataset.features.first().map_or(0, Vec::len);
        let mut parent_counts = vec![0usize; self.n_classes];
        for &i in samples {
            parent_counts[self.dataset.labels[i]] += 1;
        }
        let parent_gini = gini(&parent_counts, total);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<usize> = samples.to_vec();
        for feature in 0..dim {
            sorted.sort_by(|&a, &b| {
                self.dataset.features[a][feature].total_cmp(&self.dataset.features[b][feature])
            });
            let mut left_counts = vec![0usize; self.n_classes];
            let mut left_total = 0usize;
            let mut right_counts = parent_counts.clone();
            for window in 0..total - 1 {
                let i = sorted[window];
                left_counts[self.dataset.labels[i]] += 1;
                right_counts[self.dataset.labels[i]] -= 1;
                left_total += 1;
                let a = self.dataset.features[i][feature];
                let b = self.dataset.features[sorted[window + 1]][feature];
                if a == b {
                    continue;
                }
                let threshold = a + (b - a) / 2.0;
                let weighted = (left_total as f64 * gini(&left_counts, left_total)
                    + (total - left_total) as f64
                        * gini(&right_counts, total - left_total))
                    / total as f64;
                let decrease = parent_gini - weighted;
                if decrease > 1e-12 {
                    let better = match best {
                        None => true,
                        Some((bd, _, _)) => decrease > bd,
                    };
                    if better {
                        best = Some((decrease, feature, threshold));
                    }
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }

    fn build(&mut self, samples: &[usize], depth: usize) -> usize {
        let first_label = self.dataset.labels[samples[0]];
        let pure = samples
            .iter()
            .all(|&i| self.dataset.labels[i] == first_label);
        let depth_capped = self.config.max_depth.is_some_and(|d| depth >= d);
        let too_small = samples.len() < self.config.min_samples_split;
        let split = if pure || depth_capped || too_small {
            None
        } else {
            self.best_split(samples)
        };
        match split {
            None => {
                let label = majority_label(&self.dataset.labels, samples, self.n_classes);
                self.nodes.push(TreeNode::Leaf { label });
                self.nodes.len() - 1
            }
            Some((feature, threshold)) => {
                let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
                    .iter()
                    .partition(|&&i| self.dataset.features[i][feature] <= threshold);
                let left = self.build(&left_samples, depth + 1);
                let right = self.build(&right_samples, depth + 1);
                self.nodes.push(TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                });
                self.nodes.len() - 1
            }
        }
    }
}

/// Grows a CART decision tree. Rows with `feature <= threshold` go left.
pub fn train_decision_tree(train: &LabeledDataset, config: &TreeConfig) -> Result<DecisionTree> {
    let classes = distinct_classes(&train.labels);
    if classes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "decision tree training needs at least 2 classes, got {}",
            classes.len()
        )));
    }
    let mut builder = TreeBuilder {
        dataset: train,
        config: *config,
        n_classes: train.label_names.len(),
        nodes: Vec::new(),
    };
    let samples: Vec<usize> = (0..train.len()).collect();
    let root = builder.build(&samples, 0);
    debug_assert_eq!(root, builder.nodes.len() - 1);
    Ok(DecisionTree {
        nodes: builder.nodes,
    })
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut node = self.nodes.len() - 1;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// How per-class F1 scores are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Averaging {
    Micro,
    Macro,
    Weighted,
}

impl Averaging {
    pub fn as_str(&self) -> &'static str {
        match self {
            Averaging::Micro => "micro",
            Averaging::Macro => "macro",
            Averaging::Weighted => "weighted",
        }
    }
}

/// F1 over the union of predicted and true labels, with `0/0` ratios
/// defined as 0.
pub fn f1_score(pred: &[usize], truth: &[usize], averaging: Averaging) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions but {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("f1 of an empty prediction set".into()));
    }
    let classes: BTreeSet<usize> = pred.iter().chain(truth).copied().collect();
    let ratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
    let mut per_class = Vec::with_capacity(classes.len());
    let (mut tp_all, mut fp_all, mut fn_all) = (0.0, 0.0, 0.0);
    for &class in &classes {
        let (mut tp, mut fp, mut fneg, mut support) = (0.0, 0.0, 0.0, 0usize);
        for (&p, &t) in pred.iter().zip(truth) {
            match (p == class, t == class) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fneg += 1.0,
                (false, false) => {}
            }
            if t == class {
                support += 1;
            }
        }
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fneg);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        per_class.push((f1, support));
        tp_all += tp;
        fp_all += fp;
        fn_all += fneg;
    }
    Ok(match averaging {
        Averaging::Micro => {
            let precision = ratio(tp_all, tp_all + fp_all);
            let recall = ratio(tp_all, tp_all + fn_all);
            ratio(2.0 * precision * recall, precision + recall)
        }
        Averaging::Macro => {
            per_class.iter().map(|(f1, _)| f1).sum::<f64>() / per_class.len() as f64
        }
        Averaging::Weighted => {
            let total: usize = per_class.iter().map(|(_, s)| s).sum();
            per_class
                .iter()
                .map(|&(f1, support)| f1 * support as f64 / total as f64)
                .sum()
        }
    })
}

/// Which classifier [`evaluate_classifier`] trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierKind {
    Svm,
    DecisionTree,
}

impl ClassifierKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::DecisionTree => "tree",
        }
    }
}

type Predictor = Box<dyn Fn(&[f64]) -> usize>;

/// K-fold cross-validated F1 as a percentage: train on `k - 1` folds,
/// score the held-out fold, average across folds. Fold models derive
/// their seeds from the split seed.
pub fn evaluate_classifier(
    dataset: &LabeledDataset,
    kind: ClassifierKind,
    folds: usize,
    averaging: Averaging,
    seed: u64,
) -> Result<f64> {
    let plan = kfold_split(dataset.len(), folds, seed)?;
    let mut f1_sum = 0.0;
    for fold in 0..folds {
        let mut train_features = Vec::new();
        let mut train_labels = Vec::new();
        let mut test_idx = Vec::new();
        for i in 0..dataset.len() {
            if plan.assignments[i] == fold {
                test_idx.push(i);
            } else {
                train_features.push(dataset.features[i].clone());
                train_labels.push(dataset.labels[i]);
            }
        }
        let train =
            LabeledDataset::new(train_features, train_labels, dataset.label_names.clone())?;
        let predict: Predictor = match kind {
            ClassifierKind::Svm => {
                let config = SvmConfig {
                    seed: seed.wrapping_add(fold as u64),
                    ..SvmConfig::default()
                };
                let model = train_linear_svm(&train, &config)?;
                Box::new(move |x| model.predict(x))
            }
            ClassifierKind::DecisionTree => {
                let model = train_decision_tree(&train, &TreeConfig::default())?;
                Box::new(move |x| model.predict(x))
            }
        };
        let pred: Vec<usize> = test_idx
            .iter()
            .map(|&i| predict(&dataset.features[i]))
            .collect();
        let truth: Vec<usize> = test_idx.iter().map(|&i| dataset.labels[i]).collect();
        f1_sum += f1_score(&pred, &truth, averaging)?;
    }
    Ok(100.0 * f1_sum / folds as f64)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Lloyd's k-means with k-means++ initialization. Empty clusters are
/// re-seeded to the point farthest from its current centroid.
pub fn kmeans(
    features: &[Vec<f64>],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<ClusteringResult> {
    let m = features.len();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "cannot form {k} clusters from {m} points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(features[rng.gen_range(0..m)].clone());
    let mut dist_sq = vec![0.0f64; m];
    while centroids.len() < k {
        let mut total = 0.0;
        for (i, point) in features.iter().enumerate() {
            let nearest = centroids
                .iter()
                .map(|c| euclidean(point, c))
                .fold(f64::INFINITY, f64::min);
            dist_sq[i] = nearest * nearest;
            total += dist_sq[i];
        }
        let next = if total == 0.0 {
            rng.gen_range(0..m)
        } else {
            let target = rng.gen::<f64>() * total;
            let mut cumulative = 0.0;
            let mut chosen = m - 1;
            for (i, &d) in dist_sq.iter().enumerate() {
                cumulative += d;
                if cumulative >= target {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(features[next].clone());
    }

    let mut labels = vec![0usize; m];
    for _ in 0..max_iter {
        for (i, point) in features.iter().enumerate() {
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = euclidean(point, centroid);
                if d < best_dist {
                    best_dist = d;
                    best = c;
                }
            }
            labels[i] = best;
        }
        let dim = features[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (point, &label) in features.iter().zip(&labels) {
            counts[label] += 1;
            for (s, &v) in sums[label].iter_mut().zip(point) {
                *s += v;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed a dead centroid to the worst-fit point.
                let farthest = (0..m)
                    .max_by(|&a, &b| {
                        euclidean(&features[a], &centroids[labels[a]])
                            .total_cmp(&euclidean(&features[b], &centroids[labels[b]]))
                    })
                    .expect("nonempty features");
                sums[c] = features[farthest].clone();
                counts[c] = 1;
                labels[farthest] = c;
            }
            for s in sums[c].iter_mut() {
                *s /= counts[c] as f64;
            }
            shift = shift.max(euclidean(&sums[c], &centroids[c]));
            centroids[c] = std::mem::take(&mut sums[c]);
        }
        if shift < tol {
            break;
        }
    }
    // Final assignment so labels match the returned centroids.
    for (i, point) in features.iter().enumerate() {
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = euclidean(point, centroid);
            if d < best_dist {
                best_dist = d;
                best = c;
            }
        }
        labels[i] = best;
    }
    Ok(ClusteringResult {
        labels: labels.into_iter().map(|l| l as i32).collect(),
        centroids: Some(centroids),
    })
}

/// Sum of squared distances from each point to its assigned centroid.
pub fn kmeans_inertia(features: &[Vec<f64>], result: &ClusteringResult) -> f64 {
    let centroids = result.centroids.as_ref().expect("k-means result");
    features
        .iter()
        .zip(&result.labels)
        .map(|(point, &label)| {
            let d = euclidean(point, &centroids[label as usize]);
            d * d
        })
        .sum()
}

/// Density-based clustering. A core point has at least `min_pts` neighbors
/// within `eps` (itself included); border points join the first cluster
/// that reaches them in ascending scan order; the rest are noise (`-1`).
pub fn dbscan(features: &[Vec<f64>], eps: f64, min_pts: usize) -> Result<ClusteringResult> {
    if eps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "dbscan eps must be positive, got {eps}"
        )));
    }
    if min_pts == 0 {
        return Err(Error::InvalidArgument("dbscan min_pts must be positive".into()));
    }
    const UNVISITED: i32 = -2;
    let m = features.len();
    let neighbors = |i: usize| -> Vec<usize> {
        (0..m)
            .filter(|&j| euclidean(&features[i], &features[j]) <= eps)
            .collect()
    };
    let mut labels = vec![UNVISITED; m];
    let mut next_cluster = 0i32;
    for start in 0..m {
        if labels[start] != UNVISITED {
            continue;
        }
        let seed_neighbors = neighbors(start);
        if seed_neighbors.len() < min_pts {
            labels[start] = -1;
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[start] = cluster;
        let mut queue: std::collections::VecDeque<usize> = seed_neighbors.into();
        while let Some(point) = queue.pop_front() {
            if labels[point] == -1 {
                labels[point] = cluster; // noise becomes a border point
            }
            if labels[point] != UNVISITED {
                continue;
            }
            labels[point] = cluster;
            let reach = neighbors(point);
            if reach.len() >= min_pts {
                queue.extend(reach);
            }
        }
    }
    Ok(ClusteringResult {
        labels,
        centroids: None,
    })
}

/// The k-distance heuristic for DBSCAN's `eps`: the median distance to the
/// `min_pts`-th nearest neighbor over a seeded subsample of at most 1000
/// points.
pub fn estimate_eps(features: &[Vec<f64>], min_pts: usize, seed: u64) -> Result<f64> {
    let m = features.len();
    if m <= min_pts {
        return Err(Error::InvalidArgument(format!(
            "eps estimation needs more than {min_pts} points, got {m}"
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle(&mut order, &mut rng);
    order.truncate(1000);
    let mut kth: Vec<f64> = order
        .iter()
        .map(|&i| {
            let mut dists: Vec<f64> = (0..m)
                .map(|j| euclidean(&features[i], &features[j]))
                .collect();
            dists.sort_by(f64::total_cmp);
            dists[min_pts] // index 0 is the point itself
        })
        .collect();
    kth.sort_by(f64::total_cmp);
    let mid = kth.len() / 2;
    let median = if kth.len() % 2 == 1 {
        kth[mid]
    } else {
        (kth[mid - 1] + kth[mid]) / 2.0
    };
    if median <= 0.0 {
        return Err(Error::InvalidArgument(
            "estimated eps is zero (too many duplicate points); pass eps explicitly".into(),
        ));
    }
    Ok(median)
}

fn cluster_members(labels: &[i32]) -> Vec<(i32, Vec<usize>)> {
    let ids: BTreeSet<i32> = labels.iter().copied().filter(|&l| l >= 0).collect();
    ids.into_iter()
        .map(|id| {
            let members: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == id)
                .map(|(i, _)| i)
                .collect();
            (id, members)
        })
        .collect()
}

/// Mean silhouette over non-noise samples: `(b - a) / max(a, b)` with `a`
/// the mean intra-cluster distance and `b` the best neighboring cluster's
/// mean distance. Samples in singleton clusters score 0.
pub fn silhouette(features: &[Vec<f64>], labels: &[i32]) -> Result<f64> {
    let clusters = cluster_members(labels);
    if clusters.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "silhouette needs at least 2 clusters, got {}",
            clusters.len()
        )));
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (own_id, own_members) in &clusters {
        for &i in own_members {
            count += 1;
            if own_members.len() < 2 {
                continue; // singleton: s = 0
            }
            let a = own_members
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| euclidean(&features[i], &features[j]))
                .sum::<f64>()
                / (own_members.len() - 1) as f64;
            let b = clusters
                .iter()
                .filter(|(id, _)| id != own_id)
                .map(|(_, members)| {
                    members
                        .iter()
                        .map(|&j| euclidean(&features[i], &features[j]))
                        .sum::<f64>()
                        / members.len() as f64
                })
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                sum += (b - a) / denom;
            }
        }
    }
    Ok(sum / count as f64)
}

/// Davies-Bouldin index: the mean over clusters of the worst
/// `(S_i + S_j) / d(c_i, c_j)` ratio, where `S` is the mean distance to
/// the centroid. Noise is excluded; coincident centroids are an error.
pub fn davies_bouldin(features: &[Vec<f64>], labels: &[i32]) -> Result<f64> {
    let clusters = cluster_members(labels);
    if clusters.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "davies-bouldin needs at least 2 clusters, got {}",
            clusters.len()
        )));
    }
    let dim = features[0].len();
    let mut centroids = Vec::with_capacity(clusters.len());
    let mut scatters = Vec::with_capacity(clusters.len());
    for (_, members) in &clusters {
        let mut centroid = vec![0.0; dim];
        for &i in members {
            for (c, &v) in centroid.iter_mut().zip(&features[i]) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= members.len() as f64;
        }
        let scatter = members
            .iter()
            .map(|&i| euclidean(&features[i], &centroid))
            .sum::<f64>()
            / members.len() as f64;
        centroids.push(centroid);
        scatters.push(scatter);
    }
    let n = clusters.len();
    let mut sum = 0.0;
    for i in 0..n {
        let mut worst = 0.0f64;
        for j in 0..n {
            if i == j {
                continue;
            }
            let sep = euclidean(&centroids[i], &centroids[j]);
            if sep == 0.0 {
                return Err(Error::InvalidArgument(
                    "davies-bouldin is undefined for coincident cluster centroids".into(),
                ));
            }
            worst = worst.max((scatters[i] + scatters[j]) / sep);
        }
        sum += worst;
    }
    Ok(sum / n as f64)
}

/// Which algorithm [`evaluate_clustering`] runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterAlgorithm {
    KMeans { k: usize },
    Dbscan { eps: Option<f64>, min_pts: usize },
}

/// A clustering run scored by both validity metrics.
#[derive(Debug, Clone)]
pub struct ClusteringEval {
    pub result: ClusteringResult,
    pub silhouette: f64,
    pub davies_bouldin: f64,
}

/// Runs the chosen algorithm and scores it. A DBSCAN without an explicit
/// `eps` uses [`estimate_eps`].
pub fn evaluate_clustering(
    features: &[Vec<f64>],
    algorithm: ClusterAlgorithm,
    seed: u64,
) -> Result<ClusteringEval> {
    let result = match algorithm {
        ClusterAlgorithm::KMeans { k } => kmeans(features, k, seed, 100, 1e-9)?,
        ClusterAlgorithm::Dbscan { eps, min_pts } => {
            let eps = match eps {
                Some(e) => e,
                None => estimate_eps(features, min_pts, seed)?,
            };
            dbscan(features, eps, min_pts)?
        }
    };
    Ok(ClusteringEval {
        silhouette: silhouette(features, &result.labels)?,
        davies_bouldin: davies_bouldin(features, &result.labels)?,
        result,
    })
}

/// Scales every row to unit L2 norm, leaving zero rows untouched.
pub fn l2_normalize(features: &mut [Vec<f64>]) {
    for row in features {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
}
