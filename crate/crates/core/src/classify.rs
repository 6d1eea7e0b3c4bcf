//! Classifiers, stratified cross-validation and significance testing on motif
//! features.
//!
//! All four classifiers are deterministic given their inputs and seed, and all
//! standardize features with statistics fitted on the training rows only.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::motifs::StrategyKind;
use crate::{Error, Result};

/// Neighbours consulted by the kNN classifier.
pub const KNN_K: usize = 5;
/// Lower bound on per-class feature variance in Gaussian naive Bayes.
pub const NB_VARIANCE_FLOOR: f64 = 1e-9;
/// Passes over the training set made by the linear SVM.
pub const SVM_EPOCHS: usize = 1000;
/// Regularization strength of the linear SVM; the step at update `t` is
/// `1 / (SVM_LAMBDA * t)`.
pub const SVM_LAMBDA: f64 = 1e-2;
/// Default number of cross-validation folds.
pub const DEFAULT_FOLDS: usize = 10;

/// One labelled example.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub doc_id: String,
    pub features: Vec<f64>,
    /// Index into [`Dataset::classes`].
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Row>,
    classes: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from `(doc_id, features, class name)` triples. Class
    /// indices follow the sorted class names.
    pub fn from_labeled<I, S>(examples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>, S)>,
        S: Into<String>,
    {
        let examples: Vec<(String, Vec<f64>, String)> =
            examples.into_iter().map(|(d, f, c)| (d.into(), f, c.into())).collect();
        let classes: Vec<String> =
            examples.iter().map(|(_, _, c)| c.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let rows = examples
            .into_iter()
            .map(|(doc_id, features, class)| {
                let label = classes.binary_search(&class).expect("collected above");
                Row { doc_id, features, label }
            })
            .collect();
        Self::new(classes, rows)
    }

    pub fn new(classes: Vec<String>, rows: Vec<Row>) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.features.len());
        let mut ids = BTreeSet::new();
        for r in &rows {
            if r.features.len() != width {
                return Err(Error::InvalidDataset(alloc::format!(
                    "row `{}` has {} features, expected {width}",
                    r.doc_id,
                    r.features.len()
                )));
            }
            if r.label >= classes.len() {
                return Err(Error::InvalidDataset(alloc::format!("row `{}` has an unknown label", r.doc_id)));
            }
            if !ids.insert(r.doc_id.as_str()) {
                return Err(Error::InvalidDataset(alloc::format!("duplicate doc id `{}`", r.doc_id)));
            }
            if r.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDataset(alloc::format!("row `{}` has non-finite features", r.doc_id)));
            }
        }
        Ok(Self { rows, classes })
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.label).collect()
    }
}

/// Fold membership of every row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Folds {
    pub count: usize,
    pub assignment: Vec<usize>,
    /// The requested fold count when it had to be lowered to the smallest
    /// class size.
    pub reduced_from: Option<usize>,
}

impl Folds {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }
}

/// Shuffles each class with `seed` and deals its members round-robin over the
/// folds. The dealing position carries over between classes so that total
/// fold sizes stay balanced too.
pub fn stratified_folds(labels: &[usize], folds: usize, seed: u64) -> Result<Folds> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(Error::InvalidDataset(alloc::format!("{} class(es); need at least 2", by_class.len())));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument(alloc::format!("{folds} folds; need at least 2")));
    }
    let smallest = by_class.values().map(Vec::len).min().expect("non-empty");
    if smallest < 2 {
        return Err(Error::InvalidDataset("a class has a single member".into()));
    }
    let count = folds.min(smallest);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    let mut deal = 0;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = deal % count;
            deal += 1;
        }
    }
    Ok(Folds { count, assignment, reduced_from: (count < folds).then_some(folds) })
}

/// Per-feature z-scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation; constant features get scale 1.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..width).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..width)
            .map(|j| {
                let var = rows.iter().map(|r| sq(r[j] - mean[j])).sum::<f64>() / n;
                let sd = libm::sqrt(var);
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x - m) / s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassifierKind {
    Knn,
    GaussianNb,
    Cart,
    LinearSvm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] =
        [ClassifierKind::Knn, ClassifierKind::GaussianNb, ClassifierKind::Cart, ClassifierKind::LinearSvm];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::GaussianNb => "gaussian-nb",
            ClassifierKind::Cart => "cart",
            ClassifierKind::LinearSvm => "linear-svm",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown classifier `{s}`")))
    }
}

/// Fits `kind` on the training rows and predicts a label for each test row.
pub fn train_predict(
    kind: ClassifierKind,
    train_x: &[Vec<f64>],
    train_y: &[usize],
    test_x: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<usize>> {
    if train_x.is_empty() || train_x.len() != train_y.len() {
        return Err(Error::InvalidDataset("empty or mismatched training set".into()));
    }
    let scaler = Standardizer::fit(train_x);
    let train: Vec<Vec<f64>> = train_x.iter().map(|r| scaler.transform(r)).collect();
    let test: Vec<Vec<f64>> = test_x.iter().map(|r| scaler.transform(r)).collect();
    let classes = train_y.iter().max().map_or(0, |m| m + 1);
    Ok(match kind {
        ClassifierKind::Knn => test.iter().map(|x| knn_predict(&train, train_y, classes, x)).collect(),
        ClassifierKind::GaussianNb => {
            let model = GaussianNb::fit(&train, train_y, classes);
            test.iter().map(|x| model.predict(x)).collect()
        }
        ClassifierKind::Cart => {
            let tree = Tree::fit(&train, train_y, classes);
            test.iter().map(|x| tree.predict(x)).collect()
        }
        ClassifierKind::LinearSvm => {
            let model = LinearSvm::fit(&train, train_y, classes, seed);
            test.iter().map(|x| model.predict(x)).collect()
        }
    })
}

/// Index of the largest count; ties go to the smallest label.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (label, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = label;
        }
    }
    best
}

fn knn_predict(train: &[Vec<f64>], labels: &[usize], classes: usize, x: &[f64]) -> usize {
    let mut dist: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    dist.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; classes];
    for &(_, i) in dist.iter().take(KNN_K) {
        votes[labels[i]] += 1;
    }
    majority(&votes)
}

struct ClassGaussian {
    log_prior: f64,
    mean: Vec<f64>,
    var: Vec<f64>,
}

struct GaussianNb {
    /// `None` for classes absent from the training set.
    classes: Vec<Option<ClassGaussian>>,
}

impl GaussianNb {
    fn fit(train: &[Vec<f64>], labels: &[usize], classes: usize) -> Self {
        let n = train.len() as f64;
        let width = train[0].len();
        let classes = (0..classes)
            .map(|c| {
                let members: Vec<&Vec<f64>> =
                    train.iter().zip(labels).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
                if members.is_empty() {
                    return None;
                }
                let m = members.len() as f64;
                let mean: Vec<f64> = (0..width).map(|j| members.iter().map(|r| r[j]).sum::<f64>() / m).collect();
                let var: Vec<f64> = (0..width)
                    .map(|j| {
                        let v = members.iter().map(|r| sq(r[j] - mean[j])).sum::<f64>() / m;
                        v.max(NB_VARIANCE_FLOOR)
                    })
                    .collect();
                Some(ClassGaussian { log_prior: libm::log(m / n), mean, var })
            })
            .collect();
        Self { classes }
    }

    fn log_posterior(&self, class: usize, x: &[f64]) -> Option<f64> {
        let ClassGaussian { log_prior, mean, var } = self.classes[class].as_ref()?;
        let ll: f64 = x
            .iter()
            .zip(mean)
            .zip(var)
            .map(|((xi, m), v)| -0.5 * libm::log(2.0 * core::f64::consts::PI * v) - sq(xi - m) / (2.0 * v))
            .sum();
        Some(log_prior + ll)
    }

    fn predict(&self, x: &[f64]) -> usize {
        let mut best: Option<(f64, usize)> = None;
        for c in 0..self.classes.len() {
            if let Some(score) = self.log_posterior(c, x) {
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, c));
                }
            }
        }
        best.map_or(0, |(_, c)| c)
    }
}

enum Tree {
    Leaf(usize),
    Split { feature: usize, threshold: f64, left: Box<Tree>, right: Box<Tree> },
}

use alloc::boxed::Box;

fn gini_weighted(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    t - sum_sq / t
}

impl Tree {
    /// CART with Gini impurity, grown until leaves are pure or unsplittable.
    fn fit(train: &[Vec<f64>], labels: &[usize], classes: usize) -> Self {
        let idx: Vec<usize> = (0..train.len()).collect();
        Self::grow(train, labels, classes, idx)
    }

    fn grow(train: &[Vec<f64>], labels: &[usize], classes: usize, idx: Vec<usize>) -> Self {
        let mut counts = vec![0usize; classes];
        for &i in &idx {
            counts[labels[i]] += 1;
        }
        if counts.iter().filter(|&&c| c > 0).count() <= 1 {
            return Tree::Leaf(majority(&counts));
        }
        let Some((feature, threshold)) = Self::best_split(train, labels, classes, &idx) else {
            return Tree::Leaf(majority(&counts));
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| train[i][feature] <= threshold);
        Tree::Split {
            feature,
            threshold,
            left: Box::new(Self::grow(train, labels, classes, left)),
            right: Box::new(Self::grow(train, labels, classes, right)),
        }
    }

    /// Lowest weighted child impurity; ties keep the lower feature index and
    /// then the lower threshold.
    #[allow(clippy::needless_range_loop)]
    fn best_split(train: &[Vec<f64>], labels: &[usize], classes: usize, idx: &[usize]) -> Option<(usize, f64)> {
        let width = train[idx[0]].len();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = idx.to_vec();
        for f in 0..width {
            sorted.sort_by(|&a, &b| train[a][f].total_cmp(&train[b][f]).then(a.cmp(&b)));
            let mut left = vec![0usize; classes];
            let mut right = vec![0usize; classes];
            for &i in &sorted {
                right[labels[i]] += 1;
            }
            for pos in 0..sorted.len() - 1 {
                let i = sorted[pos];
                left[labels[i]] += 1;
                right[labels[i]] -= 1;
                let (lo, hi) = (train[i][f], train[sorted[pos + 1]][f]);
                if lo == hi {
                    continue;
                }
                let impurity = gini_weighted(&left, pos + 1) + gini_weighted(&right, sorted.len() - pos - 1);
                if best.is_none_or(|(b, _, _)| impurity < b) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some((impurity, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn predict(&self, x: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                Tree::Leaf(label) => return *label,
                Tree::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }
}

/// One-vs-rest linear SVM trained by stochastic subgradient descent on the
/// regularized hinge loss. The bias is an extra constant input.
struct LinearSvm {
    weights: Vec<Option<Vec<f64>>>,
}

impl LinearSvm {
    fn fit(train: &[Vec<f64>], labels: &[usize], classes: usize, seed: u64) -> Self {
        let inputs: Vec<Vec<f64>> = train.iter().map(|r| r.iter().copied().chain([1.0]).collect()).collect();
        let weights = (0..classes)
            .map(|c| {
                if !labels.contains(&c) {
                    return None;
                }
                let targets: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c as u64);
                let mut w = vec![0.0; inputs[0].len()];
                let mut order: Vec<usize> = (0..inputs.len()).collect();
                let mut t = 0u64;
                for _ in 0..SVM_EPOCHS {
                    order.shuffle(&mut rng);
                    for &i in &order {
                        t += 1;
                        let eta = 1.0 / (SVM_LAMBDA * t as f64);
                        let margin = targets[i] * dot(&w, &inputs[i]);
                        let decay = 1.0 - eta * SVM_LAMBDA;
                        w.iter_mut().for_each(|x| *x *= decay);
                        if margin < 1.0 {
                            for (wj, xj) in w.iter_mut().zip(&inputs[i]) {
                                *wj += eta * targets[i] * xj;
                            }
                        }
                    }
                }
                Some(w)
            })
            .collect();
        Self { weights }
    }

    fn predict(&self, x: &[f64]) -> usize {
        let input: Vec<f64> = x.iter().copied().chain([1.0]).collect();
        let mut best: Option<(f64, usize)> = None;
        for (c, w) in self.weights.iter().enumerate() {
            if let Some(w) = w {
                let score = dot(w, &input);
                if best.is_none_or(|(s, _)| score > s) {
                    best = Some((score, c));
                }
            }
        }
        best.map_or(0, |(_, c)| c)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sq(x: f64) -> f64 {
    x * x
}

/// Per-fold accuracies of one classifier on one dataset.
pub fn cross_validate(dataset: &Dataset, kind: ClassifierKind, folds: &Folds, seed: u64) -> Result<Vec<f64>> {
    if folds.assignment.len() != dataset.len() {
        return Err(Error::InvalidArgument("fold assignment does not match dataset".into()));
    }
    let rows = dataset.rows();
    (0..folds.count)
        .map(|fold| {
            let train = folds.train_indices(fold);
            let test = folds.test_indices(fold);
            let train_x: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].features.clone()).collect();
            let train_y: Vec<usize> = train.iter().map(|&i| rows[i].label).collect();
            let test_x: Vec<Vec<f64>> = test.iter().map(|&i| rows[i].features.clone()).collect();
            let predicted = train_predict(kind, &train_x, &train_y, &test_x, seed)?;
            let correct = test.iter().zip(&predicted).filter(|(&i, &p)| rows[i].label == p).count();
            Ok(correct as f64 / test.len() as f64)
        })
        .collect()
}

/// Cross-validation outcome for one (classifier, strategy, threshold).
#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub classifier: ClassifierKind,
    pub strategy: StrategyKind,
    pub threshold: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// One-sided exact binomial tail against chance `1 / classes`.
    pub p_value: f64,
    pub seed: u64,
    pub samples: usize,
    pub classes: usize,
}

/// Runs every classifier at every threshold. `grid` pairs each threshold with
/// the dataset of features computed at it; all share one fold assignment.
pub fn evaluate_all(
    grid: &[(f64, Dataset)],
    kinds: &[ClassifierKind],
    strategy: StrategyKind,
    folds: usize,
    seed: u64,
) -> Result<Vec<CvReport>> {
    let Some((_, first)) = grid.first() else {
        return Err(Error::InvalidArgument("empty threshold grid".into()));
    };
    let assignment = stratified_folds(&first.labels(), folds, seed)?;
    let classes = first.labels().into_iter().collect::<BTreeSet<_>>().len();
    let mut reports = Vec::with_capacity(grid.len() * kinds.len());
    for (threshold, dataset) in grid {
        if dataset.labels() != first.labels() {
            return Err(Error::InvalidDataset("threshold datasets disagree on rows".into()));
        }
        for &kind in kinds {
            let fold_accuracies = cross_validate(dataset, kind, &assignment, seed)?;
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
            let n = dataset.len() as u64;
            let successes = libm::round(mean_accuracy * n as f64) as u64;
            let p_value = significance(successes, n, 1.0 / classes as f64)?;
            reports.push(CvReport {
                classifier: kind,
                strategy,
                threshold: *threshold,
                fold_accuracies,
                mean_accuracy,
                p_value,
                seed,
                samples: dataset.len(),
                classes,
            });
        }
    }
    Ok(reports)
}

/// Highest mean accuracy; ties go to the smaller threshold, then to the
/// earlier classifier in [`ClassifierKind::ALL`].
pub fn best_report(reports: &[CvReport]) -> Option<&CvReport> {
    reports.iter().reduce(|best, r| {
        let better = r.mean_accuracy > best.mean_accuracy
            || (r.mean_accuracy == best.mean_accuracy
                && (r.threshold < best.threshold || (r.threshold == best.threshold && r.classifier < best.classifier)));
        if better {
            r
        } else {
            best
        }
    })
}

/// Best report over the threshold grid and classifiers.
pub fn evaluate(
    grid: &[(f64, Dataset)],
    kinds: &[ClassifierKind],
    strategy: StrategyKind,
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    let reports = evaluate_all(grid, kinds, strategy, folds, seed)?;
    Ok(best_report(&reports).expect("grid and kinds are non-empty").clone())
}

/// `P[X >= successes]` for `X ~ Binomial(n, chance)`.
pub fn significance(successes: u64, n: u64, chance: f64) -> Result<f64> {
    if successes > n {
        return Err(Error::InvalidArgument(alloc::format!("{successes} successes out of {n}")));
    }
    if !(chance > 0.0 && chance < 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("chance {chance} outside (0, 1)")));
    }
    let (ln_p, ln_q) = (libm::log(chance), libm::log1p(-chance));
    let ln_n_fact = libm::lgamma(n as f64 + 1.0);
    let tail: f64 = (successes..=n)
        .map(|k| {
            let ln_choose = ln_n_fact - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0);
            libm::exp(ln_choose + k as f64 * ln_p + (n - k) as f64 * ln_q)
        })
        .sum();
    Ok(tail.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn dataset(rows: &[(&[f64], &str)]) -> Dataset {
        Dataset::from_labeled(
            rows.iter().enumerate().map(|(i, (f, c))| (alloc::format!("d{i}"), f.to_vec(), c.to_string())),
        )
        .unwrap()
    }

    #[test]
    fn perfect_stratification() {
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let folds = stratified_folds(&labels, 10, 1).unwrap();
        assert_eq!(folds.count, 10);
        assert_eq!(folds.reduced_from, None);
        for f in 0..10 {
            let test = folds.test_indices(f);
            assert_eq!(test.len(), 2);
            assert_eq!(test.iter().filter(|&&i| labels[i] == 0).count(), 1);
        }
    }

    #[test]
    fn folds_reduce_to_smallest_class() {
        let labels: Vec<usize> = [0; 9].into_iter().chain([1; 12]).collect();
        let folds = stratified_folds(&labels, 10, 1).unwrap();
        assert_eq!((folds.count, folds.reduced_from), (9, Some(10)));
    }

    #[test]
    fn folds_are_seeded() {
        let labels: Vec<usize> = (0..37).map(|i| i % 3).collect();
        assert_eq!(stratified_folds(&labels, 10, 5).unwrap(), stratified_folds(&labels, 10, 5).unwrap());
        assert_ne!(stratified_folds(&labels, 10, 5).unwrap(), stratified_folds(&labels, 10, 6).unwrap());
    }

    #[test]
    fn folds_need_two_classes() {
        assert!(matches!(stratified_folds(&[0, 0, 0], 2, 1), Err(Error::InvalidDataset(_))));
        assert!(matches!(stratified_folds(&[0, 0, 1], 2, 1), Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn knn_coinciding_points() {
        let train: Vec<Vec<f64>> =
            [[1.0, 1.0]; 5].iter().map(|r| r.to_vec()).chain([[5.0, 5.0]; 5].iter().map(|r| r.to_vec())).collect();
        let labels = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let pred = train_predict(ClassifierKind::Knn, &train, &labels, &[vec![1.0, 1.0]], 0).unwrap();
        assert_eq!(pred, vec![1]);
    }

    #[test]
    fn naive_bayes_one_dimension() {
        // Means 0 and 10, equal spreads: the 9.5 point is far likelier under B.
        let train: Vec<Vec<f64>> = [-1.0, 0.0, 1.0, 9.0, 10.0, 11.0].iter().map(|&x| vec![x]).collect();
        let labels = [0, 0, 0, 1, 1, 1];
        let pred = train_predict(ClassifierKind::GaussianNb, &train, &labels, &[vec![9.5], vec![0.4]], 0).unwrap();
        assert_eq!(pred, vec![1, 0]);
    }

    #[test]
    fn naive_bayes_handles_constant_features() {
        let train = vec![vec![1.0, 0.0], vec![1.0, 0.1], vec![1.0, 5.0], vec![1.0, 5.1]];
        let pred = train_predict(ClassifierKind::GaussianNb, &train, &[0, 0, 1, 1], &[vec![1.0, 4.0]], 0).unwrap();
        assert_eq!(pred, vec![1]);
    }

    #[test]
    fn cart_fits_separable_points() {
        let train = vec![vec![0.0, 3.0], vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 0.0]];
        let labels = [0, 0, 1, 1];
        assert_eq!(train_predict(ClassifierKind::Cart, &train, &labels, &train, 0).unwrap(), labels);
        // XOR needs depth two.
        let xor = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let labels = [0, 1, 1, 0];
        assert_eq!(train_predict(ClassifierKind::Cart, &xor, &labels, &xor, 0).unwrap(), labels);
    }

    #[test]
    fn svm_separates_a_margin() {
        let train: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let labels: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let pred =
            train_predict(ClassifierKind::LinearSvm, &train, &labels, &[vec![-5.0, 0.0], vec![25.0, 1.0]], 3).unwrap();
        assert_eq!(pred, vec![0, 1]);
        let again = train_predict(ClassifierKind::LinearSvm, &train, &labels, &train, 3).unwrap();
        assert_eq!(again, labels);
    }

    #[test]
    fn empty_training_set_is_rejected() {
        for kind in ClassifierKind::ALL {
            assert!(train_predict(kind, &[], &[], &[vec![1.0]], 0).is_err());
        }
    }

    #[test]
    fn separable_dataset_scores_perfectly() {
        let rows: Vec<(Vec<f64>, &str)> = (0..30)
            .map(|i| {
                let class = i % 2;
                let base = if class == 0 { 0.0 } else { 100.0 };
                (vec![base + (i % 5) as f64, base - (i % 7) as f64], if class == 0 { "a" } else { "b" })
            })
            .collect();
        let borrowed: Vec<(&[f64], &str)> = rows.iter().map(|(f, c)| (f.as_slice(), *c)).collect();
        let data = dataset(&borrowed);
        for kind in ClassifierKind::ALL {
            let report = evaluate(&[(0.0, data.clone())], &[kind], StrategyKind::Unweighted, 10, 9).unwrap();
            assert_eq!(report.mean_accuracy, 1.0, "{kind}");
            assert_eq!(report.fold_accuracies.len(), 10);
            assert!(report.p_value < 1e-8);
        }
    }

    #[test]
    fn best_report_prefers_smaller_threshold_then_classifier_order() {
        let mk = |threshold, classifier, mean_accuracy| CvReport {
            classifier,
            strategy: StrategyKind::SimplifiedWeighted,
            threshold,
            fold_accuracies: vec![mean_accuracy],
            mean_accuracy,
            p_value: 0.5,
            seed: 0,
            samples: 10,
            classes: 2,
        };
        let reports = [
            mk(0.2, ClassifierKind::Knn, 0.9),
            mk(0.1, ClassifierKind::Cart, 0.9),
            mk(0.1, ClassifierKind::GaussianNb, 0.9),
            mk(0.3, ClassifierKind::Knn, 0.8),
        ];
        let best = best_report(&reports).unwrap();
        assert_eq!((best.threshold, best.classifier), (0.1, ClassifierKind::GaussianNb));
    }

    /// Independent tail: multiplicative binomial coefficients, no log-gamma.
    fn tail_oracle(s: u64, n: u64, p: f64) -> f64 {
        let mut pmf = (1.0 - p).powi(n as i32);
        let mut tail = 0.0;
        for k in 0..=n {
            if k >= s {
                tail += pmf;
            }
            pmf *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
        }
        tail
    }

    #[test]
    fn significance_examples() {
        let all = significance(10, 10, 0.5).unwrap();
        assert!((all - libm::pow(2.0, -10.0)).abs() < 1e-12);
        assert!((all - 9.77e-4).abs() < 1e-6);
        let half = significance(50, 100, 0.5).unwrap();
        assert!((half - tail_oracle(50, 100, 0.5)).abs() < 1e-10);
        assert!((half - 0.5398).abs() < 1e-4);
        assert!(significance(5, 10, 0.5).unwrap() > 0.5);
        assert!(significance(11, 10, 0.5).is_err());
        assert!(significance(1, 10, 0.0).is_err());
        assert!(significance(1, 10, 1.0).is_err());
        assert_eq!(significance(0, 10, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn dataset_validation() {
        let bad = Dataset::from_labeled([("a", vec![1.0], "x"), ("b", vec![1.0, 2.0], "y")]);
        assert!(matches!(bad, Err(Error::InvalidDataset(_))));
        let dup = Dataset::from_labeled([("a", vec![1.0], "x"), ("a", vec![2.0], "y")]);
        assert!(matches!(dup, Err(Error::InvalidDataset(_))));
        let ok = Dataset::from_labeled([("a", vec![1.0], "y"), ("b", vec![2.0], "x")]).unwrap();
        assert_eq!(ok.classes(), &["x".to_string(), "y".to_string()]);
        assert_eq!(ok.labels(), vec![1, 0]);
    }

    #[test]
    fn classifier_names_round_trip() {
        for k in ClassifierKind::ALL {
            assert_eq!(k.as_str().parse::<ClassifierKind>().unwrap(), k);
        }
    }

    proptest! {
        #[test]
        fn folds_partition_rows(labels in proptest::collection::vec(0usize..3, 6..60), seed in 0u64..100) {
            let counts: Vec<usize> = (0..3).map(|c| labels.iter().filter(|&&l| l == c).count()).collect();
            prop_assume!(counts.iter().filter(|&&c| c > 0).count() >= 2 && counts.iter().all(|&c| c == 0 || c >= 2));
            let folds = stratified_folds(&labels, 10, seed).unwrap();
            let mut seen = vec![0usize; labels.len()];
            for f in 0..folds.count {
                for i in folds.test_indices(f) {
                    seen[i] += 1;
                }
                for c in 0..3 {
                    let sizes: Vec<usize> = (0..folds.count)
                        .map(|g| folds.test_indices(g).iter().filter(|&&i| labels[i] == c).count())
                        .collect();
                    prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
                }
            }
            prop_assert!(seen.iter().all(|&s| s == 1));
        }

        #[test]
        fn standardized_training_data_is_centered(rows in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 4), 2..30)) {
            let scaler = Standardizer::fit(&rows);
            let z: Vec<Vec<f64>> = rows.iter().map(|r| scaler.transform(r)).collect();
            for j in 0..4 {
                let n = z.len() as f64;
                let mean = z.iter().map(|r| r[j]).sum::<f64>() / n;
                let sd = libm::sqrt(z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n);
                prop_assert!(mean.abs() < 1e-6);
                prop_assert!((sd - 1.0).abs() < 1e-6 || scaler.scale[j] == 1.0);
            }
        }

        #[test]
        fn significance_decreases_with_successes(n in 1u64..200, p in 0.05f64..0.95) {
            let mut last = 1.0 + 1e-12;
            for s in 0..=n {
                let v = significance(s, n, p).unwrap();
                prop_assert!(v <= last + 1e-12);
                last = v;
            }
        }
    }
}
