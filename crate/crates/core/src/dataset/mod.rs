//! Multi-label datasets: loading, validation, summaries, fold plans and a
//! synthetic generator with a known label network.

mod arff;
mod synth;
mod tabular;

use std::collections::HashSet;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use arff::{load_arff, parse_arff, parse_label_xml, LabelSpec};
pub use synth::{synth, SynthEdge, SynthSpec};
pub use tabular::{load_csv, read_csv, read_label_matrix, write_csv, write_label_matrix};

/// N instances with d real features and M binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelDataset {
    features: Array2<f64>,
    labels: Array2<u8>,
    feature_names: Vec<String>,
    label_names: Vec<String>,
}

impl MultiLabelDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Array2<u8>,
        feature_names: Vec<String>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.dim();
        let (n_labels_rows, m) = labels.dim();
        if n == 0 {
            return Err(Error::InvalidDataset("dataset has no instances".into()));
        }
        if n != n_labels_rows {
            return Err(Error::InvalidDataset(format!(
                "feature matrix has {n} rows but label matrix has {n_labels_rows}"
            )));
        }
        if d == 0 {
            return Err(Error::InvalidDataset("dataset has no features".into()));
        }
        if m < 2 {
            return Err(Error::InvalidDataset(format!(
                "at least 2 labels are required, got {m}"
            )));
        }
        if feature_names.len() != d || label_names.len() != m {
            return Err(Error::InvalidDataset(
                "name lists do not match matrix widths".into(),
            ));
        }
        check_unique(&feature_names, "feature")?;
        check_unique(&label_names, "label")?;
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if let Some(bad) = labels.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidDataset(format!("label value {bad} is not 0 or 1")));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            label_names,
        })
    }

    pub fn n_instances(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_labels(&self) -> usize {
        self.labels.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &Array2<u8> {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_column(&self, j: usize) -> Vec<u8> {
        self.labels.column(j).to_vec()
    }

    /// All label columns, each as a contiguous vector.
    pub fn label_columns(&self) -> Vec<Vec<u8>> {
        (0..self.n_labels()).map(|j| self.label_column(j)).collect()
    }

    /// Sub-dataset made of the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        Self::new(
            self.features.select(Axis(0), rows),
            self.labels.select(Axis(0), rows),
            self.feature_names.clone(),
            self.label_names.clone(),
        )
    }
}

fn check_unique(names: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(names.len());
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(Error::InvalidDataset(format!("duplicate {what} name `{name}`")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    /// Mean number of positive labels per instance.
    pub cardinality: f64,
    /// Mean per-label imbalance ratio, majority over minority count.
    pub avg_ir: f64,
    pub label_density: f64,
    pub per_label_positive_counts: Vec<usize>,
    /// Labels that are all-0 or all-1. Their imbalance ratio is reported as N.
    pub degenerate_labels: Vec<usize>,
}

pub fn stats(ds: &MultiLabelDataset) -> DatasetStats {
    let n = ds.n_instances();
    let m = ds.n_labels();
    let positives: Vec<usize> = (0..m)
        .map(|j| ds.labels.column(j).iter().map(|&v| v as usize).sum())
        .collect();
    let total: usize = positives.iter().sum();
    let cardinality = total as f64 / n as f64;

    let mut degenerate_labels = Vec::new();
    let ir_sum: f64 = positives
        .iter()
        .enumerate()
        .map(|(j, &pos)| {
            let neg = n - pos;
            let (hi, lo) = (pos.max(neg), pos.min(neg));
            if lo == 0 {
                degenerate_labels.push(j);
                n as f64
            } else {
                hi as f64 / lo as f64
            }
        })
        .sum();

    DatasetStats {
        cardinality,
        avg_ir: ir_sum / m as f64,
        label_density: cardinality / m as f64,
        per_label_positive_counts: positives,
        degenerate_labels,
    }
}

/// Assignment of every instance to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(train, test)` row indices for fold `f`, both ascending.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        let (test, train): (Vec<usize>, Vec<usize>) =
            (0..self.assignments.len()).partition(|&i| self.assignments[i] == f);
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Shuffled round-robin fold assignment over `n` instances.
pub fn kfold_plan(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::Config(format!(
            "fold count k={k} must satisfy 2 <= k <= N={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        assignments[row] = pos % k;
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

pub fn kfold(ds: &MultiLabelDataset, k: usize, seed: u64) -> Result<FoldPlan> {
    kfold_plan(ds.n_instances(), k, seed)
}

#[cfg(test)]
pub(crate) fn from_rows(features: &[Vec<f64>], labels: &[Vec<u8>]) -> MultiLabelDataset {
    let n = features.len();
    let d = features[0].len();
    let m = labels[0].len();
    let x = Array2::from_shape_vec((n, d), features.concat()).unwrap();
    let y = Array2::from_shape_vec((n, m), labels.concat()).unwrap();
    MultiLabelDataset::new(
        x,
        y,
        (0..d).map(|i| format!("f{i}")).collect(),
        (0..m).map(|j| format!("l{j}")).collect(),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels_only(labels: &[Vec<u8>]) -> MultiLabelDataset {
        let feats: Vec<Vec<f64>> = (0..labels.len()).map(|i| vec![i as f64]).collect();
        from_rows(&feats, labels)
    }

    #[test]
    fn cardinality_is_mean_row_sum() {
        let ds = labels_only(&[vec![1, 0], vec![1, 1]]);
        let s = stats(&ds);
        assert_eq!(s.cardinality, 1.5);
        assert_eq!(s.label_density, 0.75);
    }

    #[test]
    fn all_zero_label_is_flagged() {
        let ds = labels_only(&[vec![1, 0], vec![0, 0], vec![1, 0]]);
        let s = stats(&ds);
        assert_eq!(s.degenerate_labels, vec![1]);
        // degenerate IR is the sentinel N
        assert_eq!(s.avg_ir, (2.0 + 3.0) / 2.0);
    }

    #[test]
    fn imbalance_ratio_hand_example() {
        let ds = labels_only(&[vec![1, 0], vec![0, 1], vec![1, 0], vec![1, 0]]);
        let s = stats(&ds);
        assert_eq!(s.avg_ir, 3.0);
        assert_eq!(s.per_label_positive_counts, vec![3, 1]);
        assert!(s.degenerate_labels.is_empty());
    }

    #[test]
    fn kfold_sizes() {
        let p = kfold_plan(10, 10, 1).unwrap();
        assert!(p.fold_sizes().iter().all(|&s| s == 1));
        let mut sizes = kfold_plan(5, 2, 9).unwrap().fold_sizes();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn kfold_is_deterministic_and_seed_sensitive() {
        let a = kfold_plan(50, 5, 42).unwrap();
        assert_eq!(a, kfold_plan(50, 5, 42).unwrap());
        assert_ne!(a.assignments, kfold_plan(50, 5, 43).unwrap().assignments);
    }

    #[test]
    fn kfold_rejects_bad_k() {
        assert!(kfold_plan(5, 1, 0).is_err());
        assert!(kfold_plan(5, 6, 0).is_err());
    }

    #[test]
    fn split_partitions_rows() {
        let p = kfold_plan(11, 3, 5).unwrap();
        let mut seen = [0; 11];
        for f in 0..3 {
            let (train, test) = p.split(f);
            assert_eq!(train.len() + test.len(), 11);
            for i in test {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn constructor_rejects_invalid_input() {
        let x = Array2::from_elem((2, 1), 0.0);
        let y = Array2::from_shape_vec((2, 2), vec![0, 2, 1, 0]).unwrap();
        let names = |p: &str, k: usize| (0..k).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        assert!(MultiLabelDataset::new(x.clone(), y, names("f", 1), names("l", 2)).is_err());

        let y1 = Array2::from_elem((2, 1), 0u8);
        assert!(MultiLabelDataset::new(x.clone(), y1, names("f", 1), names("l", 1)).is_err());

        let y = Array2::from_elem((2, 2), 0u8);
        let mut nan = x.clone();
        nan[[0, 0]] = f64::NAN;
        assert!(matches!(
            MultiLabelDataset::new(nan, y.clone(), names("f", 1), names("l", 2)),
            Err(Error::NonFinite)
        ));
        let dup = vec!["a".to_string(), "a".to_string()];
        assert!(MultiLabelDataset::new(x, y, names("f", 1), dup).is_err());
    }

    #[test]
    fn select_keeps_names_and_rows() {
        let ds = labels_only(&[vec![1, 0], vec![0, 1], vec![1, 1]]);
        let sub = ds.select(&[2, 0]).unwrap();
        assert_eq!(sub.n_instances(), 2);
        assert_eq!(sub.label_column(1), vec![1, 0]);
        assert_eq!(sub.features()[[0, 0]], 2.0);
    }
}
