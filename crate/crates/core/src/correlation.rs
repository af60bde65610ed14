//! Empirical label entropies and directed dependence degrees.
//!
//! All entropies are in bits. Probabilities are raw relative frequencies and
//! `0 log 0 = 0`; conditioning configurations that never occur contribute
//! nothing. For binary labels every entropy here lies in `[0, 1]`.
//!
//! The set-conditional entropy uses the standard definition
//! `H(t | S) = sum_s sum_y p(y, s) log(p(s) / p(y, s))`, i.e. the
//! probability of the whole conditioning configuration in the numerator.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::MultiLabelDataset;
use crate::exec::Execution;
use crate::{Error, Result};

/// 2x2 joint counts of a (target, condition) label pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDistribution {
    /// `counts[y_target][y_condition]`.
    pub counts: [[u64; 2]; 2],
    pub total: u64,
}

impl PairDistribution {
    pub fn from_columns(target: &[u8], condition: &[u8]) -> Result<Self> {
        check_len(target.len(), condition.len())?;
        let mut counts = [[0u64; 2]; 2];
        for (&t, &c) in target.iter().zip(condition) {
            counts[t as usize][c as usize] += 1;
        }
        Ok(Self {
            counts,
            total: target.len() as u64,
        })
    }

    pub fn target_marginal(&self) -> [u64; 2] {
        [
            self.counts[0][0] + self.counts[0][1],
            self.counts[1][0] + self.counts[1][1],
        ]
    }

    pub fn condition_marginal(&self) -> [u64; 2] {
        [
            self.counts[0][0] + self.counts[1][0],
            self.counts[0][1] + self.counts[1][1],
        ]
    }

    /// `H(target | condition)`.
    pub fn conditional_entropy(&self) -> f64 {
        let per_config = (0..2).map(|c| [self.counts[0][c], self.counts[1][c]]);
        entropy_from_configs(per_config, self.total)
    }
}

/// Target counts split by the joint configuration of a set of condition labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetDistribution {
    pub arity: usize,
    /// Configuration bitmask (bit `i` = value of condition `i`) to
    /// `(count of target = 0, count of target = 1)`. Unseen configurations
    /// are absent.
    pub configs: BTreeMap<u64, [u64; 2]>,
    pub total: u64,
}

impl SetDistribution {
    pub fn from_columns(target: &[u8], conditions: &[&[u8]]) -> Result<Self> {
        if conditions.len() > 63 {
            return Err(Error::Config("at most 63 conditioning labels are supported".into()));
        }
        for c in conditions {
            check_len(target.len(), c.len())?;
            if std::ptr::eq(target.as_ptr(), c.as_ptr()) && !target.is_empty() {
                return Err(Error::TargetInConditions);
            }
        }
        let mut configs = BTreeMap::new();
        for (i, &t) in target.iter().enumerate() {
            let key = conditions
                .iter()
                .enumerate()
                .fold(0u64, |acc, (b, c)| acc | ((c[i] as u64) << b));
            configs.entry(key).or_insert([0u64; 2])[t as usize] += 1;
        }
        Ok(Self {
            arity: conditions.len(),
            configs,
            total: target.len() as u64,
        })
    }

    pub fn conditional_entropy(&self) -> f64 {
        entropy_from_configs(self.configs.values().copied(), self.total)
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// `sum_q sum_y (n_qy / N) log2(n_q / n_qy)` over per-configuration counts.
fn entropy_from_configs(configs: impl Iterator<Item = [u64; 2]>, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = configs
        .map(|[c0, c1]| {
            let nq = (c0 + c1) as f64;
            [c0, c1]
                .into_iter()
                .filter(|&c| c > 0)
                .map(|c| {
                    let c = c as f64;
                    c / n * (nq / c).log2()
                })
                .sum::<f64>()
        })
        .sum();
    h.clamp(0.0, 1.0)
}

/// Entropy of a single binary label.
pub fn label_entropy(column: &[u8]) -> f64 {
    let ones = column.iter().filter(|&&v| v == 1).count() as u64;
    let zeros = column.len() as u64 - ones;
    entropy_from_configs(std::iter::once([zeros, ones]), column.len() as u64)
}

/// `H(target | condition)`.
pub fn conditional_entropy_pair(target: &[u8], condition: &[u8]) -> Result<f64> {
    Ok(PairDistribution::from_columns(target, condition)?.conditional_entropy())
}

/// `H(target | conditions)`; an empty condition set gives `H(target)`.
pub fn conditional_entropy_set(target: &[u8], conditions: &[&[u8]]) -> Result<f64> {
    Ok(SetDistribution::from_columns(target, conditions)?.conditional_entropy())
}

/// `I(condition -> target) = 1 - H(target | condition)`.
pub fn dependence_degree(target: &[u8], condition: &[u8]) -> Result<f64> {
    Ok(1.0 - conditional_entropy_pair(target, condition)?)
}

pub fn dependence_degree_set(target: &[u8], conditions: &[&[u8]]) -> Result<f64> {
    Ok(1.0 - conditional_entropy_set(target, conditions)?)
}

/// Pairwise dependence degrees; `get(k, j)` is `I(l_k -> l_j)`, the
/// dependence of label `j` on label `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceMatrix {
    values: Array2<f64>,
    label_names: Vec<String>,
}

impl DependenceMatrix {
    pub fn from_values(values: Array2<f64>, label_names: Vec<String>) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c || r != label_names.len() {
            return Err(Error::InvalidDataset("dependence matrix must be square and named".into()));
        }
        Ok(Self {
            values,
            label_names,
        })
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.values[[from, to]]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// Row/column labelled matrix with six decimals. Row `k`, column `j`
    /// holds `I(l_k -> l_j)`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("from\\to");
        for name in &self.label_names {
            s.push(',');
            s.push_str(&csv_field(name));
        }
        s.push('\n');
        for (k, name) in self.label_names.iter().enumerate() {
            s.push_str(&csv_field(name));
            for j in 0..self.n_labels() {
                let _ = write!(s, ",{:.6}", self.values[[k, j]]);
            }
            s.push('\n');
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn dependence_matrix(ds: &MultiLabelDataset) -> DependenceMatrix {
    dependence_matrix_with(ds, Execution::default())
}

pub fn dependence_matrix_with(ds: &MultiLabelDataset, exec: Execution) -> DependenceMatrix {
    let cols = ds.label_columns();
    let m = cols.len();
    let rows = exec.map(m, |k| {
        (0..m)
            .map(|j| {
                if j == k {
                    0.0
                } else {
                    PairDistribution::from_columns(&cols[j], &cols[k])
                        .map(|p| 1.0 - p.conditional_entropy())
                        .expect("label columns share a length")
                }
            })
            .collect::<Vec<f64>>()
    });
    let values = Array2::from_shape_vec((m, m), rows.concat()).expect("square matrix");
    DependenceMatrix {
        values,
        label_names: ds.label_names().to_vec(),
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    /// The 10-instance distribution with joint probabilities
    /// p(0,0)=0.4, p(0,1)=0.0, p(1,0)=0.3, p(1,1)=0.3 over (l1, l2).
    pub(crate) fn table2_columns() -> (Vec<u8>, Vec<u8>) {
        let mut l1 = Vec::new();
        let mut l2 = Vec::new();
        for (a, b, n) in [(0, 0, 4), (1, 0, 3), (1, 1, 3)] {
            for _ in 0..n {
                l1.push(a);
                l2.push(b);
            }
        }
        (l1, l2)
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::table2_columns;
    use super::*;
    use crate::dataset::from_rows;

    #[test]
    fn single_label_entropy() {
        assert_eq!(label_entropy(&[0, 1, 1, 0]), 1.0);
        assert_eq!(label_entropy(&[0, 0, 0]), 0.0);
        let (l1, _) = table2_columns();
        assert!((label_entropy(&l1) - 0.970951).abs() < 1e-6);
    }

    #[test]
    fn pair_entropy_table2() {
        let (l1, l2) = table2_columns();
        let h12 = conditional_entropy_pair(&l1, &l2).unwrap();
        let h21 = conditional_entropy_pair(&l2, &l1).unwrap();
        assert!((h12 - 0.689660).abs() < 1e-6, "{h12}");
        assert!((h21 - 0.6).abs() < 1e-12, "{h21}");
        assert!((dependence_degree(&l1, &l2).unwrap() - 0.310340).abs() < 1e-6);
        assert!((dependence_degree(&l2, &l1).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn identical_and_independent_pairs() {
        let a = [0, 1, 1, 0, 1, 0];
        assert_eq!(conditional_entropy_pair(&a, &a.clone()).unwrap(), 0.0);
        assert_eq!(dependence_degree(&a, &a.clone()).unwrap(), 1.0);
        let t = [0, 0, 1, 1];
        let c = [0, 1, 0, 1];
        assert_eq!(conditional_entropy_pair(&t, &c).unwrap(), label_entropy(&t));
        assert_eq!(dependence_degree(&t, &c).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            conditional_entropy_pair(&[0, 1], &[0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn set_reductions() {
        let t = vec![0, 1, 1, 0, 1, 1, 0, 0, 1];
        let c = vec![0, 1, 0, 0, 1, 1, 1, 0, 1];
        assert_eq!(
            conditional_entropy_set(&t, &[&c]).unwrap(),
            conditional_entropy_pair(&t, &c).unwrap()
        );
        assert_eq!(conditional_entropy_set(&t, &[]).unwrap(), label_entropy(&t));
    }

    #[test]
    fn xor_needs_both_parents() {
        // exact joint over two fair independent bits, target = a xor b
        let a = [0, 0, 1, 1, 0, 0, 1, 1];
        let b = [0, 1, 0, 1, 0, 1, 0, 1];
        let t: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        assert_eq!(conditional_entropy_set(&t, &[&a, &b]).unwrap(), 0.0);
        assert_eq!(conditional_entropy_pair(&t, &a).unwrap(), 1.0);
        assert_eq!(dependence_degree_set(&t, &[&a, &b]).unwrap(), 1.0);
    }

    #[test]
    fn aliased_target_is_rejected() {
        let t = vec![0, 1, 1];
        assert!(matches!(
            conditional_entropy_set(&t, &[&t]),
            Err(Error::TargetInConditions)
        ));
    }

    #[test]
    fn matrix_from_table2_dataset() {
        let (l1, l2) = table2_columns();
        let labels: Vec<Vec<u8>> = l1.iter().zip(&l2).map(|(&a, &b)| vec![a, b]).collect();
        let feats: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let dm = dependence_matrix(&from_rows(&feats, &labels));
        assert_eq!(dm.get(0, 0), 0.0);
        // I(l2 -> l1) and I(l1 -> l2)
        assert!((dm.get(1, 0) - 0.310340).abs() < 1e-6);
        assert!((dm.get(0, 1) - 0.4).abs() < 1e-12);
        let csv = dm.to_csv();
        assert!(csv.starts_with("from\\to,l0,l1\n"));
        assert!(csv.contains("l0,0.000000,0.400000"));
    }

    #[test]
    fn identical_columns_give_unit_matrix() {
        let labels = vec![vec![0, 0], vec![1, 1], vec![1, 1]];
        let feats = vec![vec![0.0]; 3];
        let dm = dependence_matrix_with(&from_rows(&feats, &labels), Execution::Sequential);
        assert_eq!(dm.get(0, 1), 1.0);
        assert_eq!(dm.get(1, 0), 1.0);
    }
}
