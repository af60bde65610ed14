//! Synthetic multi-label data drawn from a known label network.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::MultiLabelDataset;
use crate::graph::{topological_sort, WeightedDigraph};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthEdge {
    pub parent: usize,
    pub child: usize,
    pub flip_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_labels: usize,
    pub n_instances: usize,
    pub n_features: usize,
    pub edges: Vec<SynthEdge>,
    pub base_prob: f64,
    pub feature_noise: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Independent fair labels, moderately noisy features.
    pub fn independent(n_labels: usize, n_instances: usize, seed: u64) -> Self {
        Self {
            n_labels,
            n_instances,
            n_features: n_labels,
            edges: Vec::new(),
            base_prob: 0.5,
            feature_noise: 0.5,
            seed,
        }
    }

    /// Labels `0 -> 1 -> ... -> m-1` with a shared flip probability.
    pub fn chain(n_labels: usize, n_instances: usize, flip_prob: f64, seed: u64) -> Self {
        Self {
            edges: (1..n_labels)
                .map(|c| SynthEdge {
                    parent: c - 1,
                    child: c,
                    flip_prob,
                })
                .collect(),
            ..Self::independent(n_labels, n_instances, seed)
        }
    }
}

/// Sample a dataset by ancestral sampling over the label network in `spec`.
///
/// Roots are Bernoulli(`base_prob`). A child takes the OR over its incoming
/// edges of the parent value, each edge flipping that value independently
/// with its `flip_prob`; with a single parent this is a noisy copy.
/// Each label owns a random unit prototype in feature space and an instance's
/// features are the sum of the prototypes of its positive labels plus
/// `feature_noise` times standard normal noise.
///
/// Also returns the generating DAG, with edge weight `1 - flip_prob`.
pub fn synth(spec: &SynthSpec) -> Result<(MultiLabelDataset, WeightedDigraph)> {
    let m = spec.n_labels;
    let d = spec.n_features;
    if !(spec.base_prob > 0.0 && spec.base_prob < 1.0) {
        return Err(Error::Config(format!("base_prob {} must lie in (0,1)", spec.base_prob)));
    }
    if !(spec.feature_noise >= 0.0 && spec.feature_noise.is_finite()) {
        return Err(Error::Config("feature_noise must be a finite nonnegative number".into()));
    }
    let names: Vec<String> = (0..m).map(|j| format!("l{j}")).collect();
    let mut dag = WeightedDigraph::new(names.clone());
    for e in &spec.edges {
        if !(0.0..1.0).contains(&e.flip_prob) {
            return Err(Error::Config(format!("flip_prob {} must lie in [0,1)", e.flip_prob)));
        }
        dag.add_edge(e.parent, e.child, 1.0 - e.flip_prob)?;
    }
    let order = topological_sort(&dag)?;

    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for e in &spec.edges {
        incoming[e.child].push((e.parent, e.flip_prob));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut prototypes = Array2::<f64>::zeros((m, d));
    for mut row in prototypes.rows_mut() {
        row.mapv_inplace(|_| rng.sample(StandardNormal));
        let norm = row.dot(&row).sqrt().max(1e-12);
        row /= norm;
    }

    let n = spec.n_instances;
    let mut x = Array2::<f64>::zeros((n, d));
    let mut y = Array2::<u8>::zeros((n, m));
    for i in 0..n {
        let mut labels = vec![0u8; m];
        for &j in order.as_slice() {
            labels[j] = if incoming[j].is_empty() {
                rng.random_bool(spec.base_prob) as u8
            } else {
                incoming[j]
                    .iter()
                    .map(|&(p, flip)| labels[p] ^ (rng.random_bool(flip) as u8))
                    .fold(0, |acc, v| acc | v)
            };
        }
        let mut feat = Array1::<f64>::zeros(d);
        for (j, &v) in labels.iter().enumerate() {
            if v == 1 {
                feat += &prototypes.row(j);
            }
        }
        for (k, f) in feat.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            x[[i, k]] = *f + spec.feature_noise * z;
        }
        for (j, &v) in labels.iter().enumerate() {
            y[[i, j]] = v;
        }
    }

    let ds = MultiLabelDataset::new(x, y, (0..d).map(|k| format!("f{k}")).collect(), names)?;
    Ok((ds, dag))
}
