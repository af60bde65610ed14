//! Classifier chains and their baselines.
//!
//! A chain over order `tau` trains stage `j` on the instance features
//! extended with the labels `tau(1), ..., tau(j-1)`. Training uses the true
//! predecessor labels; prediction feeds each stage the hard predictions of
//! the stages before it.

use std::str::FromStr;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::MultiLabelDataset;
use crate::exec::Execution;
use crate::graph::{LabelOrder, WeightedDigraph};
use crate::learner::{fit, fit_with_passthrough, LearnerConfig, TrainedBinary};
use crate::structure::{build_order, OrderDiagnostics, SearchConfig};
use crate::{Error, Result};

/// `[x, predecessors]`.
pub fn extend_features(x: &[f64], predecessors: &[u8]) -> Vec<f64> {
    x.iter()
        .copied()
        .chain(predecessors.iter().map(|&p| p as f64))
        .collect()
}

/// Learner seed for the model responsible for `label`, so that a chain
/// stage and a binary-relevance model for the same label start alike.
fn label_seed(base: u64, label: usize) -> u64 {
    base.wrapping_add((label as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn check_order(order: &LabelOrder, m: usize) -> Result<()> {
    if order.len() != m {
        return Err(Error::InvalidOrder(format!(
            "order covers {} labels, dataset has {m}",
            order.len()
        )));
    }
    Ok(())
}

/// Features followed by the label columns permuted into `order`.
fn teacher_forced_matrix(ds: &MultiLabelDataset, order: &LabelOrder) -> Array2<f64> {
    let ordered = ds.labels().select(Axis(1), order.as_slice()).mapv(f64::from);
    ndarray::concatenate(Axis(1), &[ds.features().view(), ordered.view()])
        .expect("row counts agree")
}

/// Training inputs and targets of stage `j` (0-based) of a chain over `order`.
pub fn stage_training_set(
    ds: &MultiLabelDataset,
    order: &LabelOrder,
    j: usize,
) -> Result<(Array2<f64>, Vec<u8>)> {
    check_order(order, ds.n_labels())?;
    if j >= order.len() {
        return Err(Error::InvalidOrder(format!("stage {j} out of range")));
    }
    let full = teacher_forced_matrix(ds, order);
    let x = full.slice(s![.., ..ds.n_features() + j]).to_owned();
    Ok((x, ds.label_column(order.as_slice()[j])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    pub order: LabelOrder,
    pub stages: Vec<TrainedBinary>,
    pub base_arity: usize,
    pub label_names: Vec<String>,
}

impl ChainModel {
    /// Checks the arity ladder: stage `j` takes `base_arity + j` inputs.
    pub fn validate(&self) -> Result<()> {
        if self.order.len() != self.stages.len() || self.label_names.len() != self.stages.len() {
            return Err(Error::InvalidOrder("chain order, stages and names disagree".into()));
        }
        for (j, st) in self.stages.iter().enumerate() {
            if st.arity() != self.base_arity + j {
                return Err(Error::ArityMismatch {
                    expected: self.base_arity + j,
                    actual: st.arity(),
                });
            }
        }
        Ok(())
    }

    pub fn n_labels(&self) -> usize {
        self.stages.len()
    }

    /// Predictions in original label order.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<u8>> {
        if x.len() != self.base_arity {
            return Err(Error::ArityMismatch {
                expected: self.base_arity,
                actual: x.len(),
            });
        }
        let mut input = x.to_vec();
        let mut out = vec![0u8; self.n_labels()];
        for (stage, &label) in self.stages.iter().zip(self.order.as_slice()) {
            let y = stage.predict(&input)?;
            out[label] = y;
            input.push(y as f64);
        }
        Ok(out)
    }

    /// Row-wise [`ChainModel::predict`]; returns an `N x M` matrix.
    pub fn predict_rows(&self, x: ArrayView2<f64>) -> Result<Array2<u8>> {
        if x.ncols() != self.base_arity {
            return Err(Error::ArityMismatch {
                expected: self.base_arity,
                actual: x.ncols(),
            });
        }
        let n = x.nrows();
        let d = self.base_arity;
        let mut work = Array2::<f64>::zeros((n, d + self.n_labels()));
        work.slice_mut(s![.., ..d]).assign(&x);
        let mut out = Array2::<u8>::zeros((n, self.n_labels()));
        for (j, (stage, &label)) in self.stages.iter().zip(self.order.as_slice()).enumerate() {
            let preds = stage.predict_rows(work.slice(s![.., ..d + j]))?;
            for (i, &p) in preds.iter().enumerate() {
                work[[i, d + j]] = p as f64;
                out[[i, label]] = p;
            }
        }
        Ok(out)
    }
}

pub fn train_chain(ds: &MultiLabelDataset, order: &LabelOrder, cfg: &LearnerConfig) -> Result<ChainModel> {
    train_chain_observed(ds, order, cfg, |_, _, _| {})
}

/// [`train_chain`], handing each stage's training inputs and targets to
/// `observe` before that stage is fitted.
pub fn train_chain_observed<F>(
    ds: &MultiLabelDataset,
    order: &LabelOrder,
    cfg: &LearnerConfig,
    mut observe: F,
) -> Result<ChainModel>
where
    F: FnMut(usize, ArrayView2<f64>, &[u8]),
{
    check_order(order, ds.n_labels())?;
    let d = ds.n_features();
    let full = teacher_forced_matrix(ds, order);
    let mut stages = Vec::with_capacity(order.len());
    for (j, &label) in order.as_slice().iter().enumerate() {
        let stage_cfg = LearnerConfig {
            seed: label_seed(cfg.seed, label),
            ..*cfg
        };
        let x = full.slice(s![.., ..d + j]);
        let y = ds.label_column(label);
        observe(j, x, &y);
        stages.push(fit_with_passthrough(x, &y, &stage_cfg, d)?);
    }
    Ok(ChainModel {
        order: order.clone(),
        stages,
        base_arity: d,
        label_names: ds.label_names().to_vec(),
    })
}

pub fn predict_chain(m: &ChainModel, x: &[f64]) -> Result<Vec<u8>> {
    m.predict(x)
}

/// Uniformly random label order drawn from `seed`.
pub fn random_order(m: usize, seed: u64) -> LabelOrder {
    let mut perm: Vec<usize> = (0..m).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    LabelOrder::new(perm).expect("shuffled identity is a permutation")
}

/// Binary relevance: one independent model per label on the raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BRModel {
    pub models: Vec<TrainedBinary>,
    pub base_arity: usize,
    pub label_names: Vec<String>,
}

impl BRModel {
    pub fn predict(&self, x: &[f64]) -> Result<Vec<u8>> {
        self.models.iter().map(|m| m.predict(x)).collect()
    }

    pub fn predict_rows(&self, x: ArrayView2<f64>) -> Result<Array2<u8>> {
        let mut out = Array2::<u8>::zeros((x.nrows(), self.models.len()));
        for (j, m) in self.models.iter().enumerate() {
            let preds = m.predict_rows(x)?;
            out.column_mut(j).assign(&ndarray::Array1::from(preds));
        }
        Ok(out)
    }
}

pub fn train_br(ds: &MultiLabelDataset, cfg: &LearnerConfig) -> Result<BRModel> {
    let models = (0..ds.n_labels())
        .map(|j| {
            let c = LearnerConfig {
                seed: label_seed(cfg.seed, j),
                ..*cfg
            };
            fit(ds.features().view(), &ds.label_column(j), &c)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BRModel {
        models,
        base_arity: ds.n_features(),
        label_names: ds.label_names().to_vec(),
    })
}

pub fn predict_br(m: &BRModel, x: &[f64]) -> Result<Vec<u8>> {
    m.predict(x)
}

/// Default ensemble size: 10 chains up to 5000 instances, 5 beyond.
pub fn default_ensemble_size(n: usize) -> usize {
    if n <= 5000 {
        10
    } else {
        5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// Number of chains; `None` picks [`default_ensemble_size`].
    pub size: Option<usize>,
    pub seed: u64,
    pub vote_threshold: f64,
    pub execution: Execution,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            size: None,
            seed: 0,
            vote_threshold: 0.5,
            execution: Execution::default(),
        }
    }
}

/// Chains over random orders combined by per-label hard voting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub chains: Vec<ChainModel>,
    pub vote_threshold: f64,
}

impl EnsembleModel {
    /// 1 where the fraction of chains voting 1 reaches the threshold.
    fn combine(&self, votes: &Array2<u32>) -> Array2<u8> {
        let k = self.chains.len() as f64;
        votes.mapv(|v| (v as f64 / k >= self.vote_threshold) as u8)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<u8>> {
        let row = ArrayView2::from_shape((1, x.len()), x).expect("one row");
        Ok(self.predict_rows(row)?.row(0).to_vec())
    }

    pub fn predict_rows(&self, x: ArrayView2<f64>) -> Result<Array2<u8>> {
        let first = self.chains.first().ok_or_else(|| Error::Config("empty ensemble".into()))?;
        let mut votes = Array2::<u32>::zeros((x.nrows(), first.n_labels()));
        for chain in &self.chains {
            votes += &chain.predict_rows(x)?.mapv(u32::from);
        }
        Ok(self.combine(&votes))
    }
}

pub fn train_ecc(ds: &MultiLabelDataset, ecfg: &EnsembleConfig, cfg: &LearnerConfig) -> Result<EnsembleModel> {
    let k = ecfg.size.unwrap_or_else(|| default_ensemble_size(ds.n_instances()));
    if k == 0 {
        return Err(Error::Config("ensemble size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ecfg.seed);
    let orders: Vec<LabelOrder> = (0..k)
        .map(|_| {
            let mut perm: Vec<usize> = (0..ds.n_labels()).collect();
            perm.shuffle(&mut rng);
            LabelOrder::new(perm).expect("permutation")
        })
        .collect();
    let chains = ecfg.execution.try_map(k, |i| {
        let c = LearnerConfig {
            seed: cfg.seed.wrapping_add(i as u64),
            ..*cfg
        };
        train_chain(ds, &orders[i], &c)
    })?;
    Ok(EnsembleModel {
        chains,
        vote_threshold: ecfg.vote_threshold,
    })
}

pub fn predict_ecc(m: &EnsembleModel, x: &[f64]) -> Result<Vec<u8>> {
    m.predict(x)
}

/// Chain over the order learned by [`build_order`], with its diagnostics and
/// final label network.
pub fn train_bncc(
    ds: &MultiLabelDataset,
    search: &SearchConfig,
    cfg: &LearnerConfig,
) -> Result<(ChainModel, OrderDiagnostics, WeightedDigraph)> {
    let bn = build_order(ds, search)?;
    let model = train_chain(ds, &bn.order, cfg)?;
    Ok((model, bn.diagnostics, bn.final_dag))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Br,
    CcRandom,
    Ecc,
    Bncc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Br, Method::CcRandom, Method::Ecc, Method::Bncc];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Br => "br",
            Method::CcRandom => "cc_random",
            Method::Ecc => "ecc",
            Method::Bncc => "bncc",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// Settings shared by every method; each method reads what it needs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub learner: LearnerConfig,
    pub search: SearchConfig,
    pub ensemble: EnsembleConfig,
    /// Seed for the random order of `cc_random`.
    pub order_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TrainedModel {
    Br(BRModel),
    CcRandom(ChainModel),
    Ecc(EnsembleModel),
    Bncc {
        chain: ChainModel,
        diagnostics: Box<OrderDiagnostics>,
    },
}

impl TrainedModel {
    pub fn method(&self) -> Method {
        match self {
            TrainedModel::Br(_) => Method::Br,
            TrainedModel::CcRandom(_) => Method::CcRandom,
            TrainedModel::Ecc(_) => Method::Ecc,
            TrainedModel::Bncc { .. } => Method::Bncc,
        }
    }

    pub fn base_arity(&self) -> usize {
        match self {
            TrainedModel::Br(m) => m.base_arity,
            TrainedModel::CcRandom(c) | TrainedModel::Bncc { chain: c, .. } => c.base_arity,
            TrainedModel::Ecc(e) => e.chains.first().map_or(0, |c| c.base_arity),
        }
    }

    pub fn label_names(&self) -> &[String] {
        match self {
            TrainedModel::Br(m) => &m.label_names,
            TrainedModel::CcRandom(c) | TrainedModel::Bncc { chain: c, .. } => &c.label_names,
            TrainedModel::Ecc(e) => e.chains.first().map_or(&[], |c| &c.label_names),
        }
    }

    pub fn predict_rows(&self, x: ArrayView2<f64>) -> Result<Array2<u8>> {
        match self {
            TrainedModel::Br(m) => m.predict_rows(x),
            TrainedModel::CcRandom(c) | TrainedModel::Bncc { chain: c, .. } => c.predict_rows(x),
            TrainedModel::Ecc(e) => e.predict_rows(x),
        }
    }
}

pub fn train_method(method: Method, ds: &MultiLabelDataset, cfg: &MethodConfig) -> Result<TrainedModel> {
    Ok(match method {
        Method::Br => TrainedModel::Br(train_br(ds, &cfg.learner)?),
        Method::CcRandom => {
            let order = random_order(ds.n_labels(), cfg.order_seed);
            TrainedModel::CcRandom(train_chain(ds, &order, &cfg.learner)?)
        }
        Method::Ecc => TrainedModel::Ecc(train_ecc(ds, &cfg.ensemble, &cfg.learner)?),
        Method::Bncc => {
            let (chain, diagnostics, _) = train_bncc(ds, &cfg.search, &cfg.learner)?;
            TrainedModel::Bncc {
                chain,
                diagnostics: Box::new(diagnostics),
            }
        }
    })
}
