//! Multi-label evaluation metrics and the cross-validation harness.

use std::fmt::Write as _;

use ndarray::{ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::chain::{train_method, Method, MethodConfig};
use crate::dataset::{kfold_plan, MultiLabelDataset};
use crate::exec::Execution;
use crate::{Error, Result};

fn check_shapes(y: ArrayView2<u8>, yhat: ArrayView2<u8>) -> Result<()> {
    if y.dim() != yhat.dim() {
        return Err(Error::InvalidDataset(format!(
            "truth is {:?}, predictions are {:?}",
            y.dim(),
            yhat.dim()
        )));
    }
    if y.is_empty() {
        return Err(Error::InvalidDataset("empty label matrix".into()));
    }
    Ok(())
}

/// Fraction of instance-label pairs that disagree.
pub fn hamming_loss(y: ArrayView2<u8>, yhat: ArrayView2<u8>) -> Result<f64> {
    check_shapes(y, yhat)?;
    let wrong = Zip::from(&y).and(&yhat).fold(0usize, |acc, &a, &b| acc + (a != b) as usize);
    Ok(wrong as f64 / y.len() as f64)
}

/// `2|y & yhat| / (|y| + |yhat|)`, 1 when both are empty.
fn instance_f(y: impl Iterator<Item = u8>, yhat: impl Iterator<Item = u8>) -> f64 {
    let (both, total) = y.zip(yhat).fold((0u64, 0u64), |(b, t), (a, p)| {
        (b + (a & p) as u64, t + a as u64 + p as u64)
    });
    if total == 0 {
        1.0
    } else {
        2.0 * both as f64 / total as f64
    }
}

/// Mean per-instance F-score.
pub fn instance_fscore(y: ArrayView2<u8>, yhat: ArrayView2<u8>) -> Result<f64> {
    check_shapes(y, yhat)?;
    let sum: f64 = y
        .rows()
        .into_iter()
        .zip(yhat.rows())
        .map(|(a, p)| instance_f(a.iter().copied(), p.iter().copied()))
        .sum();
    Ok(sum / y.nrows() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl LabelCounts {
    fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

impl std::ops::Add for LabelCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

pub fn label_counts(y: ArrayView2<u8>, yhat: ArrayView2<u8>) -> Result<Vec<LabelCounts>> {
    check_shapes(y, yhat)?;
    Ok(y.columns()
        .into_iter()
        .zip(yhat.columns())
        .map(|(a, p)| {
            a.iter().zip(p).fold(LabelCounts::default(), |c, (&a, &p)| LabelCounts {
                tp: c.tp + (a == 1 && p == 1) as u64,
                fp: c.fp + (a == 0 && p == 1) as u64,
                fn_: c.fn_ + (a == 1 && p == 0) as u64,
            })
        })
        .collect())
}

fn macro_from_counts(counts: &[LabelCounts]) -> f64 {
    counts.iter().map(LabelCounts::f1).sum::<f64>() / counts.len() as f64
}

fn micro_from_counts(counts: &[LabelCounts]) -> f64 {
    counts.iter().copied().fold(LabelCounts::default(), |a, b| a + b).f1()
}

/// Mean of per-label F1; a label absent from truth and predictions scores 1.
pub fn macro_f(y: ArrayView2<u8>, yhat: ArrayView2<u8>) -> Result<f64> {
    Ok(macro_from_counts(&label_counts(y, yhat)?))
}

/// F1 over counts pooled across labels.
pub fn micro_f(y: ArrayView2<u8>, yhat: ArrayView2<u8>) -> Result<f64> {
    Ok(micro_from_counts(&label_counts(y, yhat)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub hamming_loss: f64,
    pub fscore: f64,
    pub mac_f: f64,
    pub mic_f: f64,
    pub per_label: Vec<LabelCounts>,
    pub n_instances: usize,
}

impl EvaluationReport {
    pub fn metric(&self, m: Metric) -> f64 {
        match m {
            Metric::HammingLoss => self.hamming_loss,
            Metric::FScore => self.fscore,
            Metric::MacF => self.mac_f,
            Metric::MicF => self.mic_f,
        }
    }

    /// Micro F recomputed from `per_label`.
    pub fn micro_from_counts(&self) -> f64 {
        micro_from_counts(&self.per_label)
    }
}

pub fn evaluate(y: ArrayView2<u8>, yhat: ArrayView2<u8>) -> Result<EvaluationReport> {
    let per_label = label_counts(y, yhat)?;
    Ok(EvaluationReport {
        hamming_loss: hamming_loss(y, yhat)?,
        fscore: instance_fscore(y, yhat)?,
        mac_f: macro_from_counts(&per_label),
        mic_f: micro_from_counts(&per_label),
        per_label,
        n_instances: y.nrows(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    HammingLoss,
    FScore,
    MacF,
    MicF,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::HammingLoss, Metric::FScore, Metric::MacF, Metric::MicF];

    pub fn short_name(self) -> &'static str {
        match self {
            Metric::HammingLoss => "HL",
            Metric::FScore => "F",
            Metric::MacF => "MacF",
            Metric::MicF => "MicF",
        }
    }

    pub fn higher_is_better(self) -> bool {
        self != Metric::HammingLoss
    }
}

/// Trains `method` on `train` and evaluates it on `test`.
pub fn holdout(
    train: &MultiLabelDataset,
    test: &MultiLabelDataset,
    method: Method,
    cfg: &MethodConfig,
) -> Result<EvaluationReport> {
    if train.n_features() != test.n_features() || train.n_labels() != test.n_labels() {
        return Err(Error::ArityMismatch {
            expected: train.n_features() + train.n_labels(),
            actual: test.n_features() + test.n_labels(),
        });
    }
    let model = train_method(method, train, cfg)?;
    let pred = model.predict_rows(test.features().view())?;
    evaluate(test.labels().view(), pred.view())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k: 10,
            repeats: 1,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub repeat: usize,
    pub fold: usize,
    pub plan_seed: u64,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample standard deviation (0 for a single value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub method: Method,
    pub hamming_loss: MeanStd,
    pub fscore: MeanStd,
    pub mac_f: MeanStd,
    pub mic_f: MeanStd,
    pub fold_count: usize,
    pub repeat_count: usize,
    pub seeds: Vec<u64>,
    pub folds: Vec<FoldRecord>,
}

impl CvSummary {
    pub fn metric(&self, m: Metric) -> MeanStd {
        match m {
            Metric::HammingLoss => self.hamming_loss,
            Metric::FScore => self.fscore,
            Metric::MacF => self.mac_f,
            Metric::MicF => self.mic_f,
        }
    }

    /// Per-fold values of one metric in (repeat, fold) order.
    pub fn values(&self, m: Metric) -> Vec<f64> {
        self.folds.iter().map(|f| f.report.metric(m)).collect()
    }
}

/// Repeated k-fold cross-validation. Repeat `r` splits with seed `seed + r`;
/// the random-order and ensemble seeds of `cfg` are offset by the running
/// evaluation index so every fold draws its own orders.
pub fn cross_validate(
    ds: &MultiLabelDataset,
    method: Method,
    cv: &CvConfig,
    cfg: &MethodConfig,
) -> Result<CvSummary> {
    if cv.k < 2 {
        return Err(Error::Config("k must be at least 2".into()));
    }
    if cv.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..cv.repeats).map(|r| cv.seed.wrapping_add(r as u64)).collect();
    let plans = seeds
        .iter()
        .map(|&s| kfold_plan(ds.n_instances(), cv.k, s))
        .collect::<Result<Vec<_>>>()?;

    let mut folds = cv.execution.try_map(cv.repeats * cv.k, |i| {
        let (repeat, fold) = (i / cv.k, i % cv.k);
        let (train_idx, test_idx) = plans[repeat].split(fold);
        let train = ds.select(&train_idx)?;
        let test = ds.select(&test_idx)?;
        let mut fold_cfg = *cfg;
        fold_cfg.order_seed = cfg.order_seed.wrapping_add(i as u64);
        fold_cfg.ensemble.seed = cfg.ensemble.seed.wrapping_add(i as u64);
        Ok::<_, Error>(FoldRecord {
            repeat,
            fold,
            plan_seed: seeds[repeat],
            report: holdout(&train, &test, method, &fold_cfg)?,
        })
    })?;
    folds.sort_by_key(|f| (f.repeat, f.fold));

    let agg = |m: Metric| MeanStd::of(&folds.iter().map(|f| f.report.metric(m)).collect::<Vec<_>>());
    Ok(CvSummary {
        method,
        hamming_loss: agg(Metric::HammingLoss),
        fscore: agg(Metric::FScore),
        mac_f: agg(Metric::MacF),
        mic_f: agg(Metric::MicF),
        fold_count: cv.k,
        repeat_count: cv.repeats,
        seeds,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub summaries: Vec<CvSummary>,
}

impl Comparison {
    /// Index of the best summary for `m`; ties go to the earlier method.
    pub fn best(&self, m: Metric) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in self.summaries.iter().enumerate() {
            let v = s.metric(m).mean;
            let better = match best {
                None => true,
                Some((_, b)) if m.higher_is_better() => v > b,
                Some((_, b)) => v < b,
            };
            if better {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Methods by metrics as "mean ± std" cells, plus a column naming the
    /// metrics on which each method is best.
    pub fn to_table(&self) -> String {
        let mut header = vec!["method".to_string()];
        header.extend(Metric::ALL.iter().map(|m| m.short_name().to_string()));
        header.push("best".into());
        let mut rows = vec![header];
        for (i, s) in self.summaries.iter().enumerate() {
            let mut row = vec![s.method.to_string()];
            row.extend(Metric::ALL.iter().map(|&m| s.metric(m).to_string()));
            let wins: Vec<&str> = Metric::ALL
                .iter()
                .filter(|&&m| self.best(m) == Some(i))
                .map(|m| m.short_name())
                .collect();
            row.push(if wins.is_empty() { "-".into() } else { wins.join(",") });
            rows.push(row);
        }
        let ncols = rows[0].len();
        let widths: Vec<usize> = (0..ncols)
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let line = row
                .iter()
                .zip(&widths)
                .map(|(cell, &w)| format!("{cell:<w$}"))
                .collect::<Vec<_>>()
                .join("  ");
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }
}

/// Cross-validates every method under the same fold plans and seeds.
pub fn compare(
    ds: &MultiLabelDataset,
    methods: &[Method],
    cv: &CvConfig,
    cfg: &MethodConfig,
) -> Result<Comparison> {
    let summaries = methods
        .iter()
        .map(|&m| cross_validate(ds, m, cv, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison { summaries })
}
