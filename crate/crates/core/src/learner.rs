//! Linear binary base learners used at every chain position.

use ndarray::{Array1, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const SCALE_FLOOR: f64 = 1e-12;
const INIT_SPREAD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    /// L2-regularised log loss.
    Logistic,
    /// L2-regularised hinge loss.
    LinearMargin,
    /// Always predicts the training majority class.
    Constant,
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Self::Logistic),
            "linear_margin" => Ok(Self::LinearMargin),
            "constant" => Ok(Self::Constant),
            _ => Err(Error::Config(format!("unknown learner kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub standardize: bool,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            kind: LearnerKind::Logistic,
            learning_rate: 0.1,
            epochs: 200,
            l2: 1e-3,
            standardize: true,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config("l2 must be nonnegative".into()));
        }
        Ok(())
    }
}

/// A fitted binary classifier `R^p -> {0,1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedBinary {
    pub kind: LearnerKind,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Per-input centre and scale; `(0, 1)` for inputs left unscaled.
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// Set when the model ignores its inputs (single-class targets or the
    /// constant learner).
    pub constant_class: Option<u8>,
}

impl TrainedBinary {
    pub fn constant(arity: usize, class: u8) -> Self {
        Self {
            kind: LearnerKind::Constant,
            weights: vec![0.0; arity],
            bias: 0.0,
            mean: vec![0.0; arity],
            scale: vec![1.0; arity],
            constant_class: Some(class),
        }
    }

    pub fn arity(&self) -> usize {
        self.weights.len()
    }

    fn check_arity(&self, actual: usize) -> Result<()> {
        if actual != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                actual,
            });
        }
        Ok(())
    }

    fn linear(&self, x: ArrayView1<f64>) -> f64 {
        x.iter()
            .zip(&self.weights)
            .zip(self.mean.iter().zip(&self.scale))
            .map(|((&v, &w), (&mu, &s))| w * (v - mu) / s)
            .sum::<f64>()
            + self.bias
    }

    /// Probability of the positive class for logistic models, signed margin
    /// for margin models, and the class itself for constant models.
    pub fn predict_score(&self, x: &[f64]) -> Result<f64> {
        self.check_arity(x.len())?;
        Ok(self.score_unchecked(ArrayView1::from(x)))
    }

    fn score_unchecked(&self, x: ArrayView1<f64>) -> f64 {
        if let Some(c) = self.constant_class {
            return c as f64;
        }
        let z = self.linear(x);
        match self.kind {
            LearnerKind::Logistic => sigmoid(z),
            _ => z,
        }
    }

    fn decide(&self, score: f64) -> u8 {
        if let Some(c) = self.constant_class {
            return c;
        }
        let threshold = match self.kind {
            LearnerKind::Logistic => 0.5,
            _ => 0.0,
        };
        (score >= threshold) as u8
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(self.decide(self.predict_score(x)?))
    }

    /// One prediction per row of `x`.
    pub fn predict_rows(&self, x: ArrayView2<f64>) -> Result<Vec<u8>> {
        self.check_arity(x.ncols())?;
        Ok(x.rows()
            .into_iter()
            .map(|r| self.decide(self.score_unchecked(r)))
            .collect())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fit on all columns of `features`, standardising each when enabled.
pub fn fit(features: ArrayView2<f64>, targets: &[u8], cfg: &LearnerConfig) -> Result<TrainedBinary> {
    fit_with_passthrough(features, targets, cfg, features.ncols())
}

/// Fit where only the first `standardized` columns may be standardised; the
/// remaining columns are used as given.
pub fn fit_with_passthrough(
    features: ArrayView2<f64>,
    targets: &[u8],
    cfg: &LearnerConfig,
    standardized: usize,
) -> Result<TrainedBinary> {
    cfg.validate()?;
    let (n, p) = features.dim();
    if n == 0 || p == 0 {
        return Err(Error::InvalidDataset("learner needs at least one row and column".into()));
    }
    if targets.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: targets.len(),
        });
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if targets.iter().any(|&t| t > 1) {
        return Err(Error::InvalidDataset("targets must be 0 or 1".into()));
    }

    let positives = targets.iter().filter(|&&t| t == 1).count();
    if positives == 0 || positives == n {
        return Ok(TrainedBinary::constant(p, (positives == n) as u8));
    }
    if cfg.kind == LearnerKind::Constant {
        return Ok(TrainedBinary::constant(p, (2 * positives >= n) as u8));
    }

    let mut mean = vec![0.0; p];
    let mut scale = vec![1.0; p];
    if cfg.standardize {
        let k = standardized.min(p);
        let mu = features.slice(ndarray::s![.., ..k]).mean_axis(Axis(0)).expect("n > 0");
        for c in 0..k {
            let col = features.column(c);
            let var = col.iter().map(|v| (v - mu[c]).powi(2)).sum::<f64>() / n as f64;
            mean[c] = mu[c];
            scale[c] = var.sqrt().max(SCALE_FLOOR);
        }
    }
    let mut z = features.to_owned();
    for (c, mut col) in z.axis_iter_mut(Axis(1)).enumerate() {
        if mean[c] != 0.0 || scale[c] != 1.0 {
            col.mapv_inplace(|v| (v - mean[c]) / scale[c]);
        }
    }
    let y = Array1::from_iter(targets.iter().map(|&t| t as f64));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = Array1::from_iter((0..p).map(|_| rng.random_range(-INIT_SPREAD..INIT_SPREAD)));
    let mut b = 0.0;
    for _ in 0..cfg.epochs {
        let (_, gw, gb) = match cfg.kind {
            LearnerKind::Logistic => logistic_objective(w.view(), b, z.view(), y.view(), cfg.l2),
            LearnerKind::LinearMargin => hinge_objective(w.view(), b, z.view(), y.view(), cfg.l2),
            LearnerKind::Constant => unreachable!(),
        };
        w.scaled_add(-cfg.learning_rate, &gw);
        b -= cfg.learning_rate * gb;
    }
    if !w.iter().all(|v| v.is_finite()) || !b.is_finite() {
        return Err(Error::NonFinite);
    }

    Ok(TrainedBinary {
        kind: cfg.kind,
        weights: w.to_vec(),
        bias: b,
        mean,
        scale,
        constant_class: None,
    })
}

/// Mean log loss plus `l2/2 * |w|^2`, with gradients for weights and bias.
pub fn logistic_objective(
    w: ArrayView1<f64>,
    b: f64,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    l2: f64,
) -> (f64, Array1<f64>, f64) {
    let n = x.nrows() as f64;
    let z = x.dot(&w) + b;
    // log(1 + e^z) - y z, computed stably
    let loss = z
        .iter()
        .zip(y)
        .map(|(&zi, &yi)| zi.max(0.0) + (-zi.abs()).exp().ln_1p() - yi * zi)
        .sum::<f64>()
        / n
        + 0.5 * l2 * w.dot(&w);
    let resid = z.mapv(sigmoid) - y;
    let gw = x.t().dot(&resid) / n + &(&w * l2);
    let gb = resid.sum() / n;
    (loss, gw, gb)
}

/// Mean hinge loss on `s = 2y - 1` plus `l2/2 * |w|^2`, with a subgradient.
pub fn hinge_objective(
    w: ArrayView1<f64>,
    b: f64,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    l2: f64,
) -> (f64, Array1<f64>, f64) {
    let n = x.nrows() as f64;
    let z = x.dot(&w) + b;
    let mut loss = 0.0;
    let mut coef = Array1::<f64>::zeros(x.nrows());
    for (i, (&zi, &yi)) in z.iter().zip(y).enumerate() {
        let s = 2.0 * yi - 1.0;
        let margin = 1.0 - s * zi;
        if margin > 0.0 {
            loss += margin;
            coef[i] = -s;
        }
    }
    let gw = x.t().dot(&coef) / n + &(&w * l2);
    (loss / n + 0.5 * l2 * w.dot(&w), gw, coef.sum() / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::{any, prop_assert_eq, prop_assume, proptest, ProptestConfig};

    fn and_data() -> (Array2<f64>, Vec<u8>) {
        (array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]], vec![0, 0, 0, 1])
    }

    #[test]
    fn single_class_targets_short_circuit() {
        let x = array![[1.0], [2.0]];
        let m = fit(x.view(), &[1, 1], &LearnerConfig::default()).unwrap();
        assert_eq!(m.constant_class, Some(1));
        assert_eq!(m.predict(&[-100.0]).unwrap(), 1);
    }

    #[test]
    fn constant_zero_predicts_zero() {
        let m = TrainedBinary::constant(3, 0);
        assert_eq!(m.predict(&[5.0, 1.0, -2.0]).unwrap(), 0);
    }

    #[test]
    fn zero_weight_logistic_breaks_ties_positive() {
        let m = TrainedBinary {
            kind: LearnerKind::Logistic,
            weights: vec![0.0, 0.0],
            bias: 0.0,
            mean: vec![0.0; 2],
            scale: vec![1.0; 2],
            constant_class: None,
        };
        assert_eq!(m.predict_score(&[3.0, -1.0]).unwrap(), 0.5);
        assert_eq!(m.predict(&[3.0, -1.0]).unwrap(), 1);
    }

    #[test]
    fn learns_and_function() {
        let (x, y) = and_data();
        for kind in [LearnerKind::Logistic, LearnerKind::LinearMargin] {
            let cfg = LearnerConfig {
                kind,
                ..LearnerConfig::default()
            };
            let m = fit(x.view(), &y, &cfg).unwrap();
            assert_eq!(m.predict_rows(x.view()).unwrap(), y, "{kind:?}");
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let (x, y) = and_data();
        let cfg = LearnerConfig::default();
        assert_eq!(fit(x.view(), &y, &cfg).unwrap(), fit(x.view(), &y, &cfg).unwrap());
    }

    #[test]
    fn margin_prediction_follows_sign() {
        let (x, y) = and_data();
        let cfg = LearnerConfig {
            kind: LearnerKind::LinearMargin,
            ..LearnerConfig::default()
        };
        let m = fit(x.view(), &y, &cfg).unwrap();
        for r in x.rows() {
            let s = m.predict_score(r.as_slice().unwrap()).unwrap();
            assert_eq!(m.predict(r.as_slice().unwrap()).unwrap(), (s >= 0.0) as u8);
        }
    }

    #[test]
    fn arity_and_nan_errors() {
        let (x, y) = and_data();
        let m = fit(x.view(), &y, &LearnerConfig::default()).unwrap();
        assert!(matches!(m.predict(&[1.0]), Err(Error::ArityMismatch { .. })));
        assert!(fit(x.view(), &y[..3], &LearnerConfig::default()).is_err());
        let mut bad = x.clone();
        bad[[0, 0]] = f64::NAN;
        assert!(matches!(fit(bad.view(), &y, &LearnerConfig::default()), Err(Error::NonFinite)));
    }

    #[test]
    fn passthrough_columns_are_not_scaled() {
        let x = array![[10.0, 0.0], [20.0, 1.0], [30.0, 1.0], [40.0, 0.0]];
        let m = fit_with_passthrough(x.view(), &[0, 1, 1, 0], &LearnerConfig::default(), 1).unwrap();
        assert_eq!(m.mean[1], 0.0);
        assert_eq!(m.scale[1], 1.0);
        assert!((m.mean[0] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn constant_kind_uses_majority() {
        let x = array![[0.0], [1.0], [2.0]];
        let cfg = LearnerConfig {
            kind: LearnerKind::Constant,
            ..LearnerConfig::default()
        };
        assert_eq!(fit(x.view(), &[1, 0, 1], &cfg).unwrap().constant_class, Some(1));
        assert_eq!(fit(x.view(), &[0, 0, 1], &cfg).unwrap().constant_class, Some(0));
    }

    fn finite_difference_check(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=20);
        let p = rng.random_range(1..=5);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-2.0..2.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(0..2) as f64);
        let w = Array1::from_shape_fn(p, |_| rng.random_range(-1.0..1.0));
        let b: f64 = rng.random_range(-1.0..1.0);
        let l2 = 0.01;
        let (_, gw, gb) = logistic_objective(w.view(), b, x.view(), y.view(), l2);
        let h = 1e-5;
        let f = |w: &Array1<f64>, b: f64| logistic_objective(w.view(), b, x.view(), y.view(), l2).0;
        for k in 0..p {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[k] += h;
            wm[k] -= h;
            let num = (f(&wp, b) - f(&wm, b)) / (2.0 * h);
            let rel = (num - gw[k]).abs() / num.abs().max(gw[k].abs()).max(1e-8);
            assert!(rel < 1e-6, "weight {k}: analytic {} numeric {num}", gw[k]);
        }
        let num = (f(&w, b + h) - f(&w, b - h)) / (2.0 * h);
        let rel = (num - gb).abs() / num.abs().max(gb.abs()).max(1e-8);
        assert!(rel < 1e-6, "bias: analytic {gb} numeric {num}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn logistic_gradient_matches_central_differences(seed in any::<u64>()) {
            finite_difference_check(seed);
        }

        #[test]
        fn standardized_decisions_ignore_affine_rescaling(
            seed in any::<u64>(),
            col in 0usize..3,
            a in 0.1f64..10.0,
            shift in -50.0f64..50.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = Array2::from_shape_fn((24, 3), |_| rng.random_range(-3.0..3.0));
            let y: Vec<u8> = x.rows().into_iter().map(|r| (r[0] + 0.5 * r[1] > 0.0) as u8).collect();
            prop_assume!(y.contains(&1) && y.contains(&0));
            let cfg = LearnerConfig { seed, ..LearnerConfig::default() };
            let mut xs = x.clone();
            xs.column_mut(col).mapv_inplace(|v| a * v + shift);
            let m1 = fit(x.view(), &y, &cfg).unwrap();
            let m2 = fit(xs.view(), &y, &cfg).unwrap();
            let p1 = m1.predict_rows(x.view()).unwrap();
            let p2 = m2.predict_rows(xs.view()).unwrap();
            prop_assert_eq!(p1, p2);
        }
    }
}
