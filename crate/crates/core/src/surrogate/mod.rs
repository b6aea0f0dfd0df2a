//! Fast regressors from auxiliary arrays to the solver's optimal `rho`.

use alloc::format;
use alloc::vec::Vec;

use crate::datagen::DatasetRow;
use crate::ising::Spin;
use crate::{Error, Result};

mod forest;
mod mlp;

pub use forest::{train_forest, train_tree, ForestModel, ForestOptions, Node, Tree};
pub use mlp::{train_mlp, MlpModel, MlpOptions, TrainReport};

/// Feature rows of `±1` spins with real targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    n_features: usize,
    features: Vec<Spin>,
    targets: Vec<f64>,
}

impl Samples {
    pub fn new(n_features: usize, features: Vec<Spin>, targets: Vec<f64>) -> Result<Self> {
        if features.len() != n_features * targets.len() {
            return Err(Error::DimensionMismatch { expected: n_features * targets.len(), actual: features.len() });
        }
        if features.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument("feature is not -1 or +1".into()));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("target is not finite".into()));
        }
        Ok(Self { n_features, features, targets })
    }

    pub fn from_rows(rows: &[DatasetRow]) -> Result<Self> {
        let n_features = rows.first().map_or(0, |r| r.aux.len());
        let mut features = Vec::with_capacity(n_features * rows.len());
        for r in rows {
            if r.aux.len() != n_features {
                return Err(Error::DimensionMismatch { expected: n_features, actual: r.aux.len() });
            }
            features.extend_from_slice(r.aux.as_slice());
        }
        Self::new(n_features, features, rows.iter().map(|r| r.rho).collect())
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &[Spin] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// The rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self { n_features: self.n_features, features, targets: indices.iter().map(|&i| self.targets[i]).collect() }
    }

    /// A copy with targets replaced.
    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Self> {
        Self::new(self.n_features, self.features.clone(), targets)
    }
}

/// A trained predictor of `rho`.
pub trait Regressor {
    fn n_features(&self) -> usize;

    /// Prediction for one feature row, clamped to `[0, 1]`.
    fn predict(&self, x: &[Spin]) -> Result<f64>;

    fn predict_all(&self, samples: &Samples) -> Result<Vec<f64>> {
        (0..samples.len()).map(|i| self.predict(samples.row(i))).collect()
    }
}

pub(crate) fn check_features(expected: usize, x: &[Spin]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, actual: x.len() });
    }
    Ok(())
}

/// Predicts the same value everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantModel {
    pub n_features: usize,
    pub value: f64,
}

impl Regressor for ConstantModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict(&self, x: &[Spin]) -> Result<f64> {
        check_features(self.n_features, x)?;
        Ok(self.value)
    }
}

/// Mean squared error of `model` on `samples`.
pub fn evaluate_mse<R: Regressor + ?Sized>(model: &R, samples: &Samples) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate on an empty test set".into()));
    }
    mse(&model.predict_all(samples)?, samples.targets())
}

/// Mean squared error between predictions and targets.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() || targets.is_empty() {
        return Err(Error::InvalidArgument(format!("{} predictions for {} targets", predictions.len(), targets.len())));
    }
    Ok(predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / targets.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_half_on_balanced_binary_targets() {
        let s = Samples::new(1, vec![1, -1, 1, -1], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let m = ConstantModel { n_features: 1, value: 0.5 };
        assert_eq!(evaluate_mse(&m, &s).unwrap(), 0.25);
    }

    #[test]
    fn perfect_model_scores_zero() {
        let s = Samples::new(1, vec![1, 1], vec![0.3, 0.3]).unwrap();
        assert_eq!(evaluate_mse(&ConstantModel { n_features: 1, value: 0.3 }, &s).unwrap(), 0.0);
    }

    #[test]
    fn sample_validation() {
        assert!(Samples::new(2, vec![1, -1, 1], vec![0.0, 1.0]).is_err());
        assert!(Samples::new(1, vec![0], vec![0.0]).is_err());
        let s = Samples::new(1, vec![1], vec![0.0]).unwrap();
        assert!(evaluate_mse(&ConstantModel { n_features: 1, value: 0.0 }, &s.subset(&[])).is_err());
        assert!(ConstantModel { n_features: 2, value: 0.0 }.predict(&[1]).is_err());
    }
}
