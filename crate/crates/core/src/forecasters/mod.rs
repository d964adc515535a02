//! Point forecasts `ξ̂ = Ψ(θ, x)`: affine maps, regression trees and their
//! statistical fits.

mod tree;

pub use tree::{
    fit_cart, fit_m5, fit_m5_structure, split_sse, Leaf, LeafPayload, Node, TreeForecaster,
    TreeHyper,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::Observation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no training data")]
    EmptyData,
    #[error("design matrix is rank deficient ({points} points, {features} features)")]
    RankDeficient { points: usize, features: usize },
    #[error("leaf {0} has no payload")]
    NotFitted(usize),
    #[error("forecaster text: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, ForecastError>;

/// `Ψ(θ, x) = θ₀ + Θx` with `θ₀ ∈ ℝᵐ` and `Θ ∈ ℝᵐˣˢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForecaster {
    pub intercepts: Vec<f64>,
    /// Row `j` holds the slopes of output `j`.
    pub slopes: Vec<Vec<f64>>,
}

impl AffineForecaster {
    pub fn new(intercepts: Vec<f64>, slopes: Vec<Vec<f64>>) -> Result<Self> {
        let s = slopes.first().map_or(0, Vec::len);
        if intercepts.len() != slopes.len() || slopes.iter().any(|r| r.len() != s) {
            return Err(ForecastError::DimensionMismatch(
                "slopes must be m x s with m intercepts".into(),
            ));
        }
        Ok(Self { intercepts, slopes })
    }

    /// Intercepts only.
    pub fn constant(value: Vec<f64>, n_features: usize) -> Self {
        let m = value.len();
        Self {
            intercepts: value,
            slopes: vec![vec![0.0; n_features]; m],
        }
    }

    pub fn n_outputs(&self) -> usize {
        self.intercepts.len()
    }

    pub fn n_features(&self) -> usize {
        self.slopes.first().map_or(0, Vec::len)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(ForecastError::DimensionMismatch(format!(
                "covariate of length {} for {} features",
                x.len(),
                self.n_features()
            )));
        }
        Ok(self
            .intercepts
            .iter()
            .zip(&self.slopes)
            .map(|(a, b)| a + crate::lp::dot(b, x))
            .collect())
    }

    /// Flattened `θ`: for each output, its intercept followed by its slopes.
    pub fn params(&self) -> Vec<f64> {
        self.intercepts
            .iter()
            .zip(&self.slopes)
            .flat_map(|(a, b)| std::iter::once(*a).chain(b.iter().copied()))
            .collect()
    }

    /// Inverse of [`params`](Self::params).
    pub fn from_params(n_outputs: usize, n_features: usize, theta: &[f64]) -> Result<Self> {
        if theta.len() != n_outputs * (n_features + 1) {
            return Err(ForecastError::DimensionMismatch(format!(
                "{} parameters for {n_outputs} outputs and {n_features} features",
                theta.len()
            )));
        }
        let chunks: Vec<&[f64]> = theta.chunks(n_features + 1).collect();
        Ok(Self {
            intercepts: chunks.iter().map(|c| c[0]).collect(),
            slopes: chunks.iter().map(|c| c[1..].to_vec()).collect(),
        })
    }
}

/// Least squares per output coordinate, on centered data with a ridge of
/// `1e-10` times the largest feature variance.
pub fn fit_least_squares(data: &[Observation]) -> Result<AffineForecaster> {
    let (s, m) = shape(data)?;
    let n = data.len();
    if n < s + 1 {
        return Err(ForecastError::RankDeficient {
            points: n,
            features: s,
        });
    }
    let x_mean = column_means(data.iter().map(|o| o.x.as_slice()), s, n);
    let y_mean = column_means(data.iter().map(|o| o.xi.as_slice()), m, n);
    let xc = DMatrix::from_fn(n, s, |r, c| data[r].x[c] - x_mean[c]);
    let yc = DMatrix::from_fn(n, m, |r, c| data[r].xi[c] - y_mean[c]);
    let mut gram = xc.transpose() * &xc;
    let scale = (0..s)
        .map(|i| gram[(i, i)])
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    for i in 0..s {
        gram[(i, i)] += 1e-10 * scale;
    }
    let rhs = xc.transpose() * &yc;
    let chol = gram.cholesky().ok_or(ForecastError::RankDeficient {
        points: n,
        features: s,
    })?;
    let coef = chol.solve(&rhs);
    let slopes: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..s).map(|l| coef[(l, j)]).collect())
        .collect();
    let xm = DVector::from_column_slice(&x_mean);
    let intercepts = (0..m)
        .map(|j| y_mean[j] - DVector::from_column_slice(&slopes[j]).dot(&xm))
        .collect();
    Ok(AffineForecaster { intercepts, slopes })
}

/// `(s, m)` of a dataset, checking every row.
pub fn shape(data: &[Observation]) -> Result<(usize, usize)> {
    let first = data.first().ok_or(ForecastError::EmptyData)?;
    let (s, m) = (first.x.len(), first.xi.len());
    if data.iter().any(|o| o.x.len() != s || o.xi.len() != m) {
        return Err(ForecastError::DimensionMismatch(
            "observations differ in length".into(),
        ));
    }
    Ok((s, m))
}

pub fn column_means<'a>(rows: impl Iterator<Item = &'a [f64]>, k: usize, n: usize) -> Vec<f64> {
    let mut acc = vec![0.0; k];
    for r in rows {
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v;
        }
    }
    acc.iter().map(|a| a / n as f64).collect()
}

/// Any fitted point forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Forecaster {
    Affine(AffineForecaster),
    Tree(TreeForecaster),
}

impl Forecaster {
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Forecaster::Affine(f) => f.predict(x),
            Forecaster::Tree(t) => t.predict(x),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("forecasters serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ForecastError::Format(e.to_string()))
    }
}
