use serde::{Deserialize, Serialize};

use super::ProblemError;
use crate::numerics::{covariance_factor, nearest_psd, sample, Distribution, RandomSource};

/// One `(x, ξ)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

/// `ξⱼ = aⱼ + Σₗ bⱼₗ xₗᵖ + εⱼ` with `x = |x̃|`, `x̃ ~ N(0, Σ)`, `εⱼ ~ N(0, σⱼ²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticGenerator {
    pub degree: f64,
    pub intercepts: Vec<f64>,
    pub slopes: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub seed: u64,
    #[serde(skip)]
    factor: Option<Vec<Vec<f64>>>,
}

const SLOPE_CENTERS: [f64; 3] = [10.0, 5.0, 2.0];

impl SyntheticGenerator {
    /// Draws the coefficients from `seed`:
    /// `aⱼ = 50 + 5δⱼ₀` with `δⱼ₀ ~ N(0, 1)`, `bⱼₗ = (10, 5, 2)ₗ + δⱼₗ` with
    /// `δⱼₗ ~ U(−4, 4)`, `σⱼ = 5`. Covariates beyond the third are centered
    /// at 2. The covariance has unit diagonal and off-diagonals
    /// `2·Beta(2, 2) − 1`, projected onto the PSD cone.
    pub fn new(
        n_clients: usize,
        n_covariates: usize,
        degree: f64,
        seed: u64,
    ) -> Result<Self, ProblemError> {
        if n_clients == 0 || n_covariates == 0 || !(degree > 0.0) || !degree.is_finite() {
            return Err(ProblemError::InvalidParams(format!(
                "clients = {n_clients}, covariates = {n_covariates}, degree = {degree}"
            )));
        }
        let mut rng = RandomSource::new(seed, 0);
        let intercepts = (0..n_clients)
            .map(|_| 50.0 + 5.0 * rng.standard_normal())
            .collect();
        let slopes = (0..n_clients)
            .map(|_| {
                (0..n_covariates)
                    .map(|l| SLOPE_CENTERS.get(l).copied().unwrap_or(2.0) + rng.uniform(-4.0, 4.0))
                    .collect()
            })
            .collect();
        let mut covariance = vec![vec![0.0; n_covariates]; n_covariates];
        let beta = Distribution::Beta {
            alpha: 2.0,
            beta: 2.0,
        };
        for i in 0..n_covariates {
            covariance[i][i] = 1.0;
            for j in 0..i {
                let v = 2.0 * sample(&beta, &mut rng, 1)?[0][0] - 1.0;
                covariance[i][j] = v;
                covariance[j][i] = v;
            }
        }
        let covariance = nearest_psd(&covariance);
        let mut g = Self {
            degree,
            intercepts,
            slopes,
            sigma: vec![5.0; n_clients],
            covariance,
            seed,
            factor: None,
        };
        g.prepare()?;
        Ok(g)
    }

    /// Sets every noise level to `sigma` (zero gives noiseless data).
    pub fn with_sigma(mut self, sigma: f64) -> Result<Self, ProblemError> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(ProblemError::InvalidParams(format!("sigma = {sigma}")));
        }
        self.sigma = vec![sigma; self.n_clients()];
        Ok(self)
    }

    pub fn n_clients(&self) -> usize {
        self.intercepts.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariance.len()
    }

    /// Validates shapes and caches the covariance factor; call after
    /// deserializing.
    pub fn prepare(&mut self) -> Result<(), ProblemError> {
        let (j, l) = (self.n_clients(), self.n_covariates());
        if self.slopes.len() != j
            || self.slopes.iter().any(|r| r.len() != l)
            || self.sigma.len() != j
        {
            return Err(ProblemError::InvalidParams(
                "coefficient shapes disagree".into(),
            ));
        }
        if self.sigma.iter().any(|s| !(*s >= 0.0)) || !(self.degree > 0.0) {
            return Err(ProblemError::InvalidParams(
                "sigma must be nonnegative, degree positive".into(),
            ));
        }
        let f = covariance_factor(&self.covariance)?;
        self.factor = Some(
            (0..l)
                .map(|r| (0..l).map(|c| f[(r, c)]).collect())
                .collect(),
        );
        Ok(())
    }

    pub fn sample_covariate(&self, rng: &mut RandomSource) -> Vec<f64> {
        let f = self.factor.as_ref().expect("generator not prepared");
        let l = f.len();
        let z: Vec<f64> = (0..l).map(|_| rng.standard_normal()).collect();
        f.iter().map(|row| crate::lp::dot(row, &z).abs()).collect()
    }

    /// `E[ξ | x] = a + b·xᵖ`.
    pub fn conditional_mean(&self, x: &[f64]) -> Vec<f64> {
        let powered: Vec<f64> = x.iter().map(|v| v.powf(self.degree)).collect();
        self.intercepts
            .iter()
            .zip(&self.slopes)
            .map(|(a, b)| a + crate::lp::dot(b, &powered))
            .collect()
    }

    /// `n` draws of `ξ | x`.
    pub fn sample_conditional(&self, x: &[f64], rng: &mut RandomSource, n: usize) -> Vec<Vec<f64>> {
        let mean = self.conditional_mean(x);
        (0..n)
            .map(|_| {
                mean.iter()
                    .zip(&self.sigma)
                    .map(|(m, s)| {
                        if *s > 0.0 {
                            m + s * rng.standard_normal()
                        } else {
                            *m
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn gen_dataset(
        &self,
        rng: &mut RandomSource,
        n: usize,
    ) -> Result<Vec<Observation>, ProblemError> {
        if n == 0 {
            return Err(ProblemError::InvalidParams(
                "dataset size must be positive".into(),
            ));
        }
        if self.factor.is_none() {
            return Err(ProblemError::InvalidParams("generator not prepared".into()));
        }
        Ok((0..n)
            .map(|_| {
                let x = self.sample_covariate(rng);
                let xi = self.sample_conditional(&x, rng, 1).pop().unwrap();
                Observation { x, xi }
            })
            .collect())
    }
}

impl From<crate::numerics::NumericsError> for ProblemError {
    fn from(e: crate::numerics::NumericsError) -> Self {
        ProblemError::InvalidParams(e.to_string())
    }
}
