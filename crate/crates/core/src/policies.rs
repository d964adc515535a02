//! Decision policies `x ↦ z` built from training data.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ad_training::{m5_ad_train, meta_train, AdConfig, AdError, BilevelProblem, Family};
use crate::forecasters::{
    fit_cart, fit_least_squares, AffineForecaster, ForecastError, Forecaster, TreeHyper,
};
use crate::problems::Observation;
use crate::two_stage::{
    uniform_weights, Instance, Scenario, TwoStageError, UniquenessPerturbation, Workspace,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("no training data")]
    EmptyTraining,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyper(String),
    #[error("unknown policy kind {0:?}")]
    UnknownKind(String),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Training(#[from] AdError),
    #[error(transparent)]
    Model(#[from] TwoStageError),
}

pub type Result<T> = std::result::Result<T, PolicyError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PolicyKind {
    Saa,
    Knn,
    Ersaa,
    Ls,
    Cart,
    Ad,
    M5ad,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Saa,
        PolicyKind::Knn,
        PolicyKind::Ersaa,
        PolicyKind::Ls,
        PolicyKind::Cart,
        PolicyKind::Ad,
        PolicyKind::M5ad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Saa => "SAA",
            PolicyKind::Knn => "KNN",
            PolicyKind::Ersaa => "ERSAA",
            PolicyKind::Ls => "LS",
            PolicyKind::Cart => "CART",
            PolicyKind::Ad => "AD",
            PolicyKind::M5ad => "M5AD",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| PolicyError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyHyper {
    /// Neighbors for KNN; `⌈√N⌉` when unset.
    pub knn_k: Option<usize>,
    /// CART and M5AD partitions.
    pub tree: TreeHyper,
    pub ad: AdConfig,
    pub perturbation: UniquenessPerturbation,
}

impl Default for PolicyHyper {
    fn default() -> Self {
        Self {
            knn_k: None,
            tree: TreeHyper::default(),
            ad: AdConfig::default(),
            perturbation: UniquenessPerturbation::default(),
        }
    }
}

#[derive(Debug)]
enum State {
    Saa {
        scenarios: Vec<Scenario>,
        decision: OnceLock<Vec<f64>>,
    },
    Knn {
        data: Vec<Observation>,
        k: usize,
    },
    Ersaa {
        forecaster: AffineForecaster,
        residuals: Vec<Vec<f64>>,
    },
    Point(Forecaster),
}

/// A fitted policy. Immutable; [`Policy::decide`] builds a private LP
/// workspace per call, [`Policy::decide_with`] reuses one.
#[derive(Debug)]
pub struct Policy {
    kind: PolicyKind,
    instance: Instance,
    perturbation: UniquenessPerturbation,
    n_features: usize,
    state: State,
}

/// Fits `kind` on `train` for the decision problem `instance`.
pub fn fit_policy(
    kind: PolicyKind,
    instance: &Instance,
    train: &[Observation],
    hyper: &PolicyHyper,
) -> Result<Policy> {
    if train.is_empty() {
        return Err(PolicyError::EmptyTraining);
    }
    crate::forecasters::shape(train)?;
    if train[0].xi.len() != instance.xi_dim() {
        return Err(PolicyError::Model(TwoStageError::DimensionMismatch(
            format!(
                "data has {} demand components, the instance expects {}",
                train[0].xi.len(),
                instance.xi_dim()
            ),
        )));
    }
    let pert = hyper.perturbation;
    let state = match kind {
        PolicyKind::Saa => State::Saa {
            scenarios: train.iter().map(|o| instance.scenario(&o.xi)).collect(),
            decision: OnceLock::new(),
        },
        PolicyKind::Knn => {
            let k = hyper
                .knn_k
                .unwrap_or_else(|| (train.len() as f64).sqrt().ceil() as usize);
            if k == 0 || k > train.len() {
                return Err(PolicyError::InvalidHyper(format!(
                    "k = {k} with {} training points",
                    train.len()
                )));
            }
            State::Knn {
                data: train.to_vec(),
                k,
            }
        }
        PolicyKind::Ersaa => {
            let forecaster = fit_least_squares(train)?;
            let residuals = train
                .iter()
                .map(|o| {
                    let p = forecaster.predict(&o.x)?;
                    Ok(o.xi.iter().zip(&p).map(|(v, f)| v - f).collect())
                })
                .collect::<std::result::Result<_, ForecastError>>()?;
            State::Ersaa {
                forecaster,
                residuals,
            }
        }
        PolicyKind::Ls => State::Point(Forecaster::Affine(fit_least_squares(train)?)),
        PolicyKind::Cart => State::Point(Forecaster::Tree(fit_cart(train, &hyper.tree)?)),
        PolicyKind::Ad => {
            let mut ws = instance.workspace(pert)?;
            let run = meta_train(
                &mut BilevelProblem::new(&mut ws, &instance.map, train),
                Family::Affine,
                &hyper.ad,
            )?;
            State::Point(Forecaster::Affine(run.forecaster))
        }
        PolicyKind::M5ad => {
            let mut ws = instance.workspace(pert)?;
            let (tree, _) = m5_ad_train(&mut ws, &instance.map, train, &hyper.tree, &hyper.ad)?;
            State::Point(Forecaster::Tree(tree))
        }
    };
    Ok(Policy {
        kind,
        instance: instance.clone(),
        perturbation: pert,
        n_features: train[0].x.len(),
        state,
    })
}

impl Policy {
    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    /// A workspace suitable for [`decide_with`](Self::decide_with).
    pub fn workspace(&self) -> Result<Workspace> {
        Ok(self.instance.workspace(self.perturbation)?)
    }

    /// The point forecaster behind LS, CART, AD and M5AD.
    pub fn forecaster(&self) -> Option<&Forecaster> {
        match &self.state {
            State::Point(f) => Some(f),
            _ => None,
        }
    }

    /// ERSAA's least squares fit and training residuals.
    pub fn residuals(&self) -> Option<(&AffineForecaster, &[Vec<f64>])> {
        match &self.state {
            State::Ersaa {
                forecaster,
                residuals,
            } => Some((forecaster, residuals)),
            _ => None,
        }
    }

    /// Training indices of the KNN neighborhood of `x`, nearest first; ties
    /// go to the lower index.
    pub fn neighbors(&self, x: &[f64]) -> Option<Vec<usize>> {
        let State::Knn { data, k } = &self.state else {
            return None;
        };
        let dist = |o: &Observation| o.x.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut idx: Vec<(f64, usize)> =
            data.iter().enumerate().map(|(i, o)| (dist(o), i)).collect();
        idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Some(idx.into_iter().take(*k).map(|(_, i)| i).collect())
    }

    pub fn decide(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut ws = self.workspace()?;
        self.decide_with(&mut ws, x)
    }

    pub fn decide_with(&self, ws: &mut Workspace, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.n_features;
        if x.len() != s {
            return Err(PolicyError::Forecast(ForecastError::DimensionMismatch(
                format!("covariate of length {} for {s} features", x.len()),
            )));
        }
        match &self.state {
            State::Saa {
                scenarios,
                decision,
            } => {
                if let Some(z) = decision.get() {
                    return Ok(z.clone());
                }
                let z = ws.saa(scenarios, &uniform_weights(scenarios.len()))?.z;
                Ok(decision.get_or_init(|| z).clone())
            }
            State::Knn { data, .. } => {
                let near = self.neighbors(x).expect("knn state");
                let scen: Vec<Scenario> = near
                    .iter()
                    .map(|&i| self.instance.scenario(&data[i].xi))
                    .collect();
                Ok(ws.saa(&scen, &uniform_weights(scen.len()))?.z)
            }
            State::Ersaa {
                forecaster,
                residuals,
            } => {
                let base = forecaster.predict(x)?;
                let scen: Vec<Scenario> = residuals
                    .iter()
                    .map(|e| {
                        let xi: Vec<f64> = base.iter().zip(e).map(|(b, r)| b + r).collect();
                        self.instance.scenario(&xi)
                    })
                    .collect();
                Ok(ws.saa(&scen, &uniform_weights(scen.len()))?.z)
            }
            State::Point(f) => {
                let xi = f.predict(x)?;
                Ok(ws.one_scenario(&self.instance.scenario(&xi))?.z)
            }
        }
    }
}
