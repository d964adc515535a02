use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Nelder–Mead coefficients and stopping rule.
///
/// The initial simplex steps coordinate `i` by
/// `max(relative_step·|startᵢ|, absolute_step)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub relative_step: f64,
    pub absolute_step: f64,
    /// Stop once the simplex values differ by less than this.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Optional cap on objective evaluations across the whole run.
    pub max_evaluations: Option<usize>,
    /// Restart once from the best point when the first run exhausts its budget.
    pub restart: bool,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            relative_step: 0.05,
            absolute_step: 0.5,
            epsilon: 1e-7,
            max_iterations: 5_000,
            max_evaluations: None,
            restart: true,
        }
    }
}

impl NelderMeadConfig {
    pub fn validate(&self) -> Result<(), NumericsError> {
        let ok = self.reflection > 0.0
            && self.expansion > 1.0
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.epsilon > 0.0
            && self.relative_step >= 0.0
            && self.absolute_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NumericsError::InvalidParameter(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Best value after each iteration; nonincreasing.
    pub trace: Vec<f64>,
    /// Evaluations used by the end of each iteration.
    pub evaluation_trace: Vec<usize>,
    pub converged: bool,
}

/// Minimizes `objective` from `start`. Non-finite values are treated as `+∞`
/// everywhere except at the start point, where they are an error.
pub fn nelder_mead<F>(
    mut objective: F,
    start: &[f64],
    config: &NelderMeadConfig,
) -> Result<NelderMeadResult, NumericsError>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    let f0 = objective(start);
    if !f0.is_finite() {
        return Err(NumericsError::NonFiniteObjective);
    }
    let mut run = Run {
        objective: &mut objective,
        config,
        evaluations: 1,
        trace: Vec::new(),
        evaluation_trace: Vec::new(),
    };
    let (mut point, mut value, mut converged) = run.minimize(start.to_vec(), f0);
    let mut iterations = run.trace.len();
    if !converged && config.restart && !run.out_of_evaluations() {
        let first = iterations;
        let (p, v, c) = run.minimize(point.clone(), value);
        if v <= value {
            point = p;
            value = v;
        }
        converged = c;
        iterations = run.trace.len();
        debug_assert!(iterations >= first);
    }
    Ok(NelderMeadResult {
        point,
        value,
        iterations,
        evaluations: run.evaluations,
        trace: run.trace,
        evaluation_trace: run.evaluation_trace,
        converged,
    })
}

struct Run<'a, F> {
    objective: &'a mut F,
    config: &'a NelderMeadConfig,
    evaluations: usize,
    trace: Vec<f64>,
    evaluation_trace: Vec<usize>,
}

impl<F: FnMut(&[f64]) -> f64> Run<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.objective)(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }

    fn out_of_evaluations(&self) -> bool {
        self.config
            .max_evaluations
            .is_some_and(|cap| self.evaluations >= cap)
    }

    fn record(&mut self, best: f64) {
        let best = self.trace.last().map_or(best, |&last: &f64| last.min(best));
        self.trace.push(best);
        self.evaluation_trace.push(self.evaluations);
    }

    /// One Nelder–Mead run; returns (best point, best value, converged).
    fn minimize(&mut self, start: Vec<f64>, f_start: f64) -> (Vec<f64>, f64, bool) {
        let n = start.len();
        if n == 0 {
            return (start, f_start, true);
        }
        let cfg = self.config;
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((start.clone(), f_start));
        for i in 0..n {
            let mut x = start.clone();
            x[i] += (cfg.relative_step * start[i].abs()).max(cfg.absolute_step);
            let f = self.eval(&x);
            simplex.push((x, f));
        }

        let mut iterations = 0;
        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            if worst - best <= cfg.epsilon {
                return (simplex.swap_remove(0).0, best, true);
            }
            if iterations >= cfg.max_iterations || self.out_of_evaluations() {
                return (simplex.swap_remove(0).0, best, false);
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(cfg.reflection);
            let fr = self.eval(&xr);
            if fr < best {
                let xe = along(cfg.reflection * cfg.expansion);
                let fe = self.eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst {
                    let xc = along(cfg.reflection * cfg.contraction);
                    let fc = self.eval(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-cfg.contraction);
                    let fc = self.eval(&xc);
                    (xc, fc)
                };
                if fc < fr.min(worst) {
                    simplex[n] = (xc, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for k in 1..=n {
                        let x: Vec<f64> = anchor
                            .iter()
                            .zip(&simplex[k].0)
                            .map(|(a, v)| a + cfg.shrink * (v - a))
                            .collect();
                        let f = self.eval(&x);
                        simplex[k] = (x, f);
                    }
                }
            }
            let current = simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            self.record(current);
        }
    }
}
