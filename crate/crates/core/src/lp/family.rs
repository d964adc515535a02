use super::simplex::invert;
use super::{dot, solve_lp, LinearProgram, LpError, LpStatus, FEAS_TOL, PIVOT_TOL};

const DEFAULT_CAPACITY: usize = 1024;
const SCAN_LIMIT: usize = 64;
/// Dual simplex pivots allowed per warm start, per row.
const WARM_PIVOTS_PER_ROW: usize = 10;

/// `min c·x  s.t.  A x = r, x ≥ 0` for a fixed `(A, c)` and varying `r`.
#[derive(Debug, Clone)]
pub struct RhsFamily {
    rows: Vec<Vec<f64>>,
    cost: Vec<f64>,
    /// Cached bases. A slot index stays valid as a hint until the slot is
    /// recycled, and a recycled slot still holds a usable basis.
    slots: Vec<CachedBasis>,
    /// Slot indices, most recently used first.
    order: Vec<usize>,
    capacity: usize,
    stats: FamilyStats,
}

#[derive(Debug, Clone)]
struct CachedBasis {
    columns: Vec<usize>,
    /// Row-major inverse of the basis matrix.
    inverse: Vec<f64>,
    duals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FamilyStats {
    /// Cached basis already optimal.
    pub hits: usize,
    /// Solved by dual simplex from a cached basis.
    pub warm: usize,
    /// Solved from scratch.
    pub solves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhsSolution {
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub objective: f64,
}

/// Why a member of the family has no optimal solution.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyFailure {
    Infeasible,
    Unbounded,
    Solver(LpError),
}

impl RhsFamily {
    pub fn new(rows: Vec<Vec<f64>>, cost: Vec<f64>) -> Result<Self, LpError> {
        if let Some(r) = rows.iter().find(|r| r.len() != cost.len()) {
            return Err(LpError::DimensionMismatch(format!(
                "row has {} columns, cost has {}",
                r.len(),
                cost.len()
            )));
        }
        Ok(Self {
            rows,
            cost,
            slots: Vec::new(),
            order: Vec::new(),
            capacity: DEFAULT_CAPACITY,
            stats: FamilyStats::default(),
        })
    }

    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cost.len()
    }

    pub fn stats(&self) -> FamilyStats {
        self.stats
    }

    pub fn solve(&mut self, rhs: &[f64]) -> Result<RhsSolution, FamilyFailure> {
        self.solve_hinted(rhs, None).map(|(s, _)| s)
    }

    /// Like [`solve`](Self::solve), trying the basis in slot `hint` first.
    /// Returns the slot holding the optimal basis, to be passed as the hint
    /// for a nearby right-hand side.
    pub fn solve_hinted(
        &mut self,
        rhs: &[f64],
        hint: Option<usize>,
    ) -> Result<(RhsSolution, Option<usize>), FamilyFailure> {
        let m = self.rows.len();
        if rhs.len() != m {
            return Err(FamilyFailure::Solver(LpError::DimensionMismatch(format!(
                "rhs has {} entries, family has {m} rows",
                rhs.len()
            ))));
        }
        // Tighter than the cold solver: a clamped slightly negative basic
        // value would bias the objective low.
        let tol = 1e-3 * FEAS_TOL * (1.0 + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        let hint = hint.filter(|&h| h < self.slots.len());
        if let Some(h) = hint {
            if let Some(xb) = self.slots[h].primal_if_feasible(rhs, tol) {
                return Ok(self.hit(h, &xb));
            }
        }
        for pos in 0..self.order.len().min(SCAN_LIMIT) {
            let k = self.order[pos];
            if let Some(xb) = self.slots[k].primal_if_feasible(rhs, tol) {
                return Ok(self.hit(k, &xb));
            }
        }
        let warm_from = hint.or(self.order.first().copied());
        if let Some((entry, xb)) = warm_from.and_then(|k| self.warm_start(&self.slots[k], rhs, tol))
        {
            self.stats.warm += 1;
            let solution = self.assemble(&entry, &xb);
            return Ok((solution, Some(self.store(entry))));
        }

        self.stats.solves += 1;
        let mut lp = LinearProgram::new(self.cost.clone());
        for (row, &r) in self.rows.iter().zip(rhs) {
            lp.add_eq(row.clone(), r);
        }
        let sol = solve_lp(&lp).map_err(FamilyFailure::Solver)?;
        match sol.status {
            LpStatus::Infeasible => return Err(FamilyFailure::Infeasible),
            LpStatus::Unbounded => return Err(FamilyFailure::Unbounded),
            LpStatus::Optimal => {}
        }
        let slot = sol
            .basic_columns
            .as_ref()
            .and_then(|cols| self.factor(cols))
            .map(|entry| self.store(entry));
        Ok((
            RhsSolution {
                objective: dot(&self.cost, &sol.primal),
                primal: sol.primal,
                duals: sol.duals_eq,
            },
            slot,
        ))
    }

    fn hit(&mut self, k: usize, xb: &[f64]) -> (RhsSolution, Option<usize>) {
        self.stats.hits += 1;
        self.touch(k);
        (self.assemble(&self.slots[k], xb), Some(k))
    }

    fn touch(&mut self, k: usize) {
        if let Some(pos) = self.order.iter().position(|&s| s == k) {
            self.order.remove(pos);
        }
        self.order.insert(0, k);
    }

    /// Caches `entry`, recycling the least recently used slot when full.
    fn store(&mut self, entry: CachedBasis) -> usize {
        let k = if self.slots.len() < self.capacity.max(1) {
            self.slots.push(entry);
            self.slots.len() - 1
        } else {
            let k = self.order.pop().expect("full cache has an order");
            self.slots[k] = entry;
            k
        };
        self.order.insert(0, k);
        k
    }

    /// Dual simplex from a cached basis, which is dual feasible because the
    /// costs never change. `None` sends the caller to a cold solve, which
    /// also settles infeasibility.
    fn warm_start(
        &self,
        start: &CachedBasis,
        rhs: &[f64],
        tol: f64,
    ) -> Option<(CachedBasis, Vec<f64>)> {
        let (m, n) = (self.rows.len(), self.cost.len());
        let mut cols = start.columns.clone();
        let mut inv = start.inverse.clone();
        let mut basic = vec![false; n];
        for &j in &cols {
            basic[j] = true;
        }
        let cmax = self.cost.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let dtol = 1e-9 * (1.0 + cmax);
        let mut d = self.cost.clone();
        for (i, row) in self.rows.iter().enumerate() {
            let y = start.duals[i];
            if y != 0.0 {
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= y * a;
                }
            }
        }
        if (0..n).any(|j| !basic[j] && d[j] < -dtol) {
            return None;
        }
        let mut xb: Vec<f64> = (0..m).map(|i| dot(&inv[i * m..(i + 1) * m], rhs)).collect();
        let mut alpha = vec![0.0; n];
        let mut w = vec![0.0; m];
        for pivots in 0..WARM_PIVOTS_PER_ROW * m + 10 {
            let (p, worst) = xb
                .iter()
                .enumerate()
                .fold((0, 0.0), |b, (i, &v)| if v < b.1 { (i, v) } else { b });
            if worst >= -tol {
                // Short pivot sequences keep the updated inverse; long ones
                // refactor to shed accumulated rounding.
                let entry = if pivots <= m / 4 {
                    let mut duals = vec![0.0; m];
                    for (r, &j) in cols.iter().enumerate() {
                        let cb = self.cost[j];
                        for k in 0..m {
                            duals[k] += cb * inv[r * m + k];
                        }
                    }
                    CachedBasis {
                        columns: cols,
                        inverse: inv,
                        duals,
                    }
                } else {
                    self.factor(&cols)?
                };
                let xb = entry.primal_if_feasible(rhs, tol)?;
                return Some((entry, xb));
            }
            alpha.iter_mut().for_each(|a| *a = 0.0);
            for (i, row) in self.rows.iter().enumerate() {
                let r = inv[p * m + i];
                if r != 0.0 {
                    for (a, v) in alpha.iter_mut().zip(row) {
                        *a += r * v;
                    }
                }
            }
            // Harris ratio test: bound the step with slightly relaxed
            // reduced costs, then take the largest pivot under that bound.
            let amax = alpha.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let ptol = PIVOT_TOL * (1.0 + amax);
            let eligible = |j: usize| !basic[j] && alpha[j] < -ptol;
            let bound = (0..n)
                .filter(|&j| eligible(j))
                .map(|j| (d[j].max(0.0) + dtol) / -alpha[j])
                .fold(f64::INFINITY, f64::min);
            if !bound.is_finite() {
                return None;
            }
            let q = (0..n)
                .filter(|&j| eligible(j) && d[j].max(0.0) / -alpha[j] <= bound)
                .max_by(|&a, &b| alpha[b].partial_cmp(&alpha[a]).unwrap())?;

            let step = d[q] / alpha[q];
            for j in 0..n {
                if !basic[j] {
                    d[j] -= step * alpha[j];
                }
            }
            let leaving = cols[p];
            d[leaving] = -step;
            d[q] = 0.0;

            for (i, wi) in w.iter_mut().enumerate() {
                *wi = (0..m).map(|k| inv[i * m + k] * self.rows[k][q]).sum();
            }
            let wp = w[p];
            let theta = xb[p] / wp;
            for i in 0..m {
                if i != p {
                    xb[i] -= theta * w[i];
                }
            }
            xb[p] = theta;
            for k in 0..m {
                inv[p * m + k] /= wp;
            }
            for i in 0..m {
                if i != p && w[i] != 0.0 {
                    let f = w[i];
                    for k in 0..m {
                        inv[i * m + k] -= f * inv[p * m + k];
                    }
                }
            }
            basic[leaving] = false;
            basic[q] = true;
            cols[p] = q;
        }
        None
    }

    fn factor(&self, columns: &[usize]) -> Option<CachedBasis> {
        let m = self.rows.len();
        let mut b = vec![0.0; m * m];
        for (p, &j) in columns.iter().enumerate() {
            for i in 0..m {
                b[i * m + p] = self.rows[i][j];
            }
        }
        let inverse = invert(&b, m)?;
        let mut duals = vec![0.0; m];
        for (p, &j) in columns.iter().enumerate() {
            let cb = self.cost[j];
            for k in 0..m {
                duals[k] += cb * inverse[p * m + k];
            }
        }
        Some(CachedBasis {
            columns: columns.to_vec(),
            inverse,
            duals,
        })
    }

    fn assemble(&self, entry: &CachedBasis, xb: &[f64]) -> RhsSolution {
        let mut primal = vec![0.0; self.cost.len()];
        for (&j, &v) in entry.columns.iter().zip(xb) {
            primal[j] = v.max(0.0);
        }
        RhsSolution {
            objective: dot(&self.cost, &primal),
            primal,
            duals: entry.duals.clone(),
        }
    }
}

impl CachedBasis {
    fn primal_if_feasible(&self, rhs: &[f64], tol: f64) -> Option<Vec<f64>> {
        let m = rhs.len();
        let mut xb = Vec::with_capacity(m);
        for i in 0..m {
            let v = dot(&self.inverse[i * m..(i + 1) * m], rhs);
            if v < -tol {
                return None;
            }
            xb.push(v);
        }
        Some(xb)
    }
}

impl std::fmt::Display for FamilyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilyFailure::Infeasible => write!(f, "infeasible"),
            FamilyFailure::Unbounded => write!(f, "unbounded"),
            FamilyFailure::Solver(e) => write!(f, "{e}"),
        }
    }
}
