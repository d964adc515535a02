use super::{dot, LinearProgram, LpError, LpSolution, LpStatus, FEAS_TOL, PIVOT_TOL};

const REINVERT_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Column {
    /// Original variable `var`, entering with `sign` (free variables are split).
    Original {
        var: usize,
        sign: f64,
    },
    Slack,
    Artificial,
}

/// Solves `lp` with the two-phase revised simplex method.
///
/// Dantzig pricing is used until the pivot count reaches `3·(rows + cols)`,
/// after which Bland's rule takes over so the method cannot cycle.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut form = StandardForm::build(lp);
    let status = form.run()?;
    Ok(form.extract(lp, status))
}

struct StandardForm {
    m: usize,
    columns: Vec<Vec<(usize, f64)>>,
    kinds: Vec<Column>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    row_sign: Vec<f64>,
    shift: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    pivots: usize,
    since_reinvert: usize,
    bland_after: usize,
    max_pivots: usize,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n_vars();
        let m_eq = lp.eq_matrix.len();
        let m = m_eq + lp.le_matrix.len();
        let row = |i: usize| -> &[f64] {
            if i < m_eq {
                &lp.eq_matrix[i]
            } else {
                &lp.le_matrix[i - m_eq]
            }
        };

        let shift: Vec<f64> = lp.lower_bounds.iter().map(|b| b.unwrap_or(0.0)).collect();
        let mut rhs: Vec<f64> = lp.eq_rhs.iter().chain(&lp.le_rhs).copied().collect();
        for (i, r) in rhs.iter_mut().enumerate() {
            *r -= dot(row(i), &shift);
        }
        let row_sign: Vec<f64> = rhs
            .iter()
            .map(|&r| if r < 0.0 { -1.0 } else { 1.0 })
            .collect();
        for (r, s) in rhs.iter_mut().zip(&row_sign) {
            *r *= s;
        }

        let mut columns = Vec::new();
        let mut kinds = Vec::new();
        let mut cost = Vec::new();
        for j in 0..n {
            let col: Vec<(usize, f64)> = (0..m)
                .filter_map(|i| {
                    let a = row(i)[j];
                    (a != 0.0).then_some((i, a * row_sign[i]))
                })
                .collect();
            let signs: &[f64] = if lp.lower_bounds[j].is_some() {
                &[1.0]
            } else {
                &[1.0, -1.0]
            };
            for &sign in signs {
                columns.push(col.iter().map(|&(i, a)| (i, a * sign)).collect());
                kinds.push(Column::Original { var: j, sign });
                cost.push(lp.objective[j] * sign);
            }
        }
        for i in m_eq..m {
            columns.push(vec![(i, row_sign[i])]);
            kinds.push(Column::Slack);
            cost.push(0.0);
        }

        // Crash basis: a column with a single positive entry in row i can
        // start basic there; remaining rows get artificials.
        let mut basis = vec![usize::MAX; m];
        let mut diag = vec![1.0; m];
        for prefer_slack in [true, false] {
            for (j, col) in columns.iter().enumerate() {
                if (kinds[j] == Column::Slack) != prefer_slack || col.len() != 1 {
                    continue;
                }
                let (i, a) = col[0];
                if a > PIVOT_TOL && basis[i] == usize::MAX && !basis.contains(&j) {
                    basis[i] = j;
                    diag[i] = a;
                }
            }
        }
        for i in 0..m {
            if basis[i] == usize::MAX {
                basis[i] = columns.len();
                columns.push(vec![(i, 1.0)]);
                kinds.push(Column::Artificial);
                cost.push(0.0);
            }
        }

        let mut position = vec![None; columns.len()];
        for (p, &j) in basis.iter().enumerate() {
            position[j] = Some(p);
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0 / diag[i];
        }
        let xb: Vec<f64> = (0..m).map(|i| rhs[i] / diag[i]).collect();
        let size = m + columns.len();
        Self {
            m,
            columns,
            kinds,
            cost,
            rhs,
            row_sign,
            shift,
            basis,
            position,
            binv,
            xb,
            pivots: 0,
            since_reinvert: 0,
            bland_after: 3 * size,
            max_pivots: 50 * size + 1000,
        }
    }

    fn rhs_scale(&self) -> f64 {
        1.0 + self.rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    fn run(&mut self) -> Result<LpStatus, LpError> {
        let has_artificial = self
            .basis
            .iter()
            .any(|&j| self.kinds[j] == Column::Artificial);
        if has_artificial {
            let phase_one: Vec<f64> = self
                .kinds
                .iter()
                .map(|k| if *k == Column::Artificial { 1.0 } else { 0.0 })
                .collect();
            self.iterate(&phase_one)?;
            let infeasibility: f64 = self
                .basis
                .iter()
                .zip(&self.xb)
                .filter(|(&j, _)| self.kinds[j] == Column::Artificial)
                .map(|(_, &x)| x.max(0.0))
                .sum();
            if infeasibility > FEAS_TOL * self.rhs_scale() {
                return Ok(LpStatus::Infeasible);
            }
            self.drive_out_artificials()?;
        }
        let cost = self.cost.clone();
        self.iterate(&cost)
    }

    /// Runs simplex pivots with the given cost vector until optimal or unbounded.
    fn iterate(&mut self, cost: &[f64]) -> Result<LpStatus, LpError> {
        let m = self.m;
        let opt_tol = 1e-9 * cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        loop {
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert()?;
            }
            self.row_prices(cost, &mut y);

            let bland = self.pivots >= self.bland_after;
            let mut entering = None;
            let mut best = -opt_tol;
            for (j, col) in self.columns.iter().enumerate() {
                if self.position[j].is_some() || self.kinds[j] == Column::Artificial {
                    continue;
                }
                let d = cost[j] - col.iter().map(|&(i, a)| y[i] * a).sum::<f64>();
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return Ok(LpStatus::Optimal);
            };

            self.column_in_basis(q, &mut alpha);
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                if alpha[i] <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.xb[i].max(0.0) / alpha[i];
                match leave {
                    None => {
                        leave = Some(i);
                        best_ratio = ratio;
                    }
                    Some(p) => {
                        let band = 1e-12 * (1.0 + best_ratio);
                        if ratio < best_ratio - band {
                            leave = Some(i);
                            best_ratio = ratio;
                        } else if ratio <= best_ratio + band {
                            let prefer = if bland {
                                self.basis[i] < self.basis[p]
                            } else {
                                alpha[i] > alpha[p]
                            };
                            if prefer {
                                leave = Some(i);
                                best_ratio = best_ratio.min(ratio);
                            }
                        }
                    }
                }
            }
            let Some(p) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            self.pivot(p, q, &alpha);
            if self.pivots > self.max_pivots {
                return Err(LpError::NumericalFailure(self.max_pivots));
            }
        }
    }

    fn row_prices(&self, cost: &[f64], y: &mut [f64]) {
        let m = self.m;
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, &j) in self.basis.iter().enumerate() {
            let cb = cost[j];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, b) in y.iter_mut().zip(row) {
                    *yk += cb * b;
                }
            }
        }
    }

    fn column_in_basis(&self, j: usize, out: &mut [f64]) {
        let m = self.m;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.binv[i * m..(i + 1) * m];
            *o = self.columns[j].iter().map(|&(r, a)| row[r] * a).sum();
        }
    }

    fn pivot(&mut self, p: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let theta = self.xb[p].max(0.0) / alpha[p];
        for i in 0..m {
            if i != p {
                self.xb[i] -= theta * alpha[i];
            }
        }
        self.xb[p] = theta;

        let inv = 1.0 / alpha[p];
        for v in &mut self.binv[p * m..(p + 1) * m] {
            *v *= inv;
        }
        let (head, rest) = self.binv.split_at_mut(p * m);
        let (pivot_row, tail) = rest.split_at_mut(m);
        for (i, row) in head.chunks_exact_mut(m).enumerate() {
            let f = alpha[i];
            if f != 0.0 {
                row.iter_mut()
                    .zip(pivot_row.iter())
                    .for_each(|(r, pr)| *r -= f * pr);
            }
        }
        for (k, row) in tail.chunks_exact_mut(m).enumerate() {
            let f = alpha[p + 1 + k];
            if f != 0.0 {
                row.iter_mut()
                    .zip(pivot_row.iter())
                    .for_each(|(r, pr)| *r -= f * pr);
            }
        }

        let old = self.basis[p];
        self.position[old] = None;
        self.position[q] = Some(p);
        self.basis[p] = q;
        self.pivots += 1;
        self.since_reinvert += 1;
    }

    /// Recomputes the basis inverse from scratch and refreshes basic values.
    fn reinvert(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (p, &j) in self.basis.iter().enumerate() {
            for &(i, a) in &self.columns[j] {
                b[i * m + p] = a;
            }
        }
        self.binv = invert(&b, m).ok_or(LpError::NumericalFailure(self.pivots))?;
        for i in 0..m {
            self.xb[i] = dot(&self.binv[i * m..(i + 1) * m], &self.rhs);
        }
        self.since_reinvert = 0;
        Ok(())
    }

    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        let m = self.m;
        for p in 0..m {
            if self.kinds[self.basis[p]] != Column::Artificial {
                continue;
            }
            let row: Vec<f64> = self.binv[p * m..(p + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for (j, col) in self.columns.iter().enumerate() {
                if self.position[j].is_some() || self.kinds[j] == Column::Artificial {
                    continue;
                }
                let v: f64 = col.iter().map(|&(r, a)| row[r] * a).sum();
                if v.abs() > 1e-7 && best.is_none_or(|(_, b)| v.abs() > b.abs()) {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                let mut alpha = vec![0.0; m];
                self.column_in_basis(q, &mut alpha);
                self.xb[p] = 0.0;
                // Degenerate pivot: theta is zero, so a negative pivot is fine.
                let inv = 1.0 / alpha[p];
                for v in &mut self.binv[p * m..(p + 1) * m] {
                    *v *= inv;
                }
                let pivot_row = self.binv[p * m..(p + 1) * m].to_vec();
                for i in 0..m {
                    if i != p && alpha[i] != 0.0 {
                        let f = alpha[i];
                        for (r, pr) in self.binv[i * m..(i + 1) * m].iter_mut().zip(&pivot_row) {
                            *r -= f * pr;
                        }
                    }
                }
                let old = self.basis[p];
                self.position[old] = None;
                self.position[q] = Some(p);
                self.basis[p] = q;
                self.pivots += 1;
                self.since_reinvert += 1;
            }
        }
        self.reinvert()
    }

    fn extract(&mut self, lp: &LinearProgram, status: LpStatus) -> LpSolution {
        let n = lp.n_vars();
        let m_eq = lp.eq_matrix.len();
        if status != LpStatus::Optimal {
            return LpSolution {
                status,
                primal: Vec::new(),
                duals_eq: Vec::new(),
                duals_ineq: Vec::new(),
                objective: match status {
                    LpStatus::Unbounded => f64::NEG_INFINITY,
                    _ => f64::INFINITY,
                },
                basic_columns: None,
                pivots: self.pivots,
            };
        }
        if self.since_reinvert > 0 {
            // A singular refactorization here would already have failed a pivot.
            let _ = self.reinvert();
        }
        let mut primal = self.shift.clone();
        for (p, &j) in self.basis.iter().enumerate() {
            if let Column::Original { var, sign } = self.kinds[j] {
                primal[var] += sign * self.xb[p].max(0.0);
            }
        }
        let mut y = vec![0.0; self.m];
        let cost = self.cost.clone();
        self.row_prices(&cost, &mut y);
        let duals: Vec<f64> = y.iter().zip(&self.row_sign).map(|(v, s)| v * s).collect();
        let objective = dot(&lp.objective, &primal);

        let plain = lp.le_matrix.is_empty() && lp.lower_bounds.iter().all(|b| *b == Some(0.0));
        let basic_columns = if plain {
            self.basis
                .iter()
                .map(|&j| match self.kinds[j] {
                    Column::Original { var, .. } => Some(var),
                    _ => None,
                })
                .collect::<Option<Vec<usize>>>()
        } else {
            None
        };
        debug_assert_eq!(primal.len(), n);
        LpSolution {
            status,
            primal,
            duals_eq: duals[..m_eq].to_vec(),
            duals_ineq: duals[m_eq..].to_vec(),
            objective,
            basic_columns,
            pivots: self.pivots,
        }
    }
}

/// Gauss–Jordan inverse of a row-major `m × m` matrix with partial pivoting.
pub(crate) fn invert(a: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut work = a.to_vec();
    let mut inv = vec![0.0; m * m];
    for i in 0..m {
        inv[i * m + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for col in 0..m {
        let (piv, piv_abs) =
            (col..m)
                .map(|r| (r, work[r * m + col].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if piv_abs <= 1e-12 * scale {
            return None;
        }
        if piv != col {
            for k in 0..m {
                work.swap(piv * m + k, col * m + k);
                inv.swap(piv * m + k, col * m + k);
            }
        }
        let d = 1.0 / work[col * m + col];
        for k in 0..m {
            work[col * m + k] *= d;
            inv[col * m + k] *= d;
        }
        for r in 0..m {
            if r == col {
                continue;
            }
            let f = work[r * m + col];
            if f != 0.0 {
                for k in 0..m {
                    work[r * m + k] -= f * work[col * m + k];
                    inv[r * m + k] -= f * inv[col * m + k];
                }
            }
        }
    }
    Some(inv)
}
