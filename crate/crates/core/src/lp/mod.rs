//! Linear-programming core: problem container, a bounded-variable revised
//! simplex solver with product-form basis updates, and primal/dual
//! certification helpers.
//!
//! Dual sign convention (frozen, consumed by the reformulation layer): for a
//! minimization problem the exported row multiplier `y_r` is `>= 0` on `<=`
//! rows, `<= 0` on `>=` rows, and free on `=` rows. Reduced costs are
//! `dbar = c + A' y`, and the dual objective evaluates as
//! `-y'b + sum_j dbar_j * (active bound of x_j)`, which equals the primal
//! objective at an optimum.

mod mps;
mod simplex;

pub use mps::write_mps;

use thiserror::Error;

/// Constraint row sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// One linear constraint `sum coeffs . x  (<= | = | >=)  rhs`.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization LP over bounded variables.
///
/// Bounds may be infinite (`f64::NEG_INFINITY` / `f64::INFINITY`); a variable
/// with both bounds infinite is free.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Optional symbolic names, used by the text export and diagnostics.
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
}

impl LpProblem {
    pub fn new(n_vars: usize) -> Self {
        LpProblem {
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
            lower: vec![0.0; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            col_names: (0..n_vars).map(|j| format!("x{j}")).collect(),
            row_names: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
    }

    pub fn add_row(&mut self, sense: Sense, rhs: f64, coeffs: Vec<(usize, f64)>) -> usize {
        let id = self.rows.len();
        self.rows.push(Row { coeffs, sense, rhs });
        self.row_names.push(format!("r{id}"));
        id
    }

    pub fn add_named_row(
        &mut self,
        name: impl Into<String>,
        sense: Sense,
        rhs: f64,
        coeffs: Vec<(usize, f64)>,
    ) -> usize {
        let id = self.add_row(sense, rhs, coeffs);
        self.row_names[id] = name.into();
        id
    }

    /// Structural well-formedness check: finite coefficients, consistent
    /// dimensions, `lo <= hi` everywhere.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if lo > hi {
                return Err(LpError::Invalid(format!("bounds of column {j}: {lo} > {hi}")));
            }
            if lo.is_nan() || hi.is_nan() {
                return Err(LpError::Invalid(format!("NaN bound on column {j}")));
            }
        }
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::Invalid(format!("objective[{j}] not finite")));
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Invalid(format!("rhs of row {r} not finite")));
            }
            for &(j, v) in &row.coeffs {
                if j >= n {
                    return Err(LpError::Invalid(format!("row {r} references column {j} >= {n}")));
                }
                if !v.is_finite() {
                    return Err(LpError::Invalid(format!("row {r} has non-finite coefficient")));
                }
            }
        }
        Ok(())
    }

    /// Objective value of a point.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Row activity `a_r . x`.
    pub fn row_activity(&self, r: usize, x: &[f64]) -> f64 {
        self.rows[r].coeffs.iter().map(|&(j, v)| v * x[j]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Primal/dual solution of an [`LpProblem`].
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point (meaningful when `Optimal`).
    pub x: Vec<f64>,
    /// Row multipliers in the module's export convention (see module docs).
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Rows whose phase-1 artificials stayed positive (Infeasible only).
    pub infeasible_rows: Vec<usize>,
    /// Sparse unbounded direction over structural columns (Unbounded only).
    pub ray: Vec<(usize, f64)>,
    /// Final basis snapshot, reusable as a warm-start hint.
    pub basis: Basis,
}

/// Warm-start hint: the variable states of a previous solve of a problem with
/// the same rows/columns (bounds may differ).
#[derive(Debug, Clone, Default)]
pub struct Basis {
    /// Column index basic in each row position.
    pub basic: Vec<usize>,
    /// Structural columns nonbasic at their upper bound.
    pub at_upper: Vec<usize>,
}

/// Solver knobs. `Default` matches the documented tolerances.
#[derive(Debug, Clone)]
pub struct LpOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iters: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degen_streak: usize,
    /// Wall-clock deadline; exceeded solves return [`LpError::Stalled`].
    pub deadline: Option<std::time::Instant>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feas_tol: 1e-8,
            opt_tol: 1e-9,
            max_iters: 0, // 0 = auto from problem size
            degen_streak: 150,
            deadline: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed LP: {0}")]
    Invalid(String),
    #[error("solver stalled: {0}")]
    Stalled(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Solve to proven optimality (or certified infeasibility/unboundedness).
///
/// Every `Optimal` result is certified in-process: primal and dual residuals
/// must be below `1e-8` and the relative duality gap below `1e-7`, otherwise
/// the solve is retried once under Bland's rule and, failing that, reported
/// as [`LpError::Stalled`] rather than returned wrong.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution, LpError> {
    solve_lp_with(p, &LpOptions::default(), None)
}

pub fn solve_lp_with(
    p: &LpProblem,
    opts: &LpOptions,
    hint: Option<&Basis>,
) -> Result<LpSolution, LpError> {
    p.validate()?;
    let sol = simplex::solve(p, opts, hint, false)?;
    if sol.status != LpStatus::Optimal {
        return Ok(sol);
    }
    let cert = certify(p, &sol);
    if cert.ok() {
        return Ok(sol);
    }
    // Retry cold with Bland's rule before giving up.
    let sol = simplex::solve(p, opts, None, true)?;
    if sol.status != LpStatus::Optimal {
        return Ok(sol);
    }
    let cert = certify(p, &sol);
    if cert.ok() {
        Ok(sol)
    } else {
        Err(LpError::Stalled(format!(
            "residuals out of tolerance after restart: primal {:.3e}, dual {:.3e}, gap {:.3e}",
            cert.primal_residual, cert.dual_residual, cert.rel_gap
        )))
    }
}

/// Residuals of a claimed optimal solution, computed from raw problem data.
#[derive(Debug, Clone, Copy)]
pub struct Certification {
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// max |y_r * slack_r| over rows.
    pub compl_slackness: f64,
    pub rel_gap: f64,
}

impl Certification {
    pub fn ok(&self) -> bool {
        self.primal_residual <= 1e-8 && self.dual_residual <= 1e-8 && self.rel_gap <= 1e-7
    }
}

/// Recompute feasibility/optimality residuals of `s` against `p` without any
/// solver bookkeeping.
pub fn certify(p: &LpProblem, s: &LpSolution) -> Certification {
    let x = &s.x;
    let y = &s.duals;
    let mut primal = 0f64;
    for (j, &v) in x.iter().enumerate() {
        primal = primal.max(p.lower[j] - v).max(v - p.upper[j]);
    }
    for (r, row) in p.rows.iter().enumerate() {
        let act = p.row_activity(r, x);
        let viol = match row.sense {
            Sense::Le => act - row.rhs,
            Sense::Ge => row.rhs - act,
            Sense::Eq => (act - row.rhs).abs(),
        };
        primal = primal.max(viol);
    }

    // dbar = c + A'y
    let dbar = reduced_costs(p, y);
    let mut dual = 0f64;
    for (r, row) in p.rows.iter().enumerate() {
        match row.sense {
            Sense::Le => dual = dual.max(-y[r]),
            Sense::Ge => dual = dual.max(y[r]),
            Sense::Eq => {}
        }
    }
    let mut cs = 0f64;
    for (r, row) in p.rows.iter().enumerate() {
        let slack = row.rhs - p.row_activity(r, x);
        cs = cs.max((y[r] * slack).abs());
    }
    // Stationarity: a variable strictly inside its bounds must price to zero;
    // at a bound the sign must not allow an improving move.
    let scale = 1.0 + p.objective.iter().fold(0f64, |a, c| a.max(c.abs()));
    for (j, &d) in dbar.iter().enumerate() {
        let at_lo = x[j] - p.lower[j] <= 1e-7 * (1.0 + p.lower[j].abs());
        let at_hi = p.upper[j] - x[j] <= 1e-7 * (1.0 + p.upper[j].abs());
        if at_lo && at_hi {
            continue;
        }
        let viol = if at_lo {
            (-d).max(0.0)
        } else if at_hi {
            d.max(0.0)
        } else {
            d.abs()
        };
        dual = dual.max(viol / scale);
    }

    let pobj = p.objective_value(x);
    let dobj = dual_objective(p, y);
    let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
    Certification {
        primal_residual: primal,
        dual_residual: dual,
        compl_slackness: cs,
        rel_gap,
    }
}

/// Reduced costs `c + A'y` under the export convention.
pub fn reduced_costs(p: &LpProblem, y: &[f64]) -> Vec<f64> {
    let mut dbar = p.objective.clone();
    for (r, row) in p.rows.iter().enumerate() {
        let yr = y[r];
        if yr != 0.0 {
            for &(j, v) in &row.coeffs {
                dbar[j] += v * yr;
            }
        }
    }
    dbar
}

/// Lagrangian dual objective of the multipliers `y`, independent of how they
/// were produced: `-y'b + sum_j min over [lo,hi] of dbar_j x_j`. Reduced
/// costs below `1e-9` in magnitude are treated as zero so free variables do
/// not spuriously send the value to `-inf`.
pub fn dual_objective(p: &LpProblem, y: &[f64]) -> f64 {
    let mut obj: f64 = p.rows.iter().zip(y).map(|(row, yr)| -yr * row.rhs).sum();
    let dbar = reduced_costs(p, y);
    for (j, &d) in dbar.iter().enumerate() {
        if d > 1e-9 {
            let lo = p.lower[j];
            obj += if lo.is_finite() { d * lo } else { f64::NEG_INFINITY };
        } else if d < -1e-9 {
            let hi = p.upper[j];
            obj += if hi.is_finite() { d * hi } else { f64::NEG_INFINITY };
        }
    }
    obj
}

/// Absolute duality gap `|c.x - g(y)|` of an `Optimal` solution, recomputed
/// from raw data.
pub fn check_duality_gap(p: &LpProblem, s: &LpSolution) -> Result<f64, LpError> {
    if s.status != LpStatus::Optimal {
        return Err(LpError::Contract(
            "duality gap is only defined for Optimal solutions".into(),
        ));
    }
    Ok((p.objective_value(&s.x) - dual_objective(p, &s.duals)).abs())
}

#[cfg(test)]
mod tests;
