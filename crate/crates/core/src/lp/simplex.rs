//! Bounded-variable two-phase revised simplex with product-form basis
//! updates.
//!
//! Internal layout: structural columns first, then one slack column per row
//! (`<=` slack in `[0, inf)`, `>=` slack in `(-inf, 0]`, `=` slack fixed at
//! zero). Phase 1 minimizes the total bound violation of basic variables
//! (equality rows stay single rows; their fixed slacks host the violation),
//! phase 2 the true objective. Dantzig pricing with a Bland's-rule fallback
//! after a degenerate streak.

use super::{Basis, LpError, LpOptions, LpProblem, LpSolution, LpStatus, Sense};

const PIVOT_TOL: f64 = 1e-9;
const DEGEN_TOL: f64 = 1e-10;
const REFACTOR_EVERY: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VState {
    Basic(usize),
    AtLower,
    AtUpper,
    FreeZero,
}

struct Eta {
    r: usize,
    pivot: f64,
    nz: Vec<(usize, f64)>,
}

/// Column-major sparse matrix over internal columns.
struct Cols {
    starts: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl Cols {
    fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.starts[j];
        let hi = self.starts[j + 1];
        self.rows[lo..hi].iter().copied().zip(self.vals[lo..hi].iter().copied())
    }

    fn nnz(&self, j: usize) -> usize {
        self.starts[j + 1] - self.starts[j]
    }
}

struct Core<'a> {
    m: usize,
    n_struct: usize,
    n: usize,
    cols: Cols,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost2: Vec<f64>,
    state: Vec<VState>,
    basis: Vec<usize>,
    x: Vec<f64>,
    etas: Vec<Eta>,
    work: Vec<f64>,
    ybuf: Vec<f64>,
    feas_tol: f64,
    /// Tighter threshold used while classifying and clearing phase-1
    /// violations, leaving margin below `feas_tol` for phase-2 drift.
    viol_tol: f64,
    opt_tol: f64,
    iters: usize,
    max_iters: usize,
    pivots_since_refactor: usize,
    bland: bool,
    force_bland: bool,
    streak: usize,
    degen_streak: usize,
    deadline: Option<std::time::Instant>,
    opts_marker: std::marker::PhantomData<&'a ()>,
}

pub(super) fn solve(
    p: &LpProblem,
    opts: &LpOptions,
    hint: Option<&Basis>,
    force_bland: bool,
) -> Result<LpSolution, LpError> {
    let mut core = Core::build(p, opts, force_bland);
    let warm = match hint {
        Some(h) if core.try_install(h) => true,
        _ => {
            core.cold_start()?;
            false
        }
    };
    let _ = warm;

    // Phase 1: drive basic bound violations to zero.
    if core.max_violation() > core.feas_tol {
        match core.iterate(true)? {
            IterEnd::Converged => {
                if core.max_violation() > core.feas_tol {
                    return Ok(core.infeasible_solution(p));
                }
            }
            IterEnd::Unbounded(_) => {
                return Err(LpError::Stalled(
                    "phase-1 direction unbounded; numerical breakdown".into(),
                ));
            }
        }
    }

    // Phase 2.
    match core.iterate(false)? {
        IterEnd::Converged => Ok(core.optimal_solution(p)),
        IterEnd::Unbounded(ray) => Ok(core.unbounded_solution(p, ray)),
    }
}

enum IterEnd {
    Converged,
    Unbounded(Vec<(usize, f64)>),
}

impl<'a> Core<'a> {
    fn build(p: &'a LpProblem, opts: &LpOptions, force_bland: bool) -> Self {
        let m = p.rows.len();
        let n_struct = p.n_vars();
        let n = n_struct + m;

        // Transpose rows into CSC, slack identity block appended.
        let mut counts = vec![0usize; n];
        for row in &p.rows {
            for &(j, _) in &row.coeffs {
                counts[j] += 1;
            }
        }
        for j in 0..m {
            counts[n_struct + j] = 1;
        }
        let mut starts = vec![0usize; n + 1];
        for j in 0..n {
            starts[j + 1] = starts[j] + counts[j];
        }
        let nnz = starts[n];
        let mut rows_idx = vec![0usize; nnz];
        let mut vals = vec![0f64; nnz];
        let mut fill = starts.clone();
        for (r, row) in p.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                rows_idx[fill[j]] = r;
                vals[fill[j]] = v;
                fill[j] += 1;
            }
        }
        for r in 0..m {
            let j = n_struct + r;
            rows_idx[fill[j]] = r;
            vals[fill[j]] = 1.0;
            fill[j] += 1;
        }

        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        lo.extend_from_slice(&p.lower);
        hi.extend_from_slice(&p.upper);
        for row in &p.rows {
            match row.sense {
                Sense::Le => {
                    lo.push(0.0);
                    hi.push(f64::INFINITY);
                }
                Sense::Ge => {
                    lo.push(f64::NEG_INFINITY);
                    hi.push(0.0);
                }
                Sense::Eq => {
                    lo.push(0.0);
                    hi.push(0.0);
                }
            }
        }

        let mut cost2 = vec![0f64; n];
        cost2[..n_struct].copy_from_slice(&p.objective);

        let max_iters = if opts.max_iters > 0 {
            opts.max_iters
        } else {
            50_000 + 20 * (m + n)
        };

        Core {
            m,
            n_struct,
            n,
            cols: Cols { starts, rows: rows_idx, vals },
            b: p.rows.iter().map(|r| r.rhs).collect(),
            lo,
            hi,
            cost2,
            state: vec![VState::AtLower; n],
            basis: Vec::new(),
            x: vec![0.0; n],
            etas: Vec::new(),
            work: vec![0.0; m],
            ybuf: vec![0.0; m],
            feas_tol: opts.feas_tol,
            viol_tol: opts.feas_tol * 0.05,
            opt_tol: opts.opt_tol,
            iters: 0,
            max_iters,
            pivots_since_refactor: 0,
            bland: force_bland,
            force_bland,
            streak: 0,
            degen_streak: opts.degen_streak,
            deadline: opts.deadline,
            opts_marker: std::marker::PhantomData,
        }
    }

    fn start_value(&self, j: usize) -> (VState, f64) {
        let (lo, hi) = (self.lo[j], self.hi[j]);
        if lo.is_infinite() && hi.is_infinite() {
            (VState::FreeZero, 0.0)
        } else if lo.is_finite() && (hi.is_infinite() || lo.abs() <= hi.abs()) {
            (VState::AtLower, lo)
        } else {
            (VState::AtUpper, hi)
        }
    }

    fn cold_start(&mut self) -> Result<(), LpError> {
        for j in 0..self.n_struct {
            let (st, v) = self.start_value(j);
            self.state[j] = st;
            self.x[j] = v;
        }
        self.basis = (0..self.m).map(|r| self.n_struct + r).collect();
        for (r, &col) in self.basis.iter().enumerate() {
            self.state[col] = VState::Basic(r);
        }
        self.etas.clear();
        self.pivots_since_refactor = 0;
        self.recompute_basics();
        Ok(())
    }

    fn try_install(&mut self, hint: &Basis) -> bool {
        if hint.basic.len() != self.m {
            return false;
        }
        let mut seen = vec![false; self.n];
        for &c in &hint.basic {
            if c >= self.n || seen[c] {
                return false;
            }
            seen[c] = true;
        }
        for j in 0..self.n {
            let (st, v) = self.start_value(j);
            self.state[j] = st;
            self.x[j] = v;
        }
        for &c in &hint.at_upper {
            if c < self.n && !seen[c] && self.hi[c].is_finite() {
                self.state[c] = VState::AtUpper;
                self.x[c] = self.hi[c];
            }
        }
        self.basis = hint.basic.clone();
        for (r, &col) in self.basis.iter().enumerate() {
            self.state[col] = VState::Basic(r);
        }
        if self.reinvert().is_err() {
            return false;
        }
        self.recompute_basics();
        true
    }

    // ---- factorization -------------------------------------------------

    fn reinvert(&mut self) -> Result<(), LpError> {
        self.etas.clear();
        self.pivots_since_refactor = 0;
        let m = self.m;
        let mut order: Vec<usize> = (0..m).collect();
        let basis = self.basis.clone();
        order.sort_by_key(|&p| (self.cols.nnz(basis[p]), p));
        let mut row_used = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        for &pos in &order {
            let col = basis[pos];
            self.work.fill(0.0);
            for (r, v) in self.cols.col(col) {
                self.work[r] = v;
            }
            self.apply_etas_ftran();
            let mut best = usize::MAX;
            let mut best_v = 0f64;
            for r in 0..m {
                if !row_used[r] && self.work[r].abs() > best_v {
                    best_v = self.work[r].abs();
                    best = r;
                }
            }
            if best == usize::MAX || best_v <= 1e-11 {
                return Err(LpError::Stalled("singular basis at refactorization".into()));
            }
            row_used[best] = true;
            new_basis[best] = col;
            self.push_eta(best);
        }
        self.basis = new_basis;
        for (r, &col) in self.basis.iter().enumerate() {
            self.state[col] = VState::Basic(r);
        }
        Ok(())
    }

    /// Capture `work` (a transformed column) as an eta with pivot row `r`.
    fn push_eta(&mut self, r: usize) {
        let pivot = self.work[r];
        let mut nz = Vec::new();
        for (i, &v) in self.work.iter().enumerate() {
            if i != r && v.abs() > 1e-13 {
                nz.push((i, v));
            }
        }
        self.etas.push(Eta { r, pivot, nz });
    }

    fn apply_etas_ftran(&mut self) {
        for eta in &self.etas {
            let t = self.work[eta.r] / eta.pivot;
            if t != 0.0 {
                for &(i, a) in &eta.nz {
                    self.work[i] -= a * t;
                }
            }
            self.work[eta.r] = t;
        }
    }

    /// work <- B^{-1} A_col
    fn ftran_col(&mut self, col: usize) {
        self.work.fill(0.0);
        for (r, v) in self.cols.col(col) {
            self.work[r] = v;
        }
        self.apply_etas_ftran();
    }

    /// ybuf <- (B^{-1})' ybuf
    fn btran(&mut self) {
        for eta in self.etas.iter().rev() {
            let mut t = self.ybuf[eta.r];
            for &(i, a) in &eta.nz {
                t -= a * self.ybuf[i];
            }
            self.ybuf[eta.r] = t / eta.pivot;
        }
    }

    fn recompute_basics(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.n {
            if matches!(self.state[j], VState::Basic(_)) {
                continue;
            }
            let xj = self.x[j];
            if xj != 0.0 {
                for (r, v) in self.cols.col(j) {
                    rhs[r] -= v * xj;
                }
            }
        }
        self.work.copy_from_slice(&rhs);
        self.apply_etas_ftran();
        for r in 0..self.m {
            self.x[self.basis[r]] = self.work[r];
        }
    }

    // ---- iteration loop -------------------------------------------------

    fn max_violation(&self) -> f64 {
        let mut v = 0f64;
        for &col in &self.basis {
            v = v.max(self.lo[col] - self.x[col]).max(self.x[col] - self.hi[col]);
        }
        v
    }

    /// Phase-1 unit cost of a basic column (direction that reduces its bound
    /// violation), zero when within tolerance.
    fn phase1_cost(&self, col: usize) -> f64 {
        if self.x[col] < self.lo[col] - self.viol_tol {
            -1.0
        } else if self.x[col] > self.hi[col] + self.viol_tol {
            1.0
        } else {
            0.0
        }
    }

    fn iterate(&mut self, phase1: bool) -> Result<IterEnd, LpError> {
        loop {
            self.iters += 1;
            if self.iters > self.max_iters {
                return Err(LpError::Stalled(format!(
                    "iteration cap {} exceeded",
                    self.max_iters
                )));
            }
            if self.iters % 64 == 0 {
                if let Some(dl) = self.deadline {
                    if std::time::Instant::now() > dl {
                        return Err(LpError::Stalled("deadline exceeded".into()));
                    }
                }
            }
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.reinvert()?;
                self.recompute_basics();
            }

            if phase1 && self.max_violation() <= self.viol_tol {
                return Ok(IterEnd::Converged);
            }

            // y' = c_B' B^{-1}
            self.ybuf.fill(0.0);
            for (r, &col) in self.basis.iter().enumerate() {
                self.ybuf[r] = if phase1 { self.phase1_cost(col) } else { self.cost2[col] };
            }
            self.btran();

            // Pricing.
            let mut enter = usize::MAX;
            let mut enter_dir = 1.0;
            let mut best_score = self.opt_tol;
            for j in 0..self.n {
                let st = self.state[j];
                if matches!(st, VState::Basic(_)) || self.lo[j] == self.hi[j] {
                    continue;
                }
                let mut d = if phase1 { 0.0 } else { self.cost2[j] };
                for (r, v) in self.cols.col(j) {
                    d -= v * self.ybuf[r];
                }
                let (ok, dir) = match st {
                    VState::AtLower => (d < -self.opt_tol, 1.0),
                    VState::AtUpper => (d > self.opt_tol, -1.0),
                    VState::FreeZero => (d.abs() > self.opt_tol, if d > 0.0 { -1.0 } else { 1.0 }),
                    VState::Basic(_) => unreachable!(),
                };
                if !ok {
                    continue;
                }
                if self.bland {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if d.abs() > best_score {
                    best_score = d.abs();
                    enter = j;
                    enter_dir = dir;
                }
            }
            if enter == usize::MAX {
                return Ok(IterEnd::Converged);
            }

            self.ftran_col(enter);

            // Ratio test. Basic position r limits the step when it reaches a
            // bound from the feasible (or violated-from-outside) side.
            let mut t_star = f64::INFINITY;
            let mut leave_pos = usize::MAX;
            let mut leave_to_upper = false;
            let span = self.hi[enter] - self.lo[enter];
            if span.is_finite() {
                t_star = span;
            }
            for r in 0..self.m {
                let a = self.work[r];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let col = self.basis[r];
                let u = enter_dir * a;
                let xb = self.x[col];
                // Moving down (u > 0): stop at hi if currently above it, else lo.
                // Moving up (u < 0): stop at lo if currently below it, else hi.
                let (target, to_upper) = if u > 0.0 {
                    if xb > self.hi[col] + self.viol_tol {
                        (self.hi[col], true)
                    } else {
                        (self.lo[col], false)
                    }
                } else if xb < self.lo[col] - self.viol_tol {
                    (self.lo[col], false)
                } else {
                    (self.hi[col], true)
                };
                if target.is_infinite() {
                    continue;
                }
                let t = ((xb - target) / u).max(0.0);
                let tie = (t - t_star).abs() <= 1e-9 * (1.0 + t_star.abs());
                let better = t < t_star && !tie;
                let wins_tie = tie
                    && leave_pos != usize::MAX
                    && if self.bland {
                        self.basis[r] < self.basis[leave_pos]
                    } else {
                        a.abs() > self.work[leave_pos].abs()
                    };
                let replaces_bound_only = tie && leave_pos == usize::MAX && t <= t_star;
                if better || wins_tie || replaces_bound_only {
                    t_star = t.min(t_star);
                    leave_pos = r;
                    leave_to_upper = to_upper;
                }
            }

            if t_star.is_infinite() {
                // Unbounded direction: capture a sparse ray over structural columns.
                let mut ray = Vec::new();
                if enter < self.n_struct {
                    ray.push((enter, enter_dir));
                }
                for r in 0..self.m {
                    let col = self.basis[r];
                    let delta = -enter_dir * self.work[r];
                    if col < self.n_struct && delta.abs() > 1e-12 {
                        ray.push((col, delta));
                    }
                }
                ray.sort_by_key(|&(j, _)| j);
                return Ok(IterEnd::Unbounded(ray));
            }

            // Apply step.
            let step = t_star;
            if step.abs() > 0.0 {
                for r in 0..self.m {
                    let a = self.work[r];
                    if a != 0.0 {
                        let col = self.basis[r];
                        self.x[col] -= step * enter_dir * a;
                    }
                }
                self.x[enter] += enter_dir * step;
            }

            if leave_pos == usize::MAX {
                // Bound flip: entering variable traversed its whole span.
                self.state[enter] = match self.state[enter] {
                    VState::AtLower => VState::AtUpper,
                    VState::AtUpper => VState::AtLower,
                    other => other,
                };
                // Snap exactly onto the bound.
                self.x[enter] = match self.state[enter] {
                    VState::AtUpper => self.hi[enter],
                    _ => self.lo[enter],
                };
            } else {
                let leaving = self.basis[leave_pos];
                self.state[leaving] = if leave_to_upper { VState::AtUpper } else { VState::AtLower };
                self.x[leaving] = if leave_to_upper { self.hi[leaving] } else { self.lo[leaving] };
                self.basis[leave_pos] = enter;
                self.state[enter] = VState::Basic(leave_pos);
                self.push_eta(leave_pos);
                self.pivots_since_refactor += 1;
            }

            // Degeneracy bookkeeping.
            if step <= DEGEN_TOL {
                self.streak += 1;
                if self.streak > self.degen_streak {
                    self.bland = true;
                }
            } else {
                self.streak = 0;
                if !self.force_bland {
                    self.bland = false;
                }
            }
        }
    }

    // ---- extraction ------------------------------------------------------

    fn final_duals(&mut self) -> Vec<f64> {
        self.ybuf.fill(0.0);
        for (r, &col) in self.basis.iter().enumerate() {
            self.ybuf[r] = self.cost2[col];
        }
        self.btran();
        // Export convention: flip the internal Lagrangian sign.
        self.ybuf.iter().map(|&v| -v).collect()
    }

    fn snapshot_basis(&self) -> Basis {
        let mut at_upper = Vec::new();
        for j in 0..self.n {
            if self.state[j] == VState::AtUpper && self.lo[j].is_finite() {
                at_upper.push(j);
            }
        }
        Basis { basic: self.basis.clone(), at_upper }
    }

    fn optimal_solution(&mut self, p: &LpProblem) -> LpSolution {
        // Fresh factorization for clean residuals before extraction.
        if self.reinvert().is_ok() {
            self.recompute_basics();
        }
        let duals = self.final_duals();
        let x: Vec<f64> = self.x[..self.n_struct].to_vec();
        let objective = p.objective_value(&x);
        LpSolution {
            status: LpStatus::Optimal,
            x,
            duals,
            objective,
            iterations: self.iters,
            infeasible_rows: Vec::new(),
            ray: Vec::new(),
            basis: self.snapshot_basis(),
        }
    }

    fn infeasible_solution(&mut self, p: &LpProblem) -> LpSolution {
        let mut bad_rows = Vec::new();
        let x: Vec<f64> = self.x[..self.n_struct].to_vec();
        for (r, row) in p.rows.iter().enumerate() {
            let act = p.row_activity(r, &x);
            let viol = match row.sense {
                Sense::Le => act - row.rhs,
                Sense::Ge => row.rhs - act,
                Sense::Eq => (act - row.rhs).abs(),
            };
            if viol > self.feas_tol * 10.0 {
                bad_rows.push(r);
            }
        }
        LpSolution {
            status: LpStatus::Infeasible,
            x,
            duals: vec![0.0; self.m],
            objective: f64::NAN,
            iterations: self.iters,
            infeasible_rows: bad_rows,
            ray: Vec::new(),
            basis: self.snapshot_basis(),
        }
    }

    fn unbounded_solution(&mut self, _p: &LpProblem, ray: Vec<(usize, f64)>) -> LpSolution {
        let x: Vec<f64> = self.x[..self.n_struct].to_vec();
        LpSolution {
            status: LpStatus::Unbounded,
            x,
            duals: vec![0.0; self.m],
            objective: f64::NEG_INFINITY,
            iterations: self.iters,
            infeasible_rows: Vec::new(),
            ray,
            basis: self.snapshot_basis(),
        }
    }
}

impl std::fmt::Debug for Core<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Core(m={}, n={}, iters={})", self.m, self.n, self.iters)
    }
}
