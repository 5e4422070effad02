//! Problem data and the defender's allocation LP.
//!
//! An [`Instance`] holds the areas (demand aggregation points), edge nodes,
//! demands, capacities, delays, eligibility and the service-quality knobs:
//! `gamma` weighs delay against unmet demand, `theta` caps each area's
//! unmet-demand ratio, and `beta` caps the pairwise gap between those
//! ratios. [`build_defender_lp`] assembles the allocation LP for a given
//! attack plan (the all-zeros plan is normal operation).

use crate::lp::{self, LpProblem, LpSolution, LpStatus, Sense};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Full problem data. Matrices are row-major with areas as rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    /// Number of areas (access points).
    pub m: usize,
    /// Number of edge nodes.
    pub n: usize,
    /// Per-area demand, vCPU. Strictly positive.
    pub lambda: Vec<f64>,
    /// Per-node capacity, vCPU.
    pub c: Vec<f64>,
    /// Per-area unmet-demand penalty, currency per vCPU.
    pub phi: Vec<f64>,
    /// End-to-end delay between area i and node j, ms.
    pub d: Vec<Vec<f64>>,
    /// Eligibility: 1 when node j may serve area i.
    pub a: Vec<Vec<u8>>,
    /// Delay weight in [0, 1].
    pub gamma: f64,
    /// Per-area unmet-ratio cap in [0, 1].
    pub theta: f64,
    /// Pairwise fairness gap, >= 0.
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<InstanceMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<crate::topology::SynthesisParams>,
}

impl Instance {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(|e| ModelError::Parse(e.to_string()))
    }

    /// Unordered area pairs (i, i') with i < i', in lexicographic order.
    /// Fairness rows and their dual variables are indexed by this sequence.
    pub fn area_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::with_capacity(self.m * (self.m.saturating_sub(1)) / 2);
        for i in 0..self.m {
            for ip in i + 1..self.m {
                pairs.push((i, ip));
            }
        }
        pairs
    }

    pub fn eligible_pairs(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for i in 0..self.m {
            for j in 0..self.n {
                if self.a[i][j] != 0 {
                    v.push((i, j));
                }
            }
        }
        v
    }

    pub fn total_demand(&self) -> f64 {
        self.lambda.iter().sum()
    }
}

/// Binary interdiction vector with a cardinality budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackPlan {
    pub z: Vec<u8>,
    pub k: usize,
}

impl AttackPlan {
    pub fn none(n: usize) -> Self {
        AttackPlan { z: vec![0; n], k: 0 }
    }

    pub fn from_support(n: usize, support: &[usize], k: usize) -> Self {
        let mut z = vec![0u8; n];
        for &j in support {
            z[j] = 1;
        }
        AttackPlan { z, k }
    }

    pub fn support(&self) -> Vec<usize> {
        self.z
            .iter()
            .enumerate()
            .filter_map(|(j, &v)| (v != 0).then_some(j))
            .collect()
    }

    pub fn validate(&self, inst: &Instance) -> Result<(), ModelError> {
        if self.z.len() != inst.n {
            return Err(ModelError::Shape(format!(
                "attack plan has {} entries for {} nodes",
                self.z.len(),
                inst.n
            )));
        }
        if self.z.iter().any(|&v| v > 1) {
            return Err(ModelError::Shape("attack plan entries must be 0/1".into()));
        }
        let used: usize = self.z.iter().map(|&v| v as usize).sum();
        if used > self.k {
            return Err(ModelError::Shape(format!(
                "attack plan uses {used} nodes over budget {}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Workload assignment and unmet demand.
#[derive(Debug, Clone)]
pub struct Allocation {
    /// M x N, zero wherever the pair is ineligible.
    pub x: Vec<Vec<f64>>,
    pub q: Vec<f64>,
}

impl Allocation {
    pub fn unmet_ratios(&self, inst: &Instance) -> Vec<f64> {
        self.q.iter().zip(&inst.lambda).map(|(q, l)| q / l).collect()
    }

    pub fn max_pairwise_gap(&self, inst: &Instance) -> f64 {
        let r = self.unmet_ratios(inst);
        let hi = r.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lo = r.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if r.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }
}

/// Objective split, with the weights already applied:
/// `total = (1-gamma) * sum phi q + gamma * sum d x`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub unmet_penalty_term: f64,
    pub delay_term: f64,
    pub total: f64,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("instance parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    /// Sufficient-feasibility screen per attack budget `k`: does the worst
    /// case surviving eligible capacity still cover the demand floor
    /// `sum_i (1-theta) lambda_i`?
    pub screen: Vec<ScreenRow>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScreenRow {
    pub k: usize,
    pub surviving_capacity: f64,
    pub required: f64,
    pub passes: bool,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn screen_passes(&self, k: usize) -> bool {
        self.screen.get(k).map(|s| s.passes).unwrap_or(false)
    }
}

/// Check structural invariants and report the per-budget feasibility screen.
/// Findings are returned, never raised.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut violations = Vec::new();
    let (m, n) = (inst.m, inst.n);
    if inst.lambda.len() != m || inst.phi.len() != m {
        violations.push("lambda/phi length differs from m".to_string());
    }
    if inst.c.len() != n {
        violations.push("c length differs from n".to_string());
    }
    if inst.d.len() != m || inst.d.iter().any(|r| r.len() != n) {
        violations.push("d is not an m x n matrix".to_string());
    }
    if inst.a.len() != m || inst.a.iter().any(|r| r.len() != n) {
        violations.push("a is not an m x n matrix".to_string());
    }
    for (i, &l) in inst.lambda.iter().enumerate() {
        if !(l > 0.0) {
            violations.push(format!("lambda[{i}] = {l} must be strictly positive"));
        }
    }
    for (j, &c) in inst.c.iter().enumerate() {
        if !(c >= 0.0) {
            violations.push(format!("c[{j}] = {c} must be nonnegative"));
        }
    }
    for (i, &p) in inst.phi.iter().enumerate() {
        if !(p >= 0.0) {
            violations.push(format!("phi[{i}] = {p} must be nonnegative"));
        }
    }
    if !(0.0..=1.0).contains(&inst.gamma) {
        violations.push(format!("gamma = {} outside [0, 1]", inst.gamma));
    }
    if !(0.0..=1.0).contains(&inst.theta) {
        violations.push(format!("theta = {} outside [0, 1]", inst.theta));
    }
    if !(inst.beta >= 0.0) {
        violations.push(format!("beta = {} must be nonnegative", inst.beta));
    }
    if inst.a.len() == m && inst.a.iter().all(|r| r.len() == n) {
        for (i, row) in inst.a.iter().enumerate() {
            if row.iter().all(|&v| v == 0) {
                violations.push(format!("area {i} has no eligible edge node"));
            }
        }
    }

    // Screen: eligible capacity = nodes eligible to at least one area; the
    // worst attack of size k removes the k largest of those.
    let mut eligible_caps: Vec<f64> = (0..n.min(inst.c.len()))
        .filter(|&j| inst.a.iter().any(|row| row.get(j).copied().unwrap_or(0) != 0))
        .map(|j| inst.c[j])
        .collect();
    eligible_caps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = eligible_caps.iter().sum();
    let required: f64 = (1.0 - inst.theta) * inst.total_demand();
    let mut screen = Vec::with_capacity(n + 1);
    let mut removed = 0.0;
    for k in 0..=n {
        if k > 0 && k <= eligible_caps.len() {
            removed += eligible_caps[k - 1];
        }
        let surviving = (total - removed).max(0.0);
        screen.push(ScreenRow {
            k,
            surviving_capacity: surviving,
            required,
            passes: surviving + 1e-9 >= required,
        });
    }
    ValidationReport { violations, screen }
}

// ---------------------------------------------------------------------------
// Defender LP

/// Which fairness rows to instantiate. `Drop` is the experiments module's
/// infeasibility fallback: pairwise-gap and theta-cap rows are omitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FairnessRows {
    Full,
    Drop,
}

/// The defender LP plus the index maps needed to read the solution and its
/// duals back in model terms.
#[derive(Debug, Clone)]
pub struct DefenderLp {
    pub lp: LpProblem,
    /// Column of x_{i,j}; `None` where ineligible (variable omitted).
    pub x_cols: Vec<Vec<Option<usize>>>,
    pub q_cols: Vec<usize>,
    pub capacity_rows: Vec<usize>,
    pub demand_rows: Vec<usize>,
    /// Eligibility cap row per eligible (i, j).
    pub pair_rows: Vec<((usize, usize), usize)>,
    /// Fairness rows per unordered pair (upper row, lower row).
    pub fairness_rows: Vec<((usize, usize), usize, usize)>,
    pub theta_rows: Vec<usize>,
}

/// Dual values renamed to the model's symbols, with the signs the dual
/// maximization problem expects (`pi, sigma, eta, tau, nu >= 0`, `mu` free).
#[derive(Debug, Clone)]
pub struct PaperDuals {
    pub pi: Vec<f64>,
    pub mu: Vec<f64>,
    /// Per eligible pair, aligned with `DefenderLp::pair_rows`.
    pub sigma: Vec<f64>,
    /// Per unordered area pair, aligned with `Instance::area_pairs`.
    pub eta: Vec<f64>,
    pub tau: Vec<f64>,
    pub nu: Vec<f64>,
}

/// Build the defender's allocation LP under `plan` (all-zeros plan encodes
/// normal operation).
///
/// Canonical row order: capacity rows with right-hand side `C_j (1 - z_j)`,
/// demand-balance equalities, per-pair eligibility caps, fairness pair rows
/// (both directions, once per unordered pair i < i'), theta-cap rows.
/// Ineligible x variables are omitted rather than fixed at zero.
pub fn build_defender_lp(inst: &Instance, plan: &AttackPlan) -> Result<DefenderLp, ModelError> {
    build_defender_lp_with(inst, plan, FairnessRows::Full)
}

pub fn build_defender_lp_with(
    inst: &Instance,
    plan: &AttackPlan,
    fairness: FairnessRows,
) -> Result<DefenderLp, ModelError> {
    plan.validate(inst)?;
    let (m, n) = (inst.m, inst.n);

    let mut x_cols = vec![vec![None; n]; m];
    let mut names = Vec::new();
    let mut next = 0usize;
    for i in 0..m {
        for j in 0..n {
            if inst.a[i][j] != 0 {
                x_cols[i][j] = Some(next);
                names.push(format!("x_{i}_{j}"));
                next += 1;
            }
        }
    }
    let q_cols: Vec<usize> = (0..m)
        .map(|i| {
            names.push(format!("q_{i}"));
            next + i
        })
        .collect();
    let n_vars = next + m;

    let mut lp = LpProblem::new(n_vars);
    lp.col_names = names;
    for i in 0..m {
        for j in 0..n {
            if let Some(col) = x_cols[i][j] {
                lp.objective[col] = inst.gamma * inst.d[i][j];
            }
        }
    }
    for i in 0..m {
        lp.objective[q_cols[i]] = (1.0 - inst.gamma) * inst.phi[i];
    }

    // Capacity rows (pi).
    let mut capacity_rows = Vec::with_capacity(n);
    for j in 0..n {
        let coeffs: Vec<(usize, f64)> =
            (0..m).filter_map(|i| x_cols[i][j].map(|c| (c, 1.0))).collect();
        let rhs = inst.c[j] * (1.0 - plan.z[j] as f64);
        capacity_rows.push(lp.add_named_row(format!("cap_{j}"), Sense::Le, rhs, coeffs));
    }
    // Demand balance (mu).
    let mut demand_rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut coeffs: Vec<(usize, f64)> =
            (0..n).filter_map(|j| x_cols[i][j].map(|c| (c, 1.0))).collect();
        coeffs.push((q_cols[i], 1.0));
        demand_rows.push(lp.add_named_row(format!("dem_{i}"), Sense::Eq, inst.lambda[i], coeffs));
    }
    // Eligibility caps (sigma).
    let mut pair_rows = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if let Some(col) = x_cols[i][j] {
                let r = lp.add_named_row(format!("elig_{i}_{j}"), Sense::Le, inst.c[j], vec![(col, 1.0)]);
                pair_rows.push(((i, j), r));
            }
        }
    }
    // Fairness pair rows (eta on the upper row, tau on the lower row, stored
    // as `-q_i/l_i + q_i'/l_i' <= beta`).
    let mut fairness_rows = Vec::new();
    let mut theta_rows = Vec::new();
    if fairness == FairnessRows::Full {
        for (i, ip) in inst.area_pairs() {
            let up = lp.add_named_row(
                format!("fair_up_{i}_{ip}"),
                Sense::Le,
                inst.beta,
                vec![(q_cols[i], 1.0 / inst.lambda[i]), (q_cols[ip], -1.0 / inst.lambda[ip])],
            );
            let lo = lp.add_named_row(
                format!("fair_lo_{i}_{ip}"),
                Sense::Le,
                inst.beta,
                vec![(q_cols[i], -1.0 / inst.lambda[i]), (q_cols[ip], 1.0 / inst.lambda[ip])],
            );
            fairness_rows.push(((i, ip), up, lo));
        }
        // Theta caps (nu).
        for i in 0..m {
            theta_rows.push(lp.add_named_row(
                format!("theta_{i}"),
                Sense::Le,
                inst.theta,
                vec![(q_cols[i], 1.0 / inst.lambda[i])],
            ));
        }
    }

    Ok(DefenderLp {
        lp,
        x_cols,
        q_cols,
        capacity_rows,
        demand_rows,
        pair_rows,
        fairness_rows,
        theta_rows,
    })
}

impl DefenderLp {
    pub fn extract_allocation(&self, inst: &Instance, sol: &LpSolution) -> Allocation {
        let mut x = vec![vec![0.0; inst.n]; inst.m];
        for i in 0..inst.m {
            for j in 0..inst.n {
                if let Some(col) = self.x_cols[i][j] {
                    x[i][j] = sol.x[col];
                }
            }
        }
        let q = self.q_cols.iter().map(|&c| sol.x[c]).collect();
        Allocation { x, q }
    }

    /// Rename the exported row multipliers to the model's dual symbols.
    ///
    /// The LP layer exports `>= 0` multipliers on `<=` rows of a min
    /// problem; `pi`, `sigma`, `eta`, `tau`, `nu` therefore carry over
    /// directly, while the dual maximization's `mu` is the negated
    /// equality-row multiplier.
    pub fn paper_duals(&self, inst: &Instance, sol: &LpSolution) -> PaperDuals {
        let y = &sol.duals;
        PaperDuals {
            pi: self.capacity_rows.iter().map(|&r| y[r]).collect(),
            mu: self.demand_rows.iter().map(|&r| -y[r]).collect(),
            sigma: self.pair_rows.iter().map(|&(_, r)| y[r]).collect(),
            eta: self.fairness_rows.iter().map(|&(_, up, _)| y[up]).collect(),
            tau: self.fairness_rows.iter().map(|&(_, _, lo)| y[lo]).collect(),
            nu: self.theta_rows.iter().map(|&r| y[r]).collect(),
        }
        .validate_signs(inst)
    }
}

impl PaperDuals {
    fn validate_signs(mut self, _inst: &Instance) -> Self {
        // Clamp away -0.0 and sub-tolerance negatives so downstream
        // comparisons against the sign constraints are stable.
        for v in self
            .pi
            .iter_mut()
            .chain(&mut self.sigma)
            .chain(&mut self.eta)
            .chain(&mut self.tau)
            .chain(&mut self.nu)
        {
            if *v < 0.0 && *v > -1e-9 {
                *v = 0.0;
            }
        }
        self
    }
}

/// Solve the defender LP for `plan` and return the allocation with its cost.
pub fn solve_defender(
    inst: &Instance,
    plan: &AttackPlan,
) -> Result<(LpStatus, Option<(Allocation, CostBreakdown)>), ModelError> {
    let built = build_defender_lp(inst, plan)?;
    let sol = lp::solve_lp(&built.lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let alloc = built.extract_allocation(inst, &sol);
            let (cost, _) = evaluate_allocation(inst, plan, &alloc);
            Ok((LpStatus::Optimal, Some((alloc, cost))))
        }
        other => Ok((other, None)),
    }
}

/// One violated constraint of an allocation, with its residual.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualEntry {
    pub constraint: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    pub violations: Vec<ResidualEntry>,
}

/// Recompute the exact objective of an allocation and check every invariant
/// (balance, capacity under the plan, eligibility, theta caps, fairness,
/// nonnegativity) with absolute tolerance `1e-8` on residuals.
pub fn evaluate_allocation(
    inst: &Instance,
    plan: &AttackPlan,
    alloc: &Allocation,
) -> (CostBreakdown, FeasibilityVerdict) {
    const TOL: f64 = 1e-8;
    let mut unmet = 0.0;
    let mut delay = 0.0;
    for i in 0..inst.m {
        unmet += inst.phi[i] * alloc.q[i];
        for j in 0..inst.n {
            delay += inst.d[i][j] * alloc.x[i][j];
        }
    }
    let cost = CostBreakdown {
        unmet_penalty_term: (1.0 - inst.gamma) * unmet,
        delay_term: inst.gamma * delay,
        total: (1.0 - inst.gamma) * unmet + inst.gamma * delay,
    };

    let mut violations = Vec::new();
    let mut push = |name: String, residual: f64| {
        if residual > TOL {
            violations.push(ResidualEntry { constraint: name, residual });
        }
    };
    for i in 0..inst.m {
        let served: f64 = alloc.x[i].iter().sum();
        push(format!("balance[{i}]"), (served + alloc.q[i] - inst.lambda[i]).abs());
        push(format!("q_nonneg[{i}]"), -alloc.q[i]);
        push(format!("theta[{i}]"), alloc.q[i] / inst.lambda[i] - inst.theta);
        for j in 0..inst.n {
            push(format!("x_nonneg[{i},{j}]"), -alloc.x[i][j]);
            push(
                format!("eligibility[{i},{j}]"),
                alloc.x[i][j] - inst.c[j] * inst.a[i][j] as f64,
            );
        }
    }
    for j in 0..inst.n {
        let load: f64 = (0..inst.m).map(|i| alloc.x[i][j]).sum();
        push(
            format!("capacity[{j}]"),
            load - inst.c[j] * (1.0 - plan.z[j] as f64),
        );
    }
    for (i, ip) in inst.area_pairs() {
        let gap = (alloc.q[i] / inst.lambda[i] - alloc.q[ip] / inst.lambda[ip]).abs();
        push(format!("fairness[{i},{ip}]"), gap - inst.beta);
    }
    let feasible = violations.is_empty();
    (cost, FeasibilityVerdict { feasible, violations })
}

// ---------------------------------------------------------------------------
// CSV export (external interface; node and area ids are 1-based outside)

pub fn write_allocation_csv(w: &mut impl std::io::Write, inst: &Instance, alloc: &Allocation) -> std::io::Result<()> {
    writeln!(w, "area,en,x")?;
    for i in 0..inst.m {
        for j in 0..inst.n {
            if inst.a[i][j] != 0 {
                writeln!(w, "{},{},{}", i + 1, j + 1, alloc.x[i][j])?;
            }
        }
    }
    Ok(())
}

pub fn write_unmet_csv(w: &mut impl std::io::Write, inst: &Instance, alloc: &Allocation) -> std::io::Result<()> {
    writeln!(w, "area,q,q_over_lambda")?;
    for i in 0..inst.m {
        writeln!(w, "{},{},{}", i + 1, alloc.q[i], alloc.q[i] / inst.lambda[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::lp::LpStatus;

    #[test]
    fn tiny_instance_normal_operation() {
        let inst = fixtures::tiny2x2();
        let report = validate_instance(&inst);
        assert!(report.is_clean(), "{:?}", report.violations);
        assert!(report.screen_passes(1));
        assert!(!report.screen_passes(2));
        // Screen arithmetic: surviving 10 vs required (1-0.8)*20 = 4.
        assert!((report.screen[1].surviving_capacity - 10.0).abs() < 1e-12);
        assert!((report.screen[1].required - 4.0).abs() < 1e-12);

        let plan = AttackPlan::none(inst.n);
        let (status, out) = solve_defender(&inst, &plan).unwrap();
        assert_eq!(status, LpStatus::Optimal);
        let (alloc, cost) = out.unwrap();
        assert!((cost.total - 2.0).abs() < 1e-9);
        assert!((cost.unmet_penalty_term).abs() < 1e-9);
        assert!((cost.delay_term - 2.0).abs() < 1e-9);
        assert!((alloc.x[0][0] - 10.0).abs() < 1e-8);
        assert!((alloc.x[1][1] - 10.0).abs() < 1e-8);
        assert!(alloc.q.iter().all(|&q| q.abs() < 1e-8));
    }

    #[test]
    fn tiny_instance_under_attack() {
        let inst = fixtures::tiny2x2();
        let plan = AttackPlan::from_support(inst.n, &[0], 1);
        let (status, out) = solve_defender(&inst, &plan).unwrap();
        assert_eq!(status, LpStatus::Optimal);
        let (alloc, cost) = out.unwrap();
        assert!((cost.total - 46.2).abs() < 1e-9, "total {}", cost.total);
        assert!((alloc.q[0] - 8.0).abs() < 1e-8);
        assert!((alloc.q[1] - 2.0).abs() < 1e-8);
        assert!((alloc.x[0][1] - 2.0).abs() < 1e-8);
        assert!((alloc.x[1][1] - 8.0).abs() < 1e-8);
    }

    #[test]
    fn tight_beta_shifts_the_optimum() {
        let mut inst = fixtures::tiny2x2();
        inst.beta = 0.2;
        let plan = AttackPlan::from_support(inst.n, &[0], 1);
        let (_, out) = solve_defender(&inst, &plan).unwrap();
        let (alloc, cost) = out.unwrap();
        assert!((cost.total - 46.4).abs() < 1e-9, "total {}", cost.total);
        assert!((alloc.q[0] - 6.0).abs() < 1e-8);
        assert!((alloc.q[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn tight_theta_infeasible_under_attack() {
        let mut inst = fixtures::tiny2x2();
        inst.theta = 0.4;
        let plan = AttackPlan::from_support(inst.n, &[0], 1);
        let (status, out) = solve_defender(&inst, &plan).unwrap();
        assert_eq!(status, LpStatus::Infeasible);
        assert!(out.is_none());
    }

    #[test]
    fn duals_satisfy_dual_feasibility() {
        let inst = fixtures::tiny2x2();
        let plan = AttackPlan::from_support(inst.n, &[0], 1);
        let built = build_defender_lp(&inst, &plan).unwrap();
        let sol = crate::lp::solve_lp(&built.lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let gap = crate::lp::check_duality_gap(&built.lp, &sol).unwrap();
        assert!(gap <= 1e-7 * (1.0 + sol.objective.abs()));

        let duals = built.paper_duals(&inst, &sol);
        // Sign constraints.
        for v in duals.pi.iter().chain(&duals.sigma).chain(&duals.eta).chain(&duals.tau).chain(&duals.nu) {
            assert!(*v >= 0.0, "negative multiplier {v}");
        }
        // Dual rows: -pi_j + mu_i - sigma_ij <= gamma d_ij on eligible pairs.
        for (idx, &((i, j), _)) in built.pair_rows.iter().enumerate() {
            let lhs = -duals.pi[j] + duals.mu[i] - duals.sigma[idx];
            assert!(lhs <= inst.gamma * inst.d[i][j] + 1e-7, "dual row violated at ({i},{j})");
        }
        // Dual objective equals the primal optimum.
        let pairs = inst.area_pairs();
        let mut dual_obj = 0.0;
        for j in 0..inst.n {
            dual_obj -= inst.c[j] * (1.0 - plan.z[j] as f64) * duals.pi[j];
        }
        for i in 0..inst.m {
            dual_obj += inst.lambda[i] * duals.mu[i];
            dual_obj -= inst.theta * duals.nu[i];
        }
        for (idx, &((i, j), _)) in built.pair_rows.iter().enumerate() {
            dual_obj -= inst.c[j] * inst.a[i][j] as f64 * duals.sigma[idx];
        }
        for (p, _) in pairs.iter().enumerate() {
            dual_obj -= inst.beta * (duals.eta[p] + duals.tau[p]);
        }
        assert!((dual_obj - sol.objective).abs() <= 1e-7 * (1.0 + sol.objective.abs()));
    }

    #[test]
    fn evaluate_flags_theta_violation() {
        let inst = fixtures::tiny2x2();
        let plan = AttackPlan::none(inst.n);
        let alloc = Allocation {
            x: vec![vec![0.0, 0.0], vec![0.0, 10.0]],
            q: vec![10.0, 0.0],
        };
        let (_, verdict) = evaluate_allocation(&inst, &plan, &alloc);
        assert!(!verdict.feasible);
        let theta = verdict
            .violations
            .iter()
            .find(|v| v.constraint == "theta[0]")
            .expect("theta violation reported");
        assert!((theta.residual - 0.2).abs() < 1e-12);
    }

    #[test]
    fn all_drop_allocation_cost() {
        let mut inst = fixtures::tiny2x2();
        inst.theta = 1.0;
        let plan = AttackPlan::none(inst.n);
        let alloc = Allocation {
            x: vec![vec![0.0; 2]; 2],
            q: inst.lambda.clone(),
        };
        let (cost, verdict) = evaluate_allocation(&inst, &plan, &alloc);
        assert!(verdict.feasible);
        let expect: f64 = (1.0 - inst.gamma)
            * inst.phi.iter().zip(&inst.lambda).map(|(p, l)| p * l).sum::<f64>();
        assert!((cost.total - expect).abs() < 1e-9);
        assert!(cost.delay_term.abs() < 1e-12);
    }

    #[test]
    fn empty_eligibility_row_reported() {
        let mut inst = fixtures::tiny2x2();
        inst.a[0] = vec![0, 0];
        let report = validate_instance(&inst);
        assert!(report.violations.iter().any(|v| v.contains("no eligible")));
    }

    #[test]
    fn theta_zero_screen_reports_shortfall() {
        let mut inst = fixtures::tiny2x2();
        inst.theta = 0.0;
        inst.lambda = vec![15.0, 15.0]; // total 30 > capacity 20
        let report = validate_instance(&inst);
        assert!(!report.screen_passes(0));
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = fixtures::tiny2x2();
        let text = inst.to_json();
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back.m, inst.m);
        assert_eq!(back.n, inst.n);
        assert_eq!(back.lambda, inst.lambda);
        assert_eq!(back.a, inst.a);
    }

    /// The LP built for the zero attack must match an independent
    /// transcription of the unattacked problem (ordered fairness pairs, all
    /// x variables instantiated, different row order).
    #[test]
    fn zero_attack_matches_independent_transcription() {
        use crate::lp::{LpProblem, Sense};
        let inst = fixtures::tiny2x2();
        let (m, n) = (inst.m, inst.n);
        let nx = m * n;
        let mut p = LpProblem::new(nx + m);
        for i in 0..m {
            for j in 0..n {
                p.objective[i * n + j] = inst.gamma * inst.d[i][j];
            }
            p.objective[nx + i] = (1.0 - inst.gamma) * inst.phi[i];
        }
        for i in 0..m {
            let mut coeffs: Vec<(usize, f64)> = (0..n).map(|j| (i * n + j, 1.0)).collect();
            coeffs.push((nx + i, 1.0));
            p.add_row(Sense::Eq, inst.lambda[i], coeffs);
            p.add_row(Sense::Le, inst.theta, vec![(nx + i, 1.0 / inst.lambda[i])]);
        }
        for j in 0..n {
            p.add_row(Sense::Le, inst.c[j], (0..m).map(|i| (i * n + j, 1.0)).collect());
        }
        for i in 0..m {
            for j in 0..n {
                p.add_row(Sense::Le, inst.c[j] * inst.a[i][j] as f64, vec![(i * n + j, 1.0)]);
            }
        }
        for i in 0..m {
            for ip in 0..m {
                if i != ip {
                    p.add_row(
                        Sense::Le,
                        inst.beta,
                        vec![(nx + i, 1.0 / inst.lambda[i]), (nx + ip, -1.0 / inst.lambda[ip])],
                    );
                }
            }
        }
        let direct = crate::lp::solve_lp(&p).unwrap();
        let (_, out) = solve_defender(&inst, &AttackPlan::none(n)).unwrap();
        let (_, cost) = out.unwrap();
        assert!((direct.objective - cost.total).abs() < 1e-9);
    }
}
