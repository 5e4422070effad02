//! Exact solution of the attacker-defender problem: exhaustive attack
//! enumeration (the independent oracle), branch-and-bound over the MILP
//! reformulations, and post-solve verification.

mod bnb;

pub use bnb::{solve_milp, MilpOptions, MilpSolution, MilpStatus};

use crate::lp::{self, LpStatus};
use crate::model::{self, AttackPlan, Instance, ModelError};
use crate::reform::{self, ReformError};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Duality,
    Kkt,
    Enum,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "duality" => Ok(Method::Duality),
            "kkt" => Ok(Method::Kkt),
            "enum" => Ok(Method::Enum),
            other => Err(format!("unknown method `{other}` (duality|kkt|enum)")),
        }
    }
}

/// Set of nodes rendered immune to attack.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HardeningPlan {
    /// Sorted node indices, 0-based.
    pub protected: Vec<usize>,
    pub k: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Proposed,
    Heuristic,
    Random,
    None,
}

impl HardeningPlan {
    pub fn empty() -> Self {
        HardeningPlan { protected: Vec::new(), k: 0, provenance: Provenance::None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanOutcome {
    Feasible(f64),
    Infeasible,
}

/// Result of exhaustive enumeration over attack plans.
#[derive(Debug, Clone)]
pub struct AttackResult {
    /// Lexicographically smallest maximizer over feasible-defense plans;
    /// `None` when no plan leaves the defense feasible.
    pub worst: Option<(AttackPlan, f64)>,
    /// Scan-ordered table: support -> outcome.
    pub per_plan: Vec<(Vec<usize>, PlanOutcome)>,
    /// Sizes s <= k at which every plan of that size kills the defense.
    pub outright_sizes: Vec<usize>,
}

impl AttackResult {
    pub fn worst_cost(&self) -> Option<f64> {
        self.worst.as_ref().map(|&(_, c)| c)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub resolved_cost: f64,
    pub claimed_cost: f64,
}

/// Solved attacker-defender problem.
#[derive(Debug, Clone, Serialize)]
pub struct AdSolution {
    pub method: Method,
    pub k: usize,
    pub worst_cost: f64,
    /// 0-based critical set (the optimal attack's support).
    pub critical_set: Vec<usize>,
    pub nodes: usize,
    pub wall_time_s: f64,
    pub verified: bool,
    /// Set when a big-M cap was binding but the value verified exactly
    /// (harmless truncation of an unbounded dual face).
    pub bigm_note: Option<String>,
}

impl AdSolution {
    pub fn plan(&self) -> HardeningPlan {
        HardeningPlan {
            protected: self.critical_set.clone(),
            k: self.k,
            provenance: Provenance::Proposed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdOptions {
    pub milp: MilpOptions,
    /// Refuse enumeration beyond this many plans.
    pub enum_cap: u128,
    /// Apply the lexicographic tie rule by plan scan when the plan count is
    /// below this; beyond it the deterministic incumbent-pool rule applies.
    pub tie_refine_cap: u128,
    pub jobs: usize,
}

impl Default for AdOptions {
    fn default() -> Self {
        AdOptions {
            milp: MilpOptions::default(),
            enum_cap: 1_000_000,
            tie_refine_cap: 2_048,
            jobs: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Reform(#[from] ReformError),
    #[error("attacker wins outright: every attack of size {size} leaves the defense infeasible")]
    AttackerWinsOutright { size: usize },
    #[error("enumeration cap exceeded: {plans} plans > cap {cap}; use solve_milp instead")]
    EnumerationCap { plans: u128, cap: u128 },
    #[error("big-M insufficient after {escalations} escalations: {what}")]
    BigMInsufficient { escalations: usize, what: String },
    #[error("verification failed: re-solved inner cost {resolved} vs claimed {claimed}")]
    VerificationFailed { resolved: f64, claimed: f64 },
    #[error("search budget exceeded (incumbent {incumbent:?}, remaining bound {bound})")]
    BudgetExceeded { incumbent: Option<f64>, bound: f64 },
    #[error("MILP reports no feasible assignment")]
    MilpInfeasible,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
}

// ---------------------------------------------------------------------------
// Plan iteration

/// Supports of size <= k over `ground`, in set-lexicographic order
/// ([], [g0], [g0,g1], ..., [g0,g2], ..., [g1], ...).
pub fn plans_upto(ground: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    fn rec(ground: &[usize], from: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(prefix.clone());
        if prefix.len() == k {
            return;
        }
        for idx in from..ground.len() {
            prefix.push(ground[idx]);
            rec(ground, idx + 1, k, prefix, out);
            prefix.pop();
        }
    }
    rec(ground, 0, k, &mut prefix, &mut out);
    out
}

pub fn count_plans(n: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for s in 0..=k.min(n) {
        if s > 0 {
            binom = binom * (n - s + 1) as u128 / s as u128;
        }
        total = total.saturating_add(binom);
    }
    total
}

fn run_in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(f)
    }
}

fn tie_tol(value: f64) -> f64 {
    1e-9 * (1.0 + value.abs())
}

// ---------------------------------------------------------------------------
// Enumeration oracle

/// Solve the inner LP for every plan of size <= k and return the worst
/// feasible-defense plan. Independent of the MILP reformulations: only the
/// defender LP builder and the LP solver are involved.
pub fn enumerate_attacks(inst: &Instance, k: usize, opts: &AdOptions) -> Result<AttackResult, SolveError> {
    let ground: Vec<usize> = (0..inst.n).collect();
    enumerate_attacks_on(inst, &ground, k, opts)
}

/// Enumeration with the attacker restricted to `ground` (protected nodes
/// removed), used by protection-dominance checks and adversarial scenarios.
pub fn enumerate_attacks_on(
    inst: &Instance,
    ground: &[usize],
    k: usize,
    opts: &AdOptions,
) -> Result<AttackResult, SolveError> {
    let plan_count = count_plans(ground.len(), k);
    if plan_count > opts.enum_cap {
        return Err(SolveError::EnumerationCap { plans: plan_count, cap: opts.enum_cap });
    }
    let supports = plans_upto(ground, k);
    let outcomes: Vec<PlanOutcome> = run_in_pool(opts.jobs, || {
        supports
            .par_iter()
            .map(|support| {
                let plan = AttackPlan::from_support(inst.n, support, k);
                match model::solve_defender(inst, &plan) {
                    Ok((LpStatus::Optimal, Some((_, cost)))) => PlanOutcome::Feasible(cost.total),
                    _ => PlanOutcome::Infeasible,
                }
            })
            .collect()
    });

    // Max over feasible plans, then the lexicographically first within tie
    // tolerance of that max (scan order is set-lex).
    let mut max_cost = f64::NEG_INFINITY;
    for o in &outcomes {
        if let PlanOutcome::Feasible(c) = o {
            max_cost = max_cost.max(*c);
        }
    }
    let worst = if max_cost.is_finite() {
        supports
            .iter()
            .zip(&outcomes)
            .find_map(|(s, o)| match o {
                PlanOutcome::Feasible(c) if *c >= max_cost - tie_tol(max_cost) => {
                    Some((AttackPlan::from_support(inst.n, s, k), *c))
                }
                _ => None,
            })
    } else {
        None
    };

    let mut outright_sizes = Vec::new();
    for size in 0..=k {
        let mut any = false;
        let mut all_infeasible = true;
        for (s, o) in supports.iter().zip(&outcomes) {
            if s.len() == size {
                any = true;
                if matches!(o, PlanOutcome::Feasible(_)) {
                    all_infeasible = false;
                    break;
                }
            }
        }
        if any && all_infeasible {
            outright_sizes.push(size);
        }
    }

    Ok(AttackResult {
        worst,
        per_plan: supports.into_iter().zip(outcomes).collect(),
        outright_sizes,
    })
}

/// Re-solve the inner LP for `plan` and compare with a claimed cost at
/// relative tolerance 1e-6. The mandatory post-check after every MILP solve.
pub fn verify_solution(
    inst: &Instance,
    plan: &AttackPlan,
    claimed_cost: f64,
) -> Result<VerifyReport, SolveError> {
    let (status, out) = model::solve_defender(inst, plan)?;
    let resolved = match (status, out) {
        (LpStatus::Optimal, Some((_, cost))) => cost.total,
        _ => f64::NAN,
    };
    let ok = (resolved - claimed_cost).abs() <= 1e-6 * (1.0 + claimed_cost.abs());
    Ok(VerifyReport { ok, resolved_cost: resolved, claimed_cost })
}

// ---------------------------------------------------------------------------
// Attacker-defender driver

/// Solve the bilevel problem with the chosen backend and return the critical
/// set as a hardening plan. MILP backends run the big-M guard/escalation
/// protocol and the mandatory verification re-solve; ties among optimal
/// attacks resolve to the lexicographically smallest support whenever the
/// plan space is small enough to scan.
pub fn solve_attacker_defender(
    inst: &Instance,
    k: usize,
    method: Method,
    opts: &AdOptions,
) -> Result<AdSolution, SolveError> {
    let start = std::time::Instant::now();
    match method {
        Method::Enum => {
            let result = enumerate_attacks(inst, k, opts)?;
            if let Some(&size) = result.outright_sizes.first() {
                return Err(SolveError::AttackerWinsOutright { size });
            }
            let (plan, cost) = result.worst.ok_or(SolveError::AttackerWinsOutright { size: 0 })?;
            let verify = verify_solution(inst, &plan, cost)?;
            Ok(AdSolution {
                method,
                k,
                worst_cost: cost,
                critical_set: plan.support(),
                nodes: result.per_plan.len(),
                wall_time_s: start.elapsed().as_secs_f64(),
                verified: verify.ok,
                bigm_note: None,
            })
        }
        Method::Duality | Method::Kkt => {
            let base_bigm = reform::compute_big_m(inst);
            let mut escalations = 0usize;
            loop {
                let bigm = base_bigm.scaled(f64::powi(2.0, escalations as i32));
                let formulation = match method {
                    Method::Duality => reform::build_duality_milp(inst, k, &bigm)?,
                    Method::Kkt => reform::build_kkt_milp(inst, k, &bigm)?,
                    Method::Enum => unreachable!(),
                };
                let sol = solve_milp(&formulation, &opts.milp)?;
                match sol.status {
                    MilpStatus::Infeasible => return Err(SolveError::MilpInfeasible),
                    MilpStatus::BudgetExceeded => {
                        return Err(SolveError::BudgetExceeded {
                            incumbent: sol.incumbent_objective(),
                            bound: sol.best_bound,
                        })
                    }
                    MilpStatus::Optimal => {}
                }
                let support = formulation.z_support(&sol.assignment);
                let plan = AttackPlan::from_support(inst.n, &support, k);
                let verify = verify_solution(inst, &plan, sol.objective)?;
                let binding = binding_guards(&formulation, &sol);
                if verify.ok {
                    let mut critical = support;
                    // Exact lexicographic tie rule when the plan space is
                    // scannable; otherwise the incumbent stands.
                    if count_plans(inst.n, k) <= opts.tie_refine_cap {
                        critical =
                            refine_support_lex(inst, k, sol.objective, &critical, opts)?;
                    }
                    return Ok(AdSolution {
                        method,
                        k,
                        worst_cost: sol.objective,
                        critical_set: critical,
                        nodes: sol.nodes,
                        wall_time_s: start.elapsed().as_secs_f64(),
                        verified: true,
                        bigm_note: (!binding.is_empty()).then(|| {
                            format!("binding big-M caps with verified value: {}", binding.join(", "))
                        }),
                    });
                }
                // Value mismatch: treat as big-M damage and escalate.
                escalations += 1;
                if escalations > 3 {
                    return Err(if binding.is_empty() {
                        SolveError::VerificationFailed {
                            resolved: verify.resolved_cost,
                            claimed: verify.claimed_cost,
                        }
                    } else {
                        SolveError::BigMInsufficient {
                            escalations: escalations - 1,
                            what: binding.join(", "),
                        }
                    });
                }
            }
        }
    }
}

/// Guards whose permissive-side cap is binding at the solution.
fn binding_guards(f: &reform::MilpFormulation, sol: &MilpSolution) -> Vec<String> {
    let mut hits = Vec::new();
    for guard in &f.guards {
        let u = sol.assignment[guard.u_col].round() as u8;
        if u != guard.permissive {
            continue;
        }
        let row = &f.rows[guard.row];
        let activity: f64 = row.coeffs.iter().map(|&(j, v)| v * sol.assignment[j]).sum();
        let slack = row.rhs - activity;
        if slack <= 1e-6 * guard.m {
            hits.push(guard.what.clone());
        }
    }
    hits
}

/// First support (set-lex order, sizes 0..=k) whose inner-LP cost reaches
/// `target` within tie tolerance. Falls back to the incumbent if the scan
/// finds nothing closer.
fn refine_support_lex(
    inst: &Instance,
    k: usize,
    target: f64,
    incumbent: &[usize],
    _opts: &AdOptions,
) -> Result<Vec<usize>, SolveError> {
    let ground: Vec<usize> = (0..inst.n).collect();
    let tol = tie_tol(target);
    for support in plans_upto(&ground, k) {
        if support.as_slice() >= incumbent {
            break; // nothing lex-smaller remains
        }
        let plan = AttackPlan::from_support(inst.n, &support, k);
        if let (LpStatus::Optimal, Some((_, cost))) = model::solve_defender(inst, &plan)? {
            if cost.total >= target - tol {
                return Ok(support);
            }
        }
    }
    Ok(incumbent.to_vec())
}

#[cfg(test)]
mod tests;
