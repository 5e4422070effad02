//! Single-level MILP reformulations of the attacker-defender max-min
//! program: the duality-based MILP (inner LP replaced by its dual, bilinear
//! `(1-z_j) pi_j` linearized through auxiliary `g_j` with per-node big-M),
//! and the KKT-based MILP (primal-dual system with every complementarity
//! pair expanded through the Fortuny-Amat pattern).
//!
//! Both builders refuse to run when the instance's feasibility screen fails
//! at the requested budget: an attack that makes the inner LP infeasible
//! leaves the dual unbounded, and a big-M-capped unbounded dual would return
//! a silently wrong optimum. The enumeration path handles those instances.

use crate::lp::{LpProblem, Sense};
use crate::model::{validate_instance, Instance};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Flavor {
    Duality,
    Kkt,
}

/// Variable role, for diagnostics, export names and solution extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarTag {
    Z(usize),
    G(usize),
    Pi(usize),
    Mu(usize),
    Sigma(usize, usize),
    Eta(usize, usize),
    Tau(usize, usize),
    Nu(usize),
    X(usize, usize),
    Q(usize),
    U0(usize, usize),
    U1(usize),
    U2(usize),
    U3(usize, usize),
    U4(usize, usize),
    U5(usize, usize),
    U6(usize),
}

impl VarTag {
    pub fn name(&self) -> String {
        match *self {
            VarTag::Z(j) => format!("z_{j}"),
            VarTag::G(j) => format!("g_{j}"),
            VarTag::Pi(j) => format!("pi_{j}"),
            VarTag::Mu(i) => format!("mu_{i}"),
            VarTag::Sigma(i, j) => format!("sigma_{i}_{j}"),
            VarTag::Eta(i, ip) => format!("eta_{i}_{ip}"),
            VarTag::Tau(i, ip) => format!("tau_{i}_{ip}"),
            VarTag::Nu(i) => format!("nu_{i}"),
            VarTag::X(i, j) => format!("x_{i}_{j}"),
            VarTag::Q(i) => format!("q_{i}"),
            VarTag::U0(i, j) => format!("u0_{i}_{j}"),
            VarTag::U1(i) => format!("u1_{i}"),
            VarTag::U2(j) => format!("u2_{j}"),
            VarTag::U3(i, j) => format!("u3_{i}_{j}"),
            VarTag::U4(i, ip) => format!("u4_{i}_{ip}"),
            VarTag::U5(i, ip) => format!("u5_{i}_{ip}"),
            VarTag::U6(i) => format!("u6_{i}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MilpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub name: String,
}

/// Big-M row whose inactive side must stay slack at any accepted optimum.
/// `permissive` is the binary value under which the row's cap equals `m`;
/// a binding cap under that value signals the M may be cutting the true
/// solution off.
#[derive(Debug, Clone)]
pub struct BigMGuard {
    pub row: usize,
    pub m: f64,
    pub u_col: usize,
    pub permissive: u8,
    pub what: String,
}

/// A mixed-integer maximization program plus the metadata branch-and-bound
/// and the guards need.
#[derive(Debug, Clone)]
pub struct MilpFormulation {
    pub flavor: Flavor,
    pub m_areas: usize,
    pub n_nodes: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<MilpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub binary: Vec<bool>,
    /// Lower value branches first; attack variables take priority over
    /// complementarity indicators.
    pub branch_priority: Vec<u8>,
    pub var_tags: Vec<VarTag>,
    pub guards: Vec<BigMGuard>,
    pub z_cols: Vec<usize>,
}

impl MilpFormulation {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    /// Minimization LP relaxation (objective negated, binaries boxed [0,1]).
    pub fn to_lp(&self) -> LpProblem {
        let n = self.n_vars();
        let mut lp = LpProblem::new(n);
        lp.objective = self.objective.iter().map(|c| -c).collect();
        lp.lower = self.lower.clone();
        lp.upper = self.upper.clone();
        lp.col_names = self.var_tags.iter().map(|t| t.name()).collect();
        for row in &self.rows {
            lp.add_named_row(row.name.clone(), row.sense, row.rhs, row.coeffs.clone());
        }
        lp
    }

    pub fn write_mps(&self, w: &mut impl std::io::Write, name: &str) -> std::io::Result<()> {
        crate::lp::write_mps(w, name, &self.to_lp(), &self.binary)
    }

    /// Objective value (max sense) of an assignment.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn z_support(&self, x: &[f64]) -> Vec<usize> {
        self.z_cols
            .iter()
            .enumerate()
            .filter_map(|(j, &col)| (x[col].round() as i64 == 1).then_some(j))
            .collect()
    }
}

/// Linearization constants. The duality path carries one bound per node;
/// the KKT path one bound per member of each Fortuny-Amat family.
#[derive(Debug, Clone)]
pub struct BigMValues {
    /// Per-node cap on the capacity dual (duality path).
    pub duality: Vec<f64>,
    pub kkt: KktBigM,
}

#[derive(Debug, Clone)]
pub struct KktBigM {
    /// Stationarity-of-x family per (area, node).
    pub m0: Vec<Vec<f64>>,
    /// Stationarity-of-q family per area.
    pub m1: Vec<f64>,
    /// Capacity complementarity per node.
    pub m2: Vec<f64>,
    /// Eligibility complementarity per (area, node).
    pub m3: Vec<Vec<f64>>,
    /// Fairness upper/lower complementarity per unordered area pair.
    pub m4: Vec<f64>,
    pub m5: Vec<f64>,
    /// Theta-cap complementarity per area.
    pub m6: Vec<f64>,
}

impl BigMValues {
    /// Uniformly scale every bound (escalation doubles them).
    pub fn scaled(&self, factor: f64) -> Self {
        let scale_v = |v: &Vec<f64>| v.iter().map(|x| x * factor).collect::<Vec<_>>();
        let scale_m = |m: &Vec<Vec<f64>>| m.iter().map(|r| scale_v(r)).collect::<Vec<_>>();
        BigMValues {
            duality: scale_v(&self.duality),
            kkt: KktBigM {
                m0: scale_m(&self.kkt.m0),
                m1: scale_v(&self.kkt.m1),
                m2: scale_v(&self.kkt.m2),
                m3: scale_m(&self.kkt.m3),
                m4: scale_v(&self.kkt.m4),
                m5: scale_v(&self.kkt.m5),
                m6: scale_v(&self.kkt.m6),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum ReformError {
    #[error("instance validation failed: {0:?}")]
    InvalidInstance(Vec<String>),
    #[error(
        "feasibility screen fails at budget {k}: worst-case surviving eligible capacity \
         {surviving:.6} < required {required:.6}; use the enumeration method"
    )]
    FeasibilityScreen { k: usize, surviving: f64, required: f64 },
    #[error("budget {k} exceeds node count {n}")]
    BudgetTooLarge { k: usize, n: usize },
}

/// Linearization bounds.
///
/// Duality path: `M_j = 2 [(1-gamma) max_i phi_i + gamma max_i d_ij]` — the
/// capacity dual prices one unit of node-j capacity, worth at most the best
/// achievable saving, with factor-2 headroom. KKT path: each family bound
/// covers both the variable side (from primal ranges) and the expression
/// side (from the dual scale above), again doubled. Downstream solves assert
/// no value-relevant cap is binding and escalate by doubling on violation.
pub fn compute_big_m(inst: &Instance) -> BigMValues {
    let (m, n) = (inst.m, inst.n);
    let phi_max = inst.phi.iter().cloned().fold(0f64, f64::max);
    let mut duality = Vec::with_capacity(n);
    let mut p_scale = 0f64;
    for j in 0..n {
        let dmax_j = (0..m).map(|i| inst.d[i][j]).fold(0f64, f64::max);
        let pj = (1.0 - inst.gamma) * phi_max + inst.gamma * dmax_j;
        p_scale = p_scale.max(pj);
        duality.push(positive(2.0 * pj));
    }
    let p = p_scale;
    let lam_max = inst.lambda.iter().cloned().fold(0f64, f64::max);
    let pair_count = m * m.saturating_sub(1) / 2;
    let fair_dual = lam_max * p;

    let m0 = (0..m)
        .map(|i| {
            (0..n)
                .map(|j| {
                    positive(2.0 * (inst.gamma * inst.d[i][j] + 3.0 * p).max(inst.c[j].min(inst.lambda[i])))
                })
                .collect()
        })
        .collect();
    let m1 = (0..m)
        .map(|i| {
            let expr = (1.0 - inst.gamma) * inst.phi[i] + p + 3.0 * fair_dual / inst.lambda[i];
            positive(2.0 * expr.max(inst.theta * inst.lambda[i]))
        })
        .collect();
    let m2 = (0..n).map(|j| positive(2.0 * inst.c[j].max(p))).collect();
    let m3 = (0..m)
        .map(|_| (0..n).map(|j| positive(2.0 * inst.c[j].max(2.0 * p))).collect())
        .collect();
    let m45 = positive(2.0 * (inst.beta + inst.theta).max(fair_dual));
    let m6 = (0..m).map(|_| positive(2.0 * inst.theta.max(fair_dual))).collect();

    BigMValues {
        duality,
        kkt: KktBigM {
            m0,
            m1,
            m2,
            m3,
            m4: vec![m45; pair_count],
            m5: vec![m45; pair_count],
            m6,
        },
    }
}

fn positive(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        1e-6
    }
}

fn check_preconditions(inst: &Instance, k: usize) -> Result<(), ReformError> {
    let report = validate_instance(inst);
    if !report.is_clean() {
        return Err(ReformError::InvalidInstance(report.violations));
    }
    if k > inst.n {
        return Err(ReformError::BudgetTooLarge { k, n: inst.n });
    }
    let row = report.screen[k];
    if !row.passes {
        return Err(ReformError::FeasibilityScreen {
            k,
            surviving: row.surviving_capacity,
            required: row.required,
        });
    }
    Ok(())
}

struct Builder {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    binary: Vec<bool>,
    priority: Vec<u8>,
    tags: Vec<VarTag>,
    rows: Vec<MilpRow>,
    guards: Vec<BigMGuard>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            binary: Vec::new(),
            priority: Vec::new(),
            tags: Vec::new(),
            rows: Vec::new(),
            guards: Vec::new(),
        }
    }

    fn var(&mut self, tag: VarTag, obj: f64, lo: f64, hi: f64) -> usize {
        let id = self.objective.len();
        self.objective.push(obj);
        self.lower.push(lo);
        self.upper.push(hi);
        self.binary.push(false);
        self.priority.push(1);
        self.tags.push(tag);
        id
    }

    fn bin(&mut self, tag: VarTag, priority: u8) -> usize {
        let id = self.var(tag, 0.0, 0.0, 1.0);
        self.binary[id] = true;
        self.priority[id] = priority;
        id
    }

    fn row(&mut self, name: String, sense: Sense, rhs: f64, coeffs: Vec<(usize, f64)>) -> usize {
        let id = self.rows.len();
        self.rows.push(MilpRow { coeffs, sense, rhs, name });
        id
    }

    fn guard(&mut self, row: usize, m: f64, u_col: usize, permissive: u8, what: String) {
        self.guards.push(BigMGuard { row, m, u_col, permissive, what });
    }
}

/// Duality-based MILP: maximize the inner LP's dual objective over attack
/// plans, with `g_j` standing in for `(1-z_j) pi_j`.
pub fn build_duality_milp(
    inst: &Instance,
    k: usize,
    bigm: &BigMValues,
) -> Result<MilpFormulation, ReformError> {
    check_preconditions(inst, k)?;
    let (m, n) = (inst.m, inst.n);
    let pairs = inst.area_pairs();
    let elig = inst.eligible_pairs();
    let mut b = Builder::new();

    let pi: Vec<usize> = (0..n).map(|j| b.var(VarTag::Pi(j), 0.0, 0.0, f64::INFINITY)).collect();
    let mu: Vec<usize> = (0..m)
        .map(|i| b.var(VarTag::Mu(i), inst.lambda[i], f64::NEG_INFINITY, f64::INFINITY))
        .collect();
    let mut sigma = vec![vec![None; n]; m];
    for &(i, j) in &elig {
        sigma[i][j] = Some(b.var(VarTag::Sigma(i, j), -inst.c[j], 0.0, f64::INFINITY));
    }
    let eta: Vec<usize> = pairs
        .iter()
        .map(|&(i, ip)| b.var(VarTag::Eta(i, ip), -inst.beta, 0.0, f64::INFINITY))
        .collect();
    let tau: Vec<usize> = pairs
        .iter()
        .map(|&(i, ip)| b.var(VarTag::Tau(i, ip), -inst.beta, 0.0, f64::INFINITY))
        .collect();
    let nu: Vec<usize> =
        (0..m).map(|i| b.var(VarTag::Nu(i), -inst.theta, 0.0, f64::INFINITY)).collect();
    // g_j <= M_j as an explicit variable bound; its objective carries the
    // capacity term.
    let g: Vec<usize> =
        (0..n).map(|j| b.var(VarTag::G(j), -inst.c[j], 0.0, bigm.duality[j])).collect();
    let z: Vec<usize> = (0..n).map(|j| b.bin(VarTag::Z(j), 0)).collect();

    // Dual feasibility for x columns, eligible pairs only.
    for &(i, j) in &elig {
        b.row(
            format!("dx_{i}_{j}"),
            Sense::Le,
            inst.gamma * inst.d[i][j],
            vec![(pi[j], -1.0), (mu[i], 1.0), (sigma[i][j].unwrap(), -1.0)],
        );
    }
    // Dual feasibility for q columns.
    let pair_index = pair_lookup(m, &pairs);
    for i in 0..m {
        let li = inst.lambda[i];
        let mut coeffs = vec![(mu[i], 1.0), (nu[i], -1.0 / li)];
        for l in 0..m {
            if l == i {
                continue;
            }
            if l > i {
                let p = pair_index[i][l];
                coeffs.push((eta[p], -1.0 / li));
                coeffs.push((tau[p], 1.0 / li));
            } else {
                let p = pair_index[l][i];
                coeffs.push((eta[p], 1.0 / li));
                coeffs.push((tau[p], -1.0 / li));
            }
        }
        b.row(format!("dq_{i}"), Sense::Le, (1.0 - inst.gamma) * inst.phi[i], coeffs);
    }
    // Linearization of (1 - z_j) pi_j.
    for j in 0..n {
        let mj = bigm.duality[j];
        let r = b.row(
            format!("g_cap_{j}"),
            Sense::Le,
            mj,
            vec![(g[j], 1.0), (z[j], mj)],
        );
        // With z_j = 0 the rows force g_j = pi_j, so a binding cap means the
        // capacity dual itself is pressed against M. z_j = 1 pins g_j = 0 and
        // pi_j floats along an unbounded optimal face; no check there. Nodes
        // with zero capacity never price, so they are exempt as well.
        if inst.c[j] > 0.0 {
            b.guard(r, mj, z[j], 0, format!("g_{j} <= M (1 - z_{j})"));
        }
        b.row(format!("g_pi_{j}"), Sense::Le, 0.0, vec![(g[j], 1.0), (pi[j], -1.0)]);
        b.row(
            format!("g_lo_{j}"),
            Sense::Le,
            0.0,
            vec![(pi[j], 1.0), (z[j], -mj), (g[j], -1.0)],
        );
    }
    // Attack budget.
    b.row("card".into(), Sense::Le, k as f64, z.iter().map(|&c| (c, 1.0)).collect());

    Ok(MilpFormulation {
        flavor: Flavor::Duality,
        m_areas: m,
        n_nodes: n,
        objective: b.objective,
        rows: b.rows,
        lower: b.lower,
        upper: b.upper,
        binary: b.binary,
        branch_priority: b.priority,
        var_tags: b.tags,
        guards: b.guards,
        z_cols: z,
    })
}

/// KKT-based MILP: primal and dual of the inner LP coupled by Fortuny-Amat
/// complementarity, objective equal to the defender's cost.
pub fn build_kkt_milp(
    inst: &Instance,
    k: usize,
    bigm: &BigMValues,
) -> Result<MilpFormulation, ReformError> {
    check_preconditions(inst, k)?;
    let (m, n) = (inst.m, inst.n);
    let pairs = inst.area_pairs();
    let elig = inst.eligible_pairs();
    let km = &bigm.kkt;
    let mut b = Builder::new();

    let mut x = vec![vec![None; n]; m];
    for &(i, j) in &elig {
        x[i][j] = Some(b.var(VarTag::X(i, j), inst.gamma * inst.d[i][j], 0.0, f64::INFINITY));
    }
    let q: Vec<usize> = (0..m)
        .map(|i| b.var(VarTag::Q(i), (1.0 - inst.gamma) * inst.phi[i], 0.0, f64::INFINITY))
        .collect();
    let pi: Vec<usize> = (0..n).map(|j| b.var(VarTag::Pi(j), 0.0, 0.0, f64::INFINITY)).collect();
    let mu: Vec<usize> =
        (0..m).map(|i| b.var(VarTag::Mu(i), 0.0, f64::NEG_INFINITY, f64::INFINITY)).collect();
    let mut sigma = vec![vec![None; n]; m];
    for &(i, j) in &elig {
        sigma[i][j] = Some(b.var(VarTag::Sigma(i, j), 0.0, 0.0, f64::INFINITY));
    }
    let eta: Vec<usize> =
        pairs.iter().map(|&(i, ip)| b.var(VarTag::Eta(i, ip), 0.0, 0.0, f64::INFINITY)).collect();
    let tau: Vec<usize> =
        pairs.iter().map(|&(i, ip)| b.var(VarTag::Tau(i, ip), 0.0, 0.0, f64::INFINITY)).collect();
    let nu: Vec<usize> = (0..m).map(|i| b.var(VarTag::Nu(i), 0.0, 0.0, f64::INFINITY)).collect();
    let z: Vec<usize> = (0..n).map(|j| b.bin(VarTag::Z(j), 0)).collect();
    let mut u0 = vec![vec![None; n]; m];
    let mut u3 = vec![vec![None; n]; m];
    for &(i, j) in &elig {
        u0[i][j] = Some(b.bin(VarTag::U0(i, j), 1));
        u3[i][j] = Some(b.bin(VarTag::U3(i, j), 1));
    }
    let u1: Vec<usize> = (0..m).map(|i| b.bin(VarTag::U1(i), 1)).collect();
    let u2: Vec<usize> = (0..n).map(|j| b.bin(VarTag::U2(j), 1)).collect();
    let u4: Vec<usize> = pairs.iter().map(|&(i, ip)| b.bin(VarTag::U4(i, ip), 1)).collect();
    let u5: Vec<usize> = pairs.iter().map(|&(i, ip)| b.bin(VarTag::U5(i, ip), 1)).collect();
    let u6: Vec<usize> = (0..m).map(|i| b.bin(VarTag::U6(i), 1)).collect();

    // Stationarity of x, complementary with x: the expression
    // gamma d + pi + mu + sigma lies in [0, u0 M0], x in [0, (1-u0) M0].
    for &(i, j) in &elig {
        let m0 = km.m0[i][j];
        let sx = vec![(pi[j], 1.0), (mu[i], 1.0), (sigma[i][j].unwrap(), 1.0)];
        b.row(format!("sx_lo_{i}_{j}"), Sense::Ge, -inst.gamma * inst.d[i][j], sx.clone());
        let mut up = sx;
        up.push((u0[i][j].unwrap(), -m0));
        let r = b.row(format!("sx_up_{i}_{j}"), Sense::Le, -inst.gamma * inst.d[i][j], up);
        b.guard(r, m0, u0[i][j].unwrap(), 1, format!("stationarity-x cap ({i},{j})"));
        b.row(
            format!("x_cap_{i}_{j}"),
            Sense::Le,
            m0,
            vec![(x[i][j].unwrap(), 1.0), (u0[i][j].unwrap(), m0)],
        );
    }
    // Stationarity of q, complementary with q.
    let pair_index = pair_lookup(m, &pairs);
    for i in 0..m {
        let li = inst.lambda[i];
        let m1 = km.m1[i];
        let mut sq = vec![(mu[i], 1.0), (nu[i], 1.0 / li)];
        for l in 0..m {
            if l == i {
                continue;
            }
            if l > i {
                let p = pair_index[i][l];
                sq.push((eta[p], 1.0 / li));
                sq.push((tau[p], -1.0 / li));
            } else {
                let p = pair_index[l][i];
                sq.push((eta[p], -1.0 / li));
                sq.push((tau[p], 1.0 / li));
            }
        }
        b.row(format!("sq_lo_{i}"), Sense::Ge, -(1.0 - inst.gamma) * inst.phi[i], sq.clone());
        let mut up = sq;
        up.push((u1[i], -m1));
        let r = b.row(format!("sq_up_{i}"), Sense::Le, -(1.0 - inst.gamma) * inst.phi[i], up);
        b.guard(r, m1, u1[i], 1, format!("stationarity-q cap ({i})"));
        b.row(format!("q_cap_{i}"), Sense::Le, m1, vec![(q[i], 1.0), (u1[i], m1)]);
    }
    // Capacity complementarity: 0 <= C_j(1-z_j) - sum_i x_ij <= u2 M2,
    // pi_j <= (1 - u2) M2.
    for j in 0..n {
        let m2 = km.m2[j];
        let xs: Vec<(usize, f64)> =
            (0..m).filter_map(|i| x[i][j].map(|c| (c, 1.0))).collect();
        let mut lo = xs.clone();
        lo.push((z[j], inst.c[j]));
        b.row(format!("cap_{j}"), Sense::Le, inst.c[j], lo);
        let mut up: Vec<(usize, f64)> = xs.iter().map(|&(c, v)| (c, -v)).collect();
        up.push((z[j], -inst.c[j]));
        up.push((u2[j], -m2));
        b.row(format!("cap_sl_{j}"), Sense::Le, -inst.c[j], up);
        let r = b.row(format!("pi_cap_{j}"), Sense::Le, m2, vec![(pi[j], 1.0), (u2[j], m2)]);
        b.guard(r, m2, u2[j], 0, format!("pi cap ({j})"));
    }
    // Eligibility complementarity per eligible pair.
    for &(i, j) in &elig {
        let m3 = km.m3[i][j];
        b.row(format!("el_{i}_{j}"), Sense::Le, inst.c[j], vec![(x[i][j].unwrap(), 1.0)]);
        b.row(
            format!("el_sl_{i}_{j}"),
            Sense::Le,
            -inst.c[j],
            vec![(x[i][j].unwrap(), -1.0), (u3[i][j].unwrap(), -m3)],
        );
        let r = b.row(
            format!("sig_cap_{i}_{j}"),
            Sense::Le,
            m3,
            vec![(sigma[i][j].unwrap(), 1.0), (u3[i][j].unwrap(), m3)],
        );
        b.guard(r, m3, u3[i][j].unwrap(), 0, format!("sigma cap ({i},{j})"));
    }
    // Fairness complementarity, both directions per unordered pair.
    for (p, &(i, ip)) in pairs.iter().enumerate() {
        let (li, lip) = (inst.lambda[i], inst.lambda[ip]);
        let m4 = km.m4[p];
        b.row(
            format!("f_up_{i}_{ip}"),
            Sense::Le,
            inst.beta,
            vec![(q[i], 1.0 / li), (q[ip], -1.0 / lip)],
        );
        b.row(
            format!("f_up_sl_{i}_{ip}"),
            Sense::Le,
            -inst.beta,
            vec![(q[i], -1.0 / li), (q[ip], 1.0 / lip), (u4[p], -m4)],
        );
        let r = b.row(format!("eta_cap_{i}_{ip}"), Sense::Le, m4, vec![(eta[p], 1.0), (u4[p], m4)]);
        b.guard(r, m4, u4[p], 0, format!("eta cap ({i},{ip})"));

        let m5 = km.m5[p];
        b.row(
            format!("f_lo_{i}_{ip}"),
            Sense::Le,
            inst.beta,
            vec![(q[i], -1.0 / li), (q[ip], 1.0 / lip)],
        );
        b.row(
            format!("f_lo_sl_{i}_{ip}"),
            Sense::Le,
            -inst.beta,
            vec![(q[i], 1.0 / li), (q[ip], -1.0 / lip), (u5[p], -m5)],
        );
        let r = b.row(format!("tau_cap_{i}_{ip}"), Sense::Le, m5, vec![(tau[p], 1.0), (u5[p], m5)]);
        b.guard(r, m5, u5[p], 0, format!("tau cap ({i},{ip})"));
    }
    // Theta-cap complementarity.
    for i in 0..m {
        let li = inst.lambda[i];
        let m6 = km.m6[i];
        b.row(format!("th_{i}"), Sense::Le, inst.theta, vec![(q[i], 1.0 / li)]);
        b.row(
            format!("th_sl_{i}"),
            Sense::Le,
            -inst.theta,
            vec![(q[i], -1.0 / li), (u6[i], -m6)],
        );
        let r = b.row(format!("nu_cap_{i}"), Sense::Le, m6, vec![(nu[i], 1.0), (u6[i], m6)]);
        b.guard(r, m6, u6[i], 0, format!("nu cap ({i})"));
    }
    // Demand balance.
    for i in 0..m {
        let mut coeffs: Vec<(usize, f64)> =
            (0..n).filter_map(|j| x[i][j].map(|c| (c, 1.0))).collect();
        coeffs.push((q[i], 1.0));
        b.row(format!("dem_{i}"), Sense::Eq, inst.lambda[i], coeffs);
    }
    // Attack budget.
    b.row("card".into(), Sense::Le, k as f64, z.iter().map(|&c| (c, 1.0)).collect());

    Ok(MilpFormulation {
        flavor: Flavor::Kkt,
        m_areas: m,
        n_nodes: n,
        objective: b.objective,
        rows: b.rows,
        lower: b.lower,
        upper: b.upper,
        binary: b.binary,
        branch_priority: b.priority,
        var_tags: b.tags,
        guards: b.guards,
        z_cols: z,
    })
}

fn pair_lookup(m: usize, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut idx = vec![vec![usize::MAX; m]; m];
    for (p, &(i, ip)) in pairs.iter().enumerate() {
        idx[i][ip] = p;
    }
    idx
}

// ---------------------------------------------------------------------------
// Size accounting

/// Built-formulation counts next to the closed-form size formulas for the
/// same (M, N), with deltas. Deltas stem from documented conventions: the
/// formulas count ordered fairness pairs and nonnegativity bounds as rows,
/// the built formulations use unordered pairs, variable bounds, and
/// eligibility-restricted columns.
#[derive(Debug, Clone, Serialize)]
pub struct SizeStats {
    pub flavor: Flavor,
    pub m_areas: usize,
    pub n_nodes: usize,
    pub rows_built: usize,
    pub binaries_built: usize,
    pub continuous_built: usize,
    pub rows_formula: usize,
    pub binaries_formula: usize,
    pub continuous_formula: usize,
    pub rows_delta: i64,
    pub binaries_delta: i64,
    pub continuous_delta: i64,
    pub notes: Vec<String>,
}

/// Closed-form constraint count for the flavor at size (m, n).
pub fn formula_rows(flavor: Flavor, m: usize, n: usize) -> usize {
    match flavor {
        Flavor::Duality => 6 * n + 2 * m * (m + n),
        Flavor::Kkt => 5 * n + m * (8 * m + 8 * n + 1),
    }
}

pub fn formula_binaries(flavor: Flavor, m: usize, n: usize) -> usize {
    match flavor {
        Flavor::Duality => n,
        Flavor::Kkt => 2 * n + 2 * m * (m + n),
    }
}

pub fn formula_continuous(flavor: Flavor, m: usize, n: usize) -> usize {
    match flavor {
        Flavor::Duality => 2 * n + m * (2 * m + n),
        Flavor::Kkt => n + 2 * m * (m + n + 1),
    }
}

pub fn formulation_stats(f: &MilpFormulation) -> SizeStats {
    let (m, n) = (f.m_areas, f.n_nodes);
    let binaries_built = f.binary.iter().filter(|&&b| b).count();
    let continuous_built = f.n_vars() - binaries_built;
    let rows_built = f.rows.len();
    let rows_formula = formula_rows(f.flavor, m, n);
    let binaries_formula = formula_binaries(f.flavor, m, n);
    let continuous_formula = formula_continuous(f.flavor, m, n);
    let notes = vec![
        "fairness duals/indicators instantiated once per unordered area pair; the formulas count ordered pairs".into(),
        "variable nonnegativity and g <= M are bounds, not rows, in the built formulation".into(),
        "x/sigma columns and their complementarity exist only for eligible pairs".into(),
    ];
    SizeStats {
        flavor: f.flavor,
        m_areas: m,
        n_nodes: n,
        rows_built,
        binaries_built,
        continuous_built,
        rows_formula,
        binaries_formula,
        continuous_formula,
        rows_delta: rows_built as i64 - rows_formula as i64,
        binaries_delta: binaries_built as i64 - binaries_formula as i64,
        continuous_delta: continuous_built as i64 - continuous_formula as i64,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn big_m_formula_values() {
        let inst = fixtures::tiny2x2();
        let bigm = compute_big_m(&inst);
        // 2 (0.9 * 5 + 0.1 * 2) = 9.4 on both nodes.
        assert!((bigm.duality[0] - 9.4).abs() < 1e-12);
        assert!((bigm.duality[1] - 9.4).abs() < 1e-12);

        let mut flat = fixtures::tiny2x2();
        flat.d = vec![vec![0.0; 2]; 2];
        let bigm = compute_big_m(&flat);
        assert!(bigm.duality.iter().all(|&m| (m - 9.0).abs() < 1e-12));

        let mut delay_only = fixtures::tiny2x2();
        delay_only.gamma = 1.0;
        let bigm = compute_big_m(&delay_only);
        assert!((bigm.duality[0] - 4.0).abs() < 1e-12); // 2 * max_i d_i0 = 2*2
        assert!((bigm.duality[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn screen_refusal_at_over_budget() {
        let inst = fixtures::tiny2x2();
        let bigm = compute_big_m(&inst);
        assert!(matches!(
            build_duality_milp(&inst, 2, &bigm),
            Err(ReformError::FeasibilityScreen { k: 2, .. })
        ));
        assert!(matches!(
            build_kkt_milp(&inst, 2, &bigm),
            Err(ReformError::FeasibilityScreen { k: 2, .. })
        ));
    }

    #[test]
    fn table_formula_values() {
        assert_eq!(formula_rows(Flavor::Duality, 2, 2), 28);
        assert_eq!(formula_binaries(Flavor::Duality, 2, 2), 2);
        assert_eq!(formula_continuous(Flavor::Duality, 2, 2), 16);
        assert_eq!(formula_binaries(Flavor::Kkt, 80, 30), 17660);
        assert_eq!(formula_rows(Flavor::Kkt, 80, 30), 5 * 30 + 80 * (640 + 240 + 1));
        assert_eq!(formula_continuous(Flavor::Kkt, 80, 30), 30 + 160 * 111);
    }

    #[test]
    fn built_counts_and_deltas() {
        let inst = fixtures::tiny2x2();
        let bigm = compute_big_m(&inst);
        let f = build_duality_milp(&inst, 1, &bigm).unwrap();
        let stats = formulation_stats(&f);
        assert_eq!(stats.binaries_built, 2);
        // pi 2 + mu 2 + sigma 4 + eta 1 + tau 1 + nu 2 + g 2 = 14.
        assert_eq!(stats.continuous_built, 14);
        assert_eq!(stats.continuous_formula, 16);
        assert_eq!(stats.continuous_delta, -2);
        assert!(!stats.notes.is_empty());
        // Rows: dual-x 4, dual-q 2, linearization 3 * 2, cardinality 1.
        assert_eq!(stats.rows_built, 4 + 2 + 6 + 1);
    }

    #[test]
    fn kkt_built_counts() {
        let inst = fixtures::tiny2x2();
        let bigm = compute_big_m(&inst);
        let f = build_kkt_milp(&inst, 1, &bigm).unwrap();
        let stats = formulation_stats(&f);
        // z 2 + u0 4 + u1 2 + u2 2 + u3 4 + u4 1 + u5 1 + u6 2 = 18.
        assert_eq!(stats.binaries_built, 18);
        // x 4 + q 2 + pi 2 + mu 2 + sigma 4 + eta 1 + tau 1 + nu 2 = 18.
        assert_eq!(stats.continuous_built, 18);
        assert!(stats.rows_built > 0);
        assert_eq!(stats.binaries_formula, 2 * 2 + 2 * 2 * (2 + 2));
    }

    #[test]
    fn guards_cover_value_relevant_caps() {
        let inst = fixtures::tiny2x2();
        let bigm = compute_big_m(&inst);
        let f = build_duality_milp(&inst, 1, &bigm).unwrap();
        assert_eq!(f.guards.len(), 2); // one per node with positive capacity
        let f = build_kkt_milp(&inst, 1, &bigm).unwrap();
        // u0-family per eligible pair + u1 per area + u2 per node + u3 per
        // pair + u4/u5 per area pair + u6 per area.
        assert_eq!(f.guards.len(), 4 + 2 + 2 + 4 + 1 + 1 + 2);
    }
}
