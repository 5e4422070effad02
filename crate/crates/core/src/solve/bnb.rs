//! Best-first branch-and-bound over a MILP formulation, bounding each node
//! by its LP relaxation.

use crate::lp::{self, Basis, LpOptions, LpStatus};
use crate::reform::MilpFormulation;
use crate::solve::SolveError;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub node_limit: usize,
    pub time_limit: Duration,
    /// Absolute bound-dominance gap for pruning.
    pub abs_gap: f64,
    pub int_tol: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            node_limit: 1_000_000,
            time_limit: Duration::from_secs(30 * 60),
            abs_gap: 1e-6,
            int_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    BudgetExceeded,
}

/// Solution of [`solve_milp`]. `objective` is in the formulation's (max)
/// sense; `assignment` carries every variable with binaries rounded exact.
#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub objective: f64,
    pub assignment: Vec<f64>,
    pub binaries: Vec<u8>,
    pub nodes: usize,
    pub wall_time_s: f64,
    /// Largest unexplored relaxation bound at termination.
    pub best_bound: f64,
}

impl MilpSolution {
    pub fn incumbent_objective(&self) -> Option<f64> {
        self.objective.is_finite().then_some(self.objective)
    }
}

/// One pending subproblem. Bound fixings are stored as a parent chain so a
/// deep frontier stays cheap.
struct FixChain {
    var: usize,
    value: u8,
    parent: Option<Arc<FixChain>>,
}

struct Node {
    /// Upper bound (max sense) inherited from the parent's relaxation.
    bound: f64,
    id: u64,
    fixes: Option<Arc<FixChain>>,
    hint: Option<Arc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Max-heap: highest bound first, then oldest node.
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Globally optimal solve via best-first branch-and-bound: LP relaxation per
/// node, branching on the most fractional binary (attack variables first),
/// pruning by bound dominance at `abs_gap`. Deterministic for fixed options.
pub fn solve_milp(f: &MilpFormulation, opts: &MilpOptions) -> Result<MilpSolution, SolveError> {
    let start = Instant::now();
    let deadline = start + opts.time_limit;
    let base_lp = f.to_lp();
    let n = f.n_vars();

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    heap.push(Node { bound: f64::INFINITY, id: 0, fixes: None, hint: None });
    let mut next_id: u64 = 1;
    let mut nodes = 0usize;

    // Incumbent pool: (objective, assignment) within tie tolerance of the
    // best, so the documented tie rule can be applied at the end.
    let mut pool: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut incumbent = f64::NEG_INFINITY;
    let mut budget_hit = false;
    let mut remaining_bound = f64::NEG_INFINITY;

    while let Some(node) = heap.pop() {
        if node.bound <= incumbent + opts.abs_gap {
            // Best-first: every remaining node is dominated too.
            remaining_bound = remaining_bound.max(node.bound);
            break;
        }
        if nodes >= opts.node_limit || Instant::now() > deadline {
            budget_hit = true;
            remaining_bound = remaining_bound.max(node.bound);
            break;
        }
        nodes += 1;

        // Materialize this node's bounds.
        let mut lp_node = base_lp.clone();
        let mut chain = node.fixes.clone();
        while let Some(link) = chain {
            if link.value == 0 {
                lp_node.upper[link.var] = 0.0;
            } else {
                lp_node.lower[link.var] = 1.0;
            }
            chain = link.parent.clone();
        }

        let lp_opts = LpOptions { deadline: Some(deadline), ..LpOptions::default() };
        let sol = match lp::solve_lp_with(&lp_node, &lp_opts, node.hint.as_deref()) {
            Ok(s) => s,
            Err(lp::LpError::Stalled(msg)) if msg.contains("deadline") => {
                budget_hit = true;
                remaining_bound = remaining_bound.max(node.bound);
                break;
            }
            Err(e) => return Err(e.into()),
        };
        match sol.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                // Max-sense relaxation unbounded: formulation defect.
                return Err(SolveError::Lp(lp::LpError::Stalled(
                    "unbounded MILP relaxation".into(),
                )));
            }
            LpStatus::Optimal => {}
        }
        let bound = -sol.objective;
        if bound <= incumbent + opts.abs_gap {
            continue;
        }

        // Branch variable: most fractional within the highest-priority class.
        let mut best: Option<(u8, f64, usize)> = None;
        for j in 0..n {
            if !f.binary[j] {
                continue;
            }
            let v = sol.x[j];
            let frac_dist = (v - v.round()).abs();
            if frac_dist <= opts.int_tol {
                continue;
            }
            let mid_dist = (v - 0.5).abs();
            let cand = (f.branch_priority[j], mid_dist, j);
            best = match best {
                None => Some(cand),
                Some(cur) => {
                    if cand.0 < cur.0 || (cand.0 == cur.0 && (cand.1 < cur.1 - 1e-12)) {
                        Some(cand)
                    } else {
                        Some(cur)
                    }
                }
            };
        }

        match best {
            None => {
                // Integral: incumbent.
                if bound > incumbent {
                    incumbent = bound;
                    let keep = incumbent - tie_keep_tol(incumbent);
                    pool.retain(|(obj, _)| *obj >= keep);
                }
                pool.push((bound, sol.x.clone()));
            }
            Some((_, _, var)) => {
                let hint = Arc::new(sol.basis);
                // Attack-side child first so its (lower) id pops first on
                // bound ties.
                heap.push(Node {
                    bound,
                    id: next_id,
                    fixes: Some(Arc::new(FixChain { var, value: 1, parent: node.fixes.clone() })),
                    hint: Some(hint.clone()),
                });
                heap.push(Node {
                    bound,
                    id: next_id + 1,
                    fixes: Some(Arc::new(FixChain { var, value: 0, parent: node.fixes.clone() })),
                    hint: Some(hint),
                });
                next_id += 2;
            }
        }
    }

    for node in heap.iter() {
        remaining_bound = remaining_bound.max(node.bound);
    }

    let status = if budget_hit {
        MilpStatus::BudgetExceeded
    } else if pool.is_empty() {
        MilpStatus::Infeasible
    } else {
        MilpStatus::Optimal
    };

    // Tie rule over the incumbent pool: lexicographically smallest attack
    // support among objectives within tolerance of the best.
    let chosen = if pool.is_empty() {
        None
    } else {
        let tol = tie_keep_tol(incumbent);
        pool.iter()
            .filter(|(obj, _)| *obj >= incumbent - tol)
            .min_by(|(oa, xa), (ob, xb)| {
                let sa = f.z_support(xa);
                let sb = f.z_support(xb);
                sa.cmp(&sb).then(oa.total_cmp(ob))
            })
            .cloned()
    };

    let (objective, assignment, binaries) = match chosen {
        Some((obj, mut x)) => {
            let mut bins = vec![0u8; n];
            for j in 0..n {
                if f.binary[j] {
                    let r = x[j].round();
                    bins[j] = r as u8;
                    x[j] = r;
                }
            }
            (obj, x, bins)
        }
        None => (f64::NAN, vec![0.0; n], vec![0u8; n]),
    };

    Ok(MilpSolution {
        status,
        objective,
        assignment,
        binaries,
        nodes,
        wall_time_s: start.elapsed().as_secs_f64(),
        best_bound: if status == MilpStatus::Optimal {
            objective
        } else {
            remaining_bound.max(incumbent)
        },
    })
}

fn tie_keep_tol(value: f64) -> f64 {
    1e-9 * (1.0 + value.abs())
}
