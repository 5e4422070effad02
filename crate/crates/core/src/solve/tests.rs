use super::*;
use crate::fixtures;
use crate::reform::{build_duality_milp, build_kkt_milp, compute_big_m};

fn opts() -> AdOptions {
    AdOptions { jobs: 1, ..AdOptions::default() }
}

#[test]
fn plan_order_is_set_lexicographic() {
    let plans = plans_upto(&[0, 1, 2], 2);
    let expect: Vec<Vec<usize>> = vec![
        vec![],
        vec![0],
        vec![0, 1],
        vec![0, 2],
        vec![1],
        vec![1, 2],
        vec![2],
    ];
    assert_eq!(plans, expect);
    assert_eq!(count_plans(3, 2), 7);
    assert_eq!(count_plans(30, 3), 1 + 30 + 435 + 4060);
}

#[test]
fn oracle_confirms_hand_values() {
    let inst = fixtures::tiny2x2();
    // k = 0: only the empty plan.
    let r = enumerate_attacks(&inst, 0, &opts()).unwrap();
    assert_eq!(r.per_plan.len(), 1);
    let (plan, cost) = r.worst.clone().unwrap();
    assert!(plan.support().is_empty());
    assert!((cost - 2.0).abs() < 1e-9);

    // k = 1: three plans, worst 46.2, lex tie resolves to node 0.
    let r = enumerate_attacks(&inst, 1, &opts()).unwrap();
    assert_eq!(r.per_plan.len(), 3);
    let (plan, cost) = r.worst.clone().unwrap();
    assert_eq!(plan.support(), vec![0]);
    assert!((cost - 46.2).abs() < 1e-9, "cost {cost}");
    assert!(r.outright_sizes.is_empty());

    // k = 2: the two-node attack is defense-infeasible, worst stays 46.2,
    // and size 2 is flagged outright.
    let r = enumerate_attacks(&inst, 2, &opts()).unwrap();
    let (_, cost) = r.worst.clone().unwrap();
    assert!((cost - 46.2).abs() < 1e-9);
    assert_eq!(r.outright_sizes, vec![2]);
    let two = r
        .per_plan
        .iter()
        .find(|(s, _)| s.len() == 2)
        .map(|(_, o)| *o)
        .unwrap();
    assert_eq!(two, PlanOutcome::Infeasible);
}

#[test]
fn oracle_beta_variant() {
    let mut inst = fixtures::tiny2x2();
    inst.beta = 0.2;
    let r = enumerate_attacks(&inst, 1, &opts()).unwrap();
    let (_, cost) = r.worst.clone().unwrap();
    assert!((cost - 46.4).abs() < 1e-9, "cost {cost}");
}

#[test]
fn enumeration_cap_refuses() {
    let inst = fixtures::tiny2x2();
    let mut o = opts();
    o.enum_cap = 2;
    assert!(matches!(
        enumerate_attacks(&inst, 1, &o),
        Err(SolveError::EnumerationCap { .. })
    ));
}

#[test]
fn verify_solution_accepts_truth_rejects_lies() {
    let inst = fixtures::tiny2x2();
    let plan = AttackPlan::from_support(2, &[0], 1);
    let v = verify_solution(&inst, &plan, 46.2).unwrap();
    assert!(v.ok);
    let v = verify_solution(&inst, &plan, 45.0).unwrap();
    assert!(!v.ok);
    assert!((v.resolved_cost - 46.2).abs() < 1e-9);
    let plan0 = AttackPlan::none(2);
    assert!(verify_solution(&inst, &plan0, 2.0).unwrap().ok);
}

#[test]
fn duality_milp_matches_oracle_on_tiny() {
    let inst = fixtures::tiny2x2();
    let bigm = compute_big_m(&inst);
    let f = build_duality_milp(&inst, 1, &bigm).unwrap();
    let sol = solve_milp(&f, &MilpOptions::default()).unwrap();
    assert_eq!(sol.status, MilpStatus::Optimal);
    assert!((sol.objective - 46.2).abs() < 1e-6, "objective {}", sol.objective);
    let support = f.z_support(&sol.assignment);
    assert_eq!(support.len(), 1);

    // Budget zero reduces to the defender optimum.
    let f0 = build_duality_milp(&inst, 0, &bigm).unwrap();
    let sol0 = solve_milp(&f0, &MilpOptions::default()).unwrap();
    assert!((sol0.objective - 2.0).abs() < 1e-6);
}

#[test]
fn kkt_milp_matches_oracle_on_tiny() {
    let inst = fixtures::tiny2x2();
    let bigm = compute_big_m(&inst);
    let f = build_kkt_milp(&inst, 1, &bigm).unwrap();
    let sol = solve_milp(&f, &MilpOptions::default()).unwrap();
    assert_eq!(sol.status, MilpStatus::Optimal);
    assert!((sol.objective - 46.2).abs() < 1e-6, "objective {}", sol.objective);

    let f0 = build_kkt_milp(&inst, 0, &bigm).unwrap();
    let sol0 = solve_milp(&f0, &MilpOptions::default()).unwrap();
    assert!((sol0.objective - 2.0).abs() < 1e-6, "objective {}", sol0.objective);
}

#[test]
fn beta_variant_cross_method() {
    let mut inst = fixtures::tiny2x2();
    inst.beta = 0.2;
    for method in [Method::Duality, Method::Kkt, Method::Enum] {
        let sol = solve_attacker_defender(&inst, 1, method, &opts()).unwrap();
        assert!(
            (sol.worst_cost - 46.4).abs() < 1e-6,
            "{method:?}: {}",
            sol.worst_cost
        );
        assert!(sol.verified);
    }
}

#[test]
fn attacker_defender_tie_rule_all_methods() {
    let inst = fixtures::tiny2x2();
    for method in [Method::Duality, Method::Kkt, Method::Enum] {
        let sol = solve_attacker_defender(&inst, 1, method, &opts()).unwrap();
        assert!((sol.worst_cost - 46.2).abs() < 1e-6);
        assert_eq!(sol.critical_set, vec![0], "{method:?} support");
        assert!(sol.verified);
    }
}

#[test]
fn milp_methods_refuse_at_screen_failure() {
    let inst = fixtures::tiny2x2();
    for method in [Method::Duality, Method::Kkt] {
        match solve_attacker_defender(&inst, 2, method, &opts()) {
            Err(SolveError::Reform(crate::reform::ReformError::FeasibilityScreen { k: 2, .. })) => {}
            other => panic!("expected screen refusal, got {other:?}"),
        }
    }
    // Enumeration reports the attacker winning outright instead.
    match solve_attacker_defender(&inst, 2, Method::Enum, &opts()) {
        Err(SolveError::AttackerWinsOutright { size: 2 }) => {}
        other => panic!("expected outright win, got {other:?}"),
    }
}

#[test]
fn pure_lp_formulation_solves_in_one_node() {
    let inst = fixtures::tiny2x2();
    let bigm = compute_big_m(&inst);
    let mut f = build_duality_milp(&inst, 1, &bigm).unwrap();
    // Pin every binary by bounds: the root LP is integral.
    for &zc in &f.z_cols.clone() {
        f.lower[zc] = 0.0;
        f.upper[zc] = 0.0;
    }
    let sol = solve_milp(&f, &MilpOptions::default()).unwrap();
    assert_eq!(sol.nodes, 1);
    assert!((sol.objective - 2.0).abs() < 1e-6);
}

#[test]
fn node_limit_returns_budget_exceeded() {
    let inst = fixtures::random_small(3, fixtures::SmallSampler::default());
    let report = crate::model::validate_instance(&inst);
    if !report.screen_passes(1) {
        return; // sampler occasionally too tight for this ad-hoc check
    }
    let bigm = compute_big_m(&inst);
    let f = build_kkt_milp(&inst, 1, &bigm).unwrap();
    let o = MilpOptions { node_limit: 1, ..MilpOptions::default() };
    let sol = solve_milp(&f, &o).unwrap();
    assert_eq!(sol.status, MilpStatus::BudgetExceeded);
    assert!(sol.best_bound.is_finite());
}

/// Cross-method agreement on a batch of random small instances (the heavy
/// 100-seed version lives in the acceptance suite).
#[test]
fn cross_method_agreement_small_batch() {
    let mut checked = 0;
    for seed in 0..12u64 {
        let inst = fixtures::random_small(seed, fixtures::SmallSampler::default());
        let report = crate::model::validate_instance(&inst);
        for k in 0..=2usize {
            if !report.screen_passes(k) {
                continue;
            }
            let oracle = solve_attacker_defender(&inst, k, Method::Enum, &opts());
            let oracle = match oracle {
                Ok(s) => s,
                Err(SolveError::AttackerWinsOutright { .. }) => continue,
                Err(e) => panic!("oracle failed: {e}"),
            };
            let dual = solve_attacker_defender(&inst, k, Method::Duality, &opts()).unwrap();
            let rel = (dual.worst_cost - oracle.worst_cost).abs() / (1.0 + oracle.worst_cost.abs());
            assert!(rel <= 1e-6, "seed {seed} k {k}: dual {} vs oracle {}", dual.worst_cost, oracle.worst_cost);
            assert_eq!(dual.critical_set, oracle.critical_set, "seed {seed} k {k}");
            checked += 1;
        }
    }
    assert!(checked >= 10, "only {checked} comparisons ran");
}

#[test]
fn worst_cost_monotone_in_budget() {
    let inst = fixtures::random_small(7, fixtures::SmallSampler::default());
    let report = crate::model::validate_instance(&inst);
    let mut last = f64::NEG_INFINITY;
    for k in 0..=3usize {
        if !report.screen_passes(k) {
            break;
        }
        match solve_attacker_defender(&inst, k, Method::Enum, &opts()) {
            Ok(sol) => {
                assert!(sol.worst_cost >= last - 1e-9, "k {k}: {} < {last}", sol.worst_cost);
                last = sol.worst_cost;
            }
            Err(SolveError::AttackerWinsOutright { .. }) => break,
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn protection_dominance_by_restricted_enumeration() {
    let inst = fixtures::random_small(11, fixtures::SmallSampler::default());
    let report = crate::model::validate_instance(&inst);
    if !report.screen_passes(1) {
        return;
    }
    let unrestricted = enumerate_attacks(&inst, 1, &opts()).unwrap();
    let worst_all = unrestricted.worst_cost().unwrap();
    // Protect the oracle's critical node; the attacker now picks from the rest.
    let (plan, _) = unrestricted.worst.clone().unwrap();
    let protected = plan.support();
    let ground: Vec<usize> = (0..inst.n).filter(|j| !protected.contains(j)).collect();
    let restricted = enumerate_attacks_on(&inst, &ground, 1, &opts()).unwrap();
    let worst_restricted = restricted.worst_cost().unwrap();
    assert!(worst_restricted <= worst_all + 1e-9);
}
