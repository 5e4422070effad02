use super::*;

fn solve(p: &LpProblem) -> LpSolution {
    solve_lp(p).expect("solver error")
}

#[test]
fn single_constraint_dual_is_one() {
    // min -x s.t. x <= 5, x >= 0
    let mut p = LpProblem::new(1);
    p.objective[0] = -1.0;
    p.add_row(Sense::Le, 5.0, vec![(0, 1.0)]);
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.x[0] - 5.0).abs() < 1e-9);
    assert!((s.objective + 5.0).abs() < 1e-9);
    assert!((s.duals[0] - 1.0).abs() < 1e-9);
}

#[test]
fn equality_needs_phase_one() {
    // min x + 2y s.t. x + y = 4, x <= 3
    let mut p = LpProblem::new(2);
    p.objective = vec![1.0, 2.0];
    p.add_row(Sense::Eq, 4.0, vec![(0, 1.0), (1, 1.0)]);
    p.add_row(Sense::Le, 3.0, vec![(0, 1.0)]);
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.x[0] - 3.0).abs() < 1e-8);
    assert!((s.x[1] - 1.0).abs() < 1e-8);
    assert!((s.objective - 5.0).abs() < 1e-8);
}

#[test]
fn infeasible_reports_rows() {
    // x >= 3 and x <= 1
    let mut p = LpProblem::new(1);
    p.add_row(Sense::Ge, 3.0, vec![(0, 1.0)]);
    p.add_row(Sense::Le, 1.0, vec![(0, 1.0)]);
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Infeasible);
    assert!(!s.infeasible_rows.is_empty());
}

#[test]
fn unbounded_has_ray() {
    // min -x, x >= 0, no cap
    let mut p = LpProblem::new(2);
    p.objective = vec![-1.0, 0.0];
    p.add_row(Sense::Le, 10.0, vec![(1, 1.0)]);
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Unbounded);
    assert!(s.ray.iter().any(|&(j, v)| j == 0 && v > 0.0));
}

#[test]
fn beale_cycling_example_terminates() {
    // Classic degenerate cycling LP; must finish Optimal at -0.05.
    let mut p = LpProblem::new(4);
    p.objective = vec![-0.75, 150.0, -0.02, 6.0];
    p.add_row(Sense::Le, 0.0, vec![(0, 0.25), (1, -60.0), (2, -1.0 / 25.0), (3, 9.0)]);
    p.add_row(Sense::Le, 0.0, vec![(0, 0.5), (1, -90.0), (2, -1.0 / 50.0), (3, 3.0)]);
    p.add_row(Sense::Le, 1.0, vec![(2, 1.0)]);
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 0.05).abs() < 1e-9, "objective {}", s.objective);
    assert!((s.x[0] - 0.04).abs() < 1e-9);
    assert!((s.x[2] - 1.0).abs() < 1e-9);
}

#[test]
fn free_variable_and_upper_bounds() {
    // min y - 1.5x with y free, x in [1, 2]; y >= x - 1 (i.e. x - y <= 1).
    // Unique optimum at x = 2, y = 1 with value -2.
    let mut p = LpProblem::new(2);
    p.objective = vec![-1.5, 1.0];
    p.set_bounds(0, 1.0, 2.0);
    p.set_bounds(1, f64::NEG_INFINITY, f64::INFINITY);
    p.add_row(Sense::Le, 1.0, vec![(0, 1.0), (1, -1.0)]);
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.x[0] - 2.0).abs() < 1e-9);
    assert!((s.x[1] - 1.0).abs() < 1e-9);
    assert!((s.objective + 2.0).abs() < 1e-9);
}

#[test]
fn fixed_variable_respected() {
    let mut p = LpProblem::new(2);
    p.objective = vec![1.0, 1.0];
    p.set_bounds(0, 1.0, 1.0);
    p.add_row(Sense::Ge, 3.0, vec![(0, 1.0), (1, 1.0)]);
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.x[0] - 1.0).abs() < 1e-9);
    assert!((s.x[1] - 2.0).abs() < 1e-9);
}

#[test]
fn duality_gap_zero_at_optimum_and_positive_for_suboptimal_duals() {
    let mut p = LpProblem::new(2);
    p.objective = vec![-3.0, -5.0];
    p.add_row(Sense::Le, 4.0, vec![(0, 1.0)]);
    p.add_row(Sense::Le, 12.0, vec![(1, 2.0)]);
    p.add_row(Sense::Le, 18.0, vec![(0, 3.0), (1, 2.0)]);
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Optimal);
    assert!((s.objective + 36.0).abs() < 1e-9);
    let gap = check_duality_gap(&p, &s).unwrap();
    assert!(gap <= 1e-7 * (1.0 + s.objective.abs()));

    // Feasible primal paired with deliberately weak duals: positive gap.
    let mut weak = s.clone();
    weak.duals = vec![0.0, 0.0, 0.0];
    let gap = check_duality_gap(&p, &weak).unwrap();
    assert!(gap > 1.0);

    // Contract error on non-optimal input.
    let mut bad = s.clone();
    bad.status = LpStatus::Infeasible;
    assert!(check_duality_gap(&p, &bad).is_err());
}

#[test]
fn warm_start_reuses_basis() {
    let mut p = LpProblem::new(3);
    p.objective = vec![-2.0, -3.0, -1.0];
    p.set_bounds(2, 0.0, 1.0);
    p.add_row(Sense::Le, 10.0, vec![(0, 1.0), (1, 2.0), (2, 1.0)]);
    p.add_row(Sense::Le, 8.0, vec![(0, 1.0), (1, 1.0)]);
    let s1 = solve(&p);
    assert_eq!(s1.status, LpStatus::Optimal);

    // Tighten the binary-style column and re-solve from the old basis.
    let mut p2 = p.clone();
    p2.set_bounds(2, 0.0, 0.0);
    let s2 = solve_lp_with(&p2, &LpOptions::default(), Some(&s1.basis)).unwrap();
    assert_eq!(s2.status, LpStatus::Optimal);
    let s2_cold = solve(&p2);
    assert!((s2.objective - s2_cold.objective).abs() < 1e-9);
}

#[test]
fn complementary_slackness_within_tolerance() {
    let mut p = LpProblem::new(3);
    p.objective = vec![2.0, 3.0, 4.0];
    p.add_row(Sense::Ge, 6.0, vec![(0, 1.0), (1, 1.0), (2, 1.0)]);
    p.add_row(Sense::Ge, 4.0, vec![(1, 1.0), (2, 2.0)]);
    let s = solve(&p);
    assert_eq!(s.status, LpStatus::Optimal);
    let cert = certify(&p, &s);
    assert!(cert.ok());
    assert!(cert.compl_slackness <= 1e-7);
    // >= rows in a min problem export non-positive multipliers.
    assert!(s.duals.iter().all(|&y| y <= 1e-12));
}

/// Seeded random feasible LPs: every Optimal solve must certify, and weak
/// duality must hold for the exported multipliers.
#[test]
fn random_lps_certify() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut optimal = 0;
    for _ in 0..60 {
        let n = rng.gen_range(2..7);
        let m = rng.gen_range(1..6);
        let mut p = LpProblem::new(n);
        for j in 0..n {
            p.objective[j] = rng.gen_range(-5.0..5.0);
            p.set_bounds(j, 0.0, rng.gen_range(1.0..10.0));
        }
        // Build rows around a random interior point so feasibility is likely.
        let x0: Vec<f64> = (0..n).map(|j| rng.gen_range(0.0..p.upper[j])).collect();
        for _ in 0..m {
            let mut coeffs: Vec<(usize, f64)> = Vec::new();
            for j in 0..n {
                if rng.gen_bool(0.7) {
                    coeffs.push((j, rng.gen_range(-3.0..3.0)));
                }
            }
            if coeffs.is_empty() {
                continue;
            }
            let act: f64 = coeffs.iter().map(|&(j, v)| v * x0[j]).sum();
            match rng.gen_range(0..3) {
                0 => p.add_row(Sense::Le, act + rng.gen_range(0.0..2.0), coeffs),
                1 => p.add_row(Sense::Ge, act - rng.gen_range(0.0..2.0), coeffs),
                _ => p.add_row(Sense::Eq, act, coeffs),
            };
        }
        let s = solve(&p);
        if s.status == LpStatus::Optimal {
            optimal += 1;
            let cert = certify(&p, &s);
            assert!(
                cert.ok(),
                "certification failed: {:?} on problem {:?}",
                cert,
                p.rows.len()
            );
            // Weak duality: dual objective <= primal objective.
            let dobj = dual_objective(&p, &s.duals);
            assert!(dobj <= s.objective + 1e-6);
        }
    }
    assert!(optimal > 30, "only {optimal} optimal instances");
}

#[test]
fn mps_export_smoke() {
    let mut p = LpProblem::new(2);
    p.objective = vec![1.0, -1.0];
    p.set_bounds(1, 0.0, 1.0);
    p.add_row(Sense::Le, 4.0, vec![(0, 1.0), (1, 2.0)]);
    let mut buf = Vec::new();
    write_mps(&mut buf, "smoke", &p, &[false, true]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.contains("NAME"));
    assert!(text.contains("ENDATA"));
    assert!(text.contains("INTORG"));
}
