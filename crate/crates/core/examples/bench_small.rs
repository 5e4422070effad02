use edgeharden::fixtures;
use edgeharden::model::validate_instance;
use edgeharden::solve::{solve_attacker_defender, AdOptions, Method};
use std::time::Instant;

fn main() {
    let mut total = std::time::Duration::ZERO;
    let mut worst = std::time::Duration::ZERO;
    let mut count = 0;
    for seed in 0..20u64 {
        let inst = fixtures::random_small(seed, fixtures::SmallSampler::default());
        let report = validate_instance(&inst);
        for k in 0..=3usize {
            if !report.screen_passes(k) { continue; }
            let opts = AdOptions::default();
            let t0 = Instant::now();
            let e = solve_attacker_defender(&inst, k, Method::Enum, &opts);
            let te = t0.elapsed();
            let t1 = Instant::now();
            let d = solve_attacker_defender(&inst, k, Method::Duality, &opts);
            let td = t1.elapsed();
            let t2 = Instant::now();
            let kk = solve_attacker_defender(&inst, k, Method::Kkt, &opts);
            let tk = t2.elapsed();
            count += 1;
            total += te + td + tk;
            worst = worst.max(tk);
            let (ec, dc, kc) = (
                e.as_ref().map(|s| s.worst_cost).unwrap_or(f64::NAN),
                d.as_ref().map(|s| s.worst_cost).unwrap_or(f64::NAN),
                kk.as_ref().map(|s| s.worst_cost).unwrap_or(f64::NAN),
            );
            let m = inst.m; let n = inst.n;
            println!("seed {seed} m{m} n{n} k{k}: enum {ec:.6} ({te:?}), dual {dc:.6} ({td:?}), kkt {kc:.6} ({tk:?})");
            if ec.is_finite() && kc.is_finite() {
                assert!((ec-kc).abs() <= 1e-6*(1.0+ec.abs()), "KKT mismatch seed {seed} k {k}");
            }
            if ec.is_finite() && dc.is_finite() {
                assert!((ec-dc).abs() <= 1e-6*(1.0+ec.abs()), "dual mismatch seed {seed} k {k}");
            }
        }
    }
    println!("== {count} solves, total {total:?}, worst single kkt {worst:?}");
}
