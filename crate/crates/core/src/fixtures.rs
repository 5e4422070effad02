//! Small hand-checkable instances and seeded random instance samplers used
//! throughout the test suites.

use crate::model::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two areas, two nodes, symmetric: demands (10, 10), capacities (10, 10),
/// delays [[1, 2], [2, 1]] ms, full eligibility, phi = 5, gamma = 0.1,
/// theta = 0.8, beta = 1.0.
///
/// Ground truth (hand LP, confirmed by the enumeration oracle): defender
/// optimum 2.0; destroying either node yields 46.2 (with q = (8, 2) under
/// beta = 1.0, or 46.4 with q = (6, 4) under beta = 0.2); destroying both
/// is defense-infeasible at theta = 0.8.
pub fn tiny2x2() -> Instance {
    Instance {
        m: 2,
        n: 2,
        lambda: vec![10.0, 10.0],
        c: vec![10.0, 10.0],
        phi: vec![5.0, 5.0],
        d: vec![vec![1.0, 2.0], vec![2.0, 1.0]],
        a: vec![vec![1, 1], vec![1, 1]],
        gamma: 0.1,
        theta: 0.8,
        beta: 1.0,
        meta: None,
    }
}

/// Options for [`random_small`].
#[derive(Debug, Clone, Copy)]
pub struct SmallSampler {
    pub m_range: (usize, usize),
    pub n_range: (usize, usize),
    /// When true every pair is eligible, which makes the capacity screen an
    /// exact feasibility test.
    pub dense_eligibility: bool,
}

impl Default for SmallSampler {
    fn default() -> Self {
        SmallSampler {
            m_range: (2, 6),
            n_range: (2, 8),
            dense_eligibility: true,
        }
    }
}

/// Seeded random small instance with generous capacities; used by the
/// cross-method equivalence and monotonicity suites.
pub fn random_small(seed: u64, opts: SmallSampler) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(opts.m_range.0..=opts.m_range.1);
    let n = rng.gen_range(opts.n_range.0..=opts.n_range.1);
    let lambda: Vec<f64> = (0..m).map(|_| rng.gen_range(5.0..30.0)).collect();
    let caps = [8.0, 16.0, 32.0, 64.0];
    let c: Vec<f64> = (0..n).map(|_| caps[rng.gen_range(0..caps.len())]).collect();
    let phi: Vec<f64> = (0..m).map(|_| rng.gen_range(1.0..8.0)).collect();
    let d: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.gen_range(1.0..15.0)).collect())
        .collect();
    let a: Vec<Vec<u8>> = if opts.dense_eligibility {
        vec![vec![1; n]; m]
    } else {
        // Sparse but never empty: each area keeps its lowest-delay node.
        (0..m)
            .map(|i| {
                let mut row: Vec<u8> = (0..n).map(|_| rng.gen_bool(0.6) as u8).collect();
                let best = (0..n)
                    .min_by(|&x, &y| d[i][x].partial_cmp(&d[i][y]).unwrap())
                    .unwrap();
                row[best] = 1;
                row
            })
            .collect()
    };
    Instance {
        m,
        n,
        lambda,
        c,
        phi,
        d,
        a,
        gamma: rng.gen_range(0.05..0.9),
        theta: rng.gen_range(0.4..1.0),
        beta: rng.gen_range(0.1..1.0),
        meta: None,
    }
}
