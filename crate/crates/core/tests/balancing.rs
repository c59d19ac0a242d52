use beamadapt::balancing::{
    downlink_sinr, mmse_filters, recover_downlink, solve_balancing, uplink_sinr, BalancingOptions,
};
use beamadapt::numerics::{ComplexMatrix, RandomStream};
use beamadapt::{ChannelInstance, Error};
use num_complex::Complex;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn random_instance(m: usize, k: usize, seed: u64, power: f64) -> ChannelInstance {
    let mut rng = RandomStream::new(seed, 0);
    let h = ComplexMatrix::from_fn(k, m, |_, _| rng.complex_normal());
    let sigma2 = (0..k).map(|_| 0.5 + rng.uniform()).collect();
    ChannelInstance::new(h, sigma2, power).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn solve(inst: &ChannelInstance) -> (beamadapt::UplinkAllocation, beamadapt::DownlinkSolution) {
    solve_balancing(inst, &BalancingOptions::default()).unwrap()
}

#[test]
fn downlink_single_user() {
    let h = ComplexMatrix::from_vec(1, 2, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let inst = ChannelInstance::new(h, vec![1.0], 10.0).unwrap();
    let w = ComplexMatrix::from_vec(2, 1, vec![c(10f64.sqrt(), 0.0), c(0.0, 0.0)]).unwrap();
    let s = downlink_sinr(&inst, &w).unwrap();
    assert!((s[0] - 10.0).abs() < 1e-12);
}

#[test]
fn downlink_orthogonal_pair() {
    let inst = ChannelInstance::new(ComplexMatrix::identity(2), vec![1.0, 1.0], 10.0).unwrap();
    let w = ComplexMatrix::from_fn(2, 2, |r, col| if r == col { c(5f64.sqrt(), 0.0) } else { c(0.0, 0.0) });
    let s = downlink_sinr(&inst, &w).unwrap();
    assert!((s[0] - 5.0).abs() < 1e-12 && (s[1] - 5.0).abs() < 1e-12);
}

#[test]
fn sinr_dimension_mismatch() {
    let inst = random_instance(3, 2, 1, 1.0);
    let w = ComplexMatrix::zeros(2, 2);
    assert!(matches!(downlink_sinr(&inst, &w), Err(Error::DimensionMismatch(_))));
    assert!(matches!(uplink_sinr(&inst, &[1.0], &ComplexMatrix::zeros(3, 2)), Err(Error::DimensionMismatch(_))));
}

#[test]
fn sinr_matches_direct_recomputation() {
    let inst = random_instance(4, 3, 11, 5.0);
    let mut rng = RandomStream::new(12, 0);
    let w = ComplexMatrix::from_fn(4, 3, |_, _| rng.complex_normal());
    let got = downlink_sinr(&inst, &w).unwrap();
    let q = [1.0, 2.0, 0.5];
    let up = uplink_sinr(&inst, &q, &w).unwrap();
    // hᴴw written out elementwise from the column-vector channel.
    let dot = |user: usize, beam: usize| -> f64 {
        let h = inst.user_channel(user);
        let mut acc = c(0.0, 0.0);
        for a in 0..4 {
            acc += h[a].conj() * w[(a, beam)];
        }
        acc.norm_sqr()
    };
    for k in 0..3 {
        let mut interf = 0.0;
        let mut up_interf = 0.0;
        for j in 0..3 {
            if j != k {
                interf += dot(k, j);
                up_interf += q[j] * dot(j, k);
            }
        }
        assert!(rel(got[k], dot(k, k) / (interf + inst.sigma2[k])) < 1e-12);
        assert!(rel(up[k], q[k] * dot(k, k) / (up_interf + inst.sigma2[k])) < 1e-12);
    }
}

#[test]
fn uplink_single_user_matched_filter() {
    let inst = random_instance(3, 1, 5, 2.0);
    let h = inst.user_channel(0);
    let n: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let w = ComplexMatrix::from_vec(3, 1, h.iter().map(|z| *z / n.sqrt()).collect()).unwrap();
    let s = uplink_sinr(&inst, &[2.0], &w).unwrap();
    assert!(rel(s[0], 2.0 * n / inst.sigma2[0]) < 1e-12);
}

#[test]
fn uplink_symmetric_orthogonal() {
    let inst = ChannelInstance::new(ComplexMatrix::identity(2), vec![1.0, 1.0], 4.0).unwrap();
    let s = uplink_sinr(&inst, &[2.0, 2.0], &ComplexMatrix::identity(2)).unwrap();
    assert_eq!(s[0], s[1]);
}

#[test]
fn mmse_zero_power_is_matched_filter() {
    let inst = random_instance(3, 3, 21, 1.0);
    let w = mmse_filters(&inst, &[0.0; 3]).unwrap();
    for k in 0..3 {
        let h = inst.user_channel(k);
        let n = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for a in 0..3 {
            assert!((w[(a, k)] - h[a] / n).norm() < 1e-12);
        }
    }
}

#[test]
fn mmse_columns_unit_norm_and_single_user() {
    let inst = random_instance(4, 1, 22, 1.0);
    let w = mmse_filters(&inst, &[3.7]).unwrap();
    let h = inst.user_channel(0);
    let n = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for a in 0..4 {
        assert!((w[(a, 0)] - h[a] / n).norm() < 1e-12);
    }
    let inst = random_instance(4, 3, 23, 1.0);
    let w = mmse_filters(&inst, &[0.2, 1.0, 3.0]).unwrap();
    for k in 0..3 {
        let n: f64 = w.column(k).iter().map(|z| z.norm_sqr()).sum();
        assert!((n.sqrt() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn mmse_beats_random_directions() {
    let inst = random_instance(2, 2, 31, 1.0);
    let q = [0.7, 1.3];
    let w = mmse_filters(&inst, &q).unwrap();
    let best = uplink_sinr(&inst, &q, &w).unwrap();
    let mut rng = RandomStream::new(32, 0);
    let mut found = [0.0f64; 2];
    for _ in 0..20_000 {
        let cand = ComplexMatrix::from_fn(2, 2, |_, _| rng.complex_normal());
        let mut unit = cand.clone();
        for k in 0..2 {
            let n = cand.column(k).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            unit.set_column(k, &cand.column(k).iter().map(|z| z / n).collect::<Vec<_>>());
        }
        let s = uplink_sinr(&inst, &q, &unit).unwrap();
        for k in 0..2 {
            assert!(s[k] <= best[k] * (1.0 + 1e-9));
            found[k] = found[k].max(s[k]);
        }
    }
    for k in 0..2 {
        assert!(found[k] > 0.99 * best[k]);
    }
}

#[test]
fn single_user_full_power() {
    let inst = random_instance(3, 1, 41, 7.0);
    let (up, down) = solve(&inst);
    let n: f64 = inst.user_channel(0).iter().map(|z| z.norm_sqr()).sum();
    assert!(rel(up.q[0], 7.0) < 1e-12);
    assert!(rel(up.balanced_sinr, 7.0 * n / inst.sigma2[0]) < 1e-9);
    assert!(rel(down.p[0], 7.0) < 1e-12);
}

#[test]
fn symmetric_orthogonal_pair() {
    let h = ComplexMatrix::from_fn(2, 2, |r, col| if r == col { c(2.0, 0.0) } else { c(0.0, 0.0) });
    let inst = ChannelInstance::new(h, vec![0.5, 0.5], 10.0).unwrap();
    let (up, _) = solve(&inst);
    assert!(rel(up.q[0], 5.0) < 1e-10 && rel(up.q[1], 5.0) < 1e-10);
    assert!(rel(up.balanced_sinr, 5.0 * 4.0 / 0.5) < 1e-9);
}

#[test]
fn zero_row_is_degenerate() {
    let mut inst = random_instance(2, 2, 3, 1.0);
    inst.h.row_mut(1).fill(c(0.0, 0.0));
    assert!(matches!(solve_balancing(&inst, &BalancingOptions::default()), Err(Error::DegenerateInstance(1))));
}

/// Best common SINR reachable with filters held fixed, by bisection on the
/// level: the level is feasible iff the linear system for equal SINRs has a
/// nonnegative solution within the power budget.
fn fixed_filter_level(inst: &ChannelInstance, w: &ComplexMatrix<f64>) -> f64 {
    let g = |j: usize, k: usize| -> f64 {
        let h = inst.user_channel(j);
        (0..2).fold(c(0.0, 0.0), |acc, a| acc + h[a].conj() * w[(a, k)]).norm_sqr()
    };
    let (g00, g11, g10, g01) = (g(0, 0), g(1, 1), g(1, 0), g(0, 1));
    let (s0, s1) = (inst.sigma2[0], inst.sigma2[1]);
    let feasible = |level: f64| -> bool {
        // q0 g00 = level (q1 g10 + s0); q1 g11 = level (q0 g01 + s1)
        let a = [[g00, -level * g10], [-level * g01, g11]];
        let b = [level * s0, level * s1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det <= 0.0 {
            return false;
        }
        let q0 = (b[0] * a[1][1] - a[0][1] * b[1]) / det;
        let q1 = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
        q0 >= 0.0 && q1 >= 0.0 && q0 + q1 <= inst.power
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while feasible(hi) {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[test]
fn grid_search_oracle_two_users() {
    for seed in [101, 202, 303] {
        let inst = random_instance(2, 2, seed, 10.0).noise_normalized();
        let (up, _) = solve(&inst);
        let mut best = 0.0f64;
        for i in 0..=1000 {
            let t = inst.power * i as f64 / 1000.0;
            let w = mmse_filters(&inst, &[t, inst.power - t]).unwrap();
            best = best.max(fixed_filter_level(&inst, &w));
        }
        assert!(rel(up.balanced_sinr, best) < 1e-3, "seed {seed}: solver {} grid {best}", up.balanced_sinr);
        assert!(best <= up.balanced_sinr * (1.0 + 1e-9));
    }
}

#[test]
fn duality_and_perturbation() {
    let inst = random_instance(4, 4, 55, 10.0);
    let (up, down) = solve(&inst);
    let again = recover_downlink(&inst, &up.q).unwrap();
    assert!(rel(again.min_sinr(), up.balanced_sinr) < 1e-4);
    assert!(rel(down.min_sinr(), up.balanced_sinr) < 1e-4);
    let mut rng = RandomStream::new(56, 0);
    for _ in 0..10 {
        let q: Vec<f64> = up.q.iter().map(|x| x * (1.0 + 0.1 * (rng.uniform() - 0.5))).collect();
        let d = recover_downlink(&inst, &q).unwrap();
        assert!(rel(d.total_power(), inst.power) < 1e-8);
        assert!(d.min_sinr() <= up.balanced_sinr * (1.0 + 1e-6));
    }
}

#[test]
fn generic_over_f32() {
    let inst = random_instance(3, 2, 77, 4.0);
    let (up64, _) = solve(&inst);
    let inst32 = inst.cast::<f32>();
    let (up32, _) = solve_balancing(&inst32, &BalancingOptions::default()).unwrap();
    assert!(rel(up32.balanced_sinr as f64, up64.balanced_sinr) < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solver_invariants(seed in 0u64..1_000_000, m in 2usize..5, k in 1usize..5, p_db in -10.0f64..30.0) {
        let k = k.min(m);
        let power = 10f64.powf(p_db / 10.0);
        let inst = random_instance(m, k, seed, power);
        let (up, down) = solve(&inst);

        let q_sum: f64 = up.q.iter().sum();
        prop_assert!(up.q.iter().all(|x| *x >= 0.0));
        prop_assert!(rel(q_sum, power) < 1e-8);
        prop_assert!(rel(down.total_power(), power) < 1e-8);
        for col in 0..k {
            let n: f64 = down.w_normalized.column(col).iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((n.sqrt() - 1.0).abs() < 1e-10);
        }
        let lo = down.min_sinr();
        let hi = down.sinr.iter().copied().fold(0.0, f64::max);
        prop_assert!(lo > 0.0);
        prop_assert!(hi - lo <= 1e-4 * lo);
        prop_assert!(rel(lo, up.balanced_sinr) <= 1e-4);

        // Recovering from the stored label reproduces the optimum.
        let fractions: Vec<f64> = up.q.iter().map(|x| x / power).collect();
        let q_back: Vec<f64> = fractions.iter().map(|f| f * power).collect();
        prop_assert!(rel(recover_downlink(&inst, &q_back).unwrap().min_sinr(), up.balanced_sinr) <= 1e-4);
    }

    #[test]
    fn more_power_never_hurts(seed in 0u64..1_000_000, scale in 1.01f64..10.0) {
        let inst = random_instance(3, 3, seed, 1.0);
        let mut bigger = inst.clone();
        bigger.power *= scale;
        prop_assert!(solve(&bigger).0.balanced_sinr >= solve(&inst).0.balanced_sinr * (1.0 - 1e-9));
    }

    #[test]
    fn scale_invariance(seed in 0u64..1_000_000, s in 0.01f64..100.0) {
        let inst = random_instance(3, 3, seed, 2.0);
        let mut scaled = inst.clone();
        for z in scaled.h.as_mut_slice() {
            *z *= s;
        }
        for v in &mut scaled.sigma2 {
            *v *= s * s;
        }
        let mut rng = RandomStream::new(seed ^ 1, 0);
        let w = ComplexMatrix::from_fn(3, 3, |_, _| rng.complex_normal());
        let a = downlink_sinr(&inst, &w).unwrap();
        let b = downlink_sinr(&scaled, &w).unwrap();
        for i in 0..3 {
            prop_assert!(rel(b[i], a[i]) < 1e-10);
        }
        let ua = uplink_sinr(&inst, &[0.3, 1.0, 0.7], &w).unwrap();
        let ub = uplink_sinr(&scaled, &[0.3, 1.0, 0.7], &w).unwrap();
        for i in 0..3 {
            prop_assert!(rel(ub[i], ua[i]) < 1e-10);
        }
        prop_assert!(rel(solve(&scaled).0.balanced_sinr, solve(&inst).0.balanced_sinr) < 1e-10);
    }
}
