use kwgauss::circuit::{simulate, simulate_basis, SparseState};
use kwgauss::reference_math::*;
use kwgauss::shear::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_m(rng: &mut impl Rng, n: usize, span: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => rng.gen_range(-span..span),
        _ => 0.0,
    })
}

/// Widest entry range the multiplier format holds.
fn span(k: u32) -> f64 {
    if k == 1 {
        0.45
    } else {
        (1u32 << (k - 1)) as f64 * 0.9
    }
}

fn plan_for(m: &DMatrix<f64>, k: u32) -> ShearPlan {
    ShearPlan::new(m, k, frac_bits(m.nrows(), k).unwrap().max(1)).unwrap()
}

/// Every basis state through the gates; ancillas must come back clean.
fn gate_matches_oracle(plan: &ShearPlan) {
    let (c, _) = build_shear(plan).unwrap();
    assert_eq!(c.qubit_count(), plan.qubit_count());
    let coords = plan.n * plan.k as usize;
    for idx in 0..1u64 << coords {
        let out = simulate_basis(&c, idx as u128).unwrap();
        assert_eq!(out >> coords, 0, "ancillas dirty for input {idx:#b}");
        assert_eq!(out as u64, oracle_index(plan, idx).unwrap(), "input {idx:#b}");
    }
}

#[test]
fn identity_is_identity() {
    for n in [2, 3] {
        let plan = plan_for(&DMatrix::identity(n, n), 2);
        let (c, report) = build_shear(&plan).unwrap();
        assert_eq!(report.cnot_count, 0);
        for idx in 0..1u64 << (2 * n) {
            assert_eq!(oracle_index(&plan, idx).unwrap(), idx);
            assert_eq!(simulate_basis(&c, idx as u128).unwrap(), idx as u128);
        }
    }
}

#[test]
fn gates_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in [2, 3] {
        for k in [2, 3] {
            for _ in 0..10 {
                gate_matches_oracle(&plan_for(&random_m(&mut rng, n, span(k)), k));
            }
        }
    }
}

#[test]
fn offsets_are_applied_before_rounding() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..4 {
        let plan = plan_for(&random_m(&mut rng, 3, 1.0), 2).with_offsets(vec![0.75, -0.4, 1.5]).unwrap();
        gate_matches_oracle(&plan);
    }
    let plan = plan_for(&DMatrix::identity(2, 2), 3).with_offsets(vec![1.0, -1.0]).unwrap();
    assert_eq!(classical_shear_oracle(&plan, &[0, 0]).unwrap(), vec![1, -1]);
}

#[test]
fn worked_example() {
    let plan = ShearPlan::new(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), 2, 1).unwrap();
    assert_eq!(classical_shear_oracle(&plan, &[1, -2]).unwrap(), vec![0, -2]);
    gate_matches_oracle(&plan);
}

#[test]
fn last_coordinate_is_untouched() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let plan = plan_for(&random_m(&mut rng, 4, 1.5), 3);
    for idx in 0..1u64 << 12 {
        assert_eq!(oracle_index(&plan, idx).unwrap() >> 9, idx >> 9);
    }
}

#[test]
fn counts_within_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ratios = Vec::new();
    for n in 2..=5 {
        for k in 2..=5u32 {
            for _ in 0..5 {
                let plan = plan_for(&random_m(&mut rng, n, 1.0), k);
                let (_, report) = build_shear(&plan).unwrap();
                let bound = shear_cnot_bound(n as u64, k as u64, plan.r as u64);
                assert!(report.cnot_count <= bound, "N={n} k={k}: {} > {bound}", report.cnot_count);
                ratios.push(report.cnot_count as f64 / bound as f64);
            }
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    println!("measured/bound mean {mean:.3}");
    assert!(mean > 0.25 && mean < 0.75, "mean ratio {mean}");
}

#[test]
fn rounding_stays_within_one_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for n in 2..=5usize {
        for k in 1..=4u32 {
            if n as u32 * k > 16 {
                continue;
            }
            for _ in 0..3 {
                let plan = plan_for(&random_m(&mut rng, n, span(k)), k);
                let size = 1i64 << k;
                for idx in 0..1u64 << (n as u32 * k) {
                    let m: Vec<i64> =
                        (0..n).map(|i| signed_coord((idx >> (i as u32 * k)) & (size as u64 - 1), k)).collect();
                    let got = classical_shear_oracle(&plan, &m).unwrap();
                    for (x, g) in exact_shear(&plan, &m).iter().zip(&got) {
                        let d = (x - *g as f64).rem_euclid(size as f64);
                        let d = d.min(size as f64 - d);
                        assert!(d < 1.0, "N={n} k={k} m={m:?}: exact {x} rounded {g}");
                    }
                }
            }
        }
    }
}

#[test]
fn state_fast_path_matches_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let plan = plan_for(&random_m(&mut rng, 2, 2.0), 3);
    let (c, _) = build_shear(&plan).unwrap();
    for _ in 0..5 {
        let s = StateVectorDense::from_real((0..64).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let mut s = s;
        s.normalize();
        let fast = shear_state(&s, &plan).unwrap();
        let sim = simulate(&c, &SparseState::from_dense(&s, c.qubit_count()).unwrap()).unwrap();
        let (slow, outside) = sim.project_low(6).unwrap();
        assert!(outside < 1e-24);
        for (a, b) in fast.amplitudes.iter().zip(&slow.amplitudes) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!((fast.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn bad_plans_are_rejected() {
    assert!(frac_bits(1, 3).is_err());
    let lower = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0]);
    assert!(ShearPlan::new(&lower, 2, 1).is_err());
    assert!(ShearPlan::new(&DMatrix::identity(3, 3), 3, 1).is_err());
    let plan = plan_for(&DMatrix::identity(2, 2), 2);
    assert!(classical_shear_oracle(&plan, &[2, 0]).is_err());
}

#[test]
fn plan_round_trips_through_json() {
    let spec = scalar_field_covariance(3, 1.0, 4.0).unwrap();
    let (plan, _) = ShearPlan::from_covariance(&spec, 3).unwrap();
    let text = serde_json::to_string(&plan).unwrap();
    assert_eq!(serde_json::from_str::<ShearPlan>(&text).unwrap(), plan);
}

proptest! {
    #[test]
    fn oracle_is_a_bijection(n in 2usize..=4, k in 1u32..=4, seed in any::<u64>()) {
        prop_assume!(n as u32 * k <= 12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = plan_for(&random_m(&mut rng, n, span(k)), k);
        let mut seen = vec![false; 1 << (n as u32 * k)];
        for idx in 0..seen.len() as u64 {
            let to = oracle_index(&plan, idx).unwrap() as usize;
            prop_assert!(!seen[to]);
            seen[to] = true;
        }
    }
}

#[test]
fn all_ones_multipliers_within_bound() {
    for n in 2..=4usize {
        for k in 2..=4u32 {
            let r = frac_bits(n, k).unwrap();
            let ulp = -(r as f64).exp2().recip();
            let m = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    1.0
                } else if i < j {
                    ulp
                } else {
                    0.0
                }
            });
            let (_, report) = build_shear(&ShearPlan::new(&m, k, r).unwrap()).unwrap();
            let bound = shear_cnot_bound(n as u64, k as u64, r as u64);
            println!("N={n} k={k} r={r}: {} / {bound}", report.cnot_count);
            assert!(report.cnot_count <= bound);
        }
    }
}
