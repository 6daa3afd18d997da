mod common;

use approx::assert_abs_diff_eq;
use common::*;
use kwgauss::circuit::{simulate, simulate_observed, SparseState};
use kwgauss::kw1d::{self, Kw1dConfig};
use kwgauss::reference_math::*;
use kwgauss::Error;

#[test]
fn angle_circuits_are_bit_exact() {
    for sigma_j in [1.0, 0.8, 0.5, 0.3, 0.25, 0.15, 0.1] {
        for b in [2, 3, 4, 6] {
            for j in 1..=5 {
                check_angle_circuit(sigma_j, b, j).unwrap();
            }
        }
    }
}

#[test]
fn angle_examples() {
    // At b=4 a broad level needs no arithmetic and a narrower one is
    // piecewise.
    assert_eq!(check_angle_circuit(0.8, 4, 2).unwrap(), None);
    assert_eq!(check_angle_circuit(0.3, 4, 2).unwrap().map(|r| r.0), Some(Regime::Intermediate));
    assert_eq!(check_angle_circuit(0.6, 4, 3).unwrap().map(|r| r.0), Some(Regime::Hi));
}

#[test]
fn end_to_end_matches_quantised_recursion() {
    for sigma in [0.02, 0.3, 1.0, 2.0, 4.0] {
        for k in 1..=4 {
            for b in [2, 4, 6] {
                let o = check_kw1d(sigma, k, b).unwrap();
                assert!(o.max_diff <= 1e-9, "sigma={sigma} k={k} b={b}: {}", o.max_diff);
                assert!(o.work_weight <= 1e-18, "sigma={sigma} k={k} b={b}: {}", o.work_weight);
            }
        }
    }
}

#[test]
fn single_qubit_is_balanced() {
    let o = check_kw1d(1.0, 1, 4).unwrap();
    assert!(o.max_diff < 1e-9);
    let cfg = Kw1dConfig::symmetric(1.0, 1, 4).unwrap();
    let built = kw1d::build_kw1d(&cfg).unwrap();
    let out = simulate(&built.circuit, &SparseState::zero(built.circuit.qubit_count()).unwrap()).unwrap();
    let (s, _) = out.project_low(1).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert_abs_diff_eq!(s.amplitudes[0].re, h, epsilon = 1e-12);
    assert_abs_diff_eq!(s.amplitudes[1].re, h, epsilon = 1e-12);
}

#[test]
fn narrow_gaussian_uses_square_waves() {
    let cfg = Kw1dConfig::symmetric(0.02, 4, 4).unwrap();
    let built = kw1d::build_kw1d(&cfg).unwrap();
    assert_eq!(built.total_cnots(), 3);
    for l in &built.levels[1..] {
        assert_eq!(l.regime(), Regime::SquareWave);
        assert_eq!(l.angle_cnots, 1);
    }
}

#[test]
fn wide_gaussian_levels_are_constant() {
    let cfg = Kw1dConfig::symmetric(1e4, 3, 4).unwrap();
    let built = kw1d::build_kw1d(&cfg).unwrap();
    assert_eq!(built.total_cnots(), 0);
    assert!(built.levels.iter().skip(1).all(|l| l.regime() == Regime::Constant));
}

#[test]
fn support_stays_small() {
    // Every intermediate state is a superposition over the prefix qubits
    // only; work registers hold functions of the prefix.
    let cfg = Kw1dConfig::symmetric(2.0, 4, 4).unwrap();
    let built = kw1d::build_kw1d(&cfg).unwrap();
    let mut widest = 0;
    simulate_observed(&built.circuit, &SparseState::zero(built.circuit.qubit_count()).unwrap(), |_, s| {
        widest = widest.max(s.support());
    })
    .unwrap();
    assert!(widest <= 2 << 4, "support reached {widest}");
}

#[test]
fn mu_other_than_minus_half_is_rejected() {
    let spec = GaussianSpec1D::new(0.1, 1.0).unwrap();
    let cfg = Kw1dConfig::new(spec, 3, 4, Thresholds::default()).unwrap();
    assert!(matches!(kw1d::build_kw1d(&cfg), Err(Error::Unsupported(_))));
}

#[test]
fn bad_widths_are_rejected() {
    assert!(Kw1dConfig::symmetric(1.0, 0, 4).is_err());
    assert!(Kw1dConfig::symmetric(1.0, 3, 0).is_err());
}

#[test]
fn infidelity_falls_with_angle_bits() {
    let spec = GaussianSpec1D::symmetric(2.0).unwrap();
    let exact = exact_xi_state(spec, 4).unwrap();
    let inf: Vec<f64> =
        (2..=8).map(|b| 1.0 - fidelity(&recursive_xi_state(spec, 4, Some(b)).unwrap(), &exact).unwrap()).collect();
    for w in inf.windows(2) {
        assert!(w[1] < w[0], "{inf:?}");
    }
    let ratio = (inf[0] / inf[inf.len() - 1]).powf(1.0 / (inf.len() - 1) as f64);
    assert!(ratio >= 1.5 * 0.7, "geometric ratio {ratio}");
}

#[test]
fn hi_levels_within_bound() {
    for (sigma, k, b) in [(1.0, 4, 6), (2.0, 5, 8), (4.0, 5, 6)] {
        let built = kw1d::build_kw1d(&Kw1dConfig::symmetric(sigma, k, b).unwrap()).unwrap();
        for l in built.levels.iter().filter(|l| l.regime() == Regime::Hi) {
            let bound = l.cnot_bound.unwrap();
            assert!((l.angle_cnots as i64) <= bound, "level {}: {} > {bound}", l.j, l.angle_cnots);
        }
    }
}

#[test]
fn rotation_targets_the_state_qubit() {
    let g = kw1d::apply_rotation(&[3, 4], 0);
    assert_eq!(g.len(), 2);
    assert_eq!(kw1d::build_square_wave(2, &[0, 1, 2]).unwrap().len(), 1);
    assert!(kw1d::build_square_wave(0, &[0]).is_err());
}
