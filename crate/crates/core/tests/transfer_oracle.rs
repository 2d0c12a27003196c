mod common;

use common::{dense_canonical, dense_entry, dense_transfer};
use num_complex::Complex64;
use proptest::prelude::*;
use qfp_core::specfun::{truncation_order, DEFAULT_TAIL_TOL};
use qfp_core::transfer::{
    build_transfer, computational_submatrix, eq2_transfer, DriveSign, GateParams, ModulatorSpec, ShaperSpec,
};
use std::f64::consts::PI;

#[test]
fn hadamard_block_matches_dense_product() {
    let v = GateParams::HADAMARD.transfer(2).unwrap();
    let (origin, dense) = dense_canonical(6, PI, 0.8283, 30);
    for m in v.output_bins() {
        for n in 0..2 {
            let want = dense_entry(origin, &dense, m, n as i64);
            assert!((v.entry(m, n) - want).norm() < 1e-12, "m={m} n={n}");
        }
    }
    let w = computational_submatrix(&v).unwrap();
    let ratio = w[[0, 1]].norm() / w[[0, 0]].norm();
    assert!((0.999..=1.001).contains(&ratio), "{ratio}");
    assert!((w[[0, 0]].norm() - w[[1, 1]].norm()).abs() < 1e-12);
    assert!((w[[0, 1]].norm() - w[[1, 0]].norm()).abs() < 1e-12);
}

#[test]
fn all_pass_shaper_cancels_the_modulators() {
    let v = GateParams::new(40, 0.0, 0.8283).transfer(2).unwrap();
    let w = computational_submatrix(&v).unwrap();
    assert!((w[[0, 0]].norm() - 1.0).abs() < 1e-10);
    assert!((w[[1, 1]].norm() - 1.0).abs() < 1e-10);
    assert!(w[[0, 1]].norm() < 1e-10 && w[[1, 0]].norm() < 1e-10);
}

#[test]
fn unmodulated_closed_form_is_the_shaper() {
    for m in -3..=3i64 {
        for n in 0..2usize {
            let got = eq2_transfer(6, 1.1, 0.0, 2, m, n).unwrap();
            let want = if m != n as i64 {
                Complex64::new(0.0, 0.0)
            } else if n == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, 1.1)
            };
            assert!((got - want).norm() < 1e-15);
        }
    }
}

#[test]
fn four_channel_column_loses_mass() {
    for n in 0..2 {
        let mass: f64 = (-40..=40).map(|m| eq2_transfer(4, PI, 0.8283, 2, m, n).unwrap().norm_sqr()).sum();
        let six: f64 = (-40..=40).map(|m| eq2_transfer(6, PI, 0.8283, 2, m, n).unwrap().norm_sqr()).sum();
        assert!(mass < 1.0 && mass < six, "n={n}: {mass} vs {six}");
        // lost mass is of the second-order-sideband scale
        assert!(1.0 - mass > 1e-3 && 1.0 - mass < 3e-2, "{mass}");
    }
}

#[test]
fn large_channel_counts_converge() {
    let k = truncation_order(0.8283, DEFAULT_TAIL_TOL).unwrap();
    let start = 2 * k + 2;
    let reference = computational_submatrix(&GateParams::new(start, PI, 0.8283).transfer(2).unwrap()).unwrap();
    for b in (start + 2..=start + 12).step_by(2) {
        let w = computational_submatrix(&GateParams::new(b, PI, 0.8283).transfer(2).unwrap()).unwrap();
        let diff = (&w - &reference).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "B={b}: {diff}");
    }
}

#[test]
fn passivity_with_lossy_channels() {
    let shaper = ShaperSpec::new(6, vec![0.9, 1.0, 0.3, 1.0, 0.7, 1.0], vec![0.0, 0.4, 1.0, 2.0, 3.0, 0.2]).unwrap();
    let a = ModulatorSpec::new(0.9, DriveSign::Positive).unwrap();
    let b = ModulatorSpec::new(0.6, DriveSign::Negative).unwrap();
    let v = build_transfer(&a, &shaper, &b, 2, DEFAULT_TAIL_TOL).unwrap();
    for n in 0..2 {
        assert!(v.column_mass(n) <= 1.0 + 1e-12);
    }
}

#[test]
fn wide_all_pass_window_conserves_power() {
    let k = truncation_order(0.8283, DEFAULT_TAIL_TOL).unwrap();
    let b = 2 * (k + 2) + 2;
    let v = GateParams::new(b, 1.3, 0.8283).transfer(2).unwrap();
    for n in 0..2 {
        assert!((v.column_mass(n) - 1.0).abs() < 1e-14, "{}", v.column_mass(n));
    }
}

fn sign_value(s: DriveSign) -> f64 {
    s.as_i8() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn general_builder_matches_dense_product(
        theta1 in 0.0f64..1.2,
        theta2 in 0.0f64..1.2,
        alpha in 0.0f64..(2.0 * PI),
        b_half in 1usize..=4,
        s1 in prop::sample::select(vec![DriveSign::Positive, DriveSign::Negative]),
        s2 in prop::sample::select(vec![DriveSign::Positive, DriveSign::Negative]),
    ) {
        let channels = 2 * b_half;
        let shaper = ShaperSpec::step_phase(channels, alpha).unwrap();
        let first = ModulatorSpec::new(theta1, s1).unwrap();
        let second = ModulatorSpec::new(theta2, s2).unwrap();
        let v = build_transfer(&first, &shaper, &second, 2, DEFAULT_TAIL_TOL).unwrap();
        let t = |k: i64| shaper.transmission(k);
        let (origin, dense) = dense_transfer(theta1, sign_value(s1), &t, theta2, sign_value(s2), 30);
        for m in v.output_bins() {
            for n in 0..2 {
                let want = dense_entry(origin, &dense, m, n as i64);
                prop_assert!((v.entry(m, n) - want).norm() < 1e-12);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_equals_builder(
        b_half in 1usize..=4,
        alpha in 0.0f64..(2.0 * PI),
        theta in 0.0f64..1.2,
    ) {
        let channels = 2 * b_half;
        let v = GateParams::new(channels, alpha, theta).transfer(2).unwrap();
        for m in v.output_bins() {
            for n in 0..2 {
                let closed = eq2_transfer(channels, alpha, theta, 2, m, n).unwrap();
                prop_assert!((closed - v.entry(m, n)).norm() < 1e-12);
            }
        }
        // canonical-family symmetry
        let w = computational_submatrix(&v).unwrap();
        prop_assert!((w[[0, 0]].norm() - w[[1, 1]].norm()).abs() < 1e-12);
        prop_assert!((w[[0, 1]].norm() - w[[1, 0]].norm()).abs() < 1e-12);
        for n in 0..2 {
            prop_assert!(v.column_mass(n) <= 1.0 + 1e-12);
        }
    }
}
