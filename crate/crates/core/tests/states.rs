mod common;

use common::{mps_dense, norm, overlap_modulus, Mat};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use seqmps::io::mps_to_json;
use seqmps::mps::Gauge;
use seqmps::states::{self, generic_bond_dims, make_target, xxz_ground_state, TargetSpec};

fn bit(x: usize, k: usize) -> usize {
    (x >> k) & 1
}

/// Apply `sum_k X_k X_{k+1} + Y_k Y_{k+1} + delta Z_k Z_{k+1}` by Pauli
/// action on basis states.
fn apply_xxz(psi: &[C64], n: usize, delta: f64) -> Vec<C64> {
    let mut out = vec![C64::from(0.0); psi.len()];
    for (x, &amp) in psi.iter().enumerate() {
        for k in 0..n - 1 {
            let y = x ^ (3 << k);
            // X X
            out[y] += amp;
            // Y Y: Y|b> = i (-1)^b |1-b>
            let sy = |b: usize| C64::new(0.0, if b == 0 { 1.0 } else { -1.0 });
            out[y] += amp * sy(bit(x, k)) * sy(bit(x, k + 1));
            let z = |b: usize| if b == 0 { 1.0 } else { -1.0 };
            out[x] += amp * delta * z(bit(x, k)) * z(bit(x, k + 1));
        }
    }
    out
}

/// Dense XXZ Hamiltonian from Kronecker products; site 1 is the rightmost factor.
fn dense_xxz(n: usize, delta: f64) -> Mat {
    let dim = 1 << n;
    let mut h = Mat::zeros(dim, dim);
    for k in 1..n {
        for (p, w) in [(1, 1.0), (2, 1.0), (3, delta)] {
            let mut term = Mat::identity(1, 1);
            for site in (1..=n).rev() {
                let f = if site == k || site == k + 1 { common::pauli(p) } else { Mat::identity(2, 2) };
                term = common::kron(&term, &f);
            }
            h += term * C64::from(w);
        }
    }
    h
}

#[test]
fn paradigm_states_match_closed_forms() {
    for n in 2..=12 {
        let dim = 1usize << n;
        let s = 1.0 / (dim as f64).sqrt();
        let mut ghz = vec![C64::from(0.0); dim];
        ghz[0] = C64::from(std::f64::consts::FRAC_1_SQRT_2);
        ghz[dim - 1] = ghz[0];
        let w: Vec<C64> =
            (0..dim).map(|x| C64::from(if x.count_ones() == 1 { 1.0 / (n as f64).sqrt() } else { 0.0 })).collect();
        let cluster: Vec<C64> = (0..dim)
            .map(|x| {
                let parity: usize = (0..n - 1).map(|k| bit(x, k) * bit(x, k + 1)).sum();
                C64::from(if parity.is_multiple_of(2) { s } else { -s })
            })
            .collect();
        for (spec, expected) in [(TargetSpec::ghz(n), ghz), (TargetSpec::w(n), w), (TargetSpec::cluster(n), cluster)] {
            let m = make_target(&spec).unwrap();
            assert_eq!(m.gauge(), Gauge::LeftCanonical);
            assert!(m.isometry_residual() < 1e-12);
            assert!(m.max_bond() <= 2);
            let v = mps_dense(&m);
            assert!((norm(&v) - 1.0).abs() < 1e-12);
            assert!((overlap_modulus(&v, &expected) - 1.0).abs() < 1e-12, "{spec:?}");
        }
    }
}

#[test]
fn xxz_ground_state_residual() {
    for n in 2..=12 {
        for delta in [1.0, 0.5, -0.3, 2.0] {
            let (e, psi) = xxz_ground_state(n, delta).unwrap();
            assert!((norm(&psi) - 1.0).abs() < 1e-12);
            let h_psi = apply_xxz(&psi, n, delta);
            let residual: f64 = h_psi.iter().zip(&psi).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt();
            assert!(residual < 1e-8, "n={n} delta={delta}: {residual:e}");
        }
    }
}

#[test]
fn xxz_ground_energy_is_lowest() {
    for n in 2..=8 {
        for delta in [1.0, 0.5, 2.0] {
            let h = dense_xxz(n, delta);
            let re = h.map(|z| z.re);
            assert!(h.map(|z| z.im).norm() < 1e-14);
            let lowest = nalgebra::SymmetricEigen::new(re).eigenvalues.min();
            let (e, psi) = xxz_ground_state(n, delta).unwrap();
            assert!((e - lowest).abs() < 1e-9, "n={n} delta={delta}: {e} vs {lowest}");
            let v = nalgebra::DVector::from_vec(psi);
            assert!((&h * &v - &v * C64::from(e)).norm() < 1e-8);
        }
    }
}

#[test]
fn two_site_singlet() {
    let (e, psi) = xxz_ground_state(2, 1.0).unwrap();
    assert!((e + 3.0).abs() < 1e-12);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = [C64::from(0.0), C64::from(h), C64::from(-h), C64::from(0.0)];
    assert!((overlap_modulus(&psi, &singlet) - 1.0).abs() < 1e-12);
    let m = make_target(&TargetSpec::xxz_ground(2, 1.0)).unwrap();
    assert!((overlap_modulus(&mps_dense(&m), &singlet) - 1.0).abs() < 1e-12);
}

#[test]
fn xxz_target_cap_and_bounds() {
    let m = make_target(&TargetSpec::xxz_ground(10, 1.0).with_bond(16)).unwrap();
    assert!(m.max_bond() <= 16);
    assert!((m.norm() - 1.0).abs() < 1e-12);
    let (_, psi) = xxz_ground_state(10, 1.0).unwrap();
    assert!(overlap_modulus(&mps_dense(&m), &psi) > 0.99);
    assert!(xxz_ground_state(1, 1.0).is_err());
    assert!(xxz_ground_state(20, 1.0).is_err());
    assert!(xxz_ground_state(4, f64::NAN).is_err());
}

#[test]
fn random_mps_is_reproducible() {
    for (n, bond) in [(3, 2), (6, 4), (9, 8)] {
        let a = make_target(&TargetSpec::random_mps(n, bond, 11)).unwrap();
        let b = make_target(&TargetSpec::random_mps(n, bond, 11)).unwrap();
        assert_eq!(mps_to_json(&a).unwrap(), mps_to_json(&b).unwrap());
        let c = make_target(&TargetSpec::random_mps(n, bond, 12)).unwrap();
        assert!(overlap_modulus(&mps_dense(&a), &mps_dense(&c)) < 1.0 - 1e-6);
        assert_eq!(a.bond_dims(), generic_bond_dims(n, bond));
    }
}

#[test]
fn ghz_isometries_are_isometric() {
    for n in 2..=6 {
        for s in states::ghz_isometries(n).unwrap() {
            let g = s.mat(0).adjoint() * s.mat(0) + s.mat(1).adjoint() * s.mat(1);
            assert!((g - Mat::identity(2, 2)).norm() < 1e-14);
        }
    }
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(make_target(&TargetSpec::ghz(1)).is_err());
    assert!(make_target(&TargetSpec::random_mps(4, 0, 0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn factories_are_normalized_and_canonical(n in 2usize..10, bond in 1usize..9, seed in any::<u64>(), kind in 0usize..4) {
        let spec = match kind {
            0 => TargetSpec::ghz(n),
            1 => TargetSpec::w(n),
            2 => TargetSpec::cluster(n),
            _ => TargetSpec::random_mps(n, bond, seed),
        };
        let m = make_target(&spec).unwrap();
        prop_assert_eq!(m.gauge(), Gauge::LeftCanonical);
        prop_assert!(m.isometry_residual() < 1e-10);
        prop_assert!((norm(&mps_dense(&m)) - 1.0).abs() < 1e-10);
    }
}
