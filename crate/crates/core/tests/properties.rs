//! Randomized invariants of the state, texture, noise and mesh layers.

mod common;

use nalgebra::{DMatrix, DVector, Rotation3, Vector3};
use proptest::prelude::*;
use qskyrmion::bipartite::two_photon_coefficient_state;
use qskyrmion::mesh::{mesh_apply, mesh_decompose, mesh_unitary};
use qskyrmion::multiphoton::pair_weights_exact;
use qskyrmion::noise::{dephase, depolarize, wishart_density, DephasingSpec, WishartSpec};
use qskyrmion::qstate::{
    max_abs_diff, partial_trace, spectral_decompose, two_photon_factors, validate_density, Factor,
    ModeGrid,
};
use qskyrmion::synth::{analytic_density, analytic_modes_q1};
use qskyrmion::texture::{skyrmion_number, stokes_from_density, ChargeEstimator, StokesField};
use qskyrmion::C64;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn factored_trace_matches_dense(seed in any::<u64>(), rank in 1usize..5, perm in 0usize..6) {
        let f = two_photon_factors("A", "B", 3);
        let rho = common::random_factored(f.clone(), rank, seed);
        let dense = qskyrmion::qstate::DensityMatrix::from_dense(f.clone(), rho.to_dense()).unwrap();
        let keeps = [
            vec![f[0].clone(), f[1].clone()],
            vec![f[2].clone(), f[3].clone()],
            vec![f[2].clone(), f[1].clone()],
            vec![f[0].clone(), f[3].clone()],
            vec![f[3].clone()],
            vec![f[1].clone(), f[0].clone(), f[2].clone()],
        ];
        let keep = &keeps[perm];
        let a = partial_trace(&rho, keep).unwrap().to_dense();
        let b = partial_trace(&dense, keep).unwrap().to_dense();
        prop_assert!(max_abs_diff(&a, &b) < 1e-12);
        prop_assert!((a.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(max_abs_diff(&a, &a.adjoint()) < 1e-14);
    }

    #[test]
    fn spectral_reconstruction(seed in any::<u64>(), d in 1usize..12) {
        let mut r = common::rng(seed);
        let g = common::gaussian(&mut r, d, d);
        let h = &g + g.adjoint();
        let sd = spectral_decompose(&h).unwrap();
        prop_assert!(max_abs_diff(&sd.reconstruct(), &h) < 1e-10 * (1.0 + h.norm()));
        prop_assert!(sd.values.windows(2).all(|w| w[0] >= w[1] - 1e-12));
    }

    #[test]
    fn mesh_round_trip_and_norm(seed in any::<u64>(), d in 2usize..24) {
        let u = common::haar_unitary(d, seed);
        let p = mesh_decompose(&u).unwrap();
        prop_assert_eq!(p.elements.len(), d * (d - 1) / 2);
        prop_assert!(max_abs_diff(&mesh_unitary(&p), &u) < 1e-9);
        let mut r = common::rng(seed ^ 1);
        let v: DVector<C64> = common::gaussian(&mut r, d, 1).column(0).into();
        let out = mesh_apply(&p, &v).unwrap();
        prop_assert!((out.norm() - v.norm()).abs() < 1e-12 * v.norm());
    }

    #[test]
    fn global_rotation_keeps_charge(ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0, angle in 0.0f64..std::f64::consts::TAU) {
        let grid = ModeGrid::new(21, 1.0).unwrap();
        let rho = analytic_density(&grid, -1).unwrap();
        let field = stokes_from_density(&rho, &grid).unwrap();
        let axis = Vector3::new(ax, ay, az);
        prop_assume!(axis.norm() > 1e-3);
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        let s: Vec<[f64; 3]> = field.s.iter().map(|v| {
            let w = rot * Vector3::new(v[0], v[1], v[2]);
            [w.x, w.y, w.z]
        }).collect();
        let rotated = StokesField::from_unit_vectors(grid.clone(), s).unwrap();
        let q0 = skyrmion_number(&field, ChargeEstimator::SolidAngle).unwrap().q_raw;
        let q1 = skyrmion_number(&rotated, ChargeEstimator::SolidAngle).unwrap().q_raw;
        prop_assert!((q0 - q1).abs() < 1e-9);
    }

    #[test]
    fn depolarizing_keeps_texture(eps in 0.0f64..0.999) {
        let grid = ModeGrid::new(11, 1.0).unwrap();
        let rho = analytic_density(&grid, 1).unwrap();
        let f0 = stokes_from_density(&rho, &grid).unwrap();
        let f1 = stokes_from_density(&depolarize(&rho, eps).unwrap(), &grid).unwrap();
        prop_assert_eq!(&f0.defined, &f1.defined);
        for (a, b) in f0.s.iter().zip(&f1.s) {
            for c in 0..3 {
                prop_assert!((a[c] - b[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dephasing_leaves_local_state(mu in -3.0f64..3.0, sigma in 0.0f64..4.0) {
        let grid = ModeGrid::new(8, 1.0).unwrap();
        let (u1, u2) = analytic_modes_q1(&grid, -1).unwrap();
        let c = DMatrix::from_element(2, 2, C64::new(0.5, 0.0));
        let rho = two_photon_coefficient_state(&[u1, u2], true, c).unwrap();
        let out = dephase(&rho, &DephasingSpec::analytic(mu, sigma)).unwrap();
        let keep = vec![Factor::pseudospin("A"), Factor::mode("A", 8)];
        let a = partial_trace(&rho, &keep).unwrap().to_dense();
        let b = partial_trace(&out, &keep).unwrap().to_dense();
        prop_assert!(max_abs_diff(&a, &b) < 1e-14);
        prop_assert!(validate_density(&out, 1e-10).passed);
    }

    #[test]
    fn wishart_is_a_state(k in 1usize..40, seed in any::<u64>()) {
        let f = vec![Factor::pseudospin("A"), Factor::mode("A", 5)];
        let w = wishart_density(f, &WishartSpec { k: k.min(10), seed }, "prop").unwrap();
        let r = validate_density(&w, 1e-10);
        prop_assert!(r.passed);
    }
}

#[test]
fn pair_weights_are_exact_for_many_n() {
    for n in 2..2000u64 {
        let [(a, b), (c, d), (e, f)] = pair_weights_exact(n).unwrap();
        // a/b + 2c/d + e/f == 1 in 128-bit arithmetic.
        let (a, b, c, d, e, f) = (
            a as u128, b as u128, c as u128, d as u128, e as u128, f as u128,
        );
        assert_eq!(a * d * f + 2 * c * b * f + e * b * d, b * d * f, "n = {n}");
    }
}
