//! Pinned reference values and cross-checks between independent code paths.

mod common;

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use qskyrmion::bipartite::{
    build_two_photon, nested_report, two_photon_coefficient_state, NestedReport,
};
use qskyrmion::mesh::{phase_scan, subspace_report, ScanSubspace};
use qskyrmion::multiphoton::{multiphoton_nested_report, VarrhoSpec};
use qskyrmion::noise::{dephase, DephasingSpec};
use qskyrmion::qstate::io::{read_qdm, write_qdm};
use qskyrmion::qstate::{max_abs_diff, partial_trace, ModeGrid, PureState};
use qskyrmion::synth::{analytic_modes_q1, build_single_photon_skyrmion, SkyrmionSpec};
use qskyrmion::texture::csv::{from_csv_str, to_csv_string};
use qskyrmion::texture::{stokes_from_density, ChargeEstimator, TextureClass};
use qskyrmion::{Error, C64};

fn modes(m: usize, sign: i32) -> (ModeGrid, Vec<PureState>) {
    let g = ModeGrid::new(m, 1.0).unwrap();
    let (a, b) = analytic_modes_q1(&g, sign).unwrap();
    (g, vec![a, b])
}

fn signed(r: &NestedReport) -> Vec<(i64, TextureClass)> {
    r.all()
        .iter()
        .map(|s| (s.report.q_rounded, s.report.texture_class))
        .collect()
}

#[test]
fn conjugate_pair_signs_are_pinned() {
    let (g, u) = modes(80, -1);
    let psi = build_two_photon(&u, true, 0.0, None).unwrap();
    let r = nested_report(&psi.to_density(), &g, ChargeEstimator::SolidAngle).unwrap();
    use TextureClass::*;
    assert_eq!(
        signed(&r),
        vec![
            (-1, Neel),
            (-1, Neel),
            (1, AntiNeel),
            (1, Bloch),
            (-1, Bloch)
        ]
    );
    assert!(r.nested);
}

#[test]
fn bell_state_signs_are_pinned() {
    let (g, u) = modes(80, -1);
    let psi = build_two_photon(&u, false, 0.0, None).unwrap();
    let r = nested_report(&psi.to_density(), &g, ChargeEstimator::SolidAngle).unwrap();
    use TextureClass::*;
    assert_eq!(
        signed(&r),
        vec![(-1, Neel), (-1, Neel), (-1, Neel), (-1, Bloch), (-1, Bloch)]
    );
}

#[test]
fn phase_scan_at_zero_matches_bell_report() {
    let (g, u) = modes(11, -1);
    let psi = build_two_photon(&u, false, 0.0, None).unwrap();
    for sub in [
        ScanSubspace::Joint,
        ScanSubspace::LocalA,
        ScanSubspace::LocalB,
        ScanSubspace::Nonlocal,
    ] {
        let direct = subspace_report(&psi, sub, &g, ChargeEstimator::SolidAngle).unwrap();
        let scanned = phase_scan(&u, &[0.0], sub, &g, ChargeEstimator::SolidAngle).unwrap();
        assert_abs_diff_eq!(direct.q_raw, scanned[0].q_raw, epsilon = 1e-10);
    }
}

#[test]
fn only_the_joint_texture_follows_the_phase() {
    let (g, u) = modes(11, -1);
    let phis = [0.0, std::f64::consts::PI];
    let joint = phase_scan(
        &u,
        &phis,
        ScanSubspace::Joint,
        &g,
        ChargeEstimator::SolidAngle,
    )
    .unwrap();
    assert_eq!((joint[0].q_rounded, joint[1].q_rounded), (-1, 1));
    for sub in [
        ScanSubspace::LocalA,
        ScanSubspace::LocalB,
        ScanSubspace::Nonlocal,
    ] {
        let r = phase_scan(&u, &phis, sub, &g, ChargeEstimator::SolidAngle).unwrap();
        assert_abs_diff_eq!(r[0].q_raw, r[1].q_raw, epsilon = 1e-10);
    }
}

#[test]
fn multiphoton_two_photons_is_bell() {
    let (g, u) = modes(20, -1);
    let bell = build_two_photon(&u, false, 0.0, None).unwrap();
    let a = nested_report(&bell.to_density(), &g, ChargeEstimator::SolidAngle).unwrap();
    let b = multiphoton_nested_report(
        2,
        &VarrhoSpec::uniform(20),
        &u,
        &g,
        ChargeEstimator::SolidAngle,
    )
    .unwrap();
    assert_eq!(a, b);
}

#[test]
fn multiphoton_fidelity_degrades_with_n() {
    let (g, u) = modes(80, -1);
    let q: Vec<f64> = [2u64, 3, 5, 8]
        .iter()
        .map(|&n| {
            let r = multiphoton_nested_report(
                n,
                &VarrhoSpec::uniform(80),
                &u,
                &g,
                ChargeEstimator::Quadrature,
            )
            .unwrap();
            r.nonlocal_x_a_sigma_b.report.q_raw.abs()
        })
        .collect();
    assert!(q.windows(2).all(|w| w[0] >= w[1]), "{q:?}");
}

#[test]
fn monte_carlo_dephasing_approaches_the_average() {
    let (_, u) = modes(6, -1);
    let c = DMatrix::from_element(2, 2, C64::new(0.5, 0.0));
    let rho = two_photon_coefficient_state(&u, true, c).unwrap();
    let exact = dephase(&rho, &DephasingSpec::analytic(0.3, 1.0))
        .unwrap()
        .to_dense();
    let sampled = dephase(&rho, &DephasingSpec::monte_carlo(0.3, 1.0, 40_000, 7))
        .unwrap()
        .to_dense();
    // Cross terms are a mean of unit phasors: standard error ≤ 0.5/√shots.
    assert!(max_abs_diff(&exact, &sampled) < 5.0 * 0.5 / 200.0);
    let again = dephase(&rho, &DephasingSpec::monte_carlo(0.3, 1.0, 40_000, 7))
        .unwrap()
        .to_dense();
    assert_eq!(sampled, again);
}

#[test]
fn density_and_texture_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SkyrmionSpec::new(2, 12);
    let rho = build_single_photon_skyrmion(&spec, None).unwrap();
    let (header, _) = write_qdm(&rho, &dir.path().join("rho.qdm")).unwrap();
    let back = read_qdm(&header).unwrap();
    assert_eq!(back.to_dense(), rho.to_dense());
    let grid = spec.grid().unwrap();
    let field = stokes_from_density(&rho, &grid).unwrap();
    let parsed = from_csv_str(&to_csv_string(&field)).unwrap();
    assert_eq!(parsed.sx, field.sx);
    assert_eq!(parsed.sz, field.sz);
    assert_eq!(parsed.defined, field.defined);
}

#[test]
fn reductions_of_dense_and_coefficient_forms_agree() {
    let (_, u) = modes(5, 1);
    let c = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.6, 0.0),
            C64::new(0.1, 0.2),
            C64::new(0.1, -0.2),
            C64::new(0.4, 0.0),
        ],
    );
    let rho = two_photon_coefficient_state(&u, true, c).unwrap();
    let dense =
        qskyrmion::qstate::DensityMatrix::from_dense(rho.factors().to_vec(), rho.to_dense())
            .unwrap();
    let keep = vec![rho.factors()[2].clone(), rho.factors()[1].clone()];
    let a = partial_trace(&rho, &keep).unwrap().to_dense();
    let b = partial_trace(&dense, &keep).unwrap().to_dense();
    assert!(max_abs_diff(&a, &b) < 1e-13);
}

#[test]
fn error_paths() {
    let (_, u) = modes(5, 1);
    assert!(matches!(
        build_two_photon(&u, true, 0.5, None),
        Err(Error::PhaseWithConjugation)
    ));
    let dup = vec![u[0].clone(), u[0].clone()];
    assert!(matches!(
        build_two_photon(&dup, false, 0.0, None),
        Err(Error::NonOrthogonalModes(_))
    ));
    let rho = u[0].to_density();
    assert!(matches!(
        dephase(&rho, &DephasingSpec::analytic(0.0, 1.0)),
        Err(Error::NotCoefficientForm)
    ));
    assert!(matches!(
        qskyrmion::multiphoton::single_photon_varrho(&VarrhoSpec::edge(6, Some(4)), "A"),
        Err(Error::EdgeBinsTooLarge { .. })
    ));
}
