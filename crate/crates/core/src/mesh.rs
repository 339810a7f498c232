//! Rectangular interferometer meshes and the relative-phase scan.
//!
//! Each two-port element on ports `(p, p+1)` is
//! `T(θ, φ) = C(θ)·diag(e^{iφ}, 1)`: an external phase `φ` on the upper input
//! followed by a symmetric coupler `C(θ) = cos(θ/2)·I + i·sin(θ/2)·σ_x`
//! (bar at `θ = 0`, balanced at `θ = π/2`). After all elements a phase
//! `e^{iα_k}` is applied on every port `k`.
//!
//! The mesh acts on `2M` spatial bins; bin `2x + σ` carries the amplitude of
//! pseudospin `σ` at mode `x`.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{build_two_photon, PARTY_A, PARTY_B};
use crate::qstate::{kron_vec, partial_trace, two_photon_factors, Factor, ModeGrid, PureState};
use crate::texture::{
    classify_texture, stokes_from_density, stokes_from_wavefunction, ChargeEstimator, TextureClass,
    TextureReport,
};
use crate::{Error, Result, C64};

/// Number of phase-scan points used when none are given.
pub const DEFAULT_SCAN_POINTS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshElement {
    pub layer: usize,
    /// Upper port `p`; the element couples `p` and `p + 1`.
    pub port: usize,
    pub theta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshProgram {
    pub dim: usize,
    /// In application order.
    pub elements: Vec<MeshElement>,
    pub output_phases: Vec<f64>,
}

fn element_matrix(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let e = C64::from_polar(1.0, phi);
    let is = C64::new(0.0, s);
    [[e * c, is], [e * is, C64::new(c, 0.0)]]
}

fn apply_element(v: &mut [C64], el: &MeshElement) {
    let t = element_matrix(el.theta, el.phi);
    let (a, b) = (v[el.port], v[el.port + 1]);
    v[el.port] = t[0][0] * a + t[0][1] * b;
    v[el.port + 1] = t[1][0] * a + t[1][1] * b;
}

/// Propagates `input` through the mesh.
pub fn mesh_apply(program: &MeshProgram, input: &DVector<C64>) -> Result<DVector<C64>> {
    if input.len() != program.dim {
        return Err(Error::DimensionMismatch {
            expected: program.dim,
            got: input.len(),
        });
    }
    let mut v: Vec<C64> = input.iter().copied().collect();
    for el in &program.elements {
        apply_element(&mut v, el);
    }
    for (z, a) in v.iter_mut().zip(&program.output_phases) {
        *z *= C64::from_polar(1.0, *a);
    }
    Ok(DVector::from_vec(v))
}

/// Unitary realized by the mesh, column `j` being the image of `e_j`.
pub fn mesh_unitary(program: &MeshProgram) -> DMatrix<C64> {
    let d = program.dim;
    let cols: Vec<DVector<C64>> = (0..d)
        .into_par_iter()
        .map(|j| {
            let mut e = DVector::zeros(d);
            e[j] = C64::new(1.0, 0.0);
            mesh_apply(program, &e).expect("dimension")
        })
        .collect();
    DMatrix::from_columns(&cols)
}

fn unitarity_residual(u: &DMatrix<C64>) -> f64 {
    let g = u.adjoint() * u;
    crate::qstate::max_abs_diff(&g, &DMatrix::identity(u.ncols(), u.ncols()))
}

/// Extends orthonormal columns to a unitary with two-pass Gram–Schmidt on
/// the canonical basis vectors, taken in order.
pub fn complete_isometry(columns: &[DVector<C64>]) -> Result<DMatrix<C64>> {
    let d = columns
        .first()
        .map(|c| c.len())
        .ok_or_else(|| Error::InvalidSpec("no columns".into()))?;
    if columns.len() > d || columns.iter().any(|c| c.len() != d) {
        return Err(Error::ShapeMismatch(format!(
            "{} columns of mixed or excess length",
            columns.len()
        )));
    }
    let mut dev: f64 = 0.0;
    for (i, a) in columns.iter().enumerate() {
        for (j, b) in columns.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((a.dotc(b) - C64::new(target, 0.0)).norm());
        }
    }
    if dev > 1e-10 {
        return Err(Error::NonOrthonormalInput(dev));
    }
    let mut basis: Vec<DVector<C64>> = columns.to_vec();
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = DVector::zeros(d);
        v[k] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in &basis {
                let p = b.dotc(&v);
                v -= b * p;
            }
        }
        let n = v.norm();
        if n > 1e-6 {
            basis.push(v.unscale(n));
        }
    }
    Ok(DMatrix::from_columns(&basis))
}

/// Rectangular decomposition of a unitary into `D(D−1)/2` elements.
pub fn mesh_decompose(u: &DMatrix<C64>) -> Result<MeshProgram> {
    if !u.is_square() {
        return Err(Error::ShapeMismatch("mesh target must be square".into()));
    }
    let res = unitarity_residual(u);
    if res > 1e-8 {
        return Err(Error::NotUnitary(res));
    }
    let n = u.nrows();
    let mut w = u.clone();
    let mut right: Vec<(usize, f64, f64)> = Vec::new();
    let mut left: Vec<(usize, f64, f64)> = Vec::new();
    for i in 1..n {
        if i % 2 == 1 {
            for j in 0..i {
                let (r, c) = (n - 1 - j, i - 1 - j);
                let (a, b) = (w[(r, c)], w[(r, c + 1)]);
                let (theta, phi) = if a.norm() < 1e-300 {
                    (0.0, 0.0)
                } else {
                    (
                        2.0 * a.norm().atan2(b.norm()),
                        a.arg() - b.arg() - FRAC_PI_2,
                    )
                };
                // w ← w·T⁻¹ on columns (c, c+1).
                let t = element_matrix(theta, phi);
                for row in 0..n {
                    let (x, y) = (w[(row, c)], w[(row, c + 1)]);
                    w[(row, c)] = x * t[0][0].conj() + y * t[0][1].conj();
                    w[(row, c + 1)] = x * t[1][0].conj() + y * t[1][1].conj();
                }
                right.push((c, theta, phi));
            }
        } else {
            for j in 1..=i {
                let (r, c) = (n + j - 1 - i, j - 1);
                let (a, b) = (w[(r - 1, c)], w[(r, c)]);
                let (theta, phi) = if b.norm() < 1e-300 {
                    (0.0, 0.0)
                } else {
                    (
                        2.0 * b.norm().atan2(a.norm()),
                        b.arg() - a.arg() + FRAC_PI_2,
                    )
                };
                // w ← T·w on rows (r−1, r).
                let t = element_matrix(theta, phi);
                for col in 0..n {
                    let (x, y) = (w[(r - 1, col)], w[(r, col)]);
                    w[(r - 1, col)] = t[0][0] * x + t[0][1] * y;
                    w[(r, col)] = t[1][0] * x + t[1][1] * y;
                }
                left.push((r - 1, theta, phi));
            }
        }
    }
    // Move the inverse left elements through the diagonal:
    // T⁻¹(θ,φ)·diag(d₁,d₂) = diag(−e^{−iφ}d₂, d₂)·T(θ, arg(−d₁/d₂)).
    let mut diag: Vec<C64> = (0..n).map(|k| w[(k, k)]).collect();
    let mut moved: Vec<(usize, f64, f64)> = Vec::with_capacity(left.len());
    for &(p, theta, phi) in left.iter().rev() {
        let (d1, d2) = (diag[p], diag[p + 1]);
        diag[p] = -C64::from_polar(1.0, -phi) * d2;
        moved.push((p, theta, (-d1 / d2).arg()));
    }
    // Right elements act first, in nulling order; `moved` is already in
    // application order (last left element first).
    let mut seq = right;
    seq.extend(moved);
    let mut depth = vec![0usize; n];
    let elements = seq
        .into_iter()
        .map(|(p, theta, phi)| {
            let layer = depth[p].max(depth[p + 1]);
            depth[p] = layer + 1;
            depth[p + 1] = layer + 1;
            MeshElement {
                layer,
                port: p,
                theta,
                phi: wrap(phi),
            }
        })
        .collect();
    let output_phases = diag.iter().map(|d| d.arg()).collect();
    Ok(MeshProgram {
        dim: n,
        elements,
        output_phases,
    })
}

fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= std::f64::consts::PI {
        r - TAU
    } else {
        r
    }
}

/// `(σ, x)` amplitudes to mesh bins `2x + σ`.
pub fn to_bins(u: &DVector<C64>) -> DVector<C64> {
    let m = u.len() / 2;
    DVector::from_fn(2 * m, |k, _| u[(k % 2) * m + k / 2])
}

/// Mesh bins `2x + σ` to `(σ, x)` amplitudes.
pub fn from_bins(b: &DVector<C64>) -> DVector<C64> {
    let m = b.len() / 2;
    DVector::from_fn(2 * m, |k, _| b[2 * (k % m) + k / m])
}

/// Mesh whose first two ports emit the modes `u_1` and `u_2`.
pub fn mode_preparation_program(modes: &[PureState]) -> Result<MeshProgram> {
    let cols: Vec<DVector<C64>> = modes.iter().map(|u| to_bins(u.amplitudes())).collect();
    mesh_decompose(&complete_isometry(&cols)?)
}

/// `(|u_1⟩|u_1⟩ + e^{iφ}|u_2⟩|u_2⟩)/√2` with both modes generated by the mesh
/// from ports 0 and 1.
pub fn mesh_two_photon_state(program: &MeshProgram, phi: f64) -> Result<PureState> {
    let d = program.dim;
    let m = d / 2;
    let port = |k: usize| -> Result<DVector<C64>> {
        let mut e = DVector::zeros(d);
        e[k] = C64::new(1.0, 0.0);
        Ok(from_bins(&mesh_apply(program, &e)?))
    };
    let (v1, v2) = (port(0)?, port(1)?);
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let psi =
        kron_vec(&v1, &v1) * C64::new(amp, 0.0) + kron_vec(&v2, &v2) * C64::from_polar(amp, phi);
    PureState::normalized(two_photon_factors(PARTY_A, PARTY_B, m), psi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanSubspace {
    Joint,
    LocalA,
    LocalB,
    /// `ρ(σ_B, x_A)`.
    Nonlocal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseScanRow {
    pub phi: f64,
    #[serde(rename = "Q_raw")]
    pub q_raw: f64,
    #[serde(rename = "Q_rounded")]
    pub q_rounded: i64,
    pub class: TextureClass,
}

/// `k·2π/n` for `k = 0..n`.
pub fn default_phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

/// Texture report of one subspace of a two-photon pure state.
pub fn subspace_report(
    psi: &PureState,
    subspace: ScanSubspace,
    grid: &ModeGrid,
    estimator: ChargeEstimator,
) -> Result<TextureReport> {
    let m = grid.m();
    let field = match subspace {
        ScanSubspace::Joint => stokes_from_wavefunction(psi, grid)?,
        other => {
            let keep = match other {
                ScanSubspace::LocalA => vec![Factor::pseudospin(PARTY_A), Factor::mode(PARTY_A, m)],
                ScanSubspace::LocalB => vec![Factor::pseudospin(PARTY_B), Factor::mode(PARTY_B, m)],
                _ => vec![Factor::pseudospin(PARTY_B), Factor::mode(PARTY_A, m)],
            };
            stokes_from_density(&partial_trace(&psi.to_density(), &keep)?, grid)?
        }
    };
    classify_texture(&field, estimator)
}

/// Charge of the requested texture for every relative phase, with the
/// state prepared through the mesh.
pub fn phase_scan(
    modes: &[PureState],
    phis: &[f64],
    subspace: ScanSubspace,
    grid: &ModeGrid,
    estimator: ChargeEstimator,
) -> Result<Vec<PhaseScanRow>> {
    if modes.len() != 2 {
        return Err(Error::InvalidSpec("the phase scan needs two modes".into()));
    }
    // Orthonormality check on the modes themselves.
    build_two_photon(modes, false, 0.0, None)?;
    let program = mode_preparation_program(modes)?;
    phis.par_iter()
        .map(|&phi| {
            let psi = mesh_two_photon_state(&program, phi)?;
            let r = subspace_report(&psi, subspace, grid, estimator)?;
            Ok(PhaseScanRow {
                phi,
                q_raw: r.q_raw,
                q_rounded: r.q_rounded,
                class: r.texture_class,
            })
        })
        .collect()
}

/// CSV table `phi,Q_raw,Q_rounded,class`.
pub fn scan_to_csv(rows: &[PhaseScanRow]) -> String {
    let mut s = String::from("phi,Q_raw,Q_rounded,class\n");
    for r in rows {
        s.push_str(&format!(
            "{:.16e},{:.16e},{},{}\n",
            r.phi, r.q_raw, r.q_rounded, r.class
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::max_abs_diff;
    use crate::synth::analytic_modes_q1;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_unitary(d: usize, seed: u64) -> DMatrix<C64> {
        let mut r = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(d, d, |_, _| {
            C64::new(StandardNormal.sample(&mut r), StandardNormal.sample(&mut r))
        });
        let qr = g.qr();
        let (q, rr) = (qr.q(), qr.r());
        let mut q = q;
        for j in 0..d {
            let p = rr[(j, j)] / rr[(j, j)].norm();
            let col = q.column(j) * p;
            q.set_column(j, &col);
        }
        q
    }

    #[test]
    fn identity_is_all_bar() {
        let p = mesh_decompose(&DMatrix::identity(5, 5)).unwrap();
        assert_eq!(p.elements.len(), 10);
        assert!(p.elements.iter().all(|e| e.theta == 0.0));
        assert!(max_abs_diff(&mesh_unitary(&p), &DMatrix::identity(5, 5)) < 1e-15);
        let v = DVector::from_fn(5, |k, _| C64::new(k as f64, 1.0));
        assert_eq!(mesh_apply(&p, &v).unwrap(), v);
    }

    #[test]
    fn balanced_two_port() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(s, 0.0),
                C64::new(0.0, s),
                C64::new(0.0, s),
                C64::new(s, 0.0),
            ],
        );
        let p = mesh_decompose(&u).unwrap();
        assert_eq!(p.elements.len(), 1);
        assert!((p.elements[0].theta - FRAC_PI_2).abs() < 1e-12);
        assert!(max_abs_diff(&mesh_unitary(&p), &u) < 1e-12);
    }

    #[test]
    fn random_round_trip() {
        for (d, seed) in [(2, 1), (3, 2), (8, 3), (13, 4)] {
            let u = random_unitary(d, seed);
            let p = mesh_decompose(&u).unwrap();
            assert_eq!(p.elements.len(), d * (d - 1) / 2);
            assert!(max_abs_diff(&mesh_unitary(&p), &u) < 1e-9, "d={d}");
            assert!(p.elements.iter().map(|e| e.layer).max().unwrap() < d);
        }
        assert!(matches!(
            mesh_decompose(&DMatrix::from_element(2, 2, C64::new(1.0, 0.0))),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn completion_keeps_inputs() {
        let g = ModeGrid::new(11, 1.0).unwrap();
        let (u1, u2) = analytic_modes_q1(&g, -1).unwrap();
        let cols = vec![to_bins(u1.amplitudes()), to_bins(u2.amplitudes())];
        let u = complete_isometry(&cols).unwrap();
        assert_eq!(u.column(0), cols[0].column(0));
        assert_eq!(u.column(1), cols[1].column(0));
        assert!(unitarity_residual(&u) < 1e-10);
        let mut e1 = DVector::zeros(4);
        e1[0] = C64::new(1.0, 0.0);
        assert_eq!(complete_isometry(&[e1]).unwrap(), DMatrix::identity(4, 4));
        let bad = DVector::from_element(3, C64::new(1.0, 0.0));
        assert!(matches!(
            complete_isometry(&[bad]),
            Err(Error::NonOrthonormalInput(_))
        ));
    }

    #[test]
    fn bin_maps_are_inverse() {
        let v = DVector::from_fn(8, |k, _| C64::new(k as f64, 0.0));
        assert_eq!(from_bins(&to_bins(&v)), v);
        // (σ=1, x=0) sits at bin 1.
        assert_eq!(to_bins(&v)[1], v[4]);
    }
}
