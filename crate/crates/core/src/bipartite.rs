//! Two-photon skyrmion states, their four reduced subspaces and the
//! nested-topology report.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qstate::{
    kron_vec, partial_trace, two_photon_factors, DensityMatrix, Factor, FactorKind, ModeGrid,
    PureState,
};
use crate::texture::{
    classify_texture, stokes_from_density, stokes_from_wavefunction, ChargeEstimator, StokesField,
    TextureReport,
};
use crate::{Error, Result, C64};

pub const PARTY_A: &str = "A";
pub const PARTY_B: &str = "B";

/// Residual below which a rounded charge counts as quantized.
pub const NESTED_RESIDUAL_TOL: f64 = 0.05;

pub const LABEL_JOINT: &str = "joint";
pub const LABEL_LOCAL_A: &str = "local_A";
pub const LABEL_LOCAL_B: &str = "local_B";
pub const LABEL_SIGMA_A_X_B: &str = "nonlocal_sigmaA_xB";
pub const LABEL_X_A_SIGMA_B: &str = "nonlocal_xA_sigmaB";

fn check_orthonormal(modes: &[PureState]) -> Result<()> {
    let mut dev: f64 = 0.0;
    for (i, a) in modes.iter().enumerate() {
        for (j, b) in modes.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((a.inner(b) - C64::new(target, 0.0)).norm());
        }
    }
    if dev > 1e-10 {
        return Err(Error::NonOrthogonalModes(dev));
    }
    Ok(())
}

fn mode_count(modes: &[PureState]) -> Result<usize> {
    let first = modes
        .first()
        .ok_or_else(|| Error::InvalidSpec("no modes given".into()))?;
    let kinds: Vec<FactorKind> = first.factors().iter().map(|f| f.kind).collect();
    if kinds != [FactorKind::Pseudospin, FactorKind::Mode] {
        return Err(Error::WrongFactorShape(
            "modes must be over (pseudospin, mode)".into(),
        ));
    }
    let m = first.factors()[1].dim;
    if modes.iter().any(|u| u.dim() != 2 * m) {
        return Err(Error::ShapeMismatch("modes differ in dimension".into()));
    }
    Ok(m)
}

/// `Σ_i a_i |u_i⟩_A |u_i^(*)⟩_B`.
///
/// With `conjugate_b` the B modes are conjugated and `phi` must be zero;
/// otherwise the Bell form over two modes takes the relative phase `e^{iφ}`
/// on its second term. Amplitudes default to `1/√d`.
pub fn build_two_photon(
    modes: &[PureState],
    conjugate_b: bool,
    phi: f64,
    amplitudes: Option<&[C64]>,
) -> Result<PureState> {
    let m = mode_count(modes)?;
    check_orthonormal(modes)?;
    let d = modes.len();
    if conjugate_b && phi != 0.0 {
        return Err(Error::PhaseWithConjugation);
    }
    if !conjugate_b && phi != 0.0 && d != 2 {
        return Err(Error::InvalidSpec(
            "the relative phase needs exactly two modes".into(),
        ));
    }
    let mut amps: Vec<C64> = match amplitudes {
        Some(a) if a.len() == d => a.to_vec(),
        Some(a) => {
            return Err(Error::InvalidSpec(format!(
                "{} amplitudes for {d} modes",
                a.len()
            )))
        }
        None => vec![C64::new(1.0 / (d as f64).sqrt(), 0.0); d],
    };
    if !conjugate_b && d == 2 {
        amps[1] *= C64::from_polar(1.0, phi);
    }
    let mut v = nalgebra::DVector::zeros(4 * m * m);
    for (u, a) in modes.iter().zip(&amps) {
        let ub = if conjugate_b { u.conj() } else { u.clone() };
        v += kron_vec(u.amplitudes(), ub.amplitudes()) * *a;
    }
    PureState::new(two_photon_factors(PARTY_A, PARTY_B, m), v)
}

/// `Σ_mn c_mn |u_m u_m^(*)⟩⟨u_n u_n^(*)|` in coefficient form.
pub fn two_photon_coefficient_state(
    modes: &[PureState],
    conjugate_b: bool,
    coeffs: DMatrix<C64>,
) -> Result<DensityMatrix> {
    let m = mode_count(modes)?;
    check_orthonormal(modes)?;
    let d = modes.len();
    let mut basis = DMatrix::zeros(4 * m * m, d);
    for (k, u) in modes.iter().enumerate() {
        let ub = if conjugate_b { u.conj() } else { u.clone() };
        basis.set_column(k, &kron_vec(u.amplitudes(), ub.amplitudes()));
    }
    DensityMatrix::coefficient(two_photon_factors(PARTY_A, PARTY_B, m), basis, coeffs)
}

/// The four single-pseudospin, single-mode reductions of a two-photon state.
#[derive(Clone, Debug)]
pub struct Reductions {
    pub local_a: DensityMatrix,
    pub local_b: DensityMatrix,
    pub sigma_a_x_b: DensityMatrix,
    pub sigma_b_x_a: DensityMatrix,
}

impl Reductions {
    pub fn labeled(&self) -> [(&'static str, &DensityMatrix); 4] {
        [
            (LABEL_LOCAL_A, &self.local_a),
            (LABEL_LOCAL_B, &self.local_b),
            (LABEL_SIGMA_A_X_B, &self.sigma_a_x_b),
            (LABEL_X_A_SIGMA_B, &self.sigma_b_x_a),
        ]
    }
}

fn two_photon_labels(f: &[Factor]) -> Result<[Factor; 4]> {
    let kinds: Vec<FactorKind> = f.iter().map(|x| x.kind).collect();
    if kinds
        != [
            FactorKind::Pseudospin,
            FactorKind::Mode,
            FactorKind::Pseudospin,
            FactorKind::Mode,
        ]
        || f[0].party != f[1].party
        || f[2].party != f[3].party
    {
        return Err(Error::WrongFactorShape(
            "expected factors (sigma_A, x_A, sigma_B, x_B)".into(),
        ));
    }
    Ok([f[0].clone(), f[1].clone(), f[2].clone(), f[3].clone()])
}

/// `ρ_A`, `ρ_B`, `ρ(σ_A, x_B)` and `ρ(σ_B, x_A)`, each with the pseudospin factor first.
pub fn reduce_all_subspaces(rho: &DensityMatrix) -> Result<Reductions> {
    let [sa, xa, sb, xb] = two_photon_labels(rho.factors())?;
    let keeps = [
        vec![sa.clone(), xa.clone()],
        vec![sb.clone(), xb.clone()],
        vec![sa, xb],
        vec![sb, xa],
    ];
    let mut out: Vec<DensityMatrix> = keeps
        .par_iter()
        .map(|k| partial_trace(rho, k))
        .collect::<Result<Vec<_>>>()?;
    let sigma_b_x_a = out.pop().expect("four");
    let sigma_a_x_b = out.pop().expect("four");
    let local_b = out.pop().expect("four");
    let local_a = out.pop().expect("four");
    Ok(Reductions {
        local_a,
        local_b,
        sigma_a_x_b,
        sigma_b_x_a,
    })
}

/// One labeled texture analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceReport {
    pub label: String,
    #[serde(flatten)]
    pub report: TextureReport,
}

/// Reports for the joint texture (pure states only) and the four reductions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedReport {
    pub joint: Option<SubspaceReport>,
    #[serde(rename = "local_A")]
    pub local_a: SubspaceReport,
    #[serde(rename = "local_B")]
    pub local_b: SubspaceReport,
    #[serde(rename = "nonlocal_sigmaA_xB")]
    pub nonlocal_sigma_a_x_b: SubspaceReport,
    #[serde(rename = "nonlocal_xA_sigmaB")]
    pub nonlocal_x_a_sigma_b: SubspaceReport,
    pub nested: bool,
}

impl NestedReport {
    /// Present reports in the order joint, local A, local B, the two hybrids.
    pub fn all(&self) -> Vec<&SubspaceReport> {
        let mut v: Vec<&SubspaceReport> = self.joint.iter().collect();
        v.extend([
            &self.local_a,
            &self.local_b,
            &self.nonlocal_sigma_a_x_b,
            &self.nonlocal_x_a_sigma_b,
        ]);
        v
    }

    pub fn get(&self, label: &str) -> Option<&SubspaceReport> {
        self.all().into_iter().find(|r| r.label == label)
    }
}

/// Stokes fields of the joint wavefunction (when `rho` is pure) and the four reductions.
pub fn nested_fields(
    rho: &DensityMatrix,
    grid: &ModeGrid,
) -> Result<Vec<(&'static str, StokesField)>> {
    let red = reduce_all_subspaces(rho)?;
    let mut out = Vec::with_capacity(5);
    if let Some(psi) = rho.as_pure() {
        out.push((LABEL_JOINT, stokes_from_wavefunction(&psi, grid)?));
    }
    for (label, r) in red.labeled() {
        out.push((label, stokes_from_density(r, grid)?));
    }
    Ok(out)
}

/// Builds the report from precomputed fields (as returned by [`nested_fields`]).
pub fn nested_report_from_fields(
    fields: &[(&str, StokesField)],
    estimator: ChargeEstimator,
) -> Result<NestedReport> {
    let reports: Vec<SubspaceReport> = fields
        .par_iter()
        .map(|(label, f)| {
            Ok(SubspaceReport {
                label: label.to_string(),
                report: classify_texture(f, estimator)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let find = |l: &str| reports.iter().find(|r| r.label == l).cloned();
    let missing = || Error::InvalidState("missing reduced subspace".into());
    let nested = reports
        .iter()
        .filter(|r| r.report.is_quantized_nontrivial(NESTED_RESIDUAL_TOL))
        .count()
        >= 2;
    Ok(NestedReport {
        joint: find(LABEL_JOINT),
        local_a: find(LABEL_LOCAL_A).ok_or_else(missing)?,
        local_b: find(LABEL_LOCAL_B).ok_or_else(missing)?,
        nonlocal_sigma_a_x_b: find(LABEL_SIGMA_A_X_B).ok_or_else(missing)?,
        nonlocal_x_a_sigma_b: find(LABEL_X_A_SIGMA_B).ok_or_else(missing)?,
        nested,
    })
}

/// Texture analysis of the joint state and its four reductions.
///
/// `nested` is set when at least two reports carry a nonzero rounded charge
/// with residual below [`NESTED_RESIDUAL_TOL`].
pub fn nested_report(
    rho: &DensityMatrix,
    grid: &ModeGrid,
    estimator: ChargeEstimator,
) -> Result<NestedReport> {
    nested_report_from_fields(&nested_fields(rho, grid)?, estimator)
}
