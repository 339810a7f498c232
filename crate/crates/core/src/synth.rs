//! Single-photon skyrmion density matrices.
//!
//! Two routes are provided: spectral truncation of an auxiliary Hermitian
//! matrix whose Stokes texture is an exact skyrmion of charge `−l`, and a
//! closed-form pair of orthogonal eigenmodes for `|Q| = 1`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::qstate::{
    single_photon_factors, spectral_decompose, DensityMatrix, ModeGrid, PureState,
};
use crate::{Error, Result, C64};

/// Party label used for single-photon states.
pub const SINGLE_PARTY: &str = "A";

/// Largest `|l|` for which uniform truncation weights are the default.
pub const UNIFORM_WEIGHT_MAX_L: i64 = 5;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthMethod {
    AnalyticQ1,
    #[default]
    Spectral,
}

/// Target texture and truncation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkyrmionSpec {
    /// Winding number; the target charge is `−l`.
    pub l: i64,
    /// Constant in-plane phase: 0 Néel, π/2 Bloch.
    #[serde(default)]
    pub phi0: f64,
    /// Texture radius, defaults to `x_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    pub m: usize,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    /// Truncation rank, defaults to `|l| + 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<SynthMethod>,
}

fn default_x_max() -> f64 {
    1.0
}

impl SkyrmionSpec {
    pub fn new(l: i64, m: usize) -> Self {
        Self {
            l,
            phi0: 0.0,
            r0: None,
            m,
            x_max: 1.0,
            d: None,
            weights: None,
            method: None,
        }
    }

    pub fn grid(&self) -> Result<ModeGrid> {
        ModeGrid::new(self.m, self.x_max)
    }

    pub fn radius(&self) -> f64 {
        self.r0.unwrap_or(self.x_max)
    }

    pub fn rank(&self) -> usize {
        self.d.unwrap_or(self.l.unsigned_abs() as usize + 1)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        let r0 = self.radius();
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::InvalidSpec(format!("r0 must be positive, got {r0}")));
        }
        if self.rank() == 0 {
            return Err(Error::InvalidSpec("rank d must be at least 1".into()));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.rank() {
                return Err(Error::InvalidSpec(format!(
                    "{} weights for rank {}",
                    w.len(),
                    self.rank()
                )));
            }
            let s: f64 = w.iter().sum();
            if w.iter().any(|x| x.is_nan() || *x < 0.0) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidSpec(
                    "weights must be nonnegative and sum to 1".into(),
                ));
            }
        }
        if self.method == Some(SynthMethod::AnalyticQ1) && self.l.abs() != 1 {
            return Err(Error::InvalidSpec("analytic_q1 requires |l| = 1".into()));
        }
        Ok(())
    }
}

fn polar_angle(r: f64, r0: f64) -> f64 {
    if r < r0 {
        PI * r / r0
    } else {
        PI
    }
}

/// Auxiliary Hermitian matrix whose Stokes texture is an exact skyrmion of charge `−l`.
///
/// `A_HH = cos²(Θ/2)`, `A_VV = sin²(Θ/2)`, `A_HV = sin Θ · e^{iΦ}` with
/// `Θ(r)` rising linearly from 0 to π at `R_0` and
/// `Φ = l·atan2(x, x') + Φ_0`. `A_VH` is filled from Hermitian symmetry.
pub fn auxiliary_matrix(spec: &SkyrmionSpec) -> Result<DMatrix<C64>> {
    spec.validate()?;
    let grid = spec.grid()?;
    let m = grid.m();
    let x = grid.points();
    let r0 = spec.radius();
    let mut a = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let th = polar_angle(x[i].hypot(x[j]), r0);
            let ph = spec.l as f64 * x[i].atan2(x[j]) + spec.phi0;
            let hv = C64::from_polar(th.sin(), ph);
            a[(i, j)] = C64::new((th / 2.0).cos().powi(2), 0.0);
            a[(m + i, m + j)] = C64::new((th / 2.0).sin().powi(2), 0.0);
            a[(i, m + j)] = hv;
            a[(m + j, i)] = hv.conj();
        }
    }
    Ok(a)
}

/// Keeps the `d` leading eigenvectors of `a` with the given weights
/// (uniform `1/d` when `None`).
pub fn truncate_to_density(
    a: &DMatrix<C64>,
    d: usize,
    weights: Option<&[f64]>,
    m: usize,
) -> Result<DensityMatrix> {
    let eig = spectral_decompose(a)?;
    let available = eig.values.iter().filter(|v| **v > 1e-10).count();
    if d == 0 || available < d {
        return Err(Error::InsufficientPositiveSpectrum {
            requested: d,
            available,
        });
    }
    let w: Vec<f64> = match weights {
        Some(w) if w.len() == d => w.to_vec(),
        Some(w) => {
            return Err(Error::InvalidSpec(format!(
                "{} weights for rank {d}",
                w.len()
            )))
        }
        None => vec![1.0 / d as f64; d],
    };
    let vectors = eig.vectors.columns(0, d).into_owned();
    DensityMatrix::factored(single_photon_factors(SINGLE_PARTY, m), w, vectors)
}

/// Truncation weights proportional to the leading eigenvalues.
pub fn eigenvalue_weights(a: &DMatrix<C64>, d: usize) -> Result<Vec<f64>> {
    let eig = spectral_decompose(a)?;
    let lead: Vec<f64> = eig.values.iter().take(d).copied().collect();
    if lead.len() < d || lead.iter().any(|v| *v <= 1e-10) {
        let available = eig.values.iter().filter(|v| **v > 1e-10).count();
        return Err(Error::InsufficientPositiveSpectrum {
            requested: d,
            available,
        });
    }
    let s: f64 = lead.iter().sum();
    Ok(lead.iter().map(|v| v / s).collect())
}

/// Normalized closed-form modes `(u_1, u_2)` whose equal mixture carries
/// charge `sign` (`−1` Néel, `+1` anti-Néel).
///
/// `u_1 = (−sign·(i/2)·sin(πx/x_max), 1 + sin²(πx/2x_max))`,
/// `u_2 = (1 − sin²(πx/2x_max), ½·sin(πx/x_max))` as `(H, V)` components.
pub fn analytic_modes_q1(grid: &ModeGrid, sign: i32) -> Result<(PureState, PureState)> {
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidSpec(format!("sign must be ±1, got {sign}")));
    }
    let m = grid.m();
    let xm = grid.x_max();
    let mut u1 = DVector::zeros(2 * m);
    let mut u2 = DVector::zeros(2 * m);
    for (k, &x) in grid.points().iter().enumerate() {
        let s1 = (PI * x / xm).sin();
        let s2 = (PI * x / (2.0 * xm)).sin().powi(2);
        u1[k] = C64::new(0.0, -(sign as f64) * 0.5 * s1);
        u1[m + k] = C64::new(1.0 + s2, 0.0);
        u2[k] = C64::new(1.0 - s2, 0.0);
        u2[m + k] = C64::new(0.5 * s1, 0.0);
    }
    let f = single_photon_factors(SINGLE_PARTY, m);
    Ok((
        PureState::normalized(f.clone(), u1)?,
        PureState::normalized(f, u2)?,
    ))
}

/// `½|u_1⟩⟨u_1| + ½|u_2⟩⟨u_2|` from the closed-form modes.
pub fn analytic_density(grid: &ModeGrid, sign: i32) -> Result<DensityMatrix> {
    let (u1, u2) = analytic_modes_q1(grid, sign)?;
    mode_mixture(&[u1, u2], None)
}

/// `Σ w_i |u_i⟩⟨u_i|`, uniform weights by default.
pub fn mode_mixture(modes: &[PureState], weights: Option<&[f64]>) -> Result<DensityMatrix> {
    let first = modes
        .first()
        .ok_or_else(|| Error::InvalidSpec("no modes".into()))?;
    let d = modes.len();
    let w = weights
        .map(|w| w.to_vec())
        .unwrap_or_else(|| vec![1.0 / d as f64; d]);
    let v = DMatrix::from_fn(first.dim(), d, |i, j| modes[j].amplitudes()[i]);
    DensityMatrix::factored(first.factors().to_vec(), w, v)
}

/// Density matrix with target charge `−l` by the requested method
/// (the spec's own method, else spectral).
pub fn build_single_photon_skyrmion(
    spec: &SkyrmionSpec,
    method: Option<SynthMethod>,
) -> Result<DensityMatrix> {
    let method = method.or(spec.method).unwrap_or_default();
    let spec = SkyrmionSpec {
        method: Some(method),
        ..spec.clone()
    };
    spec.validate()?;
    let grid = spec.grid()?;
    match method {
        SynthMethod::AnalyticQ1 => {
            if spec.rank() != 2 {
                return Err(Error::InvalidSpec("analytic_q1 has rank 2".into()));
            }
            let (u1, u2) = analytic_modes_q1(&grid, -spec.l.signum() as i32)?;
            mode_mixture(&[u1, u2], spec.weights.as_deref())
        }
        SynthMethod::Spectral => {
            let a = auxiliary_matrix(&spec)?;
            let d = spec.rank();
            let weights = match &spec.weights {
                Some(w) => Some(w.clone()),
                None if spec.l.abs() > UNIFORM_WEIGHT_MAX_L => Some(eigenvalue_weights(&a, d)?),
                None => None,
            };
            truncate_to_density(&a, d, weights.as_deref(), spec.m)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{max_abs_diff, validate_density};
    use crate::texture::{
        classify_texture, skyrmion_number, stokes_from_density, ChargeEstimator, StokesField,
        TextureClass,
    };

    fn aux_field(spec: &SkyrmionSpec) -> StokesField {
        let a = auxiliary_matrix(spec).unwrap();
        let m = spec.m;
        StokesField::from_blocks(
            spec.grid().unwrap(),
            |i, j| a[(i, j)],
            |i, j| a[(i, m + j)],
            |i, j| a[(m + i, m + j)],
        )
        .unwrap()
    }

    #[test]
    fn auxiliary_matrix_is_hermitian_and_pointwise_correct() {
        let spec = SkyrmionSpec::new(1, 11);
        let a = auxiliary_matrix(&spec).unwrap();
        assert_eq!(crate::qstate::max_abs_diff(&a, &a.adjoint()), 0.0);
        let f = aux_field(&spec);
        // Centre (0,0) is the north pole; corners are the south pole.
        assert_eq!(f.s[5 * 11 + 5], [0.0, 0.0, 1.0]);
        let corner = f.s[0];
        assert!(corner[0].abs() < 1e-15 && corner[1].abs() < 1e-15 && corner[2] == -1.0);
        let r = validate_density(
            &DensityMatrix::from_dense_unchecked(single_photon_factors("A", 11), a),
            1e-10,
        );
        assert!(r.min_eigenvalue < 0.0 && !r.passed);
    }

    #[test]
    fn auxiliary_texture_charge_and_class() {
        let spec = SkyrmionSpec::new(1, 64);
        let r = classify_texture(&aux_field(&spec), ChargeEstimator::SolidAngle).unwrap();
        assert!((r.q_raw + 1.0).abs() < 1e-3);
        assert_eq!(r.texture_class, TextureClass::Neel);
        let bloch = SkyrmionSpec {
            phi0: PI / 2.0,
            ..spec
        };
        let r = classify_texture(&aux_field(&bloch), ChargeEstimator::SolidAngle).unwrap();
        assert_eq!(r.texture_class, TextureClass::Bloch);
    }

    #[test]
    fn modes_are_orthogonal() {
        for m in [11, 64, 80, 81] {
            let g = ModeGrid::new(m, 1.0).unwrap();
            let (u1, u2) = analytic_modes_q1(&g, -1).unwrap();
            assert!(u1.inner(&u2).norm() < 1e-12);
        }
    }

    #[test]
    fn truncation_charge_and_validity() {
        let spec = SkyrmionSpec::new(1, 32);
        let rho = build_single_photon_skyrmion(&spec, None).unwrap();
        assert!(validate_density(&rho, 1e-10).passed);
        let r = classify_texture(
            &stokes_from_density(&rho, &spec.grid().unwrap()).unwrap(),
            ChargeEstimator::SolidAngle,
        )
        .unwrap();
        assert!((r.q_raw + 1.0).abs() < 0.05);
    }

    #[test]
    fn rank_below_charge_plus_one_misses_the_target() {
        let q = |l: i64, d: usize, m: usize| {
            let mut spec = SkyrmionSpec::new(l, m);
            spec.d = Some(d);
            let rho = build_single_photon_skyrmion(&spec, None).unwrap();
            let f = stokes_from_density(&rho, &spec.grid().unwrap()).unwrap();
            skyrmion_number(&f, ChargeEstimator::SolidAngle)
                .unwrap()
                .q_raw
        };
        assert!((q(3, 4, 32) + 3.0).abs() < 0.05);
        let short = q(3, 3, 32);
        assert!((short.abs() - 3.0).abs() > 0.5, "{short}");
        // On the finer grid one rank short still winds three times.
        assert!((q(3, 3, 64) + 3.0).abs() < 0.05);
        assert!(q(1, 1, 64).abs() < 0.05);
    }

    #[test]
    fn insufficient_spectrum() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]));
        assert!(matches!(
            truncate_to_density(&a, 2, None, 2),
            Err(Error::InsufficientPositiveSpectrum {
                requested: 2,
                available: 1
            })
        ));
    }

    #[test]
    fn analytic_and_spectral_agree_on_charge() {
        let spec = SkyrmionSpec::new(1, 64);
        let g = spec.grid().unwrap();
        for method in [SynthMethod::AnalyticQ1, SynthMethod::Spectral] {
            let rho = build_single_photon_skyrmion(&spec, Some(method)).unwrap();
            let r = classify_texture(
                &stokes_from_density(&rho, &g).unwrap(),
                ChargeEstimator::SolidAngle,
            )
            .unwrap();
            assert_eq!(r.q_rounded, -1, "{method:?}");
            assert!(r.integer_residual() < 0.05);
        }
    }

    #[test]
    fn phase_of_eigenvectors_does_not_matter() {
        let spec = SkyrmionSpec::new(2, 16);
        let rho = build_single_photon_skyrmion(&spec, None).unwrap();
        let crate::qstate::Storage::Factored { weights, vectors } = rho.storage() else {
            panic!()
        };
        let mut rotated = vectors.clone();
        for (j, mut col) in rotated.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, 0.7 * j as f64 + 0.3);
        }
        let rho2 =
            DensityMatrix::factored(rho.factors().to_vec(), weights.clone(), rotated).unwrap();
        assert!(max_abs_diff(&rho.to_dense(), &rho2.to_dense()) < 1e-10);
    }

    #[test]
    fn config_json_round_trip() {
        let s: SkyrmionSpec =
            serde_json::from_str(r#"{"l":3,"phi0":0.5,"m":32,"method":"spectral"}"#).unwrap();
        assert_eq!(s.x_max, 1.0);
        assert_eq!(s.rank(), 4);
        assert!(serde_json::from_str::<SkyrmionSpec>(r#"{"l":1}"#).is_err());
        let back: SkyrmionSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
