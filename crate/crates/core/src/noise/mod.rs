//! Noise channels acting on skyrmion-carrying states and reproducible sweeps.
//!
//! - Dephasing: a random phase `φ ~ N(μ, σ)` on the coherences between the
//!   terms of a coefficient-form state, averaged analytically or by sampling.
//! - Wishart mixing: convex combination with `GG†/Tr(GG†)` for a complex
//!   Gaussian `D×K` matrix `G`, kept in factored form.
//! - Depolarization: convex combination with `I/dim`.

pub mod rng;
mod sweep;

pub use sweep::{
    breakdown_threshold, rows_to_csv, run_sweep, Observable, SweepConfig, SweepFamily, SweepRow,
    BREAKDOWN_RESIDUAL,
};

use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::qstate::{DensityMatrix, Factor, Storage};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingMode {
    #[default]
    Analytic,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DephasingSpec {
    #[serde(default)]
    pub mu: f64,
    pub sigma: f64,
    #[serde(default)]
    pub mode: DephasingMode,
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_shots() -> usize {
    1000
}

impl DephasingSpec {
    pub fn analytic(mu: f64, sigma: f64) -> Self {
        Self {
            mu,
            sigma,
            mode: DephasingMode::Analytic,
            shots: default_shots(),
            seed: 0,
        }
    }

    pub fn monte_carlo(mu: f64, sigma: f64, shots: usize, seed: u64) -> Self {
        Self {
            mu,
            sigma,
            mode: DephasingMode::MonteCarlo,
            shots,
            seed,
        }
    }
}

/// Dephases a coefficient-form state.
///
/// Term `n` acquires the phase `e^{i n φ}` relative to term 0, so `c_mn`
/// picks up `e^{i(n−m)φ}`; for two terms this is one shared phase on the
/// cross terms. The analytic average multiplies `c_mn` by
/// `exp(i(n−m)μ − (n−m)²σ²/2)`; the sampled average uses `shots` draws
/// from the stream `"dephase"` of `spec.seed`.
pub fn dephase(rho: &DensityMatrix, spec: &DephasingSpec) -> Result<DensityMatrix> {
    let Storage::Coefficient { basis, coeffs } = rho.storage() else {
        return Err(Error::NotCoefficientForm);
    };
    if spec.sigma.is_nan() || spec.sigma < 0.0 || !spec.mu.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "invalid dephasing parameters mu={}, sigma={}",
            spec.mu, spec.sigma
        )));
    }
    let n = coeffs.nrows();
    let out = match spec.mode {
        DephasingMode::Analytic => DMatrix::from_fn(n, n, |a, b| {
            if a == b {
                coeffs[(a, b)]
            } else {
                let k = b as f64 - a as f64;
                coeffs[(a, b)]
                    * C64::from_polar((-k * k * spec.sigma * spec.sigma / 2.0).exp(), k * spec.mu)
            }
        }),
        DephasingMode::MonteCarlo => {
            if spec.shots == 0 {
                return Err(Error::InvalidSpec(
                    "monte_carlo dephasing needs shots >= 1".into(),
                ));
            }
            let normal =
                Normal::new(spec.mu, spec.sigma).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            let mut r = rng::stream_rng(spec.seed, "dephase");
            let mut acc = DMatrix::<C64>::zeros(n, n);
            for _ in 0..spec.shots {
                let phi: f64 = normal.sample(&mut r);
                for b in 0..n {
                    for a in 0..n {
                        acc[(a, b)] += C64::from_polar(1.0, (b as f64 - a as f64) * phi);
                    }
                }
            }
            DMatrix::from_fn(n, n, |a, b| {
                if a == b {
                    coeffs[(a, b)]
                } else {
                    coeffs[(a, b)] * acc[(a, b)] / spec.shots as f64
                }
            })
        }
    };
    DensityMatrix::coefficient(rho.factors().to_vec(), basis.clone(), out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WishartSpec {
    /// Rank `K` of the Gaussian factor.
    pub k: usize,
    pub seed: u64,
}

/// `GG†/Tr(GG†)` over `factors`, stored as normalized columns of `G` with
/// weights `|g_k|²/Σ|g|²`.
///
/// Real and imaginary parts of `G` are independent `N(0, 1/2)`, drawn column
/// by column from the stream `key` of `spec.seed`.
pub fn wishart_density(
    factors: Vec<Factor>,
    spec: &WishartSpec,
    key: &str,
) -> Result<DensityMatrix> {
    let d: usize = factors.iter().map(|f| f.dim).product();
    if spec.k == 0 || spec.k > d {
        return Err(Error::RankExceedsDimension {
            rank: spec.k,
            dim: d,
        });
    }
    let mut r = rng::stream_rng(spec.seed, key);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut g = DMatrix::<C64>::zeros(d, spec.k);
    for j in 0..spec.k {
        for i in 0..d {
            let re: f64 = StandardNormal.sample(&mut r);
            let im: f64 = StandardNormal.sample(&mut r);
            g[(i, j)] = C64::new(re * s, im * s);
        }
    }
    let norms: Vec<f64> = g.column_iter().map(|c| c.norm_squared()).collect();
    let total: f64 = norms.iter().sum();
    for (j, n) in norms.iter().enumerate() {
        g.column_mut(j).unscale_mut(n.sqrt());
    }
    let mut weights: Vec<f64> = norms.iter().map(|n| n / total).collect();
    // Absorb rounding so the weights sum to one within the factored-state check.
    let excess: f64 = weights.iter().sum::<f64>() - 1.0;
    let (imax, _) =
        weights.iter().enumerate().fold(
            (0, f64::MIN),
            |acc, (i, w)| if *w > acc.1 { (i, *w) } else { acc },
        );
    weights[imax] -= excess;
    DensityMatrix::factored(factors, weights, g)
}

/// `(1−ε)ρ + εσ`. Two factored operands give a factored result.
pub fn mix(rho: &DensityMatrix, noise: &DensityMatrix, eps: f64) -> Result<DensityMatrix> {
    if rho.factors() != noise.factors() {
        return Err(Error::ShapeMismatch(
            "state and noise carry different factors".into(),
        ));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidSpec(format!(
            "mixing probability {eps} outside [0, 1]"
        )));
    }
    if eps == 0.0 {
        return Ok(rho.clone());
    }
    if eps == 1.0 {
        return Ok(noise.clone());
    }
    if let (
        Storage::Factored {
            weights: wa,
            vectors: va,
        },
        Storage::Factored {
            weights: wb,
            vectors: vb,
        },
    ) = (rho.storage(), noise.storage())
    {
        let mut w: Vec<f64> = wa.iter().map(|x| x * (1.0 - eps)).collect();
        w.extend(wb.iter().map(|x| x * eps));
        let excess: f64 = w.iter().sum::<f64>() - 1.0;
        if excess.abs() <= 1e-12 {
            let mut v = DMatrix::zeros(va.nrows(), va.ncols() + vb.ncols());
            v.columns_mut(0, va.ncols()).copy_from(va);
            v.columns_mut(va.ncols(), vb.ncols()).copy_from(vb);
            return DensityMatrix::factored(rho.factors().to_vec(), w, v);
        }
    }
    DensityMatrix::mixture(vec![(1.0 - eps, rho.clone()), (eps, noise.clone())])
}

/// `(1−ε)ρ + ε·I/dim` for `ε ∈ [0, 1)`.
pub fn depolarize(rho: &DensityMatrix, eps: f64) -> Result<DensityMatrix> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidSpec(format!(
            "depolarizing strength {eps} outside [0, 1)"
        )));
    }
    mix(
        rho,
        &DensityMatrix::maximally_mixed(rho.factors().to_vec())?,
        eps,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::two_photon_coefficient_state;
    use crate::qstate::{max_abs_diff, single_photon_factors, validate_density, ModeGrid};
    use crate::synth::analytic_modes_q1;

    fn conjugate_pair(m: usize) -> DensityMatrix {
        let g = ModeGrid::new(m, 1.0).unwrap();
        let (u1, u2) = analytic_modes_q1(&g, -1).unwrap();
        two_photon_coefficient_state(
            &[u1, u2],
            true,
            DMatrix::from_element(2, 2, C64::new(0.5, 0.0)),
        )
        .unwrap()
    }

    fn coeffs(r: &DensityMatrix) -> DMatrix<C64> {
        match r.storage() {
            Storage::Coefficient { coeffs, .. } => coeffs.clone(),
            _ => panic!("not coefficient form"),
        }
    }

    #[test]
    fn zero_dephasing_is_identity() {
        let r = conjugate_pair(6);
        let d = dephase(&r, &DephasingSpec::analytic(0.0, 0.0)).unwrap();
        assert!(max_abs_diff(&coeffs(&d), &coeffs(&r)) <= 1e-15);
    }

    #[test]
    fn unit_sigma_attenuation() {
        let d = dephase(&conjugate_pair(6), &DephasingSpec::analytic(0.0, 1.0)).unwrap();
        let c = coeffs(&d);
        assert!((c[(0, 1)].re - 0.5 * 0.606_530_659_712_633_4).abs() < 1e-15);
        assert_eq!(c[(0, 0)], C64::new(0.5, 0.0));
    }

    #[test]
    fn dephasing_needs_coefficient_form() {
        let r = DensityMatrix::maximally_mixed(single_photon_factors("A", 4)).unwrap();
        assert!(matches!(
            dephase(&r, &DephasingSpec::analytic(0.0, 1.0)),
            Err(Error::NotCoefficientForm)
        ));
    }

    #[test]
    fn wishart_trace_rank_and_reproducibility() {
        let f = single_photon_factors("A", 4);
        let spec = WishartSpec { k: 3, seed: 11 };
        let w = wishart_density(f.clone(), &spec, "w").unwrap();
        let rep = validate_density(&w, 1e-10);
        assert!(rep.passed, "{rep:?}");
        assert!((w.trace().re - 1.0).abs() < 1e-12);
        let eig = crate::qstate::spectral_decompose(&w.to_dense()).unwrap();
        assert_eq!(eig.values.iter().filter(|v| **v > 1e-12).count(), 3);
        assert_eq!(w, wishart_density(f.clone(), &spec, "w").unwrap());
        assert!(matches!(
            wishart_density(f, &WishartSpec { k: 9, seed: 0 }, "w"),
            Err(Error::RankExceedsDimension { rank: 9, dim: 8 })
        ));
    }

    #[test]
    fn mix_endpoints_and_shape_check() {
        let f = single_photon_factors("A", 3);
        let a = wishart_density(f.clone(), &WishartSpec { k: 1, seed: 1 }, "a").unwrap();
        let b = wishart_density(f, &WishartSpec { k: 2, seed: 2 }, "b").unwrap();
        assert_eq!(mix(&a, &b, 0.0).unwrap(), a);
        assert_eq!(mix(&a, &b, 1.0).unwrap(), b);
        let m = mix(&a, &b, 0.3).unwrap();
        let expect = a.to_dense().scale(0.7) + b.to_dense().scale(0.3);
        assert!(max_abs_diff(&m.to_dense(), &expect) < 1e-15);
        let other = DensityMatrix::maximally_mixed(single_photon_factors("B", 3)).unwrap();
        assert!(matches!(mix(&a, &other, 0.5), Err(Error::ShapeMismatch(_))));
    }
}
