//! `N`-photon biseparable mixtures of Bell pairs and their pair reduction.
//!
//! Every pair `(i, j)` of the `N`-photon state reduces to
//! `w₁·|Bell⟩⟨Bell| + w₂·(ρ⁽⁰⁾⊗ϱ + ϱ⊗ρ⁽⁰⁾) + w₃·ϱ⊗ϱ` with
//! `w₁ = 2/(N(N−1))`, `w₂ = 2(N−2)/(N(N−1))`, `w₃ = (N−2)(N−3)/(N(N−1))`,
//! independent of the pair. Only this reduction is ever built.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bipartite::{build_two_photon, nested_report, NestedReport, PARTY_A};
use crate::qstate::{
    partial_trace, single_photon_factors, tensor_product, DensityMatrix, Factor, FactorKind,
    ModeGrid, PureState,
};
use crate::texture::ChargeEstimator;
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarrhoKind {
    Uniform,
    EdgeConcentrated,
}

/// Diagonal single-photon state of the spectator photons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarrhoSpec {
    pub kind: VarrhoKind,
    pub m: usize,
    /// Occupied outermost bins per side (edge-concentrated only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_bins: Option<usize>,
}

impl VarrhoSpec {
    pub fn uniform(m: usize) -> Self {
        Self {
            kind: VarrhoKind::Uniform,
            m,
            edge_bins: None,
        }
    }

    pub fn edge(m: usize, edge_bins: Option<usize>) -> Self {
        Self {
            kind: VarrhoKind::EdgeConcentrated,
            m,
            edge_bins,
        }
    }

    /// `max(2, M/10)` unless set.
    pub fn resolved_edge_bins(&self) -> usize {
        self.edge_bins.unwrap_or_else(|| (self.m / 10).max(2))
    }

    /// Diagonal of `ϱ` in `(σ, x)` order.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        let m = self.m;
        match self.kind {
            VarrhoKind::Uniform => Ok(vec![1.0 / (2 * m) as f64; 2 * m]),
            VarrhoKind::EdgeConcentrated => {
                let e = self.resolved_edge_bins();
                if e == 0 || 2 * e > m {
                    return Err(Error::EdgeBinsTooLarge { edge_bins: e, m });
                }
                let w = 1.0 / (4 * e) as f64;
                Ok((0..2 * m)
                    .map(|k| {
                        let x = k % m;
                        if x < e || x >= m - e {
                            w
                        } else {
                            0.0
                        }
                    })
                    .collect())
            }
        }
    }
}

/// `ϱ` as a dense diagonal matrix over `(σ, x)` of `party`.
pub fn single_photon_varrho(spec: &VarrhoSpec, party: &str) -> Result<DensityMatrix> {
    ModeGrid::new(spec.m, 1.0)?;
    let diag = spec.diagonal()?;
    let m = DMatrix::from_diagonal(&DVector::from_iterator(
        diag.len(),
        diag.iter().map(|v| C64::new(*v, 0.0)),
    ));
    Ok(DensityMatrix::from_dense_unchecked(
        single_photon_factors(party, spec.m),
        m,
    ))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The three pair weights as reduced fractions `(numerator, denominator)`.
pub fn pair_weights_exact(n: u64) -> Result<[(u64, u64); 3]> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!("need N >= 2 photons, got {n}")));
    }
    let den = n * (n - 1);
    let nums = [2, 2 * (n - 2), (n - 2) * n.saturating_sub(3)];
    Ok(nums.map(|a| {
        let g = gcd(a, den).max(1);
        (a / g, den / g)
    }))
}

pub fn pair_weights(n: u64) -> Result<[f64; 3]> {
    Ok(pair_weights_exact(n)?.map(|(a, b)| a as f64 / b as f64))
}

fn check_pair_shapes(bell: &PureState, varrho: &DensityMatrix) -> Result<usize> {
    let f = bell.factors();
    let kinds: Vec<FactorKind> = f.iter().map(|x| x.kind).collect();
    if kinds
        != [
            FactorKind::Pseudospin,
            FactorKind::Mode,
            FactorKind::Pseudospin,
            FactorKind::Mode,
        ]
    {
        return Err(Error::ShapeMismatch(
            "pair state must be over (sigma, x, sigma, x)".into(),
        ));
    }
    let m = f[1].dim;
    if varrho.factors().len() != 2 || varrho.dim() != 2 * m {
        return Err(Error::ShapeMismatch(format!(
            "single-photon state must be {0}x{0}",
            2 * m
        )));
    }
    Ok(m)
}

/// Reduced state of any photon pair, as a mixture of product and Bell terms.
pub fn reduced_pair_state(
    n: u64,
    bell: &PureState,
    varrho: &DensityMatrix,
) -> Result<DensityMatrix> {
    let m = check_pair_shapes(bell, varrho)?;
    let [w1, w2, w3] = pair_weights(n)?;
    let bell_rho = bell.to_density();
    if w2 == 0.0 && w3 == 0.0 {
        return Ok(bell_rho);
    }
    let (pa, pb) = (&bell.factors()[0].party, &bell.factors()[2].party);
    let rho0 = partial_trace(&bell_rho, &bell.factors()[..2])?;
    let at = |r: &DensityMatrix, p: &str| r.relabel(single_photon_factors(p, m));
    let (r0a, r0b) = (at(&rho0, pa)?, at(&rho0, pb)?);
    let (va, vb) = (at(varrho, pa)?, at(varrho, pb)?);
    let mut terms = vec![(w1, bell_rho)];
    terms.push((w2, tensor_product(&r0a, &vb)?));
    terms.push((w2, tensor_product(&va, &r0b)?));
    if w3 > 0.0 {
        terms.push((w3, tensor_product(&va, &vb)?));
    }
    DensityMatrix::mixture(terms)
}

/// Nested report of the reduced pair built from the Bell state of `modes`
/// (no conjugation, zero phase). Identical for every pair.
pub fn multiphoton_nested_report(
    n: u64,
    varrho: &VarrhoSpec,
    modes: &[PureState],
    grid: &ModeGrid,
    estimator: ChargeEstimator,
) -> Result<NestedReport> {
    let bell = build_two_photon(modes, false, 0.0, None)?;
    let vr = single_photon_varrho(varrho, PARTY_A)?;
    let pair = reduced_pair_state(n, &bell, &vr)?;
    nested_report(&pair, grid, estimator)
}

/// Factor list of photon `k` (1-based) in an `N`-photon register.
pub fn photon_factors(k: usize, m: usize) -> Vec<Factor> {
    single_photon_factors(&format!("s{k}"), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{max_abs_diff, validate_density};
    use crate::synth::analytic_modes_q1;

    #[test]
    fn weights_sum_to_one() {
        for n in 2..40u64 {
            let w = pair_weights_exact(n).unwrap();
            // a/b + 2c/d + e/f == 1 over the common denominator N(N-1).
            let den = n * (n - 1);
            let total: u64 =
                w[0].0 * (den / w[0].1) + 2 * w[1].0 * (den / w[1].1) + w[2].0 * (den / w[2].1);
            assert_eq!(total, den, "N={n}");
        }
        assert_eq!(pair_weights_exact(5).unwrap(), [(1, 10), (3, 10), (3, 10)]);
        assert!(pair_weights(1).is_err());
    }

    #[test]
    fn varrho_profiles() {
        let u = VarrhoSpec::uniform(80).diagonal().unwrap();
        assert!(u.iter().all(|v| *v == 1.0 / 160.0));
        let e = VarrhoSpec::edge(80, Some(8)).diagonal().unwrap();
        assert_eq!(e.iter().filter(|v| **v > 0.0).count(), 32);
        assert!(e.iter().filter(|v| **v > 0.0).all(|v| *v == 1.0 / 32.0));
        assert_eq!(VarrhoSpec::edge(80, None).resolved_edge_bins(), 8);
        assert_eq!(VarrhoSpec::edge(12, None).resolved_edge_bins(), 2);
        assert!(matches!(
            VarrhoSpec::edge(10, Some(6)).diagonal(),
            Err(Error::EdgeBinsTooLarge { .. })
        ));
        let r = single_photon_varrho(&VarrhoSpec::edge(20, None), "A").unwrap();
        assert!(validate_density(&r, 1e-12).passed);
    }

    #[test]
    fn two_photons_give_the_bell_state() {
        let g = ModeGrid::new(6, 1.0).unwrap();
        let (u1, u2) = analytic_modes_q1(&g, -1).unwrap();
        let bell = build_two_photon(&[u1, u2], false, 0.0, None).unwrap();
        let vr = single_photon_varrho(&VarrhoSpec::uniform(6), "A").unwrap();
        let pair = reduced_pair_state(2, &bell, &vr).unwrap();
        assert_eq!(pair.as_pure().unwrap(), bell);
        let pair5 = reduced_pair_state(5, &bell, &vr).unwrap();
        assert!((pair5.trace().re - 1.0).abs() < 1e-12);
        let d = pair5.to_dense();
        assert!(max_abs_diff(&d, &d.adjoint()) < 1e-15);
    }
}
