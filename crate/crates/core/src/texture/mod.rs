//! Coherence-Stokes fields, lattice skyrmion numbers and texture classes.
//!
//! A field lives on the `M×M` grid of coordinate pairs `(x, x')`; the row
//! index `i` carries `x` and the column index `j` carries `x'`. All arrays are
//! stored row-major with flat index `i·M + j`.

mod charge;
pub mod csv;

pub use charge::{
    classify_texture, pairwise_sum, skyrmion_number, ChargeEstimator, Diagnostics, TextureClass,
    TextureReport, BOUNDARY_FLAG_RAD, MAX_UNDEFINED_FRACTION,
};

use crate::qstate::{permute_dense, DensityMatrix, FactorKind, ModeGrid, PureState};
use crate::{Error, Result, C64};

/// Relative `S_0` threshold below which a point is undefined.
pub const S0_REL_THRESHOLD: f64 = 1e-12;

/// Stokes components on the grid plus the normalized field.
#[derive(Clone, Debug, PartialEq)]
pub struct StokesField {
    pub grid: ModeGrid,
    pub sx: Vec<f64>,
    pub sy: Vec<f64>,
    pub sz: Vec<f64>,
    pub s0: Vec<f64>,
    /// Unit vectors where defined, zero elsewhere.
    pub s: Vec<[f64; 3]>,
    pub defined: Vec<bool>,
}

impl StokesField {
    /// Builds the field from raw `(S_x, S_y, S_z)` arrays.
    pub fn from_components(
        grid: ModeGrid,
        sx: Vec<f64>,
        sy: Vec<f64>,
        sz: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.m() * grid.m();
        if sx.len() != n || sy.len() != n || sz.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: sx.len(),
            });
        }
        let s0: Vec<f64> = (0..n)
            .map(|k| (sx[k] * sx[k] + sy[k] * sy[k] + sz[k] * sz[k]).sqrt())
            .collect();
        let max = s0.iter().copied().fold(0.0, f64::max);
        let thr = S0_REL_THRESHOLD * max;
        let defined: Vec<bool> = s0.iter().map(|&v| max > 0.0 && v >= thr).collect();
        let s = (0..n)
            .map(|k| {
                if defined[k] {
                    [sx[k] / s0[k], sy[k] / s0[k], sz[k] / s0[k]]
                } else {
                    [0.0; 3]
                }
            })
            .collect();
        Ok(Self {
            grid,
            sx,
            sy,
            sz,
            s0,
            s,
            defined,
        })
    }

    /// Builds the field from the `HH`, `HV` and `VV` blocks, each indexed `(x, x')`.
    pub fn from_blocks(
        grid: ModeGrid,
        hh: impl Fn(usize, usize) -> C64,
        hv: impl Fn(usize, usize) -> C64,
        vv: impl Fn(usize, usize) -> C64,
    ) -> Result<Self> {
        let m = grid.m();
        let n = m * m;
        let (mut sx, mut sy, mut sz) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for i in 0..m {
            for j in 0..m {
                let c = hv(i, j);
                sx.push(c.re);
                sy.push(c.im);
                sz.push(hh(i, j).norm() - vv(i, j).norm());
            }
        }
        Self::from_components(grid, sx, sy, sz)
    }

    /// Unit field given pointwise; every point defined with `S_0 = 1`.
    pub fn from_unit_vectors(grid: ModeGrid, s: Vec<[f64; 3]>) -> Result<Self> {
        let sx = s.iter().map(|v| v[0]).collect();
        let sy = s.iter().map(|v| v[1]).collect();
        let sz = s.iter().map(|v| v[2]).collect();
        Self::from_components(grid, sx, sy, sz)
    }

    pub fn m(&self) -> usize {
        self.grid.m()
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn undefined_fraction(&self) -> f64 {
        self.defined.iter().filter(|d| !**d).count() as f64 / self.len() as f64
    }

    /// Same field with `S_y` negated.
    pub fn with_sy_negated(&self) -> Result<Self> {
        Self::from_components(
            self.grid.clone(),
            self.sx.clone(),
            self.sy.iter().map(|v| -v).collect(),
            self.sz.clone(),
        )
    }

    /// Normalized field with undefined points replaced by the normalized mean
    /// of their defined neighbours (repeated until every point is filled).
    pub fn filled_unit_field(&self) -> Result<Vec<[f64; 3]>> {
        let frac = self.undefined_fraction();
        if frac >= MAX_UNDEFINED_FRACTION {
            return Err(Error::TooManyUndefinedPoints { fraction: frac });
        }
        let m = self.m();
        let mut s = self.s.clone();
        let mut known = self.defined.clone();
        while known.iter().any(|k| !*k) {
            let mut next = known.clone();
            let mut progressed = false;
            for i in 0..m {
                for j in 0..m {
                    let k = i * m + j;
                    if known[k] {
                        continue;
                    }
                    let mut acc = [0.0; 3];
                    let mut count = 0;
                    for (di, dj) in [
                        (-1i64, 0i64),
                        (1, 0),
                        (0, -1),
                        (0, 1),
                        (-1, -1),
                        (-1, 1),
                        (1, -1),
                        (1, 1),
                    ] {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a < 0 || b < 0 || a >= m as i64 || b >= m as i64 {
                            continue;
                        }
                        let q = a as usize * m + b as usize;
                        if known[q] {
                            for c in 0..3 {
                                acc[c] += s[q][c];
                            }
                            count += 1;
                        }
                    }
                    if count == 0 {
                        continue;
                    }
                    let n = (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt();
                    s[k] = if n > 1e-12 {
                        [acc[0] / n, acc[1] / n, acc[2] / n]
                    } else {
                        [0.0, 0.0, 1.0]
                    };
                    next[k] = true;
                    progressed = true;
                }
            }
            if !progressed {
                return Err(Error::TooManyUndefinedPoints { fraction: frac });
            }
            known = next;
        }
        Ok(s)
    }
}

/// Field of a single-photon density matrix with factors `(pseudospin, mode)`.
///
/// `S_x + iS_y = ρ_HV(x, x')` and `S_z = |ρ_HH(x, x')| − |ρ_VV(x, x')|`.
pub fn stokes_from_density(rho: &DensityMatrix, grid: &ModeGrid) -> Result<StokesField> {
    let f = rho.factors();
    let kinds: Vec<FactorKind> = f.iter().map(|x| x.kind).collect();
    let swap = match kinds.as_slice() {
        [FactorKind::Pseudospin, FactorKind::Mode] => false,
        [FactorKind::Mode, FactorKind::Pseudospin] => true,
        _ => {
            return Err(Error::WrongFactorShape(format!(
                "expected one pseudospin and one mode factor, got {}",
                f.len()
            )))
        }
    };
    let m = grid.m();
    let mode_dim = if swap { f[0].dim } else { f[1].dim };
    if mode_dim != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: mode_dim,
        });
    }
    let mut d = rho.to_dense();
    if swap {
        d = permute_dense(&d, &[m, 2], &[1, 0]);
    }
    StokesField::from_blocks(
        grid.clone(),
        |i, j| d[(i, j)],
        |i, j| d[(i, m + j)],
        |i, j| d[(m + i, m + j)],
    )
}

/// Field of a two-photon wavefunction over `(σ_A, x_A, σ_B, x_B)`, on the
/// `(x_A, x_B)` plane with `(σ_A, σ_B)` in the role of `(σ, σ')`.
pub fn stokes_from_wavefunction(psi: &PureState, grid: &ModeGrid) -> Result<StokesField> {
    let f = psi.factors();
    let kinds: Vec<FactorKind> = f.iter().map(|x| x.kind).collect();
    if kinds
        != [
            FactorKind::Pseudospin,
            FactorKind::Mode,
            FactorKind::Pseudospin,
            FactorKind::Mode,
        ]
    {
        return Err(Error::WrongFactorShape(
            "expected factors (sigma_A, x_A, sigma_B, x_B)".into(),
        ));
    }
    let m = grid.m();
    if f[1].dim != m || f[3].dim != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: f[1].dim,
        });
    }
    let a = psi.amplitudes();
    let at = |sa: usize, xa: usize, sb: usize, xb: usize| a[((sa * m + xa) * 2 + sb) * m + xb];
    StokesField::from_blocks(
        grid.clone(),
        |i, j| at(0, i, 0, j),
        |i, j| at(0, i, 1, j),
        |i, j| at(1, i, 1, j),
    )
}
