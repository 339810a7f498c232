use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::factor::Factor;
use super::linalg::{hermiticity_residual, spectral_decompose};
use super::DENSITY_TOL;
use crate::{Error, Result, C64};

/// Budget (complex entries) under which a product of two factored states is
/// itself stored factored.
const FACTORED_PRODUCT_BUDGET: usize = 1 << 20;

fn total_dim(factors: &[Factor]) -> usize {
    factors.iter().map(|f| f.dim).product()
}

fn check_unique(factors: &[Factor]) -> Result<()> {
    for (i, a) in factors.iter().enumerate() {
        if factors[..i].iter().any(|b| b.same_label(a)) {
            return Err(Error::LabelCollision(a.to_string()));
        }
    }
    Ok(())
}

/// Unit-norm state vector over labeled factors.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    factors: Vec<Factor>,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Requires unit 2-norm within `1e-12`.
    pub fn new(factors: Vec<Factor>, amplitudes: DVector<C64>) -> Result<Self> {
        check_unique(&factors)?;
        let d = total_dim(&factors);
        if amplitudes.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: amplitudes.len(),
            });
        }
        let n = amplitudes.norm();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state norm {n} is not 1")));
        }
        Ok(Self {
            factors,
            amplitudes,
        })
    }

    /// Divides by the 2-norm first.
    pub fn normalized(factors: Vec<Factor>, amplitudes: DVector<C64>) -> Result<Self> {
        let n = amplitudes.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::new(factors, amplitudes.unscale(n))
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn conj(&self) -> PureState {
        Self {
            factors: self.factors.clone(),
            amplitudes: self.amplitudes.map(|z| z.conj()),
        }
    }

    pub fn relabel(&self, factors: Vec<Factor>) -> Result<PureState> {
        Self::new(factors, self.amplitudes.clone())
    }

    /// Rank-one factored density matrix `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            factors: self.factors.clone(),
            storage: Storage::Factored {
                weights: vec![1.0],
                vectors: DMatrix::from_column_slice(self.dim(), 1, self.amplitudes.as_slice()),
            },
        }
    }
}

/// Representation of a density operator.
#[derive(Clone, Debug, PartialEq)]
pub enum Storage {
    /// Full matrix, row index = ket.
    Dense(DMatrix<C64>),
    /// `Σ_k w_k |v_k⟩⟨v_k|` with unit columns `v_k`.
    Factored {
        weights: Vec<f64>,
        vectors: DMatrix<C64>,
    },
    /// `Σ_mn c_mn |b_m⟩⟨b_n|` with orthonormal columns `b_m`.
    Coefficient {
        basis: DMatrix<C64>,
        coeffs: DMatrix<C64>,
    },
    /// Tensor product of the operands, factors concatenated in order.
    Product(Vec<DensityMatrix>),
    /// Convex combination of states over the same factors.
    Mixture(Vec<(f64, DensityMatrix)>),
    /// `I / dim`.
    MaximallyMixed,
}

/// Density operator over labeled factors.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    factors: Vec<Factor>,
    storage: Storage,
}

impl DensityMatrix {
    /// Validates a dense matrix. Eigenvalues in `[-1e-10, 0)` are clamped to
    /// zero and the trace renormalized.
    pub fn from_dense(factors: Vec<Factor>, m: DMatrix<C64>) -> Result<Self> {
        check_unique(&factors)?;
        let d = total_dim(&factors);
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.nrows(),
            });
        }
        let herm = hermiticity_residual(&m);
        if herm > DENSITY_TOL {
            return Err(Error::NonHermitian(herm));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > DENSITY_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let eig = spectral_decompose(&m)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -DENSITY_TOL {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min:e} below tolerance"
            )));
        }
        let m = if min < 0.0 {
            let mut e = eig;
            for v in e.values.iter_mut() {
                *v = v.max(0.0);
            }
            let s: f64 = e.values.iter().sum();
            e.values.iter_mut().for_each(|v| *v /= s);
            e.reconstruct()
        } else {
            (&m + m.adjoint()).scale(0.5)
        };
        Ok(Self {
            factors,
            storage: Storage::Dense(m),
        })
    }

    /// Wraps a dense matrix without any check.
    pub fn from_dense_unchecked(factors: Vec<Factor>, m: DMatrix<C64>) -> Self {
        Self {
            factors,
            storage: Storage::Dense(m),
        }
    }

    /// `Σ w_k |v_k⟩⟨v_k|`; weights nonnegative summing to 1, columns unit norm.
    pub fn factored(
        factors: Vec<Factor>,
        weights: Vec<f64>,
        vectors: DMatrix<C64>,
    ) -> Result<Self> {
        check_unique(&factors)?;
        let d = total_dim(&factors);
        if vectors.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: vectors.nrows(),
            });
        }
        if vectors.ncols() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} weights for {} vectors",
                weights.len(),
                vectors.ncols()
            )));
        }
        check_weights(&weights)?;
        for (k, col) in vectors.column_iter().enumerate() {
            let n = col.norm();
            if (n - 1.0).abs() > DENSITY_TOL {
                return Err(Error::InvalidState(format!("vector {k} has norm {n}")));
            }
        }
        Ok(Self {
            factors,
            storage: Storage::Factored { weights, vectors },
        })
    }

    /// `Σ c_mn |b_m⟩⟨b_n|`; `c` Hermitian PSD with unit trace, basis orthonormal.
    pub fn coefficient(
        factors: Vec<Factor>,
        basis: DMatrix<C64>,
        coeffs: DMatrix<C64>,
    ) -> Result<Self> {
        check_unique(&factors)?;
        let d = total_dim(&factors);
        if basis.nrows() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: basis.nrows(),
            });
        }
        let n = basis.ncols();
        if coeffs.nrows() != n || coeffs.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "coefficient matrix must be {n}x{n}"
            )));
        }
        let gram = basis.adjoint() * &basis;
        let dev = super::linalg::max_abs_diff(&gram, &DMatrix::identity(n, n));
        if dev > DENSITY_TOL {
            return Err(Error::NonOrthogonalModes(dev));
        }
        check_coefficients(&coeffs)?;
        Ok(Self {
            factors,
            storage: Storage::Coefficient { basis, coeffs },
        })
    }

    pub fn maximally_mixed(factors: Vec<Factor>) -> Result<Self> {
        check_unique(&factors)?;
        Ok(Self {
            factors,
            storage: Storage::MaximallyMixed,
        })
    }

    /// Convex combination; every term must carry the same factors.
    pub fn mixture(terms: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(Error::InvalidState("empty mixture".into()));
        };
        let factors = first.1.factors.clone();
        for (_, t) in &terms {
            if t.factors != factors {
                return Err(Error::ShapeMismatch(
                    "mixture terms carry different factors".into(),
                ));
            }
        }
        let w: Vec<f64> = terms.iter().map(|t| t.0).collect();
        check_weights(&w)?;
        Ok(Self {
            factors,
            storage: Storage::Mixture(terms),
        })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn dim(&self) -> usize {
        total_dim(&self.factors)
    }

    /// Same operator with renamed factors (dimensions must agree).
    pub fn relabel(&self, factors: Vec<Factor>) -> Result<Self> {
        check_unique(&factors)?;
        if factors.len() != self.factors.len()
            || factors
                .iter()
                .zip(&self.factors)
                .any(|(a, b)| a.dim != b.dim)
        {
            return Err(Error::ShapeMismatch(
                "relabel must preserve factor dimensions".into(),
            ));
        }
        if let Storage::Product(ops) = &self.storage {
            let mut out = Vec::with_capacity(ops.len());
            let mut k = 0;
            for op in ops {
                let n = op.factors.len();
                out.push(op.relabel(factors[k..k + n].to_vec())?);
                k += n;
            }
            return Ok(Self {
                factors,
                storage: Storage::Product(out),
            });
        }
        if let Storage::Mixture(terms) = &self.storage {
            let terms = terms
                .iter()
                .map(|(w, t)| Ok((*w, t.relabel(factors.clone())?)))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self {
                factors,
                storage: Storage::Mixture(terms),
            });
        }
        Ok(Self {
            factors,
            storage: self.storage.clone(),
        })
    }

    /// Materializes the full matrix.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Factored { weights, vectors } => {
                let mut scaled = vectors.clone();
                for (j, w) in weights.iter().enumerate() {
                    scaled.column_mut(j).scale_mut(*w);
                }
                &scaled * vectors.adjoint()
            }
            Storage::Coefficient { basis, coeffs } => basis * coeffs * basis.adjoint(),
            Storage::Product(ops) => {
                let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
                for op in ops {
                    acc = acc.kronecker(&op.to_dense());
                }
                acc
            }
            Storage::Mixture(terms) => {
                let mut acc = DMatrix::zeros(d, d);
                for (w, t) in terms {
                    acc += t.to_dense().scale(*w);
                }
                acc
            }
            Storage::MaximallyMixed => DMatrix::identity(d, d).scale(1.0 / d as f64),
        }
    }

    pub fn trace(&self) -> C64 {
        match &self.storage {
            Storage::Dense(m) => m.trace(),
            Storage::Factored { weights, vectors } => weights
                .iter()
                .zip(vectors.column_iter())
                .map(|(w, v)| C64::new(w * v.norm_squared(), 0.0))
                .sum(),
            Storage::Coefficient { coeffs, .. } => coeffs.trace(),
            Storage::Product(ops) => ops.iter().map(|o| o.trace()).product(),
            Storage::Mixture(terms) => terms.iter().map(|(w, t)| t.trace() * *w).sum(),
            Storage::MaximallyMixed => C64::new(1.0, 0.0),
        }
    }

    /// Pure state if the storage is a single weight-one vector.
    pub fn as_pure(&self) -> Option<PureState> {
        match &self.storage {
            Storage::Factored { weights, vectors } if weights.len() == 1 => Some(PureState {
                factors: self.factors.clone(),
                amplitudes: vectors.column(0).into_owned(),
            }),
            _ => None,
        }
    }

    /// Elementwise complex conjugate `ρ*`.
    pub fn conj(&self) -> DensityMatrix {
        let storage = match &self.storage {
            Storage::Dense(m) => Storage::Dense(m.map(|z| z.conj())),
            Storage::Factored { weights, vectors } => Storage::Factored {
                weights: weights.clone(),
                vectors: vectors.map(|z| z.conj()),
            },
            Storage::Coefficient { basis, coeffs } => Storage::Coefficient {
                basis: basis.map(|z| z.conj()),
                coeffs: coeffs.map(|z| z.conj()),
            },
            Storage::Product(ops) => Storage::Product(ops.iter().map(|o| o.conj()).collect()),
            Storage::Mixture(t) => {
                Storage::Mixture(t.iter().map(|(w, o)| (*w, o.conj())).collect())
            }
            Storage::MaximallyMixed => Storage::MaximallyMixed,
        };
        Self {
            factors: self.factors.clone(),
            storage,
        }
    }
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidState(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidState(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

fn check_coefficients(c: &DMatrix<C64>) -> Result<()> {
    let herm = hermiticity_residual(c);
    if herm > DENSITY_TOL {
        return Err(Error::NonHermitian(herm));
    }
    let tr = c.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > DENSITY_TOL {
        return Err(Error::InvalidState(format!(
            "coefficient trace {tr} is not 1"
        )));
    }
    let min = spectral_decompose(c)?.values.last().copied().unwrap_or(0.0);
    if min < -DENSITY_TOL {
        return Err(Error::InvalidState(format!(
            "coefficient matrix has eigenvalue {min:e}"
        )));
    }
    Ok(())
}

/// `a ⊗ b` with factors concatenated. Two factored operands stay factored
/// while the product fits a fixed size budget; otherwise a lazy product is kept.
pub fn tensor_product(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let mut factors = a.factors.clone();
    factors.extend(b.factors.iter().cloned());
    check_unique(&factors)?;

    if let (
        Storage::Factored {
            weights: wa,
            vectors: va,
        },
        Storage::Factored {
            weights: wb,
            vectors: vb,
        },
    ) = (&a.storage, &b.storage)
    {
        let rank = wa.len() * wb.len();
        let dim = va.nrows() * vb.nrows();
        if rank * dim <= FACTORED_PRODUCT_BUDGET {
            let mut weights = Vec::with_capacity(rank);
            let mut vectors = DMatrix::zeros(dim, rank);
            let mut k = 0;
            for (i, x) in wa.iter().enumerate() {
                for (j, y) in wb.iter().enumerate() {
                    weights.push(x * y);
                    vectors.set_column(k, &va.column(i).kronecker(&vb.column(j)));
                    k += 1;
                }
            }
            return Ok(DensityMatrix {
                factors,
                storage: Storage::Factored { weights, vectors },
            });
        }
    }

    let mut ops = Vec::new();
    for x in [a, b] {
        match &x.storage {
            Storage::Product(inner) => ops.extend(inner.iter().cloned()),
            _ => ops.push(x.clone()),
        }
    }
    Ok(DensityMatrix {
        factors,
        storage: Storage::Product(ops),
    })
}

/// Residuals of the density-matrix conditions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub hermiticity_residual: f64,
    pub min_eigenvalue: f64,
    pub trace_deviation: f64,
    pub passed: bool,
}

/// Checks Hermiticity, positivity and unit trace against `tol`.
///
/// Factored states are checked through their `r×r` Gram matrix, so large
/// low-rank operators are never densified.
pub fn validate_density(rho: &DensityMatrix, tol: f64) -> ValidationReport {
    let (herm, min_eig) = match &rho.storage {
        Storage::Factored { weights, vectors } => {
            let r = weights.len();
            let mut x = vectors.clone();
            for (j, w) in weights.iter().enumerate() {
                x.column_mut(j).scale_mut(w.sqrt());
            }
            let gram = x.adjoint() * &x;
            let gram = (&gram + gram.adjoint()).scale(0.5);
            let ev = gram.symmetric_eigen().eigenvalues;
            let mut min = ev.iter().copied().fold(f64::INFINITY, f64::min);
            if r < rho.dim() {
                min = min.min(0.0);
            }
            (0.0, min)
        }
        _ => {
            let m = rho.to_dense();
            let herm = hermiticity_residual(&m);
            let sym = (&m + m.adjoint()).scale(0.5);
            let min = sym
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            (herm, min)
        }
    };
    let trace_deviation = (rho.trace() - C64::new(1.0, 0.0)).norm();
    let passed = herm <= tol && min_eig >= -tol && trace_deviation <= tol;
    ValidationReport {
        hermiticity_residual: herm,
        min_eigenvalue: min_eig,
        trace_deviation,
        passed,
    }
}
