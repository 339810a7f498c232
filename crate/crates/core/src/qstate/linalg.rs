use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Hermitian eigendecomposition with eigenvalues in descending order.
///
/// Eigenvector `i` is column `i` of `vectors`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl SpectralDecomposition {
    /// `Σ λ_i v_i v_i†`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(l);
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Largest elementwise modulus of `a − b`.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub(crate) fn hermiticity_residual(h: &DMatrix<C64>) -> f64 {
    let n = h.nrows();
    let mut r: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            r = r.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    r
}

/// Index of the first component whose modulus exceeds `1e-10·max`.
fn first_significant(v: &[C64]) -> Option<usize> {
    let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return None;
    }
    v.iter().position(|c| c.norm() > 1e-10 * max)
}

/// Rotates the global phase so the first significant component is real and positive.
pub fn normalize_phase(v: &mut [C64]) {
    if let Some(k) = first_significant(v) {
        let c = v[k];
        let rot = c.conj() / c.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
        v[k] = C64::new(v[k].re, 0.0);
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvectors are phase-normalized. Within a cluster of eigenvalues equal
/// up to `1e-12·‖H‖`, vectors are ordered by the index of their first
/// significant component and then by its magnitude, so the output does not
/// depend on the eigensolver's internal ordering.
pub fn spectral_decompose(h: &DMatrix<C64>) -> Result<SpectralDecomposition> {
    if !h.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} is not square",
            h.nrows(),
            h.ncols()
        )));
    }
    let res = hermiticity_residual(h);
    if res > 1e-8 {
        return Err(Error::NonHermitian(res));
    }
    let n = h.nrows();
    if n == 0 {
        return Ok(SpectralDecomposition {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let scale = eig
        .eigenvalues
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max)
        .max(1e-300);

    let mut cols: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|j| {
            let mut v: Vec<C64> = eig.eigenvectors.column(j).iter().copied().collect();
            normalize_phase(&mut v);
            (eig.eigenvalues[j], v)
        })
        .collect();
    cols.sort_by(|a, b| b.0.total_cmp(&a.0));

    // Reorder inside clusters of numerically equal eigenvalues.
    let tie = 1e-12 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (cols[end - 1].0 - cols[end].0).abs() <= tie {
            end += 1;
        }
        if end - start > 1 {
            cols[start..end].sort_by(|a, b| {
                let ka = first_significant(&a.1).unwrap_or(usize::MAX);
                let kb = first_significant(&b.1).unwrap_or(usize::MAX);
                let ma = a.1.get(ka).map_or(0.0, |z| z.re);
                let mb = b.1.get(kb).map_or(0.0, |z| z.re);
                ka.cmp(&kb).then_with(|| mb.total_cmp(&ma))
            });
        }
        start = end;
    }

    let values = cols.iter().map(|c| c.0).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| cols[j].1[i]);
    Ok(SpectralDecomposition { values, vectors })
}

/// Kronecker product of two vectors; the second index runs fastest.
pub fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    let nb = b.len();
    DVector::from_fn(a.len() * nb, |k, _| a[k / nb] * b[k % nb])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_and_diagonal() {
        let id = DMatrix::<C64>::identity(2, 2);
        let d = spectral_decompose(&id).unwrap();
        assert_eq!(d.values, vec![1.0, 1.0]);
        assert!(max_abs_diff(&d.reconstruct(), &id) < 1e-14);

        let m =
            DMatrix::from_row_slice(2, 2, &[c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let d = spectral_decompose(&m).unwrap();
        assert_eq!(d.values, vec![3.0, -1.0]);
        assert!((d.vectors[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((d.vectors[(1, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            spectral_decompose(&m),
            Err(Error::NonHermitian(_))
        ));
    }

    #[test]
    fn phase_normalized_and_orthonormal() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.0, 1.0),
                c(0.5, 0.5),
                c(0.0, -1.0),
                c(1.0, 0.0),
                c(0.0, 0.0),
                c(0.5, -0.5),
                c(0.0, 0.0),
                c(-1.0, 0.0),
            ],
        );
        let d = spectral_decompose(&m).unwrap();
        assert!(d.values.windows(2).all(|w| w[0] >= w[1]));
        assert!(max_abs_diff(&d.reconstruct(), &m) < 1e-12);
        let g = d.vectors.adjoint() * &d.vectors;
        assert!(max_abs_diff(&g, &DMatrix::identity(3, 3)) < 1e-12);
        for j in 0..3 {
            let v: Vec<C64> = d.vectors.column(j).iter().copied().collect();
            let k = first_significant(&v).unwrap();
            assert!(v[k].im == 0.0 && v[k].re > 0.0);
        }
    }

    #[test]
    fn kron_order() {
        let a = DVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let b = DVector::from_vec(vec![c(0.0, 1.0), c(3.0, 0.0), c(5.0, 0.0)]);
        let k = kron_vec(&a, &b);
        assert_eq!(k[4], c(6.0, 0.0));
        assert_eq!(k[3], c(0.0, 2.0));
    }
}
