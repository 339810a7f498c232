use nalgebra::DMatrix;

use super::density::{DensityMatrix, Storage};
use super::factor::Factor;
use crate::{Error, Result, C64};

/// For each flat index of the permuted layout, the flat index in the original layout.
fn index_map(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let n = dims.len();
    let mut stride = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        stride[i] = stride[i + 1] * dims[i + 1];
    }
    let pdims: Vec<usize> = order.iter().map(|&i| dims[i]).collect();
    let pstride: Vec<usize> = order.iter().map(|&i| stride[i]).collect();
    let total: usize = dims.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut ctr = vec![0usize; n];
    let mut old = 0usize;
    for _ in 0..total {
        out.push(old);
        for k in (0..n).rev() {
            ctr[k] += 1;
            old += pstride[k];
            if ctr[k] < pdims[k] {
                break;
            }
            old -= pstride[k] * pdims[k];
            ctr[k] = 0;
        }
    }
    out
}

/// Reorders the tensor factors of a dense operator: new factor `k` is old factor `order[k]`.
pub fn permute_dense(m: &DMatrix<C64>, dims: &[usize], order: &[usize]) -> DMatrix<C64> {
    let map = index_map(dims, order);
    let d = map.len();
    DMatrix::from_fn(d, d, |i, j| m[(map[i], map[j])])
}

fn resolve(factors: &[Factor], keep: &[Factor]) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::InvalidSpec(
            "partial trace needs at least one kept factor".into(),
        ));
    }
    let mut idx = Vec::with_capacity(keep.len());
    for k in keep {
        let i = factors
            .iter()
            .position(|f| f.same_label(k))
            .ok_or_else(|| Error::UnknownFactor(k.to_string()))?;
        if idx.contains(&i) {
            return Err(Error::LabelCollision(k.to_string()));
        }
        idx.push(i);
    }
    Ok(idx)
}

/// Reduced operator on `keep`, in the requested order.
///
/// Factored, coefficient and product forms are contracted directly; the
/// joint matrix is never built.
pub fn partial_trace(rho: &DensityMatrix, keep: &[Factor]) -> Result<DensityMatrix> {
    let factors = rho.factors();
    let kept = resolve(factors, keep)?;
    let out_factors: Vec<Factor> = kept.iter().map(|&i| factors[i].clone()).collect();
    if kept.iter().enumerate().all(|(k, &i)| k == i) && kept.len() == factors.len() {
        return Ok(rho.clone());
    }
    let m = reduce(rho, &kept)?;
    Ok(match m {
        Reduced::Matrix(m) => DensityMatrix::from_dense_unchecked(out_factors, m),
        Reduced::MaximallyMixed => DensityMatrix::maximally_mixed(out_factors)?,
    })
}

enum Reduced {
    Matrix(DMatrix<C64>),
    MaximallyMixed,
}

/// `(kept-major, traced-minor)` map plus the two sizes.
fn split_map(dims: &[usize], kept: &[usize]) -> (Vec<usize>, usize, usize) {
    let mut order = kept.to_vec();
    order.extend((0..dims.len()).filter(|i| !kept.contains(i)));
    let k: usize = kept.iter().map(|&i| dims[i]).product();
    let t: usize = dims.iter().product::<usize>() / k;
    (index_map(dims, &order), k, t)
}

/// Reshapes a flat vector into the `K×T` matrix `Ψ[k, t]`.
fn reshape_vec(v: impl Fn(usize) -> C64, map: &[usize], k: usize, t: usize) -> DMatrix<C64> {
    DMatrix::from_fn(k, t, |a, b| v(map[a * t + b]))
}

fn reduce(rho: &DensityMatrix, kept: &[usize]) -> Result<Reduced> {
    let dims: Vec<usize> = rho.factors().iter().map(|f| f.dim).collect();
    match rho.storage() {
        Storage::MaximallyMixed => Ok(Reduced::MaximallyMixed),
        Storage::Dense(m) => {
            let (map, k, t) = split_map(&dims, kept);
            let mut out = DMatrix::zeros(k, k);
            for j in 0..k {
                for i in 0..k {
                    let mut s = C64::new(0.0, 0.0);
                    for x in 0..t {
                        s += m[(map[i * t + x], map[j * t + x])];
                    }
                    out[(i, j)] = s;
                }
            }
            Ok(Reduced::Matrix(out))
        }
        Storage::Factored { weights, vectors } => {
            let (map, k, t) = split_map(&dims, kept);
            let r = weights.len();
            let mut x = DMatrix::zeros(k, t * r);
            for (j, w) in weights.iter().enumerate() {
                let s = w.sqrt();
                let col = vectors.column(j);
                for b in 0..t {
                    for a in 0..k {
                        x[(a, j * t + b)] = col[map[a * t + b]] * s;
                    }
                }
            }
            Ok(Reduced::Matrix(&x * x.adjoint()))
        }
        Storage::Coefficient { basis, coeffs } => {
            let (map, k, t) = split_map(&dims, kept);
            let n = basis.ncols();
            let psi: Vec<DMatrix<C64>> = (0..n)
                .map(|m| reshape_vec(|i| basis[(i, m)], &map, k, t))
                .collect();
            let mut out = DMatrix::zeros(k, k);
            for b in 0..n {
                let mut z = DMatrix::zeros(k, t);
                for a in 0..n {
                    let c = coeffs[(a, b)];
                    if c != C64::new(0.0, 0.0) {
                        z += &psi[a] * c;
                    }
                }
                out += z * psi[b].adjoint();
            }
            Ok(Reduced::Matrix(out))
        }
        Storage::Mixture(terms) => {
            let k: usize = kept.iter().map(|&i| dims[i]).product();
            let mut out = DMatrix::zeros(k, k);
            for (w, term) in terms {
                match reduce(term, kept)? {
                    Reduced::Matrix(m) => out += m * C64::new(*w, 0.0),
                    Reduced::MaximallyMixed => {
                        for i in 0..k {
                            out[(i, i)] += C64::new(*w / k as f64, 0.0);
                        }
                    }
                }
            }
            Ok(Reduced::Matrix(out))
        }
        Storage::Product(ops) => {
            // Group kept factors by operand; order inside a group follows `kept`.
            let mut acc = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
            let mut grouped: Vec<usize> = Vec::with_capacity(kept.len());
            let mut offset = 0;
            for op in ops {
                let n = op.factors().len();
                let local: Vec<usize> = kept
                    .iter()
                    .filter(|&&i| i >= offset && i < offset + n)
                    .map(|&i| i - offset)
                    .collect();
                if local.is_empty() {
                    acc *= op.trace();
                } else {
                    let sub = if local.len() == n && local.iter().enumerate().all(|(a, &b)| a == b)
                    {
                        op.to_dense()
                    } else {
                        match reduce(op, &local)? {
                            Reduced::Matrix(m) => m,
                            Reduced::MaximallyMixed => {
                                let d: usize = local.iter().map(|&i| op.factors()[i].dim).product();
                                DMatrix::identity(d, d).scale(1.0 / d as f64)
                            }
                        }
                    };
                    acc = acc.kronecker(&sub);
                    grouped.extend(local.iter().map(|&i| i + offset));
                }
                offset += n;
            }
            // Permute from grouped order to the requested order.
            let gdims: Vec<usize> = grouped.iter().map(|&i| dims[i]).collect();
            let order: Vec<usize> = kept
                .iter()
                .map(|i| grouped.iter().position(|g| g == i).expect("grouped"))
                .collect();
            if order.iter().enumerate().all(|(a, &b)| a == b) {
                Ok(Reduced::Matrix(acc))
            } else {
                Ok(Reduced::Matrix(permute_dense(&acc, &gdims, &order)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{max_abs_diff, tensor_product, PureState};
    use nalgebra::DVector;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn index_map_swaps_two_factors() {
        // dims (2,3): old index = a*3+b; swapped layout (b,a) -> new index b*2+a.
        let map = index_map(&[2, 3], &[1, 0]);
        assert_eq!(map, vec![0, 3, 1, 4, 2, 5]);
    }

    #[test]
    fn bell_pair_reduces_to_half_identity() {
        let s = 0.5f64.sqrt();
        let v = DVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        let f = vec![Factor::pseudospin("a"), Factor::pseudospin("b")];
        let psi = PureState::new(f, v).unwrap();
        let r = partial_trace(&psi.to_density(), &[Factor::pseudospin("a")]).unwrap();
        assert!(max_abs_diff(&r.to_dense(), &DMatrix::identity(2, 2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn product_state_factorizes() {
        let a = DensityMatrix::from_dense(
            vec![Factor::pseudospin("a")],
            DMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]),
        )
        .unwrap();
        let b = DensityMatrix::maximally_mixed(vec![Factor::mode("b", 3)]).unwrap();
        let ab = tensor_product(&a, &b).unwrap();
        let ra = partial_trace(&ab, &[Factor::pseudospin("a")]).unwrap();
        assert!(max_abs_diff(&ra.to_dense(), &a.to_dense()) < 1e-15);
        // Dense path agrees.
        let dense = DensityMatrix::from_dense_unchecked(ab.factors().to_vec(), ab.to_dense());
        let rb = partial_trace(&dense, &[Factor::mode("b", 3)]).unwrap();
        assert!(max_abs_diff(&rb.to_dense(), &b.to_dense()) < 1e-15);
    }

    #[test]
    fn unknown_and_duplicate_labels() {
        let rho = DensityMatrix::maximally_mixed(vec![Factor::pseudospin("a")]).unwrap();
        assert!(matches!(
            partial_trace(&rho, &[Factor::pseudospin("z")]),
            Err(Error::UnknownFactor(_))
        ));
        assert!(partial_trace(&rho, &[]).is_err());
    }
}
