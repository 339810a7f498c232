#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qskyrmion::qstate::{DensityMatrix, Factor};
use qskyrmion::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian(r: &mut ChaCha20Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(StandardNormal.sample(r), StandardNormal.sample(r))
    })
}

pub fn haar_unitary(d: usize, seed: u64) -> DMatrix<C64> {
    let mut r = rng(seed);
    let qr = gaussian(&mut r, d, d).qr();
    let (mut q, rr) = (qr.q(), qr.r());
    for j in 0..d {
        let p = rr[(j, j)] / rr[(j, j)].norm();
        let col = q.column(j) * p;
        q.set_column(j, &col);
    }
    q
}

/// Random rank-`k` state in factored form with random weights.
pub fn random_factored(factors: Vec<Factor>, k: usize, seed: u64) -> DensityMatrix {
    let d: usize = factors.iter().map(|f| f.dim).product();
    let mut r = rng(seed);
    let mut g = gaussian(&mut r, d, k);
    let mut w: Vec<f64> = (0..k)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut r);
            x * x + 0.1
        })
        .collect();
    for j in 0..k {
        let n = g.column(j).norm();
        g.column_mut(j).unscale_mut(n);
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    let excess = w.iter().sum::<f64>() - 1.0;
    w[0] -= excess;
    DensityMatrix::factored(factors, w, g).expect("valid factored state")
}

pub fn unit(d: usize, k: usize) -> DVector<C64> {
    let mut v = DVector::zeros(d);
    v[k] = C64::new(1.0, 0.0);
    v
}
