//! Dense complex helpers shared by the quantization and spectral code.
//!
//! Every product here runs sequentially so that results do not depend on the
//! thread count; parallelism lives one level up, across independent matrices.

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, MatRef, Par};

pub type CMat = Mat<c64>;

pub(crate) const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub(crate) const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

/// `lhs * rhs`.
pub fn mul(lhs: MatRef<'_, c64>, rhs: MatRef<'_, c64>) -> CMat {
    let mut out = CMat::zeros(lhs.nrows(), rhs.ncols());
    matmul(out.as_mut(), Accum::Replace, lhs, rhs, ONE, Par::Seq);
    out
}

/// `lhs^† * rhs`.
pub fn adjoint_mul(lhs: MatRef<'_, c64>, rhs: MatRef<'_, c64>) -> CMat {
    let mut out = CMat::zeros(lhs.ncols(), rhs.ncols());
    matmul(out.as_mut(), Accum::Replace, lhs.adjoint(), rhs, ONE, Par::Seq);
    out
}

/// `lhs * rhs^†`.
pub fn mul_adjoint(lhs: MatRef<'_, c64>, rhs: MatRef<'_, c64>) -> CMat {
    let mut out = CMat::zeros(lhs.nrows(), rhs.nrows());
    matmul(out.as_mut(), Accum::Replace, lhs, rhs.adjoint(), ONE, Par::Seq);
    out
}

pub fn identity(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

/// Largest entry modulus, i.e. the `l1 -> l_inf` operator norm.
pub fn max_abs(x: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            best = best.max(x[(i, j)].norm());
        }
    }
    best
}

/// Max-norm of `x^† x - I`.
pub fn unitarity_residual(x: MatRef<'_, c64>) -> f64 {
    let g = adjoint_mul(x, x);
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Max-norm of `x - x[0,0] I`; zero iff `x` is a scalar matrix.
pub fn scalar_residual(x: MatRef<'_, c64>) -> f64 {
    let s = x[(0, 0)];
    let mut worst = 0.0f64;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let target = if i == j { s } else { ZERO };
            worst = worst.max((x[(i, j)] - target).norm());
        }
    }
    worst
}

/// Euclidean norm of each row.
pub fn row_norms(x: MatRef<'_, c64>) -> Vec<f64> {
    let mut acc = vec![0.0f64; x.nrows()];
    for j in 0..x.ncols() {
        for (i, slot) in acc.iter_mut().enumerate() {
            *slot += x[(i, j)].norm_sqr();
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Largest row norm, the `l2 -> l_inf` operator norm.
pub fn op_norm_2_inf(x: MatRef<'_, c64>) -> f64 {
    row_norms(x).into_iter().fold(0.0, f64::max)
}

/// `x^k` by binary powering.
pub fn power(x: MatRef<'_, c64>, mut k: u64) -> CMat {
    let mut result = identity(x.nrows());
    let mut base = x.to_owned();
    while k > 0 {
        if k & 1 == 1 {
            result = mul(result.as_ref(), base.as_ref());
        }
        k >>= 1;
        if k > 0 {
            base = mul(base.as_ref(), base.as_ref());
        }
    }
    result
}

fn matvec(x: MatRef<'_, c64>, v: &[c64], conj_transpose: bool) -> Vec<c64> {
    if conj_transpose {
        (0..x.ncols())
            .map(|j| (0..x.nrows()).fold(ZERO, |acc, i| acc + x[(i, j)].conj() * v[i]))
            .collect()
    } else {
        let mut out = vec![ZERO; x.nrows()];
        for (j, &vj) in v.iter().enumerate() {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot += x[(i, j)] * vj;
            }
        }
        out
    }
}

fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm by power iteration on `x^† x` from a fixed start vector.
///
/// Converges from below; stops when successive estimates agree to `1e-9`
/// relative or after 500 sweeps.
pub fn spectral_norm(x: MatRef<'_, c64>) -> f64 {
    let n = x.ncols();
    if n == 0 || x.nrows() == 0 {
        return 0.0;
    }
    let mut v: Vec<c64> = (0..n)
        .map(|j| c64::new(1.0 + (j as f64 * 0.618_033_988_75).fract(), (j as f64 * 0.414_213_562).fract()))
        .collect();
    let mut sigma = 0.0;
    for _ in 0..500 {
        let norm = vec_norm(&v);
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|z| *z /= norm);
        let w = matvec(x, &v, false);
        let next = vec_norm(&w);
        v = matvec(x, &w, true);
        if (next - sigma).abs() <= 1e-9 * next {
            return next;
        }
        sigma = next;
    }
    sigma
}

/// `exp(2 pi i * num / den)` with the fraction reduced exactly first.
pub fn unit_root(num: i128, den: i128) -> c64 {
    let r = num.rem_euclid(den);
    let (s, c) = (std::f64::consts::TAU * (r as f64 / den as f64)).sin_cos();
    c64::new(c, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_norm_of_diagonal() {
        let d = CMat::from_fn(4, 4, |i, j| if i == j { c64::new(i as f64, 0.0) } else { ZERO });
        assert!((spectral_norm(d.as_ref()) - 3.0).abs() < 1e-6);
        assert_eq!(spectral_norm(CMat::zeros(3, 3).as_ref()), 0.0);
    }

    #[test]
    fn power_matches_repeated_product() {
        let x = CMat::from_fn(3, 3, |i, j| c64::new((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.05));
        let p5 = power(x.as_ref(), 5);
        let mut q = identity(3);
        for _ in 0..5 {
            q = mul(q.as_ref(), x.as_ref());
        }
        assert!(max_abs((p5 - q).as_ref()) < 1e-12);
    }

    #[test]
    fn unit_root_reduces() {
        let z = unit_root(7, 4);
        assert!((z - c64::new(0.0, -1.0)).norm() < 1e-15);
        let z = unit_root(-1, 4);
        assert!((z - c64::new(0.0, -1.0)).norm() < 1e-15);
    }
}
