//! Test-side oracles, written without reference to the library's algorithms.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use catmap::{c64, CMat};

pub const STANDARD: [i64; 4] = [2, 3, 1, 2];

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

fn quantizable(e: [i64; 4]) -> bool {
    let [a, b, c, d] = e;
    a * d - b * c == 1 && (a + d).abs() > 2 && (a * b) % 2 == 0 && (c * d) % 2 == 0
}

fn eligible(e: [i64; 4]) -> bool {
    let [a, b, c, d] = e;
    quantizable(e) && a + d > 2 && (a + d) % 2 == 0 && gcd(b, c) == 1
}

/// Every quantizable matrix with entries in `[-6, 6]`.
pub fn quantizable_matrices() -> &'static [[i64; 4]] {
    static CELL: OnceLock<Vec<[i64; 4]>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut out = Vec::new();
        for a in -6..=6 {
            for b in -6..=6 {
                for c in -6..=6 {
                    for d in -6..=6 {
                        if quantizable([a, b, c, d]) {
                            out.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        out
    })
}

/// The subset meeting positive even trace and coprime off-diagonals.
pub fn eligible_matrices() -> &'static [[i64; 4]] {
    static CELL: OnceLock<Vec<[i64; 4]>> = OnceLock::new();
    CELL.get_or_init(|| quantizable_matrices().iter().copied().filter(|&e| eligible(e)).collect())
}

pub fn mat_mul_mod(x: [i128; 4], y: [i128; 4], n: i128) -> [i128; 4] {
    let [a, b, c, d] = x;
    let [e, f, g, h] = y;
    [(a * e + b * g).rem_euclid(n), (a * f + b * h).rem_euclid(n), (c * e + d * g).rem_euclid(n), (c * f + d * h).rem_euclid(n)]
}

/// Least `t >= 1` with `A^t = I (mod n)`, by stepping.
pub fn naive_order(e: [i64; 4], n: u64) -> u64 {
    let n = n as i128;
    let a = e.map(|v| (v as i128).rem_euclid(n));
    let id = [1 % n, 0, 0, 1 % n];
    let mut p = a;
    let mut t = 1;
    while p != id {
        p = mat_mul_mod(p, a, n);
        t += 1;
        assert!(t < 10_000_000, "runaway order");
    }
    t
}

/// `p_0 = 0, p_1 = 1, p_{t+1} = tr p_t - p_{t-1}`.
pub fn p_values(trace: i128, count: usize) -> Vec<i128> {
    let mut p = vec![0i128, 1];
    while p.len() < count {
        let k = p.len();
        p.push(trace * p[k - 1] - p[k - 2]);
    }
    p.truncate(count);
    p
}

pub fn larger_eigenvalue(e: [i64; 4]) -> f64 {
    let t = (e[0] + e[3]) as f64;
    (t.abs() + (t * t - 4.0).sqrt()) / 2.0
}

/// Propagator entries straight from the kernel
/// `M[k][j] = (N|b|)^{-1/2} sum_{r < |b|} exp(i pi (a x^2 - 2 k x + d k^2) / (b N))`,
/// `x = N r + j`, evaluated in floating point.
pub fn kernel_oracle(e: [i64; 4], n: usize) -> CMat {
    let [a, b, _, d] = e.map(|v| v as f64);
    let nf = n as f64;
    let scale = 1.0 / (nf * b.abs()).sqrt();
    CMat::from_fn(n, n, |k, j| {
        let k = k as f64;
        (0..e[1].unsigned_abs())
            .map(|r| {
                let x = nf * r as f64 + j as f64;
                c64::from_polar(1.0, PI * (a * x * x - 2.0 * k * x + d * k * k) / (b * nf))
            })
            .fold(c64::new(0.0, 0.0), |s, z| s + z)
            * scale
    })
}

/// Dense `U_{(p/N, q/N)}` on the comb basis:
/// `e_j -> exp(2 pi i (q (j + p) / N - p q / 2N)) e_{j + p mod N}`.
pub fn translation_oracle(p: i64, q: i64, n: usize) -> CMat {
    let nf = n as f64;
    let mut out = CMat::zeros(n, n);
    for j in 0..n {
        let shifted = j as i64 + p;
        let target = shifted.rem_euclid(n as i64) as usize;
        let angle = 2.0 * PI * ((q * shifted) as f64 / nf - (p * q) as f64 / (2.0 * nf));
        out[(target, j)] = c64::from_polar(1.0, angle);
    }
    out
}

pub fn matmul(x: &CMat, y: &CMat) -> CMat {
    let n = x.nrows();
    let m = y.ncols();
    CMat::from_fn(n, m, |i, j| (0..x.ncols()).fold(c64::new(0.0, 0.0), |s, k| s + x[(i, k)] * y[(k, j)]))
}

pub fn adjoint(x: &CMat) -> CMat {
    CMat::from_fn(x.ncols(), x.nrows(), |i, j| x[(j, i)].conj())
}

pub fn max_diff(x: &CMat, y: &CMat) -> f64 {
    let mut m = 0.0f64;
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            m = m.max((x[(i, j)] - y[(i, j)]).norm());
        }
    }
    m
}
