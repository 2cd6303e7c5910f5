//! Finite-dimensional quantum objects on the `theta = 0` state space.
//!
//! States are coordinate vectors in the delta-comb basis `e_j`, `0 <= j < N`,
//! with semiclassical parameter `h = 1 / (2 pi N)`. The propagator comes from
//! the integral kernel with generating function
//! `Phi(x, y) = d x^2 / 2b - x y / b + a y^2 / 2b`, evaluated on the comb:
//!
//! ```text
//! M[k][j] = (N |b|)^(-1/2) * sum_{r=0}^{|b|-1}
//!     exp(2 pi i / b * (a N r^2 / 2 + a r j + a j^2 / 2N + d k^2 / 2N - k r - k j / N))
//! ```
//!
//! All phases are rationals with denominator `2 b N`; numerators are reduced
//! exactly before conversion to floating point.

use std::collections::BTreeMap;

use faer::{c64, MatRef};
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{CatMatrix, Mat2};
use crate::linalg::{self, CMat, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantizeError {
    #[error("dimension N must be at least 1")]
    ZeroDimension,
    #[error("N = {0} is even; pass the even-N override to build it anyway")]
    EvenDimension(usize),
    #[error("upper-right entry b is zero; the kernel formula needs b != 0")]
    ZeroB,
    #[error("matrix entries too large for the phase arithmetic")]
    EntriesTooLarge,
    #[error("propagator is not unitary: residual {residual:e} exceeds {tolerance:e}")]
    NotUnitary { residual: f64, tolerance: f64 },
    #[error("entry modulus {value} exceeds the dispersive bound {bound}")]
    EntryBound { value: f64, bound: f64 },
}

/// Which form of the `j`-only phase term the kernel uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelVariant {
    /// Resolved per matrix by [`select_kernel_variant`].
    #[default]
    Auto,
    /// `a j^2 / 2N`, the term produced by expanding `Phi(x, (N k + j) / N)`.
    Quadratic,
    /// `a j / 2N`, the literal form. Unitary, but breaks the intertwining
    /// relation whenever the quadratic form satisfies it.
    Linear,
}

/// Dimensions on which the kernel forms are tested.
pub const GATE_DIMS: [usize; 3] = [3, 5, 7];
/// Intertwining defect accepted by the kernel gate.
pub const EGOROV_TOL: f64 = 1e-8;

/// Picks the kernel form: quadratic if it is unitary and satisfies the
/// intertwining relation on [`GATE_DIMS`], otherwise the literal linear form.
pub fn select_kernel_variant(a: &CatMatrix) -> KernelVariant {
    let passes = |variant| {
        let opts = BuildOptions { variant, ..Default::default() };
        GATE_DIMS
            .iter()
            .all(|&n| build_propagator_with(a, n, &opts).is_ok_and(|m| egorov_defect(&m) <= EGOROV_TOL))
    };
    if passes(KernelVariant::Quadratic) {
        KernelVariant::Quadratic
    } else {
        KernelVariant::Linear
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub allow_even_n: bool,
    /// Unitarity tolerance is `unitarity_scale * sqrt(N)`.
    pub unitarity_scale: f64,
    pub variant: KernelVariant,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { allow_even_n: false, unitarity_scale: 1e-9, variant: KernelVariant::Auto }
    }
}

/// Slack on the dispersive entry bound `sqrt(|b| / N)`.
pub const ENTRY_BOUND_SLACK: f64 = 1e-9;

/// The quantized cat map `M_{N,0}` as a dense `N x N` unitary.
#[derive(Debug, Clone)]
pub struct Propagator {
    dim: usize,
    matrix: CatMatrix,
    entries: CMat,
    unitarity_residual: f64,
}

impl Propagator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cat_matrix(&self) -> &CatMatrix {
        &self.matrix
    }

    pub fn entries(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.unitarity_residual
    }

    /// `h = 1 / (2 pi N)`.
    pub fn planck(&self) -> f64 {
        1.0 / (std::f64::consts::TAU * self.dim as f64)
    }

    /// Same propagator multiplied by a global unit phase.
    pub fn with_phase(&self, phase: f64) -> Propagator {
        let z = c64::from_polar(1.0, phase);
        Propagator {
            dim: self.dim,
            matrix: self.matrix.clone(),
            entries: CMat::from_fn(self.dim, self.dim, |i, j| self.entries[(i, j)] * z),
            unitarity_residual: self.unitarity_residual,
        }
    }
}

fn small_entries(a: &CatMatrix) -> Result<[i64; 4], QuantizeError> {
    let e = a.as_mat().to_i64().ok_or(QuantizeError::EntriesTooLarge)?;
    if e.iter().any(|v| v.unsigned_abs() > 1 << 20) {
        return Err(QuantizeError::EntriesTooLarge);
    }
    Ok(e)
}

/// Builds `M_{N,0}` with default options (odd `N` only).
pub fn build_propagator(a: &CatMatrix, n: usize) -> Result<Propagator, QuantizeError> {
    build_propagator_with(a, n, &BuildOptions::default())
}

pub fn build_propagator_with(a: &CatMatrix, n: usize, opts: &BuildOptions) -> Result<Propagator, QuantizeError> {
    if n == 0 {
        return Err(QuantizeError::ZeroDimension);
    }
    if n.is_multiple_of(2) && !opts.allow_even_n {
        return Err(QuantizeError::EvenDimension(n));
    }
    let [ea, eb, _ec, ed] = small_entries(a)?;
    if eb == 0 {
        return Err(QuantizeError::ZeroB);
    }
    if n > 1 << 20 {
        return Err(QuantizeError::EntriesTooLarge);
    }
    let variant = match opts.variant {
        KernelVariant::Auto => select_kernel_variant(a),
        v => v,
    };
    let entries = kernel_matrix(ea, eb, ed, n, variant);

    let residual = linalg::unitarity_residual(entries.as_ref());
    let tolerance = opts.unitarity_scale * (n as f64).sqrt();
    if !(residual <= tolerance) {
        return Err(QuantizeError::NotUnitary { residual, tolerance });
    }
    let bound = (eb.unsigned_abs() as f64 / n as f64).sqrt();
    let value = linalg::max_abs(entries.as_ref());
    if value > bound + ENTRY_BOUND_SLACK {
        return Err(QuantizeError::EntryBound { value, bound });
    }
    Ok(Propagator { dim: n, matrix: a.clone(), entries, unitarity_residual: residual })
}

fn kernel_matrix(a: i64, b: i64, d: i64, n: usize, variant: KernelVariant) -> CMat {
    let (a, b, d, nn) = (a as i128, b as i128, d as i128, n as i128);
    let babs = b.abs();
    // Phase numerators live in Z / (2 |b| N); a negative b flips their sign.
    let modulus = 2 * babs * nn;
    let sign = b.signum();
    let roots: Vec<c64> = (0..modulus).map(|r| linalg::unit_root(r, modulus)).collect();
    let scale = 1.0 / ((n as f64) * babs as f64).sqrt();

    let columns: Vec<Vec<c64>> = (0..nn)
        .into_par_iter()
        .map(|j| {
            let j_term = match variant {
                KernelVariant::Linear => a * j,
                _ => a * j * j,
            };
            (0..nn)
                .map(|k| {
                    let base = (j_term + d * k * k - 2 * k * j).rem_euclid(modulus);
                    let mut sum = ZERO;
                    for r in 0..babs {
                        let t = a * nn * nn % modulus * (r * r % modulus) % modulus
                            + 2 * a * nn * r % modulus * j % modulus
                            - 2 * nn * k * r % modulus;
                        let num = (sign * (base + t)).rem_euclid(modulus);
                        sum += roots[num as usize];
                    }
                    sum * scale
                })
                .collect()
        })
        .collect();
    CMat::from_fn(n, n, |k, j| columns[j][k])
}

/// Quantum translation `U_w` for `w = (p / N, q / N)` acting on the comb basis.
///
/// `U_w e_j = exp(2 pi i (q (j + p) / N - p q / 2N)) e_{(j + p) mod N}`, from
/// `U_w f(x) = exp(i/h (eta x - y eta / 2)) f(x - y)` applied to the combs.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeTranslation {
    pub p: i64,
    pub q: i64,
    dim: usize,
    target: Vec<usize>,
    phase: Vec<c64>,
}

impl LatticeTranslation {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row index of the single nonzero entry in column `j`.
    pub fn target(&self, j: usize) -> usize {
        self.target[j]
    }

    pub fn phase(&self, j: usize) -> c64 {
        self.phase[j]
    }

    pub fn matrix(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            m[(self.target[j], j)] = self.phase[j];
        }
        m
    }

    /// `U x`.
    pub fn left_apply(&self, x: MatRef<'_, c64>) -> CMat {
        let mut out = CMat::zeros(self.dim, x.ncols());
        for j in 0..self.dim {
            let (t, z) = (self.target[j], self.phase[j]);
            for c in 0..x.ncols() {
                out[(t, c)] = z * x[(j, c)];
            }
        }
        out
    }

    /// `x U`.
    pub fn right_apply(&self, x: MatRef<'_, c64>) -> CMat {
        let mut out = CMat::zeros(x.nrows(), self.dim);
        for j in 0..self.dim {
            let (t, z) = (self.target[j], self.phase[j]);
            for r in 0..x.nrows() {
                out[(r, j)] = x[(r, t)] * z;
            }
        }
        out
    }
}

pub fn translation_matrix(p: i64, q: i64, n: usize) -> LatticeTranslation {
    assert!(n >= 1, "dimension must be positive");
    let (pp, qq, nn) = (p as i128, q as i128, n as i128);
    let mut target = vec![0; n];
    let mut phase = vec![ZERO; n];
    for j in 0..n {
        let shifted = j as i128 + pp;
        target[j] = shifted.rem_euclid(nn) as usize;
        phase[j] = linalg::unit_root(2 * qq * shifted - pp * qq, 2 * nn);
    }
    LatticeTranslation { p, q, dim: n, target, phase }
}

/// Trigonometric polynomial `a(x, xi) = sum c[m, n] exp(2 pi i (m x + n xi))`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrigPolynomial {
    coeffs: BTreeMap<(i64, i64), c64>,
}

impl TrigPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new().with_term(0, 0, c64::new(c, 0.0))
    }

    /// `cos(2 pi x)`.
    pub fn cos_x() -> Self {
        Self::new().with_term(1, 0, c64::new(0.5, 0.0)).with_term(-1, 0, c64::new(0.5, 0.0))
    }

    pub fn with_term(mut self, m: i64, n: i64, coeff: c64) -> Self {
        *self.coeffs.entry((m, n)).or_insert(ZERO) += coeff;
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = ((i64, i64), c64)> + '_ {
        self.coeffs.iter().map(|(&k, &v)| (k, v))
    }

    /// Sum of coefficient moduli; bounds the operator norm of the quantization.
    pub fn coefficient_mass(&self) -> f64 {
        self.coeffs.values().map(|z| z.norm()).sum()
    }

    /// Whether `c[-m, -n] = conj(c[m, n])` for every stored frequency.
    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|(&(m, n), &z)| {
            let partner = self.coeffs.get(&(-m, -n)).copied().unwrap_or(ZERO);
            (partner - z.conj()).norm() <= tol
        })
    }

    pub fn scale(&self, s: c64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|(&k, &v)| (k, v * s)).collect() }
    }

    pub fn add(&self, other: &TrigPolynomial) -> Self {
        let mut out = self.clone();
        for (k, v) in other.terms() {
            out = out.with_term(k.0, k.1, v);
        }
        out
    }

    /// `a o A`: frequency `(m, n)` moves to `(m a + n c, m b + n d)`.
    pub fn compose_linear(&self, a: &Mat2) -> Option<Self> {
        let [ea, eb, ec, ed] = a.to_i64()?;
        let mut out = TrigPolynomial::new();
        for ((m, n), v) in self.terms() {
            out = out.with_term(m * ea + n * ec, m * eb + n * ed, v);
        }
        Some(out)
    }
}

/// `Op_{N,0}(a) = sum c[m, n] U_{(-n/N, m/N)}`.
pub fn quantize_observable(a: &TrigPolynomial, n: usize) -> CMat {
    let mut out = CMat::zeros(n, n);
    for ((fm, fn_), coeff) in a.terms() {
        let u = translation_matrix(-fn_, fm, n);
        for j in 0..n {
            out[(u.target(j), j)] += coeff * u.phase(j);
        }
    }
    out
}

/// Max over the two lattice generators of `|| M^{-1} U_w M - U_{A^{-1} w} ||_2`.
pub fn egorov_defect(m: &Propagator) -> f64 {
    egorov_defect_of(m.entries(), m.cat_matrix())
}

/// Same as [`egorov_defect`] for an arbitrary candidate matrix.
///
/// Uses `|| U M - M U' ||_2`, which equals the defect whenever `M` is unitary.
pub fn egorov_defect_of(m: MatRef<'_, c64>, a: &CatMatrix) -> f64 {
    let n = m.nrows();
    let [ea, eb, ec, ed] = a.as_mat().to_i64().expect("small entries");
    [(1i64, 0i64), (0, 1)]
        .iter()
        .map(|&(p, q)| {
            let u = translation_matrix(p, q, n);
            let pulled = translation_matrix(ed * p - eb * q, -ec * p + ea * q, n);
            let diff = u.left_apply(m) - pulled.right_apply(m);
            linalg::spectral_norm(diff.as_ref())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, max_abs, mul};

    fn cat() -> CatMatrix {
        CatMatrix::from_i64([2, 3, 1, 2]).unwrap()
    }

    #[test]
    fn small_propagator_is_unitary() {
        let m = build_propagator(&cat(), 3).unwrap();
        assert!(m.unitarity_residual() < 1e-12);
        assert_eq!(m.dim(), 3);
    }

    #[test]
    fn entry_bound_n5() {
        let m = build_propagator(&cat(), 5).unwrap();
        let bound = (3.0f64 / 5.0).sqrt();
        assert!((bound - 0.774597).abs() < 1e-6);
        assert!(max_abs(m.entries()) <= bound + ENTRY_BOUND_SLACK);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(build_propagator(&cat(), 4), Err(QuantizeError::EvenDimension(4))));
        assert!(matches!(build_propagator(&cat(), 0), Err(QuantizeError::ZeroDimension)));
        // b = 0 forces a = d = +-1, so such a matrix is never hyperbolic.
        assert!(CatMatrix::from_i64([1, 0, 2, 1]).is_err());
        let even = BuildOptions { allow_even_n: true, ..Default::default() };
        assert!(build_propagator_with(&cat(), 4, &even).is_ok());
    }

    #[test]
    fn kernel_variant_gate() {
        // The quadratic j-term passes the intertwining oracle; the linear one
        // is still unitary but fails it.
        for n in [3, 5, 7] {
            let quad = BuildOptions { variant: KernelVariant::Quadratic, ..Default::default() };
            let good = build_propagator_with(&cat(), n, &quad).unwrap();
            assert!(egorov_defect(&good) < 1e-10, "N = {n}");
            let opts = BuildOptions { variant: KernelVariant::Linear, ..Default::default() };
            let bad = build_propagator_with(&cat(), n, &opts).unwrap();
            assert!(egorov_defect(&bad) > 0.1, "N = {n}");
        }
        assert_eq!(select_kernel_variant(&cat()), KernelVariant::Quadratic);
        let negative_b = CatMatrix::from_i64([2, -3, -1, 2]).unwrap();
        assert_eq!(select_kernel_variant(&negative_b), KernelVariant::Quadratic);
    }

    #[test]
    fn egorov_is_sensitive() {
        let m = build_propagator(&cat(), 5).unwrap();
        assert!(egorov_defect(&m) < 1e-10);
        let mut perturbed = m.entries().to_owned();
        perturbed[(2, 1)] += c64::new(1e-3, 0.0);
        assert!(egorov_defect_of(perturbed.as_ref(), &cat()) > 1e-4);
    }

    #[test]
    fn translation_identities() {
        let n = 7;
        let id = identity(n);
        assert!(max_abs((translation_matrix(0, 0, n).matrix() - &id).as_ref()) < 1e-15);
        assert!(max_abs((translation_matrix(n as i64, 0, n).matrix() - &id).as_ref()) < 1e-15);
    }

    #[test]
    fn translation_phase_golden() {
        // U_(1/N, 1/N) e_j = exp(2 pi i (2 (j + 1) - 1) / 2N) e_{j+1}.
        let u = translation_matrix(1, 1, 5);
        for j in 0..5 {
            assert_eq!(u.target(j), (j + 1) % 5);
            let expect = c64::from_polar(1.0, std::f64::consts::PI * (2.0 * (j as f64 + 1.0) - 1.0) / 5.0);
            assert!((u.phase(j) - expect).norm() < 1e-14);
        }
        // Full-period shift picks up (-1)^q.
        let flip = translation_matrix(5, 1, 5).matrix();
        let base = translation_matrix(0, 1, 5).matrix();
        assert!(max_abs((flip + base).as_ref()) < 1e-14);
    }

    #[test]
    fn translation_commutator() {
        let n = 9;
        let x = translation_matrix(1, 0, n).matrix();
        let y = translation_matrix(0, 1, n).matrix();
        let lhs = mul(x.as_ref(), y.as_ref());
        let w = c64::from_polar(1.0, -std::f64::consts::TAU / n as f64);
        let rhs = mul(y.as_ref(), x.as_ref()) * faer::Scale(w);
        assert!(max_abs((lhs - rhs).as_ref()) < 1e-13);
    }

    #[test]
    fn quantize_constant_and_cosine() {
        let n = 5;
        let one = quantize_observable(&TrigPolynomial::constant(1.0), n);
        assert!(max_abs((one - identity(n)).as_ref()) < 1e-15);
        let cos = quantize_observable(&TrigPolynomial::cos_x(), n);
        let expect = (translation_matrix(0, 1, n).matrix() + translation_matrix(0, -1, n).matrix()) * faer::Scale(c64::new(0.5, 0.0));
        assert!(max_abs((&cos - expect).as_ref()) < 1e-15);
        assert!(max_abs((&cos - cos.adjoint().to_owned()).as_ref()) < 1e-15);
    }

    #[test]
    fn trig_polynomial_reality_flag() {
        assert!(TrigPolynomial::cos_x().is_real(0.0));
        let skew = TrigPolynomial::new().with_term(1, 2, c64::new(0.0, 1.0));
        assert!(!skew.is_real(1e-12));
        assert!((TrigPolynomial::cos_x().coefficient_mass() - 1.0).abs() < 1e-15);
    }
}
