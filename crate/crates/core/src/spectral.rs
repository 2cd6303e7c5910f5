//! Eigendecomposition of propagators and the sup-norm machinery built on it.
//!
//! A unitary matrix is normal, so its eigenvectors can be taken orthonormal.
//! We never run a general nonsymmetric eigensolver on the full matrix.
//! Instead the Hermitian matrix `Im(e^{-i r} M)` is diagonalized; it commutes
//! with `M` and separates eigenvalues except where its values fold
//! (`sin(t - r) = sin(t' - r)`) or nearly coincide. Those groups are small
//! invariant subspaces, and each is finished with a complex Schur
//! decomposition of the compressed matrix, whose Schur vectors are
//! eigenvectors because the compression is normal too.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::{c64, MatRef, Par};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{self, CMat, ZERO};
use crate::quantize::Propagator;

/// Phase gap (radians) below which eigenvalues merge into one cluster.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Per-eigenpair residual tolerance is `RESIDUAL_SCALE * sqrt(N)`.
pub const RESIDUAL_SCALE: f64 = 1e-8;
/// Allowed deviation of `|mu|` from 1.
pub const MODULUS_TOL: f64 = 1e-8;
/// Max distance (radians) from an eigenvalue to its snapped root of unity.
pub const SNAP_TOL: f64 = 1e-6;
/// Tolerance for declaring `M^n` a scalar matrix.
pub const SCALAR_TOL: f64 = 1e-7;

// Eigenvalues of the Hermitian part closer than this are resolved together.
const SPLIT_GAP: f64 = 1e-6;
// Rotation applied before taking the Hermitian part; any generic value works.
const ROTATION: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("eigensolver did not converge")]
    NonConvergence,
    #[error("eigenpair residual {max:e} exceeds {tolerance:e}")]
    ResidualViolation { max: f64, tolerance: f64 },
    #[error("eigenvalue {index} has modulus {modulus}, not 1")]
    OffUnitCircle { index: usize, modulus: f64 },
    #[error("eigenvalue {index} lies within 2*tol of two roots of unity")]
    AmbiguousClustering { index: usize },
    #[error("eigenvalue {index} is {distance:e} rad from the nearest root of unity")]
    NotOnRoots { index: usize, distance: f64 },
    #[error("report has not been clustered")]
    NotClustered,
    #[error("projector has dimension zero")]
    EmptyEigenspace,
    #[error("|mu| = {0} is not 1")]
    NotUnitModulus(f64),
    #[error("averaging horizon T must be positive")]
    ZeroHorizon,
    #[error("clustering tolerance must be positive")]
    BadTolerance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMethod {
    /// Eigenvalues snapped to the `n`-th roots of the global phase.
    RootSnapping,
    /// Consecutive phases closer than the tolerance merged.
    PhaseGaps,
    /// Every eigenvector on its own.
    Unmerged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    /// Representative phase in `(-pi, pi]`.
    pub phase: f64,
    pub indices: Vec<usize>,
    pub dim: usize,
    /// `max_j || Pi e_j ||` for the cluster's eigenspace.
    pub supnorm: f64,
    #[serde(skip)]
    pub witness_index: usize,
}

/// Full eigensystem of one propagator, eigenvalues sorted by phase.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub dim: usize,
    /// Dominant eigenvalue of the classical map, when known.
    pub lambda: Option<f64>,
    pub eigenvalues: Vec<c64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub vectors: CMat,
    pub residuals: Vec<f64>,
    pub clusters: Vec<Cluster>,
    pub method: Option<ClusterMethod>,
    /// `phi` with `M^n = e^{i phi} I`, when the period is known and verified.
    pub global_phase: Option<f64>,
}

impl SpectrumReport {
    pub fn residual_max(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.dim).collect()
    }

    /// Largest coordinate modulus over individual eigenvectors.
    pub fn max_supnorm_unmerged(&self) -> f64 {
        let mut best = 0.0f64;
        for j in 0..self.vectors.ncols() {
            for i in 0..self.vectors.nrows() {
                best = best.max(self.vectors[(i, j)].norm());
            }
        }
        best
    }

    pub fn to_json(&self) -> serde_json::Value {
        let best = self.clusters.iter().map(|c| c.supnorm).fold(f64::NAN, f64::max);
        serde_json::json!({
            "N": self.dim,
            "eigenvalues": self.eigenvalues.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "clusters": self.clusters,
            "global_phase": self.global_phase,
            "residual_max": self.residual_max(),
            "cluster_method": self.method,
            "max_supnorm": if best.is_nan() { None } else { Some(best) },
            "max_supnorm_unmerged": self.max_supnorm_unmerged(),
        })
    }
}

fn wrap_phase(t: f64) -> f64 {
    let w = (t + PI).rem_euclid(TAU) - PI;
    if w <= -PI { w + TAU } else { w }
}

/// Phase of `z` in `(-pi, pi]`.
pub fn phase_of(z: c64) -> f64 {
    wrap_phase(z.im.atan2(z.re))
}

pub fn eigendecompose(m: &Propagator) -> Result<SpectrumReport, SpectralError> {
    let mut report = eigendecompose_unitary(m.entries())?;
    report.lambda = Some(m.cat_matrix().lambda());
    Ok(report)
}

/// Deflation thresholds tried in turn. At `f64::EPSILON` a nearly scalar block
/// can stall on roundoff-sized subdiagonals; all of these sit far below the
/// residual certification applied afterwards.
const SCHUR_EPS: [f64; 3] = [1e-13, 1e-11, 1e-9];

fn small_schur(
    small: nalgebra::DMatrix<c64>,
) -> Result<(nalgebra::DMatrix<c64>, nalgebra::DMatrix<c64>), SpectralError> {
    SCHUR_EPS
        .iter()
        .find_map(|&eps| nalgebra::linalg::Schur::try_new(small.clone(), eps, 10_000))
        .map(|s| s.unpack())
        .ok_or(SpectralError::NonConvergence)
}

/// Eigensystem of any unitary matrix, with residual certification.
pub fn eigendecompose_unitary(m: MatRef<'_, c64>) -> Result<SpectrumReport, SpectralError> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square matrix required");
    let rot = c64::from_polar(1.0, -ROTATION);
    let half_i = c64::new(0.0, 0.5);
    let herm = CMat::from_fn(n, n, |i, j| (rot * m[(i, j)] - (rot * m[(j, i)]).conj()) * half_i.conj());

    let mut values = faer::diag::Diag::<c64>::zeros(n);
    let mut basis = CMat::zeros(n, n);
    let par = Par::Seq;
    let mut buf = MemBuffer::new(evd::self_adjoint_evd_scratch::<c64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        herm.as_ref(),
        values.as_mut(),
        Some(basis.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|_| SpectralError::NonConvergence)?;

    let image = linalg::mul(m, basis.as_ref());
    let mut vectors = CMat::zeros(n, n);
    let mut mapped = CMat::zeros(n, n);
    let mut eigenvalues = vec![ZERO; n];

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end].re - values[end - 1].re < SPLIT_GAP {
            end += 1;
        }
        let len = end - start;
        if len == 1 {
            let (u, w) = (basis.col(start), image.col(start));
            let mu = (0..n).fold(ZERO, |acc, i| acc + u[i].conj() * w[i]);
            eigenvalues[start] = mu;
            vectors.col_mut(start).copy_from(u);
            mapped.col_mut(start).copy_from(w);
        } else {
            let q = basis.as_ref().subcols(start, len);
            let w = image.as_ref().subcols(start, len);
            let compressed = linalg::adjoint_mul(q, w);
            let small = nalgebra::DMatrix::from_fn(len, len, |i, j| compressed[(i, j)]);
            let (z, t) = small_schur(small)?;
            let z = CMat::from_fn(len, len, |i, j| z[(i, j)]);
            vectors.as_mut().subcols_mut(start, len).copy_from(linalg::mul(q, z.as_ref()));
            mapped.as_mut().subcols_mut(start, len).copy_from(linalg::mul(w, z.as_ref()));
            for k in 0..len {
                eigenvalues[start + k] = t[(k, k)];
            }
        }
        start = end;
    }

    let residuals: Vec<f64> = (0..n)
        .map(|k| {
            let mu = eigenvalues[k];
            (0..n).map(|i| (mapped[(i, k)] - mu * vectors[(i, k)]).norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| phase_of(eigenvalues[x]).total_cmp(&phase_of(eigenvalues[y])).then(x.cmp(&y)));
    let eigenvalues: Vec<c64> = order.iter().map(|&k| eigenvalues[k]).collect();
    let residuals: Vec<f64> = order.iter().map(|&k| residuals[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| vectors[(i, order[j])]);

    for (index, mu) in eigenvalues.iter().enumerate() {
        let modulus = mu.norm();
        if (modulus - 1.0).abs() > MODULUS_TOL {
            return Err(SpectralError::OffUnitCircle { index, modulus });
        }
    }
    let tolerance = RESIDUAL_SCALE * (n as f64).sqrt();
    let max = residuals.iter().copied().fold(0.0, f64::max);
    if !(max <= tolerance) {
        return Err(SpectralError::ResidualViolation { max, tolerance });
    }

    Ok(SpectrumReport {
        dim: n,
        lambda: None,
        eigenvalues,
        vectors,
        residuals,
        clusters: Vec::new(),
        method: None,
        global_phase: None,
    })
}

/// `arg((M^n)_{00})` if `M^n` is scalar to [`SCALAR_TOL`], else `None`.
pub fn global_phase(m: MatRef<'_, c64>, n: u64) -> Option<f64> {
    let p = linalg::power(m, n);
    (linalg::scalar_residual(p.as_ref()) <= SCALAR_TOL).then(|| phase_of(p[(0, 0)]))
}

/// Whether `n <= 2 log_lambda N + 1`.
pub fn is_short_period(dim: usize, period: u64, lambda: f64) -> bool {
    dim > 1 && period as f64 <= 2.0 * (dim as f64).ln() / lambda.ln() + 1.0
}

/// Groups eigenvalues into eigenspaces.
///
/// In the short-period regime eigenvalues are snapped to the `n`-th roots of
/// the global phase; otherwise consecutive phases closer than `tol` merge.
pub fn cluster_eigenvalues(report: SpectrumReport, period: u64, tol: f64) -> Result<SpectrumReport, SpectralError> {
    if !(tol > 0.0) {
        return Err(SpectralError::BadTolerance);
    }
    let short = period >= 1 && report.lambda.is_some_and(|l| is_short_period(report.dim, period, l));
    if short {
        snap_to_roots(report, period, tol)
    } else {
        cluster_by_gaps(report, tol)
    }
}

fn snap_to_roots(mut report: SpectrumReport, period: u64, tol: f64) -> Result<SpectrumReport, SpectralError> {
    let n = period as f64;
    let phi = match report.global_phase {
        Some(p) => p,
        None => {
            let sum = report.eigenvalues.iter().fold(ZERO, |acc, mu| acc + mu.powu(period as u32));
            phase_of(sum)
        }
    };
    let spacing = TAU / n;
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (index, mu) in report.eigenvalues.iter().enumerate() {
        let x = (n * phase_of(*mu) - phi) / TAU;
        let nearest = x.round();
        let frac = (x - nearest).abs();
        let distance = frac * spacing;
        if (1.0 - frac) * spacing <= 2.0 * tol {
            return Err(SpectralError::AmbiguousClustering { index });
        }
        if distance > SNAP_TOL {
            return Err(SpectralError::NotOnRoots { index, distance });
        }
        let root = (nearest as i64).rem_euclid(period as i64) as u64;
        groups.entry(root).or_default().push(index);
    }
    let mut clusters: Vec<(f64, Vec<usize>)> = groups
        .into_iter()
        .map(|(root, members)| (wrap_phase((phi + TAU * root as f64) / n), members))
        .collect();
    clusters.sort_by(|a, b| a.0.total_cmp(&b.0));
    report.global_phase = Some(phi);
    finish_clusters(report, clusters, ClusterMethod::RootSnapping)
}

fn cluster_by_gaps(report: SpectrumReport, tol: f64) -> Result<SpectrumReport, SpectralError> {
    let phases: Vec<f64> = report.eigenvalues.iter().map(|z| phase_of(*z)).collect();
    let mut runs: Vec<Vec<usize>> = Vec::new();
    for (i, &p) in phases.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if p - phases[*run.last().unwrap()] < tol => run.push(i),
            _ => runs.push(vec![i]),
        }
    }
    // The phase cut at +-pi is not a real boundary.
    if runs.len() > 1 && phases[0] + TAU - phases[phases.len() - 1] < tol {
        let last = runs.pop().unwrap();
        let first = std::mem::take(&mut runs[0]);
        runs[0] = last.into_iter().chain(first).collect();
    }
    let clusters = runs
        .into_iter()
        .map(|members| {
            let sum = members.iter().fold(ZERO, |acc, &i| acc + report.eigenvalues[i]);
            (phase_of(sum), members)
        })
        .collect();
    finish_clusters(report, clusters, ClusterMethod::PhaseGaps)
}

/// Treats every eigenvector as its own eigenspace.
pub fn unmerged_clusters(report: SpectrumReport) -> Result<SpectrumReport, SpectralError> {
    let clusters = (0..report.dim).map(|i| (phase_of(report.eigenvalues[i]), vec![i])).collect();
    finish_clusters(report, clusters, ClusterMethod::Unmerged)
}

fn finish_clusters(
    mut report: SpectrumReport,
    raw: Vec<(f64, Vec<usize>)>,
    method: ClusterMethod,
) -> Result<SpectrumReport, SpectralError> {
    let mut clusters = Vec::with_capacity(raw.len());
    for (phase, mut indices) in raw {
        indices.sort_unstable();
        let basis = orthonormal_columns(&report.vectors, &indices);
        let extremal = extremal_supnorm(&EigenspaceProjector::from_basis(clusters.len(), basis))?;
        clusters.push(Cluster {
            phase,
            dim: indices.len(),
            indices,
            supnorm: extremal.value,
            witness_index: extremal.witness_index,
        });
    }
    report.clusters = clusters;
    report.method = Some(method);
    Ok(report)
}

fn orthonormal_columns(vectors: &CMat, indices: &[usize]) -> CMat {
    let cols = CMat::from_fn(vectors.nrows(), indices.len(), |i, j| vectors[(i, indices[j])]);
    if indices.len() == 1 {
        return cols;
    }
    // nalgebra's QR is sequential, so the basis does not depend on the rayon pool size.
    let qr = nalgebra::DMatrix::from_fn(cols.nrows(), cols.ncols(), |i, j| cols[(i, j)]).qr();
    let q = qr.q();
    CMat::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)])
}

/// Orthogonal projection onto one eigenspace, held through an orthonormal
/// basis `Q` so that `Pi = Q Q^†`.
#[derive(Debug, Clone)]
pub struct EigenspaceProjector {
    pub cluster_id: usize,
    basis: CMat,
}

impl EigenspaceProjector {
    /// `basis` must have orthonormal columns.
    pub fn from_basis(cluster_id: usize, basis: CMat) -> Self {
        Self { cluster_id, basis }
    }

    pub fn for_cluster(report: &SpectrumReport, cluster_id: usize) -> Result<Self, SpectralError> {
        let cluster = report.clusters.get(cluster_id).ok_or(SpectralError::NotClustered)?;
        Ok(Self::from_basis(cluster_id, orthonormal_columns(&report.vectors, &cluster.indices)))
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> MatRef<'_, c64> {
        self.basis.as_ref()
    }

    /// Dense `N x N` projection matrix.
    pub fn matrix(&self) -> CMat {
        linalg::mul_adjoint(self.basis.as_ref(), self.basis.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extremal {
    pub value: f64,
    pub witness_index: usize,
    /// `Pi e_j / ||Pi e_j||`, a unit vector in the eigenspace.
    pub witness: Vec<c64>,
}

/// `max_j || Pi e_j ||`, the largest sup-norm of a unit vector in the
/// eigenspace, with a vector attaining it. Ties go to the smallest index.
pub fn extremal_supnorm(projector: &EigenspaceProjector) -> Result<Extremal, SpectralError> {
    let q = projector.basis();
    if q.ncols() == 0 || q.nrows() == 0 {
        return Err(SpectralError::EmptyEigenspace);
    }
    let norms = linalg::row_norms(q);
    let (witness_index, value) = norms
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    // Pi e_j = Q conj(Q[j, :])^T
    let witness = (0..q.nrows())
        .map(|i| (0..q.ncols()).fold(ZERO, |acc, k| acc + q[(i, k)] * q[(witness_index, k)].conj()) / value)
        .collect();
    Ok(Extremal { value, witness_index, witness })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxSupnorm {
    pub value: f64,
    pub cluster_id: usize,
    pub cluster_dim: usize,
    pub witness_index: usize,
    pub witness: Vec<c64>,
    /// Same maximum taken over single eigenvectors, without clustering.
    pub unmerged_value: f64,
}

/// Clusters a propagator's spectrum for period `n`, computing the global
/// phase first when `n` is in the short-period regime.
pub fn clustered_spectrum(m: &Propagator, period: u64, tol: f64) -> Result<SpectrumReport, SpectralError> {
    let mut report = eigendecompose(m)?;
    if report.lambda.is_some_and(|l| is_short_period(m.dim(), period, l)) {
        report.global_phase = global_phase(m.entries(), period);
    }
    cluster_eigenvalues(report, period, tol)
}

/// Largest `l_inf` norm of an `l2`-normalized eigenfunction.
pub fn max_supnorm(m: &Propagator, period: u64) -> Result<MaxSupnorm, SpectralError> {
    let report = clustered_spectrum(m, period, CLUSTER_TOL)?;
    max_supnorm_of(&report)
}

pub fn max_supnorm_of(report: &SpectrumReport) -> Result<MaxSupnorm, SpectralError> {
    if report.clusters.is_empty() {
        return Err(SpectralError::NotClustered);
    }
    let mut best: Option<(usize, &Cluster)> = None;
    for (id, c) in report.clusters.iter().enumerate() {
        best = match best {
            Some((_, b)) if c.supnorm < b.supnorm => best,
            Some((_, b)) if c.supnorm == b.supnorm && c.witness_index >= b.witness_index => best,
            _ => Some((id, c)),
        };
    }
    let (cluster_id, cluster) = best.expect("nonempty");
    let extremal = extremal_supnorm(&EigenspaceProjector::for_cluster(report, cluster_id)?)?;
    Ok(MaxSupnorm {
        value: extremal.value,
        cluster_id,
        cluster_dim: cluster.dim,
        witness_index: extremal.witness_index,
        witness: extremal.witness,
        unmerged_value: report.max_supnorm_unmerged(),
    })
}

/// `||X||_{l1 -> l_inf}`, the largest entry modulus.
pub fn op_norm_1_inf(x: MatRef<'_, c64>) -> f64 {
    linalg::max_abs(x)
}

/// `||X||_{l2 -> l_inf}`, the largest row norm.
pub fn op_norm_2_inf(x: MatRef<'_, c64>) -> f64 {
    linalg::op_norm_2_inf(x)
}

fn check_averaging(mu: c64, horizon: usize) -> Result<(), SpectralError> {
    if horizon == 0 {
        return Err(SpectralError::ZeroHorizon);
    }
    if (mu.norm() - 1.0).abs() > 1e-12 {
        return Err(SpectralError::NotUnitModulus(mu.norm()));
    }
    Ok(())
}

/// `B = (1/T) sum_{k<T} mu^{-k} M^k`. An eigenvector of `M` with eigenvalue
/// `mu` is fixed by `B`.
pub fn averaging_operator(m: MatRef<'_, c64>, mu: c64, horizon: usize) -> Result<CMat, SpectralError> {
    check_averaging(mu, horizon)?;
    let n = m.nrows();
    let mut power = linalg::identity(n);
    let mut acc = CMat::zeros(n, n);
    let inv = mu.conj();
    let mut weight = c64::new(1.0, 0.0);
    for k in 0..horizon {
        if k > 0 {
            power = linalg::mul(m, power.as_ref());
            weight *= inv;
        }
        acc += &power * faer::Scale(weight);
    }
    Ok(acc * faer::Scale(c64::new(1.0 / horizon as f64, 0.0)))
}

/// Row norms of the averaging operator for many `mu` at once.
///
/// Row `i` of `B` is `(1/T) sum_k mu^{-k} row_i(M^k)`, so its squared norm is
/// `(1/T^2) sum_{a,b} mu^{a-b} <row_i(M^a), row_i(M^b)>`; the Gram entries are
/// computed once.
#[derive(Debug, Clone)]
pub struct AveragingRowNorms {
    horizon: usize,
    // gram[i][a * T + b] = <row_i(M^a), row_i(M^b)>
    gram: Vec<Vec<c64>>,
}

impl AveragingRowNorms {
    pub fn new(m: MatRef<'_, c64>, horizon: usize) -> Result<Self, SpectralError> {
        check_averaging(c64::new(1.0, 0.0), horizon)?;
        let n = m.nrows();
        let mut powers = vec![linalg::identity(n)];
        for k in 1..horizon {
            let next = linalg::mul(m, powers[k - 1].as_ref());
            powers.push(next);
        }
        let gram = (0..n)
            .map(|i| {
                let mut g = vec![ZERO; horizon * horizon];
                for a in 0..horizon {
                    for b in a..horizon {
                        let v = (0..n).fold(ZERO, |acc, k| acc + powers[a][(i, k)].conj() * powers[b][(i, k)]);
                        g[a * horizon + b] = v;
                        g[b * horizon + a] = v.conj();
                    }
                }
                g
            })
            .collect();
        Ok(Self { horizon, gram })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn row_norms(&self, mu: c64) -> Result<Vec<f64>, SpectralError> {
        check_averaging(mu, self.horizon)?;
        let t = self.horizon;
        let pows: Vec<c64> = (0..t).map(|k| mu.powu(k as u32)).collect();
        Ok(self
            .gram
            .iter()
            .map(|g| {
                let mut s = ZERO;
                for a in 0..t {
                    for b in 0..t {
                        s += pows[a] * pows[b].conj() * g[a * t + b];
                    }
                }
                (s.re.max(0.0)).sqrt() / t as f64
            })
            .collect())
    }

    /// `||B||_{l2 -> l_inf}` for the given `mu`.
    pub fn max_row_norm(&self, mu: c64) -> Result<f64, SpectralError> {
        Ok(self.row_norms(mu)?.into_iter().fold(0.0, f64::max))
    }
}
