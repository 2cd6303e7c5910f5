//! Scan drivers: maximal eigenfunction sup-norms
//! against `N`, single extremal eigenfunction profiles, and `l1 -> l_inf`
//! norms of propagator powers.

use std::collections::BTreeSet;

use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{bdb_sequence, matrix_power, quantum_period, ArithError, CatMatrix};
use crate::linalg;
use crate::quantize::{build_propagator_with, BuildOptions, QuantizeError};
use crate::spectral::{self, SpectralError, CLUSTER_TOL};

/// Largest dimension a scan will build unless the cap is raised.
pub const DEFAULT_MAX_DIM: usize = 4001;
/// Drift allowed in `(M^j)^† M^j - I` while powering.
pub const DRIFT_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("empty range [{0}, {1}]")]
    EmptyRange(usize, usize),
    #[error("N = {0} exceeds the dimension cap {1}")]
    TooLarge(usize, usize),
    #[error("N = {0} is even")]
    EvenDimension(usize),
    #[error("unitarity drift {drift:e} at power {j} for N = {n}")]
    Drift { n: usize, j: usize, drift: f64 },
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("no records to verify")]
    NoRecords,
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClusterMode {
    /// Near-degenerate eigenvalues share an eigenspace.
    #[default]
    Merged,
    /// Every eigenvector is scored on its own.
    Unmerged,
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub odd_only: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    pub cluster_tol: f64,
    pub cluster_mode: ClusterMode,
    pub build: BuildOptions,
    pub max_dim: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            odd_only: true,
            jobs: None,
            cluster_tol: CLUSTER_TOL,
            cluster_mode: ClusterMode::Merged,
            build: BuildOptions::default(),
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

/// One row of a sup-norm scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct ScanRecord {
    pub N: usize,
    pub n_N: u64,
    pub max_supnorm: f64,
    /// `(2 log_lambda N)^{-1/2}`
    pub lower_env: f64,
    /// `(log_lambda N)^{-1/2}`
    pub upper_env: f64,
    /// `N^{-1/2}`
    pub trivial_lb: f64,
    pub is_bdb: bool,
    pub witness_index: usize,
    pub cluster_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct RowFailure {
    pub N: usize,
    pub error: String,
}

/// A scan row: either a record or the reason that `N` failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Row<T> {
    Ok(T),
    Failed(RowFailure),
}

impl<T> Row<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Row::Ok(r) => Some(r),
            Row::Failed(_) => None,
        }
    }
}

pub fn records<T: Clone>(rows: &[Row<T>]) -> Vec<T> {
    rows.iter().filter_map(|r| r.ok().cloned()).collect()
}

pub fn failures<T>(rows: &[Row<T>]) -> Vec<&RowFailure> {
    rows.iter()
        .filter_map(|r| match r {
            Row::Failed(f) => Some(f),
            Row::Ok(_) => None,
        })
        .collect()
}

/// `(2 log_lambda N + 1)^{-1/2}`, the bound guaranteed on short-period `N`.
pub fn short_period_bound(a: &CatMatrix, n: usize) -> f64 {
    (2.0 * a.log_lambda(n as f64) + 1.0).powf(-0.5)
}

fn in_pool<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, ExperimentError> {
    match jobs {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| ExperimentError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Short-period moduli `N_k` up to `limit`; empty when `a` lacks the hypotheses.
pub fn bdb_moduli_up_to(a: &CatMatrix, limit: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    if !a.report().thm1_eligible {
        return out;
    }
    let mut count = 1;
    loop {
        let Ok(seq) = bdb_sequence(a, count) else { return out };
        let last = seq.last().expect("count >= 1");
        match last.modulus.to_usize() {
            Some(n) if n <= limit => {
                out.insert(n);
                count += 1;
            }
            _ => return out,
        }
    }
}

fn check_range(n_min: usize, n_max: usize, opts: &ScanOptions) -> Result<(), ExperimentError> {
    if n_min == 0 || n_min > n_max {
        return Err(ExperimentError::EmptyRange(n_min, n_max));
    }
    if n_max > opts.max_dim {
        return Err(ExperimentError::TooLarge(n_max, opts.max_dim));
    }
    Ok(())
}

fn scan_one(a: &CatMatrix, n: usize, is_bdb: bool, opts: &ScanOptions) -> Result<ScanRecord, ExperimentError> {
    let period = quantum_period(a, n as u64)?.period;
    let m = build_propagator_with(a, n, &opts.build)?;
    let report = match opts.cluster_mode {
        ClusterMode::Merged => spectral::clustered_spectrum(&m, period, opts.cluster_tol)?,
        ClusterMode::Unmerged => spectral::unmerged_clusters(spectral::eigendecompose(&m)?)?,
    };
    let best = spectral::max_supnorm_of(&report)?;
    let log_n = a.log_lambda(n as f64);
    Ok(ScanRecord {
        N: n,
        n_N: period,
        max_supnorm: best.value,
        lower_env: (2.0 * log_n).powf(-0.5),
        upper_env: log_n.powf(-0.5),
        trivial_lb: (n as f64).powf(-0.5),
        is_bdb,
        witness_index: best.witness_index,
        cluster_dim: best.cluster_dim,
    })
}

/// Maximal eigenfunction sup-norm for every `N` in `[n_min, n_max]` (odd
/// only by default), ordered by `N`. Per-`N` failures become error rows.
pub fn scan_supnorms(
    a: &CatMatrix,
    n_min: usize,
    n_max: usize,
    opts: &ScanOptions,
) -> Result<Vec<Row<ScanRecord>>, ExperimentError> {
    check_range(n_min, n_max, opts)?;
    let dims: Vec<usize> = (n_min..=n_max).filter(|n| !opts.odd_only || n % 2 == 1).collect();
    scan_dims(a, &dims, opts)
}

/// Same as [`scan_supnorms`] over an explicit list of dimensions.
pub fn scan_dims(a: &CatMatrix, dims: &[usize], opts: &ScanOptions) -> Result<Vec<Row<ScanRecord>>, ExperimentError> {
    if let Some(&n) = dims.iter().find(|&&n| n > opts.max_dim) {
        return Err(ExperimentError::TooLarge(n, opts.max_dim));
    }
    let bdb = bdb_moduli_up_to(a, dims.iter().copied().max().unwrap_or(0));
    let mut dims = dims.to_vec();
    dims.sort_unstable();
    dims.dedup();
    in_pool(opts.jobs, || {
        dims.par_iter()
            .map(|&n| match scan_one(a, n, bdb.contains(&n), opts) {
                Ok(r) => Row::Ok(r),
                Err(e) => Row::Failed(RowFailure { N: n, error: e.to_string() }),
            })
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct Profile {
    pub N: usize,
    pub n_N: u64,
    pub max_supnorm: f64,
    pub witness_index: usize,
    pub cluster_dim: usize,
    /// `|u_i|` for the extremal eigenfunction.
    pub abs_u: Vec<f64>,
}

/// Coordinate moduli of a maximal-sup-norm eigenfunction.
pub fn eigenfunction_profile(a: &CatMatrix, n: usize, opts: &ScanOptions) -> Result<Profile, ExperimentError> {
    let period = quantum_period(a, n as u64)?.period;
    let m = build_propagator_with(a, n, &opts.build)?;
    let report = match opts.cluster_mode {
        ClusterMode::Merged => spectral::clustered_spectrum(&m, period, opts.cluster_tol)?,
        ClusterMode::Unmerged => spectral::unmerged_clusters(spectral::eigendecompose(&m)?)?,
    };
    let best = spectral::max_supnorm_of(&report)?;
    Ok(Profile {
        N: n,
        n_N: period,
        max_supnorm: best.value,
        witness_index: best.witness_index,
        cluster_dim: best.cluster_dim,
        abs_u: best.witness.iter().map(|z| z.norm()).collect(),
    })
}

/// `||M^j||_{l1 -> l_inf}` next to the dispersive bound `sqrt(|b_j| / N)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct DispersiveRecord {
    pub N: usize,
    pub j: usize,
    pub norm_1_inf: f64,
    /// Absent when `b_j = 0`.
    pub bound: Option<f64>,
}

/// Dispersive norms for `1 <= j <= j_max` and each odd `N` in `dims`.
///
/// Powers are accumulated by repeated multiplication, independently of any
/// eigendecomposition; an `N` whose powers drift from unitarity is reported as
/// a failure.
pub fn dispersive_scan(
    a: &CatMatrix,
    dims: &[usize],
    j_max: usize,
    opts: &ScanOptions,
) -> Result<Vec<Row<DispersiveRecord>>, ExperimentError> {
    if j_max == 0 {
        return Err(ExperimentError::EmptyRange(1, 0));
    }
    for &n in dims {
        if n % 2 == 0 && !opts.build.allow_even_n {
            return Err(ExperimentError::EvenDimension(n));
        }
        if n > opts.max_dim {
            return Err(ExperimentError::TooLarge(n, opts.max_dim));
        }
    }
    let b_j: Vec<f64> = (1..=j_max)
        .map(|j| matrix_power(a.as_mat(), j as u64).b.abs().to_f64().unwrap_or(f64::INFINITY))
        .collect();
    let per_n = in_pool(opts.jobs, || {
        dims.par_iter()
            .map(|&n| dispersive_one(a, n, j_max, &b_j, opts))
            .collect::<Vec<_>>()
    })?;
    let mut rows = Vec::new();
    for (n, result) in dims.iter().zip(per_n) {
        match result {
            Ok(mut recs) => rows.extend(recs.drain(..).map(Row::Ok)),
            Err(e) => rows.push(Row::Failed(RowFailure { N: *n, error: e.to_string() })),
        }
    }
    Ok(rows)
}

fn dispersive_one(
    a: &CatMatrix,
    n: usize,
    j_max: usize,
    b_j: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<DispersiveRecord>, ExperimentError> {
    let m = build_propagator_with(a, n, &opts.build)?;
    let mut power = m.entries().to_owned();
    let mut out = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        if j > 1 {
            power = linalg::mul(m.entries(), power.as_ref());
        }
        let drift = linalg::unitarity_residual(power.as_ref());
        if !(drift <= DRIFT_TOL) {
            return Err(ExperimentError::Drift { n, j, drift });
        }
        let b = b_j[j - 1];
        out.push(DispersiveRecord {
            N: n,
            j,
            norm_1_inf: linalg::max_abs(power.as_ref()),
            bound: (b != 0.0).then(|| (b / n as f64).sqrt()),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct BoundCheck {
    pub N: usize,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationBin {
    pub n_from: usize,
    pub n_to: usize,
    pub violations: usize,
    pub total: usize,
}

/// Both sup-norm inequalities evaluated on scan data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub epsilon: f64,
    /// `||u||_inf >= (1 - eps) / sqrt(2 log_lambda N)` on short-period `N`.
    pub lower: Vec<BoundCheck>,
    pub lower_testable: bool,
    /// Smallest `N` from which the lower bound holds on all later short-period
    /// records; `None` if it fails on the last one or is not testable.
    pub lower_onset: Option<usize>,
    /// `||u||_inf <= 1 / sqrt((1 - eps) log_lambda N)` on every record.
    pub upper: Vec<BoundCheck>,
    pub upper_onset: Option<usize>,
    pub upper_violations: Vec<usize>,
    pub upper_pass_fraction: f64,
    /// Violation counts over four consecutive, equally sized slices of the
    /// records; a decreasing sequence is the expected trend.
    pub upper_trend: Vec<ViolationBin>,
}

fn onset(checks: &[BoundCheck]) -> Option<usize> {
    match checks.iter().rposition(|c| !c.holds) {
        None => checks.first().map(|c| c.N),
        Some(last_fail) => checks.get(last_fail + 1).map(|c| c.N),
    }
}

/// Evaluates the lower (short-period) and upper sup-norm bounds per record.
///
/// `lambda` is the dominant eigenvalue of the classical map.
pub fn verify_bounds(records: &[ScanRecord], lambda: f64, epsilon: f64) -> Result<BoundsReport, ExperimentError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(ExperimentError::BadEpsilon(epsilon));
    }
    if records.is_empty() {
        return Err(ExperimentError::NoRecords);
    }
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| r.N);
    let log = |n: usize| (n as f64).ln() / lambda.ln();

    let lower: Vec<BoundCheck> = sorted
        .iter()
        .filter(|r| r.is_bdb)
        .map(|r| {
            let bound = (1.0 - epsilon) / (2.0 * log(r.N)).sqrt();
            BoundCheck { N: r.N, value: r.max_supnorm, bound, holds: r.max_supnorm >= bound }
        })
        .collect();
    let upper: Vec<BoundCheck> = sorted
        .iter()
        .map(|r| {
            let bound = 1.0 / ((1.0 - epsilon) * log(r.N)).sqrt();
            BoundCheck { N: r.N, value: r.max_supnorm, bound, holds: r.max_supnorm <= bound }
        })
        .collect();
    let upper_violations: Vec<usize> = upper.iter().filter(|c| !c.holds).map(|c| c.N).collect();
    let upper_pass_fraction = 1.0 - upper_violations.len() as f64 / upper.len() as f64;
    let chunk = upper.len().div_ceil(4);
    let upper_trend = upper
        .chunks(chunk)
        .map(|c| ViolationBin {
            n_from: c[0].N,
            n_to: c[c.len() - 1].N,
            violations: c.iter().filter(|x| !x.holds).count(),
            total: c.len(),
        })
        .collect();

    Ok(BoundsReport {
        epsilon,
        lower_testable: !lower.is_empty(),
        lower_onset: onset(&lower),
        upper_onset: onset(&upper),
        lower,
        upper,
        upper_violations,
        upper_pass_fraction,
        upper_trend,
    })
}
