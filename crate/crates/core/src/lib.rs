//! Numerical laboratory for quantized hyperbolic toral automorphisms
//! ("quantum cat maps") on the `theta = 0` quantum state space.
//!
//! - [`arith`]: exact integer arithmetic (periods, the short-period sequence).
//! - [`quantize`]: propagators, quantum translations, Weyl quantization.
//! - [`spectral`]: eigendecomposition, eigenspace clustering, sup-norms.
//! - [`experiments`]: sup-norm scans, eigenfunction profiles, dispersive norms.
//! - [`export`]: CSV, JSON and binary writers for all of the above.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod export;
pub mod experiments;
pub mod linalg;
pub mod quantize;
pub mod spectral;

pub use arith::{
    bdb_N, bdb_sequence, matrix_order_mod, matrix_power, p_sequence, quantum_period, validate_catmap,
    AdmissibilityReport, ArithError, BdbPoint, CatMatrix, Mat2, ParityRule, PeriodRecord,
};

pub use faer::c64;
pub use linalg::CMat;
pub use quantize::{
    build_propagator, build_propagator_with, egorov_defect, quantize_observable, select_kernel_variant,
    translation_matrix, BuildOptions, KernelVariant, LatticeTranslation, Propagator, QuantizeError, TrigPolynomial,
};
pub use spectral::{
    averaging_operator, cluster_eigenvalues, eigendecompose, extremal_supnorm, max_supnorm, op_norm_1_inf,
    EigenspaceProjector, MaxSupnorm, SpectralError, SpectrumReport,
};
pub use experiments::{
    dispersive_scan, eigenfunction_profile, scan_dims, scan_supnorms, verify_bounds, BoundsReport, ClusterMode,
    DispersiveRecord, ExperimentError, Profile, Row, ScanOptions, ScanRecord,
};
