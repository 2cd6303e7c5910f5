//! Shared fixtures for the benchmarks.

use catmap::CatMatrix;

/// The matrix `[[2, 3], [1, 2]]` used by the default scans.
pub fn standard() -> CatMatrix {
    CatMatrix::from_i64([2, 3, 1, 2]).expect("standard matrix is quantizable")
}

/// Odd dimensions spanning the scanned range.
pub const DIMS: [usize; 4] = [101, 265, 501, 989];
