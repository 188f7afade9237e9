//! Numerical tolerances shared by every module.

/// Row sums of a transition matrix must equal 1 to this absolute tolerance.
pub const ROW_STOCHASTIC: f64 = 1e-12;

/// Absolute tolerance on `m(x)Π(x,y) - m(y)Π(y,x)`.
pub const DETAILED_BALANCE: f64 = 1e-10;

/// Eigenvalue comparisons (multiplicity of 1, spectral inclusion).
pub const EIGEN: f64 = 1e-9;

/// Matrix entries at or below this magnitude count as zero for propagation.
pub const ENTRY: f64 = 1e-12;

/// Relative slack used when comparing masses against `m(X)/2` and similar
/// half-mass thresholds, so that exact halves survive rounding.
pub const MASS_REL: f64 = 1e-12;

/// Relative tolerance under which two objective values are treated as tied.
pub const TIE_REL: f64 = 1e-12;

/// Triangle-inequality slack for metrics.
pub const TRIANGLE: f64 = 1e-12;

/// Default enumeration cap for exact subset scans.
pub const ENUMERATION_CAP: usize = 22;

/// Exact quasi-locality scans stop here; larger spaces use sampling.
pub const QUASI_LOCAL_CAP: usize = 20;

/// `a <= b` up to a relative slack scaled by `scale`.
pub(crate) fn le_rel(a: f64, b: f64, scale: f64) -> bool {
    a <= b + MASS_REL * scale.abs()
}
