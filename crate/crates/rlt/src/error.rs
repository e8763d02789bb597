use num_complex::Complex64;
use thiserror::Error;

/// Eigenvalue pairs of a generator for which `e^{a_j - a_k}` is too close to 1,
/// making the composition maps undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityReport {
    /// Offending cluster index pairs `(j, k)` with the value of `e^{a_j - a_k} - 1`.
    pub offending: Vec<(usize, usize, Complex64)>,
    /// Threshold on `|e^{a_j - a_k} - 1|` below which a pair is flagged.
    pub threshold: f64,
}

impl SingularityReport {
    pub fn is_singular(&self) -> bool {
        !self.offending.is_empty()
    }
}

impl std::fmt::Display for SingularityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} eigenvalue pair(s) with |e^(a_j - a_k) - 1| < {:.1e}:", self.offending.len(), self.threshold)?;
        for (j, k, v) in &self.offending {
            write!(f, " ({j},{k}): {:.3e}", v.norm())?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RltError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix is not diagonalizable within tolerance (cond(V) = {cond:.3e}, reconstruction residual = {residual:.3e})")]
    NotDiagonalizable { cond: f64, residual: f64 },

    #[error("principal logarithm undefined: eigenvalue {value} lies on the closed negative real axis")]
    BranchCut { value: Complex64 },

    #[error("matrix is singular or nearly singular (|eigenvalue| = {min_abs_eig:.3e})")]
    SingularMatrix { min_abs_eig: f64 },

    #[error("spectral singularity: {report}")]
    SpectralSingularity { report: SingularityReport },

    #[error("gate '{gate}' has a singular ideal Lindbladian ({report}); 180-degree rotations are outside the method's applicability -- implement them as two 90-degree rotations and characterize those instead")]
    SingularGate { gate: String, report: SingularityReport },

    #[error("composition became singular at gate {position} ('{gate}') of the unit sequence: {detail}")]
    SingularPrefix { position: usize, gate: String, detail: String },

    #[error("no period k <= {k_max} found (min distance to identity {best:.3e}); aperiodic gates are not supported")]
    Aperiodic { k_max: usize, best: f64 },

    #[error("{n} is not a period of the ideal gate (distance to identity {distance:.3e})")]
    NotAPeriod { n: usize, distance: f64 },

    #[error("map is not trace-preserving / completely positive: {0}")]
    NotCptp(String),

    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

pub type Result<T> = std::result::Result<T, RltError>;
