//! Robust tomography of Lindbladian gate errors from repeated-circuit
//! experiments.
//!
//! Gates realized by Lindblad dynamics have Hilbert-Schmidt representations
//! `G = e^{L_ideal + dL}`, and repeating a gate sequence amplifies parts of
//! the generator errors `dL` above state-preparation-and-measurement bias.
//! This crate builds the *linearized* action of such repeated circuits on the
//! per-gate errors -- spectral perturbation maps for exponentials,
//! compositions, and powers -- simulates the experiments, and recovers the
//! `dL` by physicality-constrained least squares (a semidefinite program).
//!
//! The pipeline, module by module:
//!
//! * [`linalg`]: dense complex primitives -- exponential, principal logarithm,
//!   spectral decomposition with clustered eigenprojectors.
//! * [`reps`]: Pauli bases, HS/CJ representations, Lindbladian builders and
//!   physicality checks.
//! * [`gates`]: standard gate generators (90-degree rotations, T, ZX90, ...).
//! * [`perturb`]: the six spectral perturbation maps (`dcl`, `dcr`, `cml`,
//!   `cmr`, `ssp`, `sspc`), composition and repetition formulas, a quadrature
//!   oracle, and the truncated-BCH comparison.
//! * [`eac`]: per-circuit analysis -- periods, unit generators, the
//!   sequential map-composition algorithm, and the amplified/non-amplified
//!   split.
//! * [`sim`]: exact outcome probabilities under injected errors and seeded
//!   finite-shot sampling.
//! * [`tomo`]: linear-inversion process estimates, generator extraction, and
//!   the constrained fit.
//!
//! ```
//! use rlt::eac::{amplification_maps, GateSet, UnitSequence};
//! use rlt::gates;
//!
//! let mut gs = GateSet::new(2);
//! gs.add_gate("x90", gates::x90())?;
//! let seq = UnitSequence::from_names(&gs, &["x90"])?;
//! let maps = amplification_maps(&gs, &seq)?;
//! assert_eq!(maps.period(), 4);
//! # Ok::<(), rlt::RltError>(())
//! ```

pub mod error;
pub mod linalg;
pub mod reps;
pub mod gates;
pub mod perturb;
pub mod eac;
pub mod sim;
pub mod tomo;
pub mod random;

pub use error::{Result, RltError, SingularityReport};
pub use linalg::{CMatrix, SpectralDecomposition};
pub use reps::{HSMatrix, Lindbladian, MatrixBasis, PhysicalityReport};

// The guide chapters double as doc-tests so the book's code stays compiling.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/representations.md")]
    mod representations {}
    #[doc = include_str!("../../../book/src/perturbation-maps.md")]
    mod perturbation_maps {}
    #[doc = include_str!("../../../book/src/amplification.md")]
    mod amplification {}
    #[doc = include_str!("../../../book/src/simulation-and-fitting.md")]
    mod simulation_and_fitting {}
}
