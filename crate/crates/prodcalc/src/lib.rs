//! Two-parameter spectral calculus on products of doubling metric measure
//! spaces, realized on finite tensor eigenbases.
//!
//! The toolkit builds discrete spectral models of one-dimensional coordinate
//! spaces (circle, Jacobi interval), assembles their product geometry, and
//! provides the operator calculus `F(sqrt(L1), sqrt(L2))` on the retained
//! eigenband: analysis/synthesis, heat semigroup, localized kernels, spectral
//! projectors, Littlewood-Paley blocks, mixed-smoothness Besov and
//! Triebel-Lizorkin norms, Hardy maximal quasi-norms, and spectral
//! multipliers. Each subsystem ships a verification harness that measures the
//! structural constants (doubling, kernel localization, reproducing formulas,
//! Nikolski/Peetre, maximal ordering, multiplier boundedness) and reports
//! pass/fail against recorded tolerances.
//!
//! Modules follow the data flow:
//!
//! - [`coordspace`]: one coordinate space = eigenpairs + quadrature + metric
//! - [`product`]: product grid, rectangle volumes, decay kernels, integral
//!   estimates
//! - [`calculus`]: tensor analysis/synthesis and operators `F(sqrt(L))`
//! - [`lpdecomp`]: cutoff systems, dyadic blocks, Calderon reproduction,
//!   Nikolski/Peetre harnesses
//! - [`funcspaces`]: Besov/Triebel-Lizorkin norms and space harnesses
//! - [`hardy`]: strong and heat maximal operators, `H^p` quasi-norms
//! - [`multipliers`]: multiplier classes, lifting, boundedness harnesses
//! - [`testset`]: reproducible band-limited test-function families
//! - [`report`]: the [`report::VerificationReport`] record and CSV/JSON forms

// numeric kernels index several parallel arrays by mode/node position
#![allow(clippy::needless_range_loop)]

pub mod calculus;
pub mod coordspace;
pub mod funcspaces;
pub mod hardy;
pub mod lpdecomp;
pub mod multipliers;
pub mod product;
pub mod report;
pub mod testset;
pub mod util;

pub use calculus::{analyze, synthesize, CoefField, KernelSlice, SpectralProjector, Symbol};
pub use coordspace::SpectralModel;
pub use lpdecomp::CutoffSystem;
pub use product::{DKernelParams, ProductSpace};
pub use report::VerificationReport;

/// Errors shared by every module of the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    /// Grid/coefficient shapes do not match the space they claim to live on.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// A harness precondition (on exponents, bands, norms) is violated; the
    /// run is a configuration error rather than a check failure.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
