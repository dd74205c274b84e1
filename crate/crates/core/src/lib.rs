//! Resonance-method computations for quadratic character sums over
//! fundamental discriminants: Kronecker symbols and sieves, character sums
//! and their Pólya–Fourier expansion, GCD-sum resonator sets, resonance
//! moments, and the extremal scan.

pub mod arith;
pub mod charsum;
pub mod config;
pub mod discriminant;
pub mod error;
pub mod numeric;
pub mod pipeline;
pub mod report;
pub mod resonance;
pub mod resonator;
pub mod verify;

pub use arith::{factorize, jacobi, kronecker, FactoredInt, SpfTable};
pub use charsum::{partial_sum, polya_approx, CharTable, CharacterSieve, PolyaApprox};
pub use config::{Command, ConstructionMethod, OutputFormat, RunConfig, Suite};
pub use discriminant::{enumerate_fundamental, DiscriminantRange, FundamentalDiscriminant, SignFilter};
pub use error::{Error, Result};
pub use resonance::{
    predicted_bound, scan_extremal, BoundParams, Regime, ResonanceField, ResonanceMoments, ScanRecord,
    ScanReport, ScanStrategy,
};
pub use resonator::{gcd_sum, GcdSumReport, ResonatorSet};

/// Environment variable naming a directory for cached sieve tables.
pub const CACHE_DIR_ENV: &str = "RESONANCE_CACHE_DIR";
