//! Distribution- and correlation-free (DCF) two-sample test for high-dimensional means.
//!
//! The test rejects `H0: mu_X = mu_Y` when the sup-norm statistic
//! `T_n = sqrt(n) * max_j |Xbar_j - Ybar_j|` reaches the `(1 - alpha)` quantile of a
//! Gaussian multiplier bootstrap built from the centered observations. Nothing is
//! assumed about the covariance structure of either sample, and observations within a
//! sample need not be identically distributed.
//!
//! The numeric core is generic over the scalar type (see [`Real`]); [`Sample64`],
//! [`Sample32`] and friends fix the precision for callers who don't care.
//!
//! Modules:
//! - [`rng`]: counter-based per-stream generators and the innovation distributions
//! - [`matops`]: covariance constructors and the symmetric PSD square root
//! - [`dcf`]: statistic, bootstrap, critical value, p-value, confidence box, power
//! - [`simgen`]: simulation settings I-VII
//! - [`harness`]: Monte Carlo size/power tables and power-approximation checks
//! - [`pool`]: block averaging of gridded records

pub mod dcf;
pub mod error;
pub mod harness;
pub mod matops;
pub mod pool;
pub mod rng;
pub mod scalar;
pub mod simgen;

pub use dcf::{
    bootstrap_draws, confidence_region, critical_value, diagnostics, p_value, power_estimate,
    run_test, test_statistic, BootstrapDraws, ConfidenceBox, Diagnostics, MultiplierBootstrap,
    Sample, TestConfig, TestResult,
};
pub use error::{DcfError, Result};
pub use harness::{
    rejection_table, theorem6_check, theorem7_check, CellResult, GridCell, MCPlan,
    Theorem6Report, Theorem7Options, Theorem7Report,
};
pub use matops::{poly_decay_cov, scaled_cov, sym_eigen, sym_sqrt, CovMatrix, Matrix};
pub use pool::block_average;
pub use rng::{derive_stream, Innovation, SeedSpec, Stream};
pub use scalar::Real;
pub use simgen::{
    build_mean_vector, gen_pair, signal_strength, MeanMode, MeanSpec, PreparedSetting, Setting,
    SettingSpec,
};

pub type Sample64 = Sample<f64>;
pub type Sample32 = Sample<f32>;
pub type Matrix64 = Matrix<f64>;
pub type CovMatrix64 = CovMatrix<f64>;
pub type BootstrapDraws64 = BootstrapDraws<f64>;
pub type TestResult64 = TestResult<f64>;
pub type ConfidenceBox64 = ConfidenceBox<f64>;
pub type Diagnostics64 = Diagnostics<f64>;
pub type PreparedSetting64 = PreparedSetting<f64>;
