//! Exact-arithmetic toolkit for melting-crystal partition functions, the
//! quantum-torus matrix algebra behind their shift symmetries, and the
//! 2D Toda / Ablowitz-Ladik factorization structure of the associated tau
//! functions.  Every computation is carried out over exact rationals on
//! explicitly truncated series; every identity check reports the truncation
//! at which it was verified.

pub mod error;
pub mod fock;
pub mod partitions;
pub mod policy;
pub mod qtorus;
pub mod report;
pub mod series;
pub mod suites;
pub mod toda;

pub use error::{Error, Result};
pub use series::{Mono, Prec, Rat, ScalarSeries, TMono};
