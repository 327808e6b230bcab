//! Seeded synthetic data and brute-force reference implementations for
//! the cinegaze test suites.
//!
//! The oracles in [`oracle`] follow the textbook definitions directly and
//! call nothing from `cinegaze` beyond its plain data types. They refuse
//! instances above small size caps.

pub mod dataset;
pub mod oracle;
pub mod random;
pub mod scanpath;

pub use dataset::{write_dataset, DatasetFixture};
pub use scanpath::{generate_scanpaths, ScanpathFixture};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("instance too large for the naive oracle: {0}")]
    TooLarge(String),
    #[error("value undefined: {0}")]
    Undefined(&'static str),
}

pub type OracleResult<T> = Result<T, OracleError>;
