//! Harness library behind the `pseudonym-pki` binary: the healthcare-flow
//! scenario runner with fault injection, and the key-expansion benchmark
//! with mean / standard-deviation reporting per strength and experiment.

use thiserror::Error;

pub mod bench;
pub mod report;
pub mod scenario;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no registered curve for strength {0}")]
    UnknownStrength(u16),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("protocol step failed unexpectedly: {0}")]
    Entity(#[from] pseudonym_pki::entities::EntityError),
}
