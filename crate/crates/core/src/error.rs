use thiserror::Error;

use crate::market::Scenario;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{field}` = {value} is out of range: {reason}")]
    Range {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("both costs and availabilities differ between the primaries; no closed form applies")]
    AmbiguousScenario,
    #[error("constructor expects scenario {expected:?}, parameters describe {found:?}")]
    ScenarioMismatch { expected: Scenario, found: Scenario },
    #[error("mixing equation has no sign change on the search bracket")]
    NoRoot,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("primary {primary} reaches info state {info} but has no price distribution for it")]
    MissingCdf { primary: usize, info: &'static str },
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
