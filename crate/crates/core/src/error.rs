use thiserror::Error;

use crate::instance::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),
    #[error("malformed instance document: {0}")]
    Malformed(String),
    #[error("agent index {agent} out of range (instance has {n_agents} agents)")]
    AgentOutOfRange { agent: usize, n_agents: usize },
    #[error("bundle has {got} entries, instance has {expected} goods")]
    BundleShape { got: usize, expected: usize },
    #[error("bundle asks for {requested} units of good {good}, supply is {supply}")]
    SupplyExceeded { good: usize, requested: u32, supply: u32 },
    #[error("top_{b} requested from a vector of length {len}")]
    TopTooLarge { b: usize, len: usize },
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("pivot rule `{rule}` does not apply: {reason}")]
    RuleShape { rule: String, reason: String },
    #[error("invalid valuation: {0}")]
    InvalidValuation(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("price pair {index} is malformed: {reason}")]
    MalformedPricePair { index: usize, reason: String },
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("instance shape: {0}")]
    Shape(String),
    #[error("certificate failure: {0}")]
    Certificate(String),
    #[error("walrasian verification failed: {0}")]
    Walrasian(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
