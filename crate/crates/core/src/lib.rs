//! Exact-arithmetic mechanism design for auctions with capacitated valuations.
//!
//! An agent with capacity `c` values a bundle as the sum of its `c` most
//! valuable units. The crate computes efficient allocations (maximum-weight
//! b-matching), VCG payments under several pivot rules, and decides the
//! standard mechanism properties exactly: envy-freeness, individual
//! rationality, no positive transfers, incentive compatibility (by probing),
//! gross substitutes and Walrasian equilibrium. The `flowcert` module builds
//! the flow certificates behind the "no agent envies a lower-capacity agent"
//! guarantee of Clarke payments, and the replication drivers replay the
//! impossibility arguments as checked inequality chains.

pub mod audit;
pub mod chain;
pub mod cli;
pub mod error;
pub mod flowcert;
pub mod fuzz;
pub mod instance;
pub mod matching;
pub mod mechanisms;
pub mod rational;
pub mod valuation;
pub mod walrasian;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
pub use instance::{bundle_value, load, save, top_b, Allocation, Instance};
pub use matching::{brute_force_optimum, opt_excluding, social_optimum, OptResult};
pub use mechanisms::{vcg_outcome, Mechanism, MechanismOutcome, PivotRule};

pub use rational::{rat, Rat};
pub use valuation::{CapacitatedValuation, SetFunction, Subadditive2x2Valuation, Valuation};
