//! Bounded stochastic dominance on a closed interval: lower partial moments,
//! exact dominance certificates, utility-class membership, generator utilities
//! and a dominance-constrained portfolio solver.

pub mod dist;
pub mod dominance;
pub mod error;
pub mod generator;
pub mod harness;
pub mod polyseg;
pub mod portfolio;
pub mod utility;

pub use dist::{DiscreteDistribution, Interval, ScenarioTable};
pub use dominance::{DominanceVerdict, OrderKind};
pub use error::{Error, Result};
pub use polyseg::{PiecewisePolynomial, SignCertificate, SignVerdict};
pub use portfolio::{PortfolioProblem, PortfolioSolution};
pub use utility::{Descriptor, MembershipReport, UtilitySpec};
