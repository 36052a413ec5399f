//! Intra-envy p-facility location.
//!
//! The crate evaluates intra-envy, global envy and median objectives for
//! discrete and continuous (ℓ1) facility location, builds the MILP
//! formulations of the problem in a solver-agnostic form, and solves
//! desk-scale instances either exactly (subset enumeration, bundled
//! branch-and-bound with cutting planes) or approximately (grid search,
//! swap local search).
//!
//! Module map:
//!
//! - [`eval`]: domain types, closest assignment and objective evaluators.
//! - [`gen`]: seeded instance generation and the text file formats.
//! - [`model`]: the MILP intermediate representation and its builders.
//! - [`cuts`]: separation of the y-space valid inequalities.
//! - [`refsolver`]: simplex, branch-and-bound, LP file I/O, external adapter.
//! - [`oracle`]: enumeration, grid and local-search reference solvers.
//! - [`bench`]: the cross-measure deviation experiment.

pub mod bench;
pub mod cuts;
pub mod error;
pub mod eval;
pub mod gen;
pub mod model;
pub mod oracle;
pub mod refsolver;

pub use error::{Error, Result};
pub use eval::{
    Assignment, ContinuousSolution, CostMatrix, DiscreteSolution, EnvyReport, Instance,
    InstanceKind, Measure, SiteSet,
};
