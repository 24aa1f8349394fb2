//! Numerical laboratory for the nonlocal Dirichlet problem
//! (−Δ)ₚˢ u = λ α(x) f(u) in Ω, u = 0 outside Ω, with an oscillating reaction f.
//!
//! * [`constants`]: closed-form constants, the λ-interval and the discrete embedding constant.
//! * [`nonlinearity`]: bump-built oscillating reactions and their growth diagnostics.
//! * [`testfn`]: the cone test function and Monte-Carlo evaluation of its Gagliardo seminorm.
//! * [`discretization`]: grid energy J_λ = Φ − λΨ and its exact gradient.
//! * [`solver`]: multi-start and nested-ball searches for distinct critical points.
//! * [`report`]: CSV and key-value record formats.

pub mod constants;
pub mod discretization;
pub mod error;
pub mod nonlinearity;
pub mod problem;
pub mod report;
pub mod solver;
pub mod testfn;

pub use constants::{ConstantSet, EmbeddingEstimate, Extended, LambdaInterval};
pub use discretization::{DiscreteField, DiscreteProblem, EnergyReport, Grid};
pub use error::{Error, Result};
pub use nonlinearity::{BumpNonlinearity, Oscillation, Reaction};
pub use problem::{DomainSpec, ProblemParams, WeightSpec};
