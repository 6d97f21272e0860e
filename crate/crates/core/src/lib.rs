//! Numerical calculus of driftless subordinators.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod asymptotics;
pub mod bernstein;
pub mod cli;
pub mod conditions;
pub mod envelope;
pub mod error;
pub mod examples_catalog;
pub mod inequalities;
pub mod levy_model;
pub mod quad;
pub mod reference_density;
pub mod roots;
pub mod special;

pub use error::{Error, Result};
pub use levy_model::{make_catalog_model, ModelSpec, ConditionFlags, LevyModel, ModelMeta};
