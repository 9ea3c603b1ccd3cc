//! Minimum description length toolkit: universal codes, parametric
//! complexity, switching, model selection, Bayesian-network scores and
//! anytime-valid testing.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bnscore;
pub mod complexity;
pub mod error;
pub mod math;
pub mod models;
pub mod safetest;
pub mod selection;
pub mod switchdist;
pub mod universal;

pub use error::{MdlError, Result};
pub use models::{DataSequence, LuckinessFunction, ModelFamily, Outcome, ParamVector};
pub use universal::{PluginEstimator, PriorSpec, UniversalDistribution};
