// NaN-rejecting guards are written as `!(x > y)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheb;
mod dd;
pub mod error;
pub mod ladder;
pub mod moments;
pub mod quadrature;
pub mod roots;
pub mod verify;
pub mod weighted_moments;
pub mod zeta;

pub use error::{CacheError, Error, Result};
pub use zeta::ZEvaluator;
