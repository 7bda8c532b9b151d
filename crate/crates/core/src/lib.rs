// Validation is written as `!(x > 0.0)` and friends so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod elm;
pub mod error;
pub mod experiment;
pub mod hetero;
pub mod homo;
pub mod metrics;
pub mod model_io;
pub mod numerics;
mod par;
pub mod synthetic;
pub mod variance;

pub use error::{ElmError, Result};
