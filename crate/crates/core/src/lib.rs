//! Radon-measure-valued entropy solutions of `u_t + phi(u)_x = 0` on the line
//! with nonnegative initial data made of an integrable part plus finitely many
//! Dirac masses.
// `!(a > b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod evolution;
pub mod flux;
pub mod hull;
pub mod measure;
pub mod oracle;
pub mod output;
pub mod presets;
pub mod riemann;
pub mod verification;

pub use error::{Error, Result};
