//! Numerical laboratory for bubbling in the four-dimensional Yang-Mills heat flow.
//!
//! The crate is organized bottom-up: quaternion algebra and forms, the instanton and
//! its linearization ([`gauge`]), scalar rate functions ([`rates`]), corrected
//! approximations and tower quantities ([`ansatz`]), and the reduced equivariant flow
//! ([`flow`]).

pub mod ansatz;
pub mod ball;
pub mod error;
pub mod fd;
pub mod flow;
pub mod forms;
pub mod gauge;
pub mod numfmt;
pub mod quadrature;
pub mod quaternion;
pub mod rates;
pub mod report;
pub mod suite;
pub mod trajectory;

pub use error::{Error, Result};
