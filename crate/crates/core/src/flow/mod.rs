//! The rotationally equivariant reduction of the flow: a scalar radial heat equation
//! for `psi(r, t)`, discretized on a logarithmic grid and stepped implicitly.

mod checkpoint;
mod grid;
mod model;
mod profile;
mod scales;
mod series;
mod stepper;

pub use checkpoint::*;
pub use grid::*;
pub use model::*;
pub use profile::*;
pub use scales::*;
pub use series::*;
pub use stepper::*;
