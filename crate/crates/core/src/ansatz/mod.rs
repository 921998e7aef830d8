//! Corrected approximate solutions: the radial heat kernel corrections, closed forms
//! of the linearized operator on them, the dilation-mode projection and the two-bubble
//! tower quantities.

mod appendix;
mod duhamel;
mod projection;
mod scalar_ode;
mod tower;

pub use appendix::*;
pub use duhamel::*;
pub use projection::*;
pub use scalar_ode::*;
pub use tower::*;
