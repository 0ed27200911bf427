//! Simulation and asymptotic analysis of differential inclusions
//!
//! ```text
//! x'(t) ∈ f(x(t)) - A(x(t)),    x(0) = x0 ∈ cl(dom A)
//! ```
//!
//! where `A` is maximally monotone and `f` is Lipschitz. The crate provides
//! proximal and resolvent oracles, a forward/backward time stepper, Lyapunov
//! pair checks, grid-based set calculus (sublevel bands, zero sets of the
//! decrease rate, largest invariant subsets) and omega-limit set estimation
//! with containment verdicts.
//!
//! Modules, bottom up:
//!
//! * [`convex`]: convex sets and proper lsc convex function oracles.
//! * [`operators`]: maximally monotone operators and their resolvents.
//! * [`dynamics`]: system specifications and trajectory integration.
//! * [`lyapunov`]: Lyapunov pairs and decrease checks.
//! * [`setcalc`]: boolean cell grids and the LaSalle-type sets.
//! * [`omega`]: omega-limit estimates, location verdicts and hypothesis checks.
//! * [`sysconfig`]: expression language, config files and built-in systems.

pub mod convex;
pub mod dynamics;
mod error;
pub mod linalg;
pub mod lyapunov;
pub mod omega;
pub mod operators;
pub mod setcalc;
pub mod sysconfig;

pub use error::{Error, Result};
pub use linalg::Point;
