//! Uniform radial grids, quadrature, the radial initial value problem and
//! the ground-state shooter.

pub(crate) mod grid;
mod ground;
mod ivp;
mod tail;

pub use grid::{radial_quadrature, simpson, surface_area, RadialGrid, RadialProfile, MAX_DIM, MIN_STEPS};
pub use ground::{check_exponent, shoot_ground_state, sobolev_exponent, GroundState, ShootingPolicy};
pub use ivp::{integrate_ivp, IvpOutcome, IvpSolution, BLOWUP_FACTOR};
pub use tail::{bessel_k_scaled, DecayingTail};
