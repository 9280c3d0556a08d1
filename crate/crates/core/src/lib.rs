//! Numerics for normalized solutions of coupled cubic Schrödinger systems:
//! radial ground states, linearized correction profiles, the weighted
//! spectrum `-Δψ + ψ = λ U² ψ`, synchronized states of the limit system and
//! the mass/concentration predictors built on them.

pub mod concentration;
pub mod error;
pub mod linalg;
pub mod linearized;
pub mod radial;
pub mod spectrum;
pub mod synchronized;

pub use error::{Error, Result};
