use serde::Serialize;

use super::grid::{check_dim, RadialGrid};
use crate::error::{Error, Result};

/// `|u| > BLOWUP_FACTOR * u0` is declared divergence.
pub const BLOWUP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IvpOutcome {
    CrossesZero { r: f64 },
    StaysPositive,
    Diverges { r: f64 },
}

impl IvpOutcome {
    pub fn crosses_zero(&self) -> bool {
        matches!(self, IvpOutcome::CrossesZero { .. })
    }
}

/// Trajectory of `u'' + (N-1)/r u' = u - |u|^{p-1} u`, `u(0) = u0`, `u'(0) = 0`,
/// sampled on the grid nodes up to (and including) the node where the first
/// event fired.
#[derive(Debug, Clone)]
pub struct IvpSolution {
    pub grid: RadialGrid,
    pub dim: usize,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub outcome: IvpOutcome,
}

impl IvpSolution {
    /// Index of the first node after which `u` stops decreasing, if any.
    pub fn first_turning_index(&self) -> Option<usize> {
        self.slopes.iter().skip(1).position(|&s| s >= 0.0).map(|j| j + 1)
    }
}

#[inline]
fn nonlinear_rhs(dim_minus_one: f64, p: f64, r: f64, u: f64, du: f64) -> (f64, f64) {
    let reaction = u - u.abs().powf(p - 1.0) * u;
    (du, reaction - dim_minus_one / r * du)
}

pub fn integrate_ivp(dim: usize, p: f64, u0: f64, grid: &RadialGrid) -> Result<IvpSolution> {
    check_dim(dim)?;
    if !(u0.is_finite() && u0 > 0.0) {
        return Err(Error::InvalidArgument(format!("u0 must be positive, got {u0}")));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidArgument(format!("p must exceed 1, got {p}")));
    }
    let h = grid.step();
    let n = grid.n_steps();
    let nm1 = dim as f64 - 1.0;
    let blowup = BLOWUP_FACTOR * u0;

    let mut values = Vec::with_capacity(n + 1);
    let mut slopes = Vec::with_capacity(n + 1);
    values.push(u0);
    slopes.push(0.0);

    // Series start across the regular singular point: u = u0 + a r^2 + b r^4
    // with u''(0) = 2a = (u0 - u0^p)/N and b = (1 - p u0^{p-1}) a / (4(N+2)).
    let a = (u0 - u0.powf(p)) / (2.0 * dim as f64);
    let b = (1.0 - p * u0.powf(p - 1.0)) * a / (4.0 * (dim as f64 + 2.0));
    let h2 = h * h;
    let mut u = u0 + a * h2 + b * h2 * h2;
    let mut du = 2.0 * a * h + 4.0 * b * h2 * h;
    values.push(u);
    slopes.push(du);

    let mut outcome = IvpOutcome::StaysPositive;
    if u <= 0.0 {
        outcome = IvpOutcome::CrossesZero { r: h * u0 / (u0 - u) };
    } else {
        for j in 1..n {
            let r = j as f64 * h;
            let (k1u, k1v) = nonlinear_rhs(nm1, p, r, u, du);
            let (k2u, k2v) = nonlinear_rhs(nm1, p, r + 0.5 * h, u + 0.5 * h * k1u, du + 0.5 * h * k1v);
            let (k3u, k3v) = nonlinear_rhs(nm1, p, r + 0.5 * h, u + 0.5 * h * k2u, du + 0.5 * h * k2v);
            let (k4u, k4v) = nonlinear_rhs(nm1, p, r + h, u + h * k3u, du + h * k3v);
            let next_u = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            let next_du = du + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);

            if !(next_u.is_finite() && next_du.is_finite()) {
                outcome = IvpOutcome::Diverges { r: r + h };
                break;
            }
            values.push(next_u);
            slopes.push(next_du);
            if next_u <= 0.0 {
                // linear localization inside the step
                outcome = IvpOutcome::CrossesZero { r: r + h * u / (u - next_u) };
                break;
            }
            if next_u.abs() > blowup {
                outcome = IvpOutcome::Diverges { r: r + h };
                break;
            }
            u = next_u;
            du = next_du;
        }
    }
    Ok(IvpSolution { grid: *grid, dim, values, slopes, outcome })
}
