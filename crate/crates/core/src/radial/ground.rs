use serde::Serialize;

use super::grid::{check_dim, radial_quadrature, surface_area, RadialGrid, RadialProfile};
use super::ivp::{integrate_ivp, IvpSolution};
use super::tail::DecayingTail;
use crate::error::{Error, Result};

/// Knobs of the ground-state shooter. `Default` gives the production policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootingPolicy {
    /// Required width of the final `u0` bracket.
    pub tol: f64,
    pub step: f64,
    pub r_max_initial: f64,
    /// `r_max` is doubled until `U(r_max) < tail_ratio * U(0)`.
    pub tail_ratio: f64,
    pub bracket_low: f64,
    pub bracket_high: f64,
    pub u0_max: f64,
    /// Relative disagreement between the two bracketing trajectories at
    /// which the shot is abandoned in favour of the analytic tail.
    pub agreement_tol: f64,
    /// Minimum number of steps across the core width `U(0)^{-(p-1)/2}`;
    /// the step is refined below `step` when the core is narrow.
    pub core_resolution: f64,
}

impl Default for ShootingPolicy {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            step: 1e-3,
            r_max_initial: 20.0,
            tail_ratio: 1e-12,
            bracket_low: 1.0 + 1e-6,
            bracket_high: 10.0,
            u0_max: 1e6,
            agreement_tol: 1e-6,
            core_resolution: 300.0,
        }
    }
}

impl ShootingPolicy {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn with_step(step: f64) -> Self {
        Self { step, ..Self::default() }
    }
}

/// Critical Sobolev exponent `(N+2)/(N-2)`, infinite for `N <= 2`.
pub fn sobolev_exponent(dim: usize) -> f64 {
    if dim <= 2 {
        f64::INFINITY
    } else {
        (dim as f64 + 2.0) / (dim as f64 - 2.0)
    }
}

pub fn check_exponent(dim: usize, p: f64) -> Result<()> {
    check_dim(dim)?;
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Precondition(format!("exponent p must exceed 1, got {p}")));
    }
    let crit = sobolev_exponent(dim);
    if p >= crit {
        return Err(Error::Precondition(format!("p = {p} is not subcritical in dimension {dim} (needs p < {crit})")));
    }
    Ok(())
}

/// Positive radial decaying solution of `-ΔU + U = U^p` in `R^N`.
#[derive(Debug, Clone, Serialize)]
pub struct GroundState {
    #[serde(skip)]
    profile: RadialProfile,
    #[serde(skip)]
    slopes: Vec<f64>,
    pub dim: usize,
    pub p: f64,
    pub u0: f64,
    pub u0_bracket: (f64, f64),
    /// `int_{R^N} U^2`.
    pub gamma: f64,
    /// `int_{R^N} |x|^2 U^2`.
    pub gamma_tilde: f64,
    /// `int_0^inf U^2 r^{N-1} dr`.
    pub radial_mass: f64,
    /// Radius beyond which the profile is the matched free-space tail.
    pub r_cut: f64,
    pub r_max: f64,
}

impl GroundState {
    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn grid(&self) -> &RadialGrid {
        self.profile.grid()
    }

    pub fn values(&self) -> &[f64] {
        self.profile.values()
    }

    /// `U'` on the grid, from the integrator state (and the tail formula
    /// beyond `r_cut`).
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// `(U(r), U'(r))` by cubic Hermite interpolation; zero beyond `r_max`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let grid = self.grid();
        let h = grid.step();
        let n = grid.n_steps();
        if r >= grid.r_max() {
            return (0.0, 0.0);
        }
        let r = r.max(0.0);
        let j = ((r / h) as usize).min(n - 1);
        let t = (r - j as f64 * h) / h;
        let (y0, y1) = (self.values()[j], self.values()[j + 1]);
        let (m0, m1) = (self.slopes[j], self.slopes[j + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1;
        let slope = (6.0 * t2 - 6.0 * t) / h * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) / h * y1
            + (3.0 * t2 - 2.0 * t) * m1;
        (value, slope)
    }

    /// Max over interior nodes of `|u'' + (N-1)/r u' - u + u^p| / max(1, u^p)`,
    /// with `u''` from central differences of the stored values.
    pub fn ode_residual(&self) -> f64 {
        let h = self.grid().step();
        let u = self.values();
        let nm1 = self.dim as f64 - 1.0;
        (1..u.len() - 1)
            .map(|j| {
                let r = j as f64 * h;
                let d2 = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (h * h);
                let up = u[j].powf(self.p);
                (d2 + nm1 / r * self.slopes[j] - u[j] + up).abs() / up.max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// First radius where `U` drops below `ratio * U(0)`.
    pub fn radius_below(&self, ratio: f64) -> f64 {
        let threshold = ratio * self.u0;
        let grid = self.grid();
        self.values().iter().position(|&v| v < threshold).map(|j| grid.node(j)).unwrap_or(grid.r_max())
    }
}

fn crosses(dim: usize, p: f64, u0: f64, grid: &RadialGrid) -> Result<bool> {
    Ok(integrate_ivp(dim, p, u0, grid)?.outcome.crosses_zero())
}

/// Bracket and bisect `U(0)` between the positive and the zero-crossing
/// classes, then assemble the profile on a grid long enough for the tail
/// to fall below `policy.tail_ratio`.
pub fn shoot_ground_state(dim: usize, p: f64, policy: &ShootingPolicy) -> Result<GroundState> {
    check_exponent(dim, p)?;
    if !(policy.tol > 0.0) {
        return Err(Error::Precondition(format!("bisection tolerance must be positive, got {}", policy.tol)));
    }
    let mut grid = RadialGrid::with_step(policy.r_max_initial, policy.step)?;

    let mut lo = policy.bracket_low;
    if crosses(dim, p, lo, &grid)? {
        return Err(Error::NoGroundStateBracket { dim, p, u0_max: lo });
    }
    let mut hi = policy.bracket_high;
    if !crosses(dim, p, hi, &grid)? {
        lo = hi;
        let mut found = false;
        // fine scan first, then geometric growth for strongly peaked profiles
        let mut candidate = hi + 0.5;
        while candidate <= policy.u0_max {
            if crosses(dim, p, candidate, &grid)? {
                hi = candidate;
                found = true;
                break;
            }
            lo = candidate;
            candidate = if candidate < 2.0 * policy.bracket_high { candidate + 0.5 } else { 2.0 * candidate };
        }
        if !found {
            return Err(Error::NoGroundStateBracket { dim, p, u0_max: policy.u0_max });
        }
    }

    while hi - lo > 0.05 * lo {
        let mid = 0.5 * (lo + hi);
        if crosses(dim, p, mid, &grid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let step = policy.step.min(hi.powf(-(p - 1.0) / 2.0) / policy.core_resolution);
    if step < policy.step {
        grid = RadialGrid::with_step(policy.r_max_initial, step)?;
        for _ in 0..8 {
            if crosses(dim, p, lo, &grid)? {
                lo = policy.bracket_low.max(lo - 0.5 * (hi - lo));
            } else if !crosses(dim, p, hi, &grid)? {
                hi *= 1.5;
            } else {
                break;
            }
        }
    }

    // Bisect down to the last representable midpoint: the shooting profile is
    // only trustworthy as far out as the bracket is narrow.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if crosses(dim, p, mid, &grid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi - lo > policy.tol {
        return Err(Error::Numerical(format!("bisection stalled at width {}", hi - lo)));
    }

    let mut r_max = policy.r_max_initial;
    for _ in 0..6 {
        let grid = RadialGrid::with_step(r_max, step)?;
        let low = integrate_ivp(dim, p, lo, &grid)?;
        let high = integrate_ivp(dim, p, hi, &grid)?;
        let cut = trusted_prefix(&low, &high, policy.agreement_tol)?;
        let u_cut = 0.5 * (low.values[cut] + high.values[cut]);
        let tail = DecayingTail::new(dim, grid.node(cut), u_cut);
        if tail.value(grid.r_max()) < policy.tail_ratio * lo {
            return assemble(dim, p, (lo, hi), grid, &low, &high, cut, &tail);
        }
        r_max *= 2.0;
    }
    Err(Error::Numerical(format!("tail did not decay below {} by r = {r_max}", policy.tail_ratio)))
}

/// Last node at which the two bracketing shots agree and both still
/// decrease monotonically.
fn trusted_prefix(low: &IvpSolution, high: &IvpSolution, agreement_tol: f64) -> Result<usize> {
    let len = low.values.len().min(high.values.len());
    let mut cut = 0;
    for j in 1..len {
        let (a, b) = (low.values[j], high.values[j]);
        if a <= 0.0 || b <= 0.0 || low.slopes[j] >= 0.0 || high.slopes[j] >= 0.0 {
            break;
        }
        if (a - b).abs() > agreement_tol * a {
            break;
        }
        cut = j;
    }
    if cut < 16 {
        return Err(Error::Numerical(format!("shooting profile unreliable beyond node {cut}")));
    }
    Ok(cut)
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    dim: usize,
    p: f64,
    bracket: (f64, f64),
    grid: RadialGrid,
    low: &IvpSolution,
    high: &IvpSolution,
    cut: usize,
    tail: &DecayingTail,
) -> Result<GroundState> {
    let mut values = Vec::with_capacity(grid.len());
    let mut slopes = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        if j <= cut {
            values.push(0.5 * (low.values[j] + high.values[j]));
            slopes.push(0.5 * (low.slopes[j] + high.slopes[j]));
        } else {
            let r = grid.node(j);
            values.push(tail.value(r));
            slopes.push(tail.slope(r));
        }
    }
    if values.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::Numerical("ground-state profile is not positive and decreasing".into()));
    }
    let u0 = values[0];
    let profile = RadialProfile::new(grid, values, dim)?;
    let squared = profile.map(|_, u| u * u);
    let radial_mass = radial_quadrature(&squared, 0);
    let area = surface_area(dim);
    Ok(GroundState {
        dim,
        p,
        u0,
        u0_bracket: bracket,
        gamma: area * radial_mass,
        gamma_tilde: area * radial_quadrature(&squared, 2),
        radial_mass,
        r_cut: grid.node(cut),
        r_max: grid.r_max(),
        profile,
        slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cubic_line_soliton() {
        let gs = shoot_ground_state(1, 3.0, &ShootingPolicy::default()).unwrap();
        assert!((gs.u0 - 2f64.sqrt()).abs() < 1e-10, "u0 = {}", gs.u0);
        assert!((gs.gamma - 4.0).abs() < 1e-8, "gamma = {}", gs.gamma);
        assert!((gs.gamma_tilde - PI * PI / 3.0).abs() < 1e-6);
        assert!((gs.radial_mass - 2.0).abs() < 1e-8);
        assert!(gs.u0_bracket.1 - gs.u0_bracket.0 <= 1e-10);
    }

    #[test]
    fn quintic_line_soliton_amplitude() {
        let gs = shoot_ground_state(1, 5.0, &ShootingPolicy::default()).unwrap();
        assert!((gs.u0 - 3f64.powf(0.25)).abs() < 1e-8, "u0 = {}", gs.u0);
    }

    #[test]
    fn supercritical_exponent_is_rejected() {
        assert!(matches!(shoot_ground_state(3, 6.0, &ShootingPolicy::default()), Err(Error::Precondition(_))));
        assert!(matches!(shoot_ground_state(3, 5.0, &ShootingPolicy::default()), Err(Error::Precondition(_))));
        assert!(shoot_ground_state(2, 1.0, &ShootingPolicy::default()).is_err());
    }

    #[test]
    fn hermite_eval_matches_nodes_and_sech() {
        let gs = shoot_ground_state(1, 3.0, &ShootingPolicy::default()).unwrap();
        let h = gs.grid().step();
        for j in [0usize, 7, 1234, 5000] {
            let (v, s) = gs.eval(j as f64 * h);
            assert!((v - gs.values()[j]).abs() < 1e-14);
            assert!((s - gs.slopes()[j]).abs() < 1e-12);
        }
        let r = 1.2345678;
        let (v, s) = gs.eval(r);
        let exact = 2f64.sqrt() / r.cosh();
        assert!((v - exact).abs() < 1e-9);
        assert!((s + exact * r.tanh()).abs() < 1e-9);
    }
}
