//! Linearized radial problems around a ground state, solved by affine
//! shooting: the endpoint value `Z(r0)` depends affinely on the unknown
//! initial value `Z(0)`, so one homogeneous integration per component and
//! one particular integration fix it exactly.

pub(crate) mod operator;
mod source;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::radial::grid::central_derivatives;
use crate::radial::{
    check_exponent, shoot_ground_state, simpson, surface_area, GroundState, RadialProfile, ShootingPolicy,
};

use operator::{RadialOperator, SampledSource, Trajectory};
pub use source::{Source, SourceTerm};

/// Relative size below which the homogeneous endpoint is treated as a
/// resonance of the truncated problem.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Default truncation radius: where `U` first falls below this fraction of `U(0)`.
pub const R0_RATIO: f64 = 1e-10;

/// Linear system `-ΔZ + Z - U^{p-1} K Z = g(r) w` in angular sector `l`,
/// with `Z(r0) = 0`.
#[derive(Debug, Clone)]
pub struct SystemProblem<'a> {
    pub ground: &'a GroundState,
    pub coupling: Matrix,
    pub weights: Vec<f64>,
    pub source: Source,
    pub sector: usize,
    pub r0: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SystemSolution {
    /// `Z_i` on the ground-state grid, zero beyond `r0`.
    pub components: Vec<RadialProfile>,
    pub slopes: Vec<Vec<f64>>,
    /// Leading coefficients `Z_i ~ start_i r^l` at the origin.
    pub start: Vec<f64>,
    pub r0: f64,
}

/// Scalar problem `-ΔS + S - q U^{p-1} S = g`, `S'(0) = 0`, `S(r0) = 0`.
#[derive(Debug, Clone)]
pub struct LinearizedProblem<'a> {
    pub ground: &'a GroundState,
    /// Multiplier `q` of `U^{p-1}`.
    pub potential_coefficient: f64,
    pub source: Source,
    pub r0: Option<f64>,
    pub sector: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearizedSolution {
    pub profile: RadialProfile,
    #[serde(skip)]
    pub slopes: Vec<f64>,
    /// `S(0)` (leading coefficient for sectors `l >= 1`).
    pub s0: f64,
    pub r0: f64,
}

impl LinearizedSolution {
    /// `int_0^inf U S r^{N-1} dr`.
    pub fn moment_against(&self, ground: &GroundState) -> f64 {
        overlap(ground, &self.profile)
    }
}

/// `int_0^inf U f r^{N-1} dr` on the ground-state grid.
pub fn overlap(ground: &GroundState, f: &RadialProfile) -> f64 {
    let n = ground.dim as i32 - 1;
    let integrand: Vec<f64> = ground
        .grid()
        .nodes()
        .zip(ground.values().iter().zip(f.values()))
        .map(|(r, (u, v))| u * v * r.powi(n))
        .collect();
    simpson(&integrand, ground.grid().step())
}

impl<'a> LinearizedProblem<'a> {
    pub fn new(ground: &'a GroundState, potential_coefficient: f64, source: Source) -> Self {
        Self { ground, potential_coefficient, source, r0: None, sector: 0 }
    }

    pub fn with_r0(mut self, r0: f64) -> Self {
        self.r0 = Some(r0);
        self
    }

    pub fn in_sector(mut self, sector: usize) -> Self {
        self.sector = sector;
        self
    }

    fn as_system(&self) -> SystemProblem<'a> {
        SystemProblem {
            ground: self.ground,
            coupling: Matrix::diagonal(&[self.potential_coefficient]),
            weights: vec![1.0],
            source: self.source.clone(),
            sector: self.sector,
            r0: self.r0,
        }
    }

    /// `S(r0)` for the trial start `S(0) = s`.
    pub fn endpoint_for(&self, s: f64) -> Result<f64> {
        let system = self.as_system();
        let r0 = resolve_r0(self.ground, self.r0)?;
        let end = end_index(self.ground, r0)?;
        let op = RadialOperator::new(self.ground, system.sector, end);
        let sampled = SampledSource::new(&op, &system.source);
        let traj = op.integrate(&system.coupling, &[s], Some((&sampled, &system.weights)));
        Ok(traj.at(end)[0])
    }
}

fn resolve_r0(ground: &GroundState, r0: Option<f64>) -> Result<f64> {
    let r0 = r0.unwrap_or_else(|| ground.radius_below(R0_RATIO));
    if !(r0 > 0.0) || r0 > ground.r_max {
        return Err(Error::InvalidArgument(format!("truncation radius {r0} must lie in (0, {}]", ground.r_max)));
    }
    Ok(r0)
}

fn end_index(ground: &GroundState, r0: f64) -> Result<usize> {
    let end = ground.grid().index_of(r0);
    if end < 8 {
        return Err(Error::InvalidArgument(format!("truncation radius {r0} is too close to the origin")));
    }
    Ok(end)
}

/// Solves the scalar problem; see [`solve_system_affine`].
pub fn solve_linearized_affine(problem: &LinearizedProblem<'_>) -> Result<LinearizedSolution> {
    let mut sol = solve_system_affine(&problem.as_system())?;
    Ok(LinearizedSolution {
        profile: sol.components.remove(0),
        slopes: sol.slopes.remove(0),
        s0: sol.start[0],
        r0: sol.r0,
    })
}

/// Affine shooting for a k-component system. A resonant `r0` is retried at
/// `0.9 r0` and `1.1 r0` before the error is reported.
pub fn solve_system_affine(problem: &SystemProblem<'_>) -> Result<SystemSolution> {
    let k = problem.weights.len();
    if k == 0 || problem.coupling.size() != k {
        return Err(Error::InvalidArgument("coupling and weights must have matching size k >= 1".into()));
    }
    let r0 = resolve_r0(problem.ground, problem.r0)?;
    let mut last = Error::ResonantRadius { r0 };
    for trial in [r0, 0.9 * r0, 1.1 * r0] {
        if trial > problem.ground.r_max {
            continue;
        }
        match solve_at(problem, trial) {
            Err(e @ Error::ResonantRadius { .. }) => last = e,
            other => return other,
        }
    }
    Err(last)
}

/// Accepted size of the cancellation error in a combined trajectory,
/// relative to the solution's scale, before the shooting is restarted.
const CANCELLATION_LIMIT: f64 = 1e-12;

fn solve_at(problem: &SystemProblem<'_>, r0: f64) -> Result<SystemSolution> {
    let ground = problem.ground;
    let coupling = &problem.coupling;
    let k = problem.weights.len();
    let end = end_index(ground, r0)?;
    let op = RadialOperator::new(ground, problem.sector, end);
    let zero_source = problem.source.is_zero() || problem.weights.iter().all(|&w| w == 0.0);
    let sampled = (!zero_source).then(|| SampledSource::new(&op, &problem.source));
    let forced = sampled.as_ref().map(|s| (s, problem.weights.as_slice()));
    let unit = |m: usize| {
        let mut e = vec![0.0; k];
        e[m] = 1.0;
        e
    };

    // The decaying solution is a difference of modes growing like e^r, so
    // past some radius it drowns in roundoff. There the problem is posed
    // again from the last trusted node, with its slopes as the unknowns.
    let mut values = vec![0.0; (end + 1) * k];
    let mut slopes = vec![0.0; (end + 1) * k];
    let mut start = Vec::new();
    let mut scale = 0.0_f64;
    let mut first = 0;
    let min_advance = ((1.0 / ground.grid().step()).ceil() as usize).max(8);
    loop {
        let (homogeneous, particular) = if first == 0 {
            let homogeneous: Vec<Trajectory> = (0..k).map(|m| op.integrate(coupling, &unit(m), None)).collect();
            let particular = forced.map(|f| op.integrate(coupling, &vec![0.0; k], Some(f)));
            (homogeneous, particular)
        } else {
            let zeros = vec![0.0; k];
            let homogeneous: Vec<Trajectory> =
                (0..k).map(|m| op.integrate_from(coupling, first, &zeros, &unit(m), None)).collect();
            let value = values[first * k..(first + 1) * k].to_vec();
            (homogeneous, Some(op.integrate_from(coupling, first, &value, &zeros, forced)))
        };

        // linear part of unknowns -> Z(r0), columns scaled by trajectory size
        let mut linear = Matrix::zeros(k);
        let mut col_scales = Vec::with_capacity(k);
        for (m, traj) in homogeneous.iter().enumerate() {
            let s = traj.max_abs();
            if !s.is_finite() || s == 0.0 {
                return Err(Error::Numerical(format!("homogeneous solution {m} is not finite")));
            }
            for i in 0..k {
                linear[(i, m)] = traj.at(end)[i] / s;
            }
            col_scales.push(s);
        }
        let rhs: Vec<f64> = match &particular {
            Some(t) => t.at(end).iter().map(|v| -v).collect(),
            None => vec![0.0; k],
        };
        let scaled = linear.solve(&rhs, RESONANCE_TOL).map_err(|_| Error::ResonantRadius { r0 })?;
        let coeffs: Vec<f64> = scaled.iter().zip(&col_scales).map(|(y, s)| y / s).collect();
        if first == 0 {
            start = coeffs.clone();
        }

        let mut restart = None;
        for j in first..=end {
            let mut worst_err = 0.0_f64;
            for i in 0..k {
                let (mut v, mut d, mut size) = match &particular {
                    Some(t) => (t.at(j)[i], t.slope_at(j)[i], t.at(j)[i].abs()),
                    None => (0.0, 0.0, 0.0),
                };
                for (c, traj) in coeffs.iter().zip(&homogeneous) {
                    v += c * traj.at(j)[i];
                    d += c * traj.slope_at(j)[i];
                    size += (c * traj.at(j)[i]).abs();
                }
                values[j * k + i] = v;
                slopes[j * k + i] = d;
                worst_err = worst_err.max(f64::EPSILON * size);
                if first == 0 {
                    scale = scale.max(v.abs());
                }
            }
            if j >= first + min_advance && j < end && worst_err > CANCELLATION_LIMIT * scale {
                restart = Some(j - 1);
                break;
            }
        }
        match restart {
            Some(j) => first = j,
            None => break,
        }
    }

    let grid = *ground.grid();
    let len = grid.n_steps() + 1;
    let mut components = Vec::with_capacity(k);
    let mut component_slopes = Vec::with_capacity(k);
    for i in 0..k {
        let mut v = vec![0.0; len];
        let mut d = vec![0.0; len];
        for j in 0..=end {
            v[j] = values[j * k + i];
            d[j] = slopes[j * k + i];
        }
        v[end] = 0.0;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("linearized solution is not finite".into()));
        }
        components.push(RadialProfile::new(grid, v, ground.dim)?);
        component_slopes.push(d);
    }
    Ok(SystemSolution { components, slopes: component_slopes, start, r0: grid.node(end) })
}

/// Max over interior nodes up to `r0` of
/// `|-S'' - (N-1)/r S' + l(l+N-2)/r^2 S + S - q U^{p-1} S - g|`,
/// divided by `max(1, max|S|, max|g|)`. Derivatives by fourth-order central
/// differences;
/// for `l >= 1` nodes with `r < 0.1` are skipped (see
/// [`crate::spectrum::eigen_residual`]).
pub fn linear_residual(
    ground: &GroundState,
    q: f64,
    sector: usize,
    source: &Source,
    profile: &RadialProfile,
    r0: f64,
) -> f64 {
    let h = ground.grid().step();
    let s = profile.values();
    let u = ground.values();
    let end = ground.grid().index_of(r0).min(s.len() - 1);
    let dim = ground.dim as f64;
    let l = sector as f64;
    let centrifugal = l * (l + dim - 2.0);
    let mut worst = 0.0_f64;
    let mut scale = 1.0_f64.max(profile.max_abs());
    for j in crate::spectrum::first_checked_node(sector, h)..end.saturating_sub(1) {
        let r = j as f64 * h;
        let g = source.eval(ground, r);
        scale = scale.max(g.abs());
        let (d1, d2) = central_derivatives(s, j, h, sector % 2 == 0);
        let pot = u[j].max(0.0).powf(ground.p - 1.0);
        let res = -d2 - (dim - 1.0) / r * d1 + centrifugal / (r * r) * s[j] + s[j] - q * pot * s[j] - g;
        worst = worst.max(res.abs());
    }
    worst / scale
}

/// One point of the curve `p -> int_0^inf U S r^{N-1} dr`, with `S` the
/// response to the source `r^2 U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaPoint {
    #[serde(rename = "N")]
    pub dim: usize,
    pub p: f64,
    pub alpha_radial: f64,
    pub alpha_full: f64,
}

/// Ground state with the default shooting policy, then [`compute_alpha_with`].
pub fn compute_alpha(dim: usize, p: f64) -> Result<AlphaPoint> {
    let ground = shoot_ground_state(dim, p, &ShootingPolicy::default())?;
    compute_alpha_with(&ground)
}

pub fn compute_alpha_with(ground: &GroundState) -> Result<AlphaPoint> {
    let sol = solve_linearized_affine(&LinearizedProblem::new(ground, ground.p, Source::second_moment(1.0)))?;
    let alpha_radial = sol.moment_against(ground);
    Ok(AlphaPoint { dim: ground.dim, p: ground.p, alpha_radial, alpha_full: surface_area(ground.dim) * alpha_radial })
}

/// Sweep entry; exactly one of `point` and `failure` is set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p: f64,
    pub point: Option<AlphaPoint>,
    pub failure: Option<String>,
}

/// `n_points` exponents spaced uniformly over `[p_min, p_max]`, endpoints
/// included (a single point sits at `p_min`).
pub fn sweep_grid(p_min: f64, p_max: f64, n_points: usize) -> Vec<f64> {
    match n_points {
        0 => Vec::new(),
        1 => vec![p_min],
        n => {
            let step = (p_max - p_min) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { p_max } else { p_min + i as f64 * step }).collect()
        }
    }
}

/// Points are computed in parallel and returned ordered by `p`; a failing
/// point is recorded with its reason and does not stop the sweep.
pub fn sweep_alpha(dim: usize, p_min: f64, p_max: f64, n_points: usize) -> Result<Vec<SweepPoint>> {
    if !(p_min > 1.0) || !(p_max >= p_min) || (n_points > 1 && p_max == p_min) {
        return Err(Error::Precondition(format!("sweep range must satisfy 1 < p_min < p_max, got [{p_min}, {p_max}]")));
    }
    if n_points > 0 {
        check_exponent(dim, p_max)?;
    }
    let points = sweep_grid(p_min, p_max, n_points)
        .into_par_iter()
        .map(|p| match compute_alpha(dim, p) {
            Ok(point) => SweepPoint { p, point: Some(point), failure: None },
            Err(e) => SweepPoint { p, point: None, failure: Some(e.to_string()) },
        })
        .collect();
    Ok(points)
}

pub fn sweep_file_name(dim: usize) -> String {
    format!("integ_UW_N{dim}.dat")
}

/// Two tab-separated columns `p`, `alpha_radial`. `header` lines are
/// emitted as `#` comments; failed points become comments too.
pub fn format_sweep_tsv(header: &[String], points: &[SweepPoint]) -> String {
    let mut out = String::new();
    for line in header {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for sp in points {
        match (&sp.point, &sp.failure) {
            (Some(pt), _) => out.push_str(&format!("{:.6}\t{:.12e}\n", sp.p, pt.alpha_radial)),
            (None, reason) => {
                out.push_str(&format!("# p={:.6} failed: {}\n", sp.p, reason.as_deref().unwrap_or("unknown")))
            }
        }
    }
    out
}

fn require_cubic_plane(ground: &GroundState) -> Result<()> {
    if ground.dim != 2 || ground.p != 3.0 {
        return Err(Error::Precondition(format!(
            "requires the N=2, p=3 ground state, got N={}, p={}",
            ground.dim, ground.p
        )));
    }
    Ok(())
}

/// `z = -(c/2)(U + r U')`, which solves `-Δz + z - 3U^2 z = c U` in the plane.
/// `U'` comes from the integrator state, not from differencing.
pub fn closed_form_z(ground: &GroundState, c: f64) -> Result<RadialProfile> {
    require_cubic_plane(ground)?;
    let values = ground
        .grid()
        .nodes()
        .zip(ground.values().iter().zip(ground.slopes()))
        .map(|(r, (u, du))| -0.5 * c * (u + r * du))
        .collect();
    RadialProfile::new(*ground.grid(), values, ground.dim)
}

/// Radial solution of `-Δz0 + z0 - 3U^2 z0 = |x|^2 U` in the plane.
pub fn solve_z0(ground: &GroundState) -> Result<LinearizedSolution> {
    require_cubic_plane(ground)?;
    solve_linearized_affine(&LinearizedProblem::new(ground, 3.0, Source::second_moment(1.0)))
}
