//! Concentration data: the global potential `Γ = γ Σ σ_i² V_i`, its
//! critical points, the correction profiles `Z_i`, the mass coefficients
//! `Ξ` and `Υ`, and leading-order inversions of the mass expansions.

mod potential;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigen_symmetric, Matrix};
use crate::linearized::{
    compute_alpha_with, linear_residual, overlap, solve_linearized_affine, solve_system_affine, solve_z0,
    LinearizedProblem, Source, SystemProblem,
};
use crate::radial::{simpson, surface_area, GroundState, RadialProfile};
use crate::synchronized::SynchronizedState;

pub use potential::{
    DerivativeMode, GlobalPotential, Polynomial, Potential, PotentialModel, FD_STEP_GRADIENT, FD_STEP_HESSIAN,
    FD_STEP_THIRD,
};

/// Newton stops once both the gradient and the last step are below this.
pub const CRITICAL_TOL: f64 = 1e-10;
pub const CRITICAL_MAX_ITER: usize = 200;
/// A Hessian eigenvalue at or below this (in absolute value) is degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

const THETA_NODES: usize = 64;

pub fn build_global_potential(
    ground: &GroundState,
    sync: &SynchronizedState,
    model: PotentialModel,
) -> Result<GlobalPotential> {
    if model.dim() != ground.dim {
        return Err(Error::InvalidArgument(format!(
            "model lives in R^{} but the ground state in R^{}",
            model.dim(),
            ground.dim
        )));
    }
    GlobalPotential::new(ground.gamma, ground.gamma_tilde, sync.sigma_squared.clone(), model)
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub xi0: Vec<f64>,
    pub gradient_norm: f64,
    pub hessian: Matrix,
    pub hessian_eigenvalues: Vec<f64>,
    pub nondegenerate: bool,
    pub iterations: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton on `∇Γ = 0`. When the Hessian is singular, a backtracking step
/// that decreases `|∇Γ|` is taken instead and Newton resumes.
pub fn find_critical_point(gp: &GlobalPotential, x_start: &[f64]) -> Result<CriticalPoint> {
    let n = gp.dim();
    if x_start.len() != n {
        return Err(Error::InvalidArgument(format!("start point must have {n} coordinates")));
    }
    // difference quotients cannot resolve gradients below their roundoff
    let grad_tol = match gp.derivative_mode() {
        DerivativeMode::Analytic => CRITICAL_TOL,
        DerivativeMode::FiniteDifference => {
            CRITICAL_TOL.max(10.0 * f64::EPSILON * gp.value(x_start).abs().max(1.0) / FD_STEP_GRADIENT)
        }
    };
    let mut x = x_start.to_vec();
    let mut g = gp.gradient(&x);
    for iter in 0..CRITICAL_MAX_ITER {
        let h = gp.hessian(&x);
        let gnorm = norm(&g);
        if gnorm == 0.0 {
            return finish(gp, x, iter);
        }
        let step = match h.solve(&g.iter().map(|v| -v).collect::<Vec<_>>(), 1e-14) {
            Ok(dx) if dx.iter().all(|v| v.is_finite()) => dx,
            _ => descent_step(gp, &x, &g, &h),
        };
        for (xi, d) in x.iter_mut().zip(&step) {
            *xi += d;
        }
        g = gp.gradient(&x);
        if norm(&g) <= grad_tol && norm(&step) <= CRITICAL_TOL * norm(&x).max(1.0) {
            return finish(gp, x, iter + 1);
        }
        if x.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(Error::NoConvergence { iterations: CRITICAL_MAX_ITER, last: x })
}

fn descent_step(gp: &GlobalPotential, x: &[f64], g: &[f64], h: &Matrix) -> Vec<f64> {
    // direction of steepest descent for |∇Γ|²/2, or of |∇Γ| itself if H g = 0
    let hg = h.mul_vec(g);
    let dir: Vec<f64> = if norm(&hg) > 0.0 { hg.iter().map(|v| -v).collect() } else { g.iter().map(|v| -v).collect() };
    let g0 = norm(g);
    let mut t = 1.0;
    for _ in 0..60 {
        let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
        if norm(&gp.gradient(&trial)) < g0 {
            return dir.iter().map(|d| t * d).collect();
        }
        t *= 0.5;
    }
    vec![0.0; x.len()]
}

fn finish(gp: &GlobalPotential, x: Vec<f64>, iterations: usize) -> Result<CriticalPoint> {
    let hessian = gp.hessian(&x);
    let sym = Matrix::from_fn(hessian.size(), |i, j| 0.5 * (hessian[(i, j)] + hessian[(j, i)]));
    let eig = eigen_symmetric(&sym)?;
    let nondegenerate = eig.values.iter().all(|v| v.abs() > DEGENERACY_TOL);
    Ok(CriticalPoint {
        gradient_norm: norm(&gp.gradient(&x)),
        xi0: x,
        hessian: sym,
        hessian_eigenvalues: eig.values,
        nondegenerate,
        iterations,
    })
}

fn require_cubic(ground: &GroundState, dims: &[usize]) -> Result<()> {
    if ground.p != 3.0 || !dims.contains(&ground.dim) {
        return Err(Error::Precondition(format!(
            "requires the cubic ground state with N in {dims:?}, got N={}, p={}",
            ground.dim, ground.p
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CorrectionProfiles {
    /// `Z_i` of the coupled system.
    pub components: Vec<RadialProfile>,
    /// `z = Σ σ_i Z_i`.
    pub z: RadialProfile,
    /// Single-equation solve with source `(Σ σ_l² V_l(ξ0)) U`.
    pub z_direct: RadialProfile,
    /// `sup |z - z_direct|`.
    pub reduction_gap: f64,
    /// Residual of `z` in the scalar equation, see [`linear_residual`].
    pub residual: f64,
    pub r0: f64,
}

/// Radial solutions of
/// `-ΔZ_i + Z_i - Σ_j β_ij (U_j² Z_i + 2 U_i U_j Z_j) = V_i(ξ0) U_i`,
/// `U_i = σ_i U`, whose `U²`-coupling is the matrix `M = I + 2C`.
pub fn solve_correction_z(
    ground: &GroundState,
    sync: &SynchronizedState,
    v_at_xi0: &[f64],
) -> Result<CorrectionProfiles> {
    require_cubic(ground, &[1, 2, 3])?;
    let k = sync.sigma.len();
    if v_at_xi0.len() != k {
        return Err(Error::InvalidArgument(format!("{} potential values for k={k}", v_at_xi0.len())));
    }
    let weights: Vec<f64> = v_at_xi0.iter().zip(&sync.sigma).map(|(v, s)| v * s).collect();
    let system = solve_system_affine(&SystemProblem {
        ground,
        coupling: sync.m.clone(),
        weights,
        source: Source::ground(1.0),
        sector: 0,
        r0: None,
    })?;
    let mut zv = vec![0.0; ground.values().len()];
    for (comp, s) in system.components.iter().zip(&sync.sigma) {
        for (acc, v) in zv.iter_mut().zip(comp.values()) {
            *acc += s * v;
        }
    }
    let z = RadialProfile::new(*ground.grid(), zv, ground.dim)?;

    let c: f64 = sync.sigma_squared.iter().zip(v_at_xi0).map(|(s2, v)| s2 * v).sum();
    let source = Source::ground(c);
    let direct = solve_linearized_affine(&LinearizedProblem::new(ground, 3.0, source.clone()).with_r0(system.r0))?;
    let reduction_gap = z.sup_distance(&direct.profile)?;
    let residual = linear_residual(ground, 3.0, 0, &source, &z, system.r0);
    Ok(CorrectionProfiles {
        components: system.components,
        z,
        z_direct: direct.profile,
        reduction_gap,
        residual,
        r0: system.r0,
    })
}

/// `Ξ = Σ σ_i ∫ U Z_i dx = ∫ U z dx` over `R^N`.
pub fn compute_xi(ground: &GroundState, sync: &SynchronizedState, v_at_xi0: &[f64]) -> Result<f64> {
    let corr = solve_correction_z(ground, sync, v_at_xi0)?;
    Ok(surface_area(ground.dim) * overlap(ground, &corr.z))
}

/// Both sides of the `Υ` identity, computed along separate routes.
#[derive(Debug, Clone, Serialize)]
pub struct UpsilonReport {
    /// `Σ σ_i ∫ U Q_i dx`, with `Q` from the coupled system split into its
    /// radial and `cos 2θ` parts and integrated over the plane.
    pub upsilon: f64,
    /// `½ Σ σ_l² (a_1 + a_2) ∫ U z0 dx`, the radial route.
    pub upsilon_radial: f64,
    /// `∫ U z0 dx`.
    pub alpha_full: f64,
    /// `ΔΓ(0)` from the model's derivatives.
    pub delta_gamma: f64,
    pub gamma: f64,
    /// `α ΔΓ(0) / (4γ)`.
    pub predicted: f64,
    /// `α ΔΓ(0) / 2`, the identity as printed without the `1/(2γ)` factor.
    pub literal_half_alpha_delta_gamma: f64,
    /// `|upsilon - predicted|` over `(|α|/2) Σ σ_l² (|a_1| + |a_2|)`.
    pub identity_gap: f64,
    /// `2γ Σ σ_l² (a_1 + a_2)`.
    pub delta_gamma_formula: f64,
    /// `|delta_gamma - delta_gamma_formula| / max(1, |delta_gamma_formula|)`.
    pub delta_gamma_gap: f64,
    /// `∫ U z_1* dx` with `-Δz + z - 3U² z = x_1² U`.
    pub half_moment: f64,
    /// `|half_moment - α/2| / |α/2|`.
    pub half_moment_gap: f64,
}

/// `∫_{R²} U(r) (f0(r) + f2(r) cos 2θ) dx` by Simpson in `r` and the
/// trapezoidal rule in `θ`.
fn planar_overlap(ground: &GroundState, f0: &RadialProfile, f2: &RadialProfile) -> f64 {
    let h = ground.grid().step();
    let u = ground.values();
    let dtheta = std::f64::consts::TAU / THETA_NODES as f64;
    (0..THETA_NODES)
        .map(|m| {
            let c2 = (2.0 * m as f64 * dtheta).cos();
            let integrand: Vec<f64> = ground
                .grid()
                .nodes()
                .enumerate()
                .map(|(j, r)| u[j] * (f0.values()[j] + f2.values()[j] * c2) * r)
                .collect();
            simpson(&integrand, h) * dtheta
        })
        .sum()
}

/// `Υ` for `V_i = a_1^{(i)} x_1² + a_2^{(i)} x_2² + O(|x|³)` in the plane.
pub fn compute_upsilon(
    ground: &GroundState,
    sync: &SynchronizedState,
    model: &PotentialModel,
) -> Result<UpsilonReport> {
    require_cubic(ground, &[2])?;
    let coeffs = model.quadratic_coeffs().ok_or(Error::MissingQuadraticCoefficients)?;
    let k = sync.sigma.len();
    if coeffs.len() != k {
        return Err(Error::InvalidArgument(format!("{} coefficient pairs for k={k}", coeffs.len())));
    }

    // x_1² = r²/2 (1 + cos 2θ), x_2² = r²/2 (1 - cos 2θ)
    let solve_sector = |sector: usize, weights: Vec<f64>| {
        solve_system_affine(&SystemProblem {
            ground,
            coupling: sync.m.clone(),
            weights,
            source: Source::second_moment(1.0),
            sector,
            r0: None,
        })
    };
    let radial = solve_sector(0, coeffs.iter().zip(&sync.sigma).map(|(a, s)| 0.5 * s * (a[0] + a[1])).collect())?;
    let angular = solve_sector(2, coeffs.iter().zip(&sync.sigma).map(|(a, s)| 0.5 * s * (a[0] - a[1])).collect())?;
    let upsilon: f64 =
        (0..k).map(|i| sync.sigma[i] * planar_overlap(ground, &radial.components[i], &angular.components[i])).sum();

    let alpha_full = compute_alpha_with(ground)?.alpha_full;
    let gp = GlobalPotential::new(ground.gamma, ground.gamma_tilde, sync.sigma_squared.clone(), model.clone())?;
    let delta_gamma = gp.laplacian(&[0.0, 0.0]);
    let gamma = ground.gamma;
    let predicted = alpha_full * delta_gamma / (4.0 * gamma);

    let weighted_abs: f64 = coeffs.iter().zip(&sync.sigma_squared).map(|(a, s2)| s2 * (a[0].abs() + a[1].abs())).sum();
    let scale = 0.5 * alpha_full.abs() * weighted_abs;
    let diff = (upsilon - predicted).abs();
    let identity_gap = if scale > 0.0 { diff / scale } else { diff };

    let weighted: f64 = coeffs.iter().zip(&sync.sigma_squared).map(|(a, s2)| s2 * (a[0] + a[1])).sum();
    let delta_gamma_formula = 2.0 * gamma * weighted;
    let delta_gamma_gap = (delta_gamma - delta_gamma_formula).abs() / delta_gamma_formula.abs().max(1.0);

    let z0 = solve_z0(ground)?;
    let w = solve_linearized_affine(
        &LinearizedProblem::new(ground, 3.0, Source::second_moment(1.0)).in_sector(2).with_r0(z0.r0),
    )?;
    let half = |p: &RadialProfile| p.map(|_, v| 0.5 * v);
    let half_moment = planar_overlap(ground, &half(&z0.profile), &half(&w.profile));
    let half_moment_gap = (half_moment - 0.5 * alpha_full).abs() / (0.5 * alpha_full).abs();

    Ok(UpsilonReport {
        upsilon,
        upsilon_radial: 0.5 * weighted * alpha_full,
        alpha_full,
        delta_gamma,
        gamma,
        predicted,
        literal_half_alpha_delta_gamma: 0.5 * alpha_full * delta_gamma,
        identity_gap,
        delta_gamma_formula,
        delta_gamma_gap,
        half_moment,
        half_moment_gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn of(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(Regime::Subcritical),
            2 => Ok(Regime::Critical),
            3 => Ok(Regime::Supercritical),
            _ => Err(Error::Precondition(format!("mass asymptotics cover N in {{1, 2, 3}}, got {dim}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MassAsymptotics {
    /// `γ Σ σ_i²`.
    pub mu0: f64,
    pub regime: Regime,
    pub alpha_full: Option<f64>,
    pub delta_gamma: Option<f64>,
}

pub fn mass_asymptotics(
    ground: &GroundState,
    sync: &SynchronizedState,
    alpha_full: Option<f64>,
    delta_gamma: Option<f64>,
) -> Result<MassAsymptotics> {
    Ok(MassAsymptotics {
        mu0: ground.gamma * sync.sigma_squared.iter().sum::<f64>(),
        regime: Regime::of(ground.dim)?,
        alpha_full,
        delta_gamma,
    })
}

/// `|S^{N-1}| Σ σ_i² ∫_0^∞ U² r^{N-1} dr`, the radial route to `μ0`.
pub fn mu0_radial(ground: &GroundState, sync: &SynchronizedState) -> f64 {
    surface_area(ground.dim) * sync.sigma_squared.iter().sum::<f64>() * ground.radial_mass
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub epsilon: f64,
    pub lambda: f64,
}

/// Inverts `μ = ε^{N-2} μ0` and `λ = ε^{-2}`: `ε = (μ/μ0)^{1/(N-2)}`.
pub fn predict_noncritical(dim: usize, mu: f64, mu0: f64) -> Result<Prediction> {
    if !(mu0 > 0.0) || !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Precondition("masses must be positive and finite".into()));
    }
    let ratio = mu / mu0;
    let epsilon = match dim {
        1 if ratio > 1.0 => 1.0 / ratio,
        3 if ratio < 1.0 => ratio,
        1 => return Err(Error::Precondition("N=1 requires mu > mu0".into())),
        3 => return Err(Error::Precondition("N=3 requires mu < mu0".into())),
        _ => return Err(Error::Precondition(format!("the non-critical regime is N=1 or N=3, got {dim}"))),
    };
    Ok(Prediction { epsilon, lambda: 1.0 / (epsilon * epsilon) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPrediction {
    pub admissible: bool,
    pub epsilon: Option<f64>,
    pub lambda: Option<f64>,
    pub reason: Option<String>,
}

/// `ε = ((μ0 - μ)/(α ΔΓ))^{1/4}`, `λ = ε^{-2}`, on the side of `μ0` where
/// `μ0 - μ` has the sign of `α ΔΓ`.
pub fn predict_critical(mu: f64, mu0: f64, alpha_full: f64, delta_gamma: f64) -> Result<CriticalPrediction> {
    let product = alpha_full * delta_gamma;
    if product == 0.0 || !product.is_finite() {
        return Err(Error::Precondition("alpha * delta_gamma must be finite and nonzero".into()));
    }
    if !mu.is_finite() || !mu0.is_finite() {
        return Err(Error::Precondition("masses must be finite".into()));
    }
    let x = (mu0 - mu) / product;
    if !(x > 0.0) {
        let side = if product > 0.0 { "below" } else { "above" };
        return Ok(CriticalPrediction {
            admissible: false,
            epsilon: None,
            lambda: None,
            reason: Some(format!("alpha * delta_gamma = {product:e} admits masses only {side} mu0 = {mu0}")),
        });
    }
    let root = x.sqrt();
    Ok(CriticalPrediction { admissible: true, epsilon: Some(root.sqrt()), lambda: Some(1.0 / root), reason: None })
}

/// `τ_j = -(γ̃/(2Nγ)) ∂_j ΔΓ(ξ0) / ∂²_j Γ(ξ0)`.
pub fn predict_tau_critical(gp: &GlobalPotential, xi0: &[f64]) -> Result<Vec<f64>> {
    let n = gp.dim();
    if xi0.len() != n {
        return Err(Error::InvalidArgument(format!("critical point must have {n} coordinates")));
    }
    let h = gp.hessian(xi0);
    let dlap = gp.laplacian_gradient(xi0);
    let factor = gp.gamma_tilde / (2.0 * n as f64 * gp.gamma);
    (0..n)
        .map(|j| {
            let d = h[(j, j)];
            if d.abs() <= DEGENERACY_TOL {
                Err(Error::Precondition(format!("second derivative of Gamma in x_{} vanishes", j + 1)))
            } else {
                Ok(-factor * dlap[j] / d)
            }
        })
        .collect()
}
