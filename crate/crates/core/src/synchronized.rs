//! Synchronized states `U_i = σ_i U` of the cubic limit system, the
//! matrices `C = (β_ij σ_i σ_j)` and `M = I + 2C`, and the tests deciding
//! whether the linearization has only the translation kernel.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigen_symmetric, Matrix};
use crate::radial::{shoot_ground_state, ShootingPolicy};
use crate::spectrum::merged_spectrum;

/// Minimum distance between a non-principal `Λ` and an excluded eigenvalue.
pub const MARGIN_TOL: f64 = 1e-6;

const SINGULAR_TOL: f64 = 1e-12;

/// Symmetric coupling matrix with focusing diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingMatrix {
    beta: Matrix,
}

impl CouplingMatrix {
    pub fn new(beta: Matrix) -> Result<Self> {
        let k = beta.size();
        if k == 0 {
            return Err(Error::InvalidArgument("coupling matrix must be at least 1x1".into()));
        }
        if beta.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("coupling entries must be finite".into()));
        }
        if !beta.is_symmetric(1e-12) {
            return Err(Error::InvalidArgument("coupling matrix must be symmetric".into()));
        }
        if let Some(i) = (0..k).find(|&i| beta[(i, i)] <= 0.0) {
            return Err(Error::InvalidArgument(format!("diagonal entry beta_{{{i}{i}}} must be positive")));
        }
        Ok(Self { beta })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Diagonal `mu`, every off-diagonal entry `beta`.
    pub fn uniform(mu: &[f64], beta: f64) -> Result<Self> {
        Self::new(Matrix::from_fn(mu.len(), |i, j| if i == j { mu[i] } else { beta }))
    }

    pub fn k(&self) -> usize {
        self.beta.size()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.beta
    }

    pub fn all_positive(&self) -> bool {
        self.beta.as_slice().iter().all(|&v| v > 0.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SynchronizedState {
    pub sigma: Vec<f64>,
    /// `t = σ²`, the solution of `B t = 1`.
    pub sigma_squared: Vec<f64>,
    pub c: Matrix,
    pub m: Matrix,
    /// Eigenvalues of `C`, ascending.
    pub thetas: Vec<f64>,
    /// `Λ = 1 + 2Θ`, same order.
    pub lambdas: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// Position of the eigenpair `Θ = 1` with eigenvector along `σ`.
    pub principal_index: usize,
    pub principal_vector: Vec<f64>,
}

impl SynchronizedState {
    /// `Λ_l` for `l >= 2`, i.e. all but the principal one, ascending.
    pub fn non_principal_lambdas(&self) -> Vec<f64> {
        self.lambdas.iter().enumerate().filter(|&(l, _)| l != self.principal_index).map(|(_, &v)| v).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SigmaOutcome {
    State(SynchronizedState),
    /// Some `t_i = σ_i²` is not positive.
    NoSynchronizedState {
        sigma_squared: Vec<f64>,
        offending: Vec<usize>,
    },
}

/// Solves `Σ_j β_ij σ_j² = 1` and assembles `C`, `M` and their spectra.
pub fn solve_sigma(b: &CouplingMatrix) -> Result<SigmaOutcome> {
    let k = b.k();
    let t = b.beta.solve(&vec![1.0; k], SINGULAR_TOL).map_err(|_| Error::SingularCoupling)?;
    let offending: Vec<usize> = (0..k).filter(|&i| !(t[i] > 0.0)).collect();
    if !offending.is_empty() {
        return Ok(SigmaOutcome::NoSynchronizedState { sigma_squared: t, offending });
    }
    Ok(SigmaOutcome::State(assemble(b, t)?))
}

fn assemble(b: &CouplingMatrix, t: Vec<f64>) -> Result<SynchronizedState> {
    let k = b.k();
    let sigma: Vec<f64> = t.iter().map(|v| v.sqrt()).collect();
    let c = Matrix::from_fn(k, |i, j| b.beta[(i, j)] * sigma[i] * sigma[j]);
    let m = Matrix::from_fn(k, |i, j| if i == j { 1.0 } else { 0.0 } + 2.0 * c[(i, j)]);
    let eig = eigen_symmetric(&c)?;
    let norm = sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
    let principal_index = (0..k)
        .max_by(|&a, &b| {
            let score = |l: usize| {
                let align = eig.vectors[l].iter().zip(&sigma).map(|(v, s)| v * s).sum::<f64>().abs() / norm;
                align - (eig.values[l] - 1.0).abs()
            };
            score(a).total_cmp(&score(b))
        })
        .unwrap_or(0);
    let mut principal_vector = eig.vectors[principal_index].clone();
    if principal_vector.iter().zip(&sigma).map(|(v, s)| v * s).sum::<f64>() < 0.0 {
        principal_vector.iter_mut().for_each(|v| *v = -*v);
    }
    let lambdas = eig.values.iter().map(|th| 1.0 + 2.0 * th).collect();
    Ok(SynchronizedState {
        sigma,
        sigma_squared: t,
        c,
        m,
        thetas: eig.values,
        lambdas,
        eigenvectors: eig.vectors,
        principal_index,
        principal_vector,
    })
}

/// Where the excluded eigenvalues `λ_m` come from when the spectral test runs.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumPolicy {
    /// Compute the merged spectrum of the cubic ground state in `dim`
    /// dimensions over sectors `0..=sector_max`, up to `lambda_max` (raised
    /// above the largest `Λ` when needed).
    Compute { dim: usize, sector_max: usize, lambda_max: f64 },
    /// Eigenvalues known to be complete below `lambda_max`.
    Provided { eigenvalues: Vec<f64>, lambda_max: f64 },
    /// Only the positive-entry test may be used.
    Skip,
}

impl Default for SpectrumPolicy {
    fn default() -> Self {
        SpectrumPolicy::Compute { dim: 2, sector_max: 4, lambda_max: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    NondegenerateSufficient,
    NondegenerateSpectral,
    DegenerateRisk,
    NoSynchronizedState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestPath {
    PerronFrobenius,
    Spectral,
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub verdict: Verdict,
    pub path: TestPath,
    pub sigma: Vec<f64>,
    /// All `Λ`, ascending.
    pub lambdas: Vec<f64>,
    /// `Λ_l`, `l >= 2`.
    pub non_principal: Vec<f64>,
    pub excluded_set: Vec<f64>,
    /// Distance of each non-principal `Λ` to the excluded set (and, on the
    /// spectral path, to the ceiling above which the set is unknown).
    pub margins: Vec<f64>,
    /// Non-principal `Λ` whose margin is below [`MARGIN_TOL`].
    pub collisions: Vec<f64>,
    /// Indices `i` with `σ_i² <= 0` when no synchronized state exists.
    pub offending: Vec<usize>,
    pub det_b: f64,
    pub det_c: Option<f64>,
}

fn distance(x: f64, set: &[f64]) -> f64 {
    set.iter().map(|l| (x - l).abs()).fold(f64::INFINITY, f64::min)
}

/// The positive-entry test when it applies (with its bounds re-checked
/// numerically), otherwise comparison of the non-principal `Λ` against the
/// weighted spectrum.
pub fn check_nondegeneracy(b: &CouplingMatrix, policy: &SpectrumPolicy) -> Result<NondegeneracyReport> {
    let det_b = b.beta.determinant();
    let state = match solve_sigma(b)? {
        SigmaOutcome::State(s) => s,
        SigmaOutcome::NoSynchronizedState { offending, .. } => {
            return Ok(NondegeneracyReport {
                verdict: Verdict::NoSynchronizedState,
                path: TestPath::None,
                sigma: Vec::new(),
                lambdas: Vec::new(),
                non_principal: Vec::new(),
                excluded_set: Vec::new(),
                margins: Vec::new(),
                collisions: Vec::new(),
                offending,
                det_b,
                det_c: None,
            })
        }
    };
    let det_c = state.c.determinant();
    let non_principal = state.non_principal_lambdas();
    let mut report = NondegeneracyReport {
        verdict: Verdict::DegenerateRisk,
        path: TestPath::PerronFrobenius,
        sigma: state.sigma.clone(),
        lambdas: state.lambdas.clone(),
        non_principal: non_principal.clone(),
        excluded_set: Vec::new(),
        margins: Vec::new(),
        collisions: Vec::new(),
        offending: Vec::new(),
        det_b,
        det_c: Some(det_c),
    };

    let scale = b.beta.max_abs().powi(b.k() as i32);
    if b.all_positive() && det_b.abs() > SINGULAR_TOL * scale {
        // -1 < Λ < 3 and Λ != 1 must hold; verify instead of assuming
        let anchors = [1.0, 3.0];
        let margins: Vec<f64> = non_principal.iter().map(|&l| distance(l, &anchors).min(l + 1.0)).collect();
        if margins.iter().all(|&m| m > MARGIN_TOL) && non_principal.iter().all(|&l| l < 3.0) {
            report.verdict = Verdict::NondegenerateSufficient;
            report.excluded_set = anchors.to_vec();
            report.margins = margins;
            return Ok(report);
        }
    }

    report.path = TestPath::Spectral;
    let max_lambda = non_principal.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (excluded, ceiling) = match policy {
        SpectrumPolicy::Skip => return Err(Error::SpectrumUnavailable),
        SpectrumPolicy::Provided { eigenvalues, lambda_max } => {
            let mut ev = eigenvalues.clone();
            ev.sort_by(f64::total_cmp);
            (ev, *lambda_max)
        }
        SpectrumPolicy::Compute { dim, sector_max, lambda_max } => {
            let ceiling = lambda_max.max(max_lambda + 1.0);
            let ground = shoot_ground_state(*dim, 3.0, &ShootingPolicy::default())?;
            let merged = merged_spectrum(&ground, (*sector_max).max(1), ceiling)?;
            (merged.into_iter().map(|t| t.lambda).collect(), ceiling)
        }
    };
    let margins: Vec<f64> = non_principal.iter().map(|&l| distance(l, &excluded).min(ceiling - l)).collect();
    report.collisions = non_principal.iter().zip(&margins).filter(|(_, &m)| m <= MARGIN_TOL).map(|(&l, _)| l).collect();
    report.verdict =
        if report.collisions.is_empty() { Verdict::NondegenerateSpectral } else { Verdict::DegenerateRisk };
    report.excluded_set = excluded;
    report.margins = margins;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Example1 {
    pub admissible: bool,
    pub sigma_squared: [f64; 2],
    /// Present when both `σ_i² > 0`.
    pub sigma: Option<[f64; 2]>,
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Two equations with `β_11 = μ1`, `β_22 = μ2`, `β_12 = β`.
pub fn example1_closed_form(mu1: f64, mu2: f64, beta: f64) -> Result<Example1> {
    if !(mu1 > 0.0 && mu2 > 0.0) {
        return Err(Error::Precondition("mu1 and mu2 must be positive".into()));
    }
    let den = beta * beta - mu1 * mu2;
    if den.abs() <= 1e-14 * (mu1 * mu2).max(beta * beta) {
        return Err(Error::DegenerateDenominator);
    }
    let s1 = (beta - mu2) / den;
    let s2 = (beta - mu1) / den;
    let admissible = (-(mu1 * mu2).sqrt() < beta && beta < mu1.min(mu2)) || beta > mu1.max(mu2);
    let sigma = (s1 > 0.0 && s2 > 0.0).then(|| [s1.sqrt(), s2.sqrt()]);
    Ok(Example1 { admissible, sigma_squared: [s1, s2], sigma, lambda1: 3.0, lambda2: 3.0 - 2.0 * beta * (s1 + s2) })
}

/// `σ_i = [(μ_i - β)(1 + β Σ_j 1/(μ_j - β))]^{-1/2}` for diagonal
/// `0 < μ_1 < ... < μ_k` and all off-diagonal entries `β > μ_k`.
pub fn example2_closed_form(mu: &[f64], beta: f64) -> Result<Vec<f64>> {
    if mu.is_empty() || mu[0] <= 0.0 || mu.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("mu must be positive and strictly increasing".into()));
    }
    let top = mu[mu.len() - 1];
    if !(beta > top) {
        return Err(Error::Precondition(format!("beta must exceed max mu = {top}")));
    }
    let sum: f64 = mu.iter().map(|m| 1.0 / (m - beta)).sum();
    mu.iter()
        .map(|m| {
            let bracket = (m - beta) * (1.0 + beta * sum);
            if bracket > 0.0 {
                Ok(bracket.powf(-0.5))
            } else {
                Err(Error::FormulaDomain(format!("(mu_i - beta)(1 + beta sum) = {bracket} is not positive")))
            }
        })
        .collect()
}
