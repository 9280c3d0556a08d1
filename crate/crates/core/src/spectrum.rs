//! Weighted eigenvalue problem `-Δψ + ψ = λ U² ψ` around the cubic ground
//! state, reduced to angular sectors
//!
//! `-ψ'' - (N-1)/r ψ' + (1 + l(l+N-2)/r²) ψ = λ U² ψ`,  `ψ ~ r^l` at 0.
//!
//! The number of sign changes of the regular solution on `(0, r_end]` counts
//! the eigenvalues below `λ` (Sturm oscillation), so each eigenvalue is
//! located by bisection on that count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::linearized::operator::{RadialOperator, Trajectory};
use crate::linearized::R0_RATIO;
use crate::radial::grid::central_derivatives;
use crate::radial::{GroundState, RadialProfile};

/// Eigenvalues closer than this are merged across sectors.
pub const MERGE_TOL: f64 = 1e-6;

const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy)]
pub struct SpectralQuery<'a> {
    pub ground: &'a GroundState,
    pub sector: usize,
    pub how_many: usize,
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorSpectrum {
    pub sector: usize,
    pub eigenvalues: Vec<f64>,
    /// False when fewer than `how_many` eigenvalues lie below `lambda_max`.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaggedEigenvalue {
    pub lambda: f64,
    pub sectors: Vec<usize>,
}

fn check_ground(ground: &GroundState) -> Result<()> {
    if ground.p != 3.0 {
        return Err(Error::Precondition(format!(
            "the weighted spectrum is defined for the cubic ground state, got p={}",
            ground.p
        )));
    }
    Ok(())
}

struct Counter<'a> {
    op: RadialOperator<'a>,
}

impl<'a> Counter<'a> {
    fn new(ground: &'a GroundState, sector: usize) -> Self {
        let end = ground.grid().index_of(ground.radius_below(R0_RATIO));
        Self { op: RadialOperator::new(ground, sector, end) }
    }

    fn shoot(&self, lambda: f64) -> Trajectory {
        self.op.integrate(&Matrix::diagonal(&[lambda]), &[1.0], None)
    }

    fn count(&self, lambda: f64) -> usize {
        RadialOperator::sign_changes(&self.shoot(lambda))
    }

    /// Smallest `λ` (to bisection accuracy) with at least `m` sign changes,
    /// starting from `count(lo) < m <= count(hi)`. Returns `(lo, hi)`.
    fn bracket(&self, m: usize, mut lo: f64, mut hi: f64) -> (f64, f64) {
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count(mid) >= m {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo, hi)
    }
}

/// Lowest `how_many` eigenvalues of one sector below `lambda_max`, ascending.
pub fn sector_eigenvalues(query: &SpectralQuery<'_>) -> Result<SectorSpectrum> {
    check_ground(query.ground)?;
    if !(query.lambda_max > 0.0) {
        return Err(Error::InvalidArgument("lambda_max must be positive".into()));
    }
    let counter = Counter::new(query.ground, query.sector);
    let available = counter.count(query.lambda_max);
    let found = available.min(query.how_many);
    let mut eigenvalues = Vec::with_capacity(found);
    let mut lo = 0.0;
    for m in 1..=found {
        let (l, h) = counter.bracket(m, lo, query.lambda_max);
        let lambda = 0.5 * (l + h);
        eigenvalues.push(lambda);
        lo = l;
    }
    Ok(SectorSpectrum { sector: query.sector, eigenvalues, complete: found == query.how_many })
}

/// All eigenvalues below `lambda_max` in sectors `0..=sector_max`, sorted,
/// with values within [`MERGE_TOL`] merged and tagged by sector.
pub fn merged_spectrum(ground: &GroundState, sector_max: usize, lambda_max: f64) -> Result<Vec<TaggedEigenvalue>> {
    if sector_max < 1 {
        return Err(Error::InvalidArgument("sector_max must be at least 1".into()));
    }
    let sectors: Vec<SectorSpectrum> = (0..=sector_max)
        .into_par_iter()
        .map(|sector| sector_eigenvalues(&SpectralQuery { ground, sector, how_many: usize::MAX, lambda_max }))
        .collect::<Result<_>>()?;
    let mut all: Vec<(f64, usize)> =
        sectors.iter().flat_map(|s| s.eigenvalues.iter().map(move |&l| (l, s.sector))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut merged: Vec<TaggedEigenvalue> = Vec::new();
    for (lambda, sector) in all {
        match merged.last_mut() {
            Some(last) if (lambda - last.lambda).abs() <= MERGE_TOL => {
                if !last.sectors.contains(&sector) {
                    last.sectors.push(sector);
                }
            }
            _ => merged.push(TaggedEigenvalue { lambda, sectors: vec![sector] }),
        }
    }
    Ok(merged)
}

/// Eigenfunction of the `m`-th eigenvalue (1-based) of a sector, computed
/// just below the eigenvalue so that it has exactly `m - 1` sign changes.
/// Normalized to `max|ψ| = 1` and set to zero past the tail minimum, where
/// the growing mode would take over.
pub fn sector_eigenfunction(
    ground: &GroundState,
    sector: usize,
    m: usize,
    lambda_max: f64,
) -> Result<(f64, RadialProfile)> {
    check_ground(ground)?;
    if m == 0 {
        return Err(Error::InvalidArgument("eigenvalue index is 1-based".into()));
    }
    let counter = Counter::new(ground, sector);
    if counter.count(lambda_max) < m {
        return Err(Error::InvalidArgument(format!("fewer than {m} eigenvalues below {lambda_max}")));
    }
    let lo = if m == 1 { 0.0 } else { counter.bracket(m - 1, 0.0, lambda_max).1 };
    let (lo, hi) = counter.bracket(m, lo, lambda_max);
    let traj = counter.shoot(lo);
    let values: Vec<f64> = traj.component(0).collect();

    // past the last sign change, the decaying part ends at the minimum of |ψ|
    let last_change = values
        .windows(2)
        .enumerate()
        .skip(1)
        .filter(|(_, w)| w[0] * w[1] < 0.0)
        .map(|(j, _)| j + 1)
        .next_back()
        .unwrap_or(1);
    let peak = (last_change..values.len()).max_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs())).unwrap_or(1);
    let peak = (last_change..=peak)
        .rev()
        .find(|&j| j + 1 < values.len() && values[j].abs() >= values[j + 1].abs())
        .unwrap_or(last_change);
    let cut =
        (peak..values.len()).min_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs())).unwrap_or(values.len() - 1);

    let scale = values[..=cut].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let len = ground.grid().n_steps() + 1;
    let mut out = vec![0.0; len];
    for j in 0..=cut {
        out[j] = values[j] / scale;
    }
    Ok((0.5 * (lo + hi), RadialProfile::new(*ground.grid(), out, ground.dim)?))
}

/// Max of the sector residual over interior nodes, for a profile normalized
/// to `max|ψ| = 1`. Derivatives are fourth-order central differences; for
/// `l >= 1` nodes with `r < 0.1` are skipped, since there the difference
/// quotient of `(N-1)/r ψ'` carries an `O(h⁴/r³)` error of its own.
pub fn eigen_residual(ground: &GroundState, sector: usize, lambda: f64, psi: &RadialProfile) -> f64 {
    let h = ground.grid().step();
    let v = psi.values();
    let u = ground.values();
    let dim = ground.dim as f64;
    let l = sector as f64;
    let centrifugal = l * (l + dim - 2.0);
    let last = v.iter().rposition(|&x| x != 0.0).unwrap_or(0);
    (first_checked_node(sector, h)..last.saturating_sub(2))
        .map(|j| {
            let r = j as f64 * h;
            let (d1, d2) = central_derivatives(v, j, h, sector % 2 == 0);
            (-d2 - (dim - 1.0) / r * d1 + (1.0 + centrifugal / (r * r)) * v[j] - lambda * u[j] * u[j] * v[j]).abs()
        })
        .fold(0.0, f64::max)
        / psi.max_abs().max(f64::MIN_POSITIVE)
}

pub(crate) fn first_checked_node(sector: usize, h: f64) -> usize {
    if sector == 0 {
        1
    } else {
        (0.1 / h).ceil() as usize
    }
}

/// Number of sign changes of a profile on `(0, r_max]`.
pub fn sign_changes(profile: &RadialProfile) -> usize {
    let mut last = 0.0_f64;
    let mut count = 0;
    for &v in profile.values().iter().skip(1) {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}
