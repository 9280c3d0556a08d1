//! RK4 integration of linear radial systems around a ground state,
//!
//! `Z'' + (N-1)/r Z' - l(l+N-2)/r^2 Z = Z - U^{p-1} K Z - g(r) w`,
//!
//! with `Z` a k-vector, `K` a constant k x k matrix, `g` a scalar source and
//! `w` its k-vector of weights. Regular behaviour `Z ~ r^l` at the origin.

use crate::linalg::Matrix;
use crate::radial::GroundState;

use super::source::Source;

/// Coefficients of the operator sampled at nodes and half-steps.
pub(crate) struct RadialOperator<'a> {
    pub ground: &'a GroundState,
    pub sector: usize,
    /// index of the last node integrated to
    pub end: usize,
    h: f64,
    pot_nodes: Vec<f64>,
    pot_mid: Vec<f64>,
    /// `U^{p-1} = pot0 + pot2 r^2 + ...` near the origin
    pot0: f64,
    pot2: f64,
}

/// Source sampled on the same stencil plus its small-r expansion
/// `g = r^l (g0 + g2 r^2 + ...)`.
pub(crate) struct SampledSource {
    nodes: Vec<f64>,
    mid: Vec<f64>,
    g0: f64,
    g2: f64,
}

impl SampledSource {
    pub fn new(op: &RadialOperator<'_>, source: &Source) -> Self {
        let h = op.h;
        let nodes: Vec<f64> = (0..=op.end).map(|j| source.eval(op.ground, j as f64 * h)).collect();
        let mid: Vec<f64> = (0..op.end).map(|j| source.eval(op.ground, (j as f64 + 0.5) * h)).collect();
        let l = op.sector as i32;
        let reduced = |r: f64| source.eval(op.ground, r) / r.powi(l);
        let (g1, g2r) = (reduced(h), reduced(2.0 * h));
        let g2 = (g2r - g1) / (3.0 * h * h);
        let g0 = if l == 0 { nodes[0] } else { g1 - g2 * h * h };
        Self { nodes, mid, g0, g2 }
    }
}

/// Trajectory with `values[j*k + i]` the i-th component at node j.
pub(crate) struct Trajectory {
    pub k: usize,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl Trajectory {
    pub fn at(&self, j: usize) -> &[f64] {
        &self.values[j * self.k..(j + 1) * self.k]
    }

    pub fn slope_at(&self, j: usize) -> &[f64] {
        &self.slopes[j * self.k..(j + 1) * self.k]
    }

    pub fn component(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(i).step_by(self.k).copied()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl<'a> RadialOperator<'a> {
    pub fn new(ground: &'a GroundState, sector: usize, end: usize) -> Self {
        let grid = ground.grid();
        let h = grid.step();
        let end = end.min(grid.n_steps());
        let exponent = ground.p - 1.0;
        let pot_nodes: Vec<f64> = ground.values()[..=end].iter().map(|u| u.powf(exponent)).collect();
        let pot_mid: Vec<f64> = (0..end).map(|j| ground.eval((j as f64 + 0.5) * h).0.max(0.0).powf(exponent)).collect();
        let u0 = ground.u0;
        let curvature = (u0 - u0.powf(ground.p)) / (2.0 * ground.dim as f64);
        let pot0 = u0.powf(exponent);
        let pot2 = exponent * u0.powf(exponent - 1.0) * curvature;
        Self { ground, sector, end, h, pot_nodes, pot_mid, pot0, pot2 }
    }

    /// Integrates from the regular start `Z ~ r^l (s + a r^2 + b r^4)` to
    /// node `end`. `source` is added with weights `weights` when present.
    pub fn integrate(&self, coupling: &Matrix, start: &[f64], source: Option<(&SampledSource, &[f64])>) -> Trajectory {
        let k = start.len();
        let h = self.h;
        let dim = self.ground.dim as f64;
        let l = self.sector as f64;

        // series coefficients at the origin
        let ks = coupling.mul_vec(start);
        let (g0, g2, weights) = match source {
            Some((s, w)) => (s.g0, s.g2, w.to_vec()),
            None => (0.0, 0.0, vec![0.0; k]),
        };
        let a: Vec<f64> =
            (0..k).map(|i| (start[i] - self.pot0 * ks[i] - g0 * weights[i]) / (2.0 * (2.0 * l + dim))).collect();
        let ka = coupling.mul_vec(&a);
        let b: Vec<f64> = (0..k)
            .map(|i| (a[i] - self.pot0 * ka[i] - self.pot2 * ks[i] - g2 * weights[i]) / (4.0 * (2.0 * l + dim + 2.0)))
            .collect();

        let mut values = vec![0.0; (self.end + 1) * k];
        let mut slopes = vec![0.0; (self.end + 1) * k];
        if self.sector == 0 {
            values[..k].copy_from_slice(start);
        } else if self.sector == 1 {
            slopes[..k].copy_from_slice(start);
        }
        // the series is used out to a small fraction of the core width, where
        // the centrifugal term no longer dominates an RK4 step
        let width = self.ground.u0.powf(-(self.ground.p - 1.0) / 2.0);
        let series_nodes = if self.sector == 0 {
            1
        } else {
            ((0.01_f64.min(0.02 * width) / h).ceil() as usize).clamp(1, self.end.saturating_sub(1).max(1))
        };
        let lp = self.sector as i32;
        for j in 1..=series_nodes {
            let r = j as f64 * h;
            let rl = r.powi(lp);
            let drl = if lp == 0 { 0.0 } else { lp as f64 * r.powi(lp - 1) };
            for i in 0..k {
                let poly = start[i] + a[i] * r * r + b[i] * r.powi(4);
                let dpoly = 2.0 * a[i] * r + 4.0 * b[i] * r.powi(3);
                values[j * k + i] = rl * poly;
                slopes[j * k + i] = drl * poly + rl * dpoly;
            }
        }

        self.march(coupling, series_nodes, &mut values, &mut slopes, source.map(|(s, _)| s), &weights);
        Trajectory { k, values, slopes }
    }

    /// Same system started from a given state at node `first`; entries
    /// before `first` are zero.
    pub fn integrate_from(
        &self,
        coupling: &Matrix,
        first: usize,
        value: &[f64],
        slope: &[f64],
        source: Option<(&SampledSource, &[f64])>,
    ) -> Trajectory {
        let k = value.len();
        let mut values = vec![0.0; (self.end + 1) * k];
        let mut slopes = vec![0.0; (self.end + 1) * k];
        values[first * k..(first + 1) * k].copy_from_slice(value);
        slopes[first * k..(first + 1) * k].copy_from_slice(slope);
        let weights = source.map_or_else(|| vec![0.0; k], |(_, w)| w.to_vec());
        self.march(coupling, first, &mut values, &mut slopes, source.map(|(s, _)| s), &weights);
        Trajectory { k, values, slopes }
    }

    fn march(
        &self,
        coupling: &Matrix,
        first: usize,
        values: &mut [f64],
        slopes: &mut [f64],
        source: Option<&SampledSource>,
        weights: &[f64],
    ) {
        let k = weights.len();
        let h = self.h;
        let dim = self.ground.dim as f64;
        let l = self.sector as f64;
        let nm1 = dim - 1.0;
        let centrifugal = l * (l + dim - 2.0);
        let mut y = vec![0.0; 2 * k];
        let mut stage = vec![vec![0.0; 2 * k]; 4];
        let mut tmp = vec![0.0; 2 * k];
        let mut kz = vec![0.0; k];
        let rhs = |r: f64, pot: f64, g: f64, y: &[f64], out: &mut [f64], kz: &mut [f64]| {
            for i in 0..k {
                kz[i] = (0..k).map(|m| coupling[(i, m)] * y[m]).sum();
            }
            let c = 1.0 + centrifugal / (r * r);
            for i in 0..k {
                out[i] = y[k + i];
                out[k + i] = c * y[i] - pot * kz[i] - g * weights[i] - nm1 / r * y[k + i];
            }
        };

        for j in first..self.end {
            let r = j as f64 * h;
            y[..k].copy_from_slice(&values[j * k..(j + 1) * k]);
            y[k..].copy_from_slice(&slopes[j * k..(j + 1) * k]);
            let (g_n, g_m, g_n1) = match source {
                Some(s) => (s.nodes[j], s.mid[j], s.nodes[j + 1]),
                None => (0.0, 0.0, 0.0),
            };
            let (p_n, p_m, p_n1) = (self.pot_nodes[j], self.pot_mid[j], self.pot_nodes[j + 1]);

            rhs(r, p_n, g_n, &y, &mut stage[0], &mut kz);
            for q in 0..2 * k {
                tmp[q] = y[q] + 0.5 * h * stage[0][q];
            }
            rhs(r + 0.5 * h, p_m, g_m, &tmp, &mut stage[1], &mut kz);
            for q in 0..2 * k {
                tmp[q] = y[q] + 0.5 * h * stage[1][q];
            }
            rhs(r + 0.5 * h, p_m, g_m, &tmp, &mut stage[2], &mut kz);
            for q in 0..2 * k {
                tmp[q] = y[q] + h * stage[2][q];
            }
            rhs(r + h, p_n1, g_n1, &tmp, &mut stage[3], &mut kz);
            for q in 0..2 * k {
                let incr = h / 6.0 * (stage[0][q] + 2.0 * stage[1][q] + 2.0 * stage[2][q] + stage[3][q]);
                let next = y[q] + incr;
                if q < k {
                    values[(j + 1) * k + q] = next;
                } else {
                    slopes[(j + 1) * k + q - k] = next;
                }
            }
        }
    }

    /// Number of sign changes of a scalar trajectory on `(0, r_end]`.
    pub fn sign_changes(traj: &Trajectory) -> usize {
        let mut last = 0.0_f64;
        let mut count = 0;
        for v in traj.component(0).skip(1) {
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
}
