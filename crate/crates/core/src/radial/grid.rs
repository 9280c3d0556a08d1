use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 8;
pub const MIN_STEPS: usize = 16;

/// Uniform grid `r_j = j*h`, `j = 0..=n_steps`, on `[0, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialGrid {
    r_max: f64,
    n_steps: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, n_steps: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidArgument(format!("r_max must be positive, got {r_max}")));
        }
        if n_steps < MIN_STEPS {
            return Err(Error::InvalidArgument(format!("n_steps must be at least {MIN_STEPS}, got {n_steps}")));
        }
        Ok(Self { r_max, n_steps })
    }

    /// Grid with step as close to `h` as possible and an even number of
    /// intervals.
    pub fn with_step(r_max: f64, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
        }
        let mut n = (r_max / h).round() as usize;
        if n % 2 == 1 {
            n += 1;
        }
        Self::new(r_max, n.max(MIN_STEPS))
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.r_max / self.n_steps as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.step()
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (0..=self.n_steps).map(move |j| j as f64 * h)
    }

    /// Index of the node nearest to `r`, clamped to the grid.
    pub fn index_of(&self, r: f64) -> usize {
        ((r / self.step()).round().max(0.0) as usize).min(self.n_steps)
    }
}

/// A function of `r` sampled on a [`RadialGrid`], living in dimension `dim`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    grid: RadialGrid,
    values: Vec<f64>,
    dim: usize,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, values: Vec<f64>, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "profile has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite profile value at node {j}")));
        }
        Ok(Self { grid, values, dim })
    }

    pub fn zeros(grid: RadialGrid, dim: usize) -> Result<Self> {
        Self::new(grid, vec![0.0; grid.len()], dim)
    }

    pub fn from_fn(grid: RadialGrid, dim: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.nodes().map(f).collect(), dim)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_decaying(&self, tail_tol: f64) -> bool {
        let last = self.values.last().copied().unwrap_or(0.0).abs();
        last <= tail_tol * self.max_abs()
    }

    /// Pointwise map, keeping grid and dimension.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.grid.nodes().zip(&self.values).map(|(r, &v)| f(r, v)).collect();
        Self { grid: self.grid, values, dim: self.dim }
    }

    /// Pointwise combination with another profile on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::InvalidArgument("profiles live on different grids".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values, dim: self.dim })
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| a - b)?.max_abs())
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dimension must be in 1..={MAX_DIM}, got {dim}")))
    }
}

/// Area of the unit sphere `S^{N-1}` in `R^N`; 2 for `N = 1`.
pub fn surface_area(dim: usize) -> f64 {
    // |S^{N-1}| = 2 pi^{N/2} / Gamma(N/2), with Gamma at half-integers built
    // from Gamma(1/2) = sqrt(pi) and Gamma(1) = 1.
    let mut gamma = if dim % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    let target = dim as f64 / 2.0;
    while x < target - 0.25 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}

/// Composite Simpson rule on uniformly spaced samples. An odd number of
/// intervals closes with a 3/8 panel.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (values[0] + values[1]),
        2 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        3 => 3.0 * h / 8.0 * (values[0] + 3.0 * values[1] + 3.0 * values[2] + values[3]),
        _ => {
            let even_part = if n % 2 == 0 { n } else { n - 3 };
            let mut acc = values[0] + values[even_part];
            for j in 1..even_part {
                acc += if j % 2 == 1 { 4.0 } else { 2.0 } * values[j];
            }
            let mut total = h / 3.0 * acc;
            if even_part < n {
                let v = &values[even_part..];
                total += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
            }
            total
        }
    }
}

/// Fourth-order central differences `(f'(r_j), f''(r_j))` from five nodes;
/// nodes left of the origin are reflected with the given parity.
pub(crate) fn central_derivatives(v: &[f64], j: usize, h: f64, even: bool) -> (f64, f64) {
    let at = |i: isize| -> f64 {
        if i >= 0 {
            v[i as usize]
        } else if even {
            v[(-i) as usize]
        } else {
            -v[(-i) as usize]
        }
    };
    let j = j as isize;
    let (m2, m1, c, p1, p2) = (at(j - 2), at(j - 1), at(j), at(j + 1), at(j + 2));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h);
    (d1, d2)
}

/// `int_0^{r_max} f(r) r^{N-1+m} dr` by composite Simpson on the profile grid.
pub fn radial_quadrature(f: &RadialProfile, weight_power: i32) -> f64 {
    let power = f.dim() as i32 - 1 + weight_power;
    let integrand: Vec<f64> =
        f.grid().nodes().zip(f.values()).map(|(r, &v)| if power == 0 { v } else { v * r.powi(power) }).collect();
    simpson(&integrand, f.grid().step())
}
