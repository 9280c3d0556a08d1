use std::ops::Add;

use crate::radial::{GroundState, RadialProfile};

#[derive(Debug, Clone, PartialEq)]
pub enum SourceTerm {
    /// `coeff * r^power * U(r)`
    Moment { power: i32, coeff: f64 },
    /// Tabulated `g(r)`, cubically interpolated between its nodes.
    Sampled(RadialProfile),
}

/// Right-hand side `g(r)` of a linearized radial equation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Source {
    terms: Vec<SourceTerm>,
}

impl Source {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn moment(power: i32, coeff: f64) -> Self {
        Self { terms: vec![SourceTerm::Moment { power, coeff }] }
    }

    /// `c U`
    pub fn ground(coeff: f64) -> Self {
        Self::moment(0, coeff)
    }

    /// `c r^2 U`, the radial form of `c |x|^2 U`.
    pub fn second_moment(coeff: f64) -> Self {
        Self::moment(2, coeff)
    }

    pub fn sampled(profile: RadialProfile) -> Self {
        Self { terms: vec![SourceTerm::Sampled(profile)] }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for term in &mut self.terms {
            match term {
                SourceTerm::Moment { coeff, .. } => *coeff *= factor,
                SourceTerm::Sampled(p) => *p = p.map(|_, v| v * factor),
            }
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| match t {
            SourceTerm::Moment { coeff, .. } => *coeff == 0.0,
            SourceTerm::Sampled(p) => p.max_abs() == 0.0,
        })
    }

    pub fn eval(&self, ground: &GroundState, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|term| match term {
                SourceTerm::Moment { power, coeff } => {
                    if *coeff == 0.0 {
                        0.0
                    } else {
                        coeff * r.powi(*power) * ground.eval(r).0
                    }
                }
                SourceTerm::Sampled(profile) => interpolate(profile, r),
            })
            .sum()
    }
}

impl Add for Source {
    type Output = Source;
    fn add(mut self, rhs: Source) -> Source {
        self.terms.extend(rhs.terms);
        self
    }
}

/// Four-point Lagrange interpolation on the profile grid; zero outside.
fn interpolate(profile: &RadialProfile, r: f64) -> f64 {
    let grid = profile.grid();
    let v = profile.values();
    if r < 0.0 || r > grid.r_max() {
        return 0.0;
    }
    let h = grid.step();
    let n = grid.n_steps();
    let j = ((r / h) as usize).min(n - 1);
    let base = j.saturating_sub(1).min(n - 3);
    let t = r / h - base as f64;
    let (y0, y1, y2, y3) = (v[base], v[base + 1], v[base + 2], v[base + 3]);
    -y0 * (t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0 + y1 * t * (t - 2.0) * (t - 3.0) / 2.0
        - y2 * t * (t - 1.0) * (t - 3.0) / 2.0
        + y3 * t * (t - 1.0) * (t - 2.0) / 6.0
}
