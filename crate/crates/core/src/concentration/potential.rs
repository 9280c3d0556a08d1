use std::fmt;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Finite-difference steps for gradients, Hessians and third derivatives.
pub const FD_STEP_GRADIENT: f64 = 1e-6;
pub const FD_STEP_HESSIAN: f64 = 1e-4;
pub const FD_STEP_THIRD: f64 = 1e-3;

/// `Σ c x^e` in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        if let Some((e, _)) = terms.iter().find(|(e, _)| e.len() != dim) {
            return Err(Error::InvalidArgument(format!("monomial exponent {e:?} does not have {dim} entries")));
        }
        if terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::InvalidArgument("polynomial coefficients must be finite".into()));
        }
        Ok(Self { dim, terms }.normalized())
    }

    /// `Σ_j a_j x_j²`.
    pub fn quadratic(coeffs: &[f64]) -> Result<Self> {
        let dim = coeffs.len();
        Self::new(
            dim,
            coeffs
                .iter()
                .enumerate()
                .map(|(j, &a)| {
                    let mut e = vec![0; dim];
                    e[j] = 2;
                    (e, a)
                })
                .collect(),
        )
    }

    fn normalized(mut self) -> Self {
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Vec<u32>, f64)> = Vec::with_capacity(self.terms.len());
        for (e, c) in self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == e => last.1 += c,
                _ => merged.push((e, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        Self { dim: self.dim, terms: merged }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()).sum()
    }

    pub fn derivative(&self, var: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[var] > 0)
            .map(|(e, c)| {
                let mut e = e.clone();
                let k = e[var];
                e[var] -= 1;
                (e, c * k as f64)
            })
            .collect();
        Self { dim: self.dim, terms }.normalized()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect() }.normalized()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { dim: self.dim, terms }.normalized()
    }

    /// `(a_1, a_2)` when the polynomial is `a_1 x_1² + a_2 x_2² + O(|x|³)` in
    /// the plane (no terms of degree below two, no `x_1 x_2` term).
    pub fn planar_quadratic_part(&self) -> Option<[f64; 2]> {
        if self.dim != 2 {
            return None;
        }
        let mut a = [0.0; 2];
        for (e, c) in &self.terms {
            match (e[0], e[1]) {
                (2, 0) => a[0] += c,
                (0, 2) => a[1] += c,
                (i, j) if i + j < 3 => return None,
                _ => {}
            }
        }
        Some(a)
    }
}

type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// One potential `V_i: R^N -> R`.
#[derive(Clone)]
pub enum Potential {
    /// Differentiated exactly.
    Polynomial(Polynomial),
    /// Differentiated by central differences; must be reentrant.
    Field(Field),
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::Polynomial(p) => f.debug_tuple("Polynomial").field(p).finish(),
            Potential::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl Potential {
    pub fn field(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Potential::Field(Arc::new(f))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Polynomial(p) => p.eval(x),
            Potential::Field(f) => f(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    Analytic,
    FiniteDifference,
}

/// The `k` potentials of a model in `R^N`.
#[derive(Debug, Clone)]
pub struct PotentialModel {
    dim: usize,
    potentials: Vec<Potential>,
    quadratic: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    k: usize,
    #[serde(rename = "N")]
    dim: usize,
    #[serde(rename = "potential")]
    potentials: Vec<PotentialSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PotentialSpec {
    Quadratic { coeffs: Vec<f64> },
    Polynomial { terms: Vec<TermSpec> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermSpec {
    exponents: Vec<u32>,
    coeff: f64,
}

impl PotentialModel {
    pub fn new(dim: usize, potentials: Vec<Potential>) -> Result<Self> {
        if dim == 0 || potentials.is_empty() {
            return Err(Error::InvalidArgument("a model needs N >= 1 and at least one potential".into()));
        }
        if let Some(p) = potentials.iter().find_map(|p| match p {
            Potential::Polynomial(p) if p.dim() != dim => Some(p.dim()),
            _ => None,
        }) {
            return Err(Error::InvalidArgument(format!("polynomial in {p} variables for a model with N={dim}")));
        }
        Ok(Self { dim, potentials, quadratic: None })
    }

    pub fn polynomial(dim: usize, polys: Vec<Polynomial>) -> Result<Self> {
        Self::new(dim, polys.into_iter().map(Potential::Polynomial).collect())
    }

    /// Supplies the `(a_1, a_2)` expansion coefficients explicitly, e.g. for
    /// potentials given as closures.
    pub fn with_quadratic_coeffs(mut self, coeffs: Vec<[f64; 2]>) -> Result<Self> {
        if coeffs.len() != self.k() {
            return Err(Error::InvalidArgument("one coefficient pair per potential is required".into()));
        }
        self.quadratic = Some(coeffs);
        Ok(self)
    }

    /// Reads the declarative TOML form:
    ///
    /// ```toml
    /// k = 2
    /// N = 2
    /// [[potential]]
    /// kind = "quadratic"
    /// coeffs = [1.0, 1.0]
    /// [[potential]]
    /// kind = "polynomial"
    /// terms = [{ exponents = [2, 0], coeff = 2.0 }, { exponents = [0, 2], coeff = 1.0 }]
    /// ```
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if file.potentials.len() != file.k {
            return Err(Error::Parse(format!("k = {} but {} potentials are listed", file.k, file.potentials.len())));
        }
        let polys = file
            .potentials
            .into_iter()
            .map(|spec| match spec {
                PotentialSpec::Quadratic { coeffs } => {
                    if coeffs.len() != file.dim {
                        return Err(Error::Parse(format!("quadratic potential needs {} coefficients", file.dim)));
                    }
                    Polynomial::quadratic(&coeffs)
                }
                PotentialSpec::Polynomial { terms } => {
                    Polynomial::new(file.dim, terms.into_iter().map(|t| (t.exponents, t.coeff)).collect())
                }
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::InvalidArgument(m) => Error::Parse(m),
                other => other,
            })?;
        Self::polynomial(file.dim, polys)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.potentials.len()
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        if self.potentials.iter().all(|p| matches!(p, Potential::Polynomial(_))) {
            DerivativeMode::Analytic
        } else {
            DerivativeMode::FiniteDifference
        }
    }

    pub fn values_at(&self, x: &[f64]) -> Vec<f64> {
        self.potentials.iter().map(|p| p.eval(x)).collect()
    }

    /// Per-potential `(a_1, a_2)` of `V_i = a_1 x_1² + a_2 x_2² + O(|x|³)`,
    /// either supplied or read off polynomial potentials.
    pub fn quadratic_coeffs(&self) -> Option<Vec<[f64; 2]>> {
        if let Some(q) = &self.quadratic {
            return Some(q.clone());
        }
        self.potentials
            .iter()
            .map(|p| match p {
                Potential::Polynomial(poly) => poly.planar_quadratic_part(),
                Potential::Field(_) => None,
            })
            .collect()
    }
}

/// `Γ(x) = γ Σ σ_i² V_i(x)` with its derivatives.
#[derive(Debug, Clone)]
pub struct GlobalPotential {
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub sigma_squared: Vec<f64>,
    model: PotentialModel,
    /// `Γ` as one polynomial when every potential is polynomial.
    poly: Option<Polynomial>,
}

impl GlobalPotential {
    pub fn new(gamma: f64, gamma_tilde: f64, sigma_squared: Vec<f64>, model: PotentialModel) -> Result<Self> {
        if sigma_squared.len() != model.k() {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes for {} potentials",
                sigma_squared.len(),
                model.k()
            )));
        }
        let poly = model
            .potentials
            .iter()
            .zip(&sigma_squared)
            .map(|(p, s2)| match p {
                Potential::Polynomial(poly) => Some(poly.scaled(gamma * s2)),
                Potential::Field(_) => None,
            })
            .try_fold(Polynomial { dim: model.dim, terms: Vec::new() }, |acc, p| p.map(|p| acc.add(&p)));
        Ok(Self { gamma, gamma_tilde, sigma_squared, model, poly })
    }

    pub fn dim(&self) -> usize {
        self.model.dim
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    pub fn derivative_mode(&self) -> DerivativeMode {
        self.model.derivative_mode()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.poly {
            Some(p) => p.eval(x),
            None => {
                self.gamma * self.model.values_at(x).iter().zip(&self.sigma_squared).map(|(v, s)| v * s).sum::<f64>()
            }
        }
    }

    fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
        let mut y = x.to_vec();
        for &(i, d) in moves {
            y[i] += d;
        }
        y
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        match &self.poly {
            Some(p) => (0..n).map(|i| p.derivative(i).eval(x)).collect(),
            None => {
                let h = FD_STEP_GRADIENT;
                (0..n)
                    .map(|i| {
                        (self.value(&Self::shifted(x, &[(i, h)])) - self.value(&Self::shifted(x, &[(i, -h)])))
                            / (2.0 * h)
                    })
                    .collect()
            }
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Matrix {
        let n = self.dim();
        match &self.poly {
            Some(p) => {
                let first: Vec<Polynomial> = (0..n).map(|i| p.derivative(i)).collect();
                Matrix::from_fn(n, |i, j| first[i].derivative(j).eval(x))
            }
            None => self.fd_hessian(x, FD_STEP_HESSIAN),
        }
    }

    fn fd_hessian(&self, x: &[f64], h: f64) -> Matrix {
        let n = self.dim();
        let f0 = self.value(x);
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            let fp = self.value(&Self::shifted(x, &[(i, h)]));
            let fm = self.value(&Self::shifted(x, &[(i, -h)]));
            m[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in 0..i {
                let v = (self.value(&Self::shifted(x, &[(i, h), (j, h)]))
                    - self.value(&Self::shifted(x, &[(i, h), (j, -h)]))
                    - self.value(&Self::shifted(x, &[(i, -h), (j, h)]))
                    + self.value(&Self::shifted(x, &[(i, -h), (j, -h)])))
                    / (4.0 * h * h);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let h = self.hessian(x);
        (0..self.dim()).map(|i| h[(i, i)]).sum()
    }

    /// `∂_j ΔΓ(x)` for every `j`.
    pub fn laplacian_gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        match &self.poly {
            Some(p) => {
                let lap = (0..n)
                    .fold(Polynomial { dim: n, terms: Vec::new() }, |acc, i| acc.add(&p.derivative(i).derivative(i)));
                (0..n).map(|j| lap.derivative(j).eval(x)).collect()
            }
            None => {
                let h = FD_STEP_THIRD;
                let lap = |y: &[f64]| -> f64 {
                    let f0 = self.value(y);
                    (0..n)
                        .map(|i| {
                            (self.value(&Self::shifted(y, &[(i, h)])) - 2.0 * f0
                                + self.value(&Self::shifted(y, &[(i, -h)])))
                                / (h * h)
                        })
                        .sum()
                };
                (0..n)
                    .map(|j| (lap(&Self::shifted(x, &[(j, h)])) - lap(&Self::shifted(x, &[(j, -h)]))) / (2.0 * h))
                    .collect()
            }
        }
    }
}
