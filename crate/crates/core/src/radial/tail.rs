//! Decaying solutions of the free radial equation `w'' + (N-1)/r w' = w`,
//! i.e. `w = r^{-nu} K_nu(r)` with `nu = (N-2)/2`, via the large-argument
//! expansion of the modified Bessel function `K_nu`.

/// `K_nu(r) sqrt(2r/pi) e^r` by its asymptotic series. The series terminates
/// for half-integer `nu`; otherwise it is summed up to its smallest term.
pub fn bessel_k_scaled(nu: f64, r: f64) -> f64 {
    let four_nu_sq = 4.0 * nu * nu;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        let next = term * (four_nu_sq - odd * odd) / (8.0 * k as f64 * r);
        if next == 0.0 || next.abs() < 1e-17 * sum.abs() {
            sum += next;
            break;
        }
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
    }
    sum
}

/// Decaying free-space tail in dimension `dim`, normalized at `r_ref`.
#[derive(Debug, Clone, Copy)]
pub struct DecayingTail {
    nu: f64,
    r_ref: f64,
    value_ref: f64,
    series_ref: f64,
}

impl DecayingTail {
    pub fn new(dim: usize, r_ref: f64, value_ref: f64) -> Self {
        let nu = (dim as f64 - 2.0) / 2.0;
        Self { nu, r_ref, value_ref, series_ref: bessel_k_scaled(nu, r_ref) }
    }

    pub fn value(&self, r: f64) -> f64 {
        let ratio = (self.r_ref / r).powf(self.nu + 0.5) * (-(r - self.r_ref)).exp() * bessel_k_scaled(self.nu, r)
            / self.series_ref;
        self.value_ref * ratio
    }

    /// `w'/w` at `r`.
    pub fn log_slope(&self, r: f64) -> f64 {
        -bessel_k_scaled(self.nu + 1.0, r) / bessel_k_scaled(self.nu, r)
    }

    pub fn slope(&self, r: f64) -> f64 {
        self.value(r) * self.log_slope(r)
    }
}
