//! Reference exit-time distributions used to validate the sampler.
//!
//! A sum of independent exponentials with distinct rates `lambda_i` is
//! hypoexponential. Its Laplace transform `prod lambda_i / (lambda_i + s)`
//! splits into partial fractions with coefficients
//! `l_i = prod_{j != i} lambda_j / (lambda_j - lambda_i)`, giving
//!
//! ```text
//! pdf(t) = sum_i l_i lambda_i exp(-lambda_i t)
//! cdf(t) = sum_i l_i (1 - exp(-lambda_i t))
//! ```
//!
//! The `l_i` alternate in sign and blow up as rates approach each other, so
//! this module only handles a handful of well separated rates. The
//! equal-rate case is the Erlang law.
//!
//! None of this is on the simulation path.

pub mod quadrature;

use thiserror::Error;

use self::quadrature::integrate_half_line;

/// Largest number of rates the partial-fraction form accepts.
pub const MAX_RATES: usize = 15;
/// Smallest accepted `|lambda_i - lambda_j| / max(lambda_i, lambda_j)`.
pub const MIN_RELATIVE_SEPARATION: f64 = 1e-6;
/// Largest number of rates [`pdf_by_numerical_convolution`] accepts.
pub const MAX_CONVOLUTION_RATES: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("at least one rate is required")]
    NoRates,
    #[error("rates must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("{given} rates exceed the supported maximum of {max}")]
    TooManyRates { given: usize, max: usize },
    #[error("rates {a} and {b} are too close for the partial-fraction form")]
    IllConditioned { a: f64, b: f64 },
    #[error("probability {0} is outside [0, 1)")]
    ProbabilityOutOfRange(f64),
    #[error("quadrature failed: {reason}")]
    QuadratureFailed { reason: String },
    #[error("grid spacing {spacing} does not resolve rate {rate}")]
    GridTooCoarse { spacing: f64, rate: f64 },
}

fn check_rate(rate: f64) -> Result<(), OracleError> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(OracleError::InvalidRate(rate))
    }
}

/// Law of a sum of exponentials with pairwise distinct rates.
#[derive(Debug, Clone, PartialEq)]
pub struct HypoexpDistribution {
    rates: Vec<f64>,
    coefficients: Vec<f64>,
}

impl HypoexpDistribution {
    pub fn new(rates: &[f64]) -> Result<Self, OracleError> {
        if rates.is_empty() {
            return Err(OracleError::NoRates);
        }
        if rates.len() > MAX_RATES {
            return Err(OracleError::TooManyRates {
                given: rates.len(),
                max: MAX_RATES,
            });
        }
        for &r in rates {
            check_rate(r)?;
        }
        for (i, &a) in rates.iter().enumerate() {
            for &b in &rates[i + 1..] {
                if (a - b).abs() < MIN_RELATIVE_SEPARATION * a.max(b) {
                    return Err(OracleError::IllConditioned { a, b });
                }
            }
        }
        let coefficients = rates
            .iter()
            .enumerate()
            .map(|(i, &li)| {
                rates
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &lj)| lj / (lj - li))
                    .product()
            })
            .collect();
        Ok(Self {
            rates: rates.to_vec(),
            coefficients,
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Partial-fraction coefficients `l_i`; they sum to one.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn mean(&self) -> f64 {
        self.rates.iter().map(|r| r.recip()).sum()
    }

    pub fn pdf(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let p: f64 = self
            .rates
            .iter()
            .zip(&self.coefficients)
            .map(|(&r, &l)| l * r * (-r * t).exp())
            .sum();
        p.max(0.0)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let c: f64 = self
            .rates
            .iter()
            .zip(&self.coefficients)
            .map(|(&r, &l)| -l * (-r * t).exp_m1())
            .sum();
        c.clamp(0.0, 1.0)
    }

    /// Closed-form transform `prod lambda_i / (lambda_i + s)`.
    pub fn laplace(&self, s: f64) -> f64 {
        self.rates.iter().map(|&r| r / (r + s)).product()
    }

    /// Partial-fraction expansion of the transform, `sum l_i lambda_i / (lambda_i + s)`.
    pub fn laplace_partial_fractions(&self, s: f64) -> f64 {
        self.rates
            .iter()
            .zip(&self.coefficients)
            .map(|(&r, &l)| l * r / (r + s))
            .sum()
    }

    /// `t` with `cdf(t) = r`, by bisection on the monotone CDF.
    pub fn inverse(&self, r: f64) -> Result<f64, OracleError> {
        if !(0.0..1.0).contains(&r) {
            return Err(OracleError::ProbabilityOutOfRange(r));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = self.mean();
        while self.cdf(hi) < r {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Sum of `shape` exponentials sharing one rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangDistribution {
    pub rate: f64,
    pub shape: u32,
}

impl ErlangDistribution {
    pub fn new(rate: f64, shape: u32) -> Result<Self, OracleError> {
        check_rate(rate)?;
        if shape == 0 {
            return Err(OracleError::NoRates);
        }
        Ok(Self { rate, shape })
    }

    /// `lambda^n t^(n-1) exp(-lambda t) / (n-1)!`, evaluated in log space.
    pub fn pdf(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let n = self.shape;
        if n == 1 {
            return self.rate * (-self.rate * t).exp();
        }
        if t == 0.0 {
            return 0.0;
        }
        let log_factorial: f64 = (1..n).map(|k| f64::from(k).ln()).sum();
        let log_p = f64::from(n) * self.rate.ln() + f64::from(n - 1) * t.ln()
            - self.rate * t
            - log_factorial;
        log_p.exp()
    }

    pub fn mean(&self) -> f64 {
        f64::from(self.shape) / self.rate
    }

    /// Closed-form transform `(lambda / (lambda + s))^n`.
    pub fn laplace(&self, s: f64) -> f64 {
        (self.rate / (self.rate + s)).powi(self.shape as i32)
    }
}

/// Laplace transform of a density at real `s > 0` by quadrature over
/// `[0, inf)`, to a relative accuracy well inside `1e-6`.
pub fn laplace_of_pdf<F: Fn(f64) -> f64>(pdf: F, s: f64) -> Result<f64, OracleError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(OracleError::QuadratureFailed {
            reason: format!("transform variable must be positive, got {s}"),
        });
    }
    integrate_half_line(|t| pdf(t) * (-s * t).exp(), 1e-15, 1e-10)
}

/// `|f(l + e) f(l - e) - f(l)^2|` with `f(x) = x / (x + s)`: the transform
/// error of pooling two rates `l +- e` into two copies of `l`.
pub fn approximation_gap(lambda_tilde: f64, epsilon: f64, s: f64) -> f64 {
    let f = |x: f64| x / (x + s);
    (f(lambda_tilde + epsilon) * f(lambda_tilde - epsilon) - f(lambda_tilde).powi(2)).abs()
}

/// Uniform grid of `points` nodes on `[0, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn spacing(&self) -> f64 {
        self.t_max / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..self.points).map(move |k| k as f64 * h)
    }
}

/// Largest `spacing * rate` accepted by [`pdf_by_numerical_convolution`].
pub const MAX_STEP_TIMES_RATE: f64 = 0.05;

/// Density of a sum of exponentials by repeated trapezoidal convolution of
/// the tabulated exponential densities. Rates may repeat.
pub fn pdf_by_numerical_convolution(
    rates: &[f64],
    grid: TimeGrid,
) -> Result<Vec<f64>, OracleError> {
    if rates.is_empty() {
        return Err(OracleError::NoRates);
    }
    if rates.len() > MAX_CONVOLUTION_RATES {
        return Err(OracleError::TooManyRates {
            given: rates.len(),
            max: MAX_CONVOLUTION_RATES,
        });
    }
    for &r in rates {
        check_rate(r)?;
    }
    if grid.points < 2 || !grid.t_max.is_finite() || grid.t_max <= 0.0 {
        return Err(OracleError::GridTooCoarse {
            spacing: f64::INFINITY,
            rate: rates[0],
        });
    }
    let h = grid.spacing();
    let fastest = rates.iter().copied().fold(0.0, f64::max);
    if h * fastest > MAX_STEP_TIMES_RATE {
        return Err(OracleError::GridTooCoarse {
            spacing: h,
            rate: fastest,
        });
    }

    let tabulate =
        |rate: f64| -> Vec<f64> { grid.nodes().map(|t| rate * (-rate * t).exp()).collect() };
    let mut density = tabulate(rates[0]);
    for &rate in &rates[1..] {
        let kernel = tabulate(rate);
        density = trapezoid_convolution(&density, &kernel, h);
    }
    Ok(density)
}

fn trapezoid_convolution(f: &[f64], g: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for k in 1..n {
        let interior: f64 = (1..k).map(|j| f[j] * g[k - j]).sum();
        out[k] = h * (0.5 * f[0] * g[k] + interior + 0.5 * f[k] * g[0]);
    }
    out
}
