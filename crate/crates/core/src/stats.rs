//! Two-sample Kolmogorov-Smirnov statistic and sample moments.

/// Asymptotic coefficient `c(alpha)` of the two-sample KS critical value at
/// `alpha = 0.01`.
pub const KS_C_ALPHA_01: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub critical_value: f64,
}

impl KsResult {
    /// True when the samples are indistinguishable at the chosen level.
    pub fn accepts(&self) -> bool {
        self.statistic < self.critical_value
    }
}

/// Largest vertical gap between the two empirical CDFs.
///
/// # Panics
/// If either sample is empty or contains NaN.
pub fn ks_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(
        !xs.is_empty() && !ys.is_empty(),
        "KS needs non-empty samples"
    );
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(|p, q| p.partial_cmp(q).expect("NaN in KS sample"));
    b.sort_by(|p, q| p.partial_cmp(q).expect("NaN in KS sample"));

    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// `c(alpha) * sqrt((n + m) / (n m))`.
pub fn ks_critical_value(c_alpha: f64, n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    c_alpha * ((n + m) / (n * m)).sqrt()
}

/// Two-sample KS test at the 1% level.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> KsResult {
    KsResult {
        statistic: ks_statistic(xs, ys),
        critical_value: ks_critical_value(KS_C_ALPHA_01, xs.len(), ys.len()),
    }
}

/// Largest gap between the empirical CDF of `xs` and a reference `cdf`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    assert!(!xs.is_empty(), "KS needs a non-empty sample");
    let mut sorted = xs.to_vec();
    sorted.sort_by(|p, q| p.partial_cmp(q).expect("NaN in KS sample"));
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the sample mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mu = mean(xs);
    let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}
