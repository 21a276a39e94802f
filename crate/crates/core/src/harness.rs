//! Monte Carlo ensembles and their comparison.
//!
//! Trajectory `i` of an ensemble with seed `s` always runs on
//! `RandomStream::new(s, i)`, so results do not depend on the worker count
//! or on scheduling order.

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::exit_time::{self, ExitTimeError};
use crate::model::{Model, ModelError};
use crate::rng::{RandomStream, RngCounters};
use crate::ssa;
use crate::stats::{self, KsResult};

/// Default number of histogram bins.
pub const DEFAULT_BINS: usize = 200;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("an ensemble needs at least one trajectory")]
    NoSamples,
    #[error("every trajectory was censored; no exit-time density exists")]
    AllCensored,
    #[error("histogram grids differ: {left} vs {right}")]
    GridMismatch { left: String, right: String },
    #[error("invalid bin grid: {0}")]
    InvalidGrid(String),
    #[error("epsilon must be finite and >= 0, got {0}")]
    InvalidEpsilon(f64),
    #[error("epsilons must be non-empty and strictly descending")]
    EpsilonOrder,
    #[error("worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    ExitTime(#[from] ExitTimeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical simulation with one exponential draw per firing.
    Ssa,
    /// Time-free simulation followed by the grouped Gamma-sum sampler.
    ExitTime { epsilon: f64 },
}

impl Method {
    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            Method::Ssa => None,
            Method::ExitTime { epsilon } => Some(epsilon),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        match self.epsilon() {
            Some(e) if !(e >= 0.0 && e.is_finite()) => Err(HarnessError::InvalidEpsilon(e)),
            _ => Ok(()),
        }
    }
}

/// Raw results of `n` independent trajectories.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub method: Method,
    pub seed: u64,
    /// Exit times of the exited trajectories, in trajectory order.
    pub exit_times: Vec<f64>,
    pub n_censored: u64,
    pub counters: RngCounters,
    pub wall_seconds: f64,
}

impl Ensemble {
    pub fn n_exited(&self) -> u64 {
        self.exit_times.len() as u64
    }

    pub fn n_samples(&self) -> u64 {
        self.n_exited() + self.n_censored
    }

    /// Bins the exit times as a probability density on `grid`.
    ///
    /// Densities are normalised by the number of exited trajectories, so
    /// they integrate to one whenever the grid covers every sample.
    pub fn histogram(&self, grid: &BinGrid) -> Result<EnsembleHistogram, HarnessError> {
        if self.exit_times.is_empty() {
            return Err(HarnessError::AllCensored);
        }
        let mut counts = vec![0u64; grid.bins];
        let mut n_outside = 0;
        for &t in &self.exit_times {
            match grid.bin_of(t) {
                Some(b) => counts[b] += 1,
                None => n_outside += 1,
            }
        }
        let scale = 1.0 / (self.n_exited() as f64 * grid.width());
        Ok(EnsembleHistogram {
            grid: *grid,
            densities: counts.iter().map(|&c| c as f64 * scale).collect(),
            n_exited: self.n_exited(),
            n_censored: self.n_censored,
            n_outside,
            counters: self.counters,
        })
    }
}

fn trajectory(
    model: &Model,
    method: Method,
    seed: u64,
    id: u64,
) -> Result<(Option<f64>, RngCounters), ModelError> {
    let mut stream = RandomStream::new(seed, id);
    let exit_time = match method {
        Method::Ssa => {
            ssa::run_ssa(&model.system, &model.initial, &model.exit, &mut stream)?.exit_time
        }
        Method::ExitTime { epsilon } => {
            let out = ssa::run_timefree(&model.system, &model.initial, &model.exit, &mut stream)?;
            if out.exited() {
                let log = out.propensity_log.expect("time-free runs record a log");
                let groups = exit_time::partition(&log, epsilon);
                Some(exit_time::sample_exit_time(&groups, &mut stream))
            } else {
                None
            }
        }
    };
    Ok((exit_time, stream.counters()))
}

/// Runs `n` trajectories of `model` with `method`.
///
/// `workers` caps the thread count; `None` uses the global rayon pool.
pub fn run_ensemble(
    model: &Model,
    method: Method,
    n: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Ensemble, HarnessError> {
    if n == 0 {
        return Err(HarnessError::NoSamples);
    }
    method.validate()?;
    let start = Instant::now();
    let work = || {
        (0..n as u64)
            .into_par_iter()
            .map(|id| trajectory(model, method, seed, id))
            .collect::<Result<Vec<_>, _>>()
    };
    let outcomes = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| HarnessError::Workers(e.to_string()))?
            .install(work),
        None => work(),
    }?;

    let mut exit_times = Vec::with_capacity(n);
    let mut n_censored = 0;
    let mut counters = RngCounters::default();
    for (t, c) in outcomes {
        counters += c;
        match t {
            Some(t) => exit_times.push(t),
            None => n_censored += 1,
        }
    }
    Ok(Ensemble {
        method,
        seed,
        exit_times,
        n_censored,
        counters,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Uniform bins over `[t_min, t_max]`; the last bin is closed on the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub bins: usize,
}

impl BinGrid {
    pub fn new(t_min: f64, t_max: f64, bins: usize) -> Result<Self, HarnessError> {
        if bins == 0 {
            return Err(HarnessError::InvalidGrid("zero bins".into()));
        }
        if !(t_min.is_finite() && t_max.is_finite() && t_max > t_min) {
            return Err(HarnessError::InvalidGrid(format!(
                "range [{t_min}, {t_max}]"
            )));
        }
        Ok(Self { t_min, t_max, bins })
    }

    /// Grid spanning the pooled minimum and maximum exit times.
    pub fn pooled(ensembles: &[&Ensemble], bins: usize) -> Result<Self, HarnessError> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in ensembles.iter().flat_map(|e| e.exit_times.iter()) {
            lo = lo.min(*t);
            hi = hi.max(*t);
        }
        if lo > hi {
            return Err(HarnessError::AllCensored);
        }
        if hi == lo {
            hi = lo + 1.0;
        }
        Self::new(lo, hi, bins)
    }

    pub fn width(&self) -> f64 {
        (self.t_max - self.t_min) / self.bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        let w = self.width();
        (0..=self.bins)
            .map(|i| {
                if i == self.bins {
                    self.t_max
                } else {
                    self.t_min + i as f64 * w
                }
            })
            .collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        let w = self.width();
        (0..self.bins)
            .map(|i| self.t_min + (i as f64 + 0.5) * w)
            .collect()
    }

    pub fn bin_of(&self, t: f64) -> Option<usize> {
        if !(t >= self.t_min && t <= self.t_max) {
            return None;
        }
        let b = ((t - self.t_min) / self.width()) as usize;
        Some(b.min(self.bins - 1))
    }

    fn describe(&self) -> String {
        format!("[{}, {}] x {}", self.t_min, self.t_max, self.bins)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleHistogram {
    pub grid: BinGrid,
    pub densities: Vec<f64>,
    pub n_exited: u64,
    pub n_censored: u64,
    /// Exited samples that fell outside the grid.
    pub n_outside: u64,
    pub counters: RngCounters,
}

impl EnsembleHistogram {
    /// `sum density * width`.
    pub fn mass(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.grid.width()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetrics {
    pub l1: f64,
    pub l2: f64,
    pub per_bin: Vec<f64>,
}

/// Bin-width weighted l1 and l2 distances between two densities.
pub fn pointwise_error(
    a: &EnsembleHistogram,
    b: &EnsembleHistogram,
) -> Result<ErrorMetrics, HarnessError> {
    if a.grid != b.grid || a.densities.len() != b.densities.len() {
        return Err(HarnessError::GridMismatch {
            left: a.grid.describe(),
            right: b.grid.describe(),
        });
    }
    let w = a.grid.width();
    let per_bin: Vec<f64> = a
        .densities
        .iter()
        .zip(&b.densities)
        .map(|(x, y)| (x - y).abs())
        .collect();
    let l1 = per_bin.iter().sum::<f64>() * w;
    let l2 = (per_bin.iter().map(|d| d * d).sum::<f64>() * w).sqrt();
    Ok(ErrorMetrics { l1, l2, per_bin })
}

/// Paired SSA / exit-time run on a shared grid.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub epsilon: f64,
    pub ssa_seed: u64,
    /// Absent when the SSA side was loaded from a stored histogram.
    pub reference: Option<Ensemble>,
    pub method: Ensemble,
    pub reference_histogram: EnsembleHistogram,
    pub method_histogram: EnsembleHistogram,
    pub errors: ErrorMetrics,
    pub rho: f64,
    /// Two-sample KS test on the raw exit times, when both are available.
    pub ks: Option<KsResult>,
}

/// Seed of the exit-time ensemble paired with an SSA ensemble seeded `seed`.
pub fn method_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}

/// Runs SSA on `seed` and the exit-time method on `seed + 1`, then compares
/// them on a pooled grid of `bins` bins.
pub fn compare(
    model: &Model,
    epsilon: f64,
    n: usize,
    seed: u64,
    bins: usize,
    workers: Option<usize>,
) -> Result<Comparison, HarnessError> {
    let reference = run_ensemble(model, Method::Ssa, n, seed, workers)?;
    let method = run_ensemble(
        model,
        Method::ExitTime { epsilon },
        n,
        method_seed(seed),
        workers,
    )?;
    let grid = BinGrid::pooled(&[&reference, &method], bins)?;
    let reference_histogram = reference.histogram(&grid)?;
    let method_histogram = method.histogram(&grid)?;
    let errors = pointwise_error(&reference_histogram, &method_histogram)?;
    let rho = exit_time::rho(&method.counters, &reference.counters)?;
    let ks = stats::ks_two_sample(&reference.exit_times, &method.exit_times);
    Ok(Comparison {
        epsilon,
        ssa_seed: seed,
        reference: Some(reference),
        method,
        reference_histogram,
        method_histogram,
        errors,
        rho,
        ks: Some(ks),
    })
}

/// Like [`compare`], but against a previously binned SSA histogram whose
/// grid is reused as is. The exit-time ensemble runs on `seed + 1`.
pub fn compare_with_reference(
    model: &Model,
    epsilon: f64,
    n: usize,
    seed: u64,
    reference_histogram: EnsembleHistogram,
    workers: Option<usize>,
) -> Result<Comparison, HarnessError> {
    let method = run_ensemble(
        model,
        Method::ExitTime { epsilon },
        n,
        method_seed(seed),
        workers,
    )?;
    let method_histogram = method.histogram(&reference_histogram.grid)?;
    let errors = pointwise_error(&reference_histogram, &method_histogram)?;
    let rho = exit_time::rho(&method.counters, &reference_histogram.counters)?;
    Ok(Comparison {
        epsilon,
        ssa_seed: seed,
        reference: None,
        method,
        reference_histogram,
        method_histogram,
        errors,
        rho,
        ks: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub epsilon: f64,
    pub l1: f64,
    pub l2: f64,
    pub rho: f64,
    pub n_samples: u64,
    pub n_exited: u64,
    pub n_censored: u64,
    pub gamma_draws: u64,
    pub exp_draws: u64,
    pub wall_seconds: f64,
    /// `ln(e_prev / e) / ln(eps_prev / eps)` on l1 against the previous row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub reference: Ensemble,
    pub grid: BinGrid,
    pub records: Vec<ConvergenceRecord>,
}

/// Observed convergence order between two (epsilon, error) pairs.
pub fn observed_order(coarse: (f64, f64), fine: (f64, f64)) -> Option<f64> {
    let (e_coarse, err_coarse) = coarse;
    let (e_fine, err_fine) = fine;
    if e_fine <= 0.0 || err_fine <= 0.0 || err_coarse <= 0.0 {
        return None;
    }
    Some((err_coarse / err_fine).ln() / (e_coarse / e_fine).ln())
}

/// Error of the exit-time method against one fixed SSA reference for each
/// `epsilon` (strictly descending). Every method ensemble uses seed
/// `seed + 1`, so the rows differ only through `epsilon`.
pub fn convergence_study(
    model: &Model,
    epsilons: &[f64],
    n: usize,
    seed: u64,
    bins: usize,
    workers: Option<usize>,
) -> Result<ConvergenceStudy, HarnessError> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(HarnessError::EpsilonOrder);
    }
    for &e in epsilons {
        Method::ExitTime { epsilon: e }.validate()?;
    }
    let reference = run_ensemble(model, Method::Ssa, n, seed, workers)?;
    let methods = epsilons
        .iter()
        .map(|&epsilon| {
            run_ensemble(
                model,
                Method::ExitTime { epsilon },
                n,
                method_seed(seed),
                workers,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut pool: Vec<&Ensemble> = vec![&reference];
    pool.extend(methods.iter());
    let grid = BinGrid::pooled(&pool, bins)?;
    let reference_histogram = reference.histogram(&grid)?;

    let mut records: Vec<ConvergenceRecord> = Vec::with_capacity(methods.len());
    for (ensemble, &epsilon) in methods.iter().zip(epsilons) {
        let errors = pointwise_error(&reference_histogram, &ensemble.histogram(&grid)?)?;
        let order = records
            .last()
            .and_then(|prev| observed_order((prev.epsilon, prev.l1), (epsilon, errors.l1)));
        records.push(ConvergenceRecord {
            epsilon,
            l1: errors.l1,
            l2: errors.l2,
            rho: exit_time::rho(&ensemble.counters, &reference.counters)?,
            n_samples: ensemble.n_samples(),
            n_exited: ensemble.n_exited(),
            n_censored: ensemble.n_censored,
            gamma_draws: ensemble.counters.gamma,
            exp_draws: reference.counters.exponential,
            wall_seconds: ensemble.wall_seconds,
            order,
        });
    }
    Ok(ConvergenceStudy {
        reference,
        grid,
        records,
    })
}
