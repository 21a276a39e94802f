//! Exit-time reconstruction from a time-free trajectory.
//!
//! The exit time of a trajectory that fired `n` reactions is the sum of `n`
//! independent exponentials with rates `lambda_1..lambda_n`. Rates within a
//! relative tolerance `epsilon` of each other are pooled into one group,
//! represented by the harmonic mean `lambda_tilde` of its members and its
//! size `n_k`; the group's contribution is then one Erlang(`n_k`,
//! `lambda_tilde`) variate. Pooling two rates `l +- e` perturbs the Laplace
//! transform of the sum by `O(e^2)`, and the harmonic mean keeps the expected
//! exit time exact.

use thiserror::Error;

use crate::rng::{RandomStream, RngCounters};
use crate::ssa::PropensityLog;

#[derive(Debug, Error, PartialEq)]
pub enum ExitTimeError {
    #[error("the reference ensemble drew no exponential variates; rho is undefined")]
    NoExponentialDraws,
}

/// One block of pooled rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Group {
    /// Harmonic mean of the member rates.
    pub lambda_tilde: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedPropensities {
    groups: Vec<Group>,
    epsilon: f64,
}

impl GroupedPropensities {
    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Number of groups `m`, which is also the number of Gamma draws per sample.
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Number of rates covered, `sum n_k`.
    pub fn total_count(&self) -> u64 {
        self.groups.iter().map(|g| g.count).sum()
    }

    /// `sum n_k / lambda_tilde_k`, equal to `sum 1/lambda_i` over the input.
    pub fn expected_time(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.count as f64 / g.lambda_tilde)
            .sum()
    }
}

/// Greedy prefix partition of the rates sorted in descending order.
///
/// The leader `L` of each group is the largest rate not yet assigned; the
/// group takes every remaining rate `a >= L - epsilon * L`.
///
/// # Panics
/// If `epsilon` is negative or NaN.
pub fn partition(log: &PropensityLog, epsilon: f64) -> GroupedPropensities {
    partition_rates(log.lambdas(), epsilon)
}

/// [`partition`] over a plain slice of positive rates.
pub fn partition_rates(lambdas: &[f64], epsilon: f64) -> GroupedPropensities {
    assert!(epsilon >= 0.0, "epsilon must be >= 0, got {epsilon}");
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));

    let mut groups = Vec::new();
    let mut rest = sorted.as_slice();
    while let Some(&leader) = rest.first() {
        let threshold = leader - epsilon * leader;
        let size = rest.iter().take_while(|&&a| a >= threshold).count();
        let (block, tail) = rest.split_at(size);
        let inverse_mean = block.iter().map(|l| l.recip()).sum::<f64>() / size as f64;
        groups.push(Group {
            lambda_tilde: inverse_mean.recip(),
            count: size as u64,
        });
        rest = tail;
    }
    GroupedPropensities { groups, epsilon }
}

/// One exit-time sample: the sum of one Erlang variate per group.
///
/// An empty grouping (a trajectory that fired nothing) gives 0.
pub fn sample_exit_time(groups: &GroupedPropensities, stream: &mut RandomStream) -> f64 {
    groups
        .groups
        .iter()
        .map(|g| stream.gamma(g.lambda_tilde.recip(), g.count))
        .sum()
}

/// Ratio of Gamma draws made by the method ensemble to exponential draws made
/// by the reference SSA ensemble.
pub fn rho(method: &RngCounters, reference: &RngCounters) -> Result<f64, ExitTimeError> {
    if reference.exponential == 0 {
        return Err(ExitTimeError::NoExponentialDraws);
    }
    Ok(method.gamma as f64 / reference.exponential as f64)
}
