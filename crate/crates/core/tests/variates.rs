//! Distributional checks of the variate source and the Gamma-sum sampler
//! against brute-force sums of exponential draws.

use exitsim::exit_time::{partition_rates, sample_exit_time};
use exitsim::stats::{ks_two_sample, mean, standard_error};
use exitsim::RandomStream;

const N: usize = 10_000;

fn exponential_sum(stream: &mut RandomStream, rates: &[f64]) -> f64 {
    rates.iter().map(|&r| stream.exponential(r)).sum()
}

#[test]
fn exponential_mean_within_three_standard_errors() {
    let rate = 2.7;
    let mut s = RandomStream::new(101, 0);
    let xs: Vec<f64> = (0..100_000).map(|_| s.exponential(rate)).collect();
    let (m, se) = (mean(&xs), standard_error(&xs));
    assert!((m - 1.0 / rate).abs() < 3.0 * se, "mean {m} se {se}");
    assert!(xs.iter().all(|&x| x >= 0.0));
    assert_eq!(s.counters().exponential, 100_000);
}

#[test]
fn erlang_mean_within_three_standard_errors() {
    let mut s = RandomStream::new(102, 0);
    let xs: Vec<f64> = (0..100_000).map(|_| s.gamma(0.5, 3)).collect();
    let (m, se) = (mean(&xs), standard_error(&xs));
    assert!((m - 1.5).abs() < 3.0 * se, "mean {m} se {se}");
    assert_eq!(s.counters().gamma, 100_000);
}

#[test]
fn shape_one_gamma_is_exponential() {
    let rate = 1.7;
    let mut a = RandomStream::new(103, 0);
    let mut b = RandomStream::new(103, 1);
    let g: Vec<f64> = (0..N).map(|_| a.gamma(1.0 / rate, 1)).collect();
    let e: Vec<f64> = (0..N).map(|_| b.exponential(rate)).collect();
    let ks = ks_two_sample(&g, &e);
    assert!(ks.accepts(), "{ks:?}");
}

#[test]
fn erlang_matches_sum_of_exponentials_for_shapes_two_to_eight() {
    let rate = 3.0;
    for shape in 2..=8u64 {
        let mut a = RandomStream::new(104, shape);
        let mut b = RandomStream::new(105, shape);
        let g: Vec<f64> = (0..N).map(|_| a.gamma(1.0 / rate, shape)).collect();
        let rates = vec![rate; shape as usize];
        let e: Vec<f64> = (0..N).map(|_| exponential_sum(&mut b, &rates)).collect();
        let ks = ks_two_sample(&g, &e);
        assert!(ks.accepts(), "shape {shape}: {ks:?}");
    }
}

#[test]
fn single_group_sampler_is_erlang_mean() {
    let groups = partition_rates(&[2.0, 2.0, 2.0], 0.0);
    assert_eq!(groups.len(), 1);
    let mut s = RandomStream::new(106, 0);
    let xs: Vec<f64> = (0..100_000)
        .map(|_| sample_exit_time(&groups, &mut s))
        .collect();
    let (m, se) = (mean(&xs), standard_error(&xs));
    assert!((m - 1.5).abs() < 3.0 * se, "mean {m} se {se}");
}

#[test]
fn single_rate_group_is_exponential() {
    let groups = partition_rates(&[0.8], 0.3);
    let mut a = RandomStream::new(107, 0);
    let mut b = RandomStream::new(107, 1);
    let x: Vec<f64> = (0..N).map(|_| sample_exit_time(&groups, &mut a)).collect();
    let y: Vec<f64> = (0..N).map(|_| b.exponential(0.8)).collect();
    assert!(ks_two_sample(&x, &y).accepts());
}

#[test]
fn zero_epsilon_sampler_matches_brute_force_sum() {
    let rates = [4.0, 2.5, 1.7, 1.0, 0.6];
    let groups = partition_rates(&rates, 0.0);
    assert_eq!(groups.len(), rates.len());
    let mut a = RandomStream::new(108, 0);
    let mut b = RandomStream::new(109, 0);
    let x: Vec<f64> = (0..N).map(|_| sample_exit_time(&groups, &mut a)).collect();
    let y: Vec<f64> = (0..N).map(|_| exponential_sum(&mut b, &rates)).collect();
    let ks = ks_two_sample(&x, &y);
    assert!(ks.accepts(), "{ks:?}");
}

#[test]
fn grouped_sampler_preserves_the_mean() {
    let rates = [9.0, 8.0, 6.5, 4.0, 3.9, 2.0, 1.1, 1.0];
    let exact: f64 = rates.iter().map(|r| 1.0 / r).sum();
    for eps in [0.1, 0.5, 1.0] {
        let groups = partition_rates(&rates, eps);
        assert!((groups.expected_time() - exact).abs() < 1e-12);
        let mut s = RandomStream::new(110, (eps * 100.0) as u64);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| sample_exit_time(&groups, &mut s))
            .collect();
        let (m, se) = (mean(&xs), standard_error(&xs));
        assert!(
            (m - exact).abs() < 3.0 * se,
            "eps {eps}: mean {m} vs {exact}, se {se}"
        );
    }
}
