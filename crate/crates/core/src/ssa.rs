//! Direct-method stochastic simulation run to an exit boundary.
//!
//! [`run_ssa`] is the classical algorithm: each step draws an exponential
//! holding time from the total propensity and a reaction index from the
//! per-reaction propensities. [`run_timefree`] walks the same jump chain
//! without drawing holding times, recording the total propensity before each
//! firing so the exit time can be reconstructed afterwards.

use crate::model::{ExitCondition, ModelError, ReactionSystem, SystemState};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    /// The exit condition holds at the final state.
    Exited,
    /// Total propensity reached zero before the boundary.
    Absorbed,
    /// `max_steps` firings without reaching the boundary.
    StepLimit,
}

/// Total propensities `a_0(X_i)` in firing order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropensityLog {
    lambdas: Vec<f64>,
}

impl PropensityLog {
    /// # Panics
    /// If any entry is not a positive finite number.
    pub fn new(lambdas: Vec<f64>) -> Self {
        assert!(
            lambdas.iter().all(|&l| l > 0.0 && l.is_finite()),
            "propensity log entries must be positive"
        );
        Self { lambdas }
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Mean of the exact exit-time law, `sum 1/lambda_i`.
    pub fn expected_time(&self) -> f64 {
        self.lambdas.iter().map(|l| l.recip()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub status: TrajectoryStatus,
    /// Accumulated time; only set by [`run_ssa`] on an exited trajectory.
    pub exit_time: Option<f64>,
    /// Number of reactions fired.
    pub steps: u64,
    /// Only set by [`run_timefree`].
    pub propensity_log: Option<PropensityLog>,
    pub final_state: SystemState,
}

impl TrajectoryOutcome {
    pub fn exited(&self) -> bool {
        self.status == TrajectoryStatus::Exited
    }
}

pub fn run_ssa(
    system: &ReactionSystem,
    initial: &SystemState,
    exit: &ExitCondition,
    stream: &mut RandomStream,
) -> Result<TrajectoryOutcome, ModelError> {
    simulate(system, initial, exit, stream, true, &mut |_| {})
}

pub fn run_timefree(
    system: &ReactionSystem,
    initial: &SystemState,
    exit: &ExitCondition,
    stream: &mut RandomStream,
) -> Result<TrajectoryOutcome, ModelError> {
    simulate(system, initial, exit, stream, false, &mut |_| {})
}

/// [`run_ssa`] calling `visit` on the initial state and after every firing.
pub fn run_ssa_observed(
    system: &ReactionSystem,
    initial: &SystemState,
    exit: &ExitCondition,
    stream: &mut RandomStream,
    visit: &mut dyn FnMut(&SystemState),
) -> Result<TrajectoryOutcome, ModelError> {
    simulate(system, initial, exit, stream, true, visit)
}

/// [`run_timefree`] calling `visit` on the initial state and after every firing.
pub fn run_timefree_observed(
    system: &ReactionSystem,
    initial: &SystemState,
    exit: &ExitCondition,
    stream: &mut RandomStream,
    visit: &mut dyn FnMut(&SystemState),
) -> Result<TrajectoryOutcome, ModelError> {
    simulate(system, initial, exit, stream, false, visit)
}

fn simulate(
    system: &ReactionSystem,
    initial: &SystemState,
    exit: &ExitCondition,
    stream: &mut RandomStream,
    timed: bool,
    visit: &mut dyn FnMut(&SystemState),
) -> Result<TrajectoryOutcome, ModelError> {
    let mut state = initial.clone();
    let mut propensities = vec![0.0; system.reactions().len()];
    let mut lambdas = Vec::new();
    let mut steps = 0u64;
    visit(&state);

    let status = loop {
        if exit.is_met(&state) {
            break TrajectoryStatus::Exited;
        }
        let a0 = system.fill_propensities(&state, &mut propensities);
        if a0 <= 0.0 {
            break TrajectoryStatus::Absorbed;
        }
        if steps >= exit.max_steps {
            break TrajectoryStatus::StepLimit;
        }
        if timed {
            let tau = stream.exponential(a0);
            state.advance(tau);
        } else {
            lambdas.push(a0);
        }
        let j = stream.discrete_index(&propensities);
        state.apply_in_place(&system.reactions()[j], j)?;
        steps += 1;
        visit(&state);
    };

    let exit_time = (timed && status == TrajectoryStatus::Exited).then_some(state.time);
    let propensity_log = (!timed).then_some(PropensityLog { lambdas });
    Ok(TrajectoryOutcome {
        status,
        exit_time,
        steps,
        propensity_log,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sir_reference, sir_system, Comparator, Reaction};

    #[test]
    fn sir_exits_after_enough_recoveries() {
        let model = sir_reference();
        let mut exited = 0;
        for id in 0..50 {
            let mut stream = RandomStream::new(1, id);
            let out = run_ssa(&model.system, &model.initial, &model.exit, &mut stream).unwrap();
            assert_eq!(out.final_state.counts.iter().sum::<u64>(), 100);
            match out.status {
                TrajectoryStatus::Exited => {
                    exited += 1;
                    assert!(out.steps >= 85);
                    assert!(out.final_state.counts[2] >= 85);
                    assert!(out.exit_time.unwrap() > 0.0);
                }
                TrajectoryStatus::Absorbed => {
                    assert_eq!(out.final_state.counts[1], 0);
                    assert!(out.exit_time.is_none());
                }
                TrajectoryStatus::StepLimit => panic!("SIR cannot run forever"),
            }
            let c = stream.counters();
            assert_eq!(c.exponential, out.steps);
            assert_eq!(c.uniform, out.steps);
            assert_eq!(c.gamma, 0);
        }
        assert!(exited > 0);
    }

    #[test]
    fn zero_rates_absorb_immediately() {
        let r = Reaction::new(0.0, &[(0, 1)], &[(1, 1)], 2).unwrap();
        let system = ReactionSystem::new(&["A", "B"], vec![r], 10).unwrap();
        let exit = ExitCondition::new(&system, 1, Comparator::AtLeast, 5, 100).unwrap();
        let out = run_ssa(
            &system,
            &SystemState::new(vec![10, 0]),
            &exit,
            &mut RandomStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(out.status, TrajectoryStatus::Absorbed);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn exit_already_met_at_start() {
        let system = sir_system(1.5, 1.0, 100).unwrap();
        let exit = ExitCondition::new(&system, 2, Comparator::AtLeast, 0, 100).unwrap();
        let initial = SystemState::new(vec![95, 5, 0]);
        let out = run_ssa(&system, &initial, &exit, &mut RandomStream::new(0, 0)).unwrap();
        assert_eq!(out.status, TrajectoryStatus::Exited);
        assert_eq!(out.steps, 0);
        assert_eq!(out.exit_time, Some(0.0));
    }

    #[test]
    fn step_limit_guard() {
        let model = sir_reference();
        let exit = ExitCondition {
            max_steps: 3,
            ..model.exit
        };
        let mut stream = RandomStream::new(4, 0);
        let out = run_timefree(&model.system, &model.initial, &exit, &mut stream).unwrap();
        assert_eq!(out.status, TrajectoryStatus::StepLimit);
        assert_eq!(out.steps, 3);
        assert_eq!(out.propensity_log.unwrap().len(), 3);
    }

    #[test]
    fn timefree_log_is_bounded_and_draws_no_exponentials() {
        let model = sir_reference();
        let bound = 100.0 * (1.5 + 1.0);
        for id in 0..50 {
            let mut stream = RandomStream::new(2, id);
            let out =
                run_timefree(&model.system, &model.initial, &model.exit, &mut stream).unwrap();
            let log = out.propensity_log.as_ref().unwrap();
            assert_eq!(log.len() as u64, out.steps);
            assert!(log.lambdas().iter().all(|&l| l > 0.0 && l <= bound));
            assert!(out.exit_time.is_none());
            assert_eq!(stream.counters().exponential, 0);
            assert_eq!(stream.counters().uniform, out.steps);
        }
    }

    #[test]
    fn absorbed_log_stops_before_zero_propensity() {
        // I -> R only: absorbs once I = 0, exit R >= 10 unreachable from I = 3.
        let system = ReactionSystem::new(
            &["I", "R"],
            vec![Reaction::new(1.0, &[(0, 1)], &[(1, 1)], 2).unwrap()],
            10,
        )
        .unwrap();
        let exit = ExitCondition::new(&system, 1, Comparator::AtLeast, 10, 100).unwrap();
        let out = run_timefree(
            &system,
            &SystemState::new(vec![3, 0]),
            &exit,
            &mut RandomStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(out.status, TrajectoryStatus::Absorbed);
        assert_eq!(out.steps, 3);
        let lambdas = out.propensity_log.unwrap().lambdas().to_vec();
        assert_eq!(lambdas, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn timed_and_timefree_share_the_jump_chain() {
        let model = sir_reference();
        let mut timed = Vec::new();
        let mut free = Vec::new();
        let a = run_ssa_observed(
            &model.system,
            &model.initial,
            &model.exit,
            &mut RandomStream::new(9, 1),
            &mut |s| timed.push(s.counts.clone()),
        )
        .unwrap();
        let b = run_timefree_observed(
            &model.system,
            &model.initial,
            &model.exit,
            &mut RandomStream::new(9, 1),
            &mut |s| free.push(s.counts.clone()),
        )
        .unwrap();
        assert_eq!(timed, free);
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.status, b.status);
    }
}
