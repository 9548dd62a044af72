//! Offline and online MAP assimilation.
//!
//! The offline driver solves one integer program per window and chains the
//! windows through their end states. The online driver keeps a partial
//! trajectory of committed events, extends it one window of observations at
//! a time, rolls whole timesteps of commitments back when a window cannot be
//! explained, and completes the partial trajectory on request.
//!
//! Ties between equally probable trajectories are broken by the solver's
//! deterministic pivoting and branching order, so MAP trajectories are
//! reproducible but not canonical.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::encode::{
    self, decode, default_multiplicity, uncommitted_agents, Agency, Commitments, EncodeOptions, ObservationRows,
};
use crate::error::{Error, Result};
use crate::milp::{solve_milp_with, Budget, IntegerProgram, MilpLimits, MilpStatus, NoBudget};
use crate::model::{Actor, BehaviourModel, EventId, Observation, StateId, StateMultiset, Trajectory};

/// Outcome of one successful solve.
#[derive(Clone, Debug, PartialEq)]
pub struct Solved {
    pub trajectory: Trajectory,
    /// Program objective: log-probability of the new, uncommitted events.
    pub objective: f64,
    pub nodes: u64,
}

enum Outcome {
    Solved(Solved),
    Infeasible,
}

fn solve(
    program: &IntegerProgram,
    map: &encode::EncodingMap,
    limits: MilpLimits,
    budget: &mut dyn Budget,
) -> Result<Outcome> {
    let r = solve_milp_with(program, limits, budget)?;
    match r.status {
        MilpStatus::Optimal => {
            let values = r.incumbent.as_deref().unwrap_or_default();
            let trajectory = decode(values, map)?;
            Ok(Outcome::Solved(Solved { trajectory, objective: r.objective, nodes: r.nodes_explored }))
        }
        MilpStatus::Infeasible => Ok(Outcome::Infeasible),
        MilpStatus::Timeout => Err(Error::BudgetExhausted { nodes: r.nodes_explored }),
    }
}

/// MAP trajectory over `1..=horizon` given `observations`.
pub fn map_offline(
    model: &BehaviourModel,
    initial: &StateMultiset,
    observations: &[Observation],
    horizon: usize,
    multiplicity: u32,
) -> Result<Trajectory> {
    map_offline_with(model, initial, observations, horizon, multiplicity, MilpLimits::default(), &mut NoBudget)
        .map(|s| s.trajectory)
}

pub fn map_offline_with(
    model: &BehaviourModel,
    initial: &StateMultiset,
    observations: &[Observation],
    horizon: usize,
    multiplicity: u32,
    limits: MilpLimits,
    budget: &mut dyn Budget,
) -> Result<Solved> {
    if let Some(o) = observations.iter().find(|o| o.timestep == 0 || o.timestep > horizon) {
        return Err(Error::Precondition(format!("observation at t={} lies outside 1..={horizon}", o.timestep)));
    }
    let (program, map) = encode::encode_offline(model, initial, observations, horizon, multiplicity)?;
    match solve(&program, &map, limits, budget)? {
        Outcome::Solved(s) => Ok(s),
        Outcome::Infeasible => Err(Error::Infeasible(format!(
            "no trajectory over 1..={horizon} satisfies the observations with multiplicity {multiplicity}"
        ))),
    }
}

/// Offline MAP over consecutive windows of `window` timesteps. Each window
/// only sees the observations up to its own end and keeps the events of the
/// earlier windows fixed, so a later window can turn out infeasible.
pub fn map_windowed(
    model: &BehaviourModel,
    initial: &StateMultiset,
    observations: &[Observation],
    horizon: usize,
    window: usize,
    multiplicity: u32,
    limits: MilpLimits,
    budget: &mut dyn Budget,
) -> Result<Solved> {
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    if let Some(o) = observations.iter().find(|o| o.timestep == 0 || o.timestep > horizon) {
        return Err(Error::Precondition(format!("observation at t={} lies outside 1..={horizon}", o.timestep)));
    }
    let mut committed = Commitments::new();
    let mut out = Solved { trajectory: Trajectory::new(initial.clone()), objective: 0.0, nodes: 0 };
    let mut start = 0;
    while start < horizon {
        let end = (start + window).min(horizon);
        let seen: Vec<Observation> = observations.iter().filter(|o| o.timestep <= end).cloned().collect();
        let steps: BTreeSet<usize> = (start + 1..=end).collect();
        let opts = EncodeOptions {
            horizon: end,
            multiplicity,
            committed: &committed,
            agency: Agency::Exact,
            observation_rows: ObservationRows::All,
            variable_steps: Some(&steps),
        };
        let (program, map) = encode::encode(model, initial, &seen, &opts)?;
        match solve(&program, &map, limits, budget)? {
            Outcome::Solved(s) => {
                committed = commitments_of(&s.trajectory);
                out.trajectory = s.trajectory;
                out.objective += s.objective;
                out.nodes += s.nodes;
            }
            Outcome::Infeasible => {
                return Err(Error::Infeasible(format!(
                    "window {}..={end} cannot extend the earlier windows with multiplicity {multiplicity}",
                    start + 1
                )))
            }
        }
        start = end;
    }
    Ok(out)
}

/// Settings of an online assimilation session.
#[derive(Clone, Debug, PartialEq)]
pub struct OnlineConfig {
    /// `None` uses [`default_multiplicity`].
    pub multiplicity: Option<u32>,
    /// Steps before the newest window that may still receive new events, in
    /// addition to every step after a hanging agent. `None` keeps all steps.
    pub lookback: Option<usize>,
    pub limits: MilpLimits,
}

/// Per-window statistics returned by [`AssimilationState::step_online`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub horizon: usize,
    pub rollbacks: u64,
    pub nodes: u64,
    pub new_events: u64,
}

/// What [`AssimilationState::commit_departure`] did for one hanging group.
#[derive(Clone, Debug, PartialEq)]
pub struct Departure {
    pub timestep: usize,
    pub state: StateId,
    pub count: u32,
    /// The exit event committed at `timestep + 1`, or `None` when the state
    /// has no unconditional event with an empty consequence.
    pub event: Option<EventId>,
}

/// A partial trajectory under construction.
#[derive(Clone, Debug, PartialEq)]
pub struct AssimilationState {
    pub initial: StateMultiset,
    pub committed: Commitments,
    /// Last timestep whose observations have been ingested.
    pub horizon: usize,
    pub observations: Vec<Observation>,
    pub rollback_count: u64,
    pub config: OnlineConfig,
}

impl AssimilationState {
    pub fn new(initial: StateMultiset, multiplicity: Option<u32>) -> Self {
        Self {
            initial,
            committed: Commitments::new(),
            horizon: 0,
            observations: Vec::new(),
            rollback_count: 0,
            config: OnlineConfig { multiplicity, lookback: None, limits: MilpLimits::default() },
        }
    }

    /// The committed events as a (partial) trajectory over `1..=horizon`.
    pub fn partial_trajectory(&self) -> Trajectory {
        let mut traj = Trajectory::new(self.initial.clone());
        traj.steps = alloc::vec![Default::default(); self.horizon];
        for (&(t, e), &n) in &self.committed {
            traj.steps[t - 1].add(e, n);
        }
        traj
    }

    fn multiplicity(&self, model: &BehaviourModel) -> u32 {
        self.config.multiplicity.unwrap_or_else(|| default_multiplicity(model, &self.initial))
    }

    fn variable_steps(&self, model: &BehaviourModel, horizon: usize) -> Option<BTreeSet<usize>> {
        let lookback = self.config.lookback?;
        let hanging = uncommitted_agents(model, &self.initial, &self.committed, self.horizon);
        let first_hanging = hanging[..self.horizon].iter().position(|m| !m.is_empty()).map(|t| t + 1);
        let from = first_hanging.unwrap_or(usize::MAX).min(horizon.saturating_sub(lookback) + 1).max(1);
        Some((from..=horizon).collect())
    }

    /// Removes every commitment at the latest committed timestep. Returns
    /// `false` when nothing was committed.
    pub fn rollback(&mut self) -> bool {
        let Some(&(t, _)) = self.committed.keys().next_back() else {
            return false;
        };
        self.committed.retain(|&(s, _), _| s < t);
        self.rollback_count += 1;
        true
    }

    /// Ingests the observations of timesteps `horizon + 1 ..= new_horizon`
    /// and commits the MAP extension of the partial trajectory, rolling back
    /// as needed.
    pub fn step_online(
        &mut self,
        model: &BehaviourModel,
        new_obs: &[Observation],
        new_horizon: usize,
        budget: &mut dyn Budget,
    ) -> Result<StepReport> {
        if new_horizon <= self.horizon {
            return Err(Error::Precondition(format!(
                "window must extend the processed horizon {} (got {new_horizon})",
                self.horizon
            )));
        }
        if let Some(o) = new_obs.iter().find(|o| o.timestep <= self.horizon || o.timestep > new_horizon) {
            return Err(Error::Precondition(format!(
                "observation at t={} lies outside {}..={new_horizon}",
                o.timestep,
                self.horizon + 1
            )));
        }
        self.observations.extend_from_slice(new_obs);
        let before = self.rollback_count;
        let mut nodes = 0;
        loop {
            let steps = self.variable_steps(model, new_horizon);
            let opts = EncodeOptions {
                horizon: new_horizon,
                multiplicity: self.multiplicity(model),
                committed: &self.committed,
                agency: Agency::AtMost,
                observation_rows: ObservationRows::SkipCommitted,
                variable_steps: steps.as_ref(),
            };
            let (program, map) = encode::encode(model, &self.initial, &self.observations, &opts)?;
            match solve(&program, &map, self.config.limits, budget)? {
                Outcome::Solved(s) => {
                    nodes += s.nodes;
                    let old: u64 = self.committed.values().map(|&n| n as u64).sum();
                    self.committed = commitments_of(&s.trajectory);
                    let new: u64 = self.committed.values().map(|&n| n as u64).sum();
                    self.horizon = new_horizon;
                    return Ok(StepReport {
                        horizon: new_horizon,
                        rollbacks: self.rollback_count - before,
                        nodes,
                        new_events: new - old,
                    });
                }
                Outcome::Infeasible => {
                    if !self.rollback() {
                        return Err(Error::Inconsistent);
                    }
                }
            }
        }
    }

    /// Commits an exit for hanging agents whose chance of evading
    /// observation, `(1 − observe_prob)^(horizon − t)`, is below `threshold`.
    pub fn commit_departure(
        &mut self,
        model: &BehaviourModel,
        threshold: f64,
        observe_prob: f64,
    ) -> Result<Vec<Departure>> {
        if !(observe_prob > 0.0 && observe_prob <= 1.0) {
            return Err(Error::Config("observation probability must lie in (0, 1]".into()));
        }
        let hanging = uncommitted_agents(model, &self.initial, &self.committed, self.horizon);
        let mut out = Vec::new();
        for (t, agents) in hanging.iter().enumerate().take(self.horizon) {
            let evasion = libm::pow(1.0 - observe_prob, (self.horizon - t) as f64);
            if evasion >= threshold {
                continue;
            }
            for (state, count) in agents.iter() {
                let event = exit_event(model, state);
                if let Some(e) = event {
                    *self.committed.entry((t + 1, e)).or_insert(0) += count;
                }
                out.push(Departure { timestep: t, state, count, event });
            }
        }
        Ok(out)
    }

    /// Extends the partial trajectory to a complete one over `1..=horizon`
    /// that satisfies every ingested observation. Rolls back commitments if
    /// no completion exists.
    pub fn complete(&mut self, model: &BehaviourModel, budget: &mut dyn Budget) -> Result<Solved> {
        loop {
            let opts = EncodeOptions {
                horizon: self.horizon,
                multiplicity: self.multiplicity(model),
                committed: &self.committed,
                agency: Agency::Exact,
                observation_rows: ObservationRows::All,
                variable_steps: None,
            };
            let (program, map) = encode::encode(model, &self.initial, &self.observations, &opts)?;
            match solve(&program, &map, self.config.limits, budget)? {
                Outcome::Solved(s) => return Ok(s),
                Outcome::Infeasible => {
                    if !self.rollback() {
                        return Err(Error::Inconsistent);
                    }
                }
            }
        }
    }
}

/// Most probable unconditional event of `state` that removes the agent.
fn exit_event(model: &BehaviourModel, state: StateId) -> Option<EventId> {
    model
        .events_of(state)
        .iter()
        .map(|&e| &model.events()[e.index()])
        .filter(|ev| ev.consequence.is_empty() && ev.requires.is_empty() && ev.forbids.is_empty())
        .filter(|ev| matches!(ev.actor, Actor::Agent(_)))
        .max_by(|a, b| a.probability.total_cmp(&b.probability).then(b.id.cmp(&a.id)))
        .map(|ev| ev.id)
}

fn commitments_of(traj: &Trajectory) -> Commitments {
    let mut out = Commitments::new();
    for (i, step) in traj.steps.iter().enumerate() {
        for (e, n) in step.iter() {
            if n > 0 {
                out.insert((i + 1, e), n);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::model::{AgentEvent, FeasibilityMode, ModelEvent, StateDomain};

    fn s(i: u32) -> StateId {
        StateId(i)
    }

    /// S → X (0.9) or Y (0.1); X and Y absorb.
    fn garden_path() -> (BehaviourModel, [EventId; 4]) {
        let mut b = BehaviourModel::builder(StateDomain::new(3).unwrap());
        let sx = b.event(AgentEvent::new(s(0), StateMultiset::singleton(s(1), 1), 0.9));
        let sy = b.event(AgentEvent::new(s(0), StateMultiset::singleton(s(2), 1), 0.1));
        let xx = b.event(AgentEvent::new(s(1), StateMultiset::singleton(s(1), 1), 1.0));
        let yy = b.event(AgentEvent::new(s(2), StateMultiset::singleton(s(2), 1), 1.0));
        (b.build().unwrap(), [sx, sy, xx, yy])
    }

    fn obs(t: usize, lower: u32, states: &[u32]) -> Observation {
        Observation::new(t, lower, None, states.iter().map(|&i| s(i))).unwrap()
    }

    #[test]
    fn deterministic_path_is_recovered() {
        let (m, [sx, _, xx, _]) = garden_path();
        let initial = StateMultiset::singleton(s(0), 1);
        let traj = map_offline(&m, &initial, &[obs(2, 1, &[1])], 2, 1).unwrap();
        let one = |e| [(e, 1)].into_iter().collect::<ModelEvent>();
        assert_eq!(traj.steps, [one(sx), one(xx)]);
    }

    #[test]
    fn garden_path_rolls_back_once() {
        let (m, [sx, sy, _, yy]) = garden_path();
        let mut st = AssimilationState::new(StateMultiset::singleton(s(0), 1), None);
        st.step_online(&m, &[obs(1, 1, &[1, 2])], 1, &mut NoBudget).unwrap();
        assert_eq!(st.committed, Commitments::from([((1, sx), 1)]));
        let r = st.step_online(&m, &[obs(2, 1, &[2])], 2, &mut NoBudget).unwrap();
        assert_eq!(r.rollbacks, 1);
        assert_eq!(st.rollback_count, 1);
        assert_eq!(st.committed, Commitments::from([((1, sy), 1), ((2, yy), 1)]));
        let done = st.complete(&m, &mut NoBudget).unwrap().trajectory;
        assert!(m.check_feasible(&done, FeasibilityMode::Complete).is_empty());
        assert!(m.satisfies(&done, &st.observations).is_empty());
    }

    #[test]
    fn inconsistent_stream_is_a_hard_error() {
        let (m, _) = garden_path();
        let mut st = AssimilationState::new(StateMultiset::singleton(s(0), 1), Some(2));
        st.step_online(&m, &[obs(1, 1, &[1, 2])], 1, &mut NoBudget).unwrap();
        let err = st.step_online(&m, &[obs(2, 2, &[1, 2])], 2, &mut NoBudget).unwrap_err();
        assert_eq!(err, Error::Inconsistent);
        assert_eq!(st.rollback_count, 1);
        assert!(st.committed.is_empty());
    }

    #[test]
    fn empty_window_commits_nothing() {
        let (m, _) = garden_path();
        let mut st = AssimilationState::new(StateMultiset::singleton(s(0), 1), None);
        let r = st.step_online(&m, &[], 1, &mut NoBudget).unwrap();
        assert_eq!((r.new_events, r.rollbacks, st.horizon), (0, 0, 1));
        assert!(st.committed.is_empty());
    }

    /// States 0..=5 in a line: move right or stay with probability 1/2; the
    /// last state only stays.
    fn corridor() -> BehaviourModel {
        let mut b = BehaviourModel::builder(StateDomain::new(6).unwrap());
        for i in 0..5 {
            b.event(AgentEvent::new(s(i), StateMultiset::singleton(s(i + 1), 1), 0.5));
            b.event(AgentEvent::new(s(i), StateMultiset::singleton(s(i), 1), 0.5));
        }
        b.event(AgentEvent::new(s(5), StateMultiset::singleton(s(5), 1), 1.0));
        b.build().unwrap()
    }

    #[test]
    fn hanging_agent_is_moved_forward() {
        let m = corridor();
        let mut st = AssimilationState::new(StateMultiset::singleton(s(0), 1), None);
        let windows = [vec![], vec![obs(2, 1, &[2])], vec![], vec![], vec![obs(5, 1, &[4])]];
        for (i, w) in windows.iter().enumerate() {
            st.step_online(&m, w, i + 1, &mut NoBudget).unwrap();
        }
        let steps: BTreeSet<usize> = st.committed.keys().map(|&(t, _)| t).collect();
        assert_eq!(steps, BTreeSet::from([1, 2, 3, 4, 5]));
        let partial = st.partial_trajectory();
        assert!(m.check_feasible(&partial, FeasibilityMode::Partial).is_empty());
        assert!(m.satisfies(&partial, &st.observations).is_empty());
        assert_eq!(st.rollback_count, 0);
    }

    #[test]
    fn completion_without_commitments_equals_offline() {
        let m = corridor();
        let initial: StateMultiset = [(s(0), 2)].into_iter().collect();
        let o = [obs(3, 1, &[2])];
        let offline = map_offline(&m, &initial, &o, 3, 2).unwrap();
        let mut st = AssimilationState::new(initial, Some(2));
        st.observations = o.to_vec();
        st.horizon = 3;
        let done = st.complete(&m, &mut NoBudget).unwrap().trajectory;
        assert!((m.log_probability(&done) - m.log_probability(&offline)).abs() < 1e-9);
    }

    #[test]
    fn departure_thresholds() {
        let m = corridor();
        // Corridor states have no exit event: the departure is reported but
        // not committed.
        let mut st = AssimilationState::new(StateMultiset::singleton(s(0), 1), None);
        st.step_online(&m, &[], 1, &mut NoBudget).unwrap();
        assert!(st.commit_departure(&m, 0.0, 2.0 / 3.0).unwrap().is_empty());
        let d = st.commit_departure(&m, 1.0, 2.0 / 3.0).unwrap();
        assert_eq!(d, [Departure { timestep: 0, state: s(0), count: 1, event: None }]);
        assert!(st.committed.is_empty());
        assert!(st.commit_departure(&m, 0.5, 0.0).is_err());

        let mut b = BehaviourModel::builder(StateDomain::new(1).unwrap());
        let die = b.event(AgentEvent::new(s(0), StateMultiset::new(), 0.1));
        b.event(AgentEvent::new(s(0), StateMultiset::singleton(s(0), 1), 0.9));
        let m = b.build().unwrap();
        let mut st = AssimilationState::new(StateMultiset::singleton(s(0), 1), None);
        for t in 1..=5 {
            st.step_online(&m, &[], t, &mut NoBudget).unwrap();
        }
        // (1/3)^5 ≈ 0.00412
        assert!(st.commit_departure(&m, 0.004, 2.0 / 3.0).unwrap().is_empty());
        let d = st.commit_departure(&m, 0.005, 2.0 / 3.0).unwrap();
        assert_eq!(d, [Departure { timestep: 0, state: s(0), count: 1, event: Some(die) }]);
        assert_eq!(st.committed, Commitments::from([((1, die), 1)]));
        let done = st.complete(&m, &mut NoBudget).unwrap().trajectory;
        assert!(done.steps[1..].iter().all(ModelEvent::is_empty));
    }

    #[test]
    fn windowed_offline_chains_windows() {
        let m = corridor();
        let initial = StateMultiset::singleton(s(0), 1);
        let o = [obs(2, 1, &[2]), obs(4, 1, &[4])];
        let whole = map_windowed(&m, &initial, &o, 4, 10, 1, MilpLimits::default(), &mut NoBudget).unwrap();
        let split = map_windowed(&m, &initial, &o, 4, 2, 1, MilpLimits::default(), &mut NoBudget).unwrap();
        assert_eq!(whole.trajectory, split.trajectory);
        assert!(m.satisfies(&split.trajectory, &o).is_empty());
        // A window that commits to X cannot explain a later Y.
        let (g, _) = garden_path();
        let o = [obs(1, 1, &[1, 2]), obs(2, 1, &[2])];
        let err = map_windowed(&g, &StateMultiset::singleton(s(0), 1), &o, 2, 1, 1, MilpLimits::default(), &mut NoBudget)
            .unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)));
    }
}
