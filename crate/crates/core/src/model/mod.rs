//! The event calculus.
//!
//! An agent event `(Φ | ψ, R, R̄)` is one behaviour option of an agent in
//! state `ψ`: it can be expressed when every state in `R` is occupied and every
//! state in `R̄` is empty, and it replaces the acting agent by the multiset `Φ`.
//! A model event is a multiset of agent events executed in one timestep, and a
//! trajectory is an initial state plus one model event per timestep.

mod calculus;
mod multiset;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use calculus::{FeasibilityMode, Violation, ViolationKind};
pub use multiset::StateMultiset;

use crate::error::{Error, Result};

/// Tolerance of the per-environment probability normalization check.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Environments are enumerated exhaustively; actors with more distinct
/// condition states than this are rejected by the normalization check.
const MAX_CONDITION_STATES: usize = 20;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub u32);

impl EventId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// The finite set of agent states, `0..size`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateDomain {
    size: usize,
    labels: Option<Vec<String>>,
}

impl StateDomain {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidModel("state domain must be non-empty".into()));
        }
        Ok(Self { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidModel("state domain must be non-empty".into()));
        }
        let distinct: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
        if distinct.len() != labels.len() {
            return Err(Error::InvalidModel("state labels must be distinct".into()));
        }
        Ok(Self { size: labels.len(), labels: Some(labels) })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, state: StateId) -> bool {
        state.index() < self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, state: StateId) -> Option<&str> {
        self.labels.as_ref().and_then(|l| l.get(state.index())).map(String::as_str)
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> {
        (0..self.size as u32).map(StateId)
    }
}

/// Who expresses an event.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Actor {
    /// An ordinary agent in the given state; the agent is consumed.
    Agent(StateId),
    /// A zero-energy injector. It is never represented as an agent, is not
    /// consumed, and only acts at the timesteps it is scheduled for.
    Injector,
}

/// One behaviour option `(Φ | ψ, R, R̄)` with its probability.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentEvent {
    pub id: EventId,
    pub actor: Actor,
    pub requires: BTreeSet<StateId>,
    pub forbids: BTreeSet<StateId>,
    pub consequence: StateMultiset,
    pub probability: f64,
}

impl AgentEvent {
    /// Unconditional event of an agent in state `actor`. The id is assigned
    /// when the event is added to a [`ModelBuilder`].
    pub fn new(actor: StateId, consequence: StateMultiset, probability: f64) -> Self {
        Self {
            id: EventId(0),
            actor: Actor::Agent(actor),
            requires: BTreeSet::new(),
            forbids: BTreeSet::new(),
            consequence,
            probability,
        }
    }

    pub fn requiring(mut self, states: impl IntoIterator<Item = StateId>) -> Self {
        self.requires.extend(states);
        self
    }

    pub fn forbidding(mut self, states: impl IntoIterator<Item = StateId>) -> Self {
        self.forbids.extend(states);
        self
    }

    pub fn actor_state(&self) -> Option<StateId> {
        match self.actor {
            Actor::Agent(s) => Some(s),
            Actor::Injector => None,
        }
    }

    pub fn log_probability(&self) -> f64 {
        libm::log(self.probability)
    }

    /// Whether the presence and absence conditions hold in `environment`.
    pub fn enabled_in(&self, environment: &StateMultiset) -> bool {
        self.requires.iter().all(|&s| environment.count(s) > 0)
            && self.forbids.iter().all(|&s| environment.count(s) == 0)
    }
}

/// A scheduled boundary-condition injection.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Injection {
    pub timestep: usize,
    pub event: EventId,
}

/// A multiset of agent events executed during one timestep.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ModelEvent {
    counts: BTreeMap<EventId, u32>,
}

impl ModelEvent {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, event: EventId) -> u32 {
        self.counts.get(&event).copied().unwrap_or(0)
    }

    pub fn add(&mut self, event: EventId, n: u32) {
        if n > 0 {
            *self.counts.entry(event).or_insert(0) += n;
        }
    }

    pub fn set(&mut self, event: EventId, n: u32) {
        if n == 0 {
            self.counts.remove(&event);
        } else {
            self.counts.insert(event, n);
        }
    }

    pub fn merge(&mut self, other: &ModelEvent) {
        for (&e, &n) in &other.counts {
            self.add(e, n);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (EventId, u32)> + '_ {
        self.counts.iter().map(|(&e, &n)| (e, n))
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(|&n| n as u64).sum()
    }
}

impl FromIterator<(EventId, u32)> for ModelEvent {
    fn from_iter<I: IntoIterator<Item = (EventId, u32)>>(iter: I) -> Self {
        let mut m = ModelEvent::new();
        for (e, n) in iter {
            m.add(e, n);
        }
        m
    }
}

/// Initial state `Ψ₀` plus the model events of steps `1..=n`.
///
/// `steps[0]` holds the model event of the step from `t = 0` to `t = 1`.
/// Feasibility is a checked property, so partial and infeasible trajectories
/// are representable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trajectory {
    pub initial: StateMultiset,
    pub steps: Vec<ModelEvent>,
}

impl Trajectory {
    pub fn new(initial: StateMultiset) -> Self {
        Self { initial, steps: Vec::new() }
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// Model event of step `t` (1-based).
    pub fn step(&self, t: usize) -> Option<&ModelEvent> {
        t.checked_sub(1).and_then(|i| self.steps.get(i))
    }

    /// Appends the steps of `other`; the initial state of `other` is ignored.
    pub fn concat(&self, other: &Trajectory) -> Trajectory {
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().cloned());
        Trajectory { initial: self.initial.clone(), steps }
    }
}

/// A count observation `⟨L, U, B⟩` at a timestep: between `lower` and
/// `upper` agents (inclusive) are in one of the `predicate` states.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    pub timestep: usize,
    pub lower: u32,
    /// `None` means unbounded.
    pub upper: Option<u32>,
    pub predicate: BTreeSet<StateId>,
}

impl Observation {
    pub fn new(
        timestep: usize,
        lower: u32,
        upper: Option<u32>,
        predicate: impl IntoIterator<Item = StateId>,
    ) -> Result<Self> {
        if let Some(u) = upper {
            if lower > u {
                return Err(Error::Config(format!(
                    "observation at t={timestep} has lower bound {lower} above upper bound {u}"
                )));
            }
        }
        Ok(Self { timestep, lower, upper, predicate: predicate.into_iter().collect() })
    }

    /// Number of agents of `states` matching the predicate.
    pub fn matching(&self, states: &StateMultiset) -> u64 {
        self.predicate.iter().map(|&s| states.count(s) as u64).sum()
    }

    pub fn admits(&self, count: u64) -> bool {
        count >= self.lower as u64 && self.upper.is_none_or(|u| count <= u as u64)
    }
}

/// An immutable behaviour model: a state domain, the events of every agent
/// state, and scheduled boundary-condition injections.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviourModel {
    domain: StateDomain,
    events: Vec<AgentEvent>,
    injections: Vec<Injection>,
    by_actor: Vec<Vec<EventId>>,
}

impl BehaviourModel {
    pub fn builder(domain: StateDomain) -> ModelBuilder {
        ModelBuilder { domain, events: Vec::new(), injections: Vec::new() }
    }

    pub fn domain(&self) -> &StateDomain {
        &self.domain
    }

    pub fn events(&self) -> &[AgentEvent] {
        &self.events
    }

    pub fn event(&self, id: EventId) -> Result<&AgentEvent> {
        self.events.get(id.index()).ok_or(Error::UnknownEvent(id))
    }

    /// Events whose actor is an agent in `state`, in id order.
    pub fn events_of(&self, state: StateId) -> &[EventId] {
        self.by_actor.get(state.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn injections(&self) -> &[Injection] {
        &self.injections
    }

    /// Scheduled injections of `event` at timestep `t`.
    pub fn scheduled_injections(&self, event: EventId, t: usize) -> u32 {
        self.injections.iter().filter(|i| i.event == event && i.timestep == t).count() as u32
    }

    /// Agents injected with certainty at timestep `t`.
    pub fn certain_injections_at(&self, t: usize) -> StateMultiset {
        let mut out = StateMultiset::new();
        for inj in self.injections.iter().filter(|i| i.timestep == t) {
            let e = &self.events[inj.event.index()];
            if e.probability >= 1.0 {
                out.add_all(&e.consequence);
            }
        }
        out
    }

    /// Uncertain injection events scheduled at `t`, with multiplicity.
    pub fn uncertain_injections_at(&self, t: usize) -> BTreeMap<EventId, u32> {
        let mut out = BTreeMap::new();
        for inj in self.injections.iter().filter(|i| i.timestep == t) {
            if self.events[inj.event.index()].probability < 1.0 {
                *out.entry(inj.event).or_insert(0) += 1;
            }
        }
        out
    }

    /// Total number of agents injected if every scheduled injection fires.
    pub fn max_injected(&self) -> u64 {
        self.injections.iter().map(|i| self.events[i.event.index()].consequence.total()).sum()
    }

    /// Checks that, for every agent state and every presence/absence
    /// assignment over the states its events condition on, the probabilities
    /// of the enabled events sum to one.
    pub fn check_normalization(&self) -> Result<()> {
        for state in self.domain.states() {
            let ids = self.events_of(state);
            if ids.is_empty() {
                continue;
            }
            let conds: Vec<StateId> = ids
                .iter()
                .flat_map(|&e| {
                    let ev = &self.events[e.index()];
                    ev.requires.iter().chain(ev.forbids.iter()).copied()
                })
                .filter(|&s| s != state)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            if conds.len() > MAX_CONDITION_STATES {
                return Err(Error::InvalidModel(format!(
                    "state {state} conditions on {} states, too many to enumerate",
                    conds.len()
                )));
            }
            for mask in 0u32..(1u32 << conds.len()) {
                let mut env = StateMultiset::singleton(state, 1);
                for (bit, &s) in conds.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        env.insert(s, 1);
                    }
                }
                let total: f64 = ids
                    .iter()
                    .map(|&e| &self.events[e.index()])
                    .filter(|ev| ev.enabled_in(&env))
                    .map(|ev| ev.probability)
                    .sum();
                if libm::fabs(total - 1.0) > NORMALIZATION_TOLERANCE {
                    return Err(Error::InvalidModel(format!(
                        "events of state {state} sum to {total} in environment {mask:#b}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Collects events and injections, assigns ids in insertion order and
/// validates the result.
#[derive(Clone, Debug)]
pub struct ModelBuilder {
    domain: StateDomain,
    events: Vec<AgentEvent>,
    injections: Vec<Injection>,
}

impl ModelBuilder {
    pub fn event(&mut self, mut event: AgentEvent) -> EventId {
        let id = EventId(self.events.len() as u32);
        event.id = id;
        self.events.push(event);
        id
    }

    /// Schedules an injection of `consequence` at timestep `t` (`t ≥ 1`).
    /// Probability one makes it a certain boundary condition; otherwise it is
    /// an optional event carrying `ln probability`.
    pub fn inject(&mut self, t: usize, consequence: StateMultiset, probability: f64) -> EventId {
        let id = EventId(self.events.len() as u32);
        self.events.push(AgentEvent {
            id,
            actor: Actor::Injector,
            requires: BTreeSet::new(),
            forbids: BTreeSet::new(),
            consequence,
            probability,
        });
        self.injections.push(Injection { timestep: t, event: id });
        id
    }

    /// Schedules an already-added injector event at another timestep.
    pub fn schedule(&mut self, t: usize, event: EventId) {
        self.injections.push(Injection { timestep: t, event });
    }

    /// Builds and checks per-environment normalization.
    pub fn build(self) -> Result<BehaviourModel> {
        let model = self.build_unnormalized()?;
        model.check_normalization()?;
        Ok(model)
    }

    /// Builds with structural checks only.
    pub fn build_unnormalized(self) -> Result<BehaviourModel> {
        let domain = self.domain;
        let in_domain = |s: StateId| -> Result<()> {
            if domain.contains(s) {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("state {s} outside domain of size {}", domain.size())))
            }
        };
        let mut by_actor = alloc::vec![Vec::new(); domain.size()];
        for e in &self.events {
            if !(e.probability > 0.0 && e.probability <= 1.0) {
                return Err(Error::InvalidModel(format!(
                    "event {} has probability {} outside (0, 1]",
                    e.id, e.probability
                )));
            }
            if let Some(s) = e.requires.intersection(&e.forbids).next() {
                return Err(Error::InvalidModel(format!(
                    "event {} both requires and forbids state {s}",
                    e.id
                )));
            }
            for &s in e.requires.iter().chain(e.forbids.iter()) {
                in_domain(s)?;
            }
            for (s, _) in e.consequence.iter() {
                in_domain(s)?;
            }
            match e.actor {
                Actor::Agent(s) => {
                    in_domain(s)?;
                    by_actor[s.index()].push(e.id);
                }
                Actor::Injector => {
                    if !e.requires.is_empty() || !e.forbids.is_empty() {
                        return Err(Error::InvalidModel(format!(
                            "injection event {} must be unconditional",
                            e.id
                        )));
                    }
                }
            }
        }
        for inj in &self.injections {
            let e = self.events.get(inj.event.index()).ok_or(Error::UnknownEvent(inj.event))?;
            if e.actor != Actor::Injector {
                return Err(Error::InvalidModel(format!("event {} is not an injector", inj.event)));
            }
            if inj.timestep == 0 {
                return Err(Error::InvalidModel(
                    "injections at t=0 belong in the initial state".into(),
                ));
            }
        }
        Ok(BehaviourModel { domain, events: self.events, injections: self.injections, by_actor })
    }
}
