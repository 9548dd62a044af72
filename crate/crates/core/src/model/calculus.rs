use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{Actor, BehaviourModel, EventId, ModelEvent, Observation, StateId, StateMultiset, Trajectory};
use crate::error::{Error, Result};

/// Which agency rule a trajectory is checked against.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FeasibilityMode {
    /// Every agent performs exactly one action per timestep.
    Complete,
    /// Every agent performs at most one action per timestep.
    Partial,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub timestep: usize,
    pub kind: ViolationKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// The actors of a step do not match the agents present before it.
    Agency { state: StateId, present: u32, acting: u32 },
    /// A required state was empty.
    Presence { state: StateId, event: EventId },
    /// A forbidden state was occupied.
    Absence { state: StateId, event: EventId },
    /// An injection event fired more often than it is scheduled, or a
    /// certain injection was listed explicitly.
    Injection { event: EventId, count: u32, scheduled: u32 },
    UnknownEvent(EventId),
    /// An observation's count was outside `[lower, upper]`.
    Count { observation: usize, count: u64 },
    /// An observation refers to a timestep the trajectory does not reach.
    ObservationOutOfRange { observation: usize },
}

impl BehaviourModel {
    /// `Σ_e counts[e] · Φ_e`.
    pub fn consequence(&self, step: &ModelEvent) -> Result<StateMultiset> {
        let mut out = StateMultiset::new();
        for (id, n) in step.iter() {
            out.add_scaled(&self.event(id)?.consequence, n);
        }
        Ok(out)
    }

    /// The model state `Ψ_t` reached by `traj` at timestep `t`.
    pub fn states_at(&self, traj: &Trajectory, t: usize) -> Result<StateMultiset> {
        if t == 0 {
            return Ok(traj.initial.clone());
        }
        let step = traj
            .step(t)
            .ok_or(Error::TimestepOutOfRange { t, horizon: traj.horizon() })?;
        let mut psi = self.consequence(step)?;
        psi.add_all(&self.certain_injections_at(t));
        Ok(psi)
    }

    /// Multiset of acting agent states of a model event.
    pub fn actors(&self, step: &ModelEvent) -> Result<StateMultiset> {
        let mut out = StateMultiset::new();
        for (id, n) in step.iter() {
            if let Actor::Agent(s) = self.event(id)?.actor {
                out.insert(s, n);
            }
        }
        Ok(out)
    }

    /// Lists every agency, presence, absence and injection violation of
    /// `traj`. An empty list means the trajectory is feasible in `mode`.
    pub fn check_feasible(&self, traj: &Trajectory, mode: FeasibilityMode) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut before = traj.initial.clone();
        for t in 1..=traj.horizon() {
            let step = &traj.steps[t - 1];
            let mut ok = true;
            for (id, _) in step.iter() {
                if self.event(id).is_err() {
                    out.push(Violation { timestep: t, kind: ViolationKind::UnknownEvent(id) });
                    ok = false;
                }
            }
            if !ok {
                // Later steps cannot be evaluated without the consequence.
                return out;
            }
            let actors = self.actors(step).expect("ids checked");
            let states: BTreeSet<StateId> = actors.support().chain(before.support()).collect();
            for s in states {
                let present = before.count(s);
                let acting = actors.count(s);
                let bad = match mode {
                    FeasibilityMode::Complete => present != acting,
                    FeasibilityMode::Partial => acting > present,
                };
                if bad {
                    out.push(Violation {
                        timestep: t,
                        kind: ViolationKind::Agency { state: s, present, acting },
                    });
                }
            }
            for (id, n) in step.iter() {
                let ev = &self.events[id.index()];
                for &s in &ev.requires {
                    if before.count(s) == 0 {
                        out.push(Violation {
                            timestep: t,
                            kind: ViolationKind::Presence { state: s, event: id },
                        });
                    }
                }
                for &s in &ev.forbids {
                    if before.count(s) > 0 {
                        out.push(Violation {
                            timestep: t,
                            kind: ViolationKind::Absence { state: s, event: id },
                        });
                    }
                }
                if ev.actor == Actor::Injector {
                    let scheduled = self.scheduled_injections(id, t);
                    if ev.probability >= 1.0 || n > scheduled {
                        out.push(Violation {
                            timestep: t,
                            kind: ViolationKind::Injection { event: id, count: n, scheduled },
                        });
                    }
                }
            }
            before = self.states_at(traj, t).expect("ids checked");
        }
        out
    }

    /// `Σ_t Σ_e c_te · ln p_e`.
    pub fn log_probability(&self, traj: &Trajectory) -> f64 {
        debug_assert!(
            self.check_feasible(traj, FeasibilityMode::Partial).is_empty(),
            "log_probability of an infeasible trajectory"
        );
        traj.steps
            .iter()
            .flat_map(|step| step.iter())
            .map(|(id, n)| n as f64 * self.events[id.index()].log_probability())
            .sum()
    }

    /// Lists the observations `traj` does not satisfy.
    pub fn satisfies(&self, traj: &Trajectory, observations: &[Observation]) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut cache: Vec<Option<StateMultiset>> = alloc::vec![None; traj.horizon() + 1];
        for (i, obs) in observations.iter().enumerate() {
            let t = obs.timestep;
            if t > traj.horizon() {
                out.push(Violation {
                    timestep: t,
                    kind: ViolationKind::ObservationOutOfRange { observation: i },
                });
                continue;
            }
            if cache[t].is_none() {
                match self.states_at(traj, t) {
                    Ok(psi) => cache[t] = Some(psi),
                    Err(_) => {
                        out.push(Violation {
                            timestep: t,
                            kind: ViolationKind::ObservationOutOfRange { observation: i },
                        });
                        continue;
                    }
                }
            }
            let count = obs.matching(cache[t].as_ref().expect("filled"));
            if !obs.admits(count) {
                out.push(Violation { timestep: t, kind: ViolationKind::Count { observation: i, count } });
            }
        }
        out
    }
}
