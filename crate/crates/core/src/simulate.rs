//! Forward sampling of trajectories and synthetic count observations.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64`. Initial placement, trajectory sampling and observation
//! use separate ChaCha streams of the same seed, so changing the observation
//! probability never changes the sampled trajectory.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{BehaviourModel, EventId, ModelEvent, Observation, StateMultiset, Trajectory};
use crate::predprey::{CellState, Grid, Species};

const TRAJECTORY_STREAM: u64 = 0;
const OBSERVATION_STREAM: u64 = 1;
const PLACEMENT_STREAM: u64 = 2;

/// Observation probability used by default: each agent is seen with
/// probability 2/3 at every timestep.
pub const DEFAULT_OBSERVE_PROB: f64 = 2.0 / 3.0;

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Given(StateMultiset),
    /// Agents placed independently and uniformly on a predator-prey grid.
    Uniform { grid_size: usize, predators: u32, prey: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub timesteps: usize,
    pub initial: InitialState,
    pub observe_prob: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timesteps == 0 {
            return Err(Error::Config("at least one timestep is required".into()));
        }
        if !(0.0..=1.0).contains(&self.observe_prob) {
            return Err(Error::Config("observation probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Resolves the initial state of `cfg`.
pub fn initial_state(cfg: &SimConfig) -> Result<StateMultiset> {
    match &cfg.initial {
        InitialState::Given(m) => Ok(m.clone()),
        &InitialState::Uniform { grid_size, predators, prey } => {
            let grid = Grid::new(grid_size)?;
            let mut rng = rng(cfg.seed, PLACEMENT_STREAM);
            let mut out = StateMultiset::new();
            for (species, n) in [(Species::Predator, predators), (Species::Prey, prey)] {
                for _ in 0..n {
                    let cell = rng.gen_range(0..grid.cells());
                    let c = CellState { species, row: cell / grid_size, col: cell % grid_size };
                    out.insert(grid.state(c), 1);
                }
            }
            Ok(out)
        }
    }
}

/// Samples a complete trajectory. Every agent of `Ψ_{t-1}`, taken in state
/// index order, draws one event among those enabled in `Ψ_{t-1}` with
/// probabilities renormalized over that set.
pub fn simulate(model: &BehaviourModel, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let initial = initial_state(cfg)?;
    simulate_from(model, initial, cfg.timesteps, cfg.seed)
}

pub fn simulate_from(
    model: &BehaviourModel,
    initial: StateMultiset,
    timesteps: usize,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = rng(seed, TRAJECTORY_STREAM);
    let mut traj = Trajectory::new(initial);
    let mut env = traj.initial.clone();
    for t in 1..=timesteps {
        let mut step = ModelEvent::new();
        for (state, count) in env.iter() {
            let enabled: Vec<(EventId, f64)> = model
                .events_of(state)
                .iter()
                .map(|&e| &model.events()[e.index()])
                .filter(|ev| ev.enabled_in(&env))
                .map(|ev| (ev.id, ev.probability))
                .collect();
            let total: f64 = enabled.iter().map(|&(_, p)| p).sum();
            if enabled.is_empty() {
                return Err(Error::NoFeasibleEvent { state, t });
            }
            for _ in 0..count {
                let mut u = rng.gen::<f64>() * total;
                let mut pick = enabled[enabled.len() - 1].0;
                for &(e, p) in &enabled {
                    if u < p {
                        pick = e;
                        break;
                    }
                    u -= p;
                }
                step.add(pick, 1);
            }
        }
        for (e, scheduled) in model.uncertain_injections_at(t) {
            let p = model.events()[e.index()].probability;
            let fired = (0..scheduled).filter(|_| rng.gen_bool(p)).count() as u32;
            step.add(e, fired);
        }
        traj.steps.push(step);
        env = model.states_at(&traj, t)?;
    }
    Ok(traj)
}

/// Each agent of `Ψ_t`, `t ≥ 1`, is detected independently with probability
/// `observe_prob`; each state with `k ≥ 1` detections yields `⟨k, ∞, {ψ}⟩`.
pub fn observe(
    model: &BehaviourModel,
    traj: &Trajectory,
    observe_prob: f64,
    seed: u64,
) -> Result<Vec<Observation>> {
    if !(0.0..=1.0).contains(&observe_prob) {
        return Err(Error::Config("observation probability must lie in [0, 1]".into()));
    }
    let mut rng = rng(seed, OBSERVATION_STREAM);
    let mut out = Vec::new();
    for t in 1..=traj.horizon() {
        for (state, count) in model.states_at(traj, t)?.iter() {
            let seen = (0..count).filter(|_| rng.gen_bool(observe_prob)).count() as u32;
            if seen > 0 {
                out.push(Observation::new(t, seen, None, [state])?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentEvent, FeasibilityMode, StateDomain, StateId};
    use crate::predprey::{build_model, PredPreyConfig};

    fn self_loop() -> (BehaviourModel, EventId) {
        let mut b = BehaviourModel::builder(StateDomain::new(1).unwrap());
        let e = b.event(AgentEvent::new(StateId(0), StateMultiset::singleton(StateId(0), 1), 1.0));
        (b.build().unwrap(), e)
    }

    fn desk(seed: u64) -> SimConfig {
        SimConfig {
            seed,
            timesteps: 4,
            initial: InitialState::Uniform { grid_size: 8, predators: 5, prey: 5 },
            observe_prob: DEFAULT_OBSERVE_PROB,
        }
    }

    #[test]
    fn deterministic_self_loop() {
        let (m, e) = self_loop();
        let cfg = SimConfig {
            seed: 1,
            timesteps: 3,
            initial: InitialState::Given(StateMultiset::singleton(StateId(0), 1)),
            observe_prob: 1.0,
        };
        let traj = simulate(&m, &cfg).unwrap();
        assert_eq!(traj.steps, alloc::vec![[(e, 1)].into_iter().collect::<ModelEvent>(); 3]);
    }

    #[test]
    fn fixed_seed_reproduces() {
        let m = build_model(&PredPreyConfig { grid_size: 8, ..Default::default() }).unwrap();
        let a = simulate(&m, &desk(42)).unwrap();
        let b = simulate(&m, &desk(42)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.initial.total(), 10);
        assert!(m.check_feasible(&a, FeasibilityMode::Complete).is_empty());
        assert_eq!(observe(&m, &a, 0.5, 7).unwrap(), observe(&m, &b, 0.5, 7).unwrap());
        assert_ne!(a, simulate(&m, &desk(43)).unwrap());
    }

    #[test]
    fn observation_extremes() {
        let m = build_model(&PredPreyConfig { grid_size: 8, ..Default::default() }).unwrap();
        let traj = simulate(&m, &desk(3)).unwrap();
        assert!(observe(&m, &traj, 0.0, 1).unwrap().is_empty());
        let all = observe(&m, &traj, 1.0, 1).unwrap();
        for t in 1..=traj.horizon() {
            let psi = m.states_at(&traj, t).unwrap();
            let at_t: Vec<_> = all.iter().filter(|o| o.timestep == t).collect();
            assert_eq!(at_t.len(), psi.distinct());
            for o in at_t {
                let s = *o.predicate.iter().next().unwrap();
                assert_eq!(o.lower, psi.count(s));
                assert_eq!(o.upper, None);
            }
        }
        assert!(m.satisfies(&traj, &all).is_empty());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = desk(1);
        cfg.timesteps = 0;
        assert!(cfg.validate().is_err());
        cfg.timesteps = 2;
        cfg.observe_prob = 1.5;
        assert!(cfg.validate().is_err());
    }
}
