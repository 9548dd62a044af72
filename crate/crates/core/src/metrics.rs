//! Quality measures for estimated predator-prey trajectories.
//!
//! Agents carry no identity, so "unobserved" agents at a timestep are what is
//! left of a model state after subtracting the count seen by each single-state
//! observation `⟨k, ·, {ψ}⟩`, clamped at the occupancy. Observations over more
//! than one state are ignored here. The distance from an unobserved estimate
//! agent is to its nearest remaining real agent of the same species, not an
//! optimal matching.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{BehaviourModel, Observation, StateId, StateMultiset, Trajectory};
use crate::predprey::{torus_l1, CellState, Species};
use crate::simulate::rng;

const BASELINE_STREAM: u64 = 3;

/// Mean nearest-agent distance at one timestep.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DistanceSample {
    /// `0.0` when `n_samples` is zero.
    pub mean: f64,
    /// Unobserved estimate agents that had a real counterpart to measure to.
    pub n_samples: usize,
    /// Unobserved estimate agents whose species has no unobserved real agent.
    pub skipped: usize,
}

/// One row of a distance curve.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub t: usize,
    pub distance: DistanceSample,
    pub baseline: f64,
}

fn cell_of(state: StateId, n: usize) -> CellState {
    let cells = n * n;
    let i = state.index();
    let species = if i < cells { Species::Predator } else { Species::Prey };
    CellState { species, row: (i % cells) / n, col: i % n }
}

fn check_grid(model: &BehaviourModel, grid_size: usize) -> Result<()> {
    if grid_size == 0 || model.domain().size() != 2 * grid_size * grid_size {
        return Err(Error::Config("grid size does not match the model's state domain".into()));
    }
    Ok(())
}

/// Occupancy at `t` minus the observed counts.
pub fn unobserved_at(
    model: &BehaviourModel,
    traj: &Trajectory,
    observations: &[Observation],
    t: usize,
) -> Result<StateMultiset> {
    let mut left = model.states_at(traj, t)?;
    for o in observations.iter().filter(|o| o.timestep == t && o.predicate.len() == 1) {
        let s = *o.predicate.iter().next().unwrap_or(&StateId(0));
        left.remove(s, o.lower);
    }
    Ok(left)
}

fn nearest_mean(estimate: &StateMultiset, real: &StateMultiset, n: usize) -> DistanceSample {
    let real: Vec<(CellState, u32)> = real.iter().map(|(s, k)| (cell_of(s, n), k)).collect();
    let (mut sum, mut n_samples, mut skipped) = (0.0, 0usize, 0usize);
    for (s, k) in estimate.iter() {
        let a = cell_of(s, n);
        let best = real.iter().filter(|(b, _)| b.species == a.species).map(|&(b, _)| torus_l1(a, b, n)).min();
        match best {
            Some(d) => {
                sum += d as f64 * k as f64;
                n_samples += k as usize;
            }
            None => skipped += k as usize,
        }
    }
    let mean = if n_samples == 0 { 0.0 } else { sum / n_samples as f64 };
    DistanceSample { mean, n_samples, skipped }
}

/// Mean torus-L1 distance from each unobserved agent of `estimate` at `t`
/// to the nearest unobserved agent of the same species in `real`.
pub fn unobserved_distance(
    model: &BehaviourModel,
    real: &Trajectory,
    estimate: &Trajectory,
    observations: &[Observation],
    t: usize,
    grid_size: usize,
) -> Result<DistanceSample> {
    check_grid(model, grid_size)?;
    let r = unobserved_at(model, real, observations, t)?;
    let e = unobserved_at(model, estimate, observations, t)?;
    Ok(nearest_mean(&e, &r, grid_size))
}

/// Monte Carlo estimate of [`unobserved_distance`] for an estimate that
/// places as many agents of each species as `real` leaves unobserved,
/// independently and uniformly over the grid. Samples without any measured
/// agent do not count towards the average.
pub fn random_baseline(
    model: &BehaviourModel,
    real: &Trajectory,
    observations: &[Observation],
    t: usize,
    grid_size: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    check_grid(model, grid_size)?;
    if mc_samples == 0 {
        return Err(Error::Config("at least one Monte Carlo sample is required".into()));
    }
    let r = unobserved_at(model, real, observations, t)?;
    let mut rng = rng(seed, BASELINE_STREAM);
    let mut counts = [0u32; 2];
    for (s, k) in r.iter() {
        counts[cell_of(s, grid_size).species as usize] += k;
    }
    let cells = grid_size * grid_size;
    let (mut total, mut used) = (0.0, 0usize);
    for _ in 0..mc_samples {
        let mut placed = StateMultiset::new();
        for (species, &k) in counts.iter().enumerate() {
            for _ in 0..k {
                placed.insert(StateId((species * cells + rng.gen_range(0..cells)) as u32), 1);
            }
        }
        let d = nearest_mean(&placed, &r, grid_size);
        if d.n_samples > 0 {
            total += d.mean;
            used += 1;
        }
    }
    Ok(if used == 0 { 0.0 } else { total / used as f64 })
}

/// Distance and baseline for every timestep `1..=horizon` of `real`. The
/// baseline at step `t` uses seed `seed + t`.
pub fn distance_curve(
    model: &BehaviourModel,
    real: &Trajectory,
    estimate: &Trajectory,
    observations: &[Observation],
    grid_size: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<CurveRow>> {
    if real.horizon() != estimate.horizon() {
        return Err(Error::Precondition("trajectories have different horizons".into()));
    }
    (1..=real.horizon())
        .map(|t| {
            Ok(CurveRow {
                t,
                distance: unobserved_distance(model, real, estimate, observations, t, grid_size)?,
                baseline: random_baseline(model, real, observations, t, grid_size, mc_samples, seed.wrapping_add(t as u64))?,
            })
        })
        .collect()
}

/// Log posterior ratio of two trajectories that satisfy the same
/// observations: the difference of their log prior probabilities.
pub fn log_ratio(model: &BehaviourModel, candidate: &Trajectory, reference: &Trajectory) -> f64 {
    model.log_probability(candidate) - model.log_probability(reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AgentEvent, ModelEvent, StateDomain};
    use crate::predprey::{build_model, Grid, PredPreyConfig};
    use crate::simulate::{observe, simulate, InitialState, SimConfig};

    /// Every state of an `n × n` two-species grid stays put.
    fn still(n: usize) -> BehaviourModel {
        let mut b = BehaviourModel::builder(StateDomain::new(2 * n * n).unwrap());
        for i in 0..(2 * n * n) as u32 {
            b.event(AgentEvent::new(StateId(i), StateMultiset::singleton(StateId(i), 1), 1.0));
        }
        b.build().unwrap()
    }

    fn at(n: usize, species: Species, row: usize, col: usize) -> StateId {
        StateId((species as usize * n * n + row * n + col) as u32)
    }

    fn parked(initial: StateMultiset) -> Trajectory {
        let mut t = Trajectory::new(initial.clone());
        let step: ModelEvent = initial.iter().map(|(s, k)| (crate::EventId(s.0), k)).collect();
        t.steps.push(step);
        t
    }

    #[test]
    fn identical_trajectories_are_at_distance_zero() {
        let m = build_model(&PredPreyConfig { grid_size: 6, ..Default::default() }).unwrap();
        let cfg = SimConfig {
            seed: 5,
            timesteps: 3,
            initial: InitialState::Uniform { grid_size: 6, predators: 2, prey: 4 },
            observe_prob: 0.0,
        };
        let traj = simulate(&m, &cfg).unwrap();
        for t in 1..=3 {
            let d = unobserved_distance(&m, &traj, &traj, &[], t, 6).unwrap();
            assert_eq!(d.mean, 0.0);
            assert_eq!(d.skipped, 0);
        }
        let obs = observe(&m, &traj, 2.0 / 3.0, 5).unwrap();
        assert_eq!(log_ratio(&m, &traj, &traj), 0.0);
        assert!(unobserved_distance(&m, &traj, &traj, &obs, 9, 6).is_err());
        assert!(unobserved_distance(&m, &traj, &traj, &obs, 1, 5).is_err());
    }

    #[test]
    fn single_pair() {
        let n = 32;
        let m = still(n);
        let real = parked(StateMultiset::singleton(at(n, Species::Prey, 0, 2), 1));
        let est = parked(StateMultiset::singleton(at(n, Species::Prey, 0, 0), 1));
        let d = unobserved_distance(&m, &real, &est, &[], 1, n).unwrap();
        assert_eq!(d, DistanceSample { mean: 2.0, n_samples: 1, skipped: 0 });
        // Wraparound.
        let est = parked(StateMultiset::singleton(at(n, Species::Prey, 31, 31), 1));
        assert_eq!(unobserved_distance(&m, &real, &est, &[], 1, n).unwrap().mean, 4.0);
    }

    #[test]
    fn observed_agents_are_removed_and_missing_species_skipped() {
        let n = 4;
        let m = still(n);
        let p = at(n, Species::Predator, 1, 1);
        let q = at(n, Species::Prey, 2, 2);
        let real = parked([(p, 1), (q, 1)].into_iter().collect());
        let est = parked([(p, 2), (q, 1)].into_iter().collect());
        let seen = [Observation::new(1, 1, None, [p]).unwrap()];
        let d = unobserved_distance(&m, &real, &est, &seen, 1, n).unwrap();
        assert_eq!(d, DistanceSample { mean: 0.0, n_samples: 1, skipped: 1 });
    }

    #[test]
    fn baseline_matches_closed_form() {
        let n = 32;
        let m = still(n);
        let real = parked(StateMultiset::singleton(at(n, Species::Predator, 3, 7), 1));
        let grid = Grid::new(n).unwrap();
        let from = grid.cell(at(n, Species::Predator, 3, 7));
        let ds: Vec<f64> = (0..n * n)
            .map(|c| grid.distance(from, CellState { species: Species::Predator, row: c / n, col: c % n }) as f64)
            .collect();
        let mean = ds.iter().sum::<f64>() / ds.len() as f64;
        let var = ds.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / ds.len() as f64;
        assert_eq!(mean, 16.0);
        let samples = 4000;
        let b = random_baseline(&m, &real, &[], 1, n, samples, 11).unwrap();
        assert!((b - mean).abs() < 3.0 * libm::sqrt(var / samples as f64), "{b}");
        assert_eq!(b, random_baseline(&m, &real, &[], 1, n, samples, 11).unwrap());
    }

    #[test]
    fn one_cell_baseline_is_zero() {
        let m = still(1);
        let real = parked([(StateId(0), 1), (StateId(1), 2)].into_iter().collect());
        assert_eq!(random_baseline(&m, &real, &[], 1, 1, 10, 0).unwrap(), 0.0);
        assert!(random_baseline(&m, &real, &[], 1, 1, 0, 0).is_err());
    }
}
