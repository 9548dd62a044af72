//! Oracles and instance generators shared by the integration tests.
#![allow(dead_code)]

use abmap_core::milp::{IntegerProgram, VarKind};
use abmap_core::predprey::{build_model, PredPreyConfig};
use abmap_core::simulate::{observe, simulate, InitialState, SimConfig};
use abmap_core::{BehaviourModel, Observation, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small integer program: up to 6 integer variables in `[0, ≤3]`, up to 8
/// rows with coefficients in `-3..=3`, integer objective.
pub fn random_program(seed: u64, max_vars: usize) -> IntegerProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = IntegerProgram::new();
    let n = rng.gen_range(1..=max_vars);
    for j in 0..n {
        let upper = rng.gen_range(0..=3) as f64;
        let obj = rng.gen_range(-5..=5) as f64;
        p.add_variable(format!("x{j}"), 0.0, upper, VarKind::Integer, obj);
    }
    for _ in 0..rng.gen_range(0..=8) {
        let coefs: Vec<(usize, f64)> =
            (0..n).map(|j| (j, rng.gen_range(-3..=3) as f64)).filter(|&(_, a)| a != 0.0).collect();
        let lo = if rng.gen_bool(0.5) { rng.gen_range(-4..=2) as f64 } else { f64::NEG_INFINITY };
        let hi = if rng.gen_bool(0.7) { rng.gen_range(0..=6) as f64 } else { f64::INFINITY };
        p.add_constraint(coefs, lo, hi.max(lo));
    }
    p
}

fn feasible(p: &IntegerProgram, x: &[f64], tol: f64) -> bool {
    p.variables.iter().zip(x).all(|(v, &xi)| xi >= v.lower - tol && xi <= v.upper + tol)
        && (0..p.num_constraints()).all(|r| {
            let a = p.row_activity(r, x);
            a >= p.constraints[r].lower - tol && a <= p.constraints[r].upper + tol
        })
}

/// Exhaustive enumeration over the integer box. `None` when infeasible.
pub fn brute_force_ip(p: &IntegerProgram) -> Option<f64> {
    let n = p.num_variables();
    let mut x: Vec<f64> = p.variables.iter().map(|v| v.lower).collect();
    let mut best: Option<f64> = None;
    loop {
        if feasible(p, &x, 0.0) {
            let v = p.objective_value(&x);
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        let mut j = 0;
        while j < n {
            x[j] += 1.0;
            if x[j] <= p.variables[j].upper {
                break;
            }
            x[j] = p.variables[j].lower;
            j += 1;
        }
        if j == n {
            return best;
        }
    }
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// LP optimum by enumerating every basic solution of the bounded relaxation.
pub fn vertex_lp(p: &IntegerProgram) -> Option<f64> {
    let n = p.num_variables();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for (j, v) in p.variables.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), v.lower));
        planes.push((e, v.upper));
    }
    for c in &p.constraints {
        let mut a = vec![0.0; n];
        for &(j, v) in &c.coefficients {
            a[j] += v;
        }
        for side in [c.lower, c.upper] {
            if side.is_finite() {
                planes.push((a.clone(), side));
            }
        }
    }
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..n).collect();
    loop {
        let a = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let b = pick.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(p, &x, 1e-9) {
                let v = p.objective_value(&x);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        // Next n-subset in lexicographic order.
        let m = planes.len();
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if pick[i] < m - n + i {
                break;
            }
        }
        pick[i] += 1;
        for k in i + 1..n {
            pick[k] = pick[k - 1] + 1;
        }
    }
}

/// A seeded predator-prey instance at desk scale.
pub struct Desk {
    pub model: BehaviourModel,
    pub grid_size: usize,
    pub real: Trajectory,
    pub observations: Vec<Observation>,
}

pub fn desk_model(grid_size: usize) -> BehaviourModel {
    build_model(&PredPreyConfig { grid_size, ..Default::default() }).unwrap()
}

pub fn desk(seed: u64, grid_size: usize, predators: u32, prey: u32, timesteps: usize, observe_prob: f64) -> Desk {
    let model = desk_model(grid_size);
    let cfg = SimConfig {
        seed,
        timesteps,
        initial: InitialState::Uniform { grid_size, predators, prey },
        observe_prob,
    };
    let real = simulate(&model, &cfg).unwrap();
    let observations = observe(&model, &real, observe_prob, seed).unwrap();
    Desk { model, grid_size, real, observations }
}

/// Instance `i` of the mixed ensemble: N ∈ {4, 6, 8}, 2 to 10 agents and
/// T ∈ {2, …, 5}, all drawn from `i`.
pub fn mixed_params(i: u64) -> (usize, u32, u32, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
    let n = [4, 6, 8][rng.gen_range(0..3)];
    let agents: u32 = rng.gen_range(2..=10);
    let predators = rng.gen_range(0..=agents / 2);
    let t = rng.gen_range(2..=5);
    (n, predators, agents - predators, t)
}

/// Online pass with windows of one timestep, followed by completion.
/// Returns the completed trajectory and the number of rollbacks.
pub fn online_pass(
    model: &BehaviourModel,
    real: &Trajectory,
    observations: &[Observation],
) -> abmap_core::Result<(Trajectory, u64)> {
    use abmap_core::assimilate::AssimilationState;
    use abmap_core::milp::NoBudget;
    let mut st = AssimilationState::new(real.initial.clone(), None);
    for t in 1..=real.horizon() {
        let window: Vec<Observation> = observations.iter().filter(|o| o.timestep == t).cloned().collect();
        st.step_online(model, &window, t, &mut NoBudget)?;
    }
    let done = st.complete(model, &mut NoBudget)?;
    Ok((done.trajectory, st.rollback_count))
}
