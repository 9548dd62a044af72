//! Compilation of MAP trajectory queries into pure integer programs.
//!
//! A trajectory over `t = 1..=T` is represented by counts `c_te`, the number
//! of times event `e` occurs in step `t`. The occupancy of state `φ` at time
//! `t` is the linear expression
//!
//! ```text
//! Ψ_tφ = Σ_e Φ_eφ c_te + (committed and injected constants)
//! ```
//!
//! and never a variable. Presence and absence conditions are linked to
//! occupancy through binary indicators `b_tφ`:
//!
//! ```text
//! 0 ≤ M_tφ b_tφ − Ψ_tφ        0 ≤ Ψ_tφ − b_tφ
//! Σ_{e of ψ} R_eφ c_te ≤ K b_(t−1)φ
//! Σ_{e of ψ} R̄_eφ c_te + K b_(t−1)φ ≤ K − Σ_{e of ψ} R̄_eφ ĉ_te
//! ```
//!
//! `M_tφ` is the smaller of the multiplicity `M`, a cap on the occupancy of
//! any single state, and the occupancy bound `U_t(φ)` of
//! [`occupancy_bounds`]. Presence and absence rows are split by actor state
//! `ψ` and use `K = M_(t−1)ψ`: one row summing the events of several actor
//! states could count more than `M` agents, for example four neighbours all
//! avoiding the same square.
//!
//! Agency rows tie the actors of step `t` to `Ψ_(t−1)`: with equality for
//! complete trajectories, as an upper bound for partial ones. Observation
//! rows bound `Σ_{φ∈B} Ψ_tφ`. The objective is `Σ ln(p_e) c_te`.
//!
//! Only events whose actor is reachable from the initial state get a
//! variable (see [`reachable_support`]), and indicators exist only where a
//! presence or absence row refers to them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::milp::{IntegerProgram, VarKind, INTEGRALITY_TOL};
use crate::model::{
    Actor, BehaviourModel, EventId, FeasibilityMode, ModelEvent, Observation, StateId, StateMultiset, Trajectory,
};

/// Committed event counts `ĉ_te`, keyed by `(t, e)`.
pub type Commitments = BTreeMap<(usize, EventId), u32>;

/// States that can be occupied at each timestep and events that can occur
/// at each step of any feasible trajectory from a given initial state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Support {
    /// `states[t]` for `t = 0..=T`.
    pub states: Vec<BTreeSet<StateId>>,
    /// `events[t]` for `t = 1..=T`; `events[0]` is empty.
    pub events: Vec<Vec<EventId>>,
}

impl Support {
    pub fn horizon(&self) -> usize {
        self.states.len() - 1
    }

    pub fn num_events(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }
}

/// Forward closure from `initial`: events are live at step `t` when their
/// actor can be occupied at `t − 1`, and the states of `t` are the
/// consequences of live events plus injections.
pub fn reachable_support(model: &BehaviourModel, initial: &StateMultiset, horizon: usize) -> Support {
    let available: Vec<StateMultiset> =
        (0..=horizon).map(|t| if t == 0 { initial.clone() } else { model.certain_injections_at(t) }).collect();
    closure(model, &available, |t| Some(model.uncertain_injections_at(t).into_keys().collect()))
}

/// Forward closure over `available[t]`, the agents at `t` that no fixed
/// event consumes. `injections(t)` lists the optional injections still open
/// at `t`, or `None` when step `t` gets no variables.
fn closure(
    model: &BehaviourModel,
    available: &[StateMultiset],
    injections: impl Fn(usize) -> Option<Vec<EventId>>,
) -> Support {
    let horizon = available.len() - 1;
    let mut states = vec![available[0].support().collect::<BTreeSet<_>>()];
    let mut events = vec![Vec::new()];
    for t in 1..=horizon {
        let mut next: BTreeSet<StateId> = available[t].support().collect();
        let mut live = Vec::new();
        if let Some(open) = injections(t) {
            live.extend(states[t - 1].iter().flat_map(|&s| model.events_of(s).iter().copied()));
            live.extend(open);
            live.sort_unstable();
            for &e in &live {
                next.extend(model.events()[e.index()].consequence.support());
            }
        }
        states.push(next);
        events.push(live);
    }
    Support { states, events }
}

/// Upper bound on the number of agents alive at each `t = 0..=horizon`: the
/// largest consequence of any agent event multiplies the population of the
/// previous step, and every scheduled injection fires.
pub fn population_bounds(model: &BehaviourModel, initial: &StateMultiset, horizon: usize) -> Vec<u64> {
    let growth = model
        .events()
        .iter()
        .filter(|e| matches!(e.actor, Actor::Agent(_)))
        .map(|e| e.consequence.total())
        .max()
        .unwrap_or(0);
    let mut out = vec![initial.total()];
    for t in 1..=horizon {
        let injected: u64 = model.certain_injections_at(t).total()
            + model
                .uncertain_injections_at(t)
                .iter()
                .map(|(e, &n)| n as u64 * model.events()[e.index()].consequence.total())
                .sum::<u64>();
        out.push(out[t - 1].saturating_mul(growth).saturating_add(injected));
    }
    out
}

/// Upper bounds `U_t(φ)` on the occupancy of every state reachable at
/// `t = 0..=horizon`. An agent in `ψ` sends at most `max_e Φ_eφ` agents to
/// `φ`, and no state holds more than the population bound.
pub fn occupancy_bounds(
    model: &BehaviourModel,
    initial: &StateMultiset,
    horizon: usize,
) -> Vec<BTreeMap<StateId, u64>> {
    let population = population_bounds(model, initial, horizon);
    let mut out: Vec<BTreeMap<StateId, u64>> = vec![initial.iter().map(|(s, n)| (s, n as u64)).collect()];
    for t in 1..=horizon {
        let mut next: BTreeMap<StateId, u64> = BTreeMap::new();
        for (&psi, &u) in &out[t - 1] {
            let mut most: BTreeMap<StateId, u64> = BTreeMap::new();
            for &e in model.events_of(psi) {
                for (phi, k) in model.events()[e.index()].consequence.iter() {
                    let m = most.entry(phi).or_insert(0);
                    *m = (*m).max(k as u64);
                }
            }
            for (phi, k) in most {
                let v = next.entry(phi).or_insert(0);
                *v = v.saturating_add(u.saturating_mul(k));
            }
        }
        for (phi, k) in model.certain_injections_at(t).iter() {
            let v = next.entry(phi).or_insert(0);
            *v = v.saturating_add(k as u64);
        }
        for (e, n) in model.uncertain_injections_at(t) {
            for (phi, k) in model.events()[e.index()].consequence.iter() {
                let v = next.entry(phi).or_insert(0);
                *v = v.saturating_add(n as u64 * k as u64);
            }
        }
        for v in next.values_mut() {
            *v = (*v).min(population[t]);
        }
        out.push(next);
    }
    out
}

/// Default multiplicity: every agent that is present initially or could be
/// injected during the horizon. Births can in principle push a single
/// occupancy past it; such trajectories are outside the encoding.
pub fn default_multiplicity(model: &BehaviourModel, initial: &StateMultiset) -> u32 {
    (initial.total() + model.max_injected()).clamp(1, u32::MAX as u64) as u32
}

/// Where every variable of an encoded program came from.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingMap {
    pub var_of_count: BTreeMap<(usize, EventId), usize>,
    pub var_of_bool: BTreeMap<(usize, StateId), usize>,
    pub multiplicity: u32,
    pub horizon: usize,
    pub committed: Commitments,
    pub initial: StateMultiset,
}

impl EncodingMap {
    /// `Σ ĉ_te ln p_e`, the part of the log-probability fixed by commitments.
    pub fn committed_log_probability(&self, model: &BehaviourModel) -> f64 {
        self.committed
            .iter()
            .map(|(&(_, e), &n)| n as f64 * model.events()[e.index()].log_probability())
            .sum()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Agency {
    /// Every agent acts exactly once per step.
    Exact,
    /// Every agent acts at most once per step.
    AtMost,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum ObservationRows {
    /// Rows for every observation.
    All,
    /// No rows at timesteps that already carry committed events.
    SkipCommitted,
}

/// Full set of knobs behind [`encode_offline`] and [`encode_online`].
#[derive(Clone, Debug)]
pub struct EncodeOptions<'a> {
    pub horizon: usize,
    pub multiplicity: u32,
    pub committed: &'a Commitments,
    pub agency: Agency,
    pub observation_rows: ObservationRows,
    /// Steps that get count variables; `None` means every step.
    pub variable_steps: Option<&'a BTreeSet<usize>>,
}

/// Offline MAP program over `t = 1..=horizon`.
pub fn encode_offline(
    model: &BehaviourModel,
    initial: &StateMultiset,
    observations: &[Observation],
    horizon: usize,
    multiplicity: u32,
) -> Result<(IntegerProgram, EncodingMap)> {
    let none = Commitments::new();
    encode(
        model,
        initial,
        observations,
        &EncodeOptions {
            horizon,
            multiplicity,
            committed: &none,
            agency: Agency::Exact,
            observation_rows: ObservationRows::All,
            variable_steps: None,
        },
    )
}

/// Online program extending the partial trajectory `committed`.
pub fn encode_online(
    model: &BehaviourModel,
    initial: &StateMultiset,
    observations: &[Observation],
    horizon: usize,
    multiplicity: u32,
    committed: &Commitments,
) -> Result<(IntegerProgram, EncodingMap)> {
    encode(
        model,
        initial,
        observations,
        &EncodeOptions {
            horizon,
            multiplicity,
            committed,
            agency: Agency::AtMost,
            observation_rows: ObservationRows::SkipCommitted,
            variable_steps: None,
        },
    )
}

#[derive(Clone, Debug, Default)]
struct LinExpr {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl LinExpr {
    fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }
}

struct Encoder {
    program: IntegerProgram,
    map: EncodingMap,
    /// `psi[t][φ]`, only for states with a non-zero expression.
    psi: Vec<BTreeMap<StateId, LinExpr>>,
    m: f64,
    /// `min(M, U_t(φ))` from [`occupancy_bounds`].
    caps: Vec<BTreeMap<StateId, u64>>,
}

impl Encoder {
    fn psi(&self, t: usize, s: StateId) -> LinExpr {
        self.psi[t].get(&s).cloned().unwrap_or_default()
    }

    fn cap(&self, t: usize, s: StateId) -> f64 {
        self.caps[t].get(&s).copied().unwrap_or(0) as f64
    }

    /// Adds `lower ≤ Σ terms ≤ upper`, or checks it when there are no terms.
    fn row(&mut self, terms: Vec<(usize, f64)>, lower: f64, upper: f64) {
        if terms.is_empty() {
            if lower > 1e-9 || upper < -1e-9 {
                // Constant contradiction: keep an empty, unsatisfiable row.
                self.program.constraints.push(crate::milp::Constraint { coefficients: terms, lower, upper });
            }
            return;
        }
        self.program.add_constraint(terms, lower, upper);
    }

    /// Indicator `b_tφ`, linked to `Ψ_tφ` on first use.
    fn indicator(&mut self, t: usize, s: StateId) -> Result<usize> {
        if let Some(&j) = self.map.var_of_bool.get(&(t, s)) {
            return Ok(j);
        }
        let psi = self.psi(t, s);
        let name = format!("b_t{t}_s{}", s.0);
        let j = if psi.is_constant() {
            if psi.constant > self.m {
                return Err(Error::Config(format!(
                    "multiplicity {} is below the occupancy {} of state {s} at t={t}",
                    self.m, psi.constant
                )));
            }
            let v = if psi.constant > 0.0 { 1.0 } else { 0.0 };
            self.program.add_variable(name, v, v, VarKind::Binary, 0.0)
        } else {
            let j = self.program.add_variable(name, 0.0, 1.0, VarKind::Binary, 0.0);
            // M_tφ b − Ψ ≥ 0
            let mut terms: Vec<(usize, f64)> = psi.terms.iter().map(|&(k, a)| (k, -a)).collect();
            terms.push((j, self.cap(t, s).max(1.0)));
            self.row(terms, psi.constant, f64::INFINITY);
            // Ψ − b ≥ 0
            let mut terms = psi.terms.clone();
            terms.push((j, -1.0));
            self.row(terms, -psi.constant, f64::INFINITY);
            j
        };
        self.map.var_of_bool.insert((t, s), j);
        Ok(j)
    }
}

/// Builds the program described in the module documentation.
pub fn encode(
    model: &BehaviourModel,
    initial: &StateMultiset,
    observations: &[Observation],
    opts: &EncodeOptions<'_>,
) -> Result<(IntegerProgram, EncodingMap)> {
    let horizon = opts.horizon;
    if opts.multiplicity == 0 {
        return Err(Error::Config("multiplicity must be at least 1".into()));
    }
    if initial.max_count() > opts.multiplicity {
        return Err(Error::Config(format!(
            "multiplicity {} is below the initial occupancy {}",
            opts.multiplicity,
            initial.max_count()
        )));
    }
    if let Some(o) = observations.iter().find(|o| o.timestep > horizon) {
        return Err(Error::Precondition(format!(
            "observation at t={} lies beyond the horizon {horizon}",
            o.timestep
        )));
    }
    if let Some(&(t, _)) = opts.committed.keys().find(|&&(t, _)| t == 0 || t > horizon) {
        return Err(Error::Precondition(format!("commitment at t={t} lies outside 1..={horizon}")));
    }
    let committed_steps = committed_trajectory(initial, opts.committed, horizon);
    let violations = model.check_feasible(&committed_steps, FeasibilityMode::Partial);
    if !violations.is_empty() {
        return Err(Error::Precondition(format!(
            "committed events are not a feasible partial trajectory: {:?}",
            violations[0]
        )));
    }

    let constants = committed_occupancy(model, initial, opts.committed, horizon);
    let available = uncommitted_agents(model, initial, opts.committed, horizon);
    let open_injections = |t: usize| -> BTreeMap<EventId, u32> {
        model
            .uncertain_injections_at(t)
            .into_iter()
            .filter_map(|(e, n)| {
                let left = n.saturating_sub(opts.committed.get(&(t, e)).copied().unwrap_or(0));
                (left > 0).then_some((e, left))
            })
            .collect()
    };
    let has_vars = |t: usize| opts.variable_steps.is_none_or(|steps| steps.contains(&t));
    let support = closure(model, &available, |t| has_vars(t).then(|| open_injections(t).into_keys().collect()));
    let mut enc = Encoder {
        program: IntegerProgram::new(),
        map: EncodingMap {
            var_of_count: BTreeMap::new(),
            var_of_bool: BTreeMap::new(),
            multiplicity: opts.multiplicity,
            horizon,
            committed: opts.committed.clone(),
            initial: initial.clone(),
        },
        psi: vec![BTreeMap::new(); horizon + 1],
        m: opts.multiplicity as f64,
        caps: occupancy_bounds(model, initial, horizon)
            .into_iter()
            .map(|mut u| {
                u.values_mut().for_each(|v| *v = (*v).min(opts.multiplicity as u64));
                u
            })
            .collect(),
    };

    // Count variables and occupancy expressions.
    for (t, c) in constants.iter().enumerate() {
        for (s, n) in c.iter() {
            enc.psi[t].insert(s, LinExpr::constant(n as f64));
        }
    }
    for t in 1..=horizon {
        if has_vars(t) {
            let uncertain = open_injections(t);
            for &e in &support.events[t] {
                let ev = &model.events()[e.index()];
                let upper = match ev.actor {
                    Actor::Agent(a) => enc.cap(t - 1, a),
                    Actor::Injector => uncertain.get(&e).copied().unwrap_or(0) as f64,
                };
                let j = enc.program.add_variable(
                    format!("c_t{t}_e{}", e.0),
                    0.0,
                    upper,
                    VarKind::Integer,
                    ev.log_probability(),
                );
                enc.map.var_of_count.insert((t, e), j);
                for (s, n) in ev.consequence.iter() {
                    enc.psi[t].entry(s).or_default().terms.push((j, n as f64));
                }
            }
        }
    }

    for t in 1..=horizon {
        let step_vars: Vec<(EventId, usize)> = enc
            .map
            .var_of_count
            .range((t, EventId(0))..=(t, EventId(u32::MAX)))
            .map(|(&(_, e), &j)| (e, j))
            .collect();
        let committed_here: Vec<(EventId, u32)> = opts
            .committed
            .range((t, EventId(0))..=(t, EventId(u32::MAX)))
            .map(|(&(_, e), &n)| (e, n))
            .collect();

        // Agency.
        let mut acting: BTreeMap<StateId, Vec<usize>> = BTreeMap::new();
        for &(e, j) in &step_vars {
            if let Actor::Agent(s) = model.events()[e.index()].actor {
                acting.entry(s).or_default().push(j);
            }
        }
        let mut committed_actors = StateMultiset::new();
        for &(e, n) in &committed_here {
            if let Actor::Agent(s) = model.events()[e.index()].actor {
                committed_actors.insert(s, n);
            }
        }
        let agency_states: BTreeSet<StateId> = match opts.agency {
            Agency::Exact => acting.keys().copied().chain(enc.psi[t - 1].keys().copied()).collect(),
            Agency::AtMost => acting.keys().copied().collect(),
        };
        for s in agency_states {
            let psi = enc.psi(t - 1, s);
            let mut terms: Vec<(usize, f64)> = acting.get(&s).map(|v| v.iter().map(|&j| (j, 1.0)).collect()).unwrap_or_default();
            terms.extend(psi.terms.iter().map(|&(k, a)| (k, -a)));
            let rhs = psi.constant - committed_actors.count(s) as f64;
            match opts.agency {
                Agency::Exact => enc.row(terms, rhs, rhs),
                Agency::AtMost => enc.row(terms, f64::NEG_INFINITY, rhs),
            }
        }

        // Presence and absence, one row per conditioned state and actor
        // state. The constant `K` bounds how many events the row counts: the
        // occupancy cap of the actor, or the open injections.
        #[derive(Default)]
        struct Condition {
            vars: Vec<usize>,
            injected: f64,
            committed: u32,
        }
        let mut presence: BTreeMap<(StateId, Option<StateId>), Condition> = BTreeMap::new();
        let mut absence: BTreeMap<(StateId, Option<StateId>), Condition> = BTreeMap::new();
        for &(e, j) in &step_vars {
            let ev = &model.events()[e.index()];
            let upper = enc.program.variables[j].upper;
            for (conds, map) in [(&ev.requires, &mut presence), (&ev.forbids, &mut absence)] {
                for &s in conds {
                    let c = map.entry((s, ev.actor_state())).or_default();
                    c.vars.push(j);
                    if ev.actor_state().is_none() {
                        c.injected += upper;
                    }
                }
            }
        }
        for &(e, n) in &committed_here {
            let ev = &model.events()[e.index()];
            for &s in &ev.forbids {
                let c = absence.entry((s, ev.actor_state())).or_default();
                c.committed += n;
                if ev.actor_state().is_none() {
                    c.injected += n as f64;
                }
            }
        }
        let bound = |enc: &Encoder, actor: Option<StateId>, c: &Condition| -> f64 {
            let k = match actor {
                Some(a) => enc.cap(t - 1, a),
                None => c.injected,
            };
            k.max(c.committed as f64).max(1.0)
        };
        for ((s, actor), c) in presence {
            let b = enc.indicator(t - 1, s)?;
            let k = bound(&enc, actor, &c);
            let mut terms: Vec<(usize, f64)> = c.vars.iter().map(|&j| (j, 1.0)).collect();
            terms.push((b, -k));
            enc.row(terms, f64::NEG_INFINITY, 0.0);
        }
        for ((s, actor), c) in absence {
            if c.vars.is_empty() && enc.psi(t - 1, s).is_constant() {
                // Already checked by the partial-feasibility precondition.
                continue;
            }
            let b = enc.indicator(t - 1, s)?;
            let k = bound(&enc, actor, &c);
            let mut terms: Vec<(usize, f64)> = c.vars.iter().map(|&j| (j, 1.0)).collect();
            terms.push((b, k));
            enc.row(terms, f64::NEG_INFINITY, k - c.committed as f64);
        }
    }

    // Observations.
    for obs in observations {
        let t = obs.timestep;
        let skip = opts.observation_rows == ObservationRows::SkipCommitted
            && t > 0
            && opts.committed.range((t, EventId(0))..=(t, EventId(u32::MAX))).next().is_some();
        if skip {
            continue;
        }
        let mut terms = Vec::new();
        let mut constant = 0.0;
        for &s in &obs.predicate {
            let psi = enc.psi(t, s);
            terms.extend(psi.terms);
            constant += psi.constant;
        }
        let upper = obs.upper.map_or(f64::INFINITY, |u| u as f64 - constant);
        enc.row(terms, obs.lower as f64 - constant, upper);
    }

    Ok((enc.program, enc.map))
}

/// `Ψ_t` of the committed events alone, for `t = 0..=horizon`, including
/// certain injections.
pub fn committed_occupancy(
    model: &BehaviourModel,
    initial: &StateMultiset,
    committed: &Commitments,
    horizon: usize,
) -> Vec<StateMultiset> {
    let mut out: Vec<StateMultiset> =
        (0..=horizon).map(|t| if t == 0 { initial.clone() } else { model.certain_injections_at(t) }).collect();
    for (&(t, e), &n) in committed {
        if t <= horizon {
            out[t].add_scaled(&model.events()[e.index()].consequence, n);
        }
    }
    out
}

/// Agents of the committed occupancy at each timestep that no committed
/// event moves on: the hanging agents, and at `horizon` everybody.
pub fn uncommitted_agents(
    model: &BehaviourModel,
    initial: &StateMultiset,
    committed: &Commitments,
    horizon: usize,
) -> Vec<StateMultiset> {
    let mut out = committed_occupancy(model, initial, committed, horizon);
    for (&(t, e), &n) in committed {
        if let (Actor::Agent(s), true) = (model.events()[e.index()].actor, (1..=horizon).contains(&t)) {
            out[t - 1].remove(s, n);
        }
    }
    out
}

fn committed_trajectory(initial: &StateMultiset, committed: &Commitments, horizon: usize) -> Trajectory {
    let mut traj = Trajectory::new(initial.clone());
    traj.steps = vec![ModelEvent::new(); horizon];
    for (&(t, e), &n) in committed {
        if (1..=horizon).contains(&t) {
            traj.steps[t - 1].add(e, n);
        }
    }
    traj
}

/// Trajectory of committed counts plus the rounded solution counts.
pub fn decode(values: &[f64], map: &EncodingMap) -> Result<Trajectory> {
    let mut traj = committed_trajectory(&map.initial, &map.committed, map.horizon);
    for (&(t, e), &j) in &map.var_of_count {
        let v = *values
            .get(j)
            .ok_or_else(|| Error::Solver(format!("assignment lacks variable {j}")))?;
        let r = libm::round(v);
        if libm::fabs(v - r) > INTEGRALITY_TOL || r < 0.0 {
            return Err(Error::Solver(format!("count of {e} at t={t} is not a non-negative integer: {v}")));
        }
        traj.steps[t - 1].add(e, r as u32);
    }
    Ok(traj)
}

/// The program assignment corresponding to `traj`: `c_te` is the count in
/// `traj` minus the commitment, `b_tφ = [Ψ_tφ > 0]`. Fails if `traj` uses an
/// event that has no variable or undercuts a commitment.
pub fn assignment_for(
    model: &BehaviourModel,
    program: &IntegerProgram,
    map: &EncodingMap,
    traj: &Trajectory,
) -> Result<Vec<f64>> {
    let mut values = vec![0.0; program.num_variables()];
    for t in 1..=map.horizon.min(traj.horizon()) {
        for (e, n) in traj.steps[t - 1].iter() {
            let c = map.committed.get(&(t, e)).copied().unwrap_or(0);
            if n < c {
                return Err(Error::Precondition(format!("trajectory undercuts commitment of {e} at t={t}")));
            }
            if n == c {
                continue;
            }
            let j = map
                .var_of_count
                .get(&(t, e))
                .ok_or_else(|| Error::Precondition(format!("event {e} at t={t} has no variable")))?;
            values[*j] = (n - c) as f64;
        }
    }
    for (&(t, s), &j) in &map.var_of_bool {
        let psi = model.states_at(traj, t)?;
        values[j] = if psi.count(s) > 0 { 1.0 } else { 0.0 };
    }
    Ok(values)
}
