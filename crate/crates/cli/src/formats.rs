//! JSON file formats. Every file carries a `format` tag, a `version` and the
//! size of the state domain it refers to.

use std::collections::BTreeSet;
use std::path::Path;

use abmap_core::assimilate::{AssimilationState, OnlineConfig};
use abmap_core::encode::Commitments;
use abmap_core::milp::MilpLimits;
use abmap_core::predprey::{PredPreyConfig, Rates};
use abmap_core::{EventId, ModelEvent, Observation, StateId, StateMultiset, Trajectory};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const VERSION: u32 = 1;

pub const STATE_LEGEND: &str =
    "state = species * N^2 + row * N + col, species 0 = predator, 1 = prey; events are numbered state by state in index order";

fn check_header(kind: &str, format: &str, version: u32) -> Result<(), CliError> {
    if format != kind {
        return Err(CliError::Input(format!("expected a {kind} file, found {format:?}")));
    }
    if version != VERSION {
        return Err(CliError::Input(format!("unsupported {kind} version {version}")));
    }
    Ok(())
}

fn check_domain(kind: &str, found: usize, expected: usize) -> Result<(), CliError> {
    if found != expected {
        return Err(CliError::Input(format!(
            "{kind} file is for a domain of {found} states, the model has {expected}"
        )));
    }
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("cannot parse {origin}: {e}")))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesFile {
    pub prey_die: f64,
    pub prey_reproduce: f64,
    pub prey_move: f64,
    pub prey_stay: f64,
    pub predator_die: f64,
    pub predator_move: f64,
    pub predator_stay: f64,
}

impl Default for RatesFile {
    fn default() -> Self {
        let r = Rates::default();
        Self {
            prey_die: r.prey_die,
            prey_reproduce: r.prey_reproduce,
            prey_move: r.prey_move,
            prey_stay: r.prey_stay,
            predator_die: r.predator_die,
            predator_move: r.predator_move,
            predator_stay: r.predator_stay,
        }
    }
}

impl From<&RatesFile> for Rates {
    fn from(r: &RatesFile) -> Self {
        Rates {
            prey_die: r.prey_die,
            prey_reproduce: r.prey_reproduce,
            prey_move: r.prey_move,
            prey_stay: r.prey_stay,
            predator_die: r.predator_die,
            predator_move: r.predator_move,
            predator_stay: r.predator_stay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCounts {
    pub predators: u32,
    pub prey: u32,
}

fn config_format() -> String {
    "abmap-config".into()
}
fn version() -> u32 {
    VERSION
}
fn default_grid() -> usize {
    32
}
fn default_timesteps() -> usize {
    7
}
fn default_initial() -> InitialCounts {
    InitialCounts { predators: 40, prey: 60 }
}
fn default_observe_prob() -> f64 {
    abmap_core::simulate::DEFAULT_OBSERVE_PROB
}
fn default_window() -> usize {
    7
}

/// Run configuration. Every field except the header has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "config_format")]
    pub format: String,
    #[serde(default = "version")]
    pub version: u32,
    #[serde(default = "default_grid")]
    pub grid_size: usize,
    #[serde(default)]
    pub rates: RatesFile,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_timesteps")]
    pub timesteps: usize,
    #[serde(default = "default_initial")]
    pub initial: InitialCounts,
    #[serde(default = "default_observe_prob")]
    pub observe_prob: f64,
    /// Big-M; the agent count plus scheduled injections when absent.
    #[serde(default)]
    pub multiplicity: Option<u32>,
    #[serde(default = "default_window")]
    pub window: usize,
    /// Evasion probability below which hanging agents are removed when
    /// streaming. Absent disables departures.
    #[serde(default)]
    pub departure_threshold: Option<f64>,
}

impl Default for Config {
    fn default() -> Self {
        parse_json("{}", "default").expect("defaults")
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let c: Config = read_json(path)?;
        check_header("abmap-config", &c.format, c.version)?;
        c.model_config().rates.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(c)
    }

    pub fn model_config(&self) -> PredPreyConfig {
        PredPreyConfig { grid_size: self.grid_size, rates: (&self.rates).into() }
    }

    pub fn domain_size(&self) -> usize {
        2 * self.grid_size * self.grid_size
    }
}

fn multiset_to_pairs(m: &StateMultiset) -> Vec<(u32, u32)> {
    m.iter().map(|(s, n)| (s.0, n)).collect()
}

fn pairs_to_multiset(pairs: &[(u32, u32)], domain: usize) -> Result<StateMultiset, CliError> {
    let mut m = StateMultiset::new();
    for &(s, n) in pairs {
        if s as usize >= domain {
            return Err(CliError::Input(format!("state {s} outside the domain of {domain} states")));
        }
        m.insert(StateId(s), n);
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryFile {
    pub format: String,
    pub version: u32,
    pub domain_size: usize,
    pub num_events: usize,
    pub legend: String,
    pub initial: Vec<(u32, u32)>,
    /// `[event id, count]` lists, one per timestep `1..=T`.
    pub steps: Vec<Vec<(u32, u32)>>,
}

impl TrajectoryFile {
    pub fn new(traj: &Trajectory, domain_size: usize, num_events: usize) -> Self {
        Self {
            format: "abmap-trajectory".into(),
            version: VERSION,
            domain_size,
            num_events,
            legend: STATE_LEGEND.into(),
            initial: multiset_to_pairs(&traj.initial),
            steps: traj.steps.iter().map(|s| s.iter().map(|(e, n)| (e.0, n)).collect()).collect(),
        }
    }

    pub fn parse(text: &str, origin: &str, domain_size: usize, num_events: usize) -> Result<Trajectory, CliError> {
        let f: TrajectoryFile = parse_json(text, origin)?;
        check_header("abmap-trajectory", &f.format, f.version)?;
        check_domain("trajectory", f.domain_size, domain_size)?;
        if f.num_events != num_events {
            return Err(CliError::Input(format!(
                "trajectory file refers to {} events, the model has {num_events}",
                f.num_events
            )));
        }
        let mut traj = Trajectory::new(pairs_to_multiset(&f.initial, domain_size)?);
        for step in &f.steps {
            let mut m = ModelEvent::new();
            for &(e, n) in step {
                if e as usize >= num_events {
                    return Err(CliError::Input(format!("unknown event id {e}")));
                }
                m.add(EventId(e), n);
            }
            traj.steps.push(m);
        }
        Ok(traj)
    }

    pub fn load(path: &Path, domain_size: usize, num_events: usize) -> Result<Trajectory, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string(), domain_size, num_events)
    }
}

/// Initial state of a run: the `initial` of a trajectory file or of a
/// boundary file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFile {
    pub format: String,
    pub version: u32,
    pub domain_size: usize,
    pub initial: Vec<(u32, u32)>,
}

impl BoundaryFile {
    pub fn new(initial: &StateMultiset, domain_size: usize) -> Self {
        Self { format: "abmap-boundary".into(), version: VERSION, domain_size, initial: multiset_to_pairs(initial) }
    }

    pub fn load(path: &Path, domain_size: usize) -> Result<StateMultiset, CliError> {
        let f: BoundaryFile = read_json(path)?;
        let kind = if f.format == "abmap-trajectory" { "abmap-trajectory" } else { "abmap-boundary" };
        check_header(kind, &f.format, f.version)?;
        check_domain("boundary", f.domain_size, domain_size)?;
        pairs_to_multiset(&f.initial, domain_size)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationRecord {
    pub t: usize,
    #[serde(rename = "L")]
    pub lower: u32,
    #[serde(rename = "U")]
    pub upper: Option<u32>,
    pub states: Vec<u32>,
}

impl ObservationRecord {
    pub fn new(o: &Observation) -> Self {
        Self { t: o.timestep, lower: o.lower, upper: o.upper, states: o.predicate.iter().map(|s| s.0).collect() }
    }

    pub fn to_observation(&self, domain: usize) -> Result<Observation, CliError> {
        if self.t == 0 {
            return Err(CliError::Input("observations start at t = 1".into()));
        }
        if let Some(&s) = self.states.iter().find(|&&s| s as usize >= domain) {
            return Err(CliError::Input(format!("observed state {s} outside the domain of {domain} states")));
        }
        Observation::new(self.t, self.lower, self.upper, self.states.iter().map(|&s| StateId(s)))
            .map_err(|e| CliError::Input(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationsFile {
    pub format: String,
    pub version: u32,
    pub domain_size: usize,
    /// Last timestep covered, observed or not.
    pub horizon: usize,
    pub observations: Vec<ObservationRecord>,
}

impl ObservationsFile {
    pub fn new(obs: &[Observation], domain_size: usize, horizon: usize) -> Self {
        Self {
            format: "abmap-observations".into(),
            version: VERSION,
            domain_size,
            horizon,
            observations: obs.iter().map(ObservationRecord::new).collect(),
        }
    }

    pub fn parse(text: &str, origin: &str, domain_size: usize) -> Result<(Vec<Observation>, usize), CliError> {
        let f: ObservationsFile = parse_json(text, origin)?;
        check_header("abmap-observations", &f.format, f.version)?;
        check_domain("observations", f.domain_size, domain_size)?;
        let obs = f.observations.iter().map(|r| r.to_observation(domain_size)).collect::<Result<Vec<_>, _>>()?;
        if let Some(o) = obs.iter().find(|o| o.timestep > f.horizon) {
            return Err(CliError::Input(format!("observation at t={} beyond horizon {}", o.timestep, f.horizon)));
        }
        Ok((obs, f.horizon))
    }

    pub fn load(path: &Path, domain_size: usize) -> Result<(Vec<Observation>, usize), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string(), domain_size)
    }
}

/// A streaming session persisted between windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub format: String,
    pub version: u32,
    pub domain_size: usize,
    pub initial: Vec<(u32, u32)>,
    /// `[t, event id, count]`.
    pub committed: Vec<(usize, u32, u32)>,
    pub horizon: usize,
    pub observations: Vec<ObservationRecord>,
    pub rollback_count: u64,
    pub multiplicity: Option<u32>,
    pub lookback: Option<usize>,
}

impl StateFile {
    pub fn new(st: &AssimilationState, domain_size: usize) -> Self {
        Self {
            format: "abmap-state".into(),
            version: VERSION,
            domain_size,
            initial: multiset_to_pairs(&st.initial),
            committed: st.committed.iter().map(|(&(t, e), &n)| (t, e.0, n)).collect(),
            horizon: st.horizon,
            observations: st.observations.iter().map(ObservationRecord::new).collect(),
            rollback_count: st.rollback_count,
            multiplicity: st.config.multiplicity,
            lookback: st.config.lookback,
        }
    }

    pub fn load(path: &Path, domain_size: usize, limits: MilpLimits) -> Result<AssimilationState, CliError> {
        let f: StateFile = read_json(path)?;
        check_header("abmap-state", &f.format, f.version)?;
        check_domain("state", f.domain_size, domain_size)?;
        let committed: Commitments = f.committed.iter().map(|&(t, e, n)| ((t, EventId(e)), n)).collect();
        let steps: BTreeSet<usize> = committed.keys().map(|&(t, _)| t).collect();
        if steps.iter().any(|&t| t == 0 || t > f.horizon) {
            return Err(CliError::Input("state file commits events outside its horizon".into()));
        }
        Ok(AssimilationState {
            initial: pairs_to_multiset(&f.initial, domain_size)?,
            committed,
            horizon: f.horizon,
            observations: f
                .observations
                .iter()
                .map(|r| r.to_observation(domain_size))
                .collect::<Result<Vec<_>, _>>()?,
            rollback_count: f.rollback_count,
            config: OnlineConfig { multiplicity: f.multiplicity, lookback: f.lookback, limits },
        })
    }
}
