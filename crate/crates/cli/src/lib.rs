//! Command-line driver for predator-prey MAP assimilation.
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible or inconsistent
//! observations, 4 solver node budget exhausted, 1 anything else. The node
//! budget per integer program is read from `ABMAP_NODE_LIMIT`.

pub mod formats;

use std::io::Read;
use std::path::PathBuf;
use std::time::Instant;

use abmap_core::assimilate::{map_windowed, AssimilationState};
use abmap_core::encode::{default_multiplicity, encode_offline};
use abmap_core::metrics::{distance_curve, log_ratio};
use abmap_core::milp::{export_lp_text, MilpLimits, NoBudget};
use abmap_core::predprey::build_model;
use abmap_core::simulate::{initial_state, observe, simulate, InitialState, SimConfig};
use abmap_core::{BehaviourModel, Error, Observation, StateMultiset};
use clap::{Parser, Subcommand};
use serde::Serialize;

use formats::{
    parse_json, to_json, write_file, BoundaryFile, Config, ObservationRecord, ObservationsFile, StateFile,
    TrajectoryFile, VERSION,
};

pub const NODE_LIMIT_ENV: &str = "ABMAP_NODE_LIMIT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::Infeasible(_) | Error::Inconsistent => 3,
                Error::BudgetExhausted { .. } => 4,
                Error::Solver(_) => 1,
                _ => 2,
            },
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "abmap", version, about = "MAP event trajectories of a predator-prey agent-based model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a trajectory and synthetic observations.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        /// Also write the initial state as a boundary file.
        #[arg(long)]
        boundary: Option<PathBuf>,
    },
    /// Offline MAP trajectory over consecutive windows.
    Assimilate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        /// Boundary or trajectory file holding the initial state.
        #[arg(long)]
        boundary: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Window length in timesteps [default: the config's window, 7].
        #[arg(long)]
        window: Option<usize>,
        /// Big-M [default: the config's, else agents plus injections].
        #[arg(long)]
        multiplicity: Option<u32>,
    },
    /// Online assimilation with commitment and rollback.
    Stream {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
        /// Observations file, or JSON lines of `{t, L, U, states}` records;
        /// `-` reads standard input.
        #[arg(long, default_value = "-")]
        observations: String,
        /// Last timestep [default: the file's horizon, else the last observed].
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = 1)]
        window: usize,
        #[arg(long)]
        multiplicity: Option<u32>,
        /// Steps before each window that may receive new events, besides
        /// those after a hanging agent [default: unlimited].
        #[arg(long)]
        lookback: Option<usize>,
        /// Session file, read if present and rewritten after every window.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Stop after this many windows without completing.
        #[arg(long)]
        max_windows: Option<usize>,
        /// Committed partial trajectory.
        #[arg(long)]
        partial: Option<PathBuf>,
        /// Completed trajectory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-window statistics as JSON. Solve times go to standard error.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Write the offline integer program in LP text format.
    ExportLp {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        #[arg(long)]
        boundary: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        multiplicity: Option<u32>,
    },
    /// Unobserved-agent distance curve with a random-placement baseline.
    Metrics {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        estimate: PathBuf,
        #[arg(long)]
        observations: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Baseline seed [default: the config's seed].
        #[arg(long)]
        seed: Option<u64>,
        /// CSV output [default: standard output].
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `ABMAP_NODE_LIMIT`.
pub fn limits_from_env() -> Result<MilpLimits, CliError> {
    match std::env::var(NODE_LIMIT_ENV) {
        Ok(v) => {
            let n = v
                .trim()
                .parse::<u64>()
                .map_err(|_| CliError::Input(format!("{NODE_LIMIT_ENV} must be a node count, got {v:?}")))?;
            Ok(MilpLimits { max_nodes: Some(n) })
        }
        Err(_) => Ok(MilpLimits::default()),
    }
}

fn model_of(cfg: &Config) -> Result<BehaviourModel, CliError> {
    build_model(&cfg.model_config()).map_err(|e| CliError::Input(e.to_string()))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let limits = limits_from_env()?;
    match cli.command {
        Command::Simulate { config, trajectory, observations, boundary } => {
            let cfg = Config::load(&config)?;
            let model = model_of(&cfg)?;
            let sim = SimConfig {
                seed: cfg.seed,
                timesteps: cfg.timesteps,
                initial: InitialState::Uniform {
                    grid_size: cfg.grid_size,
                    predators: cfg.initial.predators,
                    prey: cfg.initial.prey,
                },
                observe_prob: cfg.observe_prob,
            };
            sim.validate().map_err(|e| CliError::Input(e.to_string()))?;
            let traj = simulate(&model, &sim)?;
            let obs = observe(&model, &traj, cfg.observe_prob, cfg.seed)?;
            let domain = cfg.domain_size();
            write_file(&trajectory, &to_json(&TrajectoryFile::new(&traj, domain, model.events().len())))?;
            write_file(&observations, &to_json(&ObservationsFile::new(&obs, domain, cfg.timesteps)))?;
            if let Some(b) = boundary {
                write_file(&b, &to_json(&BoundaryFile::new(&initial_state(&sim)?, domain)))?;
            }
            Ok(())
        }
        Command::Assimilate { config, observations, boundary, out, window, multiplicity } => {
            let cfg = Config::load(&config)?;
            let model = model_of(&cfg)?;
            let domain = cfg.domain_size();
            let (obs, horizon) = ObservationsFile::load(&observations, domain)?;
            let initial = BoundaryFile::load(&boundary, domain)?;
            let window = window.unwrap_or(cfg.window);
            let m = multiplicity.or(cfg.multiplicity).unwrap_or_else(|| default_multiplicity(&model, &initial));
            let solved = map_windowed(&model, &initial, &obs, horizon, window, m, limits, &mut NoBudget)?;
            write_file(&out, &to_json(&TrajectoryFile::new(&solved.trajectory, domain, model.events().len())))
        }
        Command::Stream {
            config,
            boundary,
            observations,
            horizon,
            window,
            multiplicity,
            lookback,
            state,
            max_windows,
            partial,
            out,
            stats,
        } => {
            let cfg = Config::load(&config)?;
            let model = model_of(&cfg)?;
            let domain = cfg.domain_size();
            let text = if observations == "-" {
                let mut s = String::new();
                std::io::stdin()
                    .read_to_string(&mut s)
                    .map_err(|e| CliError::Input(format!("cannot read standard input: {e}")))?;
                s
            } else {
                std::fs::read_to_string(&observations)
                    .map_err(|e| CliError::Input(format!("cannot read {observations}: {e}")))?
            };
            let (obs, file_horizon) = parse_stream(&text, &observations, domain)?;
            let horizon = horizon.or(file_horizon).unwrap_or_else(|| obs.iter().map(|o| o.timestep).max().unwrap_or(0));
            let initial = BoundaryFile::load(&boundary, domain)?;
            let opts = StreamOptions {
                horizon,
                window,
                multiplicity: multiplicity.or(cfg.multiplicity),
                lookback,
                departure: cfg.departure_threshold.map(|th| (th, cfg.observe_prob)),
                max_windows,
                limits,
            };
            let resumed = match &state {
                Some(p) if p.exists() => Some(StateFile::load(p, domain, limits)?),
                _ => None,
            };
            let res = stream(&model, initial, &obs, resumed, &opts, |st| match &state {
                Some(p) => write_file(p, &to_json(&StateFile::new(st, domain))),
                None => Ok(()),
            })?;
            let events = model.events().len();
            if let Some(p) = partial {
                write_file(&p, &to_json(&TrajectoryFile::new(&res.state.partial_trajectory(), domain, events)))?;
            }
            if let (Some(p), Some(done)) = (out, &res.completed) {
                write_file(&p, &to_json(&TrajectoryFile::new(done, domain, events)))?;
            }
            if let Some(p) = stats {
                write_file(&p, &to_json(&res.stats))?;
            }
            Ok(())
        }
        Command::ExportLp { config, observations, boundary, out, multiplicity } => {
            let cfg = Config::load(&config)?;
            let model = model_of(&cfg)?;
            let domain = cfg.domain_size();
            let (obs, horizon) = ObservationsFile::load(&observations, domain)?;
            let initial = BoundaryFile::load(&boundary, domain)?;
            let m = multiplicity.or(cfg.multiplicity).unwrap_or_else(|| default_multiplicity(&model, &initial));
            let (program, _) = encode_offline(&model, &initial, &obs, horizon, m)?;
            write_file(&out, &export_lp_text(&program))
        }
        Command::Metrics { config, real, estimate, observations, samples, seed, out } => {
            let cfg = Config::load(&config)?;
            let model = model_of(&cfg)?;
            let domain = cfg.domain_size();
            let events = model.events().len();
            let real = TrajectoryFile::load(&real, domain, events)?;
            let estimate = TrajectoryFile::load(&estimate, domain, events)?;
            let (obs, _) = ObservationsFile::load(&observations, domain)?;
            let rows = distance_curve(&model, &real, &estimate, &obs, cfg.grid_size, samples, seed.unwrap_or(cfg.seed))?;
            let mut csv = String::from("t,mean_distance,n_samples,baseline\n");
            for r in &rows {
                csv.push_str(&format!("{},{:.6},{},{:.6}\n", r.t, r.distance.mean, r.distance.n_samples, r.baseline));
            }
            csv.push_str(&format!("# log_ratio,{:.9}\n", log_ratio(&model, &estimate, &real)));
            match out {
                Some(p) => write_file(&p, &csv),
                None => {
                    print!("{csv}");
                    Ok(())
                }
            }
        }
    }
}

/// Observations from an observations file, or from JSON lines of records.
/// Returns the file's horizon when it has one.
pub fn parse_stream(text: &str, origin: &str, domain: usize) -> Result<(Vec<Observation>, Option<usize>), CliError> {
    if text.trim_start().starts_with('{') && text.contains("\"format\"") {
        let (obs, h) = ObservationsFile::parse(text, origin, domain)?;
        return Ok((obs, Some(h)));
    }
    let obs = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            parse_json::<ObservationRecord>(l, &format!("{origin} line {}", i + 1))?.to_observation(domain)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((obs, None))
}

#[derive(Clone, Debug, PartialEq)]
pub struct StreamOptions {
    pub horizon: usize,
    pub window: usize,
    pub multiplicity: Option<u32>,
    pub lookback: Option<usize>,
    /// Evasion threshold and observation probability.
    pub departure: Option<(f64, f64)>,
    pub max_windows: Option<usize>,
    pub limits: MilpLimits,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowStats {
    pub end: usize,
    pub rollbacks: u64,
    pub nodes: u64,
    pub new_events: u64,
    pub departures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamStats {
    pub format: String,
    pub version: u32,
    pub windows: Vec<WindowStats>,
    pub rollback_count: u64,
    pub completion_nodes: Option<u64>,
}

pub struct StreamResult {
    pub state: AssimilationState,
    pub completed: Option<abmap_core::Trajectory>,
    pub stats: StreamStats,
}

/// Feeds `observations` to an online session window by window, resuming
/// `resumed` when given, and completes the trajectory unless stopped early.
/// `persist` runs after every window.
pub fn stream(
    model: &BehaviourModel,
    initial: StateMultiset,
    observations: &[Observation],
    resumed: Option<AssimilationState>,
    opts: &StreamOptions,
    mut persist: impl FnMut(&AssimilationState) -> Result<(), CliError>,
) -> Result<StreamResult, CliError> {
    if opts.window == 0 {
        return Err(CliError::Input("window must be at least 1".into()));
    }
    if let Some(o) = observations.iter().find(|o| o.timestep > opts.horizon) {
        return Err(CliError::Input(format!("observation at t={} beyond horizon {}", o.timestep, opts.horizon)));
    }
    let mut st = match resumed {
        Some(st) => {
            if st.initial != initial {
                return Err(CliError::Input("state file was started from a different initial state".into()));
            }
            st
        }
        None => {
            let mut st = AssimilationState::new(initial, opts.multiplicity);
            st.config.lookback = opts.lookback;
            st.config.limits = opts.limits;
            st
        }
    };
    let mut stats = StreamStats {
        format: "abmap-stream-stats".into(),
        version: VERSION,
        windows: Vec::new(),
        rollback_count: st.rollback_count,
        completion_nodes: None,
    };
    let mut done_windows = 0;
    while st.horizon < opts.horizon {
        if opts.max_windows.is_some_and(|k| done_windows >= k) {
            stats.rollback_count = st.rollback_count;
            return Ok(StreamResult { state: st, completed: None, stats });
        }
        let end = (st.horizon + opts.window).min(opts.horizon);
        let new: Vec<Observation> =
            observations.iter().filter(|o| o.timestep > st.horizon && o.timestep <= end).cloned().collect();
        let started = Instant::now();
        let report = st.step_online(model, &new, end, &mut NoBudget)?;
        let departures = match opts.departure {
            Some((threshold, p)) => st.commit_departure(model, threshold, p)?.len(),
            None => 0,
        };
        eprintln!("window ending t={end}: {:.3} s, {} nodes", started.elapsed().as_secs_f64(), report.nodes);
        stats.windows.push(WindowStats {
            end,
            rollbacks: report.rollbacks,
            nodes: report.nodes,
            new_events: report.new_events,
            departures,
        });
        persist(&st)?;
        done_windows += 1;
    }
    let completed = st.complete(model, &mut NoBudget)?;
    stats.rollback_count = st.rollback_count;
    stats.completion_nodes = Some(completed.nodes);
    Ok(StreamResult { state: st, completed: Some(completed.trajectory), stats })
}

