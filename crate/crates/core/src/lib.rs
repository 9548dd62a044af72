//! Maximum-a-posteriori event trajectories for discrete-time, discrete-state
//! stochastic agent-based models.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: the event calculus. States, multisets, agent events,
//!   trajectories, feasibility, probability and observation checks. Every
//!   other module is tested against it.
//! - [`predprey`]: the spatial predator-prey behaviour model on a torus.
//! - [`simulate`]: forward sampling and synthetic count observations.
//! - [`encode`]: compilation of offline and online MAP queries into a pure
//!   integer program, and decoding of solutions back into trajectories.
//! - [`milp`]: a deterministic dual-simplex / branch-and-bound integer
//!   program solver plus LP text export and parsing.
//! - [`assimilate`]: offline windowed MAP and online streaming assimilation
//!   with commitment, rollback, departure and completion.
//! - [`metrics`]: unobserved-agent distance curves and log posterior ratios.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

pub mod assimilate;
pub mod encode;
mod error;
pub mod metrics;
pub mod milp;
pub mod model;
pub mod predprey;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{
    Actor, AgentEvent, BehaviourModel, EventId, FeasibilityMode, ModelBuilder, ModelEvent,
    Observation, StateDomain, StateId, StateMultiset, Trajectory, Violation, ViolationKind,
};
