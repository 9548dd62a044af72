//! Spatial predator-prey model on an `N × N` torus.
//!
//! Every agent stays, moves to one of its four neighbours, or dies. Prey may
//! also give birth onto a neighbouring square. Prey cannot move onto a square
//! holding a predator; when a predator is adjacent the prey may instead be
//! eaten, in which case a predator appears on the prey's square.
//!
//! The "move / be eaten" mass of each direction is split between a move event
//! (neighbour free of predators) and an eaten event (neighbour holds a
//! predator), so every environment gets the full mass. The "stay / be eaten"
//! mass goes to a stay event when no predator is adjacent and otherwise to the
//! eaten-while-staying event of the first predator-occupied direction in the
//! order up, down, left, right.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{AgentEvent, BehaviourModel, StateDomain, StateId, StateMultiset};

const RATE_SUM_TOLERANCE: f64 = 1e-12;

/// Behaviour probabilities of both species.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Rates {
    pub prey_die: f64,
    pub prey_reproduce: f64,
    pub prey_move: f64,
    pub prey_stay: f64,
    pub predator_die: f64,
    pub predator_move: f64,
    pub predator_stay: f64,
}

impl Default for Rates {
    fn default() -> Self {
        Self {
            prey_die: 0.03,
            prey_reproduce: 0.06,
            prey_move: 0.728,
            prey_stay: 0.182,
            predator_die: 0.05,
            predator_move: 0.76,
            predator_stay: 0.19,
        }
    }
}

impl Rates {
    fn all(&self) -> [f64; 7] {
        [
            self.prey_die,
            self.prey_reproduce,
            self.prey_move,
            self.prey_stay,
            self.predator_die,
            self.predator_move,
            self.predator_stay,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.all().iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Config("rates must lie in [0, 1]".into()));
        }
        let prey = self.prey_die + self.prey_reproduce + self.prey_move + self.prey_stay;
        if libm::fabs(prey - 1.0) > RATE_SUM_TOLERANCE {
            return Err(Error::Config(format!("prey rates sum to {prey}, not 1")));
        }
        let predator = self.predator_die + self.predator_move + self.predator_stay;
        if libm::fabs(predator - 1.0) > RATE_SUM_TOLERANCE {
            return Err(Error::Config(format!("predator rates sum to {predator}, not 1")));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PredPreyConfig {
    pub grid_size: usize,
    pub rates: Rates,
}

impl Default for PredPreyConfig {
    fn default() -> Self {
        Self { grid_size: 32, rates: Rates::default() }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Species {
    Predator = 0,
    Prey = 1,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellState {
    pub species: Species,
    pub row: usize,
    pub col: usize,
}

/// Neighbour directions in their fixed priority order.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];
}

/// Bijection between grid cells and state indices:
/// `species · N² + row · N + col`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        // With N < 3 opposite neighbours coincide and the eaten-while-staying
        // chain would both require and forbid the same square.
        if n < 3 {
            return Err(Error::Config(format!("grid size must be at least 3, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    pub fn domain_size(&self) -> usize {
        2 * self.cells()
    }

    pub fn state(&self, cell: CellState) -> StateId {
        StateId((cell.species as usize * self.cells() + cell.row * self.n + cell.col) as u32)
    }

    pub fn cell(&self, state: StateId) -> CellState {
        let i = state.index();
        let species = if i < self.cells() { Species::Predator } else { Species::Prey };
        let rem = i % self.cells();
        CellState { species, row: rem / self.n, col: rem % self.n }
    }

    pub fn neighbour(&self, cell: CellState, dir: Direction) -> CellState {
        let n = self.n;
        let (row, col) = match dir {
            Direction::Up => ((cell.row + n - 1) % n, cell.col),
            Direction::Down => ((cell.row + 1) % n, cell.col),
            Direction::Left => (cell.row, (cell.col + n - 1) % n),
            Direction::Right => (cell.row, (cell.col + 1) % n),
        };
        CellState { species: cell.species, row, col }
    }

    pub fn with_species(cell: CellState, species: Species) -> CellState {
        CellState { species, ..cell }
    }

    pub fn label(&self, state: StateId) -> String {
        let c = self.cell(state);
        let name = match c.species {
            Species::Predator => "predator",
            Species::Prey => "prey",
        };
        format!("{name}({},{})", c.row, c.col)
    }

    pub fn distance(&self, a: CellState, b: CellState) -> usize {
        torus_l1(a, b, self.n)
    }
}

/// Manhattan distance with periodic wraparound on an `n × n` grid.
pub fn torus_l1(a: CellState, b: CellState, n: usize) -> usize {
    let wrap = |x: usize, y: usize| {
        let d = x.abs_diff(y) % n;
        d.min(n - d)
    };
    wrap(a.row, b.row) + wrap(a.col, b.col)
}

/// Builds the behaviour model. Event ids are assigned state by state in
/// index order, so they are stable across runs.
pub fn build_model(cfg: &PredPreyConfig) -> Result<BehaviourModel> {
    cfg.rates.validate()?;
    let grid = Grid::new(cfg.grid_size)?;
    let labels: Vec<String> = (0..grid.domain_size() as u32).map(|i| grid.label(StateId(i))).collect();
    let mut b = BehaviourModel::builder(StateDomain::with_labels(labels)?);
    let r = &cfg.rates;
    let one = |c: CellState| StateMultiset::singleton(grid.state(c), 1);

    for idx in 0..grid.domain_size() as u32 {
        let here = grid.cell(StateId(idx));
        let me = StateId(idx);
        let dirs = Direction::ALL.map(|d| grid.neighbour(here, d));
        match here.species {
            Species::Predator => {
                b.event(AgentEvent::new(me, StateMultiset::new(), r.predator_die));
                for &d in &dirs {
                    b.event(AgentEvent::new(me, one(d), r.predator_move / 4.0));
                }
                b.event(AgentEvent::new(me, one(here), r.predator_stay));
            }
            Species::Prey => {
                let predator_at = |c: CellState| grid.state(Grid::with_species(c, Species::Predator));
                let eaten = one(Grid::with_species(here, Species::Predator));
                b.event(AgentEvent::new(me, StateMultiset::new(), r.prey_die));
                for &d in &dirs {
                    let mut kids = one(here);
                    kids.add_all(&one(d));
                    b.event(AgentEvent::new(me, kids, r.prey_reproduce / 4.0));
                }
                for &d in &dirs {
                    b.event(AgentEvent::new(me, one(d), r.prey_move / 4.0).forbidding([predator_at(d)]));
                }
                for &d in &dirs {
                    b.event(AgentEvent::new(me, eaten.clone(), r.prey_move / 4.0).requiring([predator_at(d)]));
                }
                b.event(AgentEvent::new(me, one(here), r.prey_stay).forbidding(dirs.map(predator_at)));
                for (k, &d) in dirs.iter().enumerate() {
                    b.event(
                        AgentEvent::new(me, eaten.clone(), r.prey_stay)
                            .requiring([predator_at(d)])
                            .forbidding(dirs[..k].iter().map(|&p| predator_at(p))),
                    );
                }
            }
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cell(row: usize, col: usize) -> CellState {
        CellState { species: Species::Prey, row, col }
    }

    #[test]
    fn table_rates_sum_to_one() {
        Rates::default().validate().unwrap();
        let bad = Rates { prey_die: 0.05, ..Rates::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn event_counts_per_state() {
        let m = build_model(&PredPreyConfig { grid_size: 5, ..Default::default() }).unwrap();
        let g = Grid::new(5).unwrap();
        assert_eq!(m.domain().size(), 50);
        for s in m.domain().states() {
            let expected = match g.cell(s).species {
                Species::Prey => 18,
                Species::Predator => 6,
            };
            assert_eq!(m.events_of(s).len(), expected);
        }
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        for n in [0, 1, 2] {
            assert!(build_model(&PredPreyConfig { grid_size: n, ..Default::default() }).is_err());
        }
    }

    #[test]
    fn state_encoding_is_bijective() {
        let g = Grid::new(4).unwrap();
        for i in 0..g.domain_size() as u32 {
            assert_eq!(g.state(g.cell(StateId(i))), StateId(i));
        }
        let c = CellState { species: Species::Prey, row: 2, col: 3 };
        assert_eq!(g.state(c), StateId(16 + 2 * 4 + 3));
    }

    #[test]
    fn torus_distance_examples() {
        assert_eq!(torus_l1(cell(5, 5), cell(5, 5), 32), 0);
        assert_eq!(torus_l1(cell(0, 0), cell(0, 31), 32), 1);
        assert_eq!(torus_l1(cell(3, 4), cell(10, 30), 32), 13);
    }

    proptest! {
        #[test]
        fn torus_distance_is_a_metric(
            n in 3usize..40,
            a in (0usize..40, 0usize..40),
            b in (0usize..40, 0usize..40),
            c in (0usize..40, 0usize..40),
        ) {
            let [a, b, c] = [a, b, c].map(|(r, k)| cell(r % n, k % n));
            prop_assert_eq!(torus_l1(a, b, n), torus_l1(b, a, n));
            prop_assert_eq!(torus_l1(a, b, n) == 0, a == b);
            prop_assert!(torus_l1(a, c, n) <= torus_l1(a, b, n) + torus_l1(b, c, n));
            prop_assert!(torus_l1(a, b, n) <= n);
        }
    }
}
