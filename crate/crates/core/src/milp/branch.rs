//! Best-bound branch-and-bound over the dual simplex relaxation.

use alloc::collections::BinaryHeap;
use alloc::rc::Rc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::simplex::{Columns, LpStatus, Simplex, Snapshot};
use super::{IntegerProgram, VarKind, INTEGRALITY_TOL, PRUNE_TOL};
use crate::error::Result;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    /// The node or time budget ran out. The incumbent, if any, is returned
    /// together with the best remaining bound.
    Timeout,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub incumbent: Option<Vec<f64>>,
    /// Objective of the incumbent, `-∞` without one.
    pub objective: f64,
    pub nodes_explored: u64,
    /// Best bound over unexplored nodes; equals `objective` when optimal.
    pub bound: f64,
    pub simplex_iterations: u64,
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct MilpLimits {
    pub max_nodes: Option<u64>,
}

/// External stopping condition, polled once per node.
pub trait Budget {
    fn exhausted(&mut self) -> bool;
}

pub struct NoBudget;

impl Budget for NoBudget {
    fn exhausted(&mut self) -> bool {
        false
    }
}

impl<F: FnMut() -> bool> Budget for F {
    fn exhausted(&mut self) -> bool {
        self()
    }
}

struct Node {
    id: u64,
    bound: f64,
    /// Bound tightenings accumulated from the root, sorted by variable.
    fixes: Vec<(u32, f64, f64)>,
    warm: Option<Rc<Snapshot>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: larger bound first, then older node first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve_milp(program: &IntegerProgram, limits: MilpLimits) -> Result<MilpResult> {
    solve_milp_with(program, limits, &mut NoBudget)
}

/// Maximises `program` exactly. Branches on the most fractional integer
/// variable (lowest index on ties), down child first.
pub fn solve_milp_with(program: &IntegerProgram, limits: MilpLimits, budget: &mut dyn Budget) -> Result<MilpResult> {
    program.validate()?;
    let cols = Rc::new(Columns::new(program));
    let (root_lo, root_hi) = cols.bounds(program);
    let n = program.variables.len();
    let integer: Vec<bool> = program.variables.iter().map(|v| v.kind != VarKind::Continuous).collect();

    let mut heap = BinaryHeap::new();
    heap.push(Node { id: 0, bound: f64::INFINITY, fixes: Vec::new(), warm: None });
    let mut next_id = 1u64;
    let mut incumbent: Option<Vec<f64>> = None;
    let mut best = f64::NEG_INFINITY;
    let mut nodes = 0u64;
    let mut iterations = 0u64;
    // The last solved node's simplex, reused when its child comes next.
    let mut last: Option<(Rc<Snapshot>, Simplex)> = None;
    let (mut lo, mut hi) = (root_lo.clone(), root_hi.clone());

    while let Some(node) = heap.pop() {
        if node.bound <= best + PRUNE_TOL {
            heap.clear();
            break;
        }
        if limits.max_nodes.is_some_and(|max| nodes >= max) || budget.exhausted() {
            let bound = node.bound.max(best);
            heap.push(node);
            return Ok(MilpResult {
                status: MilpStatus::Timeout,
                objective: best,
                incumbent,
                nodes_explored: nodes,
                bound,
                simplex_iterations: iterations,
            });
        }
        nodes += 1;

        lo.copy_from_slice(&root_lo);
        hi.copy_from_slice(&root_hi);
        for &(j, l, h) in &node.fixes {
            lo[j as usize] = l;
            hi[j as usize] = h;
        }
        let mut lp = match (&node.warm, last.take()) {
            (Some(w), Some((snap, mut lp))) if Rc::ptr_eq(w, &snap) => {
                lp.set_bounds(&lo, &hi);
                lp
            }
            (Some(w), _) => Simplex::from_snapshot(cols.clone(), lo.clone(), hi.clone(), w),
            (None, _) => Simplex::new(cols.clone(), lo.clone(), hi.clone()),
        };
        let before = lp.iterations;
        let status = lp.solve()?;
        iterations += lp.iterations - before;
        match status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(crate::Error::Solver("relaxation is unbounded".into()));
            }
            LpStatus::Optimal => {}
        }
        let sol = lp.solution(program, status);
        if sol.objective <= best + PRUNE_TOL {
            continue;
        }
        let branch_var = (0..n)
            .filter(|&j| integer[j])
            .map(|j| {
                let f = sol.values[j] - libm::floor(sol.values[j]);
                (j, f.min(1.0 - f))
            })
            .filter(|&(_, score)| score > INTEGRALITY_TOL)
            .fold(None, |acc: Option<(usize, f64)>, (j, s)| match acc {
                Some((_, bs)) if bs >= s => acc,
                _ => Some((j, s)),
            });
        match branch_var {
            None => {
                let values: Vec<f64> = sol
                    .values
                    .iter()
                    .zip(&integer)
                    .map(|(&x, &int)| if int { libm::round(x) } else { x })
                    .collect();
                best = program.objective_value(&values);
                incumbent = Some(values);
            }
            Some((j, _)) => {
                let v = sol.values[j];
                let snap = Rc::new(lp.snapshot());
                let child = |l: f64, h: f64, id: u64| {
                    let mut fixes = node.fixes.clone();
                    match fixes.binary_search_by_key(&(j as u32), |f| f.0) {
                        Ok(k) => fixes[k] = (j as u32, l, h),
                        Err(k) => fixes.insert(k, (j as u32, l, h)),
                    }
                    Node { id, bound: sol.objective, fixes, warm: Some(snap.clone()) }
                };
                heap.push(child(lo[j], libm::floor(v), next_id));
                heap.push(child(libm::ceil(v), hi[j], next_id + 1));
                next_id += 2;
                last = Some((snap, lp));
            }
        }
    }
    let status = if incumbent.is_some() { MilpStatus::Optimal } else { MilpStatus::Infeasible };
    Ok(MilpResult {
        status,
        objective: best,
        bound: best,
        incumbent,
        nodes_explored: nodes,
        simplex_iterations: iterations,
    })
}
