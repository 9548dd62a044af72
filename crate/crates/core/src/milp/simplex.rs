//! Bounded dual simplex on the relaxation of an [`IntegerProgram`].
//!
//! Every row `i` gets a logical variable `s_i = a_i · x` bounded by the row
//! bounds, so the system is `[A  -I] (x, s) = 0` with all bounds on the
//! variables. The initial basis is all logicals. Internally the objective is
//! minimised (`cost = -objective`); nonbasic structurals start at whichever
//! bound makes their reduced cost dual feasible, so the method starts dual
//! feasible and only restores primal feasibility. A structural whose
//! favourable bound is infinite gets a large artificial bound; an optimum
//! resting on one reports the relaxation as unbounded.
//!
//! The basis inverse is kept explicitly, stored by columns with only the
//! non-zero entries, and updated by elementary row operations. On the
//! network-like programs produced by the encoder it stays within a few
//! entries per column, so a basis together with its inverse is cheap to copy
//! and branch-and-bound nodes restart from their parent without
//! refactorising. The inverse is rebuilt from scratch every
//! [`REFACTOR_EVERY`] pivots.
//!
//! Leaving rows are chosen by largest primal infeasibility and entering
//! columns by the minimum dual ratio, ties going to the largest pivot. After [`DEGENERATE_LIMIT`]
//! consecutive degenerate pivots Bland's rule (smallest variable index for
//! both choices) takes over for the rest of the solve.

use alloc::rc::Rc;
use alloc::vec;
use alloc::vec::Vec;

use super::{BoundOverride, IntegerProgram, FEASIBILITY_TOL};
use crate::error::{Error, Result};

const DUAL_TOL: f64 = 1e-9;
const DUAL_FLIP_TOL: f64 = 1e-7;
const RATIO_TIE_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
const ARTIFICIAL_BOUND: f64 = 1e7;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_LIMIT: usize = 50;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values (meaningful when optimal).
    pub values: Vec<f64>,
    pub objective: f64,
}

/// Solves the LP relaxation of `program` with optional tightened bounds.
pub fn solve_lp(program: &IntegerProgram, bounds: &[BoundOverride]) -> Result<LpSolution> {
    program.validate()?;
    let cols = Rc::new(Columns::new(program));
    let (mut lo, mut hi) = cols.bounds(program);
    for b in bounds {
        lo[b.var] = lo[b.var].max(b.lower);
        hi[b.var] = hi[b.var].min(b.upper);
    }
    let mut lp = Simplex::new(cols, lo, hi);
    let status = lp.solve()?;
    Ok(lp.solution(program, status))
}

/// The constraint matrix by columns and by rows.
#[derive(Debug)]
pub(crate) struct Columns {
    pub n: usize,
    pub m: usize,
    cols: Vec<Vec<(u32, f64)>>,
    rows: Vec<Vec<(u32, f64)>>,
    cost: Vec<f64>,
}

impl Columns {
    pub fn new(program: &IntegerProgram) -> Self {
        let n = program.variables.len();
        let m = program.constraints.len();
        let mut cols = vec![Vec::new(); n];
        let mut rows = Vec::with_capacity(m);
        for (i, c) in program.constraints.iter().enumerate() {
            for &(j, a) in &c.coefficients {
                cols[j].push((i as u32, a));
            }
            rows.push(c.coefficients.iter().map(|&(j, a)| (j as u32, a)).collect());
        }
        let mut cost = vec![0.0; n + m];
        for (j, v) in program.variables.iter().enumerate() {
            cost[j] = -v.objective;
        }
        Self { n, m, cols, rows, cost }
    }

    /// Bounds of structurals then logicals.
    pub fn bounds(&self, program: &IntegerProgram) -> (Vec<f64>, Vec<f64>) {
        let lo = program
            .variables
            .iter()
            .map(|v| v.lower)
            .chain(program.constraints.iter().map(|c| c.lower))
            .collect();
        let hi = program
            .variables
            .iter()
            .map(|v| v.upper)
            .chain(program.constraints.iter().map(|c| c.upper))
            .collect();
        (lo, hi)
    }

    #[inline]
    fn for_each(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                f(i as usize, a);
            }
        } else {
            f(j - self.n, -1.0);
        }
    }
}

/// Sparse explicit basis inverse, one entry list per column.
#[derive(Clone, Debug)]
struct Inverse {
    cols: Vec<Vec<(u32, f64)>>,
}

impl Inverse {
    /// Inverse of the all-logical basis `-I`.
    fn slack(m: usize) -> Self {
        Self { cols: (0..m).map(|k| vec![(k as u32, -1.0)]).collect() }
    }

    fn row(&self, r: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, col) in self.cols.iter().enumerate() {
            if let Some(&(_, v)) = col.iter().find(|e| e.0 as usize == r) {
                out[k] = v;
            }
        }
    }

    /// `out = B⁻¹ v` for a sparse `v`.
    fn times(&self, v: impl IntoIterator<Item = (usize, f64)>, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, a) in v {
            for &(i, b) in &self.cols[k] {
                out[i as usize] += b * a;
            }
        }
    }

    /// Row operations turning `alpha` into `e_r`; `nz` lists the other
    /// non-zero entries of `alpha`. `work` must be zero and `mark` false.
    fn eliminate(&mut self, r: usize, alpha_r: f64, nz: &[(u32, f64)], work: &mut [f64], mark: &mut [bool]) {
        let inv = 1.0 / alpha_r;
        let mut touched: Vec<u32> = Vec::new();
        for col in &mut self.cols {
            let Some(&(_, v)) = col.iter().find(|e| e.0 as usize == r) else {
                continue;
            };
            let v = v * inv;
            touched.clear();
            for &(i, x) in col.iter() {
                work[i as usize] = x;
                mark[i as usize] = true;
                touched.push(i);
            }
            for &(i, f) in nz {
                let iu = i as usize;
                if !mark[iu] {
                    mark[iu] = true;
                    touched.push(i);
                }
                work[iu] -= f * v;
            }
            work[r] = v;
            col.clear();
            for &i in &touched {
                let iu = i as usize;
                let x = work[iu];
                work[iu] = 0.0;
                mark[iu] = false;
                if libm::fabs(x) >= DROP_TOL {
                    col.push((i, x));
                }
            }
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum State {
    Basic(u32),
    Lower,
    Upper,
}

/// A basis and its inverse, to seed a later solve with different bounds.
#[derive(Clone, Debug)]
pub(crate) struct Snapshot {
    basis: Vec<usize>,
    state: Vec<State>,
    inverse: Inverse,
    since_refactor: usize,
}

#[derive(Clone)]
pub(crate) struct Simplex {
    cols: Rc<Columns>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Variables whose infinite bound was replaced by an artificial one.
    artificial: Vec<bool>,
    basis: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    d: Vec<f64>,
    inverse: Inverse,
    alpha_row: Vec<f64>,
    rho: Vec<f64>,
    work: Vec<f64>,
    mark: Vec<bool>,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
    pub iterations: u64,
}

impl Simplex {
    pub fn new(cols: Rc<Columns>, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let (n, m) = (cols.n, cols.m);
        let mut state = vec![State::Lower; n + m];
        for i in 0..m {
            state[n + i] = State::Basic(i as u32);
        }
        Self {
            lo,
            hi,
            artificial: vec![false; n + m],
            basis: (n..n + m).collect(),
            state,
            x: vec![0.0; n + m],
            d: vec![0.0; n + m],
            inverse: Inverse::slack(m),
            alpha_row: vec![0.0; n + m],
            rho: vec![0.0; m],
            work: vec![0.0; m],
            mark: vec![false; m],
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
            iterations: 0,
            cols,
        }
    }

    pub fn from_snapshot(cols: Rc<Columns>, lo: Vec<f64>, hi: Vec<f64>, snap: &Snapshot) -> Self {
        let mut s = Self::new(cols, lo, hi);
        s.basis.clone_from(&snap.basis);
        s.state.clone_from(&snap.state);
        s.inverse = snap.inverse.clone();
        s.since_refactor = snap.since_refactor;
        s
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            basis: self.basis.clone(),
            state: self.state.clone(),
            inverse: self.inverse.clone(),
            since_refactor: self.since_refactor,
        }
    }

    /// Replaces structural bounds, keeping the current basis.
    pub fn set_bounds(&mut self, lo: &[f64], hi: &[f64]) {
        let n = self.cols.n;
        self.lo[..n].copy_from_slice(&lo[..n]);
        self.hi[..n].copy_from_slice(&hi[..n]);
        self.artificial[..n].iter_mut().for_each(|a| *a = false);
    }

    /// Runs the dual simplex to completion.
    pub fn solve(&mut self) -> Result<LpStatus> {
        let (n, m) = (self.cols.n, self.cols.m);
        self.recompute();
        self.bland = false;
        self.degenerate_run = 0;
        let mut fresh = true;
        let limit = 100 * (n as u64 + m as u64) + 10_000;
        let mut alpha_col = vec![0.0; m];
        loop {
            if self.iterations > limit {
                return Err(Error::Solver("simplex iteration limit reached".into()));
            }
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
                self.recompute();
                fresh = true;
            }
            let Some((r, to_lower)) = self.select_leaving() else {
                if !fresh {
                    self.recompute();
                    fresh = true;
                    continue;
                }
                return Ok(self.final_status());
            };
            let Some(q) = self.select_entering(r, to_lower) else {
                if !fresh {
                    self.recompute();
                    fresh = true;
                    continue;
                }
                return Ok(LpStatus::Infeasible);
            };
            self.column(q, &mut alpha_col);
            let a_rq = self.alpha_row[q];
            if libm::fabs(alpha_col[r] - a_rq) > 1e-7 * (1.0 + libm::fabs(a_rq)) {
                if self.since_refactor == 0 {
                    return Err(Error::Solver("numerically unstable basis".into()));
                }
                self.refactor();
                self.recompute();
                fresh = true;
                continue;
            }
            self.pivot(r, q, to_lower, &alpha_col);
            fresh = false;
        }
    }

    /// Reduced costs and basic values from the current inverse.
    fn recompute(&mut self) {
        self.compute_duals();
        self.make_dual_feasible();
        self.compute_primal();
    }

    fn final_status(&self) -> LpStatus {
        let n = self.cols.n;
        let hits_artificial = (0..n).any(|j| {
            self.artificial[j]
                && (libm::fabs(self.x[j]) >= ARTIFICIAL_BOUND * (1.0 - 1e-9) || self.state[j] != State::Lower)
        });
        if hits_artificial {
            LpStatus::Unbounded
        } else {
            LpStatus::Optimal
        }
    }

    pub fn solution(&self, program: &IntegerProgram, status: LpStatus) -> LpSolution {
        let values: Vec<f64> = self.x[..self.cols.n].to_vec();
        let objective = program.objective_value(&values);
        LpSolution { status, values, objective }
    }

    fn select_leaving(&self) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool)> = None;
        let mut best_key = 0.0;
        for (i, &p) in self.basis.iter().enumerate() {
            let x = self.x[p];
            let (infeas, to_lower) = if x < self.lo[p] - FEASIBILITY_TOL {
                (self.lo[p] - x, true)
            } else if x > self.hi[p] + FEASIBILITY_TOL {
                (x - self.hi[p], false)
            } else {
                continue;
            };
            let better = match best {
                None => true,
                Some((bi, _)) if self.bland => p < self.basis[bi],
                Some(_) => infeas > best_key,
            };
            if better {
                best = Some((i, to_lower));
                best_key = infeas;
            }
        }
        best
    }

    fn select_entering(&mut self, r: usize, to_lower: bool) -> Option<usize> {
        let n = self.cols.n;
        self.inverse.row(r, &mut self.rho);
        self.alpha_row.iter_mut().for_each(|a| *a = 0.0);
        for (i, &rho) in self.rho.iter().enumerate() {
            if rho != 0.0 {
                for &(j, a) in &self.cols.rows[i] {
                    self.alpha_row[j as usize] += rho * a;
                }
                self.alpha_row[n + i] = -rho;
            }
        }
        let sign = if to_lower { 1.0 } else { -1.0 };
        let eligible = |j: usize| -> Option<(f64, f64)> {
            let a = self.alpha_row[j] * sign;
            match self.state[j] {
                State::Lower if a < -PIVOT_TOL && self.lo[j] < self.hi[j] => Some((self.d[j].max(0.0), -a)),
                State::Upper if a > PIVOT_TOL && self.lo[j] < self.hi[j] => Some(((-self.d[j]).max(0.0), a)),
                _ => None,
            }
        };
        let candidates: Vec<(usize, f64, f64)> = (0..self.alpha_row.len())
            .filter(|&j| self.alpha_row[j] != 0.0)
            .filter_map(|j| eligible(j).map(|(dj, a)| (j, dj, a)))
            .collect();
        if self.bland {
            let mut best: Option<(usize, f64)> = None;
            for &(j, dj, a) in &candidates {
                let ratio = dj / a;
                if best.is_none_or(|(_, b)| ratio < b - 1e-12) {
                    best = Some((j, ratio));
                }
            }
            return best.map(|(j, _)| j);
        }
        let min_ratio = candidates.iter().map(|&(_, dj, a)| dj / a).fold(f64::INFINITY, f64::min);
        if min_ratio == f64::INFINITY {
            return None;
        }
        let bound = min_ratio + RATIO_TIE_TOL * (1.0 + min_ratio);
        let mut best: Option<(usize, f64)> = None;
        for &(j, dj, a) in &candidates {
            if dj / a <= bound && best.is_none_or(|(_, ba)| a > ba) {
                best = Some((j, a));
            }
        }
        best.map(|(j, _)| j)
    }

    /// `B⁻¹ a_q`.
    fn column(&self, q: usize, out: &mut [f64]) {
        let n = self.cols.n;
        if q < n {
            self.inverse.times(self.cols.cols[q].iter().map(|&(i, a)| (i as usize, a)), out);
        } else {
            self.inverse.times([(q - n, -1.0)], out);
        }
    }

    fn pivot(&mut self, r: usize, q: usize, to_lower: bool, alpha_col: &[f64]) {
        let (n, m) = (self.cols.n, self.cols.m);
        let p = self.basis[r];
        let a_rq = alpha_col[r];

        // A reduced cost within tolerance of the wrong sign counts as zero,
        // so the dual objective never moves backwards.
        let dq = match self.state[q] {
            State::Lower => self.d[q].max(0.0),
            _ => self.d[q].min(0.0),
        };
        let theta = dq / self.alpha_row[q];
        if libm::fabs(theta) < 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run >= DEGENERATE_LIMIT {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
        }
        if theta != 0.0 {
            for j in 0..n + m {
                let a = self.alpha_row[j];
                if a != 0.0 && !matches!(self.state[j], State::Basic(_)) {
                    self.d[j] -= theta * a;
                }
            }
        }
        self.d[q] = 0.0;
        self.d[p] = -theta;

        let target = if to_lower { self.lo[p] } else { self.hi[p] };
        let delta = (self.x[p] - target) / a_rq;
        let mut nz: Vec<(u32, f64)> = Vec::new();
        for (i, &a) in alpha_col.iter().enumerate() {
            if a != 0.0 {
                let b = self.basis[i];
                self.x[b] -= a * delta;
                if i != r {
                    nz.push((i as u32, a));
                }
            }
        }
        self.x[q] += delta;
        self.x[p] = target;

        self.basis[r] = q;
        self.state[q] = State::Basic(r as u32);
        self.state[p] = if to_lower { State::Lower } else { State::Upper };
        self.inverse.eliminate(r, a_rq, &nz, &mut self.work, &mut self.mark);
        self.since_refactor += 1;
        self.iterations += 1;
    }

    /// Rebuilds the inverse for the current basis by pivoting its structural
    /// columns into the slack basis. Columns that turn out dependent are made
    /// nonbasic again.
    fn refactor(&mut self) {
        let (n, m) = (self.cols.n, self.cols.m);
        let target = core::mem::replace(&mut self.basis, (n..n + m).collect());
        let mut in_target = vec![false; n + m];
        for &b in &target {
            in_target[b] = true;
        }
        self.inverse = Inverse::slack(m);
        let mut col = vec![0.0; m];
        let mut structurals: Vec<usize> = target.iter().copied().filter(|&b| b < n).collect();
        structurals.sort_unstable();
        for q in structurals {
            self.column(q, &mut col);
            let mut best: Option<(usize, f64)> = None;
            for (i, &c) in col.iter().enumerate() {
                let b = self.basis[i];
                if c != 0.0 && b >= n && !in_target[b] {
                    let a = libm::fabs(c);
                    if a > PIVOT_TOL && best.is_none_or(|(_, ba)| a > ba) {
                        best = Some((i, a));
                    }
                }
            }
            match best {
                Some((r, _)) => {
                    let nz: Vec<(u32, f64)> = col
                        .iter()
                        .enumerate()
                        .filter(|&(i, &a)| i != r && a != 0.0)
                        .map(|(i, &a)| (i as u32, a))
                        .collect();
                    self.inverse.eliminate(r, col[r], &nz, &mut self.work, &mut self.mark);
                    self.basis[r] = q;
                }
                None => {
                    in_target[q] = false;
                    self.state[q] = if self.hi[q].is_finite()
                        && libm::fabs(self.x[q] - self.hi[q]) < libm::fabs(self.x[q] - self.lo[q])
                    {
                        State::Upper
                    } else {
                        State::Lower
                    };
                }
            }
        }
        for j in 0..n + m {
            if let State::Basic(_) = self.state[j] {
                self.state[j] = State::Lower;
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            self.state[b] = State::Basic(i as u32);
        }
        // A logical that left the basis only through a singular recovery may
        // sit at an infinite bound; it has to stay basic instead.
        for j in n..n + m {
            match self.state[j] {
                State::Lower if !self.lo[j].is_finite() => self.state[j] = State::Upper,
                State::Upper if !self.hi[j].is_finite() => self.state[j] = State::Lower,
                _ => {}
            }
        }
        self.since_refactor = 0;
    }

    fn compute_duals(&mut self) {
        let (n, m) = (self.cols.n, self.cols.m);
        let mut cb = vec![0.0; m];
        for (i, &b) in self.basis.iter().enumerate() {
            cb[i] = self.cols.cost[b];
        }
        let y: Vec<f64> =
            self.inverse.cols.iter().map(|col| col.iter().map(|&(i, v)| cb[i as usize] * v).sum()).collect();
        for j in 0..n + m {
            self.d[j] = match self.state[j] {
                State::Basic(_) => 0.0,
                _ => {
                    let mut acc = self.cols.cost[j];
                    self.cols.for_each(j, |i, a| acc -= y[i] * a);
                    acc
                }
            };
        }
    }

    /// Moves nonbasic variables to the bound matching the sign of their
    /// reduced cost. Roundoff-sized wrong signs are zeroed instead of
    /// flipping, and an infinite target bound is replaced by an artificial
    /// one.
    fn make_dual_feasible(&mut self) {
        let (n, m) = (self.cols.n, self.cols.m);
        for j in 0..n + m {
            match self.state[j] {
                State::Lower if self.d[j] < -DUAL_TOL => {
                    if !self.hi[j].is_finite() {
                        if self.d[j] > -DUAL_FLIP_TOL {
                            self.d[j] = 0.0;
                            continue;
                        }
                        self.hi[j] = self.lo[j].max(0.0) + ARTIFICIAL_BOUND;
                        self.artificial[j] = true;
                    }
                    self.state[j] = State::Upper;
                }
                State::Upper if self.d[j] > DUAL_TOL => {
                    if !self.lo[j].is_finite() {
                        if self.d[j] < DUAL_FLIP_TOL {
                            self.d[j] = 0.0;
                            continue;
                        }
                        self.lo[j] = self.hi[j].min(0.0) - ARTIFICIAL_BOUND;
                        self.artificial[j] = true;
                    }
                    self.state[j] = State::Lower;
                }
                State::Lower if !self.lo[j].is_finite() => {
                    self.lo[j] = self.hi[j].min(0.0) - ARTIFICIAL_BOUND;
                    self.artificial[j] = true;
                }
                State::Upper if !self.hi[j].is_finite() => {
                    self.hi[j] = self.lo[j].max(0.0) + ARTIFICIAL_BOUND;
                    self.artificial[j] = true;
                }
                _ => {}
            }
        }
    }

    fn compute_primal(&mut self) {
        let (n, m) = (self.cols.n, self.cols.m);
        let mut rhs = vec![0.0; m];
        for j in 0..n + m {
            let v = match self.state[j] {
                State::Basic(_) => continue,
                State::Lower => self.lo[j],
                State::Upper => self.hi[j],
            };
            self.x[j] = v;
            if v != 0.0 {
                self.cols.for_each(j, |i, a| rhs[i] -= a * v);
            }
        }
        let mut xb = vec![0.0; m];
        self.inverse.times(rhs.iter().enumerate().filter(|&(_, &v)| v != 0.0).map(|(k, &v)| (k, v)), &mut xb);
        for (i, v) in xb.into_iter().enumerate() {
            self.x[self.basis[i]] = v;
        }
    }
}
