//! Bounded-variable two-phase primal simplex with a dense basis inverse.
//!
//! Pivoting is Dantzig's rule with a permanent switch to Bland's rule once a
//! degeneracy stall is detected, which trades speed for guaranteed
//! termination. All tie-breaks are by lowest index, so repeated solves of
//! the same model produce identical results.

use crate::model::{
    LinearProgram, PrimalDualSolution, Result, RowSense, SolveStatus, SolverError, Tolerances,
};

const EPS_DUAL: f64 = 1e-9;
const EPS_PIVOT: f64 = 1e-8;
const EPS_RATIO: f64 = 1e-10;
const REFACTOR_EVERY: usize = 128;
const STALL_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLo,
    AtHi,
    /// Nonbasic free variable, parked at zero.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

/// Outcome of one simplex run, in the computational form's index space.
#[derive(Debug, Clone)]
pub(crate) struct LpOutcome {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub certificate: Option<Vec<f64>>,
}

/// The solver instance. Owns a computational form of the problem
/// (`min c x, A x + s = b` with bounded `x` and `s`) and keeps its basis
/// between solves so branch-and-bound can warm start after bound changes.
pub(crate) struct Simplex {
    m: usize,
    n_struct: usize,
    /// n_struct + m (slacks). Artificials live past this range.
    n_total: usize,
    cols: Vec<Vec<(usize, f64)>>,
    obj: Vec<f64>,
    rhs: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    art_sign: Vec<f64>,

    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    has_basis: bool,
    iterations: usize,

    // scratch
    y: Vec<f64>,
    alpha: Vec<f64>,
}

impl Simplex {
    pub fn new(lp: &LinearProgram) -> Result<Self> {
        lp.validate()?;
        let m = lp.rows.len();
        let n_struct = lp.num_vars;
        let n_total = n_struct + m;
        let mut cols = vec![Vec::new(); n_struct];
        for (i, row) in lp.rows.iter().enumerate() {
            let mut acc: Vec<(usize, f64)> = Vec::with_capacity(row.coeffs.len());
            for &(j, v) in &row.coeffs {
                acc.push((j, v));
            }
            // merge duplicate indices within the row
            acc.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(acc.len());
            for (j, v) in acc {
                if let Some(last) = merged.last_mut() {
                    if last.0 == j {
                        last.1 += v;
                        continue;
                    }
                }
                merged.push((j, v));
            }
            for (j, v) in merged {
                if v != 0.0 {
                    cols[j].push((i, v));
                }
            }
        }
        let mut lo = Vec::with_capacity(n_total + m);
        let mut hi = Vec::with_capacity(n_total + m);
        for &(l, h) in &lp.bounds {
            lo.push(l);
            hi.push(h);
        }
        for row in &lp.rows {
            let (l, h) = match row.sense {
                RowSense::Le => (0.0, f64::INFINITY),
                RowSense::Ge => (f64::NEG_INFINITY, 0.0),
                RowSense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
        }
        // artificial bounds, pinched until phase 1 opens them
        lo.extend(std::iter::repeat(0.0).take(m));
        hi.extend(std::iter::repeat(0.0).take(m));
        Ok(Self {
            m,
            n_struct,
            n_total,
            cols,
            obj: lp.dense_objective(),
            rhs: lp.rows.iter().map(|r| r.rhs).collect(),
            lo,
            hi,
            art_sign: vec![1.0; m],
            state: vec![VarState::AtLo; n_total + m],
            basis: Vec::new(),
            binv: Vec::new(),
            xb: Vec::new(),
            has_basis: false,
            iterations: 0,
            y: vec![0.0; m],
            alpha: vec![0.0; m],
        })
    }


    /// Overrides the bounds of a structural variable (branch-and-bound fix).
    pub fn set_var_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        debug_assert!(j < self.n_struct);
        self.lo[j] = lo;
        self.hi[j] = hi;
    }

    /// Overrides the bounds of a row's slack (e.g. `[0, 0]` forces equality).
    pub fn set_slack_bounds(&mut self, row: usize, lo: f64, hi: f64) {
        self.lo[self.n_struct + row] = lo;
        self.hi[self.n_struct + row] = hi;
    }


    /// Sparse column of variable `j` in the row space (slacks and
    /// artificials are unit columns).
    fn for_col<F: FnMut(usize, f64)>(&self, j: usize, mut f: F) {
        if j < self.n_struct {
            for &(i, v) in &self.cols[j] {
                f(i, v);
            }
        } else if j < self.n_total {
            f(j - self.n_struct, 1.0);
        } else {
            let i = j - self.n_total;
            f(i, self.art_sign[i]);
        }
    }

    fn nb_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtLo => self.lo[j],
            VarState::AtHi => self.hi[j],
            VarState::Free => 0.0,
            VarState::Basic(_) => unreachable!("nb_value on basic variable"),
        }
    }

    fn cost_of(&self, j: usize, phase: Phase) -> f64 {
        match phase {
            Phase::One => {
                if j >= self.n_total {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => {
                if j < self.n_struct {
                    self.obj[j]
                } else {
                    0.0
                }
            }
        }
    }

    /// Rebuilds the dense inverse of the current basis by Gauss-Jordan
    /// elimination with partial pivoting, then recomputes basic values.
    fn refactorize(&mut self) -> Result<()> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (pos, &j) in self.basis.iter().enumerate() {
            self.for_col(j, |i, v| b[i * m + pos] = v);
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = b[col * m + col].abs();
            for r in col + 1..m {
                let a = b[r * m + col].abs();
                if a > best {
                    best = a;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return Err(SolverError::Numerical(format!(
                    "singular basis during refactorization (column {col})"
                )));
            }
            if piv != col {
                for k in 0..m {
                    b.swap(col * m + k, piv * m + k);
                    inv.swap(col * m + k, piv * m + k);
                }
            }
            let d = b[col * m + col];
            for k in 0..m {
                b[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for r in 0..m {
                if r != col {
                    let f = b[r * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            b[r * m + k] -= f * b[col * m + k];
                            inv[r * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.recompute_xb();
        Ok(())
    }

    fn recompute_xb(&mut self) {
        let m = self.m;
        let mut r = self.rhs.clone();
        for j in 0..self.n_total + m {
            if let VarState::Basic(_) = self.state[j] {
                continue;
            }
            let v = self.nb_value(j);
            if v != 0.0 {
                self.for_col(j, |i, a| r[i] -= a * v);
            }
        }
        for i in 0..m {
            let mut s = 0.0;
            for k in 0..m {
                s += self.binv[i * m + k] * r[k];
            }
            self.xb[i] = s;
        }
    }

    fn compute_duals(&mut self, phase: Phase) {
        let m = self.m;
        for i in 0..m {
            let mut s = 0.0;
            for (pos, &j) in self.basis.iter().enumerate() {
                let c = self.cost_of(j, phase);
                if c != 0.0 {
                    s += c * self.binv[pos * m + i];
                }
            }
            self.y[i] = s;
        }
    }

    fn reduced_cost(&self, j: usize, phase: Phase) -> f64 {
        let mut d = self.cost_of(j, phase);
        self.for_col(j, |i, v| d -= self.y[i] * v);
        d
    }

    fn compute_alpha(&mut self, q: usize) {
        let m = self.m;
        self.alpha.iter_mut().for_each(|a| *a = 0.0);
        let binv = &self.binv;
        let alpha = &mut self.alpha;
        if q < self.n_struct {
            for &(i, v) in &self.cols[q] {
                for r in 0..m {
                    alpha[r] += binv[r * m + i] * v;
                }
            }
        } else if q < self.n_total {
            let i = q - self.n_struct;
            for r in 0..m {
                alpha[r] += binv[r * m + i];
            }
        } else {
            let i = q - self.n_total;
            let v = self.art_sign[i];
            for r in 0..m {
                alpha[r] += binv[r * m + i] * v;
            }
        }
    }

    /// Core simplex loop for one phase. Returns `None` on (phase) optimality
    /// or `Some(ray)` when the objective is unbounded below (phase 2 only).
    /// Artificial columns never enter; they can only leave the basis.
    fn iterate(&mut self, phase: Phase) -> Result<Option<Vec<f64>>> {
        let iter_cap = 200 * (self.m + self.n_total) + 20_000;
        let mut bland = false;
        let mut degenerate_run = 0usize;
        let mut local_iters = 0usize;
        loop {
            local_iters += 1;
            if local_iters > iter_cap {
                return Err(SolverError::Numerical(format!(
                    "simplex iteration cap {iter_cap} exceeded (phase {:?})",
                    phase
                )));
            }
            self.iterations += 1;
            if self.iterations % REFACTOR_EVERY == 0 {
                self.refactorize()?;
            }
            self.compute_duals(phase);

            let limit = self.n_total;
            let mut entering: Option<(usize, f64, f64)> = None; // (var, |d|, direction)
            for j in 0..limit {
                if let VarState::Basic(_) = self.state[j] {
                    continue;
                }
                if self.lo[j] == self.hi[j] {
                    continue; // fixed, never enters
                }
                let d = self.reduced_cost(j, phase);
                let dir = match self.state[j] {
                    VarState::AtLo if d < -EPS_DUAL => 1.0,
                    VarState::AtHi if d > EPS_DUAL => -1.0,
                    VarState::Free if d.abs() > EPS_DUAL => -d.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, d.abs(), dir));
                    break;
                }
                match entering {
                    Some((_, best, _)) if d.abs() <= best => {}
                    _ => entering = Some((j, d.abs(), dir)),
                }
            }
            let Some((q, _, dir)) = entering else {
                return Ok(None); // phase optimal
            };

            self.compute_alpha(q);
            // Ratio test: how far can the entering variable move.
            let own_span = self.hi[q] - self.lo[q]; // may be inf
            let mut t_best = if own_span.is_finite() { own_span } else { f64::INFINITY };
            let mut leave: Option<(usize, f64, f64)> = None; // (pos, |alpha|, bound hit)
            for r in 0..self.m {
                let delta = dir * self.alpha[r];
                if delta.abs() <= EPS_PIVOT {
                    continue;
                }
                let vb = self.basis[r];
                let (t, hit) = if delta > 0.0 {
                    if self.lo[vb].is_finite() {
                        ((self.xb[r] - self.lo[vb]) / delta, self.lo[vb])
                    } else {
                        continue;
                    }
                } else if self.hi[vb].is_finite() {
                    ((self.xb[r] - self.hi[vb]) / delta, self.hi[vb])
                } else {
                    continue;
                };
                let t = t.max(0.0);
                let better = match leave {
                    None => t < t_best - EPS_RATIO,
                    Some((pos, mag, _)) => {
                        t < t_best - EPS_RATIO
                            || (t < t_best + EPS_RATIO
                                && (if bland {
                                    self.basis[r] < self.basis[pos]
                                } else {
                                    delta.abs() > mag
                                }))
                    }
                };
                if better {
                    t_best = t;
                    leave = Some((r, delta.abs(), hit));
                }
            }

            if t_best.is_infinite() {
                // Unbounded: build the improving ray over structural vars.
                let mut ray = vec![0.0; self.n_struct];
                if q < self.n_struct {
                    ray[q] = dir;
                }
                for r in 0..self.m {
                    let vb = self.basis[r];
                    if vb < self.n_struct {
                        ray[vb] = -dir * self.alpha[r];
                    }
                }
                return Ok(Some(ray));
            }

            if t_best >= EPS_RATIO {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
                if degenerate_run >= STALL_LIMIT && !bland {
                    bland = true;
                }
            }

            match leave {
                Some((r, _, hit)) if t_best < own_span - EPS_RATIO || !own_span.is_finite() => {
                    // Basis change.
                    let start = self.nb_value(q);
                    for i in 0..self.m {
                        self.xb[i] -= dir * self.alpha[i] * t_best;
                    }
                    let leaving = self.basis[r];
                    self.state[leaving] = if (hit - self.lo[leaving]).abs() <= (hit - self.hi[leaving]).abs() {
                        VarState::AtLo
                    } else {
                        VarState::AtHi
                    };
                    self.state[q] = VarState::Basic(r);
                    self.basis[r] = q;
                    self.xb[r] = start + dir * t_best;
                    // Product-form update of the inverse.
                    let m = self.m;
                    let piv = self.alpha[r];
                    for k in 0..m {
                        self.binv[r * m + k] /= piv;
                    }
                    for i in 0..m {
                        if i != r {
                            let f = self.alpha[i];
                            if f != 0.0 {
                                for k in 0..m {
                                    self.binv[i * m + k] -= f * self.binv[r * m + k];
                                }
                            }
                        }
                    }
                }
                _ => {
                    // Bound flip: entering variable crosses to its other bound.
                    for i in 0..self.m {
                        self.xb[i] -= dir * self.alpha[i] * t_best;
                    }
                    self.state[q] = match self.state[q] {
                        VarState::AtLo => VarState::AtHi,
                        VarState::AtHi => VarState::AtLo,
                        s => s,
                    };
                }
            }
        }
    }

    fn initial_nonbasic_state(&self, j: usize) -> VarState {
        let (lo, hi) = (self.lo[j], self.hi[j]);
        if lo.is_finite() && hi.is_finite() {
            if lo.abs() <= hi.abs() {
                VarState::AtLo
            } else {
                VarState::AtHi
            }
        } else if lo.is_finite() {
            VarState::AtLo
        } else if hi.is_finite() {
            VarState::AtHi
        } else {
            VarState::Free
        }
    }

    fn cold_start(&mut self) -> Result<()> {
        let m = self.m;
        for j in 0..self.n_total {
            self.state[j] = self.initial_nonbasic_state(j);
        }
        // Residuals with all real variables parked at their bounds.
        let mut r = self.rhs.clone();
        for j in 0..self.n_total {
            let v = self.nb_value(j);
            if v != 0.0 {
                self.for_col(j, |i, a| r[i] -= a * v);
            }
        }
        self.basis = (0..m).map(|i| self.n_total + i).collect();
        self.binv = vec![0.0; m * m];
        self.xb = vec![0.0; m];
        for i in 0..m {
            self.art_sign[i] = if r[i] >= 0.0 { 1.0 } else { -1.0 };
            self.lo[self.n_total + i] = 0.0;
            self.hi[self.n_total + i] = f64::INFINITY;
            self.state[self.n_total + i] = VarState::Basic(i);
            self.binv[i * m + i] = self.art_sign[i];
            self.xb[i] = r[i].abs();
        }
        self.has_basis = true;
        Ok(())
    }

    fn phase1_infeasibility(&self) -> f64 {
        let mut s = 0.0;
        for (pos, &j) in self.basis.iter().enumerate() {
            if j >= self.n_total {
                s += self.xb[pos].max(0.0);
            }
        }
        s
    }

    /// Pivot basic artificials out where possible, then pinch them all.
    fn retire_artificials(&mut self) -> Result<()> {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.n_total {
                continue;
            }
            // Find a replacement column with a usable pivot in row r.
            let mut found: Option<(usize, f64)> = None;
            for j in 0..self.n_total {
                if let VarState::Basic(_) = self.state[j] {
                    continue;
                }
                let mut a = 0.0;
                {
                    let binv = &self.binv;
                    self.for_col(j, |i, v| a += binv[r * m + i] * v);
                }
                if a.abs() > 1e-7 {
                    found = Some((j, a));
                    break;
                }
            }
            if let Some((q, _)) = found {
                self.compute_alpha(q);
                let leaving = self.basis[r];
                self.state[leaving] = VarState::AtLo;
                self.state[q] = VarState::Basic(r);
                self.basis[r] = q;
                let piv = self.alpha[r];
                for k in 0..m {
                    self.binv[r * m + k] /= piv;
                }
                for i in 0..m {
                    if i != r {
                        let f = self.alpha[i];
                        if f != 0.0 {
                            for k in 0..m {
                                self.binv[i * m + k] -= f * self.binv[r * m + k];
                            }
                        }
                    }
                }
            }
            // else: redundant row, the artificial stays basic pinned at 0.
        }
        for i in 0..m {
            self.lo[self.n_total + i] = 0.0;
            self.hi[self.n_total + i] = 0.0;
            if !matches!(self.state[self.n_total + i], VarState::Basic(_)) {
                self.state[self.n_total + i] = VarState::AtLo;
            }
        }
        self.recompute_xb();
        Ok(())
    }

    /// Checks whether the retained basis is primal feasible under the
    /// current bounds; nonbasic variables are snapped to valid bounds first.
    fn warm_feasible(&mut self, tol: &Tolerances) -> bool {
        if !self.has_basis || self.basis.len() != self.m {
            return false;
        }
        for j in 0..self.n_total + self.m {
            match self.state[j] {
                VarState::Basic(_) => {}
                _ => {
                    let (lo, hi) = (self.lo[j], self.hi[j]);
                    self.state[j] = match self.state[j] {
                        VarState::AtLo if lo.is_finite() => VarState::AtLo,
                        VarState::AtHi if hi.is_finite() => VarState::AtHi,
                        VarState::Free if !lo.is_finite() && !hi.is_finite() => VarState::Free,
                        _ => self.initial_nonbasic_state(j),
                    };
                }
            }
        }
        // The previous solve left a freshly refactorized inverse; only the
        // nonbasic values changed, so recomputing basic values suffices.
        self.recompute_xb();
        for (pos, &j) in self.basis.iter().enumerate() {
            let v = self.xb[pos];
            let slack = tol.feas * (1.0 + v.abs());
            if v < self.lo[j] - slack || v > self.hi[j] + slack {
                return false;
            }
        }
        true
    }

    /// Solves the current problem. With `warm`, tries to continue from the
    /// retained basis (phase 2 only) and falls back to a cold start.
    pub fn solve(&mut self, warm: bool, tol: &Tolerances) -> Result<LpOutcome> {
        self.iterations = 0;
        let scale_b = 1.0 + self.rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));

        let warm_ok = warm && self.warm_feasible(tol);
        if !warm_ok {
            self.cold_start()?;
            if self.iterate(Phase::One)?.is_some() {
                return Err(SolverError::Numerical(
                    "phase 1 reported an unbounded ray".into(),
                ));
            }
            self.refactorize()?;
            if self.phase1_infeasibility() > tol.feas * scale_b * 4.0 {
                self.compute_duals(Phase::One);
                return Ok(LpOutcome {
                    status: SolveStatus::Infeasible,
                    primal: Vec::new(),
                    duals: self.y.clone(),
                    objective: f64::INFINITY,
                    iterations: self.iterations,
                    certificate: Some(self.y.clone()),
                });
            }
            self.retire_artificials()?;
        }

        if let Some(ray) = self.iterate(Phase::Two)? {
            return Ok(LpOutcome {
                status: SolveStatus::Unbounded,
                primal: Vec::new(),
                duals: Vec::new(),
                objective: f64::NEG_INFINITY,
                iterations: self.iterations,
                certificate: Some(ray),
            });
        }

        // Final polish: refactorize and verify primal feasibility, retrying a
        // bounded number of times before giving up.
        let mut attempts = 0;
        loop {
            self.refactorize()?;
            let mut feasible = true;
            for (pos, &j) in self.basis.iter().enumerate() {
                let v = self.xb[pos];
                let slack = 16.0 * tol.feas * (1.0 + v.abs());
                if v < self.lo[j] - slack || v > self.hi[j] + slack {
                    feasible = false;
                    break;
                }
            }
            if feasible {
                break;
            }
            attempts += 1;
            if attempts > 3 {
                return Err(SolverError::Numerical(format!(
                    "basic solution drifted out of bounds after {attempts} refactorizations \
                     (m={}, n={})",
                    self.m, self.n_struct
                )));
            }
            self.cold_start()?;
            if self.iterate(Phase::One)?.is_some() {
                return Err(SolverError::Numerical("phase 1 unbounded on retry".into()));
            }
            self.refactorize()?;
            if self.phase1_infeasibility() > tol.feas * scale_b * 4.0 {
                return Ok(LpOutcome {
                    status: SolveStatus::Infeasible,
                    primal: Vec::new(),
                    duals: self.y.clone(),
                    objective: f64::INFINITY,
                    iterations: self.iterations,
                    certificate: Some(self.y.clone()),
                });
            }
            self.retire_artificials()?;
            if let Some(ray) = self.iterate(Phase::Two)? {
                return Ok(LpOutcome {
                    status: SolveStatus::Unbounded,
                    primal: Vec::new(),
                    duals: Vec::new(),
                    objective: f64::NEG_INFINITY,
                    iterations: self.iterations,
                    certificate: Some(ray),
                });
            }
        }

        let mut x = vec![0.0; self.n_struct];
        for j in 0..self.n_struct {
            x[j] = match self.state[j] {
                VarState::Basic(pos) => self.xb[pos],
                _ => self.nb_value(j),
            };
        }
        self.compute_duals(Phase::Two);
        let objective = (0..self.n_struct).map(|j| self.obj[j] * x[j]).sum();
        Ok(LpOutcome {
            status: SolveStatus::Optimal,
            primal: x,
            duals: self.y.clone(),
            objective,
            iterations: self.iterations,
            certificate: None,
        })
    }
}

/// Solves a linear program with default tolerances.
pub fn solve_lp(lp: &LinearProgram) -> Result<PrimalDualSolution> {
    solve_lp_with(lp, &Tolerances::default())
}

/// Solves a linear program, returning primal and dual certificates.
pub fn solve_lp_with(lp: &LinearProgram, tol: &Tolerances) -> Result<PrimalDualSolution> {
    let mut spx = Simplex::new(lp)?;
    let out = spx.solve(false, tol)?;
    Ok(PrimalDualSolution {
        status: out.status,
        primal: out.primal,
        duals: out.duals,
        objective: out.objective,
        iterations: out.iterations,
        certificate: out.certificate,
    })
}

/// |primal objective - dual objective| of an Optimal solution, where the dual
/// objective accounts for variable-bound multipliers (reduced costs).
pub fn strong_duality_gap(lp: &LinearProgram, sol: &PrimalDualSolution) -> f64 {
    assert_eq!(sol.status, SolveStatus::Optimal);
    let c = lp.dense_objective();
    let mut d = c.clone();
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, v) in &row.coeffs {
            d[j] -= sol.duals[i] * v;
        }
    }
    let mut dual_obj: f64 = lp
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| sol.duals[i] * r.rhs)
        .sum();
    for j in 0..lp.num_vars {
        if d[j].abs() <= 1e-7 * (1.0 + c[j].abs()) {
            continue; // basic or degenerate: no bound contribution
        }
        let (lo, hi) = lp.bounds[j];
        let bound = if d[j] > 0.0 { lo } else { hi };
        if bound.is_finite() {
            dual_obj += d[j] * bound;
        }
        // An infinite bound with a significant reduced cost would mean dual
        // infeasibility; the magnitude shows up in the returned gap via the
        // skipped term.
    }
    (sol.objective - dual_obj).abs()
}

/// Maximum |slack * dual| over all rows, scaled by magnitudes.
pub fn complementary_slackness_residual(lp: &LinearProgram, sol: &PrimalDualSolution) -> f64 {
    assert_eq!(sol.status, SolveStatus::Optimal);
    let mut worst = 0.0f64;
    for (i, row) in lp.rows.iter().enumerate() {
        if row.sense == RowSense::Eq {
            continue;
        }
        let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * sol.primal[j]).sum();
        let slack = (row.rhs - lhs).abs();
        let scaled = (slack * sol.duals[i]).abs() / (1.0 + slack + sol.duals[i].abs());
        worst = worst.max(scaled);
    }
    worst
}
