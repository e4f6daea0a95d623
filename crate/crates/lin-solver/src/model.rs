//! Problem descriptions consumed by the solver: linear programs, and the
//! mixed-integer extension with binaries, complementarity pairs, and
//! separable convex piecewise-linear objective terms.

use thiserror::Error;

/// Errors surfaced by model validation and the solve routines.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid model: {0}")]
    Validation(String),
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("iteration error in scenario {scenario}: {message}")]
    Iteration { scenario: usize, message: String },
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// Comparison sense of one constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// One constraint row: sparse coefficients, sense, right-hand side.
#[derive(Debug, Clone)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A minimization linear program over bounded variables.
///
/// Bounds may be infinite on either side. Rows must carry at least one
/// structurally nonzero coefficient.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    /// Sparse objective; variables absent cost zero.
    pub objective: Vec<(usize, f64)>,
    pub rows: Vec<Row>,
    /// Per-variable `(lo, hi)`; `f64::NEG_INFINITY` / `f64::INFINITY` allowed.
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `count` variables with the given bounds, returning the index
    /// of the first one.
    pub fn add_vars(&mut self, count: usize, lo: f64, hi: f64) -> usize {
        let first = self.num_vars;
        self.num_vars += count;
        self.bounds.extend(std::iter::repeat((lo, hi)).take(count));
        first
    }

    pub fn add_var(&mut self, lo: f64, hi: f64) -> usize {
        self.add_vars(1, lo, hi)
    }

    pub fn set_obj(&mut self, var: usize, coeff: f64) {
        if coeff != 0.0 {
            self.objective.push((var, coeff));
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    /// Dense objective vector.
    pub fn dense_objective(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_vars];
        for &(j, v) in &self.objective {
            c[j] += v;
        }
        c
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// Left-hand-side value of row `i` at point `x`.
    pub fn row_activity(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].coeffs.iter().map(|&(j, v)| v * x[j]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.len() != self.num_vars {
            return Err(SolverError::Shape(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                self.num_vars
            )));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(SolverError::Validation(format!(
                    "variable {j} has invalid bounds [{lo}, {hi}]"
                )));
            }
        }
        for &(j, v) in &self.objective {
            if j >= self.num_vars || !v.is_finite() {
                return Err(SolverError::Validation(format!(
                    "objective term ({j}, {v}) out of range"
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(SolverError::Validation(format!("row {i} rhs not finite")));
            }
            let mut nonzero = false;
            for &(j, v) in &row.coeffs {
                if j >= self.num_vars || !v.is_finite() {
                    return Err(SolverError::Validation(format!(
                        "row {i} term ({j}, {v}) out of range"
                    )));
                }
                if v != 0.0 {
                    nonzero = true;
                }
            }
            if !nonzero {
                return Err(SolverError::Validation(format!(
                    "row {i} has no nonzero coefficient"
                )));
            }
        }
        Ok(())
    }
}

/// Solve outcome of a linear program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Primal/dual result of an LP solve.
///
/// `duals` carries one multiplier per constraint row. With the minimization
/// convention used here, active `<=` rows get nonpositive duals and active
/// `>=` rows nonnegative ones. For `Infeasible`/`Unbounded` the primal is
/// empty and `certificate` holds a Farkas-style dual vector or an improving
/// ray over the structural variables.
#[derive(Debug, Clone)]
pub struct PrimalDualSolution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub certificate: Option<Vec<f64>>,
}

/// Numerical tolerances shared across the solve routines.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Primal feasibility (scaled by row magnitude).
    pub feas: f64,
    /// Strong-duality agreement at Optimal results.
    pub dual: f64,
    /// Complementarity product acceptance.
    pub comp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas: 1e-7,
            dual: 1e-7,
            comp: 1e-6,
        }
    }
}

/// A complementarity requirement: the slack of row `slack_ref` and the value
/// of variable `dual_ref` may not both be nonzero.
#[derive(Debug, Clone, Copy)]
pub struct ComplementarityPair {
    pub slack_ref: usize,
    pub dual_ref: usize,
}

/// Samples of a convex function of one variable, added to the objective as a
/// piecewise-linear epigraph. Breakpoints must ascend and cover the
/// variable's bounds; secant slopes must be nondecreasing.
#[derive(Debug, Clone)]
pub struct SeparablePWLTerm {
    pub variable_ref: usize,
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl SeparablePWLTerm {
    /// Value of the piecewise-linear interpolant at `x` (clamped to the
    /// breakpoint range).
    pub fn value_at(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        let v = &self.values;
        if x <= bp[0] {
            return v[0];
        }
        if x >= bp[bp.len() - 1] {
            return v[v.len() - 1];
        }
        for k in 0..bp.len() - 1 {
            if x <= bp[k + 1] {
                let t = (x - bp[k]) / (bp[k + 1] - bp[k]);
                return v[k] + t * (v[k + 1] - v[k]);
            }
        }
        v[v.len() - 1]
    }

    pub fn validate(&self, bounds: (f64, f64)) -> Result<()> {
        let bp = &self.breakpoints;
        let v = &self.values;
        if bp.len() < 2 || bp.len() != v.len() {
            return Err(SolverError::Validation(
                "pwl term needs >= 2 matching breakpoints/values".into(),
            ));
        }
        if bp.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(SolverError::Validation("pwl term has non-finite entries".into()));
        }
        for k in 1..bp.len() {
            if bp[k] <= bp[k - 1] {
                return Err(SolverError::Validation(
                    "pwl breakpoints must strictly ascend".into(),
                ));
            }
        }
        let (lo, hi) = bounds;
        if !lo.is_finite() || !hi.is_finite() {
            return Err(SolverError::Validation(
                "pwl variable must have finite bounds".into(),
            ));
        }
        if bp[0] > lo + 1e-12 || bp[bp.len() - 1] < hi - 1e-12 {
            return Err(SolverError::Validation(
                "pwl breakpoints must cover the variable bounds".into(),
            ));
        }
        // Convexity: secant slopes nondecreasing.
        let mut prev = f64::NEG_INFINITY;
        for k in 0..bp.len() - 1 {
            let s = (v[k + 1] - v[k]) / (bp[k + 1] - bp[k]);
            if s < prev - 1e-9 * (1.0 + s.abs() + prev.abs()) {
                return Err(SolverError::Validation(
                    "pwl samples are not convex (decreasing secant slope)".into(),
                ));
            }
            prev = s;
        }
        Ok(())
    }
}

/// A linear program plus binaries, complementarity pairs, and separable
/// convex piecewise-linear objective terms.
#[derive(Debug, Clone, Default)]
pub struct MixedIntegerModel {
    pub base: LinearProgram,
    pub binaries: Vec<usize>,
    pub comp_pairs: Vec<ComplementarityPair>,
    pub pwl_terms: Vec<SeparablePWLTerm>,
}

impl MixedIntegerModel {
    pub fn from_lp(base: LinearProgram) -> Self {
        Self {
            base,
            ..Self::default()
        }
    }

    /// Objective at `x` including the piecewise-linear term values.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let mut val = self.base.objective_value(x);
        for term in &self.pwl_terms {
            val += term.value_at(x[term.variable_ref]);
        }
        val
    }

    /// Signed slack of row `i` at `x`: distance to the rhs on the feasible
    /// side (`rhs - lhs` for `<=`, `lhs - rhs` for `>=`, `lhs - rhs` for `=`).
    pub fn row_slack(&self, i: usize, x: &[f64]) -> f64 {
        let lhs = self.base.row_activity(i, x);
        match self.base.rows[i].sense {
            RowSense::Le => self.base.rows[i].rhs - lhs,
            RowSense::Ge => lhs - self.base.rows[i].rhs,
            RowSense::Eq => lhs - self.base.rows[i].rhs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        for &b in &self.binaries {
            if b >= self.base.num_vars {
                return Err(SolverError::Validation(format!("binary {b} out of range")));
            }
            let (lo, hi) = self.base.bounds[b];
            if lo < -1e-12 || hi > 1.0 + 1e-12 {
                return Err(SolverError::Validation(format!(
                    "binary {b} must have bounds within [0, 1], got [{lo}, {hi}]"
                )));
            }
        }
        for (k, pair) in self.comp_pairs.iter().enumerate() {
            if pair.slack_ref >= self.base.rows.len() {
                return Err(SolverError::Validation(format!(
                    "pair {k} references missing row {}",
                    pair.slack_ref
                )));
            }
            if self.base.rows[pair.slack_ref].sense == RowSense::Eq {
                return Err(SolverError::Validation(format!(
                    "pair {k} references an equality row (no slack to complement)"
                )));
            }
            if pair.dual_ref >= self.base.num_vars {
                return Err(SolverError::Validation(format!(
                    "pair {k} references missing variable {}",
                    pair.dual_ref
                )));
            }
            let (lo, hi) = self.base.bounds[pair.dual_ref];
            if lo > 0.0 || hi < 0.0 {
                return Err(SolverError::Validation(format!(
                    "pair {k}: variable {} cannot be fixed to zero (bounds [{lo}, {hi}])",
                    pair.dual_ref
                )));
            }
        }
        for term in &self.pwl_terms {
            if term.variable_ref >= self.base.num_vars {
                return Err(SolverError::Validation(
                    "pwl term references missing variable".into(),
                ));
            }
            term.validate(self.base.bounds[term.variable_ref])?;
        }
        Ok(())
    }

    /// Checks a full assignment against bounds, rows, binary integrality and
    /// complementarity, all with magnitude-scaled tolerances.
    pub fn check_candidate(&self, x: &[f64], tol: &Tolerances) -> Result<()> {
        if x.len() != self.base.num_vars {
            return Err(SolverError::Shape(format!(
                "candidate has {} entries for {} variables",
                x.len(),
                self.base.num_vars
            )));
        }
        for (j, &v) in x.iter().enumerate() {
            let (lo, hi) = self.base.bounds[j];
            let s = tol.feas * (1.0 + v.abs());
            if v < lo - s || v > hi + s {
                return Err(SolverError::Validation(format!(
                    "candidate var {j} = {v} outside [{lo}, {hi}]"
                )));
            }
        }
        for (i, row) in self.base.rows.iter().enumerate() {
            let mut lhs = 0.0;
            let mut scale = 1.0 + row.rhs.abs();
            for &(j, v) in &row.coeffs {
                lhs += v * x[j];
                scale += (v * x[j]).abs();
            }
            let viol = match row.sense {
                RowSense::Le => lhs - row.rhs,
                RowSense::Ge => row.rhs - lhs,
                RowSense::Eq => (lhs - row.rhs).abs(),
            };
            if viol > tol.feas * scale {
                return Err(SolverError::Validation(format!(
                    "candidate violates row {i} by {viol:.3e}"
                )));
            }
        }
        for &b in &self.binaries {
            if (x[b] - x[b].round()).abs() > 1e-6 {
                return Err(SolverError::Validation(format!(
                    "candidate binary {b} = {} not integral",
                    x[b]
                )));
            }
        }
        for (k, pair) in self.comp_pairs.iter().enumerate() {
            let s = self.row_slack(pair.slack_ref, x);
            let d = x[pair.dual_ref];
            if (s * d).abs() > tol.comp * (1.0 + s.abs() + d.abs()) {
                return Err(SolverError::Validation(format!(
                    "candidate violates complementarity pair {k}: slack {s:.3e} * dual {d:.3e}"
                )));
            }
        }
        Ok(())
    }
}
