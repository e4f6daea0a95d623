//! Scenario decomposition by progressive hedging: the shared regression
//! coefficients are duplicated per scenario, non-anticipativity is relaxed,
//! and the copies are pulled together by dual weights plus a proximal
//! penalty. With complementarity pairs pre-fixed each subproblem is an LP
//! and the iteration converges; with active pairs it runs as a heuristic
//! and callers should cross-check against the monolithic solve.

use std::time::Instant;

use lin_solver::{
    solve_milp, MilpOptions, MilpStatus, MixedIntegerModel, RowSense, SeparablePWLTerm,
    Tolerances,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ippo::{objective_at_beta, scenario_of_col, KktModel};
use crate::linalg::Mat;

/// Penalty factor, stopping tolerance, iteration cap, and the segment count
/// of the piecewise-linear proximal terms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PHAConfig {
    pub rho: f64,
    pub delta: f64,
    pub max_iter: usize,
    pub prox_segments: usize,
}

impl Default for PHAConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            delta: 1e-4,
            max_iter: 200,
            prox_segments: 32,
        }
    }
}

impl PHAConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.delta > 0.0) || self.max_iter == 0 {
            return Err(Error::Validation(
                "need rho > 0, delta > 0, max_iter >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Subproblem solver knobs.
#[derive(Debug, Clone)]
pub struct PhaSolverOptions {
    pub gap_tol: f64,
    pub node_limit: usize,
    pub tol: Tolerances,
}

impl Default for PhaSolverOptions {
    fn default() -> Self {
        Self {
            gap_tol: 1e-7,
            node_limit: 20_000,
            tol: Tolerances::default(),
        }
    }
}

/// One scenario's standalone model with its own coefficient copy.
#[derive(Debug, Clone)]
pub struct ScenarioSubproblem {
    pub milp: MixedIntegerModel,
    /// Local columns of the coefficient copy (length `n_beta`).
    pub beta_local: Vec<usize>,
    pub scenario: usize,
}

/// Splits the reformulated model into one subproblem per scenario, each with
/// its own coefficient copy. Fails if any row couples scenarios through
/// anything but the shared coefficients (e.g. a loss-cap row).
pub fn duplicate_first_stage(model: &KktModel) -> Result<Vec<ScenarioSubproblem>> {
    if !model.cross_rows.is_empty() {
        return Err(Error::Validation(
            "model has cross-scenario rows (loss cap); progressive hedging needs separable scenarios"
                .into(),
        ));
    }
    crate::ippo::audit_scenario_separability(model)?;
    let n_beta = model.bilevel.n_beta;
    let n = model.bilevel.n_scenarios;
    let base = &model.milp.base;

    // Reject objective terms on shared coefficients: duplicating them would
    // multiply their weight.
    for &(col, coef) in &base.objective {
        if model.beta_cols.contains(&col) && coef != 0.0 {
            return Err(Error::Validation(
                "linear objective terms on shared coefficients are not decomposable".into(),
            ));
        }
    }

    let mut subs = Vec::with_capacity(n);
    for sc in 0..n {
        let mut col_map = vec![usize::MAX; base.num_vars];
        let mut lp = lin_solver::LinearProgram::new();
        let mut beta_local = Vec::with_capacity(n_beta);
        for col in model.beta_cols.clone() {
            let (lo, hi) = base.bounds[col];
            let local = lp.add_var(lo, hi);
            col_map[col] = local;
            beta_local.push(local);
        }
        for col in 0..base.num_vars {
            if scenario_of_col(model, col) == Some(sc) {
                let (lo, hi) = base.bounds[col];
                col_map[col] = lp.add_var(lo, hi);
            }
        }
        for &(col, coef) in &base.objective {
            if col_map[col] != usize::MAX && scenario_of_col(model, col) == Some(sc) {
                lp.set_obj(col_map[col], coef);
            }
        }
        let mut row_map = vec![usize::MAX; base.rows.len()];
        let rows_of_scenario: Vec<usize> = model.scn_rows[sc]
            .clone()
            .chain(model.scn_extra_rows[sc].iter().copied())
            .collect();
        for &r in &rows_of_scenario {
            let row = &base.rows[r];
            let coeffs: Vec<(usize, f64)> = row
                .coeffs
                .iter()
                .map(|&(col, c)| {
                    if col_map[col] == usize::MAX {
                        Err(Error::Validation(format!(
                            "row {r} references a column outside scenario {sc}"
                        )))
                    } else {
                        Ok((col_map[col], c))
                    }
                })
                .collect::<Result<_>>()?;
            row_map[r] = lp.add_row(coeffs, row.sense, row.rhs);
        }
        let mut milp = MixedIntegerModel::from_lp(lp);
        for pair in &model.milp.comp_pairs {
            if row_map[pair.slack_ref] != usize::MAX {
                if col_map[pair.dual_ref] == usize::MAX {
                    return Err(Error::Validation(
                        "complementarity pair crosses scenarios".into(),
                    ));
                }
                milp.comp_pairs.push(lin_solver::ComplementarityPair {
                    slack_ref: row_map[pair.slack_ref],
                    dual_ref: col_map[pair.dual_ref],
                });
            }
        }
        for term in &model.milp.pwl_terms {
            if col_map[term.variable_ref] == usize::MAX {
                continue;
            }
            let owner = scenario_of_col(model, term.variable_ref);
            let mut t = term.clone();
            t.variable_ref = col_map[term.variable_ref];
            if owner.is_none() {
                // Shared-coefficient term (ridge): spread across copies.
                for v in t.values.iter_mut() {
                    *v /= n as f64;
                }
            }
            milp.pwl_terms.push(t);
        }
        subs.push(ScenarioSubproblem {
            milp,
            beta_local,
            scenario: sc,
        });
    }
    Ok(subs)
}

/// Iterate state: per-scenario coefficient copies, their average, and the
/// dual weights.
#[derive(Debug, Clone)]
pub struct PhaState {
    pub z_dup: Vec<Vec<f64>>,
    pub z_bar: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    /// Completed solve rounds (the initialization round counts as 1).
    pub iter: usize,
    last_solutions: Vec<Option<Vec<f64>>>,
}

impl PhaState {
    pub fn new(n_scenarios: usize, n_beta: usize) -> Self {
        Self {
            z_dup: vec![vec![0.0; n_beta]; n_scenarios],
            z_bar: vec![0.0; n_beta],
            w: vec![vec![0.0; n_beta]; n_scenarios],
            iter: 0,
            last_solutions: vec![None; n_scenarios],
        }
    }

    /// Largest absolute deviation of any copy entry from the average.
    pub fn max_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for z in &self.z_dup {
            for (zi, zb) in z.iter().zip(&self.z_bar) {
                worst = worst.max((zi - zb).abs());
            }
        }
        worst
    }
}

/// Proximal sampling grid: geometric offsets around the consensus value so
/// the pull is sharp near it and still covers the whole box.
fn prox_term(col: usize, lo: f64, hi: f64, center: f64, rho: f64, segments: usize, delta: f64) -> SeparablePWLTerm {
    let center = center.clamp(lo, hi);
    let mut points = vec![lo, hi, center];
    let h0 = (delta * 0.1).max(1e-9);
    let half = (segments / 2).max(4);
    let mut off = h0;
    for _ in 0..half {
        let a = center - off;
        if a > lo {
            points.push(a);
        }
        let b = center + off;
        if b < hi {
            points.push(b);
        }
        off *= 2.0;
        if off > (hi - lo) {
            break;
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let values = points.iter().map(|&x| 0.5 * rho * (x - center) * (x - center)).collect();
    SeparablePWLTerm {
        variable_ref: col,
        breakpoints: points,
        values,
    }
}

/// Per-round statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub max_deviation: f64,
    pub consensus_objective: f64,
    pub wallclock_s: f64,
}

/// Runs one solve round. Round 1 (state.iter == 0) is the initialization:
/// independent scenario solves, averaging, and the first dual weights; later
/// rounds add the dual term and the proximal penalty before solving.
pub fn pha_iterate(
    state: &mut PhaState,
    subs: &[ScenarioSubproblem],
    cfg: &PHAConfig,
    opts: &PhaSolverOptions,
) -> Result<()> {
    cfg.validate()?;
    let init = state.iter == 0;
    let results: Vec<Result<(Vec<f64>, Vec<f64>)>> = subs
        .par_iter()
        .enumerate()
        .map(|(i, sub)| {
            let mut milp = sub.milp.clone();
            if !init {
                for (k, &col) in sub.beta_local.iter().enumerate() {
                    if state.w[i][k] != 0.0 {
                        milp.base.set_obj(col, state.w[i][k]);
                    }
                    let (lo, hi) = milp.base.bounds[col];
                    if hi > lo {
                        milp.pwl_terms.push(prox_term(
                            col,
                            lo,
                            hi,
                            state.z_bar[k],
                            cfg.rho,
                            cfg.prox_segments,
                            cfg.delta,
                        ));
                    }
                }
            }
            let mut milp_opts = MilpOptions {
                tol: opts.tol,
                gap_tol: opts.gap_tol,
                node_limit: opts.node_limit,
                ..MilpOptions::default()
            };
            if let Some(prev) = &state.last_solutions[i] {
                milp_opts.initial_incumbents.push(prev.clone());
            }
            let res = solve_milp(&milp, &milp_opts).map_err(|e| Error::Iterate {
                scenario: sub.scenario,
                message: e.to_string(),
            })?;
            match res.status {
                MilpStatus::Optimal | MilpStatus::NodeLimit => {}
                s => {
                    return Err(Error::Iterate {
                        scenario: sub.scenario,
                        message: format!("subproblem ended {s:?}"),
                    })
                }
            }
            let z: Vec<f64> = sub.beta_local.iter().map(|&c| res.primal[c]).collect();
            Ok((z, res.primal))
        })
        .collect();

    let n = subs.len() as f64;
    for (i, r) in results.into_iter().enumerate() {
        let (z, full) = r?;
        state.z_dup[i] = z;
        state.last_solutions[i] = Some(full);
    }
    let n_beta = state.z_bar.len();
    for k in 0..n_beta {
        state.z_bar[k] = state.z_dup.iter().map(|z| z[k]).sum::<f64>() / n;
    }
    // Independent re-check of the averaging.
    for k in 0..n_beta {
        let resid: f64 = state.z_dup.iter().map(|z| z[k] - state.z_bar[k]).sum();
        if resid.abs() > 1e-9 * (1.0 + state.z_bar[k].abs()) * n {
            return Err(Error::Validation(format!(
                "consensus average residual {resid:.3e} at entry {k}"
            )));
        }
    }
    if init {
        for i in 0..subs.len() {
            for k in 0..n_beta {
                state.w[i][k] = cfg.rho * (state.z_dup[i][k] - state.z_bar[k]);
            }
        }
    } else {
        for i in 0..subs.len() {
            for k in 0..n_beta {
                state.w[i][k] += cfg.rho * (state.z_dup[i][k] - state.z_bar[k]);
            }
        }
    }
    // Dual weights sum to zero by the update's algebra.
    let scale: f64 = state
        .w
        .iter()
        .flat_map(|w| w.iter())
        .fold(1.0f64, |a, v| a.max(v.abs()));
    for k in 0..n_beta {
        let s: f64 = state.w.iter().map(|w| w[k]).sum();
        if s.abs() > 1e-8 * scale * n {
            return Err(Error::Validation(format!(
                "dual weights do not cancel: sum {s:.3e} at entry {k}"
            )));
        }
    }
    state.iter += 1;
    Ok(())
}

/// Full progressive-hedging result.
#[derive(Debug, Clone)]
pub struct PhaResult {
    pub consensus_beta: Mat,
    /// Objective of the original model recomputed exactly at the consensus
    /// coefficients, never the penalized subproblem value.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    pub state: PhaState,
}

/// Runs initialization and iterates until every copy sits within `delta`
/// of the consensus (max norm over entries) or the round cap is hit.
pub fn pha_solve(model: &KktModel, cfg: &PHAConfig, opts: &PhaSolverOptions) -> Result<PhaResult> {
    cfg.validate()?;
    let subs = duplicate_first_stage(model)?;
    let n_beta = model.bilevel.n_beta;
    let mut state = PhaState::new(subs.len(), n_beta);
    let mut trace = Vec::new();
    let start = Instant::now();
    let to_mat = |z: &[f64]| {
        let p = model.bilevel.d_x + 1;
        Mat::from_fn(model.bilevel.d_l, p, |j, a| z[j * p + a])
    };
    let mut converged = false;
    while state.iter < cfg.max_iter {
        pha_iterate(&mut state, &subs, cfg, opts)?;
        let dev = state.max_deviation();
        let consensus = to_mat(&state.z_bar);
        let objective = objective_at_beta(model, &consensus, &opts.tol)?;
        trace.push(TraceRow {
            iter: state.iter,
            max_deviation: dev,
            consensus_objective: objective,
            wallclock_s: start.elapsed().as_secs_f64(),
        });
        if dev <= cfg.delta {
            converged = true;
            break;
        }
    }
    let consensus_beta = to_mat(&state.z_bar);
    let objective = objective_at_beta(model, &consensus_beta, &opts.tol)?;
    Ok(PhaResult {
        consensus_beta,
        objective,
        converged,
        iterations: state.iter,
        trace,
        state,
    })
}

/// One side of a complementarity pair chosen for fixing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairFix {
    RowTight,
    DualZero,
}

/// Reads the active pattern of every pair at an assignment: the side closer
/// to zero wins (dual side on ties).
pub fn pair_pattern_from(model: &MixedIntegerModel, x: &[f64]) -> Vec<PairFix> {
    model
        .comp_pairs
        .iter()
        .map(|pair| {
            let s = model.row_slack(pair.slack_ref, x).abs();
            let d = x[pair.dual_ref].abs();
            if d <= s {
                PairFix::DualZero
            } else {
                PairFix::RowTight
            }
        })
        .collect()
}

/// Applies a pair pattern, producing a model with no complementarity pairs:
/// rows forced to equality or duals pinned at zero. The result is convex
/// (an LP apart from any piecewise-linear terms).
pub fn apply_pair_pattern(model: &KktModel, pattern: &[PairFix]) -> Result<KktModel> {
    if pattern.len() != model.milp.comp_pairs.len() {
        return Err(Error::Shape("pattern length != pair count".into()));
    }
    let mut out = model.clone();
    for (pair, fix) in model.milp.comp_pairs.iter().zip(pattern) {
        match fix {
            PairFix::RowTight => {
                out.milp.base.rows[pair.slack_ref].sense = RowSense::Eq;
            }
            PairFix::DualZero => {
                out.milp.base.bounds[pair.dual_ref] = (0.0, 0.0);
            }
        }
    }
    out.milp.comp_pairs.clear();
    Ok(out)
}
