//! Comparison methods: perfect foresight, predict-then-optimize, the
//! sample-average extensive form, k-nearest-neighbor conditional stochastic
//! optimization, and feature-based linear decision rules.

use lin_solver::{solve_lp, LinearProgram, RowSense, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::regression::{self, RegressionParams};
use crate::scenario::{
    scenario_cost, Dataset, Decision, NewsvendorInstance, ProblemInstance, ShipmentInstance,
};

/// Decisions, realized per-row costs, and their mean for one method on one
/// row set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub decisions: Vec<Decision>,
    pub row_costs: Vec<f64>,
    pub mean_cost: f64,
    pub hyperparams: String,
}

impl MethodResult {
    pub fn new(
        method: impl Into<String>,
        decisions: Vec<Decision>,
        row_costs: Vec<f64>,
        hyperparams: impl Into<String>,
    ) -> Self {
        let mean_cost = row_costs.iter().sum::<f64>() / row_costs.len().max(1) as f64;
        Self {
            method: method.into(),
            decisions,
            row_costs,
            mean_cost,
            hyperparams: hyperparams.into(),
        }
    }
}

fn clamp_decision(values: Vec<f64>) -> Result<Decision> {
    Decision::new(values.into_iter().map(|v| v.max(0.0)).collect())
}

/// Cost-minimizing newsvendor order for a known (or predicted) demand: order
/// the demand when shortage is dearer than ordering, otherwise nothing.
pub fn newsvendor_response(yhat: &[f64], order: &[f64], backorder: &[f64]) -> Decision {
    let q = yhat
        .iter()
        .zip(order.iter().zip(backorder))
        .map(|(&y, (&c, &b))| if b > c { y.max(0.0) } else { 0.0 })
        .collect();
    Decision(q)
}

/// Deterministic single-scenario shipment plan for a known (or predicted)
/// demand: advance production, last-minute production, and shipping jointly
/// optimized.
pub fn shipment_response(yhat: &[f64], inst: &ShipmentInstance, row: usize) -> Result<Decision> {
    let w = inst.d_w();
    let l = inst.d_l();
    let ship = &inst.ship_cost[row];
    let mut lp = LinearProgram::new();
    let z0 = lp.add_vars(w, 0.0, f64::INFINITY);
    let t0 = lp.add_vars(w, 0.0, f64::INFINITY);
    let s0 = lp.add_vars(w * l, 0.0, f64::INFINITY);
    for i in 0..w {
        lp.set_obj(z0 + i, inst.advance_cost);
        lp.set_obj(t0 + i, inst.lastminute_cost);
        for j in 0..l {
            lp.set_obj(s0 + i * l + j, ship.get(i, j));
        }
    }
    for j in 0..l {
        lp.add_row(
            (0..w).map(|i| (s0 + i * l + j, 1.0)).collect(),
            RowSense::Ge,
            yhat[j].max(0.0),
        );
    }
    for i in 0..w {
        let mut coeffs: Vec<(usize, f64)> = (0..l).map(|j| (s0 + i * l + j, 1.0)).collect();
        coeffs.push((z0 + i, -1.0));
        coeffs.push((t0 + i, -1.0));
        lp.add_row(coeffs, RowSense::Le, 0.0);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(lin_solver::SolverError::Numerical(format!(
            "deterministic shipment plan {:?}",
            sol.status
        ))));
    }
    clamp_decision(sol.primal[z0..z0 + w].to_vec())
}

/// First-stage decision for a known/predicted demand vector on one row.
pub fn deterministic_response(
    yhat: &[f64],
    inst: &ProblemInstance,
    row: usize,
) -> Result<Decision> {
    match inst {
        ProblemInstance::Newsvendor(nv) => Ok(newsvendor_response(
            yhat,
            nv.order_cost.row(row),
            nv.backorder_cost.row(row),
        )),
        ProblemInstance::Shipment(sp) => shipment_response(yhat, sp, row),
    }
}

/// Solves each scenario with its true demand; lower-bounds every method.
pub fn perfect_foresight(data: &Dataset, inst: &ProblemInstance) -> Result<MethodResult> {
    let mut decisions = Vec::with_capacity(data.n());
    let mut costs = Vec::with_capacity(data.n());
    for row in 0..data.n() {
        let d = deterministic_response(data.responses().row(row), inst, row)?;
        costs.push(scenario_cost(d.as_slice(), data, inst, row)?);
        decisions.push(d);
    }
    Ok(MethodResult::new("perfect_foresight", decisions, costs, "{}"))
}

/// Predict-then-optimize: plug the point prediction into the deterministic
/// problem, then realize the cost against true demand.
pub fn point_estimate(
    params: &RegressionParams,
    data: &Dataset,
    inst: &ProblemInstance,
) -> Result<MethodResult> {
    let mut decisions = Vec::with_capacity(data.n());
    let mut costs = Vec::with_capacity(data.n());
    for row in 0..data.n() {
        let yhat = regression::predict(params, data.features().row(row))?;
        let d = deterministic_response(&yhat, inst, row)?;
        costs.push(scenario_cost(d.as_slice(), data, inst, row)?);
        decisions.push(d);
    }
    Ok(MethodResult::new("point_estimate", decisions, costs, "{}"))
}

/// Extensive-form newsvendor over all train scenarios with one shared order
/// vector. Returns the decision and the optimal objective.
fn saa_newsvendor(data: &Dataset, nv: &NewsvendorInstance) -> Result<(Decision, f64)> {
    let n = data.n();
    let j_dim = data.d_l();
    let scale = 1.0 / (n * j_dim) as f64;
    let mut lp = LinearProgram::new();
    let q0 = lp.add_vars(j_dim, 0.0, f64::INFINITY);
    let u0 = lp.add_vars(n * j_dim, 0.0, f64::INFINITY);
    let o0 = lp.add_vars(n * j_dim, 0.0, f64::INFINITY);
    for j in 0..j_dim {
        let c_sum: f64 = (0..n).map(|i| nv.order_cost.get(i, j)).sum();
        lp.set_obj(q0 + j, scale * c_sum);
    }
    for i in 0..n {
        for j in 0..j_dim {
            let idx = i * j_dim + j;
            lp.set_obj(u0 + idx, scale * nv.backorder_cost.get(i, j));
            lp.set_obj(o0 + idx, scale * nv.holding_cost.get(i, j));
            let y = data.responses().get(i, j);
            lp.add_row(vec![(q0 + j, 1.0), (u0 + idx, 1.0)], RowSense::Ge, y);
            lp.add_row(vec![(o0 + idx, 1.0), (q0 + j, -1.0)], RowSense::Ge, -y);
        }
    }
    let sol = solve_lp(&lp)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(lin_solver::SolverError::Numerical(format!(
            "newsvendor extensive form {:?}",
            sol.status
        ))));
    }
    Ok((clamp_decision(sol.primal[q0..q0 + j_dim].to_vec())?, sol.objective))
}

/// Extensive-form shipment over all train scenarios with one shared advance
/// production vector.
fn saa_shipment(data: &Dataset, sp: &ShipmentInstance) -> Result<(Decision, f64)> {
    let n = data.n();
    let w = sp.d_w();
    let l = sp.d_l();
    let inv_n = 1.0 / n as f64;
    let mut lp = LinearProgram::new();
    let z0 = lp.add_vars(w, 0.0, f64::INFINITY);
    let t0 = lp.add_vars(n * w, 0.0, f64::INFINITY);
    let s0 = lp.add_vars(n * w * l, 0.0, f64::INFINITY);
    for i in 0..w {
        lp.set_obj(z0 + i, sp.advance_cost);
    }
    for sc in 0..n {
        let ship = &sp.ship_cost[sc];
        for i in 0..w {
            lp.set_obj(t0 + sc * w + i, inv_n * sp.lastminute_cost);
            for j in 0..l {
                lp.set_obj(s0 + (sc * w + i) * l + j, inv_n * ship.get(i, j));
            }
        }
        for j in 0..l {
            lp.add_row(
                (0..w).map(|i| (s0 + (sc * w + i) * l + j, 1.0)).collect(),
                RowSense::Ge,
                data.responses().get(sc, j),
            );
        }
        for i in 0..w {
            let mut coeffs: Vec<(usize, f64)> =
                (0..l).map(|j| (s0 + (sc * w + i) * l + j, 1.0)).collect();
            coeffs.push((z0 + i, -1.0));
            coeffs.push((t0 + sc * w + i, -1.0));
            lp.add_row(coeffs, RowSense::Le, 0.0);
        }
    }
    let sol = solve_lp(&lp)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(lin_solver::SolverError::Numerical(format!(
            "shipment extensive form {:?}",
            sol.status
        ))));
    }
    Ok((clamp_decision(sol.primal[z0..z0 + w].to_vec())?, sol.objective))
}

/// Shared first-stage decision minimizing mean train cost, plus its train
/// objective.
pub fn saa_decision(train: &Dataset, inst: &ProblemInstance) -> Result<(Decision, f64)> {
    if train.n() == 0 {
        return Err(Error::Validation("saa needs a nonempty train set".into()));
    }
    match inst {
        ProblemInstance::Newsvendor(nv) => saa_newsvendor(train, nv),
        ProblemInstance::Shipment(sp) => saa_shipment(train, sp),
    }
}

/// Fits the extensive form on train rows and evaluates the shared decision
/// on eval rows.
pub fn saa(
    train: &Dataset,
    train_inst: &ProblemInstance,
    eval: &Dataset,
    eval_inst: &ProblemInstance,
) -> Result<MethodResult> {
    let (decision, _) = saa_decision(train, train_inst)?;
    let mut costs = Vec::with_capacity(eval.n());
    let mut decisions = Vec::with_capacity(eval.n());
    for row in 0..eval.n() {
        costs.push(scenario_cost(decision.as_slice(), eval, eval_inst, row)?);
        decisions.push(decision.clone());
    }
    Ok(MethodResult::new("saa", decisions, costs, "{}"))
}

/// The k nearest train rows to `x_query` in Euclidean feature distance,
/// ties broken by row id, returned as row positions in ascending order.
pub fn nearest_neighbors(train: &Dataset, x_query: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > train.n() {
        return Err(Error::Validation(format!(
            "k = {k} outside [1, {}]",
            train.n()
        )));
    }
    if x_query.len() != train.d_x() {
        return Err(Error::Shape("query dimension mismatch".into()));
    }
    let mut scored: Vec<(f64, usize, usize)> = (0..train.n())
        .map(|row| {
            let d2: f64 = train
                .features()
                .row(row)
                .iter()
                .zip(x_query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d2, train.ids()[row], row)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut rows: Vec<usize> = scored[..k].iter().map(|s| s.2).collect();
    rows.sort_unstable();
    Ok(rows)
}

/// Conditional stochastic optimization: the extensive form restricted to the
/// k train scenarios nearest to the query point, with equal weights.
pub fn knn_cso(
    train: &Dataset,
    train_inst: &ProblemInstance,
    x_query: &[f64],
    k: usize,
) -> Result<Decision> {
    let rows = nearest_neighbors(train, x_query, k)?;
    let sub_data = train.select_rows(&rows);
    let sub_inst = train_inst.select_rows(&rows);
    let (decision, _) = saa_decision(&sub_data, &sub_inst)?;
    Ok(decision)
}

/// Linear decision rule coefficients: one row per first-stage component,
/// `d_x + 1` columns with the intercept first (same layout as regression
/// coefficients).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleCoefficients {
    pub theta: Mat,
}

fn augmented(x: &[f64], a: usize) -> f64 {
    if a == 0 {
        1.0
    } else {
        x[a - 1]
    }
}

/// Fits an affine first-stage rule by minimizing empirical train cost in one
/// LP. Rule outputs are constrained nonnegative on every train row, so the
/// constant rules (and hence the extensive-form decision) stay feasible.
pub fn feature_based_fit(train: &Dataset, inst: &ProblemInstance) -> Result<(RuleCoefficients, f64)> {
    if train.n() == 0 {
        return Err(Error::Validation("rule fit needs a nonempty train set".into()));
    }
    let n = train.n();
    let p = train.d_x() + 1;
    match inst {
        ProblemInstance::Newsvendor(nv) => {
            let j_dim = train.d_l();
            let scale = 1.0 / (n * j_dim) as f64;
            let mut lp = LinearProgram::new();
            let th0 = lp.add_vars(j_dim * p, f64::NEG_INFINITY, f64::INFINITY);
            let u0 = lp.add_vars(n * j_dim, 0.0, f64::INFINITY);
            let o0 = lp.add_vars(n * j_dim, 0.0, f64::INFINITY);
            let theta = |j: usize, a: usize| th0 + j * p + a;
            for j in 0..j_dim {
                for a in 0..p {
                    let coef: f64 = (0..n)
                        .map(|i| nv.order_cost.get(i, j) * augmented(train.features().row(i), a))
                        .sum();
                    lp.set_obj(theta(j, a), scale * coef);
                }
            }
            for i in 0..n {
                let x = train.features().row(i);
                for j in 0..j_dim {
                    let idx = i * j_dim + j;
                    lp.set_obj(u0 + idx, scale * nv.backorder_cost.get(i, j));
                    lp.set_obj(o0 + idx, scale * nv.holding_cost.get(i, j));
                    let y = train.responses().get(i, j);
                    let rule: Vec<(usize, f64)> =
                        (0..p).map(|a| (theta(j, a), augmented(x, a))).collect();
                    let mut up = rule.clone();
                    up.push((u0 + idx, 1.0));
                    lp.add_row(up, RowSense::Ge, y);
                    let mut down: Vec<(usize, f64)> =
                        rule.iter().map(|&(v, c)| (v, -c)).collect();
                    down.push((o0 + idx, 1.0));
                    lp.add_row(down, RowSense::Ge, -y);
                    lp.add_row(rule, RowSense::Ge, 0.0);
                }
            }
            let sol = solve_lp(&lp)?;
            if sol.status != SolveStatus::Optimal {
                return Err(Error::Solver(lin_solver::SolverError::Numerical(format!(
                    "rule fit {:?}",
                    sol.status
                ))));
            }
            let theta_mat = Mat::from_fn(j_dim, p, |j, a| sol.primal[theta(j, a)]);
            Ok((RuleCoefficients { theta: theta_mat }, sol.objective))
        }
        ProblemInstance::Shipment(sp) => {
            let w = sp.d_w();
            let l = sp.d_l();
            let inv_n = 1.0 / n as f64;
            let mut lp = LinearProgram::new();
            let th0 = lp.add_vars(w * p, f64::NEG_INFINITY, f64::INFINITY);
            let t0 = lp.add_vars(n * w, 0.0, f64::INFINITY);
            let s0 = lp.add_vars(n * w * l, 0.0, f64::INFINITY);
            let theta = |i: usize, a: usize| th0 + i * p + a;
            for i in 0..w {
                for a in 0..p {
                    let coef: f64 = (0..n)
                        .map(|sc| augmented(train.features().row(sc), a))
                        .sum();
                    lp.set_obj(theta(i, a), inv_n * sp.advance_cost * coef);
                }
            }
            for sc in 0..n {
                let x = train.features().row(sc);
                let ship = &sp.ship_cost[sc];
                for i in 0..w {
                    lp.set_obj(t0 + sc * w + i, inv_n * sp.lastminute_cost);
                    for j in 0..l {
                        lp.set_obj(s0 + (sc * w + i) * l + j, inv_n * ship.get(i, j));
                    }
                }
                for j in 0..l {
                    lp.add_row(
                        (0..w).map(|i| (s0 + (sc * w + i) * l + j, 1.0)).collect(),
                        RowSense::Ge,
                        train.responses().get(sc, j),
                    );
                }
                for i in 0..w {
                    let rule: Vec<(usize, f64)> =
                        (0..p).map(|a| (theta(i, a), augmented(x, a))).collect();
                    let mut cap: Vec<(usize, f64)> =
                        (0..l).map(|j| (s0 + (sc * w + i) * l + j, 1.0)).collect();
                    cap.push((t0 + sc * w + i, -1.0));
                    for &(v, c) in &rule {
                        cap.push((v, -c));
                    }
                    lp.add_row(cap, RowSense::Le, 0.0);
                    lp.add_row(rule, RowSense::Ge, 0.0);
                }
            }
            let sol = solve_lp(&lp)?;
            if sol.status != SolveStatus::Optimal {
                return Err(Error::Solver(lin_solver::SolverError::Numerical(format!(
                    "rule fit {:?}",
                    sol.status
                ))));
            }
            let theta_mat = Mat::from_fn(w, p, |i, a| sol.primal[theta(i, a)]);
            Ok((RuleCoefficients { theta: theta_mat }, sol.objective))
        }
    }
}

/// Applies an affine rule per row (negative outputs clamped to zero) and
/// realizes the costs.
pub fn evaluate_rule(
    coefficients: &RuleCoefficients,
    data: &Dataset,
    inst: &ProblemInstance,
) -> Result<MethodResult> {
    let p = data.d_x() + 1;
    if coefficients.theta.cols() != p {
        return Err(Error::Shape("rule width must be d_x + 1".into()));
    }
    let mut decisions = Vec::with_capacity(data.n());
    let mut costs = Vec::with_capacity(data.n());
    for row in 0..data.n() {
        let x = data.features().row(row);
        let raw: Vec<f64> = (0..coefficients.theta.rows())
            .map(|i| (0..p).map(|a| coefficients.theta.get(i, a) * augmented(x, a)).sum())
            .collect();
        let d = clamp_decision(raw)?;
        costs.push(scenario_cost(d.as_slice(), data, inst, row)?);
        decisions.push(d);
    }
    Ok(MethodResult::new("feature_based", decisions, costs, "{}"))
}
