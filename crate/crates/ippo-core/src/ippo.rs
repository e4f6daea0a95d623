//! Training a linear predictor inside the prescriptive problem: a bilevel
//! model whose lower level prescribes from predictions and whose upper level
//! scores those decisions against true demand, reformulated to a single
//! mixed-integer model through the lower level's KKT conditions.
//!
//! The lower level of each scenario is an LP whose right-hand sides are
//! affine in the regression coefficients, so stationarity stays linear and
//! the only combinatorial content is complementarity, which the solver
//! branches on. Scenarios couple only through the coefficients, which is
//! what the progressive-hedging decomposition exploits.

use std::cell::RefCell;

use lin_solver::{
    solve_lp_with, solve_milp_with_heuristic, LinearProgram, MilpOptions, MilpStatus,
    MixedIntegerModel, RowSense, SeparablePWLTerm, SolveStatus, Tolerances,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::regression::{self, LossKind, RegressionParams};
use crate::scenario::{Dataset, Decision, ProblemInstance, ProblemKind};

/// Componentwise box bounds on the regression coefficients,
/// `d_l x (d_x + 1)` each.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaBox {
    pub lo: Mat,
    pub hi: Mat,
}

impl BetaBox {
    /// Box centered on reference coefficients with half-width
    /// `max(min_halfwidth, factor * |ref|)` per entry.
    pub fn around(reference: &Mat, factor: f64, min_halfwidth: f64) -> Self {
        let hw = |j: usize, a: usize| (factor * reference.get(j, a).abs()).max(min_halfwidth);
        let lo = Mat::from_fn(reference.rows(), reference.cols(), |j, a| {
            reference.get(j, a) - hw(j, a)
        });
        let hi = Mat::from_fn(reference.rows(), reference.cols(), |j, a| {
            reference.get(j, a) + hw(j, a)
        });
        Self { lo, hi }
    }

    pub fn clamp(&self, beta: &Mat) -> Mat {
        Mat::from_fn(beta.rows(), beta.cols(), |j, a| {
            beta.get(j, a).clamp(self.lo.get(j, a), self.hi.get(j, a))
        })
    }

    pub fn contains(&self, beta: &Mat, tol: f64) -> bool {
        (0..beta.rows()).all(|j| {
            (0..beta.cols()).all(|a| {
                beta.get(j, a) >= self.lo.get(j, a) - tol
                    && beta.get(j, a) <= self.hi.get(j, a) + tol
            })
        })
    }

    /// Fixes every slope entry (columns past the intercept) to zero.
    pub fn with_zero_slopes(mut self) -> Self {
        for j in 0..self.lo.rows() {
            for a in 1..self.lo.cols() {
                self.lo.set(j, a, 0.0);
                self.hi.set(j, a, 0.0);
            }
        }
        self
    }
}

/// One inequality of a scenario's lower LP: `coeffs . u >= rhs_const +
/// rhs_beta . beta`. Coefficients never touch beta; only right-hand sides
/// do.
#[derive(Debug, Clone)]
pub struct LowerRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs_const: f64,
    pub rhs_beta: Vec<(usize, f64)>,
}

/// One `>=` inequality of a scenario's upper level over its upper variables
/// and (read-only) its lower variables.
#[derive(Debug, Clone)]
pub struct UpperRow {
    pub upper_coeffs: Vec<(usize, f64)>,
    pub lower_coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// All pieces of one scenario. Upper and lower variables are nonnegative,
/// indexed locally from zero within each group.
#[derive(Debug, Clone)]
pub struct ScenarioBlock {
    pub n_upper: usize,
    pub n_lower: usize,
    /// Upper objective, already carrying the scenario's share of the
    /// overall average.
    pub upper_objective: Vec<(usize, f64)>,
    pub upper_rows: Vec<UpperRow>,
    /// Equality links (upper var, lower var): prescribed first-stage
    /// decisions are scored as-is.
    pub links: Vec<(usize, usize)>,
    pub lower_objective: Vec<(usize, f64)>,
    pub lower_rows: Vec<LowerRow>,
    /// Lower variable indices carrying the first-stage decision.
    pub first_stage_lower: Vec<usize>,
}

/// The bilevel training model: per-scenario blocks, the shared coefficient
/// box, and the train data the blocks were built from.
#[derive(Debug, Clone)]
pub struct BilevelModel {
    pub kind: ProblemKind,
    pub n_scenarios: usize,
    pub d_l: usize,
    pub d_x: usize,
    pub n_beta: usize,
    pub beta_box: BetaBox,
    pub scenarios: Vec<ScenarioBlock>,
    pub features: Mat,
    pub responses: Mat,
}

fn beta_col(j: usize, a: usize, p: usize) -> usize {
    j * p + a
}

/// Builds the bilevel model for either problem over the given train rows.
/// The lower level mirrors the cost structure with predicted demand in
/// place of the true one; the upper level evaluates the linked first-stage
/// decisions against true demand.
pub fn build_bilevel(
    train: &Dataset,
    inst: &ProblemInstance,
    beta_box: BetaBox,
) -> Result<BilevelModel> {
    let n = train.n();
    if n == 0 {
        return Err(Error::Validation("bilevel model needs train scenarios".into()));
    }
    if inst.n() != n {
        return Err(Error::Shape("instance/train row mismatch".into()));
    }
    let d_l = train.d_l();
    let p = train.d_x() + 1;
    if beta_box.lo.rows() != d_l
        || beta_box.lo.cols() != p
        || beta_box.hi.rows() != d_l
        || beta_box.hi.cols() != p
    {
        return Err(Error::Shape("beta box must be d_l x (d_x+1)".into()));
    }
    if !beta_box.lo.is_finite() || !beta_box.hi.is_finite() {
        return Err(Error::Validation("beta box must be finite".into()));
    }

    let yhat_terms = |row: usize, j: usize| -> Vec<(usize, f64)> {
        let x = train.features().row(row);
        let mut terms = Vec::with_capacity(p);
        terms.push((beta_col(j, 0, p), 1.0));
        for (f, &xf) in x.iter().enumerate() {
            if xf != 0.0 {
                terms.push((beta_col(j, f + 1, p), xf));
            }
        }
        terms
    };

    let mut scenarios = Vec::with_capacity(n);
    match inst {
        ProblemInstance::Newsvendor(nv) => {
            let scale = 1.0 / (n * d_l) as f64;
            for sc in 0..n {
                // upper/lower vars per product: order Q, shortage U, surplus O
                let (qv, uv, ov) = (0, d_l, 2 * d_l);
                let mut upper_objective = Vec::new();
                let mut upper_rows = Vec::new();
                let mut links = Vec::new();
                let mut lower_objective = Vec::new();
                let mut lower_rows = Vec::new();
                for j in 0..d_l {
                    let y = train.responses().get(sc, j);
                    let c = nv.order_cost.get(sc, j);
                    let b = nv.backorder_cost.get(sc, j);
                    let h = nv.holding_cost.get(sc, j);
                    upper_objective.push((qv + j, scale * c));
                    upper_objective.push((uv + j, scale * b));
                    upper_objective.push((ov + j, scale * h));
                    upper_rows.push(UpperRow {
                        upper_coeffs: vec![(uv + j, 1.0), (qv + j, 1.0)],
                        lower_coeffs: vec![],
                        rhs: y,
                    });
                    upper_rows.push(UpperRow {
                        upper_coeffs: vec![(ov + j, 1.0), (qv + j, -1.0)],
                        lower_coeffs: vec![],
                        rhs: -y,
                    });
                    links.push((qv + j, qv + j));
                    lower_objective.push((qv + j, c));
                    lower_objective.push((uv + j, b));
                    lower_objective.push((ov + j, h));
                    lower_rows.push(LowerRow {
                        coeffs: vec![(qv + j, 1.0), (uv + j, 1.0)],
                        rhs_const: 0.0,
                        rhs_beta: yhat_terms(sc, j),
                    });
                    lower_rows.push(LowerRow {
                        coeffs: vec![(ov + j, 1.0), (qv + j, -1.0)],
                        rhs_const: 0.0,
                        rhs_beta: yhat_terms(sc, j)
                            .into_iter()
                            .map(|(v, c)| (v, -c))
                            .collect(),
                    });
                }
                scenarios.push(ScenarioBlock {
                    n_upper: 3 * d_l,
                    n_lower: 3 * d_l,
                    upper_objective,
                    upper_rows,
                    links,
                    lower_objective,
                    lower_rows,
                    first_stage_lower: (qv..qv + d_l).collect(),
                });
            }
        }
        ProblemInstance::Shipment(sp) => {
            let w = sp.d_w();
            let inv_n = 1.0 / n as f64;
            for sc in 0..n {
                let ship = &sp.ship_cost[sc];
                // vars per scenario: advance Z (w), last-minute T (w),
                // shipping S (w * d_l)
                let (zv, tv, sv) = (0, w, 2 * w);
                let mut upper_objective = Vec::new();
                let mut upper_rows = Vec::new();
                let mut links = Vec::new();
                let mut lower_objective = Vec::new();
                let mut lower_rows = Vec::new();
                for i in 0..w {
                    upper_objective.push((zv + i, inv_n * sp.advance_cost));
                    upper_objective.push((tv + i, inv_n * sp.lastminute_cost));
                    lower_objective.push((zv + i, sp.advance_cost));
                    lower_objective.push((tv + i, sp.lastminute_cost));
                    for j in 0..d_l {
                        upper_objective.push((sv + i * d_l + j, inv_n * ship.get(i, j)));
                        lower_objective.push((sv + i * d_l + j, ship.get(i, j)));
                    }
                    links.push((zv + i, zv + i));
                }
                for j in 0..d_l {
                    let y = train.responses().get(sc, j);
                    upper_rows.push(UpperRow {
                        upper_coeffs: (0..w).map(|i| (sv + i * d_l + j, 1.0)).collect(),
                        lower_coeffs: vec![],
                        rhs: y,
                    });
                    lower_rows.push(LowerRow {
                        coeffs: (0..w).map(|i| (sv + i * d_l + j, 1.0)).collect(),
                        rhs_const: 0.0,
                        rhs_beta: yhat_terms(sc, j),
                    });
                }
                for i in 0..w {
                    let mut cap: Vec<(usize, f64)> = vec![(zv + i, 1.0), (tv + i, 1.0)];
                    cap.extend((0..d_l).map(|j| (sv + i * d_l + j, -1.0)));
                    upper_rows.push(UpperRow {
                        upper_coeffs: cap.clone(),
                        lower_coeffs: vec![],
                        rhs: 0.0,
                    });
                    lower_rows.push(LowerRow {
                        coeffs: cap,
                        rhs_const: 0.0,
                        rhs_beta: vec![],
                    });
                }
                scenarios.push(ScenarioBlock {
                    n_upper: 2 * w + w * d_l,
                    n_lower: 2 * w + w * d_l,
                    upper_objective,
                    upper_rows,
                    links,
                    lower_objective,
                    lower_rows,
                    first_stage_lower: (zv..zv + w).collect(),
                });
            }
        }
    }
    Ok(BilevelModel {
        kind: inst.kind(),
        n_scenarios: n,
        d_l,
        d_x: train.d_x(),
        n_beta: d_l * p,
        beta_box,
        scenarios,
        features: train.features().clone(),
        responses: train.responses().clone(),
    })
}

/// Column layout of one scenario inside the reformulated model.
#[derive(Debug, Clone)]
pub struct ScenarioCols {
    pub upper: std::ops::Range<usize>,
    pub lower: std::ops::Range<usize>,
    pub duals: std::ops::Range<usize>,
    /// Absolute-loss deviation variables, one per response entry (if any).
    pub loss_abs: std::ops::Range<usize>,
    /// Squared-loss residual variables (if any).
    pub loss_resid: std::ops::Range<usize>,
    /// Epigraph variables of a squared-loss cap (if any).
    pub cap_epi: std::ops::Range<usize>,
}

/// How the generalization error is controlled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegMode {
    None,
    /// Objective becomes `lambda1 * F + (1 - lambda1) * loss`.
    Weighted { lambda1: f64 },
    /// Constrains the loss to at most `lambda2` times its minimum `l_star`
    /// (computed on demand when absent).
    LossCap { lambda2: f64, l_star: Option<f64> },
    /// Adds `lambda3 * sum beta^2` through piecewise-linear terms.
    Ridge { lambda3: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegConfig {
    pub mode: RegMode,
    pub loss: LossKind,
}

impl Default for RegConfig {
    fn default() -> Self {
        Self {
            mode: RegMode::None,
            loss: LossKind::AbsoluteError,
        }
    }
}

impl RegConfig {
    pub fn validate(&self) -> Result<()> {
        match self.mode {
            RegMode::None => Ok(()),
            RegMode::Weighted { lambda1 } => {
                if (0.0..=1.0).contains(&lambda1) {
                    Ok(())
                } else {
                    Err(Error::Validation(format!(
                        "lambda1 must lie in [0, 1], got {lambda1}"
                    )))
                }
            }
            RegMode::LossCap { lambda2, .. } => {
                if lambda2 >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Validation(format!(
                        "lambda2 must be >= 1 (capping below the minimal loss is infeasible), got {lambda2}"
                    )))
                }
            }
            RegMode::Ridge { lambda3 } => {
                if lambda3 >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::Validation(format!("lambda3 must be >= 0, got {lambda3}")))
                }
            }
        }
    }
}

/// The single-level mixed-integer reformulation plus the metadata needed to
/// complete candidates, extract solutions, and decompose by scenario.
#[derive(Debug, Clone)]
pub struct KktModel {
    pub milp: MixedIntegerModel,
    pub bilevel: BilevelModel,
    pub beta_cols: std::ops::Range<usize>,
    pub scn_cols: Vec<ScenarioCols>,
    /// Core rows of each scenario (upper, link, lower primal, lower dual).
    pub scn_rows: Vec<std::ops::Range<usize>>,
    /// Extra per-scenario rows added by regularization.
    pub scn_extra_rows: Vec<Vec<usize>>,
    /// Rows spanning scenarios (e.g. a loss cap); scenario decomposition is
    /// impossible while these exist.
    pub cross_rows: Vec<usize>,
    /// Squared-loss cap epigraph sampling, `(epigraph var, samples)` in
    /// scenario-major order; used to complete candidates.
    pub cap_terms: Vec<(usize, SeparablePWLTerm)>,
    pub reg: RegConfig,
    /// Documented worst-case overestimation of any squared-loss PWL piece.
    pub pwl_error_bound: Option<f64>,
}

/// Reformulates the bilevel model to a single level: upper rows and links
/// stay, lower primal rows move their beta terms to the left-hand side,
/// each lower variable gets a dual-feasibility row, and every lower
/// inequality (explicit rows and nonnegativity bounds alike) gets a
/// complementarity pair. No products of variables survive.
pub fn kkt_reformulate(bilevel: BilevelModel) -> Result<KktModel> {
    let mut lp = LinearProgram::new();
    let p = bilevel.d_x + 1;
    for j in 0..bilevel.d_l {
        for a in 0..p {
            let col = lp.add_var(bilevel.beta_box.lo.get(j, a), bilevel.beta_box.hi.get(j, a));
            debug_assert_eq!(col, beta_col(j, a, p));
        }
    }
    let beta_cols = 0..bilevel.n_beta;

    let mut milp = MixedIntegerModel::from_lp(lp);
    let mut scn_cols = Vec::with_capacity(bilevel.n_scenarios);
    let mut scn_rows = Vec::with_capacity(bilevel.n_scenarios);

    for block in &bilevel.scenarios {
        let row_start = milp.base.rows.len();
        let upper0 = milp.base.add_vars(block.n_upper, 0.0, f64::INFINITY);
        let lower0 = milp.base.add_vars(block.n_lower, 0.0, f64::INFINITY);
        let dual0 = milp.base.add_vars(block.lower_rows.len(), 0.0, f64::INFINITY);

        for &(v, c) in &block.upper_objective {
            milp.base.set_obj(upper0 + v, c);
        }
        for row in &block.upper_rows {
            let coeffs = row
                .upper_coeffs
                .iter()
                .map(|&(v, c)| (upper0 + v, c))
                .chain(row.lower_coeffs.iter().map(|&(v, c)| (lower0 + v, c)))
                .collect();
            milp.base.add_row(coeffs, RowSense::Ge, row.rhs);
        }
        for &(uvar, lvar) in &block.links {
            milp.base.add_row(
                vec![(upper0 + uvar, 1.0), (lower0 + lvar, -1.0)],
                RowSense::Eq,
                0.0,
            );
        }
        for (r, row) in block.lower_rows.iter().enumerate() {
            let mut coeffs: Vec<(usize, f64)> =
                row.coeffs.iter().map(|&(v, c)| (lower0 + v, c)).collect();
            for &(bcol, c) in &row.rhs_beta {
                coeffs.push((bcol, -c));
            }
            let idx = milp.base.add_row(coeffs, RowSense::Ge, row.rhs_const);
            milp.comp_pairs.push(lin_solver::ComplementarityPair {
                slack_ref: idx,
                dual_ref: dual0 + r,
            });
        }
        let mut f = vec![0.0; block.n_lower];
        for &(v, c) in &block.lower_objective {
            f[v] += c;
        }
        for v in 0..block.n_lower {
            let mut coeffs = Vec::new();
            for (r, row) in block.lower_rows.iter().enumerate() {
                for &(rv, c) in &row.coeffs {
                    if rv == v && c != 0.0 {
                        coeffs.push((dual0 + r, c));
                    }
                }
            }
            if coeffs.is_empty() {
                // A lower variable in no lower row: its reduced cost is its
                // own objective coefficient, so optimality fixes it to zero
                // whenever that cost is positive.
                if f[v] > 0.0 {
                    milp.base.bounds[lower0 + v] = (0.0, 0.0);
                }
                continue;
            }
            let idx = milp.base.add_row(coeffs, RowSense::Le, f[v]);
            milp.comp_pairs.push(lin_solver::ComplementarityPair {
                slack_ref: idx,
                dual_ref: lower0 + v,
            });
        }

        scn_cols.push(ScenarioCols {
            upper: upper0..upper0 + block.n_upper,
            lower: lower0..lower0 + block.n_lower,
            duals: dual0..dual0 + block.lower_rows.len(),
            loss_abs: 0..0,
            loss_resid: 0..0,
            cap_epi: 0..0,
        });
        scn_rows.push(row_start..milp.base.rows.len());
    }

    let n = bilevel.n_scenarios;
    let model = KktModel {
        milp,
        bilevel,
        beta_cols,
        scn_cols,
        scn_rows,
        scn_extra_rows: vec![Vec::new(); n],
        cross_rows: Vec::new(),
        cap_terms: Vec::new(),
        reg: RegConfig::default(),
        pwl_error_bound: None,
    };
    audit_scenario_separability(&model)?;
    Ok(model)
}

/// Scenario owning a column, if any (beta columns belong to none).
pub fn scenario_of_col(model: &KktModel, col: usize) -> Option<usize> {
    if model.beta_cols.contains(&col) {
        return None;
    }
    for (i, sc) in model.scn_cols.iter().enumerate() {
        if sc.upper.contains(&col)
            || sc.lower.contains(&col)
            || sc.duals.contains(&col)
            || sc.loss_abs.contains(&col)
            || sc.loss_resid.contains(&col)
            || sc.cap_epi.contains(&col)
        {
            return Some(i);
        }
    }
    None
}

/// Verifies that every row (outside declared cross rows) touches at most
/// one scenario's variables besides the shared coefficients. Linearity
/// itself holds by construction of the types; this audits the coupling
/// claim the decomposition relies on.
pub fn audit_scenario_separability(model: &KktModel) -> Result<()> {
    for (i, row) in model.milp.base.rows.iter().enumerate() {
        if model.cross_rows.contains(&i) {
            continue;
        }
        let mut seen: Option<usize> = None;
        for &(col, _) in &row.coeffs {
            if let Some(s) = scenario_of_col(model, col) {
                match seen {
                    None => seen = Some(s),
                    Some(prev) if prev == s => {}
                    Some(prev) => {
                        return Err(Error::Validation(format!(
                            "row {i} couples scenarios {prev} and {s}"
                        )))
                    }
                }
            }
        }
    }
    Ok(())
}

/// Least-absolute-deviations fit over the box by a single LP; returns the
/// coefficients and the mean absolute loss.
pub fn lad_fit(train: &Dataset, beta_box: &BetaBox) -> Result<(RegressionParams, f64)> {
    let n = train.n();
    let d_l = train.d_l();
    let p = train.d_x() + 1;
    let mut lp = LinearProgram::new();
    for j in 0..d_l {
        for a in 0..p {
            lp.add_var(beta_box.lo.get(j, a), beta_box.hi.get(j, a));
        }
    }
    let e0 = lp.add_vars(n * d_l, 0.0, f64::INFINITY);
    let scale = 1.0 / (n * d_l) as f64;
    for i in 0..n {
        let x = train.features().row(i);
        for j in 0..d_l {
            let e = e0 + i * d_l + j;
            lp.set_obj(e, scale);
            let y = train.responses().get(i, j);
            let mut up = vec![(e, 1.0), (beta_col(j, 0, p), 1.0)];
            let mut down = vec![(e, 1.0), (beta_col(j, 0, p), -1.0)];
            for (f, &xf) in x.iter().enumerate() {
                if xf != 0.0 {
                    up.push((beta_col(j, f + 1, p), xf));
                    down.push((beta_col(j, f + 1, p), -xf));
                }
            }
            lp.add_row(up, RowSense::Ge, y);
            lp.add_row(down, RowSense::Ge, -y);
        }
    }
    let sol = solve_lp_with(&lp, &Tolerances::default())?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Fit(format!("LAD fit ended {:?}", sol.status)));
    }
    let beta = Mat::from_fn(d_l, p, |j, a| sol.primal[beta_col(j, a, p)]);
    Ok((RegressionParams::new(beta)?, sol.objective))
}

/// Minimal achievable mean loss of the given kind over the box.
pub fn minimal_loss(train: &Dataset, beta_box: &BetaBox, kind: LossKind) -> Result<f64> {
    match kind {
        LossKind::AbsoluteError => Ok(lad_fit(train, beta_box)?.1),
        LossKind::SquaredError => {
            let fit = regression::ols_fit(train.features(), train.responses())?;
            if !beta_box.contains(&fit.beta, 1e-9) {
                return Err(Error::Validation(
                    "least-squares minimizer lies outside the beta box; widen it for a squared loss cap"
                        .into(),
                ));
            }
            regression::loss(&fit, train.features(), train.responses(), kind)
        }
    }
}

fn residual_bound(bilevel: &BilevelModel) -> f64 {
    let mut max_y = 0.0f64;
    for v in bilevel.responses.data() {
        max_y = max_y.max(v.abs());
    }
    let p = bilevel.d_x + 1;
    let mut max_yhat = 0.0f64;
    for sc in 0..bilevel.n_scenarios {
        let x = bilevel.features.row(sc);
        for j in 0..bilevel.d_l {
            let mut hi = 0.0;
            for a in 0..p {
                let xa = if a == 0 { 1.0 } else { x[a - 1] };
                let lo_b = bilevel.beta_box.lo.get(j, a);
                let hi_b = bilevel.beta_box.hi.get(j, a);
                hi += (lo_b * xa).abs().max((hi_b * xa).abs());
            }
            max_yhat = max_yhat.max(hi);
        }
    }
    max_y + max_yhat + 1.0
}

/// Applies the configured generalization-error control to the reformulated
/// model. Absolute loss is exact in the LP; squared loss is approximated by
/// convex piecewise-linear pieces whose worst-case overestimate is recorded
/// on the model.
pub fn apply_regularization(mut model: KktModel, reg: RegConfig, opts: &IppoOptions) -> Result<KktModel> {
    reg.validate()?;
    model.reg = reg;
    let n = model.bilevel.n_scenarios;
    let d_l = model.bilevel.d_l;
    let p = model.bilevel.d_x + 1;
    let mean_scale = 1.0 / (n * d_l) as f64;

    let (f_weight, loss_weight, cap_bound) = match reg.mode {
        RegMode::None => return Ok(model),
        RegMode::Weighted { lambda1 } => (lambda1, 1.0 - lambda1, None),
        RegMode::LossCap { lambda2, l_star } => {
            let l_star = l_star.ok_or_else(|| {
                Error::Validation("loss cap needs the minimal loss precomputed".into())
            })?;
            (1.0, 0.0, Some(lambda2 * l_star))
        }
        RegMode::Ridge { lambda3 } => {
            if lambda3 > 0.0 {
                let mut worst_span = 0.0f64;
                for col in model.beta_cols.clone() {
                    let (lo, hi) = model.milp.base.bounds[col];
                    model.milp.pwl_terms.push(lin_solver::sample_term(
                        col,
                        lo,
                        hi,
                        opts.ridge_segments,
                        |x| lambda3 * x * x,
                    ));
                    worst_span = worst_span.max((hi - lo) / opts.ridge_segments as f64);
                }
                let per_entry = lambda3 * (worst_span / 2.0) * (worst_span / 2.0);
                model.pwl_error_bound = Some(per_entry * model.beta_cols.len() as f64);
            }
            return Ok(model);
        }
    };

    if f_weight != 1.0 {
        for term in model.milp.base.objective.iter_mut() {
            term.1 *= f_weight;
        }
    }
    if loss_weight == 0.0 && cap_bound.is_none() {
        return Ok(model);
    }

    match reg.loss {
        LossKind::AbsoluteError => {
            let mut cap_row: Vec<(usize, f64)> = Vec::new();
            for sc in 0..n {
                let e0 = model.milp.base.add_vars(d_l, 0.0, f64::INFINITY);
                model.scn_cols[sc].loss_abs = e0..e0 + d_l;
                let x = model.bilevel.features.row(sc).to_vec();
                for j in 0..d_l {
                    let e = e0 + j;
                    if loss_weight > 0.0 {
                        model.milp.base.set_obj(e, loss_weight * mean_scale);
                    }
                    if cap_bound.is_some() {
                        cap_row.push((e, mean_scale));
                    }
                    let y = model.bilevel.responses.get(sc, j);
                    let mut up = vec![(e, 1.0), (beta_col(j, 0, p), 1.0)];
                    let mut down = vec![(e, 1.0), (beta_col(j, 0, p), -1.0)];
                    for (f, &xf) in x.iter().enumerate() {
                        if xf != 0.0 {
                            up.push((beta_col(j, f + 1, p), xf));
                            down.push((beta_col(j, f + 1, p), -xf));
                        }
                    }
                    let r1 = model.milp.base.add_row(up, RowSense::Ge, y);
                    let r2 = model.milp.base.add_row(down, RowSense::Ge, -y);
                    model.scn_extra_rows[sc].push(r1);
                    model.scn_extra_rows[sc].push(r2);
                }
            }
            if let Some(bound) = cap_bound {
                let idx = model.milp.base.add_row(cap_row, RowSense::Le, bound);
                model.cross_rows.push(idx);
            }
        }
        LossKind::SquaredError => {
            let bound_r = residual_bound(&model.bilevel);
            let seg = opts.loss_segments.max(2);
            let mut cap_row: Vec<(usize, f64)> = Vec::new();
            for sc in 0..n {
                let r0 = model.milp.base.add_vars(d_l, -bound_r, bound_r);
                model.scn_cols[sc].loss_resid = r0..r0 + d_l;
                let x = model.bilevel.features.row(sc).to_vec();
                let cap_start = model.milp.base.num_vars;
                for j in 0..d_l {
                    let r = r0 + j;
                    let y = model.bilevel.responses.get(sc, j);
                    let mut tie = vec![(r, 1.0), (beta_col(j, 0, p), 1.0)];
                    for (f, &xf) in x.iter().enumerate() {
                        if xf != 0.0 {
                            tie.push((beta_col(j, f + 1, p), xf));
                        }
                    }
                    let tie_idx = model.milp.base.add_row(tie, RowSense::Eq, y);
                    model.scn_extra_rows[sc].push(tie_idx);
                    if cap_bound.is_some() {
                        let t = model.milp.base.add_var(0.0, f64::INFINITY);
                        let term = lin_solver::sample_term(r, -bound_r, bound_r, seg, |v| v * v);
                        for k in 0..term.breakpoints.len() - 1 {
                            let (x0, x1) = (term.breakpoints[k], term.breakpoints[k + 1]);
                            let (f0, f1) = (term.values[k], term.values[k + 1]);
                            let slope = (f1 - f0) / (x1 - x0);
                            let cut = model.milp.base.add_row(
                                vec![(r, slope), (t, -1.0)],
                                RowSense::Le,
                                slope * x0 - f0,
                            );
                            model.scn_extra_rows[sc].push(cut);
                        }
                        model.cap_terms.push((t, term));
                        cap_row.push((t, mean_scale));
                    } else {
                        model.milp.pwl_terms.push(lin_solver::sample_term(
                            r,
                            -bound_r,
                            bound_r,
                            seg,
                            |v| loss_weight * mean_scale * v * v,
                        ));
                    }
                }
                if cap_bound.is_some() {
                    model.scn_cols[sc].cap_epi = cap_start..model.milp.base.num_vars;
                }
            }
            if let Some(bound) = cap_bound {
                let idx = model.milp.base.add_row(cap_row, RowSense::Le, bound);
                model.cross_rows.push(idx);
            }
            let span = 2.0 * bound_r / seg as f64;
            model.pwl_error_bound = Some((span / 2.0) * (span / 2.0));
        }
    }
    audit_scenario_separability(&model)?;
    Ok(model)
}

/// Solver options for the integrated model.
#[derive(Debug, Clone)]
pub struct IppoOptions {
    /// Coefficient box; the default derives one from the least-squares fit
    /// (10x componentwise magnitude, at least +-10).
    pub beta_box: Option<BetaBox>,
    pub gap_tol: f64,
    pub node_limit: usize,
    pub heuristic_period: usize,
    /// Segments per residual for the squared-loss approximation.
    pub loss_segments: usize,
    /// Segments per coefficient for the ridge terms.
    pub ridge_segments: usize,
    pub tol: Tolerances,
    /// Extra coefficient matrices whose completions seed the incumbent.
    pub extra_seed_betas: Vec<Mat>,
}

impl Default for IppoOptions {
    fn default() -> Self {
        Self {
            beta_box: None,
            gap_tol: 1e-6,
            node_limit: 20_000,
            heuristic_period: 8,
            loss_segments: 64,
            ridge_segments: 32,
            tol: Tolerances::default(),
            extra_seed_betas: Vec::new(),
        }
    }
}

/// Result of one integrated solve.
#[derive(Debug, Clone)]
pub struct IppoSolution {
    pub beta: RegressionParams,
    /// Per-scenario lower-level first-stage decisions.
    pub lower_decisions: Vec<Decision>,
    /// Per-scenario upper-level variable values (recourse included).
    pub upper_values: Vec<Vec<f64>>,
    /// Incumbent objective of the mixed-integer model (includes any
    /// regularization terms).
    pub train_objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub status: MilpStatus,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub reg: RegConfig,
    /// Mean loss of the returned coefficients on the train rows.
    pub loss_value: f64,
    pub pwl_error_bound: Option<f64>,
    /// Full incumbent assignment over the reformulated model's variables,
    /// for audits such as [`verify_lower_optimality`].
    pub assignment: Vec<f64>,
}

/// Default coefficient box per the conventions above.
pub fn default_beta_box(train: &Dataset) -> BetaBox {
    let reference = match regression::ols_fit(train.features(), train.responses()) {
        Ok(fit) => fit.beta,
        Err(_) => Mat::zeros(train.d_l(), train.d_x() + 1),
    };
    BetaBox::around(&reference, 10.0, 10.0)
}

/// Extracts the coefficient matrix from a full assignment.
pub fn beta_from_assignment(model: &KktModel, x: &[f64]) -> Mat {
    let p = model.bilevel.d_x + 1;
    Mat::from_fn(model.bilevel.d_l, p, |j, a| x[beta_col(j, a, p)])
}

/// Solves one scenario's lower LP at fixed coefficients; returns primal and
/// dual vectors (tiny negatives clamped to zero).
fn solve_lower(block: &ScenarioBlock, beta_flat: &[f64], tol: &Tolerances) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lp = LinearProgram::new();
    lp.add_vars(block.n_lower, 0.0, f64::INFINITY);
    for &(v, c) in &block.lower_objective {
        lp.set_obj(v, c);
    }
    for row in &block.lower_rows {
        let rhs = row.rhs_const
            + row
                .rhs_beta
                .iter()
                .map(|&(b, c)| c * beta_flat[b])
                .sum::<f64>();
        lp.add_row(row.coeffs.clone(), RowSense::Ge, rhs);
    }
    let sol = solve_lp_with(&lp, tol)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(lin_solver::SolverError::Numerical(format!(
            "lower level unexpectedly {:?}",
            sol.status
        ))));
    }
    let u = sol.primal.iter().map(|&v| v.max(0.0)).collect();
    let pi = sol.duals.iter().map(|&v| v.max(0.0)).collect();
    Ok((u, pi))
}

/// Optimal upper-level completion given the lower solution: linked
/// variables fixed, the rest minimize the upper objective.
fn solve_upper(block: &ScenarioBlock, lower: &[f64], tol: &Tolerances) -> Result<Vec<f64>> {
    let mut lp = LinearProgram::new();
    lp.add_vars(block.n_upper, 0.0, f64::INFINITY);
    for &(uvar, lvar) in &block.links {
        let v = lower[lvar].max(0.0);
        lp.bounds[uvar] = (v, v);
    }
    for &(v, c) in &block.upper_objective {
        lp.set_obj(v, c);
    }
    for row in &block.upper_rows {
        let shift: f64 = row.lower_coeffs.iter().map(|&(v, c)| c * lower[v]).sum();
        lp.add_row(row.upper_coeffs.clone(), RowSense::Ge, row.rhs - shift);
    }
    let sol = solve_lp_with(&lp, tol)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(lin_solver::SolverError::Numerical(format!(
            "upper completion unexpectedly {:?}",
            sol.status
        ))));
    }
    Ok(sol.primal)
}

/// Builds a full feasible assignment of the reformulated model from a
/// coefficient matrix: per scenario, the lower LP optimum (primal and dual)
/// plus the optimal upper completion, then any loss variables.
pub fn complete_candidate(model: &KktModel, beta: &Mat, tol: &Tolerances) -> Result<Vec<f64>> {
    let beta = model.bilevel.beta_box.clamp(beta);
    let p = model.bilevel.d_x + 1;
    let beta_flat: Vec<f64> = (0..model.bilevel.d_l)
        .flat_map(|j| (0..p).map(move |a| (j, a)))
        .map(|(j, a)| beta.get(j, a))
        .collect();
    let mut x = vec![0.0; model.milp.base.num_vars];
    x[..model.bilevel.n_beta].copy_from_slice(&beta_flat);

    let mut cap_idx = 0usize;
    for (sc, block) in model.bilevel.scenarios.iter().enumerate() {
        let (u, pi) = solve_lower(block, &beta_flat, tol)?;
        let uu = solve_upper(block, &u, tol)?;
        let cols = &model.scn_cols[sc];
        x[cols.upper.clone()].copy_from_slice(&uu);
        x[cols.lower.clone()].copy_from_slice(&u);
        x[cols.duals.clone()].copy_from_slice(&pi);
        for j in 0..model.bilevel.d_l {
            let yhat: f64 = (0..p)
                .map(|a| {
                    let xa = if a == 0 {
                        1.0
                    } else {
                        model.bilevel.features.get(sc, a - 1)
                    };
                    beta.get(j, a) * xa
                })
                .sum();
            let resid = model.bilevel.responses.get(sc, j) - yhat;
            if !cols.loss_abs.is_empty() {
                x[cols.loss_abs.start + j] = resid.abs();
            }
            if !cols.loss_resid.is_empty() {
                x[cols.loss_resid.start + j] = resid;
            }
            if !cols.cap_epi.is_empty() {
                let (t_col, term) = &model.cap_terms[cap_idx];
                x[*t_col] = term.value_at(resid);
                cap_idx += 1;
            }
        }
    }
    Ok(x)
}

/// Lower-level first-stage decisions induced by fixed coefficients.
pub fn lower_response(model: &KktModel, beta: &Mat, tol: &Tolerances) -> Result<Vec<Decision>> {
    let beta = model.bilevel.beta_box.clamp(beta);
    let p = model.bilevel.d_x + 1;
    let beta_flat: Vec<f64> = (0..model.bilevel.d_l)
        .flat_map(|j| (0..p).map(move |a| (j, a)))
        .map(|(j, a)| beta.get(j, a))
        .collect();
    let mut out = Vec::with_capacity(model.bilevel.n_scenarios);
    for block in &model.bilevel.scenarios {
        let (u, _) = solve_lower(block, &beta_flat, tol)?;
        out.push(Decision::new(
            block.first_stage_lower.iter().map(|&v| u[v]).collect(),
        )?);
    }
    Ok(out)
}

/// Objective of the reformulated model at the completion induced by fixed
/// coefficients (regularization terms included).
pub fn objective_at_beta(model: &KktModel, beta: &Mat, tol: &Tolerances) -> Result<f64> {
    let x = complete_candidate(model, beta, tol)?;
    Ok(model.milp.objective_value(&x))
}

/// Worst scenario gap between the returned lower-level values and a fresh
/// lower solve at the returned coefficients (the optimistic-bilevel
/// consistency check).
pub fn verify_lower_optimality(model: &KktModel, x: &[f64], tol: &Tolerances) -> Result<f64> {
    let beta = beta_from_assignment(model, x);
    let beta_flat: Vec<f64> = {
        let p = model.bilevel.d_x + 1;
        (0..model.bilevel.d_l)
            .flat_map(|j| (0..p).map(move |a| (j, a)))
            .map(|(j, a)| beta.get(j, a))
            .collect()
    };
    let mut worst = 0.0f64;
    for (sc, block) in model.bilevel.scenarios.iter().enumerate() {
        let (u_opt, _) = solve_lower(block, &beta_flat, tol)?;
        let opt_val: f64 = block.lower_objective.iter().map(|&(v, c)| c * u_opt[v]).sum();
        let cols = &model.scn_cols[sc];
        let ret_val: f64 = block
            .lower_objective
            .iter()
            .map(|&(v, c)| c * x[cols.lower.start + v])
            .sum();
        worst = worst.max((ret_val - opt_val).abs() / (1.0 + opt_val.abs()));
    }
    Ok(worst)
}

/// Solves the integrated model end to end: build, reformulate, regularize,
/// seed, branch-and-bound.
pub fn solve_ippo(
    train: &Dataset,
    inst: &ProblemInstance,
    reg: RegConfig,
    opts: &IppoOptions,
) -> Result<IppoSolution> {
    reg.validate()?;
    let beta_box = opts
        .beta_box
        .clone()
        .unwrap_or_else(|| default_beta_box(train));

    // Fill in the minimal loss for a cap if the caller did not.
    let reg = match reg.mode {
        RegMode::LossCap { lambda2, l_star: None } => RegConfig {
            mode: RegMode::LossCap {
                lambda2,
                l_star: Some(minimal_loss(train, &beta_box, reg.loss)?),
            },
            loss: reg.loss,
        },
        _ => reg,
    };

    let bilevel = build_bilevel(train, inst, beta_box.clone())?;
    let model = kkt_reformulate(bilevel)?;
    let model = apply_regularization(model, reg, opts)?;

    // Incumbent seeds: clamped least-squares, least-absolute-deviations
    // when a loss term is active, column means with zero slopes, and any
    // caller-provided extras.
    let mut seed_betas: Vec<Mat> = Vec::new();
    if let Ok(fit) = regression::ols_fit(train.features(), train.responses()) {
        seed_betas.push(beta_box.clamp(&fit.beta));
    }
    let loss_active = !matches!(reg.mode, RegMode::None | RegMode::Ridge { .. });
    if loss_active {
        if let Ok((lad, _)) = lad_fit(train, &beta_box) {
            seed_betas.push(lad.beta);
        }
    }
    let mut means = Mat::zeros(train.d_l(), train.d_x() + 1);
    for j in 0..train.d_l() {
        let m: f64 = (0..train.n()).map(|i| train.responses().get(i, j)).sum::<f64>()
            / train.n() as f64;
        means.set(j, 0, m);
    }
    seed_betas.push(beta_box.clamp(&means));
    seed_betas.extend(opts.extra_seed_betas.iter().map(|b| beta_box.clamp(b)));

    let mut milp_opts = MilpOptions {
        tol: opts.tol,
        gap_tol: opts.gap_tol,
        node_limit: opts.node_limit,
        heuristic_period: opts.heuristic_period,
        ..MilpOptions::default()
    };
    for b in &seed_betas {
        if let Ok(cand) = complete_candidate(&model, b, &opts.tol) {
            milp_opts.initial_incumbents.push(cand);
        }
    }

    let last_beta: RefCell<Option<Vec<f64>>> = RefCell::new(None);
    let heuristic = |x: &[f64]| -> Option<Vec<f64>> {
        let beta = beta_from_assignment(&model, x);
        let flat: Vec<f64> = beta.data().to_vec();
        {
            let mut last = last_beta.borrow_mut();
            if let Some(prev) = last.as_ref() {
                let close = prev
                    .iter()
                    .zip(&flat)
                    .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs()));
                if close {
                    return None;
                }
            }
            *last = Some(flat);
        }
        complete_candidate(&model, &beta, &opts.tol).ok()
    };

    let res = solve_milp_with_heuristic(&model.milp, &milp_opts, Some(&heuristic))?;
    match res.status {
        MilpStatus::Optimal | MilpStatus::NodeLimit => {}
        status => {
            return Err(Error::Solver(lin_solver::SolverError::Numerical(format!(
                "integrated solve ended {status:?} after {} nodes ({} LP iterations)",
                res.nodes, res.lp_iterations
            ))))
        }
    }

    let beta = RegressionParams::new(beta_from_assignment(&model, &res.primal))?;
    let mut lower_decisions = Vec::with_capacity(model.bilevel.n_scenarios);
    let mut upper_values = Vec::with_capacity(model.bilevel.n_scenarios);
    for (sc, block) in model.bilevel.scenarios.iter().enumerate() {
        let cols = &model.scn_cols[sc];
        lower_decisions.push(Decision::new(
            block
                .first_stage_lower
                .iter()
                .map(|&v| res.primal[cols.lower.start + v].max(0.0))
                .collect(),
        )?);
        upper_values.push(res.primal[cols.upper.clone()].to_vec());
    }
    let loss_value = regression::loss(&beta, train.features(), train.responses(), reg.loss)?;
    Ok(IppoSolution {
        beta,
        lower_decisions,
        upper_values,
        train_objective: res.objective,
        best_bound: res.best_bound,
        gap: res.gap,
        status: res.status,
        nodes: res.nodes,
        lp_iterations: res.lp_iterations,
        reg,
        loss_value,
        pwl_error_bound: model.pwl_error_bound,
        assignment: res.primal,
    })
}

/// Builds the reformulated (and regularized) model without solving, for
/// decomposition and diagnostics.
pub fn build_kkt_model(
    train: &Dataset,
    inst: &ProblemInstance,
    reg: RegConfig,
    opts: &IppoOptions,
) -> Result<KktModel> {
    let beta_box = opts
        .beta_box
        .clone()
        .unwrap_or_else(|| default_beta_box(train));
    let reg = match reg.mode {
        RegMode::LossCap { lambda2, l_star: None } => RegConfig {
            mode: RegMode::LossCap {
                lambda2,
                l_star: Some(minimal_loss(train, &beta_box, reg.loss)?),
            },
            loss: reg.loss,
        },
        _ => reg,
    };
    let bilevel = build_bilevel(train, inst, beta_box)?;
    let model = kkt_reformulate(bilevel)?;
    apply_regularization(model, reg, opts)
}
