//! Shared data model: feature/response datasets, the two prescriptive
//! problem instances (multi-product newsvendor and two-stage shipment), and
//! cost evaluation of decisions against realized demand.
//!
//! Everything here is immutable after construction and evaluation is pure,
//! so concurrent use is safe.

use lin_solver::{solve_lp, LinearProgram, RowSense, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Paired feature and response matrices with stable per-row ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    features: Mat,
    responses: Mat,
    ids: Vec<usize>,
}

impl Dataset {
    pub fn new(features: Mat, responses: Mat, ids: Vec<usize>) -> Result<Self> {
        if features.rows() != responses.rows() || features.rows() != ids.len() {
            return Err(Error::Shape(format!(
                "{} feature rows, {} response rows, {} ids",
                features.rows(),
                responses.rows(),
                ids.len()
            )));
        }
        if features.rows() == 0 || features.cols() == 0 || responses.cols() == 0 {
            return Err(Error::Validation("dataset must be non-empty".into()));
        }
        let mut seen = ids.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != ids.len() {
            return Err(Error::Validation("dataset ids must be unique".into()));
        }
        if !features.is_finite() || !responses.is_finite() {
            return Err(Error::Validation("dataset entries must be finite".into()));
        }
        Ok(Self {
            features,
            responses,
            ids,
        })
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn d_x(&self) -> usize {
        self.features.cols()
    }

    pub fn d_l(&self) -> usize {
        self.responses.cols()
    }

    pub fn features(&self) -> &Mat {
        &self.features
    }

    pub fn responses(&self) -> &Mat {
        &self.responses
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            responses: self.responses.select_rows(idx),
            ids: idx.iter().map(|&i| self.ids[i]).collect(),
        }
    }
}

/// Per-scenario newsvendor costs: order, backorder (shortage), holding
/// (surplus), each `n x d_l`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewsvendorInstance {
    pub order_cost: Mat,
    pub backorder_cost: Mat,
    pub holding_cost: Mat,
}

/// One scenario row of a [`NewsvendorInstance`].
#[derive(Debug, Clone, Copy)]
pub struct NewsvendorRow<'a> {
    pub order: &'a [f64],
    pub backorder: &'a [f64],
    pub holding: &'a [f64],
}

impl NewsvendorInstance {
    pub fn new(order_cost: Mat, backorder_cost: Mat, holding_cost: Mat) -> Result<Self> {
        let (n, d) = (order_cost.rows(), order_cost.cols());
        for (name, m) in [
            ("order", &order_cost),
            ("backorder", &backorder_cost),
            ("holding", &holding_cost),
        ] {
            if m.rows() != n || m.cols() != d {
                return Err(Error::Shape(format!("{name} cost matrix shape mismatch")));
            }
            if m.data().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "{name} costs must be finite and nonnegative"
                )));
            }
        }
        Ok(Self {
            order_cost,
            backorder_cost,
            holding_cost,
        })
    }

    pub fn n(&self) -> usize {
        self.order_cost.rows()
    }

    pub fn d_l(&self) -> usize {
        self.order_cost.cols()
    }

    pub fn row(&self, i: usize) -> NewsvendorRow<'_> {
        NewsvendorRow {
            order: self.order_cost.row(i),
            backorder: self.backorder_cost.row(i),
            holding: self.holding_cost.row(i),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            order_cost: self.order_cost.select_rows(idx),
            backorder_cost: self.backorder_cost.select_rows(idx),
            holding_cost: self.holding_cost.select_rows(idx),
        }
    }
}

/// Two-stage shipment data: advance/last-minute production prices and
/// per-scenario shipping cost matrices (`d_w x d_l` each).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShipmentInstance {
    pub advance_cost: f64,
    pub lastminute_cost: f64,
    pub ship_cost: Vec<Mat>,
}

impl ShipmentInstance {
    pub fn new(advance_cost: f64, lastminute_cost: f64, ship_cost: Vec<Mat>) -> Result<Self> {
        if !(advance_cost >= 0.0) || !(lastminute_cost > advance_cost) {
            return Err(Error::Validation(format!(
                "need 0 <= advance cost < last-minute cost, got {advance_cost} and {lastminute_cost}"
            )));
        }
        if ship_cost.is_empty() {
            return Err(Error::Validation("shipment instance needs scenarios".into()));
        }
        let (w, l) = (ship_cost[0].rows(), ship_cost[0].cols());
        for m in &ship_cost {
            if m.rows() != w || m.cols() != l {
                return Err(Error::Shape("ship cost matrices must share a shape".into()));
            }
            if m.data().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::Validation(
                    "ship costs must be finite and nonnegative".into(),
                ));
            }
        }
        Ok(Self {
            advance_cost,
            lastminute_cost,
            ship_cost,
        })
    }

    pub fn n(&self) -> usize {
        self.ship_cost.len()
    }

    pub fn d_w(&self) -> usize {
        self.ship_cost[0].rows()
    }

    pub fn d_l(&self) -> usize {
        self.ship_cost[0].cols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            advance_cost: self.advance_cost,
            lastminute_cost: self.lastminute_cost,
            ship_cost: idx.iter().map(|&i| self.ship_cost[i].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProblemKind {
    Newsvendor,
    Shipment,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProblemKind::Newsvendor => write!(f, "newsvendor"),
            ProblemKind::Shipment => write!(f, "shipment"),
        }
    }
}

/// Either problem's cost data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ProblemInstance {
    Newsvendor(NewsvendorInstance),
    Shipment(ShipmentInstance),
}

impl ProblemInstance {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemInstance::Newsvendor(_) => ProblemKind::Newsvendor,
            ProblemInstance::Shipment(_) => ProblemKind::Shipment,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ProblemInstance::Newsvendor(i) => i.n(),
            ProblemInstance::Shipment(i) => i.n(),
        }
    }

    /// First-stage decision dimension: products or warehouses.
    pub fn decision_dim(&self) -> usize {
        match self {
            ProblemInstance::Newsvendor(i) => i.d_l(),
            ProblemInstance::Shipment(i) => i.d_w(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        match self {
            ProblemInstance::Newsvendor(i) => ProblemInstance::Newsvendor(i.select_rows(idx)),
            ProblemInstance::Shipment(i) => ProblemInstance::Shipment(i.select_rows(idx)),
        }
    }
}

/// A nonnegative first-stage decision: order quantities per product, or
/// advance production per warehouse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision(pub Vec<f64>);

impl Decision {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Validation(
                "decision entries must be finite and nonnegative".into(),
            ));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-product-averaged newsvendor cost of ordering `q` against demand `y`:
/// `(1/d_l) sum_j [c_j q_j + b_j (y_j - q_j)+ + h_j (q_j - y_j)+]`.
/// Shortage and surplus are implied, never stored, so this needs no solver.
pub fn newsvendor_scenario_cost(q: &[f64], y: &[f64], costs: NewsvendorRow<'_>) -> Result<f64> {
    let d = q.len();
    if y.len() != d || costs.order.len() != d || costs.backorder.len() != d || costs.holding.len() != d
    {
        return Err(Error::Shape(format!(
            "newsvendor cost: q has {d} products, y has {}, costs have {}",
            y.len(),
            costs.order.len()
        )));
    }
    let mut total = 0.0;
    for j in 0..d {
        let shortage = (y[j] - q[j]).max(0.0);
        let surplus = (q[j] - y[j]).max(0.0);
        total += costs.order[j] * q[j] + costs.backorder[j] * shortage + costs.holding[j] * surplus;
    }
    Ok(total / d as f64)
}

/// Optimal second-stage shipment cost given advance stock `z`: last-minute
/// production plus shipping to cover demand `y`. Always feasible since
/// last-minute production is uncapacitated.
pub fn shipment_recourse_cost(z: &[f64], y: &[f64], ship: &Mat, lastminute: f64) -> Result<f64> {
    let w = z.len();
    let l = y.len();
    if ship.rows() != w || ship.cols() != l {
        return Err(Error::Shape(format!(
            "shipment cost: {w} warehouses, {l} locations, ship matrix {}x{}",
            ship.rows(),
            ship.cols()
        )));
    }
    let mut lp = LinearProgram::new();
    let t0 = lp.add_vars(w, 0.0, f64::INFINITY);
    let s0 = lp.add_vars(w * l, 0.0, f64::INFINITY);
    for i in 0..w {
        lp.set_obj(t0 + i, lastminute);
        for j in 0..l {
            lp.set_obj(s0 + i * l + j, ship.get(i, j));
        }
    }
    for j in 0..l {
        let coeffs = (0..w).map(|i| (s0 + i * l + j, 1.0)).collect();
        lp.add_row(coeffs, RowSense::Ge, y[j]);
    }
    for i in 0..w {
        let mut coeffs: Vec<(usize, f64)> = (0..l).map(|j| (s0 + i * l + j, 1.0)).collect();
        coeffs.push((t0 + i, -1.0));
        lp.add_row(coeffs, RowSense::Le, z[i]);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(lin_solver::SolverError::Numerical(format!(
            "shipment recourse unexpectedly {:?}",
            sol.status
        ))));
    }
    Ok(sol.objective)
}

/// Total shipment cost of advance production `z` against demand `y`:
/// advance production price plus the optimal recourse.
pub fn shipment_scenario_cost(
    z: &[f64],
    y: &[f64],
    ship: &Mat,
    advance: f64,
    lastminute: f64,
) -> Result<f64> {
    let recourse = shipment_recourse_cost(z, y, ship, lastminute)?;
    Ok(advance * z.iter().sum::<f64>() + recourse)
}

/// Cost of one decision against one scenario row of an instance.
pub fn scenario_cost(q: &[f64], data: &Dataset, inst: &ProblemInstance, row: usize) -> Result<f64> {
    let y = data.responses().row(row);
    match inst {
        ProblemInstance::Newsvendor(nv) => newsvendor_scenario_cost(q, y, nv.row(row)),
        ProblemInstance::Shipment(sp) => shipment_scenario_cost(
            q,
            y,
            &sp.ship_cost[row],
            sp.advance_cost,
            sp.lastminute_cost,
        ),
    }
}

/// Decisions to evaluate: one shared first-stage vector, or one per row.
#[derive(Debug, Clone, Copy)]
pub enum Decisions<'a> {
    Shared(&'a Decision),
    PerScenario(&'a [Decision]),
}

/// Mean scenario cost over all rows of `data`.
pub fn empirical_cost(decisions: Decisions<'_>, data: &Dataset, inst: &ProblemInstance) -> Result<f64> {
    let n = data.n();
    if inst.n() != n {
        return Err(Error::Shape(format!(
            "instance has {} rows, dataset has {n}",
            inst.n()
        )));
    }
    if let Decisions::PerScenario(list) = decisions {
        if list.len() != n {
            return Err(Error::Shape(format!(
                "{} decisions for {n} scenarios",
                list.len()
            )));
        }
    }
    let mut total = 0.0;
    for row in 0..n {
        let q = match decisions {
            Decisions::Shared(d) => d.as_slice(),
            Decisions::PerScenario(list) => list[row].as_slice(),
        };
        total += scenario_cost(q, data, inst, row)?;
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row<'a>(c: &'a [f64], b: &'a [f64], h: &'a [f64]) -> NewsvendorRow<'a> {
        NewsvendorRow {
            order: c,
            backorder: b,
            holding: h,
        }
    }

    #[test]
    fn newsvendor_cost_examples() {
        let (c, b, h) = (vec![1.0], vec![3.0], vec![2.0]);
        let r = row(&c, &b, &h);
        assert_eq!(newsvendor_scenario_cost(&[10.0], &[10.0], r).unwrap(), 10.0);
        assert_eq!(newsvendor_scenario_cost(&[5.0], &[10.0], r).unwrap(), 20.0);
        assert_eq!(newsvendor_scenario_cost(&[12.0], &[10.0], r).unwrap(), 16.0);
    }

    #[test]
    fn newsvendor_cost_shape_error() {
        let (c, b, h) = (vec![1.0], vec![3.0], vec![2.0]);
        assert!(newsvendor_scenario_cost(&[1.0, 2.0], &[1.0], row(&c, &b, &h)).is_err());
    }

    #[test]
    fn newsvendor_negative_demand_allowed() {
        let (c, b, h) = (vec![1.0], vec![3.0], vec![2.0]);
        // q = 0 against y = -4: surplus (0 - (-4))+ = 4 units held.
        let cost = newsvendor_scenario_cost(&[0.0], &[-4.0], row(&c, &b, &h)).unwrap();
        assert_eq!(cost, 8.0);
    }

    #[test]
    fn newsvendor_cost_convex_in_q() {
        let (c, b, h) = (vec![2.0, 1.0], vec![5.0, 4.0], vec![1.5, 0.5]);
        let y = [7.0, 3.0];
        let r = row(&c, &b, &h);
        for &(a0, a1) in &[(0.0, 10.0), (2.0, 8.0), (5.0, 5.0)] {
            let qa = [a0, a1];
            let qb = [a1, a0];
            let mid = [(a0 + a1) / 2.0, (a0 + a1) / 2.0];
            let fa = newsvendor_scenario_cost(&qa, &y, r).unwrap();
            let fb = newsvendor_scenario_cost(&qb, &y, r).unwrap();
            let fm = newsvendor_scenario_cost(&mid, &y, r).unwrap();
            assert!(fm <= 0.5 * fa + 0.5 * fb + 1e-12);
        }
    }

    #[test]
    fn shipment_cost_examples() {
        // Single warehouse, single location.
        let ship = Mat::from_rows(vec![vec![2.0]]).unwrap();
        let all_lastminute = shipment_scenario_cost(&[0.0], &[4.0], &ship, 5.0, 100.0).unwrap();
        assert!((all_lastminute - 408.0).abs() < 1e-7);
        let covered = shipment_scenario_cost(&[4.0], &[4.0], &ship, 5.0, 100.0).unwrap();
        assert!((covered - 28.0).abs() < 1e-7);
        // Two warehouses, one location: the cheap route has stock.
        let ship2 = Mat::from_rows(vec![vec![1.0], vec![50.0]]).unwrap();
        let routed = shipment_scenario_cost(&[3.0, 0.0], &[2.0], &ship2, 5.0, 100.0).unwrap();
        assert!((routed - 17.0).abs() < 1e-7);
    }

    #[test]
    fn shipment_recourse_monotone_in_stock() {
        let ship = Mat::from_rows(vec![vec![2.0, 7.0], vec![4.0, 1.0]]).unwrap();
        let y = [5.0, 3.0];
        let mut prev = f64::INFINITY;
        for step in 0..6 {
            let z = [step as f64, step as f64 * 0.5];
            let r = shipment_recourse_cost(&z, &y, &ship, 100.0).unwrap();
            assert!(r <= prev + 1e-7, "recourse increased when stock grew");
            prev = r;
        }
    }

    #[test]
    fn empirical_cost_mean_and_permutation_invariance() {
        let x = Mat::from_rows(vec![vec![0.0], vec![1.0]]).unwrap();
        let y = Mat::from_rows(vec![vec![10.0], vec![20.0]]).unwrap();
        let data = Dataset::new(x, y, vec![0, 1]).unwrap();
        let inst = ProblemInstance::Newsvendor(
            NewsvendorInstance::new(
                Mat::from_rows(vec![vec![1.0], vec![1.0]]).unwrap(),
                Mat::from_rows(vec![vec![3.0], vec![3.0]]).unwrap(),
                Mat::from_rows(vec![vec![2.0], vec![2.0]]).unwrap(),
            )
            .unwrap(),
        );
        let d = Decision::new(vec![10.0]).unwrap();
        // costs: row0 -> 10, row1 -> 10 + 3*10 = 40, mean 25
        let mean = empirical_cost(Decisions::Shared(&d), &data, &inst).unwrap();
        assert!((mean - 25.0).abs() < 1e-12);

        let perm = [1usize, 0];
        let mean_perm = empirical_cost(
            Decisions::Shared(&d),
            &data.select_rows(&perm),
            &inst.select_rows(&perm),
        )
        .unwrap();
        assert!((mean - mean_perm).abs() < 1e-12);
    }

    #[test]
    fn per_scenario_length_checked() {
        let x = Mat::from_rows(vec![vec![0.0], vec![1.0]]).unwrap();
        let y = Mat::from_rows(vec![vec![10.0], vec![20.0]]).unwrap();
        let data = Dataset::new(x, y, vec![0, 1]).unwrap();
        let inst = ProblemInstance::Newsvendor(
            NewsvendorInstance::new(
                Mat::from_rows(vec![vec![1.0], vec![1.0]]).unwrap(),
                Mat::from_rows(vec![vec![3.0], vec![3.0]]).unwrap(),
                Mat::from_rows(vec![vec![2.0], vec![2.0]]).unwrap(),
            )
            .unwrap(),
        );
        let one = vec![Decision::new(vec![1.0]).unwrap()];
        assert!(empirical_cost(Decisions::PerScenario(&one), &data, &inst).is_err());
    }
}
