//! Oracle checks of the integrated model: closed-form and grid references
//! for tiny newsvendor instances, the regularization endpoints, the
//! reduction to the extensive form, and the dominance inequalities.

use ippo_core::ippo::{
    build_bilevel, build_kkt_model, lad_fit, lower_response, objective_at_beta, solve_ippo,
    verify_lower_optimality, BetaBox, IppoOptions, RegConfig, RegMode,
};
use ippo_core::linalg::Mat;
use ippo_core::prescriptors;
use ippo_core::regression::{self, LossKind};
use ippo_core::scenario::{Dataset, NewsvendorInstance, ProblemInstance, ShipmentInstance};
use lin_solver::{MilpStatus, Rng, Tolerances};

fn mat(rows: Vec<Vec<f64>>) -> Mat {
    Mat::from_rows(rows).unwrap()
}

fn nv_instance(c: Vec<Vec<f64>>, b: Vec<Vec<f64>>, h: Vec<Vec<f64>>) -> ProblemInstance {
    ProblemInstance::Newsvendor(NewsvendorInstance::new(mat(c), mat(b), mat(h)).unwrap())
}

fn uniform_nv(n: usize, d: usize, c: f64, b: f64, h: f64) -> ProblemInstance {
    ProblemInstance::Newsvendor(
        NewsvendorInstance::new(
            Mat::from_fn(n, d, |_, _| c),
            Mat::from_fn(n, d, |_, _| b),
            Mat::from_fn(n, d, |_, _| h),
        )
        .unwrap(),
    )
}

fn wide_box(d_l: usize, p: usize, half: f64) -> BetaBox {
    BetaBox {
        lo: Mat::from_fn(d_l, p, |_, _| -half),
        hi: Mat::from_fn(d_l, p, |_, _| half),
    }
}

/// Train objective of a coefficient pair under the closed-form newsvendor
/// response `q = max(yhat, 0) * [b > c]` (single product, single feature).
fn grid_objective(data: &Dataset, inst: &ProblemInstance, b0: f64, b1: f64) -> f64 {
    let ProblemInstance::Newsvendor(nv) = inst else { panic!() };
    let n = data.n();
    let mut total = 0.0;
    for sc in 0..n {
        let x = data.features().get(sc, 0);
        let y = data.responses().get(sc, 0);
        let (c, b, h) = (
            nv.order_cost.get(sc, 0),
            nv.backorder_cost.get(sc, 0),
            nv.holding_cost.get(sc, 0),
        );
        let yhat = b0 + b1 * x;
        let q = if b > c { yhat.max(0.0) } else { 0.0 };
        total += c * q + b * (y - q).max(0.0) + h * (q - y).max(0.0);
    }
    total / n as f64
}

fn grid_search(
    data: &Dataset,
    inst: &ProblemInstance,
    lo: f64,
    hi: f64,
    step: f64,
) -> (f64, f64, f64) {
    let steps = ((hi - lo) / step).round() as usize;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i0 in 0..=steps {
        let b0 = lo + step * i0 as f64;
        for i1 in 0..=steps {
            let b1 = lo + step * i1 as f64;
            let v = grid_objective(data, inst, b0, b1);
            if v < best.0 {
                best = (v, b0, b1);
            }
        }
    }
    best
}

#[test]
fn bilevel_row_counts_newsvendor() {
    let data = Dataset::new(mat(vec![vec![0.5]]), mat(vec![vec![10.0]]), vec![0]).unwrap();
    let inst = uniform_nv(1, 1, 1.0, 3.0, 2.0);
    let box_ = wide_box(1, 2, 20.0);
    let m = build_bilevel(&data, &inst, box_).unwrap();
    assert_eq!(m.scenarios.len(), 1);
    assert_eq!(m.scenarios[0].lower_rows.len(), 2);
    assert_eq!(m.scenarios[0].upper_rows.len(), 2);
    assert_eq!(m.scenarios[0].links.len(), 1);
}

#[test]
fn bilevel_row_counts_shipment() {
    let (d_w, d_l, n) = (2usize, 3usize, 2usize);
    let x = Mat::from_fn(n, 1, |i, _| i as f64);
    let y = Mat::from_fn(n, d_l, |i, j| 1.0 + i as f64 + j as f64);
    let data = Dataset::new(x, y, vec![0, 1]).unwrap();
    let ship = (0..n).map(|_| Mat::from_fn(d_w, d_l, |i, j| 1.0 + (i + j) as f64)).collect();
    let inst = ProblemInstance::Shipment(ShipmentInstance::new(5.0, 100.0, ship).unwrap());
    let m = build_bilevel(&data, &inst, wide_box(d_l, 2, 50.0)).unwrap();
    let total_lower: usize = m.scenarios.iter().map(|s| s.lower_rows.len()).sum();
    assert_eq!(total_lower, n * (d_l + d_w));
}

#[test]
fn fixed_beta_lower_response_matches_direct_solves() {
    let data = Dataset::new(
        mat(vec![vec![0.2], vec![1.4], vec![-0.7]]),
        mat(vec![vec![6.0], vec![11.0], vec![2.0]]),
        vec![0, 1, 2],
    )
    .unwrap();
    let inst = nv_instance(
        vec![vec![1.0], vec![2.0], vec![0.5]],
        vec![vec![4.0], vec![7.0], vec![3.0]],
        vec![vec![1.5], vec![0.5], vec![1.0]],
    );
    let model = build_kkt_model(&data, &inst, RegConfig::default(), &IppoOptions::default()).unwrap();
    let beta = mat(vec![vec![5.0, 2.0]]);
    let tol = Tolerances::default();
    let got = lower_response(&model, &beta, &tol).unwrap();
    // Direct: the closed-form response per scenario.
    let params = regression::RegressionParams::new(beta).unwrap();
    for sc in 0..3 {
        let yhat = regression::predict(&params, data.features().row(sc)).unwrap();
        let direct =
            prescriptors::deterministic_response(&yhat, &inst, sc).unwrap();
        for (a, b) in got[sc].as_slice().iter().zip(direct.as_slice()) {
            assert!((a - b).abs() < 1e-7, "scenario {sc}: {a} vs {b}");
        }
    }
}

#[test]
fn intercept_only_single_scenario_orders_demand() {
    // One scenario, one product, b > c: the optimal intercept equals the
    // demand and the objective is the pure order cost.
    let data = Dataset::new(mat(vec![vec![0.0]]), mat(vec![vec![10.0]]), vec![0]).unwrap();
    let inst = uniform_nv(1, 1, 1.0, 3.0, 2.0);
    let opts = IppoOptions {
        beta_box: Some(wide_box(1, 2, 20.0).with_zero_slopes()),
        ..IppoOptions::default()
    };
    let sol = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
    assert_eq!(sol.status, MilpStatus::Optimal);
    assert!((sol.train_objective - 10.0).abs() < 1e-6, "obj {}", sol.train_objective);
    assert!((sol.beta.beta.get(0, 0) - 10.0).abs() < 1e-5);
    assert!((sol.lower_decisions[0].as_slice()[0] - 10.0).abs() < 1e-6);
}

#[test]
fn intercept_only_order_dominated_case() {
    // b < c: ordering never pays, any prediction yields q = 0 and the
    // backorder bill b*y.
    let data = Dataset::new(mat(vec![vec![0.0]]), mat(vec![vec![10.0]]), vec![0]).unwrap();
    let inst = uniform_nv(1, 1, 5.0, 2.0, 1.0);
    let opts = IppoOptions {
        beta_box: Some(wide_box(1, 2, 20.0).with_zero_slopes()),
        ..IppoOptions::default()
    };
    let sol = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
    assert_eq!(sol.status, MilpStatus::Optimal);
    assert!((sol.train_objective - 20.0).abs() < 1e-6);
    assert!(sol.lower_decisions[0].as_slice()[0].abs() < 1e-7);
}

#[test]
fn two_scenario_grid_oracle() {
    let mut rng = Rng::new(424242);
    for case in 0..3 {
        let n = 2 + case;
        let mut xr = Vec::new();
        let mut yr = Vec::new();
        let mut cr = Vec::new();
        let mut br = Vec::new();
        let mut hr = Vec::new();
        for _ in 0..n {
            let x = rng.range(-1.0, 1.0);
            xr.push(vec![x]);
            yr.push(vec![1.0 + 3.0 * x + rng.range(-1.0, 1.0)]);
            let c = rng.range(0.25, 1.0);
            let b = loop {
                let b = rng.range(0.05, 5.0);
                if (b - c).abs() > 0.1 {
                    break b;
                }
            };
            cr.push(vec![c]);
            br.push(vec![b]);
            hr.push(vec![rng.range(0.25, 1.0)]);
        }
        let data = Dataset::new(mat(xr), mat(yr), (0..n).collect()).unwrap();
        let inst = nv_instance(cr, br, hr);
        let opts = IppoOptions {
            beta_box: Some(wide_box(1, 2, 20.0)),
            ..IppoOptions::default()
        };
        let sol = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
        assert_eq!(sol.status, MilpStatus::Optimal, "case {case}");
        let (grid_best, gb0, gb1) = grid_search(&data, &inst, -20.0, 20.0, 0.02);
        assert!(
            (sol.train_objective - grid_best).abs() <= 0.1,
            "case {case}: milp {} vs grid {} at ({gb0}, {gb1})",
            sol.train_objective,
            grid_best
        );
        // The exact optimum can only improve on the grid.
        assert!(sol.train_objective <= grid_best + 1e-9);
    }
}

#[test]
fn lambda1_endpoints() {
    let data = Dataset::new(
        mat(vec![vec![0.1], vec![0.9], vec![-0.4], vec![0.5]]),
        mat(vec![vec![5.0], vec![9.1], vec![2.7], vec![7.2]]),
        vec![0, 1, 2, 3],
    )
    .unwrap();
    let inst = nv_instance(
        vec![vec![1.0], vec![0.7], vec![1.2], vec![0.8]],
        vec![vec![4.0], vec![3.1], vec![5.0], vec![2.9]],
        vec![vec![0.6], vec![1.1], vec![0.4], vec![0.9]],
    );
    let opts = IppoOptions {
        beta_box: Some(wide_box(1, 2, 25.0)),
        ..IppoOptions::default()
    };
    let plain = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
    let w1 = solve_ippo(
        &data,
        &inst,
        RegConfig {
            mode: RegMode::Weighted { lambda1: 1.0 },
            loss: LossKind::AbsoluteError,
        },
        &opts,
    )
    .unwrap();
    assert!(
        (plain.train_objective - w1.train_objective).abs() <= 1e-9,
        "lambda1=1 must match the unregularized model: {} vs {}",
        plain.train_objective,
        w1.train_objective
    );

    let w0 = solve_ippo(
        &data,
        &inst,
        RegConfig {
            mode: RegMode::Weighted { lambda1: 0.0 },
            loss: LossKind::AbsoluteError,
        },
        &opts,
    )
    .unwrap();
    let (_, l_star) = lad_fit(&data, opts.beta_box.as_ref().unwrap()).unwrap();
    assert!(
        (w0.train_objective - l_star).abs() <= 1e-6,
        "lambda1=0 objective {} vs LAD loss {}",
        w0.train_objective,
        l_star
    );
    assert!((w0.loss_value - l_star).abs() <= 1e-6);

    let ridge0 = solve_ippo(
        &data,
        &inst,
        RegConfig {
            mode: RegMode::Ridge { lambda3: 0.0 },
            loss: LossKind::AbsoluteError,
        },
        &opts,
    )
    .unwrap();
    assert!((ridge0.train_objective - w1.train_objective).abs() <= 1e-9);
}

#[test]
fn loss_cap_at_one_pins_loss_to_minimum() {
    let data = Dataset::new(
        mat(vec![vec![0.3], vec![1.2], vec![-0.8]]),
        mat(vec![vec![6.1], vec![9.4], vec![1.9]]),
        vec![0, 1, 2],
    )
    .unwrap();
    let inst = uniform_nv(3, 1, 1.0, 4.0, 1.0);
    let opts = IppoOptions {
        beta_box: Some(wide_box(1, 2, 25.0)),
        ..IppoOptions::default()
    };
    let sol = solve_ippo(
        &data,
        &inst,
        RegConfig {
            mode: RegMode::LossCap { lambda2: 1.0, l_star: None },
            loss: LossKind::AbsoluteError,
        },
        &opts,
    )
    .unwrap();
    let (_, l_star) = lad_fit(&data, opts.beta_box.as_ref().unwrap()).unwrap();
    assert!(
        (sol.loss_value - l_star).abs() <= 1e-6,
        "capped loss {} vs minimum {}",
        sol.loss_value,
        l_star
    );
}

#[test]
fn loss_cap_objective_nonincreasing_in_lambda2() {
    let data = Dataset::new(
        mat(vec![vec![0.5], vec![-0.2], vec![1.1], vec![0.8]]),
        mat(vec![vec![7.0], vec![3.5], vec![10.2], vec![8.9]]),
        vec![0, 1, 2, 3],
    )
    .unwrap();
    let inst = uniform_nv(4, 1, 1.0, 4.0, 1.5);
    let opts = IppoOptions {
        beta_box: Some(wide_box(1, 2, 25.0)),
        ..IppoOptions::default()
    };
    let mut prev = f64::INFINITY;
    for lambda2 in [1.0, 1.2, 1.5, 2.0, 4.0] {
        let sol = solve_ippo(
            &data,
            &inst,
            RegConfig {
                mode: RegMode::LossCap { lambda2, l_star: None },
                loss: LossKind::AbsoluteError,
            },
            &opts,
        )
        .unwrap();
        assert!(
            sol.train_objective <= prev + 1e-7,
            "objective rose from {prev} to {} at lambda2 {lambda2}",
            sol.train_objective
        );
        prev = sol.train_objective;
    }
}

#[test]
fn lambda2_below_one_rejected() {
    let data = Dataset::new(mat(vec![vec![0.0]]), mat(vec![vec![1.0]]), vec![0]).unwrap();
    let inst = uniform_nv(1, 1, 1.0, 2.0, 1.0);
    let res = solve_ippo(
        &data,
        &inst,
        RegConfig {
            mode: RegMode::LossCap { lambda2: 0.9, l_star: None },
            loss: LossKind::AbsoluteError,
        },
        &IppoOptions::default(),
    );
    assert!(res.is_err());
}

#[test]
fn noiseless_data_reaches_perfect_foresight() {
    // Exact linear demand and uniform b > c: predicting the truth is
    // feasible, so the integrated optimum matches foresight.
    let x = mat(vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
    let y = mat(vec![vec![4.0], vec![6.0], vec![8.0], vec![10.0]]);
    let data = Dataset::new(x, y, vec![0, 1, 2, 3]).unwrap();
    let inst = uniform_nv(4, 1, 1.0, 3.0, 2.0);
    let sol = solve_ippo(&data, &inst, RegConfig::default(), &IppoOptions::default()).unwrap();
    let pf = prescriptors::perfect_foresight(&data, &inst).unwrap();
    assert!(
        (sol.train_objective - pf.mean_cost).abs() <= 1e-6,
        "integrated {} vs foresight {}",
        sol.train_objective,
        pf.mean_cost
    );
}

#[test]
fn zero_information_reduces_to_extensive_form() {
    // Slopes boxed to zero and scenario-independent costs: the integrated
    // model is the two-stage extensive form.
    let x = mat(vec![vec![0.4], vec![-1.1], vec![0.9], vec![0.2]]);
    let y = mat(vec![vec![3.0], vec![8.5], vec![5.2], vec![6.8]]);
    let data = Dataset::new(x, y, vec![0, 1, 2, 3]).unwrap();
    let inst = uniform_nv(4, 1, 2.0, 9.0, 1.5);
    let opts = IppoOptions {
        beta_box: Some(wide_box(1, 2, 30.0).with_zero_slopes()),
        ..IppoOptions::default()
    };
    let sol = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
    let (_, saa_obj) = prescriptors::saa_decision(&data, &inst).unwrap();
    assert!(
        (sol.train_objective - saa_obj).abs() <= 1e-6,
        "integrated {} vs extensive {}",
        sol.train_objective,
        saa_obj
    );
}

#[test]
fn incumbent_never_worse_than_any_supplied_beta() {
    let mut rng = Rng::new(99);
    let x = mat(vec![vec![0.2], vec![1.0], vec![-0.5], vec![0.7], vec![1.4]]);
    let y = mat(vec![vec![5.1], vec![8.2], vec![2.4], vec![6.6], vec![9.9]]);
    let data = Dataset::new(x, y, vec![0, 1, 2, 3, 4]).unwrap();
    let inst = nv_instance(
        vec![vec![0.9], vec![1.4], vec![0.6], vec![1.1], vec![0.8]],
        vec![vec![3.8], vec![2.9], vec![4.4], vec![3.2], vec![5.0]],
        vec![vec![0.7], vec![1.0], vec![0.5], vec![0.8], vec![0.6]],
    );
    let opts = IppoOptions {
        beta_box: Some(wide_box(1, 2, 25.0)),
        ..IppoOptions::default()
    };
    let sol = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
    let model = build_kkt_model(&data, &inst, RegConfig::default(), &opts).unwrap();
    let tol = Tolerances::default();

    let ols = regression::ols_fit(data.features(), data.responses()).unwrap();
    let ols_obj = objective_at_beta(&model, &ols.beta, &tol).unwrap();
    assert!(sol.train_objective <= ols_obj + 1e-9);

    for _ in 0..10 {
        let beta = mat(vec![vec![rng.range(-20.0, 20.0), rng.range(-20.0, 20.0)]]);
        let obj = objective_at_beta(&model, &beta, &tol).unwrap();
        assert!(
            sol.train_objective <= obj + 1e-9,
            "incumbent {} beaten by sampled beta ({obj})",
            sol.train_objective
        );
    }
}

#[test]
fn returned_lower_level_is_optimal_for_returned_beta() {
    let x = mat(vec![vec![0.3], vec![1.2], vec![-0.6], vec![0.9]]);
    let y = mat(vec![vec![4.4], vec![8.1], vec![1.5], vec![6.3]]);
    let data = Dataset::new(x, y, vec![0, 1, 2, 3]).unwrap();
    let inst = nv_instance(
        vec![vec![1.0], vec![0.8], vec![1.3], vec![0.9]],
        vec![vec![3.5], vec![4.2], vec![2.8], vec![3.9]],
        vec![vec![0.9], vec![0.6], vec![1.1], vec![0.7]],
    );
    let opts = IppoOptions {
        beta_box: Some(wide_box(1, 2, 25.0)),
        ..IppoOptions::default()
    };
    let sol = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
    let model = build_kkt_model(&data, &inst, RegConfig::default(), &opts).unwrap();
    let worst = verify_lower_optimality(&model, &sol.assignment, &Tolerances::default()).unwrap();
    assert!(worst <= 1e-6, "lower-level optimality residual {worst}");
}

#[test]
fn shipment_integrated_beats_point_estimate_on_train() {
    let x = mat(vec![vec![0.0], vec![1.0], vec![2.0]]);
    let y = mat(vec![vec![2.0, 3.0], vec![4.0, 5.5], vec![6.0, 8.0]]);
    let data = Dataset::new(x, y, vec![0, 1, 2]).unwrap();
    let ship = (0..3)
        .map(|sc| Mat::from_fn(2, 2, |i, j| 1.0 + ((sc + i + 2 * j) % 4) as f64))
        .collect();
    let inst = ProblemInstance::Shipment(ShipmentInstance::new(2.0, 30.0, ship).unwrap());
    let opts = IppoOptions {
        beta_box: Some(wide_box(2, 2, 30.0)),
        node_limit: 4000,
        ..IppoOptions::default()
    };
    let sol = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
    let model = build_kkt_model(&data, &inst, RegConfig::default(), &opts).unwrap();
    let ols = regression::ols_fit(data.features(), data.responses()).unwrap();
    let ols_obj = objective_at_beta(&model, &ols.beta, &Tolerances::default()).unwrap();
    assert!(sol.train_objective <= ols_obj + 1e-9);
    let worst = verify_lower_optimality(&model, &sol.assignment, &Tolerances::default()).unwrap();
    assert!(worst <= 1e-6);
}
