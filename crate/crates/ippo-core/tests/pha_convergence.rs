//! Progressive hedging: duplication structure, the stopping rule, dual
//! weight conservation, and convergence on convex (pair-fixed) instances.

use ippo_core::ippo::{
    build_kkt_model, solve_ippo, BetaBox, IppoOptions, RegConfig, RegMode,
};
use ippo_core::linalg::Mat;
use ippo_core::pha::{
    apply_pair_pattern, duplicate_first_stage, pair_pattern_from, pha_solve, PHAConfig,
    PhaSolverOptions,
};
use ippo_core::regression::LossKind;
use ippo_core::scenario::{Dataset, NewsvendorInstance, ProblemInstance};
use lin_solver::{solve_milp, MilpOptions, MilpStatus};

fn mat(rows: Vec<Vec<f64>>) -> Mat {
    Mat::from_rows(rows).unwrap()
}

fn uniform_nv(n: usize, c: f64, b: f64, h: f64) -> ProblemInstance {
    ProblemInstance::Newsvendor(
        NewsvendorInstance::new(
            Mat::from_fn(n, 1, |_, _| c),
            Mat::from_fn(n, 1, |_, _| b),
            Mat::from_fn(n, 1, |_, _| h),
        )
        .unwrap(),
    )
}

fn wide_box(half: f64) -> BetaBox {
    BetaBox {
        lo: Mat::from_fn(1, 2, |_, _| -half),
        hi: Mat::from_fn(1, 2, |_, _| half),
    }
}

fn three_scenario_model() -> (Dataset, ProblemInstance) {
    let x = mat(vec![vec![0.0], vec![1.0], vec![2.0]]);
    let y = mat(vec![vec![4.0], vec![6.5], vec![8.2]]);
    let data = Dataset::new(x, y, vec![0, 1, 2]).unwrap();
    let inst = uniform_nv(3, 1.0, 4.0, 1.0);
    (data, inst)
}

#[test]
fn single_scenario_duplication_is_the_original() {
    let data = Dataset::new(mat(vec![vec![0.0]]), mat(vec![vec![5.0]]), vec![0]).unwrap();
    let inst = uniform_nv(1, 1.0, 3.0, 1.0);
    let opts = IppoOptions {
        beta_box: Some(wide_box(20.0)),
        ..IppoOptions::default()
    };
    let model = build_kkt_model(&data, &inst, RegConfig::default(), &opts).unwrap();
    let subs = duplicate_first_stage(&model).unwrap();
    assert_eq!(subs.len(), 1);
    assert_eq!(subs[0].milp.base.num_vars, model.milp.base.num_vars);
    assert_eq!(subs[0].milp.base.rows.len(), model.milp.base.rows.len());
    assert_eq!(subs[0].milp.comp_pairs.len(), model.milp.comp_pairs.len());
}

#[test]
fn duplication_counts_on_three_scenarios() {
    let (data, inst) = three_scenario_model();
    let opts = IppoOptions {
        beta_box: Some(wide_box(25.0)),
        ..IppoOptions::default()
    };
    let model = build_kkt_model(&data, &inst, RegConfig::default(), &opts).unwrap();
    let subs = duplicate_first_stage(&model).unwrap();
    assert_eq!(subs.len(), 3);
    let n_beta = model.bilevel.n_beta;
    let shared_rows = model.milp.base.rows.len();
    let shared_pairs = model.milp.comp_pairs.len();
    for sub in &subs {
        // Each subproblem: one scenario's variables plus a full copy of the
        // coefficients, one third of the rows and pairs.
        assert_eq!(
            sub.milp.base.num_vars,
            (model.milp.base.num_vars - n_beta) / 3 + n_beta
        );
        assert_eq!(sub.milp.base.rows.len(), shared_rows / 3);
        assert_eq!(sub.milp.comp_pairs.len(), shared_pairs / 3);
        assert_eq!(sub.beta_local.len(), n_beta);
    }
}

#[test]
fn loss_cap_cannot_be_decomposed() {
    let (data, inst) = three_scenario_model();
    let opts = IppoOptions {
        beta_box: Some(wide_box(25.0)),
        ..IppoOptions::default()
    };
    let reg = RegConfig {
        mode: RegMode::LossCap { lambda2: 1.5, l_star: None },
        loss: LossKind::AbsoluteError,
    };
    let model = build_kkt_model(&data, &inst, reg, &opts).unwrap();
    assert!(duplicate_first_stage(&model).is_err());
}

#[test]
fn identical_scenarios_converge_at_round_one() {
    let x = mat(vec![vec![0.5], vec![0.5], vec![0.5]]);
    let y = mat(vec![vec![6.0], vec![6.0], vec![6.0]]);
    let data = Dataset::new(x, y, vec![0, 1, 2]).unwrap();
    let inst = uniform_nv(3, 1.0, 4.0, 1.0);
    let opts = IppoOptions {
        beta_box: Some(wide_box(20.0)),
        ..IppoOptions::default()
    };
    let model = build_kkt_model(&data, &inst, RegConfig::default(), &opts).unwrap();
    let cfg = PHAConfig {
        delta: 1e-6,
        ..PHAConfig::default()
    };
    let res = pha_solve(&model, &cfg, &PhaSolverOptions::default()).unwrap();
    assert!(res.converged);
    assert_eq!(res.iterations, 1, "identical scenarios must agree immediately");
    assert!(res.state.w.iter().flatten().all(|&w| w.abs() < 1e-9));
    assert!(res.state.max_deviation() < 1e-9);
}

#[test]
fn huge_delta_stops_after_initialization() {
    let (data, inst) = three_scenario_model();
    let opts = IppoOptions {
        beta_box: Some(wide_box(25.0)),
        ..IppoOptions::default()
    };
    let model = build_kkt_model(&data, &inst, RegConfig::default(), &opts).unwrap();
    let cfg = PHAConfig {
        delta: 1e9,
        ..PHAConfig::default()
    };
    let res = pha_solve(&model, &cfg, &PhaSolverOptions::default()).unwrap();
    assert!(res.converged);
    assert_eq!(res.iterations, 1);
    assert_eq!(res.trace.len(), 1);
}

/// Convex reference: fix every pair to its optimal side, making each
/// subproblem an LP, then check that the consensus objective reaches the
/// monolithic optimum.
#[test]
fn convex_instances_reach_the_extensive_optimum() {
    let cases: Vec<(Dataset, ProblemInstance)> = vec![
        three_scenario_model(),
        {
            let x = mat(vec![vec![-0.5], vec![0.3], vec![1.1], vec![1.9]]);
            let y = mat(vec![vec![2.5], vec![4.1], vec![6.6], vec![9.0]]);
            (
                Dataset::new(x, y, vec![0, 1, 2, 3]).unwrap(),
                uniform_nv(4, 0.8, 3.5, 1.2),
            )
        },
    ];
    for (case, (data, inst)) in cases.into_iter().enumerate() {
        let opts = IppoOptions {
            beta_box: Some(wide_box(25.0)),
            ..IppoOptions::default()
        };
        let model = build_kkt_model(&data, &inst, RegConfig::default(), &opts).unwrap();
        let sol = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
        assert_eq!(sol.status, MilpStatus::Optimal);
        let pattern = pair_pattern_from(&model.milp, &sol.assignment);
        let convex = apply_pair_pattern(&model, &pattern).unwrap();
        // Monolithic solve of the pair-fixed model (a pure LP).
        let mono = solve_milp(&convex.milp, &MilpOptions::default()).unwrap();
        assert_eq!(mono.status, MilpStatus::Optimal);

        let cfg = PHAConfig {
            rho: 1.0,
            delta: 1e-5,
            max_iter: 200,
            prox_segments: 32,
        };
        let res = pha_solve(&convex, &cfg, &PhaSolverOptions::default()).unwrap();
        assert!(res.converged, "case {case} did not converge in 200 rounds");
        assert!(
            (res.objective - mono.objective).abs() <= 1e-3,
            "case {case}: consensus {} vs monolithic {}",
            res.objective,
            mono.objective
        );
    }
}

#[test]
fn rho_sweep_agrees_on_convex_instance() {
    let (data, inst) = three_scenario_model();
    let opts = IppoOptions {
        beta_box: Some(wide_box(25.0)),
        ..IppoOptions::default()
    };
    let model = build_kkt_model(&data, &inst, RegConfig::default(), &opts).unwrap();
    let sol = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
    let pattern = pair_pattern_from(&model.milp, &sol.assignment);
    let convex = apply_pair_pattern(&model, &pattern).unwrap();
    let mut objectives = Vec::new();
    for rho in [0.1, 1.0, 10.0] {
        let cfg = PHAConfig {
            rho,
            delta: 1e-5,
            max_iter: 400,
            prox_segments: 32,
        };
        let res = pha_solve(&convex, &cfg, &PhaSolverOptions::default()).unwrap();
        assert!(res.converged, "rho {rho} did not converge");
        objectives.push(res.objective);
    }
    for pair in objectives.windows(2) {
        assert!(
            (pair[0] - pair[1]).abs() <= 1e-2,
            "objectives diverge across rho: {objectives:?}"
        );
    }
}

#[test]
fn trace_is_monotone_in_iteration_and_carries_wallclock() {
    let (data, inst) = three_scenario_model();
    let opts = IppoOptions {
        beta_box: Some(wide_box(25.0)),
        ..IppoOptions::default()
    };
    let model = build_kkt_model(&data, &inst, RegConfig::default(), &opts).unwrap();
    let sol = solve_ippo(&data, &inst, RegConfig::default(), &opts).unwrap();
    let pattern = pair_pattern_from(&model.milp, &sol.assignment);
    let convex = apply_pair_pattern(&model, &pattern).unwrap();
    let cfg = PHAConfig {
        delta: 1e-5,
        ..PHAConfig::default()
    };
    let res = pha_solve(&convex, &cfg, &PhaSolverOptions::default()).unwrap();
    for (k, row) in res.trace.iter().enumerate() {
        assert_eq!(row.iter, k + 1);
        assert!(row.wallclock_s >= 0.0);
    }
    // The reported objective is the recomputed one at consensus, not the
    // penalized subproblem value.
    let last = res.trace.last().unwrap();
    assert!((last.consensus_objective - res.objective).abs() <= 1e-9);
}
