//! Seeded random LPs checked against brute-force vertex enumeration, plus
//! duality and determinism properties.

use lin_solver::{
    complementary_slackness_residual, lp_vertex_enumeration, random_lp, solve_lp,
    strong_duality_gap, LinearProgram, Rng, RowSense, SolveStatus, VertexOutcome,
};

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = Rng::new(20240901);
    let mut optimal = 0;
    let mut infeasible = 0;
    for case in 0..120 {
        let lp = random_lp(&mut rng, 6, 6);
        let sol = solve_lp(&lp).unwrap();
        let brute = lp_vertex_enumeration(&lp).unwrap();
        match (sol.status, brute) {
            (SolveStatus::Optimal, VertexOutcome::Optimal { objective, .. }) => {
                optimal += 1;
                assert!(
                    (sol.objective - objective).abs() <= 1e-7 * (1.0 + objective.abs()),
                    "case {case}: solver {} vs enumeration {}",
                    sol.objective,
                    objective
                );
            }
            (SolveStatus::Infeasible, VertexOutcome::Infeasible) => infeasible += 1,
            (s, b) => panic!("case {case}: solver {s:?} vs enumeration {b:?}"),
        }
    }
    // The generator should produce a healthy mix.
    assert!(optimal >= 30, "only {optimal} optimal cases");
    assert!(infeasible >= 5, "only {infeasible} infeasible cases");
}

#[test]
fn strong_duality_and_complementary_slackness() {
    let mut rng = Rng::new(77);
    let mut checked = 0;
    for _ in 0..150 {
        let lp = random_lp(&mut rng, 6, 6);
        let sol = solve_lp(&lp).unwrap();
        if sol.status != SolveStatus::Optimal {
            continue;
        }
        checked += 1;
        let gap = strong_duality_gap(&lp, &sol);
        assert!(
            gap <= 1e-7 * (1.0 + sol.objective.abs()),
            "duality gap {gap} at objective {}",
            sol.objective
        );
        let comp = complementary_slackness_residual(&lp, &sol);
        assert!(comp <= 1e-6, "complementary slackness residual {comp}");
    }
    assert!(checked >= 40);
}

#[test]
fn deterministic_resolve() {
    let mut rng = Rng::new(5150);
    for _ in 0..25 {
        let lp = random_lp(&mut rng, 6, 6);
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp(&lp).unwrap();
        assert_eq!(a.status, b.status);
        if a.status == SolveStatus::Optimal {
            assert_eq!(a.objective.to_bits(), b.objective.to_bits());
            assert_eq!(a.primal, b.primal);
            assert_eq!(a.duals, b.duals);
        }
    }
}

#[test]
fn equality_rows_respected() {
    // min x + y s.t. x + y = 2, x - y <= 0, 0 <= x,y <= 5
    let mut lp = LinearProgram::new();
    let x = lp.add_var(0.0, 5.0);
    let y = lp.add_var(0.0, 5.0);
    lp.set_obj(x, 1.0);
    lp.set_obj(y, 2.0);
    lp.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Eq, 2.0);
    lp.add_row(vec![(x, 1.0), (y, -1.0)], RowSense::Le, 0.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    // best: x as large as possible given x <= y and x + y = 2 -> x = y = 1
    assert!((sol.primal[x] - 1.0).abs() < 1e-8);
    assert!((sol.primal[y] - 1.0).abs() < 1e-8);
    assert!((sol.objective - 3.0).abs() < 1e-8);
}

#[test]
fn free_variables_supported() {
    // min x s.t. x >= -4 via a row (variable itself unbounded)
    let mut lp = LinearProgram::new();
    let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY);
    lp.set_obj(x, 1.0);
    lp.add_row(vec![(x, 1.0)], RowSense::Ge, -4.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.primal[x] + 4.0).abs() < 1e-9);
}
