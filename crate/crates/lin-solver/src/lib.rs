//! A self-contained linear-programming and mixed-integer toolkit.
//!
//! The LP core is a bounded-variable two-phase primal simplex returning
//! primal and dual certificates. On top of it, a best-bound branch-and-bound
//! handles binary variables, complementarity pairs (branched, no big-M
//! needed), and separable convex piecewise-linear objective terms via
//! epigraph cuts. Models can be exported in LP text format for
//! cross-checking against external solvers.
//!
//! Solver instances are single-threaded and own their state; run separate
//! instances on disjoint models for parallelism.

mod bruteforce;
mod export;
mod milp;
mod model;
mod pwl;
mod randgen;
mod simplex;

pub use bruteforce::{
    lp_vertex_enumeration, milp_branch_enumeration, milp_cross_check, VertexOutcome,
};
pub use export::to_lp_format;
pub use milp::{
    big_m_rewrite, expanded_model, solve_milp, solve_milp_with_heuristic, CompMode, MilpOptions,
    MilpResult, MilpStatus, RoundingHeuristic,
};
pub use model::{
    ComplementarityPair, LinearProgram, MixedIntegerModel, PrimalDualSolution, Result, Row,
    RowSense, SeparablePWLTerm, SolveStatus, SolverError, Tolerances,
};
pub use pwl::{pwl_expand, sample_term, PwlExpansion};
pub use randgen::{random_lp, random_milp, Rng};
pub use simplex::{complementary_slackness_residual, solve_lp, solve_lp_with, strong_duality_gap};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_le() {
        // min -x s.t. x <= 3, x >= 0
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, f64::INFINITY);
        lp.set_obj(x, -1.0);
        lp.add_row(vec![(x, 1.0)], RowSense::Le, 3.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal[x] - 3.0).abs() < 1e-9);
        assert!((sol.objective + 3.0).abs() < 1e-9);
        assert!((sol.duals[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        // min x s.t. x >= 1, x <= 0
        let mut lp = LinearProgram::new();
        let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY);
        lp.set_obj(x, 1.0);
        lp.add_row(vec![(x, 1.0)], RowSense::Ge, 1.0);
        lp.add_row(vec![(x, 1.0)], RowSense::Le, 0.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY);
        lp.set_obj(x, 1.0);
        lp.add_row(vec![(x, 1.0)], RowSense::Le, 5.0);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, SolveStatus::Unbounded);
        assert!(sol.certificate.is_some());
    }

    #[test]
    fn milp_pair_forces_split() {
        // min x+y s.t. x+y >= 1, pair(row slack, y), x,y >= 0 -> obj 1
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, f64::INFINITY);
        let y = lp.add_var(0.0, f64::INFINITY);
        lp.set_obj(x, 1.0);
        lp.set_obj(y, 1.0);
        let r = lp.add_row(vec![(x, 1.0), (y, 1.0)], RowSense::Ge, 1.0);
        let m = MixedIntegerModel {
            base: lp,
            binaries: vec![],
            comp_pairs: vec![ComplementarityPair {
                slack_ref: r,
                dual_ref: y,
            }],
            pwl_terms: vec![],
        };
        let res = solve_milp(&m, &MilpOptions::default()).unwrap();
        assert_eq!(res.status, MilpStatus::Optimal);
        assert!((res.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn milp_without_discrete_parts_matches_lp() {
        let mut rng = Rng::new(7);
        for _ in 0..20 {
            let lp = random_lp(&mut rng, 5, 5);
            let direct = solve_lp(&lp).unwrap();
            let m = MixedIntegerModel::from_lp(lp);
            let res = solve_milp(&m, &MilpOptions::default()).unwrap();
            match direct.status {
                SolveStatus::Optimal => {
                    assert_eq!(res.status, MilpStatus::Optimal);
                    assert!(
                        (res.objective - direct.objective).abs()
                            <= 1e-7 * (1.0 + direct.objective.abs())
                    );
                }
                SolveStatus::Infeasible => assert_eq!(res.status, MilpStatus::Infeasible),
                SolveStatus::Unbounded => assert_eq!(res.status, MilpStatus::Unbounded),
            }
        }
    }
}
