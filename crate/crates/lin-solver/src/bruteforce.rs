//! Brute-force reference routes used to check the solver: vertex
//! enumeration for LPs and exhaustive branch enumeration for mixed-integer
//! models. Deliberately naive and independent of the simplex machinery;
//! usable only at toy sizes.

use crate::milp::{solve_milp, MilpOptions, MilpStatus};
use crate::model::{LinearProgram, MixedIntegerModel, Result, RowSense, SolverError, Tolerances};
use crate::pwl::pwl_expand;

/// Outcome of vertex enumeration.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexOutcome {
    Optimal { objective: f64, point: Vec<f64> },
    Infeasible,
}

fn solve_square(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-10 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for k in 0..n {
            a[col * n + k] /= d;
        }
        b[col] /= d;
        for r in 0..n {
            if r != col {
                let f = a[r * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        a[r * n + k] -= f * a[col * n + k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some(b.to_vec())
}

/// Minimizes the LP by enumerating every basic point: all choices of
/// `num_vars` active constraints among rows-as-equalities and variable
/// bounds. Requires finite bounds on every variable so that a feasible
/// polytope is bounded and has a feasible vertex.
pub fn lp_vertex_enumeration(lp: &LinearProgram) -> Result<VertexOutcome> {
    lp.validate()?;
    let n = lp.num_vars;
    for &(lo, hi) in &lp.bounds {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(SolverError::Validation(
                "vertex enumeration needs finite variable bounds".into(),
            ));
        }
    }
    // Candidate active constraints: (dense row, rhs). Equality rows first;
    // they are forced into every active set.
    let mut cands: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut forced = 0usize;
    for row in lp.rows.iter().filter(|r| r.sense == RowSense::Eq) {
        let mut dense = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            dense[j] += v;
        }
        cands.push((dense, row.rhs));
        forced += 1;
    }
    for row in lp.rows.iter().filter(|r| r.sense != RowSense::Eq) {
        let mut dense = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            dense[j] += v;
        }
        cands.push((dense, row.rhs));
    }
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cands.push((e.clone(), lo));
        if hi != lo {
            cands.push((e, hi));
        }
    }
    if forced > n {
        // More forced equalities than dimensions: fall back to including all
        // of them (the system is square-or-overdetermined; treat as a single
        // candidate set). Overdetermined consistent systems are not handled;
        // the random generators never produce them.
        return Err(SolverError::Validation(
            "more equality rows than variables is unsupported by the oracle".into(),
        ));
    }

    let c = lp.dense_objective();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let free = cands.len() - forced;
    let choose = n - forced;

    let feasible = |x: &[f64]| -> bool {
        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            let s = 1e-7 * (1.0 + x[j].abs());
            if x[j] < lo - s || x[j] > hi + s {
                return false;
            }
        }
        for row in &lp.rows {
            let mut lhs = 0.0;
            let mut scale = 1.0 + row.rhs.abs();
            for &(j, v) in &row.coeffs {
                lhs += v * x[j];
                scale += (v * x[j]).abs();
            }
            let ok = match row.sense {
                RowSense::Le => lhs <= row.rhs + 1e-7 * scale,
                RowSense::Ge => lhs >= row.rhs - 1e-7 * scale,
                RowSense::Eq => (lhs - row.rhs).abs() <= 1e-7 * scale,
            };
            if !ok {
                return false;
            }
        }
        true
    };

    let consider = |offsets: &[usize], best: &mut Option<(f64, Vec<f64>)>| {
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for r in 0..forced {
            a[r * n..(r + 1) * n].copy_from_slice(&cands[r].0);
            b[r] = cands[r].1;
        }
        for (r, &off) in offsets.iter().enumerate() {
            let (dense, rhs) = &cands[forced + off];
            let r = r + forced;
            a[r * n..(r + 1) * n].copy_from_slice(dense);
            b[r] = *rhs;
        }
        if let Some(x) = solve_square(&mut a, &mut b, n) {
            if feasible(&x) {
                let obj: f64 = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
                match best {
                    Some((bo, _)) if *bo <= obj => {}
                    _ => *best = Some((obj, x)),
                }
            }
        }
    };

    fn combinations(
        start: usize,
        free: usize,
        idx: &mut Vec<usize>,
        choose: usize,
        f: &mut impl FnMut(&[usize]),
    ) {
        if idx.len() == choose {
            f(idx);
            return;
        }
        let remaining = choose - idx.len();
        for i in start..=free.saturating_sub(remaining) {
            idx.push(i);
            combinations(i + 1, free, idx, choose, f);
            idx.pop();
        }
    }

    if choose <= free {
        let mut idx = Vec::with_capacity(choose);
        combinations(0, free, &mut idx, choose, &mut |set: &[usize]| {
            consider(set, &mut best)
        });
    }

    Ok(match best {
        Some((objective, point)) => VertexOutcome::Optimal { objective, point },
        None => VertexOutcome::Infeasible,
    })
}

/// Minimizes a mixed-integer model by enumerating every branch assignment:
/// each complementarity pair contributes a "row tight" / "variable zero"
/// split and each binary a 0/1 split; every leaf is an LP. Returns `None`
/// when all leaves are infeasible.
pub fn milp_branch_enumeration(
    model: &MixedIntegerModel,
    tol: &Tolerances,
) -> Result<Option<(f64, Vec<f64>)>> {
    model.validate()?;
    let expansion = pwl_expand(model)?;
    let work = expansion.model;
    let p = work.comp_pairs.len();
    let nb = work.binaries.len();
    let total_bits = p + nb;
    assert!(total_bits <= 24, "enumeration limited to 24 branch bits");
    let n_orig = model.base.num_vars;

    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u64..(1u64 << total_bits) {
        let mut leaf = work.base.clone();
        let mut ok = true;
        for (k, pair) in work.comp_pairs.iter().enumerate() {
            if mask >> k & 1 == 0 {
                // Force the row to equality.
                leaf.rows[pair.slack_ref].sense = RowSense::Eq;
            } else {
                leaf.bounds[pair.dual_ref] = (0.0, 0.0);
            }
        }
        for (k, &b) in work.binaries.iter().enumerate() {
            let v = (mask >> (p + k) & 1) as f64;
            let (lo, hi) = leaf.bounds[b];
            if v < lo - 1e-9 || v > hi + 1e-9 {
                ok = false;
                break;
            }
            leaf.bounds[b] = (v, v);
        }
        if !ok {
            continue;
        }
        let sol = crate::simplex::solve_lp_with(&leaf, tol)?;
        if sol.status == crate::model::SolveStatus::Optimal {
            let x = sol.primal[..n_orig].to_vec();
            let obj = model.objective_value(&x);
            match &best {
                Some((bo, _)) if *bo <= obj => {}
                _ => best = Some((obj, x)),
            }
        }
    }
    Ok(best)
}

/// Convenience wrapper: compares `solve_milp` against branch enumeration and
/// returns `(solver objective, enumeration objective)` when both found an
/// optimum.
pub fn milp_cross_check(
    model: &MixedIntegerModel,
    opts: &MilpOptions,
) -> Result<Option<(f64, f64)>> {
    let solver = solve_milp(model, opts)?;
    let brute = milp_branch_enumeration(model, &opts.tol)?;
    match (&solver.status, brute) {
        (MilpStatus::Optimal, Some((obj, _))) => Ok(Some((solver.objective, obj))),
        (MilpStatus::Infeasible, None) => Ok(None),
        (s, b) => Err(SolverError::Numerical(format!(
            "solver status {s:?} disagrees with enumeration ({})",
            if b.is_some() { "feasible" } else { "infeasible" }
        ))),
    }
}
