//! Export of models to the LP text format for cross-checking against
//! external solvers. Coefficients are printed with 17 significant digits so
//! a round-trip preserves every bit of the f64 values.

use crate::milp::{expanded_model, CompMode};
use crate::model::{MixedIntegerModel, Result, RowSense};
use std::fmt::Write as _;

fn num(v: f64) -> String {
    format!("{:.16e}", v)
}

/// Renders the model in LP format. Piecewise-linear terms are expanded
/// first. Under `PairBranching` the complementarity pairs have no LP-format
/// equivalent and are emitted as comment lines; under `BigM` the output is a
/// complete, self-contained MILP.
pub fn to_lp_format(model: &MixedIntegerModel, comp_mode: CompMode) -> Result<String> {
    let expansion = expanded_model(model, comp_mode)?;
    let m = &expansion.model;
    let mut s = String::new();
    s.push_str("\\ lin-solver export\n");
    if comp_mode == CompMode::PairBranching {
        for (k, pair) in m.comp_pairs.iter().enumerate() {
            let _ = writeln!(
                s,
                "\\ complementarity pair {}: slack(r{}) * x{} = 0",
                k, pair.slack_ref, pair.dual_ref
            );
        }
    }
    s.push_str("Minimize\n obj:");
    let mut first = true;
    let mut obj = vec![0.0; m.base.num_vars];
    for &(j, v) in &m.base.objective {
        obj[j] += v;
    }
    for (j, &v) in obj.iter().enumerate() {
        if v != 0.0 {
            let _ = write!(s, "{} {} x{}", if first { "" } else { " +" }, num(v), j);
            first = false;
        }
    }
    if first {
        s.push_str(" 0 x0");
    }
    s.push_str("\nSubject To\n");
    for (i, row) in m.base.rows.iter().enumerate() {
        let _ = write!(s, " r{}:", i);
        let mut first = true;
        for &(j, v) in &row.coeffs {
            let _ = write!(s, "{} {} x{}", if first { "" } else { " +" }, num(v), j);
            first = false;
        }
        let op = match row.sense {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        };
        let _ = writeln!(s, " {} {}", op, num(row.rhs));
    }
    s.push_str("Bounds\n");
    for (j, &(lo, hi)) in m.base.bounds.iter().enumerate() {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => {
                let _ = writeln!(s, " {} <= x{} <= {}", num(lo), j, num(hi));
            }
            (true, false) => {
                let _ = writeln!(s, " x{} >= {}", j, num(lo));
            }
            (false, true) => {
                let _ = writeln!(s, " -inf <= x{} <= {}", j, num(hi));
            }
            (false, false) => {
                let _ = writeln!(s, " x{} free", j);
            }
        }
    }
    if !m.binaries.is_empty() {
        s.push_str("Binary\n");
        for &b in &m.binaries {
            let _ = writeln!(s, " x{}", b);
        }
    }
    s.push_str("End\n");
    Ok(s)
}
