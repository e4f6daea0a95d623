//! Epigraph expansion of separable convex piecewise-linear objective terms.

use crate::model::{MixedIntegerModel, Result, RowSense, SeparablePWLTerm};

/// Result of expanding the piecewise-linear terms of a model: the epigraph
/// variables are appended after the original ones, so original indices stay
/// valid.
#[derive(Debug, Clone)]
pub struct PwlExpansion {
    pub model: MixedIntegerModel,
    /// Column index of the epigraph variable of each original term.
    pub epigraph_vars: Vec<usize>,
    /// The original terms, kept for candidate completion.
    pub terms: Vec<SeparablePWLTerm>,
}

impl PwlExpansion {
    /// Extends an assignment over the original variables with the epigraph
    /// values (the interpolant evaluated at each term's variable).
    pub fn complete_candidate(&self, x: &[f64]) -> Vec<f64> {
        let mut full = x.to_vec();
        for term in &self.terms {
            full.push(term.value_at(x[term.variable_ref]));
        }
        full
    }
}

/// Replaces each convex piecewise-linear term with an epigraph variable and
/// one linear cut per segment. Convex terms never need binaries; the cuts'
/// upper envelope equals the interpolant, which overestimates the sampled
/// function by at most the per-segment interpolation gap (for `x^2` on a
/// uniform grid of width `d`, at most `(d/2)^2`).
pub fn pwl_expand(m: &MixedIntegerModel) -> Result<PwlExpansion> {
    m.validate()?;
    let mut out = MixedIntegerModel {
        base: m.base.clone(),
        binaries: m.binaries.clone(),
        comp_pairs: m.comp_pairs.clone(),
        pwl_terms: Vec::new(),
    };
    let mut epigraph_vars = Vec::with_capacity(m.pwl_terms.len());
    for term in &m.pwl_terms {
        let min_val = term.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let t = out.base.add_var(min_val - 1.0, f64::INFINITY);
        out.base.set_obj(t, 1.0);
        epigraph_vars.push(t);
        for k in 0..term.breakpoints.len() - 1 {
            let x0 = term.breakpoints[k];
            let x1 = term.breakpoints[k + 1];
            let f0 = term.values[k];
            let f1 = term.values[k + 1];
            let slope = (f1 - f0) / (x1 - x0);
            // t >= f0 + slope (x - x0)  <=>  slope x - t <= slope x0 - f0
            out.base.add_row(
                vec![(term.variable_ref, slope), (t, -1.0)],
                RowSense::Le,
                slope * x0 - f0,
            );
        }
    }
    Ok(PwlExpansion {
        model: out,
        epigraph_vars,
        terms: m.pwl_terms.clone(),
    })
}

/// Uniform sampling of a function on `[lo, hi]` into a term with `segments`
/// pieces. The samples must come from a convex function for the term to
/// validate.
pub fn sample_term<F: Fn(f64) -> f64>(
    variable_ref: usize,
    lo: f64,
    hi: f64,
    segments: usize,
    f: F,
) -> SeparablePWLTerm {
    assert!(segments >= 1 && hi > lo);
    let mut breakpoints = Vec::with_capacity(segments + 1);
    let mut values = Vec::with_capacity(segments + 1);
    for k in 0..=segments {
        let x = lo + (hi - lo) * (k as f64) / (segments as f64);
        breakpoints.push(x);
        values.push(f(x));
    }
    SeparablePWLTerm {
        variable_ref,
        breakpoints,
        values,
    }
}
