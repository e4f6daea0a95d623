//! Best-bound branch-and-bound over binaries and complementarity pairs.
//!
//! Complementarity is enforced by branching: each violated pair spawns one
//! child with the row forced to equality (slack = 0) and one with the
//! multiplier variable fixed to zero, so no big-M constant is needed. An
//! optional big-M mode rewrites pairs with binaries and user-supplied M for
//! cross-checking.

use crate::model::{
    ComplementarityPair, MixedIntegerModel, Result, RowSense, SolveStatus, SolverError, Tolerances,
};
use crate::pwl::{pwl_expand, PwlExpansion};
use crate::simplex::Simplex;

/// How complementarity pairs are enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompMode {
    /// Branch on each violated pair (slack = 0 vs. multiplier = 0).
    PairBranching,
    /// Rewrite each pair with a binary and the given big-M. Only valid if M
    /// genuinely bounds both the slack and the multiplier.
    BigM(f64),
}

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub tol: Tolerances,
    /// Accept an incumbent once the relative gap is at or below this.
    pub gap_tol: f64,
    pub node_limit: usize,
    pub comp_mode: CompMode,
    /// Candidate assignments (original variable space) checked before the
    /// search starts; valid ones seed the incumbent.
    pub initial_incumbents: Vec<Vec<f64>>,
    /// Run the rounding heuristic every this many nodes (0 disables).
    pub heuristic_period: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            gap_tol: 1e-6,
            node_limit: 200_000,
            comp_mode: CompMode::PairBranching,
            initial_incumbents: Vec::new(),
            heuristic_period: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    /// Incumbent proved within the gap tolerance.
    Optimal,
    /// Node limit hit with an incumbent in hand.
    NodeLimit,
    /// Node limit hit before any incumbent was found.
    NoIncumbent,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct MilpResult {
    pub status: MilpStatus,
    /// Incumbent over the original variables (empty if none).
    pub primal: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    /// Relative gap (incumbent - bound) / max(1, |incumbent|).
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Row duals of the LP at the incumbent's leaf (empty for seeded-only
    /// incumbents that no node reproduced).
    pub duals: Vec<f64>,
    /// Values of the declared binaries at the incumbent.
    pub binary_values: Vec<f64>,
}

/// A candidate-completion heuristic: maps a node relaxation's solution
/// (original variable space) to a full feasible assignment, or `None`.
pub type RoundingHeuristic<'a> = &'a dyn Fn(&[f64]) -> Option<Vec<f64>>;

#[derive(Debug, Clone, Copy)]
enum Fix {
    /// Force the row's slack to zero (row holds with equality).
    RowTight(usize),
    /// Pin a variable to a value (multiplier = 0, or a binary side).
    VarAt(usize, f64),
}

struct NodeArena {
    parent: Vec<usize>,
    fix: Vec<Option<Fix>>,
}

impl NodeArena {
    fn new() -> Self {
        Self {
            parent: vec![usize::MAX],
            fix: vec![None],
        }
    }

    fn child(&mut self, parent: usize, fix: Fix) -> usize {
        self.parent.push(parent);
        self.fix.push(Some(fix));
        self.parent.len() - 1
    }

    fn fixes_of(&self, mut node: usize, out: &mut Vec<Fix>) {
        out.clear();
        while node != 0 {
            if let Some(f) = self.fix[node] {
                out.push(f);
            }
            node = self.parent[node];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapKey {
    bound: f64,
    id: usize,
}

impl Eq for HeapKey {}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap is a max-heap, we want lowest bound first,
        // ties broken by lowest id.
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Rewrites complementarity pairs as big-M indicator rows with one binary
/// per pair. The caller vouches for the validity of `m_value`.
pub fn big_m_rewrite(model: &MixedIntegerModel, m_value: f64) -> Result<MixedIntegerModel> {
    if !(m_value.is_finite() && m_value > 0.0) {
        return Err(SolverError::Validation("big-M must be positive".into()));
    }
    model.validate()?;
    let mut out = model.clone();
    out.comp_pairs.clear();
    for pair in &model.comp_pairs {
        let z = out.base.add_var(0.0, 1.0);
        out.binaries.push(z);
        let row = &model.base.rows[pair.slack_ref];
        // slack <= M (1 - z)
        let mut coeffs = row.coeffs.clone();
        match row.sense {
            RowSense::Le => {
                // rhs - a.x <= M - M z  <=>  -a.x + M z <= M - rhs
                for c in &mut coeffs {
                    c.1 = -c.1;
                }
                coeffs.push((z, m_value));
                out.base.add_row(coeffs, RowSense::Le, m_value - row.rhs);
            }
            RowSense::Ge => {
                // a.x - rhs <= M - M z  <=>  a.x + M z <= M + rhs
                coeffs.push((z, m_value));
                out.base.add_row(coeffs, RowSense::Le, m_value + row.rhs);
            }
            RowSense::Eq => unreachable!("validated: pairs never reference equality rows"),
        }
        // |dual| <= M z on the side(s) the variable can take.
        let (lo, hi) = out.base.bounds[pair.dual_ref];
        if hi > 0.0 {
            out.base
                .add_row(vec![(pair.dual_ref, 1.0), (z, -m_value)], RowSense::Le, 0.0);
        }
        if lo < 0.0 {
            out.base
                .add_row(vec![(pair.dual_ref, -1.0), (z, -m_value)], RowSense::Le, 0.0);
        }
    }
    Ok(out)
}

/// Solves a mixed-integer model. See [`solve_milp_with_heuristic`].
pub fn solve_milp(model: &MixedIntegerModel, opts: &MilpOptions) -> Result<MilpResult> {
    solve_milp_with_heuristic(model, opts, None)
}

/// Solves a mixed-integer model by LP-based branch-and-bound.
///
/// Node selection is best-bound (ties by node id), pair branching picks the
/// most violated complementarity product first, and binary branching the
/// most fractional variable. Deterministic for fixed inputs and options.
pub fn solve_milp_with_heuristic(
    model: &MixedIntegerModel,
    opts: &MilpOptions,
    heuristic: Option<RoundingHeuristic<'_>>,
) -> Result<MilpResult> {
    let rewritten;
    let model = match opts.comp_mode {
        CompMode::PairBranching => model,
        CompMode::BigM(m) => {
            rewritten = big_m_rewrite(model, m)?;
            &rewritten
        }
    };
    model.validate()?;
    let expansion = pwl_expand(model)?;
    let work = &expansion.model;
    let n_orig = model.base.num_vars;

    let mut spx = Simplex::new(&work.base)?;
    let base_bounds: Vec<(f64, f64)> = (0..work.base.num_vars)
        .map(|j| work.base.bounds[j])
        .collect();

    let mut incumbent: Option<Vec<f64>> = None;
    let mut incumbent_obj = f64::INFINITY;
    let mut incumbent_duals: Vec<f64> = Vec::new();
    let mut lp_iterations = 0usize;

    let try_candidate =
        |cand: &[f64], obj_cache: &mut f64, inc: &mut Option<Vec<f64>>, duals: &mut Vec<f64>| {
            if cand.len() != n_orig {
                return;
            }
            if model.check_candidate(cand, &opts.tol).is_err() {
                return;
            }
            let obj = model.objective_value(cand);
            if obj < *obj_cache - 1e-12 {
                *obj_cache = obj;
                *inc = Some(cand.to_vec());
                duals.clear();
            }
        };

    for seed in &opts.initial_incumbents {
        try_candidate(seed, &mut incumbent_obj, &mut incumbent, &mut incumbent_duals);
    }

    let mut arena = NodeArena::new();
    let mut heap = std::collections::BinaryHeap::new();
    let mut fixes: Vec<Fix> = Vec::new();
    let mut nodes = 0usize;
    let mut best_bound = f64::NEG_INFINITY;
    let mut hit_node_limit = false;
    let mut root_infeasible = false;
    let mut root_unbounded = false;

    heap.push(HeapKey {
        bound: f64::NEG_INFINITY,
        id: 0,
    });

    let rel_gap = |inc: f64, bound: f64| (inc - bound) / f64::max(1.0, inc.abs());

    while let Some(key) = heap.pop() {
        if key.bound > f64::NEG_INFINITY
            && incumbent.is_some()
            && rel_gap(incumbent_obj, key.bound) <= opts.gap_tol
        {
            // Best-bound order: every remaining node is at least as high.
            best_bound = key.bound;
            break;
        }
        if nodes >= opts.node_limit {
            hit_node_limit = true;
            best_bound = best_bound.max(key.bound);
            break;
        }
        nodes += 1;

        // Rebuild bounds for this node.
        arena.fixes_of(key.id, &mut fixes);
        for (j, &(lo, hi)) in base_bounds.iter().enumerate() {
            spx.set_var_bounds(j, lo, hi);
        }
        for r in 0..work.base.rows.len() {
            match work.base.rows[r].sense {
                RowSense::Le => spx.set_slack_bounds(r, 0.0, f64::INFINITY),
                RowSense::Ge => spx.set_slack_bounds(r, f64::NEG_INFINITY, 0.0),
                RowSense::Eq => spx.set_slack_bounds(r, 0.0, 0.0),
            }
        }
        for fix in &fixes {
            match *fix {
                Fix::RowTight(r) => spx.set_slack_bounds(r, 0.0, 0.0),
                Fix::VarAt(j, v) => spx.set_var_bounds(j, v, v),
            }
        }

        let out = spx.solve(true, &opts.tol)?;
        lp_iterations += out.iterations;
        match out.status {
            SolveStatus::Infeasible => {
                if key.id == 0 {
                    root_infeasible = true;
                }
                continue;
            }
            SolveStatus::Unbounded => {
                if key.id == 0 {
                    root_unbounded = true;
                    break;
                }
                // A child cannot be unbounded if the root was bounded, but
                // treat it conservatively as an unpruned open direction.
                return Err(SolverError::Numerical(
                    "unbounded node below a bounded root".into(),
                ));
            }
            SolveStatus::Optimal => {}
        }
        let node_bound = out.objective;
        if key.id == 0 {
            best_bound = node_bound;
        }
        if incumbent.is_some() && rel_gap(incumbent_obj, node_bound) <= opts.gap_tol {
            continue;
        }

        let x = &out.primal;

        // Most fractional binary.
        let mut frac_branch: Option<(usize, f64)> = None;
        for &b in &work.binaries {
            let f = (x[b] - x[b].round()).abs();
            if f > 1e-6 {
                match frac_branch {
                    Some((_, bestf)) if f <= bestf => {}
                    _ => frac_branch = Some((b, f)),
                }
            }
        }
        // Most violated complementarity product.
        let mut pair_branch: Option<(usize, f64)> = None;
        for (k, pair) in work.comp_pairs.iter().enumerate() {
            let s = work.row_slack(pair.slack_ref, x);
            let d = x[pair.dual_ref];
            let viol = (s * d).abs();
            if viol > opts.tol.comp * (1.0 + s.abs() + d.abs()) {
                match pair_branch {
                    Some((_, bestv)) if viol <= bestv => {}
                    _ => pair_branch = Some((k, viol)),
                }
            }
        }

        if pair_branch.is_none() && frac_branch.is_none() {
            // Both integral and complementary: candidate incumbent.
            let cand = &x[..n_orig];
            if model.check_candidate(cand, &opts.tol).is_ok() {
                let obj = model.objective_value(cand);
                if obj < incumbent_obj - 1e-12 {
                    incumbent_obj = obj;
                    incumbent = Some(cand.to_vec());
                    incumbent_duals = out.duals.clone();
                }
            }
            continue;
        }

        if let Some(h) = heuristic {
            if opts.heuristic_period > 0 && (nodes - 1) % opts.heuristic_period == 0 {
                if let Some(cand) = h(&x[..n_orig]) {
                    try_candidate(&cand, &mut incumbent_obj, &mut incumbent, &mut incumbent_duals);
                }
            }
        }

        if let Some((k, _)) = pair_branch {
            let pair: ComplementarityPair = work.comp_pairs[k];
            let a = arena.child(key.id, Fix::RowTight(pair.slack_ref));
            let b = arena.child(key.id, Fix::VarAt(pair.dual_ref, 0.0));
            heap.push(HeapKey {
                bound: node_bound,
                id: a,
            });
            heap.push(HeapKey {
                bound: node_bound,
                id: b,
            });
        } else if let Some((b, _)) = frac_branch {
            let lo_child = arena.child(key.id, Fix::VarAt(b, 0.0));
            let hi_child = arena.child(key.id, Fix::VarAt(b, 1.0));
            heap.push(HeapKey {
                bound: node_bound,
                id: lo_child,
            });
            heap.push(HeapKey {
                bound: node_bound,
                id: hi_child,
            });
        }
    }

    if root_unbounded {
        return Ok(MilpResult {
            status: MilpStatus::Unbounded,
            primal: Vec::new(),
            objective: f64::NEG_INFINITY,
            best_bound: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            nodes,
            lp_iterations,
            duals: Vec::new(),
            binary_values: Vec::new(),
        });
    }

    match incumbent {
        Some(x) => {
            let exhausted = heap.is_empty() && !hit_node_limit;
            let bound = if exhausted {
                incumbent_obj
            } else {
                heap.iter()
                    .map(|k| k.bound)
                    .fold(best_bound, f64::min)
                    .min(incumbent_obj)
            };
            let gap = rel_gap(incumbent_obj, bound).max(0.0);
            let status = if exhausted || gap <= opts.gap_tol {
                MilpStatus::Optimal
            } else {
                MilpStatus::NodeLimit
            };
            let binary_values = model.binaries.iter().map(|&b| x[b].round()).collect();
            Ok(MilpResult {
                status,
                objective: incumbent_obj,
                best_bound: bound,
                gap,
                nodes,
                lp_iterations,
                duals: incumbent_duals,
                binary_values,
                primal: x,
            })
        }
        None => {
            let status = if hit_node_limit {
                MilpStatus::NoIncumbent
            } else {
                debug_assert!(root_infeasible || heap.is_empty());
                MilpStatus::Infeasible
            };
            Ok(MilpResult {
                status,
                primal: Vec::new(),
                objective: f64::INFINITY,
                best_bound,
                gap: f64::INFINITY,
                nodes,
                lp_iterations,
                duals: Vec::new(),
                binary_values: Vec::new(),
            })
        }
    }
}

/// Expands PWL terms and returns the model that branch-and-bound actually
/// searches, for export or inspection.
pub fn expanded_model(model: &MixedIntegerModel, comp_mode: CompMode) -> Result<PwlExpansion> {
    match comp_mode {
        CompMode::PairBranching => pwl_expand(model),
        CompMode::BigM(m) => pwl_expand(&big_m_rewrite(model, m)?),
    }
}
