//! Seeded random model generators for tests and benchmarks.
//!
//! Uses a self-contained xoshiro-style generator so generated instances are
//! stable across platforms and dependency upgrades.

use crate::model::{ComplementarityPair, LinearProgram, MixedIntegerModel, RowSense};

/// Small deterministic PRNG (splitmix64-seeded xorshift64*).
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        // splitmix64 scramble so that small seeds diverge immediately
        let mut z = seed.wrapping_add(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        Self(z ^ (z >> 31) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545f4914f6cdd1d)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// A random bounded LP with up to `max_vars` variables and `max_rows` rows.
/// All variable bounds are finite so vertex enumeration applies. Small
/// integer-and-half coefficients keep the linear systems well conditioned.
pub fn random_lp(rng: &mut Rng, max_vars: usize, max_rows: usize) -> LinearProgram {
    let n = 1 + rng.below(max_vars);
    let m = rng.below(max_rows + 1);
    let mut lp = LinearProgram::new();
    for _ in 0..n {
        let lo = [-2.0, -1.0, 0.0, 0.0][rng.below(4)];
        let hi = lo + [1.0, 2.0, 3.0, 5.0][rng.below(4)];
        lp.add_var(lo, hi);
    }
    for j in 0..n {
        let c = (rng.below(13) as f64 - 6.0) / 2.0;
        lp.set_obj(j, c);
    }
    let mut eq_rows = 0;
    for _ in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.unit() < 0.6 {
                let v = (rng.below(13) as f64 - 6.0) / 2.0;
                if v != 0.0 {
                    coeffs.push((j, v));
                }
            }
        }
        if coeffs.is_empty() {
            coeffs.push((rng.below(n), 1.0 + rng.below(3) as f64));
        }
        // Keep equality rows strictly below the variable count so the
        // feasible set, when nonempty, retains a vertex structure the
        // enumeration oracle can handle.
        let sense = match rng.below(8) {
            0 if eq_rows + 1 < n => {
                eq_rows += 1;
                RowSense::Eq
            }
            0..=4 => RowSense::Le,
            _ => RowSense::Ge,
        };
        let rhs = (rng.below(21) as f64 - 8.0) / 2.0;
        lp.add_row(coeffs, sense, rhs);
    }
    lp
}

/// A random mixed-integer model with up to `max_pairs` complementarity pairs
/// and `max_binaries` binaries over a small random LP base.
pub fn random_milp(
    rng: &mut Rng,
    max_vars: usize,
    max_rows: usize,
    max_pairs: usize,
    max_binaries: usize,
) -> MixedIntegerModel {
    let mut base = random_lp(rng, max_vars, max_rows);
    // Pairs need inequality rows whose paired variable can reach zero.
    let mut pairable_rows: Vec<usize> = base
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.sense != RowSense::Eq)
        .map(|(i, _)| i)
        .collect();
    let zero_ok: Vec<usize> = (0..base.num_vars)
        .filter(|&j| base.bounds[j].0 <= 0.0 && base.bounds[j].1 >= 0.0)
        .collect();
    let mut comp_pairs = Vec::new();
    if !zero_ok.is_empty() {
        let want = rng.below(max_pairs + 1);
        while comp_pairs.len() < want && !pairable_rows.is_empty() {
            let ri = rng.below(pairable_rows.len());
            let row = pairable_rows.swap_remove(ri);
            let var = zero_ok[rng.below(zero_ok.len())];
            comp_pairs.push(ComplementarityPair {
                slack_ref: row,
                dual_ref: var,
            });
        }
    }
    let mut binaries = Vec::new();
    for _ in 0..rng.below(max_binaries + 1) {
        let b = base.add_var(0.0, 1.0);
        let c = (rng.below(9) as f64 - 4.0) / 2.0;
        base.set_obj(b, c);
        // Tie the binary into an existing row so it matters.
        if !base.rows.is_empty() {
            let r = rng.below(base.rows.len());
            let v = (rng.below(5) as f64 - 2.0).max(1.0);
            base.rows[r].coeffs.push((b, v));
        }
        binaries.push(b);
    }
    MixedIntegerModel {
        base,
        binaries,
        comp_pairs,
        pwl_terms: Vec::new(),
    }
}
