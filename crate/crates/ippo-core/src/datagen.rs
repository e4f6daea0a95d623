//! Synthetic instance generation: multivariate-normal features, linear
//! responses with tunable noise, per-scenario uniform cost draws, seeded
//! splits, and R-square calibration of the noise level.
//!
//! All randomness comes from ChaCha12 keyed by a single 64-bit seed, with
//! one documented stream per purpose, so a `(config, seed)` pair maps to an
//! identical dataset on every platform. Draw orders are row-major and fixed.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_psd, Mat};
use crate::regression::{self, RegressionParams};
use crate::scenario::{
    Dataset, NewsvendorInstance, ProblemInstance, ProblemKind, ShipmentInstance,
};

/// RNG stream ids, one per draw purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stream {
    Features = 1,
    Noise = 2,
    Costs = 3,
    Splits = 4,
    BetaTrue = 5,
}

/// ChaCha12 keyed by `seed`, positioned on the given stream.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Inclusive-exclusive uniform cost ranges per cost type.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostRanges {
    pub order: (f64, f64),
    pub backorder: (f64, f64),
    pub holding: (f64, f64),
    pub ship: (f64, f64),
    pub advance_cost: f64,
    pub lastminute_cost: f64,
}

impl Default for CostRanges {
    fn default() -> Self {
        Self {
            order: (0.0, 300.0),
            backorder: (0.0, 3000.0),
            holding: (0.0, 150.0),
            ship: (0.0, 30.0),
            advance_cost: 5.0,
            lastminute_cost: 100.0,
        }
    }
}

/// Full generator configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub d_x: usize,
    pub d_l: usize,
    pub d_w: usize,
    pub mean: Vec<f64>,
    pub covariance: Mat,
    /// True coefficients, `d_l x (d_x + 1)`, column 0 the intercept.
    pub beta_true: Mat,
    pub noise_sigma: f64,
    pub cost_ranges: CostRanges,
    pub seed: u64,
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d_x == 0 || self.d_l == 0 {
            return Err(Error::Validation("n, d_x, d_l must be positive".into()));
        }
        if self.mean.len() != self.d_x {
            return Err(Error::Shape("mean length != d_x".into()));
        }
        if self.covariance.rows() != self.d_x || self.covariance.cols() != self.d_x {
            return Err(Error::Shape("covariance must be d_x x d_x".into()));
        }
        if self.beta_true.rows() != self.d_l || self.beta_true.cols() != self.d_x + 1 {
            return Err(Error::Shape("beta_true must be d_l x (d_x+1)".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::Validation("noise_sigma must be >= 0".into()));
        }
        for (name, (lo, hi)) in [
            ("order", self.cost_ranges.order),
            ("backorder", self.cost_ranges.backorder),
            ("holding", self.cost_ranges.holding),
            ("ship", self.cost_ranges.ship),
        ] {
            if !(lo >= 0.0) || hi < lo {
                return Err(Error::Validation(format!("invalid {name} cost range")));
            }
        }
        Ok(())
    }

    /// Default `beta_true` for the given dimensions: intercepts from
    /// U(10, 50), slopes from U(-5, 5), drawn on the BetaTrue stream.
    pub fn default_beta_true(d_l: usize, d_x: usize, seed: u64) -> Mat {
        let mut rng = stream_rng(seed, Stream::BetaTrue);
        Mat::from_fn(d_l, d_x + 1, |_, a| {
            if a == 0 {
                rng.gen_range(10.0..50.0)
            } else {
                rng.gen_range(-5.0..5.0)
            }
        })
    }
}

fn symmetrize(m: &Mat) -> Mat {
    Mat::from_fn(m.rows(), m.cols(), |i, j| 0.5 * (m.get(i, j) + m.get(j, i)))
}

/// Draws `n` feature rows i.i.d. from N(mean, covariance) via the
/// semidefinite Cholesky factor of the symmetrized covariance (jittered by
/// 1e-10 on the diagonal if needed). A zero covariance degenerates to
/// constant rows equal to the mean.
pub fn gen_features(cfg: &GenConfig) -> Result<Mat> {
    cfg.validate()?;
    let sym = symmetrize(&cfg.covariance);
    let l = match cholesky_psd(&sym, 1e-12) {
        Ok(l) => l,
        Err(_) => {
            let jittered = Mat::from_fn(sym.rows(), sym.cols(), |i, j| {
                sym.get(i, j) + if i == j { 1e-10 } else { 0.0 }
            });
            cholesky_psd(&jittered, 1e-12).map_err(|_| {
                Error::Validation(
                    "covariance is not positive semidefinite after symmetrization and jitter".into(),
                )
            })?
        }
    };
    let mut rng = stream_rng(cfg.seed, Stream::Features);
    let d = cfg.d_x;
    let mut out = Mat::zeros(cfg.n, d);
    let mut z = vec![0.0; d];
    for i in 0..cfg.n {
        for zf in z.iter_mut() {
            *zf = rng.sample(StandardNormal);
        }
        for f in 0..d {
            let mut v = cfg.mean[f];
            for (k, &zk) in z.iter().enumerate().take(f + 1) {
                v += l.get(f, k) * zk;
            }
            out.set(i, f, v);
        }
    }
    Ok(out)
}

/// Responses `Y[i][j] = beta[j][0] + sum_f beta[j][f+1] X[i][f] + sigma * eps`
/// with standard-normal noise on the Noise stream. No clipping.
pub fn gen_responses(features: &Mat, beta_true: &Mat, noise_sigma: f64, seed: u64) -> Result<Mat> {
    if beta_true.cols() != features.cols() + 1 {
        return Err(Error::Shape("beta_true width must be d_x + 1".into()));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::Validation("noise_sigma must be >= 0".into()));
    }
    let params = RegressionParams::new(beta_true.clone())?;
    let mut rng = stream_rng(seed, Stream::Noise);
    let mut out = Mat::zeros(features.rows(), beta_true.rows());
    for i in 0..features.rows() {
        let mean = regression::predict(&params, features.row(i))?;
        for (j, &mj) in mean.iter().enumerate() {
            let eps: f64 = rng.sample(StandardNormal);
            out.set(i, j, mj + noise_sigma * eps);
        }
    }
    Ok(out)
}

fn uniform_mat(rng: &mut ChaCha12Rng, rows: usize, cols: usize, range: (f64, f64)) -> Mat {
    Mat::from_fn(rows, cols, |_, _| {
        if range.1 > range.0 {
            rng.gen_range(range.0..range.1)
        } else {
            range.0
        }
    })
}

/// Draws per-scenario cost data on the Costs stream. Newsvendor draws the
/// order, backorder, and holding matrices in that fixed order; shipment
/// draws the `n` shipping matrices row-major.
pub fn gen_costs(cfg: &GenConfig, kind: ProblemKind) -> Result<ProblemInstance> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, Stream::Costs);
    match kind {
        ProblemKind::Newsvendor => {
            let c = uniform_mat(&mut rng, cfg.n, cfg.d_l, cfg.cost_ranges.order);
            let b = uniform_mat(&mut rng, cfg.n, cfg.d_l, cfg.cost_ranges.backorder);
            let h = uniform_mat(&mut rng, cfg.n, cfg.d_l, cfg.cost_ranges.holding);
            Ok(ProblemInstance::Newsvendor(NewsvendorInstance::new(c, b, h)?))
        }
        ProblemKind::Shipment => {
            if cfg.d_w == 0 {
                return Err(Error::Validation("shipment needs d_w >= 1".into()));
            }
            let ship = (0..cfg.n)
                .map(|_| uniform_mat(&mut rng, cfg.d_w, cfg.d_l, cfg.cost_ranges.ship))
                .collect();
            Ok(ProblemInstance::Shipment(ShipmentInstance::new(
                cfg.cost_ranges.advance_cost,
                cfg.cost_ranges.lastminute_cost,
                ship,
            )?))
        }
    }
}

/// Generates the full `(Dataset, ProblemInstance)` pair for a config.
pub fn gen_dataset(cfg: &GenConfig, kind: ProblemKind) -> Result<(Dataset, ProblemInstance)> {
    let x = gen_features(cfg)?;
    let y = gen_responses(&x, &cfg.beta_true, cfg.noise_sigma, cfg.seed)?;
    let data = Dataset::new(x, y, (0..cfg.n).collect())?;
    let inst = gen_costs(cfg, kind)?;
    Ok((data, inst))
}

/// Mean R-square of a least-squares fit with intercept across response
/// columns; a zero-variance column contributes zero.
pub fn measure_r2(features: &Mat, responses: &Mat) -> Result<f64> {
    let params = regression::ols_fit(features, responses)?;
    let sse = regression::sse_per_column(&params, features, responses)?;
    let n = responses.rows();
    let mut total = 0.0;
    for j in 0..responses.cols() {
        let mean: f64 = (0..n).map(|i| responses.get(i, j)).sum::<f64>() / n as f64;
        let sst: f64 = (0..n).map(|i| (responses.get(i, j) - mean).powi(2)).sum();
        if sst > 1e-12 {
            total += 1.0 - sse[j] / sst;
        }
        // else: contributes 0 by convention
    }
    Ok(total / responses.cols() as f64)
}

/// Noise level whose measured R-square on a large seeded sample hits
/// `target_r2` within `tol`, found by bisection. Errors when the target is
/// unreachable with the configured `beta_true`.
pub fn calibrate_sigma(target_r2: f64, cfg: &GenConfig, tol: f64) -> Result<f64> {
    if !(target_r2 > 0.0 && target_r2 < 1.0) {
        return Err(Error::Calibration(format!(
            "target R-square must be strictly inside (0, 1), got {target_r2}"
        )));
    }
    let mut cal_cfg = cfg.clone();
    cal_cfg.n = cfg.n.max(2000);
    let x = gen_features(&cal_cfg)?;
    // The noise stream is fixed while sigma scales it, so measured R-square
    // is strictly decreasing in sigma and bisection is clean.
    let measured = |sigma: f64| -> Result<f64> {
        let y = gen_responses(&x, &cal_cfg.beta_true, sigma, cal_cfg.seed)?;
        measure_r2(&x, &y)
    };
    let at_zero = measured(0.0)?;
    if at_zero < target_r2 {
        return Err(Error::Calibration(format!(
            "target {target_r2} unreachable: noiseless R-square is {at_zero:.6}"
        )));
    }
    let mut hi = 1.0;
    let mut grow = 0;
    while measured(hi)? > target_r2 {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::Calibration("sigma search did not bracket target".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r2 = measured(mid)?;
        if (r2 - target_r2).abs() <= tol {
            return Ok(mid);
        }
        if r2 > target_r2 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Calibration(format!(
        "bisection failed to reach tolerance {tol}"
    )))
}

/// Split fractions for train/validation/test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fractions: (f64, f64, f64),
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = self.fractions;
        if !(a > 0.0 && b > 0.0 && c > 0.0) {
            return Err(Error::Validation("split fractions must be positive".into()));
        }
        if (a + b + c - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "split fractions must sum to 1, got {}",
                a + b + c
            )));
        }
        Ok(())
    }
}

/// One split of a dataset and its cost rows.
#[derive(Debug, Clone)]
pub struct SplitOut {
    pub train: (Dataset, ProblemInstance),
    pub valid: (Dataset, ProblemInstance),
    pub test: (Dataset, ProblemInstance),
    /// Row positions (into the unsplit data) of each part.
    pub train_rows: Vec<usize>,
    pub valid_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Largest-remainder apportionment of `n` rows to the three fractions.
fn split_sizes(n: usize, fractions: (f64, f64, f64)) -> [usize; 3] {
    let fr = [fractions.0, fractions.1, fractions.2];
    let ideal: Vec<f64> = fr.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = ideal.iter().map(|v| v.floor() as usize).collect();
    let mut rest: usize = n - sizes.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        (ideal[b] - ideal[b].floor())
            .partial_cmp(&(ideal[a] - ideal[a].floor()))
            .unwrap()
            .then(a.cmp(&b))
    });
    for &k in &order {
        if rest == 0 {
            break;
        }
        sizes[k] += 1;
        rest -= 1;
    }
    [sizes[0], sizes[1], sizes[2]]
}

/// Disjoint train/validation/test partition by a seeded shuffle; cost rows
/// travel with their data rows.
pub fn split(data: &Dataset, inst: &ProblemInstance, spec: &SplitSpec) -> Result<SplitOut> {
    spec.validate()?;
    let n = data.n();
    if inst.n() != n {
        return Err(Error::Shape("instance/dataset row mismatch".into()));
    }
    let sizes = split_sizes(n, spec.fractions);
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Validation(format!(
            "split of {n} rows yields an empty part: {sizes:?}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(spec.seed, Stream::Splits);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    let train_rows = perm[..sizes[0]].to_vec();
    let valid_rows = perm[sizes[0]..sizes[0] + sizes[1]].to_vec();
    let test_rows = perm[sizes[0] + sizes[1]..].to_vec();
    let part = |rows: &[usize]| (data.select_rows(rows), inst.select_rows(rows));
    Ok(SplitOut {
        train: part(&train_rows),
        valid: part(&valid_rows),
        test: part(&test_rows),
        train_rows,
        valid_rows,
        test_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> GenConfig {
        let d_x = 3;
        GenConfig {
            n: 2000,
            d_x,
            d_l: 2,
            d_w: 2,
            mean: vec![0.0; d_x],
            covariance: Mat::from_rows(vec![
                vec![1.0, 0.5, -0.5],
                vec![0.5, 1.0, -0.5],
                vec![-0.5, -0.5, 1.0],
            ])
            .unwrap(),
            beta_true: GenConfig::default_beta_true(2, d_x, 7),
            noise_sigma: 1.0,
            cost_ranges: CostRanges::default(),
            seed: 7,
        }
    }

    #[test]
    fn zero_covariance_gives_constant_rows() {
        let mut cfg = small_cfg();
        cfg.covariance = Mat::zeros(3, 3);
        cfg.mean = vec![1.0, -2.0, 0.5];
        cfg.n = 50;
        let x = gen_features(&cfg).unwrap();
        for i in 0..x.rows() {
            assert_eq!(x.row(i), &[1.0, -2.0, 0.5]);
        }
    }

    #[test]
    fn unit_variances_observed() {
        let cfg = small_cfg();
        let x = gen_features(&cfg).unwrap();
        for f in 0..cfg.d_x {
            let col = x.column(f);
            let mean: f64 = col.iter().sum::<f64>() / col.len() as f64;
            let var: f64 =
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
            assert!((var - 1.0).abs() < 0.1, "column {f} variance {var}");
            assert!(mean.abs() < 0.1);
        }
    }

    #[test]
    fn sample_correlations_match_configured_covariance() {
        let cfg = small_cfg();
        let x = gen_features(&cfg).unwrap();
        let n = cfg.n as f64;
        for a in 0..3 {
            for b in 0..3 {
                let ca = x.column(a);
                let cb = x.column(b);
                let ma: f64 = ca.iter().sum::<f64>() / n;
                let mb: f64 = cb.iter().sum::<f64>() / n;
                let cov: f64 = ca
                    .iter()
                    .zip(&cb)
                    .map(|(va, vb)| (va - ma) * (vb - mb))
                    .sum::<f64>()
                    / (n - 1.0);
                assert!(
                    (cov - cfg.covariance.get(a, b)).abs() < 0.1,
                    "cov[{a}][{b}] sample {cov} configured {}",
                    cfg.covariance.get(a, b)
                );
            }
        }
    }

    #[test]
    fn same_seed_identical_output() {
        let cfg = small_cfg();
        let a = gen_features(&cfg).unwrap();
        let b = gen_features(&cfg).unwrap();
        assert_eq!(a, b);
        let ya = gen_responses(&a, &cfg.beta_true, 2.5, cfg.seed).unwrap();
        let yb = gen_responses(&b, &cfg.beta_true, 2.5, cfg.seed).unwrap();
        assert_eq!(ya, yb);
    }

    #[test]
    fn noiseless_responses_identify_beta() {
        let cfg = small_cfg();
        let x = gen_features(&cfg).unwrap();
        let y = gen_responses(&x, &cfg.beta_true, 0.0, cfg.seed).unwrap();
        let fit = regression::ols_fit(&x, &y).unwrap();
        for j in 0..cfg.d_l {
            for a in 0..=cfg.d_x {
                assert!(
                    (fit.beta.get(j, a) - cfg.beta_true.get(j, a)).abs() < 1e-8,
                    "beta[{j}][{a}]"
                );
            }
        }
        assert!((measure_r2(&x, &y).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_beta_zero_mean_responses() {
        let mut cfg = small_cfg();
        cfg.beta_true = Mat::zeros(2, 4);
        let x = gen_features(&cfg).unwrap();
        let y = gen_responses(&x, &cfg.beta_true, 1.0, cfg.seed).unwrap();
        let mean: f64 = y.data().iter().sum::<f64>() / (y.rows() * y.cols()) as f64;
        assert!(mean.abs() < 0.1);
        // Slopes carry no signal: R-square is near zero.
        assert!(measure_r2(&x, &y).unwrap().abs() < 0.05);
    }

    #[test]
    fn doubling_sigma_doubles_residual_scale() {
        let cfg = small_cfg();
        let x = gen_features(&cfg).unwrap();
        let resid_sd = |sigma: f64| {
            let y = gen_responses(&x, &cfg.beta_true, sigma, cfg.seed).unwrap();
            let fit = regression::ols_fit(&x, &y).unwrap();
            let sse: f64 = regression::sse_per_column(&fit, &x, &y).unwrap().iter().sum();
            (sse / (y.rows() * y.cols()) as f64).sqrt()
        };
        let s1 = resid_sd(1.5);
        let s2 = resid_sd(3.0);
        assert!((s2 / s1 - 2.0).abs() < 0.2, "ratio {}", s2 / s1);
    }

    #[test]
    fn cost_draws_in_support_and_mean() {
        let cfg = small_cfg();
        let inst = gen_costs(&cfg, ProblemKind::Newsvendor).unwrap();
        let ProblemInstance::Newsvendor(nv) = inst else {
            panic!()
        };
        assert!(nv
            .backorder_cost
            .data()
            .iter()
            .all(|&v| (0.0..3000.0).contains(&v)));
        assert!(nv.order_cost.data().iter().all(|&v| (0.0..300.0).contains(&v)));
        let mean: f64 =
            nv.backorder_cost.data().iter().sum::<f64>() / nv.backorder_cost.data().len() as f64;
        assert!((mean - 1500.0).abs() < 75.0, "backorder mean {mean}");
    }

    #[test]
    fn degenerate_cost_range_constant() {
        let mut cfg = small_cfg();
        cfg.n = 10;
        cfg.cost_ranges.order = (12.5, 12.5);
        let ProblemInstance::Newsvendor(nv) = gen_costs(&cfg, ProblemKind::Newsvendor).unwrap()
        else {
            panic!()
        };
        assert!(nv.order_cost.data().iter().all(|&v| v == 12.5));
    }

    #[test]
    fn calibration_boundaries_and_monotonicity() {
        let mut cfg = small_cfg();
        cfg.n = 1200; // calibration sample is max(n, 2000)
        assert!(calibrate_sigma(1.0, &cfg, 0.005).is_err());
        let tight = calibrate_sigma(0.99, &cfg, 0.005).unwrap();
        assert!(tight > 0.0);
        let mut last = 0.0;
        for target in [0.9, 0.7, 0.5, 0.3, 0.1] {
            let sigma = calibrate_sigma(target, &cfg, 0.005).unwrap();
            assert!(sigma > last, "sigma must grow as target falls");
            last = sigma;
        }
    }

    #[test]
    fn calibration_matches_analytic_variance_ratio() {
        // R2 = Var(signal) / (Var(signal) + sigma^2) for standardized noise.
        let cfg = small_cfg();
        let sigma = calibrate_sigma(0.5, &cfg, 0.002).unwrap();
        let x = gen_features(&cfg).unwrap();
        let clean = gen_responses(&x, &cfg.beta_true, 0.0, cfg.seed).unwrap();
        let mut signal_var = 0.0;
        for j in 0..cfg.d_l {
            let col = clean.column(j);
            let m: f64 = col.iter().sum::<f64>() / col.len() as f64;
            signal_var += col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
        }
        signal_var /= cfg.d_l as f64;
        let analytic = (signal_var * (1.0 - 0.5) / 0.5).sqrt();
        assert!(
            (sigma - analytic).abs() / analytic < 0.1,
            "calibrated {sigma} vs analytic {analytic}"
        );
    }

    #[test]
    fn calibration_reproduces_on_fresh_seed() {
        let cfg = small_cfg();
        let tol = 0.004;
        let sigma = calibrate_sigma(0.4, &cfg, tol).unwrap();
        let mut fresh = cfg.clone();
        fresh.seed = 12345;
        fresh.n = 2000;
        let x = gen_features(&fresh).unwrap();
        let y = gen_responses(&x, &fresh.beta_true, sigma, fresh.seed).unwrap();
        let r2 = measure_r2(&x, &y).unwrap();
        assert!((r2 - 0.4).abs() < 0.05, "fresh-seed R2 {r2}");
    }

    #[test]
    fn split_sizes_and_partition() {
        let mut cfg = small_cfg();
        cfg.n = 100;
        let (data, inst) = gen_dataset(&cfg, ProblemKind::Newsvendor).unwrap();
        let spec = SplitSpec {
            fractions: (0.7, 0.15, 0.15),
            seed: 3,
        };
        let out = split(&data, &inst, &spec).unwrap();
        assert_eq!(out.train.0.n(), 70);
        assert_eq!(out.valid.0.n(), 15);
        assert_eq!(out.test.0.n(), 15);
        let mut all: Vec<usize> = out
            .train
            .0
            .ids()
            .iter()
            .chain(out.valid.0.ids())
            .chain(out.test.0.ids())
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());

        let spec2 = SplitSpec {
            fractions: (0.7, 0.15, 0.15),
            seed: 4,
        };
        let out2 = split(&data, &inst, &spec2).unwrap();
        assert_eq!(out2.train.0.n(), 70);
        assert_ne!(out.train_rows, out2.train_rows);
    }

    #[test]
    fn split_keeps_costs_with_rows() {
        let mut cfg = small_cfg();
        cfg.n = 40;
        let (data, inst) = gen_dataset(&cfg, ProblemKind::Newsvendor).unwrap();
        let spec = SplitSpec {
            fractions: (0.5, 0.25, 0.25),
            seed: 9,
        };
        let out = split(&data, &inst, &spec).unwrap();
        let ProblemInstance::Newsvendor(full) = &inst else { panic!() };
        let ProblemInstance::Newsvendor(tr) = &out.train.1 else {
            panic!()
        };
        for (pos, &row) in out.train_rows.iter().enumerate() {
            assert_eq!(tr.order_cost.row(pos), full.order_cost.row(row));
            assert_eq!(out.train.0.ids()[pos], data.ids()[row]);
        }
    }
}
