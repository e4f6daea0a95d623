//! Ordinary least squares over an intercept-augmented design, the linear
//! predictor, and the loss functions the integrated models regularize with.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_spd, Mat};

/// Linear model coefficients, one row per response dimension; column 0 is
/// the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionParams {
    pub beta: Mat,
}

impl RegressionParams {
    pub fn new(beta: Mat) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::Validation("beta entries must be finite".into()));
        }
        if beta.cols() < 1 {
            return Err(Error::Shape("beta needs an intercept column".into()));
        }
        Ok(Self { beta })
    }

    pub fn d_l(&self) -> usize {
        self.beta.rows()
    }

    pub fn d_x(&self) -> usize {
        self.beta.cols() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    SquaredError,
    AbsoluteError,
}

const COND_JITTER_THRESHOLD: f64 = 1e12;
const RIDGE_JITTER: f64 = 1e-8;

/// Least-squares fit of `responses ~ intercept + features`, solved through
/// the normal equations per response column. If the Gram matrix condition
/// estimate exceeds 1e12 a ridge jitter of 1e-8 is added (with a warning);
/// if it still fails the fit errors out.
pub fn ols_fit(features: &Mat, responses: &Mat) -> Result<RegressionParams> {
    let n = features.rows();
    let p = features.cols() + 1;
    if responses.rows() != n {
        return Err(Error::Shape("feature/response row mismatch".into()));
    }
    if n <= p {
        return Err(Error::Validation(format!(
            "need more than {p} rows to fit, got {n}"
        )));
    }
    // Gram = D^T D over the augmented design D = [1 X].
    let mut gram = Mat::zeros(p, p);
    for i in 0..n {
        let xi = features.row(i);
        for a in 0..p {
            let va = if a == 0 { 1.0 } else { xi[a - 1] };
            for b in a..p {
                let vb = if b == 0 { 1.0 } else { xi[b - 1] };
                gram.set(a, b, gram.get(a, b) + va * vb);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram.set(a, b, gram.get(b, a));
        }
    }
    let mut rhs = Mat::zeros(p, responses.cols());
    for i in 0..n {
        let xi = features.row(i);
        let yi = responses.row(i);
        for a in 0..p {
            let va = if a == 0 { 1.0 } else { xi[a - 1] };
            for (j, &y) in yi.iter().enumerate() {
                rhs.set(a, j, rhs.get(a, j) + va * y);
            }
        }
    }

    let solved = match solve_spd(&gram, &rhs) {
        Ok((x, cond)) if cond <= COND_JITTER_THRESHOLD => Some(x),
        other => {
            if let Ok((_, cond)) = other {
                log::warn!(
                    "gram matrix condition estimate {cond:.3e} exceeds {COND_JITTER_THRESHOLD:.0e}; \
                     adding ridge jitter {RIDGE_JITTER:.0e}"
                );
            }
            None
        }
    };
    let x = match solved {
        Some(x) => x,
        None => {
            let mut jittered = gram.clone();
            for a in 0..p {
                jittered.set(a, a, jittered.get(a, a) + RIDGE_JITTER * n as f64);
            }
            let (x, _) = solve_spd(&jittered, &rhs)
                .map_err(|e| Error::Fit(format!("rank-deficient after jitter: {e}")))?;
            x
        }
    };

    // x is p x d_l; beta wants d_l x p.
    let beta = Mat::from_fn(responses.cols(), p, |j, a| x.get(a, j));
    RegressionParams::new(beta)
}

/// Affine prediction for one feature vector.
pub fn predict(params: &RegressionParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != params.d_x() {
        return Err(Error::Shape(format!(
            "predict: {} features for a model with {}",
            x.len(),
            params.d_x()
        )));
    }
    let mut out = Vec::with_capacity(params.d_l());
    for j in 0..params.d_l() {
        let row = params.beta.row(j);
        let mut v = row[0];
        for (f, &xf) in x.iter().enumerate() {
            v += row[f + 1] * xf;
        }
        out.push(v);
    }
    Ok(out)
}

/// Prediction matrix for every row of `features`.
pub fn predict_all(params: &RegressionParams, features: &Mat) -> Result<Mat> {
    let mut out = Mat::zeros(features.rows(), params.d_l());
    for i in 0..features.rows() {
        let p = predict(params, features.row(i))?;
        out.row_mut(i).copy_from_slice(&p);
    }
    Ok(out)
}

/// Mean per-entry loss of the model on `(features, responses)`.
pub fn loss(
    params: &RegressionParams,
    features: &Mat,
    responses: &Mat,
    kind: LossKind,
) -> Result<f64> {
    if features.rows() != responses.rows() || responses.cols() != params.d_l() {
        return Err(Error::Shape("loss input shapes mismatch".into()));
    }
    let n = features.rows();
    let d = responses.cols();
    let mut total = 0.0;
    for i in 0..n {
        let pred = predict(params, features.row(i))?;
        for j in 0..d {
            let r = responses.get(i, j) - pred[j];
            total += match kind {
                LossKind::SquaredError => r * r,
                LossKind::AbsoluteError => r.abs(),
            };
        }
    }
    Ok(total / (n * d) as f64)
}

/// Per-column sums of squared residuals; shared between `loss` and the
/// R-square measurement so both use the same definition.
pub fn sse_per_column(params: &RegressionParams, features: &Mat, responses: &Mat) -> Result<Vec<f64>> {
    if features.rows() != responses.rows() || responses.cols() != params.d_l() {
        return Err(Error::Shape("sse input shapes mismatch".into()));
    }
    let mut sse = vec![0.0; responses.cols()];
    for i in 0..features.rows() {
        let pred = predict(params, features.row(i))?;
        for (j, s) in sse.iter_mut().enumerate() {
            let r = responses.get(i, j) - pred[j];
            *s += r * r;
        }
    }
    Ok(sse)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: Vec<Vec<f64>>) -> Mat {
        Mat::from_rows(rows).unwrap()
    }

    #[test]
    fn two_points_determine_a_line() {
        // (0,1), (1,3) plus a third collinear point to satisfy n > p.
        let x = mat(vec![vec![0.0], vec![1.0], vec![2.0]]);
        let y = mat(vec![vec![1.0], vec![3.0], vec![5.0]]);
        let p = ols_fit(&x, &y).unwrap();
        assert!((p.beta.get(0, 0) - 1.0).abs() < 1e-10);
        assert!((p.beta.get(0, 1) - 2.0).abs() < 1e-10);
    }

    #[test]
    fn identity_line() {
        let x = mat(vec![vec![0.0], vec![1.0], vec![2.0]]);
        let y = mat(vec![vec![0.0], vec![1.0], vec![2.0]]);
        let p = ols_fit(&x, &y).unwrap();
        assert!(p.beta.get(0, 0).abs() < 1e-10);
        assert!((p.beta.get(0, 1) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hand_solved_normal_equations() {
        // (0,1), (1,2), (2,2): intercept 7/6, slope 1/2.
        let x = mat(vec![vec![0.0], vec![1.0], vec![2.0]]);
        let y = mat(vec![vec![1.0], vec![2.0], vec![2.0]]);
        let p = ols_fit(&x, &y).unwrap();
        assert!((p.beta.get(0, 0) - 7.0 / 6.0).abs() < 1e-10);
        assert!((p.beta.get(0, 1) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn residuals_orthogonal_to_design() {
        let x = mat(vec![
            vec![0.1, 1.0],
            vec![0.7, -0.3],
            vec![1.4, 0.2],
            vec![-0.5, 0.9],
            vec![0.3, -1.1],
        ]);
        let y = mat(vec![vec![1.0], vec![0.2], vec![2.4], vec![-0.7], vec![0.9]]);
        let p = ols_fit(&x, &y).unwrap();
        let mut dot_intercept = 0.0;
        let mut dot = vec![0.0; 2];
        for i in 0..5 {
            let r = y.get(i, 0) - predict(&p, x.row(i)).unwrap()[0];
            dot_intercept += r;
            for f in 0..2 {
                dot[f] += r * x.get(i, f);
            }
        }
        assert!(dot_intercept.abs() < 1e-8);
        assert!(dot.iter().all(|d| d.abs() < 1e-8));
    }

    #[test]
    fn predict_examples() {
        let p = RegressionParams::new(mat(vec![vec![1.0, 2.0]])).unwrap();
        assert_eq!(predict(&p, &[3.0]).unwrap(), vec![7.0]);
        let zero_slope = RegressionParams::new(mat(vec![vec![4.0, 0.0], vec![-1.0, 0.0]])).unwrap();
        assert_eq!(predict(&zero_slope, &[100.0]).unwrap(), vec![4.0, -1.0]);
    }

    #[test]
    fn loss_examples() {
        let p = RegressionParams::new(mat(vec![vec![0.0, 1.0]])).unwrap();
        let x = mat(vec![vec![1.0], vec![2.0]]);
        let exact = mat(vec![vec![1.0], vec![2.0]]);
        assert_eq!(loss(&p, &x, &exact, LossKind::SquaredError).unwrap(), 0.0);
        let off_by_one = mat(vec![vec![2.0], vec![3.0]]);
        assert_eq!(loss(&p, &x, &off_by_one, LossKind::SquaredError).unwrap(), 1.0);
        // residuals {-2, 2}
        let pm2 = mat(vec![vec![-1.0], vec![4.0]]);
        assert_eq!(loss(&p, &x, &pm2, LossKind::AbsoluteError).unwrap(), 2.0);
        assert_eq!(loss(&p, &x, &pm2, LossKind::SquaredError).unwrap(), 4.0);
    }

    #[test]
    fn intercept_only_returns_column_means() {
        let x = Mat::zeros(4, 0);
        let y = mat(vec![vec![1.0, 10.0], vec![2.0, 20.0], vec![3.0, 30.0], vec![2.0, 20.0]]);
        let p = ols_fit(&x, &y).unwrap();
        assert!((p.beta.get(0, 0) - 2.0).abs() < 1e-12);
        assert!((p.beta.get(1, 0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn ols_is_a_local_squared_loss_minimum() {
        let x = mat(vec![
            vec![0.3, -0.2],
            vec![1.1, 0.4],
            vec![-0.6, 0.9],
            vec![0.2, -1.3],
            vec![0.8, 0.6],
            vec![-1.0, 0.1],
        ]);
        let y = mat(vec![
            vec![1.2],
            vec![2.3],
            vec![0.1],
            vec![-0.5],
            vec![1.9],
            vec![-0.2],
        ]);
        let fit = ols_fit(&x, &y).unwrap();
        let base = loss(&fit, &x, &y, LossKind::SquaredError).unwrap();
        let mut rng = lin_solver::Rng::new(9);
        for _ in 0..100 {
            let mut beta = fit.beta.clone();
            for j in 0..beta.rows() {
                for a in 0..beta.cols() {
                    beta.set(j, a, beta.get(j, a) + rng.range(-0.1, 0.1));
                }
            }
            let perturbed = RegressionParams::new(beta).unwrap();
            let l = loss(&perturbed, &x, &y, LossKind::SquaredError).unwrap();
            assert!(l >= base - 1e-10);
        }
    }
}
