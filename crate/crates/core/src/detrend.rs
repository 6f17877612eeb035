use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{degenerate, validation, Result};

/// Deterministic component of a test or simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Deterministic {
    None,
    Intercept,
    InterceptTrend,
}

impl Deterministic {
    pub fn n_terms(self) -> usize {
        match self {
            Deterministic::None => 0,
            Deterministic::Intercept => 1,
            Deterministic::InterceptTrend => 2,
        }
    }
}

impl std::fmt::Display for Deterministic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Deterministic::None => "none",
            Deterministic::Intercept => "intercept",
            Deterministic::InterceptTrend => "intercept and trend",
        })
    }
}

/// First-stage detrending method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetrendMethod {
    Ols,
    Qd,
}

impl std::fmt::Display for DetrendMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetrendMethod::Ols => "OLS",
            DetrendMethod::Qd => "QD",
        })
    }
}

/// Deterministic component plus detrending method for one test variant.
#[derive(Debug, Clone, Copy)]
pub struct DetrendSpec {
    pub dc: Deterministic,
    pub method: DetrendMethod,
    /// QD noncentrality constant; `None` resolves to 7 (intercept) or
    /// 13.5 (intercept and trend).
    pub qd_c: Option<f64>,
}

impl DetrendSpec {
    pub fn new(dc: Deterministic, method: DetrendMethod) -> Self {
        DetrendSpec {
            dc,
            method,
            qd_c: None,
        }
    }

    pub fn resolved_qd_c(&self) -> f64 {
        self.qd_c.unwrap_or(match self.dc {
            Deterministic::InterceptTrend => 13.5,
            _ => 7.0,
        })
    }

    /// Applies the detrending stage. QD with `dc = none` degenerates to no
    /// detrending.
    pub fn detrend(&self, y: &[f64]) -> Result<DetrendResult> {
        match (self.dc, self.method) {
            (Deterministic::None, _) => detrend_ols(y, Deterministic::None),
            (dc, DetrendMethod::Ols) => detrend_ols(y, dc),
            (dc, DetrendMethod::Qd) => detrend_qd(y, dc, self.resolved_qd_c()),
        }
    }
}

/// Output of a detrending stage: the series with the fitted deterministic
/// part removed (masked boundary positions preserved) and the coefficients.
#[derive(Debug, Clone)]
pub struct DetrendResult {
    pub detrended: Vec<f64>,
    pub beta_hat: Vec<f64>,
}

/// The contiguous non-NaN stretch of a series, as `(start, values)`.
/// Leading and trailing NaNs are permitted; internal ones are not.
pub(crate) fn slice_window(y: &[f64]) -> Result<(usize, &[f64])> {
    let first = y
        .iter()
        .position(|v| !v.is_nan())
        .ok_or_else(|| validation("series is entirely missing"))?;
    let last = y.iter().rposition(|v| !v.is_nan()).expect("non-empty");
    let w = &y[first..=last];
    if w.iter().any(|v| v.is_nan()) {
        return Err(validation("series has in-sample missing values"));
    }
    Ok((first, w))
}

fn repad(y: &[f64], start: usize, core: Vec<f64>) -> Vec<f64> {
    let mut out = vec![f64::NAN; y.len()];
    out[start..start + core.len()].copy_from_slice(&core);
    out
}

fn deterministic_row(dc: Deterministic, t: usize) -> Vec<f64> {
    match dc {
        Deterministic::None => vec![],
        Deterministic::Intercept => vec![1.0],
        Deterministic::InterceptTrend => vec![1.0, t as f64],
    }
}

fn solve_ls(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let gram = x.transpose() * x;
    let xty = x.transpose() * y;
    let chol = Cholesky::new(gram)
        .ok_or_else(|| degenerate("collinear deterministic regressors"))?;
    Ok(chol.solve(&xty))
}

/// OLS regression of the series on its deterministic terms; returns the
/// residual series on the original scale.
pub fn detrend_ols(y: &[f64], dc: Deterministic) -> Result<DetrendResult> {
    let (start, w) = slice_window(y)?;
    let k = dc.n_terms();
    if k == 0 {
        return Ok(DetrendResult {
            detrended: y.to_vec(),
            beta_hat: vec![],
        });
    }
    if w.len() < k + 1 {
        return Err(validation(format!(
            "{} observations are too few to fit `{dc}`",
            w.len()
        )));
    }
    let m = w.len();
    let x = DMatrix::from_fn(m, k, |r, c| deterministic_row(dc, r + 1)[c]);
    let beta = solve_ls(&x, &DVector::from_column_slice(w))?;
    let core = (0..m)
        .map(|r| {
            let d = deterministic_row(dc, r + 1);
            w[r] - d.iter().zip(beta.iter()).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    Ok(DetrendResult {
        detrended: repad(y, start, core),
        beta_hat: beta.iter().copied().collect(),
    })
}

/// Quasi-differenced (GLS) detrending: the regression runs on
/// `y_t - (1 - c/T) y_{t-1}` (first observation untransformed), and the
/// fitted deterministic part is removed from the series on the original
/// scale.
pub fn detrend_qd(y: &[f64], dc: Deterministic, qd_c: f64) -> Result<DetrendResult> {
    if dc == Deterministic::None {
        return Err(validation("QD detrending requires a deterministic component"));
    }
    if qd_c <= 0.0 {
        return Err(validation("the QD constant must be positive"));
    }
    let (start, w) = slice_window(y)?;
    let k = dc.n_terms();
    if w.len() < k + 1 {
        return Err(validation(format!(
            "{} observations are too few to fit `{dc}`",
            w.len()
        )));
    }
    let m = w.len();
    let abar = 1.0 - qd_c / m as f64;
    let mut x = DMatrix::zeros(m, k);
    let mut u = DVector::zeros(m);
    for r in 0..m {
        let d = deterministic_row(dc, r + 1);
        if r == 0 {
            u[0] = w[0];
            for c in 0..k {
                x[(0, c)] = d[c];
            }
        } else {
            let d_prev = deterministic_row(dc, r);
            u[r] = w[r] - abar * w[r - 1];
            for c in 0..k {
                x[(r, c)] = d[c] - abar * d_prev[c];
            }
        }
    }
    let beta = solve_ls(&x, &u)?;
    let core = (0..m)
        .map(|r| {
            let d = deterministic_row(dc, r + 1);
            w[r] - d.iter().zip(beta.iter()).map(|(a, b)| a * b).sum::<f64>()
        })
        .collect();
    Ok(DetrendResult {
        detrended: repad(y, start, core),
        beta_hat: beta.iter().copied().collect(),
    })
}
