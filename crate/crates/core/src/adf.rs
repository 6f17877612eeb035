use nalgebra::{Cholesky, DMatrix, DVector};

use crate::detrend::{detrend_ols, slice_window, DetrendMethod, DetrendSpec, Deterministic};
use crate::error::{degenerate, validation, Result};

/// Lag-length selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Aic,
    Bic,
    Maic,
    Mbic,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criterion::Aic => "AIC",
            Criterion::Bic => "BIC",
            Criterion::Maic => "MAIC",
            Criterion::Mbic => "MBIC",
        })
    }
}

/// How the ADF lag length is chosen.
#[derive(Debug, Clone, Copy)]
pub struct LagPolicy {
    pub p_min: usize,
    /// Upper bound of the lag search; `None` resolves to
    /// floor(12 (T/100)^(1/4)) for the sample at hand.
    pub p_max: Option<usize>,
    pub criterion: Criterion,
    /// Select on a variance-rescaled copy of the series.
    pub rescale: bool,
}

impl Default for LagPolicy {
    fn default() -> Self {
        LagPolicy {
            p_min: 0,
            p_max: None,
            criterion: Criterion::Maic,
            rescale: true,
        }
    }
}

impl LagPolicy {
    /// Forces the fixed lag `p` (no data-driven selection).
    pub fn fixed(p: usize) -> Self {
        LagPolicy {
            p_min: p,
            p_max: Some(p),
            criterion: Criterion::Maic,
            rescale: false,
        }
    }
}

/// Default lag-search upper bound for a sample of length `t`.
pub fn auto_p_max(t: usize) -> usize {
    let rule = (12.0 * (t as f64 / 100.0).powf(0.25)).floor() as usize;
    rule.min(t.saturating_sub(3) / 2)
}

/// A fitted ADF regression on a detrended series.
#[derive(Debug, Clone)]
pub struct AdfFit {
    pub p: usize,
    pub gamma_hat: f64,
    pub phi_hat: Vec<f64>,
    /// Regression residuals, one per effective observation (t = p+2..T of
    /// the observed window).
    pub residuals: Vec<f64>,
    /// First differences net of the fitted level term, t = 2..T of the
    /// observed window.
    pub u_hat: Vec<f64>,
    pub tstat: f64,
}

/// OLS fit of the ADF regression at lag `p`: the first difference on the
/// lagged level and `p` lagged differences, no deterministic terms.
pub fn adf_regress(yd: &[f64], p: usize) -> Result<AdfFit> {
    let (_, w) = slice_window(yd)?;
    let m = w.len();
    if m < 2 * p + 3 {
        return Err(validation(format!(
            "{m} observations are too few for an ADF regression with {p} lags"
        )));
    }
    let n = m - 1 - p;
    let dz: Vec<f64> = w.windows(2).map(|pair| pair[1] - pair[0]).collect();

    let ncol = p + 1;
    let mut x = DMatrix::zeros(n, ncol);
    let mut y = DVector::zeros(n);
    for (row, t) in (p + 1..m).enumerate() {
        y[row] = dz[t - 1];
        x[(row, 0)] = w[t - 1];
        for j in 1..=p {
            x[(row, j)] = dz[t - j - 1];
        }
    }
    let gram = x.transpose() * &x;
    let chol = Cholesky::new(gram)
        .ok_or_else(|| degenerate("collinear regressors in the ADF regression"))?;
    let xty = x.transpose() * &y;
    let b = chol.solve(&xty);

    let fitted = &x * &b;
    let residuals: Vec<f64> = (0..n).map(|r| y[r] - fitted[r]).collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let dof = n - p - 1;
    let sigma2 = ssr / dof as f64;
    let inv00 = chol.inverse()[(0, 0)];
    let se = (sigma2 * inv00).sqrt();
    let tstat = b[0] / se;
    if !tstat.is_finite() {
        return Err(degenerate(
            "degenerate ADF regression (zero residual variance)",
        ));
    }

    let gamma_hat = b[0];
    let u_hat: Vec<f64> = (1..m).map(|t| dz[t - 1] - gamma_hat * w[t - 1]).collect();
    Ok(AdfFit {
        p,
        gamma_hat,
        phi_hat: b.iter().skip(1).copied().collect(),
        residuals,
        u_hat,
        tstat,
    })
}

/// Regression pieces shared by every candidate lag: all candidates are
/// estimated on the common sample t = p_max+2..T, so their designs are
/// nested and one cross-product matrix serves the whole scan.
struct CommonDesign {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    syy: f64,
    n_eff: usize,
}

impl CommonDesign {
    fn new(w: &[f64], p_max: usize) -> Result<CommonDesign> {
        let m = w.len();
        if m < 2 * p_max + 3 {
            return Err(validation(format!(
                "maximum lag {p_max} is too large for {m} observations"
            )));
        }
        let n_eff = m - 1 - p_max;
        let dz: Vec<f64> = w.windows(2).map(|pair| pair[1] - pair[0]).collect();
        let ncol = p_max + 1;
        let mut x = DMatrix::zeros(n_eff, ncol);
        let mut y = DVector::zeros(n_eff);
        for (row, t) in (p_max + 1..m).enumerate() {
            y[row] = dz[t - 1];
            x[(row, 0)] = w[t - 1];
            for j in 1..=p_max {
                x[(row, j)] = dz[t - j - 1];
            }
        }
        let gram = x.transpose() * &x;
        let xty = x.transpose() * &y;
        let syy = y.dot(&y);
        Ok(CommonDesign {
            gram,
            xty,
            syy,
            n_eff,
        })
    }

    /// SSR and gamma_hat for the candidate using the leading 1+k columns.
    fn fit(&self, k: usize) -> Result<(f64, f64)> {
        let dim = k + 1;
        let g = self.gram.view((0, 0), (dim, dim)).into_owned();
        let v = self.xty.rows(0, dim).into_owned();
        let chol = Cholesky::new(g)
            .ok_or_else(|| degenerate("collinear regressors in the lag-selection scan"))?;
        let b = chol.solve(&v);
        let ssr = (self.syy - b.dot(&v)).max(0.0);
        Ok((ssr, b[0]))
    }

    fn ic(&self, k: usize, criterion: Criterion) -> Result<f64> {
        let (ssr, gamma) = self.fit(k)?;
        let sigma2 = ssr / self.n_eff as f64;
        if sigma2 <= 0.0 || !sigma2.is_finite() {
            return Err(degenerate("zero residual variance in lag selection"));
        }
        let t_eff = self.n_eff as f64;
        let base = match criterion {
            Criterion::Aic | Criterion::Maic => 2.0,
            Criterion::Bic | Criterion::Mbic => t_eff.ln(),
        };
        let penalty = match criterion {
            Criterion::Aic | Criterion::Bic => k as f64 * base / t_eff,
            Criterion::Maic | Criterion::Mbic => {
                let xi = gamma * gamma * self.gram[(0, 0)] / sigma2;
                k as f64 * (base + xi) / t_eff
            }
        };
        Ok(sigma2.ln() + penalty)
    }
}

/// Information-criterion value for candidate lag `k`, with all candidates
/// sharing the effective sample implied by `p_max`.
pub fn ic_value(yd: &[f64], k: usize, p_max: usize, criterion: Criterion) -> Result<f64> {
    if k > p_max {
        return Err(validation(format!("candidate lag {k} exceeds p_max {p_max}")));
    }
    let (_, w) = slice_window(yd)?;
    CommonDesign::new(w, p_max)?.ic(k, criterion)
}

/// Chooses the ADF lag by minimizing the policy's criterion over
/// [p_min, p_max], ties going to the smallest lag.
///
/// QD-detrended tests must select on the OLS-detrended series, supplied as
/// `yd_for_selection`; with `policy.rescale` the selection series is
/// variance-rescaled first.
pub fn select_lag(yd: &[f64], policy: &LagPolicy, yd_for_selection: Option<&[f64]>) -> Result<usize> {
    let series = yd_for_selection.unwrap_or(yd);
    let (_, w) = slice_window(series)?;
    let p_max = match policy.p_max {
        Some(p) => p,
        None => auto_p_max(w.len()),
    };
    if policy.p_min > p_max {
        return Err(validation(format!(
            "p_min {} exceeds p_max {p_max}",
            policy.p_min
        )));
    }
    if policy.p_min == p_max {
        return Ok(p_max);
    }
    let rescaled;
    let sel: &[f64] = if policy.rescale {
        rescaled = rescale_core(w)?;
        &rescaled
    } else {
        w
    };
    let design = CommonDesign::new(sel, p_max)?;
    let mut best = (policy.p_min, f64::INFINITY);
    for k in policy.p_min..=p_max {
        let value = design.ic(k, policy.criterion)?;
        if value < best.1 {
            best = (k, value);
        }
    }
    Ok(best.0)
}

/// Divides a series by a nonparametric estimate of the local standard
/// deviation of its first differences, then rebuilds the levels from the
/// rescaled differences.
pub fn rescale_series(y: &[f64]) -> Result<Vec<f64>> {
    let (start, w) = slice_window(y)?;
    let core = rescale_core(w)?;
    let mut out = vec![f64::NAN; y.len()];
    out[start..start + core.len()].copy_from_slice(&core);
    Ok(out)
}

fn rescale_core(w: &[f64]) -> Result<Vec<f64>> {
    let m = w.len();
    if m < 10 {
        return Err(validation(format!(
            "{m} observations are too few for variance rescaling"
        )));
    }
    let d2: Vec<f64> = w.windows(2).map(|p| (p[1] - p[0]).powi(2)).collect();
    if d2.iter().all(|&v| v == 0.0) {
        return Err(degenerate("cannot rescale a constant series"));
    }
    // Gaussian kernel smoother of the squared differences over the time
    // index; Silverman bandwidth with sd(t) of a uniform grid. The kernel
    // only depends on |t - s|, so one table serves every position.
    let bw = 1.06 * (m as f64 / 12f64.sqrt()) * (m as f64).powf(-0.2);
    let kernel: Vec<f64> = (0..m)
        .map(|d| {
            let z = d as f64 / bw;
            (-0.5 * z * z).exp()
        })
        .collect();
    let mut s = Vec::with_capacity(m);
    for t in 1..=m {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, v) in d2.iter().enumerate() {
            let k = kernel[t.abs_diff(i + 2)];
            num += k * v;
            den += k;
        }
        let var = num / den;
        if var <= 0.0 || !var.is_finite() {
            return Err(degenerate("degenerate variance estimate while rescaling"));
        }
        s.push(var.sqrt());
    }
    let mut out = Vec::with_capacity(m);
    out.push(w[0] / s[1]);
    for t in 1..m {
        let prev = out[t - 1];
        out.push(prev + (w[t] - w[t - 1]) / s[t]);
    }
    Ok(out)
}

/// The two-step test statistic: detrend, select the lag (on OLS-detrended
/// data for QD tests), and run the ADF regression at the chosen lag.
pub fn adf_statistic(y: &[f64], dspec: &DetrendSpec, policy: &LagPolicy) -> Result<AdfFit> {
    let detrended = dspec.detrend(y)?.detrended;
    let p = if dspec.method == DetrendMethod::Qd && dspec.dc != Deterministic::None {
        let ols = detrend_ols(y, dspec.dc)?.detrended;
        select_lag(&detrended, policy, Some(&ols))?
    } else {
        select_lag(&detrended, policy, None)?
    };
    adf_regress(&detrended, p)
}
