use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::adf::{adf_regress, select_lag, LagPolicy};
use crate::detrend::{detrend_ols, DetrendSpec};
use crate::error::{validation, Result};
use crate::panel::Panel;

/// Resampling scheme for the bootstrap null distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BootMethod {
    /// Sieve bootstrap: iid residual resampling recolored through the
    /// fitted AR filter.
    Sb,
    /// Moving-block bootstrap of the ADF residuals.
    Mbb,
    /// Sieve wild bootstrap: Gaussian multipliers on the ADF residuals,
    /// recolored as in SB.
    Swb,
    /// Dependent wild bootstrap: kernel-correlated Gaussian multipliers.
    Dwb,
    /// Block wild bootstrap: one Gaussian multiplier per block.
    Bwb,
    /// Autoregressive wild bootstrap: AR(1) Gaussian multipliers.
    Awb,
}

impl BootMethod {
    /// Resampling schemes draw actual residual values and therefore need a
    /// balanced panel for joint use.
    pub fn is_resampling(self) -> bool {
        matches!(self, BootMethod::Sb | BootMethod::Mbb)
    }

    /// Sieve schemes whiten through a per-series AR filter and cannot
    /// capture general cross-sectional dependence.
    pub fn is_sieve(self) -> bool {
        matches!(self, BootMethod::Sb | BootMethod::Swb)
    }
}

impl std::fmt::Display for BootMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BootMethod::Sb => "SB",
            BootMethod::Mbb => "MBB",
            BootMethod::Swb => "SWB",
            BootMethod::Dwb => "DWB",
            BootMethod::Bwb => "BWB",
            BootMethod::Awb => "AWB",
        })
    }
}

/// Bootstrap configuration shared by all test procedures.
#[derive(Debug, Clone)]
pub struct BootConfig {
    pub method: BootMethod,
    /// Number of bootstrap replications B.
    pub reps: usize,
    /// Block length / kernel width; `None` resolves to floor(1.75 T^(1/3)).
    pub l: Option<usize>,
    /// AWB autoregressive parameter; `None` resolves to 0.01^(1/l).
    pub ar_awb: Option<f64>,
    /// Significance level of the tests.
    pub level: f64,
    pub seed: u64,
    /// Parallel lanes for the replication loop; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for BootConfig {
    fn default() -> Self {
        BootConfig {
            method: BootMethod::Awb,
            reps: 1999,
            l: None,
            ar_awb: None,
            level: 0.05,
            seed: 1,
            workers: None,
        }
    }
}

/// Default block length for a sample of length `t`.
pub fn auto_block_length(t: usize) -> usize {
    ((1.75 * (t as f64).cbrt()).floor() as usize).max(1)
}

impl BootConfig {
    pub fn resolved_l(&self, t: usize) -> usize {
        self.l.unwrap_or_else(|| auto_block_length(t))
    }

    pub fn resolved_gamma(&self, t: usize) -> f64 {
        self.ar_awb
            .unwrap_or_else(|| 0.01f64.powf(1.0 / self.resolved_l(t) as f64))
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(validation("the number of bootstrap replications must be positive"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(validation("level must lie strictly between 0 and 1"));
        }
        if self.l == Some(0) {
            return Err(validation("block length must be positive"));
        }
        if let Some(g) = self.ar_awb {
            if !(g > 0.0 && g < 1.0) {
                return Err(validation("ar_awb must lie strictly between 0 and 1"));
            }
        }
        if self.workers == Some(0) {
            return Err(validation("workers must be positive"));
        }
        Ok(())
    }
}

/// Estimated ADF residuals of one series, the raw material of every scheme.
#[derive(Debug, Clone)]
pub struct SeriesResiduals {
    /// 0-based calendar row of the series' first observation.
    pub start: usize,
    /// Observed window length.
    pub len: usize,
    /// Selected ADF lag.
    pub p: usize,
    pub phi_hat: Vec<f64>,
    /// Level residuals u_hat, calendar rows start+1..start+len-1, centered.
    pub u_hat: Vec<f64>,
    /// ADF innovation residuals over the same rows (pre-sample lagged
    /// differences taken as zero), centered.
    pub eps_hat: Vec<f64>,
}

/// Residuals for every series plus the panel's calendar length.
#[derive(Debug, Clone)]
pub struct ResidualSet {
    pub series: Vec<SeriesResiduals>,
    pub rows: usize,
}

impl ResidualSet {
    /// Number of calendar positions carrying residuals (rows 2..T).
    fn multiplier_len(&self) -> usize {
        self.rows - 1
    }

    fn common_window(&self) -> Result<(usize, usize)> {
        let first = &self.series[0];
        if self
            .series
            .iter()
            .any(|s| s.start != first.start || s.len != first.len)
        {
            return Err(validation(
                "resampling bootstrap methods need all series observed over the same range",
            ));
        }
        Ok((first.start, first.len))
    }

    /// Longest observed window, the effective sample length for tuning
    /// defaults.
    pub fn max_window(&self) -> usize {
        self.series.iter().map(|s| s.len).max().unwrap_or(0)
    }
}

/// Runs the ADF estimation stage of the bootstrap on every series: OLS
/// detrending with `dspec.dc`, lag selection per `policy`, and both residual
/// sets, centered to mean zero.
pub fn estimate_residuals(
    panel: &Panel,
    dspec: &DetrendSpec,
    policy: &LagPolicy,
) -> Result<ResidualSet> {
    let mut series = Vec::with_capacity(panel.n_series());
    for i in 0..panel.n_series() {
        let (start, w) = panel.series_window(i)?;
        let zd = detrend_ols(w, dspec.dc)?.detrended;
        let p = select_lag(&zd, policy, None)?;
        let fit = adf_regress(&zd, p)?;

        let dz: Vec<f64> = zd.windows(2).map(|q| q[1] - q[0]).collect();
        let mut u_hat = fit.u_hat.clone();
        let mut eps_hat = Vec::with_capacity(u_hat.len());
        for t in 0..u_hat.len() {
            let mut lag_part = 0.0;
            for (j, phi) in fit.phi_hat.iter().enumerate() {
                if t > j {
                    lag_part += phi * dz[t - j - 1];
                }
            }
            eps_hat.push(u_hat[t] - lag_part);
        }
        center(&mut u_hat);
        center(&mut eps_hat);
        series.push(SeriesResiduals {
            start,
            len: w.len(),
            p,
            phi_hat: fit.phi_hat,
            u_hat,
            eps_hat,
        });
    }
    Ok(ResidualSet {
        series,
        rows: panel.n_rows(),
    })
}

fn center(values: &mut [f64]) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
}

/// Bootstrap errors for one series, at calendar rows
/// `start+1 .. start+values.len()`.
#[derive(Debug, Clone)]
pub struct SeriesErrors {
    pub start: usize,
    pub values: Vec<f64>,
}

/// The raw draws behind an error panel, exposed so coupling across series
/// can be checked from the outside.
#[derive(Debug, Clone)]
pub enum Draws {
    /// Resampled residual positions (SB) or block starts (MBB).
    Indices(Vec<usize>),
    /// Wild multipliers: per calendar position (SWB/DWB/AWB) or per block
    /// (BWB).
    Multipliers(Vec<f64>),
}

/// One replication's bootstrap errors u*, plus the draws that produced them.
#[derive(Debug, Clone)]
pub struct ErrorPanel {
    pub rows: usize,
    pub series: Vec<SeriesErrors>,
    pub draws: Draws,
}

fn recolor(eps_star: Vec<f64>, phi: &[f64]) -> Vec<f64> {
    if phi.is_empty() {
        return eps_star;
    }
    let mut u = Vec::with_capacity(eps_star.len());
    for (t, e) in eps_star.into_iter().enumerate() {
        let mut v = e;
        for (j, p) in phi.iter().enumerate() {
            if t > j {
                v += p * u[t - j - 1];
            }
        }
        u.push(v);
    }
    u
}

/// Sieve bootstrap errors: one uniform index sequence shared by all series,
/// recolored through each series' AR filter with zero start-up values.
pub fn gen_errors_sb(res: &ResidualSet, rng: &mut ChaCha8Rng) -> Result<ErrorPanel> {
    let (start, len) = res.common_window()?;
    let m = len - 1;
    let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
    let series = res
        .series
        .iter()
        .map(|s| {
            let eps_star: Vec<f64> = idx.iter().map(|&j| s.eps_hat[j]).collect();
            SeriesErrors {
                start,
                values: recolor(eps_star, &s.phi_hat),
            }
        })
        .collect();
    Ok(ErrorPanel {
        rows: res.rows,
        series,
        draws: Draws::Indices(idx),
    })
}

/// Moving-block bootstrap errors: common block starts across series, blocks
/// of `l` consecutive ADF residuals laid end-to-end and truncated.
pub fn gen_errors_mbb(res: &ResidualSet, l: usize, rng: &mut ChaCha8Rng) -> Result<ErrorPanel> {
    let (start, len) = res.common_window()?;
    let m = len - 1;
    if l == 0 || l > m {
        return Err(validation(format!(
            "block length {l} outside 1..={m} usable observations"
        )));
    }
    let n_blocks = m.div_ceil(l);
    let starts: Vec<usize> = (0..n_blocks).map(|_| rng.random_range(0..=m - l)).collect();
    let series = res
        .series
        .iter()
        .map(|s| {
            let mut values = Vec::with_capacity(n_blocks * l);
            for &b in &starts {
                values.extend_from_slice(&s.eps_hat[b..b + l]);
            }
            values.truncate(m);
            SeriesErrors { start, values }
        })
        .collect();
    Ok(ErrorPanel {
        rows: res.rows,
        series,
        draws: Draws::Indices(starts),
    })
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn wild_panel(res: &ResidualSet, xi: Vec<f64>, use_eps: bool) -> ErrorPanel {
    let series = res
        .series
        .iter()
        .map(|s| {
            let src = if use_eps { &s.eps_hat } else { &s.u_hat };
            let values = src
                .iter()
                .enumerate()
                .map(|(j, v)| xi[s.start + j] * v)
                .collect();
            SeriesErrors {
                start: s.start,
                values,
            }
        })
        .collect();
    ErrorPanel {
        rows: res.rows,
        series,
        draws: Draws::Multipliers(xi),
    }
}

/// Sieve wild bootstrap errors: one N(0,1) multiplier per calendar position
/// applied to the ADF residuals, then recolored as in SB.
pub fn gen_errors_swb(res: &ResidualSet, rng: &mut ChaCha8Rng) -> ErrorPanel {
    let xi = normal_vec(rng, res.multiplier_len());
    let mut panel = wild_panel(res, xi, true);
    for (errs, s) in panel.series.iter_mut().zip(&res.series) {
        let values = std::mem::take(&mut errs.values);
        errs.values = recolor(values, &s.phi_hat);
    }
    panel
}

/// Symmetric square root of the kernel covariance used by the dependent
/// wild bootstrap, cached per (dimension, kernel width).
type RootCache = Mutex<HashMap<(usize, usize), Arc<Vec<f64>>>>;

fn dwb_sigma_root(dim: usize, l: usize) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<RootCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(root) = cache.lock().unwrap().get(&(dim, l)) {
        return root.clone();
    }
    let bartlett = |d: usize| (1.0 - d as f64 / l as f64).max(0.0);
    let sigma = DMatrix::from_fn(dim, dim, |r, c| bartlett(r.abs_diff(c)));
    let eig = SymmetricEigen::new(sigma);
    let mut root = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let lambda = eig.eigenvalues[k].max(0.0).sqrt();
        let v = eig.eigenvectors.column(k);
        for r in 0..dim {
            for c in 0..dim {
                root[(r, c)] += lambda * v[r] * v[c];
            }
        }
    }
    let flat = Arc::new(root.as_slice().to_vec());
    cache
        .lock()
        .unwrap()
        .entry((dim, l))
        .or_insert_with(|| flat.clone())
        .clone()
}

#[cfg(test)]
pub(crate) fn dwb_root_for_tests(dim: usize, l: usize) -> Arc<Vec<f64>> {
    dwb_sigma_root(dim, l)
}

/// Dependent wild bootstrap errors: multipliers xi = Sigma^(1/2) zeta with
/// Sigma the Bartlett-kernel Toeplitz matrix, applied to the level
/// residuals u_hat.
pub fn gen_errors_dwb(res: &ResidualSet, l: usize, rng: &mut ChaCha8Rng) -> Result<ErrorPanel> {
    if l == 0 {
        return Err(validation("kernel width must be positive"));
    }
    let dim = res.multiplier_len();
    let root = dwb_sigma_root(dim, l);
    let zeta = normal_vec(rng, dim);
    // Column-major flat storage; the root is symmetric so orientation is
    // immaterial.
    let mut xi = vec![0.0; dim];
    for (c, z) in zeta.iter().enumerate() {
        let col = &root[c * dim..(c + 1) * dim];
        for (x, v) in xi.iter_mut().zip(col) {
            *x += v * z;
        }
    }
    Ok(wild_panel(res, xi, false))
}

/// Block wild bootstrap errors: one N(0,1) multiplier per block of `l`
/// calendar positions, applied to the level residuals.
pub fn gen_errors_bwb(res: &ResidualSet, l: usize, rng: &mut ChaCha8Rng) -> Result<ErrorPanel> {
    if l == 0 {
        return Err(validation("block length must be positive"));
    }
    let dim = res.multiplier_len();
    let n_blocks = dim.div_ceil(l);
    let block_draws = normal_vec(rng, n_blocks);
    let xi: Vec<f64> = (0..dim).map(|j| block_draws[j / l]).collect();
    let mut panel = wild_panel(res, xi, false);
    panel.draws = Draws::Multipliers(block_draws);
    Ok(panel)
}

/// Autoregressive wild bootstrap errors: xi_1 ~ N(0,1),
/// xi_t = gamma xi_{t-1} + N(0, 1-gamma^2), applied to the level residuals.
pub fn gen_errors_awb(res: &ResidualSet, gamma: f64, rng: &mut ChaCha8Rng) -> Result<ErrorPanel> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(validation("the AWB parameter must lie strictly between 0 and 1"));
    }
    let dim = res.multiplier_len();
    let sd = (1.0 - gamma * gamma).sqrt();
    let mut xi = Vec::with_capacity(dim);
    for j in 0..dim {
        let z: f64 = rng.sample(StandardNormal);
        if j == 0 {
            xi.push(z);
        } else {
            xi.push(gamma * xi[j - 1] + sd * z);
        }
    }
    Ok(wild_panel(res, xi, false))
}

/// One bootstrap panel: per-series partial sums of the errors over that
/// series' window. Positions outside a window remain missing by
/// construction.
#[derive(Debug, Clone)]
pub struct BootSample {
    pub rows: usize,
    pub series: Vec<SeriesErrors>,
}

/// Cumulates bootstrap errors into a bootstrap sample.
pub fn build_sample(errors: &ErrorPanel) -> BootSample {
    let series = errors
        .series
        .iter()
        .map(|e| {
            let mut sum = 0.0;
            let values = e
                .values
                .iter()
                .map(|v| {
                    sum += v;
                    sum
                })
                .collect();
            SeriesErrors {
                start: e.start,
                values,
            }
        })
        .collect();
    BootSample {
        rows: errors.rows,
        series,
    }
}

/// Observed and bootstrap statistics: `observed[i]` holds the K statistics
/// of series i, `boot[b][i]` the same K statistics in replication b. Every
/// column is produced by the identical test pipeline, including fresh lag
/// selection inside each replication.
#[derive(Debug, Clone)]
pub struct BootStatMatrix {
    pub observed: Vec<Vec<f64>>,
    pub boot: Vec<Vec<Vec<f64>>>,
}

fn gen_errors(
    cfg: &BootConfig,
    res: &ResidualSet,
    l: usize,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ErrorPanel> {
    match cfg.method {
        BootMethod::Sb => gen_errors_sb(res, rng),
        BootMethod::Mbb => gen_errors_mbb(res, l, rng),
        BootMethod::Swb => Ok(gen_errors_swb(res, rng)),
        BootMethod::Dwb => gen_errors_dwb(res, l, rng),
        BootMethod::Bwb => gen_errors_bwb(res, l, rng),
        BootMethod::Awb => gen_errors_awb(res, gamma, rng),
    }
}

/// Runs the full bootstrap: residual estimation once, then `cfg.reps`
/// replications of generate-errors -> cumulate -> statistic, in parallel.
///
/// `stat` maps one observed window to K statistics and must apply the
/// complete test pipeline so that every replication re-selects its lags.
/// Replication b always consumes RNG stream b of the seed, so results do
/// not depend on the number of workers.
pub fn bootstrap_statistics<F>(
    panel: &Panel,
    stat: F,
    cfg: &BootConfig,
    dspec: &DetrendSpec,
    policy: &LagPolicy,
) -> Result<BootStatMatrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    cfg.validate()?;
    let res = estimate_residuals(panel, dspec, policy)?;
    let t_eff = res.max_window();
    let l = cfg.resolved_l(t_eff);
    let gamma = cfg.resolved_gamma(t_eff);
    if cfg.method == BootMethod::Dwb {
        // Warm the covariance-root cache before the parallel section.
        dwb_sigma_root(res.multiplier_len(), l);
    }

    let mut observed = Vec::with_capacity(panel.n_series());
    for i in 0..panel.n_series() {
        let (_, w) = panel.series_window(i)?;
        observed.push(stat(w)?);
    }

    let replicate = |b: usize| -> Result<Vec<Vec<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(b as u64);
        let errors = gen_errors(cfg, &res, l, gamma, &mut rng)?;
        let sample = build_sample(&errors);
        sample.series.iter().map(|s| stat(&s.values)).collect()
    };

    let boot: Result<Vec<Vec<Vec<f64>>>> = match cfg.workers {
        Some(1) => (1..=cfg.reps).map(replicate).collect(),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| validation(format!("cannot build a {w}-worker pool: {e}")))?;
            pool.install(|| (1..=cfg.reps).into_par_iter().map(replicate).collect())
        }
        None => (1..=cfg.reps).into_par_iter().map(replicate).collect(),
    };
    Ok(BootStatMatrix {
        observed,
        boot: boot?,
    })
}

/// Mixes a stage or series tag into a master seed, giving independent child
/// streams for fallback runs and sequential stages.
pub(crate) fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
