use crate::adf::{adf_regress, select_lag, LagPolicy};
use crate::bootstrap::{bootstrap_statistics, derive_seed, BootConfig, BootStatMatrix};
use crate::detrend::{detrend_ols, DetrendMethod, DetrendSpec, Deterministic};
use crate::error::{degenerate, validation, Result};
use crate::panel::{check_missing_insample, find_nonmissing_subsample, Panel};

/// Detrending variants entering the union test, in reporting order:
/// OLS intercept, OLS trend, QD intercept, QD trend.
pub fn union_specs() -> [DetrendSpec; 4] {
    [
        DetrendSpec::new(Deterministic::Intercept, DetrendMethod::Ols),
        DetrendSpec::new(Deterministic::InterceptTrend, DetrendMethod::Ols),
        DetrendSpec::new(Deterministic::Intercept, DetrendMethod::Qd),
        DetrendSpec::new(Deterministic::InterceptTrend, DetrendMethod::Qd),
    ]
}

pub const UNION_LABELS: [&str; 4] = [
    "ADF intercept",
    "ADF intercept and trend",
    "QD intercept",
    "QD intercept and trend",
];

/// The four component statistics behind a union decision and the bootstrap
/// quantiles that scale them.
#[derive(Debug, Clone)]
pub struct UnionParts {
    pub stats: [f64; 4],
    pub quantiles: [f64; 4],
}

/// Result of one bootstrap unit root test.
#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub series: String,
    /// Test variant ("union" or the detrending combination).
    pub label: String,
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    /// Selected ADF lags behind the statistic (two entries for a union
    /// test: the intercept and trend selections).
    pub lags: Vec<usize>,
    pub union: Option<UnionParts>,
    pub warnings: Vec<String>,
}

/// Outcomes for several series or specifications from one bootstrap pass.
#[derive(Debug, Clone)]
pub struct MultiOutcome {
    pub outcomes: Vec<TestOutcome>,
    pub warnings: Vec<String>,
}

/// One step of a sequential procedure (BSQT or FDR).
#[derive(Debug, Clone)]
pub struct SequentialStep {
    /// Series counted as stationary under this step's null hypothesis.
    pub h0_count: usize,
    /// Series counted as stationary under the alternative.
    pub h1_count: usize,
    /// Name of the tested series when the step covers exactly one.
    pub series: Option<String>,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub critical_value: Option<f64>,
    pub reject: bool,
}

/// Outcome of a sequential multiple-testing procedure.
#[derive(Debug, Clone)]
pub struct SequentialOutcome {
    pub steps: Vec<SequentialStep>,
    /// Per-series rejection of the unit root null, in input column order.
    pub rej_h0: Vec<bool>,
    /// Permutation ordering the observed statistics ascending.
    pub ranking: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Share of bootstrap statistics strictly below the observed one.
pub fn bootstrap_pvalue(stat: f64, boot: &[f64]) -> f64 {
    let count = boot.iter().filter(|&&b| b < stat).count();
    count as f64 / boot.len() as f64
}

/// The ceil(alpha (B+1))-th order statistic, clamped to the sample.
pub fn bootstrap_quantile(boot: &[f64], alpha: f64) -> f64 {
    let mut sorted = boot.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let b = sorted.len();
    let idx = ((alpha * (b + 1) as f64).ceil() as usize).clamp(1, b);
    sorted[idx - 1]
}

/// Indices of the statistics in ascending order; ties keep column order.
pub fn rank_statistics(stats: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..stats.len()).collect();
    idx.sort_by(|&a, &b| stats[a].partial_cmp(&stats[b]).unwrap().then(a.cmp(&b)));
    idx
}

fn richest_dc<'a>(specs: impl Iterator<Item = &'a DetrendSpec>) -> Deterministic {
    let mut dc = Deterministic::None;
    for s in specs {
        dc = match (dc, s.dc) {
            (_, Deterministic::InterceptTrend) | (Deterministic::InterceptTrend, _) => {
                Deterministic::InterceptTrend
            }
            (_, Deterministic::Intercept) | (Deterministic::Intercept, _) => {
                Deterministic::Intercept
            }
            _ => Deterministic::None,
        };
    }
    dc
}

/// Statistic functional evaluating several detrending variants on one
/// window; QD variants reuse the lag selected on the OLS-detrended series
/// with the same deterministic component.
fn multi_spec_stats(y: &[f64], specs: &[DetrendSpec], policy: &LagPolicy) -> Result<Vec<f64>> {
    let mut ols_lags: Vec<(Deterministic, usize)> = Vec::new();
    let mut lag_for = |dc: Deterministic, y: &[f64]| -> Result<usize> {
        if let Some(&(_, p)) = ols_lags.iter().find(|(d, _)| *d == dc) {
            return Ok(p);
        }
        let zd = detrend_ols(y, dc)?.detrended;
        let p = select_lag(&zd, policy, None)?;
        ols_lags.push((dc, p));
        Ok(p)
    };
    let mut out = Vec::with_capacity(specs.len());
    for spec in specs {
        let p = lag_for(spec.dc, y)?;
        let zd = spec.detrend(y)?.detrended;
        out.push(adf_regress(&zd, p)?.tstat);
    }
    Ok(out)
}

fn observed_lags(y: &[f64], specs: &[DetrendSpec], policy: &LagPolicy) -> Result<Vec<usize>> {
    let mut dcs: Vec<Deterministic> = Vec::new();
    for s in specs {
        if !dcs.contains(&s.dc) {
            dcs.push(s.dc);
        }
    }
    dcs.iter()
        .map(|&dc| {
            let zd = detrend_ols(y, dc)?.detrended;
            select_lag(&zd, policy, None)
        })
        .collect()
}

/// Observed union statistics, their bootstrap counterparts, and the
/// per-series component breakdown.
type UnionStats = (Vec<f64>, Vec<Vec<f64>>, Vec<UnionParts>);

/// Scales each component by minus the reciprocal of its bootstrap
/// alpha-quantile and takes the minimum, for the observed and every
/// bootstrap replication.
pub(crate) fn combine_union(m: &BootStatMatrix, level: f64) -> Result<UnionStats> {
    let n = m.observed.len();
    let b = m.boot.len();
    let k = m.observed[0].len();
    let mut ur_obs = Vec::with_capacity(n);
    let mut parts = Vec::with_capacity(n);
    let mut quantiles = vec![[0.0; 4]; n];
    for i in 0..n {
        let mut qs = [0.0; 4];
        for c in 0..k {
            let column: Vec<f64> = m.boot.iter().map(|rep| rep[i][c]).collect();
            let q = bootstrap_quantile(&column, level);
            if q >= 0.0 {
                return Err(degenerate(format!(
                    "bootstrap quantile of the {} statistic is not negative ({q:.4}); \
                     the union scaling is undefined",
                    UNION_LABELS[c]
                )));
            }
            qs[c] = q;
        }
        quantiles[i] = qs;
        let stats: Vec<f64> = m.observed[i].clone();
        let ur = (0..k)
            .map(|c| -stats[c] / qs[c])
            .fold(f64::INFINITY, f64::min);
        ur_obs.push(ur);
        parts.push(UnionParts {
            stats: [stats[0], stats[1], stats[2], stats[3]],
            quantiles: qs,
        });
    }
    let ur_boot: Vec<Vec<f64>> = (0..b)
        .map(|rep| {
            (0..n)
                .map(|i| {
                    (0..k)
                        .map(|c| -m.boot[rep][i][c] / quantiles[i][c])
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        })
        .collect();
    Ok((ur_obs, ur_boot, parts))
}

/// Which procedure is asking for a joint bootstrap; drives the
/// admissibility rules for resampling and sieve schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JointUse {
    Individual,
    MultipleTesting,
}

struct JointStats {
    ur_obs: Vec<f64>,
    /// B x N union (or single-spec) bootstrap statistics.
    ur_boot: Vec<Vec<f64>>,
    parts: Option<Vec<UnionParts>>,
    lags: Vec<Vec<usize>>,
    warnings: Vec<String>,
}

fn single_series_panel(panel: &Panel, i: usize) -> Panel {
    Panel {
        names: vec![panel.names[i].clone()],
        columns: vec![panel.columns[i].clone()],
        mask: vec![panel.mask[i].clone()],
        time: panel.time.clone(),
    }
}

fn run_joint(
    panel: &Panel,
    cfg: &BootConfig,
    union: bool,
    dspec: Option<DetrendSpec>,
    policy: &LagPolicy,
    use_kind: JointUse,
) -> Result<JointStats> {
    cfg.validate()?;
    let gaps = check_missing_insample(panel);
    if let Some(i) = gaps.iter().position(|&g| g) {
        return Err(validation(format!(
            "series `{}` has in-sample missing values",
            panel.names[i]
        )));
    }
    let range = find_nonmissing_subsample(panel)?;
    let n = panel.n_series();
    let mut warnings = Vec::new();

    if union && dspec.is_some() {
        warnings.push(
            "the union test fixes its four detrending variants; the supplied specification is ignored"
                .to_string(),
        );
    }
    if !union && n > 1 {
        warnings.push(
            "without the union test, results depend on the chosen deterministic specification and may not be comparable across series"
                .to_string(),
        );
    }
    let mut spec = if union {
        None
    } else {
        Some(dspec.unwrap_or(DetrendSpec::new(Deterministic::Intercept, DetrendMethod::Ols)))
    };
    if let Some(s) = &mut spec {
        if s.method == DetrendMethod::Qd && s.dc == Deterministic::None {
            warnings.push(
                "QD detrending with no deterministic component reduces to no detrending".to_string(),
            );
            s.method = DetrendMethod::Ols;
        }
    }

    if cfg.method.is_sieve() && n > 1 && use_kind == JointUse::MultipleTesting {
        warnings.push(format!(
            "the {} bootstrap whitens each series separately and may miss dependence across series; a wild scheme is safer for joint procedures",
            cfg.method
        ));
    }

    if cfg.method.is_resampling() && !range.all_equal {
        match use_kind {
            JointUse::MultipleTesting => {
                return Err(validation(format!(
                    "the {} bootstrap needs every series observed over the same range; use a wild scheme on unbalanced panels",
                    cfg.method
                )));
            }
            JointUse::Individual => {
                warnings.push(format!(
                    "the {} bootstrap cannot run jointly on an unbalanced panel; falling back to an independent bootstrap per series",
                    cfg.method
                ));
                let mut ur_obs = Vec::with_capacity(n);
                let mut ur_boot = vec![Vec::with_capacity(n); cfg.reps];
                let mut parts = Vec::with_capacity(n);
                let mut lags = Vec::with_capacity(n);
                for i in 0..n {
                    let sub = single_series_panel(panel, i);
                    let sub_cfg = BootConfig {
                        seed: derive_seed(cfg.seed, i as u64),
                        ..cfg.clone()
                    };
                    let js = run_joint(&sub, &sub_cfg, union, spec, policy, JointUse::Individual)?;
                    ur_obs.push(js.ur_obs[0]);
                    for (rep, row) in ur_boot.iter_mut().zip(&js.ur_boot) {
                        rep.push(row[0]);
                    }
                    if let Some(p) = js.parts {
                        parts.push(p.into_iter().next().unwrap());
                    }
                    lags.push(js.lags.into_iter().next().unwrap());
                }
                return Ok(JointStats {
                    ur_obs,
                    ur_boot,
                    parts: if union { Some(parts) } else { None },
                    lags,
                    warnings,
                });
            }
        }
    }

    let specs: Vec<DetrendSpec> = match spec {
        Some(s) => vec![s],
        None => union_specs().to_vec(),
    };
    let residual_spec = DetrendSpec::new(richest_dc(specs.iter()), DetrendMethod::Ols);
    let stat = |y: &[f64]| multi_spec_stats(y, &specs, policy);
    let matrix = bootstrap_statistics(panel, stat, cfg, &residual_spec, policy)?;

    let mut lags = Vec::with_capacity(n);
    for i in 0..n {
        let (_, w) = panel.series_window(i)?;
        lags.push(observed_lags(w, &specs, policy)?);
    }

    if union {
        let (ur_obs, ur_boot, parts) = combine_union(&matrix, cfg.level)?;
        Ok(JointStats {
            ur_obs,
            ur_boot,
            parts: Some(parts),
            lags,
            warnings,
        })
    } else {
        let ur_obs: Vec<f64> = matrix.observed.iter().map(|row| row[0]).collect();
        let ur_boot: Vec<Vec<f64>> = matrix
            .boot
            .iter()
            .map(|rep| rep.iter().map(|row| row[0]).collect())
            .collect();
        Ok(JointStats {
            ur_obs,
            ur_boot,
            parts: None,
            lags,
            warnings,
        })
    }
}

fn spec_label(spec: &DetrendSpec) -> String {
    format!("dc = {}, detrend = {}", spec.dc, spec.method)
}

/// Bootstrap ADF test(s) on a single series, one outcome per detrending
/// specification, all from one bootstrap pass.
pub fn boot_adf(
    y: &[f64],
    cfg: &BootConfig,
    dspecs: &[DetrendSpec],
    policy: &LagPolicy,
) -> Result<MultiOutcome> {
    cfg.validate()?;
    if dspecs.is_empty() {
        return Err(validation("at least one detrending specification is required"));
    }
    let mut warnings = Vec::new();
    let specs: Vec<DetrendSpec> = dspecs
        .iter()
        .map(|s| {
            let mut s = *s;
            if s.method == DetrendMethod::Qd && s.dc == Deterministic::None {
                warnings.push(
                    "QD detrending with no deterministic component reduces to no detrending"
                        .to_string(),
                );
                s.method = DetrendMethod::Ols;
            }
            s
        })
        .collect();
    let panel = Panel::new(vec!["y".to_string()], vec![y.to_vec()])?;
    let residual_spec = DetrendSpec::new(richest_dc(specs.iter()), DetrendMethod::Ols);
    let stat = |w: &[f64]| multi_spec_stats(w, &specs, policy);
    let matrix = bootstrap_statistics(&panel, stat, cfg, &residual_spec, policy)?;
    let (_, w) = panel.series_window(0)?;

    let mut outcomes = Vec::with_capacity(specs.len());
    for (c, spec) in specs.iter().enumerate() {
        let column: Vec<f64> = matrix.boot.iter().map(|rep| rep[0][c]).collect();
        let statistic = matrix.observed[0][c];
        let p_value = bootstrap_pvalue(statistic, &column);
        let zd = detrend_ols(w, spec.dc)?.detrended;
        let p = select_lag(&zd, policy, None)?;
        outcomes.push(TestOutcome {
            series: "y".to_string(),
            label: spec_label(spec),
            statistic,
            p_value,
            reject: p_value <= cfg.level,
            lags: vec![p],
            union: None,
            warnings: vec![],
        });
    }
    Ok(MultiOutcome { outcomes, warnings })
}

/// Union-of-rejections bootstrap test on a single series.
pub fn boot_union(y: &[f64], cfg: &BootConfig, policy: &LagPolicy) -> Result<TestOutcome> {
    let panel = Panel::new(vec!["y".to_string()], vec![y.to_vec()])?;
    let mut multi = iadf(&panel, cfg, true, None, policy)?;
    let mut outcome = multi.outcomes.remove(0);
    outcome.warnings = multi.warnings;
    Ok(outcome)
}

/// Individual tests on every series of a panel, without multiple-testing
/// control, sharing one joint bootstrap whenever the scheme admits it.
pub fn iadf(
    panel: &Panel,
    cfg: &BootConfig,
    union: bool,
    dspec: Option<DetrendSpec>,
    policy: &LagPolicy,
) -> Result<MultiOutcome> {
    let js = run_joint(panel, cfg, union, dspec, policy, JointUse::Individual)?;
    let n = panel.n_series();
    let label = if union {
        "union".to_string()
    } else {
        let mut spec =
            dspec.unwrap_or(DetrendSpec::new(Deterministic::Intercept, DetrendMethod::Ols));
        if spec.method == DetrendMethod::Qd && spec.dc == Deterministic::None {
            spec.method = DetrendMethod::Ols;
        }
        spec_label(&spec)
    };
    let mut outcomes = Vec::with_capacity(n);
    for i in 0..n {
        let column: Vec<f64> = js.ur_boot.iter().map(|rep| rep[i]).collect();
        let p_value = bootstrap_pvalue(js.ur_obs[i], &column);
        outcomes.push(TestOutcome {
            series: panel.names[i].clone(),
            label: label.clone(),
            statistic: js.ur_obs[i],
            p_value,
            reject: p_value <= cfg.level,
            lags: js.lags[i].clone(),
            union: js.parts.as_ref().map(|p| p[i].clone()),
            warnings: vec![],
        });
    }
    Ok(MultiOutcome {
        outcomes,
        warnings: js.warnings,
    })
}

/// Group-mean panel unit root test: the average of the per-series (union)
/// statistics against its bootstrap distribution.
pub fn panel_gm(
    panel: &Panel,
    cfg: &BootConfig,
    union: bool,
    policy: &LagPolicy,
) -> Result<TestOutcome> {
    let js = run_joint(panel, cfg, union, None, policy, JointUse::MultipleTesting)?;
    let n = panel.n_series() as f64;
    let gm = js.ur_obs.iter().sum::<f64>() / n;
    let gm_boot: Vec<f64> = js
        .ur_boot
        .iter()
        .map(|rep| rep.iter().sum::<f64>() / n)
        .collect();
    let p_value = bootstrap_pvalue(gm, &gm_boot);
    Ok(TestOutcome {
        series: "panel".to_string(),
        label: if union { "group-mean union".to_string() } else { "group-mean".to_string() },
        statistic: gm,
        p_value,
        reject: p_value <= cfg.level,
        lags: vec![],
        union: None,
        warnings: js.warnings,
    })
}

/// Turns a quantile or count sequence into strictly increasing group
/// boundaries 0 = p_0 < ... < p_K = N.
fn normalize_boundaries(q: &[f64], n: usize) -> Result<Vec<usize>> {
    let mut counts: Vec<usize> = if q.is_empty() {
        (0..=n).collect()
    } else if q.iter().all(|&v| (0.0..=1.0).contains(&v)) {
        q.iter().map(|&v| (v * n as f64).round() as usize).collect()
    } else if q.iter().all(|&v| v >= 0.0 && v.fract() == 0.0 && v <= n as f64) {
        q.iter().map(|&v| v as usize).collect()
    } else {
        return Err(validation(
            "q must be quantiles in [0, 1] or whole series counts",
        ));
    };
    counts.push(0);
    counts.push(n);
    counts.sort_unstable();
    counts.dedup();
    Ok(counts)
}

fn kth_smallest(values: &mut [f64], k: usize) -> f64 {
    let (_, v, _) = values.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap());
    *v
}

pub(crate) fn bsqt_from_stats(
    ur_obs: &[f64],
    ur_boot: &[Vec<f64>],
    bounds: &[usize],
    level: f64,
    names: &[String],
) -> SequentialOutcome {
    let n = ur_obs.len();
    let ranking = rank_statistics(ur_obs);
    let mut rej_h0 = vec![false; n];
    let mut steps = Vec::new();
    for k in 1..bounds.len() {
        let lo = bounds[k - 1];
        let hi = bounds[k];
        let group = hi - lo;
        let survivors = &ranking[lo..];
        let statistic = ur_obs[ranking[hi - 1]];
        let refs: Vec<f64> = ur_boot
            .iter()
            .map(|rep| {
                let mut vals: Vec<f64> = survivors.iter().map(|&i| rep[i]).collect();
                kth_smallest(&mut vals, group - 1)
            })
            .collect();
        let p_value = bootstrap_pvalue(statistic, &refs);
        let reject = p_value <= level;
        steps.push(SequentialStep {
            h0_count: lo,
            h1_count: hi,
            series: (group == 1).then(|| names[ranking[hi - 1]].clone()),
            statistic,
            p_value: Some(p_value),
            critical_value: None,
            reject,
        });
        if !reject {
            break;
        }
        for &i in &ranking[lo..hi] {
            rej_h0[i] = true;
        }
    }
    SequentialOutcome {
        steps,
        rej_h0,
        ranking,
        warnings: vec![],
    }
}

/// Bootstrap sequential quantile test. `q` holds either quantiles in [0, 1]
/// or whole counts; endpoints are completed automatically, and the empty
/// default tests one series per step.
pub fn bsqt(
    panel: &Panel,
    q: &[f64],
    cfg: &BootConfig,
    union: bool,
    policy: &LagPolicy,
) -> Result<SequentialOutcome> {
    let bounds = normalize_boundaries(q, panel.n_series())?;
    let js = run_joint(panel, cfg, union, None, policy, JointUse::MultipleTesting)?;
    let mut out = bsqt_from_stats(&js.ur_obs, &js.ur_boot, &bounds, cfg.level, &panel.names);
    out.warnings = js.warnings;
    Ok(out)
}

/// Largest candidate cutoff whose bootstrap FDR estimate at step `r` stays
/// within `level`; candidates are the surviving series' bootstrap values.
pub(crate) fn fdr_critical(
    survivors: &[usize],
    ur_boot: &[Vec<f64>],
    r: usize,
    level: f64,
) -> f64 {
    let b = ur_boot.len();
    let mut pooled: Vec<(f64, usize)> = Vec::with_capacity(survivors.len() * b);
    for (rep_id, rep) in ur_boot.iter().enumerate() {
        for &i in survivors {
            pooled.push((rep[i], rep_id));
        }
    }
    pooled.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let weight = |f: f64| f / (f + r as f64 - 1.0).max(1.0);
    let mut counts = vec![0.0f64; b];
    let mut sum = 0.0;
    let mut best = pooled[0].0;
    let mut pos = 0;
    while pos < pooled.len() {
        let c = pooled[pos].0;
        // F_b(c) counts values strictly below c, i.e. everything added so far.
        if sum / b as f64 <= level {
            best = c;
        }
        while pos < pooled.len() && pooled[pos].0 == c {
            let rep = pooled[pos].1;
            sum -= weight(counts[rep]);
            counts[rep] += 1.0;
            sum += weight(counts[rep]);
            pos += 1;
        }
    }
    best
}

pub(crate) fn fdr_from_stats(
    ur_obs: &[f64],
    ur_boot: &[Vec<f64>],
    level: f64,
    names: &[String],
) -> SequentialOutcome {
    let n = ur_obs.len();
    let ranking = rank_statistics(ur_obs);
    let mut rej_h0 = vec![false; n];
    let mut steps = Vec::new();
    for r in 1..=n {
        let survivors = &ranking[r - 1..];
        let critical = fdr_critical(survivors, ur_boot, r, level);
        let idx = ranking[r - 1];
        let statistic = ur_obs[idx];
        let reject = statistic <= critical;
        steps.push(SequentialStep {
            h0_count: r - 1,
            h1_count: r,
            series: Some(names[idx].clone()),
            statistic,
            p_value: None,
            critical_value: Some(critical),
            reject,
        });
        if !reject {
            break;
        }
        rej_h0[idx] = true;
    }
    SequentialOutcome {
        steps,
        rej_h0,
        ranking,
        warnings: vec![],
    }
}

/// Step-down multiple testing controlling the false discovery rate via
/// bootstrap critical values; `cfg.level` is the FDR level.
pub fn fdr(
    panel: &Panel,
    cfg: &BootConfig,
    union: bool,
    policy: &LagPolicy,
) -> Result<SequentialOutcome> {
    let js = run_joint(panel, cfg, union, None, policy, JointUse::MultipleTesting)?;
    let mut out = fdr_from_stats(&js.ur_obs, &js.ur_boot, cfg.level, &panel.names);
    out.warnings = js.warnings;
    Ok(out)
}
