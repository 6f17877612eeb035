//! Acceptance gate: one test per criterion. Each test ends with a single
//! `criterion N (...): pass` line (visible under `--nocapture`) summarizing
//! the measured quantity, so the suite doubles as a checklist.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use urboot::{
    adf_regress, auto_p_max, boot_adf, boot_union, bsqt, build_sample, detrend_ols, diff_mult,
    estimate_residuals, fdr, gen_errors_awb, gen_errors_bwb, gen_errors_dwb, gen_errors_mbb,
    gen_errors_sb, gen_errors_swb, iadf, load_csv, panel_gm, rescale_series, select_lag,
    simulate_dgp, BootConfig, BootMethod, Criterion, DetrendMethod, DetrendSpec, Deterministic,
    DgpSpec, Draws, Innovation, LagPolicy, LoadOptions, Panel,
};

fn next_u64(state: &mut u64) -> u64 {
    let mut x = *state;
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    *state = x;
    x
}

fn window(panel: &Panel, i: usize) -> Vec<f64> {
    panel.series_window(i).unwrap().1.to_vec()
}

fn one_series(t: usize, rho: f64, innovation: Innovation, seed: u64) -> Vec<f64> {
    let spec = DgpSpec {
        t,
        n: 1,
        rho,
        dc: Deterministic::None,
        beta: vec![],
        innovation,
    };
    window(&simulate_dgp(&spec, seed).unwrap(), 0)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

/// Plain Gaussian elimination with partial pivoting, solving A X = I.
fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|r| (0..n).map(|c| f64::from(u8::from(r == c))).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for c in 0..n {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                for c in 0..n {
                    a[r][c] -= f * a[col][c];
                    inv[r][c] -= f * inv[col][c];
                }
            }
        }
    }
    inv
}

/// Design rows of the lag-`k` regression estimated on the sample that
/// discards the first `holdout` differences: response dz[t-1], regressors
/// w[t-1] and k lagged differences.
fn adf_rows(w: &[f64], k: usize, holdout: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = w.len();
    let dz: Vec<f64> = w.windows(2).map(|p| p[1] - p[0]).collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for t in holdout + 1..m {
        y.push(dz[t - 1]);
        let mut row = vec![w[t - 1]];
        for j in 1..=k {
            row.push(dz[t - j - 1]);
        }
        x.push(row);
    }
    (x, y)
}

/// Textbook OLS via the normal equations: coefficients, residual sum of
/// squares, and the inverse cross-product matrix.
fn ols(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64, Vec<Vec<f64>>) {
    let k = x[0].len();
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for (row, &yi) in x.iter().zip(y) {
        for a in 0..k {
            for b in 0..k {
                xtx[a][b] += row[a] * row[b];
            }
            xty[a] += row[a] * yi;
        }
    }
    let inv = invert(xtx);
    let beta: Vec<f64> = (0..k)
        .map(|a| (0..k).map(|b| inv[a][b] * xty[b]).sum())
        .collect();
    let ssr = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let fit: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            (yi - fit).powi(2)
        })
        .sum();
    (beta, ssr, inv)
}

fn oracle_ic(w: &[f64], k: usize, p_max: usize, criterion: Criterion) -> f64 {
    let (x, y) = adf_rows(w, k, p_max);
    let (beta, ssr, _) = ols(&x, &y);
    let n = y.len() as f64;
    let sigma2 = ssr / n;
    let base = match criterion {
        Criterion::Aic | Criterion::Maic => 2.0,
        Criterion::Bic | Criterion::Mbic => n.ln(),
    };
    let penalty = match criterion {
        Criterion::Aic | Criterion::Bic => k as f64 * base / n,
        Criterion::Maic | Criterion::Mbic => {
            let sy: f64 = x.iter().map(|row| row[0] * row[0]).sum();
            let xi = beta[0] * beta[0] * sy / sigma2;
            k as f64 * (base + xi) / n
        }
    };
    sigma2.ln() + penalty
}

fn oracle_best_lag(w: &[f64], p_max: usize, criterion: Criterion) -> usize {
    let mut best = (0, f64::INFINITY);
    for k in 0..=p_max {
        let value = oracle_ic(w, k, p_max, criterion);
        if value < best.1 {
            best = (k, value);
        }
    }
    best.0
}

fn oracle_tstat(w: &[f64], p: usize) -> f64 {
    let (x, y) = adf_rows(w, p, p);
    let (beta, ssr, inv) = ols(&x, &y);
    let sigma2 = ssr / (y.len() - p - 1) as f64;
    beta[0] / (sigma2 * inv[0][0]).sqrt()
}

#[test]
fn criterion_01_lag_selection_and_regression_match_oracles() {
    let start = Instant::now();
    let criteria = [Criterion::Aic, Criterion::Bic, Criterion::Maic, Criterion::Mbic];
    let mut state = 0x0123_4567_89ab_cdef_u64;
    let mut selections = 0;
    for i in 0..200u64 {
        let t = 50 + (next_u64(&mut state) % 151) as usize;
        let rho = if i % 2 == 0 { 1.0 } else { 0.85 };
        let innovation = match i % 3 {
            0 => Innovation::IidNormal,
            1 => Innovation::Ar1(0.4),
            _ => Innovation::Ar1(-0.3),
        };
        let y = one_series(t, rho, innovation, 9_000 + i);
        let p_max = auto_p_max(t);
        let rescaled = rescale_series(&y).unwrap();
        for criterion in criteria {
            for rescale in [false, true] {
                let policy = LagPolicy {
                    p_min: 0,
                    p_max: None,
                    criterion,
                    rescale,
                };
                let chosen = select_lag(&y, &policy, None).unwrap();
                let source: &[f64] = if rescale { &rescaled } else { &y };
                let want = oracle_best_lag(source, p_max, criterion);
                assert_eq!(
                    chosen, want,
                    "series {i} (T = {t}), {criterion:?}, rescale = {rescale}"
                );
                selections += 1;
            }
        }
    }

    let mut max_err: f64 = 0.0;
    for i in 0..100u64 {
        let t = 60 + (next_u64(&mut state) % 141) as usize;
        let rho = if i % 2 == 0 { 1.0 } else { 0.7 };
        let y = one_series(t, rho, Innovation::Ar1(0.3), 17_000 + i);
        let yd = detrend_ols(&y, Deterministic::Intercept).unwrap().detrended;
        let p = (next_u64(&mut state) % 5) as usize;
        let fit = adf_regress(&yd, p).unwrap();
        max_err = max_err.max((fit.tstat - oracle_tstat(&yd, p)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = max_err < 1e-9 && secs < 60.0;
    println!(
        "criterion 1 (oracle equivalence): {} — {selections} lag selections equal, \
         max t-stat deviation {max_err:.2e}, {secs:.1}s",
        verdict(ok)
    );
    assert!(max_err < 1e-9, "max t-stat deviation {max_err:.3e}");
    assert!(secs < 60.0, "ran {secs:.1}s");
}

fn replay_recolor(eps_star: &[f64], phi: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = Vec::with_capacity(eps_star.len());
    for (t, &e) in eps_star.iter().enumerate() {
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

fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
}

#[test]
fn criterion_02_invariance_suite() {
    let start = Instant::now();
    let policy = LagPolicy::default();

    // Affine invariance: shifting and (negatively) scaling a series leaves
    // every statistic, p-value, and scaling quantile unchanged.
    let y = one_series(80, 1.0, Innovation::Ar1(0.3), 31);
    let mapped: Vec<f64> = y.iter().map(|v| 4.25 - 2.5 * v).collect();
    for method in [BootMethod::Awb, BootMethod::Sb] {
        let cfg = BootConfig {
            method,
            reps: 99,
            seed: 5,
            ..BootConfig::default()
        };
        let a = boot_union(&y, &cfg, &policy).unwrap();
        let b = boot_union(&mapped, &cfg, &policy).unwrap();
        assert_close(a.statistic, b.statistic, 1e-10, "affine statistic");
        assert_close(a.p_value, b.p_value, 1e-10, "affine p-value");
        let (ua, ub) = (a.union.unwrap(), b.union.unwrap());
        for k in 0..4 {
            assert_close(ua.stats[k], ub.stats[k], 1e-10, "affine component stat");
            assert_close(ua.quantiles[k], ub.quantiles[k], 1e-10, "affine quantile");
        }
    }

    // Detrend orthogonality: OLS residuals are orthogonal to the fitted
    // deterministic regressors.
    let spec = DgpSpec {
        t: 120,
        n: 1,
        rho: 1.0,
        dc: Deterministic::InterceptTrend,
        beta: vec![2.0, 0.05],
        innovation: Innovation::IidNormal,
    };
    let trended = window(&simulate_dgp(&spec, 77).unwrap(), 0);
    for dc in [Deterministic::Intercept, Deterministic::InterceptTrend] {
        let resid = detrend_ols(&trended, dc).unwrap().detrended;
        let scale0: f64 = resid.iter().map(|v| v.abs()).sum();
        let s0: f64 = resid.iter().sum();
        assert!(s0.abs() <= 1e-10 * scale0, "intercept orthogonality: {s0:e}");
        if dc == Deterministic::InterceptTrend {
            let scale1: f64 = resid
                .iter()
                .enumerate()
                .map(|(i, v)| ((i + 1) as f64 * v).abs())
                .sum();
            let s1: f64 = resid
                .iter()
                .enumerate()
                .map(|(i, v)| (i + 1) as f64 * v)
                .sum();
            assert!(s1.abs() <= 1e-10 * scale1, "trend orthogonality: {s1:e}");
        }
    }

    // Differencing and cumulation invert each other.
    let levels = Panel::new(vec!["L".into()], vec![one_series(60, 1.0, Innovation::IidNormal, 19)])
        .unwrap();
    let differenced = diff_mult(&levels, &[1], true).unwrap();
    let d = window(&differenced, 0);
    let orig = window(&levels, 0);
    assert!(differenced.series_window(0).unwrap().0 == 1);
    let mut rebuilt = orig[0];
    for (t, dv) in d.iter().enumerate() {
        rebuilt += dv;
        assert_close(rebuilt, orig[t + 1], 1e-10, "diff/cumsum round trip");
    }

    // Worker counts shift the schedule, never the numbers.
    let pair = simulate_dgp(
        &DgpSpec {
            t: 60,
            n: 2,
            rho: 1.0,
            dc: Deterministic::None,
            beta: vec![],
            innovation: Innovation::IidNormal,
        },
        404,
    )
    .unwrap();
    let dspec = DetrendSpec::new(Deterministic::Intercept, DetrendMethod::Ols);
    let stat = |w: &[f64]| urboot::adf_statistic(w, &dspec, &policy).map(|f| vec![f.tstat]);
    for method in [BootMethod::Awb, BootMethod::Mbb] {
        let mut runs = Vec::new();
        for workers in [None, Some(1), Some(3)] {
            let cfg = BootConfig {
                method,
                reps: 50,
                seed: 12,
                workers,
                ..BootConfig::default()
            };
            runs.push(urboot::bootstrap_statistics(&pair, stat, &cfg, &dspec, &policy).unwrap());
        }
        for run in &runs[1..] {
            assert_eq!(runs[0].observed, run.observed);
            for (a, b) in runs[0].boot.iter().flatten().flatten().zip(run.boot.iter().flatten().flatten()) {
                assert_eq!(a.to_bits(), b.to_bits(), "worker-count determinism");
            }
        }
    }

    // Error-generation coupling, checked through the exposed draws on a
    // staggered two-series panel plus a balanced three-series one.
    let mut cols = Vec::new();
    for (i, seed) in [(0usize, 51u64), (1, 52), (2, 53)] {
        let mut col = one_series(60, 1.0, Innovation::IidNormal, seed);
        col[..i * 5].fill(f64::NAN);
        cols.push(col);
    }
    let names = vec!["A".to_string(), "B".to_string(), "C".to_string()];
    let staggered = Panel::new(names.clone(), cols.clone()).unwrap();
    let balanced = Panel::new(
        names,
        cols.iter()
            .map(|c| c.iter().map(|v| if v.is_nan() { 0.7 } else { *v }).collect())
            .collect(),
    )
    .unwrap();
    let fixed = LagPolicy::fixed(2);

    let res_bal = estimate_residuals(&balanced, &dspec, &fixed).unwrap();
    let res_stag = estimate_residuals(&staggered, &dspec, &fixed).unwrap();
    assert_eq!(res_stag.series[2].start, 10);
    assert_eq!(res_stag.series[2].len, 50);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sb = gen_errors_sb(&res_bal, &mut rng).unwrap();
    let Draws::Indices(idx) = &sb.draws else {
        panic!("SB exposes indices")
    };
    assert_eq!(idx.len(), 59);
    assert!(idx.iter().all(|&j| j < 59));
    for (errs, s) in sb.series.iter().zip(&res_bal.series) {
        let eps_star: Vec<f64> = idx.iter().map(|&j| s.eps_hat[j]).collect();
        let want = replay_recolor(&eps_star, &s.phi_hat);
        assert_eq!(errs.values, want, "shared SB index sequence");
    }

    let l = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mbb = gen_errors_mbb(&res_bal, l, &mut rng).unwrap();
    let Draws::Indices(starts) = &mbb.draws else {
        panic!("MBB exposes block starts")
    };
    assert_eq!(starts.len(), 59usize.div_ceil(l));
    assert!(starts.iter().all(|&b| b + l <= 59));
    for (errs, s) in mbb.series.iter().zip(&res_bal.series) {
        let mut want = Vec::new();
        for &b in starts {
            want.extend_from_slice(&s.eps_hat[b..b + l]);
        }
        want.truncate(59);
        assert_eq!(errs.values, want, "shared MBB blocks stay contiguous");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let swb = gen_errors_swb(&res_stag, &mut rng);
    let Draws::Multipliers(xi) = &swb.draws else {
        panic!("SWB exposes multipliers")
    };
    assert_eq!(xi.len(), 59);
    for (errs, s) in swb.series.iter().zip(&res_stag.series) {
        let scaled: Vec<f64> = s
            .eps_hat
            .iter()
            .enumerate()
            .map(|(j, v)| xi[s.start + j] * v)
            .collect();
        let want = replay_recolor(&scaled, &s.phi_hat);
        assert_eq!(errs.values, want, "SWB multipliers align on calendar time");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dwb = gen_errors_dwb(&res_stag, l, &mut rng).unwrap();
    let Draws::Multipliers(xi) = &dwb.draws else {
        panic!("DWB exposes multipliers")
    };
    assert_eq!(xi.len(), 59);
    for (errs, s) in dwb.series.iter().zip(&res_stag.series) {
        for (j, v) in s.u_hat.iter().enumerate() {
            assert_eq!(errs.values[j], xi[s.start + j] * v, "DWB calendar alignment");
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let bwb = gen_errors_bwb(&res_stag, l, &mut rng).unwrap();
    let Draws::Multipliers(blocks) = &bwb.draws else {
        panic!("BWB exposes block draws")
    };
    assert_eq!(blocks.len(), 59usize.div_ceil(l));
    for (errs, s) in bwb.series.iter().zip(&res_stag.series) {
        for (j, v) in s.u_hat.iter().enumerate() {
            assert_eq!(
                errs.values[j],
                blocks[(s.start + j) / l] * v,
                "BWB blocks sit on calendar time"
            );
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let awb = gen_errors_awb(&res_stag, 0.8, &mut rng).unwrap();
    let Draws::Multipliers(xi) = &awb.draws else {
        panic!("AWB exposes multipliers")
    };
    assert_eq!(xi.len(), 59);
    for (errs, s) in awb.series.iter().zip(&res_stag.series) {
        for (j, v) in s.u_hat.iter().enumerate() {
            assert_eq!(errs.values[j], xi[s.start + j] * v, "AWB calendar alignment");
        }
    }

    // Cumulating errors and differencing the result round-trips, and the
    // resampling generators refuse staggered panels.
    let sample = build_sample(&awb);
    for (out, errs) in sample.series.iter().zip(&awb.series) {
        assert_eq!(out.start, errs.start);
        let mut prev = 0.0;
        for (j, v) in out.values.iter().enumerate() {
            assert_close(v - prev, errs.values[j], 1e-10, "cumulation round trip");
            prev = *v;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let err = gen_errors_sb(&res_stag, &mut rng).unwrap_err();
    assert!(err.to_string().contains("same range"), "{err}");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let err = gen_errors_mbb(&res_stag, l, &mut rng).unwrap_err();
    assert!(err.to_string().contains("same range"), "{err}");

    let secs = start.elapsed().as_secs_f64();
    let ok = secs < 60.0;
    println!(
        "criterion 2 (invariance suite): {} — affine, orthogonality, round trips, \
         worker determinism, generator coupling all hold, {secs:.1}s",
        verdict(ok)
    );
    assert!(ok, "ran {secs:.1}s");
}

fn rejection_rate(innovation: Innovation, rho: f64, dc_beta: Option<f64>, method: BootMethod, base: u64) -> f64 {
    let policy = LagPolicy::default();
    let mut rejections = 0;
    for r in 0..500u64 {
        let spec = DgpSpec {
            t: 100,
            n: 1,
            rho,
            dc: if dc_beta.is_some() {
                Deterministic::Intercept
            } else {
                Deterministic::None
            },
            beta: dc_beta.into_iter().collect(),
            innovation: innovation.clone(),
        };
        let y = window(&simulate_dgp(&spec, base + r).unwrap(), 0);
        let cfg = BootConfig {
            method,
            reps: 399,
            seed: base + 10_000 + r,
            ..BootConfig::default()
        };
        if boot_union(&y, &cfg, &policy).unwrap().reject {
            rejections += 1;
        }
    }
    rejections as f64 / 500.0
}

#[test]
fn criterion_03_size_under_iid_innovations() {
    let rate = rejection_rate(Innovation::IidNormal, 1.0, None, BootMethod::Awb, 30_000);
    let ok = (0.02..=0.09).contains(&rate);
    println!(
        "criterion 3 (size, iid innovations): {} — AWB union rejection rate {rate:.3} \
         (gate [0.02, 0.09])",
        verdict(ok)
    );
    assert!(ok, "rate {rate:.3}");
}

#[test]
fn criterion_04_size_under_a_variance_break() {
    let innovation = Innovation::VarianceBreak {
        scale: 3.0,
        break_fraction: 0.5,
    };
    let awb = rejection_rate(innovation.clone(), 1.0, None, BootMethod::Awb, 40_000);
    let sb = rejection_rate(innovation, 1.0, None, BootMethod::Sb, 40_000);
    let ok = (0.01..=0.10).contains(&awb);
    println!(
        "criterion 4 (variance break): {} — AWB rate {awb:.3} (gate [0.01, 0.10]), \
         SB rate {sb:.3} (reported only)",
        verdict(ok)
    );
    assert!(ok, "AWB rate {awb:.3}");
}

#[test]
fn criterion_05_power_against_a_stationary_alternative() {
    let rate = rejection_rate(Innovation::IidNormal, 0.8, Some(1.0), BootMethod::Awb, 50_000);
    let ok = rate >= 0.5;
    println!(
        "criterion 5 (power, rho = 0.8): {} — AWB union rejection rate {rate:.3} (gate >= 0.5)",
        verdict(ok)
    );
    assert!(ok, "rate {rate:.3}");
}

/// N series driven by innovations e_i + 0.5 f with a shared factor f;
/// entries of `stationary` pick rho = 0.8 instead of a unit root.
fn factor_panel(t: usize, stationary: &[bool], seed: u64) -> Panel {
    let n = stationary.len();
    let base = simulate_dgp(
        &DgpSpec {
            t,
            n: n + 1,
            rho: 0.0,
            dc: Deterministic::None,
            beta: vec![],
            innovation: Innovation::IidNormal,
        },
        seed,
    )
    .unwrap();
    let factor = window(&base, n);
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (i, &stat) in stationary.iter().enumerate() {
        let e = window(&base, i);
        let rho = if stat { 0.8 } else { 1.0 };
        let mut x = 0.0;
        let col = e
            .iter()
            .zip(&factor)
            .map(|(a, b)| {
                x = rho * x + (a + 0.5 * b);
                x
            })
            .collect();
        names.push(format!("S{}", i + 1));
        columns.push(col);
    }
    Panel::new(names, columns).unwrap()
}

#[test]
fn criterion_06_panel_group_mean_size_and_power() {
    let policy = LagPolicy::default();
    let run = |stationary: &[bool], base: u64| -> f64 {
        let mut rejections = 0;
        for r in 0..500u64 {
            let panel = factor_panel(100, stationary, base + r);
            let cfg = BootConfig {
                method: BootMethod::Dwb,
                reps: 199,
                seed: base + 10_000 + r,
                ..BootConfig::default()
            };
            if panel_gm(&panel, &cfg, true, &policy).unwrap().reject {
                rejections += 1;
            }
        }
        rejections as f64 / 500.0
    };
    let size = run(&[false; 5], 60_000);
    let power = run(&[true, true, false, false, false], 65_000);
    let ok = (0.02..=0.09).contains(&size) && power >= 0.6;
    println!(
        "criterion 6 (panel group-mean): {} — DWB size {size:.3} (gate [0.02, 0.09]), \
         power {power:.3} (gate >= 0.6)",
        verdict(ok)
    );
    assert!((0.02..=0.09).contains(&size), "size {size:.3}");
    assert!(power >= 0.6, "power {power:.3}");
}

#[test]
fn criterion_07_false_discovery_rate_stays_bounded() {
    let policy = LagPolicy::default();
    let mut total = 0.0;
    for r in 0..200u64 {
        let walks = simulate_dgp(
            &DgpSpec {
                t: 200,
                n: 10,
                rho: 1.0,
                dc: Deterministic::None,
                beta: vec![],
                innovation: Innovation::IidNormal,
            },
            70_000 + r,
        )
        .unwrap();
        let stationary = simulate_dgp(
            &DgpSpec {
                t: 200,
                n: 10,
                rho: 0.8,
                dc: Deterministic::None,
                beta: vec![],
                innovation: Innovation::IidNormal,
            },
            80_000 + r,
        )
        .unwrap();
        let mut names = Vec::new();
        let mut columns = Vec::new();
        for i in 0..10 {
            names.push(format!("U{}", i + 1));
            columns.push(window(&walks, i));
        }
        for i in 0..10 {
            names.push(format!("S{}", i + 1));
            columns.push(window(&stationary, i));
        }
        let panel = Panel::new(names, columns).unwrap();
        let cfg = BootConfig {
            method: BootMethod::Bwb,
            reps: 199,
            seed: 90_000 + r,
            ..BootConfig::default()
        };
        let out = fdr(&panel, &cfg, true, &policy).unwrap();
        let false_rej = out.rej_h0[..10].iter().filter(|&&b| b).count();
        let all_rej = out.rej_h0.iter().filter(|&&b| b).count();
        total += false_rej as f64 / all_rej.max(1) as f64;
    }
    let avg = total / 200.0;
    let ok = avg <= 0.10;
    println!(
        "criterion 7 (FDR control): {} — realized average FDR {avg:.3} (gate <= 0.10)",
        verdict(ok)
    );
    assert!(ok, "average FDR {avg:.3}");
}

fn macrots_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("MACROTS_CSV") {
        let path = PathBuf::from(p);
        if path.exists() {
            return Some(path);
        }
    }
    let local = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../testdata/MacroTS.csv");
    local.exists().then_some(local)
}

fn load_macrots(path: &PathBuf) -> Panel {
    let label_names = ["", "t", "time", "date", "period", "quarter", "index", "obs", "x"];
    let with_time = LoadOptions {
        has_time_column: true,
        ..LoadOptions::default()
    };
    match load_csv(path, &LoadOptions::default()) {
        Ok(panel) if label_names.contains(&panel.names[0].to_lowercase().as_str()) => {
            load_csv(path, &with_time).unwrap()
        }
        Ok(panel) => panel,
        Err(_) => load_csv(path, &with_time).unwrap(),
    }
}

#[test]
fn criterion_08_reference_values_on_macrots() {
    let Some(path) = macrots_path() else {
        println!(
            "criterion 8 (MacroTS reference values): skip — no CSV found; set MACROTS_CSV \
             or place testdata/MacroTS.csv in the workspace root"
        );
        return;
    };
    let panel = load_macrots(&path);
    let policy = LagPolicy::default();
    let cfg = |method: BootMethod| BootConfig {
        method,
        reps: 1999,
        seed: 155776,
        ..BootConfig::default()
    };
    let column = |name: &str| -> Vec<f64> {
        let i = panel.names.iter().position(|n| n == name).unwrap();
        window(&panel, i)
    };
    let gdp_names: Vec<String> = ["GDP_BE", "GDP_DE", "GDP_FR", "GDP_NL", "GDP_UK"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let gdp_block = panel.select_columns(&gdp_names).unwrap();

    let specs = [
        DetrendSpec::new(Deterministic::InterceptTrend, DetrendMethod::Ols),
        DetrendSpec::new(Deterministic::InterceptTrend, DetrendMethod::Qd),
    ];
    let adf_out = boot_adf(&column("GDP_NL"), &cfg(BootMethod::Sb), &specs, &policy).unwrap();
    assert_close(adf_out.outcomes[0].statistic, -2.5152854, 0.02, "GDP_NL OLS statistic");
    assert_close(adf_out.outcomes[1].statistic, -1.5965001, 0.02, "GDP_NL QD statistic");
    assert_close(adf_out.outcomes[0].p_value, 0.1310655, 0.05, "GDP_NL OLS p-value");
    assert_close(adf_out.outcomes[1].p_value, 0.4187094, 0.05, "GDP_NL QD p-value");

    let union_out = boot_union(&column("GDP_NL"), &cfg(BootMethod::Swb), &policy).unwrap();
    assert_close(union_out.p_value, 0.6433217, 0.05, "GDP_NL union p-value");

    let iadf_out = iadf(&gdp_block, &cfg(BootMethod::Mbb), true, None, &policy).unwrap();
    assert!(
        iadf_out.warnings.iter().any(|w| w.contains("per series")),
        "unbalanced MBB falls back per series"
    );
    let reference_p = [0.36618309, 0.08804402, 0.76188094, 0.41370685, 0.53876938];
    for (outcome, want) in iadf_out.outcomes.iter().zip(reference_p) {
        assert!(!outcome.reject, "{} not rejected", outcome.series);
        assert_close(outcome.p_value, want, 0.05, &format!("{} p-value", outcome.series));
    }

    let panel_out = panel_gm(&gdp_block, &cfg(BootMethod::Dwb), true, &policy).unwrap();
    assert_close(panel_out.p_value, 0.2956478, 0.05, "GDP block group-mean p-value");

    let bsqt_out = bsqt(&gdp_block, &[], &cfg(BootMethod::Awb), true, &policy).unwrap();
    assert_eq!(bsqt_out.steps[0].h0_count, 0);
    assert_eq!(bsqt_out.steps[0].h1_count, 1);
    assert!(!bsqt_out.steps[0].reject);
    assert!(bsqt_out.rej_h0.iter().all(|r| !r));
    assert_close(
        bsqt_out.steps[0].p_value.unwrap(),
        0.3346673,
        0.05,
        "BSQT step-1 p-value",
    );

    let fdr_out = fdr(&gdp_block, &cfg(BootMethod::Bwb), true, &policy).unwrap();
    assert_eq!(fdr_out.steps[0].series.as_deref(), Some("GDP_DE"));
    assert!(!fdr_out.steps[0].reject);
    assert_close(fdr_out.steps[0].statistic, -0.9813749, 0.05, "FDR first statistic");
    assert_close(
        fdr_out.steps[0].critical_value.unwrap(),
        -1.346138,
        0.05,
        "FDR first critical value",
    );

    let levels = panel_gm(&panel, &cfg(BootMethod::Awb), true, &policy).unwrap();
    let d1 = diff_mult(&panel, &vec![1; panel.n_series()], true).unwrap();
    let diffs = panel_gm(&d1, &cfg(BootMethod::Awb), true, &policy).unwrap();
    assert!(levels.p_value > 0.05, "levels p {:.4}", levels.p_value);
    assert!(diffs.p_value < 0.01, "differences p {:.4}", diffs.p_value);

    println!(
        "criterion 8 (MacroTS reference values): pass — GDP_NL ADF {:.4}/{:.4}, \
         union p {:.4}, panel p {:.4}, levels p {:.3} > 0.05, differences p {:.3} < 0.01",
        adf_out.outcomes[0].statistic,
        adf_out.outcomes[1].statistic,
        union_out.p_value,
        panel_out.p_value,
        levels.p_value,
        diffs.p_value
    );
}

#[test]
fn criterion_09_sequential_steps_walk_the_order_statistics() {
    let policy = LagPolicy::default();
    let mut state = 0xfeed_beef_dead_cafe_u64;
    let mut steps_checked = 0;
    for inst in 0..50u64 {
        let n = 3 + (next_u64(&mut state) % 6) as usize;
        let t = 60 + (next_u64(&mut state) % 41) as usize;
        let mut names = Vec::new();
        let mut columns = Vec::new();
        for i in 0..n {
            let rho = if next_u64(&mut state) % 2 == 0 { 1.0 } else { 0.8 };
            names.push(format!("S{}", i + 1));
            columns.push(one_series(t, rho, Innovation::IidNormal, 100_000 + inst * 16 + i as u64));
        }
        let panel = Panel::new(names, columns).unwrap();
        let cfg = BootConfig {
            method: BootMethod::Awb,
            reps: 49,
            level: 0.5,
            seed: 110_000 + inst,
            ..BootConfig::default()
        };
        let seq = bsqt(&panel, &[], &cfg, true, &policy).unwrap();
        let multi = iadf(&panel, &cfg, true, None, &policy).unwrap();
        let mut stats: Vec<f64> = multi.outcomes.iter().map(|o| o.statistic).collect();
        stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, step) in seq.steps.iter().enumerate() {
            assert_eq!(step.h1_count, k + 1, "instance {inst}");
            assert!(
                step.statistic == stats[k],
                "instance {inst}, step {k}: {} vs order statistic {}",
                step.statistic,
                stats[k]
            );
            steps_checked += 1;
        }
    }
    println!(
        "criterion 9 (sequential order statistics): pass — {steps_checked} steps across \
         50 panels match exactly"
    );
}

fn urboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urboot"))
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .args(args)
        .output()
        .expect("binary spawns")
}

#[test]
fn criterion_10_cli_golden_files_reproduce() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, Vec<&str>); 3] = [
        (
            "adf.json",
            vec![
                "adf", "tests/fixtures/single.csv", "--col", "Y", "--boot", "SB", "--dc", "trend",
                "--detr", "OLS,QD", "-B", "199", "--seed", "155776",
            ],
        ),
        (
            "iadf.json",
            vec!["iadf", "tests/fixtures/unbalanced.csv", "--boot", "MBB", "-B", "199", "--seed", "42"],
        ),
        (
            "orders.json",
            vec!["orders", "tests/fixtures/trio.csv", "-B", "99", "--seed", "5"],
        ),
    ];
    for (golden, mut args) in runs {
        let out_path = dir.path().join(golden);
        let out_str = out_path.to_str().unwrap().to_string();
        args.push("--json");
        args.push(&out_str);
        let out = urboot(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let got = std::fs::read(&out_path).unwrap();
        let want_path = format!("{}/tests/golden/{golden}", env!("CARGO_MANIFEST_DIR"));
        let want = std::fs::read(want_path).unwrap();
        assert_eq!(got, want, "{golden} reproduces byte-for-byte");
    }
    println!("criterion 10 (CLI golden files): pass — adf, iadf, orders byte-identical");
}
