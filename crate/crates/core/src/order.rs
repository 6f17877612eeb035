use crate::adf::LagPolicy;
use crate::bootstrap::{derive_seed, BootConfig};
use crate::detrend::DetrendSpec;
use crate::error::{validation, Result};
use crate::panel::{diff_mult, Panel};
use crate::procedures::{bsqt, fdr, iadf, MultiOutcome, SequentialOutcome};

/// Which unit root test drives each classification stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    /// Independent per-series ADF tests.
    Adf,
    /// Independent per-series union tests.
    Union,
    /// Individual tests sharing one joint bootstrap.
    Iadf,
    /// Bootstrap sequential quantile test.
    Bsqt,
    /// Bootstrap false discovery rate control.
    Fdr,
}

/// Options for the order-of-integration classification.
#[derive(Debug, Clone)]
pub struct OrderOptions {
    /// Highest order considered; testing starts at this order minus one.
    pub max_order: usize,
    pub kind: TestKind,
    pub union: bool,
    pub dspec: Option<DetrendSpec>,
    /// BSQT group boundaries (quantiles or counts); empty tests one series
    /// per step.
    pub q: Vec<f64>,
}

impl Default for OrderOptions {
    fn default() -> Self {
        OrderOptions {
            max_order: 2,
            kind: TestKind::Iadf,
            union: true,
            dspec: None,
            q: Vec::new(),
        }
    }
}

/// Test results for the pool of unclassified series at one stage.
#[derive(Debug, Clone)]
pub enum StageDetail {
    Individual(MultiOutcome),
    Sequential(SequentialOutcome),
}

/// One Pantula stage: the pool tested on its d-th differences.
#[derive(Debug, Clone)]
pub struct StageReport {
    /// Differencing order applied at this stage.
    pub d: usize,
    /// Pool series names, in input column order.
    pub names: Vec<String>,
    /// Unit root rejections aligned with `names`.
    pub rejected: Vec<bool>,
    pub detail: StageDetail,
}

/// Orders of integration for every series plus the correspondingly
/// differenced panel.
#[derive(Debug, Clone)]
pub struct OrderResult {
    /// Per-series order, in input column order.
    pub d: Vec<usize>,
    /// Each series differenced `d` times, heads masked.
    pub diff_data: Panel,
    pub stages: Vec<StageReport>,
    pub warnings: Vec<String>,
}

fn stage_rejections(detail: &StageDetail, level: f64) -> Vec<bool> {
    match detail {
        StageDetail::Individual(multi) => multi
            .outcomes
            .iter()
            .map(|o| o.p_value <= level)
            .collect(),
        StageDetail::Sequential(seq) => seq.rej_h0.clone(),
    }
}

fn run_stage(
    pool: &Panel,
    indices: &[usize],
    opts: &OrderOptions,
    cfg: &BootConfig,
    policy: &LagPolicy,
) -> Result<(StageDetail, Vec<String>)> {
    match opts.kind {
        TestKind::Adf | TestKind::Union => {
            let union = opts.kind == TestKind::Union;
            let mut outcomes = Vec::with_capacity(pool.n_series());
            let mut warnings = Vec::new();
            for (i, &orig) in indices.iter().enumerate() {
                let sub = pool.select_indices(&[i])?;
                let sub_cfg = BootConfig {
                    seed: derive_seed(cfg.seed, orig as u64),
                    ..cfg.clone()
                };
                let mut multi = iadf(&sub, &sub_cfg, union, opts.dspec, policy)?;
                outcomes.append(&mut multi.outcomes);
                for w in multi.warnings {
                    if !warnings.contains(&w) {
                        warnings.push(w);
                    }
                }
            }
            Ok((
                StageDetail::Individual(MultiOutcome {
                    outcomes,
                    warnings: warnings.clone(),
                }),
                warnings,
            ))
        }
        TestKind::Iadf => {
            let multi = iadf(pool, cfg, opts.union, opts.dspec, policy)?;
            let warnings = multi.warnings.clone();
            Ok((StageDetail::Individual(multi), warnings))
        }
        TestKind::Bsqt => {
            let seq = bsqt(pool, &opts.q, cfg, opts.union, policy)?;
            let warnings = seq.warnings.clone();
            Ok((StageDetail::Sequential(seq), warnings))
        }
        TestKind::Fdr => {
            let seq = fdr(pool, cfg, opts.union, policy)?;
            let warnings = seq.warnings.clone();
            Ok((StageDetail::Sequential(seq), warnings))
        }
    }
}

/// Classifies every series' order of integration by testing successively
/// lower differences: series whose unit root is not rejected at difference
/// order `d` are assigned order `d + 1`, the rest move on, and whatever
/// still rejects at the original data is order 0.
pub fn order_integration(
    panel: &Panel,
    opts: &OrderOptions,
    cfg: &BootConfig,
    policy: &LagPolicy,
) -> Result<OrderResult> {
    if opts.max_order == 0 {
        return Err(validation("max_order must be at least 1"));
    }
    cfg.validate()?;
    let n = panel.n_series();
    let mut order = vec![0usize; n];
    let mut pool: Vec<usize> = (0..n).collect();
    let mut stages = Vec::new();
    let mut warnings = Vec::new();

    for d in (0..opts.max_order).rev() {
        if pool.is_empty() {
            break;
        }
        let subset = panel.select_indices(&pool)?;
        let differenced = diff_mult(&subset, &vec![d; pool.len()], true)?;
        let stage_cfg = BootConfig {
            seed: derive_seed(cfg.seed, d as u64),
            ..cfg.clone()
        };
        let (detail, stage_warnings) = run_stage(&differenced, &pool, opts, &stage_cfg, policy)?;
        let rejected = stage_rejections(&detail, cfg.level);
        stages.push(StageReport {
            d,
            names: differenced.names.clone(),
            rejected: rejected.clone(),
            detail,
        });
        for w in stage_warnings {
            let tagged = format!("stage d = {d}: {w}");
            if !warnings.contains(&tagged) {
                warnings.push(tagged);
            }
        }
        pool = pool
            .iter()
            .zip(&rejected)
            .filter_map(|(&i, &rej)| {
                if rej {
                    Some(i)
                } else {
                    order[i] = d + 1;
                    None
                }
            })
            .collect();
    }

    let diff_data = diff_mult(panel, &order, true)?;
    Ok(OrderResult {
        d: order,
        diff_data,
        stages,
        warnings,
    })
}
