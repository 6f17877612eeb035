mod output;

use clap::error::ErrorKind;
use clap::{ArgAction, Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use std::path::PathBuf;
use std::process::exit;
use urboot::{
    boot_adf, boot_union, bsqt, fdr, find_nonmissing_subsample, iadf, load_csv, order_integration,
    panel_gm, plot_missing_pattern, plot_order_integration, write_csv, BootConfig, BootMethod,
    Criterion, DetrendMethod, DetrendSpec, Deterministic, LagPolicy, LoadOptions, OrderOptions,
    Panel, Result, TestKind, UrError,
};

use output::{emit, fmt_stat, manifest, outcome_json, render_table, sequential_json, yes_no};

#[derive(Parser)]
#[command(
    name = "urboot",
    version,
    about = "Bootstrap unit root tests for time series and panels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report the observation pattern of a CSV panel
    Check(CheckArgs),
    /// Bootstrap ADF tests on a single series
    Adf(AdfArgs),
    /// Union-of-rejections bootstrap test on a single series
    Union(UnionArgs),
    /// Individual tests on every series, without multiplicity control
    Iadf(IadfArgs),
    /// Group-mean panel unit root test
    Panel(PanelArgs),
    /// Bootstrap sequential quantile test
    Bsqt(BsqtArgs),
    /// Multiple testing with false discovery rate control
    Fdr(FdrArgs),
    /// Classify each series' order of integration
    Orders(OrdersArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with one column per series
    input: PathBuf,
    /// Comma-separated tokens read as missing values
    #[arg(long, value_delimiter = ',')]
    missing: Option<Vec<String>>,
    /// Treat the first column as time labels
    #[arg(long)]
    time_col: bool,
    /// Keep only these columns
    #[arg(long, value_delimiter = ',')]
    col: Vec<String>,
}

impl InputArgs {
    fn load(&self) -> Result<Panel> {
        let mut options = LoadOptions::default();
        if let Some(tokens) = &self.missing {
            options.missing_tokens = tokens.clone();
        }
        options.has_time_column = self.time_col;
        let panel = load_csv(&self.input, &options)?;
        if self.col.is_empty() {
            Ok(panel)
        } else {
            panel.select_columns(&self.col)
        }
    }

    fn describe(&self, map: &mut Map<String, Value>) {
        let tokens = self
            .missing
            .clone()
            .unwrap_or_else(|| LoadOptions::default().missing_tokens);
        map.insert("missing".into(), json!(tokens));
        map.insert("time_col".into(), json!(self.time_col));
        map.insert("col".into(), json!(self.col));
    }
}

#[derive(Args)]
struct BootArgs {
    /// Bootstrap scheme: SB, MBB, SWB, DWB, BWB or AWB
    #[arg(long, default_value = "AWB", value_parser = parse_method)]
    boot: BootMethod,
    /// Number of bootstrap replications
    #[arg(short = 'B', long = "B", default_value_t = 1999)]
    reps: usize,
    /// Block length for MBB, DWB and BWB (default: data driven)
    #[arg(long)]
    l: Option<usize>,
    /// AWB autoregressive parameter (default: from the block length)
    #[arg(long)]
    ar_awb: Option<f64>,
    /// Significance level (FDR level for `fdr`)
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Worker threads (default: one per core)
    #[arg(long)]
    workers: Option<usize>,
    /// Random number generator seed
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl BootArgs {
    fn config(&self) -> BootConfig {
        BootConfig {
            method: self.boot,
            reps: self.reps,
            l: self.l,
            ar_awb: self.ar_awb,
            level: self.level,
            seed: self.seed,
            workers: self.workers,
        }
    }

    fn describe(&self, map: &mut Map<String, Value>, t: usize) {
        let cfg = self.config();
        map.insert("boot".into(), json!(cfg.method.to_string()));
        map.insert("B".into(), json!(cfg.reps));
        map.insert("l".into(), json!(cfg.resolved_l(t)));
        map.insert("ar_awb".into(), output::sig(cfg.resolved_gamma(t)));
        map.insert("level".into(), output::sig(cfg.level));
        map.insert("workers".into(), json!(cfg.workers));
    }
}

#[derive(Args)]
struct LagArgs {
    /// Smallest candidate lag
    #[arg(long, default_value_t = 0)]
    p_min: usize,
    /// Largest candidate lag (default: data driven)
    #[arg(long)]
    p_max: Option<usize>,
    /// Lag selection criterion: AIC, BIC, MAIC or MBIC
    #[arg(long, default_value = "MAIC", value_parser = parse_criterion)]
    ic: Criterion,
    /// Rescale the series before lag selection
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    ic_scale: bool,
}

impl LagArgs {
    fn policy(&self) -> LagPolicy {
        LagPolicy {
            p_min: self.p_min,
            p_max: self.p_max,
            criterion: self.ic,
            rescale: self.ic_scale,
        }
    }

    fn describe(&self, map: &mut Map<String, Value>) {
        map.insert("p_min".into(), json!(self.p_min));
        map.insert(
            "p_max".into(),
            self.p_max.map_or(json!("auto"), |p| json!(p)),
        );
        map.insert("ic".into(), json!(self.ic.to_string()));
        map.insert("ic_scale".into(), json!(self.ic_scale));
    }
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Write the report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the observation pattern as an SVG figure
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct AdfArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    boot: BootArgs,
    #[command(flatten)]
    lag: LagArgs,
    /// Deterministic component: none, intercept or trend (0, 1 or 2)
    #[arg(long, default_value = "intercept", value_parser = parse_dc)]
    dc: Deterministic,
    /// Detrending methods, e.g. OLS,QD
    #[arg(long, value_delimiter = ',', default_value = "OLS", value_parser = parse_detr)]
    detr: Vec<DetrendMethod>,
    /// Write results as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct UnionArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    boot: BootArgs,
    #[command(flatten)]
    lag: LagArgs,
    /// Write results as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct IadfArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    boot: BootArgs,
    #[command(flatten)]
    lag: LagArgs,
    /// Combine four detrending variants per series
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    union: bool,
    /// Deterministic component when --union false
    #[arg(long, value_parser = parse_dc)]
    dc: Option<Deterministic>,
    /// Detrending method when --union false
    #[arg(long, value_parser = parse_detr)]
    detr: Option<DetrendMethod>,
    /// Write results as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PanelArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    boot: BootArgs,
    #[command(flatten)]
    lag: LagArgs,
    /// Base the group mean on union statistics
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    union: bool,
    /// Write results as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BsqtArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    boot: BootArgs,
    #[command(flatten)]
    lag: LagArgs,
    /// Group boundaries as quantiles in [0, 1] or series counts
    #[arg(long, value_delimiter = ',')]
    q: Vec<f64>,
    /// Base each step on union statistics
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    union: bool,
    /// Write results as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct FdrArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    boot: BootArgs,
    #[command(flatten)]
    lag: LagArgs,
    /// Base each step on union statistics
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    union: bool,
    /// Write results as JSON
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct OrdersArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    boot: BootArgs,
    #[command(flatten)]
    lag: LagArgs,
    /// Highest order of integration considered
    #[arg(long, default_value_t = 2)]
    max_order: usize,
    /// Test per stage: adf, union, iadf, bsqt or fdr
    #[arg(long = "test", default_value = "iadf", value_parser = parse_kind)]
    kind: TestKind,
    /// Combine four detrending variants per series
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    union: bool,
    /// Deterministic component when --union false
    #[arg(long, value_parser = parse_dc)]
    dc: Option<Deterministic>,
    /// Detrending method when --union false
    #[arg(long, value_parser = parse_detr)]
    detr: Option<DetrendMethod>,
    /// BSQT group boundaries
    #[arg(long, value_delimiter = ',')]
    q: Vec<f64>,
    /// Write results as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the differenced panel as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the classification as an SVG figure
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn parse_method(s: &str) -> std::result::Result<BootMethod, String> {
    match s.to_ascii_uppercase().as_str() {
        "SB" => Ok(BootMethod::Sb),
        "MBB" => Ok(BootMethod::Mbb),
        "SWB" => Ok(BootMethod::Swb),
        "DWB" => Ok(BootMethod::Dwb),
        "BWB" => Ok(BootMethod::Bwb),
        "AWB" => Ok(BootMethod::Awb),
        _ => Err(format!(
            "unknown bootstrap scheme `{s}` (expected SB, MBB, SWB, DWB, BWB or AWB)"
        )),
    }
}

fn parse_criterion(s: &str) -> std::result::Result<Criterion, String> {
    match s.to_ascii_uppercase().as_str() {
        "AIC" => Ok(Criterion::Aic),
        "BIC" => Ok(Criterion::Bic),
        "MAIC" => Ok(Criterion::Maic),
        "MBIC" => Ok(Criterion::Mbic),
        _ => Err(format!(
            "unknown criterion `{s}` (expected AIC, BIC, MAIC or MBIC)"
        )),
    }
}

fn parse_dc(s: &str) -> std::result::Result<Deterministic, String> {
    match s.to_ascii_lowercase().as_str() {
        "none" | "0" => Ok(Deterministic::None),
        "intercept" | "1" => Ok(Deterministic::Intercept),
        "trend" | "intercept_trend" | "2" => Ok(Deterministic::InterceptTrend),
        _ => Err(format!(
            "unknown deterministic component `{s}` (expected none, intercept or trend)"
        )),
    }
}

fn parse_detr(s: &str) -> std::result::Result<DetrendMethod, String> {
    match s.to_ascii_uppercase().as_str() {
        "OLS" => Ok(DetrendMethod::Ols),
        "QD" => Ok(DetrendMethod::Qd),
        _ => Err(format!("unknown detrending method `{s}` (expected OLS or QD)")),
    }
}

fn parse_kind(s: &str) -> std::result::Result<TestKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "adf" => Ok(TestKind::Adf),
        "union" => Ok(TestKind::Union),
        "iadf" => Ok(TestKind::Iadf),
        "bsqt" => Ok(TestKind::Bsqt),
        "fdr" => Ok(TestKind::Fdr),
        _ => Err(format!(
            "unknown test kind `{s}` (expected adf, union, iadf, bsqt or fdr)"
        )),
    }
}

/// Longest contiguous observation window, driving the data-driven tuning
/// parameters reported in the manifest.
fn effective_length(panel: &Panel) -> usize {
    (0..panel.n_series())
        .filter_map(|i| panel.series_window(i).ok().map(|(_, w)| w.len()))
        .max()
        .unwrap_or(panel.n_rows())
}

fn single_series(panel: &Panel) -> Result<(String, Vec<f64>)> {
    if panel.n_series() != 1 {
        return Err(UrError::Validation(format!(
            "this test runs on one series but the input has {}; select one with --col",
            panel.n_series()
        )));
    }
    Ok((panel.names[0].clone(), panel.columns[0].clone()))
}

fn dspec_from(dc: Option<Deterministic>, detr: Option<DetrendMethod>) -> Option<DetrendSpec> {
    if dc.is_none() && detr.is_none() {
        return None;
    }
    Some(DetrendSpec::new(
        dc.unwrap_or(Deterministic::Intercept),
        detr.unwrap_or(DetrendMethod::Ols),
    ))
}

fn scheme_line(cfg: &BootConfig) -> String {
    format!(
        "  scheme {}, B = {}, level {}\n\n",
        cfg.method, cfg.reps, cfg.level
    )
}

fn outcome_rows(outcomes: &[urboot::TestOutcome], first_column: &str) -> Vec<Vec<String>> {
    let mut rows = vec![vec![
        first_column.to_string(),
        "lags".to_string(),
        "statistic".to_string(),
        "p-value".to_string(),
        "reject".to_string(),
    ]];
    for o in outcomes {
        let first = if first_column == "series" {
            o.series.clone()
        } else {
            o.label.clone()
        };
        let lags: Vec<String> = o.lags.iter().map(|p| p.to_string()).collect();
        rows.push(vec![
            first,
            lags.join(","),
            fmt_stat(o.statistic),
            fmt_stat(o.p_value),
            yes_no(o.reject).to_string(),
        ]);
    }
    rows
}

fn run_check(args: CheckArgs) -> Result<()> {
    let panel = args.input.load()?;
    let range = find_nonmissing_subsample(&panel)?;
    let mut diagnostics = Vec::new();
    if !range.all_equal {
        diagnostics.push("series are observed over different ranges".to_string());
    }

    let mut rows = vec![vec![
        "series".to_string(),
        "first".to_string(),
        "last".to_string(),
        "observations".to_string(),
        "internal gaps".to_string(),
    ]];
    let mut results = Vec::new();
    for i in 0..panel.n_series() {
        let (first, last) = (range.first[i], range.last[i]);
        let observations = panel.mask[i].iter().filter(|&&m| !m).count();
        let internal = (first..=last)
            .filter(|&t| panel.mask[i][t - 1])
            .count();
        if internal > 0 {
            diagnostics.push(format!(
                "series `{}` has {internal} in-sample missing values",
                panel.names[i]
            ));
        }
        rows.push(vec![
            panel.names[i].clone(),
            first.to_string(),
            last.to_string(),
            observations.to_string(),
            internal.to_string(),
        ]);
        results.push(json!({
            "series": panel.names[i],
            "first": first,
            "last": last,
            "observations": observations,
            "internal_gaps": internal,
        }));
    }

    let table = format!(
        "Observation pattern of {} ({} series, {} rows)\n\n{}\n balanced: {}\n",
        args.input.input.display(),
        panel.n_series(),
        panel.n_rows(),
        render_table(&rows),
        yes_no(range.all_equal)
    );
    if let Some(path) = &args.svg {
        std::fs::write(path, plot_missing_pattern(&panel, true))?;
    }
    let mut options = Map::new();
    args.input.describe(&mut options);
    let mf = manifest("check", &args.input.input, options, 0);
    emit(&table, mf, Value::Array(results), &diagnostics, args.json.as_deref())
}

fn run_adf(args: AdfArgs) -> Result<()> {
    let panel = args.input.load()?;
    let (name, y) = single_series(&panel)?;
    let cfg = args.boot.config();
    let policy = args.lag.policy();
    let specs: Vec<DetrendSpec> = args
        .detr
        .iter()
        .map(|&m| DetrendSpec::new(args.dc, m))
        .collect();
    let mut out = boot_adf(&y, &cfg, &specs, &policy)?;
    for o in &mut out.outcomes {
        o.series = name.clone();
    }

    let table = format!(
        "Bootstrap ADF test on {name}\n{}{}",
        scheme_line(&cfg),
        render_table(&outcome_rows(&out.outcomes, "specification"))
    );
    let results: Vec<Value> = out.outcomes.iter().map(outcome_json).collect();
    let mut options = Map::new();
    args.input.describe(&mut options);
    args.boot.describe(&mut options, effective_length(&panel));
    args.lag.describe(&mut options);
    options.insert("dc".into(), json!(args.dc.to_string()));
    options.insert(
        "detr".into(),
        json!(args.detr.iter().map(|m| m.to_string()).collect::<Vec<_>>()),
    );
    let mf = manifest("adf", &args.input.input, options, cfg.seed);
    emit(&table, mf, Value::Array(results), &out.warnings, args.json.as_deref())
}

fn run_union(args: UnionArgs) -> Result<()> {
    let panel = args.input.load()?;
    let (name, y) = single_series(&panel)?;
    let cfg = args.boot.config();
    let policy = args.lag.policy();
    let mut outcome = boot_union(&y, &cfg, &policy)?;
    outcome.series = name.clone();
    let warnings = std::mem::take(&mut outcome.warnings);

    let mut table = format!(
        "Bootstrap union test on {name}\n{}{}",
        scheme_line(&cfg),
        render_table(&outcome_rows(std::slice::from_ref(&outcome), "series"))
    );
    if let Some(parts) = &outcome.union {
        let mut rows = vec![vec![
            "component".to_string(),
            "statistic".to_string(),
            format!("{}-quantile", cfg.level),
        ]];
        for k in 0..4 {
            rows.push(vec![
                urboot::UNION_LABELS[k].to_string(),
                fmt_stat(parts.stats[k]),
                fmt_stat(parts.quantiles[k]),
            ]);
        }
        table.push('\n');
        table.push_str(&render_table(&rows));
    }

    let results = vec![outcome_json(&outcome)];
    let mut options = Map::new();
    args.input.describe(&mut options);
    args.boot.describe(&mut options, effective_length(&panel));
    args.lag.describe(&mut options);
    let mf = manifest("union", &args.input.input, options, cfg.seed);
    emit(&table, mf, Value::Array(results), &warnings, args.json.as_deref())
}

fn run_iadf(args: IadfArgs) -> Result<()> {
    let panel = args.input.load()?;
    let cfg = args.boot.config();
    let policy = args.lag.policy();
    let dspec = dspec_from(args.dc, args.detr);
    let out = iadf(&panel, &cfg, args.union, dspec, &policy)?;

    let kind = if args.union { "union" } else { "ADF" };
    let table = format!(
        "Individual bootstrap {kind} tests\n{}{}",
        scheme_line(&cfg),
        render_table(&outcome_rows(&out.outcomes, "series"))
    );
    let results: Vec<Value> = out.outcomes.iter().map(outcome_json).collect();
    let mut options = Map::new();
    args.input.describe(&mut options);
    args.boot.describe(&mut options, effective_length(&panel));
    args.lag.describe(&mut options);
    options.insert("union".into(), json!(args.union));
    describe_dspec(&mut options, dspec);
    let mf = manifest("iadf", &args.input.input, options, cfg.seed);
    emit(&table, mf, Value::Array(results), &out.warnings, args.json.as_deref())
}

fn describe_dspec(map: &mut Map<String, Value>, dspec: Option<DetrendSpec>) {
    match dspec {
        Some(s) => {
            map.insert("dc".into(), json!(s.dc.to_string()));
            map.insert("detr".into(), json!(s.method.to_string()));
        }
        None => {
            map.insert("dc".into(), Value::Null);
            map.insert("detr".into(), Value::Null);
        }
    }
}

fn run_panel(args: PanelArgs) -> Result<()> {
    let panel = args.input.load()?;
    let cfg = args.boot.config();
    let policy = args.lag.policy();
    let outcome = panel_gm(&panel, &cfg, args.union, &policy)?;

    let rows = vec![
        vec![
            "test".to_string(),
            "statistic".to_string(),
            "p-value".to_string(),
            "reject".to_string(),
        ],
        vec![
            outcome.label.clone(),
            fmt_stat(outcome.statistic),
            fmt_stat(outcome.p_value),
            yes_no(outcome.reject).to_string(),
        ],
    ];
    let table = format!(
        "Panel unit root test ({} series)\n{}{}",
        panel.n_series(),
        scheme_line(&cfg),
        render_table(&rows)
    );
    let results = vec![json!({
        "test": outcome.label,
        "statistic": output::sig(outcome.statistic),
        "p_value": output::sig(outcome.p_value),
        "reject": outcome.reject,
    })];
    let mut options = Map::new();
    args.input.describe(&mut options);
    args.boot.describe(&mut options, effective_length(&panel));
    args.lag.describe(&mut options);
    options.insert("union".into(), json!(args.union));
    let mf = manifest("panel", &args.input.input, options, cfg.seed);
    emit(
        &table,
        mf,
        Value::Array(results),
        &outcome.warnings,
        args.json.as_deref(),
    )
}

fn sequential_table(out: &urboot::SequentialOutcome, names: &[String], p_column: bool) -> String {
    let value_header = if p_column { "p-value" } else { "critical value" };
    let mut rows = vec![vec![
        "step".to_string(),
        "under H0".to_string(),
        "series".to_string(),
        "statistic".to_string(),
        value_header.to_string(),
        "reject".to_string(),
    ]];
    for (k, step) in out.steps.iter().enumerate() {
        let value = step
            .p_value
            .or(step.critical_value)
            .map_or(String::new(), fmt_stat);
        rows.push(vec![
            (k + 1).to_string(),
            format!("{} -> {}", step.h0_count, step.h1_count),
            step.series.clone().unwrap_or_else(|| "(group)".to_string()),
            fmt_stat(step.statistic),
            value,
            yes_no(step.reject).to_string(),
        ]);
    }
    let stationary: Vec<&str> = names
        .iter()
        .zip(&out.rej_h0)
        .filter_map(|(n, &r)| r.then_some(n.as_str()))
        .collect();
    let summary = if stationary.is_empty() {
        "none".to_string()
    } else {
        stationary.join(", ")
    };
    format!("{}\n stationary series: {summary}\n", render_table(&rows))
}

fn run_bsqt(args: BsqtArgs) -> Result<()> {
    let panel = args.input.load()?;
    let cfg = args.boot.config();
    let policy = args.lag.policy();
    let out = bsqt(&panel, &args.q, &cfg, args.union, &policy)?;

    let table = format!(
        "Bootstrap sequential quantile test ({} series)\n{}{}",
        panel.n_series(),
        scheme_line(&cfg),
        sequential_table(&out, &panel.names, true)
    );
    let results = sequential_json(&out, &panel.names, "BSQT");
    let mut options = Map::new();
    args.input.describe(&mut options);
    args.boot.describe(&mut options, effective_length(&panel));
    args.lag.describe(&mut options);
    options.insert("q".into(), json!(args.q));
    options.insert("union".into(), json!(args.union));
    let mf = manifest("bsqt", &args.input.input, options, cfg.seed);
    emit(&table, mf, results, &out.warnings, args.json.as_deref())
}

fn run_fdr(args: FdrArgs) -> Result<()> {
    let panel = args.input.load()?;
    let cfg = args.boot.config();
    let policy = args.lag.policy();
    let out = fdr(&panel, &cfg, args.union, &policy)?;

    let table = format!(
        "Bootstrap FDR-controlled tests ({} series)\n{}{}",
        panel.n_series(),
        scheme_line(&cfg),
        sequential_table(&out, &panel.names, false)
    );
    let results = sequential_json(&out, &panel.names, "FDR");
    let mut options = Map::new();
    args.input.describe(&mut options);
    args.boot.describe(&mut options, effective_length(&panel));
    args.lag.describe(&mut options);
    options.insert("union".into(), json!(args.union));
    let mf = manifest("fdr", &args.input.input, options, cfg.seed);
    emit(&table, mf, results, &out.warnings, args.json.as_deref())
}

fn run_orders(args: OrdersArgs) -> Result<()> {
    let panel = args.input.load()?;
    let cfg = args.boot.config();
    let policy = args.lag.policy();
    let dspec = dspec_from(args.dc, args.detr);
    let opts = OrderOptions {
        max_order: args.max_order,
        kind: args.kind,
        union: args.union,
        dspec,
        q: args.q.clone(),
    };
    let res = order_integration(&panel, &opts, &cfg, &policy)?;

    let mut rows = vec![vec!["series".to_string(), "order".to_string()]];
    for (name, &d) in panel.names.iter().zip(&res.d) {
        rows.push(vec![name.clone(), format!("I({d})")]);
    }
    let mut table = format!(
        "Order of integration ({} series, max order {})\n{}{}",
        panel.n_series(),
        args.max_order,
        scheme_line(&cfg),
        render_table(&rows)
    );
    for stage in &res.stages {
        let rejected = stage.rejected.iter().filter(|&&r| r).count();
        table.push_str(&format!(
            " stage d = {}: unit root rejected for {rejected} of {} series\n",
            stage.d,
            stage.names.len()
        ));
    }

    let results: Vec<Value> = panel
        .names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let trail: Vec<Value> = res
                .stages
                .iter()
                .filter_map(|stage| {
                    let pos = stage.names.iter().position(|n| n == name)?;
                    Some(json!({"d": stage.d, "rejected": stage.rejected[pos]}))
                })
                .collect();
            json!({"series": name, "order": res.d[i], "stages": trail})
        })
        .collect();

    if let Some(path) = &args.svg {
        std::fs::write(path, plot_order_integration(&res.d, &panel.names)?)?;
    }
    if let Some(path) = &args.csv {
        write_csv(&res.diff_data, path)?;
    }

    let mut options = Map::new();
    args.input.describe(&mut options);
    args.boot.describe(&mut options, effective_length(&panel));
    args.lag.describe(&mut options);
    options.insert("max_order".into(), json!(args.max_order));
    options.insert("test".into(), json!(format!("{:?}", args.kind).to_lowercase()));
    options.insert("union".into(), json!(args.union));
    describe_dspec(&mut options, dspec);
    options.insert("q".into(), json!(args.q));
    let mf = manifest("orders", &args.input.input, options, cfg.seed);
    emit(&table, mf, Value::Array(results), &res.warnings, args.json.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Check(args) => run_check(args),
        Command::Adf(args) => run_adf(args),
        Command::Union(args) => run_union(args),
        Command::Iadf(args) => run_iadf(args),
        Command::Panel(args) => run_panel(args),
        Command::Bsqt(args) => run_bsqt(args),
        Command::Fdr(args) => run_fdr(args),
        Command::Orders(args) => run_orders(args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{e}");
                exit(0);
            }
            ErrorKind::UnknownArgument | ErrorKind::InvalidSubcommand => {
                eprint!("{e}");
                exit(64);
            }
            _ => {
                eprint!("{e}");
                exit(2);
            }
        },
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        exit(match err {
            UrError::Degenerate(_) => 3,
            _ => 2,
        });
    }
}
