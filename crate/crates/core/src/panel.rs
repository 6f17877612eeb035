use std::io::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::detrend::Deterministic;
use crate::error::{validation, Result, UrError};

/// A panel of `N` named time series observed over `T` periods.
///
/// Missing cells carry `NaN` in `columns` and `true` in `mask`; the two are
/// kept in lockstep by the constructors, and all downstream code consults the
/// mask rather than testing for `NaN`. Columns are stored series-major:
/// `columns[i][t]` is series `i` at period `t` (0-based).
#[derive(Debug, Clone)]
pub struct Panel {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
    pub mask: Vec<Vec<bool>>,
    /// Optional period labels (metadata only, never used in computations).
    pub time: Option<Vec<String>>,
}

impl Panel {
    /// Builds a panel from named columns. `NaN` cells become masked; any
    /// non-finite value other than `NaN` is rejected.
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Panel> {
        if names.is_empty() {
            return Err(validation("a panel needs at least one series"));
        }
        if names.len() != columns.len() {
            return Err(validation(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(validation(format!("column {} has an empty name", i + 1)));
            }
            if names[..i].contains(name) {
                return Err(validation(format!("duplicate column name `{name}`")));
            }
        }
        let rows = columns[0].len();
        let mut mask = Vec::with_capacity(columns.len());
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != rows {
                return Err(validation(format!(
                    "column `{name}` has {} rows, expected {rows}",
                    col.len()
                )));
            }
            let mut m = Vec::with_capacity(rows);
            for v in col {
                if v.is_infinite() {
                    return Err(validation(format!(
                        "column `{name}` contains a non-finite value"
                    )));
                }
                m.push(v.is_nan());
            }
            mask.push(m);
        }
        Ok(Panel {
            names,
            columns,
            mask,
            time: None,
        })
    }

    /// Attaches period labels; the label count must match the row count.
    pub fn with_time(mut self, labels: Vec<String>) -> Result<Panel> {
        if labels.len() != self.n_rows() {
            return Err(validation(format!(
                "{} time labels for {} rows",
                labels.len(),
                self.n_rows()
            )));
        }
        self.time = Some(labels);
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_series(&self) -> usize {
        self.columns.len()
    }

    /// 0-based positions of the first and last non-missing observation of
    /// series `i`, or `None` when the column is fully missing.
    pub fn observed_span(&self, i: usize) -> Option<(usize, usize)> {
        let m = &self.mask[i];
        let first = m.iter().position(|&x| !x)?;
        let last = m.iter().rposition(|&x| !x)?;
        Some((first, last))
    }

    /// The contiguous observed stretch of series `i` as `(start, values)`,
    /// with `start` the 0-based period of the first observation.
    ///
    /// Errors when the column is fully missing or has an in-sample gap.
    pub fn series_window(&self, i: usize) -> Result<(usize, &[f64])> {
        let name = &self.names[i];
        let (first, last) = self
            .observed_span(i)
            .ok_or_else(|| validation(format!("series `{name}` is entirely missing")))?;
        if self.mask[i][first..=last].iter().any(|&m| m) {
            return Err(validation(format!(
                "series `{name}` has in-sample missing values"
            )));
        }
        Ok((first, &self.columns[i][first..=last]))
    }

    /// Restricts the panel to the named columns, in the given order.
    pub fn select_columns(&self, wanted: &[String]) -> Result<Panel> {
        let indices = wanted
            .iter()
            .map(|w| {
                self.names
                    .iter()
                    .position(|n| n == w)
                    .ok_or_else(|| validation(format!("no column named `{w}`")))
            })
            .collect::<Result<Vec<usize>>>()?;
        self.select_indices(&indices)
    }

    /// Restricts the panel to the columns at the given indices.
    pub fn select_indices(&self, indices: &[usize]) -> Result<Panel> {
        let mut names = Vec::with_capacity(indices.len());
        let mut columns = Vec::with_capacity(indices.len());
        let mut mask = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.names.len() {
                return Err(validation(format!(
                    "column index {i} out of range for {} series",
                    self.names.len()
                )));
            }
            names.push(self.names[i].clone());
            columns.push(self.columns[i].clone());
            mask.push(self.mask[i].clone());
        }
        Ok(Panel {
            names,
            columns,
            mask,
            time: self.time.clone(),
        })
    }
}

/// First/last non-missing observation per series, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsampleRange {
    pub first: Vec<usize>,
    pub last: Vec<usize>,
    /// True when every series spans the same `(first, last)` range.
    pub all_equal: bool,
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Cell contents treated as missing (after trimming).
    pub missing_tokens: Vec<String>,
    /// Whether the first column holds period labels rather than data.
    pub has_time_column: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            missing_tokens: vec!["NA".to_string(), String::new()],
            has_time_column: false,
        }
    }
}

/// Reads a rectangular CSV file with a header row into a [`Panel`].
pub fn load_csv(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Panel> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(|e| UrError::Parse(format!("{}: {e}", path.as_ref().display())))?;

    let headers = reader.headers()?.clone();
    let skip = usize::from(options.has_time_column);
    if headers.len() <= skip {
        return Err(UrError::Parse("no data columns in header".into()));
    }
    let names: Vec<String> = headers.iter().skip(skip).map(str::to_string).collect();

    let mut time = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| UrError::Parse(format!("row {}: {e}", row + 2)))?;
        if record.len() != headers.len() {
            return Err(UrError::Parse(format!(
                "row {}: {} fields, expected {}",
                row + 2,
                record.len(),
                headers.len()
            )));
        }
        if options.has_time_column {
            time.push(record[0].to_string());
        }
        for (i, cell) in record.iter().skip(skip).enumerate() {
            if options.missing_tokens.iter().any(|t| t == cell) {
                columns[i].push(f64::NAN);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    UrError::Parse(format!(
                        "row {}, column `{}`: cannot parse `{cell}` as a number",
                        row + 2,
                        names[i]
                    ))
                })?;
                columns[i].push(v);
            }
        }
    }
    if columns[0].is_empty() {
        return Err(UrError::Parse("no data rows".into()));
    }

    let panel = Panel::new(names, columns)?;
    if options.has_time_column {
        panel.with_time(time)
    } else {
        Ok(panel)
    }
}

/// Writes a panel back to CSV; masked cells become `NA`. Values are printed
/// with the shortest representation that round-trips exactly.
pub fn write_csv(panel: &Panel, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = Vec::new();
    if panel.time.is_some() {
        header.push("time".to_string());
    }
    header.extend(panel.names.iter().cloned());
    writeln!(out, "{}", header.join(","))?;
    for t in 0..panel.n_rows() {
        let mut row = Vec::with_capacity(header.len());
        if let Some(labels) = &panel.time {
            row.push(labels[t].clone());
        }
        for i in 0..panel.n_series() {
            if panel.mask[i][t] {
                row.push("NA".to_string());
            } else {
                row.push(format!("{}", panel.columns[i][t]));
            }
        }
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// True for each series that has a missing cell strictly inside its observed
/// range; leading/trailing missingness (unbalancedness) does not count.
pub fn check_missing_insample(panel: &Panel) -> Vec<bool> {
    (0..panel.n_series())
        .map(|i| match panel.observed_span(i) {
            Some((first, last)) => panel.mask[i][first..=last].iter().any(|&m| m),
            None => false,
        })
        .collect()
}

/// Locates the observed range of every series (1-based `first`/`last`).
pub fn find_nonmissing_subsample(panel: &Panel) -> Result<SubsampleRange> {
    let mut first = Vec::with_capacity(panel.n_series());
    let mut last = Vec::with_capacity(panel.n_series());
    for i in 0..panel.n_series() {
        let (f, l) = panel.observed_span(i).ok_or_else(|| {
            validation(format!("series `{}` is entirely missing", panel.names[i]))
        })?;
        first.push(f + 1);
        last.push(l + 1);
    }
    let all_equal = first.windows(2).all(|w| w[0] == w[1]) && last.windows(2).all(|w| w[0] == w[1]);
    Ok(SubsampleRange {
        first,
        last,
        all_equal,
    })
}

/// Differences column `i` of the panel `d[i]` times.
///
/// With `keep_na` the output keeps `T` rows and masks the observations lost
/// to differencing at the head of each series; otherwise every row on which
/// differencing introduced a mask is dropped.
pub fn diff_mult(panel: &Panel, d: &[usize], keep_na: bool) -> Result<Panel> {
    if d.len() != panel.n_series() {
        return Err(validation(format!(
            "{} differencing orders for {} series",
            d.len(),
            panel.n_series()
        )));
    }
    let rows = panel.n_rows();
    let mut columns = Vec::with_capacity(panel.n_series());
    let mut starts = Vec::with_capacity(panel.n_series());
    for i in 0..panel.n_series() {
        let (start, window) = panel.series_window(i)?;
        if window.len() < d[i] + 2 {
            return Err(validation(format!(
                "series `{}`: differencing {} times leaves fewer than 2 observations",
                panel.names[i], d[i]
            )));
        }
        let mut w = window.to_vec();
        for _ in 0..d[i] {
            w = w.windows(2).map(|p| p[1] - p[0]).collect();
        }
        let mut col = vec![f64::NAN; rows];
        col[start + d[i]..start + d[i] + w.len()].copy_from_slice(&w);
        columns.push(col);
        starts.push(start);
    }

    if !keep_na {
        let dropped: Vec<usize> = (0..rows)
            .filter(|&t| {
                (0..panel.n_series()).any(|i| t >= starts[i] && t < starts[i] + d[i])
            })
            .collect();
        for col in &mut columns {
            for &t in dropped.iter().rev() {
                col.remove(t);
            }
        }
        let time = panel.time.as_ref().map(|labels| {
            labels
                .iter()
                .enumerate()
                .filter(|(t, _)| !dropped.contains(t))
                .map(|(_, l)| l.clone())
                .collect()
        });
        let out = Panel::new(panel.names.clone(), columns)?;
        return match time {
            Some(labels) => out.with_time(labels),
            None => Ok(out),
        };
    }

    let out = Panel::new(panel.names.clone(), columns)?;
    match &panel.time {
        Some(labels) => out.with_time(labels.clone()),
        None => Ok(out),
    }
}

/// Innovation process for [`simulate_dgp`].
#[derive(Debug, Clone)]
pub enum Innovation {
    IidNormal,
    /// AR(1) errors u_t = phi u_{t-1} + eps_t with |phi| < 1.
    Ar1(f64),
    /// Innovation standard deviation jumps to `scale` from observation
    /// ceil(break_fraction * T) (1-based) onward.
    VarianceBreak { scale: f64, break_fraction: f64 },
}

/// Data generating process y_t = x_t + beta' d_t, x_t = rho x_{t-1} + u_t.
#[derive(Debug, Clone)]
pub struct DgpSpec {
    pub t: usize,
    pub n: usize,
    pub rho: f64,
    pub dc: Deterministic,
    /// Coefficients on the deterministic terms; length 0/1/2 for
    /// none/intercept/intercept+trend.
    pub beta: Vec<f64>,
    pub innovation: Innovation,
}

impl DgpSpec {
    fn validate(&self) -> Result<()> {
        if self.t < 2 || self.n == 0 {
            return Err(validation("simulation needs T >= 2 and N >= 1"));
        }
        if !(self.rho > -1.0 && self.rho <= 1.0) {
            return Err(validation("rho must lie in (-1, 1]"));
        }
        let want = match self.dc {
            Deterministic::None => 0,
            Deterministic::Intercept => 1,
            Deterministic::InterceptTrend => 2,
        };
        if self.beta.len() != want {
            return Err(validation(format!(
                "beta has {} coefficients, deterministic component needs {want}",
                self.beta.len()
            )));
        }
        match self.innovation {
            Innovation::Ar1(phi) if phi.abs() >= 1.0 => {
                Err(validation("AR(1) innovation parameter must satisfy |phi| < 1"))
            }
            Innovation::VarianceBreak { break_fraction, .. }
                if !(break_fraction > 0.0 && break_fraction < 1.0) =>
            {
                Err(validation("break_fraction must lie in (0, 1)"))
            }
            _ => Ok(()),
        }
    }
}

/// Draws `N` independent series from the process in `spec`; deterministic
/// for a fixed seed.
pub fn simulate_dgp(spec: &DgpSpec, seed: u64) -> Result<Panel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let brk = match spec.innovation {
        Innovation::VarianceBreak { break_fraction, .. } => {
            (break_fraction * spec.t as f64).ceil() as usize
        }
        _ => 0,
    };
    let mut columns = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let mut col = Vec::with_capacity(spec.t);
        let mut x = 0.0;
        let mut u_prev = 0.0;
        for t in 1..=spec.t {
            let eps: f64 = rng.sample(StandardNormal);
            let u = match spec.innovation {
                Innovation::IidNormal => eps,
                Innovation::Ar1(phi) => {
                    let u = phi * u_prev + eps;
                    u_prev = u;
                    u
                }
                Innovation::VarianceBreak { scale, .. } => {
                    if t >= brk {
                        scale * eps
                    } else {
                        eps
                    }
                }
            };
            x = spec.rho * x + u;
            let det = match spec.dc {
                Deterministic::None => 0.0,
                Deterministic::Intercept => spec.beta[0],
                Deterministic::InterceptTrend => spec.beta[0] + spec.beta[1] * t as f64,
            };
            col.push(x + det);
        }
        columns.push(col);
    }
    let names = (1..=spec.n).map(|i| format!("Y{i}")).collect();
    Panel::new(names, columns)
}
