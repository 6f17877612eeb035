use crate::error::{validation, Result};
use crate::panel::Panel;

const PRESENT_COLOR: &str = "#2e7d32";
const BOUNDARY_COLOR: &str = "#ff9800";
const INTERNAL_COLOR: &str = "#d32f2f";

/// Default color cycle for integration orders 0, 1, 2, ...
const ORDER_PALETTE: [&str; 6] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02",
];

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(width: usize, height: usize) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" \
         width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    )
}

fn legend_row(out: &mut String, x: usize, y: usize, color: &str, label: &str) {
    out.push_str(&format!(
        "<rect class=\"legend\" x=\"{x}\" y=\"{y}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n\
         <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
        x + 17,
        y + 10,
        escape_xml(label)
    ));
}

/// Renders the observation pattern of a panel as an SVG document: one cell
/// per (row, series), distinguishing present values, missing cells at the
/// boundaries of a series, and missing cells inside it.
pub fn plot_missing_pattern(panel: &Panel, labels: bool) -> String {
    let t = panel.n_rows();
    let n = panel.n_series();
    let cell_w = (720 / t.max(1)).clamp(1, 14);
    let cell_h = (480 / n.max(1)).clamp(2, 16);
    let show_labels = labels && cell_h >= 8;
    let left = if show_labels { 110 } else { 20 };
    let top = 20;
    let width = left + t * cell_w + 20;
    let height = top + n * cell_h + 60;

    let mut out = svg_open(width, height);
    let mut present = false;
    let mut boundary = false;
    let mut internal = false;
    for i in 0..n {
        let span = panel.observed_span(i);
        let y = top + i * cell_h;
        for row in 0..t {
            let inside_span = span.is_some_and(|(first, last)| row >= first && row <= last);
            let color = if !panel.mask[i][row] {
                present = true;
                PRESENT_COLOR
            } else if inside_span {
                internal = true;
                INTERNAL_COLOR
            } else {
                boundary = true;
                BOUNDARY_COLOR
            };
            out.push_str(&format!(
                "<rect class=\"cell\" x=\"{}\" y=\"{y}\" width=\"{cell_w}\" height=\"{cell_h}\" fill=\"{color}\"/>\n",
                left + row * cell_w
            ));
        }
        if show_labels {
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
                left - 6,
                y + cell_h / 2 + 4,
                escape_xml(&panel.names[i])
            ));
        }
    }

    let mut lx = left;
    let ly = top + n * cell_h + 20;
    for (show, color, label) in [
        (present, PRESENT_COLOR, "present"),
        (boundary, BOUNDARY_COLOR, "missing at the boundary"),
        (internal, INTERNAL_COLOR, "missing inside the sample"),
    ] {
        if show {
            legend_row(&mut out, lx, ly, color, label);
            lx += 170;
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Renders one colored mark per series labeled with its order of
/// integration; panels with many series flow into two columns.
pub fn plot_order_integration(d: &[usize], names: &[String]) -> Result<String> {
    plot_order_integration_with(d, names, &ORDER_PALETTE.map(String::from))
}

/// Like [`plot_order_integration`] with a caller-chosen color cycle.
pub fn plot_order_integration_with(
    d: &[usize],
    names: &[String],
    colors: &[String],
) -> Result<String> {
    if d.len() != names.len() {
        return Err(validation(format!(
            "{} orders given for {} series names",
            d.len(),
            names.len()
        )));
    }
    if d.is_empty() {
        return Err(validation("nothing to plot: no series"));
    }
    if colors.is_empty() {
        return Err(validation("at least one color is required"));
    }
    let n = d.len();
    let columns = if n > 60 { 2 } else { 1 };
    let rows = n.div_ceil(columns);
    let row_h = 16;
    let col_w = 230;
    let top = 46;
    let width = 20 + columns * col_w;
    let height = top + rows * row_h + 16;

    let mut out = svg_open(width, height);
    let mut seen: Vec<usize> = d.to_vec();
    seen.sort_unstable();
    seen.dedup();
    let mut lx = 20;
    for &order in &seen {
        legend_row(
            &mut out,
            lx,
            12,
            &colors[order % colors.len()],
            &format!("I({order})"),
        );
        lx += 70;
    }
    for (i, (&order, name)) in d.iter().zip(names).enumerate() {
        let x = 20 + (i / rows) * col_w;
        let y = top + (i % rows) * row_h;
        out.push_str(&format!(
            "<rect class=\"mark\" x=\"{x}\" y=\"{y}\" width=\"10\" height=\"10\" fill=\"{}\"/>\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
            colors[order % colors.len()],
            x + 15,
            y + 9,
            escape_xml(name)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}
