//! Plain-text and CSV rendering of result tables and descriptives. Rendering
//! reads only serializable data, so a table re-rendered from `result.json`
//! matches the original byte for byte.

use std::fmt::Write as _;

use flightdelay::panel::Descriptives;
use flightdelay::EstimationResult;

use crate::pipeline::{ColumnReport, TableDocument};

const LABEL_WIDTH: usize = 24;
const CELL_WIDTH: usize = 14;

/// `***` below 0.01, `**` below 0.05, `*` below 0.10.
pub fn stars(p: f64) -> &'static str {
    if !p.is_finite() {
        ""
    } else if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// Four decimals; `n/a` for non-finite values.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        let s = format!("{v:.4}");
        // avoid "-0.0000"
        if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
            s.trim_start_matches('-').to_string()
        } else {
            s
        }
    } else {
        "n/a".into()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

fn is_dummy(name: &str) -> bool {
    name.starts_with("time[") || name.starts_with("unit[")
}

/// Coefficient names in order of first appearance, fixed-effect dummies
/// excluded.
pub fn coefficient_rows(doc: &TableDocument) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in &doc.columns {
        if let Some(r) = &c.result {
            for n in &r.names {
                if !is_dummy(n) && !out.contains(n) {
                    out.push(n.clone());
                }
            }
        }
    }
    out
}

fn line(out: &mut String, label: &str, cells: &[String]) {
    let mut s = format!("{label:<LABEL_WIDTH$}");
    for c in cells {
        let _ = write!(s, "{c:>CELL_WIDTH$}");
    }
    out.push_str(s.trim_end());
    out.push('\n');
}

/// Like [`line`], leaving room for the star field of coefficient cells.
fn aligned(out: &mut String, label: &str, cells: &[String]) {
    let mut s = format!("{label:<LABEL_WIDTH$}");
    for c in cells {
        let _ = write!(s, "{c:>w$}   ", w = CELL_WIDTH - 3);
    }
    out.push_str(s.trim_end());
    out.push('\n');
}

fn per_column<F: Fn(&EstimationResult) -> String>(doc: &TableDocument, f: F) -> Vec<String> {
    doc.columns.iter().map(|c| c.result.as_ref().map_or_else(String::new, &f)).collect()
}

fn fe_cell(c: &ColumnReport) -> String {
    match &c.result {
        Some(r) if r.fe.unit_effects || r.fe.time_effects => "Yes".into(),
        Some(_) => "No".into(),
        None => String::new(),
    }
}

/// Regression table: one column per specification, coefficients with
/// significance stars and bracketed standard errors, then fit statistics and
/// diagnostics.
pub fn render_table(doc: &TableDocument) -> String {
    let mut out = String::new();
    let width = LABEL_WIDTH + CELL_WIDTH * doc.columns.len();
    let rule = "-".repeat(width);
    out.push_str(&rule);
    out.push('\n');
    aligned(&mut out, "", &doc.columns.iter().map(|c| c.label.clone()).collect::<Vec<_>>());
    aligned(&mut out, "", &doc.columns.iter().map(|c| c.heading.clone()).collect::<Vec<_>>());
    aligned(&mut out, "", &doc.columns.iter().map(|c| c.estimator.tag().to_string()).collect::<Vec<_>>());
    out.push_str(&rule);
    out.push('\n');

    for name in coefficient_rows(doc) {
        // a three-character star field follows every number so decimals align
        let coef = per_column(doc, |r| match r.names.iter().position(|n| *n == name) {
            Some(i) => format!("{}{:<3}", num(r.coefficients[i]), stars(r.p_values[i])),
            None => String::new(),
        });
        let se = per_column(doc, |r| match r.names.iter().position(|n| *n == name) {
            Some(i) => format!("[{}]  ", num(r.std_errors[i])),
            None => String::new(),
        });
        line(&mut out, &name, &coef);
        line(&mut out, "", &se);
    }
    out.push_str(&rule);
    out.push('\n');

    let fe: Vec<String> = doc.columns.iter().map(fe_cell).collect();
    aligned(&mut out, "FE", &fe);
    aligned(&mut out, "Adj. R-Squared", &per_column(doc, |r| num(r.fit.adj_r_squared)));
    aligned(&mut out, "RMSE Statistic", &per_column(doc, |r| num(r.fit.rmse)));
    aligned(&mut out, "F Statistic", &per_column(doc, |r| opt(r.fit.f_stat)));
    aligned(&mut out, "KP Statistic", &per_column(doc, |r| opt(r.diagnostics.kp)));
    aligned(&mut out, "KP P-Value", &per_column(doc, |r| opt(r.diagnostics.kp_p_value)));
    aligned(&mut out, "J Statistic", &per_column(doc, |r| opt(r.diagnostics.j)));
    aligned(&mut out, "J P-Value", &per_column(doc, |r| opt(r.diagnostics.j_p_value)));
    aligned(&mut out, "Weak CD Statistic", &per_column(doc, |r| opt(r.diagnostics.weak_cd)));
    aligned(&mut out, "Weak KP Statistic", &per_column(doc, |r| opt(r.diagnostics.weak_kp)));
    aligned(&mut out, "Nr Observations", &per_column(doc, |r| r.n.to_string()));
    out.push_str(&rule);
    out.push('\n');
    out.push_str("Standard errors in brackets. *** p<0.01, ** p<0.05, * p<0.1.\n");
    for c in &doc.columns {
        if let Some(e) = &c.error {
            let _ = writeln!(out, "Column {} failed: {e}", c.label);
        }
    }
    out
}

/// Additional diagnostics per column: every test that ran, with statistic,
/// degrees of freedom and p-value.
pub fn render_tests(doc: &TableDocument) -> String {
    let mut out = String::new();
    for c in &doc.columns {
        let Some(r) = &c.result else { continue };
        let _ = writeln!(out, "{} {} {}", c.label, c.heading, c.estimator.tag());
        for t in &r.diagnostics.tests {
            let df = match t.df2 {
                Some(d2) => format!("({}, {})", t.df, d2),
                None => format!("({})", t.df),
            };
            let _ = writeln!(
                out,
                "  {:<40}{:>14} {:<14} p = {}",
                t.name,
                num(t.statistic),
                df,
                t.p_value.map_or_else(|| "n/a".into(), num)
            );
        }
    }
    out
}

/// One row per (column, coefficient).
pub fn render_csv(doc: &TableDocument) -> String {
    let mut out = String::from("column,regressand,estimator,term,coefficient,std_error,t_stat,p_value,n\n");
    for c in &doc.columns {
        let Some(r) = &c.result else { continue };
        for (i, name) in r.names.iter().enumerate() {
            if is_dummy(name) {
                continue;
            }
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                csv_field(&c.label),
                c.regressand,
                c.estimator.tag(),
                csv_field(name),
                csv_num(r.coefficients[i]),
                csv_num(r.std_errors[i]),
                csv_num(r.t_stats[i]),
                csv_num(r.p_values[i]),
                r.n
            );
        }
    }
    out
}

fn csv_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        String::new()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Summary statistics followed by the lower-triangle correlation matrix.
pub fn render_descriptives(d: &Descriptives) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<28}{:>8}{:>12}{:>12}{:>12}{:>12}", "Variable", "N", "Mean", "SD", "Min", "Max");
    for (i, c) in d.columns.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<28}{:>8}{:>12}{:>12}{:>12}{:>12}",
            c,
            d.count[i],
            num(d.mean[i]),
            num(d.sd[i]),
            num(d.min[i]),
            num(d.max[i])
        );
    }
    out.push('\n');
    out.push_str("Correlations\n");
    let mut header = format!("{:<28}", "");
    for i in 0..d.columns.len() {
        let _ = write!(header, "{:>9}", format!("({})", i + 1));
    }
    out.push_str(header.trim_end());
    out.push('\n');
    for (i, row) in d.correlation.iter().enumerate() {
        let mut s = format!("{:<28}", format!("({}) {}", i + 1, d.columns[i]));
        for v in row {
            let cell = if v.is_finite() { format!("{v:.2}") } else { "n/a".into() };
            let _ = write!(s, "{cell:>9}");
        }
        out.push_str(s.trim_end());
        out.push('\n');
    }
    out
}
