//! Plot output for experiment results: an SVG line chart of per-step cost against
//! `n` (one series per policy, plus the optimum where present) and the same data
//! as a whitespace-separated table for external plotting tools.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::bench::ResultRow;
use crate::error::{Error, Result};

/// Name of the series built from the `opt_cost` column.
pub const OPT_SERIES: &str = "opt";

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    pub log_x: bool,
    pub log_y: bool,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self { title: "cost per time step".into(), log_x: false, log_y: false, width: 720.0, height: 450.0 }
    }
}

/// Per-step cost series: name → (n → mean over repetitions), in first-seen order.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTable {
    pub names: Vec<String>,
    pub ns: Vec<usize>,
    /// `values[s][i]` for series `s` at `ns[i]`.
    pub values: Vec<Vec<Option<f64>>>,
}

/// Groups rows by policy and averages repetitions. Rows with errors are skipped.
pub fn series(rows: &[ResultRow]) -> Result<SeriesTable> {
    if rows.is_empty() {
        return Err(Error::domain("no result rows to plot"));
    }
    let mut names: Vec<String> = Vec::new();
    let mut acc: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    let mut add = |name: &str, n: usize, v: f64, names: &mut Vec<String>| {
        let s = names.iter().position(|x| x == name).unwrap_or_else(|| {
            names.push(name.to_string());
            names.len() - 1
        });
        let e = acc.entry((s, n)).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    };
    let mut opt_seen: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.error.is_none()) {
        add(&r.policy, r.n, r.per_step_cost, &mut names);
        if let Some(o) = r.opt_cost {
            opt_seen.insert((r.n, r.rep), o / r.n as f64);
        }
    }
    for ((n, _), v) in opt_seen {
        add(OPT_SERIES, n, v, &mut names);
    }
    let mut ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let values = (0..names.len())
        .map(|s| ns.iter().map(|&n| acc.get(&(s, n)).map(|&(sum, c)| sum / c as f64)).collect())
        .collect();
    Ok(SeriesTable { names, ns, values })
}

/// The plain-text table: a header line `n <series...>`, then one line per `n`;
/// missing values are written as `nan`.
pub fn text_table(table: &SeriesTable) -> String {
    let mut out = String::from("n");
    for name in &table.names {
        out.push(' ');
        out.push_str(name);
    }
    out.push('\n');
    for (i, n) in table.ns.iter().enumerate() {
        out.push_str(&n.to_string());
        for s in &table.values {
            out.push(' ');
            match s[i] {
                Some(v) => out.push_str(&v.to_string()),
                None => out.push_str("nan"),
            }
        }
        out.push('\n');
    }
    out
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let vals: Vec<f64> =
            values.filter(|v| v.is_finite() && (!log || *v > 0.0)).map(|v| if log { v.log10() } else { v }).collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 * hi.abs().max(1.0) {
            // A single point: pad so it sits in the middle of the axis.
            let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
            (lo - pad, hi + pad)
        } else {
            (lo, hi)
        };
        Axis { lo, hi, log }
    }

    /// Position in [0, 1].
    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=4)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / 4.0)
            .map(|v| if self.log { 10f64.powf(v) } else { v })
            .collect()
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e5 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the series as a standalone SVG document.
pub fn svg(table: &SeriesTable, opts: &PlotOptions) -> String {
    let (w, h) = (opts.width, opts.height);
    let (ml, mr, mt, mb) = (80.0, 170.0, 40.0, 50.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let xa = Axis::new(table.ns.iter().map(|&n| n as f64), opts.log_x);
    let ya = Axis::new(table.values.iter().flatten().flatten().copied(), opts.log_y);
    let px = |f: f64| ml + f * pw;
    let py = |f: f64| mt + (1.0 - f) * ph;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        ml + pw / 2.0,
        escape(&opts.title)
    );
    let _ = writeln!(s, r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in xa.ticks() {
        if let Some(f) = xa.frac(t) {
            let x = px(f);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
                mt + ph,
                mt + ph + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
                mt + ph + 18.0,
                label(t)
            );
        }
    }
    for t in ya.ticks() {
        if let Some(f) = ya.frac(t) {
            let y = py(f);
            let _ = writeln!(s, r#"<line x1="{:.1}" y1="{y:.1}" x2="{ml}" y2="{y:.1}" stroke="black"/>"#, ml - 5.0);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
                ml - 8.0,
                y + 4.0,
                label(t)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">n</text>"#,
        ml + pw / 2.0,
        h - 10.0
    );
    for (si, name) in table.names.iter().enumerate() {
        let color = COLORS[si % COLORS.len()];
        let pts: Vec<(f64, f64)> = table
            .ns
            .iter()
            .zip(&table.values[si])
            .filter_map(|(&n, v)| Some((px(xa.frac(n as f64)?), py(ya.frac((*v)?)?))))
            .collect();
        if pts.len() > 1 {
            let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                coords.join(" ")
            );
        }
        for (x, y) in &pts {
            let _ = writeln!(s, r#"<circle cx="{x:.1}" cy="{y:.1}" r="3" fill="{color}"/>"#);
        }
        let ly = mt + 10.0 + 18.0 * si as f64;
        let lx = ml + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Builds both outputs: `(svg, text table)`.
pub fn emit_plot_data(rows: &[ResultRow], opts: &PlotOptions) -> Result<(String, String)> {
    let table = series(rows)?;
    Ok((svg(&table, opts), text_table(&table)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, policy: &str, rep: usize, per_step: f64, opt: Option<f64>) -> ResultRow {
        ResultRow {
            n,
            policy: policy.into(),
            rep,
            total_cost: per_step * n as f64,
            per_step_cost: per_step,
            max_stack: 1,
            opt_cost: opt,
            ratio: opt.map(|o| per_step * n as f64 / o),
            error: None,
        }
    }

    #[test]
    fn empty_table_is_an_error() {
        assert!(emit_plot_data(&[], &PlotOptions::default()).is_err());
    }

    #[test]
    fn single_row_gives_single_point() {
        let (svg, table) = emit_plot_data(&[row(1, "brb:5", 0, 2.0, None)], &PlotOptions::default()).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<polyline"));
        assert_eq!(table, "n brb:5\n1 2\n");
    }

    #[test]
    fn series_with_opt_and_reps() {
        let rows = vec![
            row(10, "brb:5", 0, 2.0, Some(15.0)),
            row(10, "brb:5", 1, 4.0, Some(25.0)),
            row(10, "default:5", 0, 5.0, Some(15.0)),
            row(20, "brb:5", 0, 3.0, None),
        ];
        let t = series(&rows).unwrap();
        assert_eq!(t.names, vec!["brb:5", "default:5", OPT_SERIES]);
        assert_eq!(t.values[0], vec![Some(3.0), Some(3.0)]);
        assert_eq!(t.values[1], vec![Some(5.0), None]);
        assert_eq!(t.values[2], vec![Some(2.0), None]);
        let text = text_table(&t);
        assert_eq!(text.lines().nth(2), Some("20 3 nan nan"));
        let svg = svg(&t, &PlotOptions { log_x: true, log_y: true, ..Default::default() });
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
