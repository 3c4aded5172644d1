//! Report files: CSV tables and a survival chart.

use std::fmt::Write as _;

use super::MetricsReport;
use crate::constraint::Group;

pub const CSV_HEADER: &str = "adapter,dialogues,turns,CSR,ISR,ACT_len,ACT_acc,ACT_succ,LSS,ROB,REC,REC_defined";

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

/// One row per labelled report. Rates are percentages with two decimals;
/// turn counts have two decimals; per-group columns are empty when the
/// group never occurred.
pub fn report_csv(rows: &[(String, MetricsReport)]) -> String {
    let mut out = String::from(CSV_HEADER);
    for g in Group::ALL {
        write!(out, ",ISR_{}", g.code()).unwrap();
    }
    out.push('\n');
    for (label, r) in rows {
        write!(
            out,
            "{label},{},{},{},{},{:.2},{:.2},{:.2},{:.2},{},{},{}",
            r.n_dialogues,
            r.n_turns_total,
            pct(r.csr),
            pct(r.isr),
            r.act_len,
            r.act_acc,
            r.act_succ,
            r.lss,
            pct(r.rob),
            pct(r.rec),
            r.rec_defined_dialogues
        )
        .unwrap();
        for g in Group::ALL {
            out.push(',');
            if let Some(v) = r.per_group_isr.get(&g) {
                out.push_str(&pct(*v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn survival_csv(curve: &[f64]) -> String {
    let mut out = String::from("turn,fraction\n");
    for (k, f) in curve.iter().enumerate() {
        writeln!(out, "{},{f}", k + 1).unwrap();
    }
    out
}

const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// A self-contained SVG line chart of one or more survival curves.
pub fn survival_svg(series: &[(String, Vec<f64>)]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 60.0, 20.0, 20.0, 50.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let turns = series.iter().map(|(_, c)| c.len()).max().unwrap_or(1).max(1);
    let x = |k: usize| left + plot_w * (k as f64 - 1.0) / ((turns as f64 - 1.0).max(1.0));
    let y = |f: f64| top + plot_h * (1.0 - f);

    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        writeln!(
            out,
            r##"<line x1="{left}" y1="{0:.1}" x2="{1}" y2="{0:.1}" stroke="#ddd"/><text x="{2}" y="{3:.1}" font-size="12" text-anchor="end">{4:.0}%</text>"##,
            y(f),
            left + plot_w,
            left - 6.0,
            y(f) + 4.0,
            f * 100.0
        )
        .unwrap();
    }
    let step = (turns / 10).max(1);
    for k in (1..=turns).filter(|k| *k == 1 || k % step == 0) {
        writeln!(
            out,
            r#"<text x="{:.1}" y="{}" font-size="12" text-anchor="middle">{k}</text>"#,
            x(k),
            top + plot_h + 18.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">turn</text>"#,
        left + plot_w / 2.0,
        h - 8.0
    )
    .unwrap();
    for (i, (label, curve)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let points: Vec<String> =
            curve.iter().enumerate().map(|(k, f)| format!("{:.1},{:.1}", x(k + 1), y(*f))).collect();
        writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, points.join(" "))
            .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}" text-anchor="end">{}</text>"#,
            left + plot_w - 4.0,
            top + 16.0 + 16.0 * i as f64,
            xml_escape(label)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
