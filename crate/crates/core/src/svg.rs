//! Minimal static SVG charts for attribution and audit reports.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const ROW: f64 = 26.0;
const MARGIN: f64 = 40.0;
const LABEL_W: f64 = 160.0;
const POSITIVE: &str = "#d6604d";
const NEGATIVE: &str = "#4393c3";
const NEUTRAL: &str = "#5e5e5e";

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="24" font-size="14">{}</text>"#, escape(title));
}

/// Horizontal bars around a zero axis, red for positive and blue for negative.
pub fn signed_bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let height = MARGIN * 2.0 + ROW * labels.len() as f64;
    let span = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let plot_w = WIDTH - LABEL_W - 2.0 * MARGIN;
    let zero_x = LABEL_W + MARGIN + plot_w / 2.0;
    let scale = plot_w / 2.0 / span;

    let mut out = String::new();
    header(&mut out, height, title);
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let y = MARGIN + i as f64 * ROW;
        let w = v.abs() * scale;
        let x = if v >= 0.0 { zero_x } else { zero_x - w };
        let fill = if v >= 0.0 { POSITIVE } else { NEGATIVE };
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, LABEL_W + MARGIN - 8.0, y + 16.0, escape(label));
        let _ = writeln!(out, r#"<rect x="{x:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{fill}"/>"#, y + 4.0, ROW - 8.0);
        let (tx, anchor) = if v >= 0.0 { (x + w + 4.0, "start") } else { (x - 4.0, "end") };
        let _ = writeln!(out, r#"<text x="{tx:.2}" y="{}" text-anchor="{anchor}">{v:.3}</text>"#, y + 16.0);
    }
    let _ = writeln!(out, r#"<line x1="{zero_x:.2}" y1="{MARGIN}" x2="{zero_x:.2}" y2="{:.2}" stroke="black"/>"#, height - MARGIN);
    out.push_str("</svg>\n");
    out
}

/// Horizontal bars on a [0, 1] axis.
pub fn proportion_bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let height = MARGIN * 2.0 + ROW * labels.len() as f64;
    let plot_w = WIDTH - LABEL_W - 2.0 * MARGIN - 50.0;
    let x0 = LABEL_W + MARGIN;
    let mut out = String::new();
    header(&mut out, height, title);
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let y = MARGIN + i as f64 * ROW;
        let w = v.clamp(0.0, 1.0) * plot_w;
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 - 8.0, y + 16.0, escape(label));
        let _ = writeln!(out, r#"<rect x="{x0}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{NEUTRAL}"/>"#, y + 4.0, ROW - 8.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{}">{:.1}%</text>"#, x0 + w + 4.0, y + 16.0, v * 100.0);
    }
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{MARGIN}" x2="{x0}" y2="{:.2}" stroke="black"/>"#, height - MARGIN);
    out.push_str("</svg>\n");
    out
}

/// Points joined in order on a [0, 1] vertical axis, one labelled tick per point.
pub fn trend_chart(title: &str, x_labels: &[String], values: &[f64], point_labels: &[String]) -> String {
    let height = 360.0;
    let plot_h = height - 3.0 * MARGIN;
    let plot_w = WIDTH - 3.0 * MARGIN;
    let n = values.len();
    let x_at = |i: usize| if n <= 1 { MARGIN * 2.0 + plot_w / 2.0 } else { MARGIN * 2.0 + plot_w * i as f64 / (n - 1) as f64 };
    let y_at = |v: f64| MARGIN * 1.5 + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut out = String::new();
    header(&mut out, height, title);
    let base_y = y_at(0.0);
    let _ = writeln!(out, r#"<line x1="{}" y1="{base_y:.2}" x2="{}" y2="{base_y:.2}" stroke="black"/>"#, MARGIN * 2.0, MARGIN * 2.0 + plot_w);
    let _ = writeln!(out, r#"<line x1="{}" y1="{:.2}" x2="{}" y2="{base_y:.2}" stroke="black"/>"#, MARGIN * 2.0, y_at(1.0), MARGIN * 2.0);
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{:.0}%</text>"#, MARGIN * 2.0 - 6.0, y_at(tick) + 4.0, tick * 100.0);
    }
    if n > 1 {
        let pts: Vec<String> = values.iter().enumerate().map(|(i, &v)| format!("{:.2},{:.2}", x_at(i), y_at(v))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{NEUTRAL}"/>"#, pts.join(" "));
    }
    for (i, &v) in values.iter().enumerate() {
        let (x, y) = (x_at(i), y_at(v));
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{POSITIVE}"/>"#);
        if let Some(l) = point_labels.get(i) {
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y - 8.0, escape(l));
        }
        if let Some(l) = x_labels.get(i) {
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, base_y + 16.0, escape(l));
        }
    }
    out.push_str("</svg>\n");
    out
}
