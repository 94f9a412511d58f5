//! A minimal SVG rendering of a stability-region sweep: one panel per `a`,
//! `b` on the horizontal axis and `c` on the vertical.

use std::fmt::Write;

use flocstab::sweep::{SweepRecord, SweepResult};

use crate::output::fmt12;

const PANEL: f64 = 260.0;
const MARGIN: f64 = 50.0;

fn color(r: &SweepRecord) -> &'static str {
    if r.error.is_some() || !r.converged {
        "#d62728"
    } else if r.feasible {
        "#2ca02c"
    } else {
        "#d9d9d9"
    }
}

fn axis_index(values: &[f64], v: f64) -> usize {
    values.iter().position(|&x| x == v).unwrap_or(0)
}

pub fn render_sweep(result: &SweepResult, a_values: &[f64], b_values: &[f64], c_values: &[f64]) -> String {
    let (nb, nc) = (b_values.len(), c_values.len());
    let cw = PANEL / nb as f64;
    let ch = PANEL / nc as f64;
    let width = a_values.len() as f64 * (PANEL + MARGIN) + MARGIN;
    let height = PANEL + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    for (k, &a) in a_values.iter().enumerate() {
        let x0 = MARGIN + k as f64 * (PANEL + MARGIN);
        let y0 = MARGIN;
        let _ = writeln!(s, r#"<g><text x="{}" y="{}">a = {}</text>"#, x0, y0 - 8.0, fmt12(a));
        for r in result.records.iter().filter(|r| r.a == a) {
            let i = axis_index(b_values, r.b);
            let j = axis_index(c_values, r.c);
            let x = x0 + i as f64 * cw;
            let y = y0 + PANEL - (j + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}"/>"#,
                color(r)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{y0}" width="{PANEL}" height="{PANEL}" fill="none" stroke="black"/>"#
        );
        let (b_lo, b_hi) = (b_values[0], b_values[nb - 1]);
        let (c_lo, c_hi) = (c_values[0], c_values[nc - 1]);
        let yb = y0 + PANEL + 14.0;
        let _ = writeln!(s, r#"<text x="{x0}" y="{yb}">{}</text>"#, fmt12(b_lo));
        let _ = writeln!(s, r#"<text x="{}" y="{yb}" text-anchor="end">{}</text>"#, x0 + PANEL, fmt12(b_hi));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">b</text>"#, x0 + PANEL / 2.0, yb + 14.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 - 4.0, y0 + PANEL, fmt12(c_lo));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 - 4.0, y0 + 10.0, fmt12(c_hi));
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">c</text>"#, x0 - 4.0, y0 + PANEL / 2.0);
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
