//! Self-contained SVG of a phase scan.

use std::fmt::Write;

use arccover::analyze::ScanResult;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag)
}

pub fn scan_svg(r: &ScanResult) -> String {
    let cs: Vec<f64> = r.rows.iter().map(|row| row.c).collect();
    let mut lo = cs.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = cs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for v in r.no_cover_below.into_iter().chain([r.cover_above]) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let pad = ((hi - lo) * 0.05).max(0.05);
    let (lo, hi) = (lo - pad, hi + pad);
    let x = |c: f64| LEFT + (c - lo) / (hi - lo) * (W - LEFT - RIGHT);
    let y = |f: f64| TOP + (1.0 - f) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">eventually covered fraction: {} (n_max = {}, {} trials)</text>"#,
        W / 2.0,
        escape(&r.target),
        r.settings.n_max,
        r.settings.trials
    );

    let (x0, x1, y0, y1) = (x(lo), x(hi), y(0.0), y(1.0));
    if let Some(h) = r.no_cover_below {
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="#f2f2f2"/>"##,
            x(h),
            (x(r.cover_above) - x(h)).max(0.0),
            y0 - y1
        );
    }
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.2},{y1:.2} V{y0:.2} H{x1:.2}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{x0:.2}" y2="{:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{f:.2}</text>"#,
            x0 - 5.0,
            y(f),
            y(f),
            x0 - 8.0,
            y(f) + 4.0
        );
    }
    let step = nice_step((hi - lo) / 8.0);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    for i in first..=last {
        let c = i as f64 * step;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y0:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="middle">{c:.2}</text>"#,
            x(c),
            x(c),
            y0 + 5.0,
            x(c),
            y0 + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">c  (lengths c ln n / n)</text>"#,
        (x0 + x1) / 2.0,
        H - 15.0
    );

    let mut rule = |v: f64, label: &str, color: &str| {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y1:.2}" x2="{:.2}" y2="{y0:.2}" stroke="{color}" stroke-dasharray="6,4"/><text x="{:.2}" y="{:.2}" fill="{color}">{}</text>"#,
            x(v),
            x(v),
            x(v) + 4.0,
            y1 + 14.0,
            escape(label)
        );
    };
    if let Some(h) = r.no_cover_below {
        rule(h, &format!("dim_H = {h:.3}"), "#b03030");
    }
    rule(r.cover_above, &format!("dim_B + 1 = {:.3}", r.cover_above), "#3050b0");

    let pts: Vec<(f64, f64)> = r
        .rows
        .iter()
        .filter_map(|row| row.eventually_covered_fraction.map(|f| (row.c, f)))
        .collect();
    if !pts.is_empty() {
        let path: Vec<String> = pts.iter().map(|&(c, f)| format!("{:.2},{:.2}", x(c), y(f))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            path.join(" ")
        );
    }
    for row in &r.rows {
        if let (Some(f), Some(a), Some(b)) = (row.eventually_covered_fraction, row.wilson_lo, row.wilson_hi) {
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="gray"/><circle cx="{cx:.2}" cy="{:.2}" r="3" fill="black"/>"#,
                y(a),
                y(b),
                y(f),
                cx = x(row.c)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
