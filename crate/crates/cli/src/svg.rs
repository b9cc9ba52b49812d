//! Static SVG boxplots and norm-versus-delta traces.

use std::fmt::Write as _;

const BOX_W: f64 = 110.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const PLOT_H: f64 = 300.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Type-7 quantile of sorted values.
fn q(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lo_whisker: f64,
    pub hi_whisker: f64,
    pub outliers: Vec<f64>,
}

pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let (q1, median, q3) = (q(&v, 0.25), q(&v, 0.5), q(&v, 0.75));
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside: Vec<f64> = v.iter().copied().filter(|x| *x >= lo_fence && *x <= hi_fence).collect();
    Some(BoxStats {
        q1,
        median,
        q3,
        lo_whisker: inside.first().copied().unwrap_or(q1),
        hi_whisker: inside.last().copied().unwrap_or(q3),
        outliers: v.into_iter().filter(|x| *x < lo_fence || *x > hi_fence).collect(),
    })
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: &[f64], allow_log: bool) -> Axis {
        let finite: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        let (mut lo, mut hi) = finite
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if finite.is_empty() {
            (lo, hi) = (0.0, 1.0);
        }
        let log = allow_log && lo > 0.0 && hi / lo > 1e3;
        if log {
            (lo, hi) = (lo.log10(), hi.log10());
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 1.0, hi + 1.0);
        }
        let pad = 0.05 * (hi - lo);
        Axis { lo: lo - pad, hi: hi + pad, log }
    }

    fn y(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        TOP + PLOT_H * (1.0 - (t - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..=4)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                let label = if self.log { format!("1e{t:.1}") } else { format!("{t:.3}") };
                (TOP + PLOT_H * (1.0 - i as f64 / 4.0), label)
            })
            .collect()
    }
}

fn frame(out: &mut String, width: f64, title: &str, axis: &Axis) {
    let height = TOP + PLOT_H + 60.0;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#, TOP + PLOT_H);
    for (y, label) in axis.ticks() {
        let _ = writeln!(out, r#"<line x1="{:.1}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 4.0);
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 6.0, y + 4.0);
    }
}

/// One box group per named series: median, quartiles, 1.5-IQR whiskers and
/// outlier dots. Non-finite values are skipped.
pub fn boxplot(title: &str, groups: &[(String, Vec<f64>)]) -> String {
    let all: Vec<f64> = groups.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let axis = Axis::fit(&all, true);
    let width = LEFT + BOX_W * groups.len().max(1) as f64 + 20.0;
    let mut out = String::new();
    frame(&mut out, width, title, &axis);
    for (i, (name, values)) in groups.iter().enumerate() {
        let cx = LEFT + BOX_W * (i as f64 + 0.5);
        let _ = writeln!(out, r#"<g class="box" data-method="{}">"#, escape(name));
        if let Some(s) = box_stats(values) {
            let (x0, x1) = (cx - 0.3 * BOX_W, cx + 0.3 * BOX_W);
            let (yq1, yq3, ym) = (axis.y(s.q1), axis.y(s.q3), axis.y(s.median));
            let (ylo, yhi) = (axis.y(s.lo_whisker), axis.y(s.hi_whisker));
            let _ = writeln!(out, r#"<line x1="{cx:.2}" y1="{yq1:.2}" x2="{cx:.2}" y2="{ylo:.2}" stroke="black"/>"#);
            let _ = writeln!(out, r#"<line x1="{cx:.2}" y1="{yq3:.2}" x2="{cx:.2}" y2="{yhi:.2}" stroke="black"/>"#);
            for y in [ylo, yhi] {
                let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#, cx - 0.12 * BOX_W, cx + 0.12 * BOX_W);
            }
            let _ = writeln!(
                out,
                r##"<rect x="{x0:.2}" y="{yq3:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="black"/>"##,
                x1 - x0,
                (yq1 - yq3).max(0.5)
            );
            let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{ym:.2}" x2="{x1:.2}" y2="{ym:.2}" stroke="black" stroke-width="2"/>"#);
            for o in &s.outliers {
                let _ = writeln!(out, r#"<circle cx="{cx:.2}" cy="{:.2}" r="2.5" fill="none" stroke="black"/>"#, axis.y(*o));
            }
        }
        let _ = writeln!(out, r#"<text x="{cx:.2}" y="{:.1}" text-anchor="middle">{}</text>"#, TOP + PLOT_H + 20.0, escape(name));
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

/// Log-log trace of the estimate norm against delta, with the clean norm
/// and ten times the clean norm as dashed references.
pub fn norm_trace(title: &str, deltas: &[f64], norms: &[Option<f64>], clean_norm: f64) -> String {
    let mut ys: Vec<f64> = norms.iter().flatten().copied().collect();
    ys.push(clean_norm.max(f64::MIN_POSITIVE));
    ys.push(10.0 * clean_norm.max(f64::MIN_POSITIVE));
    let ys: Vec<f64> = ys.into_iter().filter(|v| *v > 0.0).collect();
    let mut axis = Axis::fit(&ys, false);
    let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if lo.is_finite() && lo > 0.0 {
        let (l, h) = (lo.log10(), hi.log10());
        let (l, h) = if h - l < 1e-12 { (l - 1.0, h + 1.0) } else { (l, h) };
        axis = Axis { lo: l - 0.05 * (h - l), hi: h + 0.05 * (h - l), log: true };
    }
    let xs: Vec<f64> = deltas.iter().map(|d| d.max(f64::MIN_POSITIVE).log10()).collect();
    let (xlo, xhi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (xlo, xhi) = if !(xhi - xlo > 1e-12) { (xlo - 1.0, xlo + 1.0) } else { (xlo, xhi) };
    let plot_w = 420.0;
    let width = LEFT + plot_w + 30.0;
    let px = |x: f64| LEFT + 10.0 + (plot_w - 20.0) * (x - xlo) / (xhi - xlo);
    let mut out = String::new();
    frame(&mut out, width, title, &axis);
    let bottom = TOP + PLOT_H;
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{bottom:.1}" x2="{:.1}" y2="{bottom:.1}" stroke="black"/>"#, LEFT + plot_w);
    for (d, x) in deltas.iter().zip(&xs) {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{d:e}</text>"#, px(*x), bottom + 18.0);
    }
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">delta</text>"#, LEFT + plot_w / 2.0, bottom + 40.0);
    if clean_norm > 0.0 {
        for (v, label) in [(clean_norm, "clean"), (10.0 * clean_norm, "10x clean")] {
            let y = axis.y(v);
            let _ = writeln!(
                out,
                r#"<line x1="{LEFT}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="gray" stroke-dasharray="4 3"/><text x="{:.1}" y="{:.2}" fill="gray">{label}</text>"#,
                LEFT + plot_w,
                LEFT + plot_w - 60.0,
                y - 4.0
            );
        }
    }
    let pts: Vec<String> = xs
        .iter()
        .zip(norms)
        .filter_map(|(x, n)| n.filter(|v| *v > 0.0).map(|v| format!("{:.2},{:.2}", px(*x), axis.y(v))))
        .collect();
    if !pts.is_empty() {
        let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#3182bd" stroke-width="2"/>"##, pts.join(" "));
        for p in &pts {
            let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(out, r##"<circle cx="{x}" cy="{y}" r="3" fill="#3182bd"/>"##);
        }
    }
    out.push_str("</svg>\n");
    out
}
