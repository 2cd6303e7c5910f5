//! Hand-written SVG for the three plot types. Fixed 800x600 viewBox, fixed
//! number formatting, nothing time- or environment-dependent.

use std::fmt::Write;

use catmap::{DispersiveRecord, Profile, ScanRecord};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;
const TICKS: usize = 5;

struct Plot {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
    legend: Vec<(String, &'static str, bool)>,
}

impl Plot {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Self { x: widen(x), y: widen(y), body: String::new(), legend: Vec::new() }
    }

    fn sx(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn polyline(&mut self, pts: &[(f64, f64)], color: &'static str, dashed: bool, label: &str) {
        let coords: Vec<String> =
            pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.sx(x), self.sy(y))).collect();
        let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
        writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            coords.join(" ")
        )
        .unwrap();
        if !label.is_empty() {
            self.legend.push((label.to_string(), color, dashed));
        }
    }

    fn circles(&mut self, pts: &[(f64, f64)], r: f64, color: &'static str, label: &str) {
        for &(x, y) in pts {
            writeln!(self.body, r#"<circle cx="{:.2}" cy="{:.2}" r="{r:.1}" fill="{color}"/>"#, self.sx(x), self.sy(y))
                .unwrap();
        }
        if !label.is_empty() {
            self.legend.push((label.to_string(), color, false));
        }
    }

    fn finish(self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut s = String::new();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        )
        .unwrap();
        writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        writeln!(s, r#"<text x="{:.2}" y="30" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title))
            .unwrap();
        writeln!(s, r#"<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>"#).unwrap();
        writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#).unwrap();
        for k in 0..=TICKS {
            let t = k as f64 / TICKS as f64;
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            let px = self.sx(xv);
            writeln!(s, r#"<line x1="{px:.2}" y1="{y1}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, y1 + 5.0).unwrap();
            writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y1 + 20.0, tick(xv, self.x))
                .unwrap();
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let py = self.sy(yv);
            writeln!(s, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0).unwrap();
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick(yv, self.y))
                .unwrap();
        }
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 20.0, escape(x_label))
            .unwrap();
        writeln!(
            s,
            r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        )
        .unwrap();
        s.push_str(&self.body);
        for (k, (label, color, dashed)) in self.legend.iter().enumerate() {
            let ly = TOP + 15.0 + 18.0 * k as f64;
            let dash = if *dashed { r#" stroke-dasharray="6,4""# } else { "" };
            writeln!(
                s,
                r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"{dash}/>"#,
                x1 - 200.0,
                x1 - 175.0
            )
            .unwrap();
            writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x1 - 170.0, ly + 4.0, escape(label)).unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64, range: (f64, f64)) -> String {
    if range.1 - range.0 >= 10.0 {
        format!("{:.0}", v)
    } else {
        format!("{:.3}", v)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Maximal sup-norm against `N` with the three envelopes; short-period points
/// drawn large.
pub fn scan_plot(records: &[ScanRecord]) -> String {
    let (xl, xh) = bounds(records.iter().map(|r| r.N as f64));
    let (_, yh) = bounds(records.iter().flat_map(|r| [r.max_supnorm, r.upper_env, r.lower_env]));
    let mut p = Plot::new((xl, xh), (0.0, (yh * 1.05).min(1.05)));
    let curve = |f: fn(&ScanRecord) -> f64| records.iter().map(|r| (r.N as f64, f(r))).collect::<Vec<_>>();
    p.polyline(&curve(|r| r.upper_env), "#d62728", false, "(log N)^-1/2");
    p.polyline(&curve(|r| r.lower_env), "#d62728", true, "(2 log N)^-1/2");
    p.polyline(&curve(|r| r.trivial_lb), "#7f7f7f", true, "N^-1/2");
    p.circles(&curve(|r| r.max_supnorm), 2.0, "#1f77b4", "max sup-norm");
    let short: Vec<(f64, f64)> =
        records.iter().filter(|r| r.is_bdb).map(|r| (r.N as f64, r.max_supnorm)).collect();
    p.circles(&short, 6.0, "#d62728", "short period N");
    p.finish("Maximal eigenfunction sup-norm", "N", "max |u|_inf")
}

pub fn profile_plot(profile: &Profile) -> String {
    let n = profile.abs_u.len();
    let (_, yh) = bounds(profile.abs_u.iter().copied());
    let mut p = Plot::new((0.0, n.saturating_sub(1) as f64), (0.0, yh * 1.05));
    let pts: Vec<(f64, f64)> = profile.abs_u.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
    p.polyline(&pts, "#1f77b4", false, "|u_i|");
    let flat = (n as f64).powf(-0.5);
    p.polyline(&[(0.0, flat), (n.saturating_sub(1) as f64, flat)], "#7f7f7f", true, "N^-1/2");
    p.finish(&format!("Extremal eigenfunction, N = {}", profile.N), "i", "|u_i|")
}

pub fn dispersive_plot(records: &[DispersiveRecord]) -> String {
    const COLORS: [&str; 4] = ["#1f77b4", "#2ca02c", "#9467bd", "#8c564b"];
    let (xl, xh) = bounds(records.iter().map(|r| r.j as f64));
    let (_, yh) = bounds(records.iter().map(|r| r.norm_1_inf));
    let mut p = Plot::new((xl, xh), (0.0, (yh * 1.1).max(1e-3)));
    let mut dims: Vec<usize> = records.iter().map(|r| r.N).collect();
    dims.dedup();
    for (k, &n) in dims.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let rows: Vec<&DispersiveRecord> = records.iter().filter(|r| r.N == n).collect();
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.j as f64, r.norm_1_inf)).collect();
        p.polyline(&pts, color, false, &format!("N = {n}"));
        p.circles(&pts, 2.5, color, "");
        // The bound grows like lambda^{j/2}; only its visible part is drawn.
        let bound: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.bound.map(|b| (r.j as f64, b)))
            .take_while(|&(_, b)| b <= p.y.1)
            .collect();
        if bound.len() > 1 {
            p.polyline(&bound, "#d62728", true, &format!("sqrt(|b_j|/{n})"));
        }
    }
    p.finish("Dispersive norms of propagator powers", "j", "|M^j|_{1->inf}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(n: usize, v: f64, bdb: bool) -> ScanRecord {
        ScanRecord {
            N: n,
            n_N: 3,
            max_supnorm: v,
            lower_env: 0.4,
            upper_env: 0.6,
            trivial_lb: 0.1,
            is_bdb: bdb,
            witness_index: 0,
            cluster_dim: 1,
        }
    }

    #[test]
    fn scan_plot_shape() {
        let svg = scan_plot(&[rec(5, 0.7, true), rec(7, 0.5, false)]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains(r#"viewBox="0 0 800 600""#));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches(r#"r="6.0""#).count(), 1);
        assert_eq!(svg, scan_plot(&[rec(5, 0.7, true), rec(7, 0.5, false)]));
    }

    #[test]
    fn degenerate_ranges_do_not_divide_by_zero() {
        let svg = scan_plot(&[rec(5, 0.7, true)]);
        assert!(!svg.contains("NaN") && !svg.contains("inf,") && !svg.contains("=\"inf"));
    }
}
