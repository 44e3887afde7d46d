//! Standalone SVG scatter plots of sources, targets and trajectories.

use std::fmt::Write as _;

use crate::io::{DatasetFile, SampleFile};

pub const SOURCE_COLOR: &str = "#3b6fd4";
pub const TARGET_COLOR: &str = "#e75fa5";
const TRAJECTORY_COLOR: &str = "#9a9a9a";

const SIZE: f64 = 640.0;
const MARGIN: f64 = 56.0;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Figure {
    pub title: String,
    pub sources: Vec<[f64; 2]>,
    pub targets: Vec<[f64; 2]>,
    pub target_label: String,
    pub trajectories: Vec<Vec<[f64; 2]>>,
}

fn pt(x: &[f64]) -> [f64; 2] {
    [x[0], x[1]]
}

impl Figure {
    pub fn from_dataset(file: &DatasetFile, trajectories: bool) -> Self {
        let data = &file.trajectories;
        Self {
            title: format!("{} ({} trajectories)", file.header.kind.title(), data.len()),
            sources: data.iter().map(|r| pt(&r.start().x)).collect(),
            targets: data.iter().map(|r| pt(&r.end().x)).collect(),
            target_label: "target".into(),
            trajectories: if trajectories {
                data.iter().map(|r| r.steps.iter().map(|s| pt(&s.x)).collect()).collect()
            } else {
                Vec::new()
            },
        }
    }

    pub fn from_samples(file: &SampleFile, trajectories: bool) -> Self {
        let s = &file.samples;
        Self {
            title: format!("{} samples, M = {}", file.header.method.title(), file.header.m),
            sources: s.iter().map(|r| pt(&r.x0)).collect(),
            targets: s.iter().map(|r| pt(&r.endpoint)).collect(),
            target_label: "generated".into(),
            trajectories: if trajectories {
                s.iter().filter_map(|r| r.path.as_ref()).map(|p| p.x.iter().map(|x| pt(x)).collect()).collect()
            } else {
                Vec::new()
            },
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let all = self.sources.iter().chain(&self.targets).chain(self.trajectories.iter().flatten());
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in all.filter(|p| p[0].is_finite() && p[1].is_finite()) {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if lo[0] > hi[0] {
            return (-1.0, 1.0, -1.0, 1.0);
        }
        // square view so circles stay circles
        let half = 0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9) * 1.05;
        let cx = 0.5 * (lo[0] + hi[0]);
        let cy = 0.5 * (lo[1] + hi[1]);
        (cx - half, cx + half, cy - half, cy + half)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let span = SIZE - 2.0 * MARGIN;
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * span;
        let sy = |y: f64| SIZE - MARGIN - (y - y0) / (y1 - y0) * span;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, SIZE / 2.0, escape(&self.title));

        let (left, right, top, bottom) = (MARGIN, SIZE - MARGIN, MARGIN, SIZE - MARGIN);
        let _ = writeln!(s, r#"<g class="axes" stroke="black" stroke-width="1">"#);
        let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/>"#);
        let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}"/>"#);
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<g class="ticks">"#);
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{fx:.2}</text>"#, sx(fx), bottom + 18.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{fy:.2}</text>"#, left - 6.0, sy(fy) + 4.0);
        }
        let _ = writeln!(s, "</g>");

        if !self.trajectories.is_empty() {
            let _ = writeln!(s, r#"<g class="trajectories" fill="none" stroke="{TRAJECTORY_COLOR}" stroke-width="0.6" stroke-opacity="0.6">"#);
            for path in &self.trajectories {
                let pts: Vec<String> = path.iter().map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1]))).collect();
                let _ = writeln!(s, r#"<polyline class="trajectory" points="{}"/>"#, pts.join(" "));
            }
            let _ = writeln!(s, "</g>");
        }

        for (class, color, points) in [("source", SOURCE_COLOR, &self.sources), ("target", TARGET_COLOR, &self.targets)] {
            let _ = writeln!(s, r#"<g class="{class}s" fill="{color}" fill-opacity="0.8">"#);
            for p in points {
                let _ = writeln!(s, r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="2.5"/>"#, sx(p[0]), sy(p[1]));
            }
            let _ = writeln!(s, "</g>");
        }

        let _ = writeln!(s, r#"<g class="legend">"#);
        for (i, (color, label)) in [(SOURCE_COLOR, "source"), (TARGET_COLOR, self.target_label.as_str())].iter().enumerate() {
            let y = top + 8.0 + 18.0 * i as f64;
            let _ = writeln!(s, r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#, right - 96.0, y - 9.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, right - 80.0, escape(label));
        }
        let _ = writeln!(s, "</g>");
        s.push_str("</svg>\n");
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marker_and_polyline_counts() {
        let fig = Figure {
            title: "a < b & c".into(),
            sources: vec![[0.0, 0.0], [1.0, 1.0], [2.0, -1.0]],
            targets: vec![[3.0, 3.0], [4.0, 1.0], [5.0, 0.0]],
            target_label: "target".into(),
            trajectories: vec![vec![[0.0, 0.0], [3.0, 3.0]], vec![[1.0, 1.0], [4.0, 1.0]]],
        };
        let svg = fig.to_svg();
        assert_eq!(svg.matches(r#"<circle class="source""#).count(), 3);
        assert_eq!(svg.matches(r#"<circle class="target""#).count(), 3);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b &amp; c"));
        assert_eq!(svg, fig.to_svg());
    }

    #[test]
    fn empty_figure_still_renders() {
        let svg = Figure::default().to_svg();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 0);
    }
}
