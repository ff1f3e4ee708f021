//! Static SVG figures written with plain string formatting.

use std::fmt::Write as _;

use crate::esm::Manifold;
use crate::planner::{SearchResult, TrajectorySample};
use crate::track::{FrenetPose, Track};

/// Explored branches drawn at most per plan figure.
pub const MAX_EXPLORED_SEGMENTS: usize = 20_000;

/// Axis-aligned world rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn around<'a>(points: impl IntoIterator<Item = &'a (f64, f64)>) -> Option<Bounds> {
        let mut it = points.into_iter().filter(|p| p.0.is_finite() && p.1.is_finite());
        let first = it.next()?;
        let mut b = Bounds {
            x_min: first.0,
            x_max: first.0,
            y_min: first.1,
            y_max: first.1,
        };
        for p in it {
            b.x_min = b.x_min.min(p.0);
            b.x_max = b.x_max.max(p.0);
            b.y_min = b.y_min.min(p.1);
            b.y_max = b.y_max.max(p.1);
        }
        Some(b)
    }

    pub fn padded(self, frac: f64) -> Bounds {
        let px = (self.x_max - self.x_min).max(1e-9) * frac;
        let py = (self.y_max - self.y_min).max(1e-9) * frac;
        Bounds {
            x_min: self.x_min - px,
            x_max: self.x_max + px,
            y_min: self.y_min - py,
            y_max: self.y_max + py,
        }
    }
}

/// One plot area mapping world coordinates into a pixel rectangle, y up.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    world: Bounds,
    left: f64,
    top: f64,
    width: f64,
    height: f64,
}

impl Frame {
    /// Fits `world` into the pixel rectangle. With `equal_aspect` both axes
    /// share one scale and the drawing is centered.
    pub fn new(world: Bounds, left: f64, top: f64, width: f64, height: f64, equal_aspect: bool) -> Frame {
        let wx = (world.x_max - world.x_min).max(1e-9);
        let wy = (world.y_max - world.y_min).max(1e-9);
        if !equal_aspect {
            return Frame { world, left, top, width, height };
        }
        let scale = (width / wx).min(height / wy);
        let (w, h) = (wx * scale, wy * scale);
        Frame {
            world,
            left: left + 0.5 * (width - w),
            top: top + 0.5 * (height - h),
            width: w,
            height: h,
        }
    }

    pub fn map(&self, p: (f64, f64)) -> (f64, f64) {
        let b = &self.world;
        let wx = (b.x_max - b.x_min).max(1e-9);
        let wy = (b.y_max - b.y_min).max(1e-9);
        (
            self.left + (p.0 - b.x_min) / wx * self.width,
            self.top + (b.y_max - p.1) / wy * self.height,
        )
    }
}

/// An SVG document under construction.
#[derive(Debug, Clone)]
pub struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    pub fn new(width: f64, height: f64) -> Svg {
        Svg {
            width,
            height,
            body: String::new(),
        }
    }

    pub fn polyline(&mut self, frame: &Frame, pts: &[(f64, f64)], stroke: &str, stroke_width: f64) {
        if pts.len() < 2 {
            return;
        }
        let _ = write!(self.body, "<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{stroke_width}\" points=\"");
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = frame.map(*p);
            let sep = if i == 0 { "" } else { " " };
            let _ = write!(self.body, "{sep}{x:.2},{y:.2}");
        }
        self.body.push_str("\"/>\n");
    }

    /// Many independent segments in one path element.
    pub fn segments(&mut self, frame: &Frame, segs: &[((f64, f64), (f64, f64))], stroke: &str, stroke_width: f64) {
        if segs.is_empty() {
            return;
        }
        let _ = write!(self.body, "<path fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{stroke_width}\" d=\"");
        for (a, b) in segs {
            let (a, b) = (frame.map(*a), frame.map(*b));
            let _ = write!(self.body, "M{:.2} {:.2}L{:.2} {:.2}", a.0, a.1, b.0, b.1);
        }
        self.body.push_str("\"/>\n");
    }

    pub fn dots(&mut self, frame: &Frame, pts: &[(f64, f64)], fill: &str, radius: f64) {
        for p in pts {
            let (x, y) = frame.map(*p);
            let _ = writeln!(self.body, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{radius}\" fill=\"{fill}\"/>");
        }
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(self.body, "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"{fill}\"/>");
    }

    pub fn text(&mut self, x: f64, y: f64, size: f64, content: &str) {
        let escaped = content.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"{size}\">{escaped}</text>"
        );
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n",
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Left and right road edges as polylines.
pub fn track_edges(track: &Track) -> [Vec<(f64, f64)>; 2] {
    let half = 0.5 * track.width();
    let n = (track.length() / 0.5).ceil().max(1.0) as usize;
    let edge = |d: f64| -> Vec<(f64, f64)> {
        (0..=n)
            .filter_map(|i| track.from_frenet(FrenetPose::new(track.length() * i as f64 / n as f64, d)).ok())
            .map(|p| (p.x, p.y))
            .collect()
    };
    [edge(half), edge(-half)]
}

fn track_frame(track: &Track, extra: &[(f64, f64)], size: f64) -> (Frame, [Vec<(f64, f64)>; 2]) {
    let edges = track_edges(track);
    let b = Bounds::around(edges[0].iter().chain(&edges[1]).chain(extra))
        .unwrap_or(Bounds { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 })
        .padded(0.03);
    (Frame::new(b, 10.0, 30.0, size - 20.0, size - 40.0, true), edges)
}

fn xy(samples: &[TrajectorySample]) -> Vec<(f64, f64)> {
    samples.iter().map(|p| (p.state.pose.x, p.state.pose.y)).collect()
}

/// Road edges, explored branches, and the selected plan.
pub fn plan_svg(track: &Track, result: &SearchResult, title: &str) -> String {
    let path = xy(&result.trajectory);
    let size = 900.0;
    let (frame, edges) = track_frame(track, &path, size);
    let mut svg = Svg::new(size, size);
    svg.text(10.0, 20.0, 14.0, title);
    for e in &edges {
        svg.polyline(&frame, e, "black", 1.5);
    }
    let explored = &result.explored;
    let segs: Vec<_> = explored
        .iter()
        .filter_map(|n| {
            let p = explored.get(n.parent?)?;
            Some(((p.state.pose.x, p.state.pose.y), (n.state.pose.x, n.state.pose.y)))
        })
        .take(MAX_EXPLORED_SEGMENTS)
        .collect();
    svg.segments(&frame, &segs, "#9ab", 0.5);
    svg.polyline(&frame, &path, "#d22", 2.0);
    let nodes: Vec<_> = result.path.iter().map(|n| (n.state.pose.x, n.state.pose.y)).collect();
    svg.dots(&frame, &nodes, "#d22", 2.5);
    svg.finish()
}

/// Executed trajectory over the road, drifting samples highlighted.
pub fn lap_track_svg(track: &Track, samples: &[TrajectorySample], beta_drift: f64, title: &str) -> String {
    let path = xy(samples);
    let size = 900.0;
    let (frame, edges) = track_frame(track, &path, size);
    let mut svg = Svg::new(size, size);
    svg.text(10.0, 20.0, 14.0, title);
    for e in &edges {
        svg.polyline(&frame, e, "black", 1.5);
    }
    svg.polyline(&frame, &path, "#25b", 1.5);
    let drifting: Vec<_> = samples
        .iter()
        .filter(|p| p.state.dyn_state.beta.abs() > beta_drift)
        .map(|p| (p.state.pose.x, p.state.pose.y))
        .collect();
    svg.dots(&frame, &drifting, "#d22", 1.5);
    svg.finish()
}

/// Stacked time-series panels of `v`, `beta`, `psidot`, `delta` and `lambda`.
pub fn lap_states_svg(samples: &[TrajectorySample], beta_drift: f64) -> String {
    type Getter = fn(&TrajectorySample) -> f64;
    let panels: [(&str, Getter); 5] = [
        ("v [m/s]", |p| p.state.dyn_state.v),
        ("beta [rad]", |p| p.state.dyn_state.beta),
        ("psidot [rad/s]", |p| p.state.dyn_state.psidot),
        ("delta [rad]", |p| p.input.delta),
        ("lambda [-]", |p| p.input.lambda),
    ];
    let (w, ph, gap) = (1000.0, 150.0, 30.0);
    let mut svg = Svg::new(w, panels.len() as f64 * (ph + gap) + gap);
    let t_max = samples.last().map_or(1.0, |p| p.t.max(1e-9));
    for (i, (label, get)) in panels.iter().enumerate() {
        let top = gap + i as f64 * (ph + gap);
        let pts: Vec<(f64, f64)> = samples.iter().map(|p| (p.t, get(p))).collect();
        let mut b = Bounds::around(&pts).unwrap_or(Bounds { x_min: 0.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 });
        b.x_min = 0.0;
        b.x_max = t_max;
        if b.y_max - b.y_min < 1e-6 {
            b.y_min -= 0.5;
            b.y_max += 0.5;
        }
        let b = Bounds { x_min: 0.0, x_max: t_max, ..b.padded(0.05) };
        let frame = Frame::new(b, 60.0, top, w - 80.0, ph, false);
        svg.rect(60.0, top, w - 80.0, ph, "#f4f4f4");
        if i == 1 {
            let bands: Vec<_> = [beta_drift, -beta_drift]
                .iter()
                .filter(|&&y| y > b.y_min && y < b.y_max)
                .map(|&y| ((0.0, y), (t_max, y)))
                .collect();
            svg.segments(&frame, &bands, "#d22", 0.8);
        }
        if b.y_min < 0.0 && b.y_max > 0.0 {
            svg.segments(&frame, &[((0.0, 0.0), (t_max, 0.0))], "#bbb", 0.8);
        }
        svg.polyline(&frame, &pts, "#25b", 1.2);
        svg.text(65.0, top + 14.0, 12.0, &format!("{label}  [{:.3}, {:.3}]", b.y_min, b.y_max));
    }
    svg.text(60.0, gap + panels.len() as f64 * (ph + gap) - 8.0, 12.0, &format!("t [s], 0 .. {t_max:.1}"));
    svg.finish()
}

/// Manifold samples and triangulation in the `(beta, psidot)` plane.
pub fn manifold_svg(m: &Manifold) -> String {
    let pts: Vec<(f64, f64)> = m.samples().iter().map(|p| (p.dyn_state.beta, p.dyn_state.psidot)).collect();
    let b = Bounds::around(&pts)
        .unwrap_or(Bounds { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 })
        .padded(0.05);
    let (w, h) = (900.0, 700.0);
    let frame = Frame::new(b, 50.0, 30.0, w - 70.0, h - 60.0, false);
    let mut svg = Svg::new(w, h);
    svg.text(10.0, 20.0, 14.0, &format!("equilibria: {} samples, {} triangles", pts.len(), m.triangles().len()));
    let segs: Vec<_> = m
        .triangles()
        .iter()
        .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
        .filter(|(a, b)| a < b)
        .map(|(a, b)| (pts[a], pts[b]))
        .collect();
    svg.segments(&frame, &segs, "#9ab", 0.5);
    svg.dots(&frame, &pts, "#25b", 1.5);
    svg.text(w / 2.0, h - 8.0, 12.0, &format!("beta [rad], {:.2} .. {:.2}", b.x_min, b.x_max));
    svg.text(5.0, h / 2.0, 12.0, &format!("psidot {:.2} .. {:.2}", b.y_min, b.y_max));
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_maps_corners_with_y_up() {
        let b = Bounds { x_min: 0.0, x_max: 10.0, y_min: 0.0, y_max: 5.0 };
        let f = Frame::new(b, 0.0, 0.0, 100.0, 50.0, false);
        assert_eq!(f.map((0.0, 0.0)), (0.0, 50.0));
        assert_eq!(f.map((10.0, 5.0)), (100.0, 0.0));
        let eq = Frame::new(b, 0.0, 0.0, 100.0, 100.0, true);
        assert_eq!(eq.map((0.0, 5.0)), (0.0, 25.0));
        assert_eq!(eq.map((10.0, 0.0)), (100.0, 75.0));
    }

    #[test]
    fn text_is_escaped() {
        let mut s = Svg::new(10.0, 10.0);
        s.text(0.0, 0.0, 10.0, "a<b & c>");
        let out = s.finish();
        assert!(out.contains("a&lt;b &amp; c&gt;"));
        assert!(out.trim_end().ends_with("</svg>"));
    }
}
