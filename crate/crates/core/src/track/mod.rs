//! Constant-width roads described by their centerline.
//!
//! Waypoints are fit with a cubic spline and resampled to a uniform spacing.
//! Between resampled vertices the centerline is the straight chord and the
//! road frame heading is interpolated linearly, which makes
//! [`Track::to_frenet`] and [`Track::from_frenet`] exact inverses.
//!
//! Frenet coordinates: `s` is arc length along the centerline and `d` the
//! signed lateral offset, positive to the left of the direction of travel.

mod shapes;
mod spline;

use std::path::Path;

use thiserror::Error;

use crate::vehicle::{normalize_angle, Pose};
use spline::PlanarSpline;

pub use shapes::{
    circle_track, mixed_circuit, mixed_circuit_waypoints, straight_track, u_turn_track, u_turn_waypoints, PathBuilder,
};

/// Spacing of the resampled centerline (m).
pub const RESAMPLE_SPACING: f64 = 0.5;
/// Half-window of the local projection search around a hint (m).
pub const DEFAULT_HINT_WINDOW: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("track file, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid track: {0}")]
    Invalid(String),
    #[error("pose ({x}, {y}) is farther than {bound} m from the centerline")]
    ProjectionAmbiguous { x: f64, y: f64, bound: f64 },
    #[error("lateral offset {d} m folds over the centerline at s = {s} m")]
    FoldOver { s: f64, d: f64 },
    #[error("arc length {s} m is outside [0, {length}] m")]
    OutOfRange { s: f64, length: f64 },
    #[error("cannot read track: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrenetPose {
    /// Distance along the centerline (m).
    pub s: f64,
    /// Lateral offset, positive to the left (m).
    pub d: f64,
}

impl FrenetPose {
    pub fn new(s: f64, d: f64) -> Self {
        FrenetPose { s, d }
    }
}

/// Arc-length parametrized centerline with constant width.
#[derive(Debug, Clone)]
pub struct Track {
    /// Resampled vertices; for closed tracks the last equals the first.
    points: Vec<(f64, f64)>,
    /// Cumulative chord length at each vertex.
    s: Vec<f64>,
    /// Unwrapped heading at each vertex.
    heading: Vec<f64>,
    /// `(cos, sin)` of `heading`.
    unit: Vec<(f64, f64)>,
    curvature: Vec<f64>,
    width: f64,
    closed: bool,
    self_intersections: usize,
}

fn seg_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
    let (o1, o2) = (orient(a, b, c), orient(a, b, d));
    let (o3, o4) = (orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

impl Track {
    /// Builds a track from raw waypoints: spline fit, then uniform resampling.
    ///
    /// For closed tracks a trailing waypoint equal (within 1e-6 m) to the
    /// first is dropped before fitting.
    pub fn from_waypoints(waypoints: &[(f64, f64)], width: f64, closed: bool) -> Result<Self, TrackError> {
        if !(width.is_finite() && width > 0.0) {
            return Err(TrackError::Invalid(format!("width must be positive, got {width}")));
        }
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(waypoints.len() + 1);
        for &p in waypoints {
            if !(p.0.is_finite() && p.1.is_finite()) {
                return Err(TrackError::Invalid("non-finite waypoint".into()));
            }
            // repeated waypoints carry no geometry
            if pts.last().is_some_and(|q: &(f64, f64)| (q.0 - p.0).hypot(q.1 - p.1) < 1e-9) {
                continue;
            }
            pts.push(p);
        }
        if closed {
            if pts.len() > 1 {
                let (f, l) = (pts[0], *pts.last().unwrap());
                if (f.0 - l.0).hypot(f.1 - l.1) <= 1e-6 {
                    pts.pop();
                }
            }
            if pts.len() < 3 {
                return Err(TrackError::Invalid("a closed track needs at least 3 distinct waypoints".into()));
            }
            pts.push(pts[0]);
        } else if pts.len() < 2 {
            return Err(TrackError::Invalid("a track needs at least 2 distinct waypoints".into()));
        }

        let spline = PlanarSpline::fit(&pts, closed);
        let resampled = resample(&spline, RESAMPLE_SPACING, closed);
        Ok(Self::from_resampled(resampled, width, closed))
    }

    fn from_resampled(mut points: Vec<(f64, f64)>, width: f64, closed: bool) -> Self {
        if closed {
            let first = points[0];
            *points.last_mut().unwrap() = first;
        }
        let n = points.len();
        let mut s = vec![0.0; n];
        for i in 1..n {
            s[i] = s[i - 1] + (points[i].0 - points[i - 1].0).hypot(points[i].1 - points[i - 1].1);
        }

        // central differences; closed tracks wrap around the seam
        let dir = |a: usize, b: usize| (points[b].1 - points[a].1).atan2(points[b].0 - points[a].0);
        let mut heading: Vec<f64> = (0..n)
            .map(|i| {
                if closed {
                    let prev = if i == 0 { n - 2 } else { i - 1 };
                    let next = if i == n - 1 { 1 } else { i + 1 };
                    dir(prev, next)
                } else if i == 0 {
                    dir(0, 1)
                } else if i == n - 1 {
                    dir(n - 2, n - 1)
                } else {
                    dir(i - 1, i + 1)
                }
            })
            .collect();
        for i in 1..n {
            heading[i] = heading[i - 1] + normalize_angle(heading[i] - heading[i - 1]);
        }

        let curvature: Vec<f64> = (0..n)
            .map(|i| {
                if n == 2 {
                    0.0
                } else if closed && (i == 0 || i == n - 1) {
                    let turn = heading[n - 1] - heading[0];
                    let dh = heading[1] - (heading[n - 2] - turn);
                    dh / (s[1] + s[n - 1] - s[n - 2])
                } else if i == 0 {
                    (heading[1] - heading[0]) / (s[1] - s[0])
                } else if i == n - 1 {
                    (heading[n - 1] - heading[n - 2]) / (s[n - 1] - s[n - 2])
                } else {
                    (heading[i + 1] - heading[i - 1]) / (s[i + 1] - s[i - 1])
                }
            })
            .collect();

        let mut self_intersections = 0;
        let segs = n - 1;
        for i in 0..segs {
            for j in i + 2..segs {
                if closed && i == 0 && j == segs - 1 {
                    continue;
                }
                if seg_intersect(points[i], points[i + 1], points[j], points[j + 1]) {
                    self_intersections += 1;
                }
            }
        }
        if self_intersections > 0 {
            log::warn!("track centerline intersects itself {self_intersections} times");
        }

        let unit = heading.iter().map(|h| (h.cos(), h.sin())).collect();
        Track {
            points,
            s,
            heading,
            unit,
            curvature,
            width,
            closed,
            self_intersections,
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn length(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// Resampled centerline vertices.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Number of crossing centerline segment pairs found at construction.
    pub fn self_intersections(&self) -> usize {
        self.self_intersections
    }

    /// Total heading change from start to end (rad).
    pub fn total_turning(&self) -> f64 {
        self.heading.last().unwrap() - self.heading[0]
    }

    /// Wraps `s` into `[0, length)` on closed tracks; identity otherwise.
    pub fn wrap_s(&self, s: f64) -> f64 {
        if self.closed {
            s.rem_euclid(self.length())
        } else {
            s
        }
    }

    /// Signed progress from `from` to `to`, taking the shorter way around a
    /// closed track.
    pub fn progress(&self, from: f64, to: f64) -> f64 {
        let mut d = to - from;
        if self.closed {
            let l = self.length();
            d = (d + 0.5 * l).rem_euclid(l) - 0.5 * l;
        }
        d
    }

    fn checked_s(&self, s: f64) -> Result<f64, TrackError> {
        if self.closed {
            return Ok(self.wrap_s(s));
        }
        if !(s >= -1e-9 && s <= self.length() + 1e-9) {
            return Err(TrackError::OutOfRange { s, length: self.length() });
        }
        Ok(s.clamp(0.0, self.length()))
    }

    /// Segment index and fraction at arc length `s` (already in range).
    fn segment_at(&self, s: f64) -> (usize, f64) {
        let n = self.s.len();
        let i = match self.s.binary_search_by(|x| x.total_cmp(&s)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let len = self.s[i + 1] - self.s[i];
        (i, ((s - self.s[i]) / len).clamp(0.0, 1.0))
    }

    fn lerp_profile(&self, profile: &[f64], s: f64) -> Result<f64, TrackError> {
        let (i, t) = self.segment_at(self.checked_s(s)?);
        Ok(profile[i] + t * (profile[i + 1] - profile[i]))
    }

    /// Unwrapped road heading at `s` (rad).
    pub fn heading_at(&self, s: f64) -> Result<f64, TrackError> {
        self.lerp_profile(&self.heading, s)
    }

    /// Signed curvature at `s` (1/m), positive for left bends.
    pub fn curvature_at(&self, s: f64) -> Result<f64, TrackError> {
        self.lerp_profile(&self.curvature, s)
    }

    /// Frame at `(segment, fraction)`: centerline point, and heading.
    fn frame(&self, i: usize, t: f64) -> ((f64, f64), f64) {
        let (a, b) = (self.points[i], self.points[i + 1]);
        let p = (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        let h = self.heading[i] + t * (self.heading[i + 1] - self.heading[i]);
        (p, h)
    }

    /// Position and road heading at a Frenet pose.
    ///
    /// On open tracks, `s` beyond either end extends the end tangent.
    pub fn from_frenet(&self, fp: FrenetPose) -> Result<Pose, TrackError> {
        let (c, h) = if !self.closed && (fp.s < 0.0 || fp.s > self.length()) {
            let (i, s0) = if fp.s < 0.0 { (0, 0.0) } else { (self.s.len() - 1, self.length()) };
            let h = self.heading[i];
            let (p, ds) = (self.points[i], fp.s - s0);
            ((p.0 + ds * h.cos(), p.1 + ds * h.sin()), h)
        } else {
            let (i, t) = self.segment_at(self.wrap_s(fp.s));
            let k = self.curvature[i] + t * (self.curvature[i + 1] - self.curvature[i]);
            if fp.d * k >= 1.0 {
                return Err(TrackError::FoldOver { s: fp.s, d: fp.d });
            }
            self.frame(i, t)
        };
        let (sn, cs) = h.sin_cos();
        Ok(Pose::new(c.0 - fp.d * sn, c.1 + fp.d * cs, h))
    }

    fn lateral(&self, p: (f64, f64), i: usize, t: f64) -> f64 {
        let (c, h) = self.frame(i, t);
        -(p.0 - c.0) * h.sin() + (p.1 - c.1) * h.cos()
    }

    /// Root of the along-track offset inside segment `i`, where it changes
    /// sign from non-negative to negative. Newton steps, falling back to
    /// bisection whenever a step leaves the bracket.
    fn solve_in_segment(&self, p: (f64, f64), i: usize) -> f64 {
        let (a, b) = (self.points[i], self.points[i + 1]);
        let dh = self.heading[i + 1] - self.heading[i];
        let (mut lo, mut hi) = (0.0, 1.0);
        let (g0, g1) = (self.vertex_along(p, i), self.vertex_along(p, i + 1));
        let mut t = if g0 > g1 { (g0 / (g0 - g1)).clamp(0.0, 1.0) } else { 0.5 };
        for _ in 0..60 {
            let (c, h) = self.frame(i, t);
            let (sn, cs) = h.sin_cos();
            let (rx, ry) = (p.0 - c.0, p.1 - c.1);
            let g = rx * cs + ry * sn;
            if g == 0.0 {
                return t;
            }
            if g > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let dg = -((b.0 - a.0) * cs + (b.1 - a.1) * sn) + dh * (-rx * sn + ry * cs);
            let next = t - g / dg;
            let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if (next - t).abs() < 1e-14 || hi - lo < 1e-15 {
                return next;
            }
            t = next;
        }
        t
    }

    fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    fn vertex_along(&self, p: (f64, f64), j: usize) -> f64 {
        let (c, (cs, sn)) = (self.points[j], self.unit[j]);
        (p.0 - c.0) * cs + (p.1 - c.1) * sn
    }

    fn finish(&self, p: (f64, f64), i: usize) -> FrenetPose {
        let t = self.solve_in_segment(p, i);
        let s = self.s[i] + t * (self.s[i + 1] - self.s[i]);
        FrenetPose::new(self.wrap_s(s), self.lateral(p, i, t))
    }

    /// Projection beyond the ends of an open track, along the end tangents.
    fn extend_ends(&self, p: (f64, f64)) -> Option<FrenetPose> {
        if self.closed {
            return None;
        }
        let last = self.points.len() - 1;
        let g0 = self.vertex_along(p, 0);
        let gn = self.vertex_along(p, last);
        let lat = |j: usize| {
            let (c, (cs, sn)) = (self.points[j], self.unit[j]);
            -(p.0 - c.0) * sn + (p.1 - c.1) * cs
        };
        if g0 < 0.0 {
            Some(FrenetPose::new(g0, lat(0)))
        } else if gn >= 0.0 {
            Some(FrenetPose::new(self.length() + gn, lat(last)))
        } else {
            None
        }
    }

    fn accept(&self, p: (f64, f64), fp: FrenetPose) -> Result<FrenetPose, TrackError> {
        let bound = 5.0 * self.width;
        if fp.d.abs() > bound {
            return Err(TrackError::ProjectionAmbiguous { x: p.0, y: p.1, bound });
        }
        Ok(fp)
    }

    /// Projects a pose onto the centerline.
    ///
    /// With a hint, walks from the vertex nearest `hint_s` to the first
    /// segment containing the foot point, never farther than
    /// [`DEFAULT_HINT_WINDOW`]; if none is found it falls back to a scan of
    /// the whole centerline, keeping the candidate with the smallest `|d|`.
    pub fn to_frenet(&self, pose: &Pose, hint_s: Option<f64>) -> Result<FrenetPose, TrackError> {
        self.to_frenet_windowed(pose, hint_s, DEFAULT_HINT_WINDOW)
    }

    pub fn to_frenet_windowed(&self, pose: &Pose, hint_s: Option<f64>, window: f64) -> Result<FrenetPose, TrackError> {
        let p = (pose.x, pose.y);
        if let Some(hint) = hint_s {
            if let Some(fp) = self.walk_from(p, hint, window) {
                return self.accept(p, fp);
            }
        }
        self.global_scan(p)
    }

    fn walk_from(&self, p: (f64, f64), hint: f64, window: f64) -> Option<FrenetPose> {
        let nseg = self.segment_count();
        let max_steps = (window / RESAMPLE_SPACING).ceil() as usize + 1;
        let start = if self.closed {
            self.segment_at(self.wrap_s(hint)).0
        } else {
            self.segment_at(hint.clamp(0.0, self.length())).0
        };
        let idx = |i: isize| -> Option<usize> {
            if self.closed {
                Some(i.rem_euclid(nseg as isize) as usize)
            } else if i >= 0 && (i as usize) < nseg {
                Some(i as usize)
            } else {
                None
            }
        };
        let mut i = start as isize;
        if self.vertex_along(p, start) >= 0.0 {
            for _ in 0..max_steps {
                let seg = idx(i)?;
                if self.vertex_along(p, seg + 1) < 0.0 {
                    return Some(self.finish(p, seg));
                }
                i += 1;
                if idx(i).is_none() {
                    return self.extend_ends(p);
                }
            }
        } else {
            for _ in 0..max_steps {
                i -= 1;
                let Some(seg) = idx(i) else {
                    return self.extend_ends(p);
                };
                if self.vertex_along(p, seg) >= 0.0 {
                    return Some(self.finish(p, seg));
                }
            }
        }
        None
    }

    fn global_scan(&self, p: (f64, f64)) -> Result<FrenetPose, TrackError> {
        let mut best: Option<FrenetPose> = None;
        let mut consider = |fp: FrenetPose| {
            if best.is_none_or(|b| fp.d.abs() < b.d.abs()) {
                best = Some(fp);
            }
        };
        let mut g_prev = self.vertex_along(p, 0);
        for i in 0..self.segment_count() {
            let g_next = self.vertex_along(p, i + 1);
            if g_prev >= 0.0 && g_next < 0.0 {
                consider(self.finish(p, i));
            }
            g_prev = g_next;
        }
        if let Some(fp) = self.extend_ends(p) {
            consider(fp);
        }
        match best {
            Some(fp) => self.accept(p, fp),
            None => Err(TrackError::ProjectionAmbiguous {
                x: p.0,
                y: p.1,
                bound: 5.0 * self.width,
            }),
        }
    }

    /// Whether a Frenet pose lies on the road; the edge itself counts as on-road.
    pub fn on_road(&self, fp: &FrenetPose) -> bool {
        fp.d.abs() <= 0.5 * self.width
    }

    /// Writes the resampled centerline in the track CSV format.
    pub fn to_csv(&self) -> String {
        let n = if self.closed { self.points.len() - 1 } else { self.points.len() };
        format_track(&self.points[..n], self.width, self.closed)
    }
}

/// Formats waypoints in the track CSV format read by [`parse_track`].
/// Coordinates are written in round-trip precision.
pub fn format_track(waypoints: &[(f64, f64)], width: f64, closed: bool) -> String {
    let mut out = format!("# width={width:?} closed={}\nx,y\n", u8::from(closed));
    for p in waypoints {
        out.push_str(&format!("{:?},{:?}\n", p.0, p.1));
    }
    out
}

/// Arc-length resampling of a spline at (nearly) `spacing`, dividing the
/// total length into equal pieces.
fn resample(spline: &PlanarSpline, spacing: f64, closed: bool) -> Vec<(f64, f64)> {
    const SUB: usize = 64;
    let total_u = spline.param_length();
    let steps = ((total_u / spacing).ceil() as usize).max(1) * SUB;
    let mut us = Vec::with_capacity(steps + 1);
    let mut arc = Vec::with_capacity(steps + 1);
    let mut prev = spline.eval(0.0);
    let mut acc = 0.0;
    for k in 0..=steps {
        let u = total_u * k as f64 / steps as f64;
        let q = spline.eval(u);
        acc += (q.0 - prev.0).hypot(q.1 - prev.1);
        prev = q;
        us.push(u);
        arc.push(acc);
    }
    let length = acc;
    let n = ((length / spacing).round() as usize).max(1);
    let mut out = Vec::with_capacity(n + 1);
    let mut k = 0;
    for i in 0..=n {
        let target = length * i as f64 / n as f64;
        while k + 1 < arc.len() - 1 && arc[k + 1] < target {
            k += 1;
        }
        let span = arc[k + 1] - arc[k];
        let f = if span > 0.0 { ((target - arc[k]) / span).clamp(0.0, 1.0) } else { 0.0 };
        out.push(spline.eval(us[k] + f * (us[k + 1] - us[k])));
    }
    if closed {
        out[n] = out[0];
    }
    out
}

/// Parses the track CSV format: optional `# key=value` preamble lines
/// (`width`, `closed`), a `x,y` header, then one waypoint per line.
pub fn parse_track(text: &str) -> Result<Track, TrackError> {
    let mut width = None;
    let mut closed = false;
    let mut header_seen = false;
    let mut pts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            for kv in meta.split_whitespace() {
                let Some((k, v)) = kv.split_once('=') else { continue };
                match k {
                    "width" => {
                        width = Some(v.parse::<f64>().map_err(|_| TrackError::Parse {
                            line: line_no,
                            message: format!("invalid width `{v}`"),
                        })?)
                    }
                    "closed" => {
                        closed = match v {
                            "1" | "true" => true,
                            "0" | "false" => false,
                            _ => {
                                return Err(TrackError::Parse {
                                    line: line_no,
                                    message: format!("invalid closed flag `{v}`"),
                                })
                            }
                        }
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ["x", "y"] {
                return Err(TrackError::Parse {
                    line: line_no,
                    message: "expected header `x,y`".into(),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(TrackError::Parse {
                line: line_no,
                message: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        let parse = |f: &str| {
            f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| TrackError::Parse {
                line: line_no,
                message: format!("invalid number `{f}`"),
            })
        };
        pts.push((parse(fields[0])?, parse(fields[1])?));
    }
    let width = width.ok_or_else(|| TrackError::Parse {
        line: 1,
        message: "missing `# width=...` preamble".into(),
    })?;
    Track::from_waypoints(&pts, width, closed)
}

pub fn load_track(path: &Path) -> Result<Track, TrackError> {
    let text = std::fs::read_to_string(path).map_err(|e| TrackError::Io(format!("{}: {e}", path.display())))?;
    parse_track(&text)
}

/// Polyline length of a waypoint list, closing the loop when asked.
pub fn polyline_length(waypoints: &[(f64, f64)], closed: bool) -> f64 {
    let mut l: f64 = waypoints.windows(2).map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1)).sum();
    if closed && waypoints.len() > 2 {
        let (f, b) = (waypoints[0], waypoints[waypoints.len() - 1]);
        l += (f.0 - b.0).hypot(f.1 - b.1);
    }
    l
}
