//! Reference tracks built from straights and circular arcs.

use std::f64::consts::PI;

use super::{Track, TrackError};

/// Chains straights and arcs into a dense waypoint list.
#[derive(Debug, Clone)]
pub struct PathBuilder {
    x: f64,
    y: f64,
    heading: f64,
    step: f64,
    points: Vec<(f64, f64)>,
}

impl PathBuilder {
    /// Starts at `(x, y)` facing `heading`, emitting a waypoint about every `step` meters.
    pub fn new(x: f64, y: f64, heading: f64, step: f64) -> Self {
        PathBuilder {
            x,
            y,
            heading,
            step,
            points: vec![(x, y)],
        }
    }

    pub fn straight(mut self, length: f64) -> Self {
        let n = (length / self.step).ceil().max(1.0) as usize;
        let (x0, y0) = (self.x, self.y);
        let (sn, cs) = self.heading.sin_cos();
        for i in 1..=n {
            let l = length * i as f64 / n as f64;
            self.points.push((x0 + l * cs, y0 + l * sn));
        }
        self.x = x0 + length * cs;
        self.y = y0 + length * sn;
        self
    }

    /// Circular arc of `radius`; positive `angle` turns left.
    pub fn arc(mut self, radius: f64, angle: f64) -> Self {
        let side = angle.signum();
        let (cx, cy) = (
            self.x - side * radius * self.heading.sin(),
            self.y + side * radius * self.heading.cos(),
        );
        let start = (self.y - cy).atan2(self.x - cx);
        let n = (radius * angle.abs() / self.step).ceil().max(1.0) as usize;
        for i in 1..=n {
            let a = start + angle * i as f64 / n as f64;
            self.points.push((cx + radius * a.cos(), cy + radius * a.sin()));
        }
        let end = start + angle;
        self.x = cx + radius * end.cos();
        self.y = cy + radius * end.sin();
        self.heading += angle;
        self
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn into_points(self) -> Vec<(f64, f64)> {
        self.points
    }
}

/// Straight road along `+x` from the origin.
pub fn straight_track(length: f64, width: f64) -> Result<Track, TrackError> {
    Track::from_waypoints(&[(0.0, 0.0), (length, 0.0)], width, false)
}

/// Counter-clockwise circle of `radius` around the origin through `n` waypoints.
pub fn circle_track(radius: f64, width: f64, n: usize) -> Result<Track, TrackError> {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64 - PI / 2.0;
            (radius * a.cos(), radius * a.sin())
        })
        .collect();
    Track::from_waypoints(&pts, width, true)
}

/// Waypoints of [`u_turn_track`].
pub fn u_turn_waypoints(approach: f64, radius: f64, exit: f64) -> Vec<(f64, f64)> {
    PathBuilder::new(0.0, 0.0, 0.0, 1.0)
        .straight(approach)
        .arc(radius, PI)
        .straight(exit)
        .into_points()
}

/// Straight approach along `+x`, left U-turn of `radius`, straight exit.
pub fn u_turn_track(approach: f64, radius: f64, exit: f64, width: f64) -> Result<Track, TrackError> {
    Track::from_waypoints(&u_turn_waypoints(approach, radius, exit), width, false)
}

/// Closed 10 m wide test circuit of about 380 m: a long straight, a 15 m
/// U-turn, a right-hand 20 m bend, a wide 40 m bend, and two 25 m bends.
pub fn mixed_circuit() -> Result<Track, TrackError> {
    Track::from_waypoints(&mixed_circuit_waypoints(), 10.0, true)
}

/// Waypoints of [`mixed_circuit`], starting at the origin facing `+x`.
pub fn mixed_circuit_waypoints() -> Vec<(f64, f64)> {
    PathBuilder::new(0.0, 0.0, 0.0, 1.0)
        .straight(80.0)
        .arc(15.0, PI)
        .straight(20.0)
        .arc(20.0, -PI / 2.0)
        .straight(10.0)
        .arc(40.0, PI / 2.0)
        .arc(25.0, PI / 2.0)
        .straight(50.0)
        .arc(25.0, PI / 2.0)
        .into_points()
}
