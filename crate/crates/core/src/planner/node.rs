use crate::track::FrenetPose;
use crate::vehicle::{ControlInput, DynamicState, FullState, Pose};

/// Grid indexes of the six states `(x, y, psi, v, beta, psidot)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridCell(pub [i64; 6]);

/// State vector in grid order.
pub fn state_vector(s: &FullState) -> [f64; 6] {
    [s.pose.x, s.pose.y, s.pose.psi, s.dyn_state.v, s.dyn_state.beta, s.dyn_state.psidot]
}

/// Splits `value` into `index * step + remainder` with `0 <= remainder < step`.
pub fn discretize_value(value: f64, step: f64) -> (i64, f64) {
    let mut i = (value / step).floor();
    let mut r = value - i * step;
    if r < 0.0 {
        i -= 1.0;
        r += step;
    }
    if r >= step {
        i += 1.0;
        r -= step;
    }
    (i as i64, r.max(0.0))
}

pub fn discretize(state: &FullState, steps: &[f64; 6]) -> (GridCell, [f64; 6]) {
    let v = state_vector(state);
    let mut cell = [0i64; 6];
    let mut rem = [0.0; 6];
    for k in 0..6 {
        let (i, r) = discretize_value(v[k], steps[k]);
        cell[k] = i;
        rem[k] = r;
    }
    (GridCell(cell), rem)
}

/// Inverse of [`discretize`] up to rounding of `index * step + remainder`.
pub fn reconstruct(cell: &GridCell, remainder: &[f64; 6], steps: &[f64; 6]) -> [f64; 6] {
    std::array::from_fn(|k| cell.0[k] as f64 * steps[k] + remainder[k])
}

/// How a node was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExpansionMode {
    Start,
    Bicycle,
    Esm,
}

impl ExpansionMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExpansionMode::Start => "start",
            ExpansionMode::Bicycle => "bicycle",
            ExpansionMode::Esm => "esm",
        }
    }
}

/// Hybrid A* search node.
///
/// `state` is the exact continuous state carried forward for expansion;
/// `cell` and `remainder` are its grid split. `g` is road progress since the
/// search root and `f = g + h`; larger is better.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub cell: GridCell,
    pub remainder: [f64; 6],
    pub parent_cell: Option<GridCell>,
    /// Index of the parent in the search arena.
    pub parent: Option<usize>,
    pub state: FullState,
    /// Input held over the primitive that reached this node.
    pub input: ControlInput,
    pub mode: ExpansionMode,
    /// Frenet pose with `s` unwrapped from the search root.
    pub frenet: FrenetPose,
    /// Frenet `s` as reported by the track (modular on closed tracks).
    pub track_s: f64,
    pub g: f64,
    pub h: f64,
    pub f: f64,
    pub k: usize,
    pub sibling_count: usize,
}

/// A short state trajectory between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPrimitive {
    /// Samples spaced `t_s / samples_per_primitive`; the first is the parent state.
    pub samples: Vec<FullState>,
    /// Projection of every sample, `s` as reported by the track.
    pub frenet: Vec<FrenetPose>,
    pub end: DynamicState,
    pub input: ControlInput,
    pub mode: ExpansionMode,
}

impl MotionPrimitive {
    pub fn poses(&self) -> impl Iterator<Item = &Pose> {
        self.samples.iter().map(|s| &s.pose)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn remainder_is_within_step() {
        assert_eq!(discretize_value(1.25, 0.5), (2, 0.25));
        assert_eq!(discretize_value(-0.1, 0.5).0, -1);
        assert!((discretize_value(-0.1, 0.5).1 - 0.4).abs() < 1e-15);
        assert_eq!(discretize_value(0.0, 0.02), (0, 0.0));
    }

    proptest! {
        #[test]
        fn discretization_round_trips(x in -1e3f64..1e3, step in 1e-3f64..2.0) {
            let (i, r) = discretize_value(x, step);
            prop_assert!(r >= 0.0 && r < step);
            let back = i as f64 * step + r;
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
            let (i2, r2) = discretize_value(back, step);
            prop_assert_eq!(i2, i);
            prop_assert!((r2 - r).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}
