use crate::vehicle::DynamicState;

use super::config::PlannerConfig;
use super::node::Node;

/// Road distance covered in `t_rem` seconds when accelerating at `a_max`
/// from `v` up to `v_max` and then holding `v_max`.
pub fn base_heuristic(v: f64, t_rem: f64, v_max: f64, a_max: f64) -> f64 {
    if t_rem <= 0.0 {
        return 0.0;
    }
    if v >= v_max {
        return v * t_rem;
    }
    let t1 = ((v_max - v) / a_max).clamp(0.0, t_rem);
    v * t1 + 0.5 * a_max * t1 * t1 + v_max * (t_rem - t1)
}

/// Optimistic remaining progress of `node` minus the augmentation terms.
///
/// `parent` is the dynamic state the node was expanded from, if any.
pub fn heuristic(
    node: &Node,
    parent: Option<&DynamicState>,
    v_max: f64,
    a_max: f64,
    d_safe: f64,
    config: &PlannerConfig,
) -> f64 {
    let t_rem = config.k_hor.saturating_sub(node.k) as f64 * config.t_s;
    let d = &node.state.dyn_state;
    let base = base_heuristic(d.v, t_rem, v_max, a_max);
    let w = &config.weights;
    let smooth = parent.map_or(0.0, |p| (d.v - p.v).abs() + (d.beta - p.beta).abs() + (d.psidot - p.psidot).abs());
    let edge = (node.frenet.d.abs() - (d_safe - w.edge_band)).max(0.0);
    let sibling = if node.k > 0 {
        1.0 / (1.0 + node.sibling_count as f64)
    } else {
        0.0
    };
    base - w.smooth * smooth - w.edge * edge - w.sibling * sibling
}
