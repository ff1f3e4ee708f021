use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use crate::track::FrenetPose;
use crate::vehicle::{ControlInput, FullState};

use super::expand::{PlanningContext, PruneCounts};
use super::heuristic::heuristic;
use super::node::{discretize, ExpansionMode, GridCell, Node};
use super::PlannerError;

/// Why the best-first loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// A node at the horizon depth was selected.
    Horizon,
    /// OPEN ran empty before any node reached the horizon.
    OpenExhausted,
    /// OPEN grew beyond `n_timeout`.
    Timeout,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Horizon => "horizon",
            Termination::OpenExhausted => "open_exhausted",
            Termination::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchStats {
    pub expansions: usize,
    pub generated: usize,
    pub pruned: PruneCounts,
    /// Open duplicates overwritten by a better node in the same cell and depth.
    pub duplicates_replaced: usize,
    /// Duplicates discarded because the existing node was closed or better.
    pub duplicates_ignored: usize,
    pub peak_open: usize,
    pub termination: Termination,
    /// Wall-clock time of the search (s). Not deterministic.
    pub wall_time: f64,
}

impl SearchStats {
    /// Compact `key=value` line for logs.
    pub fn summary(&self) -> String {
        let p = &self.pruned;
        format!(
            "expansions={} generated={} peak_open={} termination={} dup_replaced={} dup_ignored={} \
             pruned_out_of_domain={} pruned_same_sign={} pruned_speed_jump={} pruned_over_speed={} \
             pruned_bicycle_region={} pruned_model={} pruned_collision={}",
            self.expansions,
            self.generated,
            self.peak_open,
            self.termination.as_str(),
            self.duplicates_replaced,
            self.duplicates_ignored,
            p.out_of_domain,
            p.same_sign,
            p.speed_jump,
            p.over_speed,
            p.outside_bicycle_region,
            p.model,
            p.collision
        )
    }
}

/// One sample of a planned or executed trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: FullState,
    pub input: ControlInput,
    /// `s` unwrapped across laps.
    pub frenet: FrenetPose,
    pub mode: ExpansionMode,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Nodes from the root to the selected leaf.
    pub path: Vec<Node>,
    /// Samples of the concatenated primitives along `path`, the root first.
    pub trajectory: Vec<TrajectorySample>,
    pub stats: SearchStats,
    /// Every node created, in creation order (parents precede children).
    pub explored: Vec<Node>,
}

impl SearchResult {
    /// Road progress of the selected leaf (m).
    pub fn progress(&self) -> f64 {
        self.path.last().map_or(0.0, |n| n.g)
    }

    /// True when the plan contains no primitive.
    pub fn is_empty(&self) -> bool {
        self.path.len() <= 1
    }

    pub fn duration(&self) -> f64 {
        self.trajectory.last().map_or(0.0, |s| s.t)
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenEntry {
    f: f64,
    k: usize,
    seq: u64,
    node: usize,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenEntry {
    // max-heap: highest f, then deepest, then earliest inserted
    fn cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then(self.k.cmp(&other.k))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Builds the root node for `initial`. `initial_s` is an unwrapped arc
/// length near the initial pose, used both as projection hint and as the
/// origin of unwrapped progress.
pub fn root_node(
    initial: &FullState,
    initial_s: Option<f64>,
    ctx: &PlanningContext<'_>,
) -> Result<Node, PlannerError> {
    let track = ctx.track;
    let hint = initial_s.map(|s| track.wrap_s(s));
    let fp = track.to_frenet(&initial.pose, hint)?;
    if !track.on_road(&fp) {
        return Err(PlannerError::InitialOffRoad { d: fp.d });
    }
    let s = match (initial_s, hint) {
        (Some(s0), Some(h)) => s0 + track.progress(h, fp.s),
        _ => fp.s,
    };
    let (cell, remainder) = discretize(initial, &ctx.config.grid.as_array());
    let mut root = Node {
        cell,
        remainder,
        parent_cell: None,
        parent: None,
        state: *initial,
        input: ControlInput::default(),
        mode: ExpansionMode::Start,
        frenet: FrenetPose::new(s, fp.d),
        track_s: fp.s,
        g: 0.0,
        h: 0.0,
        f: 0.0,
        k: 0,
        sibling_count: 0,
    };
    root.h = heuristic(&root, None, ctx.params.v_max, ctx.a_max(), ctx.d_safe(), ctx.config);
    root.f = root.h;
    Ok(root)
}

/// Hybrid A* over motion primitives, maximizing road progress within
/// `k_hor` primitives.
///
/// Selection order is highest `f`, then deepest, then earliest inserted.
/// Nodes falling into an occupied `(cell, depth)` slot replace the occupant
/// only while it is open and only with a strictly higher `f`.
pub fn search(initial: &FullState, initial_s: Option<f64>, ctx: &PlanningContext<'_>) -> Result<SearchResult, PlannerError> {
    ctx.config.validate()?;
    let started = Instant::now();
    let root = root_node(initial, initial_s, ctx)?;
    let k_hor = ctx.config.k_hor;

    let mut arena: Vec<Node> = vec![root];
    let mut closed: Vec<bool> = vec![false];
    let mut version_seq: Vec<u64> = vec![0];
    let mut slots: HashMap<(GridCell, usize), usize> = HashMap::new();
    slots.insert((arena[0].cell, 0), 0);
    let mut seq: u64 = 0;
    let mut heap = BinaryHeap::new();
    heap.push(OpenEntry {
        f: arena[0].f,
        k: 0,
        seq,
        node: 0,
    });
    let mut open_count = 1usize;

    let mut stats = SearchStats {
        expansions: 0,
        generated: 0,
        pruned: PruneCounts::default(),
        duplicates_replaced: 0,
        duplicates_ignored: 0,
        peak_open: 1,
        termination: Termination::OpenExhausted,
        wall_time: 0.0,
    };
    let mut goal = None;

    while let Some(entry) = heap.pop() {
        let i = entry.node;
        if closed[i] || version_seq[i] != entry.seq {
            continue;
        }
        closed[i] = true;
        open_count -= 1;
        if arena[i].k >= k_hor {
            goal = Some(i);
            stats.termination = Termination::Horizon;
            break;
        }
        let exp = ctx.expand(&arena[i], Some(i));
        stats.expansions += 1;
        stats.pruned.add(&exp.pruned);
        if i == 0 && exp.children.is_empty() {
            return Err(PlannerError::NoFeasibleNode { pruned: exp.pruned });
        }
        for child in exp.children {
            stats.generated += 1;
            let key = (child.cell, child.k);
            match slots.get(&key) {
                Some(&j) if closed[j] || child.f <= arena[j].f => stats.duplicates_ignored += 1,
                Some(&j) => {
                    seq += 1;
                    arena[j] = child;
                    version_seq[j] = seq;
                    heap.push(OpenEntry {
                        f: arena[j].f,
                        k: arena[j].k,
                        seq,
                        node: j,
                    });
                    stats.duplicates_replaced += 1;
                }
                None => {
                    seq += 1;
                    let j = arena.len();
                    heap.push(OpenEntry {
                        f: child.f,
                        k: child.k,
                        seq,
                        node: j,
                    });
                    slots.insert(key, j);
                    arena.push(child);
                    closed.push(false);
                    version_seq.push(seq);
                    open_count += 1;
                }
            }
        }
        stats.peak_open = stats.peak_open.max(open_count);
        if open_count > ctx.config.n_timeout {
            stats.termination = Termination::Timeout;
            break;
        }
    }

    // deepest node, ties by f, then creation order
    let leaf = goal.unwrap_or_else(|| {
        (0..arena.len())
            .max_by(|&a, &b| {
                arena[a]
                    .k
                    .cmp(&arena[b].k)
                    .then(arena[a].f.total_cmp(&arena[b].f))
                    .then(b.cmp(&a))
            })
            .unwrap_or(0)
    });

    let mut path = Vec::new();
    let mut cur = Some(leaf);
    while let Some(i) = cur {
        path.push(arena[i].clone());
        cur = arena[i].parent;
    }
    path.reverse();

    let trajectory = assemble_trajectory(&path, ctx)?;
    stats.wall_time = started.elapsed().as_secs_f64();
    Ok(SearchResult {
        path,
        trajectory,
        stats,
        explored: arena,
    })
}

/// Concatenates the primitives along a root-to-leaf path.
pub fn assemble_trajectory(path: &[Node], ctx: &PlanningContext<'_>) -> Result<Vec<TrajectorySample>, PlannerError> {
    let Some(root) = path.first() else {
        return Ok(Vec::new());
    };
    let dt = ctx.config.dt();
    let mut out = vec![TrajectorySample {
        t: 0.0,
        state: root.state,
        input: root.input,
        frenet: root.frenet,
        mode: root.mode,
    }];
    for w in path.windows(2) {
        let (parent, child) = (&w[0], &w[1]);
        let prim = ctx
            .primitive_between(parent, child)
            .ok_or(PlannerError::Inconsistent("primitive could not be regenerated"))?;
        if *prim.samples.last().unwrap() != child.state {
            return Err(PlannerError::Inconsistent("regenerated primitive ends elsewhere"));
        }
        for (state, fp) in prim.samples.iter().zip(&prim.frenet).skip(1) {
            let s = parent.frenet.s + ctx.track.progress(parent.track_s, fp.s);
            out.push(TrajectorySample {
                t: out.len() as f64 * dt,
                state: *state,
                input: child.input,
                frenet: FrenetPose::new(s, fp.d),
                mode: child.mode,
            });
        }
    }
    Ok(out)
}
