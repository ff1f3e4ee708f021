use crate::vehicle::FullState;

use super::expand::PlanningContext;
use super::search::{search, SearchStats, TrajectorySample};

/// When the receding-horizon loop stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCondition {
    /// Stop once the executed road progress reaches this distance (m).
    pub target_progress: f64,
    /// Hard cap on planning cycles.
    pub max_cycles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoopOutcome {
    /// The progress target was reached.
    Completed,
    /// The cycle cap was hit first.
    CycleLimit,
    /// A search failed or returned a plan shorter than the replanning period.
    PlannerStarved { cycle: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Executed time at which this cycle's plan took over (s).
    pub start_time: f64,
    /// Unwrapped arc length at the start of the cycle (m).
    pub start_s: f64,
    /// Planned duration (s).
    pub plan_duration: f64,
    /// Progress of the plan's leaf (m).
    pub plan_progress: f64,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutedLog {
    /// Executed samples on a uniform time grid, including the final state.
    pub samples: Vec<TrajectorySample>,
    pub cycles: Vec<CycleRecord>,
    pub outcome: LoopOutcome,
}

impl ExecutedLog {
    pub fn progress(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.frenet.s - a.frenet.s,
            _ => 0.0,
        }
    }
}

/// Receding-horizon execution with perfect actuation.
///
/// Each cycle plans from the state the previous plan reaches at `t_rep`
/// and executes its own first `t_rep` seconds. Executed states are the
/// planned ones, so consecutive segments join without a gap.
pub fn replan_loop(
    initial: &FullState,
    initial_s: Option<f64>,
    ctx: &PlanningContext<'_>,
    stop: &StopCondition,
) -> ExecutedLog {
    let dt = ctx.config.dt();
    let per_cycle = (ctx.config.t_rep / dt).round() as usize;
    let mut samples: Vec<TrajectorySample> = Vec::new();
    let mut cycles = Vec::new();
    let mut state = *initial;
    let mut s_hint = initial_s;
    let mut s_start = None;
    let mut cycle = 0;

    let outcome = loop {
        if cycle >= stop.max_cycles {
            break LoopOutcome::CycleLimit;
        }
        let result = match search(&state, s_hint, ctx) {
            Ok(r) => r,
            Err(e) => {
                break LoopOutcome::PlannerStarved {
                    cycle,
                    reason: e.to_string(),
                }
            }
        };
        let plan = &result.trajectory;
        let t0 = cycle as f64 * ctx.config.t_rep;
        let s0 = plan[0].frenet.s;
        let origin = *s_start.get_or_insert(s0);
        cycles.push(CycleRecord {
            cycle,
            start_time: t0,
            start_s: s0,
            plan_duration: result.duration(),
            plan_progress: result.progress(),
            stats: result.stats.clone(),
        });
        if plan.len() <= per_cycle {
            samples.extend(plan.iter().map(|p| TrajectorySample { t: t0 + p.t, ..*p }));
            break LoopOutcome::PlannerStarved {
                cycle,
                reason: format!(
                    "plan covers {:.3} s, shorter than the replanning period {:.3} s",
                    result.duration(),
                    ctx.config.t_rep
                ),
            };
        }
        samples.extend(plan[..per_cycle].iter().enumerate().map(|(i, p)| TrajectorySample {
            t: (cycle * per_cycle + i) as f64 * dt,
            ..*p
        }));
        let next = plan[per_cycle];
        state = next.state;
        s_hint = Some(next.frenet.s);
        cycle += 1;
        if next.frenet.s - origin >= stop.target_progress {
            samples.push(TrajectorySample {
                t: (cycle * per_cycle) as f64 * dt,
                ..next
            });
            break LoopOutcome::Completed;
        }
        if cycle >= stop.max_cycles {
            samples.push(TrajectorySample {
                t: (cycle * per_cycle) as f64 * dt,
                ..next
            });
            break LoopOutcome::CycleLimit;
        }
    };
    ExecutedLog {
        samples,
        cycles,
        outcome,
    }
}
