use std::fmt::Write as _;

use crate::planner::{ExecutedLog, TrajectorySample};

/// A maximal run of consecutive samples with `|beta|` above the drift threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub s_start: f64,
    pub s_end: f64,
    pub max_abs_beta: f64,
}

/// Summary of an executed run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LapMetrics {
    /// Time at which each lap boundary was crossed, linearly interpolated
    /// between samples (s).
    pub lap_times: Vec<f64>,
    /// Unwrapped progress from the first to the last sample (m).
    pub total_progress: f64,
    pub max_abs_beta: f64,
    /// Disjoint, in time order.
    pub drift_intervals: Vec<DriftInterval>,
    /// Smallest `width / 2 - |d|` over the log (m); `None` for an empty log.
    pub min_edge_margin: Option<f64>,
    /// Wall time of each planning cycle (s). Not deterministic.
    pub cycle_wall_times: Vec<f64>,
    /// Node expansions of each planning cycle.
    pub cycle_expansions: Vec<usize>,
}

impl LapMetrics {
    /// Metrics of `log` on a road of `width`. Laps are counted every
    /// `lap_length` of unwrapped progress.
    pub fn from_log(log: &ExecutedLog, width: f64, lap_length: f64, beta_drift: f64) -> Self {
        let samples = &log.samples;
        LapMetrics {
            lap_times: lap_times(samples, lap_length),
            total_progress: log.progress(),
            max_abs_beta: samples.iter().map(|p| p.state.dyn_state.beta.abs()).fold(0.0, f64::max),
            drift_intervals: drift_intervals(samples, beta_drift),
            min_edge_margin: samples
                .iter()
                .map(|p| 0.5 * width - p.frenet.d.abs())
                .reduce(f64::min),
            cycle_wall_times: log.cycles.iter().map(|c| c.stats.wall_time).collect(),
            cycle_expansions: log.cycles.iter().map(|c| c.stats.expansions).collect(),
        }
    }

    pub fn lap_time(&self) -> Option<f64> {
        self.lap_times.first().copied()
    }

    /// `key = value` text. Wall times are left out so the text is a pure
    /// function of the configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:?}"));
        let _ = writeln!(out, "laps_completed = {}", self.lap_times.len());
        let _ = writeln!(out, "lap_time = {}", opt(self.lap_time()));
        for (i, t) in self.lap_times.iter().enumerate() {
            let _ = writeln!(out, "lap_{} = {t:?}", i + 1);
        }
        let _ = writeln!(out, "total_progress = {:?}", self.total_progress);
        let _ = writeln!(out, "max_abs_beta = {:?}", self.max_abs_beta);
        let _ = writeln!(out, "min_edge_margin = {}", opt(self.min_edge_margin));
        let _ = writeln!(out, "cycles = {}", self.cycle_expansions.len());
        let _ = writeln!(out, "total_expansions = {}", self.cycle_expansions.iter().sum::<usize>());
        let _ = writeln!(out, "drift_intervals = {}", self.drift_intervals.len());
        for d in &self.drift_intervals {
            let _ = writeln!(
                out,
                "drift = t {:?}..{:?} s {:?}..{:?} max_abs_beta {:?}",
                d.t_start, d.t_end, d.s_start, d.s_end, d.max_abs_beta
            );
        }
        out
    }
}

fn lap_times(samples: &[TrajectorySample], lap_length: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let Some(first) = samples.first() else { return out };
    if !(lap_length > 0.0) {
        return out;
    }
    let s0 = first.frenet.s;
    for w in samples.windows(2) {
        let (a, b) = (w[0].frenet.s - s0, w[1].frenet.s - s0);
        let next = (out.len() + 1) as f64 * lap_length;
        if a < next && b >= next {
            let f = (next - a) / (b - a);
            out.push(w[0].t + f * (w[1].t - w[0].t));
        }
    }
    out
}

fn drift_intervals(samples: &[TrajectorySample], threshold: f64) -> Vec<DriftInterval> {
    let mut out: Vec<DriftInterval> = Vec::new();
    let mut open: Option<DriftInterval> = None;
    for p in samples {
        let b = p.state.dyn_state.beta.abs();
        if b > threshold {
            let d = open.get_or_insert(DriftInterval {
                t_start: p.t,
                t_end: p.t,
                s_start: p.frenet.s,
                s_end: p.frenet.s,
                max_abs_beta: b,
            });
            d.t_end = p.t;
            d.s_end = p.frenet.s;
            d.max_abs_beta = d.max_abs_beta.max(b);
        } else if let Some(d) = open.take() {
            out.push(d);
        }
    }
    out.extend(open);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{ExpansionMode, LoopOutcome};
    use crate::track::FrenetPose;
    use crate::vehicle::{ControlInput, DynamicState, FullState, Pose};
    use proptest::prelude::*;

    fn sample(t: f64, s: f64, d: f64, beta: f64) -> TrajectorySample {
        TrajectorySample {
            t,
            state: FullState::new(Pose::new(s, d, 0.0), DynamicState::new(5.0, beta, 0.0)),
            input: ControlInput::default(),
            frenet: FrenetPose::new(s, d),
            mode: ExpansionMode::Esm,
        }
    }

    fn log(samples: Vec<TrajectorySample>) -> ExecutedLog {
        ExecutedLog {
            samples,
            cycles: Vec::new(),
            outcome: LoopOutcome::Completed,
        }
    }

    #[test]
    fn empty_log_has_empty_metrics() {
        let m = LapMetrics::from_log(&log(Vec::new()), 10.0, 100.0, 0.4);
        assert!(m.lap_times.is_empty());
        assert!(m.drift_intervals.is_empty());
        assert_eq!(m.min_edge_margin, None);
        assert_eq!(m.total_progress, 0.0);
    }

    #[test]
    fn lap_boundary_is_interpolated() {
        let l = log(vec![sample(0.0, 10.0, 0.0, 0.0), sample(1.0, 100.0, 1.0, 0.0), sample(2.0, 120.0, -2.0, 0.0)]);
        let m = LapMetrics::from_log(&l, 10.0, 100.0, 0.4);
        assert_eq!(m.lap_times, vec![1.5]);
        assert_eq!(m.total_progress, 110.0);
        assert_eq!(m.min_edge_margin, Some(3.0));
    }

    #[test]
    fn drift_runs_are_maximal() {
        let betas = [0.0, 0.5, -0.6, 0.1, 0.41, 0.3, -0.45];
        let l = log(betas.iter().enumerate().map(|(i, &b)| sample(i as f64, i as f64, 0.0, b)).collect());
        let m = LapMetrics::from_log(&l, 10.0, 100.0, 0.4);
        let spans: Vec<_> = m.drift_intervals.iter().map(|d| (d.t_start, d.t_end, d.max_abs_beta)).collect();
        assert_eq!(spans, vec![(1.0, 2.0, 0.6), (4.0, 4.0, 0.41), (6.0, 6.0, 0.45)]);
        assert_eq!(m.max_abs_beta, 0.6);
    }

    proptest! {
        #[test]
        fn drift_intervals_are_disjoint_and_ordered(betas in prop::collection::vec(-0.8f64..0.8, 0..60)) {
            let l = log(betas.iter().enumerate().map(|(i, &b)| sample(0.1 * i as f64, i as f64, 0.0, b)).collect());
            let m = LapMetrics::from_log(&l, 10.0, 100.0, 0.4);
            for d in &m.drift_intervals {
                prop_assert!(d.t_start <= d.t_end);
                prop_assert!(d.max_abs_beta > 0.4);
            }
            for w in m.drift_intervals.windows(2) {
                prop_assert!(w[0].t_end < w[1].t_start);
            }
            let drifting = betas.iter().filter(|b| b.abs() > 0.4).count();
            let covered: usize = m.drift_intervals.iter().map(|d| ((d.t_end - d.t_start) / 0.1).round() as usize + 1).sum();
            prop_assert_eq!(drifting, covered);
        }
    }
}
