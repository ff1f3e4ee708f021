//! Text artifacts of harness runs.
//!
//! Trajectory CSV layout:
//!
//! ```text
//! # driftplan trajectory
//! # config_hash = <64 hex digits>
//! t,x,y,psi,v,beta,psidot,delta,lambda,s,d,mode
//! ```
//!
//! followed by one row per sample. `s` is unwrapped across laps. Floats are
//! written in shortest round-trip form.

use std::fmt::Write as _;

use super::HarnessError;
use crate::planner::{CycleRecord, ExpansionMode, SearchStats, TrajectorySample};

pub const TRAJECTORY_HEADER: &str = "t,x,y,psi,v,beta,psidot,delta,lambda,s,d,mode";

/// One parsed row of a trajectory CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
    pub beta: f64,
    pub psidot: f64,
    pub delta: f64,
    pub lambda: f64,
    pub s: f64,
    pub d: f64,
    pub mode: String,
}

pub fn trajectory_csv(samples: &[TrajectorySample], config_hash: &str) -> String {
    let mut out = format!("# driftplan trajectory\n# config_hash = {config_hash}\n{TRAJECTORY_HEADER}\n");
    for p in samples {
        let (pose, ds) = (&p.state.pose, &p.state.dyn_state);
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            p.t,
            pose.x,
            pose.y,
            pose.psi,
            ds.v,
            ds.beta,
            ds.psidot,
            p.input.delta,
            p.input.lambda,
            p.frenet.s,
            p.frenet.d,
            p.mode.as_str()
        );
    }
    out
}

/// Parses a trajectory CSV, returning the config hash and the rows.
pub fn parse_trajectory_csv(text: &str) -> Result<(String, Vec<TrajectoryRow>), HarnessError> {
    let bad = |line: usize, msg: &str| HarnessError::Io(format!("trajectory CSV line {line}: {msg}"));
    let mut hash = None;
    let mut header = false;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if let Some(meta) = line.strip_prefix('#') {
            if let Some(h) = meta.trim().strip_prefix("config_hash = ") {
                hash = Some(h.to_string());
            }
            continue;
        }
        if !header {
            if line != TRAJECTORY_HEADER {
                return Err(bad(n, "unexpected header"));
            }
            header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(bad(n, "expected 12 fields"));
        }
        let mut x = [0.0; 11];
        for (k, v) in f[..11].iter().enumerate() {
            x[k] = v.parse().map_err(|_| bad(n, "invalid number"))?;
        }
        rows.push(TrajectoryRow {
            t: x[0],
            x: x[1],
            y: x[2],
            psi: x[3],
            v: x[4],
            beta: x[5],
            psidot: x[6],
            delta: x[7],
            lambda: x[8],
            s: x[9],
            d: x[10],
            mode: f[11].to_string(),
        });
    }
    if !header {
        return Err(bad(0, "missing header"));
    }
    Ok((hash.ok_or_else(|| bad(0, "missing config hash"))?, rows))
}

/// `key = value` search statistics without wall time.
pub fn stats_text(stats: &SearchStats) -> String {
    let p = &stats.pruned;
    let mut out = String::new();
    for (k, v) in [
        ("expansions", stats.expansions),
        ("generated", stats.generated),
        ("peak_open", stats.peak_open),
        ("duplicates_replaced", stats.duplicates_replaced),
        ("duplicates_ignored", stats.duplicates_ignored),
        ("pruned_out_of_domain", p.out_of_domain),
        ("pruned_same_sign", p.same_sign),
        ("pruned_speed_jump", p.speed_jump),
        ("pruned_over_speed", p.over_speed),
        ("pruned_bicycle_region", p.outside_bicycle_region),
        ("pruned_model", p.model),
        ("pruned_collision", p.collision),
    ] {
        let _ = writeln!(out, "{k} = {v}");
    }
    let _ = writeln!(out, "termination = {}", stats.termination.as_str());
    out
}

/// Per-cycle records. Wall times go to [`timings_csv`] instead.
pub fn cycles_csv(cycles: &[CycleRecord], config_hash: &str) -> String {
    let mut out = format!(
        "# driftplan cycles\n# config_hash = {config_hash}\n\
         cycle,start_time,start_s,plan_duration,plan_progress,expansions,generated,peak_open,termination\n"
    );
    for c in cycles {
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{},{},{},{}",
            c.cycle,
            c.start_time,
            c.start_s,
            c.plan_duration,
            c.plan_progress,
            c.stats.expansions,
            c.stats.generated,
            c.stats.peak_open,
            c.stats.termination.as_str()
        );
    }
    out
}

/// Planning wall time per cycle; the only non-deterministic artifact.
pub fn timings_csv(cycles: &[CycleRecord]) -> String {
    let mut out = String::from("cycle,wall_time\n");
    for c in cycles {
        let _ = writeln!(out, "{},{:.6}", c.cycle, c.stats.wall_time);
    }
    out
}

pub fn parse_mode(s: &str) -> Option<ExpansionMode> {
    [ExpansionMode::Start, ExpansionMode::Esm, ExpansionMode::Bicycle]
        .into_iter()
        .find(|m| m.as_str() == s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::FrenetPose;
    use crate::vehicle::{ControlInput, DynamicState, FullState, Pose};

    #[test]
    fn csv_round_trips_bit_for_bit() {
        let samples: Vec<TrajectorySample> = (0..5)
            .map(|i| {
                let x = i as f64 / 3.0;
                TrajectorySample {
                    t: 0.025 * i as f64,
                    state: FullState::new(Pose::new(x, -x * 1e-9, 0.1 * x), DynamicState::new(7.0 + x, -0.4 * x, 0.3)),
                    input: ControlInput::new(0.02 * x, 0.1),
                    frenet: FrenetPose::new(100.0 + x, std::f64::consts::PI),
                    mode: if i == 0 { ExpansionMode::Start } else { ExpansionMode::Bicycle },
                }
            })
            .collect();
        let text = trajectory_csv(&samples, "abc");
        let (hash, rows) = parse_trajectory_csv(&text).unwrap();
        assert_eq!(hash, "abc");
        assert_eq!(rows.len(), samples.len());
        for (r, p) in rows.iter().zip(&samples) {
            assert_eq!(r.t, p.t);
            assert_eq!(r.x, p.state.pose.x);
            assert_eq!(r.y, p.state.pose.y);
            assert_eq!(r.beta, p.state.dyn_state.beta);
            assert_eq!(r.lambda, p.input.lambda);
            assert_eq!(r.d, p.frenet.d);
            assert_eq!(parse_mode(&r.mode), Some(p.mode));
        }
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(parse_trajectory_csv("# config_hash = a\nt,x\n").is_err());
        let text = format!("# config_hash = a\n{TRAJECTORY_HEADER}\n1,2,3\n");
        assert!(parse_trajectory_csv(&text).is_err());
    }
}
