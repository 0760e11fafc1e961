//! CSV and JSON emission for trajectories, geometry reports, and sweep
//! summaries. Floating-point values are rendered with 17 significant digits
//! so that parsing them back yields the identical bits.

use crate::dynamics::{Termination, Trajectory};
use serde::Serialize;
use serde_json::json;

/// 17-significant-digit decimal rendering; round-trips through `str::parse`
/// to the same f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn termination_label(t: &Termination) -> String {
    match t {
        Termination::Completed => "completed".into(),
        Termination::DomainExit { t, detail } => format!("domain-exit@{t}: {detail}"),
        Termination::MaxStepsExceeded { t } => format!("max-steps@{t}"),
        Termination::StepUnderflow { t } => format!("step-underflow@{t}"),
    }
}

/// Trajectory CSV: `t,<coords...>,y1..yn,EYM`, one row per sample. For the
/// builtin model the header is exactly `t,N1,N2,F,y1,y2,y3,EYM`.
pub fn trajectory_csv(traj: &Trajectory, eym: &[f64], coord_names: &[String]) -> String {
    assert_eq!(traj.samples.len(), eym.len());
    let n = coord_names.len();
    let mut out = String::from("t");
    for name in coord_names {
        out.push(',');
        out.push_str(name);
    }
    for i in 1..=n {
        out.push_str(&format!(",y{i}"));
    }
    out.push_str(",EYM\n");
    for (p, e) in traj.samples.iter().zip(eym) {
        out.push_str(&format_float(p.t));
        for v in p.x.iter().chain(&p.y) {
            out.push(',');
            out.push_str(&format_float(*v));
        }
        out.push(',');
        out.push_str(&format_float(*e));
        out.push('\n');
    }
    out
}

/// JSON mirror of the trajectory CSV plus run metadata and a config echo.
pub fn trajectory_record(
    run_id: &str,
    config_echo: &impl Serialize,
    traj: &Trajectory,
    eym: &[f64],
    coord_names: &[String],
    elapsed_secs: f64,
) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = traj
        .samples
        .iter()
        .zip(eym)
        .map(|(p, e)| json!({ "t": p.t, "x": p.x, "y": p.y, "eym": e }))
        .collect();
    json!({
        "schema": 1,
        "run_id": run_id,
        "config": serde_json::to_value(config_echo).expect("config serializes"),
        "coordinates": coord_names,
        "metadata": {
            "integrator": traj.metadata.integrator,
            "step_policy": traj.metadata.step_policy,
            "termination": termination_label(&traj.metadata.termination),
        },
        "elapsed_secs": elapsed_secs,
        "samples": rows,
    })
}

/// Sweep summary CSV: one row per grid cell with the axis values, endpoint
/// state, EYM statistics, and termination reason.
pub struct SweepRow {
    pub axis_values: Vec<f64>,
    pub endpoint: Vec<f64>,
    pub eym_min: f64,
    pub eym_max: f64,
    pub eym_final: f64,
    pub termination: String,
}

pub fn sweep_csv(axis_names: &[String], coord_names: &[String], rows: &[SweepRow]) -> String {
    let mut out = String::new();
    for a in axis_names {
        out.push_str(a);
        out.push(',');
    }
    for c in coord_names {
        out.push_str(&format!("{c}_end,"));
    }
    out.push_str("eym_min,eym_max,eym_final,termination\n");
    for row in rows {
        for v in row.axis_values.iter().chain(&row.endpoint) {
            out.push_str(&format_float(*v));
            out.push(',');
        }
        out.push_str(&format_float(row.eym_min));
        out.push(',');
        out.push_str(&format_float(row.eym_max));
        out.push(',');
        out.push_str(&format_float(row.eym_final));
        out.push(',');
        out.push_str(&row.termination);
        out.push('\n');
    }
    out
}
