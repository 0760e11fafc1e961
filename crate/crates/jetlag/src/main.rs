//! Command-line front end. Results go to standard output or `--out` files;
//! diagnostics go to standard error (level controlled by `JETLAG_LOG`).
//!
//! Exit codes: 0 success, 1 config/usage error, 2 domain-exit truncation,
//! 3 internal validation failure.

use clap::{Parser, Subcommand, ValueEnum};
use jetlag::config::{ConfigError, ModelSpec, RunConfig};
use jetlag::dynamics::{self, Termination, Trajectory};
use jetlag::field::VectorField;
use jetlag::model::StarfishCoral;
use jetlag::output::{self, SweepRow};
use jetlag::{check, geometry};
use serde_json::json;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_DOMAIN: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "jetlag",
    version,
    about = "Jet-space Riemann-Lagrange geometry and dynamics of autonomous vector fields"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the full geometric report (J, N, torsion, F, EYM) at a point.
    Geometry {
        #[arg(long)]
        config: PathBuf,
        /// Evaluation point as comma-separated coordinates; defaults to the
        /// configured initial state.
        #[arg(long)]
        at: Option<String>,
    },
    /// Integrate the first-order system and emit the trajectory with EYM.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Integrate the second-order geometric dynamics.
    Geodynamics {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Initial velocity as comma-separated values; defaults to the jet
        /// lift X(x0).
        #[arg(long)]
        y0: Option<String>,
    },
    /// Run the configured sweep axes and emit one summary row per cell.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep cells; defaults to the rayon global pool.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the seeded self-validation suites.
    Check {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("JETLAG_LOG", "warn"),
    )
    .init();
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Geometry { config, at } => cmd_geometry(&config, at.as_deref()),
        Cmd::Simulate {
            config,
            out,
            format,
        } => cmd_trajectory(&config, out.as_deref(), format, None, false),
        Cmd::Geodynamics {
            config,
            out,
            format,
            y0,
        } => cmd_trajectory(&config, out.as_deref(), format, y0.as_deref(), true),
        Cmd::Sweep { config, out, jobs } => cmd_sweep(&config, out.as_deref(), jobs),
        Cmd::Check { seed, count } => cmd_check(seed, count),
    };
    ExitCode::from(code)
}

fn fail(code: u8, msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    code
}

fn load_config(path: &PathBuf) -> Result<RunConfig, ConfigError> {
    let text = if path.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| ConfigError::Parse(format!("reading stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Parse(format!("reading {}: {e}", path.display())))?
    };
    RunConfig::from_json(&text)
}

fn parse_point(field_name: &str, text: &str, dim: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != dim {
        return Err(format!(
            "invalid {field_name}: expected {dim} comma-separated values, got {}",
            parts.len()
        ));
    }
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("invalid {field_name} component `{p}`: {e}"))
        })
        .collect()
}

fn run_id(cfg: &RunConfig) -> String {
    let mut h = DefaultHasher::new();
    cfg.to_json().hash(&mut h);
    format!("{:016x}", h.finish())
}

fn write_output(out: Option<&std::path::Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("writing {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> serde_json::Value {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect();
    json!(rows)
}

fn cmd_geometry(config: &PathBuf, at: Option<&str>) -> u8 {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let field = match cfg.build_field() {
        Ok(f) => f,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let point = match at {
        Some(text) => match parse_point("--at", text, field.dim()) {
            Ok(p) => p,
            Err(e) => return fail(EXIT_CONFIG, e),
        },
        None => cfg.initial_state.clone(),
    };
    if let Err(e) = field.check_domain(&point) {
        return fail(EXIT_DOMAIN, format!("inadmissible point: {e}"));
    }
    let start = Instant::now();
    let report = match geometry_report(&cfg, field.as_ref(), &point) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_INTERNAL, e),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let record = json!({
        "schema": 1,
        "run_id": run_id(&cfg),
        "config": cfg,
        "point": point,
        "report": report,
        "elapsed_secs": elapsed,
    });
    println!("{}", serde_json::to_string_pretty(&record).unwrap());
    EXIT_OK
}

/// Builds the per-point geometry block; when the builtin model is configured
/// the closed-form values are reported alongside the generic pipeline with
/// their maximum relative discrepancy.
fn geometry_report(
    cfg: &RunConfig,
    field: &dyn VectorField,
    point: &[f64],
) -> Result<serde_json::Value, String> {
    let jac = field.jacobian(point).map_err(|e| e.to_string())?;
    let conn = geometry::connection_of(field, point).map_err(|e| e.to_string())?;
    let tors = geometry::torsion(field, point, None).map_err(|e| e.to_string())?;
    let form = geometry::em_form(&conn);
    let ym = geometry::yang_mills(&form).map_err(|e| e.to_string())?;
    // the emitted connection and 2-form must satisfy their skewness
    // invariants; a violation here is an internal failure, not user error
    let asym = (&conn.spatial + conn.spatial.transpose()).abs().max();
    if asym > 1e-12 {
        return Err(format!("emitted connection violates skewness by {asym}"));
    }
    let mut report = json!({
        "jacobian": matrix_json(&jac),
        "connection": matrix_json(&conn.spatial),
        "cartan": geometry::cartan_coefficients(field.dim()).describe(),
        "torsion": tors.matrices.iter().map(matrix_json).collect::<Vec<_>>(),
        "curvature": geometry::curvature(field.dim()).describe(),
        "em_form": matrix_json(&form.matrix),
        "eym": ym.value,
    });
    if let ModelSpec::StarfishCoral { params } = &cfg.model {
        let model = StarfishCoral::new(*params).map_err(|e| e.to_string())?;
        let x: [f64; 3] = [point[0], point[1], point[2]];
        let conn_cf = geometry::connection_closed_form(&model, &x).map_err(|e| e.to_string())?;
        let tors_cf = geometry::torsion_closed_form(&model, &x).map_err(|e| e.to_string())?;
        let eym_cf = geometry::eym_closed_form(&model, &x).map_err(|e| e.to_string())?;
        let mut disc: f64 = 0.0;
        let scale = |a: f64| a.abs().max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                let a = conn_cf.spatial[(i, j)];
                let b = conn.spatial[(i, j)];
                disc = disc.max((a - b).abs() / scale(a));
            }
        }
        for (cf, fd) in tors_cf.matrices.iter().zip(&tors.matrices) {
            let s = cf.abs().max().max(1.0);
            disc = disc.max((cf - fd).abs().max() / s);
        }
        disc = disc.max((eym_cf - ym.value).abs() / scale(eym_cf));
        report["closed_form"] = json!({
            "connection": matrix_json(&conn_cf.spatial),
            "torsion": tors_cf.matrices.iter().map(matrix_json).collect::<Vec<_>>(),
            "eym": eym_cf,
            "max_discrepancy": disc,
        });
    }
    Ok(report)
}

fn termination_exit(t: &Termination) -> u8 {
    match t {
        Termination::Completed => EXIT_OK,
        _ => EXIT_DOMAIN,
    }
}

fn cmd_trajectory(
    config: &PathBuf,
    out: Option<&std::path::Path>,
    format: Format,
    y0_arg: Option<&str>,
    second_order: bool,
) -> u8 {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let field = match cfg.build_field() {
        Ok(f) => f,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    let icfg = cfg.integrator.to_integrator();
    let start = Instant::now();
    let result: Result<Trajectory, _> = if second_order {
        let y0 = if let Some(text) = y0_arg {
            match parse_point("--y0", text, field.dim()) {
                Ok(v) => v,
                Err(e) => return fail(EXIT_CONFIG, e),
            }
        } else if let Some(v) = &cfg.y0 {
            v.clone()
        } else {
            match field.eval(&cfg.initial_state) {
                Ok(v) => v,
                Err(e) => return fail(EXIT_DOMAIN, e),
            }
        };
        dynamics::integrate_second_order(field.as_ref(), &cfg.initial_state, &y0, &icfg)
    } else {
        dynamics::integrate_first_order(field.as_ref(), &cfg.initial_state, &icfg)
    };
    let traj = match result {
        Ok(t) => t,
        Err(dynamics::IntegrateError::Config(e)) => return fail(EXIT_CONFIG, e),
        Err(e) => return fail(EXIT_DOMAIN, e),
    };
    let eym: Vec<f64> = match dynamics::eym_along(&traj, field.as_ref()) {
        Ok(series) => series.into_iter().map(|(_, v)| v).collect(),
        Err(e) => return fail(EXIT_INTERNAL, e),
    };
    let names = cfg.coordinate_names();
    let text = match format {
        Format::Csv => output::trajectory_csv(&traj, &eym, &names),
        Format::Json => {
            let rec = output::trajectory_record(
                &run_id(&cfg),
                &cfg,
                &traj,
                &eym,
                &names,
                start.elapsed().as_secs_f64(),
            );
            let mut s = serde_json::to_string_pretty(&rec).unwrap();
            s.push('\n');
            s
        }
    };
    if let Err(e) = write_output(out, &text) {
        return fail(EXIT_CONFIG, e);
    }
    if let Termination::DomainExit { t, detail } = &traj.metadata.termination {
        log::warn!("trajectory truncated at t = {t}: {detail}");
    }
    termination_exit(&traj.metadata.termination)
}

fn cmd_sweep(config: &PathBuf, out: Option<&std::path::Path>, jobs: Option<usize>) -> u8 {
    let cfg = match load_config(config) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if cfg.sweep.is_empty() {
        return fail(EXIT_CONFIG, "sweep requires at least one sweep axis");
    }
    // lexicographic Cartesian product over axis indices
    let shape: Vec<usize> = cfg.sweep.iter().map(|a| a.values.len()).collect();
    let total: usize = shape.iter().product();
    let cells: Vec<Vec<usize>> = (0..total)
        .map(|mut flat| {
            let mut idx = vec![0usize; shape.len()];
            for k in (0..shape.len()).rev() {
                idx[k] = flat % shape[k];
                flat /= shape[k];
            }
            idx
        })
        .collect();
    let run_cell = |idx: &Vec<usize>| -> Result<SweepRow, String> {
        let mut cell_cfg = cfg.clone();
        let mut axis_values = Vec::with_capacity(idx.len());
        for (axis, &i) in cfg.sweep.iter().zip(idx.iter()) {
            let v = axis.values[i];
            cell_cfg = cell_cfg.with_parameter(&axis.parameter, v);
            axis_values.push(v);
        }
        let field = cell_cfg.build_field().map_err(|e| e.to_string())?;
        let icfg = cell_cfg.integrator.to_integrator();
        let traj = dynamics::integrate_first_order(field.as_ref(), &cell_cfg.initial_state, &icfg)
            .map_err(|e| e.to_string())?;
        let eym: Vec<f64> = dynamics::eym_along(&traj, field.as_ref())
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        let endpoint = traj.samples.last().expect("nonempty trajectory").x.clone();
        Ok(SweepRow {
            axis_values,
            endpoint,
            eym_min: eym.iter().cloned().fold(f64::INFINITY, f64::min),
            eym_max: eym.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            eym_final: *eym.last().unwrap(),
            termination: match &traj.metadata.termination {
                Termination::Completed => "completed".into(),
                other => format!("{other:?}"),
            },
        })
    };
    let compute = || -> Result<Vec<SweepRow>, String> {
        use rayon::prelude::*;
        // indexed parallel collect keeps rows in grid order
        cells.par_iter().map(run_cell).collect()
    };
    let rows = if let Some(k) = jobs {
        let pool = match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(p) => p,
            Err(e) => return fail(EXIT_CONFIG, format!("--jobs: {e}")),
        };
        pool.install(compute)
    } else {
        compute()
    };
    let rows = match rows {
        Ok(r) => r,
        Err(e) => return fail(EXIT_DOMAIN, e),
    };
    let axis_names: Vec<String> = cfg.sweep.iter().map(|a| a.parameter.clone()).collect();
    let text = output::sweep_csv(&axis_names, &cfg.coordinate_names(), &rows);
    if let Err(e) = write_output(out, &text) {
        return fail(EXIT_CONFIG, e);
    }
    EXIT_OK
}

fn cmd_check(seed: u64, count: usize) -> u8 {
    if count == 0 {
        return fail(EXIT_CONFIG, "--count must be at least 1");
    }
    let reports = check::run_all(seed, count);
    for r in &reports {
        println!(
            "{:<32} cases={:<6} worst={:<12.3e} tol={:<9.0e} {}",
            r.suite,
            r.cases,
            r.worst,
            r.tolerance,
            if r.passed { "pass" } else { "FAIL" }
        );
    }
    if check::all_passed(&reports) {
        println!("all suites passed (seed={seed}, count={count})");
        EXIT_OK
    } else {
        println!("SUITE FAILURES (seed={seed}, count={count})");
        EXIT_INTERNAL
    }
}
