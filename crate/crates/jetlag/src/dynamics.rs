//! Time integration of the first-order system and of the second-order
//! Euler-Lagrange extension ("geometric dynamics"), plus the Yang-Mills
//! energy sampled along trajectories.
//!
//! The least-squares Lagrangian on the jet space is
//! `L(x, y) = sum_i (y^i - X^i(x))^2`, whose global minima are exactly the
//! jet lifts `y = X(x)` of first-order solutions. Writing `r = xdot - X(x)`
//! and `J_ij = dX^i/dx^j`, the Euler-Lagrange equations
//! `dL/dx^i - d/dt (dL/dy^i) = 0` expand to
//!
//! ```text
//! dL/dx_i        = -2 (J^T r)_i
//! d/dt dL/dy_i   =  2 (xddot_i - (J xdot)_i)
//! residual_i     = -2 [ (J^T r)_i + xddot_i - (J xdot)_i ]
//! ```
//!
//! Setting the residual to zero and solving for the acceleration gives the
//! second-order flow integrated here:
//!
//! ```text
//! xddot = (J - J^T) xdot + J^T X(x) = -2 N(x) xdot + J^T X(x)
//! ```
//!
//! so first-order solutions (where `xdot = X`, hence `xddot = J X`) are
//! automatically solutions of the second-order system.

use crate::field::{FieldError, VectorField};
use crate::geometry::{self, GeometryError};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point of the 1-jet space: time, base point, and velocity slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JetPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Termination {
    /// Reached `t_end`.
    Completed,
    /// Left the admissible domain; the trajectory is truncated at the last
    /// admissible sample.
    DomainExit { t: f64, detail: String },
    MaxStepsExceeded { t: f64 },
    StepUnderflow { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMeta {
    pub integrator: String,
    pub step_policy: String,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<JetPoint>,
    pub metadata: TrajectoryMeta,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        matches!(self.metadata.termination, Termination::Completed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical fixed-step fourth-order Runge-Kutta.
    Rk4,
    /// Adaptive embedded Runge-Kutta 4(5) with Dormand-Prince coefficients.
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainExitPolicy {
    /// Truncate the trajectory and record the reason (default; population
    /// trajectories legitimately approach extinction boundaries).
    Stop,
    /// Fail the whole integration.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t0: f64,
    pub t_end: f64,
    /// Fixed step for RK4; initial trial step for RK45.
    pub init_step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    pub domain_exit: DomainExitPolicy,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk45,
            t0: 0.0,
            t_end: 10.0,
            init_step: 1e-2,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_steps: 1_000_000,
            domain_exit: DomainExitPolicy::Stop,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        // the comparisons are written to reject NaN as well
        if self.t_end < self.t0 || self.t_end.is_nan() || self.t0.is_nan() {
            return Err(IntegrateError::Config(format!(
                "t_end ({}) must be >= t0 ({})",
                self.t_end, self.t0
            )));
        }
        if self.init_step <= 0.0 || self.init_step.is_nan() {
            return Err(IntegrateError::Config("init_step must be > 0".into()));
        }
        if self.abs_tol <= 0.0 || self.abs_tol.is_nan() || self.rel_tol <= 0.0 || self.rel_tol.is_nan() {
            return Err(IntegrateError::Config("tolerances must be > 0".into()));
        }
        if self.max_steps == 0 {
            return Err(IntegrateError::Config("max_steps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IntegrateError {
    #[error("invalid integrator config: {0}")]
    Config(String),
    #[error("domain exit at t = {t}: {source}")]
    Domain { t: f64, source: FieldError },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// The jet least-squares Lagrangian `L = |y - X(x)|^2`.
pub fn lagrangian(field: &dyn VectorField, p: &JetPoint) -> Result<f64, FieldError> {
    let fx = field.eval(&p.x)?;
    Ok(p.y
        .iter()
        .zip(&fx)
        .map(|(y, x)| (y - x) * (y - x))
        .sum())
}

/// Gradient of the Lagrangian with respect to (x, y):
/// `dL/dx = -2 J^T (y - X)`, `dL/dy = 2 (y - X)`.
pub fn lagrangian_grad(
    field: &dyn VectorField,
    x: &[f64],
    y: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), FieldError> {
    let fx = field.eval(x)?;
    let jac = field.jacobian(x)?;
    let r = DVector::from_iterator(x.len(), y.iter().zip(&fx).map(|(a, b)| a - b));
    let gx = -2.0 * jac.transpose() * &r;
    let gy = 2.0 * r;
    Ok((gx.as_slice().to_vec(), gy.as_slice().to_vec()))
}

/// Euler-Lagrange residual at a point with supplied first and second
/// derivatives; zero exactly on solutions of the geometric dynamics.
pub fn el_residual(
    field: &dyn VectorField,
    x: &[f64],
    xdot: &[f64],
    xddot: &[f64],
) -> Result<Vec<f64>, FieldError> {
    let fx = field.eval(x)?;
    let jac = field.jacobian(x)?;
    let n = x.len();
    let r = DVector::from_iterator(n, xdot.iter().zip(&fx).map(|(a, b)| a - b));
    let v = DVector::from_column_slice(xdot);
    let jt_r = jac.transpose() * &r;
    let j_v = &jac * &v;
    Ok((0..n)
        .map(|i| -2.0 * (jt_r[i] + xddot[i] - j_v[i]))
        .collect())
}

/// Acceleration of the geometric dynamics:
/// `xddot = (J - J^T) xdot + J^T X(x)`.
pub fn geodesic_rhs(field: &dyn VectorField, x: &[f64], y: &[f64]) -> Result<Vec<f64>, FieldError> {
    let fx = DVector::from_vec(field.eval(x)?);
    let jac = field.jacobian(x)?;
    let v = DVector::from_column_slice(y);
    let out = (&jac - jac.transpose()) * v + jac.transpose() * fx;
    Ok(out.as_slice().to_vec())
}

// ---------------------------------------------------------------------------
// integration core

type Rhs<'a> = &'a dyn Fn(&[f64]) -> Result<Vec<f64>, FieldError>;
type Guard<'a> = &'a dyn Fn(&[f64]) -> Result<(), FieldError>;

struct Stepper<'a> {
    rhs: Rhs<'a>,
    guard: Guard<'a>,
}

enum StepOutcome {
    Done { t: f64, state: Vec<f64> },
    Stopped(Termination),
}

const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];

const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl<'a> Stepper<'a> {
    fn eval(&self, y: &[f64]) -> Result<Vec<f64>, FieldError> {
        (self.rhs)(y)
    }

    /// One classical RK4 step; any stage failure is reported as a domain
    /// problem at the current time.
    fn rk4_step(&self, y: &[f64], h: f64) -> Result<Vec<f64>, FieldError> {
        let n = y.len();
        let add = |y: &[f64], k: &[f64], s: f64| -> Vec<f64> {
            (0..n).map(|i| y[i] + s * k[i]).collect()
        };
        let k1 = self.eval(y)?;
        let k2 = self.eval(&add(y, &k1, h / 2.0))?;
        let k3 = self.eval(&add(y, &k2, h / 2.0))?;
        let k4 = self.eval(&add(y, &k3, h))?;
        Ok((0..n)
            .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }

    /// One Dormand-Prince trial step; returns (5th-order state, scaled error
    /// norm).
    fn dp_step(
        &self,
        y: &[f64],
        h: f64,
        abs_tol: f64,
        rel_tol: f64,
    ) -> Result<(Vec<f64>, f64), FieldError> {
        let n = y.len();
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        k.push(self.eval(y)?);
        for row in DP_A.iter() {
            let mut ys = y.to_vec();
            for (j, kj) in k.iter().enumerate() {
                let a = row[j];
                if a != 0.0 {
                    for i in 0..n {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k.push(self.eval(&ys)?);
        }
        let mut y5 = y.to_vec();
        let mut err = vec![0.0; n];
        for (j, kj) in k.iter().enumerate() {
            for i in 0..n {
                y5[i] += h * DP_B5[j] * kj[i];
                err[i] += h * (DP_B5[j] - DP_B4[j]) * kj[i];
            }
        }
        let mut norm: f64 = 0.0;
        for i in 0..n {
            let scale = abs_tol + rel_tol * y[i].abs().max(y5[i].abs());
            norm = norm.max((err[i] / scale).abs());
        }
        Ok((y5, norm))
    }

    /// Drives the adaptive integrator from `t0` to `t_end`, invoking
    /// `on_accept` after every accepted step (not for the initial state).
    #[allow(clippy::too_many_arguments)]
    fn drive_rk45(
        &self,
        t0: f64,
        state0: Vec<f64>,
        t_end: f64,
        cfg: &IntegratorConfig,
        on_accept: &mut dyn FnMut(f64, &[f64]),
    ) -> Result<StepOutcome, IntegrateError> {
        let mut t = t0;
        let mut state = state0;
        let mut h = cfg.init_step.min((t_end - t0).max(0.0));
        let mut steps = 0usize;
        while t < t_end {
            if steps >= cfg.max_steps {
                return Ok(StepOutcome::Stopped(Termination::MaxStepsExceeded { t }));
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Ok(StepOutcome::Stopped(Termination::StepUnderflow { t }));
            }
            let h_try = h.min(t_end - t);
            match self.dp_step(&state, h_try, cfg.abs_tol, cfg.rel_tol) {
                Ok((y_new, err)) if err <= 1.0 => {
                    if let Err(e) = (self.guard)(&y_new) {
                        // shrink into the boundary; below underflow we stop
                        if h_try < 1e-12 * t.abs().max(1.0) {
                            return Ok(StepOutcome::Stopped(Termination::DomainExit {
                                t,
                                detail: e.to_string(),
                            }));
                        }
                        h = h_try * 0.5;
                        steps += 1;
                        continue;
                    }
                    t += h_try;
                    state = y_new;
                    on_accept(t, &state);
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    h = h_try * factor;
                    steps += 1;
                }
                Ok((_, _)) => {
                    // rejected on accuracy
                    let err = self.dp_step(&state, h_try, cfg.abs_tol, cfg.rel_tol)?.1;
                    h = h_try * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                    steps += 1;
                }
                Err(e) => {
                    // a stage left the domain: shrink, or stop at the boundary
                    if h_try < 1e-12 * t.abs().max(1.0) {
                        return Ok(StepOutcome::Stopped(Termination::DomainExit {
                            t,
                            detail: e.to_string(),
                        }));
                    }
                    h = h_try * 0.5;
                    steps += 1;
                }
            }
        }
        Ok(StepOutcome::Done { t, state })
    }

    fn drive_rk4(
        &self,
        t0: f64,
        state0: Vec<f64>,
        t_end: f64,
        cfg: &IntegratorConfig,
        on_accept: &mut dyn FnMut(f64, &[f64]),
    ) -> Result<StepOutcome, IntegrateError> {
        let mut t = t0;
        let mut state = state0;
        let mut steps = 0usize;
        while t < t_end {
            if steps >= cfg.max_steps {
                return Ok(StepOutcome::Stopped(Termination::MaxStepsExceeded { t }));
            }
            let h = cfg.init_step.min(t_end - t);
            match self.rk4_step(&state, h) {
                Ok(y_new) => {
                    if let Err(e) = (self.guard)(&y_new) {
                        return Ok(StepOutcome::Stopped(Termination::DomainExit {
                            t,
                            detail: e.to_string(),
                        }));
                    }
                    // avoid drift in the time grid
                    steps += 1;
                    t = if h == cfg.init_step {
                        t0 + steps as f64 * cfg.init_step
                    } else {
                        t_end
                    };
                    state = y_new;
                    on_accept(t, &state);
                }
                Err(e) => {
                    return Ok(StepOutcome::Stopped(Termination::DomainExit {
                        t,
                        detail: e.to_string(),
                    }));
                }
            }
        }
        Ok(StepOutcome::Done { t, state })
    }

    fn drive(
        &self,
        cfg: &IntegratorConfig,
        state0: Vec<f64>,
        on_accept: &mut dyn FnMut(f64, &[f64]),
    ) -> Result<Termination, IntegrateError> {
        let outcome = match cfg.method {
            Method::Rk4 => self.drive_rk4(cfg.t0, state0, cfg.t_end, cfg, on_accept)?,
            Method::Rk45 => self.drive_rk45(cfg.t0, state0, cfg.t_end, cfg, on_accept)?,
        };
        match outcome {
            StepOutcome::Done { .. } => Ok(Termination::Completed),
            StepOutcome::Stopped(term) => {
                if let (Termination::DomainExit { t, detail }, DomainExitPolicy::Error) =
                    (&term, cfg.domain_exit)
                {
                    return Err(IntegrateError::Domain {
                        t: *t,
                        source: FieldError::Eval(detail.clone()),
                    });
                }
                Ok(term)
            }
        }
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Rk4 => "rk4",
        Method::Rk45 => "rk45-dormand-prince",
    }
}

fn step_policy(cfg: &IntegratorConfig) -> String {
    match cfg.method {
        Method::Rk4 => format!("fixed h={}", cfg.init_step),
        Method::Rk45 => format!(
            "adaptive h0={} abs_tol={} rel_tol={}",
            cfg.init_step, cfg.abs_tol, cfg.rel_tol
        ),
    }
}

/// Integrates `dx/dt = X(x)`. Each sample carries the jet lift `y = X(x)`
/// recorded exactly (not re-derived numerically).
pub fn integrate_first_order(
    field: &dyn VectorField,
    x0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    cfg.validate()?;
    field.check_domain(x0)?;
    let lift = |t: f64, x: &[f64]| -> Result<JetPoint, FieldError> {
        Ok(JetPoint {
            t,
            x: x.to_vec(),
            y: field.eval(x)?,
        })
    };
    let mut samples = vec![lift(cfg.t0, x0).map_err(IntegrateError::Field)?];
    let rhs = |x: &[f64]| field.eval(x);
    let guard = |x: &[f64]| field.check_domain(x);
    let stepper = Stepper {
        rhs: &rhs,
        guard: &guard,
    };
    let mut record_err = None;
    let termination = stepper.drive(cfg, x0.to_vec(), &mut |t, x| {
        match lift(t, x) {
            Ok(p) => samples.push(p),
            Err(e) => record_err = Some(e),
        }
    })?;
    if let Some(e) = record_err {
        return Err(IntegrateError::Field(e));
    }
    Ok(Trajectory {
        samples,
        metadata: TrajectoryMeta {
            integrator: method_name(cfg.method).into(),
            step_policy: step_policy(cfg),
            termination,
        },
    })
}

/// Integrates the geometric dynamics `(x, y)' = (y, (J - J^T) y + J^T X)`.
pub fn integrate_second_order(
    field: &dyn VectorField,
    x0: &[f64],
    y0: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    cfg.validate()?;
    field.check_domain(x0)?;
    let n = field.dim();
    if y0.len() != n {
        return Err(IntegrateError::Field(FieldError::Dimension {
            expected: n,
            got: y0.len(),
        }));
    }
    let rhs = |z: &[f64]| -> Result<Vec<f64>, FieldError> {
        let (x, y) = z.split_at(n);
        let acc = geodesic_rhs(field, x, y)?;
        let mut out = y.to_vec();
        out.extend(acc);
        Ok(out)
    };
    let guard = |z: &[f64]| field.check_domain(&z[..n]);
    let stepper = Stepper {
        rhs: &rhs,
        guard: &guard,
    };
    let mut z0 = x0.to_vec();
    z0.extend_from_slice(y0);
    let mut samples = vec![JetPoint {
        t: cfg.t0,
        x: x0.to_vec(),
        y: y0.to_vec(),
    }];
    let termination = stepper.drive(cfg, z0, &mut |t, z| {
        samples.push(JetPoint {
            t,
            x: z[..n].to_vec(),
            y: z[n..].to_vec(),
        });
    })?;
    Ok(Trajectory {
        samples,
        metadata: TrajectoryMeta {
            integrator: format!("{}-geodesic", method_name(cfg.method)),
            step_policy: step_policy(cfg),
            termination,
        },
    })
}

/// First-order solution sampled exactly at the requested times (adaptive
/// integration between consecutive targets). Used for cross-comparing
/// trajectories recorded on different grids.
pub fn sample_first_order_at(
    field: &dyn VectorField,
    x0: &[f64],
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<Vec<f64>>, IntegrateError> {
    cfg.validate()?;
    let rhs = |x: &[f64]| field.eval(x);
    let guard = |x: &[f64]| field.check_domain(x);
    let stepper = Stepper {
        rhs: &rhs,
        guard: &guard,
    };
    let mut out = Vec::with_capacity(times.len());
    let mut t = cfg.t0;
    let mut state = x0.to_vec();
    for &target in times {
        if target > t {
            match stepper.drive_rk45(t, state.clone(), target, cfg, &mut |_, _| {})? {
                StepOutcome::Done { t: t1, state: s1 } => {
                    t = t1;
                    state = s1;
                }
                StepOutcome::Stopped(term) => {
                    return Err(IntegrateError::Config(format!(
                        "reference integration stopped early: {term:?}"
                    )));
                }
            }
        }
        out.push(state.clone());
    }
    Ok(out)
}

/// Yang-Mills energy at every sample of a trajectory.
pub fn eym_along(
    traj: &Trajectory,
    field: &dyn VectorField,
) -> Result<Vec<(f64, f64)>, GeometryError> {
    traj.samples
        .iter()
        .map(|p| Ok((p.t, geometry::eym_of(field, &p.x)?)))
        .collect()
}
