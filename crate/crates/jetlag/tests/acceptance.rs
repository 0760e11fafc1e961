//! Acceptance gate: one test per criterion, each printing a pass/fail line
//! before asserting, so `cargo test --test acceptance -- --nocapture` reads
//! as a checklist.
//!
//! Two clauses are deliberately red. Criteria 2c and 4b encode commonly
//! quoted closed-form constants that are inconsistent with the
//! defining formula N = -(J - J^T)/2; this library implements
//! the definition, under which the m=2 connection entry N12 is
//! 2(alpha2 N1 - alpha1 N2) rather than 0, and the all-ones Yang-Mills
//! energy is 2.0 rather than 8.0. See README "Convention notes". The tests
//! state the quoted values faithfully and therefore fail.

use jetlag::check;
use jetlag::dynamics::{self, IntegratorConfig, JetPoint, Method};
use jetlag::field::FieldError;
use jetlag::geometry;
use jetlag::model::{ModelParams, StarfishCoral};
use jetlag::VectorField;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(name: &str, ok: bool, detail: &str) {
    println!(
        "ACCEPTANCE {name}: {} {detail}",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "acceptance criterion {name} failed: {detail}");
}

fn all_ones(m: f64) -> ModelParams {
    ModelParams {
        m,
        alpha1: 1.0,
        alpha2: 1.0,
        lambda1: 1.0,
        lambda2: 1.0,
        delta1: 1.0,
        delta2: 1.0,
        beta: 1.0,
        gamma: 1.0,
        rho: 1.0,
    }
}

#[test]
fn criterion_1_jacobian_oracle() {
    let r = check::suite_jacobian_fd(42, 1000);
    report(
        "1 (jacobian analytic vs finite differences)",
        r.passed,
        &format!("worst={:.3e} tol={:.0e}", r.worst, r.tolerance),
    );
}

#[test]
fn criterion_2a_connection_exact_skewness() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut ok = true;
    for _ in 0..1000 {
        let m = check::SOCIAL_EXPONENTS[rng.gen_range(0..check::SOCIAL_EXPONENTS.len())];
        let p = check::sample_params(&mut rng, m);
        let model = StarfishCoral::new(p).unwrap();
        let x = check::sample_state(&mut rng);
        let conn = geometry::connection_of(&model, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                // bitwise: N + N^T must be exactly zero
                if conn.spatial[(i, j)] + conn.spatial[(j, i)] != 0.0 {
                    ok = false;
                }
            }
        }
    }
    report("2a (connection exactly skew-symmetric)", ok, "");
}

#[test]
fn criterion_2b_closed_form_agrees_with_pipeline() {
    let r = check::suite_connection(42, 1000);
    report(
        "2b (closed-form connection vs -(J-J^T)/2)",
        r.passed,
        &format!("worst={:.3e} tol={:.0e}", r.worst, r.tolerance),
    );
}

#[test]
fn criterion_2c_m2_n12_vanishes() {
    // Quoted claim: at m = 2 the N12 entry is 0 everywhere. Under the
    // defining formula it is 2(alpha2 N1 - alpha1 N2), which only vanishes
    // on the line alpha2 N1 = alpha1 N2. Expected red.
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = check::sample_params(&mut rng, 2.0);
        let model = StarfishCoral::new(p).unwrap();
        let x = check::sample_state(&mut rng);
        let conn = geometry::connection_of(&model, &x).unwrap();
        worst = worst.max(conn.spatial[(0, 1)].abs());
    }
    report(
        "2c (m=2: |N12| <= 1e-12 everywhere) [expected red: quoted constant, see README]",
        worst <= 1e-12,
        &format!("worst |N12|={worst:.3e}"),
    );
}

#[test]
fn criterion_3_torsion_oracle() {
    let r = check::suite_torsion(42, 1000);
    let p = all_ones(3.0);
    let d1 = geometry::closed_form_dn12_dn1(&p, 1.0, 1.0);
    let d2 = geometry::closed_form_dn12_dn2(&p, 1.0, 1.0);
    let hand = (d1 - 3.0).abs() <= 1e-12 && (d2 + 3.0).abs() <= 1e-12;
    report(
        "3 (torsion closed form vs finite differences; hand values 3.0/-3.0)",
        r.passed && hand,
        &format!(
            "worst={:.3e} tol={:.0e} dN12/dN1={d1} dN12/dN2={d2}",
            r.worst, r.tolerance
        ),
    );
}

#[test]
fn criterion_4a_yang_mills_closed_vs_pipeline() {
    let r = check::suite_yang_mills(42, 1000);
    report(
        "4a (EYM closed form vs pipeline sum)",
        r.passed,
        &format!("worst={:.3e} tol={:.0e}", r.worst, r.tolerance),
    );
}

#[test]
fn criterion_4b_all_ones_eym_is_8() {
    // Quoted claim: EYM = 8.0 at the symmetric all-ones configuration with
    // beta = delta1 = delta2 = 1. Under the defining formula the connection
    // entries at (1,1,1) are N12 = 0, N13 = N23 = (beta*F + delta1*N1)/2 = 1,
    // so EYM = 0 + 1 + 1 = 2.0. Expected red.
    let model = StarfishCoral::new(all_ones(2.0)).unwrap();
    let eym = geometry::eym_of(&model, &[1.0, 1.0, 1.0]).unwrap();
    report(
        "4b (all-ones EYM = 8.0) [expected red: quoted constant, see README]",
        (eym - 8.0).abs() <= 1e-9,
        &format!("eym={eym}"),
    );
}

#[test]
fn criterion_4c_eym_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut min = f64::INFINITY;
    for _ in 0..1000 {
        let m = check::SOCIAL_EXPONENTS[rng.gen_range(0..check::SOCIAL_EXPONENTS.len())];
        let p = check::sample_params(&mut rng, m);
        let model = StarfishCoral::new(p).unwrap();
        let x = check::sample_state(&mut rng);
        min = min.min(geometry::eym_of(&model, &x).unwrap());
    }
    report(
        "4c (EYM >= 0 always)",
        min >= 0.0,
        &format!("min={min:.3e}"),
    );
}

#[test]
fn criterion_5_geometric_dynamics_lift() {
    let model = StarfishCoral::new(ModelParams::desk_model()).unwrap();
    let x0 = [1.0, 1.2, 0.4];
    let cfg = IntegratorConfig {
        method: Method::Rk45,
        t0: 0.0,
        t_end: 10.0,
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        ..Default::default()
    };
    let y0 = model.eval(&x0).unwrap();
    let traj2 = dynamics::integrate_second_order(&model, &x0, &y0, &cfg).unwrap();
    assert!(traj2.completed());
    let times: Vec<f64> = traj2.samples.iter().map(|p| p.t).collect();
    let reference = dynamics::sample_first_order_at(&model, &x0, &times, &cfg).unwrap();
    let mut sup: f64 = 0.0;
    for (p, r) in traj2.samples.iter().zip(&reference) {
        for (a, b) in p.x.iter().zip(r) {
            sup = sup.max((a - b).abs());
        }
    }
    report(
        "5 (second-order lift shadows first-order flow on [0,10])",
        sup <= 1e-6,
        &format!("sup gap={sup:.3e}"),
    );
}

#[test]
fn criterion_6_least_squares_characterization() {
    let model = StarfishCoral::new(ModelParams::desk_model()).unwrap();
    let x = vec![1.0, 1.2, 0.4];
    let lift = model.eval(&x).unwrap();
    let on_lift = dynamics::lagrangian(
        &model,
        &JetPoint {
            t: 0.0,
            x: x.clone(),
            y: lift.clone(),
        },
    )
    .unwrap();
    let mut bumped = lift.clone();
    bumped[1] += 1.0;
    let unit = dynamics::lagrangian(
        &model,
        &JetPoint {
            t: 0.0,
            x: x.clone(),
            y: bumped,
        },
    )
    .unwrap();
    // gradient vs finite differences at an off-lift point
    let y = vec![0.3, -0.2, 0.5];
    let (gx, gy) = dynamics::lagrangian_grad(&model, &x, &y).unwrap();
    let h = 1e-6;
    let l_at = |x: &[f64], y: &[f64]| {
        dynamics::lagrangian(
            &model,
            &JetPoint {
                t: 0.0,
                x: x.to_vec(),
                y: y.to_vec(),
            },
        )
        .unwrap()
    };
    let mut grad_ok = true;
    for i in 0..3 {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let fd = (l_at(&xp, &y) - l_at(&xm, &y)) / (2.0 * h);
        grad_ok &= (gx[i] - fd).abs() <= 1e-5 * gx[i].abs().max(1.0);
        let mut yp = y.clone();
        let mut ym = y.clone();
        yp[i] += h;
        ym[i] -= h;
        let fd = (l_at(&x, &yp) - l_at(&x, &ym)) / (2.0 * h);
        grad_ok &= (gy[i] - fd).abs() <= 1e-5 * gy[i].abs().max(1.0);
    }
    report(
        "6 (L = 0 iff jet lift; unit bump L = 1; gradient vs FD)",
        on_lift.abs() <= 1e-12 && (unit - 1.0).abs() <= 1e-12 && grad_ok,
        &format!("L(lift)={on_lift:.3e} L(bump)={unit}"),
    );
}

struct Logistic;
impl VectorField for Logistic {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        Ok(vec![x[0] * (1.0 - x[0])])
    }
    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        Ok(DMatrix::from_element(1, 1, 1.0 - 2.0 * x[0]))
    }
}

#[test]
fn criterion_7_integrator_order() {
    let exact = 1.0 / (1.0 + (-5.0f64).exp());
    let endpoint_err = |h: f64| {
        let cfg = IntegratorConfig {
            method: Method::Rk4,
            t0: 0.0,
            t_end: 5.0,
            init_step: h,
            ..Default::default()
        };
        let traj = dynamics::integrate_first_order(&Logistic, &[0.5], &cfg).unwrap();
        (traj.samples.last().unwrap().x[0] - exact).abs()
    };
    let ratio = endpoint_err(0.1) / endpoint_err(0.05);
    let order_ok = (ratio - 16.0).abs() <= 1.6;

    let cfg = IntegratorConfig {
        t0: 0.0,
        t_end: 5.0,
        ..Default::default()
    };
    let traj = dynamics::integrate_first_order(&Logistic, &[0.5], &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for p in &traj.samples {
        worst = worst.max((p.x[0] - 1.0 / (1.0 + (-p.t).exp())).abs());
    }
    report(
        "7 (RK4 order ratio 16 +/- 10%; RK45 logistic to 1e-8)",
        order_ok && worst <= 1e-8,
        &format!("ratio={ratio:.2} rk45 worst={worst:.3e}"),
    );
}

/// The model expressed in rotated coordinates: Xt(z) = A X(A^T z).
struct Rotated {
    a: DMatrix<f64>,
    inner: StarfishCoral,
}

impl VectorField for Rotated {
    fn dim(&self) -> usize {
        3
    }
    fn eval(&self, z: &[f64]) -> Result<Vec<f64>, FieldError> {
        let back = self.a.transpose() * DVector::from_column_slice(z);
        let v = self.inner.eval(back.as_slice())?;
        Ok((&self.a * DVector::from_vec(v)).as_slice().to_vec())
    }
    fn jacobian(&self, z: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        let back = self.a.transpose() * DVector::from_column_slice(z);
        let j = self.inner.jacobian(back.as_slice())?;
        Ok(&self.a * j * self.a.transpose())
    }
    fn check_domain(&self, _z: &[f64]) -> Result<(), FieldError> {
        // admissibility is delegated to the inner model at eval time
        Ok(())
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
    let qr = raw.qr();
    let mut q = qr.q();
    if q.determinant() < 0.0 {
        for i in 0..3 {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

#[test]
fn criterion_8_rotation_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (p, x) = check::sample_case_tame(&mut rng);
        let model = StarfishCoral::new(p).unwrap();
        let a = random_rotation(&mut rng);
        let conn = geometry::connection_of(&model, &x).unwrap();
        let transported = geometry::transform_connection(&conn, &a).unwrap();
        let rotated = Rotated {
            a: a.clone(),
            inner: model,
        };
        let z = &a * DVector::from_column_slice(&x);
        let direct = geometry::connection_of(&rotated, z.as_slice()).unwrap();
        let gap = (&transported.spatial - &direct.spatial).abs().max();
        worst = worst.max(gap);
    }
    report(
        "8 (A N A^T equals connection of rotated field, 100 rotations)",
        worst <= 1e-9,
        &format!("worst gap={worst:.3e}"),
    );
}

#[test]
fn criterion_9_determinism_and_formats() {
    use std::process::Command;
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "model": { "kind": "starfish-coral" },
            "initial_state": [1.0, 1.2, 0.4],
            "integrator": { "t_end": 5.0 }
        }"#,
    )
    .unwrap();
    let bin = env!("CARGO_BIN_EXE_jetlag");
    let run = || {
        Command::new(bin)
            .args(["simulate", "--config"])
            .arg(&cfg_path)
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    let csv_ok = a.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    let header_ok = a
        .stdout
        .starts_with(b"t,N1,N2,F,y1,y2,y3,EYM\n");
    let check = Command::new(bin)
        .args(["check", "--seed", "42", "--count", "1000"])
        .output()
        .unwrap();
    let check_ok = check.status.code() == Some(0);
    report(
        "9 (byte-identical CSV; check --seed 42 --count 1000 exits 0)",
        csv_ok && header_ok && check_ok,
        &format!(
            "csv identical={} header ok={} check exit={:?}",
            a.stdout == b.stdout,
            header_ok,
            check.status.code()
        ),
    );
}
