//! The Riemann-Lagrange pipeline: canonical nonlinear connection, Cartan
//! coefficients (identically zero), torsion d-tensors, curvature
//! (identically zero), electromagnetic-like 2-form, and the Yang-Mills
//! energy scalar.
//!
//! Everything is generic over a [`VectorField`]; for the built-in
//! starfish/coral model each object also has a closed-form path, and the two
//! routes cross-check each other in the test suites.
//!
//! Matrix convention throughout: row index = field component (superscript),
//! column index = differentiation variable (subscript).

use crate::field::{FieldError, VectorField};
use crate::model::{ratio_pow, ModelParams, StarfishCoral, StateVector};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("non-finite matrix entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not skew-symmetric (max |M + M^T| entry = {0})")]
    NotSkew(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// The canonical nonlinear connection: a skew-symmetric spatial matrix
/// `N = -(J - J^T)/2` plus temporal components that are identically zero for
/// autonomous fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub spatial: DMatrix<f64>,
    pub temporal: DVector<f64>,
}

impl Connection {
    pub fn dim(&self) -> usize {
        self.spatial.nrows()
    }
}

/// The surviving torsion components: one skew-symmetric matrix
/// `R_k = dN/dx^k` per base coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionSet {
    pub matrices: Vec<DMatrix<f64>>,
}

/// The electromagnetic-like 2-form matrix `F = -N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmForm {
    pub matrix: DMatrix<f64>,
}

/// The Yang-Mills energy scalar: sum of squares of the strictly upper
/// triangular entries of the 2-form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YangMills {
    pub value: f64,
}

/// All adapted components of the canonical generalized Cartan connection are
/// zero; the family is represented explicitly so downstream formulas can
/// reference it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartanCoefficients {
    pub dim: usize,
}

impl CartanCoefficients {
    pub fn component(&self, _i: usize, _j: usize, _k: usize) -> f64 {
        0.0
    }
    pub fn is_zero(&self) -> bool {
        true
    }
    pub fn describe(&self) -> String {
        format!("identically zero ({0}x{0}x{0} family)", self.dim)
    }
}

/// The curvature d-tensor of the canonical generalized Cartan connection;
/// all adapted components cancel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureTensor {
    pub dim: usize,
}

impl CurvatureTensor {
    pub fn component(&self, _i: usize, _j: usize, _k: usize, _l: usize) -> f64 {
        0.0
    }
    pub fn norm(&self) -> f64 {
        0.0
    }
    pub fn is_zero(&self) -> bool {
        true
    }
    pub fn describe(&self) -> String {
        format!("identically zero ({0}^4 family)", self.dim)
    }
}

/// Builds the canonical nonlinear connection from a Jacobian matrix.
///
/// The spatial part is `-(J - J^T)/2`, assembled entry-pair by entry-pair so
/// the result is skew-symmetric exactly (zero diagonal, `N_ji = -N_ij` to
/// the bit).
pub fn nonlinear_connection(jac: &DMatrix<f64>) -> Result<Connection, GeometryError> {
    let n = jac.nrows();
    for i in 0..n {
        for j in 0..n {
            if !jac[(i, j)].is_finite() {
                return Err(GeometryError::NonFinite(i, j));
            }
        }
    }
    let mut spatial = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = -0.5 * (jac[(i, j)] - jac[(j, i)]);
            spatial[(i, j)] = v;
            spatial[(j, i)] = -v;
        }
    }
    Ok(Connection {
        spatial,
        temporal: DVector::zeros(n),
    })
}

/// Connection of `field` at `x` (Jacobian then skew part).
pub fn connection_of(field: &dyn VectorField, x: &[f64]) -> Result<Connection, GeometryError> {
    nonlinear_connection(&field.jacobian(x)?)
}

/// The independent entry `N_12` of the starfish/coral connection in closed
/// form:
///
/// ```text
/// N12 = m/(2(m-1)) * [ (a2*N1 - a1*N2)
///                      + a2*N1*(N1/N2)^(m-2) - a1*N2*(N2/N1)^(m-2) ]
/// ```
///
/// obtained by substituting the analytic Jacobian entries into
/// `-(J12 - J21)/2`. At `m = 2` this reduces to `2*(a2*N1 - a1*N2)`.
pub fn closed_form_n12(p: &ModelParams, n1: f64, n2: f64) -> f64 {
    let half_c = 0.5 * p.m / (p.m - 1.0);
    half_c
        * ((p.alpha2 * n1 - p.alpha1 * n2)
            + p.alpha2 * n1 * ratio_pow(n1 / n2, p.m - 2.0)
            - p.alpha1 * n2 * ratio_pow(n2 / n1, p.m - 2.0))
}

/// Closed-form starfish/coral connection. The remaining independent entries
/// are `N13 = (b*F + d1*N1)/2` and `N23 = (b*F + d2*N2)/2`.
pub fn connection_closed_form(
    model: &StarfishCoral,
    x: &StateVector,
) -> Result<Connection, GeometryError> {
    model.domain_check(x)?;
    let p = &model.params;
    let [n1, n2, f] = *x;
    let n12 = closed_form_n12(p, n1, n2);
    let n13 = 0.5 * (p.beta * f + p.delta1 * n1);
    let n23 = 0.5 * (p.beta * f + p.delta2 * n2);
    let spatial = DMatrix::from_row_slice(
        3,
        3,
        &[0.0, n12, n13, -n12, 0.0, n23, -n13, -n23, 0.0],
    );
    Ok(Connection {
        spatial,
        temporal: DVector::zeros(3),
    })
}

/// Generic torsion: central finite differences of the connection along each
/// base coordinate, re-skewed after differencing. `h_scale` defaults to
/// 1e-5 (the step along coordinate k is `h_scale * max(1, |x_k|)`).
pub fn torsion(
    field: &dyn VectorField,
    x: &[f64],
    h_scale: Option<f64>,
) -> Result<TorsionSet, GeometryError> {
    let n = field.dim();
    let h_scale = h_scale.unwrap_or(1e-5);
    let mut matrices = Vec::with_capacity(n);
    for k in 0..n {
        let h = h_scale * x[k].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        // the whole stencil must stay admissible
        field.check_domain(&xp)?;
        field.check_domain(&xm)?;
        let np = connection_of(field, &xp)?;
        let nm = connection_of(field, &xm)?;
        let mut r = (np.spatial - nm.spatial) / (2.0 * h);
        let skew = (&r - r.transpose()) * 0.5;
        r = skew;
        matrices.push(r);
    }
    Ok(TorsionSet { matrices })
}

/// `dN12/dN1` of the closed-form connection.
pub fn closed_form_dn12_dn1(p: &ModelParams, n1: f64, n2: f64) -> f64 {
    let half_c = 0.5 * p.m / (p.m - 1.0);
    half_c
        * (p.alpha2
            + p.alpha2 * (p.m - 1.0) * ratio_pow(n1 / n2, p.m - 2.0)
            + p.alpha1 * (p.m - 2.0) * ratio_pow(n2 / n1, p.m - 1.0))
}

/// `dN12/dN2` of the closed-form connection.
pub fn closed_form_dn12_dn2(p: &ModelParams, n1: f64, n2: f64) -> f64 {
    let half_c = 0.5 * p.m / (p.m - 1.0);
    half_c
        * (-p.alpha1
            - p.alpha2 * (p.m - 2.0) * ratio_pow(n1 / n2, p.m - 1.0)
            - p.alpha1 * (p.m - 1.0) * ratio_pow(n2 / n1, p.m - 2.0))
}

/// Closed-form starfish/coral torsion matrices `R_k = dN/dx^k`:
///
/// ```text
/// R_1 = [[0, dN12/dN1, d1/2], [-dN12/dN1, 0, 0], [-d1/2, 0, 0]]
/// R_2 = [[0, dN12/dN2, 0], [-dN12/dN2, 0, d2/2], [0, -d2/2, 0]]
/// R_3 = [[0, 0, b/2], [0, 0, b/2], [-b/2, -b/2, 0]]
/// ```
pub fn torsion_closed_form(
    model: &StarfishCoral,
    x: &StateVector,
) -> Result<TorsionSet, GeometryError> {
    model.domain_check(x)?;
    let p = &model.params;
    let [n1, n2, _] = *x;
    let d1h = 0.5 * p.delta1;
    let d2h = 0.5 * p.delta2;
    let bh = 0.5 * p.beta;
    let a = closed_form_dn12_dn1(p, n1, n2);
    let b = closed_form_dn12_dn2(p, n1, n2);
    let r1 = DMatrix::from_row_slice(3, 3, &[0.0, a, d1h, -a, 0.0, 0.0, -d1h, 0.0, 0.0]);
    let r2 = DMatrix::from_row_slice(3, 3, &[0.0, b, 0.0, -b, 0.0, d2h, 0.0, -d2h, 0.0]);
    let r3 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, bh, 0.0, 0.0, bh, -bh, -bh, 0.0]);
    Ok(TorsionSet {
        matrices: vec![r1, r2, r3],
    })
}

pub fn cartan_coefficients(dim: usize) -> CartanCoefficients {
    CartanCoefficients { dim }
}

pub fn curvature(dim: usize) -> CurvatureTensor {
    CurvatureTensor { dim }
}

/// The electromagnetic-like 2-form: entrywise negation of the connection's
/// spatial part.
pub fn em_form(conn: &Connection) -> EmForm {
    EmForm {
        matrix: -&conn.spatial,
    }
}

/// Sum of squares of the strictly upper triangular entries. Rejects inputs
/// whose asymmetry exceeds 1e-12.
pub fn yang_mills(form: &EmForm) -> Result<YangMills, GeometryError> {
    let m = &form.matrix;
    let n = m.nrows();
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((m[(i, j)] + m[(j, i)]).abs());
        }
    }
    if asym > 1e-12 {
        return Err(GeometryError::NotSkew(asym));
    }
    let mut value = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            value += m[(i, j)] * m[(i, j)];
        }
    }
    Ok(YangMills { value })
}

/// Closed-form Yang-Mills energy of the starfish/coral model:
/// `N12^2 + ((b*F + d1*N1)/2)^2 + ((b*F + d2*N2)/2)^2`.
pub fn eym_closed_form(model: &StarfishCoral, x: &StateVector) -> Result<f64, GeometryError> {
    model.domain_check(x)?;
    let p = &model.params;
    let [n1, n2, f] = *x;
    let n12 = closed_form_n12(p, n1, n2);
    let n13 = 0.5 * (p.beta * f + p.delta1 * n1);
    let n23 = 0.5 * (p.beta * f + p.delta2 * n2);
    Ok(n12 * n12 + n13 * n13 + n23 * n23)
}

/// Full pipeline at a point: Yang-Mills energy from the field's Jacobian.
pub fn eym_of(field: &dyn VectorField, x: &[f64]) -> Result<f64, GeometryError> {
    let conn = connection_of(field, x)?;
    Ok(yang_mills(&em_form(&conn))?.value)
}

/// Transforms the spatial connection components under a constant linear
/// change of base coordinates `x~ = A x` (time unchanged): `N~ = A N A^-1`.
/// Skew-symmetry is preserved only when `A` is orthogonal; the canonical
/// construction is adapted to the Euclidean metric.
pub fn transform_connection(
    conn: &Connection,
    a: &DMatrix<f64>,
) -> Result<Connection, GeometryError> {
    let a_inv = a.clone().try_inverse().ok_or(GeometryError::Singular)?;
    Ok(Connection {
        spatial: a * &conn.spatial * a_inv,
        temporal: conn.temporal.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::{sample_params, sample_state, SOCIAL_EXPONENTS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(m: f64) -> StarfishCoral {
        let mut p = ModelParams::desk_model();
        p.m = m;
        p.alpha1 = 1.0;
        p.alpha2 = 1.0;
        StarfishCoral::new(p).unwrap()
    }

    #[test]
    fn symmetric_jacobian_gives_zero_connection() {
        let j = DMatrix::identity(3, 3);
        let c = nonlinear_connection(&j).unwrap();
        assert_eq!(c.spatial, DMatrix::zeros(3, 3));
        assert_eq!(c.temporal, DVector::zeros(3));
    }

    #[test]
    fn rejects_non_finite_jacobian() {
        let mut j = DMatrix::zeros(2, 2);
        j[(0, 1)] = f64::NAN;
        assert!(matches!(
            nonlinear_connection(&j),
            Err(GeometryError::NonFinite(0, 1))
        ));
    }

    #[test]
    fn n13_entry_closed_form() {
        // N13 = (b*F + d1*N1)/2: at b=1, F=2, d1=0.5, N1=4 -> 2.0
        let p = ModelParams {
            m: 3.0,
            alpha1: 1.0,
            alpha2: 1.0,
            lambda1: 1.0,
            lambda2: 1.0,
            delta1: 0.5,
            delta2: 0.5,
            beta: 1.0,
            gamma: 1.0,
            rho: 1.0,
        };
        let m = StarfishCoral::new(p).unwrap();
        let x = [4.0, 1.0, 2.0];
        let closed = connection_closed_form(&m, &x).unwrap();
        assert!((closed.spatial[(0, 2)] - 2.0).abs() < 1e-14);
        // and the pipeline agrees
        let pipe = connection_of(&m, &x).unwrap();
        assert!((pipe.spatial[(0, 2)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn n12_closed_form_spot_value() {
        // m=3, a1=a2=1, (N1,N2)=(1,2):
        // N12 = (3/4)*[(1-2) + (1/2 - 4)] = -3.375
        let m = model(3.0);
        let x = [1.0, 2.0, 1.0];
        let closed = connection_closed_form(&m, &x).unwrap();
        assert!((closed.spatial[(0, 1)] - (-3.375)).abs() < 1e-14);
        let pipe = connection_of(&m, &x).unwrap();
        assert!((pipe.spatial[(0, 1)] - (-3.375)).abs() < 1e-12);
    }

    #[test]
    fn n12_vanishes_on_symmetric_diagonal() {
        // N1=N2 with a1=a2 kills both brackets
        let m = model(4.0);
        let closed = connection_closed_form(&m, &[1.7, 1.7, 0.4]).unwrap();
        assert!(closed.spatial[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn n12_at_m2_is_twice_the_alpha_imbalance() {
        // At m=2 the closed form reduces to 2*(a2*N1 - a1*N2); the quadratic
        // model's Jacobian is not symmetric, so the connection does not
        // vanish there.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = sample_params(&mut rng, 2.0);
            let m = StarfishCoral::new(p).unwrap();
            let x = sample_state(&mut rng);
            let expected = 2.0 * (p.alpha2 * x[0] - p.alpha1 * x[1]);
            let closed = connection_closed_form(&m, &x).unwrap();
            let pipe = connection_of(&m, &x).unwrap();
            assert!((closed.spatial[(0, 1)] - expected).abs() <= 1e-12 * expected.abs().max(1.0));
            assert!((pipe.spatial[(0, 1)] - expected).abs() <= 1e-10 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn closed_form_matches_pipeline_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let m_exp = SOCIAL_EXPONENTS[rng.gen_range(0..SOCIAL_EXPONENTS.len())];
            let p = sample_params(&mut rng, m_exp);
            let model = StarfishCoral::new(p).unwrap();
            let x = sample_state(&mut rng);
            let closed = connection_closed_form(&model, &x).unwrap();
            let pipe = connection_of(&model, &x).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let a = closed.spatial[(i, j)];
                    let b = pipe.spatial[(i, j)];
                    assert!(
                        (a - b).abs() <= 1e-10 * a.abs().max(1.0),
                        "m={m_exp} ({i},{j}): {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn torsion_constant_entries() {
        let m = model(3.0);
        let x = [1.3, 0.8, 2.1];
        let p = &m.params;
        let t = torsion(&m, &x, None).unwrap();
        // R_3 = dN/dF has constant entries b/2
        let bh = 0.5 * p.beta;
        let r3 = &t.matrices[2];
        for (idx, want) in [((0, 2), bh), ((1, 2), bh), ((2, 0), -bh), ((2, 1), -bh)] {
            assert!((r3[idx] - want).abs() < 1e-9, "{idx:?}");
        }
        assert!((t.matrices[0][(0, 2)] - 0.5 * p.delta1).abs() < 1e-9);
        assert!((t.matrices[1][(1, 2)] - 0.5 * p.delta2).abs() < 1e-9);
    }

    #[test]
    fn torsion_hand_derived_values() {
        // m=3, a1=a2=1, N1=N2=1:
        // dN12/dN1 = (3/4)*[1 + 2 + 1] = 3, dN12/dN2 = (3/4)*[-1 -1 -2] = -3
        let m = model(3.0);
        let x = [1.0, 1.0, 1.0];
        let closed = torsion_closed_form(&m, &x).unwrap();
        assert!((closed.matrices[0][(0, 1)] - 3.0).abs() < 1e-14);
        assert!((closed.matrices[1][(0, 1)] - (-3.0)).abs() < 1e-14);
        let fd = torsion(&m, &x, None).unwrap();
        assert!((fd.matrices[0][(0, 1)] - 3.0).abs() < 1e-6);
        assert!((fd.matrices[1][(0, 1)] - (-3.0)).abs() < 1e-6);
    }

    #[test]
    fn torsion_closed_form_spot_value() {
        // R_2 entry (1,2) at m=3, a1=a2=1, N1=2, N2=1:
        // (3/4)*[-1 - 4 - 1] = -4.5
        let m = model(3.0);
        let closed = torsion_closed_form(&m, &[2.0, 1.0, 1.0]).unwrap();
        assert!((closed.matrices[1][(0, 1)] - (-4.5)).abs() < 1e-14);
    }

    #[test]
    fn torsion_m2_derivative() {
        // At m=2, N12 = 2*(a2*N1 - a1*N2), so dN12/dN1 = 2*a2 everywhere.
        let mut p = ModelParams::desk_model();
        p.m = 2.0;
        p.alpha2 = 0.7;
        let m = StarfishCoral::new(p).unwrap();
        let closed = torsion_closed_form(&m, &[1.1, 0.6, 0.2]).unwrap();
        assert!((closed.matrices[0][(0, 1)] - 1.4).abs() < 1e-14);
        let fd = torsion(&m, &[1.1, 0.6, 0.2], None).unwrap();
        assert!((fd.matrices[0][(0, 1)] - 1.4).abs() < 1e-8);
    }

    #[test]
    fn torsion_closed_matches_fd_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let m_exp = SOCIAL_EXPONENTS[rng.gen_range(0..SOCIAL_EXPONENTS.len())];
            let p = sample_params(&mut rng, m_exp);
            let model = StarfishCoral::new(p).unwrap();
            let x = sample_state(&mut rng);
            let closed = torsion_closed_form(&model, &x).unwrap();
            let fd = torsion(&model, &x, None).unwrap();
            for k in 0..3 {
                let diff = (&closed.matrices[k] - &fd.matrices[k]).abs().max();
                let scale = closed.matrices[k].abs().max().max(1.0);
                assert!(diff <= 1e-6 * scale, "m={m_exp} k={k} diff={diff}");
            }
        }
    }

    #[test]
    fn torsion_fd_shows_second_order_richardson_behavior() {
        // error(h) ~ C h^2: halving the step shrinks the deviation from the
        // closed form by about 4x
        let m = model(3.0);
        let x = [0.9, 1.4, 0.7];
        let closed = torsion_closed_form(&m, &x).unwrap();
        let err = |h: f64| -> f64 {
            let fd = torsion(&m, &x, Some(h)).unwrap();
            (0..3)
                .map(|k| (&closed.matrices[k] - &fd.matrices[k]).abs().max())
                .fold(0.0, f64::max)
        };
        let e1 = err(1e-3);
        let e2 = err(5e-4);
        let ratio = e1 / e2;
        assert!((2.5..6.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn cartan_and_curvature_are_explicit_zeros() {
        let c = cartan_coefficients(3);
        assert_eq!(c.component(0, 1, 2), 0.0);
        assert!(c.is_zero());
        assert!(c.describe().contains("identically zero"));
        let r = curvature(3);
        assert_eq!(r.component(2, 1, 0, 1), 0.0);
        assert_eq!(r.norm(), 0.0);
        assert!(r.describe().contains("identically zero"));
    }

    #[test]
    fn em_form_negates_connection() {
        let m = model(3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let x = sample_state(&mut rng);
            let conn = connection_of(&m, &x).unwrap();
            let f = em_form(&conn);
            assert_eq!(&f.matrix + &conn.spatial, DMatrix::zeros(3, 3));
        }
        // F13 = -(b*F + d1*N1)/2
        let x = [2.0, 1.0, 3.0];
        let p = &m.params;
        let f = em_form(&connection_of(&m, &x).unwrap());
        let want = -0.5 * (p.beta * 3.0 + p.delta1 * 2.0);
        assert!((f.matrix[(0, 2)] - want).abs() < 1e-12);
    }

    #[test]
    fn yang_mills_basics() {
        let zero = EmForm {
            matrix: DMatrix::zeros(3, 3),
        };
        assert_eq!(yang_mills(&zero).unwrap().value, 0.0);
        let mut bad = DMatrix::zeros(2, 2);
        bad[(0, 1)] = 1.0;
        bad[(1, 0)] = -1.0 + 1e-6;
        assert!(matches!(
            yang_mills(&EmForm { matrix: bad }),
            Err(GeometryError::NotSkew(_))
        ));
    }

    #[test]
    fn eym_symmetric_all_ones_configuration() {
        // a1=a2 and N1=N2 kill the N12 bracket; with b=d1=d2=1 at
        // (1,1,1) each remaining entry is (1+1)/2 = 1, so EYM = 1 + 1 = 2.
        let p = ModelParams {
            m: 2.0,
            alpha1: 1.0,
            alpha2: 1.0,
            lambda1: 1.0,
            lambda2: 1.0,
            delta1: 1.0,
            delta2: 1.0,
            beta: 1.0,
            gamma: 1.0,
            rho: 1.0,
        };
        let m = StarfishCoral::new(p).unwrap();
        let x = [1.0, 1.0, 1.0];
        let closed = eym_closed_form(&m, &x).unwrap();
        assert!((closed - 2.0).abs() < 1e-14);
        let pipe = eym_of(&m, &x).unwrap();
        assert!((pipe - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eym_closed_matches_pipeline_and_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..1000 {
            let m_exp = SOCIAL_EXPONENTS[rng.gen_range(0..SOCIAL_EXPONENTS.len())];
            let p = sample_params(&mut rng, m_exp);
            let model = StarfishCoral::new(p).unwrap();
            let x = sample_state(&mut rng);
            let closed = eym_closed_form(&model, &x).unwrap();
            let pipe = eym_of(&model, &x).unwrap();
            assert!(closed >= 0.0);
            assert!((closed - pipe).abs() <= 1e-9 * closed.abs().max(1.0));
        }
    }

    #[test]
    fn eym_strictly_positive_on_m2_interior() {
        // For m=2 with F>0 the entries b*F + d*N are positive, so EYM > 0.
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..200 {
            let p = sample_params(&mut rng, 2.0);
            let model = StarfishCoral::new(p).unwrap();
            let x = sample_state(&mut rng);
            assert!(eym_closed_form(&model, &x).unwrap() > 0.0);
        }
    }

    fn random_rotation(rng: &mut impl Rng) -> DMatrix<f64> {
        let raw = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        raw.qr().q()
    }

    struct Conjugated<'a> {
        inner: &'a StarfishCoral,
        a: DMatrix<f64>,
    }

    impl crate::field::VectorField for Conjugated<'_> {
        fn dim(&self) -> usize {
            3
        }
        fn eval(&self, xt: &[f64]) -> Result<Vec<f64>, FieldError> {
            // X~(x~) = A X(A^T x~) for orthogonal A
            let xt = DVector::from_column_slice(xt);
            let x = self.a.transpose() * &xt;
            let v = self.inner.eval(x.as_slice())?;
            let out = &self.a * DVector::from_vec(v);
            Ok(out.as_slice().to_vec())
        }
        fn jacobian(&self, xt: &[f64]) -> Result<DMatrix<f64>, FieldError> {
            let xt = DVector::from_column_slice(xt);
            let x = self.a.transpose() * &xt;
            let j = self.inner.jacobian(x.as_slice())?;
            Ok(&self.a * j * self.a.transpose())
        }
        fn check_domain(&self, _x: &[f64]) -> Result<(), FieldError> {
            Ok(())
        }
    }

    #[test]
    fn transform_identity_is_noop() {
        let m = model(3.0);
        let conn = connection_of(&m, &[1.0, 2.0, 0.5]).unwrap();
        let t = transform_connection(&conn, &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(t.spatial, conn.spatial);
        assert_eq!(t.temporal, conn.temporal);
    }

    #[test]
    fn transform_rejects_singular_matrix() {
        let m = model(3.0);
        let conn = connection_of(&m, &[1.0, 2.0, 0.5]).unwrap();
        assert!(matches!(
            transform_connection(&conn, &DMatrix::zeros(3, 3)),
            Err(GeometryError::Singular)
        ));
    }

    #[test]
    fn orthogonal_equivariance() {
        // For orthogonal A, A N(x) A^T equals the connection of the
        // conjugated field at A x.
        let m = model(3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..100 {
            let a = random_rotation(&mut rng);
            let x = sample_state(&mut rng);
            let conn = connection_of(&m, &x).unwrap();
            let transformed = transform_connection(&conn, &a).unwrap();
            let conj = Conjugated { inner: &m, a: a.clone() };
            let xt = &a * DVector::from_column_slice(&x);
            let direct = connection_of(&conj, xt.as_slice()).unwrap();
            let diff = (&transformed.spatial - &direct.spatial).abs().max();
            assert!(diff <= 1e-9, "diff={diff}");
        }
    }

    #[test]
    fn non_orthogonal_scaling_breaks_equivariance() {
        // The canonical construction is adapted to the Euclidean metric:
        // under A = diag(2,1,1) the transported connection differs from the
        // one computed directly from the rescaled field.
        let m = model(3.0);
        let x = [1.0, 2.0, 0.5];
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 1.0]));
        let conn = connection_of(&m, &x).unwrap();
        let transported = transform_connection(&conn, &a).unwrap();

        // rescaled field: X~(x~) = A X(A^-1 x~)
        struct Rescaled<'a> {
            inner: &'a StarfishCoral,
            a: DMatrix<f64>,
            a_inv: DMatrix<f64>,
        }
        impl crate::field::VectorField for Rescaled<'_> {
            fn dim(&self) -> usize {
                3
            }
            fn eval(&self, xt: &[f64]) -> Result<Vec<f64>, FieldError> {
                let x = &self.a_inv * DVector::from_column_slice(xt);
                let v = self.inner.eval(x.as_slice())?;
                Ok((&self.a * DVector::from_vec(v)).as_slice().to_vec())
            }
            fn jacobian(&self, xt: &[f64]) -> Result<DMatrix<f64>, FieldError> {
                let x = &self.a_inv * DVector::from_column_slice(xt);
                let j = self.inner.jacobian(x.as_slice())?;
                Ok(&self.a * j * &self.a_inv)
            }
            fn check_domain(&self, _x: &[f64]) -> Result<(), FieldError> {
                Ok(())
            }
        }
        let rescaled = Rescaled {
            inner: &m,
            a: a.clone(),
            a_inv: a.clone().try_inverse().unwrap(),
        };
        let xt = &a * DVector::from_column_slice(&x);
        let direct = connection_of(&rescaled, xt.as_slice()).unwrap();
        let diff = (&transported.spatial - &direct.spatial).abs().max();
        assert!(diff > 1e-3, "expected a documented inequality, diff={diff}");
    }
}
