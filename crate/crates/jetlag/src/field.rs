//! The abstract vector-field capability consumed by the geometry and
//! dynamics layers.

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FieldError {
    /// The point lies outside the admissible domain of the field; `slot`
    /// names the offending coordinate.
    #[error("point outside admissible domain: coordinate {slot} = {value}")]
    Domain { slot: String, value: f64 },
    #[error("non-finite value in coordinate {slot}")]
    NonFinite { slot: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("evaluation failed: {0}")]
    Eval(String),
}

/// An autonomous vector field `X: R^n -> R^n` together with its Jacobian.
///
/// Implementations must guarantee that `jacobian` agrees with central finite
/// differences of `eval` to second order in the step; the test suites check
/// this at random interior points.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;

    /// Evaluate `X(x)`.
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError>;

    /// Evaluate the Jacobian matrix `J_ij = dX^i/dx^j` (row = component,
    /// column = differentiation variable).
    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, FieldError>;

    /// Verdict-returning domain guard. The default accepts every finite
    /// point.
    fn check_domain(&self, x: &[f64]) -> Result<(), FieldError> {
        if x.len() != self.dim() {
            return Err(FieldError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return Err(FieldError::NonFinite {
                    slot: self.coordinate_name(i),
                });
            }
        }
        Ok(())
    }

    /// Coordinate names used in diagnostics and file headers.
    fn coordinate_name(&self, i: usize) -> String {
        format!("x{}", i + 1)
    }
}

/// Central finite-difference Jacobian of `eval`, used as an independent
/// oracle against analytic and dual-number Jacobians.
pub fn jacobian_fd(
    field: &dyn VectorField,
    x: &[f64],
    h_scale: f64,
) -> Result<DMatrix<f64>, FieldError> {
    let n = field.dim();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let h = h_scale * x[j].abs().max(1.0);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fp = field.eval(&xp)?;
        let fm = field.eval(&xm)?;
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rotation;

    impl VectorField for Rotation {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
            Ok(vec![x[1], -x[0]])
        }
        fn jacobian(&self, _x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
            Ok(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]))
        }
    }

    #[test]
    fn fd_jacobian_matches_analytic() {
        let f = Rotation;
        let j = f.jacobian(&[0.3, -0.7]).unwrap();
        let j_fd = jacobian_fd(&f, &[0.3, -0.7], 1e-6).unwrap();
        assert!((j - j_fd).abs().max() < 1e-8);
    }

    #[test]
    fn default_domain_rejects_non_finite() {
        let f = Rotation;
        assert!(matches!(
            f.check_domain(&[f64::NAN, 0.0]),
            Err(FieldError::NonFinite { .. })
        ));
        assert!(f.check_domain(&[1.0, 2.0]).is_ok());
    }
}
