//! The starfish/coral social-interaction model: two coral densities N1, N2
//! preyed on by a starfish density F, with a social exponent `m >= 2`
//! controlling how strongly the corals interact. `m = 2` collapses to the
//! classical quadratic two-coral/one-starfish model.
//!
//! Components of the field, in the order (N1, N2, F):
//!
//! ```text
//! dN1/dt = l1*N1 - a1*N1^2 - a2*(m/(m-1))*N1*N2
//!          + (a1/(m-1))*(N2/N1)^(m-2)*N2^2 - d1*F*N1
//! dN2/dt = l2*N2 - a2*N2^2 - a1*(m/(m-1))*N1*N2
//!          + (a2/(m-1))*(N1/N2)^(m-2)*N1^2 - d2*F*N2
//! dF/dt  = b*F*(N1+N2) + g*F^2 - r*F
//! ```

use crate::field::{FieldError, VectorField};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Floor below which the coral densities make the ratio powers singular for
/// `m > 2`; evaluation is refused rather than extrapolated.
pub const EPS_DOMAIN: f64 = 1e-8;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ParamError {
    #[error("coefficient {name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("social exponent m must be >= 2, got {0}")]
    SocialExponent(f64),
    #[error("non-finite coefficient {name}")]
    NonFinite { name: &'static str },
}

/// The ten ecological coefficients of the model.
///
/// `m` is accepted as any real `>= 2` (the formulas stay well-defined on the
/// positive orthant for real exponents, and sweeps over real `m` are more
/// informative than integer-only ones).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Social exponent, dimensionless, `m >= 2`.
    pub m: f64,
    /// Intraspecific competition rates of the two corals.
    pub alpha1: f64,
    pub alpha2: f64,
    /// Coral growth rates.
    pub lambda1: f64,
    pub lambda2: f64,
    /// Predation interaction coefficients.
    pub delta1: f64,
    pub delta2: f64,
    /// Predator growth interaction coefficient.
    pub beta: f64,
    /// Starfish aggregation coefficient.
    pub gamma: f64,
    /// Starfish mortality rate.
    pub rho: f64,
}

impl ModelParams {
    /// Validates positivity of all rates and `m >= 2`.
    pub fn validate(&self) -> Result<(), ParamError> {
        let named = [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("rho", self.rho),
        ];
        for (name, value) in named {
            if !value.is_finite() {
                return Err(ParamError::NonFinite { name });
            }
            if value <= 0.0 {
                return Err(ParamError::NonPositive { name, value });
            }
        }
        if !self.m.is_finite() {
            return Err(ParamError::NonFinite { name: "m" });
        }
        if self.m < 2.0 {
            return Err(ParamError::SocialExponent(self.m));
        }
        Ok(())
    }

    /// Repository default parameter set ("desk model"). These are not taken
    /// from any data source; they are documented defaults chosen to keep the
    /// trajectory bounded and interior on moderate horizons.
    pub fn desk_model() -> Self {
        ModelParams {
            m: 3.0,
            alpha1: 1.0,
            alpha2: 1.0,
            lambda1: 1.0,
            lambda2: 1.0,
            delta1: 0.5,
            delta2: 0.5,
            beta: 0.2,
            gamma: 0.1,
            rho: 0.3,
        }
    }
}

/// A point (N1, N2, F) of the state space.
pub type StateVector = [f64; 3];

/// `r^e` with an exact repeated-multiplication path for small integer
/// exponents and a log/exp path for real exponents (the two are cross-tested
/// against each other in the unit tests).
pub(crate) fn ratio_pow(r: f64, e: f64) -> f64 {
    if e == 0.0 {
        return 1.0;
    }
    let rounded = e.round();
    if (e - rounded).abs() < 1e-12 && rounded.abs() <= 8.0 {
        r.powi(rounded as i32)
    } else {
        r.powf(e)
    }
}

/// The starfish/coral vector field with analytic Jacobian and domain guards.
#[derive(Debug, Clone, Copy)]
pub struct StarfishCoral {
    pub params: ModelParams,
}

impl StarfishCoral {
    pub fn new(params: ModelParams) -> Result<Self, ParamError> {
        params.validate()?;
        Ok(StarfishCoral { params })
    }

    /// Admissibility verdict. For `m > 2` the coral densities must stay
    /// above [`EPS_DOMAIN`] (the ratio powers are singular at zero); at
    /// `m = 2` no ratio term survives and the boundary N1 = 0 or N2 = 0 is
    /// admissible. F must be nonnegative in all cases.
    pub fn domain_check(&self, x: &StateVector) -> Result<(), FieldError> {
        let [n1, n2, f] = *x;
        for (slot, v) in [("N1", n1), ("N2", n2), ("F", f)] {
            if !v.is_finite() {
                return Err(FieldError::NonFinite { slot: slot.into() });
            }
        }
        if self.params.m > 2.0 {
            if n1 < EPS_DOMAIN {
                return Err(FieldError::Domain { slot: "N1".into(), value: n1 });
            }
            if n2 < EPS_DOMAIN {
                return Err(FieldError::Domain { slot: "N2".into(), value: n2 });
            }
        } else {
            if n1 < 0.0 {
                return Err(FieldError::Domain { slot: "N1".into(), value: n1 });
            }
            if n2 < 0.0 {
                return Err(FieldError::Domain { slot: "N2".into(), value: n2 });
            }
        }
        if f < 0.0 {
            return Err(FieldError::Domain { slot: "F".into(), value: f });
        }
        Ok(())
    }

    /// Right-hand sides (X1, X2, X3) of the system.
    pub fn eval_field(&self, x: &StateVector) -> Result<StateVector, FieldError> {
        self.domain_check(x)?;
        let p = &self.params;
        let [n1, n2, f] = *x;
        let c = p.m / (p.m - 1.0);
        let d = 1.0 / (p.m - 1.0);

        let x1 = p.lambda1 * n1 - p.alpha1 * n1 * n1 - p.alpha2 * c * n1 * n2
            + p.alpha1 * d * ratio_pow(n2 / n1, p.m - 2.0) * n2 * n2
            - p.delta1 * f * n1;
        let x2 = p.lambda2 * n2 - p.alpha2 * n2 * n2 - p.alpha1 * c * n1 * n2
            + p.alpha2 * d * ratio_pow(n1 / n2, p.m - 2.0) * n1 * n1
            - p.delta2 * f * n2;
        let x3 = p.beta * f * (n1 + n2) + p.gamma * f * f - p.rho * f;
        Ok([x1, x2, x3])
    }

    /// The nine closed-form Jacobian entries `J_ij = dX^i/dx^j`.
    ///
    /// Ratio powers are grouped as `N2^m/N1^(m-1) = N2*(N2/N1)^(m-1)` etc.
    /// so that the `m = 2` boundary (where the coefficient of that term
    /// vanishes) never multiplies 0 by infinity.
    pub fn eval_jacobian(&self, x: &StateVector) -> Result<DMatrix<f64>, FieldError> {
        self.domain_check(x)?;
        let p = &self.params;
        let [n1, n2, f] = *x;
        let c = p.m / (p.m - 1.0);
        // (m-2)/(m-1) terms vanish identically at m = 2; skip them there so
        // boundary points with N1 = 0 or N2 = 0 stay finite.
        let q = (p.m - 2.0) / (p.m - 1.0);

        let j11_sing = if p.m == 2.0 {
            0.0
        } else {
            p.alpha1 * q * n2 * ratio_pow(n2 / n1, p.m - 1.0)
        };
        let j22_sing = if p.m == 2.0 {
            0.0
        } else {
            p.alpha2 * q * n1 * ratio_pow(n1 / n2, p.m - 1.0)
        };

        let j11 = p.lambda1 - 2.0 * p.alpha1 * n1 - p.alpha2 * c * n2 - j11_sing - p.delta1 * f;
        let j12 = -p.alpha2 * c * n1 + p.alpha1 * c * n2 * ratio_pow(n2 / n1, p.m - 2.0);
        let j13 = -p.delta1 * n1;
        let j21 = -p.alpha1 * c * n2 + p.alpha2 * c * n1 * ratio_pow(n1 / n2, p.m - 2.0);
        let j22 = p.lambda2 - 2.0 * p.alpha2 * n2 - p.alpha1 * c * n1 - j22_sing - p.delta2 * f;
        let j23 = -p.delta2 * n2;
        let j31 = p.beta * f;
        let j32 = p.beta * f;
        let j33 = p.beta * (n1 + n2) + 2.0 * p.gamma * f - p.rho;

        Ok(DMatrix::from_row_slice(
            3,
            3,
            &[j11, j12, j13, j21, j22, j23, j31, j32, j33],
        ))
    }
}

impl VectorField for StarfishCoral {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FieldError> {
        let s = state_from_slice(x)?;
        Ok(self.eval_field(&s)?.to_vec())
    }

    fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        let s = state_from_slice(x)?;
        self.eval_jacobian(&s)
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), FieldError> {
        let s = state_from_slice(x)?;
        self.domain_check(&s)
    }

    fn coordinate_name(&self, i: usize) -> String {
        ["N1", "N2", "F"][i].to_string()
    }
}

fn state_from_slice(x: &[f64]) -> Result<StateVector, FieldError> {
    if x.len() != 3 {
        return Err(FieldError::Dimension {
            expected: 3,
            got: x.len(),
        });
    }
    Ok([x[0], x[1], x[2]])
}
