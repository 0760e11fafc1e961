//! First-order dual numbers `a + a' eps`, `eps^2 = 0`. Arithmetic on the
//! derivative slot follows the usual forward-mode rules, so evaluating an
//! expression with one variable seeded at derivative 1 yields the exact
//! partial derivative with respect to that variable.

use super::{pow_real, EvalError, Scalar};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub deriv: f64,
}

impl Dual {
    pub fn new(value: f64, deriv: f64) -> Self {
        Dual { value, deriv }
    }

    /// A constant: derivative 0.
    pub fn constant(value: f64) -> Self {
        Dual { value, deriv: 0.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.value + o.value, self.deriv + o.deriv)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.value - o.value, self.deriv - o.deriv)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(
            self.value * o.value,
            self.deriv * o.value + self.value * o.deriv,
        )
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual::new(
            self.value / o.value,
            (self.deriv * o.value - self.value * o.deriv) / (o.value * o.value),
        )
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.value, -self.deriv)
    }
}

impl Scalar for Dual {
    fn constant(v: f64) -> Self {
        Dual::constant(v)
    }

    fn real(self) -> f64 {
        self.value
    }

    fn exp(self) -> Self {
        let e = self.value.exp();
        Dual::new(e, self.deriv * e)
    }

    fn ln(self) -> Result<Self, EvalError> {
        if self.value <= 0.0 {
            return Err(EvalError::Domain(format!(
                "ln of non-positive value {}",
                self.value
            )));
        }
        Ok(Dual::new(self.value.ln(), self.deriv / self.value))
    }

    fn sqrt(self) -> Result<Self, EvalError> {
        if self.value < 0.0 {
            return Err(EvalError::Domain(format!(
                "sqrt of negative value {}",
                self.value
            )));
        }
        let s = self.value.sqrt();
        Ok(Dual::new(s, self.deriv / (2.0 * s)))
    }

    fn sin(self) -> Self {
        Dual::new(self.value.sin(), self.deriv * self.value.cos())
    }

    fn cos(self) -> Self {
        Dual::new(self.value.cos(), -self.deriv * self.value.sin())
    }

    fn abs(self) -> Self {
        if self.value < 0.0 {
            -self
        } else {
            self
        }
    }

    fn pow(self, e: Dual) -> Result<Self, EvalError> {
        let rounded = e.value.round();
        if e.deriv == 0.0 && (e.value - rounded).abs() < 1e-12 && rounded.abs() <= 64.0 {
            // integer exponent with constant exponent slot: repeated
            // multiplication, valid for any base sign
            let k = rounded as i64;
            if k == 0 {
                return Ok(Dual::constant(1.0));
            }
            if self.value == 0.0 && k < 0 {
                return Err(EvalError::Domain("0 raised to a negative power".into()));
            }
            let v = self.value.powi(k as i32);
            let d = k as f64 * self.value.powi(k as i32 - 1) * self.deriv;
            return Ok(Dual::new(v, d));
        }
        if self.value <= 0.0 {
            return Err(EvalError::Domain(format!(
                "non-integer power of non-positive base {}",
                self.value
            )));
        }
        let v = pow_real(self.value, e.value)?;
        let d = v * (e.deriv * self.value.ln() + e.value * self.deriv / self.value);
        Ok(Dual::new(v, d))
    }
}
