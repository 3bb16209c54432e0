//! Forward-mode dual numbers carrying a full gradient vector.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::relax::ActivationMode;
use crate::scalar::{check_exp_arg, check_finite, sigmoid, Arith, Real};

/// Value and gradient. An empty gradient is the zero vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Dual<T> {
    pub value: T,
    pub grad: Vec<T>,
}

impl<T: Real> Dual<T> {
    pub fn variable(index: usize, n: usize, value: T) -> Self {
        let mut grad = vec![T::zero(); n];
        grad[index] = T::one();
        Self { value, grad }
    }

    pub fn grad_dense(&self, n: usize) -> Vec<T> {
        if self.grad.is_empty() {
            vec![T::zero(); n]
        } else {
            self.grad.clone()
        }
    }

    /// Chain rule for a univariate outer function with derivative `d`.
    fn chain(&self, value: T, d: T) -> Self {
        Self {
            value,
            grad: self.grad.iter().map(|g| d * *g).collect(),
        }
    }
}

impl<T: Real> Arith<T> for Dual<T> {
    fn constant(c: T) -> Self {
        Self {
            value: c,
            grad: Vec::new(),
        }
    }

    fn affine(terms: &[(T, &Self)], constant: T) -> Result<Self> {
        let mut value = constant;
        let mut grad: Vec<T> = Vec::new();
        for (c, x) in terms {
            value = value + *c * x.value;
            if x.grad.is_empty() {
                continue;
            }
            if grad.is_empty() {
                grad = vec![T::zero(); x.grad.len()];
            } else if grad.len() != x.grad.len() {
                return Err(Error::MixedContext(grad.len(), x.grad.len()));
            }
            for (g, xg) in grad.iter_mut().zip(&x.grad) {
                *g = *g + *c * *xg;
            }
        }
        Ok(Self {
            value: check_finite("affine", value)?,
            grad,
        })
    }

    fn mul(&self, rhs: &Self) -> Result<Self> {
        // d(ab) = b da + a db
        let mut out = Self::affine(&[(rhs.value, self), (self.value, rhs)], T::zero())?;
        out.value = check_finite("mul", self.value * rhs.value)?;
        Ok(out)
    }

    fn exp(&self) -> Result<Self> {
        check_exp_arg(self.value)?;
        let e = self.value.exp();
        Ok(self.chain(e, e))
    }

    fn recip(&self) -> Result<Self> {
        if self.value == T::zero() {
            return Err(Error::Domain("reciprocal of zero".into()));
        }
        let r = check_finite("recip", self.value.recip())?;
        Ok(self.chain(r, -r * r))
    }

    fn powi(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Ok(Self::constant(T::one()));
        }
        let e = i32::try_from(n).map_err(|_| Error::Domain("exponent too large".into()))?;
        let v = check_finite("powi", self.value.powi(e))?;
        let d = T::from(n).unwrap() * self.value.powi(e - 1);
        Ok(self.chain(v, d))
    }

    fn tanh(&self, _mode: ActivationMode) -> Result<Self> {
        let t = Float::tanh(self.value);
        Ok(self.chain(t, T::one() - t * t))
    }

    fn sigmoid(&self, _mode: ActivationMode) -> Result<Self> {
        let s = sigmoid(self.value);
        Ok(self.chain(s, s * (T::one() - s)))
    }
}
