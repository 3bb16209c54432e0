//! Scalar abstractions shared by every evaluation context.
//!
//! [`Real`] is the floating-point type underneath everything (`f32` or
//! `f64`). [`Arith`] is the arithmetic a forward pass needs; it is
//! implemented for plain reals, [`Interval`](crate::Interval),
//! [`McCormick`](crate::McCormick) and [`Dual`](crate::Dual), so networks and
//! expressions are written once and evaluated in all four contexts.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

use crate::error::{Error, Result};
use crate::relax::ActivationMode;

/// Floating point type usable as the base scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Literal conversion; every `f64` literal used in the crate is representable.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Upper bound on the argument of `exp` before it is reported as an overflow.
pub const EXP_ARG_LIMIT: f64 = 700.0;

/// Arithmetic over one evaluation context.
///
/// Constants carry no dependence on the optimization variables. Operations
/// that can leave the representable range or the function domain return an
/// [`Error`] instead of producing non-finite values.
pub trait Arith<T: Real>: Clone + Sized {
    fn constant(c: T) -> Self;

    /// Affine combination `sum(coeff * value) + constant`.
    fn affine(terms: &[(T, &Self)], constant: T) -> Result<Self>;

    fn mul(&self, rhs: &Self) -> Result<Self>;
    fn exp(&self) -> Result<Self>;
    fn recip(&self) -> Result<Self>;
    fn powi(&self, n: u32) -> Result<Self>;
    fn tanh(&self, mode: ActivationMode) -> Result<Self>;
    fn sigmoid(&self, mode: ActivationMode) -> Result<Self>;

    fn add(&self, rhs: &Self) -> Result<Self> {
        Self::affine(&[(T::one(), self), (T::one(), rhs)], T::zero())
    }

    fn sub(&self, rhs: &Self) -> Result<Self> {
        Self::affine(&[(T::one(), self), (-T::one(), rhs)], T::zero())
    }

    fn neg(&self) -> Result<Self> {
        Self::affine(&[(-T::one(), self)], T::zero())
    }

    fn scale(&self, c: T) -> Result<Self> {
        Self::affine(&[(c, self)], T::zero())
    }

    fn div(&self, rhs: &Self) -> Result<Self> {
        self.mul(&rhs.recip()?)
    }
}

pub(crate) fn check_exp_arg<T: Real>(x: T) -> Result<()> {
    if x > T::lit(EXP_ARG_LIMIT) || x.is_nan() {
        return Err(Error::Overflow {
            op: "exp",
            bound: x.to_f64_lossy(),
        });
    }
    Ok(())
}

pub(crate) fn check_finite<T: Real>(op: &'static str, x: T) -> Result<T> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Overflow {
            op,
            bound: x.to_f64_lossy(),
        })
    }
}

/// Logistic function written through `tanh` so it never overflows.
pub fn sigmoid<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    half * (T::one() + (half * x).tanh())
}

impl<T: Real> Arith<T> for T {
    fn constant(c: T) -> Self {
        c
    }

    fn affine(terms: &[(T, &Self)], constant: T) -> Result<Self> {
        let v = terms
            .iter()
            .fold(constant, |acc, (c, x)| acc + *c * **x);
        check_finite("affine", v)
    }

    fn mul(&self, rhs: &Self) -> Result<Self> {
        check_finite("mul", *self * *rhs)
    }

    fn exp(&self) -> Result<Self> {
        check_exp_arg(*self)?;
        Ok(Float::exp(*self))
    }

    fn recip(&self) -> Result<Self> {
        if *self == T::zero() {
            return Err(Error::Domain("reciprocal of zero".into()));
        }
        check_finite("recip", Float::recip(*self))
    }

    fn powi(&self, n: u32) -> Result<Self> {
        let n = i32::try_from(n).map_err(|_| Error::Domain("exponent too large".into()))?;
        check_finite("powi", Float::powi(*self, n))
    }

    // Plain evaluation is exact under every relaxation mode.
    fn tanh(&self, _mode: ActivationMode) -> Result<Self> {
        Ok(Float::tanh(*self))
    }

    fn sigmoid(&self, _mode: ActivationMode) -> Result<Self> {
        Ok(sigmoid(*self))
    }
}
