//! Closed real intervals and their natural extensions.
//!
//! Endpoints are computed in plain floating point without outward rounding.
//! Every operation rejects results that leave the finite range.

use std::fmt;

use crate::error::{Error, Result};
use crate::relax::{reformulated_tanh, ActivationMode};
use crate::scalar::{check_exp_arg, check_finite, sigmoid, Arith, Real};

#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Interval<T> {
    lo: T,
    hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInterval {
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn point(c: T) -> Self {
        Self { lo: c, hi: c }
    }

    // Internal constructor for results already known to be ordered.
    fn checked(op: &'static str, lo: T, hi: T) -> Result<Self> {
        let lo = check_finite(op, lo)?;
        let hi = check_finite(op, hi)?;
        Ok(Self { lo, hi })
    }

    #[inline]
    pub fn lo(&self) -> T {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> T {
        self.hi
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn mid(&self) -> T {
        self.lo + (self.hi - self.lo) * T::lit(0.5)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(T::zero())
    }

    /// Clamp `x` into the interval.
    pub fn clamp(&self, x: T) -> T {
        x.max(self.lo).min(self.hi)
    }

    pub fn hull(&self, other: &Self) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Self { lo, hi })
    }

    /// Split at `at`, which must lie inside the interval.
    pub fn split(&self, at: T) -> (Self, Self) {
        debug_assert!(self.contains(at));
        (Self { lo: self.lo, hi: at }, Self { lo: at, hi: self.hi })
    }

    pub fn cast<U: Real>(&self) -> Interval<U> {
        Interval {
            lo: U::from(self.lo).expect("cast"),
            hi: U::from(self.hi).expect("cast"),
        }
    }

    pub fn iv_add(&self, rhs: &Self) -> Result<Self> {
        Self::checked("add", self.lo + rhs.lo, self.hi + rhs.hi)
    }

    pub fn iv_sub(&self, rhs: &Self) -> Result<Self> {
        Self::checked("sub", self.lo - rhs.hi, self.hi - rhs.lo)
    }

    pub fn iv_neg(&self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn iv_scale(&self, c: T) -> Result<Self> {
        let (a, b) = (c * self.lo, c * self.hi);
        Self::checked("mul", a.min(b), a.max(b))
    }

    pub fn iv_mul(&self, rhs: &Self) -> Result<Self> {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = p.iter().copied().fold(T::infinity(), T::min);
        let hi = p.iter().copied().fold(T::neg_infinity(), T::max);
        Self::checked("mul", lo, hi)
    }

    pub fn iv_recip(&self) -> Result<Self> {
        if self.contains_zero() {
            return Err(Error::Domain(format!(
                "reciprocal of interval [{}, {}] containing zero",
                self.lo, self.hi
            )));
        }
        Self::checked("recip", self.hi.recip(), self.lo.recip())
    }

    pub fn iv_exp(&self) -> Result<Self> {
        check_exp_arg(self.hi)?;
        Self::checked("exp", self.lo.exp(), self.hi.exp())
    }

    pub fn iv_tanh(&self) -> Self {
        Self {
            lo: self.lo.tanh(),
            hi: self.hi.tanh(),
        }
    }

    pub fn iv_sigmoid(&self) -> Self {
        Self {
            lo: sigmoid(self.lo),
            hi: sigmoid(self.hi),
        }
    }

    pub fn iv_powint(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Ok(Self::point(T::one()));
        }
        let e = i32::try_from(n).map_err(|_| Error::Domain("exponent too large".into()))?;
        let (a, b) = (self.lo.powi(e), self.hi.powi(e));
        if n % 2 == 1 {
            Self::checked("powi", a, b)
        } else if self.contains_zero() {
            Self::checked("powi", T::zero(), a.max(b))
        } else {
            Self::checked("powi", a.min(b), a.max(b))
        }
    }
}

impl<T: Real> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl<T: Real> Arith<T> for Interval<T> {
    fn constant(c: T) -> Self {
        Self::point(c)
    }

    fn affine(terms: &[(T, &Self)], constant: T) -> Result<Self> {
        let mut acc = Self::point(constant);
        for (c, x) in terms {
            acc = acc.iv_add(&x.iv_scale(*c)?)?;
        }
        Ok(acc)
    }

    fn mul(&self, rhs: &Self) -> Result<Self> {
        self.iv_mul(rhs)
    }

    fn exp(&self) -> Result<Self> {
        self.iv_exp()
    }

    fn recip(&self) -> Result<Self> {
        self.iv_recip()
    }

    fn powi(&self, n: u32) -> Result<Self> {
        self.iv_powint(n)
    }

    fn tanh(&self, mode: ActivationMode) -> Result<Self> {
        match mode.variant() {
            None => Ok(self.iv_tanh()),
            Some(v) => reformulated_tanh(self, v),
        }
    }

    fn sigmoid(&self, mode: ActivationMode) -> Result<Self> {
        match mode.variant() {
            None => Ok(self.iv_sigmoid()),
            Some(v) => {
                let half = T::lit(0.5);
                let t = reformulated_tanh(&self.iv_scale(half)?, v)?;
                Self::affine(&[(half, &t)], half)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval<f64> {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn construction_rejects_inverted_and_infinite() {
        assert!(Interval::new(1.0, 0.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert!(Interval::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn add_examples() {
        assert_eq!(iv(0., 1.).iv_add(&iv(2., 3.)).unwrap(), iv(2., 4.));
        assert_eq!(iv(-1., 1.).iv_add(&iv(0., 0.)).unwrap(), iv(-1., 1.));
        assert_eq!(iv(-2., -1.).iv_add(&iv(1., 2.)).unwrap(), iv(-1., 1.));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(iv(-1., 2.).iv_mul(&iv(3., 4.)).unwrap(), iv(-4., 8.));
        let z = iv(0., 0.).iv_mul(&iv(-5., 7.)).unwrap();
        assert_eq!((z.lo(), z.hi()), (0.0, 0.0));
        assert_eq!(iv(-1., 1.).iv_mul(&iv(-1., 1.)).unwrap(), iv(-1., 1.));
    }

    #[test]
    fn recip_examples() {
        assert_eq!(iv(1., 2.).iv_recip().unwrap(), iv(0.5, 1.));
        assert_eq!(iv(-4., -2.).iv_recip().unwrap(), iv(-0.5, -0.25));
        assert!(matches!(iv(-1., 1.).iv_recip(), Err(Error::Domain(_))));
    }

    #[test]
    fn transcendental_examples() {
        let t = iv(-1., 1.).iv_tanh();
        assert!((t.lo() + 0.761594).abs() < 1e-6 && (t.hi() - 0.761594).abs() < 1e-6);
        let e = iv(0., 1.).iv_exp().unwrap();
        assert_eq!(e.lo(), 1.0);
        assert!((e.hi() - 2.718282).abs() < 1e-6);
        assert_eq!(iv(-2., 1.).iv_powint(2).unwrap(), iv(0., 4.));
        assert_eq!(iv(-2., 1.).iv_powint(3).unwrap(), iv(-8., 1.));
        assert_eq!(iv(-3., -1.).iv_powint(2).unwrap(), iv(1., 9.));
        assert_eq!(iv(-3., -1.).iv_powint(0).unwrap(), iv(1., 1.));
    }

    #[test]
    fn exp_overflow_is_typed() {
        assert!(iv(0., 700.).iv_exp().is_ok());
        let err = iv(0., 700.5).iv_exp().unwrap_err();
        assert!(err.is_overflow());
    }

    #[test]
    fn f32_intervals_work() {
        let a = Interval::<f32>::new(-1.0, 2.0).unwrap();
        let b = a.iv_mul(&Interval::new(3.0, 4.0).unwrap()).unwrap();
        assert_eq!((b.lo(), b.hi()), (-4.0, 8.0));
    }
}
