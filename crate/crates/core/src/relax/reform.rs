use crate::error::Result;
use crate::relax::Reformulation;
use crate::scalar::{Arith, Real};

/// `tanh(x)` written through `exp`, reciprocal and products, evaluated in
/// any context. Division is a product with a reciprocal.
pub fn reformulated_tanh<T: Real, V: Arith<T>>(x: &V, variant: Reformulation) -> Result<V> {
    let one = T::one();
    let two = T::lit(2.0);
    match variant {
        Reformulation::F1 => {
            let ep = x.exp()?;
            let em = x.neg()?.exp()?;
            let num = ep.sub(&em)?;
            let den = ep.add(&em)?;
            num.mul(&den.recip()?)
        }
        Reformulation::F2 => {
            let e2 = x.scale(two)?.exp()?;
            let num = V::affine(&[(one, &e2)], -one)?;
            let den = V::affine(&[(one, &e2)], one)?;
            num.mul(&den.recip()?)
        }
        Reformulation::F3 => {
            let e2 = x.scale(two)?.exp()?;
            let den = V::affine(&[(one, &e2)], one)?;
            V::affine(&[(-two, &den.recip()?)], one)
        }
        Reformulation::F4 => {
            let em2 = x.scale(-two)?.exp()?;
            let num = V::affine(&[(-one, &em2)], one)?;
            let den = V::affine(&[(one, &em2)], one)?;
            num.mul(&den.recip()?)
        }
    }
}
