//! Convex and concave envelopes of `tanh` on a compact interval.
//!
//! `tanh` is convex on `(-inf, 0]` and concave on `[0, inf)`. On a box that
//! straddles zero the convex envelope follows `tanh` up to a tangent point
//! `x_cu <= 0` and continues along the line from there to the upper box end;
//! the concave envelope mirrors this with `x_co >= 0`. Both envelopes are C¹
//! and strictly increasing, which is what lets them be composed with the
//! inner relaxations directly.

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::scalar::Real;

const NEWTON_MAX_ITER: usize = 50;
const BISECTION_MAX_ITER: usize = 200;

/// Tangent points of the envelopes on a mixed-sign box, after clamping
/// into the box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentPoints<T> {
    pub x_cu: T,
    pub x_co: T,
    /// The unclamped root of the convex-side condition lies left of the box.
    pub cu_clamped: bool,
    /// The unclamped root of the concave-side condition lies right of the box.
    pub co_clamped: bool,
}

fn residual_tol<T: Real>() -> T {
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

fn failure_tol<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(1024.0))
}

/// Convex-side tangency residual: slope of `tanh` at `x` minus the slope of
/// the chord from `x` to `hi`.
pub fn residual_cu<T: Real>(x: T, hi: T) -> T {
    let t = x.tanh();
    (T::one() - t * t) - (hi.tanh() - t) / (hi - x)
}

/// Concave-side tangency residual: slope of `tanh` at `x` minus the slope of
/// the chord from `lo` to `x`.
pub fn residual_co<T: Real>(x: T, lo: T) -> T {
    let t = x.tanh();
    (T::one() - t * t) - (t - lo.tanh()) / (x - lo)
}

fn residual_cu_deriv<T: Real>(x: T, hi: T) -> T {
    let t = x.tanh();
    let s = T::one() - t * t;
    let q = (hi.tanh() - t) / (hi - x);
    -T::lit(2.0) * t * s - (q - s) / (hi - x)
}

/// Root of the convex-side condition on `[lo, 0]`; `(lo, true)` when the
/// root lies left of `lo`.
fn solve_cu<T: Real>(lo: T, hi: T) -> Result<(T, bool)> {
    let zero = T::zero();
    if residual_cu(lo, hi) >= zero {
        return Ok((lo, true));
    }
    if residual_cu(zero, hi) <= zero {
        // hi is so small that the chord slope at 0 rounds to 1
        return Ok((zero, false));
    }

    let tol = residual_tol::<T>();
    let step_tol = T::lit(1e-10).max(T::epsilon().sqrt());
    let (mut a, mut b) = (lo, zero);
    let mut x = (lo * T::lit(0.5)).min(-T::lit(0.1));
    if !(a < x && x < b) {
        x = (a + b) * T::lit(0.5);
    }

    for _ in 0..NEWTON_MAX_ITER {
        let r = residual_cu(x, hi);
        if r == zero {
            return Ok((x, false));
        }
        if r < zero {
            a = x;
        } else {
            b = x;
        }
        let d = residual_cu_deriv(x, hi);
        let mut next = x - r / d;
        if d == zero || !next.is_finite() || !(a < next && next < b) {
            next = (a + b) * T::lit(0.5);
        }
        let step = (next - x).abs();
        x = next;
        if step <= step_tol * (T::one() + x.abs()) && residual_cu(x, hi).abs() <= tol {
            return Ok((x, false));
        }
    }

    // Newton did not settle; bisect the maintained bracket.
    for _ in 0..BISECTION_MAX_ITER {
        let m = (a + b) * T::lit(0.5);
        if m <= a || m >= b {
            break;
        }
        if residual_cu(m, hi) < zero {
            a = m;
        } else {
            b = m;
        }
    }
    let x = (a + b) * T::lit(0.5);
    let r = residual_cu(x, hi).abs();
    if r > failure_tol::<T>() {
        return Err(Error::ConvergenceFailure {
            residual: r.to_f64_lossy(),
        });
    }
    Ok((x, false))
}

/// Solve both tangency conditions on a box with `lo < 0 < hi`.
///
/// The concave-side point is obtained from the convex-side solver through
/// the odd symmetry of `tanh`: `x_co(lo, hi) = -x_cu(-hi, -lo)`.
pub fn solve_tangent_points<T: Real>(bx: &Interval<T>) -> Result<TangentPoints<T>> {
    let (lo, hi) = (bx.lo(), bx.hi());
    if !(lo < T::zero() && T::zero() < hi) {
        return Err(Error::Domain(format!(
            "tangent points need a box straddling zero, got {bx}"
        )));
    }
    let (x_cu, cu_clamped) = solve_cu(lo, hi)?;
    let (neg_co, co_clamped) = solve_cu(-hi, -lo)?;
    Ok(TangentPoints {
        x_cu,
        x_co: -neg_co,
        cu_clamped,
        co_clamped,
    })
}

#[derive(Clone, Copy, Debug)]
enum Shape<T> {
    Point,
    /// hi <= 0: tanh is convex on the box.
    Convex { slope: T },
    /// lo >= 0: tanh is concave on the box.
    Concave { slope: T },
    Mixed {
        tp: TangentPoints<T>,
        t_cu: T,
        slope_cv: T,
        slope_cc: T,
    },
}

/// Envelopes of `tanh` over one interval.
#[derive(Clone, Copy, Debug)]
pub struct TanhEnvelope<T> {
    lo: T,
    hi: T,
    t_lo: T,
    t_hi: T,
    shape: Shape<T>,
}

fn dtanh<T: Real>(x: T) -> T {
    let t = x.tanh();
    T::one() - t * t
}

impl<T: Real> TanhEnvelope<T> {
    pub fn new(bx: &Interval<T>) -> Result<Self> {
        let (lo, hi) = (bx.lo(), bx.hi());
        let (t_lo, t_hi) = (lo.tanh(), hi.tanh());
        let zero = T::zero();
        let shape = if lo == hi {
            Shape::Point
        } else if hi <= zero {
            Shape::Convex {
                slope: (t_hi - t_lo) / (hi - lo),
            }
        } else if lo >= zero {
            Shape::Concave {
                slope: (t_hi - t_lo) / (hi - lo),
            }
        } else {
            let tp = solve_tangent_points(bx)?;
            let t_cu = tp.x_cu.tanh();
            Shape::Mixed {
                tp,
                t_cu,
                slope_cv: (t_hi - t_cu) / (hi - tp.x_cu),
                slope_cc: (tp.x_co.tanh() - t_lo) / (tp.x_co - lo),
            }
        };
        Ok(Self {
            lo,
            hi,
            t_lo,
            t_hi,
            shape,
        })
    }

    pub fn tangent_points(&self) -> Option<TangentPoints<T>> {
        match self.shape {
            Shape::Mixed { tp, .. } => Some(tp),
            _ => None,
        }
    }

    fn secant(&self, slope: T, x: T) -> T {
        self.t_lo + slope * (x - self.lo)
    }

    /// Convex envelope at `x`.
    pub fn cv(&self, x: T) -> T {
        match self.shape {
            Shape::Point | Shape::Convex { .. } => x.tanh(),
            Shape::Concave { slope } => self.secant(slope, x),
            Shape::Mixed {
                tp, t_cu, slope_cv, ..
            } => {
                if x <= tp.x_cu {
                    x.tanh()
                } else {
                    t_cu + slope_cv * (x - tp.x_cu)
                }
            }
        }
    }

    /// Derivative of the convex envelope at `x`.
    pub fn cv_slope(&self, x: T) -> T {
        match self.shape {
            Shape::Point | Shape::Convex { .. } => dtanh(x),
            Shape::Concave { slope } => slope,
            Shape::Mixed { tp, slope_cv, .. } => {
                // At an interior tangent point both pieces share the slope of tanh.
                if x < tp.x_cu || (x == tp.x_cu && !tp.cu_clamped) {
                    dtanh(x)
                } else {
                    slope_cv
                }
            }
        }
    }

    /// Concave envelope at `x`.
    pub fn cc(&self, x: T) -> T {
        match self.shape {
            Shape::Point | Shape::Concave { .. } => x.tanh(),
            Shape::Convex { slope } => self.secant(slope, x),
            Shape::Mixed {
                tp, slope_cc, ..
            } => {
                if x >= tp.x_co {
                    x.tanh()
                } else {
                    self.secant(slope_cc, x)
                }
            }
        }
    }

    /// Derivative of the concave envelope at `x`.
    pub fn cc_slope(&self, x: T) -> T {
        match self.shape {
            Shape::Point | Shape::Concave { .. } => dtanh(x),
            Shape::Convex { slope } => slope,
            Shape::Mixed { tp, slope_cc, .. } => {
                if x > tp.x_co || (x == tp.x_co && !tp.co_clamped) {
                    dtanh(x)
                } else {
                    slope_cc
                }
            }
        }
    }

    pub fn range(&self) -> Interval<T> {
        Interval::new(self.t_lo, self.t_hi).unwrap_or_else(|_| Interval::point(self.t_lo))
    }

    pub fn bounds(&self) -> (T, T) {
        (self.lo, self.hi)
    }
}
