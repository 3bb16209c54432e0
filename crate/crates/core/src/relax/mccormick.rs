use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::relax::envelope::TanhEnvelope;
use crate::relax::{reformulated_tanh, ActivationMode};
use crate::scalar::{check_exp_arg, check_finite, Arith, Real};

/// Slack allowed between relaxation values and interval bounds.
pub const CUT_SLACK: f64 = 1e-9;

/// Interval bounds plus convex/concave relaxation values and subgradients at
/// one evaluation point.
///
/// Empty subgradient vectors stand for the zero vector, so constants need no
/// knowledge of the number of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct McCormick<T> {
    bx: Interval<T>,
    cv: T,
    cc: T,
    sub_cv: Vec<T>,
    sub_cc: Vec<T>,
}

#[derive(Clone, Copy)]
enum Side {
    Cv,
    Cc,
    Fixed,
}

/// Middle value of `cv`, `cc` and `z` (with `cv <= cc`), and which input it came from.
fn mid<T: Real>(cv: T, cc: T, z: T) -> (T, Side) {
    if z <= cv {
        (cv, Side::Cv)
    } else if z >= cc {
        (cc, Side::Cc)
    } else {
        (z, Side::Fixed)
    }
}

/// `sum(c_k * v_k)` over subgradient vectors; empty vectors are zeros.
fn combine<T: Real>(parts: &[(T, &[T])]) -> Result<Vec<T>> {
    let mut n = 0;
    for (_, v) in parts {
        if v.is_empty() {
            continue;
        }
        if n == 0 {
            n = v.len();
        } else if v.len() != n {
            return Err(Error::MixedContext(n, v.len()));
        }
    }
    let mut out = vec![T::zero(); n];
    for (c, v) in parts {
        if v.is_empty() || *c == T::zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o = *o + *c * *x;
        }
    }
    Ok(out)
}

fn scaled<T: Real>(c: T, v: &[T]) -> Vec<T> {
    if c == T::zero() {
        return Vec::new();
    }
    v.iter().map(|x| c * *x).collect()
}

impl<T: Real> McCormick<T> {
    /// Assemble a value and cut the relaxations against the interval bounds.
    pub fn from_parts(bx: Interval<T>, cv: T, cc: T, sub_cv: Vec<T>, sub_cc: Vec<T>) -> Result<Self> {
        let cv = check_finite("relaxation", cv)?;
        let cc = check_finite("relaxation", cc)?;
        let (cv, sub_cv) = if cv < bx.lo() {
            (bx.lo(), Vec::new())
        } else {
            (cv, sub_cv)
        };
        let (cc, sub_cc) = if cc > bx.hi() {
            (bx.hi(), Vec::new())
        } else {
            (cc, sub_cc)
        };
        Ok(Self {
            bx,
            cv,
            cc,
            sub_cv,
            sub_cc,
        })
    }

    /// Variable `index` of `n`, ranging over `bx` and evaluated at `point`.
    pub fn variable(index: usize, n: usize, bx: Interval<T>, point: T) -> Result<Self> {
        if !bx.contains(point) {
            return Err(Error::PointOutsideBox {
                point: point.to_f64_lossy(),
                lo: bx.lo().to_f64_lossy(),
                hi: bx.hi().to_f64_lossy(),
            });
        }
        assert!(index < n, "variable index {index} out of range for {n} variables");
        let mut e = vec![T::zero(); n];
        e[index] = T::one();
        Ok(Self {
            bx,
            cv: point,
            cc: point,
            sub_cv: e.clone(),
            sub_cc: e,
        })
    }

    pub fn bx(&self) -> Interval<T> {
        self.bx
    }

    pub fn cv(&self) -> T {
        self.cv
    }

    pub fn cc(&self) -> T {
        self.cc
    }

    pub fn sub_cv(&self) -> &[T] {
        &self.sub_cv
    }

    pub fn sub_cc(&self) -> &[T] {
        &self.sub_cc
    }

    /// Convex subgradient padded to `n` entries.
    pub fn sub_cv_dense(&self, n: usize) -> Vec<T> {
        dense(&self.sub_cv, n)
    }

    pub fn sub_cc_dense(&self, n: usize) -> Vec<T> {
        dense(&self.sub_cc, n)
    }

    fn with_box(self, bx: Interval<T>) -> Result<Self> {
        Self::from_parts(bx, self.cv, self.cc, self.sub_cv, self.sub_cc)
    }

    fn arg(&self, x: T) -> T {
        self.bx.clamp(x)
    }

    /// Composition with an outer function convex on the box of `self`.
    /// `zmin` minimizes `f` over the box.
    fn compose_convex(&self, out: Interval<T>, f: impl Fn(T) -> T, df: impl Fn(T) -> T, zmin: T) -> Result<Self> {
        let (xl, xu) = (self.bx.lo(), self.bx.hi());
        let (fl, fu) = (f(xl), f(xu));
        let slope = if xu > xl { (fu - fl) / (xu - xl) } else { T::zero() };

        let (z, side) = mid(self.cv, self.cc, zmin);
        let z = self.arg(z);
        let cv = f(z);
        let sub_cv = self.pick(side, df(z));

        let zmax = if slope >= T::zero() { xu } else { xl };
        let (z, side) = mid(self.cv, self.cc, zmax);
        let z = self.arg(z);
        let cc = fl + slope * (z - xl);
        let sub_cc = self.pick(side, slope);
        Self::from_parts(out, cv, cc, sub_cv, sub_cc)
    }

    /// Composition with an outer function concave on the box of `self`.
    /// `zmax` maximizes `f` over the box.
    fn compose_concave(&self, out: Interval<T>, f: impl Fn(T) -> T, df: impl Fn(T) -> T, zmax: T) -> Result<Self> {
        let (xl, xu) = (self.bx.lo(), self.bx.hi());
        let (fl, fu) = (f(xl), f(xu));
        let slope = if xu > xl { (fu - fl) / (xu - xl) } else { T::zero() };

        let (z, side) = mid(self.cv, self.cc, zmax);
        let z = self.arg(z);
        let cc = f(z);
        let sub_cc = self.pick(side, df(z));

        let zmin = if slope >= T::zero() { xl } else { xu };
        let (z, side) = mid(self.cv, self.cc, zmin);
        let z = self.arg(z);
        let cv = fl + slope * (z - xl);
        let sub_cv = self.pick(side, slope);
        Self::from_parts(out, cv, cc, sub_cv, sub_cc)
    }

    // Subgradient of the inner relaxation that `mid` selected, scaled by the outer slope.
    fn pick(&self, side: Side, slope: T) -> Vec<T> {
        match side {
            Side::Cv => scaled(slope, &self.sub_cv),
            Side::Cc => scaled(slope, &self.sub_cc),
            Side::Fixed => Vec::new(),
        }
    }

    /// Relaxation of `tanh` from its envelopes. Both envelopes are increasing,
    /// so the convex envelope is applied to the inner convex relaxation and
    /// the concave envelope to the inner concave relaxation.
    pub fn tanh_envelope(&self) -> Result<Self> {
        let env = TanhEnvelope::new(&self.bx)?;
        let xv = self.arg(self.cv);
        let xc = self.arg(self.cc);
        let cv = env.cv(xv);
        let cc = env.cc(xc);
        let sub_cv = scaled(env.cv_slope(xv), &self.sub_cv);
        let sub_cc = scaled(env.cc_slope(xc), &self.sub_cc);
        Self::from_parts(self.bx.iv_tanh(), cv, cc, sub_cv, sub_cc)
    }

    /// Relaxation of the logistic function through
    /// `sig(x) = (1 + tanh(x / 2)) / 2`.
    pub fn sigmoid_envelope(&self) -> Result<Self> {
        let half = T::lit(0.5);
        let t = self.scale(half)?.tanh_envelope()?;
        Self::affine(&[(half, &t)], half)?.with_box(self.bx.iv_sigmoid())
    }

    pub fn tanh_reformulated(&self, variant: crate::relax::Reformulation) -> Result<Self> {
        reformulated_tanh(self, variant)
    }
}

/// Lower bound of `c * f` from a relaxation pair, with its subgradient.
fn lower<T: Real>(c: T, f: &McCormick<T>) -> (T, &[T]) {
    if c >= T::zero() {
        (c * f.cv, f.sub_cv.as_slice())
    } else {
        (c * f.cc, f.sub_cc.as_slice())
    }
}

/// Upper bound of `c * f` from a relaxation pair, with its subgradient.
fn upper<T: Real>(c: T, f: &McCormick<T>) -> (T, &[T]) {
    if c >= T::zero() {
        (c * f.cc, f.sub_cc.as_slice())
    } else {
        (c * f.cv, f.sub_cv.as_slice())
    }
}

fn dense<T: Real>(v: &[T], n: usize) -> Vec<T> {
    if v.is_empty() {
        vec![T::zero(); n]
    } else {
        v.to_vec()
    }
}

impl<T: Real> Arith<T> for McCormick<T> {
    fn constant(c: T) -> Self {
        Self {
            bx: Interval::point(c),
            cv: c,
            cc: c,
            sub_cv: Vec::new(),
            sub_cc: Vec::new(),
        }
    }

    fn affine(terms: &[(T, &Self)], constant: T) -> Result<Self> {
        let mut bx = Interval::point(constant);
        let (mut cv, mut cc) = (constant, constant);
        let mut parts_cv = Vec::with_capacity(terms.len());
        let mut parts_cc = Vec::with_capacity(terms.len());
        for (c, x) in terms {
            bx = bx.iv_add(&x.bx.iv_scale(*c)?)?;
            if *c >= T::zero() {
                cv = cv + *c * x.cv;
                cc = cc + *c * x.cc;
                parts_cv.push((*c, x.sub_cv.as_slice()));
                parts_cc.push((*c, x.sub_cc.as_slice()));
            } else {
                cv = cv + *c * x.cc;
                cc = cc + *c * x.cv;
                parts_cv.push((*c, x.sub_cc.as_slice()));
                parts_cc.push((*c, x.sub_cv.as_slice()));
            }
        }
        Self::from_parts(bx, cv, cc, combine(&parts_cv)?, combine(&parts_cc)?)
    }

    fn mul(&self, rhs: &Self) -> Result<Self> {
        if rhs.bx.is_degenerate() && rhs.sub_cv.is_empty() && rhs.sub_cc.is_empty() {
            return Self::affine(&[(rhs.bx.lo(), self)], T::zero());
        }
        if self.bx.is_degenerate() && self.sub_cv.is_empty() && self.sub_cc.is_empty() {
            return Self::affine(&[(self.bx.lo(), rhs)], T::zero());
        }
        let (x, y) = (self, rhs);
        let (xl, xu, yl, yu) = (x.bx.lo(), x.bx.hi(), y.bx.lo(), y.bx.hi());
        // xy >= yL x + xL y - xL yL  and  xy >= yU x + xU y - xU yU
        let (a1, s1) = lower(yl, x);
        let (a2, s2) = lower(xl, y);
        let u1 = a1 + a2 - xl * yl;
        let (b1, t1) = lower(yu, x);
        let (b2, t2) = lower(xu, y);
        let u2 = b1 + b2 - xu * yu;
        let (cv, sub_cv) = if u1 >= u2 {
            (u1, combine(&[(yl, s1), (xl, s2)])?)
        } else {
            (u2, combine(&[(yu, t1), (xu, t2)])?)
        };

        // xy <= yL x + xU y - xU yL  and  xy <= yU x + xL y - xL yU
        let (c1, p1) = upper(yl, x);
        let (c2, p2) = upper(xu, y);
        let o1 = c1 + c2 - xu * yl;
        let (d1, q1) = upper(yu, x);
        let (d2, q2) = upper(xl, y);
        let o2 = d1 + d2 - xl * yu;
        let (cc, sub_cc) = if o1 <= o2 {
            (o1, combine(&[(yl, p1), (xu, p2)])?)
        } else {
            (o2, combine(&[(yu, q1), (xl, q2)])?)
        };

        Self::from_parts(x.bx.iv_mul(&y.bx)?, cv, cc, sub_cv, sub_cc)
    }

    fn exp(&self) -> Result<Self> {
        check_exp_arg(self.bx.hi())?;
        let out = self.bx.iv_exp()?;
        self.compose_convex(out, T::exp, T::exp, self.bx.lo())
    }

    fn recip(&self) -> Result<Self> {
        let out = self.bx.iv_recip()?;
        let f = |x: T| x.recip();
        let df = |x: T| -(x * x).recip();
        if self.bx.lo() > T::zero() {
            self.compose_convex(out, f, df, self.bx.hi())
        } else {
            self.compose_concave(out, f, df, self.bx.lo())
        }
    }

    fn powi(&self, n: u32) -> Result<Self> {
        match n {
            0 => return Ok(Self::constant(T::one())),
            1 => return Ok(self.clone()),
            _ => {}
        }
        let out = self.bx.iv_powint(n)?;
        let e = i32::try_from(n).map_err(|_| Error::Domain("exponent too large".into()))?;
        let f = move |x: T| x.powi(e);
        let df = move |x: T| T::from(n).unwrap() * x.powi(e - 1);
        let (lo, hi) = (self.bx.lo(), self.bx.hi());
        if n % 2 == 0 {
            self.compose_convex(out, f, df, self.bx.clamp(T::zero()))
        } else if lo >= T::zero() {
            self.compose_convex(out, f, df, lo)
        } else if hi <= T::zero() {
            self.compose_concave(out, f, df, hi)
        } else {
            // odd power across zero: x^(n-1) * x
            self.powi(n - 1)?.mul(self)?.with_box(out)
        }
    }

    fn tanh(&self, mode: ActivationMode) -> Result<Self> {
        match mode.variant() {
            None => self.tanh_envelope(),
            Some(v) => reformulated_tanh(self, v),
        }
    }

    fn sigmoid(&self, mode: ActivationMode) -> Result<Self> {
        match mode.variant() {
            None => self.sigmoid_envelope(),
            Some(v) => {
                let half = T::lit(0.5);
                let t = reformulated_tanh(&self.scale(half)?, v)?;
                Self::affine(&[(half, &t)], half)
            }
        }
    }
}
