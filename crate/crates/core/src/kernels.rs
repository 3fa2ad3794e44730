//! Fractional kernels `g_z(t) = t^(z-1) / Gamma(z)` and finite convolutions
//! `(a *0 b)(t) = int_0^t a(t - s) b(s) ds`.
//!
//! `g_0` is the Dirac distribution. It appears only as the tagged variant
//! [`Convolvable::Dirac`] and is never sampled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::EnvelopedFunction;
use crate::quad::{integrate_from_origin, Accumulate, QuadOptions};
use crate::special::{factorial, ln_gamma};
use crate::value::C64;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(zeta: f64) -> Result<Self> {
        if !zeta.is_finite() || zeta < 0.0 {
            return Err(Error::OrderOutOfRange {
                order: zeta,
                range: "[0, inf)",
            });
        }
        Ok(FractionalOrder(zeta))
    }

    pub fn dirac() -> Self {
        FractionalOrder(0.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_dirac(self) -> bool {
        self.0 == 0.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;
    fn try_from(z: f64) -> Result<Self> {
        FractionalOrder::new(z)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(z: FractionalOrder) -> f64 {
        z.0
    }
}

/// `g_zeta(t)`.
pub fn kernel_eval(zeta: f64, t: f64) -> Result<f64> {
    let zeta = FractionalOrder::new(zeta)?.value();
    if zeta == 0.0 {
        return Err(Error::DiracNotPointwise);
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("kernel argument must be a finite t >= 0, got {t}")));
    }
    if t == 0.0 {
        return match zeta {
            z if z < 1.0 => Err(Error::SingularAtOrigin { zeta }),
            z if z == 1.0 => Ok(1.0),
            _ => Ok(0.0),
        };
    }
    Ok(kernel_unchecked(zeta, t))
}

/// `g_zeta(t)` for `zeta > 0`, `t > 0`.
#[inline]
pub(crate) fn kernel_unchecked(zeta: f64, t: f64) -> f64 {
    if zeta.fract() == 0.0 && zeta <= 30.0 {
        let k = zeta as i32 - 1;
        return t.powi(k) / factorial(k as u32);
    }
    ((zeta - 1.0) * t.ln() - ln_gamma(zeta)).exp()
}

/// One side of a finite convolution.
#[derive(Clone, Copy)]
pub enum Convolvable<'a> {
    Dirac,
    /// A function that behaves like `t^(order - 1)` at the origin.
    Function {
        eval: &'a (dyn Fn(f64) -> C64 + Sync),
        order: f64,
    },
}

impl<'a> Convolvable<'a> {
    pub fn function(eval: &'a (dyn Fn(f64) -> C64 + Sync), order: f64) -> Self {
        Convolvable::Function { eval, order }
    }
}

/// `int_0^t k(s, t - s) ds`, split at `t/2` so each half sees at most one
/// endpoint singularity. `order_s` and `order_u` are the origin orders in `s`
/// and in `u = t - s`.
pub(crate) fn split_convolution<V, K>(mut k: K, t: f64, order_s: f64, order_u: f64, tol: f64) -> (V, bool)
where
    V: Accumulate,
    K: FnMut(f64, f64) -> V,
{
    let half = 0.5 * t;
    let opts = QuadOptions {
        abs_tol: 0.5 * tol,
        rel_tol: 1e-14,
        max_panels: 2000,
    };
    let left = integrate_from_origin(|s| k(s, t - s), order_s, half, &opts);
    let right = integrate_from_origin(|u| k(t - u, u), order_u, half, &opts);
    let mut value = left.value;
    value.add_scaled(&right.value, 1.0);
    (value, left.converged && right.converged)
}

/// `(a *0 b)(t)` with absolute error at most `tol`.
pub fn convolve_finite(a: Convolvable<'_>, b: Convolvable<'_>, t: f64, tol: f64) -> Result<C64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("convolution point must be a finite t >= 0, got {t}")));
    }
    let (ea, oa, eb, ob) = match (a, b) {
        (Convolvable::Dirac, Convolvable::Dirac) => {
            return Err(Error::InvalidInput("the convolution of two Dirac kernels is not a function".into()))
        }
        (Convolvable::Dirac, Convolvable::Function { eval, .. }) | (Convolvable::Function { eval, .. }, Convolvable::Dirac) => {
            return Ok(eval(t));
        }
        (Convolvable::Function { eval: ea, order: oa }, Convolvable::Function { eval: eb, order: ob }) => (ea, oa, eb, ob),
    };
    if oa <= 0.0 || ob <= 0.0 {
        return Err(Error::DivergentConvolution { a: oa, b: ob });
    }
    if t == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let (v, _) = split_convolution(|s, u| ea(u) * eb(s), t, ob, oa, tol);
    Ok(v)
}

/// `(g_r *0 f)(t)` for a function `f` of origin order `order`; `r = 0` returns `f(t)`.
pub fn fractional_integral<V, F>(r: f64, f: F, order: f64, t: f64, tol: f64) -> Result<V>
where
    V: Accumulate,
    F: Fn(f64) -> V,
{
    let r = FractionalOrder::new(r)?.value();
    if r == 0.0 {
        return Ok(f(t));
    }
    if order <= 0.0 {
        return Err(Error::DivergentConvolution { a: r, b: order });
    }
    if t == 0.0 {
        return Ok(f(1.0).zeroed());
    }
    let (v, _) = split_convolution(
        |s, u| {
            let mut out = f(s);
            let w = kernel_unchecked(r, u);
            let z = out.zeroed();
            let orig = std::mem::replace(&mut out, z);
            out.add_scaled(&orig, w);
            out
        },
        t,
        order,
        r,
        tol,
    );
    Ok(v)
}

/// Tensor fractional integral of order `r` (one entry per coordinate).
///
/// Entries must lie in `(0, 1]`, or be `0` for the Dirac identity in that
/// coordinate.
pub fn fractional_integrate(r: &[f64], f: &EnvelopedFunction) -> Result<EnvelopedFunction> {
    f.fractional_integral(r, DEFAULT_TOL)
}
