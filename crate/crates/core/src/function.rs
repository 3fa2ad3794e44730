//! Densities on `[0, inf)^n` with values in `C^d` and a declared exponential
//! envelope `p(f(t)) <= M_p e^(omega . t)`.
//!
//! A function is either a sum of tensor terms `coef * phi_1(t_1) ... phi_n(t_n)`
//! or an opaque closure. The tensor form survives fractional integration,
//! exponential damping, polynomial weighting and functional pairing, which
//! keeps every later transform a product of one dimensional integrals. The
//! closure form is the independent route used to cross-check it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::kernels::fractional_integral;
use crate::lcs::{Functional, SeminormFamily};
use crate::special::ln_gamma;
use crate::value::{Value, C64};

pub type ScalarFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64]) -> Value + Send + Sync>;

/// `|phi(t)| <= m t^rho e^(omega t)` for all `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tail {
    pub m: f64,
    pub rho: f64,
    pub omega: f64,
}

impl Tail {
    pub fn new(m: f64, rho: f64, omega: f64) -> Self {
        Tail { m, rho, omega }
    }

    pub fn weighted(self, v: u32) -> Self {
        Tail {
            rho: self.rho + v as f64,
            ..self
        }
    }

    pub fn damped(self, w: f64) -> Self {
        Tail {
            omega: self.omega - w,
            ..self
        }
    }

    /// Bound for `g_r *0 phi`: `int_0^t g_r(t-s) s^rho ds = Gamma(rho+1)/Gamma(rho+r+1) t^(rho+r)`,
    /// with `e^(omega s) <= e^(max(omega,0) t)`.
    pub fn integrated(self, r: f64) -> Self {
        if r == 0.0 {
            return self;
        }
        let c = (ln_gamma(self.rho + 1.0) - ln_gamma(self.rho + r + 1.0)).exp();
        Tail {
            m: self.m * c,
            rho: self.rho + r,
            omega: self.omega.max(0.0),
        }
    }

    pub fn bound(&self, t: f64) -> f64 {
        self.m * t.powf(self.rho) * (self.omega * t).exp()
    }
}

/// A scalar function of one variable that behaves like `t^(origin_order - 1)` at 0.
#[derive(Clone)]
pub struct Factor {
    pub eval: ScalarFn,
    pub origin_order: f64,
    pub tail: Option<Tail>,
}

impl std::fmt::Debug for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factor")
            .field("origin_order", &self.origin_order)
            .field("tail", &self.tail)
            .finish_non_exhaustive()
    }
}

impl Factor {
    pub fn new(eval: ScalarFn, origin_order: f64, tail: Option<Tail>) -> Self {
        Factor {
            eval,
            origin_order,
            tail,
        }
    }

    pub fn constant() -> Self {
        Factor::new(Arc::new(|_| C64::new(1.0, 0.0)), 1.0, Some(Tail::new(1.0, 0.0, 0.0)))
    }

    pub fn exp(rate: f64) -> Self {
        Factor::new(
            Arc::new(move |t| C64::new((rate * t).exp(), 0.0)),
            1.0,
            Some(Tail::new(1.0, 0.0, rate)),
        )
    }

    pub fn call(&self, t: f64) -> C64 {
        (self.eval)(t)
    }

    fn weighted(&self, v: u32) -> Factor {
        if v == 0 {
            return self.clone();
        }
        let inner = self.eval.clone();
        Factor::new(
            Arc::new(move |t| inner(t) * t.powi(v as i32)),
            self.origin_order + v as f64,
            self.tail.map(|tl| tl.weighted(v)),
        )
    }

    fn damped(&self, w: f64) -> Factor {
        if w == 0.0 {
            return self.clone();
        }
        let inner = self.eval.clone();
        Factor::new(
            Arc::new(move |t| inner(t) * (-w * t).exp()),
            self.origin_order,
            self.tail.map(|tl| tl.damped(w)),
        )
    }

    fn integrated(&self, r: f64, tol: f64) -> Factor {
        if r == 0.0 {
            return self.clone();
        }
        let inner = self.eval.clone();
        let order = self.origin_order;
        let tail = self.tail;
        Factor::new(
            Arc::new(move |t| {
                // the integral is O(g_(r+1)(t)) sized, so scale the tolerance with it
                let scale = tail.map_or(1.0, |tl| tl.integrated(r).bound(t).max(1.0));
                fractional_integral(r, |s| inner(s), order, t, tol * scale).expect("orders validated at construction")
            }),
            order + r,
            tail.map(|tl| tl.integrated(r)),
        )
    }
}

/// `coef * prod_i factors[i](t_i)`.
#[derive(Clone, Debug)]
pub struct Term {
    pub coef: Value,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn new(coef: Value, factors: Vec<Factor>) -> Self {
        Term { coef, factors }
    }

    pub fn eval(&self, t: &[f64]) -> Value {
        let mut s = C64::new(1.0, 0.0);
        for (phi, &ti) in self.factors.iter().zip(t) {
            s *= phi.call(ti);
        }
        self.coef.scale(s)
    }
}

#[derive(Clone)]
pub struct ClosureRepr {
    pub eval: VectorFn,
    pub origin_orders: Vec<f64>,
    /// Product bound `|f(t)|_inf <= prod_i tails[i](t_i)`.
    pub tails: Option<Vec<Tail>>,
}

#[derive(Clone)]
pub enum Repr {
    Terms(Vec<Term>),
    Closure(ClosureRepr),
}

/// Declared growth: `p_i(f(t)) <= m[i] e^(omega . t)` for each seminorm `p_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub family: SeminormFamily,
    pub m: Vec<f64>,
    pub omega: Vec<f64>,
    #[serde(default)]
    pub verified: bool,
}

impl Envelope {
    pub fn new(family: SeminormFamily, m: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        check_dim(family.len(), m.len())?;
        if m.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("envelope constants must be finite with M >= 0".into()));
        }
        Ok(Envelope {
            family,
            m,
            omega,
            verified: false,
        })
    }

    /// Sup-norm envelope `|f(t)|_inf <= m e^(omega . t)`.
    pub fn sup(dim: usize, m: f64, omega: Vec<f64>) -> Self {
        Envelope {
            family: SeminormFamily::sup(dim),
            m: vec![m],
            omega,
            verified: false,
        }
    }
}

#[derive(Clone)]
pub struct EnvelopedFunction {
    n: usize,
    d: usize,
    repr: Repr,
    envelope: Option<Envelope>,
}

impl std::fmt::Debug for EnvelopedFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.repr {
            Repr::Terms(t) => format!("{} tensor terms", t.len()),
            Repr::Closure(_) => "closure".to_string(),
        };
        f.debug_struct("EnvelopedFunction")
            .field("n", &self.n)
            .field("d", &self.d)
            .field("repr", &kind)
            .field("envelope", &self.envelope)
            .finish()
    }
}

fn check_order_tuple(r: &[f64]) -> Result<()> {
    for &ri in r {
        if !(ri == 0.0 || (ri > 0.0 && ri <= 1.0)) {
            return Err(Error::OrderOutOfRange {
                order: ri,
                range: "(0, 1] (or 0 for the Dirac identity)",
            });
        }
    }
    Ok(())
}

impl EnvelopedFunction {
    pub fn from_terms(n: usize, d: usize, terms: Vec<Term>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput("dimensions n and d must be positive".into()));
        }
        for term in &terms {
            check_dim(d, term.coef.dim())?;
            check_dim(n, term.factors.len())?;
            if term.factors.iter().any(|f| f.origin_order <= 0.0) {
                return Err(Error::InvalidInput("factor origin orders must be positive (locally integrable)".into()));
            }
        }
        Ok(EnvelopedFunction {
            n,
            d,
            repr: Repr::Terms(terms),
            envelope: None,
        })
    }

    pub fn from_closure(n: usize, d: usize, eval: VectorFn, origin_orders: Vec<f64>, tails: Option<Vec<Tail>>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput("dimensions n and d must be positive".into()));
        }
        check_dim(n, origin_orders.len())?;
        if let Some(t) = &tails {
            check_dim(n, t.len())?;
        }
        Ok(EnvelopedFunction {
            n,
            d,
            repr: Repr::Closure(ClosureRepr {
                eval,
                origin_orders,
                tails,
            }),
            envelope: None,
        })
    }

    pub fn zero(n: usize, d: usize) -> Self {
        let mut f = EnvelopedFunction::from_terms(n, d, vec![]).expect("positive dimensions");
        f.envelope = Some(Envelope::sup(d, 0.0, vec![0.0; n]));
        f
    }

    /// `t -> coef` on `[0, inf)^n`.
    pub fn constant(n: usize, coef: &[f64]) -> Self {
        let c = Value::real(coef);
        let m = c.max_abs();
        let term = Term::new(c, (0..n).map(|_| Factor::constant()).collect());
        let mut f = EnvelopedFunction::from_terms(n, coef.len(), vec![term]).expect("valid constant");
        f.envelope = Some(Envelope::sup(coef.len(), m, vec![0.0; n]));
        f
    }

    /// `t -> e^(omega . t) (1, ..., 1)` in `C^d`.
    pub fn exp(omega: &[f64], d: usize) -> Self {
        let term = Term::new(Value::real(&vec![1.0; d]), omega.iter().map(|&w| Factor::exp(w)).collect());
        let mut f = EnvelopedFunction::from_terms(omega.len(), d, vec![term]).expect("valid exponential");
        f.envelope = Some(Envelope::sup(d, 1.0, omega.to_vec()));
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn terms(&self) -> Option<&[Term]> {
        match &self.repr {
            Repr::Terms(t) => Some(t),
            Repr::Closure(_) => None,
        }
    }

    pub fn envelope(&self) -> Option<&Envelope> {
        self.envelope.as_ref()
    }

    pub fn with_envelope(mut self, env: Envelope) -> Result<Self> {
        check_dim(self.n, env.omega.len())?;
        check_dim(self.d, env.family.dim())?;
        self.envelope = Some(env);
        Ok(self)
    }

    pub fn without_envelope(mut self) -> Self {
        self.envelope = None;
        self
    }

    pub fn envelope_mut(&mut self) -> Option<&mut Envelope> {
        self.envelope.as_mut()
    }

    /// `f(t)`; coordinates must be nonnegative.
    pub fn eval(&self, t: &[f64]) -> Value {
        debug_assert_eq!(t.len(), self.n);
        match &self.repr {
            Repr::Terms(terms) => {
                let mut acc = Value::zeros(self.d);
                for term in terms {
                    acc = &acc + &term.eval(t);
                }
                acc
            }
            Repr::Closure(c) => (c.eval)(t),
        }
    }

    /// Origin order per coordinate (the least singular bound over all terms).
    pub fn origin_orders(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Terms(terms) => (0..self.n)
                .map(|i| terms.iter().map(|t| t.factors[i].origin_order).fold(f64::INFINITY, f64::min))
                .map(|o| if o.is_finite() { o } else { 1.0 })
                .collect(),
            Repr::Closure(c) => c.origin_orders.clone(),
        }
    }

    /// Product tail bound for the sup norm, when one is known.
    pub fn closure_tails(&self) -> Option<Vec<Tail>> {
        match &self.repr {
            Repr::Closure(c) => c.tails.clone(),
            Repr::Terms(terms) => {
                if terms.is_empty() {
                    return Some(vec![Tail::new(0.0, 0.0, 0.0); self.n]);
                }
                let mut tails = Vec::with_capacity(self.n);
                for i in 0..self.n {
                    let rho = terms[0].factors[i].tail?.rho;
                    let mut omega = f64::NEG_INFINITY;
                    for term in terms {
                        let tl = term.factors[i].tail?;
                        if tl.rho != rho {
                            return None;
                        }
                        omega = omega.max(tl.omega);
                    }
                    tails.push(Tail::new(1.0, rho, omega));
                }
                let m: f64 = terms
                    .iter()
                    .map(|t| t.coef.max_abs() * t.factors.iter().map(|f| f.tail.unwrap().m).product::<f64>())
                    .sum();
                tails[0].m = m;
                Some(tails)
            }
        }
    }

    /// The same function as an opaque closure.
    pub fn to_closure(&self) -> EnvelopedFunction {
        let me = self.clone();
        let orders = self.origin_orders();
        let tails = self.closure_tails();
        let eval: VectorFn = Arc::new(move |t| me.eval(t));
        EnvelopedFunction {
            n: self.n,
            d: self.d,
            repr: Repr::Closure(ClosureRepr {
                eval,
                origin_orders: orders,
                tails,
            }),
            envelope: self.envelope.clone(),
        }
    }

    pub fn scale(&self, alpha: C64) -> EnvelopedFunction {
        let envelope = self.envelope.clone().map(|mut e| {
            e.m.iter_mut().for_each(|m| *m *= alpha.norm());
            e.verified = false;
            e
        });
        let repr = match &self.repr {
            Repr::Terms(terms) => Repr::Terms(
                terms
                    .iter()
                    .map(|t| Term::new(t.coef.scale(alpha), t.factors.clone()))
                    .collect(),
            ),
            Repr::Closure(c) => {
                let inner = c.eval.clone();
                Repr::Closure(ClosureRepr {
                    eval: Arc::new(move |t| inner(t).scale(alpha)),
                    origin_orders: c.origin_orders.clone(),
                    tails: c.tails.clone().map(|mut tl| {
                        tl[0].m *= alpha.norm();
                        tl
                    }),
                })
            }
        };
        EnvelopedFunction {
            n: self.n,
            d: self.d,
            repr,
            envelope,
        }
    }

    /// Pointwise sum. Envelopes add when both are declared over the same family.
    pub fn add(&self, other: &EnvelopedFunction) -> Result<EnvelopedFunction> {
        check_dim(self.n, other.n)?;
        check_dim(self.d, other.d)?;
        let envelope = match (&self.envelope, &other.envelope) {
            (Some(a), Some(b)) if a.family == b.family => Some(Envelope {
                family: a.family.clone(),
                m: a.m.iter().zip(&b.m).map(|(x, y)| x + y).collect(),
                omega: a.omega.iter().zip(&b.omega).map(|(x, y)| x.max(*y)).collect(),
                verified: false,
            }),
            _ => None,
        };
        let mut out = match (&self.repr, &other.repr) {
            (Repr::Terms(a), Repr::Terms(b)) => {
                EnvelopedFunction::from_terms(self.n, self.d, a.iter().chain(b.iter()).cloned().collect())?
            }
            _ => {
                let (f, g) = (self.clone(), other.clone());
                let orders = self
                    .origin_orders()
                    .iter()
                    .zip(other.origin_orders())
                    .map(|(a, b)| a.min(b))
                    .collect();
                EnvelopedFunction::from_closure(self.n, self.d, Arc::new(move |t| &f.eval(t) + &g.eval(t)), orders, None)?
            }
        };
        out.envelope = envelope;
        Ok(out)
    }

    fn map_factors(&self, g: impl Fn(usize, &Factor) -> Factor) -> Vec<Term> {
        match &self.repr {
            Repr::Terms(terms) => terms
                .iter()
                .map(|t| Term::new(t.coef.clone(), t.factors.iter().enumerate().map(|(i, f)| g(i, f)).collect()))
                .collect(),
            Repr::Closure(_) => unreachable!("closure functions have no factors"),
        }
    }

    /// `t -> t^v f(t)`. The envelope no longer applies and is dropped.
    pub fn weighted(&self, v: &[u32]) -> Result<EnvelopedFunction> {
        check_dim(self.n, v.len())?;
        let repr = match &self.repr {
            Repr::Terms(_) => Repr::Terms(self.map_factors(|i, f| f.weighted(v[i]))),
            Repr::Closure(c) => {
                let inner = c.eval.clone();
                let v2 = v.to_vec();
                Repr::Closure(ClosureRepr {
                    eval: Arc::new(move |t| {
                        let w: f64 = t.iter().zip(&v2).map(|(ti, vi)| ti.powi(*vi as i32)).product();
                        inner(t).scale_real(w)
                    }),
                    origin_orders: c.origin_orders.iter().zip(v).map(|(o, vi)| o + *vi as f64).collect(),
                    tails: c.tails.as_ref().map(|tl| tl.iter().zip(v).map(|(t, vi)| t.weighted(*vi)).collect()),
                })
            }
        };
        Ok(EnvelopedFunction {
            n: self.n,
            d: self.d,
            repr,
            envelope: None,
        })
    }

    /// `t -> e^(-omega . t) f(t)`; a declared envelope shifts to growth rate `omega_env - omega`.
    pub fn damped(&self, omega: &[f64]) -> Result<EnvelopedFunction> {
        check_dim(self.n, omega.len())?;
        let repr = match &self.repr {
            Repr::Terms(_) => Repr::Terms(self.map_factors(|i, f| f.damped(omega[i]))),
            Repr::Closure(c) => {
                let inner = c.eval.clone();
                let w = omega.to_vec();
                Repr::Closure(ClosureRepr {
                    eval: Arc::new(move |t| {
                        let s: f64 = t.iter().zip(&w).map(|(ti, wi)| ti * wi).sum();
                        inner(t).scale_real((-s).exp())
                    }),
                    origin_orders: c.origin_orders.clone(),
                    tails: c.tails.as_ref().map(|tl| tl.iter().zip(omega).map(|(t, wi)| t.damped(*wi)).collect()),
                })
            }
        };
        let envelope = self.envelope.clone().map(|mut e| {
            e.omega.iter_mut().zip(omega).for_each(|(a, b)| *a -= b);
            e
        });
        Ok(EnvelopedFunction {
            n: self.n,
            d: self.d,
            repr,
            envelope,
        })
    }

    /// The scalar function `t -> <x*, f(t)>`.
    pub fn pair(&self, xstar: &Functional) -> Result<EnvelopedFunction> {
        check_dim(self.d, xstar.dim())?;
        let repr = match &self.repr {
            Repr::Terms(terms) => Repr::Terms(
                terms
                    .iter()
                    .map(|t| Term::new(Value::scalar(xstar.pair_unchecked(&t.coef)), t.factors.clone()))
                    .collect(),
            ),
            Repr::Closure(c) => {
                let inner = c.eval.clone();
                let x = xstar.clone();
                let l1: f64 = match xstar {
                    Functional::Coordinate { scale, .. } => scale.abs(),
                    Functional::Dense { coefficients } => coefficients.iter().map(|z| z.norm()).sum(),
                };
                Repr::Closure(ClosureRepr {
                    eval: Arc::new(move |t| Value::scalar(x.pair_unchecked(&inner(t)))),
                    origin_orders: c.origin_orders.clone(),
                    tails: c.tails.clone().map(|mut tl| {
                        tl[0].m *= l1;
                        tl
                    }),
                })
            }
        };
        Ok(EnvelopedFunction {
            n: self.n,
            d: 1,
            repr,
            envelope: None,
        })
    }

    /// Tensor fractional integral `I^r f`. Entries of `r` must be `0` (identity)
    /// or lie in `(0, 1]`.
    pub fn fractional_integral(&self, r: &[f64], tol: f64) -> Result<EnvelopedFunction> {
        check_dim(self.n, r.len())?;
        check_order_tuple(r)?;
        let repr = match &self.repr {
            Repr::Terms(_) => Repr::Terms(self.map_factors(|i, f| f.integrated(r[i], tol))),
            Repr::Closure(c) => {
                let inner = c.eval.clone();
                let orders = c.origin_orders.clone();
                let rr = r.to_vec();
                let d = self.d;
                let tails = c.tails.clone();
                let eval: VectorFn = Arc::new(move |t| {
                    let mut point = t.to_vec();
                    nested_fractional(&*inner, &rr, &orders, tails.as_deref(), &mut point, 0, tol, d)
                });
                Repr::Closure(ClosureRepr {
                    eval,
                    origin_orders: c.origin_orders.iter().zip(r).map(|(o, ri)| o + ri).collect(),
                    tails: c
                        .tails
                        .as_ref()
                        .map(|tl| tl.iter().zip(r).map(|(t, ri)| t.integrated(*ri)).collect()),
                })
            }
        };
        let envelope = if r.iter().all(|ri| *ri == 0.0) {
            self.envelope.clone()
        } else {
            None
        };
        Ok(EnvelopedFunction {
            n: self.n,
            d: self.d,
            repr,
            envelope,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn nested_fractional(
    f: &(dyn Fn(&[f64]) -> Value + Send + Sync),
    r: &[f64],
    orders: &[f64],
    tails: Option<&[Tail]>,
    point: &mut Vec<f64>,
    level: usize,
    tol: f64,
    d: usize,
) -> Value {
    if level == r.len() {
        return f(point);
    }
    if r[level] == 0.0 {
        return nested_fractional(f, r, orders, tails, point, level + 1, tol, d);
    }
    let t = point[level];
    if t == 0.0 {
        return Value::zeros(d);
    }
    let scale = tails.map_or(1.0, |tl| tl[level].integrated(r[level]).bound(t).max(1.0));
    let inner_tol = tol / (2.0 * scale);
    let base = point.clone();
    fractional_integral(
        r[level],
        |s| {
            let mut p = base.clone();
            p[level] = s;
            nested_fractional(f, r, orders, tails, &mut p, level + 1, inner_tol, d)
        },
        orders[level],
        t,
        tol * scale,
    )
    .expect("orders validated at construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_and_closure_agree() {
        let f = EnvelopedFunction::exp(&[0.5, -1.0], 2).add(&EnvelopedFunction::constant(2, &[1.0, -2.0])).unwrap();
        let g = f.to_closure();
        for t in [[0.0, 0.0], [1.0, 2.0], [3.5, 0.25]] {
            assert_eq!(f.eval(&t), g.eval(&t));
        }
        let tails = f.closure_tails().unwrap();
        for t in [[0.1, 0.1], [2.0, 5.0]] {
            let b: f64 = tails.iter().zip(t).map(|(tl, ti)| tl.bound(ti)).product();
            assert!(f.eval(&t).max_abs() <= b);
        }
    }

    #[test]
    fn weighting_damping_and_pairing() {
        let f = EnvelopedFunction::exp(&[1.0], 2);
        let w = f.weighted(&[2]).unwrap();
        assert!((w.eval(&[3.0])[1].re - 9.0 * 3f64.exp()).abs() < 1e-12);
        let dmp = f.damped(&[1.0]).unwrap();
        assert!((dmp.eval(&[3.0])[0].re - 1.0).abs() < 1e-15);
        assert_eq!(dmp.envelope().unwrap().omega, vec![0.0]);
        let p = f.pair(&Functional::Coordinate { dim: 2, index: 1, scale: 3.0 }).unwrap();
        assert_eq!(p.d(), 1);
        assert!((p.eval(&[1.0])[0].re - 3.0 * 1f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn integrated_tail_bounds_hold() {
        let f = EnvelopedFunction::exp(&[1.0], 1);
        let fr = f.fractional_integral(&[0.5], 1e-12).unwrap();
        let tl = fr.terms().unwrap()[0].factors[0].tail.unwrap();
        for t in [0.01, 0.5, 2.0, 6.0] {
            assert!(fr.eval(&[t])[0].norm() <= tl.bound(t) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn rejects_bad_orders() {
        let f = EnvelopedFunction::constant(2, &[1.0]);
        assert_eq!(f.fractional_integral(&[0.5], 1e-10).unwrap_err().code(), "dim-mismatch");
        assert_eq!(f.fractional_integral(&[0.5, 1.2], 1e-10).unwrap_err().code(), "order-out-of-range");
    }
}
