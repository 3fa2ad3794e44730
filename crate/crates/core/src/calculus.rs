//! Transform oracles and their mixed partial derivatives
//! `F^(v)(lambda) = d^|v| F / d lambda_1^v_1 ... d lambda_n^v_n`.
//!
//! Closed-form derivatives are supplied in normalized form: for positive
//! anchors `a_i` the callback returns
//! `F^(v)(lambda) * prod a_i^(v_i+1) / prod v_i!` as a [`Scaled`] value. That is
//! exactly the quantity the growth bounds and the Post-Widder approximants
//! need, and it stays representable at orders where `F^(v)` itself overflows.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::function::EnvelopedFunction;
use crate::special::{factorial, ln_factorial};
use crate::transform::weighted_transform;
use crate::value::{Scaled, Value, C64};

pub type OracleFn = Arc<dyn Fn(&[C64]) -> Value + Send + Sync>;
/// `(lambda, v, anchors) -> F^(v)(lambda) prod a_i^(v_i+1) / prod v_i!`
pub type NormalizedDerivativeFn = Arc<dyn Fn(&[C64], &[u32], &[f64]) -> Scaled + Send + Sync>;
/// Per-coordinate distance from `lambda_i` to the nearest singularity with the
/// other coordinates held fixed.
pub type DistanceFn = Arc<dyn Fn(&[C64]) -> Vec<f64> + Send + Sync>;

/// Highest total order the Cauchy rule accepts.
pub const CAUCHY_MAX_ORDER: u32 = 64;
/// Highest total order the finite-difference rule accepts.
pub const FD_MAX_ORDER: u32 = 3;

#[derive(Clone)]
pub struct TransformOracle {
    n: usize,
    d: usize,
    eval: OracleFn,
    derivative: Option<NormalizedDerivativeFn>,
    singularity_distance: Option<DistanceFn>,
    omega: Option<Vec<f64>>,
}

impl std::fmt::Debug for TransformOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformOracle")
            .field("n", &self.n)
            .field("d", &self.d)
            .field("closed_form", &self.derivative.is_some())
            .field("omega", &self.omega)
            .finish_non_exhaustive()
    }
}

impl TransformOracle {
    pub fn new(n: usize, d: usize, eval: OracleFn) -> Self {
        TransformOracle {
            n,
            d,
            eval,
            derivative: None,
            singularity_distance: None,
            omega: None,
        }
    }

    pub fn zero(n: usize, d: usize) -> Self {
        TransformOracle::new(n, d, Arc::new(move |_| Value::zeros(d)))
            .with_derivative(Arc::new(move |_, _, _| Scaled::from_value(Value::zeros(d))))
            .with_singularity_distance(Arc::new(move |_| vec![f64::INFINITY; n]))
    }

    pub fn with_derivative(mut self, derivative: NormalizedDerivativeFn) -> Self {
        self.derivative = Some(derivative);
        self
    }

    pub fn with_singularity_distance(mut self, dist: DistanceFn) -> Self {
        self.singularity_distance = Some(dist);
        self
    }

    /// Declare the product of half-planes `Re lambda_i > omega_i` as the domain.
    pub fn with_halfplane(mut self, omega: Vec<f64>) -> Self {
        self.omega = Some(omega);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn halfplane(&self) -> Option<&[f64]> {
        self.omega.as_deref()
    }

    pub fn has_closed_form(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn eval(&self, lambda: &[C64]) -> Result<Value> {
        check_dim(self.n, lambda.len())?;
        Ok((self.eval)(lambda))
    }

    pub(crate) fn eval_unchecked(&self, lambda: &[C64]) -> Value {
        (self.eval)(lambda)
    }

    pub fn singularity_distance(&self, lambda: &[C64]) -> Option<Vec<f64>> {
        self.singularity_distance.as_ref().map(|f| f(lambda))
    }

    /// The closed-form normalized derivative, if the oracle has one.
    pub fn normalized_closed_form(&self, lambda: &[C64], v: &[u32], anchors: &[f64]) -> Option<Scaled> {
        self.derivative.as_ref().map(|f| f(lambda, v, anchors))
    }

    /// `lambda -> F(lambda + c)`, defined on `Re lambda_i > omega_i - c_i`.
    pub fn shifted(&self, c: &[f64]) -> Result<TransformOracle> {
        check_dim(self.n, c.len())?;
        let shift = |c: &[f64], l: &[C64]| -> Vec<C64> { l.iter().zip(c).map(|(li, ci)| li + ci).collect() };
        let cc = c.to_vec();
        let inner = self.eval.clone();
        let mut out = TransformOracle::new(self.n, self.d, Arc::new(move |l| inner(&shift(&cc, l))));
        if let Some(dv) = self.derivative.clone() {
            let cc = c.to_vec();
            out.derivative = Some(Arc::new(move |l, v, a| dv(&shift(&cc, l), v, a)));
        }
        if let Some(ds) = self.singularity_distance.clone() {
            let cc = c.to_vec();
            out.singularity_distance = Some(Arc::new(move |l| ds(&shift(&cc, l))));
        }
        out.omega = self.omega.as_ref().map(|w| w.iter().zip(c).map(|(wi, ci)| wi - ci).collect());
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Cauchy,
    FiniteDifference,
    /// Closed form when available, the Cauchy rule otherwise.
    Auto,
}

#[derive(Clone, Debug, Default)]
pub struct CauchyOptions {
    /// Circle radius per coordinate; derived from the oracle when absent.
    pub radii: Option<Vec<f64>>,
    /// Order in which the coordinates are differentiated (outermost first).
    pub coordinate_order: Option<Vec<usize>>,
}

fn total(v: &[u32]) -> u32 {
    v.iter().sum()
}

/// The mixed derivative `F^(v)(lambda)`.
pub fn mixed_derivative(f: &TransformOracle, lambda: &[C64], v: &[u32], method: Method) -> Result<Value> {
    check_dim(f.n, lambda.len())?;
    check_dim(f.n, v.len())?;
    match resolve(f, v, method)? {
        Method::ClosedForm => {
            let ones = vec![1.0; f.n];
            let s = f.normalized_closed_form(lambda, v, &ones).expect("resolved to closed form");
            let ln_fact: f64 = v.iter().map(|&vi| ln_factorial(vi)).sum();
            Ok(s.add_log(ln_fact).value())
        }
        Method::Cauchy => cauchy_derivative(f, lambda, v, &CauchyOptions::default()),
        Method::FiniteDifference => finite_difference_derivative(f, lambda, v),
        Method::Auto => unreachable!(),
    }
}

fn resolve(f: &TransformOracle, v: &[u32], method: Method) -> Result<Method> {
    match method {
        Method::ClosedForm if !f.has_closed_form() => Err(Error::OrderUnsupported {
            order: total(v),
            method: "closed-form (the oracle has no derivative callback)",
        }),
        Method::Auto if f.has_closed_form() => Ok(Method::ClosedForm),
        Method::Auto => Ok(Method::Cauchy),
        m => Ok(m),
    }
}

/// `F^(v)(lambda) prod a_i^(v_i+1) / prod v_i!` by the requested method.
pub fn normalized_derivative(f: &TransformOracle, lambda: &[C64], v: &[u32], anchors: &[f64], method: Method) -> Result<Scaled> {
    check_dim(f.n, lambda.len())?;
    check_dim(f.n, v.len())?;
    check_dim(f.n, anchors.len())?;
    match resolve(f, v, method)? {
        Method::ClosedForm => Ok(f.normalized_closed_form(lambda, v, anchors).expect("resolved to closed form")),
        m => {
            let raw = mixed_derivative(f, lambda, v, m)?;
            let log: f64 = v
                .iter()
                .zip(anchors)
                .map(|(&vi, &a)| (vi as f64 + 1.0) * a.ln() - ln_factorial(vi))
                .sum();
            Ok(Scaled::from_value(raw).add_log(log))
        }
    }
}

/// Default radius per coordinate: a fraction `q` of the distance to the
/// nearest singularity or to the half-plane boundary, whichever is closer.
/// `q = 1/2` for finite differences. For the Cauchy rule of order `v` on `N`
/// nodes, `q = max(1/2, eps^(1/(N+v)))` balances the rounding error
/// `eps q^-v` against the aliasing error `q^N`.
fn default_radii(f: &TransformOracle, lambda: &[C64], v: Option<&[u32]>) -> Result<Vec<f64>> {
    let dist = f.singularity_distance(lambda);
    let mut radii = Vec::with_capacity(f.n);
    for i in 0..f.n {
        let mut limit = f64::INFINITY;
        if let Some(w) = &f.omega {
            if lambda[i].re <= w[i] {
                return Err(Error::AbscissaOutsideHalfplane {
                    index: i,
                    abscissa: lambda[i].re,
                    omega: w[i],
                });
            }
            limit = limit.min(lambda[i].re - w[i]);
        }
        if let Some(ds) = &dist {
            limit = limit.min(ds[i]);
        }
        if !limit.is_finite() {
            if f.omega.is_none() && dist.is_none() {
                return Err(Error::RadiusUnknown);
            }
            limit = 2.0;
        }
        let q = match v {
            Some(v) if v[i] > 0 => f64::EPSILON.powf(1.0 / (cauchy_nodes(v[i]) + v[i] as usize) as f64).max(0.5),
            _ => 0.5,
        };
        radii.push(q * limit);
    }
    Ok(radii)
}

fn check_radii(f: &TransformOracle, lambda: &[C64], radii: &[f64]) -> Result<()> {
    check_dim(f.n, radii.len())?;
    let dist = f.singularity_distance(lambda);
    for (i, &r) in radii.iter().enumerate() {
        let mut limit = f64::INFINITY;
        if let Some(w) = &f.omega {
            limit = limit.min(lambda[i].re - w[i]);
        }
        if let Some(ds) = &dist {
            limit = limit.min(ds[i]);
        }
        if !(r > 0.0) || r >= limit {
            return Err(Error::RadiusTooLarge { index: i, radius: r, limit });
        }
    }
    Ok(())
}

/// Trapezoid nodes on a circle of order `v`.
pub fn cauchy_nodes(v: u32) -> usize {
    (4 * v as usize + 16).max(48)
}

/// `F^(v)(lambda)` by nested trapezoid rules on circles around each `lambda_i`:
/// `f^(v)(z) ~ v! / (N r^v) sum_j f(z + r e^(i theta_j)) e^(-i v theta_j)`.
pub fn cauchy_derivative(f: &TransformOracle, lambda: &[C64], v: &[u32], opts: &CauchyOptions) -> Result<Value> {
    check_dim(f.n, lambda.len())?;
    check_dim(f.n, v.len())?;
    if total(v) > CAUCHY_MAX_ORDER {
        return Err(Error::OrderUnsupported {
            order: total(v),
            method: "cauchy (total order above 64)",
        });
    }
    let radii = match &opts.radii {
        Some(r) => {
            check_radii(f, lambda, r)?;
            r.clone()
        }
        None => default_radii(f, lambda, Some(v))?,
    };
    let order: Vec<usize> = match &opts.coordinate_order {
        Some(o) => {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if sorted != (0..f.n).collect::<Vec<_>>() {
                return Err(Error::InvalidInput(format!("coordinate order {o:?} is not a permutation")));
            }
            o.clone()
        }
        None => (0..f.n).collect(),
    };
    let mut point = lambda.to_vec();
    Ok(cauchy_level(f, lambda, v, &radii, &order, 0, &mut point))
}

fn cauchy_level(f: &TransformOracle, lambda: &[C64], v: &[u32], radii: &[f64], order: &[usize], level: usize, point: &mut Vec<C64>) -> Value {
    if level == order.len() {
        return f.eval_unchecked(point);
    }
    let i = order[level];
    if v[i] == 0 {
        point[i] = lambda[i];
        return cauchy_level(f, lambda, v, radii, order, level + 1, point);
    }
    let nodes = cauchy_nodes(v[i]);
    let r = radii[i];
    let term = |j: usize, point: &mut Vec<C64>| {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
        let e = C64::from_polar(1.0, theta);
        point[i] = lambda[i] + e * r;
        let inner = cauchy_level(f, lambda, v, radii, order, level + 1, point);
        inner.scale(C64::from_polar(1.0, -(v[i] as f64) * theta))
    };
    let parts: Vec<Value> = if level == 0 {
        (0..nodes)
            .into_par_iter()
            .map(|j| term(j, &mut point.clone()))
            .collect()
    } else {
        (0..nodes).map(|j| term(j, point)).collect()
    };
    let mut acc = Value::zeros(parts[0].dim());
    for p in &parts {
        acc = &acc + p;
    }
    let scale = factorial(v[i]) / (nodes as f64 * r.powi(v[i] as i32));
    acc.scale_real(scale)
}

/// Fornberg weights for the `m`-th derivative at 0 on the given offsets.
fn fornberg(m: usize, x: &[f64]) -> Vec<f64> {
    let np = x.len();
    let mut c = vec![vec![0.0; m + 1]; np];
    let mut c1 = 1.0;
    let mut c4 = x[0];
    c[0][0] = 1.0;
    for i in 1..np {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i];
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

/// Tensor central differences along the real axis, for `|v| <= 3`.
pub fn finite_difference_derivative(f: &TransformOracle, lambda: &[C64], v: &[u32]) -> Result<Value> {
    check_dim(f.n, lambda.len())?;
    check_dim(f.n, v.len())?;
    if total(v) > FD_MAX_ORDER {
        return Err(Error::OrderUnsupported {
            order: total(v),
            method: "finite-difference (total order above 3)",
        });
    }
    let radii = default_radii(f, lambda, None)?;
    let stencils: Vec<(Vec<f64>, Vec<f64>)> = v
        .iter()
        .zip(&radii)
        .map(|(&vi, &r)| {
            if vi == 0 {
                return (vec![0.0], vec![1.0]);
            }
            let p = vi as i32 / 2 + 4;
            let h = r / 10.0;
            let offs: Vec<f64> = (-p..=p).map(|k| k as f64 * h).collect();
            let w = fornberg(vi as usize, &offs);
            (offs, w)
        })
        .collect();
    let mut point = lambda.to_vec();
    Ok(fd_level(f, lambda, &stencils, 0, &mut point))
}

fn fd_level(f: &TransformOracle, lambda: &[C64], st: &[(Vec<f64>, Vec<f64>)], i: usize, point: &mut Vec<C64>) -> Value {
    if i == st.len() {
        return f.eval_unchecked(point);
    }
    let (offs, w) = &st[i];
    let mut acc: Option<Value> = None;
    for (o, wk) in offs.iter().zip(w) {
        point[i] = lambda[i] + o;
        let part = fd_level(f, lambda, st, i + 1, point).scale_real(*wk);
        acc = Some(match acc {
            Some(a) => &a + &part,
            None => part,
        });
    }
    point[i] = lambda[i];
    acc.expect("stencils are non-empty")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivativeCheck {
    pub derivative: Value,
    pub weighted_transform: Value,
    pub residual: f64,
    pub relative: f64,
}

/// Compare `F^(v)(lambda)` with `(-1)^|v| int e^(-lambda . t) t^v f(t) dt`.
pub fn derivative_formula_check(f: &EnvelopedFunction, oracle: &TransformOracle, lambda: &[C64], v: &[u32], tol: f64) -> Result<DerivativeCheck> {
    let lhs = mixed_derivative(oracle, lambda, v, Method::Auto)?;
    let rhs = weighted_transform(f, lambda, v, tol)?.value;
    let sign = if total(v) % 2 == 0 { 1.0 } else { -1.0 };
    let rhs = rhs.scale_real(sign);
    let residual = (&lhs - &rhs).max_abs();
    let scale = lhs.max_abs();
    Ok(DerivativeCheck {
        relative: if scale > 0.0 { residual / scale } else { residual },
        derivative: lhs,
        weighted_transform: rhs,
        residual,
    })
}
