//! Forward multidimensional Laplace transform
//! `F(lambda) = int_[0,inf)^n e^(-lambda . t) f(t) dt`.
//!
//! The half-line in each coordinate is truncated at a point `T_i` chosen from
//! the density's tail bound so that the discarded mass is at most `tol / 2`;
//! the remaining box is integrated with adaptive Gauss-Kronrod panels. Tensor
//! densities are transformed as products of one dimensional integrals, closure
//! densities by iterated quadrature.

mod probe;

pub use probe::{region_probe, ProbeReport, RegionClass};

pub use crate::function::{ClosureRepr, Envelope, EnvelopedFunction, Factor, Repr, ScalarFn, Tail, Term, VectorFn};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::quad::{integrate_from_origin, integrate_with_breaks, moment, tail_bound, truncation_point, Accumulate, QuadOptions, QuadResult};
use crate::value::{Value, C64};

/// Truncation point used when no tail bound is available.
pub const DEFAULT_TRUNCATION: f64 = 40.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    Truncated,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformResult {
    pub value: Value,
    /// Certified bound on the discarded tail (infinite when no bound exists).
    pub tail_bound: f64,
    pub quad_error: f64,
    pub panels: usize,
    pub status: Status,
}

/// `Re lambda_i > omega_i` for a verified envelope.
pub(crate) fn check_halfplane(f: &EnvelopedFunction, lambda: &[C64]) -> Result<()> {
    check_dim(f.n(), lambda.len())?;
    if let Some(env) = f.envelope().filter(|e| e.verified) {
        for (index, (l, &omega)) in lambda.iter().zip(&env.omega).enumerate() {
            if l.re <= omega {
                return Err(Error::OutsideDeclaredHalfplane { index, re: l.re, omega });
            }
        }
    }
    Ok(())
}

pub fn laplace_forward(f: &EnvelopedFunction, lambda: &[C64], tol: f64) -> Result<TransformResult> {
    check_halfplane(f, lambda)?;
    Ok(forward_unchecked(f, lambda, tol))
}

/// `int e^(-lambda . t) t^v f(t) dt`.
pub fn weighted_transform(f: &EnvelopedFunction, lambda: &[C64], v: &[u32], tol: f64) -> Result<TransformResult> {
    check_halfplane(f, lambda)?;
    check_dim(f.n(), v.len())?;
    if v.iter().all(|&vi| vi == 0) {
        return Ok(forward_unchecked(f, lambda, tol));
    }
    Ok(forward_unchecked(&f.weighted(v)?, lambda, tol))
}

pub(crate) fn forward_unchecked(f: &EnvelopedFunction, lambda: &[C64], tol: f64) -> TransformResult {
    match f.repr() {
        Repr::Terms(terms) => terms_transform(terms, f.n(), f.d(), lambda, tol),
        Repr::Closure(c) => {
            let tails = c.tails.clone().or_else(|| envelope_tails(f));
            closure_transform(c, tails.as_deref(), f.n(), f.d(), lambda, tol)
        }
    }
}

/// A product tail bound implied by a sup-dominating seminorm in the envelope.
fn envelope_tails(f: &EnvelopedFunction) -> Option<Vec<Tail>> {
    let env = f.envelope()?;
    let m = env.family.sup_norm_bound(&env.m)?;
    let mut tails: Vec<Tail> = env.omega.iter().map(|&w| Tail::new(1.0, 0.0, w)).collect();
    tails[0].m = m;
    Some(tails)
}

/// Breakpoints `b0, 2 b0, 4 b0, ..., T`.
pub fn geometric_breaks(b0: f64, t: f64) -> Vec<f64> {
    let mut breaks = vec![b0];
    let mut x = b0;
    while 2.0 * x < t {
        x *= 2.0;
        breaks.push(x);
    }
    breaks.push(t);
    breaks
}

/// `int_0^T g(t) dt` for `g(t) ~ t^(order-1)` at the origin.
pub(crate) fn integrate_truncated<V, G>(mut g: G, order: f64, t_max: f64, tol: f64) -> QuadResult<V>
where
    V: Accumulate,
    G: FnMut(f64) -> V,
{
    let opts = QuadOptions {
        abs_tol: 0.5 * tol,
        rel_tol: 1e-14,
        max_panels: 4000,
    };
    let b0 = t_max.min(1.0);
    let head = integrate_from_origin(&mut g, order, b0, &opts);
    if t_max <= b0 {
        return head;
    }
    let breaks = geometric_breaks(b0, t_max);
    let body = integrate_with_breaks(&mut g, &breaks, &opts);
    let mut value = head.value;
    value.add_scaled(&body.value, 1.0);
    QuadResult {
        value,
        error: head.error + body.error,
        panels: head.panels + body.panels,
        converged: head.converged && body.converged,
    }
}

/// Truncation of one coordinate: `(T, certified tail mass / m)`.
fn choose_truncation(tail: Option<Tail>, re_lambda: f64, m_scale: f64, budget: f64) -> (f64, f64) {
    match tail {
        Some(tl) if re_lambda - tl.omega > 0.0 => {
            let a = re_lambda - tl.omega;
            let m = tl.m * m_scale;
            if m == 0.0 {
                return (1.0, 0.0);
            }
            let t = truncation_point(m, tl.rho, a, budget).max(1.0);
            (t, m * tail_bound(tl.rho, a, t))
        }
        _ => (DEFAULT_TRUNCATION, f64::INFINITY),
    }
}

/// `int_0^inf |e^(-lambda t) phi(t)| dt` bound from the tail, or 1 when unknown.
fn factor_size(tail: Option<Tail>, re_lambda: f64) -> f64 {
    match tail {
        Some(tl) if re_lambda - tl.omega > 0.0 => tl.m * moment(tl.rho, re_lambda - tl.omega),
        _ => 1.0,
    }
}

pub(crate) struct OneD {
    pub value: C64,
    pub tail: f64,
    pub quad_error: f64,
    pub panels: usize,
    pub converged: bool,
}

/// One dimensional transform of a factor with absolute error at most `tol`.
pub(crate) fn factor_transform(phi: &Factor, lambda: C64, tol: f64) -> OneD {
    let (t_max, tail) = choose_truncation(phi.tail, lambda.re, 1.0, 0.5 * tol);
    let q = integrate_truncated(|t| (-lambda * t).exp() * phi.call(t), phi.origin_order, t_max, 0.5 * tol);
    OneD {
        value: q.value,
        tail,
        quad_error: q.error,
        panels: q.panels,
        converged: q.converged,
    }
}

fn terms_transform(terms: &[Term], n: usize, d: usize, lambda: &[C64], tol: f64) -> TransformResult {
    let mut value = Value::zeros(d);
    let (mut tail, mut qerr, mut panels, mut converged) = (0.0, 0.0, 0usize, true);
    let live: Vec<&Term> = terms.iter().filter(|t| t.coef.max_abs() > 0.0).collect();
    let k = live.len().max(1) as f64;
    for term in live {
        let c = term.coef.max_abs();
        let sizes: Vec<f64> = term
            .factors
            .iter()
            .zip(lambda)
            .map(|(phi, l)| factor_size(phi.tail, l.re))
            .collect();
        let mut prod = C64::new(1.0, 0.0);
        for (i, (phi, l)) in term.factors.iter().zip(lambda).enumerate() {
            let others: f64 = sizes.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| *s).product();
            let budget = tol / (k * n as f64 * c * others.max(1e-300));
            let r = factor_transform(phi, *l, budget);
            tail += c * others * r.tail;
            qerr += c * others * r.quad_error;
            panels += r.panels;
            converged &= r.converged;
            prod *= r.value;
        }
        value = &value + &term.coef.scale(prod);
    }
    TransformResult {
        status: status(converged, tail, tol),
        value,
        tail_bound: tail,
        quad_error: qerr,
        panels,
    }
}

fn status(converged: bool, tail: f64, tol: f64) -> Status {
    if !converged {
        Status::Failed
    } else if tail <= 0.5 * tol * (1.0 + 1e-12) {
        Status::Converged
    } else {
        Status::Truncated
    }
}

fn closure_transform(c: &ClosureRepr, tails: Option<&[Tail]>, n: usize, d: usize, lambda: &[C64], tol: f64) -> TransformResult {
    let mut t_max = vec![DEFAULT_TRUNCATION; n];
    let mut tail = f64::INFINITY;
    let usable = tails.filter(|tl| tl.iter().zip(lambda).all(|(t, l)| l.re > t.omega));
    if let Some(tl) = usable {
        let m_total: f64 = tl.iter().map(|t| t.m).product();
        let moms: Vec<f64> = tl.iter().zip(lambda).map(|(t, l)| moment(t.rho, l.re - t.omega)).collect();
        tail = 0.0;
        for i in 0..n {
            let others: f64 = moms.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, m)| *m).product();
            let single = Tail::new(m_total * others, tl[i].rho, tl[i].omega);
            let (ti, bi) = choose_truncation(Some(single), lambda[i].re, 1.0, 0.5 * tol / n as f64);
            t_max[i] = ti;
            tail += bi;
        }
    }
    let mut point = vec![0.0; n];
    let mut stats = (0usize, true, 0.0f64);
    let value = nested_transform(c, lambda, &t_max, &mut point, 0, 0.5 * tol, d, &mut stats);
    TransformResult {
        status: status(stats.1, tail, tol),
        value,
        tail_bound: tail,
        quad_error: stats.2,
        panels: stats.0,
    }
}

#[allow(clippy::too_many_arguments)]
fn nested_transform(
    c: &ClosureRepr,
    lambda: &[C64],
    t_max: &[f64],
    point: &mut Vec<f64>,
    level: usize,
    tol: f64,
    d: usize,
    stats: &mut (usize, bool, f64),
) -> Value {
    if level == lambda.len() {
        return (c.eval)(point);
    }
    let inner_tol = tol / t_max[level].max(1.0);
    let l = lambda[level];
    let mut inner_stats = (0usize, true, 0.0f64);
    let q = integrate_truncated(
        |t| {
            point[level] = t;
            let v = nested_transform(c, lambda, t_max, point, level + 1, inner_tol, d, &mut inner_stats);
            v.scale((-l * t).exp())
        },
        c.origin_orders[level],
        t_max[level],
        tol,
    );
    stats.0 += q.panels + inner_stats.0;
    stats.1 &= q.converged && inner_stats.1;
    if level == 0 {
        stats.2 += q.error;
    }
    q.value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcs::SeminormFamily;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn forward_examples() {
        let one = EnvelopedFunction::constant(1, &[1.0]);
        let r = laplace_forward(&one, &[c(2.0)], 1e-10).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!((r.value[0].re - 0.5).abs() < 1e-10);
        let e = EnvelopedFunction::exp(&[1.0, 2.0], 1);
        let r = laplace_forward(&e, &[c(3.0), c(5.0)], 1e-10).unwrap();
        assert!((r.value[0].re - 1.0 / 6.0).abs() < 1e-10);
        assert_eq!(r.status, Status::Converged);
        let z = EnvelopedFunction::zero(2, 3);
        let r = laplace_forward(&z, &[c(0.3), c(-4.0)], 1e-10).unwrap();
        assert_eq!(r.value, Value::zeros(3));
    }

    #[test]
    fn weighted_examples() {
        let one = EnvelopedFunction::constant(1, &[1.0]);
        let r = weighted_transform(&one, &[c(1.0)], &[3], 1e-10).unwrap();
        assert!((r.value[0].re - 6.0).abs() < 1e-9);
        let one2 = EnvelopedFunction::constant(2, &[1.0]);
        let r = weighted_transform(&one2, &[c(1.0), c(1.0)], &[1, 1], 1e-10).unwrap();
        assert!((r.value[0].re - 1.0).abs() < 1e-10);
        let e = EnvelopedFunction::exp(&[0.5], 2);
        let a = weighted_transform(&e, &[c(2.0)], &[0], 1e-10).unwrap();
        let b = laplace_forward(&e, &[c(2.0)], 1e-10).unwrap();
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn verified_envelope_guards_the_halfplane() {
        let mut e = EnvelopedFunction::exp(&[1.0], 1);
        e.envelope_mut().unwrap().verified = true;
        let err = laplace_forward(&e, &[c(0.5)], 1e-10).unwrap_err();
        assert_eq!(err.code(), "outside-declared-halfplane");
        let plain = e.without_envelope().to_closure();
        let r = laplace_forward(&plain, &[c(0.5)], 1e-10).unwrap();
        assert_ne!(r.status, Status::Converged);
    }

    #[test]
    fn complex_lambda_and_closure_route() {
        let f = EnvelopedFunction::exp(&[-0.5], 1);
        let l = C64::new(1.0, 3.0);
        let r = laplace_forward(&f, &[l], 1e-11).unwrap();
        let exact = 1.0 / (l + 0.5);
        assert!((r.value[0] - exact).norm() < 1e-11);
        let rc = laplace_forward(&f.to_closure(), &[l], 1e-11).unwrap();
        assert!((rc.value[0] - exact).norm() < 1e-10);
        assert_eq!(rc.status, Status::Converged);
    }

    #[test]
    fn singular_density_transform() {
        // g_(1/2) has transform lambda^(-1/2)
        let g = Factor::new(
            Arc::new(|t: f64| c(1.0 / (std::f64::consts::PI * t).sqrt())),
            0.5,
            Some(Tail::new(1.0 / std::f64::consts::PI.sqrt(), -0.5, 0.0)),
        );
        let f = EnvelopedFunction::from_terms(1, 1, vec![Term::new(Value::real(&[1.0]), vec![g])]).unwrap();
        let r = laplace_forward(&f, &[c(4.0)], 1e-11).unwrap();
        assert!((r.value[0].re - 0.5).abs() < 1e-11);
        assert_eq!(r.status, Status::Converged);
    }

    #[test]
    fn closure_without_tails_uses_envelope() {
        let f = EnvelopedFunction::from_closure(
            2,
            1,
            Arc::new(|t: &[f64]| Value::real(&[(t[0] - t[1]).exp()])),
            vec![1.0, 1.0],
            None,
        )
        .unwrap()
        .with_envelope(Envelope::sup(1, 1.0, vec![1.0, -1.0]))
        .unwrap();
        let r = laplace_forward(&f, &[c(2.0), c(0.0)], 1e-9).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!((r.value[0].re - 1.0).abs() < 1e-9);
        let fam = SeminormFamily::new(1, vec![crate::lcs::Seminorm::new(vec![2.0]).unwrap()]).unwrap();
        let f2 = f.clone().with_envelope(Envelope::new(fam, vec![2.0], vec![1.0, -1.0]).unwrap()).unwrap();
        let r2 = laplace_forward(&f2, &[c(2.0), c(0.0)], 1e-9).unwrap();
        assert_eq!(r2.status, Status::Converged);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, w1 in -1.0f64..1.0, w2 in -1.0f64..1.0, lr in 1.2f64..4.0, li in -3.0f64..3.0) {
            let tol = 1e-10;
            let f = EnvelopedFunction::exp(&[w1], 1);
            let g = EnvelopedFunction::exp(&[w2], 1).weighted(&[1]).unwrap();
            let l = [C64::new(lr, li)];
            let combo = f.scale(c(a)).add(&g.scale(c(b))).unwrap();
            let lhs = laplace_forward(&combo, &l, tol).unwrap().value[0];
            let rhs = laplace_forward(&f, &l, tol).unwrap().value[0] * a + laplace_forward(&g, &l, tol).unwrap().value[0] * b;
            prop_assert!((lhs - rhs).norm() <= 2.0 * tol * (1.0 + a.abs() + b.abs()));
        }

        #[test]
        fn tensor_separability(w1 in -1.0f64..1.0, w2 in -1.0f64..1.0, l1 in 1.5f64..4.0, l2 in 1.5f64..4.0) {
            let tol = 1e-9;
            let f = EnvelopedFunction::exp(&[w1, w2], 1);
            let joint = laplace_forward(&f.to_closure(), &[c(l1), c(l2)], tol).unwrap().value[0];
            let a = laplace_forward(&EnvelopedFunction::exp(&[w1], 1), &[c(l1)], tol).unwrap().value[0];
            let b = laplace_forward(&EnvelopedFunction::exp(&[w2], 1), &[c(l2)], tol).unwrap().value[0];
            prop_assert!((joint - a * b).norm() <= tol);
        }
    }
}
