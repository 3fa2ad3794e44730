//! Numerical evidence for the regions of convergence of a Laplace integral.
//!
//! Partial integrals `P(c) = int_[0,c] e^(-lambda . t) f(t) dt` are computed on
//! every corner `c` of the tensor grid spanned by the truncation schedule.
//! Convergence is judged by a Cauchy test over the corners whose coordinates
//! all sit in the last two schedule levels; absolute convergence applies the
//! same test to `int p(e^(-lambda . t) f(t)) dt` for each seminorm.
//!
//! In one dimension, partial integrals of oscillatory integrands are averaged
//! over the next three extrema (`(I1 + 2 I2 + I3) / 4`) before comparison, so
//! Dirichlet-type conditional convergence is not mistaken for divergence.

use serde::{Deserialize, Serialize};

use super::{EnvelopedFunction, Repr, Term};
use crate::error::{check_dim, Error, Result};
use crate::lcs::SeminormFamily;
use crate::quad::{integrate, integrate_from_origin, Accumulate, QuadOptions};
use crate::value::{Value, C64};

const CAUCHY_LEVEL: f64 = 1e-3;
const DIVERGENCE_FACTOR: f64 = 1e6;
const SCAN_SAMPLES: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionClass {
    Absolute,
    ConvergentBounded,
    Convergent,
    Inconclusive,
    DivergenceEvidence,
}

impl RegionClass {
    pub fn is_convergent(self) -> bool {
        matches!(self, RegionClass::Absolute | RegionClass::ConvergentBounded | RegionClass::Convergent)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub class: RegionClass,
    pub schedule: Vec<f64>,
    /// Partial integrals at the diagonal corners `(s_k, ..., s_k)`.
    pub diagonal: Vec<Value>,
    pub value_oscillation: f64,
    /// Per seminorm: absolute partial integrals on the diagonal.
    pub absolute_diagonal: Vec<Vec<f64>>,
    pub absolute_oscillation: Vec<f64>,
    pub sup_partial: f64,
    pub oscillation_averaged: bool,
}

fn opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-10,
        rel_tol: 1e-12,
        max_panels: 4000,
    }
}

fn segment<V: Accumulate, G: FnMut(f64) -> V>(g: G, a: f64, b: f64, order: f64) -> V {
    if a == 0.0 {
        integrate_from_origin(g, order, b, &opts()).value
    } else {
        integrate(g, a, b, &opts()).value
    }
}

pub fn region_probe(f: &EnvelopedFunction, lambda: &[C64], schedule: &[f64]) -> Result<ProbeReport> {
    check_dim(f.n(), lambda.len())?;
    if schedule.len() < 4 || schedule[0] <= 0.0 || schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "schedule must hold at least 4 strictly increasing positive truncation points".into(),
        ));
    }
    let n = f.n();
    let m = schedule.len();
    let family = f
        .envelope()
        .map(|e| e.family.clone())
        .unwrap_or_else(|| SeminormFamily::sup(f.d()));
    let n_corners = m.pow(n as u32);

    let (mut values, abs) = match f.repr() {
        Repr::Terms(terms) if terms.len() == 1 && n >= 2 => factorized(&terms[0], lambda, schedule, &family),
        _ => cellwise(f, lambda, schedule, &family),
    };

    let mut averaged = false;
    if n == 1 {
        averaged = average_oscillations(f, lambda[0], schedule, &mut values);
    }

    let corner = |idx: &[usize]| idx.iter().rev().fold(0, |acc, &i| acc * m + i);
    let last = corner(&vec![m - 1; n]);
    let tail_corners: Vec<usize> = (0..n_corners)
        .filter(|&c| {
            let mut x = c;
            (0..n).all(|_| {
                let ok = x % m >= m - 2;
                x /= m;
                ok
            })
        })
        .collect();

    let p_last = values[last].max_abs();
    let value_osc = tail_corners
        .iter()
        .map(|&c| (&values[c] - &values[last]).max_abs())
        .fold(0.0, f64::max);
    let values_converge = value_osc <= CAUCHY_LEVEL * p_last.max(1.0);

    let abs_osc: Vec<f64> = abs
        .iter()
        .map(|a| tail_corners.iter().map(|&c| (a[c] - a[last]).abs()).fold(0.0, f64::max))
        .collect();
    let abs_converge = abs
        .iter()
        .zip(&abs_osc)
        .all(|(a, osc)| *osc <= CAUCHY_LEVEL * a[last].max(1.0));

    let diag_idx: Vec<usize> = (0..m).map(|k| corner(&vec![k; n])).collect();
    let diagonal: Vec<Value> = diag_idx.iter().map(|&c| values[c].clone()).collect();
    let sup_partial = values.iter().map(|v| v.max_abs()).fold(0.0, f64::max);
    let first = diagonal[0].max_abs();
    let bounded = sup_partial <= DIVERGENCE_FACTOR * first.max(1.0);
    let mags: Vec<f64> = diagonal.iter().map(|v| v.max_abs()).collect();
    let diverging = first > 0.0 && mags.windows(2).all(|w| w[1] > w[0]) && mags[m - 1] > DIVERGENCE_FACTOR * first;

    let class = if values_converge && abs_converge {
        RegionClass::Absolute
    } else if values_converge && bounded {
        RegionClass::ConvergentBounded
    } else if values_converge {
        RegionClass::Convergent
    } else if diverging {
        RegionClass::DivergenceEvidence
    } else {
        RegionClass::Inconclusive
    };

    Ok(ProbeReport {
        class,
        schedule: schedule.to_vec(),
        diagonal,
        value_oscillation: value_osc,
        absolute_diagonal: abs.iter().map(|a| diag_idx.iter().map(|&c| a[c]).collect()).collect(),
        absolute_oscillation: abs_osc,
        sup_partial,
        oscillation_averaged: averaged,
    })
}

fn prefix(schedule: &[f64], k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        schedule[k - 1]
    }
}

/// Corner partials of a single tensor term from one dimensional pieces.
fn factorized(term: &Term, lambda: &[C64], schedule: &[f64], family: &SeminormFamily) -> (Vec<Value>, Vec<Vec<f64>>) {
    let m = schedule.len();
    let mut cum_v: Vec<Vec<C64>> = Vec::new();
    let mut cum_a: Vec<Vec<f64>> = Vec::new();
    for (phi, &l) in term.factors.iter().zip(lambda) {
        let (mut sv, mut sa) = (C64::new(0.0, 0.0), 0.0);
        let (mut cv, mut ca) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for k in 0..m {
            let (a, b) = (prefix(schedule, k), schedule[k]);
            sv += segment(|t| (-l * t).exp() * phi.call(t), a, b, phi.origin_order);
            sa += segment(|t| ((-l * t).exp() * phi.call(t)).norm(), a, b, phi.origin_order);
            cv.push(sv);
            ca.push(sa);
        }
        cum_v.push(cv);
        cum_a.push(ca);
    }
    let n = lambda.len();
    let coef_p: Vec<f64> = family.seminorms().iter().map(|p| p.eval_unchecked(&term.coef)).collect();
    let total = m.pow(n as u32);
    let mut values = Vec::with_capacity(total);
    let mut abs = vec![Vec::with_capacity(total); family.len()];
    for c in 0..total {
        let (mut x, mut pv, mut pa) = (c, C64::new(1.0, 0.0), 1.0);
        for i in 0..n {
            pv *= cum_v[i][x % m];
            pa *= cum_a[i][x % m];
            x /= m;
        }
        values.push(term.coef.scale(pv));
        for (j, cp) in coef_p.iter().enumerate() {
            abs[j].push(cp * pa);
        }
    }
    (values, abs)
}

/// Corner partials by nested quadrature over every schedule cell.
fn cellwise(f: &EnvelopedFunction, lambda: &[C64], schedule: &[f64], family: &SeminormFamily) -> (Vec<Value>, Vec<Vec<f64>>) {
    let n = f.n();
    let d = f.d();
    let m = schedule.len();
    let orders = f.origin_orders();
    let packed = |t: &[f64]| {
        let s: C64 = t.iter().zip(lambda).map(|(ti, l)| -l * ti).sum();
        let v = f.eval(t).scale(s.exp());
        let mut out = v.0.clone();
        out.extend(family.seminorms().iter().map(|p| C64::new(p.eval_unchecked(&v), 0.0)));
        Value(out)
    };
    let total = m.pow(n as u32);
    let mut cells = Vec::with_capacity(total);
    for c in 0..total {
        let mut x = c;
        let bounds: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let k = x % m;
                x /= m;
                (prefix(schedule, k), schedule[k])
            })
            .collect();
        let mut point = vec![0.0; n];
        cells.push(nested_box(&packed, &bounds, &orders, &mut point, 0));
    }
    // n-dimensional prefix sums turn cell integrals into corner partials
    let mut stride = 1;
    for _ in 0..n {
        for c in 0..total {
            if (c / stride) % m > 0 {
                let prev = cells[c - stride].clone();
                cells[c].add_scaled(&prev, 1.0);
            }
        }
        stride *= m;
    }
    let values = cells.iter().map(|v| Value(v.0[..d].to_vec())).collect();
    let abs = (0..family.len()).map(|j| cells.iter().map(|v| v.0[d + j].re).collect()).collect();
    (values, abs)
}

fn nested_box(g: &dyn Fn(&[f64]) -> Value, bounds: &[(f64, f64)], orders: &[f64], point: &mut Vec<f64>, level: usize) -> Value {
    if level == bounds.len() {
        return g(point);
    }
    let (a, b) = bounds[level];
    segment(
        |t| {
            point[level] = t;
            nested_box(g, bounds, orders, point, level + 1)
        },
        a,
        b,
        orders[level],
    )
}

/// Replace each 1D partial integral by the weighted mean over the next three
/// extrema of the running integral. Returns whether any point was averaged.
fn average_oscillations(f: &EnvelopedFunction, lambda: C64, schedule: &[f64], values: &mut [Value]) -> bool {
    let g = |t: f64| f.eval(&[t]).scale((-lambda * t).exp());
    let mut any = false;
    for k in 0..schedule.len() {
        let t0 = schedule[k];
        let gap = if k + 1 < schedule.len() {
            schedule[k + 1] - t0
        } else {
            t0 - prefix(schedule, k)
        };
        let width = 0.25 * gap;
        let j = values[k]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(j, _)| j)
            .unwrap_or(0);
        let psi = |t: f64| g(t)[j].re;
        let mut zeros = Vec::with_capacity(3);
        let mut prev_t = t0;
        let mut prev = psi(t0);
        for s in 1..=SCAN_SAMPLES {
            let t = t0 + width * s as f64 / SCAN_SAMPLES as f64;
            let cur = psi(t);
            if prev != 0.0 && cur != 0.0 && (prev < 0.0) != (cur < 0.0) {
                zeros.push(bisect(&psi, prev_t, t, prev));
                if zeros.len() == 3 {
                    break;
                }
            }
            prev_t = t;
            prev = cur;
        }
        if zeros.len() < 3 {
            continue;
        }
        let mut run = values[k].clone();
        let mut from = t0;
        let mut acc = Value::zeros(run.dim());
        for (w, &z) in [1.0, 2.0, 1.0].iter().zip(&zeros) {
            let piece: Value = integrate(g, from, z, &opts()).value;
            run = &run + &piece;
            acc.add_scaled(&run, *w / 4.0);
            from = z;
        }
        values[k] = acc;
        any = true;
    }
    any
}

fn bisect(psi: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let neg = fa < 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (psi(mid) < 0.0) == neg {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{Factor, Tail};
    use std::sync::Arc;

    fn dirichlet() -> EnvelopedFunction {
        let phi = Factor::new(
            Arc::new(|t: f64| C64::new(t.exp() * t.exp().sin(), 0.0)),
            1.0,
            Some(Tail::new(1.0, 0.0, 1.0)),
        );
        EnvelopedFunction::from_terms(1, 1, vec![Term::new(Value::real(&[1.0]), vec![phi])]).unwrap()
    }

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn dirichlet_is_conditionally_convergent() {
        let sched = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let r = region_probe(&dirichlet(), &[re(0.5)], &sched).unwrap();
        assert!(r.class.is_convergent(), "{r:?}");
        assert_ne!(r.class, RegionClass::Absolute);
        assert!(r.oscillation_averaged);
        let r = region_probe(&dirichlet(), &[re(3.0)], &sched).unwrap();
        assert_eq!(r.class, RegionClass::Absolute, "{r:?}");
    }

    #[test]
    fn exponential_2d_regions() {
        let f = EnvelopedFunction::exp(&[1.0, 1.0], 1);
        let sched = [1.0, 2.0, 4.0, 8.0, 16.0];
        assert_eq!(region_probe(&f, &[re(2.0), re(2.0)], &sched).unwrap().class, RegionClass::Absolute);
        assert_eq!(
            region_probe(&f, &[re(0.5), re(0.5)], &sched).unwrap().class,
            RegionClass::DivergenceEvidence
        );
        // the closure route reaches the same verdicts
        let g = f.to_closure();
        assert_eq!(region_probe(&g, &[re(2.0), re(2.0)], &sched).unwrap().class, RegionClass::Absolute);
        assert_eq!(
            region_probe(&g, &[re(0.5), re(0.5)], &sched).unwrap().class,
            RegionClass::DivergenceEvidence
        );
    }

    #[test]
    fn schedule_validation() {
        let f = EnvelopedFunction::constant(1, &[1.0]);
        assert!(region_probe(&f, &[re(1.0)], &[1.0, 2.0, 3.0]).is_err());
        assert!(region_probe(&f, &[re(1.0)], &[1.0, 3.0, 2.0, 4.0]).is_err());
    }

    #[test]
    fn absolute_is_monotone_in_lambda() {
        let f = EnvelopedFunction::exp(&[1.0, -0.5], 1);
        let sched = [1.0, 2.0, 4.0, 8.0, 16.0];
        let mut seen_absolute = false;
        for l in [1.1, 1.5, 2.0, 3.0, 5.0] {
            let class = region_probe(&f, &[re(l), re(l - 1.0)], &sched).unwrap().class;
            if seen_absolute {
                assert_eq!(class, RegionClass::Absolute);
            }
            seen_absolute |= class == RegionClass::Absolute;
        }
        assert!(seen_absolute);
    }
}
