//! Post–Widder inversion: `f_k(t) = (-1)^k / k! (k/t)^(k+1) F^(k)(k/t) -> f(t)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{normalized_derivative, Method, TransformOracle, CAUCHY_MAX_ORDER};
use crate::error::{check_dim, Error, Result};
use crate::value::{Value, C64};

pub const LADDER_BASE: u32 = 25;
pub const DEFAULT_K_MAX: u32 = 400;

/// One Post–Widder approximant `f_k(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PWApproximant {
    pub k: Vec<u32>,
    pub t: Vec<f64>,
    pub value: Value,
}

/// `f_k(t)` for a one-dimensional oracle.
pub fn post_widder_1d(f: &TransformOracle, t: f64, k: u32) -> Result<C64> {
    check_dim(1, f.n())?;
    let a = post_widder_nd(f, &[t], &[k])?;
    check_dim(1, a.value.dim())?;
    Ok(a.value[0])
}

/// Tensor form `prod_i (-1)^(k_i)/k_i! (k_i/t_i)^(k_i+1) * F^(k)(k_1/t_1, ..., k_n/t_n)`.
pub fn post_widder_nd(f: &TransformOracle, t: &[f64], k: &[u32]) -> Result<PWApproximant> {
    check_dim(f.n(), t.len())?;
    check_dim(f.n(), k.len())?;
    let mut anchors = Vec::with_capacity(t.len());
    for (i, (&ti, &ki)) in t.iter().zip(k).enumerate() {
        if !(ti > 0.0 && ti.is_finite()) {
            return Err(Error::InvalidInput(format!("t_{i} = {ti} must be positive")));
        }
        if ki == 0 {
            return Err(Error::InvalidInput(format!("k_{i} must be at least 1")));
        }
        let a = ki as f64 / ti;
        if let Some(w) = f.halfplane() {
            if a <= w[i] {
                return Err(Error::AbscissaOutsideHalfplane {
                    index: i,
                    abscissa: a,
                    omega: w[i],
                });
            }
        }
        anchors.push(a);
    }
    let order: u32 = k.iter().sum();
    let method = if f.has_closed_form() {
        Method::ClosedForm
    } else if k.iter().all(|&ki| ki <= CAUCHY_MAX_ORDER) {
        Method::Cauchy
    } else {
        return Err(Error::OrderUnsupported {
            order,
            method: "post-widder without closed-form derivatives",
        });
    };
    let lambda: Vec<C64> = anchors.iter().map(|&a| C64::new(a, 0.0)).collect();
    let n = normalized_derivative(f, &lambda, k, &anchors, method)?;
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    Ok(PWApproximant {
        k: k.to_vec(),
        t: t.to_vec(),
        value: n.value().scale_real(sign),
    })
}

/// Richardson extrapolation in `1/k` over a doubling ladder `(k, 2k, 4k, ...)`.
pub fn extrapolate(samples: &[(u32, Value)]) -> Result<Value> {
    Ok(richardson(samples)?.0)
}

/// Extrapolated value and the difference between the last two diagonal entries.
fn richardson(samples: &[(u32, Value)]) -> Result<(Value, f64)> {
    if samples.len() < 2 {
        return Err(Error::LadderShape(format!("need at least 2 samples, got {}", samples.len())));
    }
    for w in samples.windows(2) {
        if w[1].0 != w[0].0.saturating_mul(2) {
            return Err(Error::LadderShape(format!("{} is followed by {}", w[0].0, w[1].0)));
        }
        check_dim(w[0].1.dim(), w[1].1.dim())?;
    }
    // row[j] holds the j-times-eliminated estimate ending at the current sample
    let mut prev: Vec<Value> = vec![samples[0].1.clone()];
    let mut diag_prev = samples[0].1.clone();
    let mut delta = 0.0;
    for (_, v) in &samples[1..] {
        let mut row = vec![v.clone()];
        for j in 1..=prev.len() {
            let p = (1u64 << j) as f64;
            let next = (&row[j - 1].scale_real(p) - &prev[j - 1]).scale_real(1.0 / (p - 1.0));
            row.push(next);
        }
        let diag = row.last().unwrap().clone();
        delta = (&diag - &diag_prev).max_abs();
        diag_prev = diag;
        prev = row;
    }
    Ok((diag_prev, delta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionNode {
    pub t: Vec<f64>,
    pub value: Value,
    pub ladder: Vec<u32>,
    pub samples: Vec<Value>,
    /// Change of the extrapolated value at the last rung.
    pub delta: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub nodes: Vec<InversionNode>,
    pub tol: f64,
    pub k_max: u32,
    pub all_converged: bool,
}

/// Ladder `25 * 2^j <= k_max`; without closed forms it stops at the Cauchy limit.
pub fn ladder(f: &TransformOracle, k_max: u32) -> Vec<u32> {
    let cap = if f.has_closed_form() { k_max } else { k_max.min(CAUCHY_MAX_ORDER) };
    std::iter::successors(Some(LADDER_BASE), |k| k.checked_mul(2))
        .take_while(|&k| k <= cap)
        .collect()
}

/// Extrapolated Post–Widder values on a grid of positive time points.
pub fn invert(f: &TransformOracle, grid: &[Vec<f64>], tol: f64, k_max: u32) -> InversionReport {
    let ks = ladder(f, k_max);
    let nodes: Vec<InversionNode> = grid.par_iter().map(|t| invert_node(f, t, tol, &ks)).collect();
    InversionReport {
        all_converged: nodes.iter().all(|n| n.converged),
        nodes,
        tol,
        k_max,
    }
}

fn invert_node(f: &TransformOracle, t: &[f64], tol: f64, ks: &[u32]) -> InversionNode {
    let failed = |msg: String, ladder: Vec<u32>, samples: Vec<Value>| InversionNode {
        t: t.to_vec(),
        value: Value::zeros(f.d()),
        ladder,
        samples,
        delta: f64::INFINITY,
        converged: false,
        error: Some(msg),
    };
    let mut samples = Vec::with_capacity(ks.len());
    let mut used = Vec::with_capacity(ks.len());
    for &k in ks {
        match post_widder_nd(f, t, &vec![k; t.len()]) {
            Ok(a) => {
                used.push(k);
                samples.push(a.value);
            }
            Err(Error::AbscissaOutsideHalfplane { .. }) if samples.is_empty() => continue,
            Err(e) => return failed(format!("{}: {e}", e.code()), used, samples),
        }
    }
    let pairs: Vec<(u32, Value)> = used.iter().copied().zip(samples.iter().cloned()).collect();
    match richardson(&pairs) {
        Ok((value, delta)) => InversionNode {
            t: t.to_vec(),
            value,
            ladder: used,
            samples,
            delta,
            converged: delta <= tol,
            error: None,
        },
        Err(e) => failed(format!("{}: {e}", e.code()), used, samples),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{get, ClosedFormPair, ExpPoly, PairTerm, Trig};

    fn pair(atoms: Vec<ExpPoly>) -> TransformOracle {
        ClosedFormPair::product(atoms).unwrap().oracle()
    }

    fn power(a: f64) -> ExpPoly {
        ExpPoly {
            coef: 1.0 / crate::special::gamma(a),
            power: a - 1.0,
            rate: 0.0,
            freq: 0.0,
            trig: Trig::None,
        }
    }

    #[test]
    fn approximant_examples() {
        let one = pair(vec![ExpPoly::exp(0.0)]);
        assert_eq!(post_widder_1d(&one, 3.7, 25).unwrap().re, 1.0);
        let ramp = pair(vec![power(2.0)]);
        assert!((post_widder_1d(&ramp, 2.0, 10).unwrap().re - 2.2).abs() < 1e-14);
        let decay = pair(vec![ExpPoly::exp(-1.0)]);
        let v = post_widder_1d(&decay, 1.0, 100).unwrap().re;
        assert!((v - 1.01f64.powi(-101)).abs() < 1e-15);
        assert!((v - 0.366046).abs() < 1e-5);

        let one2 = pair(vec![ExpPoly::exp(0.0), ExpPoly::exp(0.0)]);
        assert_eq!(post_widder_nd(&one2, &[1.0, 1.0], &[5, 5]).unwrap().value[0].re, 1.0);
        let decay2 = pair(vec![ExpPoly::exp(-1.0), ExpPoly::exp(-1.0)]);
        let v2 = post_widder_nd(&decay2, &[1.0, 1.0], &[100, 100]).unwrap().value[0].re;
        assert!((v2 - v * v).abs() < 1e-15 && (v2 - 0.133990).abs() < 1e-5);
    }

    #[test]
    fn approximant_errors() {
        let e = pair(vec![ExpPoly::exp(2.0)]);
        assert_eq!(post_widder_1d(&e, 10.0, 10).unwrap_err().code(), "abscissa-outside-halfplane");
        let bare = get("dirichlet-osc").unwrap().oracle.clone();
        let stripped = TransformOracle::new(1, 1, std::sync::Arc::new(move |l| bare.eval(l).unwrap())).with_halfplane(vec![0.0]);
        assert_eq!(post_widder_1d(&stripped, 1.0, 65).unwrap_err().code(), "order-unsupported");
    }

    #[test]
    fn extrapolation_examples() {
        let s = |k, x: f64| (k, Value::real(&[x]));
        assert!((extrapolate(&[s(10, 2.2), s(20, 2.1)]).unwrap()[0].re - 2.0).abs() < 1e-14);
        let v = extrapolate(&[s(100, 0.366046), s(200, 0.366962)]).unwrap()[0].re;
        assert!((v - 0.367878).abs() < 1e-12 && (v - (-1f64).exp()).abs() <= 2e-6);
        assert_eq!(extrapolate(&[s(25, 3.0), s(50, 3.0), s(100, 3.0)]).unwrap()[0].re, 3.0);
        assert_eq!(extrapolate(&[s(10, 1.0), s(30, 1.0)]).unwrap_err().code(), "ladder-shape");
        assert_eq!(extrapolate(&[s(10, 1.0)]).unwrap_err().code(), "ladder-shape");
    }

    #[test]
    fn invert_examples() {
        let one = pair(vec![ExpPoly::exp(0.0)]);
        let r = invert(&one, &[vec![1.0], vec![2.0]], 1e-6, DEFAULT_K_MAX);
        assert!(r.all_converged);
        assert!(r.nodes.iter().all(|n| (n.value[0].re - 1.0).abs() < 1e-14));
        let decay = pair(vec![ExpPoly::exp(-1.0)]);
        let r = invert(&decay, &[vec![1.0]], 1e-6, 400);
        assert!((r.nodes[0].value[0].re - 0.3678794).abs() < 1e-5);
        let decay2 = pair(vec![ExpPoly::exp(-1.0), ExpPoly::exp(-1.0)]);
        let r = invert(&decay2, &[vec![1.0, 1.0]], 1e-6, DEFAULT_K_MAX);
        assert!((r.nodes[0].value[0].re - 0.1353353).abs() < 3e-5);
    }

    #[test]
    fn first_order_convergence() {
        let decay = pair(vec![ExpPoly::exp(-1.0)]);
        // at t = 2 the 1/k coefficient (t^2/2 - t) e^-t vanishes
        for t in [0.5, 1.0, 3.0] {
            let err = |k| (post_widder_1d(&decay, t, k).unwrap().re - (-t).exp()).abs();
            for k in [25, 50, 100, 200] {
                let ratio = err(k) / err(2 * k);
                assert!((1.8..=2.2).contains(&ratio), "t={t} k={k}: {ratio}");
            }
        }
    }

    #[test]
    fn vector_valued_inversion() {
        let f = ClosedFormPair::new(
            1,
            2,
            vec![
                PairTerm { coef: vec![1.0, 0.0], atoms: vec![ExpPoly::exp(1.0)] },
                PairTerm { coef: vec![0.0, 1.0], atoms: vec![ExpPoly::exp(-0.5)] },
            ],
        )
        .unwrap()
        .oracle();
        let r = invert(&f, &[vec![0.5]], 1e-4, 400);
        assert!((r.nodes[0].value[0].re - 0.5f64.exp()).abs() < 1e-5);
        assert!((r.nodes[0].value[1].re - (-0.25f64).exp()).abs() < 1e-5);
    }

    #[test]
    fn cauchy_route_matches_closed_form() {
        let decay = pair(vec![ExpPoly::exp(-1.0)]);
        let bare = decay.clone();
        let numeric = TransformOracle::new(1, 1, std::sync::Arc::new(move |l| bare.eval(l).unwrap()))
            .with_halfplane(vec![-1.0])
            .with_singularity_distance(std::sync::Arc::new(|l| vec![(l[0] + 1.0).norm()]));
        for k in [25, 50] {
            let a = post_widder_1d(&decay, 1.0, k).unwrap();
            let b = post_widder_1d(&numeric, 1.0, k).unwrap();
            assert!((a - b).norm() < 1e-7 * a.norm(), "k={k}: {a} vs {b}");
        }
    }
}
