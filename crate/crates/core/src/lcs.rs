//! Finite families of weighted-sup seminorms on `C^d` and their polars.
//!
//! The seminorm with weights `w` is `p(x) = max_j w_j |x_j|`. Zero weights are
//! allowed, so `p` may vanish on a subspace. The polar of its unit ball is the
//! closed absolutely convex hull of the weighted coordinate functionals
//! `w_j e_j*`; those are the only extreme points needed to recover `p` as a
//! supremum.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::value::{Value, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seminorm {
    weights: Vec<f64>,
}

impl Seminorm {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("seminorm needs at least one weight".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(format!(
                "seminorm weights must be finite and nonnegative, got {weights:?}"
            )));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidInput("seminorm weights are all zero".into()));
        }
        Ok(Seminorm { weights })
    }

    /// The sup norm on `C^d`.
    pub fn sup(dim: usize) -> Self {
        Seminorm {
            weights: vec![1.0; dim],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn eval(&self, x: &Value) -> Result<f64> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.eval_unchecked(x))
    }

    /// `max_j |w_j x_j|`; panics in debug builds on a dimension mismatch.
    pub fn eval_unchecked(&self, x: &Value) -> f64 {
        debug_assert_eq!(self.dim(), x.dim());
        self.weights
            .iter()
            .zip(x.iter())
            .map(|(w, z)| (z * w).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `c` with `|x_j| <= c * p(x)` for every coordinate, if `p` is a norm.
    pub fn sup_norm_factor(&self) -> Option<f64> {
        let m = self.weights.iter().cloned().fold(f64::INFINITY, f64::min);
        (m > 0.0).then(|| 1.0 / m)
    }

    /// Extreme points of the polar, one per strictly positive weight.
    pub fn polar_extremes(&self) -> Vec<Functional> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(index, &scale)| Functional::Coordinate {
                dim: self.dim(),
                index,
                scale,
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormFamily {
    dim: usize,
    seminorms: Vec<Seminorm>,
}

impl SeminormFamily {
    pub fn new(dim: usize, seminorms: Vec<Seminorm>) -> Result<Self> {
        if seminorms.is_empty() {
            return Err(Error::InvalidInput("seminorm family is empty".into()));
        }
        for p in &seminorms {
            check_dim(dim, p.dim())?;
        }
        Ok(SeminormFamily { dim, seminorms })
    }

    pub fn sup(dim: usize) -> Self {
        SeminormFamily {
            dim,
            seminorms: vec![Seminorm::sup(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.seminorms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seminorms.is_empty()
    }

    pub fn seminorms(&self) -> &[Seminorm] {
        &self.seminorms
    }

    pub fn get(&self, i: usize) -> &Seminorm {
        &self.seminorms[i]
    }

    pub fn eval_all(&self, x: &Value) -> Result<Vec<f64>> {
        check_dim(self.dim, x.dim())?;
        Ok(self.seminorms.iter().map(|p| p.eval_unchecked(x)).collect())
    }

    /// A bound `|x|_inf <= c * p_i(x)` from the first seminorm that is a norm.
    pub fn sup_norm_bound(&self, m: &[f64]) -> Option<f64> {
        self.seminorms
            .iter()
            .zip(m)
            .filter_map(|(p, mp)| p.sup_norm_factor().map(|c| c * mp))
            .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.min(b))))
    }
}

/// A continuous linear functional on `C^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Functional {
    /// `x -> scale * x[index]`
    Coordinate { dim: usize, index: usize, scale: f64 },
    /// `x -> sum_j c_j x_j`
    Dense { coefficients: Vec<C64> },
}

impl Functional {
    pub fn zero(dim: usize) -> Self {
        Functional::Dense {
            coefficients: vec![C64::new(0.0, 0.0); dim],
        }
    }

    pub fn coordinate(dim: usize, index: usize) -> Self {
        Functional::Coordinate { dim, index, scale: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            Functional::Coordinate { dim, .. } => *dim,
            Functional::Dense { coefficients } => coefficients.len(),
        }
    }

    pub fn pair(&self, x: &Value) -> Result<C64> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.pair_unchecked(x))
    }

    pub fn pair_unchecked(&self, x: &Value) -> C64 {
        match self {
            Functional::Coordinate { index, scale, .. } => x[*index] * *scale,
            Functional::Dense { coefficients } => coefficients.iter().zip(x.iter()).map(|(c, z)| c * z).sum(),
        }
    }
}

/// `|p(x) - sup_{x* extreme} |<x*, x>||`.
pub fn generalized_norm_check(p: &Seminorm, x: &Value) -> Result<f64> {
    let px = p.eval(x)?;
    let sup = p
        .polar_extremes()
        .iter()
        .map(|f| f.pair_unchecked(x).norm())
        .fold(0.0, f64::max);
    Ok((px - sup).abs())
}

pub fn dual_pairing(f: &Functional, x: &Value) -> Result<C64> {
    f.pair(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn weighted_max() {
        let x = Value::real(&[3.0, -4.0]);
        assert_eq!(Seminorm::new(vec![1.0, 1.0]).unwrap().eval(&x).unwrap(), 4.0);
        assert_eq!(Seminorm::new(vec![2.0, 1.0]).unwrap().eval(&x).unwrap(), 6.0);
        assert_eq!(Seminorm::new(vec![2.0, 1.0]).unwrap().eval(&Value::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_weights_and_dims() {
        assert!(Seminorm::new(vec![]).is_err());
        assert!(Seminorm::new(vec![0.0, 0.0]).is_err());
        assert!(Seminorm::new(vec![-1.0]).is_err());
        let p = Seminorm::sup(2);
        assert_eq!(p.eval(&Value::zeros(3)).unwrap_err().code(), "dim-mismatch");
    }

    #[test]
    fn norm_formula_examples() {
        let p = Seminorm::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(generalized_norm_check(&p, &Value::real(&[3.0, -4.0])).unwrap(), 0.0);
        let p = Seminorm::new(vec![2.0, 1.0]).unwrap();
        let x = Value(vec![c(0.0, 1.0), c(5.0, 0.0)]);
        assert_eq!(generalized_norm_check(&p, &x).unwrap(), 0.0);
        assert_eq!(generalized_norm_check(&p, &Value::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn pairing_examples() {
        let x = Value::real(&[3.0, -4.0]);
        assert_eq!(dual_pairing(&Functional::coordinate(2, 0), &x).unwrap(), c(3.0, 0.0));
        let f = Functional::Coordinate { dim: 2, index: 1, scale: 2.0 };
        assert_eq!(dual_pairing(&f, &x).unwrap(), c(-8.0, 0.0));
        assert_eq!(dual_pairing(&Functional::zero(2), &x).unwrap(), c(0.0, 0.0));
        assert!(dual_pairing(&Functional::zero(3), &x).is_err());
    }

    #[test]
    fn zero_weight_is_a_true_seminorm() {
        let p = Seminorm::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(p.eval(&Value::real(&[0.0, 7.0])).unwrap(), 0.0);
        assert_eq!(p.polar_extremes().len(), 1);
        assert!(p.sup_norm_factor().is_none());
    }

    fn vec_c(d: usize) -> impl Strategy<Value = Value> {
        prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), d).prop_map(|v| Value(v.into_iter().map(|(a, b)| c(a, b)).collect()))
    }

    fn weights(d: usize) -> impl Strategy<Value = Seminorm> {
        prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..10.0], d)
            .prop_filter("some positive weight", |w| w.iter().any(|x| *x > 0.0))
            .prop_map(|w| Seminorm::new(w).unwrap())
    }

    proptest! {
        #[test]
        fn polar_inequality_and_exact_norm_formula((p, x, y) in (1usize..5).prop_flat_map(|d| (weights(d), vec_c(d), vec_c(d)))) {
            let px = p.eval(&x).unwrap();
            for f in p.polar_extremes() {
                prop_assert!(f.pair(&x).unwrap().norm() <= px);
            }
            prop_assert!(generalized_norm_check(&p, &x).unwrap() <= 1e-14 * px.max(1.0));
            let py = p.eval(&y).unwrap();
            prop_assert!(p.eval(&(&x + &y)).unwrap() <= (px + py) * (1.0 + 1e-15));
        }

        #[test]
        fn absolute_homogeneity((p, x) in (1usize..5).prop_flat_map(|d| (weights(d), vec_c(d))), a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let alpha = c(a, b);
            let lhs = p.eval(&x.scale(alpha)).unwrap();
            let rhs = alpha.norm() * p.eval(&x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }
    }
}
