//! Points of the value space `C^d` and log-scaled quantities.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// A vector in `C^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(pub Vec<C64>);

impl Value {
    pub fn zeros(dim: usize) -> Self {
        Value(vec![ZERO; dim])
    }

    pub fn scalar(z: C64) -> Self {
        Value(vec![z])
    }

    pub fn real(xs: &[f64]) -> Self {
        Value(xs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    /// Largest component modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn scale(&self, s: C64) -> Self {
        Value(self.0.iter().map(|z| z * s).collect())
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Value(self.0.iter().map(|z| z * s).collect())
    }

    /// `self += w * other`
    pub fn axpy(&mut self, w: C64, other: &Value) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += w * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<usize> for Value {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Value {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl Add for &Value {
    type Output = Value;
    fn add(self, rhs: &Value) -> Value {
        Value(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Value {
    type Output = Value;
    fn sub(self, rhs: &Value) -> Value {
        Value(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl Add for Value {
    type Output = Value;
    fn add(self, rhs: Value) -> Value {
        &self + &rhs
    }
}

impl Sub for Value {
    type Output = Value;
    fn sub(self, rhs: Value) -> Value {
        &self - &rhs
    }
}

impl Neg for Value {
    type Output = Value;
    fn neg(self) -> Value {
        Value(self.0.into_iter().map(|z| -z).collect())
    }
}

impl Mul<C64> for &Value {
    type Output = Value;
    fn mul(self, s: C64) -> Value {
        self.scale(s)
    }
}

impl Mul<f64> for &Value {
    type Output = Value;
    fn mul(self, s: f64) -> Value {
        self.scale_real(s)
    }
}

impl From<Vec<C64>> for Value {
    fn from(v: Vec<C64>) -> Self {
        Value(v)
    }
}

/// A complex scalar stored as `z * exp(log_scale)`.
///
/// Post-Widder factors such as `(k/t)^(k+1) / k!` overflow `f64` long before
/// `k = 400`; every such product is carried in this form and only collapsed at
/// the end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledScalar {
    pub log_scale: f64,
    pub z: C64,
}

impl ScaledScalar {
    pub fn new(log_scale: f64, z: C64) -> Self {
        ScaledScalar { log_scale, z }
    }

    pub fn one() -> Self {
        ScaledScalar::new(0.0, ONE)
    }

    pub fn zero() -> Self {
        ScaledScalar::new(0.0, ZERO)
    }

    pub fn value(&self) -> C64 {
        if self.z == ZERO {
            ZERO
        } else {
            self.z * self.log_scale.exp()
        }
    }

    pub fn abs(&self) -> f64 {
        if self.z == ZERO {
            0.0
        } else {
            self.z.norm() * self.log_scale.exp()
        }
    }

    /// Natural log of the modulus, `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        self.z.norm().ln() + self.log_scale
    }

    pub fn mul(self, other: ScaledScalar) -> Self {
        ScaledScalar::new(self.log_scale + other.log_scale, self.z * other.z)
    }

    pub fn mul_c(self, c: C64) -> Self {
        ScaledScalar::new(self.log_scale, self.z * c)
    }

    pub fn add_log(self, l: f64) -> Self {
        ScaledScalar::new(self.log_scale + l, self.z)
    }

    /// Sum with a common scale equal to the largest term scale.
    pub fn sum(terms: &[ScaledScalar]) -> Self {
        let m = terms
            .iter()
            .filter(|t| t.z != ZERO)
            .map(|t| t.log_scale)
            .fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return ScaledScalar::zero();
        }
        let z = terms
            .iter()
            .filter(|t| t.z != ZERO)
            .map(|t| t.z * (t.log_scale - m).exp())
            .sum();
        ScaledScalar::new(m, z)
    }
}

/// A vector of `C^d` stored as `mantissa * exp(log_scale)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaled {
    pub log_scale: f64,
    pub mantissa: Value,
}

impl Scaled {
    pub fn new(log_scale: f64, mantissa: Value) -> Self {
        Scaled { log_scale, mantissa }
    }

    pub fn from_value(v: Value) -> Self {
        Scaled::new(0.0, v)
    }

    pub fn value(&self) -> Value {
        self.mantissa.scale_real(self.log_scale.exp())
    }

    /// Evaluate a positively homogeneous functional (a seminorm, say) on the
    /// represented vector without materialising it.
    pub fn homogeneous<F: Fn(&Value) -> f64>(&self, p: F) -> f64 {
        let m = p(&self.mantissa);
        if m == 0.0 {
            0.0
        } else {
            (m.ln() + self.log_scale).exp()
        }
    }

    pub fn add_log(mut self, l: f64) -> Self {
        self.log_scale += l;
        self
    }

    pub fn scale(mut self, c: C64) -> Self {
        self.mantissa = self.mantissa.scale(c);
        self
    }

    /// `sum_k coef_k * s_k` over scalar coefficients with per-term scales.
    pub fn combine(dim: usize, terms: &[(Value, ScaledScalar)]) -> Self {
        let m = terms
            .iter()
            .filter(|(c, s)| s.z != ZERO && c.max_abs() > 0.0)
            .map(|(_, s)| s.log_scale)
            .fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Scaled::new(0.0, Value::zeros(dim));
        }
        let mut acc = Value::zeros(dim);
        for (c, s) in terms {
            if s.z == ZERO {
                continue;
            }
            acc.axpy(s.z * (s.log_scale - m).exp(), c);
        }
        Scaled::new(m, acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_sum_survives_huge_scales() {
        let a = ScaledScalar::new(1000.0, C64::new(1.0, 0.0));
        let b = ScaledScalar::new(1000.0 + 2f64.ln(), C64::new(1.0, 0.0));
        let s = ScaledScalar::sum(&[a, b]);
        assert!((s.ln_abs() - (1000.0 + 3f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn zero_terms_are_ignored() {
        let s = ScaledScalar::sum(&[ScaledScalar::zero(), ScaledScalar::new(5.0, ONE)]);
        assert_eq!(s.log_scale, 5.0);
        assert_eq!(ScaledScalar::sum(&[]).value(), ZERO);
    }

    #[test]
    fn homogeneous_matches_materialised() {
        let s = Scaled::new(3.0, Value::real(&[1.0, -2.0]));
        let direct = s.value().max_abs();
        assert!((s.homogeneous(|v| v.max_abs()) - direct).abs() < 1e-12 * direct);
    }
}
