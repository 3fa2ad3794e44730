//! Gamma-function helpers.
//!
//! Integer arguments are handled exactly (factorials below 171! are exact
//! products in `f64` up to one rounding per step); everything else goes
//! through the Lanczos log-gamma from `statrs`.

use statrs::function::gamma as sg;

const EXACT_FACTORIAL_MAX: u32 = 170;

fn as_small_positive_integer(x: f64) -> Option<u32> {
    if x >= 1.0 && x <= (EXACT_FACTORIAL_MAX + 1) as f64 && x.fract() == 0.0 {
        Some(x as u32)
    } else {
        None
    }
}

/// `n!` as `f64`; overflows to `inf` past 170.
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `ln n!`, summed term by term so that neighbouring orders stay consistent.
pub fn ln_factorial(n: u32) -> f64 {
    if n <= EXACT_FACTORIAL_MAX {
        factorial(n).ln()
    } else {
        sg::ln_gamma(n as f64 + 1.0)
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    match as_small_positive_integer(x) {
        Some(n) => ln_factorial(n - 1),
        None => sg::ln_gamma(x),
    }
}

pub fn gamma(x: f64) -> f64 {
    match as_small_positive_integer(x) {
        Some(n) => factorial(n - 1),
        None => sg::gamma(x),
    }
}

/// `ln((alpha)_v / v!)` where `(alpha)_v` is the rising factorial.
///
/// This is the normalised Taylor-coefficient magnitude of `z^(-alpha)`.
/// Summing `ln(1 + (alpha - 1)/j)` keeps full relative accuracy for every
/// `v`, which a difference of two log-gammas near 2000 cannot.
pub fn ln_rising_over_factorial(alpha: f64, v: u32) -> f64 {
    let shift = alpha - 1.0;
    if shift == 0.0 {
        return 0.0;
    }
    // Neumaier summation
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for j in 1..=v {
        let term = (shift / j as f64).ln_1p();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
