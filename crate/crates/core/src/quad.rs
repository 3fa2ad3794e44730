//! Adaptive Gauss-Kronrod (G10/K21) quadrature on finite intervals.
//!
//! Integrands may be complex scalars or vectors of `C^d`; anything that
//! implements [`Accumulate`] works. Subdivision is global-adaptive: the panel
//! with the largest error estimate is bisected until the summed estimate
//! meets the tolerance. Panels are always summed in left-endpoint order, so a
//! given integrand and tolerance produce bit-identical results.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::value::{Value, C64};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_067_017,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Values that can be accumulated by a quadrature rule.
pub trait Accumulate: Clone {
    /// A zero of the same shape as `self`.
    fn zeroed(&self) -> Self;
    fn add_scaled(&mut self, other: &Self, w: f64);
    fn norm(&self) -> f64;
}

impl Accumulate for C64 {
    fn zeroed(&self) -> Self {
        C64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
    fn norm(&self) -> f64 {
        C64::norm(*self)
    }
}

impl Accumulate for f64 {
    fn zeroed(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl Accumulate for Value {
    fn zeroed(&self) -> Self {
        Value::zeros(self.dim())
    }
    fn add_scaled(&mut self, other: &Self, w: f64) {
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += b * w;
        }
    }
    fn norm(&self) -> f64 {
        self.max_abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-13,
            max_panels: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        QuadOptions {
            abs_tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadResult<V> {
    pub value: V,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

/// One G10/K21 panel: `(kronrod estimate, |kronrod - gauss|)`.
pub fn gk21<V, F>(f: &mut F, a: f64, b: f64) -> (V, f64)
where
    V: Accumulate,
    F: FnMut(f64) -> V,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc.zeroed();
    let mut gauss = fc.zeroed();
    kron.add_scaled(&fc, WGK[10]);
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(10).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron.add_scaled(&f1, wk);
        kron.add_scaled(&f2, wk);
        if j % 2 == 1 {
            let wg = WG[j / 2];
            gauss.add_scaled(&f1, wg);
            gauss.add_scaled(&f2, wg);
        }
    }
    let mut diff = kron.clone();
    diff.add_scaled(&gauss, -1.0);
    let mut value = kron.zeroed();
    value.add_scaled(&kron, half);
    (value, diff.norm() * half.abs())
}

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
    seq: usize,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        // largest error first; earlier panel wins ties
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Adaptive integration over `[a, b]`.
pub fn integrate<V, F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult<V>
where
    V: Accumulate,
    F: FnMut(f64) -> V,
{
    integrate_with_breaks(&mut f, &[a, b], opts)
}

/// Adaptive integration over `[breaks[0], breaks[last]]`, starting from the
/// given partition.
pub fn integrate_with_breaks<V, F>(f: &mut F, breaks: &[f64], opts: &QuadOptions) -> QuadResult<V>
where
    V: Accumulate,
    F: FnMut(f64) -> V,
{
    assert!(breaks.len() >= 2, "need at least one panel");
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut total_err = 0.0;
    let mut total: Option<V> = None;
    for w in breaks.windows(2) {
        let (value, error) = gk21(f, w[0], w[1]);
        total_err += error;
        match total.as_mut() {
            Some(t) => t.add_scaled(&value, 1.0),
            None => total = Some(value.clone()),
        }
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
            seq,
        });
        seq += 1;
    }
    let mut total = total.expect("non-empty partition");
    let mut converged;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        converged = total_err <= target;
        if converged || heap.len() >= opts.max_panels {
            break;
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // panel cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk21(f, worst.a, mid);
        let (v2, e2) = gk21(f, mid, worst.b);
        total.add_scaled(&worst.value, -1.0);
        total.add_scaled(&v1, 1.0);
        total.add_scaled(&v2, 1.0);
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            seq,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            seq: seq + 1,
        });
        seq += 2;
    }
    let mut panels: Vec<Panel<V>> = heap.into_vec();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = panels[0].value.zeroed();
    let mut error = 0.0;
    for p in &panels {
        value.add_scaled(&p.value, 1.0);
        error += p.error;
    }
    QuadResult {
        value,
        error,
        panels: panels.len(),
        converged,
    }
}

/// Integrate `f` over `[0, b]` where `f(t)` behaves like `t^(order - 1)` near
/// the origin.
///
/// For non-integer `order` the substitution `t = b * u^(1/order)` makes the
/// integrand bounded and smooth in `u`.
pub fn integrate_from_origin<V, F>(mut f: F, order: f64, b: f64, opts: &QuadOptions) -> QuadResult<V>
where
    V: Accumulate,
    F: FnMut(f64) -> V,
{
    if order.fract() == 0.0 && order >= 1.0 {
        return integrate(f, 0.0, b, opts);
    }
    let inv = 1.0 / order;
    let jac = b * inv;
    integrate(
        |u: f64| {
            let t = b * u.powf(inv);
            let mut v = f(t);
            let w = jac * u.powf(inv - 1.0);
            let z = v.zeroed();
            let orig = std::mem::replace(&mut v, z);
            v.add_scaled(&orig, w);
            v
        },
        0.0,
        1.0,
        opts,
    )
}

/// Upper bound for `int_T^inf t^rho e^(-a t) dt` (`a > 0`).
pub fn tail_bound(rho: f64, a: f64, t: f64) -> f64 {
    debug_assert!(a > 0.0);
    if rho <= 0.0 {
        // t^rho <= T^rho on [T, inf)
        return t.powf(rho) * (-a * t).exp() / a;
    }
    if t < 2.0 * rho / a {
        return f64::INFINITY;
    }
    // t^rho e^(-a t / 2) is decreasing for t >= 2 rho / a
    2.0 * t.powf(rho) * (-a * t).exp() / a
}

/// `int_0^inf t^rho e^(-a t) dt = Gamma(rho + 1) / a^(rho + 1)`.
pub fn moment(rho: f64, a: f64) -> f64 {
    (crate::special::ln_gamma(rho + 1.0) - (rho + 1.0) * a.ln()).exp()
}

/// Smallest truncation point (to within 1%) with `m * tail_bound(rho, a, T) <= budget`.
pub fn truncation_point(m: f64, rho: f64, a: f64, budget: f64) -> f64 {
    if m == 0.0 {
        return 1.0;
    }
    let ok = |t: f64| m * tail_bound(rho, a, t) <= budget;
    let mut hi = 1.0f64;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e7 {
            return hi;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_exact_for_degree_31_and_gauss_for_19() {
        for deg in [0u32, 5, 19, 31] {
            let mut f = |x: f64| x.powi(deg as i32);
            let (v, _) = gk21::<f64, _>(&mut f, 0.0, 1.0);
            assert!((v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-15, "deg {deg}");
        }
        let mut f = |x: f64| x.powi(19);
        let (_, err) = gk21::<f64, _>(&mut f, 0.0, 1.0);
        assert!(err < 1e-15);
    }

    #[test]
    fn adaptive_handles_oscillation() {
        let r = integrate(|x: f64| (50.0 * x).sin(), 0.0, 10.0, &QuadOptions::with_abs_tol(1e-12));
        let exact = (1.0 - 500f64.cos()) / 50.0;
        assert!(r.converged);
        assert!((r.value - exact).abs() < 1e-11);
    }

    #[test]
    fn origin_substitution_integrates_inverse_sqrt() {
        let r = integrate_from_origin(|t: f64| C64::new(t.powf(-0.5), 0.0), 0.5, 4.0, &QuadOptions::default());
        assert!((r.value.re - 4.0).abs() < 1e-12);
        assert!(r.panels <= 3);
    }

    #[test]
    fn vector_integrands() {
        let r = integrate(|x: f64| Value::real(&[x, x * x]), 0.0, 3.0, &QuadOptions::default());
        assert!((r.value[0].re - 4.5).abs() < 1e-13);
        assert!((r.value[1].re - 9.0).abs() < 1e-13);
    }

    #[test]
    fn deterministic_results() {
        let f = |x: f64| (x * x).cos() * (-x).exp();
        let a = integrate(f, 0.0, 20.0, &QuadOptions::default());
        let b = integrate(f, 0.0, 20.0, &QuadOptions::default());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn truncation_meets_budget() {
        for &(rho, a) in &[(0.0, 1.0), (3.0, 0.5), (-0.5, 2.0), (4.0, 3.0)] {
            let t = truncation_point(1.0, rho, a, 1e-10);
            assert!(tail_bound(rho, a, t) <= 1e-10);
            // the bound is a bound: compare with quadrature of the tail
            let tail = integrate(|s: f64| s.powf(rho) * (-a * s).exp(), t, t + 80.0 / a, &QuadOptions::with_abs_tol(1e-16));
            assert!(tail.value <= tail_bound(rho, a, t) * (1.0 + 1e-9));
        }
    }
}
