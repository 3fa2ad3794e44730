//! Integrated representations of a transform: `f_r = I^r f` with
//! `F(lambda) = lambda^r L(f_r)(lambda)`, the damped version
//! `h_r = I^r(e^(-omega t) f)`, the convolutions `H_r`, `G_r`, the cumulative
//! primitive `w`, and density recovery from Lipschitz primitives.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::TransformOracle;
use crate::error::{check_dim, Error, Result};
use crate::function::EnvelopedFunction;
use crate::kernels::{fractional_integral, kernel_eval};
use crate::lcs::{Functional, Seminorm};
use crate::special::gamma;
use crate::transform::laplace_forward;
use crate::value::{Value, C64};

/// Tolerance for the fractional integrals inside a bundle.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Tolerance for the forward transforms in the identity checks.
pub const TRANSFORM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Construction {
    FromDensity,
    FromFunctionalFamily,
}

/// `f_r = I^r(e^(-damping . t) f)`. Plain bundles have zero damping.
#[derive(Clone, Debug)]
pub struct RepresentationBundle {
    pub r: Vec<f64>,
    pub damping: Vec<f64>,
    pub f_r: EnvelopedFunction,
    pub source: EnvelopedFunction,
    pub construction: Construction,
}

impl RepresentationBundle {
    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn eval(&self, t: &[f64]) -> Value {
        self.f_r.eval(t)
    }

    pub fn is_damped(&self) -> bool {
        self.damping.iter().any(|w| *w != 0.0)
    }
}

fn check_r(r: &[f64]) -> Result<()> {
    for &ri in r {
        if !(ri > 0.0 && ri <= 1.0) {
            return Err(Error::OrderOutOfRange {
                order: ri,
                range: "(0, 1]",
            });
        }
    }
    Ok(())
}

/// `f_r = I^r f`.
pub fn build_f_r(f: &EnvelopedFunction, r: &[f64]) -> Result<RepresentationBundle> {
    check_dim(f.n(), r.len())?;
    check_r(r)?;
    Ok(RepresentationBundle {
        r: r.to_vec(),
        damping: vec![0.0; r.len()],
        f_r: f.fractional_integral(r, CONSTRUCTION_TOL)?,
        source: f.clone(),
        construction: Construction::FromDensity,
    })
}

/// `h_r = I^r(e^(-omega . t) f)`.
pub fn build_h_r(f: &EnvelopedFunction, omega: &[f64], r: &[f64]) -> Result<RepresentationBundle> {
    check_dim(f.n(), r.len())?;
    check_dim(f.n(), omega.len())?;
    check_r(r)?;
    Ok(RepresentationBundle {
        r: r.to_vec(),
        damping: omega.to_vec(),
        f_r: f.damped(omega)?.fractional_integral(r, CONSTRUCTION_TOL)?,
        source: f.clone(),
        construction: Construction::FromDensity,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityPoint {
    pub lambda: Vec<C64>,
    pub expected: Value,
    pub reconstructed: Value,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub points: Vec<IdentityPoint>,
    pub max_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl IdentityReport {
    fn new(points: Vec<IdentityPoint>, tol: f64) -> Self {
        let max_residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
        IdentityReport {
            points,
            max_residual,
            tol,
            passed: max_residual <= tol,
        }
    }
}

fn principal_pow(z: C64, r: f64) -> C64 {
    if r == 1.0 {
        z
    } else if z.im == 0.0 && z.re > 0.0 {
        C64::new(z.re.powf(r), 0.0)
    } else {
        (r * z.ln()).exp()
    }
}

/// Abscissa below which the identities are not checked: the bundle's
/// damping plus the declared growth of the source, or the oracle half-plane.
fn check_grid(bundle: &RepresentationBundle, f: &TransformOracle, grid: &[Vec<C64>], floor: &[f64]) -> Result<()> {
    check_dim(bundle.n(), f.n())?;
    check_dim(bundle.source.d(), f.d())?;
    let growth = bundle
        .source
        .envelope()
        .map(|e| e.omega.clone())
        .or_else(|| f.halfplane().map(|w| w.to_vec()));
    for l in grid {
        check_dim(bundle.n(), l.len())?;
        for i in 0..bundle.n() {
            let w = growth.as_ref().map_or(floor[i], |g| g[i].max(floor[i]));
            if l[i].re <= w {
                return Err(Error::AbscissaOutsideHalfplane {
                    index: i,
                    abscissa: l[i].re,
                    omega: w,
                });
            }
        }
    }
    Ok(())
}

/// Residual of `F(lambda) = prod (lambda_i - omega_i)^(s_i) L(g)(lambda - omega)` over a grid.
fn transform_identity(g: &EnvelopedFunction, f: &TransformOracle, shift: &[f64], powers: &[f64], grid: &[Vec<C64>], tol: f64) -> Result<IdentityReport> {
    let points: Result<Vec<IdentityPoint>> = grid
        .par_iter()
        .map(|l| {
            let shifted: Vec<C64> = l.iter().zip(shift).map(|(li, w)| li - w).collect();
            let lt = laplace_forward(g, &shifted, TRANSFORM_TOL)?;
            let pre: C64 = shifted.iter().zip(powers).map(|(z, s)| principal_pow(*z, *s)).product();
            let reconstructed = lt.value.scale(pre);
            let expected = f.eval(l)?;
            Ok(IdentityPoint {
                lambda: l.clone(),
                residual: (&expected - &reconstructed).max_abs(),
                expected,
                reconstructed,
            })
        })
        .collect();
    Ok(IdentityReport::new(points?, tol))
}

/// `F(lambda) = prod lambda_i^(r_i) L(f_r)(lambda)`; for a damped bundle
/// `F(lambda) = prod (lambda_i - omega_i)^(r_i) L(h_r)(lambda - omega)`.
pub fn verify_prc1(bundle: &RepresentationBundle, f: &TransformOracle, lambda_grid: &[Vec<C64>], tol: f64) -> Result<IdentityReport> {
    let floor: Vec<f64> = if bundle.is_damped() {
        bundle.damping.clone()
    } else {
        vec![0.0; bundle.n()]
    };
    check_grid(bundle, f, lambda_grid, &floor)?;
    transform_identity(&bundle.f_r, f, &bundle.damping, &bundle.r, lambda_grid, tol)
}

/// The damped identity, checked on a bundle from [`build_h_r`].
pub fn verify_prc1w(bundle: &RepresentationBundle, f: &TransformOracle, lambda_grid: &[Vec<C64>], tol: f64) -> Result<IdentityReport> {
    verify_prc1(bundle, f, lambda_grid, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub t_grid: Vec<Vec<f64>>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `lhs - rhs` per node; the bound holds where this is `<= tol`.
    pub margins: Vec<f64>,
    pub max_margin: f64,
    pub tol: f64,
    pub passed: bool,
}

/// `I^r(e^(w s))(t)`.
pub fn integrated_exponential(r: f64, w: f64, t: f64) -> f64 {
    if w == 0.0 {
        return kernel_eval(r + 1.0, t).unwrap_or(0.0);
    }
    let scale = kernel_eval(r + 1.0, t).unwrap_or(0.0) * (w.max(0.0) * t).exp();
    fractional_integral(r, |s: f64| (w * s).exp(), 1.0, t, CONSTRUCTION_TOL * scale.max(1.0)).expect("order checked")
}

/// Margins of `p(f_r(t)) <= M_p prod I^(r_i)(e^(w_i s))(t_i)` where `w` is
/// the source growth minus the bundle damping. For `h_r` with matching
/// damping the majorant is `M_p prod g_(r_i+1)(t_i)`.
pub fn verify_prc0(bundle: &RepresentationBundle, p: &Seminorm, m_p: f64, omega: &[f64], t_grid: &[Vec<f64>], tol: f64) -> Result<MarginReport> {
    check_dim(bundle.n(), omega.len())?;
    check_dim(bundle.source.d(), p.dim())?;
    for t in t_grid {
        check_dim(bundle.n(), t.len())?;
    }
    let rates: Vec<f64> = omega.iter().zip(&bundle.damping).map(|(w, d)| w - d).collect();
    let rows: Vec<(f64, f64)> = t_grid
        .par_iter()
        .map(|t| {
            let lhs = p.eval_unchecked(&bundle.eval(t));
            let rhs = m_p
                * t.iter()
                    .zip(&bundle.r)
                    .zip(&rates)
                    .map(|((ti, ri), wi)| integrated_exponential(*ri, *wi, *ti))
                    .product::<f64>();
            (lhs, rhs)
        })
        .collect();
    let margins: Vec<f64> = rows.iter().map(|(l, r)| l - r).collect();
    let max_margin = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(MarginReport {
        t_grid: t_grid.to_vec(),
        lhs: rows.iter().map(|r| r.0).collect(),
        rhs: rows.iter().map(|r| r.1).collect(),
        max_margin,
        passed: margins.iter().all(|m| *m <= tol),
        margins,
        tol,
    })
}

/// Bound of `p(h_r(t))` by `M_p prod g_(r_i+1)(t_i)`.
pub fn verify_prc0w(bundle: &RepresentationBundle, p: &Seminorm, m_p: f64, t_grid: &[Vec<f64>], tol: f64) -> Result<MarginReport> {
    verify_prc0(bundle, p, m_p, &bundle.damping.clone(), t_grid, tol)
}

/// One-dimensional `H_r = g_(1-r) *0 f_r` and `G_r = g_(1-r) *0 h_r`;
/// `r = 1` uses the Dirac kernel.
#[derive(Clone, Debug)]
pub struct GhPair {
    pub r: f64,
    pub omega: f64,
    pub f_r: RepresentationBundle,
    pub h_r: RepresentationBundle,
    pub big_h: EnvelopedFunction,
    pub big_g: EnvelopedFunction,
}

pub fn build_g_h(f: &EnvelopedFunction, omega: f64, r: f64) -> Result<GhPair> {
    check_dim(1, f.n())?;
    let f_r = build_f_r(f, &[r])?;
    let h_r = build_h_r(f, &[omega], &[r])?;
    let s = 1.0 - r;
    Ok(GhPair {
        r,
        omega,
        big_h: f_r.f_r.fractional_integral(&[s], CONSTRUCTION_TOL)?,
        big_g: h_r.f_r.fractional_integral(&[s], CONSTRUCTION_TOL)?,
        f_r,
        h_r,
    })
}

pub const INCREMENT_STEPS: [f64; 5] = [1e-3, 1e-2, 0.1, 0.5, 1.0];
pub const INCREMENT_TOL: f64 = 1e-9;

pub fn increment_t_grid() -> Vec<f64> {
    (0..=30).map(|i| i as f64 / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncrementReport {
    pub t_grid: Vec<f64>,
    pub h_grid: Vec<f64>,
    /// `sup p(G(t+h) - G(t)) / (M h)`.
    pub g_ratio: f64,
    /// `sup p(H(t+h) - H(t)) / (M e^(omega t) max(e^(omega h), 1) h)`.
    pub h_ratio: f64,
    /// `sup p(h_r(t+h) - h_r(t)) / h^r`.
    pub holder_sup: f64,
    /// `2 M / (r Gamma(r))`.
    pub holder_constant: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Increment bounds over `t in {0, 0.1, ..., 3}` and `h` in [`INCREMENT_STEPS`].
pub fn increment_sweep(gh: &GhPair, p: &Seminorm, m_p: f64) -> Result<IncrementReport> {
    increment_sweep_on(gh, p, m_p, &increment_t_grid(), &INCREMENT_STEPS)
}

pub fn increment_sweep_on(gh: &GhPair, p: &Seminorm, m_p: f64, t_grid: &[f64], h_grid: &[f64]) -> Result<IncrementReport> {
    check_dim(gh.f_r.source.d(), p.dim())?;
    if !(m_p > 0.0) {
        return Err(Error::InvalidInput(format!("M_p must be positive, got {m_p}")));
    }
    let w = gh.omega;
    let pairs: Vec<(f64, f64)> = t_grid.iter().flat_map(|&t| h_grid.iter().map(move |&h| (t, h))).collect();
    let rows: Vec<(f64, f64, f64)> = pairs
        .par_iter()
        .map(|&(t, h)| {
            let diff = |g: &EnvelopedFunction| p.eval_unchecked(&(&g.eval(&[t + h]) - &g.eval(&[t])));
            let g_ratio = diff(&gh.big_g) / (m_p * h);
            let h_ratio = diff(&gh.big_h) / (m_p * (w * t).exp() * (w * h).exp().max(1.0) * h);
            let holder = diff(&gh.h_r.f_r) / h.powf(gh.r);
            (g_ratio, h_ratio, holder)
        })
        .collect();
    let g_ratio = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let h_ratio = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let holder_sup = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let holder_constant = 2.0 * m_p / (gh.r * gamma(gh.r));
    let limit = 1.0 + INCREMENT_TOL;
    Ok(IncrementReport {
        t_grid: t_grid.to_vec(),
        h_grid: h_grid.to_vec(),
        g_ratio,
        h_ratio,
        holder_sup,
        holder_constant,
        tol: INCREMENT_TOL,
        passed: g_ratio <= limit && h_ratio <= limit && holder_sup <= holder_constant * limit,
    })
}

/// Densities indexed by the extreme points of a seminorm's dual ball. In a
/// finite-dimensional space every member is the density itself.
#[derive(Clone, Debug)]
pub struct FunctionalDensityFamily {
    pub seminorm: Seminorm,
    pub members: Vec<(Functional, EnvelopedFunction)>,
}

impl FunctionalDensityFamily {
    pub fn from_density(f: &EnvelopedFunction, p: &Seminorm) -> Result<Self> {
        check_dim(f.d(), p.dim())?;
        Ok(FunctionalDensityFamily {
            seminorm: p.clone(),
            members: p.polar_extremes().into_iter().map(|x| (x, f.clone())).collect(),
        })
    }

    /// `sup_t p(f_x*(t)) e^(-omega . t)` over all members.
    pub fn envelope_sup(&self, omega: &[f64], t_grid: &[Vec<f64>]) -> Result<f64> {
        let mut sup: f64 = 0.0;
        for (_, f) in &self.members {
            sup = sup.max(crate::widder::envelope_check(f, omega, &self.seminorm, t_grid)?);
        }
        Ok(sup)
    }
}

/// Residual of `<x*, F(lambda)> = L(<x*, f_x*>)(lambda)` over the extreme
/// functionals of `p` and the grid.
pub fn functional_family_check(f: &EnvelopedFunction, oracle: &TransformOracle, p: &Seminorm, lambda_grid: &[Vec<C64>], tol: f64) -> Result<IdentityReport> {
    let family = FunctionalDensityFamily::from_density(f, p)?;
    functional_family_check_on(&family, oracle, &family.members.iter().map(|m| m.0.clone()).collect::<Vec<_>>(), lambda_grid, tol)
}

/// As [`functional_family_check`], over an explicit list of functionals.
pub fn functional_family_check_on(
    family: &FunctionalDensityFamily,
    oracle: &TransformOracle,
    functionals: &[Functional],
    lambda_grid: &[Vec<C64>],
    tol: f64,
) -> Result<IdentityReport> {
    let mut points = Vec::new();
    for x in functionals {
        check_dim(oracle.d(), x.dim())?;
        let density = family.members.first().map(|m| &m.1).ok_or_else(|| Error::InvalidInput("empty family".into()))?;
        let scalar = density.pair(x)?;
        for l in lambda_grid {
            let lhs = x.pair(&oracle.eval(l)?)?;
            let rhs = laplace_forward(&scalar, l, TRANSFORM_TOL)?.value[0];
            points.push(IdentityPoint {
                lambda: l.clone(),
                expected: Value::scalar(lhs),
                reconstructed: Value::scalar(rhs),
                residual: (lhs - rhs).norm(),
            });
        }
    }
    Ok(IdentityReport::new(points, tol))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdfReport {
    pub max_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Residual of `<x*, f_r(t)> = I^r <x*, f_x*>(t)`. The right side is
/// evaluated through nested quadrature on the closure route, independently of
/// the per-factor construction of the bundle.
pub fn adf_identity_check(bundle: &RepresentationBundle, family: &FunctionalDensityFamily, t_grid: &[Vec<f64>], tol: f64) -> Result<AdfReport> {
    let mut max_residual: f64 = 0.0;
    for (x, f_x) in &family.members {
        let rhs_fn = f_x.pair(x)?.damped(&bundle.damping)?.to_closure().fractional_integral(&bundle.r, CONSTRUCTION_TOL)?;
        let res: Vec<f64> = t_grid
            .par_iter()
            .map(|t| {
                let lhs = x.pair_unchecked(&bundle.eval(t));
                (lhs - rhs_fn.eval(t)[0]).norm()
            })
            .collect();
        max_residual = res.into_iter().fold(max_residual, f64::max);
    }
    Ok(AdfReport {
        max_residual,
        tol,
        passed: max_residual <= tol,
    })
}

/// `w(t) = int_0^t1 ... int_0^tn f_r(s) ds`.
pub fn w_accumulate(bundle: &RepresentationBundle) -> Result<EnvelopedFunction> {
    bundle.f_r.fractional_integral(&vec![1.0; bundle.n()], CONSTRUCTION_TOL)
}

/// Residual of `F(lambda) = prod lambda_i^(r_i+1) L(w)(lambda)`.
pub fn verify_w_relation(bundle: &RepresentationBundle, w: &EnvelopedFunction, f: &TransformOracle, lambda_grid: &[Vec<C64>], tol: f64) -> Result<IdentityReport> {
    if bundle.is_damped() {
        return Err(Error::InvalidInput("the w relation is stated for undamped bundles".into()));
    }
    check_grid(bundle, f, lambda_grid, &vec![0.0; bundle.n()])?;
    let powers: Vec<f64> = bundle.r.iter().map(|r| r + 1.0).collect();
    transform_identity(w, f, &vec![0.0; bundle.n()], &powers, lambda_grid, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRecovery {
    pub t: Vec<f64>,
    pub density: Vec<Value>,
    /// `sup p(h1(t+dt) - h1(t)) / dt`.
    pub lipschitz_sup: f64,
    pub m_p: f64,
    /// `sup p(density)`.
    pub density_sup: f64,
}

/// Recover `h1'` from samples of a Lipschitz primitive `h1` on a uniform
/// grid: central differences inside, second-order one-sided at the ends.
/// Fails if some increment exceeds `M_p dt (1 + 1e-6)`.
pub fn density_from_lipschitz(samples: &[Value], t: &[f64], p: &Seminorm, m_p: f64) -> Result<LipschitzRecovery> {
    check_dim(t.len(), samples.len())?;
    if t.len() < 3 {
        return Err(Error::InvalidInput("need at least 3 samples".into()));
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::InvalidInput("time grid must be uniform and increasing".into()));
    }
    for s in samples {
        check_dim(p.dim(), s.dim())?;
    }
    let level = m_p * (1.0 + 1e-6);
    let mut lipschitz_sup: f64 = 0.0;
    for i in 0..t.len() - 1 {
        let ratio = p.eval_unchecked(&(&samples[i + 1] - &samples[i])) / dt;
        if ratio > level {
            return Err(Error::NotLipschitzAtLevel { t: t[i], ratio, level: m_p });
        }
        lipschitz_sup = lipschitz_sup.max(ratio);
    }
    let last = t.len() - 1;
    let density: Vec<Value> = (0..t.len())
        .map(|i| {
            if i == 0 {
                (&(&samples[1].scale_real(4.0) - &samples[0].scale_real(3.0)) - &samples[2]).scale_real(0.5 / dt)
            } else if i == last {
                (&(&samples[last].scale_real(3.0) - &samples[last - 1].scale_real(4.0)) + &samples[last - 2]).scale_real(0.5 / dt)
            } else {
                (&samples[i + 1] - &samples[i - 1]).scale_real(0.5 / dt)
            }
        })
        .collect();
    let density_sup = density.iter().map(|v| p.eval_unchecked(v)).fold(0.0, f64::max);
    Ok(LipschitzRecovery {
        t: t.to_vec(),
        density,
        lipschitz_sup,
        m_p,
        density_sup,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Retransform {
    pub value: Value,
    /// `M_p e^(-(lambda-omega) T) / (lambda - omega)` for the part beyond the grid.
    pub tail_bound: f64,
}

/// `int_0^T e^(-(lambda - omega) t) density(t) dt` by composite Simpson
/// (a 3/8 panel closes an odd interval count).
pub fn retransform(rec: &LipschitzRecovery, lambda: f64, omega: f64) -> Result<Retransform> {
    let s = lambda - omega;
    if !(s > 0.0) {
        return Err(Error::AbscissaOutsideHalfplane {
            index: 0,
            abscissa: lambda,
            omega,
        });
    }
    let n = rec.t.len() - 1;
    let dt = rec.t[1] - rec.t[0];
    let g = |i: usize| rec.density[i].scale_real((-s * rec.t[i]).exp());
    let mut acc = Value::zeros(rec.density[0].dim());
    let simpson_end = if n % 2 == 0 { n } else { n - 3 };
    for i in 0..=simpson_end {
        let w = if i == 0 || i == simpson_end {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.axpy(C64::new(w * dt / 3.0, 0.0), &g(i));
    }
    if n % 2 == 1 {
        for (k, w) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            acc.axpy(C64::new(3.0 * dt / 8.0 * w, 0.0), &g(simpson_end + k));
        }
    }
    let big_t = rec.t[n];
    Ok(Retransform {
        value: acc,
        tail_bound: rec.m_p * (-s * big_t).exp() / s,
    })
}
