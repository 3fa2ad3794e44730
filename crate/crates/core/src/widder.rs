//! Growth certificates for transforms:
//! `p(F^(v)(lambda)) <= M_p prod v_i! / prod (Re lambda_i - omega_i)^(v_i+1)`.
//!
//! A sweep over a finite grid of points and orders can only support the bound
//! at the grid level, and the verdicts say so. Refutation is heuristic: the
//! normalized ratio growing by a factor of at least 1.5 over three consecutive
//! steps along a ray of increasing `Re lambda_i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{normalized_derivative, Method, TransformOracle};
use crate::error::{check_dim, Error, Result};
use crate::function::EnvelopedFunction;
use crate::lcs::{Seminorm, SeminormFamily};
use crate::value::C64;

pub const DEFAULT_OFFSETS: [f64; 7] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
pub const REFUTATION_FACTOR: f64 = 1.5;
pub const REFUTATION_STEPS: usize = 3;
const ENVELOPE_SLACK: f64 = 1e-9;

/// `p(F^(v)(lambda)) prod (Re lambda_i - omega_i)^(v_i+1) / prod v_i!`.
pub fn widder_ratio(f: &TransformOracle, omega: &[f64], lambda: &[C64], v: &[u32], p: &Seminorm) -> Result<f64> {
    widder_ratio_with(f, omega, lambda, v, p, Method::Auto)
}

pub fn widder_ratio_with(f: &TransformOracle, omega: &[f64], lambda: &[C64], v: &[u32], p: &Seminorm, method: Method) -> Result<f64> {
    check_dim(f.n(), omega.len())?;
    check_dim(f.n(), lambda.len())?;
    check_dim(f.d(), p.dim())?;
    let anchors = anchors(omega, lambda)?;
    let s = normalized_derivative(f, lambda, v, &anchors, method)?;
    Ok(s.homogeneous(|x| p.eval_unchecked(x)))
}

fn anchors(omega: &[f64], lambda: &[C64]) -> Result<Vec<f64>> {
    lambda
        .iter()
        .zip(omega)
        .enumerate()
        .map(|(index, (l, &w))| {
            if l.re > w {
                Ok(l.re - w)
            } else {
                Err(Error::AbscissaOutsideHalfplane {
                    index,
                    abscissa: l.re,
                    omega: w,
                })
            }
        })
        .collect()
}

/// `lambda_i in omega_i + {0.25, 0.5, 1, 2, 4, 8, 16}`.
pub fn default_grid(omega: &[f64]) -> Vec<Vec<C64>> {
    omega
        .iter()
        .map(|&w| DEFAULT_OFFSETS.iter().map(|o| C64::new(w + o, 0.0)).collect())
        .collect()
}

/// 10 per coordinate with a closed form, 6 for the Cauchy rule.
pub fn default_vmax(f: &TransformOracle) -> Vec<u32> {
    vec![if f.has_closed_form() { 10 } else { 6 }; f.n()]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedAtLevel,
    RefutedMonotoneGrowth,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Argmax {
    pub lambda: Vec<C64>,
    pub v: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refutation {
    pub seminorm: usize,
    pub v: Vec<u32>,
    pub coordinate: usize,
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    /// Per-coordinate abscissae; the grid is their tensor product.
    pub grid: Vec<Vec<C64>>,
    pub v_max: Vec<u32>,
    pub omega: Vec<f64>,
    /// Per seminorm, the largest ratio on the grid.
    pub m_hat: Vec<f64>,
    pub argmax: Vec<Argmax>,
    pub verdict: Verdict,
    /// Human readable statement of what was checked.
    pub level: String,
    pub refutation: Option<Refutation>,
    pub evaluations: usize,
}

fn unflatten(mut idx: usize, sizes: &[usize]) -> Vec<usize> {
    // first coordinate most significant
    let mut out = vec![0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        out[i] = idx % sizes[i];
        idx /= sizes[i];
    }
    out
}

fn flatten(ix: &[usize], sizes: &[usize]) -> usize {
    ix.iter().zip(sizes).fold(0, |acc, (i, s)| acc * s + i)
}

/// Sweep the tensor grid times all orders `0 <= v <= v_max`.
pub fn certify(f: &TransformOracle, omega: &[f64], grid: &[Vec<C64>], v_max: &[u32], family: &SeminormFamily) -> Result<CertificateRecord> {
    certify_with(f, omega, grid, v_max, family, Method::Auto)
}

/// [`certify`] on a grid with off-axis points; the ratio uses `Re lambda_i - omega_i`.
pub fn halfplane_extension_check(
    f: &TransformOracle,
    omega: &[f64],
    complex_grid: &[Vec<C64>],
    v_max: &[u32],
    family: &SeminormFamily,
) -> Result<CertificateRecord> {
    certify_with(f, omega, complex_grid, v_max, family, Method::Auto)
}

pub fn certify_with(
    f: &TransformOracle,
    omega: &[f64],
    grid: &[Vec<C64>],
    v_max: &[u32],
    family: &SeminormFamily,
    method: Method,
) -> Result<CertificateRecord> {
    let n = f.n();
    check_dim(n, omega.len())?;
    check_dim(n, grid.len())?;
    check_dim(n, v_max.len())?;
    check_dim(f.d(), family.dim())?;
    if grid.iter().any(|g| g.is_empty()) {
        return Err(Error::InvalidInput("every grid coordinate needs at least one point".into()));
    }
    for (i, g) in grid.iter().enumerate() {
        for l in g {
            if l.re <= omega[i] {
                return Err(Error::AbscissaOutsideHalfplane {
                    index: i,
                    abscissa: l.re,
                    omega: omega[i],
                });
            }
        }
    }
    let gsizes: Vec<usize> = grid.iter().map(|g| g.len()).collect();
    let vsizes: Vec<usize> = v_max.iter().map(|&v| v as usize + 1).collect();
    let npoints: usize = gsizes.iter().product();
    let norders: usize = vsizes.iter().product();
    let np = family.len();

    // ratios[point][order][seminorm]
    let ratios: Vec<Result<Vec<Vec<f64>>>> = (0..npoints)
        .into_par_iter()
        .map(|pi| {
            let ix = unflatten(pi, &gsizes);
            let lambda: Vec<C64> = ix.iter().enumerate().map(|(i, &k)| grid[i][k]).collect();
            let anchors = anchors(omega, &lambda)?;
            (0..norders)
                .map(|oi| {
                    let v: Vec<u32> = unflatten(oi, &vsizes).iter().map(|&x| x as u32).collect();
                    let s = normalized_derivative(f, &lambda, &v, &anchors, method)?;
                    Ok(family.seminorms().iter().map(|p| s.homogeneous(|x| p.eval_unchecked(x))).collect())
                })
                .collect()
        })
        .collect();
    let ratios: Vec<Vec<Vec<f64>>> = ratios.into_iter().collect::<Result<_>>()?;

    let mut m_hat = vec![0.0f64; np];
    let mut arg = vec![(0usize, 0usize); np];
    let mut finite = true;
    for (pi, per_point) in ratios.iter().enumerate() {
        for (oi, per_order) in per_point.iter().enumerate() {
            for (j, &r) in per_order.iter().enumerate() {
                if !r.is_finite() {
                    finite = false;
                } else if r > m_hat[j] {
                    m_hat[j] = r;
                    arg[j] = (pi, oi);
                }
            }
        }
    }
    let argmax = arg
        .iter()
        .map(|&(pi, oi)| Argmax {
            lambda: unflatten(pi, &gsizes).iter().enumerate().map(|(i, &k)| grid[i][k]).collect(),
            v: unflatten(oi, &vsizes).iter().map(|&x| x as u32).collect(),
        })
        .collect();

    let refutation = if finite { find_refutation(&ratios, grid, &gsizes, &vsizes, np) } else { None };
    let verdict = if !finite {
        Verdict::Inconclusive
    } else if refutation.is_some() {
        Verdict::RefutedMonotoneGrowth
    } else {
        Verdict::CertifiedAtLevel
    };
    let level = format!(
        "grid of {} point(s) ({}), orders 0..={:?}, {} seminorm(s)",
        npoints,
        gsizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x"),
        v_max,
        np
    );
    Ok(CertificateRecord {
        grid: grid.to_vec(),
        v_max: v_max.to_vec(),
        omega: omega.to_vec(),
        m_hat,
        argmax,
        verdict,
        level,
        refutation,
        evaluations: npoints * norders,
    })
}

fn find_refutation(ratios: &[Vec<Vec<f64>>], grid: &[Vec<C64>], gsizes: &[usize], vsizes: &[usize], np: usize) -> Option<Refutation> {
    let n = gsizes.len();
    let norders: usize = vsizes.iter().product();
    let npoints: usize = gsizes.iter().product();
    for j in 0..np {
        for oi in 0..norders {
            for i in 0..n {
                if gsizes[i] < REFUTATION_STEPS + 1 {
                    continue;
                }
                let mut order: Vec<usize> = (0..gsizes[i]).collect();
                order.sort_by(|&a, &b| grid[i][a].re.total_cmp(&grid[i][b].re));
                // every ray along coordinate i starts at a point whose i-th index is 0
                for start in 0..npoints {
                    let base = unflatten(start, gsizes);
                    if base[i] != 0 {
                        continue;
                    }
                    let ray: Vec<f64> = order
                        .iter()
                        .map(|&k| {
                            let mut ix = base.clone();
                            ix[i] = k;
                            ratios[flatten(&ix, gsizes)][oi][j]
                        })
                        .collect();
                    let grows = ray.windows(REFUTATION_STEPS + 1).any(|w| {
                        w[0] > 0.0 && w.windows(2).all(|s| s[1] >= REFUTATION_FACTOR * s[0])
                    });
                    if grows {
                        return Some(Refutation {
                            seminorm: j,
                            v: unflatten(oi, vsizes).iter().map(|&x| x as u32).collect(),
                            coordinate: i,
                            ratios: ray,
                        });
                    }
                }
            }
        }
    }
    None
}

/// `sup_t p(f(t)) e^(-omega . t)` over the grid.
pub fn envelope_check(f: &EnvelopedFunction, omega: &[f64], p: &Seminorm, t_grid: &[Vec<f64>]) -> Result<f64> {
    check_dim(f.n(), omega.len())?;
    check_dim(f.d(), p.dim())?;
    let mut sup = 0.0f64;
    for t in t_grid {
        check_dim(f.n(), t.len())?;
        if t.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidInput(format!("time grid point {t:?} has a negative coordinate")));
        }
        let s: f64 = t.iter().zip(omega).map(|(ti, wi)| ti * wi).sum();
        let val = p.eval_unchecked(&f.eval(t)) * (-s).exp();
        sup = if val.is_nan() { f64::NAN } else { sup.max(val) };
    }
    Ok(sup)
}

/// Check the declared envelope on the grid and mark it verified when every
/// seminorm stays within `M_p (1 + 1e-9)`. Returns the measured sups.
pub fn verify_envelope(f: &mut EnvelopedFunction, t_grid: &[Vec<f64>]) -> Result<Vec<f64>> {
    let env = f
        .envelope()
        .cloned()
        .ok_or_else(|| Error::InvalidInput("function has no declared envelope".into()))?;
    let measured: Vec<f64> = env
        .family
        .seminorms()
        .iter()
        .map(|p| envelope_check(f, &env.omega, p, t_grid))
        .collect::<Result<_>>()?;
    let ok = measured.iter().zip(&env.m).all(|(s, m)| *s <= m * (1.0 + ENVELOPE_SLACK));
    if let Some(e) = f.envelope_mut() {
        e.verified = ok;
    }
    Ok(measured)
}

/// Tensor grid `{0, h, ..., t_max}^n`.
pub fn time_grid(n: usize, t_max: f64, steps: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..=steps).map(|k| t_max * k as f64 / steps as f64).collect();
    let sizes = vec![axis.len(); n];
    let total: usize = sizes.iter().product();
    (0..total)
        .map(|idx| unflatten(idx, &sizes).iter().map(|&k| axis[k]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{Scaled, ScaledScalar, Value};
    use std::sync::Arc;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    /// `lambda^(-alpha)` with closed-form normalized derivatives.
    fn power(alpha: f64) -> TransformOracle {
        TransformOracle::new(1, 1, Arc::new(move |l| Value::scalar((-alpha * l[0].ln()).exp())))
            .with_derivative(Arc::new(move |l, v, a| {
                let w = re(a[0]) / l[0];
                let lr = crate::special::ln_rising_over_factorial(alpha, v[0]);
                let sign = if v[0] % 2 == 0 { 1.0 } else { -1.0 };
                let s = ScaledScalar::new(
                    lr + (v[0] as f64 + 1.0) * w.norm().ln() + (1.0 - alpha) * l[0].norm().ln(),
                    C64::from_polar(sign, (v[0] as f64 + 1.0) * w.arg() + (1.0 - alpha) * l[0].arg()),
                );
                Scaled::combine(1, &[(Value::real(&[1.0]), s)])
            }))
            .with_halfplane(vec![0.0])
    }

    fn pole(p: f64) -> TransformOracle {
        power(1.0).shifted(&[-p]).unwrap()
    }

    #[test]
    fn ratio_examples() {
        let p = Seminorm::sup(1);
        for l in [2.5, 3.0, 7.0] {
            for v in [0, 3, 10] {
                assert!((widder_ratio(&pole(2.0), &[2.0], &[re(l)], &[v], &p).unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert!((widder_ratio(&power(0.5), &[0.0], &[re(4.0)], &[0], &p).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(widder_ratio(&TransformOracle::zero(1, 1), &[0.0], &[re(1.0)], &[4], &p).unwrap(), 0.0);
        let e = widder_ratio(&pole(2.0), &[2.0], &[re(1.5)], &[0], &p).unwrap_err();
        assert_eq!(e.code(), "abscissa-outside-halfplane");
    }

    #[test]
    fn certify_examples() {
        let fam = SeminormFamily::sup(1);
        let grid = vec![vec![re(2.5), re(3.0), re(5.0), re(10.0)]];
        let rec = certify(&pole(2.0), &[2.0], &grid, &[10], &fam).unwrap();
        assert_eq!(rec.verdict, Verdict::CertifiedAtLevel);
        assert!((rec.m_hat[0] - 1.0).abs() < 1e-12);
        let grid = vec![vec![re(1.0), re(4.0), re(16.0), re(64.0)]];
        let rec = certify(&power(0.5), &[0.0], &grid, &[4], &fam).unwrap();
        assert_eq!(rec.verdict, Verdict::RefutedMonotoneGrowth);
        assert_eq!(rec.refutation.unwrap().v, vec![0]);
    }

    #[test]
    fn off_axis_ratio() {
        let fam = SeminormFamily::sup(1);
        let rec = halfplane_extension_check(&pole(2.0), &[2.0], &[vec![C64::new(3.0, 4.0)]], &[2], &fam).unwrap();
        let r = widder_ratio(&pole(2.0), &[2.0], &[C64::new(3.0, 4.0)], &[2], &Seminorm::sup(1)).unwrap();
        assert!((r - 17f64.powf(-1.5)).abs() < 1e-15);
        assert!((rec.m_hat[0] - 17f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(rec.argmax[0].v, vec![0]);
        let real = certify(&pole(2.0), &[2.0], &[vec![re(3.0), re(5.0)]], &[4], &fam).unwrap();
        let ext = halfplane_extension_check(&pole(2.0), &[2.0], &[vec![re(3.0), re(5.0)]], &[4], &fam).unwrap();
        assert_eq!(real, ext);
    }

    #[test]
    fn envelope_examples() {
        let p = Seminorm::sup(1);
        let f = EnvelopedFunction::exp(&[0.5, -1.0], 1);
        let g = time_grid(2, 4.0, 8);
        assert!((envelope_check(&f, &[0.5, -1.0], &p, &g).unwrap() - 1.0).abs() < 1e-14);
        let z = EnvelopedFunction::zero(2, 1);
        assert_eq!(envelope_check(&z, &[0.0, 0.0], &p, &g).unwrap(), 0.0);
        let mut f = EnvelopedFunction::exp(&[0.5], 1);
        verify_envelope(&mut f, &time_grid(1, 10.0, 100)).unwrap();
        assert!(f.envelope().unwrap().verified);
    }
}
