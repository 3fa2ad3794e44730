//! Acceptance criteria, one line per criterion.
//!
//! Runs without the libtest harness so that the summary is always printed.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use widder_core::calculus::{derivative_formula_check, mixed_derivative, Method};
use widder_core::catalog::{get, Catalog, ClosedFormPair, ExpPoly, Trig};
use widder_core::inversion::{extrapolate, invert, post_widder_1d};
use widder_core::kernels::{convolve_finite, kernel_eval, Convolvable};
use widder_core::lcs::Seminorm;
use widder_core::representations::{
    adf_identity_check, build_f_r, build_g_h, build_h_r, density_from_lipschitz, increment_sweep, retransform, verify_prc0, verify_prc0w,
    verify_prc1, FunctionalDensityFamily,
};
use widder_core::transform::{region_probe, RegionClass};
use widder_core::value::{Value, C64};
use widder_core::widder::{certify, default_grid, Verdict};
use widder_core::{Envelope, EnvelopedFunction};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn orders(n: usize, max_total: u32) -> Vec<Vec<u32>> {
    let side = max_total + 1;
    (0..side.pow(n as u32))
        .map(|k| (0..n).map(|i| (k / side.pow(i as u32)) % side).collect::<Vec<u32>>())
        .filter(|v| v.iter().sum::<u32>() <= max_total)
        .collect()
}

fn c1_semigroup() -> Outcome {
    let ab = [0.25, 0.5, 0.75, 1.0];
    let mut worst: f64 = 0.0;
    for &a in &ab {
        for &b in &ab {
            let ga = move |t: f64| re(kernel_eval(a, t).unwrap());
            let gb = move |t: f64| re(kernel_eval(b, t).unwrap());
            for i in 0..=29 {
                let t = 0.1 + i as f64 * 0.1;
                let v = convolve_finite(Convolvable::function(&ga, a), Convolvable::function(&gb, b), t, 1e-12).map_err(err)?;
                worst = worst.max((v.re - kernel_eval(a + b, t).unwrap()).abs());
            }
        }
    }
    ensure(worst <= 1e-8, format!("sup error {worst:.3e} > 1e-8"))?;
    Ok(format!("sup |g_a*g_b - g_(a+b)| = {worst:.2e}"))
}

fn c2_derivative_formula() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for e in Catalog::builtin().entries().iter().filter(|e| e.n <= 2) {
        for l in &e.sample_lambdas {
            for v in orders(e.n, 4) {
                let exact = mixed_derivative(&e.oracle, l, &v, Method::Auto).map_err(err)?;
                let tol = 1e-11 * exact.max_abs().max(1e-300);
                let c = derivative_formula_check(&e.density, &e.oracle, l, &v, tol).map_err(err)?;
                ensure(c.relative <= 1e-8, format!("{} at {l:?}, v={v:?}: relative {:.3e}", e.name, c.relative))?;
                worst = worst.max(c.relative);
                checks += 1;
            }
        }
    }
    Ok(format!("{checks} checks, max relative residual {worst:.2e}"))
}

fn c3_widder() -> Outcome {
    let mut lines = Vec::new();
    for e in Catalog::builtin().entries().iter().filter(|e| e.flags.unit_ratio) {
        let env = e.envelope().ok_or("unit-ratio entry without envelope")?;
        let rec = certify(&e.oracle, &env.omega, &default_grid(&env.omega), &vec![10; e.n], &env.family).map_err(err)?;
        let m = rec.m_hat[0];
        ensure(
            (1.0 - 1e-9..=1.0 + 1e-6).contains(&m) && rec.verdict == Verdict::CertifiedAtLevel,
            format!("{}: M_hat {m} verdict {:?}", e.name, rec.verdict),
        )?;
        lines.push(e.name.clone());
    }
    let g = get("monomial-g").map_err(err)?;
    let grid = vec![[1.0, 4.0, 16.0, 64.0].iter().map(|x| re(*x)).collect::<Vec<C64>>()];
    let rec = certify(&g.oracle, &[0.0], &grid, &[4], &widder_core::SeminormFamily::sup(1)).map_err(err)?;
    ensure(rec.verdict == Verdict::RefutedMonotoneGrowth, format!("lambda^(-1/2) verdict {:?}", rec.verdict))?;
    Ok(format!("M_hat = 1 on {}; lambda^(-1/2) refuted", lines.join(", ")))
}

fn c4_post_widder_exactness() -> Outcome {
    let one = ClosedFormPair::product(vec![ExpPoly::exp(0.0)]).map_err(err)?.oracle();
    let ramp = ClosedFormPair::product(vec![ExpPoly {
        coef: 1.0,
        power: 1.0,
        rate: 0.0,
        freq: 0.0,
        trig: Trig::None,
    }])
    .map_err(err)?
    .oracle();
    let (mut e1, mut e2): (f64, f64) = (0.0, 0.0);
    for k in 25..=400u32 {
        for t in [0.1, 0.5, 1.0, 3.7, 10.0] {
            e1 = e1.max((post_widder_1d(&one, t, k).map_err(err)? - 1.0).norm());
            let exact = t * (k as f64 + 1.0) / k as f64;
            e2 = e2.max((post_widder_1d(&ramp, t, k).map_err(err)? - exact).norm());
        }
    }
    ensure(e1 <= 1e-13, format!("1/lambda: {e1:.3e}"))?;
    ensure(e2 <= 1e-12, format!("1/lambda^2: {e2:.3e}"))?;
    Ok(format!("k = 25..400: |f_k - 1| <= {e1:.1e}, |f_k - t(k+1)/k| <= {e2:.1e}"))
}

fn c5_round_trip() -> Outcome {
    let decay = ClosedFormPair::product(vec![ExpPoly::exp(-1.0)]).map_err(err)?.oracle();
    let s: Vec<(u32, Value)> = [100u32, 200]
        .iter()
        .map(|&k| Ok((k, Value::scalar(post_widder_1d(&decay, 1.0, k)?))))
        .collect::<widder_core::Result<_>>()
        .map_err(err)?;
    let v = extrapolate(&s).map_err(err)?[0].re;
    let e1 = (v - (-1f64).exp()).abs();
    ensure(e1 <= 1e-5, format!("1D extrapolated {v}: error {e1:.3e}"))?;
    let decay2 = ClosedFormPair::product(vec![ExpPoly::exp(-1.0), ExpPoly::exp(-1.0)]).map_err(err)?.oracle();
    let s2: Vec<(u32, Value)> = [100u32, 200]
        .iter()
        .map(|&k| Ok((k, widder_core::post_widder_nd(&decay2, &[1.0, 1.0], &[k, k])?.value)))
        .collect::<widder_core::Result<_>>()
        .map_err(err)?;
    let v2 = extrapolate(&s2).map_err(err)?[0].re;
    let e2 = (v2 - (-2f64).exp()).abs();
    ensure(e2 <= 3e-5, format!("2D extrapolated {v2}: error {e2:.3e}"))?;
    let full = invert(&decay2, &[vec![1.0, 1.0]], 1e-6, 400);
    let e3 = (full.nodes[0].value[0].re - (-2f64).exp()).abs();
    ensure(e3 <= 3e-5, format!("2D ladder to 400: error {e3:.3e}"))?;
    Ok(format!("1D error {e1:.2e}, 2D error {e2:.2e} (ladder 100,200), {e3:.2e} (ladder to 400)"))
}

fn c6_representations() -> Outcome {
    let rs = [0.25, 0.5, 0.75, 1.0];
    let (mut prc1, mut adf): (f64, f64) = (0.0, 0.0);
    let mut count = 0;
    for e in Catalog::builtin().entries().iter().filter(|e| e.flags.widder_eligible && e.n <= 2) {
        let tuples: Vec<Vec<f64>> = if e.n == 1 {
            rs.iter().map(|r| vec![*r]).collect()
        } else {
            rs.iter().flat_map(|a| rs.iter().map(move |b| vec![*a, *b])).collect()
        };
        let t_grid: Vec<Vec<f64>> = if e.n == 1 {
            [0.3, 1.0, 2.2].iter().map(|t| vec![*t]).collect()
        } else {
            vec![vec![0.3, 1.1], vec![1.7, 0.6]]
        };
        let p = Seminorm::sup(e.d);
        let family = FunctionalDensityFamily::from_density(&e.density, &p).map_err(err)?;
        for r in tuples {
            let b = build_f_r(&e.density, &r).map_err(err)?;
            let rep = verify_prc1(&b, &e.oracle, &e.sample_lambdas, 1e-7).map_err(err)?;
            ensure(rep.passed, format!("prc1 {} r={r:?}: {:.3e}", e.name, rep.max_residual))?;
            let a = adf_identity_check(&b, &family, &t_grid, 1e-7).map_err(err)?;
            ensure(a.passed, format!("adf {} r={r:?}: {:.3e}", e.name, a.max_residual))?;
            prc1 = prc1.max(rep.max_residual);
            adf = adf.max(a.max_residual);
            count += 1;
        }
    }
    let mut eq: f64 = 0.0;
    for name in ["exp-1d", "exp-decay-1d", "exp-2d"] {
        let e = get(name).map_err(err)?;
        let env = e.envelope().unwrap();
        let grid: Vec<Vec<f64>> = if e.n == 1 {
            (0..=12).map(|i| vec![i as f64 * 0.25]).collect()
        } else {
            vec![vec![0.5, 0.5], vec![1.0, 2.0], vec![2.5, 0.25]]
        };
        let p = Seminorm::sup(1);
        for r in [0.25, 0.5, 1.0] {
            let rr = vec![r; e.n];
            let m0 = verify_prc0(&build_f_r(&e.density, &rr).map_err(err)?, &p, 1.0, &env.omega, &grid, 1e-9).map_err(err)?;
            let mw = verify_prc0w(&build_h_r(&e.density, &env.omega, &rr).map_err(err)?, &p, 1.0, &grid, 1e-9).map_err(err)?;
            let worst = m0.margins.iter().chain(&mw.margins).fold(0.0f64, |a, m| a.max(m.abs()));
            ensure(worst <= 1e-9, format!("equality margins {name} r={r}: {worst:.3e}"))?;
            eq = eq.max(worst);
        }
    }
    Ok(format!("{count} (entry, r) cases: prc1 {prc1:.2e}, adf {adf:.2e}; equality margins {eq:.2e}"))
}

fn c7_increments() -> Outcome {
    let p = Seminorm::sup(1);
    let one = get("one-1d").map_err(err)?;
    let mut out = Vec::new();
    for r in [0.25, 0.5, 0.75, 1.0] {
        let rep = increment_sweep(&build_g_h(&one.density, 0.0, r).map_err(err)?, &p, 1.0).map_err(err)?;
        ensure(rep.passed, format!("f = 1, r = {r}: {rep:?}"))?;
        ensure(rep.holder_sup <= rep.holder_constant, format!("Holder r = {r}: {} > {}", rep.holder_sup, rep.holder_constant))?;
        out.push(format!("r={r}: G {:.4} Holder {:.3}/{:.3}", rep.g_ratio, rep.holder_sup, rep.holder_constant));
    }
    for name in ["exp-1d", "damped-cos-1d"] {
        let e = get(name).map_err(err)?;
        let env = e.envelope().unwrap();
        let rep = increment_sweep(&build_g_h(&e.density, env.omega[0], 0.5).map_err(err)?, &p, env.m[0]).map_err(err)?;
        ensure(rep.passed, format!("{name}: {rep:?}"))?;
    }
    Ok(out.join("; "))
}

fn c8_lipschitz() -> Outcome {
    let p = Seminorm::sup(1);
    let t: Vec<f64> = (0..=20_000).map(|i| i as f64 * 1e-3).collect();
    let h1: Vec<Value> = t.iter().map(|x| Value::real(&[-(-x).exp_m1()])).collect();
    let rec = density_from_lipschitz(&h1, &t, &p, 1.0).map_err(err)?;
    let sup_err = rec.t.iter().zip(&rec.density).map(|(ti, v)| (v[0].re - (-ti).exp()).abs()).fold(0.0, f64::max);
    ensure(sup_err <= 1e-4, format!("density sup error {sup_err:.3e}"))?;
    let mut worst: f64 = 0.0;
    for l in [0.5, 1.0, 2.0, 5.0] {
        let back = retransform(&rec, l, 0.0).map_err(err)?;
        let e = (back.value[0].re - 1.0 / (l + 1.0)).abs();
        ensure(e <= 1e-6, format!("retransform at {l}: {e:.3e}"))?;
        worst = worst.max(e);
    }
    let root: Vec<Value> = t.iter().map(|x| Value::real(&[x.sqrt()])).collect();
    let rejected = matches!(density_from_lipschitz(&root, &t, &p, 1.0), Err(widder_core::Error::NotLipschitzAtLevel { .. }));
    ensure(rejected, "sqrt(t) was not rejected")?;
    Ok(format!("density error {sup_err:.2e}, transform error {worst:.2e}, sqrt(t) rejected"))
}

fn c9_region_probes() -> Outcome {
    let d = get("dirichlet-osc").map_err(err)?;
    let sched = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
    let c = region_probe(&d.density, &[re(0.5)], &sched).map_err(err)?.class;
    ensure(c.is_convergent() && c != RegionClass::Absolute, format!("dirichlet at 0.5: {c:?}"))?;
    let f = EnvelopedFunction::exp(&[1.0, 1.0], 1).with_envelope(Envelope::sup(1, 1.0, vec![1.0, 1.0])).map_err(err)?;
    let sched = [1.0, 2.0, 4.0, 8.0, 16.0];
    let a = region_probe(&f, &[re(2.0), re(2.0)], &sched).map_err(err)?.class;
    ensure(a == RegionClass::Absolute, format!("e^(t1+t2) at (2,2): {a:?}"))?;
    let dv = region_probe(&f, &[re(0.5), re(0.5)], &sched).map_err(err)?.class;
    ensure(dv == RegionClass::DivergenceEvidence, format!("e^(t1+t2) at (0.5,0.5): {dv:?}"))?;
    Ok(format!("dirichlet(0.5) {c:?}; exp2d(2,2) {a:?}; exp2d(0.5,0.5) {dv:?}"))
}

fn run(name: &str, limit: Option<Duration>, f: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let dt = start.elapsed();
    let res = match (res, limit) {
        (Ok(_), Some(l)) if dt > l => Err(format!("runtime {dt:.2?} exceeds {l:?}")),
        (r, _) => r,
    };
    let ok = res.is_ok();
    let detail = res.unwrap_or_else(|e| e);
    println!("{} {name} [{dt:.2?}]: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() {
    let start = Instant::now();
    let s = Duration::from_secs;
    let criteria: [(&str, Option<Duration>, fn() -> Outcome); 9] = [
        ("criterion 1 (kernel semigroup)", Some(s(10)), c1_semigroup),
        ("criterion 2 (derivative formula)", Some(s(60)), c2_derivative_formula),
        ("criterion 3 (Widder certification)", Some(s(30)), c3_widder),
        ("criterion 4 (Post-Widder exactness)", None, c4_post_widder_exactness),
        ("criterion 5 (round trip with extrapolation)", Some(s(60)), c5_round_trip),
        ("criterion 6 (representation identities)", Some(s(300)), c6_representations),
        ("criterion 7 (increment bounds)", None, c7_increments),
        ("criterion 8 (Lipschitz recovery)", None, c8_lipschitz),
        ("criterion 9 (region probes)", None, c9_region_probes),
    ];
    let mut all = true;
    for (name, limit, f) in criteria {
        all &= run(name, limit, f);
    }
    let total = start.elapsed();
    let ok10 = total < s(600);
    println!(
        "{} criterion 10 (wall clock) [{total:.2?}]: acceptance run {} the 10 minute budget",
        if ok10 { "PASS" } else { "FAIL" },
        if ok10 { "within" } else { "exceeds" }
    );
    all &= ok10;
    if !all {
        std::process::exit(1);
    }
}
