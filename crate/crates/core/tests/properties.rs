//! Cross-module invariants checked against the catalog fixtures.

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use widder_core::catalog::{get, Catalog, ClosedFormPair, ExpPoly};
use widder_core::function::{EnvelopedFunction, Factor, Tail, Term};
use widder_core::inversion::{post_widder_1d, post_widder_nd};
use widder_core::kernels::{convolve_finite, Convolvable};
use widder_core::lcs::Seminorm;
use widder_core::representations::{build_f_r, verify_prc1};
use widder_core::transform::{laplace_forward, region_probe, RegionClass};
use widder_core::value::{Value, C64};
use widder_core::widder::{widder_ratio, widder_ratio_with};
use widder_core::Method;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[test]
fn closed_forms_match_transform_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for e in Catalog::builtin().entries() {
        let mut floor: Vec<f64> = e.oracle.halfplane().unwrap().to_vec();
        if let Some(env) = e.envelope() {
            floor.iter_mut().zip(&env.omega).for_each(|(f, w)| *f = f.max(*w));
        }
        for _ in 0..3 {
            let l: Vec<C64> = floor
                .iter()
                .map(|w| {
                    let lo = if e.flags.conditional_convergence_only { 3.0 } else { w.max(0.0) + 0.5 };
                    C64::new(lo + rng.random_range(0.0..3.0), rng.random_range(-1.0..1.0))
                })
                .collect();
            let exact = e.oracle.eval(&l).unwrap();
            let num = laplace_forward(&e.density, &l, 1e-11).unwrap().value;
            assert!((&exact - &num).max_abs() <= 1e-8, "{} at {l:?}", e.name);
        }
    }
}

#[test]
fn widder_shift_covariance() {
    for name in ["exp-1d", "damped-cos-1d", "exp-2d", "exp-stack-2d", "ramp-1d"] {
        let e = get(name).unwrap();
        let omega = &e.envelope().unwrap().omega;
        let p = Seminorm::sup(e.d);
        for c in [-0.75, 0.5, 2.0] {
            let shift = vec![c; e.n];
            let g = e.oracle.shifted(&shift).unwrap();
            let w2: Vec<f64> = omega.iter().map(|w| w - c).collect();
            for l in &e.sample_lambdas {
                let l2: Vec<C64> = l.iter().map(|x| x - c).collect();
                for v in [0u32, 1, 3, 7] {
                    let vv = vec![v; e.n];
                    let a = widder_ratio(&e.oracle, omega, l, &vv, &p).unwrap();
                    let b = widder_ratio(&g, &w2, &l2, &vv, &p).unwrap();
                    assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{name} c={c} v={v}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn unit_ratio_on_both_derivative_paths() {
    let e = get("exp-2d").unwrap();
    let p = Seminorm::sup(1);
    let omega = [1.0, 2.0];
    for l in [[1.25, 2.5], [3.0, 6.0], [17.0, 3.0]] {
        let l: Vec<C64> = l.iter().map(|x| re(*x)).collect();
        for v in [[0, 0], [1, 3], [6, 6], [10, 2]] {
            let r = widder_ratio(&e.oracle, &omega, &l, &v, &p).unwrap();
            assert!((r - 1.0).abs() <= 1e-12);
            if v.iter().all(|x| *x <= 6) {
                let rc = widder_ratio_with(&e.oracle, &omega, &l, &v, &p, Method::Cauchy).unwrap();
                assert!((rc - 1.0).abs() <= 1e-9, "{l:?} {v:?}: {rc}");
            }
        }
    }
}

#[test]
fn post_widder_nd_matches_products_of_1d() {
    let a = ClosedFormPair::product(vec![ExpPoly::exp(-1.0)]).unwrap().oracle();
    let b = ClosedFormPair::product(vec![ExpPoly::exp(0.5)]).unwrap().oracle();
    let ab = ClosedFormPair::product(vec![ExpPoly::exp(-1.0), ExpPoly::exp(0.5)]).unwrap().oracle();
    for (t1, t2) in [(0.5, 1.0), (1.0, 3.0), (2.5, 0.2)] {
        for (k1, k2) in [(25, 25), (50, 200), (400, 100)] {
            let prod = post_widder_1d(&a, t1, k1).unwrap() * post_widder_1d(&b, t2, k2).unwrap();
            let nd = post_widder_nd(&ab, &[t1, t2], &[k1, k2]).unwrap().value[0];
            assert!((prod - nd).norm() <= 1e-12 * prod.norm());
        }
    }
}

#[test]
fn post_widder_dominated_bound() {
    for e in Catalog::builtin().entries().iter().filter(|e| e.flags.widder_eligible) {
        let env = e.envelope().unwrap();
        let p = &env.family.seminorms()[0];
        for t in [0.25, 1.0, 3.0] {
            for k in [25u32, 100, 400] {
                if env.omega.iter().any(|w| (k as f64) <= w * t) || e.oracle.halfplane().unwrap().iter().any(|w| k as f64 / t <= *w) {
                    continue;
                }
                let tt = vec![t; e.n];
                let kk = vec![k; e.n];
                let fk = post_widder_nd(&e.oracle, &tt, &kk).unwrap().value;
                let bound: f64 = env.m[0]
                    * env
                        .omega
                        .iter()
                        .map(|w| (1.0 - w * t / k as f64).powf(-(k as f64 + 1.0)))
                        .product::<f64>();
                assert!(p.eval(&fk).unwrap() <= bound * (1.0 + 1e-12), "{} t={t} k={k}", e.name);
            }
        }
    }
}

fn convolved(a: ExpPoly, b: ExpPoly) -> Factor {
    let eval = Arc::new(move |t: f64| {
        let fa = move |s: f64| re(a.eval(s));
        let fb = move |s: f64| re(b.eval(s));
        convolve_finite(Convolvable::function(&fa, a.power + 1.0), Convolvable::function(&fb, b.power + 1.0), t, 1e-13).unwrap()
    });
    // |a *0 b|(t) <= |c_a c_b| t e^(max(rate_a, rate_b) t) for power-0 atoms
    Factor::new(eval, 2.0, Some(Tail::new((a.coef * b.coef).abs(), 1.0, a.rate.max(b.rate))))
}

#[test]
fn convolution_theorem_1d_and_2d() {
    let a = ExpPoly::exp(-1.0);
    let b = get("damped-cos-1d").unwrap().pair.clone().unwrap().terms[0].atoms[0];
    let la = ClosedFormPair::product(vec![a]).unwrap().oracle();
    let lb = ClosedFormPair::product(vec![b]).unwrap().oracle();
    let f1 = EnvelopedFunction::from_terms(1, 1, vec![Term::new(Value::real(&[1.0]), vec![convolved(a, b)])]).unwrap();
    for l in [0.5, 1.5, 3.0] {
        let lhs = laplace_forward(&f1, &[re(l)], 1e-11).unwrap().value[0];
        let rhs = la.eval(&[re(l)]).unwrap()[0] * lb.eval(&[re(l)]).unwrap()[0];
        assert!((lhs - rhs).norm() < 1e-9, "1D at {l}: {lhs} vs {rhs}");
    }
    let c = ExpPoly::exp(0.5);
    let lc = ClosedFormPair::product(vec![c]).unwrap().oracle();
    let f2 = EnvelopedFunction::from_terms(2, 1, vec![Term::new(Value::real(&[1.0]), vec![convolved(a, b), convolved(c, a)])]).unwrap();
    for l in [[0.5, 1.0], [2.0, 3.0]] {
        let lhs = laplace_forward(&f2, &[re(l[0]), re(l[1])], 1e-11).unwrap().value[0];
        let rhs = la.eval(&[re(l[0])]).unwrap()[0] * lb.eval(&[re(l[0])]).unwrap()[0] * lc.eval(&[re(l[1])]).unwrap()[0] * la.eval(&[re(l[1])]).unwrap()[0];
        assert!((lhs - rhs).norm() < 1e-9, "2D at {l:?}: {lhs} vs {rhs}");
    }
}

#[test]
fn absolute_classification_is_monotone_in_lambda() {
    let d = get("dirichlet-osc").unwrap();
    let sched = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
    let mut seen_absolute = false;
    for l in [0.5, 1.5, 3.0, 4.0, 6.0] {
        let c = region_probe(&d.density, &[re(l)], &sched).unwrap().class;
        if seen_absolute {
            assert_eq!(c, RegionClass::Absolute, "lost absolute convergence at {l}");
        }
        seen_absolute |= c == RegionClass::Absolute;
    }
    assert!(seen_absolute);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn prc1_round_trip_on_random_orders(ix in 0usize..6, r1 in 0.05f64..=1.0, r2 in 0.05f64..=1.0) {
        let names = ["exp-1d", "exp-decay-1d", "ramp-1d", "damped-cos-1d", "exp-2d", "exp-cos-2d"];
        let e = get(names[ix]).unwrap();
        let r: Vec<f64> = [r1, r2][..e.n].to_vec();
        let b = build_f_r(&e.density, &r).unwrap();
        let rep = verify_prc1(&b, &e.oracle, &e.sample_lambdas[..1], 1e-7).unwrap();
        prop_assert!(rep.passed, "{} r={:?}: {}", e.name, r, rep.max_residual);
    }

    #[test]
    fn widder_ratio_bounded_by_envelope(ix in 0usize..4, off in 0.05f64..20.0, v in 0u32..40) {
        let names = ["exp-1d", "ramp-1d", "damped-cos-1d", "exp-decay-1d"];
        let e = get(names[ix]).unwrap();
        let env = e.envelope().unwrap();
        let l = vec![re(env.omega[0] + off)];
        let r = widder_ratio(&e.oracle, &env.omega, &l, &[v], &Seminorm::sup(1)).unwrap();
        prop_assert!(r <= env.m[0] * (1.0 + 1e-12), "{} at {off}, v={v}: {r}", e.name);
    }
}
