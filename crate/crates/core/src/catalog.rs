//! Closed-form transform pairs used as ground truth.
//!
//! Most fixtures are tensor sums of exponential polynomials
//! `c t^a e^(b t) {1, cos(w t), sin(w t)}` per coordinate. Each atom is a sum
//! of pole terms `A (lambda - p)^(-alpha)`, which gives closed forms for the
//! transform and for every mixed derivative.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::calculus::{mixed_derivative, Method, TransformOracle};
use crate::error::{check_dim, Error, Result};
use crate::function::{Envelope, EnvelopedFunction, Factor, Tail, Term};
use crate::lcs::SeminormFamily;
use crate::quad::{integrate_with_breaks, QuadOptions};
use crate::special::{gamma, ln_factorial, ln_rising_over_factorial};
use crate::transform::geometric_breaks;
use crate::value::{Scaled, ScaledScalar, Value, C64};
use crate::widder::{time_grid, verify_envelope};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trig {
    #[default]
    None,
    Cos,
    Sin,
}

fn one() -> f64 {
    1.0
}

/// `coef * t^power * e^(rate t) * trig(freq t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpPoly {
    #[serde(default = "one")]
    pub coef: f64,
    #[serde(default)]
    pub power: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default)]
    pub freq: f64,
    #[serde(default)]
    pub trig: Trig,
}

impl ExpPoly {
    pub fn exp(rate: f64) -> Self {
        ExpPoly {
            coef: 1.0,
            power: 0.0,
            rate,
            freq: 0.0,
            trig: Trig::None,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.coef, self.power, self.rate, self.freq].iter().all(|x| x.is_finite());
        if !finite || self.power <= -1.0 {
            return Err(Error::InvalidInput(format!(
                "atom {self:?} needs finite parameters and power > -1"
            )));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let base = if self.power == 0.0 { 1.0 } else { t.powf(self.power) };
        let tr = match self.trig {
            Trig::None => 1.0,
            Trig::Cos => (self.freq * t).cos(),
            Trig::Sin => (self.freq * t).sin(),
        };
        self.coef * base * (self.rate * t).exp() * tr
    }

    pub fn factor(&self) -> Factor {
        let me = *self;
        Factor::new(
            Arc::new(move |t| C64::new(me.eval(t), 0.0)),
            self.power + 1.0,
            Some(Tail::new(self.coef.abs(), self.power, self.rate)),
        )
    }

    /// Pole expansion of the transform.
    pub fn poles(&self) -> Vec<PoleTerm> {
        if self.coef == 0.0 {
            return vec![];
        }
        let alpha = self.power + 1.0;
        let g = self.coef * gamma(alpha);
        let up = C64::new(self.rate, self.freq);
        let down = C64::new(self.rate, -self.freq);
        match self.trig {
            Trig::None => vec![PoleTerm::new(C64::new(g, 0.0), C64::new(self.rate, 0.0), alpha)],
            Trig::Cos => vec![PoleTerm::new(C64::new(0.5 * g, 0.0), up, alpha), PoleTerm::new(C64::new(0.5 * g, 0.0), down, alpha)],
            Trig::Sin => vec![PoleTerm::new(C64::new(0.0, -0.5 * g), up, alpha), PoleTerm::new(C64::new(0.0, 0.5 * g), down, alpha)],
        }
    }

    /// `(M, omega)` with `|atom(t)| <= M e^(omega t)`, or `None` if unbounded at 0.
    pub fn envelope(&self) -> Option<(f64, f64)> {
        if self.power < 0.0 {
            return None;
        }
        if self.power == 0.0 {
            return Some((self.coef.abs(), self.rate));
        }
        // sup_t t^a e^(-t) = (a/e)^a
        let a = self.power;
        Some((self.coef.abs() * (a / std::f64::consts::E).powf(a), self.rate + 1.0))
    }
}

/// `amp * (lambda - pole)^(-alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleTerm {
    pub amp: C64,
    pub pole: C64,
    pub alpha: f64,
}

impl PoleTerm {
    pub fn new(amp: C64, pole: C64, alpha: f64) -> Self {
        PoleTerm { amp, pole, alpha }
    }

    pub fn eval(&self, lambda: C64) -> C64 {
        let z = lambda - self.pole;
        if self.alpha == 1.0 {
            return self.amp / z;
        }
        self.amp * (-self.alpha * z.ln()).exp()
    }

    /// `d^v/dlambda^v [amp (lambda-p)^(-alpha)] * a^(v+1) / v!`
    /// `= (-1)^v amp (alpha)_v / v! * (a / (lambda-p))^(v+1) * (lambda-p)^(1-alpha)`.
    pub fn normalized(&self, lambda: C64, v: u32, anchor: f64) -> ScaledScalar {
        let z = lambda - self.pole;
        let w = C64::new(anchor, 0.0) / z;
        let wn = w.norm();
        let ln_w = if (0.5..=2.0).contains(&wn) { (wn - 1.0).ln_1p() } else { wn.ln() };
        let k = v as f64 + 1.0;
        let mut log = ln_rising_over_factorial(self.alpha, v) + k * ln_w;
        let mut phase = k * w.arg();
        if self.alpha != 1.0 {
            log += (1.0 - self.alpha) * z.norm().ln();
            phase += (1.0 - self.alpha) * z.arg();
        }
        let sign = if v % 2 == 0 { 1.0 } else { -1.0 };
        let unit = if phase == 0.0 { C64::new(sign, 0.0) } else { C64::from_polar(sign, phase) };
        let an = self.amp.norm();
        ScaledScalar::new(log + an.ln(), unit * (self.amp / an))
    }
}

/// One tensor term of a closed-form pair: `coef (in C^d) * prod_i atoms[i](t_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairTerm {
    pub coef: Vec<f64>,
    pub atoms: Vec<ExpPoly>,
}

/// A density given as a sum of tensor exponential polynomials, together with
/// its exact transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormPair {
    pub n: usize,
    pub d: usize,
    pub terms: Vec<PairTerm>,
}

struct PoleTable {
    coef: Value,
    per_coord: Vec<Vec<PoleTerm>>,
}

impl ClosedFormPair {
    pub fn new(n: usize, d: usize, terms: Vec<PairTerm>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput("dimensions n and d must be positive".into()));
        }
        for t in &terms {
            check_dim(d, t.coef.len())?;
            check_dim(n, t.atoms.len())?;
            for a in &t.atoms {
                a.validate()?;
            }
        }
        Ok(ClosedFormPair { n, d, terms })
    }

    /// A scalar tensor product of one atom per coordinate.
    pub fn product(atoms: Vec<ExpPoly>) -> Result<Self> {
        ClosedFormPair::new(atoms.len(), 1, vec![PairTerm { coef: vec![1.0], atoms }])
    }

    pub fn density(&self) -> EnvelopedFunction {
        let terms = self
            .terms
            .iter()
            .map(|t| Term::new(Value::real(&t.coef), t.atoms.iter().map(|a| a.factor()).collect()))
            .collect();
        let f = EnvelopedFunction::from_terms(self.n, self.d, terms).expect("validated pair");
        match self.envelope(&SeminormFamily::sup(self.d)) {
            Some(env) => f.with_envelope(env).expect("matching dimensions"),
            None => f,
        }
    }

    /// Envelope for each seminorm `p_w`: `M = max_j w_j sum_k |c_kj| prod_i M_ki`.
    pub fn envelope(&self, family: &SeminormFamily) -> Option<Envelope> {
        let mut omega = vec![f64::NEG_INFINITY; self.n];
        let mut per_term = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut m = 1.0;
            for (i, a) in t.atoms.iter().enumerate() {
                let (ma, wa) = a.envelope()?;
                m *= ma;
                omega[i] = omega[i].max(wa);
            }
            per_term.push(m);
        }
        if self.terms.is_empty() {
            omega = vec![0.0; self.n];
        }
        let m = family
            .seminorms()
            .iter()
            .map(|p| {
                (0..self.d)
                    .map(|j| p.weights()[j] * self.terms.iter().zip(&per_term).map(|(t, m)| t.coef[j].abs() * m).sum::<f64>())
                    .fold(0.0, f64::max)
            })
            .collect();
        Envelope::new(family.clone(), m, omega).ok()
    }

    /// `max Re(pole)` per coordinate.
    pub fn abscissa(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                self.terms
                    .iter()
                    .flat_map(|t| t.atoms[i].poles())
                    .map(|p| p.pole.re)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .map(|w| if w.is_finite() { w } else { 0.0 })
            .collect()
    }

    fn table(&self) -> Vec<PoleTable> {
        self.terms
            .iter()
            .map(|t| PoleTable {
                coef: Value::real(&t.coef),
                per_coord: t.atoms.iter().map(|a| a.poles()).collect(),
            })
            .collect()
    }

    pub fn oracle(&self) -> TransformOracle {
        let (n, d) = (self.n, self.d);
        let table = Arc::new(self.table());
        let t1 = table.clone();
        let eval = Arc::new(move |l: &[C64]| {
            let mut acc = Value::zeros(d);
            for term in t1.iter() {
                let mut s = C64::new(1.0, 0.0);
                for (poles, li) in term.per_coord.iter().zip(l) {
                    s *= poles.iter().map(|p| p.eval(*li)).sum::<C64>();
                }
                acc = &acc + &term.coef.scale(s);
            }
            acc
        });
        let t2 = table.clone();
        let deriv = Arc::new(move |l: &[C64], v: &[u32], a: &[f64]| {
            let parts: Vec<(Value, ScaledScalar)> = t2
                .iter()
                .map(|term| {
                    let mut s = ScaledScalar::one();
                    for (i, poles) in term.per_coord.iter().enumerate() {
                        let factor: Vec<ScaledScalar> = poles.iter().map(|p| p.normalized(l[i], v[i], a[i])).collect();
                        s = s.mul(ScaledScalar::sum(&factor));
                    }
                    (term.coef.clone(), s)
                })
                .collect();
            Scaled::combine(d, &parts)
        });
        let t3 = table;
        let dist = Arc::new(move |l: &[C64]| {
            (0..n)
                .map(|i| {
                    t3.iter()
                        .flat_map(|t| t.per_coord[i].iter())
                        .map(|p| (l[i] - p.pole).norm())
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        });
        TransformOracle::new(n, d, eval)
            .with_derivative(deriv)
            .with_singularity_distance(dist)
            .with_halfplane(self.abscissa())
    }
}

/// `f(t) = e^t sin(e^t)`: its Laplace integral `int_1^inf u^(-lambda) sin u du`
/// converges for `Re lambda > 0` but absolutely only for `Re lambda > 1`.
///
/// The transform is evaluated on the rotated rays `u = 1 +- i s`, where the
/// integrands decay like `e^(-s)`.
pub fn dirichlet_oscillator() -> (EnvelopedFunction, TransformOracle) {
    let f = EnvelopedFunction::from_terms(
        1,
        1,
        vec![Term::new(
            Value::real(&[1.0]),
            vec![Factor::new(
                Arc::new(|t: f64| C64::new(t.exp() * t.exp().sin(), 0.0)),
                1.0,
                Some(Tail::new(1.0, 0.0, 1.0)),
            )],
        )],
    )
    .expect("valid density")
    .with_envelope(Envelope::sup(1, 1.0, vec![1.0]))
    .expect("matching dimensions");
    let raw = |l: C64, v: u32| -> C64 {
        let opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-14,
            max_panels: 2000,
        };
        let s_max = 60.0 + 4.0 * v as f64;
        let ray = |sign: f64| {
            let mut g = |s: f64| {
                let z = C64::new(1.0, sign * s);
                let lz = z.ln();
                (-lz).powu(v) * (-l * lz).exp() * (-s).exp()
            };
            integrate_with_breaks(&mut g, &geometric_breaks(1.0, s_max).iter().fold(vec![0.0], |mut acc, x| {
                acc.push(*x);
                acc
            }), &opts)
            .value
        };
        let i = C64::new(0.0, 1.0);
        let jp = i * C64::from_polar(1.0, 1.0) * ray(1.0);
        let jm = -i * C64::from_polar(1.0, -1.0) * ray(-1.0);
        (jp - jm) / (2.0 * i)
    };
    let oracle = TransformOracle::new(1, 1, Arc::new(move |l| Value::scalar(raw(l[0], 0))))
        .with_derivative(Arc::new(move |l, v, a| {
            let d = raw(l[0], v[0]);
            Scaled::from_value(Value::scalar(d)).add_log((v[0] as f64 + 1.0) * a[0].ln() - ln_factorial(v[0]))
        }))
        .with_singularity_distance(Arc::new(|l| vec![l[0].re.max(1e-3)]))
        .with_halfplane(vec![0.0]);
    (f, oracle)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    /// Closed-form derivatives and a bounded exponential envelope.
    pub widder_eligible: bool,
    pub conditional_convergence_only: bool,
    pub singular_density: bool,
    /// The Widder ratio attains exactly 1 (pure exponentials and their stacks).
    pub unit_ratio: bool,
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub description: String,
    pub n: usize,
    pub d: usize,
    pub density: EnvelopedFunction,
    pub oracle: TransformOracle,
    pub pair: Option<ClosedFormPair>,
    pub flags: Flags,
    /// In-domain sample points for smoke and property checks.
    pub sample_lambdas: Vec<Vec<C64>>,
}

impl CatalogEntry {
    pub fn from_pair(name: &str, description: &str, pair: ClosedFormPair, sample_lambdas: Vec<Vec<f64>>, unit_ratio: bool) -> Self {
        let density = pair.density();
        let singular = pair.terms.iter().flat_map(|t| t.atoms.iter()).any(|a| a.power < 0.0);
        CatalogEntry {
            name: name.into(),
            description: description.into(),
            n: pair.n,
            d: pair.d,
            oracle: pair.oracle(),
            flags: Flags {
                widder_eligible: density.envelope().is_some(),
                conditional_convergence_only: false,
                singular_density: singular,
                unit_ratio,
            },
            density,
            pair: Some(pair),
            sample_lambdas: sample_lambdas
                .into_iter()
                .map(|l| l.into_iter().map(|x| C64::new(x, 0.0)).collect())
                .collect(),
        }
    }

    pub fn envelope(&self) -> Option<&Envelope> {
        self.density.envelope()
    }

    /// Growth rate of the declared envelope.
    pub fn omega(&self) -> Option<&[f64]> {
        self.envelope().map(|e| e.omega.as_slice())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn new() -> Self {
        Catalog::default()
    }

    /// Register after smoke checks: the declared envelope must hold on a time
    /// grid, and closed-form derivatives must match the Cauchy rule for `|v| <= 2`.
    pub fn register(&mut self, mut entry: CatalogEntry) -> Result<()> {
        let fail = |reason: String| Error::FixtureInconsistent {
            name: entry.name.clone(),
            reason,
        };
        if self.entries.iter().any(|e| e.name == entry.name) {
            return Err(Error::InvalidInput(format!("duplicate catalog entry {:?}", entry.name)));
        }
        if entry.n == 0 || entry.n > 3 || entry.d == 0 || entry.d > 3 {
            return Err(fail(format!("fixtures need n <= 3 and d <= 3, got n={} d={}", entry.n, entry.d)));
        }
        if entry.density.envelope().is_some() {
            let steps = if entry.n == 3 { 6 } else { 12 };
            let grid = time_grid(entry.n, 6.0, steps);
            let measured = verify_envelope(&mut entry.density, &grid)?;
            if !entry.density.envelope().unwrap().verified {
                return Err(fail(format!("envelope violated on the time grid: measured {measured:?}")));
            }
        } else if entry.flags.widder_eligible {
            return Err(fail("widder-eligible entries need an envelope".into()));
        }
        if entry.flags.widder_eligible && !entry.oracle.has_closed_form() {
            return Err(fail("widder-eligible entries need closed-form derivatives".into()));
        }
        if entry.oracle.has_closed_form() {
            let lambda = entry.sample_lambdas.first().ok_or_else(|| fail("no sample lambdas".into()))?.clone();
            check_dim(entry.n, lambda.len())?;
            let orders: Vec<Vec<u32>> = (0..3u32.pow(entry.n as u32))
                .map(|k| (0..entry.n).map(|i| (k / 3u32.pow(i as u32)) % 3).collect())
                .filter(|v: &Vec<u32>| v.iter().sum::<u32>() <= 2)
                .collect();
            for v in orders {
                let cf = mixed_derivative(&entry.oracle, &lambda, &v, Method::ClosedForm)?;
                let ca = mixed_derivative(&entry.oracle, &lambda, &v, Method::Cauchy)?;
                let err = (&cf - &ca).max_abs();
                if !(err <= 1e-7 * cf.max_abs().max(1e-300)) && err > 1e-12 {
                    return Err(fail(format!("closed-form derivative {v:?} disagrees with the Cauchy rule by {err:e}")));
                }
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&CatalogEntry> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::NoSuchEntry(name.to_string()))
    }

    pub fn list(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    /// The built-in fixtures.
    pub fn builtin() -> &'static Catalog {
        static CATALOG: OnceLock<Catalog> = OnceLock::new();
        CATALOG.get_or_init(|| build_builtin().expect("built-in fixtures pass their smoke checks"))
    }
}

pub fn get(name: &str) -> Result<&'static CatalogEntry> {
    Catalog::builtin().get(name)
}

pub fn list() -> Vec<&'static str> {
    Catalog::builtin().list()
}

fn atom(coef: f64, power: f64, rate: f64, freq: f64, trig: Trig) -> ExpPoly {
    ExpPoly {
        coef,
        power,
        rate,
        freq,
        trig,
    }
}

fn build_builtin() -> Result<Catalog> {
    let e = ExpPoly::exp;
    let mut c = Catalog::new();
    let prod = |atoms: Vec<ExpPoly>| ClosedFormPair::product(atoms);
    c.register(CatalogEntry::from_pair("exp-1d", "e^t <-> 1/(lambda-1)", prod(vec![e(1.0)])?, vec![vec![2.0], vec![3.0], vec![4.5]], true))?;
    c.register(CatalogEntry::from_pair(
        "exp-decay-1d",
        "e^-t <-> 1/(lambda+1)",
        prod(vec![e(-1.0)])?,
        vec![vec![0.5], vec![1.0], vec![2.5]],
        true,
    ))?;
    c.register(CatalogEntry::from_pair("one-1d", "1 <-> 1/lambda", prod(vec![e(0.0)])?, vec![vec![1.0], vec![2.0], vec![3.5]], true))?;
    c.register(CatalogEntry::from_pair(
        "ramp-1d",
        "t <-> 1/lambda^2, envelope t <= e^(t-1)",
        prod(vec![atom(1.0, 1.0, 0.0, 0.0, Trig::None)])?,
        vec![vec![2.0], vec![3.0], vec![4.5]],
        false,
    ))?;
    let mut g = CatalogEntry::from_pair(
        "monomial-g",
        "g_(1/2)(t) = t^(-1/2)/Gamma(1/2) <-> lambda^(-1/2)",
        prod(vec![atom(1.0 / gamma(0.5), -0.5, 0.0, 0.0, Trig::None)])?,
        vec![vec![1.0], vec![4.0], vec![16.0]],
        false,
    );
    g.flags.widder_eligible = false;
    c.register(g)?;
    c.register(CatalogEntry::from_pair(
        "damped-cos-1d",
        "e^-t cos t <-> (lambda+1)/((lambda+1)^2+1)",
        prod(vec![atom(1.0, 0.0, -1.0, 1.0, Trig::Cos)])?,
        vec![vec![0.5], vec![1.5], vec![3.0]],
        false,
    ))?;
    let (f, oracle) = dirichlet_oscillator();
    c.register(CatalogEntry {
        name: "dirichlet-osc".into(),
        description: "e^t sin(e^t) <-> int_1^inf u^-lambda sin u du".into(),
        n: 1,
        d: 1,
        density: f,
        oracle,
        pair: None,
        flags: Flags {
            widder_eligible: false,
            conditional_convergence_only: true,
            singular_density: false,
            unit_ratio: false,
        },
        sample_lambdas: vec![vec![C64::new(5.0, 0.0)], vec![C64::new(6.0, 0.0)], vec![C64::new(7.0, 0.0)]],
    })?;
    c.register(CatalogEntry::from_pair(
        "exp-2d",
        "e^(t1+2 t2) <-> 1/((lambda1-1)(lambda2-2))",
        prod(vec![e(1.0), e(2.0)])?,
        vec![vec![2.0, 3.0], vec![3.0, 5.0], vec![4.5, 3.5]],
        true,
    ))?;
    c.register(CatalogEntry::from_pair(
        "exp-decay-2d",
        "e^(-t1-t2/2) <-> 1/((lambda1+1)(lambda2+1/2))",
        prod(vec![e(-1.0), e(-0.5)])?,
        vec![vec![0.5, 0.5], vec![1.0, 2.0], vec![2.5, 1.0]],
        true,
    ))?;
    c.register(CatalogEntry::from_pair(
        "exp-cos-2d",
        "e^(t1) e^(-t2) cos t2",
        prod(vec![e(1.0), atom(1.0, 0.0, -1.0, 1.0, Trig::Cos)])?,
        vec![vec![2.0, 0.5], vec![3.0, 1.0], vec![2.5, 2.0]],
        false,
    ))?;
    c.register(CatalogEntry::from_pair(
        "exp-3d",
        "e^(t1 - t2 + t3/2)",
        prod(vec![e(1.0), e(-1.0), e(0.5)])?,
        vec![vec![2.0, 0.5, 1.5], vec![3.0, 1.0, 2.0], vec![2.5, 0.0, 3.0]],
        true,
    ))?;
    let stack = |rows: Vec<(Vec<f64>, Vec<ExpPoly>)>, n: usize| {
        ClosedFormPair::new(n, 2, rows.into_iter().map(|(coef, atoms)| PairTerm { coef, atoms }).collect())
    };
    c.register(CatalogEntry::from_pair(
        "exp-stack-1d",
        "(e^t, e^2t) in C^2",
        stack(vec![(vec![1.0, 0.0], vec![e(1.0)]), (vec![0.0, 1.0], vec![e(2.0)])], 1)?,
        vec![vec![3.0], vec![4.0], vec![5.5]],
        true,
    ))?;
    c.register(CatalogEntry::from_pair(
        "exp-stack-2d",
        "(e^(t1-t2), e^(2 t1 + t2)) in C^2",
        stack(
            vec![(vec![1.0, 0.0], vec![e(1.0), e(-1.0)]), (vec![0.0, 1.0], vec![e(2.0), e(1.0)])],
            2,
        )?,
        vec![vec![3.0, 2.0], vec![4.0, 3.0], vec![2.5, 1.5]],
        true,
    ))?;
    Ok(c)
}
