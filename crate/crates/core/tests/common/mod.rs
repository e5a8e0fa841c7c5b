#![allow(dead_code)]

use std::path::PathBuf;

use bayesteach::effort::EffortSpec;
use bayesteach::evaluation::teaching_impedance;
use bayesteach::expfam::{
    step1_gradient, step1_objective, AggregateStats, ConjugateFamily, ConjugateHyper, NaturalParam,
};
use bayesteach::models::{
    niw_step1_gradient, niw_step1_objective, scalar_model, CrossTerm, GammaPrior, GaussianMean, GaussianMeanPrior,
    Multinomial, NiwModel, NiwPrior, NiwStats, NiwTarget, ScalarKind,
};
use bayesteach::numerics::{digamma, log_gamma, SymMatrix};
use bayesteach::scenario::Scenario;
use bayesteach::solver::{Learner, TeachingSet};
use bayesteach::teachdim::ConceptClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Ok(summary)` or `Err(first failure)`.
pub type Check = Result<String, String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Gaussian,
    Multinomial,
    Exponential,
    Poisson,
}

pub const KINDS: [Kind; 4] = [Kind::Gaussian, Kind::Multinomial, Kind::Exponential, Kind::Poisson];

pub struct FamilyCase {
    pub family: Box<dyn ConjugateFamily>,
    pub prior: ConjugateHyper,
    pub target: NaturalParam,
    pub effort: EffortSpec,
    pub kind: Kind,
}

impl FamilyCase {
    pub fn learner(&self) -> Learner<'_> {
        Learner::Family {
            family: self.family.as_ref(),
            prior: &self.prior,
            target: &self.target,
            effort: &self.effort,
            cap: None,
        }
    }

    pub fn value(&self, stats: &AggregateStats) -> f64 {
        step1_objective(self.family.as_ref(), &self.prior, &self.target, &self.effort, stats).unwrap()
    }

    pub fn gradient(&self, stats: &AggregateStats) -> Vec<f64> {
        step1_gradient(self.family.as_ref(), &self.prior, &self.target, &self.effort, stats).unwrap()
    }

    /// A feasible interior point; categorical points have `n = Σ s`.
    pub fn point(&self, r: &mut ChaCha8Rng) -> AggregateStats {
        let d = self.family.stat_dim();
        match self.kind {
            Kind::Gaussian => AggregateStats::new(r.random_range(0.0..20.0), vec![r.random_range(-20.0..20.0)]),
            Kind::Multinomial => {
                let s: Vec<f64> = (0..d).map(|_| r.random_range(0.0..20.0)).collect();
                AggregateStats::new(s.iter().sum(), s)
            }
            Kind::Exponential | Kind::Poisson => {
                AggregateStats::new(r.random_range(0.0..20.0), vec![r.random_range(0.0..20.0)])
            }
        }
    }
}

pub fn random_probabilities(r: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

pub fn random_case(kind: Kind, r: &mut ChaCha8Rng) -> FamilyCase {
    match kind {
        Kind::Gaussian => {
            let m = GaussianMean::new(r.random_range(0.2..5.0)).unwrap();
            let prior =
                GaussianMeanPrior::new(r.random_range(-3.0..3.0), r.random_range(0.1..5.0)).unwrap().to_hyper(&m);
            let target = m.target(r.random_range(-3.0..3.0)).unwrap();
            let effort = EffortSpec::PerItem { c: r.random_range(0.01..1.0) };
            FamilyCase { family: Box::new(m), prior, target, effort, kind }
        }
        Kind::Multinomial => {
            let k = r.random_range(2..=4);
            let m = Multinomial::new(k).unwrap();
            let beta: Vec<f64> = (0..k).map(|_| r.random_range(0.5..5.0)).collect();
            let prior = m.hyper(&beta).unwrap();
            let target = m.target(&random_probabilities(r, k)).unwrap();
            let effort = EffortSpec::LinearInStats { weights: (0..k).map(|_| r.random_range(0.0..1.0)).collect() };
            FamilyCase { family: Box::new(m), prior, target, effort, kind }
        }
        Kind::Exponential | Kind::Poisson => {
            let sk = if kind == Kind::Exponential { ScalarKind::Exponential } else { ScalarKind::Poisson };
            let m = scalar_model(sk);
            let prior = m.hyper(&GammaPrior::new(r.random_range(1.5..6.0), r.random_range(0.2..4.0)).unwrap());
            let target = m.target(r.random_range(0.1..8.0)).unwrap();
            let effort = EffortSpec::PerItem { c: r.random_range(0.01..1.0) };
            FamilyCase { family: Box::new(m), prior, target, effort, kind }
        }
    }
}

fn fd_close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-4 * numeric.abs().max(analytic.abs()).max(1.0)
}

const FD_H: f64 = 1e-5;

/// Central differences in every coordinate of `(s, n)` at `points` random
/// interior points.
pub fn family_gradient_check(kind: Kind, points: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for i in 0..points {
        let case = random_case(kind, &mut r);
        let p = case.point(&mut r);
        let p = AggregateStats::new(p.n + 2.0 * FD_H, p.s.iter().map(|v| v + 2.0 * FD_H).collect());
        let g = case.gradient(&p);
        for j in 0..=p.s.len() {
            let shift = |h: f64| {
                let mut q = p.clone();
                if j < q.s.len() {
                    q.s[j] += h;
                } else {
                    q.n += h;
                }
                case.value(&q)
            };
            let fd = (shift(FD_H) - shift(-FD_H)) / (2.0 * FD_H);
            if !fd_close(g[j], fd) {
                return Err(format!("{kind:?} point {i} coordinate {j}: gradient {} vs finite difference {fd}", g[j]));
            }
        }
    }
    Ok(format!("{kind:?}: {points} points"))
}

pub fn family_convexity_check(kind: Kind, pairs: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for i in 0..pairs {
        let case = random_case(kind, &mut r);
        let (u, v) = (case.point(&mut r), case.point(&mut r));
        let mid = AggregateStats::new(0.5 * (u.n + v.n), u.s.iter().zip(&v.s).map(|(a, b)| 0.5 * (a + b)).collect());
        let (fu, fv, fm) = (case.value(&u), case.value(&v), case.value(&mid));
        if fm > 0.5 * (fu + fv) + 1e-9 {
            return Err(format!("{kind:?} pair {i}: f(mid) = {fm} > {}", 0.5 * (fu + fv)));
        }
    }
    Ok(format!("{kind:?}: {pairs} pairs"))
}

fn random_pd(r: &mut ChaCha8Rng, d: usize, floor: f64) -> SymMatrix {
    let a: Vec<f64> = (0..d * d).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            m[i * d + j] = (0..d).map(|k| a[i * d + k] * a[j * d + k]).sum::<f64>() + if i == j { floor } else { 0.0 };
        }
    }
    SymMatrix::from_row_major(d, &m).unwrap()
}

pub struct NiwCase {
    pub model: NiwModel,
    pub target: NiwTarget,
    pub effort: EffortSpec,
}

impl NiwCase {
    pub fn random(r: &mut ChaCha8Rng, cross_term: CrossTerm) -> Self {
        let d = r.random_range(2..=3);
        let mu0: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        let nu0 = d as f64 - 1.0 + r.random_range(0.5..4.0);
        let prior = NiwPrior::new(mu0, r.random_range(0.5..3.0), nu0, random_pd(r, d, 0.5)).unwrap();
        let target = NiwTarget::new((0..d).map(|_| r.random_range(-2.0..2.0)).collect(), random_pd(r, d, 0.5)).unwrap();
        Self {
            model: NiwModel::new(prior).with_cross_term(cross_term),
            target,
            effort: EffortSpec::PerItem { c: r.random_range(0.01..1.0) },
        }
    }

    pub fn learner(&self) -> Learner<'_> {
        Learner::Niw { model: &self.model, target: &self.target, effort: &self.effort }
    }

    /// Feasible statistics: `S − ssᵀ/n` is positive definite.
    pub fn point(&self, r: &mut ChaCha8Rng) -> NiwStats {
        let d = self.model.dim();
        let n: f64 = r.random_range(1.0..10.0);
        let s: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0) * n.sqrt()).collect();
        let big_s = SymMatrix::sym_outer(&s, &s, 0.5 / n).add(&random_pd(r, d, 0.5));
        NiwStats { n, s, big_s }
    }

    pub fn value(&self, st: &NiwStats) -> Option<f64> {
        niw_step1_objective(&self.model, &self.target, &self.effort, st).ok()
    }
}

/// Central differences over `s`, each free entry of the symmetric `S`, and `n`.
/// Moving an off-diagonal pair changes the objective by twice the reported
/// entry.
pub fn niw_gradient_check(cross_term: CrossTerm, points: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut done = 0;
    while done < points {
        let case = NiwCase::random(&mut r, cross_term);
        let p = case.point(&mut r);
        let Ok(g) = niw_step1_gradient(&case.model, &case.target, &case.effort, &p) else { continue };
        let d = case.model.dim();
        let mut coords: Vec<(String, f64, Box<dyn Fn(&mut NiwStats, f64)>)> = Vec::new();
        for k in 0..d {
            coords.push((format!("s{k}"), g.s[k], Box::new(move |q, h| q.s[k] += h)));
        }
        for i in 0..d {
            for j in i..d {
                let mult = if i == j { 1.0 } else { 2.0 };
                coords.push((
                    format!("S{i}{j}"),
                    mult * g.big_s.get(i, j),
                    Box::new(move |q, h| {
                        let v = q.big_s.get(i, j);
                        q.big_s.set(i, j, v + h);
                    }),
                ));
            }
        }
        coords.push(("n".into(), g.n, Box::new(|q, h| q.n += h)));
        let mut ok = true;
        let mut failure = None;
        for (name, analytic, shift) in &coords {
            let eval = |h: f64| {
                let mut q = p.clone();
                shift(&mut q, h);
                case.value(&q)
            };
            let (Some(hi), Some(lo)) = (eval(FD_H), eval(-FD_H)) else {
                ok = false;
                break;
            };
            let fd = (hi - lo) / (2.0 * FD_H);
            if !fd_close(*analytic, fd) {
                failure =
                    Some(format!("{cross_term:?} point {done} {name}: gradient {analytic} vs finite difference {fd}"));
                break;
            }
        }
        if let Some(f) = failure {
            return Err(f);
        }
        if ok {
            done += 1;
        }
    }
    Ok(format!("NIW {cross_term:?}: {points} points"))
}

pub fn niw_convexity_check(cross_term: CrossTerm, pairs: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut done = 0;
    while done < pairs {
        let case = NiwCase::random(&mut r, cross_term);
        let (u, v) = (case.point(&mut r), case.point(&mut r));
        let mid = NiwStats {
            n: 0.5 * (u.n + v.n),
            s: u.s.iter().zip(&v.s).map(|(a, b)| 0.5 * (a + b)).collect(),
            big_s: u.big_s.add(&v.big_s).scaled(0.5),
        };
        let (Some(fu), Some(fv), Some(fm)) = (case.value(&u), case.value(&v), case.value(&mid)) else { continue };
        if fm > 0.5 * (fu + fv) + 1e-9 {
            return Err(format!("NIW {cross_term:?} pair {done}: f(mid) = {fm} > {}", 0.5 * (fu + fv)));
        }
        done += 1;
    }
    Ok(format!("NIW {cross_term:?}: {pairs} pairs"))
}

/// `(x, ln Γ(x), ψ(x))` to 22 significant digits.
pub const SPECIAL_ORACLE: [(f64, f64, f64); 24] = [
    (0.001, 6.907178885383853661684, -1000.575571931810279655),
    (0.0037, 5.597298000700148537473, -270.8414160806541722962),
    (0.0123, 4.391179955475717643398, -81.8579758525895973287),
    (0.05, 2.968879201051730768462, -20.49784499129986925659),
    (0.1, 2.252712651734205902006, -10.4237549404110762321),
    (0.25, 1.288022524698077457371, -4.22745353337626540809),
    (0.5, 0.5723649429247000870717, -1.963510026021423479441),
    (0.75, 0.2032809514312953714814, -1.085860879786472169627),
    (1.0, 0.0, -0.5772156649015328606065),
    (1.5, -0.1207822376352452223455, 0.03648997397857652055902),
    (2.5, 0.2846828704729191596325, 0.7031566406452431872257),
    (3.3, 0.9870985778947344040573, 1.034822489059621686257),
    (5.0, 3.178053830347945619647, 1.506117668431800472727),
    (7.25, 7.052185450738539444926, 1.910453526883736028382),
    (10.0, 12.80182748008146961121, 2.251752589066721107647),
    (17.5, 32.0811148959473494865, 2.833357432228684103146),
    (42.0, 114.0342117814617032329, 3.7257176179372821503),
    (99.9, 358.6742394519775637568, 4.599156330708133021609),
    (310.0, 1466.388333420125634233, 5.734958527102015878586),
    (1234.5, 7550.55090107789489573, 7.118016231827997843305),
    (9999.0, 82090.50725607540142327, 9.210190361141849303562),
    (55000.0, 545325.3269276196872733, 10.91507937327796885226),
    (250000.0, 2857298.753541863987133, 12.42921419684305015194),
    (1000000.0, 12815504.56914761165998, 13.81551005796419077077),
];

/// `ln Γ` within `max(1e-10, 4 ulp)` and `ψ` within 1e-9 of the oracle.
pub fn special_function_check() -> Check {
    for (x, lg, dg) in SPECIAL_ORACLE {
        let got = log_gamma(x).unwrap();
        let tol = (4.0 * f64::EPSILON * lg.abs()).max(1e-10);
        if (got - lg).abs() > tol {
            return Err(format!("log_gamma({x}) = {got}, oracle {lg}"));
        }
        let got = digamma(x).unwrap();
        if (got - dg).abs() > 1e-9 {
            return Err(format!("digamma({x}) = {got}, oracle {dg}"));
        }
    }
    Ok(format!("{} oracle points", SPECIAL_ORACLE.len()))
}

/// Random duplicate-free concept class with `m ≤ 10` items and
/// `|C| ≤ min(30, 2^m)` concepts.
pub fn random_concept_class(r: &mut ChaCha8Rng) -> ConceptClass {
    let m = r.random_range(1..=10usize);
    let size = r.random_range(1..=30usize.min(1 << m));
    let mut concepts: Vec<Vec<bool>> = Vec::new();
    while concepts.len() < size {
        let c: Vec<bool> = (0..m).map(|_| r.random_bool(0.5)).collect();
        if !concepts.contains(&c) {
            concepts.push(c);
        }
    }
    ConceptClass::new(m, concepts, None).unwrap()
}

/// `TI − step1_objective` at the set's exact statistics: the model's
/// declared constant.
pub fn ti_minus_objective(learner: &Learner<'_>, set: &TeachingSet) -> f64 {
    let report = teaching_impedance(learner, set).unwrap();
    let objective = match learner {
        Learner::Family { family, prior, target, effort, .. } => {
            let stats = bayesteach::expfam::aggregate(*family, &set.items).unwrap();
            step1_objective(*family, prior, target, effort, &stats).unwrap()
        }
        Learner::Niw { model, target, effort } => {
            let stats = NiwStats::from_points(model.dim(), &set.points()).unwrap();
            niw_step1_objective(model, target, effort, &stats).unwrap()
        }
    };
    report.ti - objective
}
