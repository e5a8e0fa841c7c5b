//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are expected to fail; the run only
//! exits nonzero when one of them unexpectedly passes or any other fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bayesteach::analytic::{gaussian_mean_closed_form, two_model_formula_n, two_model_integer_n, two_model_ti};
use bayesteach::effort::EffortSpec;
use bayesteach::evaluation::{random_baseline, random_set, teaching_impedance, BaselineStats};
use bayesteach::expfam::Item;
use bayesteach::models::{items_from_counts, CrossTerm, GaussianMean, GaussianMeanPrior};
use bayesteach::scenario::Scenario;
use bayesteach::solver::{solve_step1, unpack, Learner, SolverOptions, Step1Solution, TeachingSet, Unpacked};
use bayesteach::teachdim::{penalized_minimizer, teaching_dim};
use common::*;
use rand::Rng;

const KNOWN_FAILURES: [usize; 1] = [6];
const TRIALS: usize = 100_000;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || format!("took {:.2} s, limit {limit} s", elapsed.as_secs_f64()))
}

fn solve_and_unpack(sc: &Scenario) -> Result<(Step1Solution, Unpacked, f64), String> {
    let setup = sc.setup().map_err(|e| e.to_string())?;
    let l = setup.learner();
    let sol = solve_step1(&l, &sc.solver).map_err(|e| e.to_string())?;
    let out = unpack(&l, sol.n_int, &sol.s, sol.big_s.as_ref(), &sc.solver).map_err(|e| e.to_string())?;
    let ti = teaching_impedance(&l, &out.set).map_err(|e| e.to_string())?.ti;
    Ok((sol, out, ti))
}

fn category_counts(set: &TeachingSet, k: usize) -> Vec<u64> {
    let mut counts = vec![0; k];
    for it in &set.items {
        if let Item::Category(c) = it {
            counts[*c] += 1;
        }
    }
    counts
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let sc = scenario("multinomial.toml");
    let (sol, out, ti) = solve_and_unpack(&sc)?;
    let counts = category_counts(&out.set, 3);
    ensure(sol.converged, || "solver did not converge".into())?;
    ensure(counts == [0, 2, 8], || format!("counts {counts:?}"))?;
    ensure((ti - 2.65).abs() <= 0.01, || format!("TI {ti}"))?;
    let setup = sc.setup().map_err(|e| e.to_string())?;
    let other = teaching_impedance(&setup.learner(), &TeachingSet::new(items_from_counts(&[1, 3, 6])))
        .map_err(|e| e.to_string())?
        .ti;
    ensure((other - 4.51).abs() <= 0.01, || format!("competitor TI {other}"))?;
    let elapsed = start.elapsed();
    within_time(elapsed, 1.0)?;
    Ok(format!("counts {counts:?}, TI {ti:.4}, (1,3,6) TI {other:.4} ({:.3} s)", elapsed.as_secs_f64()))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let sc = scenario("multinomial.toml");
    let setup = sc.setup().map_err(|e| e.to_string())?;
    let (b, _) = random_baseline(&setup.learner(), 10, TRIALS, sc.solver.seed).map_err(|e| e.to_string())?;
    let (_, _, optimal) = solve_and_unpack(&sc)?;
    let elapsed = start.elapsed();
    ensure((4.92..=5.02).contains(&b.mean), || format!("mean {}", b.mean))?;
    ensure((1.83..=1.93).contains(&b.std), || format!("std {}", b.std))?;
    // The reported minimum is the optimal set's TI, which random draws reach.
    ensure((b.min - optimal).abs() <= 1e-6, || format!("min {} vs optimal {optimal}", b.min))?;
    ensure((b.min - 2.65).abs() <= 0.01, || format!("min {}", b.min))?;
    within_time(elapsed, 30.0)?;
    Ok(format!("mean {:.4}, std {:.4}, min {:.6} ({:.2} s)", b.mean, b.std, b.min, elapsed.as_secs_f64()))
}

fn criterion_3() -> Check {
    let sc = scenario("gaussian_mean.toml");
    let (sol, out, _) = solve_and_unpack(&sc)?;
    ensure(sol.n_int == 4, || format!("solver n {}", sol.n_int))?;
    ensure((sol.s[0] + 1.0).abs() <= 1e-6, || format!("solver s {}", sol.s[0]))?;
    ensure(out.set.n() == 4, || format!("unpacked {} items", out.set.n()))?;
    let closed = gaussian_mean_closed_form(0.0, 1.0, 1.0, 1.0, 0.1).map_err(|e| e.to_string())?;
    ensure(closed.n_int == 4 && closed.s == -1.0, || format!("closed form n {} s {}", closed.n_int, closed.s))?;

    let mut r = rng(3);
    let mut teach = 0;
    let mut cases = 0;
    while cases < 200 {
        let (sigma2, sigma0_2, c): (f64, f64, f64) =
            (r.random_range(0.2..5.0), r.random_range(0.05..5.0), r.random_range(0.02..1.0));
        let boundary = 2.0 * c * sigma2;
        if ((sigma0_2 - boundary) / boundary).abs() < 1e-3 {
            continue;
        }
        cases += 1;
        let m = GaussianMean::new(sigma2).map_err(|e| e.to_string())?;
        let hyper =
            GaussianMeanPrior::new(r.random_range(-2.0..2.0), sigma0_2).map_err(|e| e.to_string())?.to_hyper(&m);
        let target = m.target(r.random_range(-2.0..2.0)).map_err(|e| e.to_string())?;
        let effort = EffortSpec::PerItem { c };
        let l = Learner::Family { family: &m, prior: &hyper, target: &target, effort: &effort, cap: None };
        let sol = solve_step1(&l, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let not_teach = sol.n_relaxed <= 1e-9;
        ensure(not_teach == (sigma0_2 < boundary), || {
            format!("σ²={sigma2}, σ0²={sigma0_2}, c={c}: relaxed n {}", sol.n_relaxed)
        })?;
        teach += usize::from(!not_teach);
    }
    Ok(format!("n 4, s {:.9}; not-teach boundary held in 200 cases ({teach} teach)", sol.s[0]))
}

fn criterion_4(baseline: &BaselineStats) -> Check {
    let start = Instant::now();
    let sc = scenario("mvn_niw.toml");
    let (sol, out, ti) = solve_and_unpack(&sc)?;
    let elapsed = start.elapsed();
    ensure(sol.converged, || "solver did not converge".into())?;
    ensure(sol.n_int == 4, || format!("n {}", sol.n_int))?;
    ensure(sol.s_relaxed.iter().all(|v| (v + 1.0).abs() <= 0.05), || format!("s {:?}", sol.s_relaxed))?;
    let big_s = sol.big_s_relaxed.as_ref().ok_or("no relaxed S")?;
    for i in 0..3 {
        for j in 0..3 {
            let (want, tol) = if i == j { (4.63, 0.15) } else { (-1.0, 0.05) };
            ensure((big_s.get(i, j) - want).abs() <= tol, || format!("S[{i}][{j}] = {}", big_s.get(i, j)))?;
        }
    }
    let points = out.set.points();
    ensure(points.len() == 4, || format!("{} points", points.len()))?;
    for k in 0..3 {
        let mean = points.iter().map(|p| p[k]).sum::<f64>() / 4.0;
        ensure((mean + 0.25).abs() <= 1e-3, || format!("mean[{k}] = {mean}"))?;
    }
    ensure(out.residual <= 1e-6, || format!("residual {}", out.residual))?;
    ensure((ti - 1.69).abs() <= 0.02, || format!("TI {ti}"))?;
    let delta = baseline.mean - ti;
    ensure((delta - 7.37).abs() <= 0.3, || format!("ΔTI {delta}"))?;
    within_time(elapsed, 10.0)?;
    Ok(format!(
        "n 4, S diag {:.3}, TI {ti:.4}, residual {:.1e}, ΔTI {delta:.3} ({:.2} s)",
        big_s.get(0, 0),
        out.residual,
        elapsed.as_secs_f64()
    ))
}

fn niw_baseline() -> Result<(BaselineStats, Duration), String> {
    let start = Instant::now();
    let sc = scenario("mvn_niw.toml");
    let setup = sc.setup().map_err(|e| e.to_string())?;
    let (b, _) = random_baseline(&setup.learner(), 4, TRIALS, sc.solver.seed).map_err(|e| e.to_string())?;
    Ok((b, start.elapsed()))
}

fn criterion_5(baseline: &BaselineStats, elapsed: Duration) -> Check {
    let (_, _, optimal) = solve_and_unpack(&scenario("mvn_niw.toml"))?;
    ensure((8.91..=9.21).contains(&baseline.mean), || format!("mean {}", baseline.mean))?;
    ensure((3.19..=3.49).contains(&baseline.std), || format!("std {}", baseline.std))?;
    ensure(optimal < baseline.min, || format!("optimal {optimal} vs min {}", baseline.min))?;
    within_time(elapsed, 60.0)?;
    Ok(format!(
        "mean {:.4}, std {:.4}, min {:.4} > optimal {optimal:.4} ({:.2} s)",
        baseline.mean,
        baseline.std,
        baseline.min,
        elapsed.as_secs_f64()
    ))
}

fn criterion_6() -> Check {
    let mut r = rng(6);
    let (mut compared, mut formula_ok, mut integer_ok) = (0, 0, 0);
    while compared < 1000 {
        let (a, b): (f64, f64) = (r.random_range(1e-3..2.0), r.random_range(1e-3..2.0));
        if a == b {
            continue;
        }
        let (c, d) = (a.min(b), a.max(b));
        let mut values: Vec<(f64, u64)> = (0..=400).map(|n| (two_model_ti(c, d, n), n)).collect();
        values.sort_by(|x, y| x.0.total_cmp(&y.0));
        if values[1].0 - values[0].0 <= 1e-12 {
            continue;
        }
        compared += 1;
        formula_ok += usize::from(two_model_formula_n(c, d) == values[0].1);
        integer_ok += usize::from(two_model_integer_n(c, d) == values[0].1);
    }
    let no_teach = (0..200).all(|_| {
        let (a, b): (f64, f64) = (r.random_range(1e-3..2.0), r.random_range(1e-3..2.0));
        let (c, d) = (a.max(b), a.min(b));
        two_model_formula_n(c, d) == 0 && two_model_integer_n(c, d) == 0
    });
    let summary = format!(
        "rounded formula matches brute force in {formula_ok}/1000; floor/ceil comparison in {integer_ok}/1000; c ≥ d gives n = 0: {no_teach}"
    );
    ensure(integer_ok == 1000 && no_teach, || summary.clone())?;
    ensure(formula_ok == 1000, || summary.clone())?;
    Ok(summary)
}

fn criterion_7() -> Check {
    let mut r = rng(7);
    let mut classes: Vec<_> = (0..50).map(|_| random_concept_class(&mut r)).collect();
    let (thresholds, _) = scenario("thresholds.toml").concept_class().map_err(|e| e.to_string())?;
    classes.push(thresholds);
    let mut targets = 0;
    for (k, cc) in classes.iter().enumerate() {
        let gamma = 1.0 / (cc.len() as f64 + 1.0);
        for t in 0..cc.len() {
            let (td, _) = teaching_dim(cc, t).map_err(|e| e.to_string())?;
            let (set, _) = penalized_minimizer(cc, t, gamma).map_err(|e| e.to_string())?;
            ensure(set.len() == td, || format!("class {k}, target {t}: |D| {} vs TD {td}", set.len()))?;
            targets += 1;
        }
    }
    Ok(format!("{} classes, {targets} targets agree", classes.len()))
}

fn criterion_8() -> Check {
    let mut parts = Vec::new();
    for (i, kind) in KINDS.into_iter().enumerate() {
        parts.push(family_gradient_check(kind, 100, 100 + i as u64)?);
        parts.push(family_convexity_check(kind, 200, 200 + i as u64)?);
    }
    for (i, cross) in [CrossTerm::Symmetric, CrossTerm::AsPrinted].into_iter().enumerate() {
        parts.push(niw_gradient_check(cross, 100, 110 + i as u64)?);
    }
    parts.push(niw_convexity_check(CrossTerm::Symmetric, 200, 210)?);
    let mut worst: f64 = 0.0;
    for name in ["gaussian_mean.toml", "mvn_niw.toml", "gaussian_mean_narrow.toml"] {
        let (_, out, _) = solve_and_unpack(&scenario(name))?;
        ensure(out.residual <= 1e-6, || format!("{name}: residual {}", out.residual))?;
        worst = worst.max(out.residual);
    }
    parts.push(format!("unpacking residual ≤ {worst:.1e}"));
    parts.push(special_function_check()?);
    Ok(parts.join("; "))
}

fn criterion_9() -> Check {
    let run = || -> Result<_, String> {
        let niw = solve_and_unpack(&scenario("mvn_niw.toml"))?;
        let multinomial = scenario("multinomial.toml");
        let setup = multinomial.setup().map_err(|e| e.to_string())?;
        let baseline =
            random_baseline(&setup.learner(), 10, 2000, multinomial.solver.seed).map_err(|e| e.to_string())?;
        let draw = random_set(&setup.learner(), 10, 9, 3);
        Ok((niw, baseline, draw))
    };
    let (a, b) = (run()?, run()?);
    ensure(a.0 == b.0, || "NIW solution differs between runs".into())?;
    ensure(a.1 == b.1, || "baseline differs between runs".into())?;
    ensure(a.2 == b.2, || "seeded draw differs between runs".into())?;
    let bits = |p: &[Vec<f64>]| p.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>();
    ensure(bits(&a.0 .1.set.points()) == bits(&b.0 .1.set.points()), || "unpacked points differ".into())?;
    Ok("NIW solve and unpack, multinomial baseline and seeded draws identical across two runs".into())
}

fn main() -> ExitCode {
    let (baseline, baseline_time) = match niw_baseline() {
        Ok(b) => b,
        Err(e) => {
            println!("FAIL: NIW baseline could not be computed: {e}");
            return ExitCode::FAILURE;
        }
    };
    let results: Vec<(usize, Check)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4(&baseline)),
        (5, criterion_5(&baseline, baseline_time)),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
    ];
    let mut unexpected = 0;
    for (k, result) in &results {
        let known = KNOWN_FAILURES.contains(k);
        match result {
            Ok(msg) => {
                println!("PASS criterion {k}: {msg}");
                if known {
                    println!("  criterion {k} is listed as a known failure but passed");
                    unexpected += 1;
                }
            }
            Err(msg) => {
                println!("FAIL criterion {k}: {msg}{}", if known { " (known failure)" } else { "" });
                unexpected += usize::from(!known);
            }
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
