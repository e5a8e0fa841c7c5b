use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use bayesteach::analytic::{compose_naive_bayes, teach_threshold, teach_threshold_minsep, teach_two_model};
use bayesteach::effort::EffortSpec;
use bayesteach::evaluation::{mle_of, random_baseline, teaching_impedance};
use bayesteach::expfam::{ExampleDomain, Item};
use bayesteach::scenario::{ModelScenario, Scenario, Setup};
use bayesteach::solver::{solve_step1, unpack, SolverOptions, TeachingSet};
use bayesteach::teachdim::{penalized_minimizer, teaching_dim, ConceptClass};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bayesteach", version, about = "Optimal teaching sets for Bayesian learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for an optimal teaching set.
    Solve(Common),
    /// Teaching Impedance of a teaching set given as CSV.
    Ti {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        set: PathBuf,
    },
    /// Monte-Carlo baseline of random teaching sets.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Set size; defaults to the optimal integer size.
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Teaching dimension of a concept in a finite class.
    Teachdim {
        #[command(flatten)]
        common: Common,
    },
    /// Teaching documents for a multinomial naive Bayes learner.
    NaiveBayes(Common),
}

/// Outcome of a command: files to write, a summary for stdout, and whether
/// every iterative step converged.
struct Output {
    files: Vec<(&'static str, String)>,
    summary: String,
    converged: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TEACH_LOG", "warn")).init();
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Solve(c) | Command::NaiveBayes(c) => c,
        Command::Ti { common, .. } | Command::Baseline { common, .. } | Command::Teachdim { common } => common,
    };
    match run(&cli.command).and_then(|out| write_outputs(common, out)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write_outputs(common: &Common, out: Output) -> Result<bool> {
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, body) in &out.files {
            let path = dir.join(name);
            std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    if !common.quiet {
        println!("{}", out.summary);
    }
    if !out.converged {
        eprintln!("warning: solver did not converge; results written anyway");
    }
    Ok(out.converged)
}

fn load(common: &Common) -> Result<Scenario> {
    let mut sc = Scenario::load(&common.scenario)?;
    if let Some(seed) = common.seed {
        sc.solver.seed = seed;
    }
    Ok(sc)
}

fn run(command: &Command) -> Result<Output> {
    match command {
        Command::Solve(c) => {
            let sc = load(c)?;
            match &sc.model {
                ModelScenario::Threshold(_) => solve_threshold(&sc),
                ModelScenario::TwoModel(_) => solve_two_model(&sc),
                ModelScenario::NaiveBayes(_) => naive_bayes(&sc),
                ModelScenario::ConceptClass(_) => teachdim(&sc),
                _ => solve(&sc),
            }
        }
        Command::Ti { common, set } => ti(&load(common)?, set),
        Command::Baseline { common, n, trials } => baseline(&load(common)?, *n, *trials),
        Command::Teachdim { common } => teachdim(&load(common)?),
        Command::NaiveBayes(c) => naive_bayes(&load(c)?),
    }
}

fn json_text(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn set_header(domain: ExampleDomain) -> Vec<String> {
    match domain {
        ExampleDomain::Category { .. } => vec!["category".into()],
        ExampleDomain::Vector { dim } => (1..=dim).map(|i| format!("x{i}")).collect(),
        _ => vec!["x".into()],
    }
}

fn item_fields(item: &Item) -> Vec<String> {
    match item {
        Item::Real(x) => vec![x.to_string()],
        Item::Count(c) => vec![c.to_string()],
        Item::Category(k) => vec![k.to_string()],
        Item::Vector(v) => v.iter().map(f64::to_string).collect(),
    }
}

fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

fn set_csv(setup: &Setup, set: &TeachingSet) -> Result<String> {
    csv_text(&set_header(setup.example_domain()), set.items.iter().map(item_fields))
}

fn read_set(setup: &Setup, path: &Path) -> Result<TeachingSet> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut items = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let fields = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .with_context(|| format!("row {} of {}", i + 1, path.display()))?;
        items.push(setup.item_from_fields(&fields)?);
    }
    Ok(TeachingSet::new(items))
}

fn solve(sc: &Scenario) -> Result<Output> {
    let start = Instant::now();
    let setup = sc.setup()?;
    let learner = setup.learner();
    let sol = solve_step1(&learner, &sc.solver)?;
    let unpacked = unpack(&learner, sol.n_int, &sol.s, sol.big_s.as_ref(), &sc.solver)?;
    let report = teaching_impedance(&learner, &unpacked.set)?;
    let mle = if unpacked.set.is_empty() { None } else { Some(mle_of(&learner, &unpacked.set)?) };
    let not_teaching = sol.n_int == 0;
    let converged = sol.converged && unpacked.within_tolerance;
    let mut files = vec![("teaching_set.csv", set_csv(&setup, &unpacked.set)?)];
    files.push((
        "trace.csv",
        csv_text(
            &["iteration".into(), "objective".into()],
            sol.trace.iter().enumerate().map(|(i, v)| vec![i.to_string(), v.to_string()]),
        )?,
    ));
    if let Setup::Niw { .. } = setup {
        files.push(("unpack_panels.csv", unpack_panels(sc, &setup, &sol)?));
    }
    let body = json!({
        "model": sc.model_name(),
        "scenario": sc,
        "step1": sol,
        "teaching_set": unpacked.set.items,
        "ti": report,
        "mle": mle,
        "unpack": {
            "residual": unpacked.residual,
            "within_tolerance": unpacked.within_tolerance,
            "restarts": unpacked.restarts,
        },
        "not_teaching": not_teaching,
        "converged": converged,
        "wall_clock_s": start.elapsed().as_secs_f64(),
    });
    files.push(("report.json", json_text(&body)));
    let regime = if not_teaching { " (not teaching: the learner keeps its prior)" } else { "" };
    let summary = format!("n = {}{regime}\nTI = {:.6}", sol.n_int, report.ti);
    Ok(Output { files, summary, converged })
}

/// Unpacked sets from three consecutive seeds, for side-by-side plots.
fn unpack_panels(sc: &Scenario, setup: &Setup, sol: &bayesteach::solver::Step1Solution) -> Result<String> {
    let learner = setup.learner();
    let mut header = vec!["panel".to_string()];
    header.extend(set_header(setup.example_domain()));
    let mut rows = Vec::new();
    for panel in 0..3u64 {
        let opts = SolverOptions { seed: sc.solver.seed.wrapping_add(panel), ..sc.solver.clone() };
        let u = unpack(&learner, sol.n_int, &sol.s, sol.big_s.as_ref(), &opts)?;
        for item in &u.set.items {
            let mut row = vec![panel.to_string()];
            row.extend(item_fields(item));
            rows.push(row);
        }
    }
    csv_text(&header, rows)
}

fn ti(sc: &Scenario, path: &Path) -> Result<Output> {
    let setup = sc.setup()?;
    let set = read_set(&setup, path)?;
    let report = teaching_impedance(&setup.learner(), &set)?;
    let body = json!({ "model": sc.model_name(), "n": set.n(), "ti": report });
    Ok(Output {
        files: vec![("ti.json", json_text(&body))],
        summary: format!("TI = {:.6}", report.ti),
        converged: true,
    })
}

fn baseline(sc: &Scenario, n: Option<u64>, trials: usize) -> Result<Output> {
    if trials == 0 {
        bail!("--trials must be at least 1");
    }
    let start = Instant::now();
    let setup = sc.setup()?;
    let learner = setup.learner();
    let n = match n {
        Some(n) => n,
        None => solve_step1(&learner, &sc.solver)?.n_int,
    };
    let (stats, values) = random_baseline(&learner, n, trials, sc.solver.seed)?;
    let body = json!({
        "model": sc.model_name(),
        "baseline": stats,
        "wall_clock_s": start.elapsed().as_secs_f64(),
    });
    let csv = csv_text(
        &["trial".into(), "ti".into()],
        values.iter().enumerate().map(|(i, v)| vec![i.to_string(), v.to_string()]),
    )?;
    let summary =
        format!("{} trials of n = {n}: TI = {:.4} ± {:.4}, min {:.4}", stats.trials, stats.mean, stats.std, stats.min);
    Ok(Output { files: vec![("baseline.json", json_text(&body)), ("baseline_ti.csv", csv)], summary, converged: true })
}

fn solve_threshold(sc: &Scenario) -> Result<Output> {
    let t = sc.threshold()?;
    let teaching = match &sc.model {
        ModelScenario::Threshold(f) if matches!(f.effort, EffortSpec::MinSeparation { .. }) => {
            teach_threshold_minsep(t.theta_star, t.c)?
        }
        _ => teach_threshold(&t)?,
    };
    let csv = csv_text(
        &["x".into(), "label".into()],
        teaching.set.iter().map(|p| vec![p.x.to_string(), p.label.to_string()]),
    )?;
    let body = json!({ "model": sc.model_name(), "scenario": sc, "teaching": teaching });
    let summary = format!("epsilon = {}\nTI = {:.6}", teaching.epsilon, teaching.ti);
    Ok(Output { files: vec![("report.json", json_text(&body)), ("teaching_set.csv", csv)], summary, converged: true })
}

fn solve_two_model(sc: &Scenario) -> Result<Output> {
    let t = teach_two_model(&sc.two_model()?)?;
    let csv = csv_text(&["x".into()], t.set.items.iter().map(item_fields))?;
    let body = json!({ "model": sc.model_name(), "scenario": sc, "teaching": t, "not_teaching": t.n == 0 });
    let summary = format!("n = {}\nTI = {:.6}", t.n, t.ti);
    Ok(Output { files: vec![("report.json", json_text(&body)), ("teaching_set.csv", csv)], summary, converged: true })
}

fn naive_bayes(sc: &Scenario) -> Result<Output> {
    let ModelScenario::NaiveBayes(spec) = &sc.model else {
        bail!("naive-bayes needs a naive_bayes scenario, got {}", sc.model_name());
    };
    let t = compose_naive_bayes(spec, &sc.solver)?;
    let vocab = spec.words.first().map_or(0, |w| w.beta.len());
    let mut header = vec!["label".to_string()];
    header.extend((0..vocab).map(|w| format!("w{w}")));
    let csv = csv_text(
        &header,
        t.documents
            .iter()
            .map(|d| std::iter::once(d.label.to_string()).chain(d.words.iter().map(u64::to_string)).collect()),
    )?;
    let body = json!({ "model": sc.model_name(), "scenario": sc, "teaching": t });
    let summary = format!("class counts {:?}, {} documents", t.class_counts, t.documents.len());
    Ok(Output {
        files: vec![("report.json", json_text(&body)), ("documents.csv", csv)],
        summary,
        converged: t.converged,
    })
}

fn teachdim(sc: &Scenario) -> Result<Output> {
    let (cc, target): (ConceptClass, usize) = sc.concept_class()?;
    let (td, witness) = teaching_dim(&cc, target)?;
    let gamma = 1.0 / (cc.len() as f64 + 1.0);
    let (penalized_set, penalized_value) = penalized_minimizer(&cc, target, gamma)?;
    let body = json!({
        "model": sc.model_name(),
        "target": cc.name(target),
        "concepts": cc.len(),
        "items": cc.items(),
        "teaching_dimension": td,
        "witness": witness.to_string(),
        "penalized": { "gamma": gamma, "set": penalized_set.to_string(), "size": penalized_set.len(), "value": penalized_value },
    });
    let summary = format!("TD({}) = {td}, witness {witness}", cc.name(target));
    Ok(Output { files: vec![("teachdim.json", json_text(&body))], summary, converged: true })
}
