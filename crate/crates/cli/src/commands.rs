use std::path::{Path, PathBuf};

use epsbias::bounds::{self, PlanResult, Thm12Plan};
use epsbias::experiment::{self, ExperimentConfig, ExportFormat, Run, RunPlan};
use epsbias::mothers::{self, CodeFamilySpec, Family};
use epsbias::seed::derive_seed;
use epsbias::transform::{self, ExpanderGraph, WalkPolicy};
use epsbias::{Error, IndexSet, LinearCode, DEFAULT_ENUMERATION_CAP};

use crate::{
    AnalyzeArgs, Cli, Command, ExperimentArgs, GenArgs, PipelineArgs, PlanArgs, SamplerKind, SamplingArgs, TheoremKind,
    TransformArgs,
};

const MAX_ENUM_VAR: &str = "EPSBIAS_MAX_ENUM";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::EnumerationCapExceeded { .. }) => 3,
            CliError::Core(Error::Io(_) | Error::Json(_) | Error::Parse { .. }) => 2,
            CliError::Core(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn enumeration_cap(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(MAX_ENUM_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{MAX_ENUM_VAR} must be a nonnegative integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn load_code(path: &Path, cap: Option<u64>) -> Result<LinearCode> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let code = LinearCode::from_text(&text).map_err(|e| match e {
        Error::Parse { line, column, msg } => {
            CliError::Usage(format!("--code {}: parse error at line {line}, column {column}: {msg}", path.display()))
        }
        e => e.into(),
    })?;
    Ok(code.with_enumeration_cap(cap.unwrap_or(DEFAULT_ENUMERATION_CAP)))
}

/// Writes `code` to `out`, or to standard output when no file is given. The
/// human summary goes to standard output only when the code does not.
fn emit_code(code: &LinearCode, out: Option<&Path>, summary: &[String]) -> Result<()> {
    match out {
        Some(path) => {
            mothers::write_code(code, path).map_err(|e| match e {
                Error::Io(source) => CliError::Io { path: path.to_path_buf(), source },
                e => e.into(),
            })?;
            for line in summary {
                println!("{line}");
            }
            println!("wrote {}", path.display());
        }
        None => {
            print!("{}", code.to_text());
            for line in summary {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn shape(code: &LinearCode) -> String {
    format!("[{}, {}] over GF({})", code.n(), code.k(), code.field().q())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let cap = enumeration_cap(cli.max_enum)?;
    match cli.command {
        Command::Gen(a) => gen(a, cap),
        Command::Analyze(a) => analyze(a, cap),
        Command::Shorten(a) => transform_cmd(a, cap, true),
        Command::Puncture(a) => transform_cmd(a, cap, false),
        Command::Pipeline(a) => pipeline(a, cap),
        Command::Plan(a) => plan(a),
        Command::Experiment(a) => run_experiment(a, cap),
    }
}

fn gen(a: GenArgs, cap: Option<u64>) -> Result<()> {
    let family: Family = a.family.parse().map_err(|_| {
        CliError::Usage(format!("--family: unknown family `{}` (rs, random, repetition, parity, simplex)", a.family))
    })?;
    let mut spec = CodeFamilySpec::new(family, a.q, a.n, a.k);
    spec.seed = a.seed;
    let code = spec.build()?.with_enumeration_cap(cap.unwrap_or(DEFAULT_ENUMERATION_CAP));
    let mut summary = vec![format!("generated {:?} code {}", family, shape(&code))];
    if family == Family::Random {
        summary.push(format!("seed = {}", a.seed));
    }
    emit_code(&code, a.out.as_deref(), &summary)
}

fn analyze(a: AnalyzeArgs, cap: Option<u64>) -> Result<()> {
    let code = load_code(&a.code, cap)?;
    let field = code.field();
    println!("field = GF({}^{})", field.p(), field.r());
    println!("n = {}", code.n());
    println!("k = {}", code.k());
    println!("rate = {:.12}", code.rate());
    if code.is_zero() {
        println!("zero code: distance and bias undefined");
        return Ok(());
    }
    println!("d = {}", code.distance()?);
    println!("dual_distance = {}", code.dual_distance()?);
    let report = code.bias_report(a.epsilon)?;
    if field.p() == 2 {
        // Character values are +-1, so the extreme sum is an integer.
        let m = report.max_character_sum.round() as u64;
        let n = code.n() as u64;
        let g = gcd(m, n).max(1);
        println!("bias = {}/{} ({:.12})", m / g, n / g, report.epsilon);
    } else {
        println!("bias = {:.12}", report.epsilon);
    }
    let witness: Vec<String> = report.witness.iter().map(|e| e.0.to_string()).collect();
    println!("witness = {}", witness.join(" "));
    if let (Some(eps), Some(count)) = (report.query_epsilon, report.ceps_size) {
        println!("not {eps}-biased codewords = {count}");
        println!("{eps}-biased = {}", count == 0);
    }
    Ok(())
}

fn sample_set(n: usize, count: usize, sampling: &SamplingArgs, summary: &mut Vec<String>) -> Result<IndexSet> {
    summary.push(format!("seed = {}", sampling.seed));
    match sampling.sampler {
        SamplerKind::Uniform => {
            summary.push("sampler = uniform".into());
            Ok(transform::sample_uniform(n, count, sampling.seed)?)
        }
        SamplerKind::Expander => {
            let graph = ExpanderGraph::build(n, sampling.degree, sampling.seed)?;
            summary.push(format!("sampler = expander (degree {}, lambda2 = {:.6})", sampling.degree, graph.lambda2()));
            Ok(graph.sample(count, WalkPolicy::default(), derive_seed(sampling.seed, 1))?)
        }
    }
}

fn set_text(set: &IndexSet) -> String {
    set.indices().iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

fn transform_cmd(a: TransformArgs, cap: Option<u64>, shorten: bool) -> Result<()> {
    let flag = if shorten { "--s" } else { "--p" };
    let code = load_code(&a.code, cap)?;
    let n = code.n();
    let mut summary = Vec::new();
    let set = match (&a.set, a.s) {
        (Some(idx), _) => IndexSet::explicit(n, idx).map_err(|e| CliError::Usage(format!("--set: {e}")))?,
        (None, Some(count)) => {
            if count >= n {
                return Err(CliError::Usage(format!("{flag}: need fewer than n = {n} positions, got {count}")));
            }
            sample_set(n, count, &a.sampling, &mut summary)?
        }
        (None, None) => return Err(CliError::Usage(format!("{flag} or --set is required"))),
    };
    let out = if shorten {
        transform::shorten(&code, &set)?
    } else {
        match transform::puncture(&code, &set) {
            Err(Error::ZeroCode) => LinearCode::zero(code.field(), n - set.len()),
            r => r?,
        }
    };
    let verb = if shorten { "shortened" } else { "punctured" };
    summary.insert(0, format!("{verb} {} -> {}", shape(&code), shape(&out)));
    summary.insert(1, format!("set = {}", set_text(&set)));
    emit_code(&out, a.out.as_deref(), &summary)
}

fn pipeline(a: PipelineArgs, cap: Option<u64>) -> Result<()> {
    let code = load_code(&a.code, cap)?;
    let n = code.n();
    let mut summary = Vec::new();
    let outcome = match (&a.s_set, &a.p_set) {
        (Some(s), Some(p)) => {
            let s = IndexSet::explicit(n, s).map_err(|e| CliError::Usage(format!("--s-set: {e}")))?;
            let p = IndexSet::explicit(n - s.len(), p).map_err(|e| CliError::Usage(format!("--p-set: {e}")))?;
            transform::shorten_then_puncture_with(&code, &s, &p)?
        }
        _ => {
            let (s, p) = (a.s.unwrap_or(0), a.p.unwrap_or(0));
            if s + p >= n {
                return Err(CliError::Usage(format!("--s + --p must be below n = {n}, got {}", s + p)));
            }
            summary.push(format!("seed = {}", a.seed));
            transform::shorten_then_puncture(&code, s, p, a.seed)?
        }
    };
    summary.insert(0, format!("shortened {} -> {}", shape(&code), shape(&outcome.shortened)));
    summary.insert(1, format!("punctured -> {}", shape(&outcome.code)));
    summary.insert(2, format!("shorten set = {}", set_text(&outcome.shorten_set)));
    summary.insert(3, format!("puncture set = {}", set_text(&outcome.puncture_set)));
    emit_code(&outcome.code, a.out.as_deref(), &summary)
}

fn require(v: Option<f64>, flag: &str, theorem: &str) -> Result<f64> {
    v.ok_or_else(|| CliError::Usage(format!("{flag} is required for --theorem {theorem}")))
}

fn print_plan(p: &PlanResult, indent: &str) {
    println!("{indent}n = {}", p.n);
    println!("{indent}s_fraction = {}", p.s_fraction);
    println!("{indent}s_count = {}", p.s_count);
    if let Some(e) = p.eps_inner {
        println!("{indent}eps_inner = {e}");
    }
    println!("{indent}predicted_failure = {:e}", p.predicted_failure);
    println!("{indent}ln_failure = {}", p.ln_failure);
    println!("{indent}rate_floor = {}", p.rate_floor);
}

fn print_two_stage(p: &Thm12Plan) {
    println!("s1_fraction = {}", p.s1_fraction);
    println!("s1_count = {}", p.s1_count);
    println!("delta_amplified = {}", p.delta_amplified);
    println!("rate_amplified = {}", p.rate_amplified);
    println!("gamma = {}", p.gamma);
    println!("rate_floor = {}", p.rate_floor);
    println!("total_s_count = {}", p.total_s_count());
    println!("stage2:");
    print_plan(&p.stage2, "  ");
}

fn plan(a: PlanArgs) -> Result<()> {
    let n = a.n.ok_or_else(|| CliError::Usage("--n is required".into()))?;
    match a.theorem {
        TheoremKind::One => {
            let gamma = require(a.gamma, "--gamma", "1")?;
            let eps = require(a.epsilon, "--epsilon", "1")?;
            let p = bounds::plan_thm1(a.q, a.r, a.delta, gamma, eps, n)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&p).map_err(Error::from)?)
            } else {
                print_plan(&p, "")
            }
        }
        TheoremKind::OneB => {
            let beta = require(a.beta, "--beta", "1b")?;
            let eps = require(a.epsilon, "--epsilon", "1b")?;
            let p = bounds::plan_thm12(a.q, a.r, a.delta, beta, eps, n)?;
            if a.json {
                println!("{}", serde_json::to_string_pretty(&p).map_err(Error::from)?)
            } else {
                print_two_stage(&p)
            }
        }
        TheoremKind::Two | TheoremKind::Cor => {
            let name = if a.theorem == TheoremKind::Two { "2" } else { "cor" };
            let dd0 = require(a.delta0_dual, "--delta0-dual", name)?;
            let eps = require(a.epsilon, "--epsilon", name)?;
            let p = if a.theorem == TheoremKind::Two {
                let gamma = require(a.gamma, "--gamma", "2")?;
                bounds::plan_thm2(a.q, a.r, a.delta, dd0, gamma, eps, n)?
            } else {
                let g = bounds::cor_gamma(a.q, a.delta)?;
                if !a.json {
                    println!("gamma = {} (eta = {}, eta_max = {})", g.gamma, g.eta, g.eta_max);
                }
                bounds::plan_cor(a.q, a.r, a.delta, dd0, eps, n)?
            };
            if a.json {
                println!("{}", serde_json::to_string_pretty(&p).map_err(Error::from)?)
            } else {
                print_plan(&p, "")
            }
        }
    }
    Ok(())
}

fn describe_run(run: &Run) {
    let plan = match &run.plan {
        RunPlan::Single(p) => format!("s_count = {}", p.s_count),
        RunPlan::TwoStage(p) => format!("s_count = {} + {}", p.s1_count, p.stage2.s_count),
        RunPlan::Fixed { s_count, p_count } => format!("s_count = {s_count}, p_count = {p_count}"),
    };
    println!(
        "n = {}: mother [{}, {}, {}], {plan}, failures {}/{} ({:.4}), wilson 95% [{:.4}, {:.4}]",
        run.n,
        run.mother.n,
        run.mother.k,
        run.mother.distance,
        run.failures,
        run.trials.len(),
        run.empirical_failure,
        run.wilson_interval.lower,
        run.wilson_interval.upper
    );
    if let Some(p) = run.predicted_failure {
        println!("  predicted failure <= {p:e}");
    }
    if let Some(l) = run.expander_lambda2 {
        println!("  expander lambda2 = {l:.6}");
    }
    println!("  rate floor held: {}, distance non-decreasing: {}", run.rate_floor_held, run.distance_nondecrease_held);
}

fn run_experiment(a: ExperimentArgs, cap: Option<u64>) -> Result<()> {
    let text = std::fs::read_to_string(&a.config).map_err(|source| CliError::Io { path: a.config.clone(), source })?;
    let mut cfg = ExperimentConfig::from_json(&text).map_err(|e| match e {
        Error::Json(j) => CliError::Usage(format!("--config {}: {j}", a.config.display())),
        e => e.into(),
    })?;
    if cfg.enumeration_cap.is_none() {
        cfg.enumeration_cap = cap;
    }
    std::fs::create_dir_all(&a.out).map_err(|source| CliError::Io { path: a.out.clone(), source })?;
    println!("master_seed = {}", cfg.master_seed);
    if a.verify {
        let report = experiment::verify_theorem(&cfg)?;
        for v in &report.lengths {
            if !v.preconditions_hold {
                println!("n = {}: hypotheses fail, no trials run", v.n);
                for c in v.preconditions.iter().filter(|c| !c.holds) {
                    println!("  {} ({})", c.name, c.detail);
                }
            }
        }
        let path = a.out.join("verification.json");
        let body = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
        std::fs::write(&path, body).map_err(|source| CliError::Io { path: path.clone(), source })?;
        for run in report.lengths.iter().filter_map(|v| v.run.as_ref()) {
            describe_run(run);
        }
        println!("wrote {}", path.display());
        if !report.all_claims_hold() {
            return Err(Error::Infeasible(vec!["some lengths failed their hypotheses or claims".into()]).into());
        }
        return Ok(());
    }
    let summary = experiment::run_trials(&cfg)?;
    for run in &summary.runs {
        describe_run(run);
    }
    let json_path = a.out.join("summary.json");
    let csv_path = a.out.join("trials.csv");
    experiment::export(&summary, ExportFormat::Json, &json_path)?;
    experiment::export(&summary, ExportFormat::Csv, &csv_path)?;
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}
