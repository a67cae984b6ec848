//! Seeded Monte Carlo trials of random shortening against the planners'
//! predictions.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, Check, PlanResult, Thm12Plan};
use crate::code::{LinearCode, BIAS_TOLERANCE};
use crate::error::{Error, Result};
use crate::gf::FieldElem;
use crate::mothers::{self, CodeFamilySpec, Family};
use crate::seed::derive_seed;
use crate::transform::{self, ExpanderGraph, IndexSet, WalkPolicy};

pub const DEFAULT_RESAMPLE_ATTEMPTS: u64 = 1 << 26;
const GRAPH_STREAM: u64 = 1 << 63;
const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MotherSource {
    Family(CodeFamilySpec),
    File { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Thm1,
    Thm12,
    Thm2,
    Cor,
    Pipeline,
    Custom,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    #[default]
    Uniform,
    Expander {
        degree: usize,
        #[serde(default)]
        policy: WalkPolicy,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mother: MotherSource,
    pub theorem: Theorem,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0_dual: Option<f64>,
    pub trials: usize,
    #[serde(default)]
    pub sampler: Sampler,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumeration_cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sweep: Option<Vec<usize>>,
    /// Shortening size for `custom` and `pipeline` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_count: Option<usize>,
    /// Puncturing size for `pipeline` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_count: Option<usize>,
    /// Redraw a random mother until its relative distance reaches this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_mother_delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resample_attempts: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::BadParameters("trials must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::BadParameters(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        let need = |v: Option<f64>, name: &str| {
            v.map(|_| ()).ok_or_else(|| Error::BadParameters(format!("theorem {:?} needs `{name}`", self.theorem)))
        };
        match self.theorem {
            Theorem::Thm1 => need(self.gamma, "gamma")?,
            Theorem::Thm12 => need(self.beta, "beta")?,
            Theorem::Thm2 => {
                need(self.gamma, "gamma")?;
                need(self.delta0_dual, "delta0_dual")?;
            }
            Theorem::Cor => need(self.delta0_dual, "delta0_dual")?,
            Theorem::Pipeline => {
                if self.s_count.is_none() || self.p_count.is_none() {
                    return Err(Error::BadParameters("pipeline runs need `s_count` and `p_count`".into()));
                }
            }
            Theorem::Custom => {
                if self.s_count.is_none() {
                    return Err(Error::BadParameters("custom runs need `s_count`".into()));
                }
            }
        }
        if let Sampler::Expander { degree, .. } = self.sampler {
            if degree % 2 == 1 || degree < 8 {
                return Err(Error::BadParameters(format!("expander degree must be even and >= 8, got {degree}")));
            }
        }
        Ok(())
    }

    fn lengths(&self) -> Option<Vec<usize>> {
        self.n_sweep.clone()
    }
}

/// Measured parameters of the mother code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotherParams {
    pub q: u32,
    pub n: usize,
    pub k: usize,
    pub rate: f64,
    pub distance: usize,
    pub relative_distance: f64,
    pub dual_distance: usize,
    pub relative_dual_distance: f64,
    pub bias: f64,
    /// Seed of the accepted draw when the mother was resampled for distance.
    pub resampled_seed: Option<u64>,
    pub resample_attempts: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub seed: u64,
    pub shorten_set: IndexSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub puncture_set: Option<IndexSet>,
    pub s_count: usize,
    /// Length of the resulting code.
    pub length: usize,
    pub dim: usize,
    /// Minimum distance of the resulting code, when it is nonzero.
    pub distance: Option<usize>,
    pub rate: f64,
    pub bias: f64,
    pub hit_all_ceps: bool,
    pub succeeded: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilsonInterval {
    pub lower: f64,
    pub upper: f64,
}

/// 95% Wilson score interval for `failures` out of `trials`.
pub fn wilson_interval(failures: usize, trials: usize) -> WilsonInterval {
    if trials == 0 {
        return WilsonInterval { lower: 0.0, upper: 1.0 };
    }
    let m = trials as f64;
    let p = failures as f64 / m;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / m;
    let center = (p + z2 / (2.0 * m)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / m + z2 / (4.0 * m * m)).sqrt();
    WilsonInterval { lower: (center - half).max(0.0).min(p), upper: (center + half).min(1.0).max(p) }
}

/// Plan attached to a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunPlan {
    Single(PlanResult),
    TwoStage(Thm12Plan),
    Fixed { s_count: usize, p_count: usize },
}

impl RunPlan {
    pub fn s_count(&self) -> usize {
        match self {
            RunPlan::Single(p) => p.s_count,
            RunPlan::TwoStage(p) => p.total_s_count(),
            RunPlan::Fixed { s_count, .. } => *s_count,
        }
    }

    pub fn p_count(&self) -> usize {
        match self {
            RunPlan::Fixed { p_count, .. } => *p_count,
            _ => 0,
        }
    }

    pub fn predicted_failure(&self) -> Option<f64> {
        match self {
            RunPlan::Single(p) => Some(p.predicted_failure),
            RunPlan::TwoStage(p) => Some(p.stage2.predicted_failure),
            RunPlan::Fixed { .. } => None,
        }
    }

    pub fn eps_inner(&self) -> Option<f64> {
        match self {
            RunPlan::Single(p) => p.eps_inner,
            RunPlan::TwoStage(p) => p.stage2.eps_inner,
            RunPlan::Fixed { .. } => None,
        }
    }

    pub fn rate_floor(&self) -> f64 {
        match self {
            RunPlan::Single(p) => p.rate_floor,
            RunPlan::TwoStage(p) => p.rate_floor,
            RunPlan::Fixed { .. } => 0.0,
        }
    }
}

/// Results at one code length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Run {
    pub n: usize,
    pub mother: MotherParams,
    pub preconditions: Vec<Check>,
    pub plan: RunPlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expander_lambda2: Option<f64>,
    pub trials: Vec<TrialRecord>,
    pub failures: usize,
    pub empirical_failure: f64,
    pub predicted_failure: Option<f64>,
    pub wilson_interval: WilsonInterval,
    pub rate_floor_held: bool,
    pub distance_nondecrease_held: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub runs: Vec<Run>,
}

impl Summary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Summary> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A mother code together with its measured parameters, checked against the
/// chosen theorem's hypotheses.
struct Prepared {
    code: LinearCode,
    params: MotherParams,
    checks: Vec<Check>,
    plan: Option<RunPlan>,
}

fn load_mother(cfg: &ExperimentConfig, n: Option<usize>) -> Result<(LinearCode, Option<(u64, u64)>)> {
    let (code, resampled) = match &cfg.mother {
        MotherSource::File { path } => {
            let c = mothers::read_code(path)?;
            if let Some(n) = n {
                if n != c.n() {
                    return Err(Error::BadParameters(format!("mother file has length {}, sweep asks for {n}", c.n())));
                }
            }
            (c, None)
        }
        MotherSource::Family(spec) => {
            let mut spec = spec.clone();
            if let Some(n) = n {
                if spec.family == Family::Simplex || spec.eval_points.is_some() {
                    return Err(Error::BadParameters("length sweeps need a family whose length is free".into()));
                }
                spec.n = Some(n);
            }
            match cfg.min_mother_delta {
                Some(min_delta) => {
                    if spec.family != Family::Random {
                        return Err(Error::BadParameters("min_mother_delta applies to random mothers only".into()));
                    }
                    let field = crate::gf::Field::with_order(spec.q as u64)?;
                    let len = spec.n.ok_or_else(|| Error::BadParameters("random mother needs `n`".into()))?;
                    let k = spec.k.ok_or_else(|| Error::BadParameters("random mother needs `k`".into()))?;
                    let min_d = (min_delta * len as f64 - 1e-9).ceil().max(0.0) as usize;
                    let attempts = cfg.resample_attempts.unwrap_or(DEFAULT_RESAMPLE_ATTEMPTS);
                    let r = mothers::random_linear_with_distance(&field, len, k, spec.seed, min_d, attempts)?;
                    (r.code, Some((r.seed, r.attempts)))
                }
                None => (spec.build()?, None),
            }
        }
    };
    let code = match cfg.enumeration_cap {
        Some(cap) => code.with_enumeration_cap(cap),
        None => code,
    };
    Ok((code, resampled))
}

fn measure(code: &LinearCode, resampled: Option<(u64, u64)>) -> Result<MotherParams> {
    if code.is_zero() {
        return Err(Error::ZeroCode);
    }
    let n = code.n();
    let d = code.distance()?;
    let dd = code.dual_distance()?;
    Ok(MotherParams {
        q: code.field().q(),
        n,
        k: code.k(),
        rate: code.rate(),
        distance: d,
        relative_distance: d as f64 / n as f64,
        dual_distance: dd,
        relative_dual_distance: dd as f64 / n as f64,
        bias: code.bias()?,
        resampled_seed: resampled.map(|r| r.0),
        resample_attempts: resampled.map(|r| r.1),
    })
}

fn plan_failure_checks(err: Error, checks: &mut Vec<Check>) -> Result<()> {
    match err {
        Error::Infeasible(reasons) => {
            for r in reasons {
                if !checks.iter().any(|c| !c.holds && r.starts_with(&c.name)) {
                    checks.push(Check { name: "planner".into(), holds: false, detail: r });
                }
            }
            Ok(())
        }
        e => Err(e),
    }
}

fn prepare(cfg: &ExperimentConfig, n: Option<usize>) -> Result<Prepared> {
    let (code, resampled) = load_mother(cfg, n)?;
    let params = measure(&code, resampled)?;
    let (q, len, rate, delta) = (params.q, params.n, params.rate, params.relative_distance);
    let eps = cfg.epsilon;
    let mut checks;
    let plan = match cfg.theorem {
        Theorem::Thm1 => {
            let gamma = cfg.gamma.unwrap_or_default();
            checks = bounds::thm1_preconditions(q, rate, delta, gamma, eps);
            match bounds::plan_thm1(q, rate, delta, gamma, eps, len) {
                Ok(p) => Some(RunPlan::Single(p)),
                Err(e) => {
                    plan_failure_checks(e, &mut checks)?;
                    None
                }
            }
        }
        Theorem::Thm12 => {
            let beta = cfg.beta.unwrap_or_default();
            checks = bounds::thm12_preconditions(q, rate, delta, beta, eps);
            match bounds::plan_thm12(q, rate, delta, beta, eps, len) {
                Ok(p) => Some(RunPlan::TwoStage(p)),
                Err(e) => {
                    plan_failure_checks(e, &mut checks)?;
                    None
                }
            }
        }
        Theorem::Thm2 | Theorem::Cor => {
            let dd0 = cfg.delta0_dual.unwrap_or_default();
            let gamma = match cfg.theorem {
                Theorem::Thm2 => Ok(cfg.gamma.unwrap_or_default()),
                _ => bounds::cor_gamma(q, delta).map(|g| g.gamma),
            };
            checks = vec![Check {
                name: "measured dual distance above dd0".into(),
                holds: params.relative_dual_distance > dd0,
                detail: format!(
                    "dual distance {} / n = {}, dd0 = {dd0}",
                    params.dual_distance, params.relative_dual_distance
                ),
            }];
            match gamma {
                Ok(gamma) => {
                    if cfg.theorem == Theorem::Cor {
                        checks.extend(bounds::cor_preconditions(q, rate, delta, dd0, eps, gamma));
                    }
                    checks.extend(bounds::thm2_preconditions(q, rate, delta, dd0, gamma, eps));
                    let planned = match cfg.theorem {
                        Theorem::Thm2 => bounds::plan_thm2(q, rate, delta, dd0, gamma, eps, len),
                        _ => bounds::plan_cor(q, rate, delta, dd0, eps, len),
                    };
                    match planned {
                        Ok(p) => Some(RunPlan::Single(p)),
                        Err(e) => {
                            plan_failure_checks(e, &mut checks)?;
                            None
                        }
                    }
                }
                Err(e) => {
                    plan_failure_checks(e, &mut checks)?;
                    None
                }
            }
        }
        Theorem::Pipeline | Theorem::Custom => {
            let s = cfg.s_count.unwrap_or_default();
            let p = if cfg.theorem == Theorem::Pipeline { cfg.p_count.unwrap_or_default() } else { 0 };
            checks = vec![Check {
                name: "s + p < n".into(),
                holds: s + p < len,
                detail: format!("s = {s}, p = {p}, n = {len}"),
            }];
            Some(RunPlan::Fixed { s_count: s, p_count: p })
        }
    };
    Ok(Prepared { code, params, checks, plan })
}

struct TrialContext<'a> {
    cfg: &'a ExperimentConfig,
    code: &'a LinearCode,
    params: &'a MotherParams,
    plan: &'a RunPlan,
    graph: Option<ExpanderGraph>,
    policy: WalkPolicy,
    ceps: Vec<Vec<FieldElem>>,
    eps_inner: f64,
}

impl TrialContext<'_> {
    fn sample(&self, s_count: usize, seed: u64) -> Result<IndexSet> {
        match &self.graph {
            Some(g) if s_count > 0 => g.sample(s_count, self.policy, seed),
            _ => transform::sample_uniform(self.code.n(), s_count, seed),
        }
    }

    fn trial(&self, index: usize) -> Result<TrialRecord> {
        let seed = derive_seed(self.cfg.master_seed, index as u64);
        let n = self.code.n();
        let k = self.code.k();
        let s_count = self.plan.s_count();
        let p_count = self.plan.p_count();
        let s_set = self.sample(s_count, seed)?;
        let shortened = transform::shorten(self.code, &s_set)?;
        let hit_all = transform::hits_all(&s_set, &self.ceps);

        if shortened.k() + s_count < k {
            return Err(Error::InvariantViolation(format!(
                "trial {index}: shortened dimension {} below k - s = {}",
                shortened.k(),
                k - s_count
            )));
        }

        let (result, p_set) = if self.cfg.theorem == Theorem::Pipeline {
            if shortened.is_zero() {
                (shortened, None)
            } else {
                let p_set = transform::sample_uniform(shortened.n(), p_count, derive_seed(seed, 1))?;
                let out = transform::puncture(&shortened, &p_set)
                    .unwrap_or_else(|_| LinearCode::zero(shortened.field(), shortened.n() - p_count));
                (out, Some(p_set))
            }
        } else {
            (shortened, None)
        };

        let length = result.n();
        let dim = result.k();
        let rate = dim as f64 / length as f64;
        let bias = if result.is_zero() { 0.0 } else { result.bias()? };
        let distance = if result.is_zero() { None } else { Some(result.distance()?) };

        if self.cfg.theorem != Theorem::Pipeline {
            if let Some(d) = distance.filter(|&d| d < self.params.distance) {
                return Err(Error::InvariantViolation(format!(
                    "trial {index}: shortened distance {d} below mother distance {}",
                    self.params.distance
                )));
            }
            if hit_all && dim >= 1 {
                let bound = bounds::shortened_bias_bound(self.eps_inner, n, s_count)?;
                if bias > bound + BIAS_TOLERANCE {
                    return Err(Error::InvariantViolation(format!(
                        "trial {index}: every poorly biased codeword was hit but bias {bias} exceeds {bound}"
                    )));
                }
            }
        }

        let succeeded = dim >= 1 && bias <= self.cfg.epsilon + BIAS_TOLERANCE && rate >= self.plan.rate_floor() - 1e-12;
        Ok(TrialRecord {
            trial_index: index,
            seed,
            shorten_set: s_set,
            puncture_set: p_set,
            s_count,
            length,
            dim,
            distance,
            rate,
            bias,
            hit_all_ceps: hit_all,
            succeeded,
        })
    }
}

fn run_prepared(cfg: &ExperimentConfig, prepared: Prepared) -> Result<Run> {
    let Prepared { code, params, checks, plan } = prepared;
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.holds).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    let plan = match plan {
        Some(p) if failed.is_empty() => p,
        _ => return Err(Error::Infeasible(failed)),
    };
    let (graph, policy) = match cfg.sampler {
        Sampler::Uniform => (None, WalkPolicy::default()),
        Sampler::Expander { degree, policy } => {
            (Some(ExpanderGraph::build(code.n(), degree, derive_seed(cfg.master_seed, GRAPH_STREAM))?), policy)
        }
    };
    let eps_inner = plan.eps_inner().unwrap_or(cfg.epsilon);
    let ceps = code.not_eps_biased_set(eps_inner)?;
    let ctx = TrialContext { cfg, code: &code, params: &params, plan: &plan, graph, policy, ceps, eps_inner };
    let trials: Vec<TrialRecord> = (0..cfg.trials).into_par_iter().map(|i| ctx.trial(i)).collect::<Result<_>>()?;

    let failures = trials.iter().filter(|t| !t.succeeded).count();
    let rate_floor = plan.rate_floor();
    let rate_floor_held = trials.iter().all(|t| t.rate >= rate_floor - 1e-12);
    let distance_nondecrease_held =
        cfg.theorem == Theorem::Pipeline || trials.iter().all(|t| t.distance.is_none_or(|d| d >= params.distance));
    Ok(Run {
        n: code.n(),
        expander_lambda2: ctx.graph.as_ref().map(|g| g.lambda2()),
        mother: params,
        preconditions: checks,
        predicted_failure: plan.predicted_failure(),
        plan,
        failures,
        empirical_failure: failures as f64 / trials.len() as f64,
        wilson_interval: wilson_interval(failures, trials.len()),
        trials,
        rate_floor_held,
        distance_nondecrease_held,
    })
}

/// Runs every length of the configuration. Fails when any length violates
/// the chosen theorem's hypotheses.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Summary> {
    cfg.validate()?;
    let lengths: Vec<Option<usize>> = match cfg.lengths() {
        Some(ns) => ns.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut runs = Vec::with_capacity(lengths.len());
    for n in lengths {
        runs.push(run_prepared(cfg, prepare(cfg, n)?)?);
    }
    Ok(Summary { config: cfg.clone(), runs })
}

/// Hypothesis checklist, plan and trial outcome at one length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub n: usize,
    pub mother: MotherParams,
    pub preconditions: Vec<Check>,
    pub preconditions_hold: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<Run>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: ExperimentConfig,
    pub lengths: Vec<Verification>,
}

impl VerificationReport {
    /// True when every length ran and every deterministic claim held.
    pub fn all_claims_hold(&self) -> bool {
        self.lengths.iter().all(|v| v.run.as_ref().is_some_and(|r| r.rate_floor_held && r.distance_nondecrease_held))
    }
}

/// Like [`run_trials`], but lengths whose hypotheses fail are reported with
/// the failing checks instead of aborting, and no trials are run for them.
pub fn verify_theorem(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let lengths: Vec<Option<usize>> = match cfg.lengths() {
        Some(ns) => ns.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::with_capacity(lengths.len());
    for n in lengths {
        let prepared = prepare(cfg, n)?;
        let preconditions = prepared.checks.clone();
        let mother = prepared.params.clone();
        let holds = prepared.plan.is_some() && preconditions.iter().all(|c| c.holds);
        let run = if holds { Some(run_prepared(cfg, prepared)?) } else { None };
        out.push(Verification { n: mother.n, mother, preconditions, preconditions_hold: holds, run });
    }
    Ok(VerificationReport { config: cfg.clone(), lengths: out })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Csv,
}

pub const CSV_HEADER: &str = "trial,seed,s_count,dim,rate,bias,hit_all,succeeded";

/// Trial rows of every run, in run order.
pub fn trials_csv<'a>(trials: impl IntoIterator<Item = &'a TrialRecord>) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for t in trials {
        s.push_str(&format!(
            "{},{},{},{},{:.16e},{:.16e},{},{}\n",
            t.trial_index, t.seed, t.s_count, t.dim, t.rate, t.bias, t.hit_all_ceps, t.succeeded
        ));
    }
    s
}

pub fn export(summary: &Summary, format: ExportFormat, path: impl AsRef<Path>) -> Result<()> {
    let body = match format {
        ExportFormat::Json => summary.to_json()? + "\n",
        ExportFormat::Csv => trials_csv(summary.runs.iter().flat_map(|r| r.trials.iter())),
    };
    std::fs::write(path, body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parity_cfg(theorem: &str, trials: usize, extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"mother":{{"family":"parity","q":2,"n":6}},"theorem":"{theorem}","epsilon":0.5,"trials":{trials}{extra}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn wilson_examples() {
        let w = wilson_interval(0, 200);
        assert_eq!(w.lower, 0.0);
        // Closed form at zero failures: z^2 / (m + z^2).
        let z2 = WILSON_Z * WILSON_Z;
        assert!((w.upper - z2 / (200.0 + z2)).abs() < 1e-12);
        let w = wilson_interval(10, 100);
        assert!((w.lower - 0.05523).abs() < 1e-4 && (w.upper - 0.17437).abs() < 1e-4);
        let w = wilson_interval(5, 5);
        assert_eq!(w.upper, 1.0);
        assert!(w.lower <= 1.0);
    }

    #[test]
    fn config_rejects_unknown_and_invalid() {
        let base = r#""mother":{"family":"parity","q":2,"n":6},"theorem":"custom","s_count":1,"epsilon":0.5"#;
        assert!(ExperimentConfig::from_json(&format!("{{{base},\"trials\":1}}")).is_ok());
        assert!(ExperimentConfig::from_json(&format!("{{{base},\"trials\":1,\"typo\":3}}")).is_err());
        assert!(ExperimentConfig::from_json(&format!("{{{base},\"trials\":0}}")).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"mother":{"family":"parity","q":2,"n":6},"theorem":"thm1","epsilon":0.5,"trials":1}"#
        )
        .is_err());
        let cfg = ExperimentConfig::from_json(&format!(
            "{{{base},\"trials\":1,\"sampler\":{{\"expander\":{{\"degree\":8}}}}}}"
        ))
        .unwrap();
        assert_eq!(cfg.sampler, Sampler::Expander { degree: 8, policy: WalkPolicy::DistinctUntilSize });
        let cfg = ExperimentConfig::from_json(
            r#"{"mother":{"path":"x.code"},"theorem":"custom","s_count":0,"epsilon":0.5,"trials":1}"#,
        )
        .unwrap();
        assert_eq!(cfg.mother, MotherSource::File { path: "x.code".into() });
    }

    #[test]
    fn identity_shortening_matches_mother() {
        // The even-weight [6,5] code contains 111111, so its bias is 1.
        let cfg = parity_cfg("custom", 1, r#","s_count":0"#);
        let s = run_trials(&cfg).unwrap();
        let r = &s.runs[0];
        assert_eq!(r.mother.bias, 1.0);
        assert_eq!(r.trials.len(), 1);
        assert!(!r.trials[0].succeeded);
        assert_eq!(r.failures, 1);

        let cfg = ExperimentConfig::from_json(
            r#"{"mother":{"family":"simplex","q":2,"k":3},"theorem":"custom","s_count":0,"epsilon":0.5,"trials":1}"#,
        )
        .unwrap();
        let r = &run_trials(&cfg).unwrap().runs[0];
        assert!(r.trials[0].succeeded);
        assert_eq!(r.empirical_failure, 0.0);
    }

    #[test]
    fn trial_records_are_consistent() {
        let cfg = parity_cfg("custom", 20, r#","s_count":2"#);
        let s = run_trials(&cfg).unwrap();
        for (i, t) in s.runs[0].trials.iter().enumerate() {
            assert_eq!(t.trial_index, i);
            assert_eq!(t.seed, derive_seed(0, i as u64));
            assert_eq!(t.shorten_set.len(), 2);
            assert_eq!(t.length, 4);
            assert_eq!(t.dim, 3);
            assert_eq!(t.rate, t.dim as f64 / (6 - 2) as f64);
        }
    }

    #[test]
    fn precondition_failure_reported() {
        // Parity codes have distance 2, far below the high-distance window.
        let cfg = parity_cfg("thm1", 20, r#","gamma":0.1"#);
        match run_trials(&cfg) {
            Err(Error::Infeasible(r)) => assert!(r.iter().any(|s| s.starts_with("delta above threshold"))),
            other => panic!("{other:?}"),
        }
        let rep = verify_theorem(&cfg).unwrap();
        let v = &rep.lengths[0];
        assert!(!v.preconditions_hold);
        assert!(v.run.is_none());
        let failed: Vec<&str> = v.preconditions.iter().filter(|c| !c.holds).map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"delta above threshold"));
        assert!(!rep.all_claims_hold());
    }

    #[test]
    fn pipeline_on_reed_solomon() {
        let cfg = ExperimentConfig::from_json(
            r#"{"mother":{"family":"rs","q":16,"n":15,"k":5},"theorem":"pipeline","s_count":2,"p_count":3,"epsilon":0.9,"trials":20,"master_seed":9}"#,
        )
        .unwrap();
        let s = run_trials(&cfg).unwrap();
        let r = &s.runs[0];
        assert_eq!((r.mother.distance, r.mother.dual_distance), (11, 6));
        for t in &r.trials {
            assert_eq!(t.length, 10);
            assert!(t.dim >= 3);
            assert_eq!(t.puncture_set.as_ref().unwrap().n(), 13);
        }
    }

    #[test]
    fn json_and_csv_export() {
        let cfg = parity_cfg("custom", 3, r#","s_count":1"#);
        let s = run_trials(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let jp = dir.path().join("summary.json");
        export(&s, ExportFormat::Json, &jp).unwrap();
        assert_eq!(Summary::from_json(&std::fs::read_to_string(&jp).unwrap()).unwrap(), s);
        let cp = dir.path().join("trials.csv");
        export(&s, ExportFormat::Csv, &cp).unwrap();
        let csv = std::fs::read_to_string(&cp).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 3);
        assert_eq!(trials_csv(std::iter::empty()), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn deterministic_at_any_worker_count() {
        let cfg = ExperimentConfig::from_json(
            r#"{"mother":{"family":"random","q":2,"n":24,"k":4,"seed":3},"theorem":"custom","s_count":3,"epsilon":0.6,"trials":64,"master_seed":77,"sampler":{"expander":{"degree":8}}}"#,
        )
        .unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let a = one.install(|| run_trials(&cfg).unwrap().to_json().unwrap());
        let b = run_trials(&cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        assert!(a.contains("expander_lambda2"));
    }
}
