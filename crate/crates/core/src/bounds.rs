//! Closed-form bounds: entropy, Johnson radius and count, hitting
//! probabilities, moment and tail bounds, and the shortening-size planners.
//!
//! Quantities with exponents of order `n` are evaluated as natural logs; the
//! `ln_*` functions return those raw logs and the plain versions exponentiate
//! (and clamp where the value is a probability).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn ln_q(q: u32) -> f64 {
    (q as f64).ln()
}

fn log_q(q: u32, x: f64) -> f64 {
    x.ln() / ln_q(q)
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn check_q(q: u32) -> Result<()> {
    if q < 2 {
        return Err(Error::domain(format!("alphabet size must be at least 2, got {q}")));
    }
    Ok(())
}

/// `(q - 1) / q`.
pub fn plotkin_point(q: u32) -> f64 {
    (q as f64 - 1.0) / q as f64
}

/// q-ary entropy `H_q(x)` with `0 log 0 = 0`.
pub fn entropy_q(q: u32, x: f64) -> Result<f64> {
    check_q(q)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("entropy argument {x} outside [0, 1]")));
    }
    let qf = q as f64;
    // ln_1p keeps the last term accurate when x is below machine epsilon.
    let tail = if x == 1.0 { 0.0 } else { (1.0 - x) * (-x).ln_1p() };
    Ok((x * (qf - 1.0).ln() - xlogx(x) - tail) / qf.ln())
}

/// `-(1 + 2 gamma) x log_q x - H_q(x)`, positive for `0 < x < q^(-1/gamma)`.
pub fn entropy_inequality_margin(q: u32, x: f64, gamma: f64) -> Result<f64> {
    check_q(q)?;
    if !(gamma > 0.0 && gamma < 0.25) {
        return Err(Error::domain(format!("gamma = {gamma} outside (0, 1/4)")));
    }
    let limit = (1.0 / q as f64).powf(1.0 / gamma);
    if !(x > 0.0 && x < limit) {
        return Err(Error::domain(format!("x = {x} outside (0, {limit:e})")));
    }
    Ok(-(1.0 + 2.0 * gamma) * x * log_q(q, x) - entropy_q(q, x)?)
}

/// Johnson radius `J_q(delta) = (1 - 1/q)(1 - sqrt(1 - q delta / (q - 1)))`.
pub fn johnson_radius(q: u32, delta: f64) -> Result<f64> {
    check_q(q)?;
    let top = plotkin_point(q);
    if !(0.0..=top).contains(&delta) {
        return Err(Error::domain(format!("delta = {delta} outside [0, {top}]")));
    }
    let inner = (1.0 - delta / top).max(0.0);
    Ok(top * (1.0 - inner.sqrt()))
}

/// The bias level `2(q-1) sqrt(((q-1)/q)((q-1)/q - delta))` above which a
/// code of relative distance `delta` has at most `q^2 delta n^2` codewords
/// that are not biased.
pub fn johnson_eps_threshold(q: u32, delta: f64) -> Result<f64> {
    check_q(q)?;
    let top = plotkin_point(q);
    if !(0.0..=top).contains(&delta) {
        return Err(Error::domain(format!("delta = {delta} outside [0, {top}]")));
    }
    Ok(2.0 * (q as f64 - 1.0) * (top * (top - delta)).max(0.0).sqrt())
}

/// `(eps_threshold, q^2 delta n^2)`.
pub fn johnson_ceps_bound(q: u32, delta: f64, n: usize) -> Result<(f64, f64)> {
    let thr = johnson_eps_threshold(q, delta)?;
    let qf = q as f64;
    Ok((thr, qf * qf * delta * (n as f64) * (n as f64)))
}

/// The smallest relative distance for which the Johnson threshold is below `eps`:
/// `(q-1)/q - (q/(q-1)) (eps / (2(q-1)))^2`.
pub fn thm1_delta_threshold(q: u32, eps: f64) -> f64 {
    let qf = q as f64;
    let t = eps / (2.0 * (qf - 1.0));
    plotkin_point(q) - qf / (qf - 1.0) * t * t
}

/// `(1 - delta)^s`.
pub fn miss_probability_bound(delta: f64, s_count: usize) -> f64 {
    (1.0 - delta).powi(s_count as i32)
}

/// `(eps n + s) / (n - s)`.
pub fn shortened_bias_bound(eps: f64, n: usize, s_count: usize) -> Result<f64> {
    if s_count >= n {
        return Err(Error::domain(format!("shortening {s_count} of {n} positions")));
    }
    Ok((eps * n as f64 + s_count as f64) / (n - s_count) as f64)
}

fn ln_factorial(m: u32) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// `ln(2 (2n)^(d/2) (d/2)!)`.
pub fn ln_moment_bound(n: usize, d: u32) -> Result<f64> {
    if d < 2 || d % 2 == 1 {
        return Err(Error::OddMoment(d));
    }
    let h = d / 2;
    Ok(2f64.ln() + h as f64 * (2.0 * n as f64).ln() + ln_factorial(h))
}

/// `2 (2n)^(d/2) (d/2)!`; infinite when it overflows `f64`.
pub fn moment_bound(n: usize, d: u32) -> Result<f64> {
    Ok(ln_moment_bound(n, d)?.exp())
}

/// `ln(4 sqrt(pi d) (delta / (eps^2 e))^(delta n / 2))` with `delta = d / n`.
pub fn ln_tail_bound(n: usize, d: usize, eps: f64) -> Result<f64> {
    if d == 0 || d > n {
        return Err(Error::domain(format!("need 1 <= d <= n, got d={d}, n={n}")));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eps = {eps} must be positive")));
    }
    let delta = d as f64 / n as f64;
    let df = d as f64;
    Ok(4f64.ln() + 0.5 * (std::f64::consts::PI * df).ln() + df / 2.0 * (delta / (eps * eps * std::f64::consts::E)).ln())
}

/// Tail bound for sums of `d`-wise independent centred variables in `[-1, 1]`,
/// clamped to 1.
pub fn tail_bound(n: usize, d: usize, eps: f64) -> Result<f64> {
    Ok(ln_tail_bound(n, d, eps)?.exp().min(1.0))
}

fn check_dual_params(q: u32, rate: f64, delta_dual: f64, n: usize, eps: f64) -> Result<()> {
    check_q(q)?;
    if !(delta_dual > 0.0 && delta_dual <= 1.0) {
        return Err(Error::domain(format!("dual relative distance {delta_dual} outside (0, 1]")));
    }
    if delta_dual * (n as f64) < 1.0 {
        return Err(Error::domain(format!("dual distance {} is below one symbol", delta_dual * n as f64)));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::domain(format!("rate {rate} outside (0, 1]")));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

/// `ln(8 q sqrt(pi dd n) (2 dd / (eps^2 e))^(dd n / 2) q^(R n))`, `dd` the
/// relative dual distance.
pub fn ln_ceps_moment_bound(q: u32, rate: f64, delta_dual: f64, n: usize, eps: f64) -> Result<f64> {
    check_dual_params(q, rate, delta_dual, n, eps)?;
    let nf = n as f64;
    let dn = delta_dual * nf;
    Ok(8f64.ln()
        + ln_q(q)
        + 0.5 * (std::f64::consts::PI * dn).ln()
        + dn / 2.0 * (2.0 * delta_dual / (eps * eps * std::f64::consts::E)).ln()
        + rate * nf * ln_q(q))
}

/// Count bound on the codewords that are not `eps`-biased, from the dual distance.
pub fn ceps_moment_bound(q: u32, rate: f64, delta_dual: f64, n: usize, eps: f64) -> Result<f64> {
    Ok(ln_ceps_moment_bound(q, rate, delta_dual, n, eps)?.exp())
}

/// Probability that a uniformly random vector with `d`-wise independent
/// coordinates is not `eps`-biased, in the form `8(q-1) sqrt(pi delta n) (2 delta / (eps^2 e))^(delta n / 2)`,
/// `delta = d / n`. Returned unclamped as a log.
pub fn ln_not_biased_probability_bound(q: u32, n: usize, d: usize, eps: f64) -> Result<f64> {
    check_q(q)?;
    if d == 0 || d > n {
        return Err(Error::domain(format!("need 1 <= d <= n, got d={d}, n={n}")));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eps = {eps} must be positive")));
    }
    let delta = d as f64 / n as f64;
    let dn = d as f64;
    Ok(8f64.ln()
        + (q as f64 - 1.0).ln()
        + 0.5 * (std::f64::consts::PI * dn).ln()
        + dn / 2.0 * (2.0 * delta / (eps * eps * std::f64::consts::E)).ln())
}

/// `ln(count (1 - delta)^s)`; `-inf` for a zero count.
pub fn ln_union_bound(ln_count: f64, delta: f64, s_count: usize) -> f64 {
    if ln_count == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if s_count == 0 {
        return ln_count;
    }
    ln_count + s_count as f64 * (1.0 - delta).ln()
}

/// `min(1, count (1 - delta)^s)`.
pub fn union_bound_failure(count: f64, delta: f64, s_count: usize) -> f64 {
    ln_union_bound(count.ln(), delta, s_count).exp().min(1.0)
}

/// `1 - (q/(q-1)) delta - R`.
pub fn plotkin_gap(q: u32, rate: f64, delta: f64) -> f64 {
    let qf = q as f64;
    1.0 - qf / (qf - 1.0) * delta - rate
}

/// One named hypothesis of a theorem, evaluated on concrete parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, holds: bool, detail: String) -> Check {
        Check { name: name.to_string(), holds, detail }
    }
}

fn require(checks: &[Check]) -> Result<()> {
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.holds).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Infeasible(failed))
    }
}

/// A prescribed shortening with its guarantees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub q: u32,
    pub n: usize,
    pub s_fraction: f64,
    pub s_count: usize,
    /// Bias level whose non-biased codewords must all be hit.
    pub eps_inner: Option<f64>,
    /// Union bound on the probability of failure, clamped to `[0, 1]`.
    pub predicted_failure: f64,
    /// Natural log of the unclamped union bound.
    pub ln_failure: f64,
    pub rate_floor: f64,
    pub feasible: bool,
    pub reason: String,
    pub preconditions: Vec<Check>,
}

fn feasible_plan(
    q: u32,
    n: usize,
    s_fraction: f64,
    s_count: usize,
    eps_inner: Option<f64>,
    ln_failure: f64,
    rate_floor: f64,
    preconditions: Vec<Check>,
) -> PlanResult {
    PlanResult {
        q,
        n,
        s_fraction,
        s_count,
        eps_inner,
        predicted_failure: ln_failure.exp().clamp(0.0, 1.0),
        ln_failure,
        rate_floor,
        feasible: true,
        reason: "all preconditions hold".into(),
        preconditions,
    }
}

/// Hypotheses of the high-distance shortening theorem.
pub fn thm1_preconditions(q: u32, rate: f64, delta: f64, gamma: f64, eps: f64) -> Vec<Check> {
    let lo = thm1_delta_threshold(q, eps);
    let top = plotkin_point(q);
    vec![
        Check::new("0 < eps < 1", eps > 0.0 && eps < 1.0, format!("eps = {eps}")),
        Check::new("delta above threshold", delta > lo, format!("delta = {delta}, threshold = {lo}")),
        Check::new("delta below (q-1)/q", delta < top, format!("delta = {delta}, (q-1)/q = {top}")),
        Check::new("0 < gamma < R", gamma > 0.0 && gamma < rate, format!("gamma = {gamma}, R = {rate}")),
    ]
}

/// `min{gamma/(1+gamma), R/2, eps/2 - (q-1) sqrt(((q-1)/q)((q-1)/q - delta))}`.
pub fn thm1_shortening_fraction(q: u32, rate: f64, delta: f64, gamma: f64, eps: f64) -> f64 {
    let top = plotkin_point(q);
    let johnson_half = (q as f64 - 1.0) * (top * (top - delta)).max(0.0).sqrt();
    (gamma / (1.0 + gamma)).min(rate / 2.0).min(eps / 2.0 - johnson_half)
}

/// Shortening that turns an `[n, Rn, delta n]` code with `delta` close to
/// `(q-1)/q` into an `eps`-biased code of rate at least `R - gamma`.
pub fn plan_thm1(q: u32, rate: f64, delta: f64, gamma: f64, eps: f64, n: usize) -> Result<PlanResult> {
    check_q(q)?;
    let mut checks = thm1_preconditions(q, rate, delta, gamma, eps);
    let s = thm1_shortening_fraction(q, rate, delta, gamma, eps);
    let s_count = if s > 0.0 { (s * n as f64).floor() as usize } else { 0 };
    checks.push(Check::new("s > 0", s > 0.0, format!("s = {s}")));
    checks.push(Check::new("s n >= 1", s_count >= 1, format!("floor(s n) = {s_count} at n = {n}")));
    require(&checks)?;
    let (thr, count) = johnson_ceps_bound(q, delta, n)?;
    let ln_failure = ln_union_bound(count.ln(), delta, s_count);
    Ok(feasible_plan(q, n, s, s_count, Some(thr), ln_failure, rate - gamma, checks))
}

/// Two-stage plan for codes near the Plotkin line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thm12Plan {
    pub s1_fraction: f64,
    pub s1_count: usize,
    pub delta_amplified: f64,
    pub rate_amplified: f64,
    pub gamma: f64,
    pub rate_floor: f64,
    /// Plan for the second shortening, on the code of length `n - s1_count`.
    pub stage2: PlanResult,
}

impl Thm12Plan {
    pub fn total_s_count(&self) -> usize {
        self.s1_count + self.stage2.s_count
    }
}

pub fn thm12_preconditions(q: u32, rate: f64, delta: f64, beta: f64, eps: f64) -> Vec<Check> {
    let lo = thm1_delta_threshold(q, eps);
    let amplified = delta / (1.0 - (1.0 - beta) * rate);
    vec![
        Check::new("0 < eps < 1", eps > 0.0 && eps < 1.0, format!("eps = {eps}")),
        Check::new("0 < beta < 1", beta > 0.0 && beta < 1.0, format!("beta = {beta}")),
        Check::new("0 < R < 1", rate > 0.0 && rate < 1.0, format!("R = {rate}")),
        Check::new(
            "delta / (1 - (1 - beta) R) above threshold",
            amplified > lo,
            format!("{amplified} vs threshold {lo}"),
        ),
    ]
}

/// Pre-shortens on the grid `j / n` to lift the relative distance above the
/// high-distance threshold, then hands over to [`plan_thm1`]. The first grid
/// point whose second stage is feasible at this length is returned.
pub fn plan_thm12(q: u32, rate: f64, delta: f64, beta: f64, eps: f64, n: usize) -> Result<Thm12Plan> {
    check_q(q)?;
    let checks = thm12_preconditions(q, rate, delta, beta, eps);
    require(&checks)?;
    let lo = thm1_delta_threshold(q, eps);
    let nf = n as f64;
    let floor_rate = beta * rate;
    let mut last_err = None;
    for j in 0..n {
        let s1 = j as f64 / nf;
        if s1 >= (1.0 - beta) * rate {
            break;
        }
        let delta_amp = delta / (1.0 - s1);
        if delta_amp <= lo + 1e-12 {
            continue;
        }
        if delta_amp >= plotkin_point(q) {
            break;
        }
        let rate_amp = (rate - s1) / (1.0 - s1);
        let gamma = (rate_amp - floor_rate) / 2.0;
        match plan_thm1(q, rate_amp, delta_amp, gamma, eps, n - j) {
            Ok(stage2) => {
                return Ok(Thm12Plan {
                    s1_fraction: s1,
                    s1_count: j,
                    delta_amplified: delta_amp,
                    rate_amplified: rate_amp,
                    gamma,
                    rate_floor: floor_rate,
                    stage2,
                })
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(match last_err {
        Some(Error::Infeasible(mut r)) => {
            r.insert(0, format!("no pre-shortening on the grid 1/{n} gives a feasible second stage"));
            Error::Infeasible(r)
        }
        Some(e) => e,
        None => Error::infeasible(format!("no pre-shortening j/{n} < (1-beta)R lifts delta above {lo}")),
    })
}

/// `(1/2 - 2 gamma) / (1 + 0.9 log_q(1 - delta))`.
pub fn thm2_rate_ratio(q: u32, delta: f64, gamma: f64) -> f64 {
    (0.5 - 2.0 * gamma) / (1.0 + 0.9 * log_q(q, 1.0 - delta))
}

/// `(R - (1/2 - 2 gamma) H_q(dd0)) / (-log_q(1 - delta))`.
pub fn thm2_shortening_fraction(q: u32, rate: f64, delta: f64, delta0_dual: f64, gamma: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::domain(format!("delta = {delta} outside (0, 1)")));
    }
    Ok((rate - (0.5 - 2.0 * gamma) * entropy_q(q, delta0_dual)?) / -log_q(q, 1.0 - delta))
}

/// Upper limit on the rate: `thm2_rate_ratio * H_q(dd0)`.
pub fn thm2_rate_bound(q: u32, delta: f64, delta0_dual: f64, gamma: f64) -> Result<f64> {
    Ok(thm2_rate_ratio(q, delta, gamma) * entropy_q(q, delta0_dual)?)
}

pub fn thm2_preconditions(q: u32, rate: f64, delta: f64, delta0_dual: f64, gamma: f64, eps: f64) -> Vec<Check> {
    let lq = if delta > 0.0 && delta < 1.0 { log_q(q, 1.0 - delta) } else { f64::NAN };
    let eps_pow = eps.powf(1.0 / gamma);
    let dist_term = ((1.0 + lq) / 36.0).powi(2);
    let q_pow = (1.0 / q as f64).powf(1.0 / gamma);
    let denom = 1.0 + 0.9 * lq;
    let bound = thm2_rate_bound(q, delta, delta0_dual, gamma).unwrap_or(f64::NAN);
    vec![
        Check::new("0 < eps < 1", eps > 0.0 && eps < 1.0, format!("eps = {eps}")),
        Check::new("0 < delta < 1", delta > 0.0 && delta < 1.0, format!("delta = {delta}")),
        Check::new("0 < gamma < 1/4", gamma > 0.0 && gamma < 0.25, format!("gamma = {gamma}")),
        Check::new("dd0 > 0", delta0_dual > 0.0, format!("dd0 = {delta0_dual}")),
        Check::new(
            "dd0 < eps^(1/gamma)",
            delta0_dual < eps_pow,
            format!("dd0 = {delta0_dual}, eps^(1/gamma) = {eps_pow:e}"),
        ),
        Check::new(
            "dd0 < ((1 + log_q(1 - delta)) / 36)^2",
            delta0_dual < dist_term,
            format!("dd0 = {delta0_dual}, limit = {dist_term:e}"),
        ),
        Check::new("dd0 < q^(-1/gamma)", delta0_dual < q_pow, format!("dd0 = {delta0_dual}, q^(-1/gamma) = {q_pow:e}")),
        Check::new("1 + 0.9 log_q(1 - delta) > 0", denom > 0.0, format!("value = {denom}")),
        Check::new("0 < R < rate bound", rate > 0.0 && rate < bound, format!("R = {rate}, bound = {bound}")),
    ]
}

/// Shortening for codes whose dual distance is bounded below.
pub fn plan_thm2(
    q: u32,
    rate: f64,
    delta: f64,
    delta0_dual: f64,
    gamma: f64,
    eps: f64,
    n: usize,
) -> Result<PlanResult> {
    check_q(q)?;
    let mut checks = thm2_preconditions(q, rate, delta, delta0_dual, gamma, eps);
    require(&checks)?;
    let eps_inner = 0.9 * eps;
    let s = thm2_shortening_fraction(q, rate, delta, delta0_dual, gamma)?;
    let s_count = if s > 0.0 { (s * n as f64).floor() as usize } else { 0 };
    checks.push(Check::new("s > 0", s > 0.0, format!("s = {s}")));
    checks.push(Check::new("s n >= 1", s_count >= 1, format!("floor(s n) = {s_count} at n = {n}")));
    require(&checks)?;
    if !(s < 0.9 * rate && s < 0.05 * eps_inner) {
        return Err(Error::InvariantViolation(format!(
            "shortening fraction {s} not below 0.9 R = {} and 0.05 eps' = {}",
            0.9 * rate,
            0.05 * eps_inner
        )));
    }
    let ln_count = ln_ceps_moment_bound(q, rate, delta0_dual, n, eps_inner)?;
    let ln_failure = ln_union_bound(ln_count, delta, s_count);
    Ok(feasible_plan(q, n, s, s_count, Some(eps_inner), ln_failure, 0.1 * rate, checks))
}

/// Parameter choice for the corollary: `eta_max` solves `ratio(eta) = 1`
/// (capped at 1/4), `eta` is the midpoint of `(0, eta_max)` and
/// `gamma = min{eta, ratio(eta) - 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryGamma {
    pub eta_max: f64,
    pub eta: f64,
    pub gamma: f64,
}

pub fn cor_gamma(q: u32, delta: f64) -> Result<CorollaryGamma> {
    check_q(q)?;
    let lo = 1.0 - (q as f64).powf(-0.6);
    if !(delta > lo && delta < 1.0) {
        return Err(Error::infeasible(format!("delta = {delta} must exceed 1 - q^(-0.6) = {lo}")));
    }
    let denom = 1.0 + 0.9 * log_q(q, 1.0 - delta);
    if denom <= 0.0 {
        return Err(Error::infeasible(format!("1 + 0.9 log_q(1 - delta) = {denom} is not positive")));
    }
    let eta_max = ((0.5 - denom) / 2.0).min(0.25);
    let eta = eta_max / 2.0;
    let gamma = eta.min(thm2_rate_ratio(q, delta, eta) - 1.0);
    Ok(CorollaryGamma { eta_max, eta, gamma })
}

pub fn cor_preconditions(q: u32, rate: f64, delta: f64, delta0_dual: f64, eps: f64, gamma: f64) -> Vec<Check> {
    let lo = 1.0 - (q as f64).powf(-0.6);
    let limit = eps.powf(1.0 / gamma).min(1.0 / 8100.0).min((1.0 / q as f64).powf(1.0 / gamma));
    let h = entropy_q(q, delta0_dual.clamp(0.0, 1.0)).unwrap_or(f64::NAN);
    vec![
        Check::new("delta > 1 - q^(-0.6)", delta > lo, format!("delta = {delta}, limit = {lo}")),
        Check::new(
            "0 < dd0 < limit",
            delta0_dual > 0.0 && delta0_dual < limit,
            format!("dd0 = {delta0_dual}, limit = {limit:e}"),
        ),
        Check::new(
            "0 < R < (1 + gamma) H_q(dd0)",
            rate > 0.0 && rate < (1.0 + gamma) * h,
            format!("R = {rate}, bound = {}", (1.0 + gamma) * h),
        ),
    ]
}

/// Corollary planner: picks `gamma` from `delta` alone, then plans as for
/// the dual-distance theorem.
pub fn plan_cor(q: u32, rate: f64, delta: f64, delta0_dual: f64, eps: f64, n: usize) -> Result<PlanResult> {
    let g = cor_gamma(q, delta)?;
    require(&cor_preconditions(q, rate, delta, delta0_dual, eps, g.gamma))?;
    plan_thm2(q, rate, delta, delta0_dual, g.gamma, eps, n)
}
