//! Monte Carlo validation of the PDE and free-boundary solves.
//!
//! Three simulators share the same plumbing: the barrier wealth ratio `Z`
//! under the feedback policy (ruin probability), the raw two-dimensional
//! pair `(W, c)` under the lifted policy, and the dual state `Y` of the
//! controller-and-stopper game. Death is never sampled; the killing rate
//! enters through the exact factor `e^{-lambda*tau}` on ruin payoffs and
//! through the discounted running reward of the game.
//!
//! Determinism: every path owns a counter-derived generator (see
//! [`crate::rng`]) and the reduction runs in path order with compensated
//! summation, so results are bit-identical no matter how rayon schedules
//! the work.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveKind, PolicyCurve, ValueCurve};
use crate::error::{Error, Result};
use crate::fbp::{alpha_full, payoff_u, DualSolution};
use crate::model::ParamsBundle;
use crate::pde::feedback_policy;
use crate::rng::path_rng;

/// Guard against configs whose step count would never finish.
const MAX_TOTAL_STEPS: u64 = 200_000_000;

/// Monte Carlo run settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_paths: u64,
    /// Euler step in years.
    pub dt: f64,
    pub seed: u64,
    /// Horizon cap in years; paths still alive here are truncated and
    /// counted, with the truncation bound recorded in the result.
    pub t_cap: f64,
    /// Pair consecutive paths on one stream with negated increments.
    #[serde(default)]
    pub antithetic: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_paths < 1 {
            problems.push("n_paths must be at least 1".to_string());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            problems.push(format!("dt must be positive and finite, got {}", self.dt));
        }
        if !(self.t_cap.is_finite() && self.t_cap > 0.0) {
            problems.push(format!("t_cap must be positive and finite, got {}", self.t_cap));
        }
        if self.dt.is_finite() && self.t_cap.is_finite() && self.dt > self.t_cap {
            problems.push(format!("dt = {} exceeds t_cap = {}", self.dt, self.t_cap));
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            problems.push(format!("antithetic pairing needs an even n_paths, got {}", self.n_paths));
        }
        if problems.is_empty() && self.n_steps() > MAX_TOTAL_STEPS {
            problems.push(format!(
                "t_cap/dt = {:.0} steps per path exceeds the {MAX_TOTAL_STEPS} step guard",
                self.t_cap / self.dt
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParams(problems))
        }
    }

    fn n_steps(&self) -> u64 {
        (self.t_cap / self.dt).ceil() as u64
    }

    /// Stream index and increment sign for one path under the pairing rule.
    fn stream(&self, path: u64) -> (u64, f64) {
        if self.antithetic {
            (path >> 1, if path & 1 == 1 { -1.0 } else { 1.0 })
        } else {
            (path, 1.0)
        }
    }

    fn bias_bound(&self, lambda: f64) -> f64 {
        (-lambda * self.t_cap).exp()
    }
}

/// How one path ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Hit the lower absorbing level (ruin; game stopped at `y_M`).
    AbsorbedLow,
    /// Hit the upper level (safe at the barrier; game stopped at `y_0`;
    /// fixed-horizon stops also land here).
    AbsorbedHigh,
    /// Still running at `t_cap`, or (2-D only) drifted off the curve grid.
    Capped,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::AbsorbedLow => "absorbed_low",
            Outcome::AbsorbedHigh => "absorbed_high",
            Outcome::Capped => "capped",
        }
    }
}

/// Per-path record for the optional dump.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PathOutcome {
    pub path: u64,
    pub outcome: Outcome,
    pub tau: f64,
    pub payoff: f64,
}

/// Aggregated estimate with its accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub n_absorbed_low: u64,
    pub n_absorbed_high: u64,
    pub n_capped: u64,
    /// `e^{-lambda * t_cap}`: discount weight of everything past the cap.
    pub bias_bound: f64,
}

impl SimResult {
    /// Truncation slack for comparisons: the capped fraction of paths
    /// times the discount bound on whatever they could still contribute.
    pub fn truncation_allowance(&self) -> f64 {
        if self.n_paths == 0 {
            return 0.0;
        }
        self.n_capped as f64 / self.n_paths as f64 * self.bias_bound
    }
}

/// Compensated (Neumaier) sum in slice order.
fn neumaier<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn summarize(outcomes: &[PathOutcome], bias_bound: f64) -> SimResult {
    let n = outcomes.len() as u64;
    let nf = n as f64;
    let mean = neumaier(outcomes.iter().map(|o| o.payoff)) / nf;
    let var = if n > 1 {
        neumaier(outcomes.iter().map(|o| (o.payoff - mean) * (o.payoff - mean))) / (nf - 1.0)
    } else {
        0.0
    };
    let mut low = 0u64;
    let mut high = 0u64;
    let mut capped = 0u64;
    for o in outcomes {
        match o.outcome {
            Outcome::AbsorbedLow => low += 1,
            Outcome::AbsorbedHigh => high += 1,
            Outcome::Capped => capped += 1,
        }
    }
    SimResult {
        estimate: mean,
        std_error: (var.max(0.0) / nf).sqrt(),
        n_paths: n,
        n_absorbed_low: low,
        n_absorbed_high: high,
        n_capped: capped,
        bias_bound,
    }
}

/// Ruin probability of the wealth ratio `Z` under a feedback policy.
/// `barrier` is the absorbing upper level; `None` runs the policy's whole
/// grid as the domain (unbounded mode, where reaching the grid edge is a
/// truncation with payoff 0, bounded by the ladder tolerance).
pub fn simulate_ruin(
    p: &ParamsBundle,
    barrier: Option<f64>,
    policy: &PolicyCurve,
    z0: f64,
    cfg: &SimConfig,
) -> Result<SimResult> {
    Ok(simulate_ruin_outcomes(p, barrier, policy, z0, cfg)?.0)
}

pub fn simulate_ruin_outcomes(
    p: &ParamsBundle,
    barrier: Option<f64>,
    policy: &PolicyCurve,
    z0: f64,
    cfg: &SimConfig,
) -> Result<(SimResult, Vec<PathOutcome>)> {
    cfg.validate()?;
    let upper = match barrier {
        Some(m) => {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::BadInput(format!("barrier must be positive, got {m}")));
            }
            if m > policy.grid.upper * (1.0 + 1e-12) {
                return Err(Error::BadInput(format!(
                    "policy grid ends at {} but the barrier is {m}",
                    policy.grid.upper
                )));
            }
            m
        }
        None => policy.grid.upper,
    };
    if !(z0.is_finite() && z0 > 0.0 && z0 <= upper) {
        return Err(Error::BadInput(format!("start z0 = {z0} outside (0, {upper}]")));
    }

    let lambda = p.market.lambda;
    let (r_tilde, excess) = (p.derived.r_tilde, p.derived.excess);
    let (vol1, vol2, rho_t) = (p.vol1(), p.vol2(), p.derived.rho_tilde);
    let rho_c = (1.0 - rho_t * rho_t).max(0.0).sqrt();
    let (dt, sqdt) = (cfg.dt, cfg.dt.sqrt());
    let n_steps = cfg.n_steps();
    let bias_bound = cfg.bias_bound(lambda);

    let outcomes: Vec<PathOutcome> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| -> Result<PathOutcome> {
            let (stream, sign) = cfg.stream(i);
            let mut rng = path_rng(cfg.seed, stream);
            let mut z = z0;
            let mut rec = PathOutcome { path: i, outcome: Outcome::Capped, tau: cfg.t_cap, payoff: 0.0 };
            if z >= upper {
                rec.outcome = Outcome::AbsorbedHigh;
                rec.tau = 0.0;
                return Ok(rec);
            }
            for k in 0..n_steps {
                let pi = policy.eval(z)?;
                let xi1: f64 = rng.sample(StandardNormal);
                let xi2: f64 = rng.sample(StandardNormal);
                let db1 = sqdt * sign * xi1;
                let db2 = sqdt * sign * (rho_t * xi1 + rho_c * xi2);
                z += ((r_tilde * z - 1.0) + excess * pi) * dt + (z - pi) * vol1 * db1 + pi * vol2 * db2;
                if z <= 0.0 {
                    rec.tau = (k + 1) as f64 * dt;
                    rec.payoff = (-lambda * rec.tau).exp();
                    rec.outcome = Outcome::AbsorbedLow;
                    break;
                }
                if z >= upper {
                    rec.tau = (k + 1) as f64 * dt;
                    rec.outcome = Outcome::AbsorbedHigh;
                    break;
                }
            }
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((summarize(&outcomes, bias_bound), outcomes))
}

/// Ruin probability simulated on the raw `(W, c)` pair with the lifted
/// policy `pi* = c*(pi_tilde(W/c) + rho*(b/sigma)*(W/c))`, validating the
/// one-dimensional reduction. Leaving the curve's grid flags the path and
/// caps it (payoff 0), reported through `n_capped`.
pub fn simulate_ruin_2d(
    p: &ParamsBundle,
    curve: &ValueCurve,
    w0: f64,
    c0: f64,
    cfg: &SimConfig,
) -> Result<SimResult> {
    Ok(simulate_ruin_2d_outcomes(p, curve, w0, c0, cfg)?.0)
}

pub fn simulate_ruin_2d_outcomes(
    p: &ParamsBundle,
    curve: &ValueCurve,
    w0: f64,
    c0: f64,
    cfg: &SimConfig,
) -> Result<(SimResult, Vec<PathOutcome>)> {
    cfg.validate()?;
    if !matches!(curve.kind, CurveKind::PrimalM | CurveKind::PrimalUnbounded) {
        return Err(Error::BadInput(format!("2-D simulation expects a primal curve, got {:?}", curve.kind)));
    }
    if !(w0.is_finite() && w0 > 0.0) || !(c0.is_finite() && c0 > 0.0) {
        return Err(Error::BadInput(format!("need w0 > 0 and c0 > 0, got w0 = {w0}, c0 = {c0}")));
    }
    let upper = curve.grid.upper;
    if w0 / c0 >= upper {
        return Err(Error::BadInput(format!("w0/c0 = {} starts outside the curve domain [0, {upper})", w0 / c0)));
    }
    let policy = feedback_policy(curve, p)?;

    let market = p.market;
    let lambda = market.lambda;
    let ratio_term = market.rho * market.b / market.sigma;
    let rho_c = (1.0 - market.rho * market.rho).max(0.0).sqrt();
    let (dt, sqdt) = (cfg.dt, cfg.dt.sqrt());
    let n_steps = cfg.n_steps();
    let bias_bound = cfg.bias_bound(lambda);

    let outcomes: Vec<PathOutcome> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| -> Result<PathOutcome> {
            let (stream, sign) = cfg.stream(i);
            let mut rng = path_rng(cfg.seed, stream);
            let (mut w, mut c) = (w0, c0);
            let mut rec = PathOutcome { path: i, outcome: Outcome::Capped, tau: cfg.t_cap, payoff: 0.0 };
            for k in 0..n_steps {
                let z = w / c;
                let pi = c * (policy.eval(z)? + ratio_term * z);
                let xi1: f64 = rng.sample(StandardNormal);
                let xi2: f64 = rng.sample(StandardNormal);
                // Consumption shock first, stock shock correlated at rho.
                let dbc = sqdt * sign * xi1;
                let dbs = sqdt * sign * (market.rho * xi1 + rho_c * xi2);
                w += (market.r * w + (market.mu - market.r) * pi - c) * dt + market.sigma * pi * dbs;
                c += c * (market.a * dt + market.b * dbc);
                if w <= 0.0 {
                    rec.tau = (k + 1) as f64 * dt;
                    rec.payoff = (-lambda * rec.tau).exp();
                    rec.outcome = Outcome::AbsorbedLow;
                    break;
                }
                if c <= 0.0 || w / c >= upper {
                    // Off the policy grid: flag and truncate.
                    rec.tau = (k + 1) as f64 * dt;
                    rec.outcome = Outcome::Capped;
                    break;
                }
            }
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((summarize(&outcomes, bias_bound), outcomes))
}

/// Stopper strategy for a game run.
#[derive(Debug, Clone, Copy)]
pub enum StopRule {
    /// Stop at the first exit from `(lo, hi)`.
    ExitRegion { lo: f64, hi: f64 },
    /// Stop at the fixed time `t` regardless of the state.
    FixedHorizon(f64),
    /// Never stop; the path runs to the cap with no terminal payoff.
    Never,
}

/// Game control: the solved `alpha*` table with a scale factor and an
/// optional pathwise clip at `cap * y`.
#[derive(Debug, Clone)]
pub struct GameControl {
    h: f64,
    upper: f64,
    vals: Vec<f64>,
    scale: f64,
    clip: Option<f64>,
}

impl GameControl {
    pub fn from_solution(sol: &DualSolution, p: &ParamsBundle, scale: f64, clip_at_bound: bool) -> Result<Self> {
        Ok(GameControl {
            h: sol.curve.grid.h(),
            upper: sol.curve.grid.upper,
            vals: alpha_full(sol, p)?,
            scale,
            clip: clip_at_bound.then(|| (2.0 * p.derived.m).sqrt()),
        })
    }

    /// Zero control (the trivial deviation).
    pub fn zero() -> Self {
        GameControl { h: 1.0, upper: 1.0, vals: vec![0.0, 0.0], scale: 0.0, clip: None }
    }

    fn eval(&self, y: f64) -> f64 {
        if self.scale == 0.0 || !(y > 0.0) || y >= self.upper {
            return 0.0;
        }
        let t = y / self.h;
        let k = (t as usize).min(self.vals.len() - 2);
        let frac = (t - k as f64).clamp(0.0, 1.0);
        let mut a = self.scale * (self.vals[k] * (1.0 - frac) + self.vals[k + 1] * frac);
        if let Some(cap) = self.clip {
            a = a.min(cap * y);
        }
        a.max(0.0)
    }
}

/// Game value under the saddle pair: `alpha*` against the first exit of
/// the continuation region.
pub fn simulate_game(
    p: &ParamsBundle,
    m_barrier: f64,
    sol: &DualSolution,
    y0: f64,
    cfg: &SimConfig,
) -> Result<SimResult> {
    check_barrier_match(m_barrier, sol)?;
    let (lo, hi) = (sol.boundary.lower, sol.boundary.upper);
    if !(y0.is_finite() && y0 >= lo && y0 <= hi) {
        return Err(Error::BadInput(format!("y0 = {y0} outside the continuation region [{lo}, {hi}]")));
    }
    let control = GameControl::from_solution(sol, p, 1.0, false)?;
    Ok(run_game(p, m_barrier, &control, StopRule::ExitRegion { lo, hi }, y0, cfg)?.0)
}

fn check_barrier_match(m_barrier: f64, sol: &DualSolution) -> Result<()> {
    if (m_barrier - sol.m_barrier).abs() > 1e-12 * m_barrier.abs() {
        return Err(Error::BadInput(format!(
            "barrier {m_barrier} does not match the dual solution's {}",
            sol.m_barrier
        )));
    }
    Ok(())
}

/// Core game engine: discounted running reward `int e^{-lambda s} Y_s ds`
/// accumulated with the exact per-step discount integral, plus
/// `e^{-lambda tau} u_M(Y_tau)` when the stop rule fires. Fixed-horizon
/// stops count as `AbsorbedHigh`; a path that reaches the cap takes its
/// accumulated reward with no terminal payment.
pub fn run_game(
    p: &ParamsBundle,
    m_barrier: f64,
    control: &GameControl,
    stop: StopRule,
    y0: f64,
    cfg: &SimConfig,
) -> Result<(SimResult, Vec<PathOutcome>)> {
    cfg.validate()?;
    if !(m_barrier.is_finite() && m_barrier > 0.0) {
        return Err(Error::BadInput(format!("barrier must be positive, got {m_barrier}")));
    }
    if !(y0.is_finite() && y0 >= 0.0) {
        return Err(Error::BadInput(format!("start y0 = {y0} must be nonnegative")));
    }
    let lambda = p.market.lambda;
    let bias_bound = cfg.bias_bound(lambda);

    match stop {
        StopRule::ExitRegion { lo, hi } => {
            if !(lo >= 0.0 && lo < hi) {
                return Err(Error::BadInput(format!("exit region ({lo}, {hi}) is empty")));
            }
            if y0 <= lo || y0 >= hi {
                // Exit at time zero: the payoff is the obstacle, exactly.
                let outcome = if y0 <= lo { Outcome::AbsorbedLow } else { Outcome::AbsorbedHigh };
                let payoff = payoff_u(m_barrier, y0);
                let outcomes: Vec<PathOutcome> = (0..cfg.n_paths)
                    .map(|i| PathOutcome { path: i, outcome, tau: 0.0, payoff })
                    .collect();
                return Ok((summarize(&outcomes, bias_bound), outcomes));
            }
        }
        StopRule::FixedHorizon(t) => {
            if !(t.is_finite() && t > 0.0 && t <= cfg.t_cap) {
                return Err(Error::BadInput(format!("fixed horizon {t} outside (0, t_cap = {}]", cfg.t_cap)));
            }
        }
        StopRule::Never => {}
    }

    let theta = p.derived.excess / p.market.sigma;
    let drift = lambda - p.derived.r_tilde;
    let vol1 = p.vol1();
    let (dt, sqdt) = (cfg.dt, cfg.dt.sqrt());
    let fac = (-lambda * dt).exp();
    let reward_weight = (1.0 - fac) / lambda;
    let n_steps = cfg.n_steps();

    let outcomes: Vec<PathOutcome> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let (stream, sign) = cfg.stream(i);
            let mut rng = path_rng(cfg.seed, stream);
            let mut y = y0;
            let mut disc = 1.0f64;
            let mut reward = 0.0f64;
            let mut rec = PathOutcome { path: i, outcome: Outcome::Capped, tau: cfg.t_cap, payoff: 0.0 };
            for k in 0..n_steps {
                let a = control.eval(y);
                reward += y * disc * reward_weight;
                let xi1: f64 = rng.sample(StandardNormal);
                let db1 = sqdt * sign * xi1;
                let db2 = if a != 0.0 {
                    let xi2: f64 = rng.sample(StandardNormal);
                    sqdt * sign * xi2
                } else {
                    0.0
                };
                y += y * (drift * dt + theta * db1) + a * (vol1 * dt + db2);
                if y < 0.0 {
                    // The exact dynamics keep Y >= 0 (zero is absorbing
                    // once the control vanishes); clamp the Euler overshoot.
                    y = 0.0;
                }
                disc *= fac;
                let t_next = (k + 1) as f64 * dt;
                match stop {
                    StopRule::ExitRegion { lo, hi } => {
                        if y <= lo || y >= hi {
                            rec.outcome = if y <= lo { Outcome::AbsorbedLow } else { Outcome::AbsorbedHigh };
                            rec.tau = t_next;
                            rec.payoff = reward + disc * payoff_u(m_barrier, y);
                            break;
                        }
                    }
                    StopRule::FixedHorizon(t) => {
                        if t_next >= t - 0.5 * dt {
                            rec.outcome = Outcome::AbsorbedHigh;
                            rec.tau = t_next;
                            rec.payoff = reward + disc * payoff_u(m_barrier, y);
                            break;
                        }
                    }
                    StopRule::Never => {}
                }
            }
            if rec.outcome == Outcome::Capped {
                rec.payoff = reward;
            }
            rec
        })
        .collect();
    Ok((summarize(&outcomes, bias_bound), outcomes))
}

/// One row of the saddle report: a strategy deviation, its estimate, and
/// the inequality it must satisfy. `slack >= 0` means the check passed
/// with that much room after the `3*SE + 0.01` tolerance and the
/// truncation allowance.
#[derive(Debug, Clone, Serialize)]
pub struct SaddleRow {
    pub name: String,
    pub result: SimResult,
    pub tolerance: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaddleReport {
    pub y0: f64,
    /// PDE value the deviations are measured against.
    pub reference_value: f64,
    pub rows: Vec<SaddleRow>,
    pub all_pass: bool,
}

/// Discretization allowance shared by every Monte Carlo comparison.
pub const MC_ALLOWANCE: f64 = 0.01;

fn saddle_row(name: &str, result: SimResult, reference: f64, direction: i8) -> SaddleRow {
    let tolerance = 3.0 * result.std_error + MC_ALLOWANCE + result.truncation_allowance();
    let slack = match direction {
        // Stopper deviations may only raise the value.
        1 => result.estimate - (reference - tolerance),
        // Controller deviations may only lower it.
        -1 => (reference + tolerance) - result.estimate,
        // The saddle pair itself must match two-sided.
        _ => tolerance - (result.estimate - reference).abs(),
    };
    SaddleRow { name: name.to_string(), result, tolerance, slack, pass: slack >= 0.0 }
}

/// Runs the saddle-point battery: the optimal pair, one exact stopper
/// deviation (stop at once), three simulated stopper deviations against
/// `alpha*`, and three controller deviations against the optimal stop.
pub fn saddle_test(
    p: &ParamsBundle,
    m_barrier: f64,
    sol: &DualSolution,
    y0: f64,
    cfg: &SimConfig,
) -> Result<SaddleReport> {
    check_barrier_match(m_barrier, sol)?;
    let (lo, hi) = (sol.boundary.lower, sol.boundary.upper);
    if !(y0 > lo && y0 < hi) {
        return Err(Error::BadInput(format!("y0 = {y0} outside the continuation region ({lo}, {hi})")));
    }
    let reference_value = sol.curve.eval_with_slope(y0)?.0;
    let exit = StopRule::ExitRegion { lo, hi };
    let star = GameControl::from_solution(sol, p, 1.0, false)?;
    let mut rows = Vec::with_capacity(8);

    let (baseline, _) = run_game(p, m_barrier, &star, exit, y0, cfg)?;
    rows.push(saddle_row("saddle_pair", baseline, reference_value, 0));

    // Stop immediately: payoff u_M(y0) with no randomness; the obstacle
    // dominates the value everywhere.
    let immediate = SimResult {
        estimate: payoff_u(m_barrier, y0),
        std_error: 0.0,
        n_paths: 0,
        n_absorbed_low: 0,
        n_absorbed_high: 0,
        n_capped: 0,
        bias_bound: cfg.bias_bound(p.market.lambda),
    };
    let mut row = saddle_row("stop_immediately", immediate, reference_value, 1);
    // Exact comparison: no tolerance is needed for a deterministic payoff.
    row.tolerance = 0.0;
    row.slack = immediate.estimate - reference_value;
    row.pass = row.slack >= -1e-12;
    rows.push(row);

    let (fixed, _) = run_game(p, m_barrier, &star, StopRule::FixedHorizon(1.0), y0, cfg)?;
    rows.push(saddle_row("stop_fixed_horizon_1y", fixed, reference_value, 1));

    let delta = 0.1 * (hi - lo);
    let (shrunk, _) = run_game(
        p,
        m_barrier,
        &star,
        StopRule::ExitRegion { lo: lo + delta, hi: hi - delta },
        y0,
        cfg,
    )?;
    rows.push(saddle_row("stop_shrunken_region", shrunk, reference_value, 1));

    let (never, _) = run_game(p, m_barrier, &star, StopRule::Never, y0, cfg)?;
    rows.push(saddle_row("never_stop", never, reference_value, 1));

    let (zero, _) = run_game(p, m_barrier, &GameControl::zero(), exit, y0, cfg)?;
    rows.push(saddle_row("alpha_zero", zero, reference_value, -1));

    let half = GameControl::from_solution(sol, p, 0.5, false)?;
    let (half_res, _) = run_game(p, m_barrier, &half, exit, y0, cfg)?;
    rows.push(saddle_row("alpha_half", half_res, reference_value, -1));

    let double = GameControl::from_solution(sol, p, 2.0, true)?;
    let (double_res, _) = run_game(p, m_barrier, &double, exit, y0, cfg)?;
    rows.push(saddle_row("alpha_double_clipped", double_res, reference_value, -1));

    let all_pass = rows.iter().all(|r| r.pass);
    Ok(SaddleReport { y0, reference_value, rows, all_pass })
}

/// Deterministic piecewise-constant control path for the explicit-solution
/// check (right-continuous in time).
#[derive(Debug, Clone)]
pub struct PiecewiseConstant {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::BadInput(format!(
                "need matching nonempty time/value lists, got {} and {}",
                times.len(),
                values.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::BadInput(format!("control path must start at t = 0, got {}", times[0])));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::BadInput(format!("control times must increase, got {} then {}", w[0], w[1])));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadInput("control values must be finite".into()));
        }
        Ok(PiecewiseConstant { times, values })
    }

    pub fn constant(v: f64) -> Self {
        PiecewiseConstant { times: vec![0.0], values: vec![v] }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PiecewiseConstant {
            times: self.times.clone(),
            values: self.values.iter().map(|v| factor * v).collect(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.times.partition_point(|&s| s <= t) {
            0 => self.values[0],
            k => self.values[k - 1],
        }
    }
}

/// Runs one path of the `Y` dynamics on both schemes with shared
/// increments: Euler on the SDE, and the explicit linear-SDE
/// representation `Y_t = H_t (y0 + int alpha_s / H_s (b sqrt(1-rho^2) ds
/// + dBhat2_s))` with `H` evaluated exactly from the cumulated first
/// driver. Returns (max absolute gap over the path, Euler terminal,
/// closed-form terminal).
fn y_path_pair(
    p: &ParamsBundle,
    alpha_path: &PiecewiseConstant,
    y0: f64,
    dt: f64,
    db1: &[f64],
    db2: &[f64],
) -> (f64, f64, f64) {
    let lambda = p.market.lambda;
    let theta = p.derived.excess / p.market.sigma;
    let drift = lambda - p.derived.r_tilde;
    let log_drift = drift - p.derived.m;
    let vol1 = p.vol1();

    let mut y_euler = y0;
    let mut b1_sum = 0.0f64;
    let mut integral = 0.0f64;
    let mut max_gap = 0.0f64;
    let mut y_closed = y0;
    for (k, (&d1, &d2)) in db1.iter().zip(db2).enumerate() {
        let t_k = k as f64 * dt;
        let a = alpha_path.eval(t_k);
        // Euler step.
        y_euler += y_euler * (drift * dt + theta * d1) + a * (vol1 * dt + d2);
        // Explicit representation, left-point discretized integral.
        let h_k = (log_drift * t_k + theta * b1_sum).exp();
        integral += a / h_k * (vol1 * dt + d2);
        b1_sum += d1;
        let t_next = (k + 1) as f64 * dt;
        let h_next = (log_drift * t_next + theta * b1_sum).exp();
        y_closed = h_next * (y0 + integral);
        let gap = (y_euler - y_closed).abs();
        if gap > max_gap {
            max_gap = gap;
        }
    }
    (max_gap, y_euler, y_closed)
}

/// Maximum over paths and time of |Euler - closed form| for the dual
/// state under a deterministic control.
pub fn explicit_y_check(
    p: &ParamsBundle,
    alpha_path: &PiecewiseConstant,
    y0: f64,
    cfg: &SimConfig,
) -> Result<f64> {
    cfg.validate()?;
    if !(y0.is_finite() && y0 >= 0.0) {
        return Err(Error::BadInput(format!("start y0 = {y0} must be nonnegative")));
    }
    let n_steps = cfg.n_steps() as usize;
    let sqdt = cfg.dt.sqrt();
    let gaps: Vec<f64> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let (stream, sign) = cfg.stream(i);
            let mut rng = path_rng(cfg.seed, stream);
            let mut db1 = Vec::with_capacity(n_steps);
            let mut db2 = Vec::with_capacity(n_steps);
            for _ in 0..n_steps {
                let xi1: f64 = rng.sample(StandardNormal);
                let xi2: f64 = rng.sample(StandardNormal);
                db1.push(sqdt * sign * xi1);
                db2.push(sqdt * sign * xi2);
            }
            y_path_pair(p, alpha_path, y0, cfg.dt, &db1, &db2).0
        })
        .collect();
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// Closed-form terminal value of one path (for shared-increment linearity
/// tests).
pub fn explicit_y_closed_terminal(
    p: &ParamsBundle,
    alpha_path: &PiecewiseConstant,
    y0: f64,
    cfg: &SimConfig,
    path_index: u64,
) -> Result<f64> {
    cfg.validate()?;
    let n_steps = cfg.n_steps() as usize;
    let sqdt = cfg.dt.sqrt();
    let (stream, sign) = cfg.stream(path_index);
    let mut rng = path_rng(cfg.seed, stream);
    let mut db1 = Vec::with_capacity(n_steps);
    let mut db2 = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        let xi1: f64 = rng.sample(StandardNormal);
        let xi2: f64 = rng.sample(StandardNormal);
        db1.push(sqdt * sign * xi1);
        db2.push(sqdt * sign * xi2);
    }
    Ok(y_path_pair(p, alpha_path, y0, cfg.dt, &db1, &db2).2)
}

/// Strong-convergence study: the same fine Brownian paths aggregated onto
/// coarser steppings, with the scheme gap measured at each level.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementStudy {
    pub dts: Vec<f64>,
    /// Max over paths and time of |Euler - closed form| at each level.
    pub gaps: Vec<f64>,
    /// `gaps[l] / gaps[l+1]`: about sqrt(2) for a strong-order-1/2 scheme.
    pub ratios: Vec<f64>,
}

pub fn explicit_y_refinement(
    p: &ParamsBundle,
    alpha_path: &PiecewiseConstant,
    y0: f64,
    cfg: &SimConfig,
    n_levels: usize,
) -> Result<RefinementStudy> {
    cfg.validate()?;
    if !(2..=10).contains(&n_levels) {
        return Err(Error::BadInput(format!("refinement needs 2..=10 levels, got {n_levels}")));
    }
    if !(y0.is_finite() && y0 >= 0.0) {
        return Err(Error::BadInput(format!("start y0 = {y0} must be nonnegative")));
    }
    let n_coarse = cfg.n_steps() as usize;
    let splits = 1usize << (n_levels - 1);
    let n_fine = n_coarse * splits;
    let dt_fine = cfg.dt / splits as f64;
    let sq_fine = dt_fine.sqrt();

    // gap[level][path]
    let per_path: Vec<Vec<f64>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let (stream, sign) = cfg.stream(i);
            let mut rng = path_rng(cfg.seed, stream);
            let mut fine1 = Vec::with_capacity(n_fine);
            let mut fine2 = Vec::with_capacity(n_fine);
            for _ in 0..n_fine {
                let xi1: f64 = rng.sample(StandardNormal);
                let xi2: f64 = rng.sample(StandardNormal);
                fine1.push(sq_fine * sign * xi1);
                fine2.push(sq_fine * sign * xi2);
            }
            (0..n_levels)
                .map(|level| {
                    let chunk = 1usize << (n_levels - 1 - level);
                    let dt_level = cfg.dt / (1usize << level) as f64;
                    let agg = |fine: &[f64]| -> Vec<f64> {
                        fine.chunks(chunk).map(|c| c.iter().sum()).collect()
                    };
                    let (db1, db2) = (agg(&fine1), agg(&fine2));
                    y_path_pair(p, alpha_path, y0, dt_level, &db1, &db2).0
                })
                .collect()
        })
        .collect();

    let mut gaps = vec![0.0f64; n_levels];
    for path_gaps in &per_path {
        for (level, g) in path_gaps.iter().enumerate() {
            gaps[level] = gaps[level].max(*g);
        }
    }
    let dts = (0..n_levels).map(|l| cfg.dt / (1usize << l) as f64).collect();
    let ratios = gaps.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(RefinementStudy { dts, gaps, ratios })
}
