//! Free-boundary solver for the dual controller-and-stopper game.
//!
//! The game value `ghat_M(y)` equals the obstacle `u_M(y) = min(M*y, 1)`
//! outside a continuation region `D = (y_M, y_0)` and inside solves
//!
//! ```text
//! lambda*g = y + (lambda - r_tilde)*y*g' + m*y^2*g''
//!            - (1/2)*b^2*(1-rho^2)*(g')^2 / g''
//! ```
//!
//! with value matching and smooth pasting at both ends:
//! `g(y_M) = M*y_M`, `g'(y_M) = M`, `g(y_0) = 1`, `g'(y_0) = 0`.
//!
//! Treating the equation as a quadratic in `g''`,
//!
//! ```text
//! m*y^2*(g'')^2 - (lambda*g - y - (lambda - r_tilde)*y*g')*g''
//!   - (1/2)*b^2*(1-rho^2)*(g')^2 = 0,
//! ```
//!
//! the constant term is nonpositive, so the two roots straddle zero and the
//! concave branch is always the smaller root. Shooting: start at a trial
//! `y_M` with the pasting data `(M*y_M, M)`, integrate upward until the
//! slope `g'` crosses zero (event detection with in-step refinement), and
//! drive the stopped value `g(y_stop)` to 1 over the trial. A 64-point
//! bracketing scan locates the sign change, bisection polishes it.

use serde::{Deserialize, Serialize};

use crate::curve::{hermite, CurveKind, Grid, ValueCurve};
use crate::error::{Error, Result};
use crate::model::ParamsBundle;
use crate::rk::{self, Controller, State};

/// Number of trial boundaries in the bracketing scan.
const SCAN_POINTS: usize = 64;
/// Offset keeping the scan strictly inside `(0, 1/M)`, scaled by `1/M`.
const SCAN_DELTA_FACTOR: f64 = 1e-8;
/// Integrator tolerances for a shot.
const SHOT_RTOL: f64 = 1e-12;
/// Slope tolerance (relative to `M`) for the pasting event refinement.
const EVENT_TOL: f64 = 1e-13;
/// Bisection cap for the outer pasting-value root find.
const MAX_BISECT: usize = 200;

/// Stopper obstacle `u_M(y) = min(M*y, 1)`.
pub fn payoff_u(m_barrier: f64, y: f64) -> f64 {
    (m_barrier * y).min(1.0)
}

/// One accepted integration node of a shot.
#[derive(Debug, Clone, Copy)]
pub struct PathPoint {
    pub y: f64,
    pub g: f64,
    pub dg: f64,
    pub ddg: f64,
}

/// A completed shot: the trajectory from the trial boundary to the point
/// where the slope vanished.
#[derive(Debug, Clone)]
pub struct ShootRecord {
    pub y_stop: f64,
    pub g_at_stop: f64,
    pub dg_at_stop: f64,
    pub path: Vec<PathPoint>,
}

/// Pasting points of the continuation region `D = (lower, upper)`; the
/// slope of the game value is `M` at `lower` and `0` at `upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundary {
    #[serde(rename = "y_M")]
    pub lower: f64,
    #[serde(rename = "y_0")]
    pub upper: f64,
}

/// Dual game value assembled from the converged shot: obstacle outside
/// `D`, shot trajectory inside.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub m_barrier: f64,
    pub curve: ValueCurve,
    pub boundary: FreeBoundary,
    /// Slope mismatches `|g'(y_M) - M|` and `|g'(y_0)|`.
    pub pasting_residuals: [f64; 2],
}

/// Diagnostics from the bracketing scan and bisection.
#[derive(Debug, Clone, Serialize)]
pub struct DualSolveReport {
    /// Trial boundary and stopped-value residual `g(y_stop) - 1` (absent
    /// if the shot found no pasting point below the cap).
    pub scan: Vec<(f64, Option<f64>)>,
    /// Whether the scanned residual was monotone in the trial.
    pub scan_monotone: bool,
    /// Number of sign changes seen in the scan.
    pub sign_changes: usize,
    pub bisection_iterations: usize,
    /// Final `|g(y_stop) - 1|`.
    pub value_residual: f64,
}

fn check_barrier(p: &ParamsBundle, m_barrier: f64) -> Result<()> {
    let threshold = 1.0 / p.market.lambda;
    if !(m_barrier.is_finite() && m_barrier > threshold) {
        return Err(Error::DegenerateContinuation { m_barrier, threshold });
    }
    Ok(())
}

/// Concave root of the curvature quadratic at `(y, g, g')`.
fn curvature(p: &ParamsBundle, y: f64, g: f64, dg: f64) -> Result<f64> {
    let a = p.derived.m * y * y;
    let b = -(p.market.lambda * g - y - (p.market.lambda - p.derived.r_tilde) * y * dg);
    let c = -0.5 * p.bb() * dg * dg;
    if a == 0.0 {
        // Degenerate (m = 0 or y = 0): the equation is linear in g''.
        if b >= 0.0 {
            return Err(Error::ConcavityBreakdown { y });
        }
        return Ok(-c / b);
    }
    // c <= 0 keeps the discriminant at least b^2: no cancellation.
    let disc = (b * b - 4.0 * a * c).sqrt();
    if b >= 0.0 {
        Ok(-(b + disc) / (2.0 * a))
    } else {
        let q = 0.5 * (-b + disc);
        Ok(c / q)
    }
}

/// Integrates one shot from the trial boundary until `g'` crosses zero.
pub fn shoot_dual(p: &ParamsBundle, m_barrier: f64, y_m_trial: f64) -> Result<ShootRecord> {
    check_barrier(p, m_barrier)?;
    if !(y_m_trial > 0.0 && y_m_trial < 1.0 / m_barrier) {
        return Err(Error::BadInput(format!(
            "trial boundary must lie in (0, 1/M) = (0, {}), got {y_m_trial}",
            1.0 / m_barrier
        )));
    }
    let y_cap = (10.0 * p.market.lambda).max(10.0 / m_barrier) * 10.0;
    let mut rhs = |y: f64, s: State| -> Result<State> { Ok([s[1], curvature(p, y, s[0], s[1])?]) };
    let ctl = Controller {
        rtol: SHOT_RTOL,
        atol: [1e-14, 1e-12 * m_barrier],
        h_min: 1e-18 * y_cap,
        h_max: y_cap / 50.0,
    };

    let mut y = y_m_trial;
    let mut s: State = [m_barrier * y_m_trial, m_barrier];
    let mut h = (y_m_trial * 1e-3).min(ctl.h_max);
    let mut path = Vec::with_capacity(256);
    path.push(PathPoint { y, g: s[0], dg: s[1], ddg: curvature(p, y, s[0], s[1])? });

    while y < y_cap {
        let h_try = h.min(y_cap - y).max(ctl.h_min);
        let out = rk::step(&mut rhs, y, s, h_try, &ctl)?;
        h = out.h_next;
        if !out.accepted {
            continue;
        }
        let (y_new, s_new) = (y + out.h_used, out.state);
        if s_new[1] <= 0.0 {
            // Slope crossed zero inside this step: bisect the sub-interval,
            // re-integrating from the step start each time.
            let (y_stop, s_stop) = refine_event(&mut rhs, &ctl, y, s, y_new, m_barrier)?;
            path.push(PathPoint {
                y: y_stop,
                g: s_stop[0],
                dg: s_stop[1],
                ddg: curvature(p, y_stop, s_stop[0], s_stop[1])?,
            });
            return Ok(ShootRecord {
                y_stop,
                g_at_stop: s_stop[0],
                dg_at_stop: s_stop[1],
                path,
            });
        }
        y = y_new;
        s = s_new;
        path.push(PathPoint { y, g: s[0], dg: s[1], ddg: curvature(p, y, s[0], s[1])? });
    }
    Err(Error::NoPastingPoint { y_cap })
}

/// Locates `g' = 0` inside `[y_lo, y_hi]` given the state at `y_lo`.
fn refine_event<F>(
    rhs: &mut F,
    ctl: &Controller,
    y_lo: f64,
    s_lo: State,
    y_hi: f64,
    m_barrier: f64,
) -> Result<(f64, State)>
where
    F: FnMut(f64, State) -> Result<State>,
{
    let tol = EVENT_TOL * m_barrier;
    let mut lo = y_lo;
    let mut s_at_lo = s_lo;
    let mut hi = y_hi;
    for _ in 0..80 {
        // Secant estimate from the slope values, safeguarded into the
        // bracket interior.
        let s_hi = integrate_to(rhs, ctl, lo, s_at_lo, hi)?;
        if hi - lo < 1e-15 * (1.0 + hi) {
            return Ok((hi, s_hi));
        }
        let (dlo, dhi) = (s_at_lo[1], s_hi[1]);
        let mut mid = if dlo > 0.0 && dhi < 0.0 {
            lo + (hi - lo) * dlo / (dlo - dhi)
        } else {
            0.5 * (lo + hi)
        };
        if !(mid > lo && mid < hi) {
            mid = 0.5 * (lo + hi);
        }
        let s_mid = integrate_to(rhs, ctl, lo, s_at_lo, mid)?;
        if s_mid[1].abs() <= tol {
            return Ok((mid, s_mid));
        }
        if s_mid[1] > 0.0 {
            lo = mid;
            s_at_lo = s_mid;
        } else {
            hi = mid;
        }
    }
    let s_final = integrate_to(rhs, ctl, lo, s_at_lo, hi)?;
    Ok((hi, s_final))
}

/// Adaptive integration from `(x0, s0)` to exactly `x1`.
fn integrate_to<F>(rhs: &mut F, ctl: &Controller, x0: f64, s0: State, x1: f64) -> Result<State>
where
    F: FnMut(f64, State) -> Result<State>,
{
    let mut x = x0;
    let mut s = s0;
    let mut h = (x1 - x0).max(ctl.h_min);
    while x < x1 {
        let h_try = h.min(x1 - x).max(ctl.h_min);
        let out = rk::step(rhs, x, s, h_try, ctl)?;
        h = out.h_next;
        if out.accepted {
            x += out.h_used;
            s = out.state;
        }
    }
    Ok(s)
}

/// Solves the free-boundary problem and assembles the game value on a
/// uniform grid over `[0, 1.1*y_0]` with `n` points.
pub fn solve_dual(
    p: &ParamsBundle,
    m_barrier: f64,
    n: usize,
    tol: f64,
) -> Result<(DualSolution, DualSolveReport)> {
    check_barrier(p, m_barrier)?;
    if n < 101 {
        return Err(Error::BadInput(format!("dual grid needs n >= 101, got {n}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::BadInput(format!("tolerance must be positive, got {tol}")));
    }
    let delta = SCAN_DELTA_FACTOR / m_barrier;
    let lo_edge = delta;
    let hi_edge = 1.0 / m_barrier - delta;

    // Bracketing scan.
    let mut scan: Vec<(f64, Option<f64>)> = Vec::with_capacity(SCAN_POINTS);
    for j in 0..SCAN_POINTS {
        let trial = lo_edge + (hi_edge - lo_edge) * j as f64 / (SCAN_POINTS - 1) as f64;
        let resid = match shoot_dual(p, m_barrier, trial) {
            Ok(rec) => Some(rec.g_at_stop - 1.0),
            Err(Error::NoPastingPoint { .. }) => None,
            Err(e) => return Err(e),
        };
        scan.push((trial, resid));
    }
    let valid: Vec<(f64, f64)> =
        scan.iter().filter_map(|(t, r)| r.map(|r| (*t, r))).collect();
    let mut scan_monotone = true;
    for w in valid.windows(2) {
        if w[1].1 < w[0].1 {
            scan_monotone = false;
        }
    }
    let mut brackets = Vec::new();
    for w in valid.windows(2) {
        if w[0].1 == 0.0 || w[0].1.signum() != w[1].1.signum() {
            brackets.push((w[0], w[1]));
        }
    }
    if brackets.is_empty() {
        return Err(Error::NoBracket { scanned: valid.len() });
    }

    // Bisection on the first bracket (sign changes beyond the first are
    // surfaced in the report).
    let ((mut lo, mut rlo), (mut hi, _)) = brackets[0];
    let mut bisection_iterations = 0;
    let mut best = lo;
    let mut best_resid = rlo;
    while best_resid.abs() > tol && bisection_iterations < MAX_BISECT {
        bisection_iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let rec = shoot_dual(p, m_barrier, mid)?;
        let rm = rec.g_at_stop - 1.0;
        if rm.abs() < best_resid.abs() {
            best = mid;
            best_resid = rm;
        }
        if rm == 0.0 {
            break;
        }
        if rm.signum() == rlo.signum() {
            lo = mid;
            rlo = rm;
        } else {
            hi = mid;
        }
    }
    if best_resid.abs() > tol {
        return Err(Error::NonConvergence {
            iterations: bisection_iterations,
            last_change: best_resid.abs(),
        });
    }

    let rec = shoot_dual(p, m_barrier, best)?;
    let boundary = FreeBoundary { lower: best, upper: rec.y_stop };
    let curve = assemble_curve(m_barrier, &rec, boundary, n)?;
    let sol = DualSolution {
        m_barrier,
        curve,
        boundary,
        pasting_residuals: [(rec.path[0].dg - m_barrier).abs(), rec.dg_at_stop.abs()],
    };
    let report = DualSolveReport {
        scan,
        scan_monotone,
        sign_changes: brackets.len(),
        bisection_iterations,
        value_residual: best_resid.abs(),
    };
    Ok((sol, report))
}

/// Cubic-Hermite evaluation of `(g, g', g'')` on the shot trajectory.
fn path_eval(path: &[PathPoint], y: f64) -> (f64, f64, f64) {
    let last = path.len() - 1;
    let yc = y.clamp(path[0].y, path[last].y);
    let mut k = match path.binary_search_by(|pt| pt.y.partial_cmp(&yc).unwrap()) {
        Ok(i) => i,
        Err(i) => i.saturating_sub(1),
    };
    k = k.min(last - 1);
    let (a, b) = (&path[k], &path[k + 1]);
    let hh = b.y - a.y;
    if hh <= 0.0 {
        return (a.g, a.dg, a.ddg);
    }
    let t = ((yc - a.y) / hh).clamp(0.0, 1.0);
    let g = hermite(a.g, a.dg * hh, b.g, b.dg * hh, t);
    let dg = hermite(a.dg, a.ddg * hh, b.dg, b.ddg * hh, t);
    let ddg = a.ddg * (1.0 - t) + b.ddg * t;
    (g, dg, ddg)
}

fn assemble_curve(
    m_barrier: f64,
    rec: &ShootRecord,
    boundary: FreeBoundary,
    n: usize,
) -> Result<ValueCurve> {
    let grid = Grid::new(0.0, 1.1 * boundary.upper, n)?;
    let mut values = Vec::with_capacity(n);
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for y in grid.points() {
        if y <= boundary.lower {
            values.push(m_barrier * y);
            d1.push(m_barrier);
            d2.push(0.0);
        } else if y < boundary.upper {
            let (g, dg, ddg) = path_eval(&rec.path, y);
            values.push(g);
            d1.push(dg);
            d2.push(ddg);
        } else {
            values.push(1.0);
            d1.push(0.0);
            d2.push(0.0);
        }
    }
    ValueCurve::new(grid, values, d1, d2, CurveKind::DualGame)
}

/// Optimal game control on the continuation region, in both algebraic
/// forms. The ratio form is `alpha = -b*sqrt(1-rho^2) * g'/g''`; the root
/// form eliminates `g''` through the ODE:
///
/// ```text
/// alpha(y) = ( -J + sqrt(J^2 + 2*b^2*(1-rho^2)*m*y^2) ) / (b*sqrt(1-rho^2)),
/// J = (y - lambda*g)/g' + (lambda - r_tilde)*y.
/// ```
///
/// The linear-growth cap `alpha <= sqrt(2m)*y` follows from
/// `-J + sqrt(J^2 + s) <= sqrt(s)`, which holds iff `J >= 0`. Near the
/// lower pasting point `J(y_M) = y_M*(1/M - r_tilde)`, so the cap in that
/// exact form requires `r_tilde*M <= 1`; when `M > 1/r_tilde` the valid
/// pointwise bound carries an excess term:
///
/// ```text
/// alpha(y) <= sqrt(2m)*y + 2*max(0, -J(y)) / (b*sqrt(1-rho^2)).
/// ```
///
/// `drift` stores J at each node so callers can check the cap on its
/// actual domain of validity.
#[derive(Debug, Clone)]
pub struct ControlCurve {
    pub ys: Vec<f64>,
    pub ratio: Vec<f64>,
    pub root: Vec<f64>,
    pub drift: Vec<f64>,
}

pub fn alpha_star(sol: &DualSolution, p: &ParamsBundle) -> Result<ControlCurve> {
    let vol1 = p.vol1();
    let mut ys = Vec::new();
    let mut ratio = Vec::new();
    let mut root = Vec::new();
    let mut drift = Vec::new();
    for (i, y) in sol.curve.grid.points().enumerate() {
        if !(y > sol.boundary.lower && y < sol.boundary.upper) {
            continue;
        }
        let (g, dg, ddg) = (sol.curve.values[i], sol.curve.d1[i], sol.curve.d2[i]);
        if ddg >= 0.0 {
            return Err(Error::ConcavityBreakdown { y });
        }
        if dg <= 0.0 {
            return Err(Error::BadInput(format!("slope must be positive inside D, got {dg} at y = {y}")));
        }
        ys.push(y);
        ratio.push(-vol1 * dg / ddg);
        let j = (y - p.market.lambda * g) / dg + (p.market.lambda - p.derived.r_tilde) * y;
        let s = 2.0 * p.bb() * p.derived.m * y * y;
        let num = if j >= 0.0 { s / (j + (j * j + s).sqrt()) } else { -j + (j * j + s).sqrt() };
        root.push(num / vol1);
        drift.push(j);
    }
    Ok(ControlCurve { ys, ratio, root, drift })
}

/// Control sampled on every node of the solution grid, extended outside
/// the continuation region: zero beyond `y_0` (the game has stopped), a
/// linear ramp through the origin below `y_M` (continuous with the
/// interior limit, vanishing with the state).
pub fn alpha_full(sol: &DualSolution, p: &ParamsBundle) -> Result<Vec<f64>> {
    let ctl = alpha_star(sol, p)?;
    let n = sol.curve.grid.n;
    let mut alpha = vec![0.0; n];
    let mut inner = ctl.ys.iter().zip(&ctl.ratio);
    let anchor = match (ctl.ys.first(), ctl.ratio.first()) {
        (Some(&y), Some(&a)) if y > 0.0 => a / y,
        _ => 0.0,
    };
    for (i, y) in sol.curve.grid.points().enumerate() {
        if y <= sol.boundary.lower {
            alpha[i] = anchor * y;
        } else if y < sol.boundary.upper {
            let (yy, a) = inner.next().expect("interior nodes enumerate in order");
            debug_assert_eq!(*yy, y);
            alpha[i] = *a;
        }
    }
    Ok(alpha)
}

/// JSON sidecar accompanying the dual CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundarySidecar {
    #[serde(rename = "M")]
    pub m_barrier: f64,
    #[serde(flatten)]
    pub boundary: FreeBoundary,
    pub pasting_residuals: [f64; 2],
}

impl BoundarySidecar {
    pub fn from_solution(sol: &DualSolution) -> Self {
        BoundarySidecar {
            m_barrier: sol.m_barrier,
            boundary: sol.boundary,
            pasting_residuals: sol.pasting_residuals,
        }
    }
}

/// Reassembles a [`DualSolution`] from the CSV + sidecar pair written by
/// the CLI.
pub fn solution_from_parts(curve: ValueCurve, sidecar: &BoundarySidecar) -> Result<DualSolution> {
    if curve.kind != CurveKind::DualGame {
        return Err(Error::BadInput(format!("expected a dual game curve, got {:?}", curve.kind)));
    }
    Ok(DualSolution {
        m_barrier: sidecar.m_barrier,
        curve,
        boundary: sidecar.boundary,
        pasting_residuals: sidecar.pasting_residuals,
    })
}
