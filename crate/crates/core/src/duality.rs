//! Convex-duality bridge between the two solution routes.
//!
//! The ruin probability on `[0, M]` and the dual game value are Legendre
//! conjugates of one another:
//!
//! ```text
//! Phi_M(z) = max_{y >= 0} ( ghat_M(y) - z*y ),
//! ghat_M(y) = min_{0 <= z <= M} ( Phi_M(z) + z*y ).
//! ```
//!
//! Because `ghat_M` is concave with slope falling from `M` to `0`, the
//! maximizer `y*(z)` solves `ghat_M'(y) = z` and the transform picks it up
//! by slope inversion; ties (which occur exactly at the endpoint slopes)
//! resolve to the leftmost maximizer. The envelope theorem gives the
//! transform's slope analytically, `Phi_M'(z) = -y*(z)`, while its second
//! derivative is deliberately estimated by numeric differences so that
//! curvature comparisons against `-1/ghat''(y*)` exercise two independent
//! routes instead of restating one formula.

use serde::Serialize;

use crate::curve::{CurveKind, Grid, ValueCurve};
use crate::error::{Error, Result};
use crate::fbp::{DualSolution, FreeBoundary};

/// Relative slack when validating monotonicity of stored slopes.
const SLOPE_NOISE: f64 = 1e-10;
/// Number of interior curvature/slope spot checks in the report.
const SLOPE_SAMPLES: usize = 10;

/// One spot comparison at an interior transform node: the analytic slope
/// `-y*(z)` against a centered difference of the values, and the numeric
/// second difference against the curvature relation
/// `Phi''(z) = -1/ghat''(y*(z))`.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeCheck {
    pub z: f64,
    pub d1_numeric: f64,
    pub d1_analytic: f64,
    pub d1_abs_err: f64,
    pub d2_numeric: f64,
    pub d2_analytic: f64,
    pub d2_rel_err: f64,
}

/// Summary of every duality diagnostic in one place.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    /// `max_z |Phi_M(z) - f_M(z)|` over the primal grid.
    pub sup_gap: f64,
    /// `|y_M - (-f_M'(M))|`.
    #[serde(rename = "boundary_gap_yM")]
    pub boundary_gap_y_m: f64,
    /// `|y_0 - (-f_M'(0))|`.
    #[serde(rename = "boundary_gap_y0")]
    pub boundary_gap_y_0: f64,
    /// `max_y |min_z(Phi_M(z) + z*y) - ghat_M(y)|` over dual nodes.
    pub biconjugate_gap: f64,
    pub slope_checks: Vec<SlopeCheck>,
    pub max_d1_abs_err: f64,
    pub max_d2_rel_err: f64,
}

fn require_kind(curve: &ValueCurve, kind: CurveKind, what: &str) -> Result<()> {
    if curve.kind != kind {
        return Err(Error::BadInput(format!("{what} expects a {kind:?} curve, got {:?}", curve.kind)));
    }
    Ok(())
}

/// Solves `hermite-slope(y) = target` for `y` within cell `k` of `curve`,
/// where the interpolated slope is monotone on the cell.
fn invert_slope_in_cell(curve: &ValueCurve, k: usize, target: f64) -> f64 {
    let h = curve.grid.h();
    let (ya, yb) = (curve.grid.point(k), curve.grid.point(k + 1));
    let slope_at = |y: f64| curve.eval_with_slope(y).map(|(_, s)| s).unwrap_or(f64::NAN);
    let (mut lo, mut hi) = (ya, yb);
    // Orient the bisection by the direction of the stored slopes.
    let descending = curve.d1[k] >= curve.d1[k + 1];
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let s = slope_at(mid);
        let above = if descending { s > target } else { s < target };
        if above {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + h) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Finds the leftmost cell whose stored endpoint slopes bracket `target`.
fn bracket_slope(curve: &ValueCurve, target: f64) -> Option<usize> {
    let d1 = &curve.d1;
    (0..d1.len() - 1).find(|&k| {
        (d1[k] - target) * (d1[k + 1] - target) <= 0.0 && d1[k] != d1[k + 1]
    })
}

/// Legendre transform of a concave dual curve onto a uniform grid of `n`
/// points over `[0, ghat'(0)]`.
pub fn legendre_concave(dual: &ValueCurve, n: usize) -> Result<ValueCurve> {
    require_kind(dual, CurveKind::DualGame, "Legendre transform")?;
    if n < 11 {
        return Err(Error::BadInput(format!("transform grid needs n >= 11, got {n}")));
    }
    let m_slope = dual.d1[0];
    let min_slope = *dual.d1.last().unwrap();
    if !(m_slope > 0.0) || min_slope > SLOPE_NOISE * m_slope.max(1.0) {
        return Err(Error::SlopeRange { min_slope, max_slope: m_slope, need: m_slope.max(0.0) });
    }
    for w in dual.d1.windows(2) {
        if w[1] > w[0] + SLOPE_NOISE * m_slope {
            return Err(Error::BadInput(format!(
                "dual curve slopes increase from {} to {}; the transform needs a concave input",
                w[0], w[1]
            )));
        }
    }

    let grid = Grid::new(0.0, m_slope, n)?;
    let mut values = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    for (i, z) in grid.points().enumerate() {
        if i == 0 {
            // Leftmost maximizer of ghat itself: the upper pasting point,
            // where the slope first reaches zero. The maximum is the flat
            // branch value, exactly.
            let y0 = match bracket_slope(dual, 0.0) {
                Some(k) => invert_slope_in_cell(dual, k, 0.0),
                None => dual.grid.upper,
            };
            values[0] = *dual.values.last().unwrap();
            d1[0] = -y0;
            continue;
        }
        if i == n - 1 {
            // Slope M ties along the initial line branch; leftmost is the
            // origin, where ghat(0) - M*0 = 0 exactly.
            values[n - 1] = dual.values[0] - m_slope * dual.grid.lower;
            d1[n - 1] = -dual.grid.lower;
            continue;
        }
        let k = bracket_slope(dual, z)
            .ok_or(Error::SlopeRange { min_slope, max_slope: m_slope, need: z })?;
        let y_star = invert_slope_in_cell(dual, k, z);
        let (g, _) = dual.eval_with_slope(y_star)?;
        values[i] = g - z * y_star;
        d1[i] = -y_star;
    }
    let d2 = numeric_second_differences(&values, grid.h());
    ValueCurve::new(grid, values, d1, d2, CurveKind::DualTransform)
}

/// Second differences: central in the interior, one-sided second order at
/// the ends.
fn numeric_second_differences(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let h2 = h * h;
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d2[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
    }
    if n >= 4 {
        d2[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2;
        d2[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2;
    }
    d2
}

/// Evaluates a stored transform at any `z >= 0`, honoring the identity
/// `Phi_M(z) = 0` for `z >= M`.
pub fn transform_value(transform: &ValueCurve, z: f64) -> Result<f64> {
    require_kind(transform, CurveKind::DualTransform, "transform evaluation")?;
    if !(z.is_finite() && z >= 0.0) {
        return Err(Error::OutOfDomain {
            z,
            lower: transform.grid.lower,
            upper: f64::INFINITY,
        });
    }
    if z >= transform.grid.upper {
        return Ok(0.0);
    }
    Ok(transform.eval_with_slope(z)?.0)
}

/// Brute-force conjugate: grid argmax over the dual curve's own nodes.
/// Slow and first-order accurate, kept as an independent oracle for tests.
pub fn legendre_bruteforce(dual: &ValueCurve, zs: &[f64]) -> Vec<f64> {
    zs.iter()
        .map(|&z| {
            dual.grid
                .points()
                .zip(&dual.values)
                .map(|(y, g)| g - z * y)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Free-boundary estimates read off the primal slope at the endpoints:
/// `y_M = -f_M'(M)` and `y_0 = -f_M'(0)`.
pub fn boundary_from_primal(primal: &ValueCurve) -> Result<FreeBoundary> {
    require_kind(primal, CurveKind::PrimalM, "boundary extraction")?;
    Ok(FreeBoundary {
        lower: -primal.d1[primal.d1.len() - 1],
        upper: -primal.d1[0],
    })
}

/// Biconjugate `min_z (Phi(z) + z*y)` of a stored transform.
pub fn biconjugate(transform: &ValueCurve, y: f64) -> Result<f64> {
    require_kind(transform, CurveKind::DualTransform, "biconjugation")?;
    if !(y.is_finite() && y >= 0.0) {
        return Err(Error::BadInput(format!("biconjugate needs y >= 0, got {y}")));
    }
    // Minimize Phi(z) + z*y: stationarity Phi'(z) = -y, with Phi' stored
    // as -y*(z), non-decreasing from -y_0 to 0.
    let y0 = -transform.d1[0];
    if y >= y0 {
        return Ok(transform.values[0]);
    }
    if y <= -*transform.d1.last().unwrap() {
        return Ok(*transform.values.last().unwrap() + transform.grid.upper * y);
    }
    let k = bracket_slope(transform, -y).ok_or(Error::SlopeRange {
        min_slope: transform.d1[0],
        max_slope: *transform.d1.last().unwrap(),
        need: -y,
    })?;
    let z_star = invert_slope_in_cell(transform, k, -y);
    let (phi, _) = transform.eval_with_slope(z_star)?;
    Ok(phi + z_star * y)
}

/// Runs every duality diagnostic against a primal curve solved on the
/// same barrier, producing the consistency report.
pub fn biconjugate_check(
    primal: &ValueCurve,
    sol: &DualSolution,
    transform: &ValueCurve,
) -> Result<DualityReport> {
    require_kind(primal, CurveKind::PrimalM, "duality report")?;
    require_kind(transform, CurveKind::DualTransform, "duality report")?;

    // Pointwise gap on the primal grid; evaluate the transform wherever
    // the grids differ.
    let same_grid = transform.grid.n == primal.grid.n
        && (transform.grid.upper - primal.grid.upper).abs() < 1e-12 * primal.grid.upper.abs();
    let mut sup_gap = 0.0f64;
    for (i, z) in primal.grid.points().enumerate() {
        let phi = if same_grid { transform.values[i] } else { transform_value(transform, z.max(0.0))? };
        sup_gap = sup_gap.max((phi - primal.values[i]).abs());
    }

    let estimate = boundary_from_primal(primal)?;
    let boundary_gap_y_m = (sol.boundary.lower - estimate.lower).abs();
    let boundary_gap_y_0 = (sol.boundary.upper - estimate.upper).abs();

    let mut biconjugate_gap = 0.0f64;
    for (i, y) in sol.curve.grid.points().enumerate() {
        let back = biconjugate(transform, y)?;
        biconjugate_gap = biconjugate_gap.max((back - sol.curve.values[i]).abs());
    }

    // Slope and curvature spot checks at interior transform nodes, away
    // from the corner at z = M and the flat take-off at z = 0.
    let mut slope_checks = Vec::new();
    let mut max_d1_abs_err = 0.0f64;
    let mut max_d2_rel_err = 0.0f64;
    let n = transform.grid.n;
    let hz = transform.grid.h();
    for j in 1..=SLOPE_SAMPLES {
        let i = (n - 1) * j / (SLOPE_SAMPLES + 1);
        if i == 0 || i >= n - 1 {
            continue;
        }
        let z = transform.grid.point(i);
        let y_star = -transform.d1[i];
        if !(y_star > sol.boundary.lower && y_star < sol.boundary.upper) {
            continue;
        }
        let d1_numeric = (transform.values[i + 1] - transform.values[i - 1]) / (2.0 * hz);
        let d1_analytic = transform.d1[i];
        let d1_abs_err = (d1_numeric - d1_analytic).abs();
        let ddg = sol.curve.d2_interp().eval(y_star);
        if ddg >= 0.0 {
            return Err(Error::ConcavityBreakdown { y: y_star });
        }
        let d2_analytic = -1.0 / ddg;
        let d2_numeric = transform.d2[i];
        let d2_rel_err = (d2_numeric - d2_analytic).abs() / d2_analytic.abs();
        max_d1_abs_err = max_d1_abs_err.max(d1_abs_err);
        max_d2_rel_err = max_d2_rel_err.max(d2_rel_err);
        slope_checks.push(SlopeCheck {
            z,
            d1_numeric,
            d1_analytic,
            d1_abs_err,
            d2_numeric,
            d2_analytic,
            d2_rel_err,
        });
    }

    Ok(DualityReport {
        sup_gap,
        boundary_gap_y_m,
        boundary_gap_y_0,
        biconjugate_gap,
        slope_checks,
        max_d1_abs_err,
        max_d2_rel_err,
    })
}
