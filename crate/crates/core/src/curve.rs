//! Uniform grids, sampled value/policy curves, monotone interpolation, and
//! the CSV schemas shared by the solvers.
//!
//! A [`ValueCurve`] stores function values together with the first and
//! second derivative estimates produced by its solver. Downstream consumers
//! (feedback policies, transforms, simulators) interpolate those stored
//! arrays rather than re-differencing values, so every module sees one
//! consistent set of derivatives.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on `[lower, upper]` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(lower: f64, upper: f64, n: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || upper <= lower || n < 2 {
            return Err(Error::BadInput(format!(
                "grid needs finite lower < upper and n >= 2, got [{lower}, {upper}] with n = {n}"
            )));
        }
        Ok(Grid { lower, upper, n })
    }

    pub fn h(&self) -> f64 {
        (self.upper - self.lower) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.upper
        } else {
            self.lower + i as f64 * self.h()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    /// Index of the cell containing `x`, clamped to `[0, n-2]`.
    pub fn cell(&self, x: f64) -> usize {
        let idx = ((x - self.lower) / self.h()) as isize;
        idx.clamp(0, self.n as isize - 2) as usize
    }
}

/// What a [`ValueCurve`] represents; consumers check this before use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// Barrier ruin probability `phi_M` on `[0, M]`.
    PrimalM,
    /// Ladder limit `phi` on `[0, M*]`.
    PrimalUnbounded,
    /// Game value `ghat_M` on `[0, 1.1*y_0]`.
    DualGame,
    /// Legendre transform of the game value on `[0, M]`.
    DualTransform,
}

/// Sampled function with solver-produced derivative estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueCurve {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub kind: CurveKind,
}

impl ValueCurve {
    pub fn new(grid: Grid, values: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>, kind: CurveKind) -> Result<Self> {
        if values.len() != grid.n || d1.len() != grid.n || d2.len() != grid.n {
            return Err(Error::BadInput(format!(
                "curve arrays must have grid length {}, got {}/{}/{}",
                grid.n,
                values.len(),
                d1.len(),
                d2.len()
            )));
        }
        Ok(ValueCurve { grid, values, d1, d2, kind })
    }

    /// Monotone cubic interpolator over the stored values.
    pub fn value_interp(&self) -> Pchip {
        Pchip::new(self.grid, &self.values)
    }

    /// Monotone cubic interpolator over the stored first derivatives.
    pub fn d1_interp(&self) -> Pchip {
        Pchip::new(self.grid, &self.d1)
    }

    /// Linear interpolator over the stored second derivatives.
    pub fn d2_interp(&self) -> Linear<'_> {
        Linear { grid: self.grid, data: &self.d2 }
    }

    pub fn value_at(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.value_interp().eval(x))
    }

    /// Cubic Hermite evaluation that trusts the stored derivatives: the
    /// value uses `d1` as nodal slopes and the returned slope uses `d2`.
    /// Sharper than the shape-preserving interpolant when the stored
    /// derivatives come from an accurate solver.
    pub fn eval_with_slope(&self, x: f64) -> Result<(f64, f64)> {
        self.check_domain(x)?;
        let k = self.grid.cell(x);
        let h = self.grid.h();
        let t = ((x - self.grid.point(k)) / h).clamp(0.0, 1.0);
        let v = hermite(self.values[k], self.d1[k] * h, self.values[k + 1], self.d1[k + 1] * h, t);
        let s = hermite(self.d1[k], self.d2[k] * h, self.d1[k + 1], self.d2[k + 1] * h, t);
        Ok((v, s))
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if !self.grid.contains(x) {
            return Err(Error::OutOfDomain { z: x, lower: self.grid.lower, upper: self.grid.upper });
        }
        Ok(())
    }
}

/// Feedback investment policy sampled on the same grid as its curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCurve {
    pub grid: Grid,
    pub pi: Vec<f64>,
}

impl PolicyCurve {
    /// Piecewise-linear policy evaluation; the policy is Lipschitz, so
    /// linear interpolation keeps the simulator's bias at O(h^2).
    pub fn eval(&self, z: f64) -> Result<f64> {
        if !self.grid.contains(z) {
            return Err(Error::OutOfDomain { z, lower: self.grid.lower, upper: self.grid.upper });
        }
        Ok(Linear { grid: self.grid, data: &self.pi }.eval(z))
    }
}

/// Piecewise-linear interpolation on a uniform grid (clamped at the ends).
#[derive(Debug, Clone, Copy)]
pub struct Linear<'a> {
    pub grid: Grid,
    pub data: &'a [f64],
}

impl Linear<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.grid.cell(x);
        let h = self.grid.h();
        let t = ((x - self.grid.point(i)) / h).clamp(0.0, 1.0);
        self.data[i] * (1.0 - t) + self.data[i + 1] * t
    }
}

/// Fritsch-Carlson monotone cubic (PCHIP) on a uniform grid: the
/// interpolant is monotone wherever the data are, with no overshoot.
#[derive(Debug, Clone)]
pub struct Pchip {
    grid: Grid,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(grid: Grid, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.n, "pchip data length mismatch");
        let h = grid.h();
        let n = grid.n;
        let mut slopes = vec![0.0; n];
        if n == 2 {
            let d = (values[1] - values[0]) / h;
            slopes[0] = d;
            slopes[1] = d;
            return Pchip { grid, values: values.to_vec(), slopes };
        }
        let delta: Vec<f64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h).collect();
        for i in 1..n - 1 {
            let (dl, dr) = (delta[i - 1], delta[i]);
            slopes[i] = if dl * dr > 0.0 {
                // Harmonic mean on a uniform grid; bounded by 3*min(|dl|,|dr|).
                2.0 * dl * dr / (dl + dr)
            } else {
                0.0
            };
        }
        slopes[0] = endpoint_slope(delta[0], delta[1]);
        slopes[n - 1] = endpoint_slope(delta[n - 2], delta[n - 3]);
        Pchip { grid, values: values.to_vec(), slopes }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.grid.cell(x);
        let h = self.grid.h();
        let t = ((x - self.grid.point(i)) / h).clamp(0.0, 1.0);
        hermite(self.values[i], self.slopes[i] * h, self.values[i + 1], self.slopes[i + 1] * h, t)
    }
}

/// Shape-preserving one-sided endpoint slope (Fritsch-Carlson rule).
fn endpoint_slope(d0: f64, d1: f64) -> f64 {
    let s = 1.5 * d0 - 0.5 * d1;
    if s * d0 <= 0.0 {
        0.0
    } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        s
    }
}

/// Cubic Hermite on [0,1] with scaled endpoint derivatives.
pub(crate) fn hermite(v0: f64, m0: f64, v1: f64, m1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    v0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + m0 * (t3 - 2.0 * t2 + t)
        + v1 * (-2.0 * t3 + 3.0 * t2)
        + m1 * (t3 - t2)
}

const PRIMAL_HEADER: &str = "z,phi,dphi,ddphi,pi";
const DUAL_HEADER: &str = "y,ghat,dghat,ddghat,alpha";

/// Writes a primal-side curve (or the dual transform) with its policy:
/// columns `z,phi,dphi,ddphi,pi`, full double precision.
pub fn write_primal_csv<W: Write>(w: &mut W, curve: &ValueCurve, policy: &PolicyCurve) -> Result<()> {
    if policy.grid != curve.grid {
        return Err(Error::BadInput("policy grid does not match curve grid".into()));
    }
    writeln!(w, "{PRIMAL_HEADER}")?;
    for i in 0..curve.grid.n {
        writeln!(
            w,
            "{},{},{},{},{}",
            curve.grid.point(i),
            curve.values[i],
            curve.d1[i],
            curve.d2[i],
            policy.pi[i]
        )?;
    }
    Ok(())
}

/// Writes a dual-game curve with its control: columns
/// `y,ghat,dghat,ddghat,alpha`.
pub fn write_dual_csv<W: Write>(w: &mut W, curve: &ValueCurve, alpha: &[f64]) -> Result<()> {
    if alpha.len() != curve.grid.n {
        return Err(Error::BadInput("alpha column length does not match curve grid".into()));
    }
    writeln!(w, "{DUAL_HEADER}")?;
    for i in 0..curve.grid.n {
        writeln!(
            w,
            "{},{},{},{},{}",
            curve.grid.point(i),
            curve.values[i],
            curve.d1[i],
            curve.d2[i],
            alpha[i]
        )?;
    }
    Ok(())
}

/// Parses a five-column curve CSV previously written by this crate. Returns
/// the curve plus the fifth column (policy or control).
pub fn read_curve_csv(path: &Path, kind: CurveKind) -> Result<(ValueCurve, Vec<f64>)> {
    let expected_header = match kind {
        CurveKind::DualGame => DUAL_HEADER,
        _ => PRIMAL_HEADER,
    };
    let context = path.display().to_string();
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != expected_header {
        return Err(Error::Parse {
            context,
            line: 1,
            message: format!("expected header {expected_header:?}, got {header:?}"),
        });
    }
    let mut xs = Vec::new();
    let mut cols: [Vec<f64>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| -> Result<f64> {
            let raw = fields.next().ok_or_else(|| Error::Parse {
                context: context.clone(),
                line: lineno,
                message: format!("missing column {name}"),
            })?;
            raw.trim().parse().map_err(|e| Error::Parse {
                context: context.clone(),
                line: lineno,
                message: format!("bad number in column {name}: {e}"),
            })
        };
        xs.push(next("1")?);
        for (c, col) in cols.iter_mut().enumerate() {
            col.push(next(&format!("{}", c + 2))?);
        }
        if fields.next().is_some() {
            return Err(Error::Parse {
                context: context.clone(),
                line: lineno,
                message: "too many columns".into(),
            });
        }
    }
    if xs.len() < 2 {
        return Err(Error::Parse { context, line: 0, message: "need at least two rows".into() });
    }
    let grid = Grid::new(xs[0], *xs.last().unwrap(), xs.len())?;
    let h = grid.h();
    for (i, &x) in xs.iter().enumerate() {
        if (x - grid.point(i)).abs() > 1e-9 * (1.0 + h) {
            return Err(Error::Parse {
                context,
                line: i + 2,
                message: format!("abscissa {x} breaks uniform spacing (expected {})", grid.point(i)),
            });
        }
    }
    let [values, d1, d2, extra] = cols;
    let curve = ValueCurve::new(grid, values, d1, d2, kind)?;
    Ok((curve, extra))
}
