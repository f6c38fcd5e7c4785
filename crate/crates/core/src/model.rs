//! Market model parameters and the derived quantities used by every solver.
//!
//! The market has a riskless rate `r`, one risky asset with drift `mu` and
//! volatility `sigma`, and a consumption stream following geometric Brownian
//! motion with drift `a` and volatility `b`, correlated with the risky asset
//! at level `rho`. Mortality is exponential with hazard `lambda`.
//!
//! Reduction by consumption replaces the original pair (r, mu) with
//!
//! ```text
//! excess    = mu - r - sigma*b*rho
//! r_tilde   = r - a + b^2 + excess*rho*b/sigma
//! mu_tilde  = excess + r_tilde
//! rho_tilde = b*sqrt(1-rho^2) / sqrt(b^2*(1-rho^2) + sigma^2)
//! m         = (excess/sigma)^2 / 2
//! ```
//!
//! `excess` is the risk premium left after hedging consumption, `m` the
//! associated Sharpe term that appears in both the primal HJB equation and
//! the dual free-boundary problem, and `rho_tilde` the correlation of the
//! two Brownian drivers of the reduced wealth-to-consumption ratio.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw market parameters. Field names match the configuration keys exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    /// Riskless rate.
    pub r: f64,
    /// Risky-asset drift.
    pub mu: f64,
    /// Risky-asset volatility.
    pub sigma: f64,
    /// Consumption drift.
    pub a: f64,
    /// Consumption volatility.
    pub b: f64,
    /// Correlation between consumption and the risky asset.
    pub rho: f64,
    /// Mortality hazard rate.
    pub lambda: f64,
}

/// Field-by-field validation outcome; empty means the parameters are usable.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks positivity and range constraints. `|rho| = 1` is rejected: the
/// perfectly-hedged case degenerates the reduced dynamics.
pub fn validate(p: &MarketParams) -> ValidationReport {
    let mut issues = Vec::new();
    let fields = [
        ("r", p.r),
        ("mu", p.mu),
        ("sigma", p.sigma),
        ("a", p.a),
        ("b", p.b),
        ("rho", p.rho),
        ("lambda", p.lambda),
    ];
    for (name, v) in fields {
        if !v.is_finite() {
            issues.push(format!("{name} must be finite, got {v}"));
        }
    }
    if p.sigma <= 0.0 {
        issues.push(format!("sigma must be positive, got {}", p.sigma));
    }
    if p.b <= 0.0 {
        issues.push(format!("b must be positive, got {}", p.b));
    }
    if p.lambda <= 0.0 {
        issues.push(format!("lambda must be positive, got {}", p.lambda));
    }
    if p.r <= 0.0 {
        issues.push(format!("r must be positive, got {}", p.r));
    }
    if !(p.rho > -1.0 && p.rho < 1.0) {
        issues.push(format!("rho must lie strictly inside (-1, 1), got {}", p.rho));
    }
    ValidationReport { issues }
}

/// Quantities derived from [`MarketParams`] by the consumption reduction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub excess: f64,
    pub r_tilde: f64,
    pub mu_tilde: f64,
    pub rho_tilde: f64,
    pub m: f64,
}

/// Computes the reduced-model quantities, rejecting invalid inputs.
pub fn derive_params(p: &MarketParams) -> Result<DerivedParams> {
    let report = validate(p);
    if !report.ok() {
        return Err(Error::InvalidParams(report.issues));
    }
    let excess = p.mu - p.r - p.sigma * p.b * p.rho;
    let r_tilde = p.r - p.a + p.b * p.b + excess * p.rho * p.b / p.sigma;
    let mu_tilde = excess + r_tilde;
    let ortho = p.b * p.b * (1.0 - p.rho * p.rho);
    let rho_tilde = ortho.sqrt() / (ortho + p.sigma * p.sigma).sqrt();
    let m = 0.5 * (excess / p.sigma) * (excess / p.sigma);
    Ok(DerivedParams { excess, r_tilde, mu_tilde, rho_tilde, m })
}

/// Validated parameters bundled with their derived quantities. Constructed
/// once and passed immutably through every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamsBundle {
    pub market: MarketParams,
    pub derived: DerivedParams,
}

impl ParamsBundle {
    pub fn new(market: MarketParams) -> Result<Self> {
        let derived = derive_params(&market)?;
        Ok(ParamsBundle { market, derived })
    }

    /// Volatility of the reduced ratio's own driver: `b*sqrt(1-rho^2)`.
    pub fn vol1(&self) -> f64 {
        self.market.b * (1.0 - self.market.rho * self.market.rho).sqrt()
    }

    /// Volatility of the investment driver: `sqrt(b^2*(1-rho^2) + sigma^2)`.
    pub fn vol2(&self) -> f64 {
        let b = self.market.b;
        let rho = self.market.rho;
        (b * b * (1.0 - rho * rho) + self.market.sigma * self.market.sigma).sqrt()
    }

    /// Diffusion coefficient `b^2*(1-rho^2)` of the z^2 term in the HJB
    /// operator.
    pub fn bb(&self) -> f64 {
        let v = self.vol1();
        v * v
    }
}

/// Loads market parameters from a file: JSON if the first non-blank byte is
/// `{`, otherwise `key=value` lines (blank lines and `#` comments allowed).
/// All seven keys must appear exactly once; unknown keys are rejected.
pub fn load_market_params(path: &Path) -> Result<MarketParams> {
    let text = std::fs::read_to_string(path)?;
    let context = path.display().to_string();
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(&text).map_err(|e| Error::Parse {
            context,
            line: e.line(),
            message: e.to_string(),
        });
    }
    parse_key_value(&text, &context)
}

fn parse_key_value(text: &str, context: &str) -> Result<MarketParams> {
    const KEYS: [&str; 7] = ["r", "mu", "sigma", "a", "b", "rho", "lambda"];
    let mut seen: [Option<f64>; 7] = [None; 7];
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or_else(|| Error::Parse {
            context: context.to_string(),
            line,
            message: format!("expected key=value, got {raw:?}"),
        })?;
        let key = key.trim();
        let slot = KEYS.iter().position(|k| *k == key).ok_or_else(|| Error::Parse {
            context: context.to_string(),
            line,
            message: format!("unknown key {key:?}"),
        })?;
        if seen[slot].is_some() {
            return Err(Error::Parse {
                context: context.to_string(),
                line,
                message: format!("duplicate key {key:?}"),
            });
        }
        let parsed: f64 = value.trim().parse().map_err(|e| Error::Parse {
            context: context.to_string(),
            line,
            message: format!("bad number for {key:?}: {e}"),
        })?;
        seen[slot] = Some(parsed);
    }
    for (slot, key) in KEYS.iter().enumerate() {
        if seen[slot].is_none() {
            return Err(Error::Parse {
                context: context.to_string(),
                line: 0,
                message: format!("missing key {key:?}"),
            });
        }
    }
    Ok(MarketParams {
        r: seen[0].unwrap(),
        mu: seen[1].unwrap(),
        sigma: seen[2].unwrap(),
        a: seen[3].unwrap(),
        b: seen[4].unwrap(),
        rho: seen[5].unwrap(),
        lambda: seen[6].unwrap(),
    })
}

/// Reference parameter set used throughout the test suite.
pub fn reference_params() -> MarketParams {
    MarketParams { r: 0.02, mu: 0.06, sigma: 0.2, a: 0.0, b: 0.1, rho: 0.0, lambda: 0.04 }
}
