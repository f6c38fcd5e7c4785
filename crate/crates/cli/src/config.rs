//! Run configuration: a JSON file describing one solve/simulate run, plus
//! the flag overrides and the hash that stamps every artifact.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ruin_core::model::load_market_params;
use ruin_core::{MarketParams, ParamsBundle, SimConfig};

/// Market parameters, either inline or as a path to a `key=value`/JSON
/// parameter file (resolved relative to the config file).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamsSpec {
    Inline(MarketParams),
    File(PathBuf),
}

fn default_ladder_tol() -> f64 {
    1e-4
}

/// One run description. `ladder_tol` only matters to `sweep` and defaults
/// so existing configs stay valid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsSpec,
    #[serde(rename = "M")]
    pub m_barrier: f64,
    pub grid_n: usize,
    pub tol: f64,
    pub sim: SimConfig,
    pub outdir: PathBuf,
    #[serde(default = "default_ladder_tol")]
    pub ladder_tol: f64,
}

/// Flag overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub outdir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub dt: Option<f64>,
    pub grid: Option<usize>,
    pub barrier: Option<f64>,
}

/// The effective numeric inputs, hashed into `config_sha256`. The output
/// directory is deliberately excluded: artifacts are reproducible from
/// (config, seed) regardless of where they land.
#[derive(Serialize)]
struct EffectiveConfig<'a> {
    params: &'a MarketParams,
    #[serde(rename = "M")]
    m_barrier: f64,
    grid_n: usize,
    tol: f64,
    sim: &'a SimConfig,
    ladder_tol: f64,
}

/// Config after file loading, override application, and validation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub bundle: ParamsBundle,
    pub m_barrier: f64,
    pub grid_n: usize,
    pub tol: f64,
    pub sim: SimConfig,
    pub outdir: PathBuf,
    pub ladder_tol: f64,
    pub sha256: String,
}

pub fn load(config_path: &Path, ov: &Overrides) -> Result<Resolved> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("cannot read config {}", config_path.display()))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse config {}", config_path.display()))?;
    resolve(cfg, ov, config_path)
}

fn resolve(cfg: RunConfig, ov: &Overrides, config_path: &Path) -> Result<Resolved> {
    let market = match &cfg.params {
        ParamsSpec::Inline(p) => *p,
        ParamsSpec::File(path) => {
            let full = if path.is_relative() {
                config_path.parent().unwrap_or(Path::new(".")).join(path)
            } else {
                path.clone()
            };
            load_market_params(&full)
                .with_context(|| format!("params file {}", full.display()))?
        }
    };
    let bundle = ParamsBundle::new(market)?;

    let mut sim = cfg.sim;
    if let Some(seed) = ov.seed {
        sim.seed = seed;
    }
    if let Some(paths) = ov.paths {
        sim.n_paths = paths;
    }
    if let Some(dt) = ov.dt {
        sim.dt = dt;
    }
    sim.validate()?;

    let m_barrier = ov.barrier.unwrap_or(cfg.m_barrier);
    if !(m_barrier.is_finite() && m_barrier > 0.0) {
        bail!("barrier M must be positive and finite, got {m_barrier}");
    }
    let grid_n = ov.grid.unwrap_or(cfg.grid_n);
    if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
        bail!("tol must be positive and finite, got {}", cfg.tol);
    }
    if !(cfg.ladder_tol.is_finite() && cfg.ladder_tol > 0.0) {
        bail!("ladder_tol must be positive and finite, got {}", cfg.ladder_tol);
    }

    let effective = EffectiveConfig {
        params: &market,
        m_barrier,
        grid_n,
        tol: cfg.tol,
        sim: &sim,
        ladder_tol: cfg.ladder_tol,
    };
    let canonical = serde_json::to_string(&effective).context("config hashing")?;
    let sha256 = hex_digest(&canonical);

    Ok(Resolved {
        bundle,
        m_barrier,
        grid_n,
        tol: cfg.tol,
        sim,
        outdir: ov.outdir.clone().unwrap_or(cfg.outdir),
        ladder_tol: cfg.ladder_tol,
        sha256,
    })
}

fn hex_digest(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
