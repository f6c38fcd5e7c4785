//! The artifact-writing subcommands. Each one drives core solvers and
//! leaves machine-readable files in the output directory; every JSON file
//! carries the SHA-256 of the effective configuration.

use std::io::Write;

use anyhow::{Context, Result};
use serde::Serialize;

use ruin_core::curve::{write_dual_csv, write_primal_csv};
use ruin_core::duality::{biconjugate_check, legendre_concave, DualityReport};
use ruin_core::fbp::{alpha_full, solve_dual, BoundarySidecar};
use ruin_core::pde::{
    convexity_report, feedback_policy, hjb_residual, solve_primal, solve_unbounded,
    ConvexityReport, LadderRung,
};
use ruin_core::sim::{saddle_test, simulate_ruin_outcomes, SaddleReport, SimResult};
use ruin_core::ValueCurve;

use crate::artifacts::{ensure_outdir, write_csv_with, write_json};
use crate::config::Resolved;

#[derive(Serialize)]
struct ConvexityArtifact<'a> {
    config_sha256: &'a str,
    grid_h: f64,
    #[serde(flatten)]
    report: &'a ConvexityReport,
}

pub fn solve_primal_cmd(rs: &Resolved) -> Result<()> {
    let sol = solve_primal(&rs.bundle, rs.m_barrier, rs.grid_n, rs.tol)?;
    let policy = feedback_policy(&sol.curve, &rs.bundle)?;
    let residuals = hjb_residual(&sol.curve, &rs.bundle)?;
    let convexity = convexity_report(&sol.curve, &rs.bundle)?;
    ensure_outdir(&rs.outdir)?;

    write_csv_with(&rs.outdir.join("primal.csv"), |w| write_primal_csv(w, &sol.curve, &policy))?;
    write_csv_with(&rs.outdir.join("residual.csv"), |w| {
        writeln!(w, "z,residual")?;
        for (i, r) in residuals.iter().enumerate() {
            writeln!(w, "{},{}", sol.curve.grid.point(i + 1), r)?;
        }
        Ok(())
    })?;
    write_json(
        &rs.outdir.join("convexity.json"),
        &ConvexityArtifact {
            config_sha256: &rs.sha256,
            grid_h: sol.curve.grid.h(),
            report: &convexity,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct BoundaryArtifact<'a> {
    config_sha256: &'a str,
    #[serde(flatten)]
    sidecar: BoundarySidecar,
}

pub fn solve_dual_cmd(rs: &Resolved) -> Result<()> {
    let (sol, _report) = solve_dual(&rs.bundle, rs.m_barrier, rs.grid_n, rs.tol)?;
    let alpha = alpha_full(&sol, &rs.bundle)?;
    ensure_outdir(&rs.outdir)?;

    write_csv_with(&rs.outdir.join("dual.csv"), |w| write_dual_csv(w, &sol.curve, &alpha))?;
    write_json(
        &rs.outdir.join("boundary.json"),
        &BoundaryArtifact {
            config_sha256: &rs.sha256,
            sidecar: BoundarySidecar::from_solution(&sol),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct DualityArtifact<'a> {
    config_sha256: &'a str,
    #[serde(flatten)]
    report: &'a DualityReport,
}

/// Writes a four-column curve CSV (no policy column): the transform lives
/// on the primal domain but carries no investment policy of its own.
fn write_transform_csv<W: Write>(w: &mut W, curve: &ValueCurve) -> ruin_core::Result<()> {
    writeln!(w, "z,phi,dphi,ddphi")?;
    for i in 0..curve.grid.n {
        writeln!(w, "{},{},{},{}", curve.grid.point(i), curve.values[i], curve.d1[i], curve.d2[i])?;
    }
    Ok(())
}

pub fn legendre_cmd(rs: &Resolved) -> Result<()> {
    let primal = solve_primal(&rs.bundle, rs.m_barrier, rs.grid_n, rs.tol)?;
    let (dual, _) = solve_dual(&rs.bundle, rs.m_barrier, rs.grid_n, rs.tol)?;
    let transform = legendre_concave(&dual.curve, rs.grid_n)?;
    let report = biconjugate_check(&primal.curve, &dual, &transform)?;
    ensure_outdir(&rs.outdir)?;

    write_csv_with(&rs.outdir.join("transform.csv"), |w| write_transform_csv(w, &transform))?;
    write_json(
        &rs.outdir.join("duality.json"),
        &DualityArtifact { config_sha256: &rs.sha256, report: &report },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SimulateArtifact<'a> {
    config_sha256: &'a str,
    z0: f64,
    #[serde(rename = "M")]
    m_barrier: f64,
    #[serde(flatten)]
    result: SimResult,
    pde_value: f64,
    abs_gap: f64,
}

pub fn simulate_cmd(rs: &Resolved, z0: f64, dump_paths: bool) -> Result<()> {
    let sol = solve_primal(&rs.bundle, rs.m_barrier, rs.grid_n, rs.tol)?;
    let policy = feedback_policy(&sol.curve, &rs.bundle)?;
    let (result, outcomes) =
        simulate_ruin_outcomes(&rs.bundle, Some(rs.m_barrier), &policy, z0, &rs.sim)?;
    let pde_value = sol.curve.value_at(z0)?;
    ensure_outdir(&rs.outdir)?;

    write_json(
        &rs.outdir.join("simulate.json"),
        &SimulateArtifact {
            config_sha256: &rs.sha256,
            z0,
            m_barrier: rs.m_barrier,
            result,
            pde_value,
            abs_gap: (result.estimate - pde_value).abs(),
        },
    )?;
    if dump_paths {
        write_csv_with(&rs.outdir.join("paths.csv"), |w| {
            writeln!(w, "path_id,outcome,tau,payoff")?;
            for o in &outcomes {
                writeln!(w, "{},{},{},{}", o.path, o.outcome.label(), o.tau, o.payoff)?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SaddleArtifact<'a> {
    config_sha256: &'a str,
    #[serde(flatten)]
    report: &'a SaddleReport,
}

pub fn saddle_cmd(rs: &Resolved, y0: Option<f64>) -> Result<bool> {
    let (sol, _) = solve_dual(&rs.bundle, rs.m_barrier, rs.grid_n, rs.tol)?;
    let y0 = y0.unwrap_or_else(|| 0.5 * (sol.boundary.lower + sol.boundary.upper));
    let report = saddle_test(&rs.bundle, rs.m_barrier, &sol, y0, &rs.sim)?;
    ensure_outdir(&rs.outdir)?;

    write_json(
        &rs.outdir.join("saddle.json"),
        &SaddleArtifact { config_sha256: &rs.sha256, report: &report },
    )?;
    Ok(report.all_pass)
}

#[derive(Serialize)]
struct SweepArtifact<'a> {
    config_sha256: &'a str,
    #[serde(rename = "M0")]
    m_start: f64,
    ladder_tol: f64,
    rungs: &'a [LadderRung],
    final_sup_gap: f64,
}

pub fn sweep_cmd(rs: &Resolved) -> Result<()> {
    let unb = solve_unbounded(&rs.bundle, rs.m_barrier, rs.grid_n, rs.tol, rs.ladder_tol)?;
    let final_gap = unb.ladder.last().map_or(0.0, |r| r.sup_gap);
    ensure_outdir(&rs.outdir)?;

    write_csv_with(&rs.outdir.join("sweep.csv"), |w| {
        writeln!(w, "m,sup_gap")?;
        for rung in &unb.ladder {
            writeln!(w, "{},{}", rung.m_barrier, rung.sup_gap)?;
        }
        Ok(())
    })?;
    write_json(
        &rs.outdir.join("sweep.json"),
        &SweepArtifact {
            config_sha256: &rs.sha256,
            m_start: rs.m_barrier,
            ladder_tol: rs.ladder_tol,
            rungs: &unb.ladder,
            final_sup_gap: final_gap,
        },
    )?;
    Ok(())
}

#[derive(Serialize, serde::Deserialize)]
pub struct BoundaryFile {
    #[allow(dead_code)]
    pub config_sha256: String,
    #[serde(flatten)]
    pub sidecar: BoundarySidecar,
}

pub fn read_boundary_file(path: &std::path::Path) -> Result<BoundaryFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}
