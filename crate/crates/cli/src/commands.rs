//! Subcommand implementations. Each writes its outputs and a manifest.

use std::path::Path;

use serde_json::{json, Map, Value};

use qskyrmion::bipartite::PARTY_A;
use qskyrmion::bipartite::{build_two_photon, nested_fields, nested_report_from_fields};
use qskyrmion::mesh::{
    complete_isometry, default_phase_grid, mesh_unitary, mode_preparation_program, phase_scan,
    scan_to_csv, to_bins,
};
use qskyrmion::multiphoton::{pair_weights, reduced_pair_state, single_photon_varrho};
use qskyrmion::noise::{breakdown_threshold, rows_to_csv, run_sweep, SweepConfig, SweepFamily};
use qskyrmion::qstate::io::{read_qdm, write_qdm};
use qskyrmion::qstate::{max_abs_diff, validate_density, DENSITY_TOL};
use qskyrmion::render::{render_svg, RenderStyle};
use qskyrmion::synth::{build_single_photon_skyrmion, SkyrmionSpec};
use qskyrmion::texture::csv::{read_csv, to_csv_string};
use qskyrmion::texture::{classify_texture, stokes_from_density, ChargeEstimator};

use crate::config::{MeshConfig, MultiphotonConfig, NestedConfig, PhaseScanConfig, StateKind};
use crate::error::{CliError, CliResult};
use crate::manifest::OutputDir;

/// Residual above which a synthesized texture is flagged as not reproducing
/// its designed charge.
pub const SYNTH_RESIDUAL_TOL: f64 = 0.05;

pub fn synth(
    out: &Path,
    spec: SkyrmionSpec,
    estimator: ChargeEstimator,
    seed: u64,
) -> CliResult<()> {
    spec.validate()?;
    let grid = spec.grid()?;
    let rho = build_single_photon_skyrmion(&spec, None)?;
    let check = validate_density(&rho, DENSITY_TOL);
    let mut dir = OutputDir::create(out)?;
    write_qdm(&rho, &dir.path("rho.qdm"))?;
    dir.record("rho.qdm");
    dir.record("rho.bin");
    let field = stokes_from_density(&rho, &grid)?;
    dir.write("texture.csv", to_csv_string(&field))?;
    let report = classify_texture(&field, estimator)?;
    dir.write_json("report.json", &report)?;
    dir.write_json("validation.json", &check)?;
    let flagged = report.q_rounded != -spec.l || report.integer_residual() >= SYNTH_RESIDUAL_TOL;
    let mut notes = Map::new();
    notes.insert("rank".into(), json!(spec.rank()));
    notes.insert("designed_charge_reproduced".into(), json!(!flagged));
    dir.finish(
        "synth",
        json!({ "spec": spec, "estimator": estimator }),
        seed,
        notes,
    )?;
    if !check.passed {
        return Err(CliError::Validation(
            "synthesized matrix is not a valid density matrix".into(),
        ));
    }
    if flagged {
        return Err(CliError::Validation(format!(
            "texture charge {:.6} (rounded {}) does not reproduce the designed charge {}",
            report.q_raw, report.q_rounded, -spec.l
        )));
    }
    Ok(())
}

pub fn nested(out: &Path, cfg: NestedConfig, seed: u64) -> CliResult<()> {
    let (grid, modes) = cfg.modes.resolve(cfg.m, cfg.x_max)?;
    let psi = match cfg.state {
        StateKind::Conjugate => {
            if cfg.phi != 0.0 {
                return Err(qskyrmion::Error::PhaseWithConjugation.into());
            }
            build_two_photon(&modes, true, 0.0, None)?
        }
        StateKind::Bell => build_two_photon(&modes, false, cfg.phi, None)?,
    };
    let fields = nested_fields(&psi.to_density(), &grid)?;
    let report = nested_report_from_fields(&fields, cfg.estimator)?;
    let mut dir = OutputDir::create(out)?;
    dir.write_json("nested_report.json", &report)?;
    if cfg.textures {
        for (label, f) in &fields {
            dir.write(&format!("texture_{label}.csv"), to_csv_string(f))?;
        }
    }
    dir.finish("nested", serde_json::to_value(&cfg)?, seed, Map::new())?;
    Ok(())
}

pub fn sweep(out: &Path, cfg: SweepConfig) -> CliResult<()> {
    cfg.validate()?;
    let rows = run_sweep(&cfg);
    let mut dir = OutputDir::create(out)?;
    dir.write("sweep.csv", rows_to_csv(&rows))?;
    let mut notes = Map::new();
    notes.insert("estimator".into(), json!(cfg.estimator()));
    if cfg.family == SweepFamily::Dephasing {
        let th: Vec<Value> = cfg
            .m
            .iter()
            .map(|&m| json!({ "m": m, "sigma_star": breakdown_threshold(&rows, m) }))
            .collect();
        dir.write_json("thresholds.json", &th)?;
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    notes.insert("failed_rows".into(), json!(failed));
    dir.finish("sweep", serde_json::to_value(&cfg)?, cfg.seed, notes)?;
    if !rows.is_empty() && failed == rows.len() {
        return Err(CliError::Numerical(format!(
            "all sweep points failed; first error: {}",
            rows[0].error.as_deref().unwrap_or("")
        )));
    }
    Ok(())
}

pub fn multiphoton(out: &Path, cfg: MultiphotonConfig, seed: u64) -> CliResult<()> {
    let (grid, modes) = cfg.modes.resolve(cfg.m, cfg.x_max)?;
    let vspec = cfg.varrho_spec();
    let bell = build_two_photon(&modes, false, 0.0, None)?;
    let pair = reduced_pair_state(cfg.n, &bell, &single_photon_varrho(&vspec, PARTY_A)?)?;
    let fields = nested_fields(&pair, &grid)?;
    let report = nested_report_from_fields(&fields, cfg.estimator)?;
    let mut dir = OutputDir::create(out)?;
    dir.write_json("multiphoton_report.json", &report)?;
    if cfg.textures {
        for (label, f) in &fields {
            dir.write(&format!("texture_{label}.csv"), to_csv_string(f))?;
        }
    }
    let mut notes = Map::new();
    notes.insert("pair_weights".into(), json!(pair_weights(cfg.n)?));
    if vspec.kind == qskyrmion::multiphoton::VarrhoKind::EdgeConcentrated {
        notes.insert("edge_bins".into(), json!(vspec.resolved_edge_bins()));
    }
    dir.finish("multiphoton", serde_json::to_value(&cfg)?, seed, notes)?;
    Ok(())
}

pub fn phase_scan_cmd(out: &Path, cfg: PhaseScanConfig, seed: u64) -> CliResult<()> {
    let (grid, modes) = cfg.modes.resolve(cfg.m, cfg.x_max)?;
    let rows = phase_scan(
        &modes,
        &default_phase_grid(cfg.points),
        cfg.subspace,
        &grid,
        cfg.estimator,
    )?;
    let mut dir = OutputDir::create(out)?;
    dir.write("phase_scan.csv", scan_to_csv(&rows))?;
    let mut values: Vec<i64> = rows.iter().map(|r| r.q_rounded).collect();
    values.sort_unstable();
    values.dedup();
    let mut notes = Map::new();
    notes.insert("distinct_Q_rounded".into(), json!(values));
    dir.finish("phase-scan", serde_json::to_value(&cfg)?, seed, notes)?;
    Ok(())
}

pub fn mesh(out: &Path, cfg: MeshConfig, seed: u64) -> CliResult<()> {
    let (_, modes) = cfg.modes.resolve(cfg.m, cfg.x_max)?;
    let program = mode_preparation_program(&modes)?;
    let target = complete_isometry(
        &modes
            .iter()
            .map(|u| to_bins(u.amplitudes()))
            .collect::<Vec<_>>(),
    )?;
    let err = max_abs_diff(&mesh_unitary(&program), &target);
    let mut dir = OutputDir::create(out)?;
    dir.write_json("mesh.json", &program)?;
    let mut notes = Map::new();
    notes.insert("elements".into(), json!(program.elements.len()));
    notes.insert("round_trip_error".into(), json!(err));
    dir.finish("mesh", serde_json::to_value(&cfg)?, seed, notes)?;
    if err > 1e-9 {
        return Err(qskyrmion::Error::NotUnitary(err).into());
    }
    Ok(())
}

pub fn render(
    out: &Path,
    input: &Path,
    style: RenderStyle,
    estimator: ChargeEstimator,
    name: &str,
    seed: u64,
) -> CliResult<()> {
    let field = read_csv(input)?;
    let q = classify_texture(&field, estimator).ok().map(|r| r.q_raw);
    let mut dir = OutputDir::create(out)?;
    dir.write(name, render_svg(&field, q, &style))?;
    let cfg = json!({ "input": input, "style": style, "estimator": estimator });
    dir.finish("render", cfg, seed, Map::new())?;
    Ok(())
}

pub fn validate(out: &Path, input: &Path, tol: f64, seed: u64) -> CliResult<()> {
    let rho = read_qdm(input)?;
    let report = validate_density(&rho, tol);
    let mut dir = OutputDir::create(out)?;
    dir.write_json("validation.json", &report)?;
    dir.finish(
        "validate",
        json!({ "input": input, "tol": tol }),
        seed,
        Map::new(),
    )?;
    if !report.passed {
        return Err(CliError::Validation(format!(
            "{} is not a valid density matrix",
            input.display()
        )));
    }
    Ok(())
}
