//! `qskyrmion` command-line driver.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qskyrmion::mesh::ScanSubspace;
use qskyrmion::multiphoton::VarrhoKind;
use qskyrmion::noise::{DephasingMode, Observable, SweepConfig, SweepFamily};
use qskyrmion::render::RenderStyle;
use qskyrmion::synth::{SkyrmionSpec, SynthMethod};
use qskyrmion::texture::ChargeEstimator;

use config::{
    load, usage, MeshConfig, ModeSource, MultiphotonConfig, NestedConfig, PhaseScanConfig,
    StateKind,
};
use error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "QSKYRMION_OUT";

#[derive(Parser, Debug)]
#[command(
    name = "qskyrmion",
    version,
    about = "Skyrmion textures of partially coherent quantum light"
)]
struct Cli {
    /// JSON configuration of the subcommand; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: $QSKYRMION_OUT or the current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Single-photon skyrmion density matrix, its texture and report.
    Synth(SynthArgs),
    /// Nested textures of a two-photon state.
    Nested(NestedArgs),
    /// Robustness sweep under dephasing, Wishart or depolarizing noise.
    Sweep(SweepArgs),
    /// Pair reduction of the N-photon mixture.
    Multiphoton(MultiphotonArgs),
    /// Charge versus relative input phase through the mesh.
    PhaseScan(PhaseScanArgs),
    /// Mesh program preparing the two engineered modes.
    Mesh(MeshArgs),
    /// SVG image of a texture CSV.
    Render(RenderArgs),
    /// Checks a stored density matrix.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, allow_hyphen_values = true)]
    l: Option<i64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    phi0: Option<f64>,
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long, value_parser = parse_method)]
    method: Option<SynthMethod>,
    #[arg(long, default_value = "solid_angle")]
    estimator: ChargeEstimator,
}

#[derive(Args, Debug)]
struct ModeArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    x_max: Option<f64>,
    /// `eq8`, `eq8:+1` or a mode file.
    #[arg(long)]
    modes: Option<ModeSource>,
}

#[derive(Args, Debug)]
struct NestedArgs {
    #[command(flatten)]
    grid: ModeArgs,
    #[arg(long, value_enum)]
    state: Option<StateKind>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    #[arg(long)]
    estimator: Option<ChargeEstimator>,
    #[arg(long)]
    no_textures: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_parser = parse_family)]
    family: Option<SweepFamily>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    monte_carlo: bool,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_observable)]
    observables: Option<Vec<Observable>>,
    #[arg(long)]
    estimator: Option<ChargeEstimator>,
}

#[derive(Args, Debug)]
struct MultiphotonArgs {
    #[command(flatten)]
    grid: ModeArgs,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, value_parser = parse_varrho)]
    varrho: Option<VarrhoKind>,
    #[arg(long)]
    edge_bins: Option<usize>,
    #[arg(long)]
    estimator: Option<ChargeEstimator>,
    #[arg(long)]
    textures: bool,
}

#[derive(Args, Debug)]
struct PhaseScanArgs {
    #[command(flatten)]
    grid: ModeArgs,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, value_parser = parse_subspace)]
    subspace: Option<ScanSubspace>,
    #[arg(long)]
    estimator: Option<ChargeEstimator>,
}

#[derive(Args, Debug)]
struct MeshArgs {
    #[command(flatten)]
    grid: ModeArgs,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Texture CSV.
    #[arg(long)]
    input: PathBuf,
    /// Image file name inside the output directory.
    #[arg(long, default_value = "texture.svg")]
    name: String,
    #[arg(long)]
    title: Option<String>,
    #[arg(long)]
    size: Option<u32>,
    #[arg(long)]
    no_arrows: bool,
    #[arg(long, default_value = "solid_angle")]
    estimator: ChargeEstimator,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// `.qdm` header file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = qskyrmion::qstate::DENSITY_TOL)]
    tol: f64,
}

fn parse_json_name<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|e| e.to_string())
}
fn parse_method(s: &str) -> Result<SynthMethod, String> {
    parse_json_name(s)
}
fn parse_family(s: &str) -> Result<SweepFamily, String> {
    parse_json_name(s)
}
fn parse_varrho(s: &str) -> Result<VarrhoKind, String> {
    match s {
        "edge" => Ok(VarrhoKind::EdgeConcentrated),
        _ => parse_json_name(s),
    }
}
fn parse_subspace(s: &str) -> Result<ScanSubspace, String> {
    parse_json_name(s)
}
fn parse_observable(s: &str) -> Result<Observable, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

macro_rules! set {
    ($target:expr, $opt:expr) => {
        if let Some(v) = $opt {
            $target = v;
        }
    };
}

fn apply_grid(m: &mut usize, x_max: &mut f64, modes: &mut ModeSource, a: ModeArgs) {
    set!(*m, a.m);
    set!(*x_max, a.x_max);
    set!(*modes, a.modes);
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    let out = cli
        .out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let cfg_path = cli.config.as_deref();
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Synth(a) => {
            let mut spec: SkyrmionSpec =
                load(cfg_path)?.unwrap_or_else(|| SkyrmionSpec::new(1, 64));
            set!(spec.l, a.l);
            set!(spec.m, a.m);
            set!(spec.phi0, a.phi0);
            set!(spec.x_max, a.x_max);
            if a.d.is_some() {
                spec.d = a.d;
            }
            if a.r0.is_some() {
                spec.r0 = a.r0;
            }
            if a.method.is_some() {
                spec.method = a.method;
            }
            commands::synth(&out, spec, a.estimator, seed)
        }
        Command::Nested(a) => {
            let mut c: NestedConfig = load(cfg_path)?.unwrap_or_default();
            apply_grid(&mut c.m, &mut c.x_max, &mut c.modes, a.grid);
            set!(c.state, a.state);
            set!(c.phi, a.phi);
            set!(c.estimator, a.estimator);
            if a.no_textures {
                c.textures = false;
            }
            commands::nested(&out, c, seed)
        }
        Command::Sweep(a) => {
            let mut c: SweepConfig = match load(cfg_path)? {
                Some(c) => c,
                None => {
                    let family = a
                        .family
                        .ok_or_else(|| usage("sweep needs --config or --family"))?;
                    SweepConfig::new(family, vec![])
                }
            };
            set!(c.family, a.family);
            set!(c.m, a.m);
            set!(c.sigma, a.sigma);
            set!(c.k, a.k);
            set!(c.epsilon, a.epsilon);
            set!(c.mu, a.mu);
            set!(c.shots, a.shots);
            set!(c.observables, a.observables);
            set!(c.seed, cli.seed);
            if a.monte_carlo {
                c.mode = DephasingMode::MonteCarlo;
            }
            if a.estimator.is_some() {
                c.estimator = a.estimator;
            }
            commands::sweep(&out, c)
        }
        Command::Multiphoton(a) => {
            let mut c: MultiphotonConfig = load(cfg_path)?.unwrap_or_default();
            apply_grid(&mut c.m, &mut c.x_max, &mut c.modes, a.grid);
            set!(c.n, a.n);
            set!(c.varrho.kind, a.varrho);
            if a.edge_bins.is_some() {
                c.varrho.edge_bins = a.edge_bins;
            }
            set!(c.estimator, a.estimator);
            if a.textures {
                c.textures = true;
            }
            commands::multiphoton(&out, c, seed)
        }
        Command::PhaseScan(a) => {
            let mut c: PhaseScanConfig = load(cfg_path)?.unwrap_or_default();
            apply_grid(&mut c.m, &mut c.x_max, &mut c.modes, a.grid);
            set!(c.points, a.points);
            set!(c.subspace, a.subspace);
            set!(c.estimator, a.estimator);
            commands::phase_scan_cmd(&out, c, seed)
        }
        Command::Mesh(a) => {
            let mut c: MeshConfig = load(cfg_path)?.unwrap_or_default();
            apply_grid(&mut c.m, &mut c.x_max, &mut c.modes, a.grid);
            commands::mesh(&out, c, seed)
        }
        Command::Render(a) => {
            let mut style: RenderStyle = load(cfg_path)?.unwrap_or_default();
            if a.title.is_some() {
                style.title = a.title;
            }
            set!(style.size, a.size);
            if a.no_arrows {
                style.arrows = false;
            }
            commands::render(&out, &a.input, style, a.estimator, &a.name, seed)
        }
        Command::Validate(a) => commands::validate(&out, &a.input, a.tol, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(CliError::exit_code(&e) as u8)
        }
    }
}
