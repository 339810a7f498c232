//! JSON configuration documents of the subcommands.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qskyrmion::mesh::ScanSubspace;
use qskyrmion::multiphoton::{VarrhoKind, VarrhoSpec};
use qskyrmion::qstate::{single_photon_factors, ModeGrid, PureState};
use qskyrmion::synth::{analytic_modes_q1, SINGLE_PARTY};
use qskyrmion::texture::ChargeEstimator;
use qskyrmion::{Error, C64};

use crate::error::{CliError, CliResult};

/// Reads a config file; malformed JSON is a usage error.
pub fn load<T: DeserializeOwned>(path: Option<&Path>) -> CliResult<Option<T>> {
    match path {
        None => Ok(None),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(Some(serde_json::from_str(&text)?))
        }
    }
}

/// Where the two engineered modes come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeSource {
    /// Closed-form pair with target charge sign `sign`.
    #[serde(rename = "eq8")]
    ClosedForm {
        #[serde(default = "neg_one")]
        sign: i32,
    },
    /// JSON file `{m, x_max?, modes: [[[re, im], ...], ...]}` in `(σ, x)` order.
    File { path: PathBuf },
}

fn neg_one() -> i32 {
    -1
}

impl Default for ModeSource {
    fn default() -> Self {
        ModeSource::ClosedForm { sign: -1 }
    }
}

impl std::str::FromStr for ModeSource {
    type Err = String;
    /// `eq8`, `eq8:+1`, `eq8:-1`, or a path to a mode file.
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eq8" | "eq8:-1" => Ok(ModeSource::ClosedForm { sign: -1 }),
            "eq8:+1" | "eq8:1" => Ok(ModeSource::ClosedForm { sign: 1 }),
            _ if s.starts_with("eq8:") => Err(format!("bad mode sign in {s}")),
            _ => Ok(ModeSource::File {
                path: PathBuf::from(s),
            }),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeFile {
    m: usize,
    #[serde(default = "one")]
    x_max: f64,
    modes: Vec<Vec<[f64; 2]>>,
}

fn one() -> f64 {
    1.0
}

impl ModeSource {
    /// Grid and mode list; a mode file must agree with `m` and `x_max`.
    pub fn resolve(&self, m: usize, x_max: f64) -> CliResult<(ModeGrid, Vec<PureState>)> {
        let grid = ModeGrid::new(m, x_max)?;
        match self {
            ModeSource::ClosedForm { sign } => {
                if sign.abs() != 1 {
                    return Err(
                        Error::InvalidSpec(format!("mode sign must be ±1, got {sign}")).into(),
                    );
                }
                let (u1, u2) = analytic_modes_q1(&grid, *sign)?;
                Ok((grid, vec![u1, u2]))
            }
            ModeSource::File { path } => {
                let f: ModeFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                if f.m != m || f.x_max != x_max {
                    return Err(Error::InvalidSpec(format!(
                        "mode file grid (m={}, x_max={}) differs from the requested (m={m}, x_max={x_max})",
                        f.m, f.x_max
                    ))
                    .into());
                }
                let modes = f
                    .modes
                    .iter()
                    .map(|v| {
                        if v.len() != 2 * m {
                            return Err(Error::DimensionMismatch {
                                expected: 2 * m,
                                got: v.len(),
                            }
                            .into());
                        }
                        let amps = nalgebra::DVector::from_iterator(
                            v.len(),
                            v.iter().map(|[r, i]| C64::new(*r, *i)),
                        );
                        Ok(PureState::new(
                            single_photon_factors(SINGLE_PARTY, m),
                            amps,
                        )?)
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok((grid, modes))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// `(|u₁u₁*⟩ + |u₂u₂*⟩)/√2`.
    #[default]
    Conjugate,
    /// `(|u₁u₁⟩ + e^{iφ}|u₂u₂⟩)/√2`.
    Bell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NestedConfig {
    #[serde(default)]
    pub state: StateKind,
    #[serde(default = "m80")]
    pub m: usize,
    #[serde(default = "one")]
    pub x_max: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub modes: ModeSource,
    #[serde(default)]
    pub estimator: ChargeEstimator,
    #[serde(default = "yes")]
    pub textures: bool,
}

fn m80() -> usize {
    80
}
fn m11() -> usize {
    11
}
fn yes() -> bool {
    true
}

impl Default for NestedConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarrhoConfig {
    pub kind: VarrhoKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_bins: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiphotonConfig {
    #[serde(default = "five")]
    pub n: u64,
    #[serde(default = "uniform")]
    pub varrho: VarrhoConfig,
    #[serde(default = "m80")]
    pub m: usize,
    #[serde(default = "one")]
    pub x_max: f64,
    #[serde(default)]
    pub modes: ModeSource,
    #[serde(default = "quadrature")]
    pub estimator: ChargeEstimator,
    #[serde(default)]
    pub textures: bool,
}

fn five() -> u64 {
    5
}
fn uniform() -> VarrhoConfig {
    VarrhoConfig {
        kind: VarrhoKind::Uniform,
        edge_bins: None,
    }
}
fn quadrature() -> ChargeEstimator {
    ChargeEstimator::Quadrature
}

impl Default for MultiphotonConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl MultiphotonConfig {
    pub fn varrho_spec(&self) -> VarrhoSpec {
        VarrhoSpec {
            kind: self.varrho.kind,
            m: self.m,
            edge_bins: self.varrho.edge_bins,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseScanConfig {
    #[serde(default = "m11")]
    pub m: usize,
    #[serde(default = "one")]
    pub x_max: f64,
    #[serde(default)]
    pub modes: ModeSource,
    #[serde(default = "points")]
    pub points: usize,
    #[serde(default = "joint")]
    pub subspace: ScanSubspace,
    #[serde(default)]
    pub estimator: ChargeEstimator,
}

fn points() -> usize {
    qskyrmion::mesh::DEFAULT_SCAN_POINTS
}
fn joint() -> ScanSubspace {
    ScanSubspace::Joint
}

impl Default for PhaseScanConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "m11")]
    pub m: usize,
    #[serde(default = "one")]
    pub x_max: f64,
    #[serde(default)]
    pub modes: ModeSource,
}

impl Default for MeshConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
