use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::{
    dephase, depolarize, mix, rng, wishart_density, DephasingMode, DephasingSpec, WishartSpec,
};
use crate::bipartite::{build_two_photon, two_photon_coefficient_state, PARTY_A, PARTY_B};
use crate::qstate::{partial_trace, DensityMatrix, Factor, ModeGrid};
use crate::synth::analytic_modes_q1;
use crate::texture::{classify_texture, stokes_from_density, ChargeEstimator, TextureReport};
use crate::{Error, Result, C64};

/// Residual above which the nonlocal charge counts as broken down.
pub const BREAKDOWN_RESIDUAL: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFamily {
    Dephasing,
    Wishart,
    Depolarize,
}

impl SweepFamily {
    pub fn name(self) -> &'static str {
        match self {
            SweepFamily::Dephasing => "dephasing",
            SweepFamily::Wishart => "wishart",
            SweepFamily::Depolarize => "depolarize",
        }
    }

    /// Estimator used when the configuration does not name one.
    pub fn default_estimator(self) -> ChargeEstimator {
        match self {
            SweepFamily::Dephasing => ChargeEstimator::Quadrature,
            SweepFamily::Wishart | SweepFamily::Depolarize => ChargeEstimator::SolidAngle,
        }
    }
}

/// Which reduced texture a row reports.
///
/// `local_Q` is `ρ_A`; `nonlocal_Q` and `class` are `ρ(σ_B, x_A)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "local_Q")]
    LocalQ,
    #[serde(rename = "nonlocal_Q")]
    NonlocalQ,
    #[serde(rename = "class")]
    Class,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::LocalQ => "local_Q",
            Observable::NonlocalQ => "nonlocal_Q",
            Observable::Class => "class",
        }
    }
}

/// Parameter grid of a robustness sweep over the two-photon state built
/// from the charge `−1` closed-form modes with conjugated B modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: SweepFamily,
    pub m: Vec<usize>,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    /// Dephasing widths.
    #[serde(default)]
    pub sigma: Vec<f64>,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub mode: DephasingMode,
    #[serde(default = "default_shots")]
    pub shots: usize,
    /// Wishart ranks.
    #[serde(default)]
    pub k: Vec<usize>,
    /// Mixing probabilities (Wishart and depolarizing families).
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<ChargeEstimator>,
    #[serde(default)]
    pub seed: u64,
}

fn default_x_max() -> f64 {
    1.0
}
fn default_shots() -> usize {
    1000
}
fn default_observables() -> Vec<Observable> {
    vec![Observable::LocalQ, Observable::NonlocalQ]
}

impl SweepConfig {
    pub fn new(family: SweepFamily, m: Vec<usize>) -> Self {
        Self {
            family,
            m,
            x_max: 1.0,
            sigma: vec![],
            mu: 0.0,
            mode: DephasingMode::Analytic,
            shots: default_shots(),
            k: vec![],
            epsilon: vec![],
            observables: default_observables(),
            estimator: None,
            seed: 0,
        }
    }

    pub fn estimator(&self) -> ChargeEstimator {
        self.estimator
            .unwrap_or_else(|| self.family.default_estimator())
    }

    fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &m in &self.m {
            match self.family {
                SweepFamily::Dephasing => out.extend(self.sigma.iter().map(|&s| Point {
                    m,
                    sigma: Some(s),
                    k: None,
                    epsilon: None,
                })),
                SweepFamily::Wishart => {
                    for &k in &self.k {
                        out.extend(self.epsilon.iter().map(|&e| Point {
                            m,
                            sigma: None,
                            k: Some(k),
                            epsilon: Some(e),
                        }));
                    }
                }
                SweepFamily::Depolarize => out.extend(self.epsilon.iter().map(|&e| Point {
                    m,
                    sigma: None,
                    k: None,
                    epsilon: Some(e),
                })),
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
struct Point {
    m: usize,
    sigma: Option<f64>,
    k: Option<usize>,
    epsilon: Option<f64>,
}

impl Point {
    /// Canonical stream key; floats use their shortest round-trip form.
    fn key(&self, family: SweepFamily) -> String {
        let mut s = format!("{}|m={}", family.name(), self.m);
        if let Some(v) = self.sigma {
            write!(s, "|sigma={v:?}").unwrap();
        }
        if let Some(v) = self.k {
            write!(s, "|k={v}").unwrap();
        }
        if let Some(v) = self.epsilon {
            write!(s, "|epsilon={v:?}").unwrap();
        }
        s
    }
}

/// One sweep-table row. Failed points carry `error` and no report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: SweepFamily,
    pub m: usize,
    pub sigma: Option<f64>,
    pub k: Option<usize>,
    pub epsilon: Option<f64>,
    pub observable: Observable,
    pub report: Option<TextureReport>,
    /// Stream identifier of the point (first eight bytes of its seed).
    pub seed: u64,
    pub error: Option<String>,
}

fn base_state(m: usize, x_max: f64) -> Result<(ModeGrid, Vec<crate::qstate::PureState>)> {
    let grid = ModeGrid::new(m, x_max)?;
    let (u1, u2) = analytic_modes_q1(&grid, -1)?;
    Ok((grid, vec![u1, u2]))
}

fn keep_for(obs: Observable, m: usize) -> Vec<Factor> {
    match obs {
        Observable::LocalQ => vec![Factor::pseudospin(PARTY_A), Factor::mode(PARTY_A, m)],
        Observable::NonlocalQ | Observable::Class => {
            vec![Factor::pseudospin(PARTY_B), Factor::mode(PARTY_A, m)]
        }
    }
}

fn evaluate(cfg: &SweepConfig, p: &Point, key: &str) -> Result<Vec<TextureReport>> {
    let (grid, modes) = base_state(p.m, cfg.x_max)?;
    let rho: DensityMatrix = match cfg.family {
        SweepFamily::Dephasing => {
            let c = nalgebra::DMatrix::from_element(2, 2, C64::new(0.5, 0.0));
            let base = two_photon_coefficient_state(&modes, true, c)?;
            let spec = DephasingSpec {
                mu: cfg.mu,
                sigma: p.sigma.expect("sigma"),
                mode: cfg.mode,
                shots: cfg.shots,
                seed: rng::stream_id(cfg.seed, key),
            };
            dephase(&base, &spec)?
        }
        SweepFamily::Wishart => {
            let psi = build_two_photon(&modes, true, 0.0, None)?.to_density();
            let w = wishart_density(
                psi.factors().to_vec(),
                &WishartSpec {
                    k: p.k.expect("k"),
                    seed: cfg.seed,
                },
                key,
            )?;
            mix(&psi, &w, p.epsilon.expect("epsilon"))?
        }
        SweepFamily::Depolarize => {
            let psi = build_two_photon(&modes, true, 0.0, None)?.to_density();
            depolarize(&psi, p.epsilon.expect("epsilon"))?
        }
    };
    cfg.observables
        .iter()
        .map(|&obs| {
            let red = partial_trace(&rho, &keep_for(obs, p.m))?;
            classify_texture(&stokes_from_density(&red, &grid)?, cfg.estimator())
        })
        .collect()
}

/// Evaluates every grid point in parallel; rows come back in grid order
/// (M outermost, then σ or K, then ε), one per observable.
pub fn run_sweep(cfg: &SweepConfig) -> Vec<SweepRow> {
    let points = cfg.points();
    let per_point: Vec<Vec<SweepRow>> = points
        .par_iter()
        .map(|p| {
            let key = p.key(cfg.family);
            let seed = rng::stream_id(cfg.seed, &key);
            let row =
                |obs: Observable, report: Option<TextureReport>, error: Option<String>| SweepRow {
                    family: cfg.family,
                    m: p.m,
                    sigma: p.sigma,
                    k: p.k,
                    epsilon: p.epsilon,
                    observable: obs,
                    report,
                    seed,
                    error,
                };
            match evaluate(cfg, p, &key) {
                Ok(reports) => cfg
                    .observables
                    .iter()
                    .zip(reports)
                    .map(|(&o, r)| row(o, Some(r), None))
                    .collect(),
                Err(e) => cfg
                    .observables
                    .iter()
                    .map(|&o| row(o, None, Some(e.to_string())))
                    .collect(),
            }
        })
        .collect();
    per_point.into_iter().flatten().collect()
}

/// Smallest σ at grid size `m` whose nonlocal residual exceeds
/// [`BREAKDOWN_RESIDUAL`].
pub fn breakdown_threshold(rows: &[SweepRow], m: usize) -> Option<f64> {
    rows.iter()
        .filter(|r| r.m == m && r.observable == Observable::NonlocalQ)
        .filter_map(|r| Some((r.sigma?, r.report.as_ref()?)))
        .filter(|(_, rep)| rep.integer_residual() > BREAKDOWN_RESIDUAL)
        .map(|(s, _)| s)
        .min_by(|a, b| a.total_cmp(b))
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV table: `family,m,sigma,k,epsilon,observable,Q_raw,Q_rounded,class,residual,seed,error`.
pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "family,m,sigma,k,epsilon,observable,Q_raw,Q_rounded,class,residual,seed,error\n",
    );
    for r in rows {
        let opt = |v: Option<f64>| v.map(fmt_f).unwrap_or_default();
        let (q, qr, class, res) = match &r.report {
            Some(rep) => (
                fmt_f(rep.q_raw),
                rep.q_rounded.to_string(),
                rep.texture_class.to_string(),
                fmt_f(rep.integer_residual()),
            ),
            None => Default::default(),
        };
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        writeln!(
            out,
            "{},{},{},{},{},{},{q},{qr},{class},{res},{},{err}",
            r.family.name(),
            r.m,
            opt(r.sigma),
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            opt(r.epsilon),
            r.observable.name(),
            r.seed
        )
        .unwrap();
    }
    out
}

impl SweepConfig {
    /// Rejects configurations with parameters outside their domains.
    pub fn validate(&self) -> Result<()> {
        if self.sigma.iter().any(|s| s.is_nan() || *s < 0.0) {
            return Err(Error::InvalidSpec(
                "sigma values must be nonnegative".into(),
            ));
        }
        if self.epsilon.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::InvalidSpec(
                "epsilon values must lie in [0, 1]".into(),
            ));
        }
        if self.mode == DephasingMode::MonteCarlo && self.shots == 0 {
            return Err(Error::InvalidSpec("monte_carlo needs shots >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_gives_empty_table() {
        let cfg = SweepConfig::new(SweepFamily::Dephasing, vec![20]);
        let rows = run_sweep(&cfg);
        assert!(rows.is_empty());
        assert_eq!(rows_to_csv(&rows).lines().count(), 1);
    }

    #[test]
    fn rows_are_deterministic_and_ordered() {
        let mut cfg = SweepConfig::new(SweepFamily::Wishart, vec![6]);
        cfg.k = vec![4, 8];
        cfg.epsilon = vec![0.2, 0.6];
        cfg.seed = 3;
        let a = run_sweep(&cfg);
        let b = run_sweep(&cfg);
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
        assert_eq!((a[0].k, a[0].epsilon), (Some(4), Some(0.2)));
        assert_eq!((a[7].k, a[7].epsilon), (Some(8), Some(0.6)));
        assert_ne!(a[0].seed, a[2].seed);
    }

    #[test]
    fn failures_are_recorded_per_point() {
        let mut cfg = SweepConfig::new(SweepFamily::Wishart, vec![4]);
        cfg.k = vec![1000];
        cfg.epsilon = vec![0.5];
        let rows = run_sweep(&cfg);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.error.is_some() && r.report.is_none()));
        assert!(rows_to_csv(&rows).lines().nth(1).unwrap().contains("rank"));
    }
}
