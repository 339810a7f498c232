use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform, sign-symmetric coordinate grid `x_k = −x_max + 2·x_max·k/(M−1)`.
///
/// The mirrored half is written as the exact negation of the first half, so
/// `x[M−1−k] == −x[k]` holds bit for bit and odd integrands cancel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDef", into = "GridDef")]
pub struct ModeGrid {
    m: usize,
    x_max: f64,
    points: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GridDef {
    m: usize,
    x_max: f64,
}

impl TryFrom<GridDef> for ModeGrid {
    type Error = Error;
    fn try_from(d: GridDef) -> Result<Self> {
        ModeGrid::new(d.m, d.x_max)
    }
}

impl From<ModeGrid> for GridDef {
    fn from(g: ModeGrid) -> Self {
        GridDef {
            m: g.m,
            x_max: g.x_max,
        }
    }
}

impl ModeGrid {
    pub fn new(m: usize, x_max: f64) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidSpec(format!("grid needs M >= 3, got {m}")));
        }
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "x_max must be positive, got {x_max}"
            )));
        }
        let mut points = vec![0.0; m];
        let step = 2.0 * x_max / (m - 1) as f64;
        for k in 0..m / 2 {
            let x = -x_max + step * k as f64;
            points[k] = x;
            points[m - 1 - k] = -x;
        }
        Ok(Self { m, x_max, points })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn x(&self, k: usize) -> f64 {
        self.points[k]
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.x_max / (self.m - 1) as f64
    }
}
