use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StokesField;
use crate::Result;

/// Undefined points allowed before gap filling is refused.
pub const MAX_UNDEFINED_FRACTION: f64 = 0.01;
/// Boundary deviation from the south pole above which a report is flagged.
pub const BOUNDARY_FLAG_RAD: f64 = 0.2;

const DEGENERATE_DOT: f64 = -1.0 + 1e-9;
const BAND: f64 = 0.5;
const POLE: f64 = 0.9;
const CLASS_TOL: f64 = PI / 8.0;

/// Discretization of the skyrmion-number integral.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeEstimator {
    /// Signed spherical-triangle solid angles, two triangles per plaquette.
    #[default]
    SolidAngle,
    /// Midpoint quadrature of `s·(∂_x s × ∂_x' s)` with central differences
    /// and one-sided first-order differences on the boundary.
    Quadrature,
}

impl fmt::Display for ChargeEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChargeEstimator::SolidAngle => "solid_angle",
            ChargeEstimator::Quadrature => "quadrature",
        })
    }
}

impl std::str::FromStr for ChargeEstimator {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "solid_angle" | "solid-angle" => Ok(Self::SolidAngle),
            "quadrature" => Ok(Self::Quadrature),
            _ => Err(format!("unknown estimator {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TextureClass {
    Neel,
    AntiNeel,
    Bloch,
    Bubble,
    Undetermined,
}

impl fmt::Display for TextureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for TextureClass {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "Neel" => Self::Neel,
            "AntiNeel" => Self::AntiNeel,
            "Bloch" => Self::Bloch,
            "Bubble" => Self::Bubble,
            "Undetermined" => Self::Undetermined,
            _ => return Err(format!("unknown texture class {s:?}")),
        })
    }
}

impl TextureClass {
    pub fn is_neel_family(self) -> bool {
        matches!(self, TextureClass::Neel | TextureClass::AntiNeel)
    }
}

/// Secondary quantities reported with every charge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub estimator: ChargeEstimator,
    pub integer_residual: f64,
    pub q_solid_angle: f64,
    pub q_quadrature: f64,
    pub undefined_fraction: f64,
    pub boundary_deviation: f64,
    pub boundary_flagged: bool,
    pub degenerate_triangles: usize,
    /// Fraction of grid points with `|s_z| < 0.5`.
    pub equatorial_fraction: f64,
    /// Fraction of grid points with `|s_z| > 0.9`.
    pub polar_fraction: f64,
}

/// Charge, helicity and class of one texture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextureReport {
    #[serde(rename = "Q_raw")]
    pub q_raw: f64,
    #[serde(rename = "Q_rounded")]
    pub q_rounded: i64,
    /// Radians; absent when the equatorial band is empty.
    pub helicity: Option<f64>,
    #[serde(rename = "class")]
    pub texture_class: TextureClass,
    pub diagnostics: Diagnostics,
}

impl TextureReport {
    pub fn integer_residual(&self) -> f64 {
        self.diagnostics.integer_residual
    }

    /// Nonzero rounded charge with residual below `tol`.
    pub fn is_quantized_nontrivial(&self, tol: f64) -> bool {
        self.q_rounded != 0 && self.diagnostics.integer_residual < tol
    }
}

/// Sum with a fixed binary reduction tree, independent of thread count.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Signed solid angle of the spherical triangle `(a, b, c)`.
fn triangle(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> (f64, bool) {
    let (ab, bc, ca) = (dot(a, b), dot(b, c), dot(c, a));
    let num = dot(a, &cross(b, c));
    let den = 1.0 + ab + bc + ca;
    let degenerate = ab < DEGENERATE_DOT || bc < DEGENERATE_DOT || ca < DEGENERATE_DOT;
    (2.0 * num.atan2(den), degenerate)
}

fn solid_angle_charge(s: &[[f64; 3]], m: usize) -> (f64, usize) {
    let rows: Vec<(Vec<f64>, usize)> = (0..m - 1)
        .into_par_iter()
        .map(|i| {
            let mut vals = Vec::with_capacity(m - 1);
            let mut degenerate = 0;
            for j in 0..m - 1 {
                let a = &s[i * m + j];
                let b = &s[(i + 1) * m + j];
                let c = &s[(i + 1) * m + j + 1];
                let d = &s[i * m + j + 1];
                let (o1, d1) = triangle(a, b, c);
                let (o2, d2) = triangle(a, c, d);
                degenerate += d1 as usize + d2 as usize;
                vals.push(o1 + o2);
            }
            (vals, degenerate)
        })
        .collect();
    let degenerate = rows.iter().map(|r| r.1).sum();
    let flat: Vec<f64> = rows.into_iter().flat_map(|r| r.0).collect();
    (pairwise_sum(&flat) / (4.0 * PI), degenerate)
}

fn quadrature_charge(s: &[[f64; 3]], m: usize) -> f64 {
    // Grid spacing cancels between the derivatives and the area element.
    let diff = |lo: &[f64; 3], hi: &[f64; 3], span: f64| -> [f64; 3] {
        [
            (hi[0] - lo[0]) / span,
            (hi[1] - lo[1]) / span,
            (hi[2] - lo[2]) / span,
        ]
    };
    let deriv = |k: usize| -> (usize, usize, f64) {
        if k == 0 {
            (0, 1, 1.0)
        } else if k == m - 1 {
            (m - 2, m - 1, 1.0)
        } else {
            (k - 1, k + 1, 2.0)
        }
    };
    let rows: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .map(|j| {
                    let (i0, i1, si) = deriv(i);
                    let (j0, j1, sj) = deriv(j);
                    let dx = diff(&s[i0 * m + j], &s[i1 * m + j], si);
                    let dy = diff(&s[i * m + j0], &s[i * m + j1], sj);
                    dot(&s[i * m + j], &cross(&dx, &dy))
                })
                .collect()
        })
        .collect();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    pairwise_sum(&flat) / (4.0 * PI)
}

fn boundary_indices(m: usize) -> impl Iterator<Item = usize> {
    (0..m * m).filter(move |k| {
        let (i, j) = (k / m, k % m);
        i == 0 || j == 0 || i == m - 1 || j == m - 1
    })
}

/// Lattice skyrmion number of the gap-filled field.
///
/// Both estimators are evaluated and reported; `estimator` selects `Q_raw`.
/// Helicity and class are left unset (see [`classify_texture`]).
pub fn skyrmion_number(field: &StokesField, estimator: ChargeEstimator) -> Result<TextureReport> {
    let s = field.filled_unit_field()?;
    let m = field.m();
    let (q_sa, degenerate) = solid_angle_charge(&s, m);
    let q_quad = quadrature_charge(&s, m);
    let q_raw = match estimator {
        ChargeEstimator::SolidAngle => q_sa,
        ChargeEstimator::Quadrature => q_quad,
    };
    let q_rounded = q_raw.round() as i64;
    let boundary_deviation = boundary_indices(m)
        .map(|k| (-s[k][2]).clamp(-1.0, 1.0).acos())
        .fold(0.0, f64::max);
    let n = (m * m) as f64;
    let equatorial_fraction = s.iter().filter(|v| v[2].abs() < BAND).count() as f64 / n;
    let polar_fraction = s.iter().filter(|v| v[2].abs() > POLE).count() as f64 / n;
    Ok(TextureReport {
        q_raw,
        q_rounded,
        helicity: None,
        texture_class: TextureClass::Undetermined,
        diagnostics: Diagnostics {
            estimator,
            integer_residual: (q_raw - q_rounded as f64).abs(),
            q_solid_angle: q_sa,
            q_quadrature: q_quad,
            undefined_fraction: field.undefined_fraction(),
            boundary_deviation,
            boundary_flagged: boundary_deviation > BOUNDARY_FLAG_RAD,
            degenerate_triangles: degenerate,
            equatorial_fraction,
            polar_fraction,
        },
    })
}

/// Helicity of the in-plane field relative to the position angle `α = atan2(x, x')`.
///
/// The reference frame winds `w` times around the centre, with
/// `w = −p·Q_rounded` and `p = +1` for a south-pole boundary (`w = 1` when the
/// rounded charge vanishes). Averaged over the band `|s_z| < 0.5`, excluding
/// the centre and points with no in-plane component.
fn helicity(field: &StokesField, s: &[[f64; 3]], q_rounded: i64) -> Option<f64> {
    let m = field.m();
    let x = field.grid.points();
    let boundary: Vec<usize> = boundary_indices(m).collect();
    let mean_sz = boundary.iter().map(|&k| s[k][2]).sum::<f64>() / boundary.len() as f64;
    let p = if mean_sz < 0.0 { 1.0 } else { -1.0 };
    let w = if q_rounded == 0 {
        1.0
    } else {
        -p * q_rounded as f64
    };
    let (mut re, mut im, mut n) = (0.0, 0.0, 0usize);
    for i in 0..m {
        for j in 0..m {
            let v = &s[i * m + j];
            let inplane = v[0].hypot(v[1]);
            if v[2].abs() >= BAND || inplane < 1e-9 || (x[i] == 0.0 && x[j] == 0.0) {
                continue;
            }
            let alpha = x[i].atan2(x[j]);
            let ang = v[1].atan2(v[0]) - w * alpha;
            re += ang.cos();
            im += ang.sin();
            n += 1;
        }
    }
    if n == 0 || re.hypot(im) < 1e-12 {
        None
    } else {
        Some(im.atan2(re))
    }
}

fn classify(q_raw: f64, helicity: Option<f64>, d: &Diagnostics) -> TextureClass {
    if d.equatorial_fraction < 0.05 && d.polar_fraction > 0.8 {
        return TextureClass::Bubble;
    }
    let Some(h) = helicity else {
        return TextureClass::Undetermined;
    };
    if h.abs() < CLASS_TOL {
        if q_raw < 0.0 {
            TextureClass::Neel
        } else if q_raw > 0.0 {
            TextureClass::AntiNeel
        } else {
            TextureClass::Undetermined
        }
    } else if (h.abs() - PI).abs() < CLASS_TOL {
        TextureClass::AntiNeel
    } else if (h.abs() - PI / 2.0).abs() < CLASS_TOL {
        TextureClass::Bloch
    } else {
        TextureClass::Undetermined
    }
}

/// Full report: charge, helicity and texture class.
///
/// The Bubble area rule (equatorial band under 5% of the grid, `|s_z| > 0.9`
/// on over 80%) is applied before the helicity rules.
pub fn classify_texture(field: &StokesField, estimator: ChargeEstimator) -> Result<TextureReport> {
    let mut r = skyrmion_number(field, estimator)?;
    let s = field.filled_unit_field()?;
    r.helicity = helicity(field, &s, r.q_rounded);
    r.texture_class = classify(r.q_raw, r.helicity, &r.diagnostics);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::ModeGrid;

    fn hedgehog(m: usize, helicity: f64, winding: f64) -> StokesField {
        let g = ModeGrid::new(m, 1.0).unwrap();
        let x = g.points().to_vec();
        let mut s = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let r = x[i].hypot(x[j]);
                let th = if r < 1.0 { PI * r } else { PI };
                let ph = winding * x[i].atan2(x[j]) + helicity;
                s.push([th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
            }
        }
        StokesField::from_unit_vectors(g, s).unwrap()
    }

    #[test]
    fn uniform_field_has_zero_charge() {
        let g = ModeGrid::new(16, 1.0).unwrap();
        let f = StokesField::from_unit_vectors(g, vec![[0.0, 0.0, 1.0]; 256]).unwrap();
        let r = classify_texture(&f, ChargeEstimator::SolidAngle).unwrap();
        assert_eq!(r.q_raw, 0.0);
        assert_eq!(r.diagnostics.q_quadrature, 0.0);
        assert_eq!(r.texture_class, TextureClass::Bubble);
        assert!(r.diagnostics.boundary_flagged);
    }

    #[test]
    fn hedgehog_charges_and_classes() {
        let f = hedgehog(64, 0.0, 1.0);
        let r = classify_texture(&f, ChargeEstimator::SolidAngle).unwrap();
        assert!((r.q_raw + 1.0).abs() < 1e-3, "{}", r.q_raw);
        assert_eq!(r.texture_class, TextureClass::Neel);
        let flipped =
            classify_texture(&f.with_sy_negated().unwrap(), ChargeEstimator::SolidAngle).unwrap();
        assert!((flipped.q_raw - 1.0).abs() < 1e-3);

        let b =
            classify_texture(&hedgehog(64, PI / 2.0, 1.0), ChargeEstimator::SolidAngle).unwrap();
        assert_eq!(b.texture_class, TextureClass::Bloch);
        let two = classify_texture(&hedgehog(64, 0.0, 2.0), ChargeEstimator::SolidAngle).unwrap();
        assert_eq!(two.q_rounded, -2);
        assert_eq!(two.texture_class, TextureClass::Neel);
    }

    #[test]
    fn too_many_undefined_points() {
        let g = ModeGrid::new(10, 1.0).unwrap();
        let mut s = vec![[0.0, 0.0, 1.0]; 100];
        s[0] = [0.0; 3];
        s[1] = [0.0; 3];
        let f = StokesField::from_unit_vectors(g, s).unwrap();
        assert!(matches!(
            skyrmion_number(&f, ChargeEstimator::SolidAngle),
            Err(crate::Error::TooManyUndefinedPoints { .. })
        ));
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&v), 499500.0);
    }

    #[test]
    fn antipodal_vertices_are_counted() {
        let g = ModeGrid::new(3, 1.0).unwrap();
        let mut s = vec![[0.0, 0.0, 1.0]; 9];
        s[4] = [0.0, 0.0, -1.0];
        let f = StokesField::from_unit_vectors(g, s).unwrap();
        let r = skyrmion_number(&f, ChargeEstimator::SolidAngle).unwrap();
        assert!(r.diagnostics.degenerate_triangles > 0);
    }
}
