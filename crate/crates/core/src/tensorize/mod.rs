//! Turning a window's channel × band energy matrix into classifier input:
//! either the flattened matrix itself, or a per-band scalp image obtained
//! by scattered-data interpolation from the electrode pixels.
//!
//! Every interpolation method here is linear in the electrode values, so
//! each is compiled once per layout into an [`InterpolationPlan`] (a sparse
//! pixel × electrode weight table) and then applied to every window.

pub mod delaunay;
pub mod spline;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dsp::BandEnergyMatrix;
use crate::error::{CoreError, Result};
use crate::layout::ElectrodeLayout;
use crate::recording::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpMethod {
    /// Inverse distance weighting; border pixels copy the nearest electrode.
    IdwNn,
    /// Inverse distance weighting; border pixels are zero.
    IdwZero,
    /// Value of the nearest electrode everywhere.
    Nearest,
    /// Barycentric-linear over a Delaunay triangulation of the electrodes,
    /// nearest electrode outside the convex hull.
    LinearBarycentric,
    /// Thin-plate spline through all electrodes, clamped at zero.
    CubicSpline,
}

impl InterpMethod {
    pub const ALL: [InterpMethod; 5] = [
        InterpMethod::IdwNn,
        InterpMethod::IdwZero,
        InterpMethod::Nearest,
        InterpMethod::LinearBarycentric,
        InterpMethod::CubicSpline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InterpMethod::IdwNn => "idw-nn",
            InterpMethod::IdwZero => "idw-zero",
            InterpMethod::Nearest => "nearest",
            InterpMethod::LinearBarycentric => "linear-barycentric",
            InterpMethod::CubicSpline => "cubic-spline",
        }
    }

    /// What the method actually computes, for report tables.
    pub fn description(self) -> &'static str {
        match self {
            InterpMethod::IdwNn => "inverse distance weighting, nearest-value border",
            InterpMethod::IdwZero => "inverse distance weighting, zero border",
            InterpMethod::Nearest => "nearest electrode",
            InterpMethod::LinearBarycentric => "barycentric-linear on a Delaunay triangulation",
            InterpMethod::CubicSpline => "thin-plate spline, clamped at zero",
        }
    }
}

impl fmt::Display for InterpMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InterpMethod {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        InterpMethod::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| CoreError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorderFill {
    Nearest,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdwParams {
    pub d_max: f64,
    pub border_fill: BorderFill,
}

/// Row-major `(channel, band)` flattening of an energy matrix.
pub fn concat_sample(matrix: &BandEnergyMatrix) -> Vec<f64> {
    matrix.values.clone()
}

/// Electrode energies pinned to their pixels, per band.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseScalpField {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<(usize, usize)>,
    /// Row-major `(electrode, band)`.
    pub values: Vec<f64>,
    pub bands: usize,
    pub subject_id: u32,
    pub label: Label,
    pub window: usize,
}

impl SparseScalpField {
    /// `(row, col, energy)` for every electrode in one band.
    pub fn band(&self, band: usize) -> Vec<(usize, usize, f64)> {
        self.pixels
            .iter()
            .enumerate()
            .map(|(i, &(r, c))| (r, c, self.values[i * self.bands + band]))
            .collect()
    }
}

pub fn rasterize(matrix: &BandEnergyMatrix, layout: &ElectrodeLayout) -> Result<SparseScalpField> {
    if matrix.channels != layout.len() {
        return Err(CoreError::InvalidConfig(format!(
            "energy matrix has {} channels but the layout has {} electrodes",
            matrix.channels,
            layout.len()
        )));
    }
    Ok(SparseScalpField {
        height: layout.grid_height(),
        width: layout.grid_width(),
        pixels: layout.pixels(),
        values: matrix.values.clone(),
        bands: matrix.bands,
        subject_id: matrix.subject_id,
        label: matrix.label,
        window: matrix.window,
    })
}

/// Interpolated scalp image, `(row, col, band)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub tensor: Vec<f64>,
    /// Pixel values raised to zero after a negative spline overshoot.
    pub clamped: usize,
    pub subject_id: u32,
    pub label: Label,
    pub window: usize,
}

impl GridSample {
    pub fn get(&self, row: usize, col: usize, band: usize) -> f64 {
        self.tensor[(row * self.width + col) * self.bands + band]
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PixelRule {
    terms: Vec<(usize, f64)>,
    denom: f64,
    clamp: bool,
}

impl PixelRule {
    fn copy(i: usize) -> Self {
        Self {
            terms: vec![(i, 1.0)],
            denom: 1.0,
            clamp: false,
        }
    }

    fn zero() -> Self {
        Self {
            terms: Vec::new(),
            denom: 1.0,
            clamp: false,
        }
    }
}

/// Per-pixel linear rule mapping electrode values to a raster.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationPlan {
    method: InterpMethod,
    d_max: f64,
    height: usize,
    width: usize,
    points: usize,
    rules: Vec<PixelRule>,
}

impl InterpolationPlan {
    pub fn new(
        pixels: &[(usize, usize)],
        height: usize,
        width: usize,
        method: InterpMethod,
        d_max: f64,
    ) -> Result<Self> {
        if !(d_max > 0.0 && d_max.is_finite()) {
            return Err(CoreError::InvalidConfig(format!("d_max must be positive, got {d_max}")));
        }
        if pixels.is_empty() {
            return Err(CoreError::InvalidConfig("no electrode pixels".into()));
        }
        let mut knot_at = vec![None; height * width];
        for (i, &(r, c)) in pixels.iter().enumerate() {
            if r >= height || c >= width {
                return Err(CoreError::InvalidConfig(format!("pixel ({r}, {c}) outside the grid")));
            }
            knot_at[r * width + c].get_or_insert(i);
        }
        let targets: Vec<(usize, usize)> = (0..height)
            .flat_map(|r| (0..width).map(move |c| (r, c)))
            .collect();

        let mut rules: Vec<PixelRule> = match method {
            InterpMethod::IdwNn | InterpMethod::IdwZero => {
                let fill = if method == InterpMethod::IdwNn {
                    BorderFill::Nearest
                } else {
                    BorderFill::Zero
                };
                targets
                    .iter()
                    .map(|&t| idw_rule(pixels, t, IdwParams { d_max, border_fill: fill }))
                    .collect()
            }
            InterpMethod::Nearest => targets
                .iter()
                .map(|&t| PixelRule::copy(nearest(pixels, t)))
                .collect(),
            InterpMethod::LinearBarycentric => {
                let pts: Vec<delaunay::Point> =
                    pixels.iter().map(|&(r, c)| (r as i64, c as i64)).collect();
                let triangles = delaunay::delaunay(&pts);
                targets
                    .iter()
                    .map(|&(r, c)| {
                        let p = (r as i64, c as i64);
                        triangles
                            .iter()
                            .find_map(|t| {
                                delaunay::barycentric(pts[t[0]], pts[t[1]], pts[t[2]], p).map(|w| {
                                    PixelRule {
                                        terms: t.iter().copied().zip(w).filter(|(_, w)| *w != 0.0).collect(),
                                        denom: 1.0,
                                        clamp: false,
                                    }
                                })
                            })
                            .unwrap_or_else(|| PixelRule::copy(nearest(pixels, (r, c))))
                    })
                    .collect()
            }
            InterpMethod::CubicSpline => {
                let knots: Vec<(f64, f64)> =
                    pixels.iter().map(|&(r, c)| (r as f64, c as f64)).collect();
                let at: Vec<(f64, f64)> = targets.iter().map(|&(r, c)| (r as f64, c as f64)).collect();
                spline::thin_plate_weights(&knots, &at)?
                    .into_iter()
                    .map(|w| PixelRule {
                        terms: w.into_iter().enumerate().collect(),
                        denom: 1.0,
                        clamp: true,
                    })
                    .collect()
            }
        };
        for (rule, knot) in rules.iter_mut().zip(&knot_at) {
            if let Some(i) = *knot {
                *rule = PixelRule::copy(i);
            }
        }
        Ok(Self {
            method,
            d_max,
            height,
            width,
            points: pixels.len(),
            rules,
        })
    }

    pub fn for_layout(layout: &ElectrodeLayout, method: InterpMethod, d_max: f64) -> Result<Self> {
        Self::new(&layout.pixels(), layout.grid_height(), layout.grid_width(), method, d_max)
    }

    pub fn method(&self) -> InterpMethod {
        self.method
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Interpolates `values` (row-major `(electrode, band)`) onto the grid;
    /// returns the `(row, col, band)` tensor and the number of clamped
    /// pixel values.
    pub fn apply(&self, values: &[f64], bands: usize) -> (Vec<f64>, usize) {
        assert_eq!(values.len(), self.points * bands, "value count does not match plan");
        let mut out = vec![0.0; self.rules.len() * bands];
        let mut clamped = 0;
        for (p, rule) in self.rules.iter().enumerate() {
            for b in 0..bands {
                let mut v = 0.0;
                for &(i, w) in &rule.terms {
                    v += w * values[i * bands + b];
                }
                v /= rule.denom;
                if rule.clamp && v < 0.0 {
                    v = 0.0;
                    clamped += 1;
                }
                out[p * bands + b] = v;
            }
        }
        (out, clamped)
    }

    pub fn grid(&self, matrix: &BandEnergyMatrix) -> GridSample {
        let (tensor, clamped) = self.apply(&matrix.values, matrix.bands);
        GridSample {
            height: self.height,
            width: self.width,
            bands: matrix.bands,
            tensor,
            clamped,
            subject_id: matrix.subject_id,
            label: matrix.label,
            window: matrix.window,
        }
    }

    pub fn field(&self, field: &SparseScalpField) -> GridSample {
        let (tensor, clamped) = self.apply(&field.values, field.bands);
        GridSample {
            height: self.height,
            width: self.width,
            bands: field.bands,
            tensor,
            clamped,
            subject_id: field.subject_id,
            label: field.label,
            window: field.window,
        }
    }
}

/// Index of the electrode closest to `target`; ties go to the lower index.
pub fn nearest(pixels: &[(usize, usize)], target: (usize, usize)) -> usize {
    let mut best = (u64::MAX, 0);
    for (i, &p) in pixels.iter().enumerate() {
        let d = dist2(p, target);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

fn dist2(a: (usize, usize), b: (usize, usize)) -> u64 {
    let dr = a.0 as i64 - b.0 as i64;
    let dc = a.1 as i64 - b.1 as i64;
    (dr * dr + dc * dc) as u64
}

fn idw_rule(pixels: &[(usize, usize)], target: (usize, usize), params: IdwParams) -> PixelRule {
    let mut terms = Vec::new();
    let mut denom = 0.0;
    for (i, &p) in pixels.iter().enumerate() {
        let d = (dist2(p, target) as f64).sqrt();
        if d == 0.0 {
            return PixelRule::copy(i);
        }
        if d < params.d_max {
            let w = 1.0 / d;
            terms.push((i, w));
            denom += w;
        }
    }
    if !terms.is_empty() {
        return PixelRule {
            terms,
            denom,
            clamp: false,
        };
    }
    match params.border_fill {
        BorderFill::Nearest => PixelRule::copy(nearest(pixels, target)),
        BorderFill::Zero => PixelRule::zero(),
    }
}

/// True when no electrode lies within `d_max` of the pixel.
pub fn is_border_pixel(pixels: &[(usize, usize)], target: (usize, usize), d_max: f64) -> bool {
    pixels
        .iter()
        .all(|&p| (dist2(p, target) as f64).sqrt() >= d_max)
}

pub fn interpolate_idw(field: &SparseScalpField, params: IdwParams) -> Result<GridSample> {
    let method = match params.border_fill {
        BorderFill::Nearest => InterpMethod::IdwNn,
        BorderFill::Zero => InterpMethod::IdwZero,
    };
    Ok(InterpolationPlan::new(&field.pixels, field.height, field.width, method, params.d_max)?.field(field))
}

pub fn interpolate(field: &SparseScalpField, method: InterpMethod, d_max: f64) -> Result<GridSample> {
    Ok(InterpolationPlan::new(&field.pixels, field.height, field.width, method, d_max)?.field(field))
}
