//! Local implicit image function machinery: normalized coordinates, the
//! four-candidate local ensemble, and Fourier positional encoding.
//!
//! Both grid axes are normalized to [-1, 1] with samples at cell centers:
//! row `i` of an `h`-row grid sits at `-1 + (2i+1)/h`. A query gathers the
//! four surrounding latent cells; each candidate's relative coordinate and
//! the query cell extent are scaled by the feature grid size before they
//! reach the decoder. Ensemble weights are the normalized areas of the
//! rectangles spanned by the query and the diagonally opposite candidate.

use ndarray::{Array2, Array3};

use crate::error::{CoreError, Result};

const COORD_SLACK: f64 = 1e-6;

/// Query coordinates plus the target-pixel extent in normalized units.
#[derive(Debug, Clone)]
pub struct CoordinateBatch {
    pub coords: Vec<[f64; 2]>,
    pub cell: [f64; 2],
}

impl CoordinateBatch {
    pub fn new(coords: Vec<[f64; 2]>, cell: [f64; 2]) -> Result<Self> {
        for &[y, x] in &coords {
            if y.abs() > 1.0 + COORD_SLACK || x.abs() > 1.0 + COORD_SLACK {
                return Err(CoreError::Domain(format!(
                    "coordinate ({y}, {x}) outside [-1, 1]"
                )));
            }
            if !y.is_finite() || !x.is_finite() {
                return Err(CoreError::Domain("non-finite coordinate".into()));
            }
        }
        Ok(Self { coords, cell })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Normalized center coordinate of row/column `i` in a length-`n` axis.
pub fn axis_center(i: usize, n: usize) -> f64 {
    -1.0 + (2.0 * i as f64 + 1.0) / n as f64
}

/// Full-grid coordinate batch in row-major order with matching cell size.
pub fn grid_coordinates(h: usize, w: usize) -> CoordinateBatch {
    let mut coords = Vec::with_capacity(h * w);
    for r in 0..h {
        let y = axis_center(r, h);
        for c in 0..w {
            coords.push([y, axis_center(c, w)]);
        }
    }
    CoordinateBatch { coords, cell: [2.0 / h as f64, 2.0 / w as f64] }
}

/// Gather/scale recipe for one coordinate batch against an (h, w) grid.
///
/// Candidate order per query: (lo,lo), (lo,hi), (hi,lo), (hi,hi) in
/// (row, col) index space; `flat_idx` indexes row-major `h*w` storage.
#[derive(Debug, Clone)]
pub struct QueryPlan {
    pub flat_idx: Vec<usize>,
    /// (4n, 2) relative coordinates scaled by (h, w).
    pub rel_scaled: Array2<f64>,
    /// (4n, 2) query cell extent scaled by (h, w).
    pub cell_scaled: Array2<f64>,
    /// (n, 4) normalized ensemble weights.
    pub weights: Array2<f64>,
}

pub fn plan_queries(h: usize, w: usize, batch: &CoordinateBatch) -> Result<QueryPlan> {
    if h == 0 || w == 0 {
        return Err(CoreError::Shape("cannot query an empty grid".into()));
    }
    let n = batch.len();
    let mut flat_idx = Vec::with_capacity(4 * n);
    let mut rel_scaled = Array2::<f64>::zeros((4 * n, 2));
    let mut cell_scaled = Array2::<f64>::zeros((4 * n, 2));
    let mut weights = Array2::<f64>::zeros((n, 4));

    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    for (q, &[y, x]) in batch.coords.iter().enumerate() {
        // Fractional center index: integer exactly at cell centers.
        let ty = (y + 1.0) * 0.5 * h as f64 - 0.5;
        let tx = (x + 1.0) * 0.5 * w as f64 - 0.5;
        let iy0 = ty.floor() as isize;
        let ix0 = tx.floor() as isize;
        let rows = [clamp(iy0, h), clamp(iy0 + 1, h)];
        let cols = [clamp(ix0, w), clamp(ix0 + 1, w)];

        let mut areas = [0.0f64; 4];
        for (k, (ri, ci)) in [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .copied()
            .enumerate()
        {
            let r = rows[ri];
            let c = cols[ci];
            let rel_y = (y - axis_center(r, h)) * h as f64;
            let rel_x = (x - axis_center(c, w)) * w as f64;
            let row = 4 * q + k;
            flat_idx.push(r * w + c);
            rel_scaled[[row, 0]] = rel_y;
            rel_scaled[[row, 1]] = rel_x;
            cell_scaled[[row, 0]] = batch.cell[0] * h as f64;
            cell_scaled[[row, 1]] = batch.cell[1] * w as f64;
            areas[k] = (rel_y * rel_x).abs() + 1e-9;
        }
        let total: f64 = areas.iter().sum();
        // Diagonally opposite rectangle weights candidate k.
        weights[[q, 0]] = areas[3] / total;
        weights[[q, 1]] = areas[2] / total;
        weights[[q, 2]] = areas[1] / total;
        weights[[q, 3]] = areas[0] / total;
    }
    Ok(QueryPlan { flat_idx, rel_scaled, cell_scaled, weights })
}

/// `[sin(2^j pi y), cos(2^j pi y), sin(2^j pi x), cos(2^j pi x)]` for
/// `j = 0..L-1`; output is (n, 4L).
pub fn positional_encoding(batch: &CoordinateBatch, freqs: usize) -> Result<Array2<f64>> {
    if freqs == 0 {
        return Err(CoreError::Config(
            "positional encoding needs at least one frequency".into(),
        ));
    }
    let n = batch.len();
    let mut out = Array2::<f64>::zeros((n, 4 * freqs));
    for (i, &[y, x]) in batch.coords.iter().enumerate() {
        for j in 0..freqs {
            let f = (1u64 << j) as f64 * std::f64::consts::PI;
            out[[i, 4 * j]] = (f * y).sin();
            out[[i, 4 * j + 1]] = (f * y).cos();
            out[[i, 4 * j + 2]] = (f * x).sin();
            out[[i, 4 * j + 3]] = (f * x).cos();
        }
    }
    Ok(out)
}

/// Low-resolution latent representation; the compressed artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    pub values: Array3<f64>,
    pub source_modality: u8,
    pub target_modality: u8,
    pub reduction_factor: usize,
}

impl LatentGrid {
    pub fn spatial_dims(&self) -> (usize, usize) {
        let (_, h, w) = self.values.dim();
        (h, w)
    }

    pub fn elements(&self) -> usize {
        self.values.len()
    }
}

/// Feature map produced by a feature encoder; spatial dims match the latent.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub values: Array3<f64>,
}

impl FeatureGrid {
    pub fn channels(&self) -> usize {
        self.values.dim().0
    }

    pub fn spatial_dims(&self) -> (usize, usize) {
        let (_, h, w) = self.values.dim();
        (h, w)
    }

    /// Latent cell extent in normalized coordinates.
    pub fn cell_sizes(&self) -> (f64, f64) {
        let (h, w) = self.spatial_dims();
        (2.0 / h as f64, 2.0 / w as f64)
    }
}

/// Whole-grid summary vector from a global encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalVector {
    pub vector: Vec<f64>,
}

/// One candidate's decoder input: latent feature, scaled relative
/// coordinate, and scaled query cell, concatenated.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFeature {
    pub vector: Vec<f64>,
}

/// The four local-ensemble candidates for each query coordinate.
#[derive(Debug, Clone)]
pub struct LiifQuery {
    /// (4n, c_F + 4) candidate feature rows.
    pub candidates: Array2<f64>,
    /// (n, 4) ensemble weights, each row summing to 1.
    pub weights: Array2<f64>,
}

impl LiifQuery {
    /// Candidate rows as owned [`LocalFeature`]s, row-major (4 per query).
    pub fn local_features(&self) -> Vec<LocalFeature> {
        self.candidates
            .rows()
            .into_iter()
            .map(|r| LocalFeature { vector: r.to_vec() })
            .collect()
    }
}

/// Gather the local-ensemble features for every coordinate in the batch.
pub fn liif_query(grid: &FeatureGrid, batch: &CoordinateBatch) -> Result<LiifQuery> {
    let (c_f, h, w) = grid.values.dim();
    let plan = plan_queries(h, w, batch)?;
    let flat = grid
        .values
        .view()
        .into_shape_with_order((c_f, h * w))
        .expect("contiguous feature grid");
    let n4 = plan.flat_idx.len();
    let mut candidates = Array2::<f64>::zeros((n4, c_f + 4));
    for (row, &pos) in plan.flat_idx.iter().enumerate() {
        for ch in 0..c_f {
            candidates[[row, ch]] = flat[[ch, pos]];
        }
        candidates[[row, c_f]] = plan.rel_scaled[[row, 0]];
        candidates[[row, c_f + 1]] = plan.rel_scaled[[row, 1]];
        candidates[[row, c_f + 2]] = plan.cell_scaled[[row, 0]];
        candidates[[row, c_f + 3]] = plan.cell_scaled[[row, 1]];
    }
    Ok(LiifQuery { candidates, weights: plan.weights })
}
