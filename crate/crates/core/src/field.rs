//! Gridded wind-field records, modality pairing, normalization, and splits.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Horizontal wind-velocity projection stored in a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Northern,
    Eastern,
}

impl Component {
    pub fn as_str(&self) -> &'static str {
        match self {
            Component::Northern => "northern",
            Component::Eastern => "eastern",
        }
    }
}

impl std::str::FromStr for Component {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "northern" | "n" | "v" => Ok(Component::Northern),
            "eastern" | "e" | "u" => Ok(Component::Eastern),
            other => Err(CoreError::Config(format!("unknown component `{other}`"))),
        }
    }
}

/// A single-channel gridded wind-speed component at one altitude and timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct WindField {
    pub values: Array2<f64>,
    pub altitude: f64,
    pub component: Component,
    pub timestamp_id: u64,
}

impl WindField {
    pub fn new(
        values: Array2<f64>,
        altitude: f64,
        component: Component,
        timestamp_id: u64,
    ) -> Result<Self> {
        let (h, w) = values.dim();
        if h < 2 || w < 2 {
            return Err(CoreError::Shape(format!(
                "wind field must be at least 2x2, got {h}x{w}"
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CoreError::Domain("wind field contains non-finite values".into()));
        }
        if !(altitude > 0.0) {
            return Err(CoreError::Domain(format!(
                "altitude must be positive, got {altitude}"
            )));
        }
        Ok(Self { values, altitude, component, timestamp_id })
    }

    pub fn height(&self) -> usize {
        self.values.dim().0
    }

    pub fn width(&self) -> usize {
        self.values.dim().1
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in self.values.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Same grid with values mapped elementwise.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> WindField {
        WindField {
            values: self.values.mapv(|v| f(v)),
            altitude: self.altitude,
            component: self.component,
            timestamp_id: self.timestamp_id,
        }
    }
}

/// One timestamp's worth of aligned fields, one per altitude.
#[derive(Debug, Clone)]
pub struct FieldStack {
    pub timestamp_id: u64,
    pub fields: Vec<WindField>,
}

impl FieldStack {
    pub fn field_at(&self, altitude: f64) -> Option<&WindField> {
        self.fields.iter().find(|f| f.altitude == altitude)
    }
}

/// An HR field together with its bicubic super-resolution target.
#[derive(Debug, Clone)]
pub struct FieldPair {
    pub hr: WindField,
    pub sr_target: WindField,
    pub scale: f64,
}

/// Per-modality affine normalization parameters (train-split min/max).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub min: f64,
    pub max: f64,
}

impl NormStats {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.min) / self.range()
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.range() + self.min
    }
}

/// Aligned fields at two distinct altitudes over a shared set of timestamps.
#[derive(Debug, Clone)]
pub struct ModalityPairBatch {
    pub fields_m1: Vec<WindField>,
    pub fields_m2: Vec<WindField>,
    pub norm_stats: Option<(NormStats, NormStats)>,
}

impl ModalityPairBatch {
    pub fn new(fields_m1: Vec<WindField>, fields_m2: Vec<WindField>) -> Result<Self> {
        if fields_m1.len() != fields_m2.len() {
            return Err(CoreError::Shape(format!(
                "modality lists differ in length: {} vs {}",
                fields_m1.len(),
                fields_m2.len()
            )));
        }
        for (a, b) in fields_m1.iter().zip(&fields_m2) {
            if a.timestamp_id != b.timestamp_id {
                return Err(CoreError::Shape(format!(
                    "timestamp mismatch: {} vs {}",
                    a.timestamp_id, b.timestamp_id
                )));
            }
            if a.altitude == b.altitude {
                return Err(CoreError::Domain(format!(
                    "modalities must be at distinct altitudes, both at {}",
                    a.altitude
                )));
            }
        }
        Ok(Self { fields_m1, fields_m2, norm_stats: None })
    }

    pub fn len(&self) -> usize {
        self.fields_m1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields_m1.is_empty()
    }

    pub fn altitudes(&self) -> Option<(f64, f64)> {
        Some((
            self.fields_m1.first()?.altitude,
            self.fields_m2.first()?.altitude,
        ))
    }
}

/// Min/max over every field of each modality.
pub fn compute_norm_stats(batch: &ModalityPairBatch) -> Result<(NormStats, NormStats)> {
    let stats_of = |fields: &[WindField]| -> Result<NormStats> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for f in fields {
            let (a, b) = f.min_max();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        if !(hi > lo) {
            return Err(CoreError::DegenerateRange(format!(
                "modality min {lo} equals max {hi}; cannot normalize"
            )));
        }
        Ok(NormStats { min: lo, max: hi })
    };
    Ok((stats_of(&batch.fields_m1)?, stats_of(&batch.fields_m2)?))
}

/// Apply given stats to a batch. Values outside the stats' range map outside
/// [0, 1] and are deliberately not clipped.
pub fn normalize_with(batch: &ModalityPairBatch, stats: (NormStats, NormStats)) -> ModalityPairBatch {
    let apply = |fields: &[WindField], s: NormStats| -> Vec<WindField> {
        fields.iter().map(|f| f.map_values(|v| s.normalize(v))).collect()
    };
    ModalityPairBatch {
        fields_m1: apply(&batch.fields_m1, stats.0),
        fields_m2: apply(&batch.fields_m2, stats.1),
        norm_stats: Some(stats),
    }
}

/// Compute stats on the batch itself and normalize to [0, 1].
pub fn normalize(batch: &ModalityPairBatch) -> Result<ModalityPairBatch> {
    let stats = compute_norm_stats(batch)?;
    Ok(normalize_with(batch, stats))
}

/// Inverse of [`normalize_with`] under the batch's recorded stats.
pub fn denormalize(batch: &ModalityPairBatch) -> Result<ModalityPairBatch> {
    let stats = batch.norm_stats.ok_or_else(|| {
        CoreError::Config("batch carries no norm_stats to denormalize with".into())
    })?;
    let apply = |fields: &[WindField], s: NormStats| -> Vec<WindField> {
        fields.iter().map(|f| f.map_values(|v| s.denormalize(v))).collect()
    };
    Ok(ModalityPairBatch {
        fields_m1: apply(&batch.fields_m1, stats.0),
        fields_m2: apply(&batch.fields_m2, stats.1),
        norm_stats: None,
    })
}

/// Disjoint train/test batches drawn from one pool of timestamps.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: ModalityPairBatch,
    pub test: ModalityPairBatch,
    pub seed: u64,
}

/// Pair two altitudes out of a stack list into a [`ModalityPairBatch`].
pub fn pair_modalities(stacks: &[FieldStack], h1: f64, h2: f64) -> Result<ModalityPairBatch> {
    if h1 == h2 {
        return Err(CoreError::Domain(format!(
            "modalities must be distinct altitudes, got {h1} twice"
        )));
    }
    let mut m1 = Vec::with_capacity(stacks.len());
    let mut m2 = Vec::with_capacity(stacks.len());
    for stack in stacks {
        let f1 = stack.field_at(h1).ok_or_else(|| {
            CoreError::Ingest(format!(
                "stack at timestamp {} has no field at altitude {h1}",
                stack.timestamp_id
            ))
        })?;
        let f2 = stack.field_at(h2).ok_or_else(|| {
            CoreError::Ingest(format!(
                "stack at timestamp {} has no field at altitude {h2}",
                stack.timestamp_id
            ))
        })?;
        m1.push(f1.clone());
        m2.push(f2.clone());
    }
    ModalityPairBatch::new(m1, m2)
}

/// Deterministic, disjoint random split of the stacks' timestamps.
pub fn split(
    stacks: &[FieldStack],
    pair: (f64, f64),
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<DatasetSplit> {
    if n_train + n_test > stacks.len() {
        return Err(CoreError::Size(format!(
            "requested {} + {} instances but only {} available",
            n_train,
            n_test,
            stacks.len()
        )));
    }
    let mut order: Vec<usize> = (0..stacks.len()).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let pick = |idx: &[usize]| -> Vec<FieldStack> {
        idx.iter().map(|&i| stacks[i].clone()).collect()
    };
    let train_stacks = pick(&order[..n_train]);
    let test_stacks = pick(&order[n_train..n_train + n_test]);

    let empty_batch = || ModalityPairBatch {
        fields_m1: Vec::new(),
        fields_m2: Vec::new(),
        norm_stats: None,
    };
    let train = if train_stacks.is_empty() {
        empty_batch()
    } else {
        pair_modalities(&train_stacks, pair.0, pair.1)?
    };
    let test = if test_stacks.is_empty() {
        empty_batch()
    } else {
        pair_modalities(&test_stacks, pair.0, pair.1)?
    };
    Ok(DatasetSplit { train, test, seed })
}
