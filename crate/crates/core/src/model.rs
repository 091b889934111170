//! Learnable components and their composition: dimension-reducing encoders,
//! EDSR feature encoders, global encoders, coordinate decoders, and the
//! self/cross prediction routes.
//!
//! Prediction at target modality `t` from an input in modality `s` composes
//! the (s -> t) reducing encoder, modality-t feature and global encoders,
//! and the modality-t decoder. Self prediction uses the self encoders; the
//! cross encoders are never touched when `s == t`.

use ndarray::{Array2, Array3};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::autograd::{ColPart, ParamStore, Tape, Var};
use crate::error::{CoreError, Result};
use crate::field::{NormStats, WindField};
use crate::layers::{Conv2d, Mlp, ResBlock};
use crate::liif::{
    grid_coordinates, plan_queries, positional_encoding, CoordinateBatch, FeatureGrid,
    GlobalVector, LatentGrid,
};

/// Decoder input makeup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderVariant {
    /// Local features only.
    Liif,
    /// Local features + Fourier positional encoding.
    Pei,
    /// Local features + global latent summary.
    Gei,
    /// Local + global + positional.
    Gpei,
}

impl DecoderVariant {
    pub fn uses_global(&self) -> bool {
        matches!(self, DecoderVariant::Gei | DecoderVariant::Gpei)
    }

    pub fn uses_positional(&self) -> bool {
        matches!(self, DecoderVariant::Pei | DecoderVariant::Gpei)
    }

    pub fn label(&self) -> &'static str {
        match self {
            DecoderVariant::Liif => "liif",
            DecoderVariant::Pei => "pei-liif",
            DecoderVariant::Gei => "gei-liif",
            DecoderVariant::Gpei => "gpei-liif",
        }
    }
}

impl std::str::FromStr for DecoderVariant {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "liif" => Ok(DecoderVariant::Liif),
            "pei" | "pei-liif" => Ok(DecoderVariant::Pei),
            "gei" | "gei-liif" => Ok(DecoderVariant::Gei),
            "gpei" | "gpei-liif" => Ok(DecoderVariant::Gpei),
            other => Err(CoreError::Config(format!("unknown decoder variant `{other}`"))),
        }
    }
}

/// Which of the two altitude modalities a field belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    M1,
    M2,
}

impl Modality {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Modality::M1),
            2 => Ok(Modality::M2),
            other => Err(CoreError::Domain(format!(
                "modality index must be 1 or 2, got {other}"
            ))),
        }
    }

    pub fn index(&self) -> u8 {
        match self {
            Modality::M1 => 1,
            Modality::M2 => 2,
        }
    }
}

/// Architecture hyperparameters shared by every submodel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Spatial reduction factor; must be a power of two.
    pub d: usize,
    /// Latent channel depth.
    pub c_l: usize,
    /// Channel width inside the reducing encoder stages.
    pub enc_width: usize,
    /// Feature-encoder channel depth.
    pub c_f: usize,
    /// Residual blocks in each feature encoder.
    pub edsr_blocks: usize,
    /// Global summary length.
    pub g: usize,
    /// Strided stages in the global encoder.
    pub global_stages: usize,
    /// Decoder MLP hidden widths.
    pub decoder_hidden: Vec<usize>,
    pub variant: DecoderVariant,
    /// Fourier positional frequencies L (output length 4L).
    pub pos_freqs: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 8,
            c_l: 1,
            enc_width: 64,
            c_f: 64,
            edsr_blocks: 8,
            g: 128,
            global_stages: 4,
            decoder_hidden: vec![256, 256, 256, 256],
            variant: DecoderVariant::Gei,
            pos_freqs: 6,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || !self.d.is_power_of_two() {
            return Err(CoreError::Config(format!(
                "reduction factor must be a power of two, got {}",
                self.d
            )));
        }
        if self.c_l == 0 || self.c_f == 0 || self.enc_width == 0 {
            return Err(CoreError::Config("channel widths must be positive".into()));
        }
        if self.variant.uses_global() && self.g == 0 {
            return Err(CoreError::Config("global length g must be positive".into()));
        }
        if self.variant.uses_positional() && self.pos_freqs == 0 {
            return Err(CoreError::Config(
                "positional variants need at least one frequency".into(),
            ));
        }
        Ok(())
    }

    /// Local feature width fed to the decoder: c_f + rel(2) + cell(2).
    pub fn p_local(&self) -> usize {
        self.c_f + 4
    }

    pub fn decoder_input_width(&self) -> usize {
        let mut w = self.p_local();
        if self.variant.uses_global() {
            w += self.g;
        }
        if self.variant.uses_positional() {
            w += 4 * self.pos_freqs;
        }
        w
    }
}

/// HR -> latent reducing encoder: log2(d) strided stages, each a 2x strided
/// convolution followed by two residual blocks, then a 1x1 head to c_l.
#[derive(Debug, Clone)]
pub struct ReduceEncoder {
    stages: Vec<(Conv2d, ResBlock, ResBlock)>,
    head: Conv2d,
    d: usize,
}

impl ReduceEncoder {
    fn init(store: &mut ParamStore, name: &str, cfg: &ModelConfig, rng: &mut ChaCha12Rng) -> Self {
        let n_stages = cfg.d.trailing_zeros() as usize;
        let mut stages = Vec::with_capacity(n_stages);
        let mut c_in = 1;
        for s in 0..n_stages {
            let down = Conv2d::init(
                store,
                &format!("{name}.s{s}.down"),
                c_in,
                cfg.enc_width,
                3,
                2,
                1,
                rng,
            );
            let rb1 = ResBlock::init(store, &format!("{name}.s{s}.rb1"), cfg.enc_width, rng);
            let rb2 = ResBlock::init(store, &format!("{name}.s{s}.rb2"), cfg.enc_width, rng);
            stages.push((down, rb1, rb2));
            c_in = cfg.enc_width;
        }
        let head = Conv2d::init(store, &format!("{name}.head"), c_in, cfg.c_l, 1, 1, 0, rng);
        Self { stages, head, d: cfg.d }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let mut h = x;
        for (down, rb1, rb2) in &self.stages {
            h = down.forward(tape, h);
            h = tape.relu(h);
            h = rb1.forward(tape, h);
            h = rb2.forward(tape, h);
        }
        self.head.forward(tape, h)
    }
}

/// EDSR-style feature encoder: a stem projection followed by residual
/// blocks; spatial dimensions are preserved.
#[derive(Debug, Clone)]
pub struct EdsrEncoder {
    pub stem: Conv2d,
    pub blocks: Vec<ResBlock>,
}

impl EdsrEncoder {
    fn init(store: &mut ParamStore, name: &str, cfg: &ModelConfig, rng: &mut ChaCha12Rng) -> Self {
        let stem = Conv2d::init(store, &format!("{name}.stem"), cfg.c_l, cfg.c_f, 3, 1, 1, rng);
        let blocks = (0..cfg.edsr_blocks)
            .map(|i| ResBlock::init(store, &format!("{name}.rb{i}"), cfg.c_f, rng))
            .collect();
        Self { stem, blocks }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let mut h = self.stem.forward(tape, x);
        for b in &self.blocks {
            h = b.forward(tape, h);
        }
        h
    }
}

/// Strided CNN summarizer ending in a global average pool.
#[derive(Debug, Clone)]
pub struct GlobalEncoder {
    stages: Vec<Conv2d>,
}

impl GlobalEncoder {
    fn init(store: &mut ParamStore, name: &str, cfg: &ModelConfig, rng: &mut ChaCha12Rng) -> Self {
        let mut stages = Vec::with_capacity(cfg.global_stages);
        let mut c_in = cfg.c_l;
        for s in 0..cfg.global_stages {
            // Width doubles toward g.
            let shift = cfg.global_stages - 1 - s;
            let c_out = (cfg.g >> shift).max(4);
            stages.push(Conv2d::init(
                store,
                &format!("{name}.s{s}"),
                c_in,
                c_out,
                3,
                2,
                1,
                rng,
            ));
            c_in = c_out;
        }
        Self { stages }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let mut h = x;
        for (i, conv) in self.stages.iter().enumerate() {
            h = conv.forward(tape, h);
            if i + 1 < self.stages.len() {
                h = tape.relu(h);
            }
        }
        tape.global_mean_pool(h)
    }
}

/// Coordinate decoder MLP for one modality.
#[derive(Debug, Clone)]
pub struct Decoder {
    pub mlp: Mlp,
    pub variant: DecoderVariant,
}

impl Decoder {
    fn init(store: &mut ParamStore, name: &str, cfg: &ModelConfig, rng: &mut ChaCha12Rng) -> Self {
        let mlp = Mlp::init(
            store,
            name,
            cfg.decoder_input_width(),
            &cfg.decoder_hidden,
            1,
            rng,
        );
        Self { mlp, variant: cfg.variant }
    }
}

/// All submodels plus their shared parameter store.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub store: ParamStore,
    pub config: ModelConfig,
    pub e11: ReduceEncoder,
    pub e22: ReduceEncoder,
    pub e12: ReduceEncoder,
    pub e21: ReduceEncoder,
    pub fe1: EdsrEncoder,
    pub fe2: EdsrEncoder,
    pub g1: Option<GlobalEncoder>,
    pub g2: Option<GlobalEncoder>,
    pub d1: Decoder,
    pub d2: Decoder,
    /// Completed optimizer steps; checkpoints carry it forward.
    pub step: u64,
    /// Normalization used at train time, for physical-unit reconstruction.
    pub norm_stats: Option<(NormStats, NormStats)>,
}

/// Encoder selection for a (source, target) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderRole {
    SelfM1,
    SelfM2,
    CrossM1ToM2,
    CrossM2ToM1,
}

impl EncoderRole {
    pub fn is_cross(&self) -> bool {
        matches!(self, EncoderRole::CrossM1ToM2 | EncoderRole::CrossM2ToM1)
    }

    pub fn name(&self) -> &'static str {
        match self {
            EncoderRole::SelfM1 => "e11",
            EncoderRole::SelfM2 => "e22",
            EncoderRole::CrossM1ToM2 => "e12",
            EncoderRole::CrossM2ToM1 => "e21",
        }
    }
}

/// Static routing table from (source, target) to the encoder role.
pub fn encoder_for_route(source: Modality, target: Modality) -> EncoderRole {
    match (source, target) {
        (Modality::M1, Modality::M1) => EncoderRole::SelfM1,
        (Modality::M2, Modality::M2) => EncoderRole::SelfM2,
        (Modality::M1, Modality::M2) => EncoderRole::CrossM1ToM2,
        (Modality::M2, Modality::M1) => EncoderRole::CrossM2ToM1,
    }
}

impl ModelBundle {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let e11 = ReduceEncoder::init(&mut store, "e11", &config, &mut rng);
        let e22 = ReduceEncoder::init(&mut store, "e22", &config, &mut rng);
        let e12 = ReduceEncoder::init(&mut store, "e12", &config, &mut rng);
        let e21 = ReduceEncoder::init(&mut store, "e21", &config, &mut rng);
        let fe1 = EdsrEncoder::init(&mut store, "fe1", &config, &mut rng);
        let fe2 = EdsrEncoder::init(&mut store, "fe2", &config, &mut rng);
        let (g1, g2) = if config.variant.uses_global() {
            (
                Some(GlobalEncoder::init(&mut store, "g1", &config, &mut rng)),
                Some(GlobalEncoder::init(&mut store, "g2", &config, &mut rng)),
            )
        } else {
            (None, None)
        };
        let d1 = Decoder::init(&mut store, "d1", &config, &mut rng);
        let d2 = Decoder::init(&mut store, "d2", &config, &mut rng);
        Ok(Self {
            store,
            config,
            e11,
            e22,
            e12,
            e21,
            fe1,
            fe2,
            g1,
            g2,
            d1,
            d2,
            step: 0,
            norm_stats: None,
        })
    }

    pub fn encoder(&self, role: EncoderRole) -> &ReduceEncoder {
        match role {
            EncoderRole::SelfM1 => &self.e11,
            EncoderRole::SelfM2 => &self.e22,
            EncoderRole::CrossM1ToM2 => &self.e12,
            EncoderRole::CrossM2ToM1 => &self.e21,
        }
    }

    pub fn feature_encoder(&self, target: Modality) -> &EdsrEncoder {
        match target {
            Modality::M1 => &self.fe1,
            Modality::M2 => &self.fe2,
        }
    }

    pub fn global_encoder(&self, target: Modality) -> Option<&GlobalEncoder> {
        match target {
            Modality::M1 => self.g1.as_ref(),
            Modality::M2 => self.g2.as_ref(),
        }
    }

    pub fn decoder(&self, target: Modality) -> &Decoder {
        match target {
            Modality::M1 => &self.d1,
            Modality::M2 => &self.d2,
        }
    }

    fn check_divisible(&self, field: &WindField) -> Result<()> {
        let d = self.config.d;
        if field.height() % d != 0 || field.width() % d != 0 {
            return Err(CoreError::Shape(format!(
                "reduction factor {d} does not divide the {}x{} grid",
                field.height(),
                field.width()
            )));
        }
        Ok(())
    }

    /// Tape forward of the reducing encoder for a route.
    pub fn forward_latent(
        &self,
        tape: &mut Tape,
        role: EncoderRole,
        field: &WindField,
    ) -> Result<Var> {
        self.check_divisible(field)?;
        let (h, w) = field.values.dim();
        let x = field
            .values
            .clone()
            .into_shape_with_order((1, h, w))
            .expect("field is contiguous");
        let xv = tape.constant(x.into_dyn());
        Ok(self.encoder(role).forward(tape, xv))
    }

    /// Decode query coordinates from feature/global tape variables.
    pub fn forward_decode(
        &self,
        tape: &mut Tape,
        target: Modality,
        feat: Var,
        global: Option<Var>,
        batch: &CoordinateBatch,
    ) -> Result<Var> {
        let fdim = tape.value(feat).shape().to_vec();
        let (h, w) = (fdim[1], fdim[2]);
        let plan = plan_queries(h, w, batch)?;
        let n4 = plan.flat_idx.len();

        let rows = tape.channels_to_rows(feat);
        let gathered = tape.gather_rows(rows, Arc::new(plan.flat_idx.clone()));
        let mut parts = vec![
            ColPart::Var(gathered),
            ColPart::Const(plan.rel_scaled.clone()),
            ColPart::Const(plan.cell_scaled.clone()),
        ];
        let variant = self.config.variant;
        match (variant.uses_global(), global) {
            (true, Some(g)) => {
                let bc = tape.broadcast_row(g, n4);
                parts.push(ColPart::Var(bc));
            }
            (true, None) => {
                return Err(CoreError::Shape(format!(
                    "variant {} requires a global vector",
                    variant.label()
                )))
            }
            (false, Some(_)) => {
                return Err(CoreError::Shape(format!(
                    "variant {} does not accept a global vector",
                    variant.label()
                )))
            }
            (false, None) => {}
        }
        if variant.uses_positional() {
            let enc = positional_encoding(batch, self.config.pos_freqs)?;
            // Same encoding for all four candidates of a query.
            let mut rep = Array2::<f64>::zeros((n4, enc.dim().1));
            for q in 0..batch.len() {
                for k in 0..4 {
                    rep.row_mut(4 * q + k).assign(&enc.row(q));
                }
            }
            parts.push(ColPart::Const(rep));
        }
        let inputs = tape.concat_cols(parts);
        let got_width = tape.value(inputs).shape()[1];
        let want_width = self.decoder(target).mlp.input_width(tape.store);
        if got_width != want_width {
            return Err(CoreError::Shape(format!(
                "decoder input width {got_width} does not match expected {want_width}"
            )));
        }
        let preds = self.decoder(target).mlp.forward(tape, inputs);
        Ok(tape.weighted_row_groups(preds, Arc::new(plan.weights)))
    }

    /// Full tape forward: encoder route, feature/global encoders, decoder.
    pub fn forward_predict(
        &self,
        tape: &mut Tape,
        field: &WindField,
        source: Modality,
        target: Modality,
        batch: &CoordinateBatch,
    ) -> Result<(Var, Var)> {
        let role = encoder_for_route(source, target);
        let latent = self.forward_latent(tape, role, field)?;
        let feat = self.feature_encoder(target).forward(tape, latent);
        let global = match self.global_encoder(target) {
            Some(genc) => Some(genc.forward(tape, latent)),
            None => None,
        };
        let out = self.forward_decode(tape, target, feat, global, batch)?;
        Ok((latent, out))
    }

    /// Predicted values at the batch coordinates (pure inference).
    pub fn predict(
        &self,
        field: &WindField,
        source: Modality,
        target: Modality,
        batch: &CoordinateBatch,
    ) -> Result<Vec<f64>> {
        let mut tape = Tape::new(&self.store);
        let (_, out) = self.forward_predict(&mut tape, field, source, target, batch)?;
        Ok(tape.value(out).iter().copied().collect())
    }

    /// Reduce a field to its latent grid along a route.
    pub fn encode_latent(
        &self,
        field: &WindField,
        source: Modality,
        target: Modality,
    ) -> Result<LatentGrid> {
        let role = encoder_for_route(source, target);
        let mut tape = Tape::new(&self.store);
        let latent = self.forward_latent(&mut tape, role, field)?;
        let values = tape
            .value(latent)
            .clone()
            .into_dimensionality::<ndarray::Ix3>()
            .expect("latent is (c,h,w)");
        Ok(LatentGrid {
            values,
            source_modality: source.index(),
            target_modality: target.index(),
            reduction_factor: self.config.d,
        })
    }

    /// Decode a whole target grid from a latent, in coordinate chunks.
    pub fn decode_grid_from_latent(
        &self,
        latent: &LatentGrid,
        target: Modality,
        out_h: usize,
        out_w: usize,
    ) -> Result<Array2<f64>> {
        if out_h == 0 || out_w == 0 {
            return Err(CoreError::Shape("empty output grid".into()));
        }
        // Feature and global encoding happen once per latent.
        let (feat_vals, glob_vals) = {
            let mut tape = Tape::new(&self.store);
            let lv = tape.constant(latent.values.clone().into_dyn());
            let feat = self.feature_encoder(target).forward(&mut tape, lv);
            let glob = self
                .global_encoder(target)
                .map(|genc| genc.forward(&mut tape, lv));
            (
                tape.value(feat).clone(),
                glob.map(|g| tape.value(g).clone()),
            )
        };
        let full = grid_coordinates(out_h, out_w);
        let mut out = Vec::with_capacity(out_h * out_w);
        const CHUNK: usize = 4096;
        for chunk in full.coords.chunks(CHUNK) {
            let batch = CoordinateBatch { coords: chunk.to_vec(), cell: full.cell };
            let mut tape = Tape::new(&self.store);
            let feat = tape.constant(feat_vals.clone());
            let glob = glob_vals.clone().map(|g| tape.constant(g));
            let vals = self.forward_decode(&mut tape, target, feat, glob, &batch)?;
            out.extend(tape.value(vals).iter().copied());
        }
        Array2::from_shape_vec((out_h, out_w), out)
            .map_err(|e| CoreError::Shape(format!("grid assembly failed: {e}")))
    }

    /// Continuous super-resolution to scale `s >= 1`; output dimensions are
    /// `round(s*h) x round(s*w)`. Metadata is copied from the input field;
    /// callers evaluating cross routes re-tag the altitude.
    pub fn predict_grid(
        &self,
        field: &WindField,
        source: Modality,
        target: Modality,
        s: f64,
    ) -> Result<WindField> {
        if !(s >= 1.0) {
            return Err(CoreError::Domain(format!(
                "super-resolution scale must be >= 1, got {s}"
            )));
        }
        let latent = self.encode_latent(field, source, target)?;
        let out_h = (s * field.height() as f64).round() as usize;
        let out_w = (s * field.width() as f64).round() as usize;
        let values = self.decode_grid_from_latent(&latent, target, out_h, out_w)?;
        Ok(WindField {
            values,
            altitude: field.altitude,
            component: field.component,
            timestamp_id: field.timestamp_id,
        })
    }

    /// Feature grid for a latent (inference helper).
    pub fn feature_grid(&self, latent: &LatentGrid, target: Modality) -> FeatureGrid {
        let mut tape = Tape::new(&self.store);
        let lv = tape.constant(latent.values.clone().into_dyn());
        let feat = self.feature_encoder(target).forward(&mut tape, lv);
        FeatureGrid {
            values: tape
                .value(feat)
                .clone()
                .into_dimensionality::<ndarray::Ix3>()
                .unwrap(),
        }
    }

    /// Global summary vector for a latent (inference helper).
    pub fn global_vector(&self, latent: &LatentGrid, target: Modality) -> Result<GlobalVector> {
        let genc = self.global_encoder(target).ok_or_else(|| {
            CoreError::Config(format!(
                "variant {} has no global encoder",
                self.config.variant.label()
            ))
        })?;
        let mut tape = Tape::new(&self.store);
        let lv = tape.constant(latent.values.clone().into_dyn());
        let g = genc.forward(&mut tape, lv);
        Ok(GlobalVector { vector: tape.value(g).iter().copied().collect() })
    }
}

/// Expected latent spatial dims for an input grid under reduction d.
pub fn latent_dims(h: usize, w: usize, d: usize) -> Result<(usize, usize)> {
    if d == 0 || h % d != 0 || w % d != 0 {
        return Err(CoreError::Shape(format!(
            "reduction factor {d} does not divide {h}x{w}"
        )));
    }
    Ok((h / d, w / d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Component;
    use ndarray::Array2 as NdArray2;
    use rand::Rng;

    pub(crate) fn tiny_config() -> ModelConfig {
        ModelConfig {
            d: 4,
            c_l: 2,
            enc_width: 6,
            c_f: 8,
            edsr_blocks: 2,
            g: 8,
            global_stages: 2,
            decoder_hidden: vec![16, 16],
            variant: DecoderVariant::Gei,
            pos_freqs: 2,
        }
    }

    fn random_field(h: usize, w: usize, seed: u64) -> WindField {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        WindField::new(
            NdArray2::from_shape_fn((h, w), |_| rng.random_range(0.0..1.0)),
            10.0,
            Component::Northern,
            0,
        )
        .unwrap()
    }

    #[test]
    fn latent_shapes_match_reduction() {
        let bundle = ModelBundle::new(tiny_config(), 1).unwrap();
        let f = random_field(16, 16, 2);
        let latent = bundle.encode_latent(&f, Modality::M1, Modality::M1).unwrap();
        assert_eq!(latent.values.dim(), (2, 4, 4));
        assert_eq!(latent.reduction_factor, 4);
        // Paper-scale dims check without running the big model: arithmetic only.
        assert_eq!(latent_dims(120, 160, 8).unwrap(), (15, 20));
        assert_eq!(latent_dims(120, 160, 4).unwrap(), (30, 40));
        assert!(latent_dims(120, 161, 8).is_err());
    }

    #[test]
    fn non_divisible_input_is_a_shape_error() {
        let bundle = ModelBundle::new(tiny_config(), 1).unwrap();
        let f = random_field(18, 16, 3);
        assert!(matches!(
            bundle.encode_latent(&f, Modality::M1, Modality::M1),
            Err(CoreError::Shape(_))
        ));
    }

    #[test]
    fn routing_table_is_the_paper_composition() {
        assert_eq!(encoder_for_route(Modality::M1, Modality::M1), EncoderRole::SelfM1);
        assert_eq!(encoder_for_route(Modality::M2, Modality::M2), EncoderRole::SelfM2);
        assert_eq!(encoder_for_route(Modality::M1, Modality::M2), EncoderRole::CrossM1ToM2);
        assert_eq!(encoder_for_route(Modality::M2, Modality::M1), EncoderRole::CrossM2ToM1);
        assert!(!encoder_for_route(Modality::M1, Modality::M1).is_cross());
        assert!(!encoder_for_route(Modality::M2, Modality::M2).is_cross());
        assert!(encoder_for_route(Modality::M1, Modality::M2).is_cross());
        assert!(encoder_for_route(Modality::M2, Modality::M1).is_cross());
    }

    #[test]
    fn predict_is_pure() {
        let bundle = ModelBundle::new(tiny_config(), 4).unwrap();
        let f = random_field(16, 16, 5);
        let batch = CoordinateBatch::new(
            vec![[0.1, -0.4], [-0.9, 0.9], [0.0, 0.0]],
            [0.125, 0.125],
        )
        .unwrap();
        let a = bundle.predict(&f, Modality::M1, Modality::M2, &batch).unwrap();
        let b = bundle.predict(&f, Modality::M1, Modality::M2, &batch).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn predict_grid_dimensions_follow_round() {
        let bundle = ModelBundle::new(tiny_config(), 6).unwrap();
        let f = random_field(16, 16, 7);
        let out = bundle.predict_grid(&f, Modality::M1, Modality::M1, 1.0).unwrap();
        assert_eq!(out.values.dim(), (16, 16));
        let out = bundle.predict_grid(&f, Modality::M1, Modality::M1, 1.5).unwrap();
        assert_eq!(out.values.dim(), (24, 24));
        assert!(bundle.predict_grid(&f, Modality::M1, Modality::M1, 0.9).is_err());
    }

    #[test]
    fn global_encoder_output_is_fixed_length_and_content_sensitive() {
        let bundle = ModelBundle::new(tiny_config(), 8).unwrap();
        let f16 = random_field(16, 16, 9);
        let f32b = random_field(32, 32, 10);
        let l16 = bundle.encode_latent(&f16, Modality::M1, Modality::M1).unwrap();
        let l32 = bundle.encode_latent(&f32b, Modality::M1, Modality::M1).unwrap();
        let g16 = bundle.global_vector(&l16, Modality::M1).unwrap();
        let g32 = bundle.global_vector(&l32, Modality::M1).unwrap();
        assert_eq!(g16.vector.len(), 8);
        assert_eq!(g32.vector.len(), 8);

        // Shuffling spatial content changes the summary (not a pure mean).
        let mut shuffled = l16.clone();
        let (c, h, w) = shuffled.values.dim();
        let mut flat: Vec<f64> = shuffled.values.iter().copied().collect();
        flat.reverse();
        shuffled.values = ndarray::Array3::from_shape_vec((c, h, w), flat).unwrap();
        let gs = bundle.global_vector(&shuffled, Modality::M1).unwrap();
        assert_ne!(g16.vector, gs.vector);
    }

    #[test]
    fn decoder_width_bookkeeping() {
        let cfg = tiny_config();
        // p = c_f + 4 = 12; GEI adds g = 8.
        assert_eq!(cfg.p_local(), 12);
        assert_eq!(cfg.decoder_input_width(), 20);
        let mut gpei = cfg.clone();
        gpei.variant = DecoderVariant::Gpei;
        assert_eq!(gpei.decoder_input_width(), 20 + 8);
        let mut liif = cfg;
        liif.variant = DecoderVariant::Liif;
        assert_eq!(liif.decoder_input_width(), 12);
    }

    #[test]
    fn liif_variant_rejects_global_input() {
        let mut cfg = tiny_config();
        cfg.variant = DecoderVariant::Liif;
        let bundle = ModelBundle::new(cfg, 11).unwrap();
        let f = random_field(16, 16, 12);
        let latent = bundle.encode_latent(&f, Modality::M1, Modality::M1).unwrap();
        let batch = CoordinateBatch::new(vec![[0.0, 0.0]], [0.1, 0.1]).unwrap();
        let mut tape = Tape::new(&bundle.store);
        let lv = tape.constant(latent.values.clone().into_dyn());
        let feat = bundle.fe1.forward(&mut tape, lv);
        let fake_global = tape.constant(ndarray::Array1::zeros(8).into_dyn());
        let err = bundle.forward_decode(&mut tape, Modality::M1, feat, Some(fake_global), &batch);
        assert!(matches!(err, Err(CoreError::Shape(_))));
        // And the GEI bundle rejects a missing global.
        let gei = ModelBundle::new(tiny_config(), 11).unwrap();
        let latent2 = gei.encode_latent(&f, Modality::M1, Modality::M1).unwrap();
        let mut tape2 = Tape::new(&gei.store);
        let lv2 = tape2.constant(latent2.values.into_dyn());
        let feat2 = gei.fe1.forward(&mut tape2, lv2);
        assert!(matches!(
            gei.forward_decode(&mut tape2, Modality::M1, feat2, None, &batch),
            Err(CoreError::Shape(_))
        ));
    }

    #[test]
    fn zeroed_feature_blocks_reduce_to_stem() {
        let mut bundle = ModelBundle::new(tiny_config(), 13).unwrap();
        for b in &bundle.fe1.blocks.clone() {
            bundle.store.get_mut(b.conv1.w).fill(0.0);
            bundle.store.get_mut(b.conv1.b).fill(0.0);
            bundle.store.get_mut(b.conv2.w).fill(0.0);
            bundle.store.get_mut(b.conv2.b).fill(0.0);
        }
        let f = random_field(16, 16, 14);
        let latent = bundle.encode_latent(&f, Modality::M1, Modality::M1).unwrap();
        let mut tape = Tape::new(&bundle.store);
        let lv = tape.constant(latent.values.clone().into_dyn());
        let full = bundle.fe1.forward(&mut tape, lv);
        let stem_only = bundle.fe1.stem.forward(&mut tape, lv);
        assert_eq!(tape.value(full), tape.value(stem_only));
    }

    #[test]
    fn zero_final_layer_decodes_to_bias() {
        let mut bundle = ModelBundle::new(tiny_config(), 15).unwrap();
        let last = bundle.d1.mlp.layers.last().unwrap().clone();
        bundle.store.get_mut(last.w).fill(0.0);
        bundle.store.get_mut(last.b).fill(0.75);
        let f = random_field(16, 16, 16);
        let batch = CoordinateBatch::new(
            vec![[0.3, 0.3], [-0.5, 0.8]],
            [0.125, 0.125],
        )
        .unwrap();
        let out = bundle.predict(&f, Modality::M1, Modality::M1, &batch).unwrap();
        for v in out {
            // Ensemble-weighted sum of identical candidate outputs.
            assert!((v - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn scale_continuity_smoke() {
        let bundle = ModelBundle::new(tiny_config(), 17).unwrap();
        let f = random_field(16, 16, 18);
        let a = bundle.predict_grid(&f, Modality::M1, Modality::M1, 2.0).unwrap();
        let b = bundle
            .predict_grid(&f, Modality::M1, Modality::M1, 2.000001)
            .unwrap();
        assert_eq!(a.values.dim(), b.values.dim());
        let rms = (&a.values - &b.values).mapv(|v| v * v).mean().unwrap().sqrt();
        assert!(rms < 1e-3, "rms {rms}");
    }
}
