//! Prediction-by-partial-matching compressor (PPMC variant).
//!
//! Adaptive context model of configurable order driving the arithmetic coder
//! in [`super::arith`]. Escape probability follows method C (escape weight =
//! number of distinct symbols seen in the context), symbols seen in escaped
//! contexts are excluded at lower orders, and count updates use update
//! exclusion: only the contexts consulted for a symbol are incremented.
//!
//! The payload does not embed the symbol count; callers persist it (the blob
//! header stores the field shape).

use std::collections::HashMap;

use crate::codec::arith::{ArithDecoder, ArithEncoder};
use crate::error::{CoreError, Result};

pub const DEFAULT_ORDER: usize = 3;
const MAX_ORDER: usize = 4;
/// Rescale a context when its raw count total reaches this bound.
const RESCALE_LIMIT: u32 = 1 << 13;

#[derive(Default)]
struct Ctx {
    /// (symbol, count) in first-seen order; the order fixes the coding
    /// intervals, so it must never be permuted.
    syms: Vec<(u16, u32)>,
    raw_total: u32,
}

impl Ctx {
    fn bump(&mut self, sym: u16) {
        match self.syms.iter_mut().find(|(s, _)| *s == sym) {
            Some((_, c)) => *c += 1,
            None => self.syms.push((sym, 1)),
        }
        self.raw_total += 1;
        if self.raw_total >= RESCALE_LIMIT {
            self.raw_total = 0;
            for (_, c) in &mut self.syms {
                *c = (*c + 1) / 2;
                self.raw_total += *c;
            }
        }
    }
}

struct Model {
    order: usize,
    alphabet: u32,
    /// contexts[k] holds order-k contexts keyed by the packed last-k symbols.
    contexts: Vec<HashMap<u64, Ctx>>,
    excluded: Vec<bool>,
    dirty: Vec<u16>,
}

/// What a context lookup contributes to the coding step.
enum CtxOutcome {
    /// Context missing or fully excluded; consult the next shorter one.
    Skip,
    /// Symbol coded here.
    Found,
    /// Escape coded here; excluded symbols recorded.
    Escaped,
}

impl Model {
    fn new(alphabet: u32, order: usize) -> Self {
        Self {
            order,
            alphabet,
            contexts: (0..=order).map(|_| HashMap::new()).collect(),
            excluded: vec![false; alphabet as usize],
            dirty: Vec::new(),
        }
    }

    fn key(history: &[u16], k: usize) -> u64 {
        let tail = &history[history.len() - k..];
        let mut key = 0u64;
        for &s in tail {
            key = (key << 16) | s as u64;
        }
        key
    }

    fn clear_exclusions(&mut self) {
        for s in self.dirty.drain(..) {
            self.excluded[s as usize] = false;
        }
    }

    fn exclude(&mut self, sym: u16) {
        if !self.excluded[sym as usize] {
            self.excluded[sym as usize] = true;
            self.dirty.push(sym);
        }
    }

    /// Encode `sym` at context order `k`, or an escape.
    fn encode_at(&mut self, enc: &mut ArithEncoder, history: &[u16], k: usize, sym: u16) -> CtxOutcome {
        let Some(ctx) = self.contexts[k].get(&Self::key(history, k)) else {
            return CtxOutcome::Skip;
        };
        let mut subtotal = 0u32;
        let mut distinct = 0u32;
        let mut sym_span = None;
        for &(s, c) in &ctx.syms {
            if self.excluded[s as usize] {
                continue;
            }
            if s == sym {
                sym_span = Some((subtotal, subtotal + c));
            }
            subtotal += c;
            distinct += 1;
        }
        if distinct == 0 {
            return CtxOutcome::Skip;
        }
        let total = subtotal + distinct;
        if let Some((lo, hi)) = sym_span {
            enc.encode(lo, hi, total);
            CtxOutcome::Found
        } else {
            enc.encode(subtotal, total, total);
            let seen: Vec<u16> = ctx
                .syms
                .iter()
                .filter(|(s, _)| !self.excluded[*s as usize])
                .map(|(s, _)| *s)
                .collect();
            for s in seen {
                self.exclude(s);
            }
            CtxOutcome::Escaped
        }
    }

    /// Decode one symbol at context order `k` if it codes anything.
    fn decode_at(&mut self, dec: &mut ArithDecoder, history: &[u16], k: usize) -> Option<Option<u16>> {
        let ctx = self.contexts[k].get(&Self::key(history, k))?;
        let mut live: Vec<(u16, u32)> = Vec::with_capacity(ctx.syms.len());
        let mut subtotal = 0u32;
        for &(s, c) in &ctx.syms {
            if !self.excluded[s as usize] {
                live.push((s, c));
                subtotal += c;
            }
        }
        if live.is_empty() {
            return None;
        }
        let distinct = live.len() as u32;
        let total = subtotal + distinct;
        let target = dec.decode_target(total);
        if target >= subtotal {
            dec.advance(subtotal, total, total);
            for (s, _) in live {
                self.exclude(s);
            }
            Some(None)
        } else {
            let mut cum = 0u32;
            for (s, c) in live {
                if target < cum + c {
                    dec.advance(cum, cum + c, total);
                    return Some(Some(s));
                }
                cum += c;
            }
            unreachable!("target below subtotal must fall in a symbol span")
        }
    }

    /// Uniform order-(-1) distribution over non-excluded symbols.
    fn base_encode(&self, enc: &mut ArithEncoder, sym: u16) {
        let mut rank = 0u32;
        let mut lo = 0u32;
        for s in 0..self.alphabet as u16 {
            if self.excluded[s as usize] {
                continue;
            }
            if s == sym {
                lo = rank;
            }
            rank += 1;
        }
        enc.encode(lo, lo + 1, rank);
    }

    fn base_decode(&self, dec: &mut ArithDecoder) -> u16 {
        let mut remaining = 0u32;
        for s in 0..self.alphabet as usize {
            if !self.excluded[s] {
                remaining += 1;
            }
        }
        let target = dec.decode_target(remaining);
        let mut rank = 0u32;
        for s in 0..self.alphabet as u16 {
            if self.excluded[s as usize] {
                continue;
            }
            if rank == target {
                dec.advance(rank, rank + 1, remaining);
                return s;
            }
            rank += 1;
        }
        unreachable!("uniform target must land on a symbol")
    }

    /// Update-exclusion: bump `sym` in the contexts from the one that coded
    /// it up to the maximum order, creating them as needed.
    fn update(&mut self, history: &[u16], sym: u16, found_level: usize) {
        let kmax = self.order.min(history.len());
        for k in found_level..=kmax {
            let key = Self::key(history, k);
            self.contexts[k].entry(key).or_default().bump(sym);
        }
    }
}

fn check_inputs(alphabet: u32, order: usize) -> Result<()> {
    if alphabet < 2 || alphabet > 1 << 16 {
        return Err(CoreError::Config(format!(
            "PPM alphabet must be in 2..=65536, got {alphabet}"
        )));
    }
    if order > MAX_ORDER {
        return Err(CoreError::Config(format!(
            "PPM order must be at most {MAX_ORDER}, got {order}"
        )));
    }
    Ok(())
}

/// Compress a symbol stream. The caller must persist `symbols.len()`.
pub fn ppm_compress(symbols: &[u16], alphabet: u32, order: usize) -> Result<Vec<u8>> {
    check_inputs(alphabet, order)?;
    if let Some(&bad) = symbols.iter().find(|&&s| s as u32 >= alphabet) {
        return Err(CoreError::Codec(format!(
            "symbol {bad} outside alphabet of size {alphabet}"
        )));
    }
    if symbols.is_empty() {
        return Ok(Vec::new());
    }
    let mut model = Model::new(alphabet, order);
    let mut enc = ArithEncoder::new();
    for (i, &sym) in symbols.iter().enumerate() {
        let history = &symbols[..i];
        let kmax = order.min(history.len());
        model.clear_exclusions();
        let mut found_level = None;
        for k in (0..=kmax).rev() {
            match model.encode_at(&mut enc, history, k, sym) {
                CtxOutcome::Found => {
                    found_level = Some(k);
                    break;
                }
                CtxOutcome::Escaped | CtxOutcome::Skip => continue,
            }
        }
        if found_level.is_none() {
            model.base_encode(&mut enc, sym);
        }
        model.update(history, sym, found_level.unwrap_or(0));
    }
    Ok(enc.finish())
}

/// Exact inverse of [`ppm_compress`] given the original symbol count.
pub fn ppm_decompress(
    payload: &[u8],
    n_symbols: usize,
    alphabet: u32,
    order: usize,
) -> Result<Vec<u16>> {
    check_inputs(alphabet, order)?;
    if n_symbols == 0 {
        return Ok(Vec::new());
    }
    if payload.is_empty() {
        return Err(CoreError::Codec(
            "empty payload for nonzero symbol count".into(),
        ));
    }
    let mut model = Model::new(alphabet, order);
    let mut dec = ArithDecoder::new(payload);
    let mut out: Vec<u16> = Vec::with_capacity(n_symbols);
    for _ in 0..n_symbols {
        let kmax = order.min(out.len());
        model.clear_exclusions();
        let mut decoded = None;
        let mut found_level = 0;
        for k in (0..=kmax).rev() {
            match model.decode_at(&mut dec, &out, k) {
                None => continue,
                Some(None) => continue,
                Some(Some(s)) => {
                    decoded = Some(s);
                    found_level = k;
                    break;
                }
            }
        }
        let sym = match decoded {
            Some(s) => s,
            None => model.base_decode(&mut dec),
        };
        model.update(&out, sym, if decoded.is_some() { found_level } else { 0 });
        out.push(sym);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn roundtrip(symbols: &[u16], alphabet: u32, order: usize) {
        let payload = ppm_compress(symbols, alphabet, order).unwrap();
        let back = ppm_decompress(&payload, symbols.len(), alphabet, order).unwrap();
        assert_eq!(back, symbols, "alphabet {alphabet} order {order}");
    }

    #[test]
    fn empty_roundtrip() {
        roundtrip(&[], 16, 3);
        assert!(ppm_compress(&[], 16, 3).unwrap().is_empty());
    }

    #[test]
    fn single_symbol() {
        roundtrip(&[5], 16, 3);
    }

    #[test]
    fn random_streams_roundtrip() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1234);
        for _ in 0..30 {
            let alphabet = rng.random_range(2..=256u32);
            let n = rng.random_range(0..3000usize);
            let syms: Vec<u16> =
                (0..n).map(|_| rng.random_range(0..alphabet) as u16).collect();
            roundtrip(&syms, alphabet, 3);
        }
    }

    #[test]
    fn repetitive_stream_compresses_hard() {
        let syms = vec![7u16; 19200];
        let payload = ppm_compress(&syms, 16, 3).unwrap();
        // Under 1% of a byte-per-symbol baseline.
        assert!(
            payload.len() * 100 < 19200,
            "payload {} bytes for 19200 constant symbols",
            payload.len()
        );
        let back = ppm_decompress(&payload, syms.len(), 16, 3).unwrap();
        assert_eq!(back, syms);
    }

    #[test]
    fn structured_stream_beats_uniform_entropy() {
        // A periodic pattern should cost far less than log2(alphabet) per symbol.
        let pattern: Vec<u16> = (0..6000).map(|i| ((i * i + i / 7) % 11) as u16).collect();
        let payload = ppm_compress(&pattern, 64, 3).unwrap();
        assert!(payload.len() < 6000 * 6 / 8);
        roundtrip(&pattern, 64, 3);
    }

    #[test]
    fn adversarial_alphabet_edges() {
        roundtrip(&[0, 1, 0, 1, 1, 0], 2, 3);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(2);
        let syms: Vec<u16> = (0..5000).map(|_| rng.random_range(0..2) as u16).collect();
        roundtrip(&syms, 2, 4);
        let syms: Vec<u16> = (0..2000).map(|_| rng.random_range(0..256) as u16).collect();
        roundtrip(&syms, 256, 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ppm_compress(&[1], 1, 3).is_err());
        assert!(ppm_compress(&[9], 8, 3).is_err());
        assert!(ppm_compress(&[1], 8, 9).is_err());
        assert!(ppm_decompress(&[], 5, 8, 3).is_err());
    }

    #[test]
    fn long_stream_with_rescale() {
        // Enough repetitions of a small alphabet to trigger count rescaling.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let syms: Vec<u16> = (0..40_000)
            .map(|_| if rng.random_range(0..100) < 95 { 3u16 } else { rng.random_range(0..8) as u16 })
            .collect();
        roundtrip(&syms, 8, 3);
    }
}
