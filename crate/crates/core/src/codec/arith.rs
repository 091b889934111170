//! Binary arithmetic coder with 32-bit code values.
//!
//! Interval-scaling coder in the Witten/Neal/Cleary style: the encoder keeps
//! a [low, high] interval, narrows it by cumulative-frequency ranges, and
//! emits bits as the interval falls into a half or straddles the midpoint.
//! The decoder mirrors the arithmetic exactly, reading zeros past the end of
//! the payload, which the closing bits emitted by `finish` make safe.

const CODE_BITS: u32 = 32;
const TOP: u64 = (1 << CODE_BITS) - 1;
const FIRST_QTR: u64 = TOP / 4 + 1;
const HALF: u64 = 2 * FIRST_QTR;
const THIRD_QTR: u64 = 3 * FIRST_QTR;

/// Largest allowed cumulative total; keeps every interval nonempty.
pub const MAX_TOTAL: u64 = 1 << 24;

#[derive(Default)]
struct BitWriter {
    out: Vec<u8>,
    cur: u8,
    filled: u8,
}

impl BitWriter {
    fn push(&mut self, bit: bool) {
        self.cur = (self.cur << 1) | bit as u8;
        self.filled += 1;
        if self.filled == 8 {
            self.out.push(self.cur);
            self.cur = 0;
            self.filled = 0;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.cur <<= 8 - self.filled;
            self.out.push(self.cur);
        }
        self.out
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    byte: usize,
    bit: u8,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, byte: 0, bit: 0 }
    }

    /// Reads the next bit, returning 0 past the end of the payload.
    fn next(&mut self) -> u64 {
        let v = match self.data.get(self.byte) {
            Some(b) => (b >> (7 - self.bit)) & 1,
            None => 0,
        };
        self.bit += 1;
        if self.bit == 8 {
            self.bit = 0;
            self.byte += 1;
        }
        v as u64
    }
}

pub struct ArithEncoder {
    low: u64,
    high: u64,
    pending: u64,
    bits: BitWriter,
}

impl Default for ArithEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl ArithEncoder {
    pub fn new() -> Self {
        Self { low: 0, high: TOP, pending: 0, bits: BitWriter::default() }
    }

    fn emit(&mut self, bit: bool) {
        self.bits.push(bit);
        while self.pending > 0 {
            self.bits.push(!bit);
            self.pending -= 1;
        }
    }

    /// Narrow the interval to the symbol spanning cumulative [lo, hi) of `total`.
    pub fn encode(&mut self, lo: u32, hi: u32, total: u32) {
        debug_assert!(lo < hi && hi <= total);
        debug_assert!((total as u64) <= MAX_TOTAL);
        let range = self.high - self.low + 1;
        self.high = self.low + range * hi as u64 / total as u64 - 1;
        self.low += range * lo as u64 / total as u64;
        loop {
            if self.high < HALF {
                self.emit(false);
            } else if self.low >= HALF {
                self.emit(true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= FIRST_QTR && self.high < THIRD_QTR {
                self.pending += 1;
                self.low -= FIRST_QTR;
                self.high -= FIRST_QTR;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    /// Flush the final disambiguating bits and return the payload.
    pub fn finish(mut self) -> Vec<u8> {
        self.pending += 1;
        let bit = self.low >= FIRST_QTR;
        self.emit(bit);
        self.bits.finish()
    }
}

pub struct ArithDecoder<'a> {
    low: u64,
    high: u64,
    value: u64,
    bits: BitReader<'a>,
}

impl<'a> ArithDecoder<'a> {
    pub fn new(payload: &'a [u8]) -> Self {
        let mut bits = BitReader::new(payload);
        let mut value = 0;
        for _ in 0..CODE_BITS {
            value = (value << 1) | bits.next();
        }
        Self { low: 0, high: TOP, value, bits }
    }

    /// Cumulative-frequency position of the pending symbol.
    pub fn decode_target(&self, total: u32) -> u32 {
        let range = self.high - self.low + 1;
        (((self.value - self.low + 1) * total as u64 - 1) / range) as u32
    }

    /// Consume the symbol spanning cumulative [lo, hi) of `total`.
    pub fn advance(&mut self, lo: u32, hi: u32, total: u32) {
        let range = self.high - self.low + 1;
        self.high = self.low + range * hi as u64 / total as u64 - 1;
        self.low += range * lo as u64 / total as u64;
        loop {
            if self.high < HALF {
                // nothing
            } else if self.low >= HALF {
                self.value -= HALF;
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= FIRST_QTR && self.high < THIRD_QTR {
                self.value -= FIRST_QTR;
                self.low -= FIRST_QTR;
                self.high -= FIRST_QTR;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | self.bits.next();
        }
    }
}
