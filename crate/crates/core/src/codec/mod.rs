//! Classical compression stack: mu-law companding, uniform quantization,
//! PPM entropy coding, and the on-disk blob container.

pub mod arith;
pub mod blob;
pub mod field_codec;
pub mod mulaw;
pub mod ppm;
pub mod quant;

pub use blob::{BlobHeader, CompressedBlob};
pub use field_codec::{
    compress_grid_lossless, compress_grid_quantized, decompress_grid, MuLawSpec,
};
pub use mulaw::{mu_law_decode, mu_law_encode};
pub use ppm::{ppm_compress, ppm_decompress, DEFAULT_ORDER};
pub use quant::{dequantize, quantize};
