//! Parameterized layers: convolution, linear, residual blocks, and MLP.
//!
//! Layers own [`ParamId`]s into a shared [`ParamStore`] and build their
//! forward pass on a [`Tape`]. Initialization draws from a caller-provided
//! RNG so whole-model setup is reproducible from one seed.

use ndarray::ArrayD;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::autograd::{ParamId, ParamStore, Tape, Var};

fn he_normal(shape: &[usize], fan_in: usize, rng: &mut ChaCha12Rng) -> ArrayD<f64> {
    let std = (2.0 / fan_in as f64).sqrt();
    let dist = Normal::new(0.0, std).unwrap();
    ArrayD::from_shape_fn(shape, |_| dist.sample(rng))
}

#[derive(Debug, Clone)]
pub struct Conv2d {
    pub w: ParamId,
    pub b: ParamId,
    pub stride: usize,
    pub pad: usize,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn init(
        store: &mut ParamStore,
        name: &str,
        c_in: usize,
        c_out: usize,
        k: usize,
        stride: usize,
        pad: usize,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let w = store.add(
            format!("{name}.w"),
            he_normal(&[c_out, c_in, k, k], c_in * k * k, rng),
        );
        let b = store.add(format!("{name}.b"), ArrayD::zeros(vec![c_out]));
        Self { w, b, stride, pad }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        tape.conv2d(x, self.w, self.b, self.stride, self.pad)
    }
}

/// EDSR-style residual block: `x + conv(relu(conv(x)))`.
#[derive(Debug, Clone)]
pub struct ResBlock {
    pub conv1: Conv2d,
    pub conv2: Conv2d,
}

impl ResBlock {
    pub fn init(store: &mut ParamStore, name: &str, channels: usize, rng: &mut ChaCha12Rng) -> Self {
        Self {
            conv1: Conv2d::init(store, &format!("{name}.conv1"), channels, channels, 3, 1, 1, rng),
            conv2: Conv2d::init(store, &format!("{name}.conv2"), channels, channels, 3, 1, 1, rng),
        }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let h = self.conv1.forward(tape, x);
        let h = tape.relu(h);
        let h = self.conv2.forward(tape, h);
        tape.add(x, h)
    }
}

#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn init(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        output: usize,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let w = store.add(format!("{name}.w"), he_normal(&[input, output], input, rng));
        let b = store.add(format!("{name}.b"), ArrayD::zeros(vec![output]));
        Self { w, b }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let w = tape.param(self.w);
        let b = tape.param(self.b);
        let y = tape.matmul(x, w);
        tape.add_row_vec(y, b)
    }

    pub fn input_width(&self, store: &ParamStore) -> usize {
        store.get(self.w).shape()[0]
    }
}

/// Plain MLP with ReLU between layers and a linear head. An empty hidden
/// list makes it a single linear map.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    pub fn init(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: &[usize],
        output: usize,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = input;
        for (i, &hsize) in hidden.iter().enumerate() {
            layers.push(Linear::init(store, &format!("{name}.fc{i}"), prev, hsize, rng));
            prev = hsize;
        }
        layers.push(Linear::init(
            store,
            &format!("{name}.fc{}", hidden.len()),
            prev,
            output,
            rng,
        ));
        Self { layers }
    }

    pub fn forward(&self, tape: &mut Tape, x: Var) -> Var {
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(tape, h);
            if i + 1 < self.layers.len() {
                h = tape.relu(h);
            }
        }
        h
    }

    pub fn input_width(&self, store: &ParamStore) -> usize {
        self.layers[0].input_width(store)
    }
}
