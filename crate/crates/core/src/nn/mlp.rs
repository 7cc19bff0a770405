use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NnError;
use crate::Real;

/// Hidden-layer widths; the output layer is always a single linear unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub hidden: Vec<usize>,
}

impl Architecture {
    pub fn new(hidden: Vec<usize>) -> Self {
        Self { hidden }
    }

    /// `layers` hidden layers of `width` units.
    pub fn uniform(width: usize, layers: usize) -> Self {
        Self { hidden: vec![width; layers] }
    }
}

/// One dense layer; `weights` is row-major `outputs × inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Layer<T: Real> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

/// Multilayer perceptron: ReLU hidden layers and a linear scalar output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Mlp<T: Real> {
    pub input_dim: usize,
    pub layers: Vec<Layer<T>>,
}

#[inline]
fn relu<T: Real>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

impl<T: Real> Mlp<T> {
    /// All weights and biases zero.
    pub fn zeros(input_dim: usize, arch: &Architecture) -> Self {
        let mut layers = Vec::with_capacity(arch.hidden.len() + 1);
        let mut inputs = input_dim;
        for &outputs in arch.hidden.iter().chain(std::iter::once(&1)) {
            layers.push(Layer { inputs, outputs, weights: vec![T::zero(); inputs * outputs], biases: vec![T::zero(); outputs] });
            inputs = outputs;
        }
        Self { input_dim, layers }
    }

    /// He-style uniform initialization, U(−√(6/fan_in), √(6/fan_in)); zero biases.
    pub fn init(input_dim: usize, arch: &Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::zeros(input_dim, arch);
        for layer in &mut m.layers {
            let limit = (6.0 / layer.inputs.max(1) as f64).sqrt();
            for w in &mut layer.weights {
                *w = T::lit(rng.random_range(-limit..limit));
            }
        }
        m
    }

    pub fn architecture(&self) -> Architecture {
        Architecture { hidden: self.layers[..self.layers.len() - 1].iter().map(|l| l.outputs).collect() }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Weights then biases of each layer, in layer order.
    pub fn params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_params(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.param_count());
        let mut i = 0;
        for l in &mut self.layers {
            let w = l.weights.len();
            l.weights.copy_from_slice(&flat[i..i + w]);
            i += w;
            let b = l.biases.len();
            l.biases.copy_from_slice(&flat[i..i + b]);
            i += b;
        }
    }

    pub(crate) fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut T)) {
        let mut i = 0;
        for l in &mut self.layers {
            for v in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                f(i, v);
                i += 1;
            }
        }
    }

    fn check(&self, x: &[T]) -> Result<(), NnError> {
        if x.len() != self.input_dim {
            return Err(NnError::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        Ok(())
    }

    /// y₀ = ReLU(W₀x + b₀), yᵢ = ReLU(Wᵢyᵢ₋₁ + bᵢ), output = W_n y_{n−1} + b_n.
    pub fn forward(&self, x: &[T]) -> Result<T, NnError> {
        self.check(x)?;
        let mut a = x.to_vec();
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut z = l.biases.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                *zo += crate::scalar::dot(row, &a);
            }
            if li < last {
                z.iter_mut().for_each(|v| *v = relu(*v));
            }
            a = z;
        }
        Ok(a[0])
    }

    pub fn forward_batch(&self, xs: &[Vec<T>]) -> Result<Vec<T>, NnError> {
        xs.iter().map(|x| self.forward(x)).collect()
    }

    /// Loss and its gradient (flat, in [`params`](Self::params) order) over a batch.
    pub fn loss_and_gradient(
        &self,
        xs: &[Vec<T>],
        ys: &[T],
        gammas: &[u32],
        kind: super::LossKind,
    ) -> Result<(T, Vec<T>), NnError> {
        if xs.len() != ys.len() || xs.len() != gammas.len() {
            return Err(NnError::LengthMismatch);
        }
        if xs.is_empty() {
            return Err(NnError::EmptyBatch);
        }
        let n = T::from_count(xs.len());
        let mut grad = vec![T::zero(); self.param_count()];
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.weights.len() + l.biases.len();
        }
        let last = self.layers.len() - 1;
        let mut loss = T::zero();
        let mut acts: Vec<Vec<T>> = Vec::with_capacity(self.layers.len() + 1);
        for ((x, y), g) in xs.iter().zip(ys).zip(gammas) {
            self.check(x)?;
            acts.clear();
            acts.push(x.clone());
            for (li, l) in self.layers.iter().enumerate() {
                let a = acts.last().unwrap();
                let mut z = l.biases.clone();
                for (o, zo) in z.iter_mut().enumerate() {
                    *zo += crate::scalar::dot(&l.weights[o * l.inputs..(o + 1) * l.inputs], a);
                }
                if li < last {
                    z.iter_mut().for_each(|v| *v = relu(*v));
                }
                acts.push(z);
            }
            let w = kind.weight::<T>(*g);
            let err = acts[self.layers.len()][0] - *y;
            loss += w * err * err;
            let mut delta = vec![(w + w) * err / n];
            for li in (0..self.layers.len()).rev() {
                let l = &self.layers[li];
                let a_in = &acts[li];
                let base = offsets[li];
                for (o, d) in delta.iter().enumerate() {
                    if *d == T::zero() {
                        continue;
                    }
                    let row = &mut grad[base + o * l.inputs..base + (o + 1) * l.inputs];
                    for (gw, ai) in row.iter_mut().zip(a_in) {
                        *gw += *d * *ai;
                    }
                    grad[base + l.weights.len() + o] += *d;
                }
                if li == 0 {
                    break;
                }
                let mut next = vec![T::zero(); l.inputs];
                for (o, d) in delta.iter().enumerate() {
                    if *d == T::zero() {
                        continue;
                    }
                    for (ni, wv) in next.iter_mut().zip(&l.weights[o * l.inputs..(o + 1) * l.inputs]) {
                        *ni += *d * *wv;
                    }
                }
                // ReLU derivative from the stored activation (zero where inactive)
                for (ni, ai) in next.iter_mut().zip(&acts[li]) {
                    if !(*ai > T::zero()) {
                        *ni = T::zero();
                    }
                }
                delta = next;
            }
        }
        Ok((loss / n, grad))
    }
}
