//! Two-layer ReLU network N(x) = c1 ReLU(W1 x) + c2 ReLU(W2 x). Small as
//! it is, this class can represent A^{-1} exactly (split into positive
//! and negative parts through the two branches), which is what makes it a
//! useful subject for the expressivity and generalization experiments.
//! The constraint set clips |c_j| and keeps the spectral norms of the W_j
//! at or below one.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::dense::DenseMatrix;
use crate::la;

use super::{DifferentiableNet, NeuralOperator, ParamSet};

#[derive(Clone)]
pub struct TwoLayerParams {
    n: usize,
    pub c: [f64; 2],
    pub w: [DenseMatrix; 2],
    /// C_n bound for the constrained class; None trains unconstrained.
    pub constraint: Option<f64>,
}

pub struct TwoLayerCache {
    /// Pre-activation W_j y for both branches.
    pub(crate) pre: [Vec<f64>; 2],
}

impl TwoLayerParams {
    pub fn new(n: usize, c: [f64; 2], w: [DenseMatrix; 2], constraint: Option<f64>) -> Self {
        assert_eq!(w[0].rows(), n);
        assert_eq!(w[0].cols(), n);
        assert_eq!(w[1].rows(), n);
        assert_eq!(w[1].cols(), n);
        TwoLayerParams { n, c, w, constraint }
    }

    /// Random orthogonal W_j (spectral norm 1) and small head scalars.
    pub fn init(n: usize, constraint: Option<f64>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut orth = || {
            let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let qr = g.qr();
            let q = qr.q();
            DenseMatrix::from_fn(n, n, |i, j| q[(i, j)])
        };
        let w = [orth(), orth()];
        TwoLayerParams {
            n,
            c: [0.5, -0.5],
            w,
            constraint,
        }
    }

    /// Antisymmetric pair init: W_1 = -W_0 with heads (1/2, -1/2), so
    /// the net starts as the exact linear map y -> W_0 y / 2. Every
    /// output component sees exactly one open gate per input, which
    /// removes the dead-unit floor of two independent random layers;
    /// the study code uses this where trajectories must track the
    /// linear theory from step zero.
    pub fn init_linear(n: usize, seed: u64) -> Self {
        let mut net = Self::init(n, None, seed);
        let flipped = DenseMatrix::from_fn(n, n, |i, j| -net.w[0][(i, j)]);
        net.w[1] = flipped;
        net
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Spectral norm estimate of W via power iteration on W'W.
    pub fn spectral_norm(w: &DenseMatrix) -> f64 {
        let n = w.cols();
        la::power_method_lmax(
            n,
            |v, out| {
                let wv = w.matvec(v);
                out.copy_from_slice(&w.matvec_t(&wv));
            },
            1e-10,
            2000,
        )
        .max(0.0)
        .sqrt()
    }

    /// Projection onto the constrained class: clip the head scalars to
    /// [-C, C] and rescale any W whose estimated spectral norm exceeds 1.
    pub fn project(&mut self) {
        let Some(cap) = self.constraint else {
            return;
        };
        for cj in self.c.iter_mut() {
            *cj = cj.clamp(-cap, cap);
        }
        for w in self.w.iter_mut() {
            let norm = Self::spectral_norm(w);
            if norm > 1.0 {
                let s = 1.0 / (norm * (1.0 + 1e-9));
                for v in w.data_mut() {
                    *v *= s;
                }
            }
        }
    }
}

impl NeuralOperator for TwoLayerParams {
    fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.n);
        let mut out = vec![0.0; self.n];
        for j in 0..2 {
            let z = self.w[j].matvec(input);
            for (o, zi) in out.iter_mut().zip(z.iter()) {
                *o += self.c[j] * zi.max(0.0);
            }
        }
        out
    }

    fn supports_dim(&self, dim: usize) -> bool {
        dim == self.n
    }
}

impl ParamSet for TwoLayerParams {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![&self.c, self.w[0].data(), self.w[1].data()]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let TwoLayerParams { c, w, .. } = self;
        let (w0, w1) = w.split_at_mut(1);
        vec![&mut c[..], w0[0].data_mut(), w1[0].data_mut()]
    }
}

impl DifferentiableNet for TwoLayerParams {
    type Cache = TwoLayerCache;

    fn zeroed_like(&self) -> Self {
        TwoLayerParams {
            n: self.n,
            c: [0.0; 2],
            w: [
                DenseMatrix::zeros(self.n, self.n),
                DenseMatrix::zeros(self.n, self.n),
            ],
            constraint: self.constraint,
        }
    }

    fn forward_cached(&self, input: &[f64]) -> (Vec<f64>, TwoLayerCache) {
        assert_eq!(input.len(), self.n);
        let pre = [self.w[0].matvec(input), self.w[1].matvec(input)];
        let mut out = vec![0.0; self.n];
        for j in 0..2 {
            for (o, zi) in out.iter_mut().zip(pre[j].iter()) {
                *o += self.c[j] * zi.max(0.0);
            }
        }
        (out, TwoLayerCache { pre })
    }

    fn backward_cached(
        &self,
        input: &[f64],
        cache: &TwoLayerCache,
        upstream: &[f64],
        grads: &mut Self,
    ) {
        for j in 0..2 {
            let pre = &cache.pre[j];
            let mut dc = 0.0;
            for (u, z) in upstream.iter().zip(pre.iter()) {
                dc += u * z.max(0.0);
            }
            grads.c[j] += dc;
            // dW_j = (c_j * upstream .* 1[pre>0]) input'
            let gw = grads.w[j].data_mut();
            for i in 0..self.n {
                if pre[i] > 0.0 {
                    let v = self.c[j] * upstream[i];
                    let row = &mut gw[i * self.n..(i + 1) * self.n];
                    for (g, &yj) in row.iter_mut().zip(input.iter()) {
                        *g += v * yj;
                    }
                }
            }
        }
    }

    fn project_constraints(&mut self) {
        self.project();
    }
}
