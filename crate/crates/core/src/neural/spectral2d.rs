//! Two-dimensional Fourier-spectral operator on an n-by-n periodic grid
//! (vectors are row-major fields of length n^2). The retained mode set
//! is the half-plane T = {(m1, m2) : m2 in 0..k, m1 in 0..k or
//! n-k+1..n}: because real fields have Hermitian-symmetric spectra,
//! keeping both signs of m1 but only nonnegative m2 covers every
//! independent low-frequency mode. After mixing, each retained bin is
//! conjugate-mirrored to (n-m1, n-m2) mod n unless that bin is itself in
//! T, and the inverse unitary transform keeps the real part. Everything
//! else matches the 1d operator: pointwise lift/projection, per-layer
//! circular s-by-s convolution, GELU except on the final (linear) layer.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use crate::fft::{self, fft2_raw, Dft};

use super::spectral::{activate, activate_grad, Activation, SpectralOperatorConfig};
use super::{DifferentiableNet, NeuralOperator, ParamSet};

/// Retained half-plane modes for grid side n: m2 scans 0..k, m1 scans
/// 0..k then n-k+1..n, giving k(2k-1) bins in a fixed order.
fn mode_set(n: usize, k: usize) -> Vec<(usize, usize)> {
    let mut t = Vec::with_capacity(k * (2 * k - 1));
    for m2 in 0..k {
        for m1 in 0..k {
            t.push((m1, m2));
        }
        for m1 in (n - k + 1)..n {
            t.push((m1, m2));
        }
    }
    t
}

fn in_set(n: usize, k: usize, m1: usize, m2: usize) -> bool {
    m2 < k && (m1 < k || m1 >= n - k + 1)
}

#[derive(Clone)]
pub struct Spectral2d {
    pub config: SpectralOperatorConfig,
    pub lift_w: Vec<f64>,
    pub lift_b: Vec<f64>,
    /// [layer][t][out][in] over the mode set returned by `mode_set`.
    pub modes_re: Vec<f64>,
    pub modes_im: Vec<f64>,
    /// [layer][out][in][t1][t2]
    pub conv_w: Vec<f64>,
    pub bias: Vec<f64>,
    pub proj_w: Vec<f64>,
    pub proj_b: Vec<f64>,
}

pub struct Spectral2dCache {
    grid: usize,
    layer_inputs: Vec<Vec<f64>>,
    /// Retained bins of the layer input, h * |T| per layer.
    layer_hat: Vec<Vec<Complex<f64>>>,
    layer_pre: Vec<Vec<f64>>,
    final_z: Vec<f64>,
}

impl Spectral2d {
    pub fn mode_count(config: &SpectralOperatorConfig) -> usize {
        config.modes * (2 * config.modes - 1)
    }

    pub fn init(config: SpectralOperatorConfig, seed: u64) -> Self {
        config.validate();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden;
        let l = config.layers;
        let t = Self::mode_count(&config);
        let s = config.kernel_size;
        let scale = 1.0 / h as f64;
        let mut uni = |amp: f64, len: usize| -> Vec<f64> {
            (0..len).map(|_| rng.random_range(-amp..amp)).collect()
        };
        Spectral2d {
            config,
            lift_w: uni(1.0, h),
            lift_b: uni(1.0, h),
            modes_re: uni(scale, l * t * h * h),
            modes_im: uni(scale, l * t * h * h),
            conv_w: uni(scale, l * h * h * s * s),
            bias: vec![0.0; l * h],
            proj_w: uni(scale, h),
            proj_b: vec![0.0; 1],
        }
    }

    pub fn zeroed(config: SpectralOperatorConfig) -> Self {
        config.validate();
        let h = config.hidden;
        let l = config.layers;
        let t = Self::mode_count(&config);
        let s = config.kernel_size;
        Spectral2d {
            config,
            lift_w: vec![0.0; h],
            lift_b: vec![0.0; h],
            modes_re: vec![0.0; l * t * h * h],
            modes_im: vec![0.0; l * t * h * h],
            conv_w: vec![0.0; l * h * h * s * s],
            bias: vec![0.0; l * h],
            proj_w: vec![0.0; h],
            proj_b: vec![0.0; 1],
        }
    }

    #[inline]
    fn mode(&self, l: usize, t: usize, o: usize, c: usize) -> Complex<f64> {
        let h = self.config.hidden;
        let tc = Self::mode_count(&self.config);
        let idx = ((l * tc + t) * h + o) * h + c;
        Complex::new(self.modes_re[idx], self.modes_im[idx])
    }

    fn layer_activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.config.layers {
            Activation::Linear
        } else {
            self.config.activation
        }
    }

    /// Unitary 2d transform in place (raw row/column passes divided by n).
    fn fft2_unitary(dft: &Dft, data: &mut [Complex<f64>], forward: bool) {
        fft2_raw(dft, data, forward);
        let s = 1.0 / dft.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    fn layer_forward(
        &self,
        layer: usize,
        z: &[f64],
        n: usize,
        dft: &Dft,
        hat_out: &mut Vec<Complex<f64>>,
        pre_out: &mut Vec<f64>,
    ) -> Vec<f64> {
        let h = self.config.hidden;
        let k = self.config.modes;
        let s = self.config.kernel_size;
        let off = s / 2;
        let nn = n * n;
        let modes = mode_set(n, k);
        let tc = modes.len();
        hat_out.clear();
        hat_out.resize(h * tc, Complex::new(0.0, 0.0));
        let mut buf = vec![Complex::new(0.0, 0.0); nn];
        for c in 0..h {
            for i in 0..nn {
                buf[i] = Complex::new(z[c * nn + i], 0.0);
            }
            Self::fft2_unitary(dft, &mut buf, true);
            for (t, &(m1, m2)) in modes.iter().enumerate() {
                hat_out[c * tc + t] = buf[m1 * n + m2];
            }
        }
        let mut pre = vec![0.0; h * nn];
        for o in 0..h {
            for v in buf.iter_mut() {
                *v = Complex::new(0.0, 0.0);
            }
            for (t, &(m1, m2)) in modes.iter().enumerate() {
                let mut acc = Complex::new(0.0, 0.0);
                for c in 0..h {
                    acc += self.mode(layer, t, o, c) * hat_out[c * tc + t];
                }
                buf[m1 * n + m2] = acc;
                let r1 = (n - m1) % n;
                let r2 = (n - m2) % n;
                if !(r1 == m1 && r2 == m2) && !in_set(n, k, r1, r2) {
                    buf[r1 * n + r2] = acc.conj();
                }
            }
            Self::fft2_unitary(dft, &mut buf, false);
            for i in 0..nn {
                pre[o * nn + i] = buf[i].re;
            }
        }
        // Circular convolution accumulated tap by tap over contiguous
        // row spans, keeping the wraparound arithmetic out of the hot
        // loop.
        for o in 0..h {
            let wb = (layer * h + o) * h * s * s;
            let b = self.bias[layer * h + o];
            let orow = &mut pre[o * nn..(o + 1) * nn];
            for v in orow.iter_mut() {
                *v += b;
            }
            for c in 0..h {
                let zch = &z[c * nn..(c + 1) * nn];
                let wch = &self.conv_w[wb + c * s * s..wb + (c + 1) * s * s];
                for t1 in 0..s {
                    let sh1 = (t1 + n - off) % n;
                    for t2 in 0..s {
                        let w = wch[t1 * s + t2];
                        let sh2 = (t2 + n - off) % n;
                        let split = n - sh2;
                        for i1 in 0..n {
                            let j1 = if i1 + sh1 >= n { i1 + sh1 - n } else { i1 + sh1 };
                            let dst = &mut orow[i1 * n..(i1 + 1) * n];
                            let src = &zch[j1 * n..(j1 + 1) * n];
                            for i2 in 0..split {
                                dst[i2] += w * src[i2 + sh2];
                            }
                            for i2 in split..n {
                                dst[i2] += w * src[i2 + sh2 - n];
                            }
                        }
                    }
                }
            }
        }
        let act = self.layer_activation(layer);
        let out: Vec<f64> = pre.iter().map(|&u| activate(act, u)).collect();
        *pre_out = pre;
        out
    }

    /// The two m1 half-ranges must stay disjoint, which needs one grid
    /// point more than the 1d rule (where the Nyquist bin pairs with
    /// itself): n >= 2k - 1.
    fn grid_side(&self, dim: usize) -> Option<usize> {
        let n = (dim as f64).sqrt().round() as usize;
        if n * n == dim && n >= (2 * self.config.modes - 1).max(2) {
            Some(n)
        } else {
            None
        }
    }
}

impl NeuralOperator for Spectral2d {
    fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input).0
    }

    fn supports_dim(&self, dim: usize) -> bool {
        self.grid_side(dim).is_some()
    }
}

impl ParamSet for Spectral2d {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![
            &self.lift_w,
            &self.lift_b,
            &self.modes_re,
            &self.modes_im,
            &self.conv_w,
            &self.bias,
            &self.proj_w,
            &self.proj_b,
        ]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let Spectral2d {
            lift_w,
            lift_b,
            modes_re,
            modes_im,
            conv_w,
            bias,
            proj_w,
            proj_b,
            ..
        } = self;
        vec![lift_w, lift_b, modes_re, modes_im, conv_w, bias, proj_w, proj_b]
    }
}

impl DifferentiableNet for Spectral2d {
    type Cache = Spectral2dCache;

    fn zeroed_like(&self) -> Self {
        Self::zeroed(self.config)
    }

    fn forward_cached(&self, input: &[f64]) -> (Vec<f64>, Spectral2dCache) {
        let n = self
            .grid_side(input.len())
            .unwrap_or_else(|| panic!("input length {} is not a supported square grid", input.len()));
        let h = self.config.hidden;
        let nn = n * n;
        let dft = fft::plan(n);
        let mut z = vec![0.0; h * nn];
        for c in 0..h {
            for i in 0..nn {
                z[c * nn + i] = self.lift_w[c] * input[i] + self.lift_b[c];
            }
        }
        let mut cache = Spectral2dCache {
            grid: n,
            layer_inputs: Vec::with_capacity(self.config.layers),
            layer_hat: Vec::with_capacity(self.config.layers),
            layer_pre: Vec::with_capacity(self.config.layers),
            final_z: Vec::new(),
        };
        for l in 0..self.config.layers {
            let mut hat = Vec::new();
            let mut pre = Vec::new();
            let next = self.layer_forward(l, &z, n, &dft, &mut hat, &mut pre);
            cache.layer_inputs.push(z);
            cache.layer_hat.push(hat);
            cache.layer_pre.push(pre);
            z = next;
        }
        let mut out = vec![self.proj_b[0]; nn];
        for c in 0..h {
            for i in 0..nn {
                out[i] += self.proj_w[c] * z[c * nn + i];
            }
        }
        cache.final_z = z;
        (out, cache)
    }

    fn backward_cached(
        &self,
        input: &[f64],
        cache: &Spectral2dCache,
        upstream: &[f64],
        grads: &mut Self,
    ) {
        let n = cache.grid;
        let nn = n * n;
        let h = self.config.hidden;
        let k = self.config.modes;
        let s = self.config.kernel_size;
        let off = s / 2;
        let dft = fft::plan(n);
        let modes = mode_set(n, k);
        let tc = modes.len();

        grads.proj_b[0] += upstream.iter().sum::<f64>();
        let mut gz = vec![0.0; h * nn];
        for c in 0..h {
            let zch = &cache.final_z[c * nn..(c + 1) * nn];
            let mut dp = 0.0;
            for i in 0..nn {
                dp += upstream[i] * zch[i];
                gz[c * nn + i] = self.proj_w[c] * upstream[i];
            }
            grads.proj_w[c] += dp;
        }

        let mut buf = vec![Complex::new(0.0, 0.0); nn];
        for l in (0..self.config.layers).rev() {
            let act = self.layer_activation(l);
            let pre = &cache.layer_pre[l];
            let z_in = &cache.layer_inputs[l];
            let hat = &cache.layer_hat[l];
            let mut gu = gz;
            for (g, &u) in gu.iter_mut().zip(pre.iter()) {
                *g *= activate_grad(act, u);
            }
            for o in 0..h {
                let mut db = 0.0;
                for i in 0..nn {
                    db += gu[o * nn + i];
                }
                grads.bias[l * h + o] += db;
            }
            let mut gz_prev = vec![0.0; h * nn];
            // Local convolution: weight grads and input grads in
            // contiguous row spans per tap.
            for o in 0..h {
                let wb = (l * h + o) * h * s * s;
                let gch = &gu[o * nn..(o + 1) * nn];
                for c in 0..h {
                    let zch = &z_in[c * nn..(c + 1) * nn];
                    let gzch = &mut gz_prev[c * nn..(c + 1) * nn];
                    for t1 in 0..s {
                        let sh1 = (t1 + n - off) % n;
                        for t2 in 0..s {
                            let w = self.conv_w[wb + c * s * s + t1 * s + t2];
                            let sh2 = (t2 + n - off) % n;
                            let split = n - sh2;
                            let mut dw = 0.0;
                            for i1 in 0..n {
                                let j1 = if i1 + sh1 >= n { i1 + sh1 - n } else { i1 + sh1 };
                                let grow = &gch[i1 * n..(i1 + 1) * n];
                                let zrow = &zch[j1 * n..(j1 + 1) * n];
                                let gzrow = &mut gzch[j1 * n..(j1 + 1) * n];
                                for i2 in 0..split {
                                    dw += grow[i2] * zrow[i2 + sh2];
                                    gzrow[i2 + sh2] += w * grow[i2];
                                }
                                for i2 in split..n {
                                    dw += grow[i2] * zrow[i2 + sh2 - n];
                                    gzrow[i2 + sh2 - n] += w * grow[i2];
                                }
                            }
                            grads.conv_w[wb + c * s * s + t1 * s + t2] += dw;
                        }
                    }
                }
            }
            // Spectral path, exactly mirroring the forward placement.
            let mut dq = vec![Complex::new(0.0, 0.0); h * tc];
            for o in 0..h {
                for i in 0..nn {
                    buf[i] = Complex::new(gu[o * nn + i], 0.0);
                }
                Self::fft2_unitary(&dft, &mut buf, true);
                for (t, &(m1, m2)) in modes.iter().enumerate() {
                    let mut d = buf[m1 * n + m2];
                    let r1 = (n - m1) % n;
                    let r2 = (n - m2) % n;
                    if !(r1 == m1 && r2 == m2) && !in_set(n, k, r1, r2) {
                        d += buf[r1 * n + r2].conj();
                    }
                    dq[o * tc + t] = d;
                }
            }
            let mut dhat = vec![Complex::new(0.0, 0.0); h * tc];
            for t in 0..tc {
                for o in 0..h {
                    let dqo = dq[o * tc + t];
                    for c in 0..h {
                        let idx = ((l * tc + t) * h + o) * h + c;
                        let dr = dqo * hat[c * tc + t].conj();
                        grads.modes_re[idx] += dr.re;
                        grads.modes_im[idx] += dr.im;
                        dhat[c * tc + t] += self.mode(l, t, o, c).conj() * dqo;
                    }
                }
            }
            for c in 0..h {
                for v in buf.iter_mut() {
                    *v = Complex::new(0.0, 0.0);
                }
                for (t, &(m1, m2)) in modes.iter().enumerate() {
                    buf[m1 * n + m2] = dhat[c * tc + t];
                }
                Self::fft2_unitary(&dft, &mut buf, false);
                for i in 0..nn {
                    gz_prev[c * nn + i] += buf[i].re;
                }
            }
            gz = gz_prev;
        }

        for c in 0..h {
            let mut dw = 0.0;
            let mut db = 0.0;
            for i in 0..nn {
                dw += gz[c * nn + i] * input[i];
                db += gz[c * nn + i];
            }
            grads.lift_w[c] += dw;
            grads.lift_b[c] += db;
        }
    }
}
