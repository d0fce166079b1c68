//! One-dimensional Fourier-spectral neural operator. Each hidden layer
//! computes sigma(IFFT(R_l . FFT_k(z)) + W_l * z + b_l): the input is
//! lifted pointwise from 1 to h channels, every layer mixes the first k
//! nonnegative-frequency bins of each channel with a complex h-by-h
//! tensor per retained mode, adds a circular convolution over the spatial
//! axis, and the result is projected pointwise back to one channel. The
//! truncated spectrum is completed by conjugate mirroring (skipping bins
//! that are their own mirror) and the inverse transform keeps the real
//! part, so outputs are real for real inputs and the same parameters
//! apply at any resolution with n >= 2(k-1).
//!
//! All transforms use the unitary convention, which makes the adjoint of
//! the truncated analysis step exactly "place the cotangent bins and run
//! the unitary inverse transform" with no stray scale factors.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::fft::{self, Dft};

use super::{DifferentiableNet, NeuralOperator, ParamSet};

/// Pointwise nonlinearity for the hidden layers; the final layer is
/// always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Gelu,
    Linear,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

pub fn activate(kind: Activation, x: f64) -> f64 {
    match kind {
        Activation::Gelu => {
            let u = GELU_C * (x + GELU_A * x * x * x);
            0.5 * x * (1.0 + u.tanh())
        }
        Activation::Linear => x,
    }
}

pub fn activate_grad(kind: Activation, x: f64) -> f64 {
    match kind {
        Activation::Gelu => {
            let u = GELU_C * (x + GELU_A * x * x * x);
            let t = u.tanh();
            let du = GELU_C * (1.0 + 3.0 * GELU_A * x * x);
            0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
        }
        Activation::Linear => 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralOperatorConfig {
    /// Hidden channel count h.
    pub hidden: usize,
    /// Layer count L; the last layer has linear activation.
    pub layers: usize,
    /// Retained nonnegative-frequency modes k per dimension.
    pub modes: usize,
    /// Odd spatial size of the local convolution kernel.
    pub kernel_size: usize,
    pub activation: Activation,
}

impl SpectralOperatorConfig {
    pub fn validate(&self) {
        assert!(self.hidden > 0 && self.layers > 0 && self.modes > 0);
        assert!(self.kernel_size % 2 == 1, "kernel size must be odd");
    }

    /// Smallest resolution the parameters support (mirror bins must not
    /// collide with retained ones).
    pub fn min_resolution(&self) -> usize {
        (2 * (self.modes - 1)).max(2)
    }
}

/// Parameters of the 1d spectral operator. Complex mode tensors are
/// stored as separate real and imaginary arrays indexed
/// [layer][mode][out][in]; convolution kernels as [layer][out][in][tap].
#[derive(Clone)]
pub struct Spectral1d {
    pub config: SpectralOperatorConfig,
    pub lift_w: Vec<f64>,
    pub lift_b: Vec<f64>,
    pub modes_re: Vec<f64>,
    pub modes_im: Vec<f64>,
    pub conv_w: Vec<f64>,
    pub bias: Vec<f64>,
    pub proj_w: Vec<f64>,
    pub proj_b: Vec<f64>,
}

pub struct Spectral1dCache {
    n: usize,
    /// Channel-major layer inputs, one h*n block per layer.
    layer_inputs: Vec<Vec<f64>>,
    /// Retained input bins per layer, h*k.
    layer_hat: Vec<Vec<Complex<f64>>>,
    /// Pre-activation values per layer, h*n.
    layer_pre: Vec<Vec<f64>>,
    /// Input of the projection head.
    final_z: Vec<f64>,
}

impl Spectral1d {
    pub fn init(config: SpectralOperatorConfig, seed: u64) -> Self {
        config.validate();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden;
        let l = config.layers;
        let k = config.modes;
        let s = config.kernel_size;
        let scale = 1.0 / h as f64;
        let mut uni = |amp: f64, len: usize| -> Vec<f64> {
            (0..len).map(|_| rng.random_range(-amp..amp)).collect()
        };
        Spectral1d {
            config,
            lift_w: uni(1.0, h),
            lift_b: uni(1.0, h),
            modes_re: uni(scale, l * k * h * h),
            modes_im: uni(scale, l * k * h * h),
            conv_w: uni(scale, l * h * h * s),
            bias: vec![0.0; l * h],
            proj_w: uni(scale, h),
            proj_b: vec![0.0; 1],
        }
    }

    pub fn zeroed(config: SpectralOperatorConfig) -> Self {
        config.validate();
        let h = config.hidden;
        let l = config.layers;
        let k = config.modes;
        let s = config.kernel_size;
        Spectral1d {
            config,
            lift_w: vec![0.0; h],
            lift_b: vec![0.0; h],
            modes_re: vec![0.0; l * k * h * h],
            modes_im: vec![0.0; l * k * h * h],
            conv_w: vec![0.0; l * h * h * s],
            bias: vec![0.0; l * h],
            proj_w: vec![0.0; h],
            proj_b: vec![0.0; 1],
        }
    }

    #[inline]
    fn mode(&self, l: usize, m: usize, o: usize, c: usize) -> Complex<f64> {
        let h = self.config.hidden;
        let k = self.config.modes;
        let idx = ((l * k + m) * h + o) * h + c;
        Complex::new(self.modes_re[idx], self.modes_im[idx])
    }

    fn layer_activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.config.layers {
            Activation::Linear
        } else {
            self.config.activation
        }
    }

    /// sigma(IFFT(R.FFT z) + conv(z) + b) for one layer, recording the
    /// retained bins and pre-activation values.
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
        // Analysis: unitary FFT per channel, keep bins 0..k.
        hat_out.clear();
        hat_out.resize(h * k, Complex::new(0.0, 0.0));
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for c in 0..h {
            for i in 0..n {
                buf[i] = Complex::new(z[c * n + i], 0.0);
            }
            dft.forward(&mut buf);
            hat_out[c * k..(c + 1) * k].copy_from_slice(&buf[..k]);
        }
        // Mode mixing, then synthesis with conjugate mirror completion.
        let mut pre = vec![0.0; h * n];
        for o in 0..h {
            for v in buf.iter_mut() {
                *v = Complex::new(0.0, 0.0);
            }
            for m in 0..k {
                let mut acc = Complex::new(0.0, 0.0);
                for c in 0..h {
                    acc += self.mode(layer, m, o, c) * hat_out[c * k + m];
                }
                buf[m] = acc;
                let mirror = (n - m) % n;
                if mirror != m && mirror >= k {
                    buf[mirror] = acc.conj();
                }
            }
            dft.inverse(&mut buf);
            for i in 0..n {
                pre[o * n + i] = buf[i].re;
            }
        }
        // Local path: circular convolution across channels plus bias,
        // accumulated tap by tap over contiguous spans so the wraparound
        // never costs a modulo in the hot loop.
        for o in 0..h {
            let wb = (layer * h + o) * h * s;
            let b = self.bias[layer * h + o];
            let row = &mut pre[o * n..(o + 1) * n];
            for v in row.iter_mut() {
                *v += b;
            }
            for c in 0..h {
                let zrow = &z[c * n..(c + 1) * n];
                let wrow = &self.conv_w[wb + c * s..wb + (c + 1) * s];
                for (t, &w) in wrow.iter().enumerate() {
                    let shift = (t + n - off) % n;
                    let split = n - shift;
                    for i in 0..split {
                        row[i] += w * zrow[i + shift];
                    }
                    for i in split..n {
                        row[i] += w * zrow[i + shift - n];
                    }
                }
            }
        }
        let act = self.layer_activation(layer);
        let out: Vec<f64> = pre.iter().map(|&u| activate(act, u)).collect();
        *pre_out = pre;
        out
    }
}

impl NeuralOperator for Spectral1d {
    fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.forward_cached(input).0
    }

    fn supports_dim(&self, dim: usize) -> bool {
        dim >= self.config.min_resolution()
    }
}

impl ParamSet for Spectral1d {
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
        let Spectral1d {
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

impl DifferentiableNet for Spectral1d {
    type Cache = Spectral1dCache;

    fn zeroed_like(&self) -> Self {
        Self::zeroed(self.config)
    }

    fn forward_cached(&self, input: &[f64]) -> (Vec<f64>, Spectral1dCache) {
        let n = input.len();
        assert!(
            self.supports_dim(n),
            "resolution {n} below the operator minimum {}",
            self.config.min_resolution()
        );
        let h = self.config.hidden;
        let dft = fft::plan(n);
        let mut z = vec![0.0; h * n];
        for c in 0..h {
            for i in 0..n {
                z[c * n + i] = self.lift_w[c] * input[i] + self.lift_b[c];
            }
        }
        let mut cache = Spectral1dCache {
            n,
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
        let mut out = vec![self.proj_b[0]; n];
        for c in 0..h {
            for i in 0..n {
                out[i] += self.proj_w[c] * z[c * n + i];
            }
        }
        cache.final_z = z;
        (out, cache)
    }

    fn backward_cached(
        &self,
        input: &[f64],
        cache: &Spectral1dCache,
        upstream: &[f64],
        grads: &mut Self,
    ) {
        let n = cache.n;
        let h = self.config.hidden;
        let k = self.config.modes;
        let s = self.config.kernel_size;
        let off = s / 2;
        let dft = fft::plan(n);

        // Projection head.
        grads.proj_b[0] += upstream.iter().sum::<f64>();
        let mut gz = vec![0.0; h * n];
        for c in 0..h {
            let zrow = &cache.final_z[c * n..(c + 1) * n];
            let mut dp = 0.0;
            for i in 0..n {
                dp += upstream[i] * zrow[i];
                gz[c * n + i] = self.proj_w[c] * upstream[i];
            }
            grads.proj_w[c] += dp;
        }

        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for l in (0..self.config.layers).rev() {
            let act = self.layer_activation(l);
            let pre = &cache.layer_pre[l];
            let z_in = &cache.layer_inputs[l];
            let hat = &cache.layer_hat[l];
            // Through the activation.
            let mut gu = gz;
            for (g, &u) in gu.iter_mut().zip(pre.iter()) {
                *g *= activate_grad(act, u);
            }
            // Bias.
            for o in 0..h {
                let mut db = 0.0;
                for i in 0..n {
                    db += gu[o * n + i];
                }
                grads.bias[l * h + o] += db;
            }
            let mut gz_prev = vec![0.0; h * n];
            // Local convolution: weight grads and input grads, again in
            // contiguous spans per tap.
            for o in 0..h {
                let wb = (l * h + o) * h * s;
                let gurow = &gu[o * n..(o + 1) * n];
                for c in 0..h {
                    let zrow = &z_in[c * n..(c + 1) * n];
                    let gzrow = &mut gz_prev[c * n..(c + 1) * n];
                    for t in 0..s {
                        let w = self.conv_w[wb + c * s + t];
                        let shift = (t + n - off) % n;
                        let split = n - shift;
                        let mut dw = 0.0;
                        for i in 0..split {
                            dw += gurow[i] * zrow[i + shift];
                            gzrow[i + shift] += w * gurow[i];
                        }
                        for i in split..n {
                            dw += gurow[i] * zrow[i + shift - n];
                            gzrow[i + shift - n] += w * gurow[i];
                        }
                        grads.conv_w[wb + c * s + t] += dw;
                    }
                }
            }
            // Spectral path. Cotangent of the placed spectrum is the
            // unitary forward transform of the upstream grad; the
            // retained-bin cotangent collects the mirror contribution.
            let mut dq = vec![Complex::new(0.0, 0.0); h * k];
            for o in 0..h {
                for i in 0..n {
                    buf[i] = Complex::new(gu[o * n + i], 0.0);
                }
                dft.forward(&mut buf);
                for m in 0..k {
                    let mirror = (n - m) % n;
                    let mut d = buf[m];
                    if mirror != m && mirror >= k {
                        d += buf[mirror].conj();
                    }
                    dq[o * k + m] = d;
                }
            }
            // Mode tensor grads dR = dQ conj(hat); input-bin cotangent
            // dhat = R^H dQ.
            let mut dhat = vec![Complex::new(0.0, 0.0); h * k];
            for m in 0..k {
                for o in 0..h {
                    let dqo = dq[o * k + m];
                    for c in 0..h {
                        let idx = ((l * k + m) * h + o) * h + c;
                        let hin = hat[c * k + m];
                        let dr = dqo * hin.conj();
                        grads.modes_re[idx] += dr.re;
                        grads.modes_im[idx] += dr.im;
                        dhat[c * k + m] += self.mode(l, m, o, c).conj() * dqo;
                    }
                }
            }
            // Adjoint of truncated analysis: place the bin cotangents at
            // 0..k (no mirrors) and take the real part of the unitary
            // inverse transform.
            for c in 0..h {
                for v in buf.iter_mut() {
                    *v = Complex::new(0.0, 0.0);
                }
                buf[..k].copy_from_slice(&dhat[c * k..(c + 1) * k]);
                dft.inverse(&mut buf);
                for i in 0..n {
                    gz_prev[c * n + i] += buf[i].re;
                }
            }
            gz = gz_prev;
        }

        // Lift.
        for c in 0..h {
            let mut dw = 0.0;
            let mut db = 0.0;
            for i in 0..n {
                dw += gz[c * n + i] * input[i];
                db += gz[c * n + i];
            }
            grads.lift_w[c] += dw;
            grads.lift_b[c] += db;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_net(n: usize) -> Spectral1d {
        // k = n/2 + 1 retains the full spectrum; R = I per mode, no local
        // path, linear activation: each layer is the identity.
        let config = SpectralOperatorConfig {
            hidden: 2,
            layers: 2,
            modes: n / 2 + 1,
            kernel_size: 1,
            activation: Activation::Linear,
        };
        let mut net = Spectral1d::zeroed(config);
        let h = config.hidden;
        let k = config.modes;
        for l in 0..config.layers {
            for m in 0..k {
                for o in 0..h {
                    let idx = ((l * k + m) * h + o) * h + o;
                    net.modes_re[idx] = 1.0;
                }
            }
        }
        for c in 0..h {
            net.lift_w[c] = 1.0;
            net.proj_w[c] = 1.0 / h as f64;
        }
        net
    }

    #[test]
    fn zero_network_maps_to_projection_bias() {
        let config = SpectralOperatorConfig {
            hidden: 3,
            layers: 2,
            modes: 4,
            kernel_size: 3,
            activation: Activation::Gelu,
        };
        let net = Spectral1d::zeroed(config);
        let out = net.forward(&vec![1.0; 16]);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_spectrum_identity_layers() {
        let n = 16;
        let net = identity_net(n);
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.9).sin() + 0.2).collect();
        let out = net.forward(&y);
        for (o, yi) in out.iter().zip(y.iter()) {
            assert!((o - yi).abs() < 1e-12, "identity violated: {o} vs {yi}");
        }
    }

    #[test]
    fn matches_dense_dft_reference() {
        // Reference evaluation with an explicit unitary DFT matrix.
        let n = 32;
        let config = SpectralOperatorConfig {
            hidden: 3,
            layers: 2,
            modes: 6,
            kernel_size: 3,
            activation: Activation::Gelu,
        };
        let net = Spectral1d::init(config, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = net.forward(&y);

        let h = config.hidden;
        let k = config.modes;
        let s = config.kernel_size;
        let off = s / 2;
        let tau = std::f64::consts::TAU;
        let root = |a: usize, b: usize, sign: f64| {
            let ang = sign * tau * (a as f64) * (b as f64) / n as f64;
            Complex::new(ang.cos(), ang.sin()) / (n as f64).sqrt()
        };
        let mut z: Vec<Vec<f64>> = (0..h)
            .map(|c| y.iter().map(|&v| net.lift_w[c] * v + net.lift_b[c]).collect())
            .collect();
        for l in 0..config.layers {
            let mut hat = vec![vec![Complex::new(0.0, 0.0); k]; h];
            for c in 0..h {
                for m in 0..k {
                    let mut acc = Complex::new(0.0, 0.0);
                    for i in 0..n {
                        acc += root(m, i, -1.0) * z[c][i];
                    }
                    hat[c][m] = acc;
                }
            }
            let mut next = vec![vec![0.0; n]; h];
            for o in 0..h {
                let mut spec = vec![Complex::new(0.0, 0.0); n];
                for m in 0..k {
                    let mut acc = Complex::new(0.0, 0.0);
                    for c in 0..h {
                        acc += net.mode(l, m, o, c) * hat[c][m];
                    }
                    spec[m] = acc;
                    let mirror = (n - m) % n;
                    if mirror != m && mirror >= k {
                        spec[mirror] = acc.conj();
                    }
                }
                for i in 0..n {
                    let mut acc = Complex::new(0.0, 0.0);
                    for m in 0..n {
                        acc += root(i, m, 1.0) * spec[m];
                    }
                    let mut u = acc.re + net.bias[l * h + o];
                    for c in 0..h {
                        for t in 0..s {
                            let j = (i + t + n - off) % n;
                            u += net.conv_w[((l * h + o) * h + c) * s + t] * z[c][j];
                        }
                    }
                    next[o][i] = activate(net.layer_activation(l), u);
                }
            }
            z = next;
        }
        let mut slow = vec![net.proj_b[0]; n];
        for c in 0..h {
            for i in 0..n {
                slow[i] += net.proj_w[c] * z[c][i];
            }
        }
        for (f, sv) in fast.iter().zip(slow.iter()) {
            assert!((f - sv).abs() < 1e-10, "{f} vs {sv}");
        }
    }

    #[test]
    fn resolution_invariance_on_bandlimited_input() {
        // Pointwise local path (kernel 1) so the whole operator is a
        // function of the retained modes; a band-limited signal sampled
        // at n and 2n must produce matching samples.
        let k = 5;
        let config = SpectralOperatorConfig {
            hidden: 4,
            layers: 3,
            modes: k,
            kernel_size: 1,
            activation: Activation::Gelu,
        };
        let net = Spectral1d::init(config, 11);
        let n = 32;
        let signal = |x: f64| {
            1.0 + 0.7 * (std::f64::consts::TAU * x).cos() + 0.3 * (2.0 * std::f64::consts::TAU * x).sin()
                - 0.2 * (4.0 * std::f64::consts::TAU * x).cos()
        };
        let coarse: Vec<f64> = (0..n).map(|i| signal(i as f64 / n as f64)).collect();
        let fine: Vec<f64> = (0..2 * n).map(|i| signal(i as f64 / (2 * n) as f64)).collect();
        let out_c = net.forward(&coarse);
        let out_f = net.forward(&fine);
        for i in 0..n {
            assert!(
                (out_c[i] - out_f[2 * i]).abs() < 1e-8,
                "sample {i}: {} vs {}",
                out_c[i],
                out_f[2 * i]
            );
        }
    }
}
