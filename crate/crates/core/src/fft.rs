//! Thin wrapper around rustfft with the unitary normalization used
//! project-wide: both directions carry a 1/sqrt(len) factor, so
//! `inverse(forward(x)) == x` and Parseval holds without bookkeeping.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct Dft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Shared plan cache: planning is far more expensive than a transform,
/// and the same few lengths recur throughout training and solving.
static PLANS: OnceLock<Mutex<HashMap<usize, Dft>>> = OnceLock::new();

/// A cached transform pair for `len`, planning it on first use.
pub fn plan(len: usize) -> Dft {
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry(len).or_insert_with(|| Dft::new(len)).clone()
}

impl Dft {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Dft {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    /// In-place unitary forward transform.
    pub fn forward(&self, buf: &mut [Complex<f64>]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
        let s = 1.0 / (self.len as f64).sqrt();
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    /// In-place unitary inverse transform.
    pub fn inverse(&self, buf: &mut [Complex<f64>]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        let s = 1.0 / (self.len as f64).sqrt();
        for v in buf.iter_mut() {
            *v *= s;
        }
    }

    /// Raw (unnormalized) transforms for callers that fold the scaling
    /// into their own constants.
    pub fn forward_raw(&self, buf: &mut [Complex<f64>]) {
        self.forward.process(buf);
    }

    pub fn inverse_raw(&self, buf: &mut [Complex<f64>]) {
        self.inverse.process(buf);
    }
}

/// Unitary DFT of a real signal, returned as a full complex spectrum.
pub fn dft_real(dft: &Dft, x: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    dft.forward(&mut buf);
    buf
}

/// In-place raw 2D transform of a row-major n-by-n complex grid: rows
/// first, then columns. No normalization is applied in either direction,
/// so a forward/inverse roundtrip gains a factor of n^2.
pub fn fft2_raw(dft: &Dft, data: &mut [Complex<f64>], forward: bool) {
    let n = dft.len();
    debug_assert_eq!(data.len(), n * n);
    for row in data.chunks_exact_mut(n) {
        if forward {
            dft.forward_raw(row);
        } else {
            dft.inverse_raw(row);
        }
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        if forward {
            dft.forward_raw(&mut col);
        } else {
            dft.inverse_raw(&mut col);
        }
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
}
