//! Spectral transforms on the two grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Sine transform X_k = Σ_{j=1}^{n} x_j sin(πjk/(n+1)), computed from the
/// odd extension of length 2(n+1). Applying it twice returns (n+1)/2 · x.
#[derive(Clone)]
pub(crate) struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SineTransform {
    pub(crate) fn new(n: usize) -> Self {
        SineTransform {
            n,
            fft: FftPlanner::new().plan_fft_forward(2 * (n + 1)),
        }
    }

    pub(crate) fn apply(&self, x: &mut [Complex64]) {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (n + 1)];
        for j in 0..n {
            buf[j + 1] = x[j];
            buf[2 * (n + 1) - 1 - j] = -x[j];
        }
        self.fft.process(&mut buf);
        // Y_k = −2i X_k
        for k in 0..n {
            x[k] = buf[k + 1] * Complex64::new(0.0, 0.5);
        }
    }

    pub(crate) fn inverse(&self, x: &mut [Complex64]) {
        self.apply(x);
        let s = 2.0 / (self.n + 1) as f64;
        for v in x.iter_mut() {
            *v *= s;
        }
    }
}

/// Periodic FFT pair with unitary-free conventions (inverse divides by n).
#[derive(Clone)]
pub(crate) struct PeriodicTransform {
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl PeriodicTransform {
    pub(crate) fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        PeriodicTransform {
            forward: p.plan_fft_forward(n),
            backward: p.plan_fft_inverse(n),
        }
    }

    pub(crate) fn forward(&self, x: &mut [Complex64]) {
        self.forward.process(x);
    }

    pub(crate) fn inverse(&self, x: &mut [Complex64]) {
        self.backward.process(x);
        let s = 1.0 / x.len() as f64;
        for v in x.iter_mut() {
            *v *= s;
        }
    }
}

/// Angular wavenumbers of an n-point periodic grid of length `extent`.
pub(crate) fn periodic_wavenumbers(n: usize, extent: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / extent;
    (0..n)
        .map(|q| {
            if q <= n / 2 {
                q as f64 * dk
            } else {
                (q as f64 - n as f64) * dk
            }
        })
        .collect()
}
