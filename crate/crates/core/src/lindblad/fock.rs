//! Truncated number-basis integrator for the oscillator-pair Lindblad
//! equation. Independent of the Gaussian-moment engine and used to check it.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;

use super::ktm::KtmParams;
use crate::{Error, Result};

/// Sparse operator stored by rows.
#[derive(Debug, Clone)]
struct SparseOp {
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseOp {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn from_fn(dim: usize, entries: impl Fn(usize) -> Vec<(usize, Complex64)>) -> Self {
        SparseOp {
            rows: (0..dim).map(entries).collect(),
        }
    }

    fn add(&self, other: &SparseOp, scale: Complex64) -> SparseOp {
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut r = a.clone();
                for &(j, v) in b {
                    match r.iter_mut().find(|(k, _)| *k == j) {
                        Some(e) => e.1 += v * scale,
                        None => r.push((j, v * scale)),
                    }
                }
                r
            })
            .collect();
        SparseOp { rows }
    }

    /// A·M
    fn left(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, m.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for c in 0..m.ncols() {
                    out[(i, c)] += a * m[(k, c)];
                }
            }
        }
        out
    }

    /// M·A
    fn right(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(m.nrows(), n);
        for (k, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                for r in 0..m.nrows() {
                    out[(r, j)] += m[(r, k)] * a;
                }
            }
        }
        out
    }

    /// Tr(A·M)
    fn trace_with(&self, m: &DMatrix<Complex64>) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                s += a * m[(k, i)];
            }
        }
        s
    }
}

/// Density matrix of two oscillators on the product basis |n₁, n₂⟩ with
/// n_j below `cutoff`, each in units of its renormalized frequency.
#[derive(Debug, Clone)]
pub struct FockOscillators {
    pub params: KtmParams,
    pub cutoff: usize,
    pub rho: DMatrix<Complex64>,
    /// Quadratures (x₁, p₁, x₂, p₂).
    quadratures: [SparseOp; 4],
    hamiltonian: SparseOp,
}

impl FockOscillators {
    fn operators(params: &KtmParams, n: usize) -> ([SparseOp; 4], SparseOp) {
        let dim = n * n;
        let idx = |a: usize, b: usize| a * n + b;
        let mut quads = Vec::new();
        for mode in 0..2 {
            let mw = params.masses[mode] * params.big_omega(mode);
            let xz = (params.hbar / (2.0 * mw)).sqrt();
            let pz = (params.hbar * mw / 2.0).sqrt();
            // row i = (n₁, n₂); a|n⟩ = √n|n−1⟩, a†|n⟩ = √(n+1)|n+1⟩
            let ladder = |i: usize, xs: f64, ps: Complex64| {
                let (n1, n2) = (i / n, i % n);
                let q = if mode == 0 { n1 } else { n2 };
                let at = |q2: usize| if mode == 0 { idx(q2, n2) } else { idx(n1, q2) };
                let mut row = Vec::new();
                // ⟨q|a|q+1⟩ = √(q+1), ⟨q|a†|q−1⟩ = √q
                if q + 1 < n {
                    let s = ((q + 1) as f64).sqrt();
                    row.push((at(q + 1), Complex64::from(xs * s) - ps * s));
                }
                if q > 0 {
                    let s = (q as f64).sqrt();
                    row.push((at(q - 1), Complex64::from(xs * s) + ps * s));
                }
                row
            };
            // x = x_z(a + a†), p = i p_z(a† − a)
            quads.push(SparseOp::from_fn(dim, |i| {
                ladder(i, xz, Complex64::new(0.0, 0.0))
            }));
            quads.push(SparseOp::from_fn(dim, |i| {
                ladder(i, 0.0, Complex64::new(0.0, pz))
            }));
        }
        let quads: [SparseOp; 4] = quads.try_into().unwrap();
        let h0 = SparseOp::from_fn(dim, |i| {
            let (n1, n2) = (i / n, i % n);
            let e = params.hbar
                * (params.big_omega(0) * (n1 as f64 + 0.5)
                    + params.big_omega(1) * (n2 as f64 + 0.5));
            vec![(i, Complex64::from(e))]
        });
        // K x₁x₂: both factors act on different modes, so the product is exact
        let x1x2 = SparseOp::from_fn(dim, |i| {
            let mut row = Vec::new();
            for &(k, a) in &quads[0].rows[i] {
                for &(j, b) in &quads[2].rows[k] {
                    row.push((j, a * b));
                }
            }
            row
        });
        let h = h0.add(&x1x2, Complex64::from(params.coupling));
        (quads, h)
    }

    /// Product of coherent states with phase-space centre `mean`.
    pub fn coherent(params: KtmParams, cutoff: usize, mean: Vector4<f64>) -> Result<Self> {
        if cutoff < 2 {
            return Err(Error::domain("cutoff", "need at least two levels per mode"));
        }
        let mut amps = Vec::new();
        for mode in 0..2 {
            let mw = params.masses[mode] * params.big_omega(mode);
            let xz = (params.hbar / (2.0 * mw)).sqrt();
            let pz = (params.hbar * mw / 2.0).sqrt();
            let alpha =
                Complex64::new(mean[2 * mode] / (2.0 * xz), mean[2 * mode + 1] / (2.0 * pz));
            let mut c = vec![Complex64::new(1.0, 0.0); cutoff];
            for q in 1..cutoff {
                c[q] = c[q - 1] * alpha / (q as f64).sqrt();
            }
            let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            amps.push(c.into_iter().map(|z| z / norm).collect::<Vec<_>>());
        }
        let dim = cutoff * cutoff;
        let psi: Vec<Complex64> = (0..dim)
            .map(|i| amps[0][i / cutoff] * amps[1][i % cutoff])
            .collect();
        let rho = DMatrix::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj());
        let (quadratures, hamiltonian) = FockOscillators::operators(&params, cutoff);
        Ok(FockOscillators {
            params,
            cutoff,
            rho,
            quadratures,
            hamiltonian,
        })
    }

    fn rhs(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let hbar = self.params.hbar;
        let kappa = self.params.coupling / (2.0 * hbar);
        let h = &self.hamiltonian;
        let mut out = (h.left(rho) - h.right(rho)) * Complex64::new(0.0, -1.0 / hbar);
        for x in [&self.quadratures[0], &self.quadratures[2]] {
            let xr = x.left(rho);
            let xxr = x.left(&xr);
            let xrx = x.right(&xr);
            let rxx = x.right(&x.right(rho));
            out -= (xxr - xrx * Complex64::from(2.0) + rxx) * Complex64::from(kappa);
        }
        out
    }

    /// RK4 over `[0, t]`.
    pub fn evolve(&self, t: f64, dt: f64) -> Result<FockOscillators> {
        if !(t >= 0.0) || !(dt > 0.0) {
            return Err(Error::domain("dt", "need t ≥ 0 and dt > 0"));
        }
        let steps = (t / dt).ceil() as usize;
        let h = if steps == 0 { 0.0 } else { t / steps as f64 };
        let mut y = self.rho.clone();
        let half = Complex64::from(0.5 * h);
        for _ in 0..steps {
            let k1 = self.rhs(&y);
            let k2 = self.rhs(&(&y + &k1 * half));
            let k3 = self.rhs(&(&y + &k2 * half));
            let k4 = self.rhs(&(&y + &k3 * Complex64::from(h)));
            y += (k1 + (k2 + k3) * Complex64::from(2.0) + k4) * Complex64::from(h / 6.0);
        }
        let mut out = self.clone();
        out.rho = y;
        Ok(out)
    }

    /// Mean vector and symmetrized covariance.
    pub fn moments(&self) -> (Vector4<f64>, Matrix4<f64>) {
        let mean = Vector4::from_fn(|a, _| self.quadratures[a].trace_with(&self.rho).re);
        let mut cov = Matrix4::zeros();
        for b in 0..4 {
            let xb = self.quadratures[b].left(&self.rho);
            for a in 0..4 {
                cov[(a, b)] = self.quadratures[a].trace_with(&xb).re - mean[a] * mean[b];
            }
        }
        (mean, (cov + cov.transpose()) * 0.5)
    }

    /// Population in the highest retained level of either mode.
    pub fn leakage(&self) -> f64 {
        let n = self.cutoff;
        (0..n * n)
            .filter(|i| i / n == n - 1 || i % n == n - 1)
            .map(|i| self.rho[(i, i)].re)
            .sum()
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|c| c.re).sum()
    }
}
