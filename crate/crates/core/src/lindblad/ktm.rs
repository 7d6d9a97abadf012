//! Two gravitationally coupled oscillators under continuous position
//! monitoring and feedback, averaged over records: a Lindblad equation with
//! position decoherence −(K/2ħ)Σ_j[x_j,[x_j,ρ]]. Being quadratic, it maps
//! Gaussian states to Gaussian states, so first and second moments carry the
//! full dynamics.

use nalgebra::{Complex, Matrix4, Vector4};

use crate::physcore::Constants;
use crate::{Error, Result};

/// Oscillator pair parameters. State ordering is (x₁, p₁, x₂, p₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KtmParams {
    pub hbar: f64,
    pub masses: [f64; 2],
    /// Bare trap frequencies ω_j (rad/s).
    pub trap: [f64; 2],
    /// Linearized coupling K (kg/s²).
    pub coupling: f64,
    /// Separation that produced K, when derived from Newton's law (m).
    pub separation: Option<f64>,
}

impl KtmParams {
    /// K = 2Gm₁m₂/d³, with renormalized frequencies Ω_j² = ω_j² − K/m_j.
    pub fn from_physical(k: &Constants, masses: [f64; 2], trap: [f64; 2], d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::domain("d", format!("must be positive, got {d}")));
        }
        let coupling = 2.0 * k.g * masses[0] * masses[1] / d.powi(3);
        let p = KtmParams {
            hbar: k.hbar,
            masses,
            trap,
            coupling,
            separation: Some(d),
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters fixed by the renormalized frequencies Ω_j and K directly.
    pub fn with_renormalized(
        hbar: f64,
        masses: [f64; 2],
        big_omega: [f64; 2],
        coupling: f64,
    ) -> Result<Self> {
        let trap = [
            (big_omega[0].powi(2) + coupling / masses[0]).sqrt(),
            (big_omega[1].powi(2) + coupling / masses[1]).sqrt(),
        ];
        let p = KtmParams {
            hbar,
            masses,
            trap,
            coupling,
            separation: None,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0) {
            return Err(Error::domain("hbar", "must be positive"));
        }
        if self.masses.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::domain("masses", "must be positive"));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::domain("K", "must be nonnegative"));
        }
        for j in 0..2 {
            if !(self.big_omega(j) > 0.0) {
                return Err(Error::domain(
                    "trap",
                    format!("oscillator {} is unbound: ω² ≤ K/m", j + 1),
                ));
            }
        }
        Ok(())
    }

    pub fn big_omega(&self, j: usize) -> f64 {
        (self.trap[j].powi(2) - self.coupling / self.masses[j]).sqrt()
    }

    /// Drift of (x₁, p₁, x₂, p₂) under H₀ + K x₁x₂.
    pub fn drift(&self) -> Matrix4<f64> {
        let [m1, m2] = self.masses;
        let (w1, w2) = (self.big_omega(0), self.big_omega(1));
        let k = self.coupling;
        Matrix4::new(
            0.0,
            1.0 / m1,
            0.0,
            0.0, //
            -m1 * w1 * w1,
            0.0,
            -k,
            0.0, //
            0.0,
            0.0,
            0.0,
            1.0 / m2, //
            -k,
            0.0,
            -m2 * w2 * w2,
            0.0,
        )
    }

    /// Momentum diffusion ħK from the double commutator.
    pub fn diffusion(&self) -> Matrix4<f64> {
        let q = self.hbar * self.coupling;
        Matrix4::from_diagonal(&Vector4::new(0.0, q, 0.0, q))
    }

    /// Largest rate that a time step has to resolve.
    pub fn fastest_rate(&self) -> f64 {
        (0..2)
            .map(|j| {
                let w = self.big_omega(j);
                w.max(self.coupling / (self.masses[j] * w))
            })
            .fold(0.0, f64::max)
    }
}

/// Symplectic form for the ordering (x₁, p₁, x₂, p₂).
pub fn symplectic_form() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianOscillatorState {
    pub mean: Vector4<f64>,
    /// Symmetrized covariance ½⟨{ΔX_a, ΔX_b}⟩.
    pub cov: Matrix4<f64>,
    pub params: KtmParams,
}

impl GaussianOscillatorState {
    /// Product of coherent states of the renormalized oscillators, centred at `mean`.
    pub fn coherent(params: KtmParams, mean: Vector4<f64>) -> Self {
        let mut cov = Matrix4::zeros();
        for j in 0..2 {
            let mw = params.masses[j] * params.big_omega(j);
            cov[(2 * j, 2 * j)] = params.hbar / (2.0 * mw);
            cov[(2 * j + 1, 2 * j + 1)] = params.hbar * mw / 2.0;
        }
        GaussianOscillatorState { mean, cov, params }
    }

    pub fn ground(params: KtmParams) -> Self {
        GaussianOscillatorState::coherent(params, Vector4::zeros())
    }

    /// Tr ρ² = (ħ/2)² / √det V.
    pub fn purity(&self) -> f64 {
        (0.5 * self.params.hbar).powi(2) / self.cov.determinant().sqrt()
    }

    /// Smallest eigenvalue of V + (iħ/2)J after rescaling each mode to
    /// oscillator units, so the bound reads ≥ 0 independently of SI scales.
    pub fn heisenberg_min_eigenvalue(&self) -> f64 {
        let mut scale = Vector4::zeros();
        for j in 0..2 {
            let mw = self.params.masses[j] * self.params.big_omega(j);
            scale[2 * j] = (mw / self.params.hbar).sqrt();
            scale[2 * j + 1] = 1.0 / (mw * self.params.hbar).sqrt();
        }
        let s = Matrix4::from_diagonal(&scale);
        let v = s * self.cov * s;
        let j = symplectic_form();
        let m = Matrix4::from_fn(|a, b| Complex::new(v[(a, b)], 0.5 * j[(a, b)]));
        m.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check(&self) -> Result<()> {
        let lo = self.heisenberg_min_eigenvalue();
        if lo < -1e-8 {
            return Err(Error::NumericalInstability(format!(
                "covariance violates the uncertainty bound (eigenvalue {lo:e})"
            )));
        }
        Ok(())
    }
}

/// RK4 for dX/dt = AX and dV/dt = AV + VAᵀ + D over `[0, t]`.
pub fn evolve_ktm_gaussian(
    state: &GaussianOscillatorState,
    t: f64,
    dt: f64,
) -> Result<GaussianOscillatorState> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("t", format!("must be nonnegative, got {t}")));
    }
    if !(dt > 0.0) {
        return Err(Error::domain("dt", format!("must be positive, got {dt}")));
    }
    let p = &state.params;
    if dt * p.fastest_rate() >= 0.1 {
        return Err(Error::StepSize(format!(
            "dt = {dt:e} s does not resolve the rate {:e} s⁻¹",
            p.fastest_rate()
        )));
    }
    let a = p.drift();
    let d = p.diffusion();
    let steps = (t / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let fv = |v: &Matrix4<f64>| a * v + v * a.transpose() + d;
    let mut x = state.mean;
    let mut v = state.cov;
    for _ in 0..steps {
        let (k1, l1) = (a * x, fv(&v));
        let (k2, l2) = (a * (x + k1 * (0.5 * h)), fv(&(v + l1 * (0.5 * h))));
        let (k3, l3) = (a * (x + k2 * (0.5 * h)), fv(&(v + l2 * (0.5 * h))));
        let (k4, l4) = (a * (x + k3 * h), fv(&(v + l3 * h)));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        v += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
        v = (v + v.transpose()) * 0.5;
    }
    let out = GaussianOscillatorState {
        mean: x,
        cov: v,
        params: state.params,
    };
    out.check()?;
    Ok(out)
}
