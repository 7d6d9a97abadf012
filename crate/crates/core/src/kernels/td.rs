//! Tilloy–Diósi feedback kernels.
//!
//! The monitoring kernel γ fixes the decoherence kernel through
//! D̃(k) = γ̃(k)/(8ħ²) + 8π²G²/(k⁴ γ̃(k)). The first term is the cost of
//! monitoring, the second the noise fed back through the Newtonian
//! potential. The sum is smallest for γ̃ = 8πħG/k², i.e. γ(r) = 2ħG/r.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::physcore::{one_minus_sinc, quad::Quadrature, sinc, Constants, MassDensity};
use crate::{Error, Result};

pub type KernelTransform = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum TDChoice {
    Minimal,
    /// γ̃(k), k in 1/m. `k_max` bounds the wavenumbers used when D has to
    /// be transformed back to position space; without it only k-space
    /// quantities are available.
    Custom {
        gamma_ft: KernelTransform,
        k_max: Option<f64>,
    },
}

impl fmt::Debug for TDChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TDChoice::Minimal => f.write_str("Minimal"),
            TDChoice::Custom { k_max, .. } => {
                f.debug_struct("Custom").field("k_max", k_max).finish()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TDKernel {
    pub choice: TDChoice,
    pub constants: Constants,
}

impl TDKernel {
    pub fn minimal(constants: Constants) -> Self {
        TDKernel {
            choice: TDChoice::Minimal,
            constants,
        }
    }

    /// Kernel with γ̃ scaled by `factor` relative to the minimal one.
    pub fn scaled_minimal(constants: Constants, factor: f64) -> Self {
        let base = 8.0 * PI * constants.hbar * constants.g;
        TDKernel {
            choice: TDChoice::Custom {
                gamma_ft: Arc::new(move |k: f64| factor * base / (k * k)),
                k_max: None,
            },
            constants,
        }
    }

    /// Position-space monitoring kernel γ(r); available in closed form for
    /// the minimal choice only.
    pub fn gamma(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain("r", format!("must be positive, got {r}")));
        }
        match &self.choice {
            TDChoice::Minimal => Ok(2.0 * self.constants.hbar * self.constants.g / r),
            TDChoice::Custom { .. } => Err(Error::UnsupportedKernel(
                "custom monitoring kernels are specified in k-space".into(),
            )),
        }
    }

    pub fn gamma_ft(&self, k: f64) -> f64 {
        match &self.choice {
            TDChoice::Minimal => 8.0 * PI * self.constants.hbar * self.constants.g / (k * k),
            TDChoice::Custom { gamma_ft, .. } => gamma_ft(k),
        }
    }

    /// The monitoring and feedback summands of D̃(k).
    pub fn decoherence_terms_ft(&self, k: f64) -> (f64, f64) {
        let Constants { hbar, g, .. } = self.constants;
        let gt = self.gamma_ft(k);
        (
            gt / (8.0 * hbar * hbar),
            8.0 * PI * PI * g * g / (k.powi(4) * gt),
        )
    }

    pub fn decoherence_ft(&self, k: f64) -> f64 {
        let (a, b) = self.decoherence_terms_ft(k);
        a + b
    }

    /// Rate for a two-branch superposition displaced by `d`, from
    /// (1/π²) ∫ k² D̃(k) |ρ̃(k)|² (1 − sinc kd) dk.
    pub fn pair_rate_kspace(
        &self,
        density: &MassDensity,
        d: f64,
        rel_tol: f64,
    ) -> Result<Quadrature> {
        let k_max = density.k_cutoff(rel_tol * 1e-2)?;
        density.radial_k_integral(
            |k| k * k * self.decoherence_ft(k) * one_minus_sinc(k * d) / (PI * PI),
            k_max,
            &[d],
            rel_tol,
        )
    }

    /// Two-branch rate. The minimal kernel reduces to (G/ħ)[S(0) − S(d)].
    pub fn pair_rate(&self, density: &MassDensity, d: f64) -> Result<f64> {
        match self.choice {
            TDChoice::Minimal => {
                let s0 = density.pair_overlap(0.0)?;
                let sd = density.pair_overlap(d)?;
                Ok(self.constants.g / self.constants.hbar * (s0 - sd))
            }
            TDChoice::Custom { .. } => Ok(self.pair_rate_kspace(density, d, 1e-9)?.value),
        }
    }
}

/// Position-space decoherence kernel D(r).
pub fn td_decoherence_kernel(kernel: &TDKernel, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("r", format!("must be positive, got {r}")));
    }
    match &kernel.choice {
        TDChoice::Minimal => Ok(kernel.constants.g / (2.0 * kernel.constants.hbar * r)),
        TDChoice::Custom { k_max: None, .. } => Err(Error::UnsupportedKernel(
            "custom kernel needs k_max to be transformed to position space".into(),
        )),
        TDChoice::Custom {
            k_max: Some(k_max), ..
        } => {
            let f = |k: f64| k * k * kernel.decoherence_ft(k) * sinc(k * r);
            let panel = 0.5 * PI / r;
            let q = crate::physcore::quad::integrate_panels(&f, 0.0, *k_max, panel, 1e-10);
            Ok(q.value / (2.0 * PI * PI))
        }
    }
}
