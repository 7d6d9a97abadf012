//! Physical constants, unit handling and mass-density models.

mod density;
pub mod quad;
mod units;

pub(crate) use density::{one_minus_sinc, sinc};
pub use density::{LatticeLayout, LatticeSite, MassDensity, NucleonLattice};
pub use units::{UnitMode, UnitSystem};

/// Fundamental constants in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Newton's constant (m³·kg⁻¹·s⁻²).
    pub g: f64,
    /// Speed of light (m/s).
    pub c: f64,
}

/// CODATA 2018.
pub const HBAR: f64 = 1.054_571_817e-34;
pub const G_NEWTON: f64 = 6.674_30e-11;
pub const C_LIGHT: f64 = 299_792_458.0;
/// Proton mass (kg).
pub const PROTON_MASS: f64 = 1.672_621_923_69e-27;
/// Atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;

impl Default for Constants {
    fn default() -> Self {
        Self::si()
    }
}

impl Constants {
    pub const fn si() -> Self {
        Constants {
            hbar: HBAR,
            g: G_NEWTON,
            c: C_LIGHT,
        }
    }

    /// Checks strict positivity of every constant.
    pub fn new(hbar: f64, g: f64, c: f64) -> crate::Result<Self> {
        for (name, v) in [("hbar", hbar), ("G", g), ("c", c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::Error::domain(
                    name,
                    format!("must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(Constants { hbar, g, c })
    }

    /// ℓ_P = sqrt(ħG/c³).
    pub fn planck_length(&self) -> f64 {
        (self.hbar * self.g / self.c.powi(3)).sqrt()
    }

    /// t_P = ℓ_P / c.
    pub fn planck_time(&self) -> f64 {
        self.planck_length() / self.c
    }
}
