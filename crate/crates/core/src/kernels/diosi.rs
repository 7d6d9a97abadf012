//! Diósi's white-noise gravitational potential.

use crate::physcore::Constants;
use crate::{Error, Result};

/// Spatial part of the potential correlator, E[φ(r,t)φ(r',t')] =
/// Għ/|r−r'| · δ(t−t'). The time delta is implicit: engines treat the noise
/// as Markovian.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiosiKernel {
    pub constants: Constants,
}

impl DiosiKernel {
    pub fn new(constants: Constants) -> Self {
        DiosiKernel { constants }
    }

    pub fn correlator(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            return Err(Error::Divergence);
        }
        if !(r > 0.0) {
            return Err(Error::domain("r", format!("must be positive, got {r}")));
        }
        Ok(self.constants.g * self.constants.hbar / r)
    }

    /// Coefficient multiplying S(0)−S(d) in the two-branch decay rate.
    pub fn rate_prefactor(&self) -> f64 {
        self.constants.g / self.constants.hbar
    }
}
