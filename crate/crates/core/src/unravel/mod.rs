//! Stochastic unravelings: collapse trajectories on a pointer basis and the
//! monitored oscillator pair with feedback.

mod diosi;
mod ktm;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub use diosi::{run_diosi_collapse, run_diosi_ensemble, CollapseStats, DiosiEnsemble};
pub use ktm::{run_ktm_ensemble, run_ktm_trajectory, KtmEnsemble, KtmTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    /// Time step (s).
    pub dt: f64,
    pub steps: usize,
    pub seed: u64,
    /// Number of trajectories.
    pub ensemble: usize,
    pub scheme: Scheme,
    /// Record ensemble observables every this many steps.
    pub record_stride: usize,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, steps: usize, seed: u64, ensemble: usize) -> Result<Self> {
        let cfg = TrajectoryConfig {
            dt,
            steps,
            seed,
            ensemble,
            scheme: Scheme::EulerMaruyama,
            record_stride: (steps / 100).max(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if self.ensemble == 0 {
            return Err(Error::domain("ensemble", "need at least one trajectory"));
        }
        if self.record_stride == 0 {
            return Err(Error::domain("record_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Stream for trajectory `index`: the master seed keys the generator,
    /// the index selects an independent stream.
    pub fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    pub(crate) fn record_times(&self) -> Vec<f64> {
        (0..=self.steps)
            .step_by(self.record_stride)
            .map(|s| s as f64 * self.dt)
            .collect()
    }
}

/// Wilson score interval for a binomial proportion at `z` standard errors.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
