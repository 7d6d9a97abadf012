//! Typed scenario settings built from a [`RawConfig`], and the preset
//! catalog.

use super::config::RawConfig;
use crate::error::{Error, Result};
use crate::kernels::adler::{AdlerKernel, AdlerTable};
use crate::kernels::karolyhazy::KarolyhazyKernel;
use crate::kernels::td::TDKernel;
use crate::lindblad::{GaussianOscillatorState, KtmParams};
use crate::physcore::{Constants, MassDensity};
use crate::rates::{ball_mass, silicon_lattice, SuperpositionSpec, DEFAULT_DENSITY};
use crate::snsolver::SnParams;
use crate::unravel::TrajectoryConfig;
use nalgebra::Vector4;
use num_complex::Complex64;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    Karolyhazy,
    Diosi,
    Penrose,
    Td,
    Adler,
    Ktm,
    Sn,
}

impl std::str::FromStr for ModelTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "karolyhazy" | "k" => ModelTag::Karolyhazy,
            "diosi" | "dp" => ModelTag::Diosi,
            "penrose" => ModelTag::Penrose,
            "td" | "tilloy-diosi" => ModelTag::Td,
            "adler" => ModelTag::Adler,
            "ktm" => ModelTag::Ktm,
            "sn" | "schrodinger-newton" => ModelTag::Sn,
            other => {
                return Err(Error::Config(format!(
                "[model] tag = `{other}` is not one of karolyhazy, dp, penrose, td, adler, ktm, sn"
            )))
            }
        })
    }
}

impl ModelTag {
    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Karolyhazy => "karolyhazy",
            ModelTag::Diosi => "dp",
            ModelTag::Penrose => "penrose",
            ModelTag::Td => "td",
            ModelTag::Adler => "adler",
            ModelTag::Ktm => "ktm",
            ModelTag::Sn => "sn",
        }
    }
}

/// A validated view over the raw configuration.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub raw: RawConfig,
    pub seed: u64,
    pub constants: Constants,
}

impl ScenarioConfig {
    pub fn new(raw: RawConfig, seed: u64) -> Self {
        ScenarioConfig {
            raw,
            seed,
            constants: Constants::si(),
        }
    }

    pub fn model(&self) -> Result<Option<ModelTag>> {
        self.raw.raw("model", "tag").map(str::parse).transpose()
    }

    pub fn require_model(&self) -> Result<ModelTag> {
        self.model()?
            .ok_or_else(|| Error::Config("missing required key [model] tag".into()))
    }

    fn positive(&self, section: &str, key: &'static str) -> Result<Option<f64>> {
        match self.raw.get::<f64>(section, key)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(Error::Config(format!(
                "[{section}] {key} = {v}: must be positive and finite"
            ))),
            other => Ok(other),
        }
    }

    fn require_positive(&self, section: &str, key: &'static str) -> Result<f64> {
        self.positive(section, key)?
            .ok_or_else(|| Error::Config(format!("missing required key [{section}] {key}")))
    }

    /// `[density]`: kind = point | sphere | gaussian | lattice. A sphere may
    /// give `density` instead of `mass`.
    pub fn density(&self) -> Result<MassDensity> {
        let kind = self.raw.get_or("density", "kind", "sphere".to_string())?;
        let mass = || -> Result<f64> {
            if let Some(m) = self.positive("density", "mass")? {
                return Ok(m);
            }
            let r = self.require_positive("density", "radius")?;
            let rho = self
                .positive("density", "density")?
                .unwrap_or(DEFAULT_DENSITY);
            Ok(ball_mass(r, rho))
        };
        let d = match kind.as_str() {
            "point" => MassDensity::PointMass { mass: mass()? },
            "sphere" => MassDensity::UniformSphere {
                mass: mass()?,
                radius: self.require_positive("density", "radius")?,
            },
            "gaussian" => MassDensity::GaussianBall {
                mass: mass()?,
                r0: self.require_positive("density", "r0")?,
            },
            "lattice" => {
                let r0 = self
                    .positive("density", "r0")?
                    .unwrap_or(crate::rates::NUCLEAR_WIDTH);
                silicon_lattice(mass()?, r0)?
            }
            other => {
                return Err(Error::Config(format!(
                    "[density] kind = `{other}` is not one of point, sphere, gaussian, lattice"
                )))
            }
        };
        d.validate()?;
        Ok(d)
    }

    pub fn superposition(&self) -> Result<SuperpositionSpec> {
        let density = self.density()?;
        if let Some(v) = self.raw.vectors("superposition", "displacements")? {
            return SuperpositionSpec::new(density, v);
        }
        let d = self.require_positive("superposition", "separation")?;
        SuperpositionSpec::two_branch(density, d)
    }

    /// Branch amplitudes √w_i from `[superposition] weights` (normalized);
    /// equal weights by default.
    pub fn amplitudes(&self, branches: usize) -> Result<Vec<Complex64>> {
        let w = self
            .raw
            .list("superposition", "weights")?
            .unwrap_or_else(|| vec![1.0; branches]);
        if w.len() != branches {
            return Err(Error::Config(format!(
                "[superposition] weights has {} entries for {branches} branches",
                w.len()
            )));
        }
        if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(Error::Config(
                "[superposition] weights must be nonnegative".into(),
            ));
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Config("[superposition] weights sum to zero".into()));
        }
        Ok(w.iter()
            .map(|x| Complex64::new((x / total).sqrt(), 0.0))
            .collect())
    }

    pub fn karolyhazy_kernel(&self) -> Result<KarolyhazyKernel> {
        let lc = self.positive("kernel", "lambda_c")?.unwrap_or(1e-15);
        KarolyhazyKernel::new(lc, self.constants)
    }

    pub fn td_kernel(&self) -> Result<TDKernel> {
        let choice = self.raw.get_or("kernel", "gamma", "minimal".to_string())?;
        if choice != "minimal" {
            return Err(Error::Config(format!(
                "[kernel] gamma = `{choice}`: only `minimal` is selectable from a config file"
            )));
        }
        match self.positive("kernel", "gamma_scale")? {
            Some(f) => Ok(TDKernel::scaled_minimal(self.constants, f)),
            None => Ok(TDKernel::minimal(self.constants)),
        }
    }

    pub fn adler_kernel(&self) -> Result<AdlerKernel> {
        let xi = self.raw.require::<f64>("kernel", "xi")?;
        match self.raw.raw("kernel", "table") {
            Some(path) => AdlerKernel::custom(xi, AdlerTable::from_path(&PathBuf::from(path))?),
            None => {
                AdlerKernel::white_gaussian(xi, self.positive("kernel", "r_c")?.unwrap_or(1e-7))
            }
        }
    }

    pub fn t_end(&self) -> Result<f64> {
        self.require_positive("solver", "t_end")
    }

    /// Number of output samples of a time series.
    pub fn points(&self) -> Result<usize> {
        let n = self.raw.get_or("solver", "points", 100usize)?;
        if n == 0 {
            return Err(Error::Config("[solver] points must be at least 1".into()));
        }
        Ok(n)
    }

    pub fn dt(&self) -> Result<Option<f64>> {
        self.positive("solver", "dt")
    }

    pub fn trajectory_config(&self) -> Result<TrajectoryConfig> {
        let dt = self.require_positive("solver", "dt")?;
        let t_end = self.t_end()?;
        let steps = (t_end / dt).round();
        if !(1.0..1e9).contains(&steps) {
            return Err(Error::Config(format!(
                "[solver] t_end/dt = {steps} steps is out of range"
            )));
        }
        let ensemble = self.raw.get_or("solver", "ensemble", 1000usize)?;
        let mut cfg = TrajectoryConfig::new(dt, steps as usize, self.seed, ensemble)
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(stride) = self.raw.get::<usize>("solver", "record_stride")? {
            cfg.record_stride = stride;
        }
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// `[ktm]` in the unit system the values are given in.
    pub fn ktm_state(&self) -> Result<GaussianOscillatorState> {
        let hbar = self.positive("ktm", "hbar")?.unwrap_or(1.0);
        let masses = self.raw.array::<2>("ktm", "masses")?.unwrap_or([1.0, 1.0]);
        let omega = self.raw.array::<2>("ktm", "omega")?.unwrap_or([1.0, 1.2]);
        let coupling = self.raw.get_or("ktm", "coupling", 0.1)?;
        let params = KtmParams::with_renormalized(hbar, masses, omega, coupling)?;
        let mean = self
            .raw
            .array::<4>("ktm", "mean")?
            .unwrap_or([1.0, 0.0, 0.0, 0.0]);
        let state = GaussianOscillatorState::coherent(params, Vector4::from(mean));
        state.check()?;
        Ok(state)
    }

    pub fn sn_params(&self) -> Result<SnParams> {
        let s = SnParams::scaled();
        let g = self.raw.get_or("sn", "g", s.g)?;
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::Config(format!("[sn] g = {g}: must be nonnegative")));
        }
        Ok(SnParams {
            hbar: self.positive("sn", "hbar")?.unwrap_or(s.hbar),
            mass: self.positive("sn", "mass")?.unwrap_or(s.mass),
            g,
            softening: self.positive("sn", "softening")?,
        })
    }

    pub fn sn_positive(&self, key: &'static str) -> Result<Option<f64>> {
        self.positive("sn", key)
    }

    pub fn kernel_positive(&self, key: &'static str) -> Result<Option<f64>> {
        self.positive("kernel", key)
    }
}

/// A catalogued scenario reproducing one of the reference examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    /// Source of the reference numbers the checks compare against.
    pub anchor: &'static str,
    pub summary: &'static str,
    pub config: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "proton-karolyhazy",
        anchor: "Karolyhazy model, proton example: a ~ 1e23 m, tau ~ 1e53 s",
        summary: "coherence cell of a free proton",
        config: "[model]\ntag = karolyhazy\n[density]\nkind = point\nmass = 1.67262192369e-27\n",
    },
    Preset {
        name: "sphere-karolyhazy",
        anchor: "Karolyhazy model, 1 cm sphere example: a ~ 1e-18 m, tau ~ 1e-4 s",
        summary: "coherence cell of a 1 cm ball at 1 g/cm^3",
        config: "[model]\ntag = karolyhazy\n[density]\nkind = sphere\nradius = 1e-2\ndensity = 1000\n",
    },
    Preset {
        name: "penrose-1e-12kg",
        anchor: "Penrose argument, uniform sphere m = 1e-12 kg, R = 5 um, d >> R: tau ~ 1e-6 s",
        summary: "Penrose and Diosi-Penrose times and their 8*pi ratio",
        config: "[model]\ntag = penrose\n[density]\nkind = sphere\nmass = 1e-12\nradius = 5e-6\n[superposition]\nseparation = 1e-3\n",
    },
    Preset {
        name: "penrose-lattice",
        anchor: "Penrose argument, nuclear mass concentration: tau ~ 1e-2 to 1e-3 s",
        summary: "Penrose time of a 1e-12 kg silicon crystal displaced by less than a lattice spacing",
        config: "[model]\ntag = penrose\n[density]\nkind = lattice\nmass = 1e-12\nr0 = 1e-14\n[superposition]\nseparation = 1e-11\n",
    },
    Preset {
        name: "td-minimal",
        anchor: "Tilloy-Diosi model with the minimal gamma reduces to the Diosi-Penrose rate",
        summary: "TD minimal-kernel rate against the DP rate",
        config: "[model]\ntag = td\n[density]\nkind = sphere\nmass = 1e-14\nradius = 1e-6\n[superposition]\nseparation = 3e-6\n",
    },
    Preset {
        name: "diosi-collapse",
        anchor: "Diosi collapse equation: outcomes follow the Born weights",
        summary: "collapse frequencies for weights 0.3/0.7",
        config: "[model]\ntag = dp\n[density]\nkind = sphere\nmass = 1e-14\nradius = 1e-6\n[superposition]\nseparation = 2e-6\nweights = 0.3, 0.7\n[solver]\nt_end = 0.5\ndt = 1e-4\nensemble = 2000\n",
    },
    Preset {
        name: "ktm-pair",
        anchor: "Kafri-Taylor-Milburn oscillators: momentum diffusion at rate hbar*K",
        summary: "two coupled oscillators under continuous gravitational measurement",
        config: "[model]\ntag = ktm\n[ktm]\nhbar = 1\nmasses = 1, 1\nomega = 1, 1.2\ncoupling = 0.1\nmean = 1, 0, 0, 0\n[solver]\nt_end = 2\ndt = 0.002\nensemble = 1000\n",
    },
    Preset {
        name: "sn-ground",
        anchor: "Schrodinger-Newton equation: ground-state width ~ hbar^2/(G m^3)",
        summary: "self-gravitating ground state in scaled units",
        config: "[model]\ntag = sn\n[sn]\nmode = ground\n",
    },
    Preset {
        name: "sn-epr",
        anchor: "Schrodinger-Newton equation: the two halves of a split packet attract",
        summary: "split packet with self-gravity on and off",
        config: "[model]\ntag = sn\n[sn]\nmode = epr\n",
    },
    Preset {
        name: "dp-bounds",
        anchor: "Experimental lower bounds on the DP radius R0",
        summary: "bounds violated by R0 = 1e-13 m",
        config: "[model]\ntag = dp\n",
    },
];

pub fn find_preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        Error::Config(format!(
            "unknown preset `{name}` (available: {})",
            names.join(", ")
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ScenarioConfig {
        ScenarioConfig::new(RawConfig::parse(text).unwrap(), 1)
    }

    #[test]
    fn presets_parse_and_build() {
        for p in PRESETS {
            let c = cfg(p.config);
            let tag = c.require_model().unwrap();
            if matches!(tag, ModelTag::Penrose | ModelTag::Td) {
                c.superposition().unwrap();
            }
        }
    }

    #[test]
    fn negative_mass_is_a_validation_error() {
        let c = cfg("[density]\nkind = sphere\nmass = -1\nradius = 1e-6\n");
        let e = c.density().unwrap_err();
        assert!(e.is_validation() && e.to_string().contains("mass"), "{e}");
    }

    #[test]
    fn weights_must_match_branches() {
        let c = cfg("[superposition]\nweights = 1, 2, 3\n");
        assert!(c.amplitudes(2).is_err());
        let a = cfg("[superposition]\nweights = 0.3, 0.7\n")
            .amplitudes(2)
            .unwrap();
        assert!((a[0].norm_sqr() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn sphere_mass_from_density() {
        let c = cfg("[density]\nkind = sphere\nradius = 1e-2\n");
        let m = c.density().unwrap().total_mass();
        assert!((m - 4.0 / 3.0 * std::f64::consts::PI * 1e-6 * 1000.0).abs() < 1e-15);
    }
}
