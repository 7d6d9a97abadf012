//! Adler's complex metric-fluctuation kernels.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::physcore::{one_minus_sinc, Constants, LatticeLayout, MassDensity};
use crate::{Error, Result};

/// Correlator D(x, t) tabulated on a rectangular grid of separations
/// x = |x| ≥ 0 and lags t ≥ 0, with bilinear interpolation. Isotropy and
/// D(x,t) = D(−x,−t) make D even in t, so negative lags fold back.
#[derive(Debug, Clone, PartialEq)]
pub struct AdlerTable {
    xs: Vec<f64>,
    ts: Vec<f64>,
    values: Vec<Complex64>,
}

impl AdlerTable {
    pub fn new(xs: Vec<f64>, ts: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if xs.len() < 2 || ts.len() < 2 {
            return Err(Error::Config(
                "kernel table needs at least a 2×2 grid".into(),
            ));
        }
        if values.len() != xs.len() * ts.len() {
            return Err(Error::Config(format!(
                "kernel table has {} values for a {}×{} grid",
                values.len(),
                xs.len(),
                ts.len()
            )));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&xs) || !increasing(&ts) || xs[0] < 0.0 || ts[0] < 0.0 {
            return Err(Error::Config(
                "kernel grid coordinates must be nonnegative and strictly increasing".into(),
            ));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::Config(
                "kernel table contains non-finite values".into(),
            ));
        }
        Ok(AdlerTable { xs, ts, values })
    }

    /// Parses `x,t,d_re,d_im` rows; a header line and `#` comments are
    /// skipped. Every (x, t) pair of the grid must appear exactly once.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> =
                fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 4 => rows.push([v[0], v[1], v[2], v[3]]),
                Err(_) if rows.is_empty() => continue,
                _ => {
                    return Err(Error::Config(format!(
                        "kernel table line {}: expected four numbers x,t,d_re,d_im",
                        lineno + 1
                    )))
                }
            }
        }
        let mut xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mut ts: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        for v in [&mut xs, &mut ts] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
        let nt = ts.len();
        let mut values = vec![None; xs.len() * nt];
        for r in &rows {
            let i = xs.binary_search_by(|x| x.total_cmp(&r[0])).unwrap();
            let j = ts.binary_search_by(|t| t.total_cmp(&r[1])).unwrap();
            if values[i * nt + j]
                .replace(Complex64::new(r[2], r[3]))
                .is_some()
            {
                return Err(Error::Config(format!(
                    "duplicate kernel entry at x={}, t={}",
                    r[0], r[1]
                )));
            }
        }
        let values: Option<Vec<Complex64>> = values.into_iter().collect();
        let values = values
            .ok_or_else(|| Error::Config("kernel table does not fill a rectangular grid".into()))?;
        AdlerTable::new(xs, ts, values)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        AdlerTable::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn max_separation(&self) -> f64 {
        *self.xs.last().unwrap()
    }

    pub fn max_lag(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn lags(&self) -> &[f64] {
        &self.ts
    }

    pub fn eval(&self, x: f64, t: f64) -> Result<Complex64> {
        let (x, t) = (x.abs(), t.abs());
        let locate = |grid: &[f64], v: f64, what: &str| -> Result<(usize, f64)> {
            if v < grid[0] || v > *grid.last().unwrap() {
                return Err(Error::UnsupportedKernel(format!(
                    "kernel table does not cover {what} = {v:e}"
                )));
            }
            let i = grid.partition_point(|g| *g <= v).clamp(1, grid.len() - 1) - 1;
            Ok((i, (v - grid[i]) / (grid[i + 1] - grid[i])))
        };
        let (i, fx) = locate(&self.xs, x, "separation")?;
        let (j, ft) = locate(&self.ts, t, "lag")?;
        let nt = self.ts.len();
        let at = |a: usize, b: usize| self.values[a * nt + b];
        Ok(at(i, j) * ((1.0 - fx) * (1.0 - ft))
            + at(i + 1, j) * (fx * (1.0 - ft))
            + at(i, j + 1) * ((1.0 - fx) * ft)
            + at(i + 1, j + 1) * (fx * ft))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdlerPreset {
    /// D(x, t) = exp(−x²/4r_C²) δ(t): real, white, Gaussian in space.
    WhiteGaussian {
        r_c: f64,
    },
    Custom(AdlerTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdlerKernel {
    /// Dimensionless coupling ξ.
    pub strength: f64,
    pub preset: AdlerPreset,
    pub constants: Constants,
}

impl AdlerKernel {
    pub fn white_gaussian(strength: f64, r_c: f64) -> Result<Self> {
        if !(r_c > 0.0 && r_c.is_finite()) {
            return Err(Error::domain("r_c", format!("must be positive, got {r_c}")));
        }
        AdlerKernel::check_strength(strength)?;
        Ok(AdlerKernel {
            strength,
            preset: AdlerPreset::WhiteGaussian { r_c },
            constants: Constants::si(),
        })
    }

    pub fn custom(strength: f64, table: AdlerTable) -> Result<Self> {
        AdlerKernel::check_strength(strength)?;
        Ok(AdlerKernel {
            strength,
            preset: AdlerPreset::Custom(table),
            constants: Constants::si(),
        })
    }

    fn check_strength(strength: f64) -> Result<()> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::domain(
                "strength",
                format!("must be nonnegative, got {strength}"),
            ));
        }
        Ok(())
    }

    /// Spatial profile of the white preset.
    pub fn white_profile(r_c: f64, x: f64) -> f64 {
        (-x * x / (4.0 * r_c * r_c)).exp()
    }

    /// Discrete Fourier transform of the white preset's 1D spatial profile
    /// on `n` periodic points spaced `dx`. Non-negative values certify the
    /// profile as a valid covariance on that grid.
    pub fn white_spectrum_on_grid(&self, n: usize, dx: f64) -> Result<Vec<f64>> {
        let AdlerPreset::WhiteGaussian { r_c } = self.preset else {
            return Err(Error::UnsupportedKernel(
                "spectrum check applies to the white preset".into(),
            ));
        };
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| {
                let m = if j <= n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                Complex64::new(Self::white_profile(r_c, m * dx) * dx, 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let peak = buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if buf.iter().any(|c| c.im.abs() > 1e-9 * peak) {
            return Err(Error::NumericalInstability(
                "kernel spectrum has an imaginary part".into(),
            ));
        }
        Ok(buf.into_iter().map(|c| c.re).collect())
    }

    /// ∫∫ f(x−y) Δ(x) Δ(y) for the white preset's profile f, where Δ is the
    /// difference of the density and its copy displaced by `d`.
    pub fn white_branch_overlap(&self, density: &MassDensity, d: f64) -> Result<f64> {
        let AdlerPreset::WhiteGaussian { r_c } = self.preset else {
            return Err(Error::UnsupportedKernel("not a white kernel".into()));
        };
        // Gaussian blobs of width s convolved with the profile
        let blob = |m1m2: f64, s: f64, sep: f64| {
            let w = r_c * r_c + s * s;
            m1m2 * (r_c * r_c / w).powf(1.5) * (-sep * sep / (4.0 * w)).exp()
        };
        let pair = |sep: f64| -> Result<f64> {
            Ok(match density {
                MassDensity::PointMass { mass } => blob(mass * mass, 0.0, sep),
                MassDensity::GaussianBall { mass, r0 } => blob(mass * mass, *r0, sep),
                MassDensity::NucleonLattice(l) => match &l.layout {
                    LatticeLayout::Sites(sites) => {
                        let mut acc = crate::physcore::quad::Neumaier::default();
                        for a in sites {
                            for b in sites {
                                let v = [
                                    a.center[0] - b.center[0] - sep,
                                    a.center[1] - b.center[1],
                                    a.center[2] - b.center[2],
                                ];
                                let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                                acc.add(blob(a.mass * b.mass, l.r0, s));
                            }
                        }
                        acc.total()
                    }
                    LatticeLayout::CubicBall { .. } => {
                        return Err(Error::UnsupportedKernel(
                            "white kernel overlap needs explicit lattice sites".into(),
                        ))
                    }
                },
                MassDensity::UniformSphere { .. } => unreachable!(),
            })
        };
        if let MassDensity::UniformSphere { .. } = density {
            let norm = (4.0 * PI * r_c * r_c).powf(1.5);
            let k_max = (density.k_cutoff(1e-12)?).min(7.0 / r_c);
            let q = density.radial_k_integral(
                |k| k * k * norm * (-k * k * r_c * r_c).exp() * one_minus_sinc(k * d) / (PI * PI),
                k_max,
                &[d, r_c],
                1e-11,
            )?;
            return Ok(q.value);
        }
        Ok(2.0 * (pair(0.0)? - pair(d)?))
    }

    /// Real-part branch correlation B(s) = 2m²[D^R(0,s) − D^R(d,s)] for a
    /// custom table. Branches are treated as point-like against the
    /// table's spatial resolution. The D^I contribution cancels identically
    /// for a pointer pair of one rigid body, so it carries no phase.
    pub fn custom_branch_correlation(
        &self,
        density: &MassDensity,
        d: f64,
        lag: f64,
    ) -> Result<f64> {
        let AdlerPreset::Custom(table) = &self.preset else {
            return Err(Error::UnsupportedKernel("not a tabulated kernel".into()));
        };
        let m = density.total_mass();
        Ok(2.0 * m * m * (table.eval(0.0, lag)?.re - table.eval(d, lag)?.re))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_preset_is_even_and_positive_definite() {
        let k = AdlerKernel::white_gaussian(1.0, 1e-7).unwrap();
        for x in [0.0, 3e-8, 1e-7, 4e-7] {
            assert_eq!(
                AdlerKernel::white_profile(1e-7, x),
                AdlerKernel::white_profile(1e-7, -x)
            );
        }
        let spec = k.white_spectrum_on_grid(256, 2e-8).unwrap();
        let peak = spec.iter().cloned().fold(0.0, f64::max);
        assert!(spec.iter().all(|v| *v >= -1e-12 * peak));
    }

    #[test]
    fn sphere_overlap_kspace_agrees_with_gaussian_limit() {
        // a sphere much smaller than r_C behaves as a point
        let k = AdlerKernel::white_gaussian(1.0, 1e-7).unwrap();
        let m = 1e-15;
        let sphere = MassDensity::UniformSphere {
            mass: m,
            radius: 1e-10,
        };
        let point = MassDensity::PointMass { mass: m };
        for d in [5e-8, 2e-7, 1e-6] {
            let a = k.white_branch_overlap(&sphere, d).unwrap();
            let b = k.white_branch_overlap(&point, d).unwrap();
            assert!((a / b - 1.0).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn table_parsing_and_interpolation() {
        let csv = "x,t,d_re,d_im\n0,0,1,0\n1,0,0.5,0.1\n0,2,0.25,0\n1,2,0,0\n";
        let t = AdlerTable::from_csv(csv).unwrap();
        let v = t.eval(0.5, 1.0).unwrap();
        assert!((v.re - 0.4375).abs() < 1e-15 && (v.im - 0.025).abs() < 1e-15);
        assert_eq!(t.eval(-0.5, -1.0).unwrap(), v);
        assert!(matches!(t.eval(2.0, 0.0), Err(Error::UnsupportedKernel(_))));
    }

    #[test]
    fn ragged_tables_are_rejected() {
        assert!(AdlerTable::from_csv("0,0,1,0\n1,0,1,0\n0,1,1,0\n").is_err());
        assert!(AdlerTable::from_csv("0,0,1,0\n0,0,1,0\n1,0,1,0\n0,1,1,0\n1,1,1,0\n").is_err());
        assert!(AdlerTable::from_csv("0,0,1\n").is_err());
    }
}
