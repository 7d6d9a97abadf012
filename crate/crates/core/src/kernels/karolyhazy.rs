//! Karolyhazy's stochastic metric: mode spectrum, closed-form correlator and
//! a sampler for field realizations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::hypergeometric::{hyp1f2, MAX_ABS_Z};
use crate::physcore::{quad, Constants};
use crate::{Error, Result};

const A: f64 = 2.0 / 3.0;
const B1: f64 = 1.5;
const B2: f64 = 5.0 / 3.0;

/// Karolyhazy metric-fluctuation kernel with cutoff length λ_c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KarolyhazyKernel {
    pub lambda_c: f64,
    pub constants: Constants,
}

impl KarolyhazyKernel {
    pub fn new(lambda_c: f64, constants: Constants) -> Result<Self> {
        if !(lambda_c > 0.0 && lambda_c.is_finite()) {
            return Err(Error::domain(
                "lambda_c",
                format!("must be positive, got {lambda_c}"),
            ));
        }
        Ok(KarolyhazyKernel {
            lambda_c,
            constants,
        })
    }

    /// Mode cutoff 2π/λ_c.
    pub fn k_cutoff(&self) -> f64 {
        2.0 * PI / self.lambda_c
    }

    /// E|c(k)|² = ℓ_P^{4/3} k^{-5/3} below the cutoff, zero above.
    pub fn spectrum(&self, k: f64) -> f64 {
        if k > self.k_cutoff() || k <= 0.0 {
            0.0
        } else {
            self.constants.planck_length().powf(4.0 / 3.0) * k.powf(-5.0 / 3.0)
        }
    }

    /// Dispersion ω = c|k|.
    pub fn omega(&self, k: f64) -> f64 {
        self.constants.c * k
    }

    fn amplitude(&self) -> f64 {
        let lp = self.constants.planck_length();
        (lp.powi(4) / (32.0 * PI * PI * self.lambda_c.powi(4))).cbrt()
    }

    fn hyp_arg(&self, x: f64) -> f64 {
        -PI * PI * x * x / (self.lambda_c * self.lambda_c)
    }

    /// x·₁F₂(2/3; 3/2, 5/3; −π²x²/λ_c²), odd in x.
    fn odd_part(&self, x: f64) -> Result<f64> {
        Ok(x * hyp1f2(A, B1, B2, self.hyp_arg(x))?)
    }

    /// d/dx of [`Self::odd_part`].
    fn odd_part_derivative(&self, x: f64) -> Result<f64> {
        let z = self.hyp_arg(x);
        let f = hyp1f2(A, B1, B2, z)?;
        let df = A / (B1 * B2) * hyp1f2(A + 1.0, B1 + 1.0, B2 + 1.0, z)?;
        Ok(f + 2.0 * z * df)
    }

    /// Largest |r ± cτ| the closed form supports.
    pub fn max_argument(&self) -> f64 {
        MAX_ABS_Z.sqrt() * self.lambda_c / PI
    }

    /// Correlation C(r, τ) = E[γ(x,t)γ(x',t')] with r = |x−x'|, τ = t−t'.
    pub fn correlator(&self, r: f64, tau: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::domain("r", format!("must be nonnegative, got {r}")));
        }
        let ct = self.constants.c * tau.abs();
        if r + ct > self.max_argument() {
            return Err(Error::domain(
                "r",
                format!(
                    "|r| + c|τ| = {:e} m exceeds the supported {:e} m",
                    r + ct,
                    self.max_argument()
                ),
            ));
        }
        let amp = 3.0 * self.amplitude();
        if r < 1e-7 * self.lambda_c {
            // limit r → 0: (g(cτ+r) − g(cτ−r))/r → 2g'(cτ)
            return Ok(2.0 * amp * self.odd_part_derivative(ct)?);
        }
        Ok(amp / r * (self.odd_part(r + ct)? + self.odd_part(r - ct)?))
    }

    /// C(r, τ) from the mode spectrum,
    /// (ℓ_P^{4/3}/π²) ∫₀^{k_c} k^{1/3} sinc(kr) cos(ckτ) dk.
    pub fn correlator_spectral(&self, r: f64, tau: f64) -> f64 {
        let lp43 = self.constants.planck_length().powf(4.0 / 3.0);
        let ct = self.constants.c * tau;
        let kc = self.k_cutoff();
        let f = |k: f64| k.cbrt() * crate::physcore::sinc(k * r) * (k * ct).cos();
        let panel = (0.5 * PI / r.max(ct.abs()).max(self.lambda_c)).min(kc);
        // k^{1/3} is singular in slope at 0, so the first panel uses k = s³
        let first = panel.min(kc);
        let g = |s: f64| 3.0 * s * s * f(s * s * s);
        let head = quad::integrate(&g, 0.0, first.cbrt(), 0.0, 1e-13).value;
        let tail = quad::integrate_panels(&f, first, kc, panel, 1e-12).value;
        lp43 / (PI * PI) * (head + tail)
    }
}

/// One Fourier mode of a sampled field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMode {
    pub k: [f64; 3],
    pub coeff: Complex64,
    /// Variance E|c|² this mode was drawn with.
    pub variance: f64,
}

/// A realization γ(x,t) = ℓ^{-3/2} Σ_k (c(k)e^{i(k·x−ωt)} + c.c.).
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    pub box_length: f64,
    /// Bloch twist added to every grid wavevector (zero for a periodic box).
    pub twist: [f64; 3],
    pub modes: Vec<FieldMode>,
    pub seed: u64,
    pub c: f64,
}

impl FieldRealization {
    pub fn gamma(&self, x: [f64; 3], t: f64) -> f64 {
        let mut acc = quad::Neumaier::default();
        for m in &self.modes {
            let kk = (m.k[0] * m.k[0] + m.k[1] * m.k[1] + m.k[2] * m.k[2]).sqrt();
            let phase = m.k[0] * x[0] + m.k[1] * x[1] + m.k[2] * x[2] - self.c * kk * t;
            let (s, co) = phase.sin_cos();
            acc.add(2.0 * (m.coeff.re * co - m.coeff.im * s));
        }
        acc.total() / self.box_length.powf(1.5)
    }
}

/// Options for [`sample_field`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSamplerOptions {
    pub box_length: f64,
    pub mode_cap: usize,
    /// Random Bloch twist per realization. Averaging the grid sum over the
    /// twist reproduces the continuum k-integral exactly; the mode at the
    /// origin cell is then drawn by importance sampling so its variance stays
    /// finite despite the k^{-5/3} spectrum. Without twist the grid is the
    /// periodic one and the k = 0 mode is dropped.
    pub twisted: bool,
}

/// ∫_{[-1,1]³} |u|^{-5/3} d³u, via the six cube faces.
fn unit_cube_spectral_weight() -> f64 {
    let (x, w) = quad::gauss_legendre(48);
    let mut s = 0.0;
    for (yi, wy) in x.iter().zip(&w) {
        for (zi, wz) in x.iter().zip(&w) {
            s += wy * wz * (1.0 + yi * yi + zi * zi).powf(-5.0 / 6.0);
        }
    }
    6.0 * 0.75 * s
}

/// Draws a sample of the metric fluctuation field from the Karolyhazy
/// spectrum, deterministic in `seed`.
pub fn sample_field_realization(
    kernel: &KarolyhazyKernel,
    box_length: f64,
    mode_cap: usize,
    seed: u64,
) -> Result<FieldRealization> {
    sample_field(
        kernel,
        FieldSamplerOptions {
            box_length,
            mode_cap,
            twisted: true,
        },
        seed,
    )
}

pub fn sample_field(
    kernel: &KarolyhazyKernel,
    opts: FieldSamplerOptions,
    seed: u64,
) -> Result<FieldRealization> {
    let ell = opts.box_length;
    if !(ell >= 2.0 * kernel.lambda_c) {
        return Err(Error::Config(format!(
            "box length {ell:e} m must be at least 2 λ_c = {:e} m",
            2.0 * kernel.lambda_c
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dk = 2.0 * PI / ell;
    let half = 0.5 * dk;
    let kc = kernel.k_cutoff();
    let twist = if opts.twisted {
        [
            rng.random_range(-half..half),
            rng.random_range(-half..half),
            rng.random_range(-half..half),
        ]
    } else {
        [0.0; 3]
    };
    let nmax = (kc / dk).ceil() as i64 + 1;
    let mut wavevectors = Vec::new();
    for i in -nmax..=nmax {
        for j in -nmax..=nmax {
            for l in -nmax..=nmax {
                if i == 0 && j == 0 && l == 0 {
                    continue;
                }
                let k = [
                    i as f64 * dk + twist[0],
                    j as f64 * dk + twist[1],
                    l as f64 * dk + twist[2],
                ];
                if (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt() <= kc {
                    wavevectors.push(k);
                }
            }
        }
    }
    let total = wavevectors.len() + usize::from(opts.twisted);
    if total > opts.mode_cap {
        return Err(Error::Config(format!(
            "{total} modes exceed the mode cap {}",
            opts.mode_cap
        )));
    }
    let draw = |variance: f64, rng: &mut ChaCha8Rng| {
        let s = (0.5 * variance).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    };
    let mut modes = Vec::with_capacity(total);
    for k in wavevectors {
        let v = kernel.spectrum((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt());
        modes.push(FieldMode {
            k,
            coeff: draw(v, &mut rng),
            variance: v,
        });
    }
    if opts.twisted {
        // origin cell: q ∝ |q|^{-5/3} on the cube, variance Z / V_cell
        let lp43 = kernel.constants.planck_length().powf(4.0 / 3.0);
        let z = lp43 * half.powf(4.0 / 3.0) * unit_cube_spectral_weight();
        let v = z / dk.powi(3);
        let rmax = 3f64.sqrt() * half;
        let q = loop {
            let rho = rmax * rng.random::<f64>().powf(0.75);
            let cz: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let sz = (1.0 - cz * cz).sqrt();
            let q = [rho * sz * phi.cos(), rho * sz * phi.sin(), rho * cz];
            if q.iter().all(|c| c.abs() <= half) {
                break q;
            }
        };
        modes.push(FieldMode {
            k: q,
            coeff: draw(v, &mut rng),
            variance: v,
        });
    }
    Ok(FieldRealization {
        box_length: ell,
        twist,
        modes,
        seed,
        c: kernel.constants.c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel() -> KarolyhazyKernel {
        KarolyhazyKernel::new(1e-15, Constants::si()).unwrap()
    }

    #[test]
    fn zero_separation_limit() {
        let k = kernel();
        let lp = k.constants.planck_length();
        let expect = 6.0 * (lp.powi(4) / (32.0 * PI * PI * 1e-60)).cbrt();
        let c0 = k.correlator(0.0, 0.0).unwrap();
        assert!((c0 / expect - 1.0).abs() < 1e-12);
        let c6 = k.correlator(1e-6 * k.lambda_c, 0.0).unwrap();
        let c7 = k.correlator(1e-7 * k.lambda_c, 0.0).unwrap();
        assert!((c6 / expect - 1.0).abs() < 1e-8);
        assert!((c7 / expect - 1.0).abs() < (c6 / expect - 1.0).abs() + 1e-8);
    }

    #[test]
    fn symmetric_in_time_lag() {
        let k = kernel();
        let tau = 0.5 * k.lambda_c / k.constants.c;
        let a = k.correlator(k.lambda_c, tau).unwrap();
        let b = k.correlator(k.lambda_c, -tau).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn closed_form_matches_spectral_integral() {
        let k = kernel();
        let lc = k.lambda_c;
        for (r, tau) in [
            (0.0, 0.0),
            (0.3 * lc, 0.0),
            (lc, 0.2 * lc / k.constants.c),
            (2.5 * lc, 1.1 * lc / k.constants.c),
        ] {
            let closed = k.correlator(r, tau).unwrap();
            let spec = k.correlator_spectral(r, tau);
            let scale = k.correlator(0.0, 0.0).unwrap();
            assert!(
                ((closed - spec) / scale).abs() < 1e-8,
                "({r},{tau}): {closed} vs {spec}"
            );
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        let k = kernel();
        assert!(k.correlator(40.0 * k.lambda_c, 0.0).is_err());
        assert!(k.correlator(-1.0, 0.0).is_err());
    }

    #[test]
    fn same_seed_same_field() {
        let k = kernel();
        let a = sample_field_realization(&k, 4e-15, 10_000, 42).unwrap();
        let b = sample_field_realization(&k, 4e-15, 10_000, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_field_realization(&k, 4e-15, 10_000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn modes_above_cutoff_are_absent() {
        let k = kernel();
        let f = sample_field_realization(&k, 5e-15, 100_000, 1).unwrap();
        for m in &f.modes {
            let kk = (m.k[0].powi(2) + m.k[1].powi(2) + m.k[2].powi(2)).sqrt();
            assert!(kk <= k.k_cutoff());
        }
        assert_eq!(k.spectrum(1.0001 * k.k_cutoff()), 0.0);
    }

    #[test]
    fn small_box_and_mode_cap_rejected() {
        let k = kernel();
        assert!(matches!(
            sample_field_realization(&k, 1e-15, 1000, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            sample_field_realization(&k, 1e-14, 10, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn coefficient_statistics_on_periodic_grid() {
        // fixed k on the untwisted grid: E c = 0 and E|c|² = ℓ_P^{4/3} k^{-5/3}
        let k = kernel();
        let opts = FieldSamplerOptions {
            box_length: 3e-15,
            mode_cap: 10_000,
            twisted: false,
        };
        let m = 10_000;
        let (mut re, mut abs2) = (Vec::with_capacity(m), Vec::with_capacity(m));
        for seed in 0..m as u64 {
            let f = sample_field(&k, opts, seed).unwrap();
            let mode = f.modes[0];
            re.push(mode.coeff.re);
            abs2.push(mode.coeff.norm_sqr());
        }
        let kk = {
            let f = sample_field(&k, opts, 0).unwrap();
            let q = f.modes[0].k;
            (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()
        };
        let expect = k.spectrum(kk);
        let mean_abs2 = abs2.iter().sum::<f64>() / m as f64;
        let sd_abs2 =
            (abs2.iter().map(|x| (x - mean_abs2).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
        assert!((mean_abs2 - expect).abs() < 3.0 * sd_abs2 / (m as f64).sqrt());
        let mean_re = re.iter().sum::<f64>() / m as f64;
        let sd_re = (re.iter().map(|x| (x - mean_re).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
        assert!(mean_re.abs() < 3.0 * sd_re / (m as f64).sqrt());
    }
}
