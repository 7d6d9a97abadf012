//! Lowest-order memory-kernel dynamics for static branches.
//!
//! With the free Hamiltonian dropped inside the memory integral, the
//! off-diagonal elements evolve as ρ_ij(t) = ρ_ij(0) e^{−Γ_ij(t)}, where Γ_ij
//! is the double time integral of the noise correlator contracted with the
//! density difference of the two branches.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::pointer::PointerSystem;
use crate::kernels::adler::{AdlerKernel, AdlerPreset};
use crate::kernels::karolyhazy::KarolyhazyKernel;
use crate::physcore::{one_minus_sinc, quad::Neumaier, Constants, MassDensity};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub enum MemoryKernel<'a> {
    Karolyhazy(&'a KarolyhazyKernel),
    Adler(&'a AdlerKernel),
}

/// Γ(t) for a pair of branches displaced by `d` under the Karolyhazy noise,
/// with potential (c²/2)∫ϱγ. Each mode contributes through 1 − cos(ckt),
/// so Γ levels off once ct exceeds the largest relevant length instead of
/// growing linearly: the spectrum has no weight at zero frequency.
pub fn karolyhazy_exponent(
    kernel: &KarolyhazyKernel,
    density: &MassDensity,
    d: f64,
    t: f64,
) -> Result<f64> {
    if t == 0.0 || d == 0.0 {
        return Ok(0.0);
    }
    let c = kernel.constants.c;
    let coupling = (c * c / (2.0 * kernel.constants.hbar)).powi(2);
    let k_max = kernel.k_cutoff().min(density.k_cutoff(1e-14)?);
    let q = density.radial_k_integral(
        |k| {
            let wt = c * k * t;
            // 1 − cos without cancellation
            let one_minus_cos = 2.0 * (0.5 * wt).sin().powi(2);
            kernel.spectrum(k) * one_minus_sinc(k * d) * one_minus_cos
        },
        k_max,
        &[d, c * t],
        1e-10,
    )?;
    Ok(2.0 * coupling / (PI * PI * c * c) * q.value)
}

/// Γ(t) under an Adler kernel. For the white preset the half-weight of the
/// time delta at the integration endpoint gives the CSL-type rate
/// ξ²c⁴B/(2ħ²). Tabulated kernels are integrated with the trapezoid rule on
/// lags spaced at most `dt`.
pub fn adler_exponent(
    kernel: &AdlerKernel,
    density: &MassDensity,
    d: f64,
    t: f64,
    dt: f64,
) -> Result<f64> {
    if t == 0.0 || d == 0.0 {
        return Ok(0.0);
    }
    let Constants { c, hbar, .. } = kernel.constants;
    let pre = kernel.strength.powi(2) * c.powi(4) / (hbar * hbar);
    match &kernel.preset {
        AdlerPreset::WhiteGaussian { .. } => {
            Ok(0.5 * pre * kernel.white_branch_overlap(density, d)? * t)
        }
        AdlerPreset::Custom(_) => {
            if !(dt > 0.0) {
                return Err(Error::domain("dt", format!("must be positive, got {dt}")));
            }
            // ∫₀ᵗ dt' ∫₀^{t'} ds B(s) = ∫₀ᵗ (t − s) B(s) ds
            let n = (t / dt).ceil().max(1.0) as usize;
            let h = t / n as f64;
            let mut acc = Neumaier::default();
            for i in 0..=n {
                let s = i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc.add(w * (t - s) * kernel.custom_branch_correlation(density, d, s)?);
            }
            Ok(pre * h * acc.total())
        }
    }
}

/// Multiplies each off-diagonal element by e^{−Γ_ij(t)}.
pub fn evolve_nonmarkovian_pointer(
    system: &PointerSystem,
    kernel: MemoryKernel<'_>,
    t: f64,
    dt: f64,
) -> Result<PointerSystem> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("t", format!("must be nonnegative, got {t}")));
    }
    let n = system.spec.branch_count();
    let mut out = system.clone();
    for i in 0..n {
        for j in i + 1..n {
            let d = system.spec.separation(i, j);
            let gamma = match kernel {
                MemoryKernel::Karolyhazy(k) => karolyhazy_exponent(k, &system.spec.density, d, t)?,
                MemoryKernel::Adler(k) => adler_exponent(k, &system.spec.density, d, t, dt)?,
            };
            if gamma < 0.0 {
                return Err(Error::NumericalInstability(format!(
                    "negative decoherence exponent {gamma:e} for branches {i},{j}"
                )));
            }
            let f = Complex64::from((-gamma).exp());
            out.rho[(i, j)] = system.rho[(i, j)] * f;
            out.rho[(j, i)] = system.rho[(j, i)] * f;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::adler::AdlerTable;
    use crate::physcore::{quad, PROTON_MASS};
    use crate::rates::SuperpositionSpec;

    fn proton() -> MassDensity {
        MassDensity::GaussianBall {
            mass: PROTON_MASS,
            r0: 0.8e-15,
        }
    }

    #[test]
    fn zero_time_is_identity() {
        let k = KarolyhazyKernel::new(1e-15, Constants::si()).unwrap();
        let spec = SuperpositionSpec::two_branch(proton(), 1e-14).unwrap();
        let s = PointerSystem::equal_superposition(&Constants::si(), spec).unwrap();
        let e = evolve_nonmarkovian_pointer(&s, MemoryKernel::Karolyhazy(&k), 0.0, 1.0).unwrap();
        assert_eq!(e, s);
    }

    #[test]
    fn karolyhazy_exponent_matches_time_domain_quadrature() {
        let k = KarolyhazyKernel::new(1e-15, Constants::si()).unwrap();
        let rho = proton();
        let d = 1e-14;
        let c = k.constants.c;
        let coupling = (c * c / (2.0 * k.constants.hbar)).powi(2);
        // branch-difference correlation at lag s
        let g = |s: f64| {
            let f = |kk: f64| {
                let ft = rho.density_ft(kk).norm_sqr();
                kk * kk * k.spectrum(kk) * ft * one_minus_sinc(kk * d) * (c * kk * s).cos()
            };
            2.0 / (PI * PI)
                * quad::integrate_panels(&f, 0.0, k.k_cutoff(), 0.05 * k.k_cutoff(), 1e-12).value
        };
        let (x, w) = quad::gauss_legendre(40);
        for t in [1e-24, 4e-24, 1e-23] {
            // ½ κ ∫₀ᵗ∫₀ᵗ g(t₁ − t₂)
            let mut acc = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                for (xj, wj) in x.iter().zip(&w) {
                    let t1 = 0.5 * t * (xi + 1.0);
                    let t2 = 0.5 * t * (xj + 1.0);
                    acc += wi * wj * g(t1 - t2);
                }
            }
            let oracle = 0.5 * coupling * acc * 0.25 * t * t;
            let got = karolyhazy_exponent(&k, &rho, d, t).unwrap();
            assert!(
                (got / oracle - 1.0).abs() < 1e-6,
                "t={t}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn white_adler_is_linear_in_time() {
        let k = AdlerKernel::white_gaussian(1e-20, 1e-7).unwrap();
        let rho = MassDensity::GaussianBall {
            mass: 1e-20,
            r0: 1e-8,
        };
        let a = adler_exponent(&k, &rho, 2e-7, 1.0, 0.1).unwrap();
        let b = adler_exponent(&k, &rho, 2e-7, 3.0, 0.1).unwrap();
        assert!((b / a - 3.0).abs() < 1e-14);
    }

    #[test]
    fn tabulated_adler_uses_double_time_integral() {
        // D(x, t) = (1 − x) for t ≤ 2: B(s) = 2m²·d constant, Γ = pre·B·t²/2
        let mut csv = String::new();
        for x in [0.0, 1.0] {
            for t in [0.0, 2.0] {
                csv.push_str(&format!("{x},{t},{},0\n", 1.0 - x));
            }
        }
        let k = AdlerKernel::custom(1e-30, AdlerTable::from_csv(&csv).unwrap()).unwrap();
        let rho = MassDensity::PointMass { mass: 2.0 };
        let d = 0.25;
        let gamma = adler_exponent(&k, &rho, d, 1.5, 0.01).unwrap();
        let pre = 1e-60 * Constants::si().c.powi(4) / Constants::si().hbar.powi(2);
        let expect = pre * 2.0 * 4.0 * d * 1.5 * 1.5 / 2.0;
        assert!((gamma / expect - 1.0).abs() < 1e-12);
        assert!(matches!(
            adler_exponent(&k, &rho, d, 3.0, 0.01),
            Err(Error::UnsupportedKernel(_))
        ));
    }
}
