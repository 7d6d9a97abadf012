//! Decoherence and collapse times of the gravitational models.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::physcore::{Constants, LatticeLayout, MassDensity, NucleonLattice, AMU};
use crate::{Error, Result};

/// A rigid body in a superposition of displaced copies.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionSpec {
    pub density: MassDensity,
    /// Centre of each branch (m).
    pub displacements: Vec<[f64; 3]>,
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl SuperpositionSpec {
    pub fn new(density: MassDensity, displacements: Vec<[f64; 3]>) -> Result<Self> {
        density.validate()?;
        if displacements.len() < 2 {
            return Err(Error::domain("displacements", "need at least two branches"));
        }
        for (i, a) in displacements.iter().enumerate() {
            if a.iter().any(|c| !c.is_finite()) {
                return Err(Error::domain(
                    "displacements",
                    format!("branch {i} is not finite"),
                ));
            }
            for (j, b) in displacements.iter().enumerate().skip(i + 1) {
                if distance(*a, *b) == 0.0 {
                    return Err(Error::domain(
                        "displacements",
                        format!("branches {i} and {j} coincide"),
                    ));
                }
            }
        }
        Ok(SuperpositionSpec {
            density,
            displacements,
        })
    }

    /// Two branches separated by `d` along x.
    pub fn two_branch(density: MassDensity, d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::domain("d", format!("must be positive, got {d}")));
        }
        SuperpositionSpec::new(density, vec![[0.0; 3], [d, 0.0, 0.0]])
    }

    pub fn branch_count(&self) -> usize {
        self.displacements.len()
    }

    pub fn separation(&self, i: usize, j: usize) -> f64 {
        distance(self.displacements[i], self.displacements[j])
    }

    /// S(0) − S(a_i − a_j), the Newtonian self-energy of the branch difference
    /// divided by 2.
    pub fn overlap_deficit(&self, i: usize, j: usize) -> Result<f64> {
        let a = self.displacements[i];
        let b = self.displacements[j];
        let s0 = self.density.pair_overlap(0.0)?;
        let sd = self
            .density
            .pair_overlap_vec([a[0] - b[0], a[1] - b[1], a[2] - b[2]])?;
        Ok((s0 - sd).max(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMethod {
    ClosedForm,
    KSpaceQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    /// s⁻¹
    pub rate: f64,
    /// s
    pub time: f64,
    pub method: RateMethod,
    /// Absolute error estimate of `rate`.
    pub error_estimate: f64,
}

impl RateResult {
    fn from_rate(rate: f64, method: RateMethod, error_estimate: f64) -> Self {
        RateResult {
            rate,
            time: 1.0 / rate,
            method,
            error_estimate,
        }
    }
}

/// Karolyhazy's spread Δs = (ℓ_P² s)^{1/3} of a length s.
pub fn karolyhazy_delta_s(k: &Constants, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::domain("s", format!("must be positive, got {s}")));
    }
    Ok((k.planck_length().powi(2) * s).cbrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceCell {
    /// Coherence length a_K (m).
    pub a_k: f64,
    /// Decay time τ_K = m a_K²/ħ (s).
    pub tau_k: f64,
    /// Whether the point-particle branch applied.
    pub point_like: bool,
}

/// Coherence length and decay time for a body of mass `m` and radius `r`.
///
/// Switches from ħ²/(Gm³) to (ħ²R²/(Gm³))^{1/3} where R exceeds ħ²/(Gm³);
/// the two branches meet there.
pub fn karolyhazy_coherence_cell(k: &Constants, m: f64, r: f64) -> Result<CoherenceCell> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::domain("m", format!("must be positive, got {m}")));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::domain("R", format!("must be nonnegative, got {r}")));
    }
    let point = k.hbar * k.hbar / (k.g * m.powi(3));
    let point_like = r < point;
    let a_k = if point_like {
        point
    } else {
        (point * r * r).cbrt()
    };
    Ok(CoherenceCell {
        a_k,
        tau_k: m * a_k * a_k / k.hbar,
        point_like,
    })
}

fn two_branch_deficit(spec: &SuperpositionSpec) -> Result<f64> {
    if spec.branch_count() != 2 {
        return Err(Error::domain(
            "displacements",
            format!(
                "two-branch rate requested for {} branches",
                spec.branch_count()
            ),
        ));
    }
    spec.overlap_deficit(0, 1)
}

/// τ_D⁻¹ = (G/ħ)[S(0) − S(d)] for a two-branch superposition.
pub fn dp_decay_rate(k: &Constants, spec: &SuperpositionSpec) -> Result<RateResult> {
    let deficit = two_branch_deficit(spec)?;
    let rate = k.g / k.hbar * deficit;
    Ok(RateResult::from_rate(
        rate,
        RateMethod::ClosedForm,
        8.0 * f64::EPSILON * rate,
    ))
}

/// Same rate from the radial k-space quadrature (spherical densities only).
pub fn dp_decay_rate_kspace(
    k: &Constants,
    spec: &SuperpositionSpec,
    rel_tol: f64,
) -> Result<RateResult> {
    if spec.branch_count() != 2 {
        return Err(Error::domain(
            "displacements",
            "two-branch rate needs two branches",
        ));
    }
    let d = spec.separation(0, 1);
    let s0 = spec.density.pair_overlap_kspace(0.0, rel_tol)?;
    let sd = spec.density.pair_overlap_kspace(d, rel_tol)?;
    let f = k.g / k.hbar;
    Ok(RateResult::from_rate(
        f * (s0.value - sd.value),
        RateMethod::KSpaceQuadrature,
        f * (s0.abs_error + sd.abs_error),
    ))
}

/// Penrose's energy uncertainty ΔE = 4πG ∫∫ (ϱ_a−ϱ_b)(x)(ϱ_a−ϱ_b)(y)/|x−y|.
pub fn penrose_delta_e(k: &Constants, spec: &SuperpositionSpec) -> Result<f64> {
    Ok(8.0 * PI * k.g * two_branch_deficit(spec)?)
}

/// Penrose's lifetime ħ/ΔE.
pub fn penrose_tau(k: &Constants, spec: &SuperpositionSpec) -> Result<RateResult> {
    let rate = penrose_delta_e(k, spec)? / k.hbar;
    Ok(RateResult::from_rate(
        rate,
        RateMethod::ClosedForm,
        8.0 * f64::EPSILON * rate,
    ))
}

/// Pairwise decay rates Λ_ij = (G/ħ)[S(0) − S(a_i − a_j)].
pub fn dp_rate_matrix(k: &Constants, spec: &SuperpositionSpec) -> Result<DMatrix<f64>> {
    let n = spec.branch_count();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = k.g / k.hbar * spec.overlap_deficit(i, j)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Density of ordinary matter used when only a radius is given (kg/m³).
pub const DEFAULT_DENSITY: f64 = 1000.0;

/// Mass of a ball of radius `r` at mass density `rho`.
pub fn ball_mass(r: f64, rho: f64) -> f64 {
    4.0 / 3.0 * PI * r.powi(3) * rho
}

/// Crystal parameters of silicon: atomic mass and mass density.
pub const SILICON_ATOMIC_MASS: f64 = 28.0855 * AMU;
pub const SILICON_DENSITY: f64 = 2329.0;

/// Gaussian smearing of a nucleus used by the lattice preset (m).
pub const NUCLEAR_WIDTH: f64 = 1e-14;

/// A silicon ball of mass `m` as a simple-cubic lattice of nuclei with
/// Gaussian smearing `r0`. The lattice spacing reproduces the bulk density.
pub fn silicon_lattice(m: f64, r0: f64) -> Result<MassDensity> {
    let spacing = (SILICON_ATOMIC_MASS / SILICON_DENSITY).cbrt();
    let radius = (3.0 * m / (4.0 * PI * SILICON_DENSITY)).cbrt();
    let density = MassDensity::NucleonLattice(NucleonLattice {
        r0,
        layout: LatticeLayout::CubicBall {
            site_mass: SILICON_ATOMIC_MASS,
            spacing,
            radius,
        },
    });
    density.validate()?;
    Ok(density)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physcore::PROTON_MASS;
    use proptest::prelude::*;

    fn sphere() -> MassDensity {
        MassDensity::UniformSphere {
            mass: 1e-12,
            radius: 5e-6,
        }
    }

    #[test]
    fn delta_s_fixed_point_and_scaling() {
        let k = Constants::si();
        let lp = k.planck_length();
        assert!((karolyhazy_delta_s(&k, lp).unwrap() / lp - 1.0).abs() < 1e-14);
        let one = karolyhazy_delta_s(&k, 1.0).unwrap();
        // (ℓ_P²)^{1/3} with ℓ_P = 1.616255e-35 m
        assert!((one / 6.3905e-24 - 1.0).abs() < 1e-3, "{one:e}");
        assert!((karolyhazy_delta_s(&k, 8.0).unwrap() / one - 2.0).abs() < 1e-14);
    }

    #[test]
    fn point_particle_time_scales_as_inverse_fifth_power() {
        let k = Constants::si();
        let a = karolyhazy_coherence_cell(&k, PROTON_MASS, 0.0).unwrap();
        let b = karolyhazy_coherence_cell(&k, 2.0 * PROTON_MASS, 0.0).unwrap();
        assert!(a.point_like && b.point_like);
        assert!((a.tau_k / b.tau_k / 32.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherence_cell_is_continuous_at_the_crossover() {
        let k = Constants::si();
        let m: f64 = 1e-20;
        let cross = k.hbar * k.hbar / (k.g * m.powi(3));
        let below = karolyhazy_coherence_cell(&k, m, cross * (1.0 - 1e-12)).unwrap();
        let above = karolyhazy_coherence_cell(&k, m, cross).unwrap();
        assert!(below.point_like && !above.point_like);
        assert!((below.a_k / above.a_k - 1.0).abs() < 1e-11);
    }

    #[test]
    fn dp_and_penrose_differ_by_eight_pi() {
        let k = Constants::si();
        let spec = SuperpositionSpec::two_branch(sphere(), 5e-5).unwrap();
        let d = dp_decay_rate(&k, &spec).unwrap();
        let p = penrose_tau(&k, &spec).unwrap();
        assert!((d.time / (8.0 * PI * p.time) - 1.0).abs() < 1e-10);
        assert!((d.rate * d.time - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_mass_diverges() {
        let spec =
            SuperpositionSpec::two_branch(MassDensity::PointMass { mass: 1.0 }, 1.0).unwrap();
        assert_eq!(
            dp_decay_rate(&Constants::si(), &spec),
            Err(Error::Divergence)
        );
    }

    #[test]
    fn coincident_branches_are_rejected() {
        assert!(SuperpositionSpec::new(sphere(), vec![[0.0; 3], [0.0; 3]]).is_err());
        assert!(SuperpositionSpec::new(sphere(), vec![[0.0; 3]]).is_err());
    }

    #[test]
    fn kspace_route_agrees() {
        let k = Constants::si();
        let spec = SuperpositionSpec::two_branch(sphere(), 7e-6).unwrap();
        let a = dp_decay_rate(&k, &spec).unwrap();
        let b = dp_decay_rate_kspace(&k, &spec, 1e-9).unwrap();
        assert!((a.rate / b.rate - 1.0).abs() < 1e-6);
    }

    #[test]
    fn large_separation_limit() {
        let k = Constants::si();
        let s0 = sphere().pair_overlap(0.0).unwrap();
        let d = 1.0;
        let spec = SuperpositionSpec::two_branch(sphere(), d).unwrap();
        let r = dp_decay_rate(&k, &spec).unwrap().rate;
        let limit = k.g / k.hbar * (s0 - 1e-24 / d);
        assert!((r / limit - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rate_matrix_is_symmetric_with_zero_diagonal() {
        let k = Constants::si();
        let spec = SuperpositionSpec::new(
            sphere(),
            vec![[0.0; 3], [3e-6, 0.0, 0.0], [0.0, 2e-5, 1e-6]],
        )
        .unwrap();
        let m = dp_rate_matrix(&k, &spec).unwrap();
        for i in 0..3 {
            assert_eq!(m[(i, i)], 0.0);
            for j in 0..3 {
                assert_eq!(m[(i, j)], m[(j, i)]);
                assert!(m[(i, j)] >= 0.0);
            }
        }
    }

    proptest! {
        #[test]
        fn rate_grows_with_separation(d in 1e-8f64..1e-3, f in 1.01f64..10.0) {
            let k = Constants::si();
            let a = dp_decay_rate(&k, &SuperpositionSpec::two_branch(sphere(), d).unwrap()).unwrap();
            let b = dp_decay_rate(&k, &SuperpositionSpec::two_branch(sphere(), d * f).unwrap()).unwrap();
            prop_assert!(b.rate >= a.rate);
        }

        #[test]
        fn narrower_gaussians_decay_faster(r0 in 1e-9f64..1e-6, f in 1.1f64..10.0) {
            let k = Constants::si();
            let d = 1e-5;
            let narrow = MassDensity::GaussianBall { mass: 1e-15, r0 };
            let wide = MassDensity::GaussianBall { mass: 1e-15, r0: r0 * f };
            let a = dp_decay_rate(&k, &SuperpositionSpec::two_branch(narrow, d).unwrap()).unwrap();
            let b = dp_decay_rate(&k, &SuperpositionSpec::two_branch(wide, d).unwrap()).unwrap();
            prop_assert!(a.rate > b.rate);
        }
    }
}
