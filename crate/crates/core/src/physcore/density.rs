use std::f64::consts::PI;

use num_complex::Complex64;

use super::quad::{self, Quadrature};
use crate::{Error, Result};

/// One Gaussian-smeared nucleus (or nucleon) of a lattice density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSite {
    pub mass: f64,
    pub center: [f64; 3],
}

/// How the lattice sites are laid out.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeLayout {
    /// Explicit site list; overlaps are exact double sums.
    Sites(Vec<LatticeSite>),
    /// Simple-cubic crystal filling a ball, too large to enumerate.
    ///
    /// Overlaps are split into the exact per-site self terms plus the smooth
    /// inter-site part, which is taken from the homogenized ball with the
    /// intra-cell contribution removed.
    CubicBall {
        site_mass: f64,
        spacing: f64,
        radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NucleonLattice {
    /// Gaussian smearing radius of every site (standard deviation per axis).
    pub r0: f64,
    pub layout: LatticeLayout,
}

impl NucleonLattice {
    /// Enumerates the sites of a simple-cubic lattice inside a ball.
    pub fn enumerate_cubic_ball(site_mass: f64, spacing: f64, radius: f64, r0: f64) -> Self {
        let n = (radius / spacing).floor() as i64;
        let mut sites = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    let c = [i as f64 * spacing, j as f64 * spacing, k as f64 * spacing];
                    if norm(c) <= radius {
                        sites.push(LatticeSite {
                            mass: site_mass,
                            center: c,
                        });
                    }
                }
            }
        }
        NucleonLattice {
            r0,
            layout: LatticeLayout::Sites(sites),
        }
    }

    /// Number of sites (fractional for the homogenized ball).
    pub fn site_count(&self) -> f64 {
        match &self.layout {
            LatticeLayout::Sites(s) => s.len() as f64,
            LatticeLayout::CubicBall {
                spacing, radius, ..
            } => 4.0 * PI / 3.0 * (radius / spacing).powi(3),
        }
    }
}

/// Matter distribution ϱ(x) of a single body, centred at the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum MassDensity {
    PointMass {
        mass: f64,
    },
    UniformSphere {
        mass: f64,
        radius: f64,
    },
    /// Gaussian with per-axis standard deviation `r0`.
    GaussianBall {
        mass: f64,
        r0: f64,
    },
    NucleonLattice(NucleonLattice),
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// sin(x)/x.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// 1 - sin(x)/x without cancellation at small x.
pub(crate) fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        1.0 - x.sin() / x
    }
}

/// Form factor of a uniform ball, 3(sin x - x cos x)/x³.
fn ball_form_factor(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        1.0 - x2 / 10.0 + x2 * x2 / 280.0
    } else {
        3.0 * (x.sin() - x * x.cos()) / (x * x * x)
    }
}

/// Coulomb-type interaction of two identical uniform balls at distance d.
fn ball_pair(m1m2: f64, radius: f64, d: f64) -> f64 {
    if d >= 2.0 * radius {
        return m1m2 / d;
    }
    let u = d / radius;
    m1m2 / radius * (1.2 - 0.5 * u * u + 3.0 / 16.0 * u.powi(3) - u.powi(5) / 160.0)
}

/// Interaction of two Gaussians (same per-axis width) at distance s.
fn gaussian_pair(m1m2: f64, r0: f64, s: f64) -> f64 {
    let x = s / (2.0 * r0);
    if x < 1e-4 {
        // erf(x)/x series
        m1m2 / (PI.sqrt() * r0) * (1.0 - x * x / 3.0)
    } else {
        m1m2 * libm::erf(x) / s
    }
}

impl MassDensity {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(name, format!("must be positive, got {v}")))
            }
        };
        match self {
            MassDensity::PointMass { mass } => pos("mass", *mass),
            MassDensity::UniformSphere { mass, radius } => {
                pos("mass", *mass)?;
                pos("radius", *radius)
            }
            MassDensity::GaussianBall { mass, r0 } => {
                pos("mass", *mass)?;
                pos("r0", *r0)
            }
            MassDensity::NucleonLattice(l) => {
                pos("r0", l.r0)?;
                match &l.layout {
                    LatticeLayout::Sites(s) => {
                        if s.is_empty() {
                            return Err(Error::domain("sites", "lattice has no sites"));
                        }
                        s.iter().try_for_each(|site| pos("site mass", site.mass))
                    }
                    LatticeLayout::CubicBall {
                        site_mass,
                        spacing,
                        radius,
                    } => {
                        pos("site mass", *site_mass)?;
                        pos("spacing", *spacing)?;
                        pos("radius", *radius)?;
                        if radius < spacing {
                            return Err(Error::domain("radius", "must exceed the lattice spacing"));
                        }
                        Ok(())
                    }
                }
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            MassDensity::PointMass { mass }
            | MassDensity::UniformSphere { mass, .. }
            | MassDensity::GaussianBall { mass, .. } => *mass,
            MassDensity::NucleonLattice(l) => match &l.layout {
                LatticeLayout::Sites(s) => s.iter().map(|s| s.mass).sum(),
                LatticeLayout::CubicBall { site_mass, .. } => site_mass * l.site_count(),
            },
        }
    }

    /// Characteristic extent (m); zero for a point mass.
    pub fn size(&self) -> f64 {
        match self {
            MassDensity::PointMass { .. } => 0.0,
            MassDensity::UniformSphere { radius, .. } => *radius,
            MassDensity::GaussianBall { r0, .. } => *r0,
            MassDensity::NucleonLattice(l) => match &l.layout {
                LatticeLayout::Sites(s) => s
                    .iter()
                    .map(|s| norm(s.center))
                    .fold(0.0, f64::max)
                    .max(l.r0),
                LatticeLayout::CubicBall { radius, .. } => *radius,
            },
        }
    }

    pub fn is_spherical(&self) -> bool {
        !matches!(self, MassDensity::NucleonLattice(_))
    }

    /// Density (kg/m³) at a point. The point mass and the homogenized
    /// crystal have no pointwise density and return `None`.
    pub fn value(&self, x: [f64; 3]) -> Option<f64> {
        let r = norm(x);
        match self {
            MassDensity::PointMass { .. } => None,
            MassDensity::UniformSphere { mass, radius } => Some(if r <= *radius {
                mass / (4.0 / 3.0 * PI * radius.powi(3))
            } else {
                0.0
            }),
            MassDensity::GaussianBall { mass, r0 } => Some(gaussian_value(*mass, *r0, r)),
            MassDensity::NucleonLattice(l) => match &l.layout {
                LatticeLayout::Sites(s) => Some(
                    s.iter()
                        .map(|site| {
                            let d = [
                                x[0] - site.center[0],
                                x[1] - site.center[1],
                                x[2] - site.center[2],
                            ];
                            gaussian_value(site.mass, l.r0, norm(d))
                        })
                        .sum(),
                ),
                LatticeLayout::CubicBall { .. } => None,
            },
        }
    }

    /// Fourier transform ρ̃(k) = ∫ρ(x)e^{-ik·x}dx at wavevector magnitude `k`.
    ///
    /// Lattices are not spherically symmetric; for them the wavevector is
    /// taken along x̂ and the homogenized crystal returns its smooth envelope.
    pub fn density_ft(&self, k: f64) -> Complex64 {
        self.density_ft_vec([k, 0.0, 0.0])
    }

    pub fn density_ft_vec(&self, k: [f64; 3]) -> Complex64 {
        let kk = norm(k);
        match self {
            MassDensity::PointMass { mass } => Complex64::new(*mass, 0.0),
            MassDensity::UniformSphere { mass, radius } => {
                Complex64::new(mass * ball_form_factor(kk * radius), 0.0)
            }
            MassDensity::GaussianBall { mass, r0 } => {
                Complex64::new(mass * (-0.5 * kk * kk * r0 * r0).exp(), 0.0)
            }
            MassDensity::NucleonLattice(l) => {
                let env = (-0.5 * kk * kk * l.r0 * l.r0).exp();
                match &l.layout {
                    LatticeLayout::Sites(s) => s
                        .iter()
                        .map(|site| {
                            let phase = -(k[0] * site.center[0]
                                + k[1] * site.center[1]
                                + k[2] * site.center[2]);
                            site.mass * env * Complex64::from_polar(1.0, phase)
                        })
                        .sum(),
                    LatticeLayout::CubicBall { radius, .. } => {
                        Complex64::new(self.total_mass() * env * ball_form_factor(kk * radius), 0.0)
                    }
                }
            }
        }
    }

    /// |ρ̃(k)|² for spherically symmetric densities.
    fn ft_squared(&self, k: f64) -> f64 {
        self.density_ft(k).norm_sqr()
    }

    /// S(d) = ∫∫ ϱ(r)ϱ(r'−d)/|r−r'| dr dr' (kg²/m), displacement along x̂.
    ///
    /// Evaluated in closed form for every variant (the lattice as a double
    /// sum of Gaussian pair terms). [`MassDensity::pair_overlap_kspace`] is
    /// the independent quadrature route.
    pub fn pair_overlap(&self, d: f64) -> Result<f64> {
        if !(d >= 0.0) {
            return Err(Error::domain("d", format!("must be nonnegative, got {d}")));
        }
        self.pair_overlap_vec([d, 0.0, 0.0])
    }

    pub fn pair_overlap_vec(&self, d: [f64; 3]) -> Result<f64> {
        let dd = norm(d);
        Ok(match self {
            MassDensity::PointMass { .. } => return Err(Error::Divergence),
            MassDensity::UniformSphere { mass, radius } => ball_pair(mass * mass, *radius, dd),
            MassDensity::GaussianBall { mass, r0 } => gaussian_pair(mass * mass, *r0, dd),
            MassDensity::NucleonLattice(l) => match &l.layout {
                LatticeLayout::Sites(s) => {
                    let mut acc = quad::Neumaier::default();
                    for a in s {
                        for b in s {
                            let sep = [
                                a.center[0] - b.center[0] - d[0],
                                a.center[1] - b.center[1] - d[1],
                                a.center[2] - b.center[2] - d[2],
                            ];
                            acc.add(gaussian_pair(a.mass * b.mass, l.r0, norm(sep)));
                        }
                    }
                    acc.total()
                }
                LatticeLayout::CubicBall {
                    site_mass,
                    spacing,
                    radius,
                } => {
                    let n = l.site_count();
                    let m = site_mass * n;
                    let cell_radius = spacing * (3.0 / (4.0 * PI)).cbrt();
                    n * gaussian_pair(site_mass * site_mass, l.r0, dd)
                        + ball_pair(m * m, *radius, dd)
                        - n * ball_pair(site_mass * site_mass, cell_radius, dd)
                }
            },
        })
    }

    /// Upper wavenumber beyond which the overlap integrand contributes less
    /// than `rel_tol` of S(0).
    pub fn k_cutoff(&self, rel_tol: f64) -> Result<f64> {
        match self {
            MassDensity::PointMass { .. } => Err(Error::Divergence),
            MassDensity::UniformSphere { radius, .. } => {
                Ok(1.1 * (5.0 / (PI * rel_tol)).cbrt() / radius)
            }
            MassDensity::GaussianBall { r0, .. } => Ok(((1.0 / rel_tol).ln().sqrt() + 1.0) / r0),
            MassDensity::NucleonLattice(_) => Err(Error::UnsupportedKernel(
                "k-space quadrature requires a spherically symmetric density".into(),
            )),
        }
    }

    /// ∫₀^K w(k)|ρ̃(k)|² dk over `[0, k_max]`.
    ///
    /// `lengths` are the lengths whose products with k appear inside
    /// oscillating factors of `w`; panels are sized to resolve them.
    pub fn radial_k_integral<F: Fn(f64) -> f64>(
        &self,
        weight: F,
        k_max: f64,
        lengths: &[f64],
        rel_tol: f64,
    ) -> Result<Quadrature> {
        const MAX_PANELS: f64 = 4.0e6;
        if !self.is_spherical() {
            return Err(Error::UnsupportedKernel(
                "k-space quadrature requires a spherically symmetric density".into(),
            ));
        }
        let longest = lengths.iter().copied().fold(self.size(), f64::max);
        if longest <= 0.0 {
            return Err(Error::Divergence);
        }
        let panel = 0.5 * PI / longest;
        if k_max / panel > MAX_PANELS {
            return Err(Error::Resolution(format!(
                "oscillatory k-integral needs {:.1e} panels",
                k_max / panel
            )));
        }
        let f = |k: f64| weight(k) * self.ft_squared(k);
        Ok(quad::integrate_panels(&f, 0.0, k_max, panel, rel_tol))
    }

    /// S(d) from the one-dimensional k-space form
    /// S(d) = (2/π) ∫₀^∞ |ρ̃(k)|² sinc(kd) dk.
    pub fn pair_overlap_kspace(&self, d: f64, rel_tol: f64) -> Result<Quadrature> {
        let k_max = self.k_cutoff(rel_tol * 1e-2)?;
        let q = self.radial_k_integral(|k| 2.0 / PI * sinc(k * d), k_max, &[d], rel_tol)?;
        Ok(Quadrature {
            value: q.value,
            abs_error: q.abs_error + rel_tol * 1e-2 * q.value.abs(),
        })
    }
}

fn gaussian_value(mass: f64, r0: f64, r: f64) -> f64 {
    mass / ((2.0 * PI).powf(1.5) * r0.powi(3)) * (-0.5 * r * r / (r0 * r0)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sphere() -> MassDensity {
        MassDensity::UniformSphere {
            mass: 2.0,
            radius: 0.5,
        }
    }
    fn gauss() -> MassDensity {
        MassDensity::GaussianBall { mass: 3.0, r0: 0.2 }
    }

    #[test]
    fn zero_mode_is_total_mass() {
        for d in [sphere(), gauss(), MassDensity::PointMass { mass: 4.0 }] {
            assert!((d.density_ft(0.0).re - d.total_mass()).abs() < 1e-14);
            assert_eq!(d.density_ft(1.3).im, 0.0);
        }
        let l = NucleonLattice::enumerate_cubic_ball(1.0, 1.0, 1.5, 0.1);
        let l = MassDensity::NucleonLattice(l);
        assert!((l.density_ft(0.0).re - l.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn point_mass_transform_is_flat() {
        let p = MassDensity::PointMass { mass: 4.0 };
        assert_eq!(p.density_ft(1e9).re, 4.0);
    }

    #[test]
    fn gaussian_transform_matches_radial_quadrature() {
        // ρ̃(k) = 4π ∫ r² ρ(r) sinc(kr) dr
        let g = gauss();
        for k in [0.0, 2.0, 7.5] {
            let f = |r: f64| 4.0 * PI * r * r * g.value([r, 0.0, 0.0]).unwrap() * sinc(k * r);
            let q = quad::integrate(&f, 0.0, 4.0, 1e-15, 1e-13);
            let expect = 3.0 * (-k * k * 0.04 / 2.0f64).exp();
            assert!(
                (q.value - expect).abs() < 1e-10,
                "{k}: {} vs {expect}",
                q.value
            );
        }
    }

    #[test]
    fn mass_integrates_from_pointwise_density() {
        for d in [sphere(), gauss()] {
            let f = |r: f64| 4.0 * PI * r * r * d.value([0.0, r, 0.0]).unwrap();
            let rmax = 8.0 * d.size();
            let q = quad::integrate_panels(&f, 0.0, rmax, d.size() / 2.0, 1e-12);
            assert!((q.value / d.total_mass() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn self_energies() {
        let s = sphere().pair_overlap(0.0).unwrap();
        assert!((s - 1.2 * 4.0 / 0.5).abs() < 1e-12);
        let g = gauss().pair_overlap(0.0).unwrap();
        assert!((g - 9.0 / (PI.sqrt() * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn point_mass_overlap_diverges() {
        let p = MassDensity::PointMass { mass: 1.0 };
        assert_eq!(p.pair_overlap(1.0), Err(Error::Divergence));
    }

    #[test]
    fn kspace_agrees_with_closed_form() {
        for dens in [sphere(), gauss()] {
            for d in [0.0, 0.1, 0.4, 0.9, 3.0] {
                let exact = dens.pair_overlap(d).unwrap();
                let q = dens.pair_overlap_kspace(d, 1e-9).unwrap();
                assert!(
                    (q.value / exact - 1.0).abs() < 1e-7,
                    "{dens:?} d={d}: {} vs {exact}",
                    q.value
                );
            }
        }
    }

    #[test]
    fn small_lattice_limits() {
        let l =
            MassDensity::NucleonLattice(NucleonLattice::enumerate_cubic_ball(1.0, 1.0, 1.01, 0.05));
        // 7 sites: centre plus six neighbours
        assert_eq!(l.total_mass(), 7.0);
        let far = 1e6;
        let s = l.pair_overlap(far).unwrap();
        assert!((s * far / 49.0 - 1.0).abs() < 1e-6);
        assert!(l.pair_overlap(0.0).unwrap() > l.pair_overlap(0.3).unwrap());
    }

    #[test]
    fn homogenized_crystal_tracks_explicit_lattice() {
        // self-term dominated regime (d between r0 and the spacing) and far field
        let (mu, a, r, r0) = (1.0, 1.0, 6.0, 0.01);
        let exact = MassDensity::NucleonLattice(NucleonLattice::enumerate_cubic_ball(mu, a, r, r0));
        let homog = MassDensity::NucleonLattice(NucleonLattice {
            r0,
            layout: LatticeLayout::CubicBall {
                site_mass: mu,
                spacing: a,
                radius: r,
            },
        });
        let n_exact = exact.total_mass();
        let n_h = homog.total_mass();
        assert!((n_exact / n_h - 1.0).abs() < 0.05);
        let de = exact.pair_overlap(0.0).unwrap() - exact.pair_overlap(0.1).unwrap();
        let dh = homog.pair_overlap(0.0).unwrap() - homog.pair_overlap(0.1).unwrap();
        assert!((de / dh - 1.0).abs() < 0.1, "{de} vs {dh}");
    }

    proptest! {
        #[test]
        fn overlap_is_monotone_and_bounded(d1 in 0.0f64..5.0, d2 in 0.0f64..5.0) {
            for dens in [sphere(), gauss()] {
                let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
                let s0 = dens.pair_overlap(0.0).unwrap();
                let sl = dens.pair_overlap(lo).unwrap();
                let sh = dens.pair_overlap(hi).unwrap();
                prop_assert!(s0 >= sl && sl >= sh - 1e-12 * s0 && sh >= 0.0);
            }
        }

        #[test]
        fn density_is_nonnegative(x in -2.0f64..2.0, y in -2.0f64..2.0) {
            for dens in [sphere(), gauss()] {
                prop_assert!(dens.value([x, y, 0.1]).unwrap() >= 0.0);
            }
        }

        #[test]
        fn smaller_r0_raises_self_energy(r0 in 1e-3f64..1.0, f in 0.1f64..0.99) {
            let a = MassDensity::GaussianBall { mass: 1.0, r0 }.pair_overlap(0.0).unwrap();
            let b = MassDensity::GaussianBall { mass: 1.0, r0: r0 * f }.pair_overlap(0.0).unwrap();
            prop_assert!(b > a);
        }
    }
}
