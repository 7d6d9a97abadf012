//! Master equations restricted to a basis of rigidly displaced branches.
//!
//! On such a basis every superoperator built from the mass density is
//! diagonal in the matrix elements: ρ_ij only picks up a decay and a phase.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::kernels::td::TDKernel;
use crate::physcore::Constants;
use crate::rates::{dp_rate_matrix, SuperpositionSpec};
use crate::{Error, Result};

/// A static point mass that the body gravitates towards in every branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalMass {
    pub mass: f64,
    pub position: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerSystem {
    pub spec: SuperpositionSpec,
    pub rho: DMatrix<Complex64>,
    /// Pairwise decay rates Λ_ij (s⁻¹).
    pub rates: DMatrix<f64>,
    /// Point masses fixed in every branch; they only affect phases.
    pub sources: Vec<ExternalMass>,
}

const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;

impl PointerSystem {
    pub fn new(
        spec: SuperpositionSpec,
        rho: DMatrix<Complex64>,
        rates: DMatrix<f64>,
    ) -> Result<Self> {
        let n = spec.branch_count();
        if rho.shape() != (n, n) || rates.shape() != (n, n) {
            return Err(Error::domain("rho", format!("expected {n}×{n} matrices")));
        }
        for i in 0..n {
            if rates[(i, i)] != 0.0 {
                return Err(Error::domain("rates", "diagonal must vanish"));
            }
            for j in 0..n {
                if rates[(i, j)] != rates[(j, i)] || !(rates[(i, j)] >= 0.0) {
                    return Err(Error::domain("rates", "must be symmetric and nonnegative"));
                }
            }
        }
        let sys = PointerSystem {
            spec,
            rho,
            rates,
            sources: Vec::new(),
        };
        sys.check_state()?;
        Ok(sys)
    }

    /// Pure state Σ c_i |i⟩ (normalized here) with DP rates.
    pub fn pure_dp(
        k: &Constants,
        spec: SuperpositionSpec,
        amplitudes: &[Complex64],
    ) -> Result<Self> {
        let n = spec.branch_count();
        if amplitudes.len() != n {
            return Err(Error::domain(
                "amplitudes",
                format!("expected {n} amplitudes"),
            ));
        }
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::domain("amplitudes", "must not all vanish"));
        }
        let psi: Vec<Complex64> = amplitudes.iter().map(|c| c / norm).collect();
        let rho = DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj());
        let rates = dp_rate_matrix(k, &spec)?;
        PointerSystem::new(spec, rho, rates)
    }

    /// Equal-weight superposition of all branches.
    pub fn equal_superposition(k: &Constants, spec: SuperpositionSpec) -> Result<Self> {
        let n = spec.branch_count();
        PointerSystem::pure_dp(k, spec, &vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn with_sources(mut self, sources: Vec<ExternalMass>) -> Self {
        self.sources = sources;
        self
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|c| c.re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermiticity, unit trace and positivity within tolerance.
    pub fn check_state(&self) -> Result<()> {
        let n = self.rho.nrows();
        let scale = self.rho.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                if (self.rho[(i, j)] - self.rho[(j, i)].conj()).norm() > 1e-12 * scale {
                    return Err(Error::NumericalInstability(
                        "density matrix is not Hermitian".into(),
                    ));
                }
            }
        }
        if (self.trace() - 1.0).abs() > TRACE_TOL {
            return Err(Error::NumericalInstability(format!(
                "trace {} differs from 1",
                self.trace()
            )));
        }
        let lo = self.min_eigenvalue();
        if lo < -PSD_TOL {
            return Err(Error::NumericalInstability(format!(
                "negative eigenvalue {lo:e}"
            )));
        }
        Ok(())
    }

    /// Newtonian energy of branch i with the external masses, plus the
    /// branch-independent self-energy.
    pub fn branch_energy(&self, k: &Constants, i: usize) -> Result<f64> {
        let m = self.spec.density.total_mass();
        let a = self.spec.displacements[i];
        let mut v = -0.5 * k.g * self.spec.density.pair_overlap(0.0)?;
        for s in &self.sources {
            let r = ((a[0] - s.position[0]).powi(2)
                + (a[1] - s.position[1]).powi(2)
                + (a[2] - s.position[2]).powi(2))
            .sqrt();
            if r <= self.spec.density.size() {
                return Err(Error::domain("sources", "external mass inside the body"));
            }
            v -= k.g * m * s.mass / r;
        }
        Ok(v)
    }

    fn scale_offdiagonal(&self, factor: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut out = self.clone();
        let n = self.rho.nrows();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out.rho[(i, j)] = self.rho[(i, j)] * factor(i, j);
                }
            }
        }
        out
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain("t", format!("must be nonnegative, got {t}")));
    }
    Ok(())
}

/// ρ_ij(t) = ρ_ij(0) e^{−Λ_ij t}.
pub fn evolve_dp_pointer(system: &PointerSystem, t: f64) -> Result<PointerSystem> {
    check_time(t)?;
    Ok(system.scale_offdiagonal(|i, j| Complex64::new((-system.rates[(i, j)] * t).exp(), 0.0)))
}

/// Decay from the TD decoherence kernel and phases from the branch-dependent
/// Newtonian energy, ρ_ij → ρ_ij e^{−Λ_ij t − i(V_i − V_j)t/ħ}.
pub fn evolve_td_pointer(
    system: &PointerSystem,
    kernel: &TDKernel,
    t: f64,
) -> Result<PointerSystem> {
    check_time(t)?;
    let k = &kernel.constants;
    let n = system.spec.branch_count();
    let mut rates = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let r = match kernel.choice {
                crate::kernels::td::TDChoice::Minimal => {
                    k.g / k.hbar * system.spec.overlap_deficit(i, j)?
                }
                _ => kernel.pair_rate(&system.spec.density, system.spec.separation(i, j))?,
            };
            rates[(i, j)] = r;
            rates[(j, i)] = r;
        }
    }
    let energies: Vec<f64> = (0..n)
        .map(|i| system.branch_energy(k, i))
        .collect::<Result<_>>()?;
    let mut out = system.scale_offdiagonal(|i, j| {
        let phase = -(energies[i] - energies[j]) * t / k.hbar;
        Complex64::from_polar((-rates[(i, j)] * t).exp(), phase)
    });
    out.rates = rates;
    Ok(out)
}

/// Right-hand side of the pointer-basis Lindblad equation with decay rates
/// Λ_ij and energies V_i: dρ_ij/dt = −(i/ħ)(V_i − V_j)ρ_ij − Λ_ij ρ_ij.
fn pointer_rhs(
    rho: &DMatrix<Complex64>,
    rates: &DMatrix<f64>,
    energies: &[f64],
    hbar: f64,
) -> DMatrix<Complex64> {
    DMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| {
        rho[(i, j)] * Complex64::new(-rates[(i, j)], -(energies[i] - energies[j]) / hbar)
    })
}

/// Fixed-step RK4 integration of the pointer-basis Lindblad equation.
pub fn integrate_pointer_rk4(
    rho: &DMatrix<Complex64>,
    rates: &DMatrix<f64>,
    energies: &[f64],
    hbar: f64,
    t: f64,
    dt: f64,
) -> Result<DMatrix<Complex64>> {
    check_time(t)?;
    if !(dt > 0.0) {
        return Err(Error::domain("dt", format!("must be positive, got {dt}")));
    }
    let steps = (t / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut y = rho.clone();
    for _ in 0..steps {
        let k1 = pointer_rhs(&y, rates, energies, hbar);
        let k2 = pointer_rhs(
            &(&y + &k1 * Complex64::from(0.5 * h)),
            rates,
            energies,
            hbar,
        );
        let k3 = pointer_rhs(
            &(&y + &k2 * Complex64::from(0.5 * h)),
            rates,
            energies,
            hbar,
        );
        let k4 = pointer_rhs(&(&y + &k3 * Complex64::from(h)), rates, energies, hbar);
        y += (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4)
            * Complex64::from(h / 6.0);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physcore::MassDensity;

    fn sphere() -> MassDensity {
        MassDensity::UniformSphere {
            mass: 1e-14,
            radius: 1e-6,
        }
    }

    fn three_branch() -> PointerSystem {
        let spec = SuperpositionSpec::new(
            sphere(),
            vec![[0.0; 3], [1.5e-6, 0.0, 0.0], [0.0, 4e-6, 0.0]],
        )
        .unwrap();
        let amps = [
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(0.3, -0.4),
        ];
        PointerSystem::pure_dp(&Constants::si(), spec, &amps).unwrap()
    }

    #[test]
    fn zero_time_is_identity() {
        let s = three_branch();
        assert_eq!(evolve_dp_pointer(&s, 0.0).unwrap(), s);
    }

    #[test]
    fn off_diagonal_falls_to_one_over_e_at_tau() {
        let k = Constants::si();
        let spec = SuperpositionSpec::two_branch(sphere(), 3e-6).unwrap();
        let s = PointerSystem::equal_superposition(&k, spec).unwrap();
        let tau = 1.0 / s.rates[(0, 1)];
        let e = evolve_dp_pointer(&s, tau).unwrap();
        let ratio = e.rho[(0, 1)].norm() / s.rho[(0, 1)].norm();
        assert!((ratio * std::f64::consts::E - 1.0).abs() < 1e-12);
        assert_eq!(e.rho[(0, 0)], s.rho[(0, 0)]);
    }

    #[test]
    fn three_branches_match_rk4() {
        let s = three_branch();
        let t = 2.0 / s.rates.max();
        let exact = evolve_dp_pointer(&s, t).unwrap();
        let rk = integrate_pointer_rk4(&s.rho, &s.rates, &[0.0; 3], 1.0, t, t / 2000.0).unwrap();
        for (a, b) in exact.rho.iter().zip(rk.iter()) {
            assert!((a - b).norm() < 1e-8);
        }
        exact.check_state().unwrap();
    }

    #[test]
    fn minimal_td_matches_dp() {
        let k = Constants::si();
        let s = three_branch();
        let t = 0.7 / s.rates.max();
        let dp = evolve_dp_pointer(&s, t).unwrap();
        let td = evolve_td_pointer(&s, &TDKernel::minimal(k), t).unwrap();
        for (a, b) in dp.rho.iter().zip(td.rho.iter()) {
            assert!((a - b).norm() <= 1e-6 * a.norm() + 1e-300);
        }
    }

    #[test]
    fn td_phase_comes_from_cross_terms() {
        let k = Constants::si();
        let m = 1e-14;
        let src = ExternalMass {
            mass: 1e-9,
            position: [5e-5, 2e-5, 0.0],
        };
        let spec = SuperpositionSpec::two_branch(sphere(), 4e-6).unwrap();
        let s = PointerSystem::equal_superposition(&k, spec.clone())
            .unwrap()
            .with_sources(vec![src]);
        let t = 1e-5;
        let e = evolve_td_pointer(&s, &TDKernel::minimal(k), t).unwrap();
        // direct sum of pairwise potentials in each configuration
        let energy = |a: [f64; 3]| {
            let r = ((a[0] - src.position[0]).powi(2) + (a[1] - src.position[1]).powi(2)).sqrt();
            -k.g * m * src.mass / r
        };
        let dv = energy(spec.displacements[0]) - energy(spec.displacements[1]);
        let expect = (-dv * t / k.hbar).rem_euclid(2.0 * std::f64::consts::PI);
        let got =
            (e.rho[(0, 1)].arg() - s.rho[(0, 1)].arg()).rem_euclid(2.0 * std::f64::consts::PI);
        let diff = (got - expect).abs();
        assert!(
            diff.min(2.0 * std::f64::consts::PI - diff) < 1e-6,
            "{got} vs {expect}"
        );
    }

    #[test]
    fn magnitudes_never_grow() {
        let s = three_branch();
        let mut prev = s.clone();
        for step in 1..20 {
            let cur = evolve_dp_pointer(&s, step as f64 * 0.1 / s.rates.max()).unwrap();
            for (a, b) in cur.rho.iter().zip(prev.rho.iter()) {
                assert!(a.norm() <= b.norm() * (1.0 + 1e-15));
            }
            assert!((cur.trace() - 1.0).abs() < 1e-10);
            prev = cur;
        }
    }
}
