//! Norm-preserving collapse SDE on a basis of displaced branches.
//!
//! The field-indexed Wiener process contracts with the branch densities into
//! one increment per branch, ξ_i = ∫ϱ_i(r) dW(r), with covariance
//! E[ξ_i ξ_j] = Q_ij dt and Q_ij = (G/ħ) S(a_i − a_j). In Itô form
//! dc_i = c_i [(ξ_i − ξ̄) − ½ v_i dt], with ξ̄ = Σ_k p_k ξ_k and v_i the
//! variance of ξ_i − ξ̄, keeps the norm and averages to
//! dρ_ij/dt = −½(Q_ii + Q_jj − 2Q_ij)ρ_ij = −Λ_ij ρ_ij.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{wilson_interval, TrajectoryConfig};
use crate::physcore::{quad::Neumaier, Constants};
use crate::rates::SuperpositionSpec;
use crate::{Error, Result};

/// Allowed overshoot of a linearized weight update outside [0, 1].
const EXCURSION: f64 = 0.05;
/// Weight above which a trajectory counts as collapsed.
const COLLAPSE_WEIGHT: f64 = 1.0 - 1e-3;
/// Fraction of collapsed trajectories a collapse run must reach.
const REQUIRED_COLLAPSED: f64 = 0.99;

struct NoiseModel {
    q: DMatrix<f64>,
    /// Factor with F Fᵀ = Q.
    factor: DMatrix<f64>,
}

impl NoiseModel {
    fn new(k: &Constants, spec: &SuperpositionSpec) -> Result<Self> {
        let n = spec.branch_count();
        // Only differences ξ_i − ξ_j enter the dynamics, so Q may be replaced
        // by PQP with P the projector orthogonal to (1,…,1). The S(0) part of
        // Q is constant and drops out, leaving −(G/ħ) P Δ P with
        // Δ_ij = S(0) − S(a_i − a_j).
        let mut deficit = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = spec.overlap_deficit(i, j)?;
                deficit[(i, j)] = v;
                deficit[(j, i)] = v;
            }
        }
        let p = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
        let centred = (&p * deficit * &p) * (-k.g / k.hbar);
        let centred = (&centred + centred.transpose()) * 0.5;
        let eig = SymmetricEigen::new(centred.clone());
        let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
        let mut factor = eig.eigenvectors.clone();
        for (c, lam) in eig.eigenvalues.iter().enumerate() {
            if *lam < -1e-9 * scale {
                return Err(Error::NumericalInstability(format!(
                    "noise covariance is not positive semidefinite (eigenvalue {lam:e})"
                )));
            }
            let s = lam.max(0.0).sqrt();
            factor.column_mut(c).scale_mut(s);
        }
        Ok(NoiseModel { q: centred, factor })
    }

    fn draw(&self, rng: &mut impl Rng, sqrt_dt: f64) -> DVector<f64> {
        let n = self.q.nrows();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.factor * z * sqrt_dt
    }
}

/// One trajectory; returns final amplitudes and the l1 coherence at the
/// record times.
fn trajectory(
    noise: &NoiseModel,
    start: &[Complex64],
    cfg: &TrajectoryConfig,
    index: usize,
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let n = start.len();
    let mut rng = cfg.rng(index);
    let sqrt_dt = cfg.dt.sqrt();
    let mut c = start.to_vec();
    let mut coherence = Vec::with_capacity(cfg.steps / cfg.record_stride + 1);
    let l1 = |c: &[Complex64]| {
        let mut s = 0.0;
        for i in 0..c.len() {
            for j in i + 1..c.len() {
                s += 2.0 * c[i].norm() * c[j].norm();
            }
        }
        s
    };
    let mut p = vec![0.0; n];
    for step in 0..cfg.steps {
        if step % cfg.record_stride == 0 {
            coherence.push(l1(&c));
        }
        for (pi, ci) in p.iter_mut().zip(&c) {
            *pi = ci.norm_sqr();
        }
        let xi = noise.draw(&mut rng, sqrt_dt);
        let xi_bar: f64 = p.iter().zip(xi.iter()).map(|(a, b)| a * b).sum();
        let qp = &noise.q * DVector::from_column_slice(&p);
        let pqp: f64 = p.iter().zip(qp.iter()).map(|(a, b)| a * b).sum();
        for i in 0..n {
            let innovation = xi[i] - xi_bar;
            let w = p[i] * (1.0 + 2.0 * innovation);
            if !(-EXCURSION..=1.0 + EXCURSION).contains(&w) {
                return Err(Error::StepSize(format!(
                    "branch weight update reached {w:.3} at step {step}"
                )));
            }
            let drift = noise.q[(i, i)] - 2.0 * qp[i] + pqp;
            c[i] *= 1.0 + innovation - 0.5 * drift * cfg.dt;
        }
        let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut c {
            *z /= norm;
        }
    }
    if cfg.steps.is_multiple_of(cfg.record_stride) {
        coherence.push(l1(&c));
    }
    Ok((c, coherence))
}

fn normalized(amplitudes: &[Complex64], n: usize) -> Result<Vec<Complex64>> {
    if amplitudes.len() != n {
        return Err(Error::domain(
            "amplitudes",
            format!("expected {n} amplitudes"),
        ));
    }
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::domain(
            "amplitudes",
            format!("squared norm {norm} is not 1"),
        ));
    }
    Ok(amplitudes.to_vec())
}

/// Ensemble-averaged state of the collapse SDE.
#[derive(Debug, Clone, PartialEq)]
pub struct DiosiEnsemble {
    pub rho: DMatrix<Complex64>,
    /// Standard error of each element of `rho` (real and imaginary parts
    /// combined in quadrature).
    pub rho_std_error: DMatrix<f64>,
    pub final_amplitudes: Vec<Vec<Complex64>>,
    pub times: Vec<f64>,
    pub coherence: Vec<f64>,
}

pub fn run_diosi_ensemble(
    k: &Constants,
    spec: &SuperpositionSpec,
    amplitudes: &[Complex64],
    cfg: &TrajectoryConfig,
) -> Result<DiosiEnsemble> {
    cfg.validate()?;
    let n = spec.branch_count();
    let start = normalized(amplitudes, n)?;
    let noise = NoiseModel::new(k, spec)?;
    let runs: Vec<(Vec<Complex64>, Vec<f64>)> = (0..cfg.ensemble)
        .into_par_iter()
        .map(|i| trajectory(&noise, &start, cfg, i))
        .collect::<Result<_>>()?;
    let m = runs.len() as f64;
    let mut rho = DMatrix::zeros(n, n);
    let mut err = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (mut re, mut im, mut re2, mut im2) = (
                Neumaier::default(),
                Neumaier::default(),
                Neumaier::default(),
                Neumaier::default(),
            );
            for (c, _) in &runs {
                let v = c[i] * c[j].conj();
                re.add(v.re);
                im.add(v.im);
                re2.add(v.re * v.re);
                im2.add(v.im * v.im);
            }
            let (mr, mi) = (re.total() / m, im.total() / m);
            rho[(i, j)] = Complex64::new(mr, mi);
            let var = (re2.total() / m - mr * mr).max(0.0) + (im2.total() / m - mi * mi).max(0.0);
            err[(i, j)] = (var / m).sqrt();
        }
    }
    let points = runs[0].1.len();
    let coherence = (0..points)
        .map(|t| {
            runs.iter()
                .map(|r| r.1[t])
                .fold(Neumaier::default(), |mut a, v| {
                    a.add(v);
                    a
                })
                .total()
                / m
        })
        .collect();
    Ok(DiosiEnsemble {
        rho,
        rho_std_error: err,
        final_amplitudes: runs.into_iter().map(|r| r.0).collect(),
        times: cfg.record_times(),
        coherence,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseStats {
    /// Fraction of trajectories ending in each branch (largest weight).
    pub frequencies: Vec<f64>,
    /// 3σ Wilson intervals for `frequencies`.
    pub intervals: Vec<(f64, f64)>,
    /// Fraction of trajectories with a weight above 1 − 10⁻³.
    pub collapsed_fraction: f64,
    pub times: Vec<f64>,
    /// Ensemble mean of Σ_{i≠j}|c_i||c_j|.
    pub coherence: Vec<f64>,
}

/// Runs the collapse SDE until the configured time and tallies outcomes.
pub fn run_diosi_collapse(
    k: &Constants,
    spec: &SuperpositionSpec,
    amplitudes: &[Complex64],
    cfg: &TrajectoryConfig,
) -> Result<CollapseStats> {
    let ens = run_diosi_ensemble(k, spec, amplitudes, cfg)?;
    let n = spec.branch_count();
    let mut counts = vec![0usize; n];
    let mut collapsed = 0usize;
    for c in &ens.final_amplitudes {
        let (best, w) =
            c.iter()
                .map(|z| z.norm_sqr())
                .enumerate()
                .fold(
                    (0, -1.0),
                    |acc, (i, w)| if w > acc.1 { (i, w) } else { acc },
                );
        counts[best] += 1;
        if w > COLLAPSE_WEIGHT {
            collapsed += 1;
        }
    }
    let m = cfg.ensemble;
    let collapsed_fraction = collapsed as f64 / m as f64;
    if n > 1 && collapsed_fraction < REQUIRED_COLLAPSED {
        return Err(Error::NonConvergence(format!(
            "only {:.1}% of trajectories collapsed; run longer",
            100.0 * collapsed_fraction
        )));
    }
    Ok(CollapseStats {
        frequencies: counts.iter().map(|c| *c as f64 / m as f64).collect(),
        intervals: counts.iter().map(|c| wilson_interval(*c, m, 3.0)).collect(),
        collapsed_fraction,
        times: ens.times,
        coherence: ens.coherence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{evolve_dp_pointer, PointerSystem};
    use crate::physcore::MassDensity;

    fn spec(n: usize) -> SuperpositionSpec {
        let rho = MassDensity::UniformSphere {
            mass: 1e-14,
            radius: 1e-6,
        };
        let d: Vec<[f64; 3]> = (0..n).map(|i| [i as f64 * 2e-6, 0.0, 0.0]).collect();
        SuperpositionSpec::new(rho, d).unwrap()
    }

    fn tau(k: &Constants, s: &SuperpositionSpec) -> f64 {
        1.0 / crate::rates::dp_rate_matrix(k, s).unwrap()[(0, 1)]
    }

    #[test]
    fn same_seed_same_ensemble() {
        let k = Constants::si();
        let s = spec(2);
        let amps = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let cfg = TrajectoryConfig::new(tau(&k, &s) / 100.0, 50, 9, 16).unwrap();
        let a = run_diosi_ensemble(&k, &s, &amps, &cfg).unwrap();
        let b = run_diosi_ensemble(&k, &s, &amps, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn norm_is_exactly_restored() {
        let k = Constants::si();
        let s = spec(3);
        let amps = [
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.6),
            Complex64::new(0.529_150_262_212_918_2, 0.0),
        ];
        let cfg = TrajectoryConfig::new(tau(&k, &s) / 200.0, 100, 1, 8).unwrap();
        let e = run_diosi_ensemble(&k, &s, &amps, &cfg).unwrap();
        for c in &e.final_amplitudes {
            let n: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn averages_to_the_master_equation() {
        let k = Constants::si();
        let s = spec(2);
        let amps = [Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)];
        let t = tau(&k, &s);
        let cfg = TrajectoryConfig::new(t / 400.0, 200, 3, 4000).unwrap();
        let e = run_diosi_ensemble(&k, &s, &amps, &cfg).unwrap();
        let sys = PointerSystem::pure_dp(&k, s, &amps).unwrap();
        let exact = evolve_dp_pointer(&sys, 0.5 * t).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let diff = (e.rho[(i, j)] - exact.rho[(i, j)]).norm();
                assert!(
                    diff < 3.0 * e.rho_std_error[(i, j)] + 1e-12,
                    "({i},{j}) {diff}"
                );
            }
        }
    }

    #[test]
    fn single_branch_does_not_move() {
        let k = Constants::si();
        let rho = MassDensity::UniformSphere {
            mass: 1e-14,
            radius: 1e-6,
        };
        let s = SuperpositionSpec {
            density: rho,
            displacements: vec![[0.0; 3]],
        };
        let cfg = TrajectoryConfig::new(1e-3, 100, 0, 4).unwrap();
        let e = run_diosi_ensemble(&k, &s, &[Complex64::new(1.0, 0.0)], &cfg).unwrap();
        for c in &e.final_amplitudes {
            assert_eq!(c[0], Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn oversized_step_is_reported() {
        let k = Constants::si();
        let s = spec(2);
        let amps = [Complex64::new(0.6, 0.0), Complex64::new(0.8, 0.0)];
        let cfg = TrajectoryConfig::new(5.0 * tau(&k, &s), 10, 0, 4).unwrap();
        assert!(matches!(
            run_diosi_ensemble(&k, &s, &amps, &cfg),
            Err(Error::StepSize(_))
        ));
    }
}
