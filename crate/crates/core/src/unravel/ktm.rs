//! Conditional Gaussian dynamics of the monitored oscillator pair.
//!
//! Each record r_k = ⟨x_k⟩ + √(ħ/2K) dW_k/dt both measures oscillator k and
//! is fed back as a force on its partner j. Noise dW_k thus enters the state
//! through the operator √κ (x_k − i x_j) with κ = K/2ħ: the real part
//! conditions, the imaginary part kicks. For a Gaussian state this gives
//!
//!   dX̄ = A X̄ dt + Σ_k g_k dW_k,    g_k = 2κ^{1/2} V e_{x_k} + ħ κ^{1/2} J e_{x_j}
//!   dV  = (AV + VAᵀ + D − Σ_k g_k g_kᵀ) dt,
//!
//! so averaging over records restores the unconditional Lindblad moments.

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::TrajectoryConfig;
use crate::lindblad::{symplectic_form, GaussianOscillatorState, KtmParams};
use crate::physcore::quad::Neumaier;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct KtmTrajectory {
    pub times: Vec<f64>,
    pub means: Vec<Vector4<f64>>,
    /// Conditional covariance; the same for every record history.
    pub covariances: Vec<Matrix4<f64>>,
    /// Step-averaged records (r₁, r₂); absent without coupling, where the
    /// record noise ħ/√γ with γ = 2ħK is unbounded.
    pub records: Option<Vec<[f64; 2]>>,
}

fn gains(p: &KtmParams, v: &Matrix4<f64>) -> [Vector4<f64>; 2] {
    let kappa = p.coupling / (2.0 * p.hbar);
    let sk = kappa.sqrt();
    let j = symplectic_form();
    let e = |i: usize| Vector4::from_fn(|r, _| if r == i { 1.0 } else { 0.0 });
    // x₁ is component 0, x₂ component 2
    [
        v * e(0) * (2.0 * sk) + j * e(2) * (p.hbar * sk),
        v * e(2) * (2.0 * sk) + j * e(0) * (p.hbar * sk),
    ]
}

fn riccati(p: &KtmParams, v: &Matrix4<f64>) -> Matrix4<f64> {
    let a = p.drift();
    let g = gains(p, v);
    a * v + v * a.transpose() + p.diffusion() - g[0] * g[0].transpose() - g[1] * g[1].transpose()
}

/// Deterministic conditional-covariance path on the step grid.
fn covariance_path(state: &GaussianOscillatorState, cfg: &TrajectoryConfig) -> Vec<Matrix4<f64>> {
    let p = &state.params;
    let h = cfg.dt;
    let mut v = state.cov;
    let mut out = Vec::with_capacity(cfg.steps + 1);
    out.push(v);
    for _ in 0..cfg.steps {
        let l1 = riccati(p, &v);
        let l2 = riccati(p, &(v + l1 * (0.5 * h)));
        let l3 = riccati(p, &(v + l2 * (0.5 * h)));
        let l4 = riccati(p, &(v + l3 * h));
        v += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
        v = (v + v.transpose()) * 0.5;
        out.push(v);
    }
    out
}

fn check_step(state: &GaussianOscillatorState, cfg: &TrajectoryConfig) -> Result<()> {
    cfg.validate()?;
    let rate = state.params.fastest_rate();
    if cfg.dt * rate >= 0.1 {
        return Err(Error::StepSize(format!(
            "dt = {:e} s does not resolve the rate {rate:e} s⁻¹",
            cfg.dt
        )));
    }
    Ok(())
}

fn integrate_means(
    state: &GaussianOscillatorState,
    covs: &[Matrix4<f64>],
    cfg: &TrajectoryConfig,
    index: usize,
) -> (Vec<Vector4<f64>>, Option<Vec<[f64; 2]>>) {
    let p = &state.params;
    let a = p.drift();
    let mut rng = cfg.rng(index);
    let sqrt_dt = cfg.dt.sqrt();
    let monitored = p.coupling > 0.0;
    let record_scale = if monitored {
        (p.hbar / (2.0 * p.coupling)).sqrt()
    } else {
        0.0
    };
    let mut x = state.mean;
    let mut means = Vec::with_capacity(cfg.steps + 1);
    let mut records = Vec::with_capacity(if monitored { cfg.steps } else { 0 });
    means.push(x);
    for v in covs.iter().take(cfg.steps) {
        let dw: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let dw = [dw[0] * sqrt_dt, dw[1] * sqrt_dt];
        if monitored {
            records.push([
                x[0] + record_scale * dw[0] / cfg.dt,
                x[2] + record_scale * dw[1] / cfg.dt,
            ]);
        }
        let g = gains(p, v);
        x = x + a * x * cfg.dt + g[0] * dw[0] + g[1] * dw[1];
        means.push(x);
    }
    (means, monitored.then_some(records))
}

/// One conditional trajectory, stream `index` of the master seed.
pub fn run_ktm_trajectory(
    state: &GaussianOscillatorState,
    cfg: &TrajectoryConfig,
    index: usize,
) -> Result<KtmTrajectory> {
    check_step(state, cfg)?;
    let covs = covariance_path(state, cfg);
    let (means, records) = integrate_means(state, &covs, cfg, index);
    Ok(KtmTrajectory {
        times: (0..=cfg.steps).map(|s| s as f64 * cfg.dt).collect(),
        means,
        covariances: covs,
        records,
    })
}

/// Ensemble statistics at the final time and record averages over the run.
#[derive(Debug, Clone, PartialEq)]
pub struct KtmEnsemble {
    /// E[X̄]
    pub mean: Vector4<f64>,
    pub mean_std_error: Vector4<f64>,
    /// Cov(X̄) + V_c, the unconditional covariance estimate.
    pub covariance: Matrix4<f64>,
    pub covariance_std_error: Matrix4<f64>,
    /// Conditional covariance at the final time.
    pub conditional_covariance: Matrix4<f64>,
    /// Ensemble mean of each record, averaged over all steps, and the
    /// matching ensemble mean of ⟨x_k⟩ over the same steps.
    pub record_mean: Option<[f64; 2]>,
    pub record_std_error: Option<[f64; 2]>,
    pub position_mean: [f64; 2],
}

pub fn run_ktm_ensemble(
    state: &GaussianOscillatorState,
    cfg: &TrajectoryConfig,
) -> Result<KtmEnsemble> {
    check_step(state, cfg)?;
    let covs = covariance_path(state, cfg);
    let runs: Vec<_> = (0..cfg.ensemble)
        .into_par_iter()
        .map(|i| integrate_means(state, &covs, cfg, i))
        .collect();
    let m = runs.len() as f64;
    let last: Vec<Vector4<f64>> = runs.iter().map(|r| *r.0.last().unwrap()).collect();
    let avg = |f: &dyn Fn(&Vector4<f64>) -> f64| {
        let mut s = Neumaier::default();
        for x in &last {
            s.add(f(x));
        }
        s.total() / m
    };
    let mean = Vector4::from_fn(|a, _| avg(&|x| x[a]));
    let mean_std_error = Vector4::from_fn(|a, _| {
        let var = avg(&|x| (x[a] - mean[a]).powi(2)) * m / (m - 1.0).max(1.0);
        (var / m).sqrt()
    });
    let vc = *covs.last().unwrap();
    let mut covariance = Matrix4::zeros();
    let mut covariance_std_error = Matrix4::zeros();
    for a in 0..4 {
        for b in 0..4 {
            let c = avg(&|x| (x[a] - mean[a]) * (x[b] - mean[b]));
            let spread = avg(&|x| ((x[a] - mean[a]) * (x[b] - mean[b]) - c).powi(2));
            covariance[(a, b)] = c + vc[(a, b)];
            covariance_std_error[(a, b)] = (spread / m).sqrt();
        }
    }
    // record and position means over all steps and trajectories
    let per_traj_pos: Vec<[f64; 2]> = runs
        .iter()
        .map(|r| {
            let n = cfg.steps.max(1) as f64;
            let s0: f64 = r.0.iter().take(cfg.steps).map(|x| x[0]).sum();
            let s2: f64 = r.0.iter().take(cfg.steps).map(|x| x[2]).sum();
            [s0 / n, s2 / n]
        })
        .collect();
    let position_mean = [
        per_traj_pos.iter().map(|v| v[0]).sum::<f64>() / m,
        per_traj_pos.iter().map(|v| v[1]).sum::<f64>() / m,
    ];
    let (record_mean, record_std_error) = if runs[0].1.is_some() {
        let per_traj: Vec<[f64; 2]> = runs
            .iter()
            .map(|r| {
                let recs = r.1.as_ref().unwrap();
                let n = recs.len().max(1) as f64;
                [
                    recs.iter().map(|v| v[0]).sum::<f64>() / n,
                    recs.iter().map(|v| v[1]).sum::<f64>() / n,
                ]
            })
            .collect();
        let mut mean = [0.0; 2];
        let mut err = [0.0; 2];
        for k in 0..2 {
            mean[k] = per_traj.iter().map(|v| v[k]).sum::<f64>() / m;
            let var = per_traj
                .iter()
                .map(|v| (v[k] - mean[k]).powi(2))
                .sum::<f64>()
                / (m - 1.0).max(1.0);
            err[k] = (var / m).sqrt();
        }
        (Some(mean), Some(err))
    } else {
        (None, None)
    };
    Ok(KtmEnsemble {
        mean,
        mean_std_error,
        covariance,
        covariance_std_error,
        conditional_covariance: vc,
        record_mean,
        record_std_error,
        position_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::evolve_ktm_gaussian;

    fn params(k: f64) -> KtmParams {
        KtmParams::with_renormalized(1.0, [1.0, 1.0], [1.0, 1.2], k).unwrap()
    }

    #[test]
    fn uncoupled_motion_is_deterministic() {
        let s = GaussianOscillatorState::coherent(params(0.0), Vector4::new(1.0, 0.0, 0.0, 0.5));
        let cfg = TrajectoryConfig::new(1e-3, 3000, 5, 1).unwrap();
        let a = run_ktm_trajectory(&s, &cfg, 0).unwrap();
        let b = run_ktm_trajectory(&s, &cfg, 7).unwrap();
        assert_eq!(a.means, b.means);
        assert!(a.records.is_none());
        assert!((a.means.last().unwrap()[0] - 3f64.cos()).abs() < 1e-2);
    }

    #[test]
    fn conditioning_keeps_the_state_purer() {
        let s = GaussianOscillatorState::ground(params(0.05));
        let cfg = TrajectoryConfig::new(1e-3, 4000, 5, 1).unwrap();
        let t = run_ktm_trajectory(&s, &cfg, 0).unwrap();
        let uncond = evolve_ktm_gaussian(&s, 4.0, 1e-3).unwrap();
        let cond = GaussianOscillatorState {
            mean: Vector4::zeros(),
            cov: *t.covariances.last().unwrap(),
            params: s.params,
        };
        assert!(cond.purity() > uncond.purity());
        // pure initial state stays pure under the diffusive unraveling
        assert!((cond.purity() - 1.0).abs() < 1e-6, "{}", cond.purity());
        cond.check().unwrap();
    }

    #[test]
    fn ensemble_reproduces_the_master_equation() {
        let s = GaussianOscillatorState::coherent(params(0.05), Vector4::new(1.0, 0.0, 0.0, 0.5));
        let cfg = TrajectoryConfig::new(2e-3, 1000, 11, 1000).unwrap();
        let e = run_ktm_ensemble(&s, &cfg).unwrap();
        let exact = evolve_ktm_gaussian(&s, 2.0, 2e-3).unwrap();
        for a in 0..4 {
            assert!((e.mean[a] - exact.mean[a]).abs() < 3.0 * e.mean_std_error[a] + 1e-9);
            for b in 0..4 {
                let d = (e.covariance[(a, b)] - exact.cov[(a, b)]).abs();
                assert!(
                    d < 3.0 * e.covariance_std_error[(a, b)] + 1e-3,
                    "({a},{b}) {d}"
                );
            }
        }
    }
}
