//! Schrödinger–Newton equation: a single wavefunction moving in the
//! Newtonian potential of its own probability-weighted mass.
//!
//! Two geometries are supported. The radial grid carries spherically
//! symmetric states in 3D (u = √(4π) r ψ on a sine basis, potential from the
//! shell theorem). The line grid carries 1D states with a softened kernel,
//! used for the two-packet scenario.

mod epr;
mod transforms;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::physcore::{Constants, UnitSystem};
use crate::{Error, Result};
use transforms::{periodic_wavenumbers, PeriodicTransform, SineTransform};

pub use epr::{centroid_separation, epr_scenario, EprConfig, EprOutcome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    /// Points r_j = j·L/(n+1), j = 1..n, with u(0) = u(L) = 0.
    Radial { n: usize, extent: f64 },
    /// Periodic points x_j = −L/2 + j·L/n, j = 0..n−1.
    Line { n: usize, extent: f64 },
}

impl Grid {
    pub fn len(&self) -> usize {
        match *self {
            Grid::Radial { n, .. } | Grid::Line { n, .. } => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn extent(&self) -> f64 {
        match *self {
            Grid::Radial { extent, .. } | Grid::Line { extent, .. } => extent,
        }
    }

    pub fn spacing(&self) -> f64 {
        match *self {
            Grid::Radial { n, extent } => extent / (n + 1) as f64,
            Grid::Line { n, extent } => extent / n as f64,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.spacing();
        match *self {
            Grid::Radial { n, .. } => (1..=n).map(|j| j as f64 * h).collect(),
            Grid::Line { n, extent } => (0..n).map(|j| -0.5 * extent + j as f64 * h).collect(),
        }
    }

    fn wavenumbers(&self) -> Vec<f64> {
        match *self {
            Grid::Radial { n, extent } => (1..=n).map(|q| q as f64 * PI / extent).collect(),
            Grid::Line { n, extent } => periodic_wavenumbers(n, extent),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.len() < 8 {
            return Err(Error::domain("n", "grid needs at least 8 points"));
        }
        if !(self.extent() > 0.0 && self.extent().is_finite()) {
            return Err(Error::domain("extent", "must be positive"));
        }
        Ok(())
    }
}

/// Constants of the equation in the unit system of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnParams {
    pub hbar: f64,
    pub mass: f64,
    /// Newton's constant; zero switches self-gravity off.
    pub g: f64,
    /// Softening length of the line kernel −Gm²/√(x² + a²); `None` means
    /// two grid cells.
    pub softening: Option<f64>,
}

impl SnParams {
    /// ħ = G = m = 1.
    pub fn scaled() -> Self {
        SnParams {
            hbar: 1.0,
            mass: 1.0,
            g: 1.0,
            softening: None,
        }
    }

    pub fn free() -> Self {
        SnParams {
            g: 0.0,
            ..SnParams::scaled()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    /// Radial: u_j = √(4π) r_j ψ(r_j); line: ψ(x_j).
    pub amplitudes: Vec<Complex64>,
    pub params: SnParams,
    /// Conversion between the grid units and SI.
    pub units: UnitSystem,
}

/// Equilibrium width ħ²/(Gm³).
pub fn equilibrium_width(k: &Constants, m: f64) -> f64 {
    k.hbar * k.hbar / (k.g * m.powi(3))
}

impl WaveField {
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>, params: SnParams) -> Result<Self> {
        grid.validate()?;
        if amplitudes.len() != grid.len() {
            return Err(Error::domain("amplitudes", "length differs from the grid"));
        }
        let mut f = WaveField {
            grid,
            amplitudes,
            params,
            units: UnitSystem::gravitational(&Constants::si(), 1.0),
        };
        let norm = f.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::domain("amplitudes", "state has zero norm"));
        }
        let s = 1.0 / norm.sqrt();
        for a in &mut f.amplitudes {
            *a *= s;
        }
        Ok(f)
    }

    /// Radial Gaussian with per-axis width σ and momentum zero.
    pub fn radial_gaussian(params: SnParams, n: usize, extent: f64, sigma: f64) -> Result<Self> {
        let grid = Grid::Radial { n, extent };
        let amps = grid
            .points()
            .iter()
            .map(|r| Complex64::new(r * (-r * r / (4.0 * sigma * sigma)).exp(), 0.0))
            .collect();
        WaveField::new(grid, amps, params)
    }

    /// Sum of Gaussians ψ = Σ exp(−(x−c)²/4σ²), normalized.
    pub fn line_gaussians(
        params: SnParams,
        n: usize,
        extent: f64,
        centres: &[f64],
        sigma: f64,
    ) -> Result<Self> {
        let grid = Grid::Line { n, extent };
        let amps = grid
            .points()
            .iter()
            .map(|x| {
                let v: f64 = centres
                    .iter()
                    .map(|c| (-(x - c).powi(2) / (4.0 * sigma * sigma)).exp())
                    .sum();
                Complex64::new(v, 0.0)
            })
            .collect();
        WaveField::new(grid, amps, params)
    }

    /// Σ|u_j|² h, the total probability.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Probability per grid cell, |u_j|² h.
    pub fn cell_probabilities(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        self.amplitudes.iter().map(|a| a.norm_sqr() * h).collect()
    }

    /// Per-axis width: √(⟨r²⟩/3) on the radial grid, the standard deviation
    /// on the line.
    pub fn width(&self) -> f64 {
        let p = self.cell_probabilities();
        let x = self.grid.points();
        let total: f64 = p.iter().sum();
        match self.grid {
            Grid::Radial { .. } => {
                let r2: f64 = p.iter().zip(&x).map(|(w, r)| w * r * r).sum::<f64>() / total;
                (r2 / 3.0).sqrt()
            }
            Grid::Line { .. } => {
                let m: f64 = p.iter().zip(&x).map(|(w, x)| w * x).sum::<f64>() / total;
                let v: f64 = p
                    .iter()
                    .zip(&x)
                    .map(|(w, x)| w * (x - m).powi(2))
                    .sum::<f64>()
                    / total;
                v.sqrt()
            }
        }
    }
}

/// Grid-bound operators for one field: transforms and the line kernel.
pub(crate) struct Propagator {
    grid: Grid,
    params: SnParams,
    k2: Vec<f64>,
    sine: Option<SineTransform>,
    periodic: Option<PeriodicTransform>,
    /// Zero-padded transform of the softened kernel.
    kernel_ft: Option<(PeriodicTransform, Vec<Complex64>)>,
}

impl Propagator {
    pub(crate) fn new(field: &WaveField) -> Self {
        let grid = field.grid;
        let k2 = grid.wavenumbers().iter().map(|k| k * k).collect();
        let (sine, periodic, kernel_ft) = match grid {
            Grid::Radial { n, .. } => (Some(SineTransform::new(n)), None, None),
            Grid::Line { n, .. } => {
                let h = grid.spacing();
                let a = field.params.softening.unwrap_or(2.0 * h);
                let m = 2 * n;
                let t = PeriodicTransform::new(m);
                let mut ker: Vec<Complex64> = (0..m)
                    .map(|j| {
                        let off = if j < n { j as f64 } else { j as f64 - m as f64 };
                        Complex64::new(-1.0 / ((off * h).powi(2) + a * a).sqrt(), 0.0)
                    })
                    .collect();
                t.forward(&mut ker);
                (None, Some(PeriodicTransform::new(n)), Some((t, ker)))
            }
        };
        Propagator {
            grid,
            params: field.params,
            k2,
            sine,
            periodic,
            kernel_ft,
        }
    }

    fn forward(&self, x: &mut [Complex64]) {
        match (&self.sine, &self.periodic) {
            (Some(s), _) => s.apply(x),
            (_, Some(p)) => p.forward(x),
            _ => unreachable!(),
        }
    }

    fn inverse(&self, x: &mut [Complex64]) {
        match (&self.sine, &self.periodic) {
            (Some(s), _) => s.inverse(x),
            (_, Some(p)) => p.inverse(x),
            _ => unreachable!(),
        }
    }

    /// Self-potential V_j (energy) from the current amplitudes.
    pub(crate) fn potential(&self, amps: &[Complex64]) -> Vec<f64> {
        let SnParams { g, mass, .. } = self.params;
        let n = amps.len();
        if g == 0.0 {
            return vec![0.0; n];
        }
        let h = self.grid.spacing();
        let gm2 = g * mass * mass;
        match self.grid {
            Grid::Radial { .. } => {
                let r = self.grid.points();
                let f: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
                // enclosed probability M(r) and outer integral ∫_r^∞ f/r'
                let mut enclosed = vec![0.0; n];
                let mut acc = 0.5 * f[0] * h;
                enclosed[0] = acc;
                for j in 1..n {
                    acc += 0.5 * (f[j - 1] + f[j]) * h;
                    enclosed[j] = acc;
                }
                let mut outer = vec![0.0; n];
                let mut acc = 0.5 * f[n - 1] / r[n - 1] * h;
                outer[n - 1] = acc;
                for j in (0..n - 1).rev() {
                    acc += 0.5 * (f[j] / r[j] + f[j + 1] / r[j + 1]) * h;
                    outer[j] = acc;
                }
                (0..n)
                    .map(|j| -gm2 * (enclosed[j] / r[j] + outer[j]))
                    .collect()
            }
            Grid::Line { .. } => {
                let (t, ker) = self.kernel_ft.as_ref().unwrap();
                let m = 2 * n;
                let mut buf = vec![Complex64::new(0.0, 0.0); m];
                for j in 0..n {
                    buf[j] = Complex64::new(amps[j].norm_sqr() * h, 0.0);
                }
                t.forward(&mut buf);
                for (b, k) in buf.iter_mut().zip(ker) {
                    *b *= k;
                }
                t.inverse(&mut buf);
                (0..n).map(|j| gm2 * buf[j].re).collect()
            }
        }
    }

    /// Kinetic energy ⟨p²⟩/2m from the mode amplitudes.
    pub(crate) fn kinetic(&self, amps: &[Complex64]) -> (f64, f64) {
        let mut modes = amps.to_vec();
        self.forward(&mut modes);
        let w: Vec<f64> = modes.iter().map(|c| c.norm_sqr()).collect();
        let total: f64 = w.iter().sum();
        let k2: f64 = w.iter().zip(&self.k2).map(|(a, b)| a * b).sum::<f64>() / total;
        // fraction of weight in the top tenth of the spectrum
        let cut = self.k2.iter().cloned().fold(0.0, f64::max) * 0.81;
        let tail: f64 = w
            .iter()
            .zip(&self.k2)
            .filter(|(_, k)| **k >= cut)
            .map(|(a, _)| a)
            .sum::<f64>()
            / total;
        let SnParams { hbar, mass, .. } = self.params;
        (hbar * hbar * k2 / (2.0 * mass), tail)
    }

    /// Kinetic energy plus half the self-interaction.
    pub(crate) fn energy(&self, amps: &[Complex64]) -> f64 {
        let v = self.potential(amps);
        let h = self.grid.spacing();
        let w: f64 = amps
            .iter()
            .zip(&v)
            .map(|(a, v)| a.norm_sqr() * v)
            .sum::<f64>()
            * h;
        self.kinetic(amps).0 + 0.5 * w
    }

    /// exp(−i ħk² τ/2m) in real time, exp(−ħk² τ/2m) in imaginary time.
    fn kinetic_step(&self, amps: &mut [Complex64], tau: f64, imaginary: bool) {
        let SnParams { hbar, mass, .. } = self.params;
        self.forward(amps);
        for (a, k2) in amps.iter_mut().zip(&self.k2) {
            let phase = hbar * k2 * tau / (2.0 * mass);
            *a *= if imaginary {
                Complex64::new((-phase).exp(), 0.0)
            } else {
                Complex64::from_polar(1.0, -phase)
            };
        }
        self.inverse(amps);
    }

    /// One Strang step; returns the largest potential phase |V|dt/ħ.
    ///
    /// Real time takes the potential from the half-stepped state (midpoint
    /// rule, second order). Imaginary time takes it from the normalized
    /// input so that the fixed point is the Strang ground state of H[ψ*]
    /// itself, off by O(dτ²) rather than O(dτ).
    pub(crate) fn step(&self, amps: &mut [Complex64], dt: f64, imaginary: bool) -> f64 {
        let hbar = self.params.hbar;
        let frozen = imaginary.then(|| self.potential(amps));
        self.kinetic_step(amps, 0.5 * dt, imaginary);
        let v = frozen.unwrap_or_else(|| self.potential(amps));
        let mut max_phase: f64 = 0.0;
        for (a, v) in amps.iter_mut().zip(&v) {
            let phase = v * dt / hbar;
            max_phase = max_phase.max(phase.abs());
            *a *= if imaginary {
                Complex64::new((-phase).exp(), 0.0)
            } else {
                Complex64::from_polar(1.0, -phase)
            };
        }
        self.kinetic_step(amps, 0.5 * dt, imaginary);
        max_phase
    }
}

/// Result of a real-time run.
#[derive(Debug, Clone, PartialEq)]
pub struct SnRun {
    pub field: WaveField,
    pub times: Vec<f64>,
    pub widths: Vec<f64>,
    pub energies: Vec<f64>,
    /// Largest |norm − 1| seen.
    pub norm_error: f64,
}

impl SnRun {
    /// Largest |E(t) − E(0)| / |E(0)|.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies
            .iter()
            .map(|e| (e - e0).abs())
            .fold(0.0, f64::max)
            / e0.abs().max(f64::MIN_POSITIVE)
    }
}

const NORM_TOL: f64 = 1e-8;
const ALIAS_TOL: f64 = 1e-6;
const MAX_POTENTIAL_PHASE: f64 = 0.1;

fn check_resolution(prop: &Propagator, field: &WaveField) -> Result<()> {
    let (_, tail) = prop.kinetic(&field.amplitudes);
    if tail > ALIAS_TOL {
        return Err(Error::Resolution(format!(
            "spectral tail holds {tail:.2e} of the norm; refine the grid"
        )));
    }
    let width = field.width();
    if field.grid.extent() < 8.0 * width {
        return Err(Error::Resolution(format!(
            "grid extent {:.3e} is less than 8 widths ({width:.3e})",
            field.grid.extent()
        )));
    }
    Ok(())
}

/// Real-time split-step evolution over `[0, t_end]`, recording width and
/// energy every `stride` steps.
pub fn sn_evolve(field: &WaveField, dt: f64, t_end: f64, stride: usize) -> Result<SnRun> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::domain("dt", "need dt > 0 and T ≥ 0"));
    }
    let stride = stride.max(1);
    let prop = Propagator::new(field);
    let mut amps = field.amplitudes.clone();
    let mut out = field.clone();
    let steps = (t_end / dt).round() as usize;
    let mut times = vec![0.0];
    let mut widths = vec![field.width()];
    let mut energies = vec![prop.energy(&amps)];
    let mut norm_error: f64 = (field.norm() - 1.0).abs();
    check_resolution(&prop, field)?;
    for s in 1..=steps {
        let phase = prop.step(&mut amps, dt, false);
        if phase > MAX_POTENTIAL_PHASE {
            return Err(Error::StepSize(format!(
                "self-potential phase {phase:.3} rad per step exceeds {MAX_POTENTIAL_PHASE}"
            )));
        }
        if s % stride == 0 || s == steps {
            out.amplitudes.clone_from(&amps);
            let norm = out.norm();
            norm_error = norm_error.max((norm - 1.0).abs());
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::NumericalInstability(format!(
                    "norm drifted to {norm}"
                )));
            }
            check_resolution(&prop, &out)?;
            times.push(s as f64 * dt);
            widths.push(out.width());
            energies.push(prop.energy(&amps));
        }
    }
    out.amplitudes = amps;
    Ok(SnRun {
        field: out,
        times,
        widths,
        energies,
        norm_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub field: WaveField,
    pub energy: f64,
    pub kinetic: f64,
    /// ½⟨V⟩, the self-interaction energy.
    pub interaction: f64,
    pub iterations: usize,
    /// Energies across the iteration, for monotonicity checks.
    pub energy_history: Vec<f64>,
}

impl GroundState {
    /// 2T / |W|, equal to 1 for an exact stationary state of the 1/r
    /// interaction.
    pub fn virial_ratio(&self) -> f64 {
        2.0 * self.kinetic / self.interaction.abs()
    }

    pub fn width(&self) -> f64 {
        self.field.width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    pub n: usize,
    pub extent: f64,
    /// Initial imaginary time step, halved `refinements` times as the
    /// energy settles; the split-step fixed point carries an O(dτ²) error.
    pub dtau: f64,
    pub refinements: usize,
    /// Bound on the energy change per iteration.
    pub tolerance: f64,
    /// Bound on ‖Δψ‖/dτ per iteration.
    pub residual: f64,
    pub max_iterations: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        GroundStateOptions {
            n: 511,
            extent: 60.0,
            dtau: 0.05,
            refinements: 1,
            tolerance: 1e-10,
            residual: 1e-8,
            max_iterations: 400_000,
        }
    }
}

/// Imaginary-time relaxation to the lowest-energy radial state.
pub fn sn_ground_state(params: SnParams, opts: GroundStateOptions) -> Result<GroundState> {
    if params.g <= 0.0 {
        return Err(Error::domain("g", "a bound state needs self-gravity"));
    }
    let guess = params.hbar * params.hbar / (params.g * params.mass.powi(3));
    let mut field = WaveField::radial_gaussian(params, opts.n, opts.extent, 2.0 * guess)?;
    let prop = Propagator::new(&field);
    let h = field.grid.spacing();
    let mut amps = std::mem::take(&mut field.amplitudes);
    let mut dtau = opts.dtau;
    let mut e_prev = prop.energy(&amps);
    let mut history = vec![e_prev];
    let mut refinements = 0;
    for it in 1..=opts.max_iterations {
        let before = amps.clone();
        prop.step(&mut amps, dtau, true);
        let norm = (amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * h).sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        let e = prop.energy(&amps);
        history.push(e);
        // ‖Δψ‖/dτ approximates the residual ‖(H − ε)ψ‖/ħ
        let residual = (amps
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * h)
            .sqrt()
            / dtau;
        if (e - e_prev).abs() < opts.tolerance && residual < opts.residual {
            if refinements == opts.refinements {
                let (kinetic, _) = prop.kinetic(&amps);
                field.amplitudes = amps;
                return Ok(GroundState {
                    energy: e,
                    kinetic,
                    interaction: e - kinetic,
                    iterations: it,
                    energy_history: history,
                    field,
                });
            }
            refinements += 1;
            dtau *= 0.5;
        }
        e_prev = e;
    }
    Err(Error::NonConvergence(format!(
        "imaginary-time iteration did not settle in {} steps",
        opts.max_iterations
    )))
}
