//! One particle split into two packets that attract each other through the
//! self-gravity of the Schrödinger–Newton equation.

use super::*;
use crate::physcore::quad;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EprConfig {
    pub params: SnParams,
    /// Initial distance between the packet centres.
    pub separation: f64,
    /// Per-packet standard deviation of |ψ|².
    pub packet_width: f64,
    pub attraction: bool,
    pub t_end: f64,
    pub dt: f64,
    pub n: usize,
    pub extent: f64,
    pub samples: usize,
}

impl EprConfig {
    /// Scaled units over one period 2π: packets 12 apart with width 1.8,
    /// which spread to about 2.5 and so never overlap appreciably.
    pub fn scaled(attraction: bool) -> Self {
        EprConfig {
            params: SnParams::scaled(),
            separation: 12.0,
            packet_width: 1.8,
            attraction,
            t_end: 2.0 * PI,
            dt: 5e-3,
            n: 4096,
            extent: 64.0,
            samples: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EprOutcome {
    pub times: Vec<f64>,
    /// Distance between the density maxima of the x < 0 and x > 0 halves.
    pub separations: Vec<f64>,
    pub final_separation: f64,
    pub grid_spacing: f64,
    /// First sample time at which the two maxima met at the centre.
    pub merge_time: Option<f64>,
}

/// Position of the largest value in `p[range]`, refined by a parabola.
fn peak(x: &[f64], p: &[f64], range: std::ops::Range<usize>) -> (f64, bool) {
    let (lo, hi) = (range.start, range.end);
    let j = (lo..hi).max_by(|a, b| p[*a].total_cmp(&p[*b])).unwrap();
    let at_edge = j == lo || j + 1 == hi;
    if j == 0 || j + 1 >= p.len() {
        return (x[j], at_edge);
    }
    let (a, b, c) = (p[j - 1], p[j], p[j + 1]);
    let den = a - 2.0 * b + c;
    let shift = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
    (x[j] + shift.clamp(-0.5, 0.5) * (x[1] - x[0]), at_edge)
}

fn peak_separation(field: &WaveField) -> (f64, bool) {
    let x = field.grid.points();
    let p = field.cell_probabilities();
    let mid = x.partition_point(|v| *v < 0.0);
    let (l, le) = peak(&x, &p, 0..mid);
    let (r, re) = peak(&x, &p, mid..x.len());
    (r - l, le || re)
}

pub fn epr_scenario(cfg: &EprConfig) -> Result<EprOutcome> {
    if !(cfg.separation > 0.0 && cfg.packet_width > 0.0) {
        return Err(Error::domain(
            "separation",
            "separation and width must be positive",
        ));
    }
    let params = SnParams {
        g: if cfg.attraction { cfg.params.g } else { 0.0 },
        ..cfg.params
    };
    let half = 0.5 * cfg.separation;
    let mut field =
        WaveField::line_gaussians(params, cfg.n, cfg.extent, &[-half, half], cfg.packet_width)?;
    let samples = cfg.samples.max(1);
    let chunk = cfg.t_end / samples as f64;
    let (s0, _) = peak_separation(&field);
    let mut times = vec![0.0];
    let mut separations = vec![s0];
    let mut merge_time = None;
    for i in 1..=samples {
        let run = sn_evolve(&field, cfg.dt.min(chunk), chunk, usize::MAX)?;
        field = run.field;
        let (s, merged) = peak_separation(&field);
        let t = i as f64 * chunk;
        if merged && merge_time.is_none() {
            merge_time = Some(t);
        }
        times.push(t);
        separations.push(s);
    }
    Ok(EprOutcome {
        final_separation: *separations.last().unwrap(),
        times,
        separations,
        grid_spacing: field.grid.spacing(),
        merge_time,
    })
}

/// Centroid model of the two halves: each carries probability ½ with a
/// freely spreading Gaussian profile, and the right centroid obeys
/// m ẍ = ½ Gm² ∫ N(u; s, 2σ²) ∂_u(1/√(u² + a²)) du. Returns the separation
/// at the requested times (RK4 with `steps` per interval).
pub fn centroid_separation(
    cfg: &EprConfig,
    softening: f64,
    times: &[f64],
    steps: usize,
) -> Vec<f64> {
    let SnParams { hbar, mass, g, .. } = cfg.params;
    let s0 = cfg.packet_width;
    let sigma = |t: f64| s0 * (1.0 + (hbar * t / (2.0 * mass * s0 * s0)).powi(2)).sqrt();
    let (nodes, weights) = quad::gauss_legendre(64);
    let accel = |s: f64, t: f64| {
        let w = std::f64::consts::SQRT_2 * sigma(t);
        // ∫ N(u; s, w²) · (−u)/(u² + a²)^{3/2} du over ±8w
        let mut acc = 0.0;
        for (z, wt) in nodes.iter().zip(&weights) {
            let u = s + 8.0 * w * z;
            let gauss = (-(u - s).powi(2) / (2.0 * w * w)).exp() / (w * (2.0 * PI).sqrt());
            acc += wt * 8.0 * w * gauss * (-u) / (u * u + softening * softening).powf(1.5);
        }
        // separation: s̈ = 2ẍ_R
        2.0 * 0.5 * g * mass * acc
    };
    let mut out = Vec::with_capacity(times.len());
    let (mut s, mut v, mut t) = (cfg.separation, 0.0, 0.0);
    for &target in times {
        let h = (target - t) / steps as f64;
        for _ in 0..steps {
            let (k1s, k1v) = (v, accel(s, t));
            let (k2s, k2v) = (v + 0.5 * h * k1v, accel(s + 0.5 * h * k1s, t + 0.5 * h));
            let (k3s, k3v) = (v + 0.5 * h * k2v, accel(s + 0.5 * h * k2s, t + 0.5 * h));
            let (k4s, k4v) = (v + h * k3v, accel(s + h * k3s, t + h));
            s += h / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            t += h;
        }
        out.push(s);
    }
    out
}
