//! The work behind each subcommand. Every command computes its complete
//! output in memory; nothing touches the disk until it has succeeded.

use super::output::{Cell, Check, Table};
use super::scenario::{ModelTag, ScenarioConfig};
use crate::bounds::{self, ExperimentBound};
use crate::error::{Error, Result};
use crate::kernels::adler::AdlerPreset;
use crate::kernels::diosi::DiosiKernel;
use crate::kernels::td::td_decoherence_kernel;
use crate::lindblad::{
    evolve_dp_pointer, evolve_ktm_gaussian, evolve_nonmarkovian_pointer, evolve_td_pointer,
    MemoryKernel, PointerSystem,
};
use crate::rates::{
    dp_decay_rate, dp_decay_rate_kspace, dp_rate_matrix, karolyhazy_coherence_cell,
    penrose_delta_e, penrose_tau, RateMethod, SuperpositionSpec,
};
use crate::snsolver::{epr_scenario, EprConfig};
use crate::snsolver::{sn_evolve, sn_ground_state, Grid, GroundStateOptions, WaveField};
use crate::unravel::run_diosi_ensemble;
use crate::unravel::wilson_interval;
use crate::unravel::{run_ktm_ensemble, run_ktm_trajectory};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

/// Files and figures produced by one command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub results: serde_json::Map<String, Value>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn table(&mut self, name: &str, t: &Table) {
        self.files.push((name.to_string(), t.to_csv()));
    }

    fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    fn set(&mut self, key: &str, v: Value) {
        self.results.insert(key.to_string(), v);
    }
}

fn describe(spec: &SuperpositionSpec) -> String {
    let m = spec.density.total_mass();
    let size = spec.density.size();
    if spec.branch_count() == 2 {
        format!("m={m:e};size={size:e};d={:e}", spec.separation(0, 1))
    } else {
        format!("m={m:e};size={size:e};branches={}", spec.branch_count())
    }
}

fn method_name(m: RateMethod) -> &'static str {
    match m {
        RateMethod::ClosedForm => "closed-form",
        RateMethod::KSpaceQuadrature => "k-space",
    }
}

const RATE_HEADER: [&str; 6] = [
    "model",
    "method",
    "parameters",
    "rate",
    "time",
    "error_estimate",
];

/// Decay rates for the configured spec. Without a model tag every model
/// that applies to a two-branch spec is reported.
pub fn rates(cfg: &ScenarioConfig) -> Result<Outcome> {
    let k = &cfg.constants;
    let tag = cfg.model()?;
    let mut out = Outcome::default();
    let mut t = Table::new(&RATE_HEADER);
    if tag == Some(ModelTag::Karolyhazy) {
        let rho = cfg.density()?;
        let cell = karolyhazy_coherence_cell(k, rho.total_mass(), rho.size())?;
        let params = format!(
            "m={:e};R={:e};a_K={:e}",
            rho.total_mass(),
            rho.size(),
            cell.a_k
        );
        t.push(vec![
            "karolyhazy".into(),
            "closed-form".into(),
            params.into(),
            (1.0 / cell.tau_k).into(),
            cell.tau_k.into(),
            0.0.into(),
        ]);
        out.set("a_k", json!(cell.a_k));
        out.set("tau_k", json!(cell.tau_k));
        out.set("point_like", json!(cell.point_like));
        out.table("rates.csv", &t);
        return Ok(out);
    }
    let spec = cfg.superposition()?;
    let params = describe(&spec);
    if spec.branch_count() > 2 {
        if !matches!(tag, None | Some(ModelTag::Diosi)) {
            return Err(Error::Config(format!(
                "[superposition] {} branches: only the dp model takes more than two",
                spec.branch_count()
            )));
        }
        let m = dp_rate_matrix(k, &spec)?;
        for i in 0..spec.branch_count() {
            for j in i + 1..spec.branch_count() {
                let r = m[(i, j)];
                t.push(vec![
                    "dp".into(),
                    format!("pair {i}-{j}").into(),
                    params.clone().into(),
                    r.into(),
                    (1.0 / r).into(),
                    (8.0 * f64::EPSILON * r).into(),
                ]);
            }
        }
        out.table("rates.csv", &t);
        return Ok(out);
    }
    let want = |m: ModelTag| tag.is_none() || tag == Some(m);
    if want(ModelTag::Diosi) || want(ModelTag::Penrose) {
        let dp = dp_decay_rate(k, &spec)?;
        t.push(vec![
            "dp".into(),
            method_name(dp.method).into(),
            params.clone().into(),
            dp.rate.into(),
            dp.time.into(),
            dp.error_estimate.into(),
        ]);
        out.set("tau_d", json!(dp.time));
        if spec.density.is_spherical() && want(ModelTag::Diosi) {
            let q = dp_decay_rate_kspace(k, &spec, 1e-9)?;
            t.push(vec![
                "dp".into(),
                method_name(q.method).into(),
                params.clone().into(),
                q.rate.into(),
                q.time.into(),
                q.error_estimate.into(),
            ]);
        }
    }
    if want(ModelTag::Penrose) {
        let p = penrose_tau(k, &spec)?;
        t.push(vec![
            "penrose".into(),
            method_name(p.method).into(),
            params.clone().into(),
            p.rate.into(),
            p.time.into(),
            p.error_estimate.into(),
        ]);
        out.set("tau_p", json!(p.time));
        out.set("delta_e", json!(penrose_delta_e(k, &spec)?));
    }
    if want(ModelTag::Td) {
        let kernel = cfg.td_kernel()?;
        let r = kernel.pair_rate(&spec.density, spec.separation(0, 1))?;
        t.push(vec![
            "td".into(),
            "closed-form".into(),
            params.clone().into(),
            r.into(),
            (1.0 / r).into(),
            (8.0 * f64::EPSILON * r).into(),
        ]);
        out.set("td_rate", json!(r));
        if tag == Some(ModelTag::Td) {
            out.set("dp_rate", json!(dp_decay_rate(k, &spec)?.rate));
        }
    }
    if t.is_empty() {
        return Err(Error::Config(format!(
            "`rates` has nothing to report for model `{}`",
            tag.map_or("?", ModelTag::name)
        )));
    }
    out.table("rates.csv", &t);
    Ok(out)
}

/// Tabulates the configured kernel on a separation grid.
pub fn kernel(cfg: &ScenarioConfig) -> Result<Outcome> {
    let tag = cfg.require_model()?;
    let points = cfg.raw.get_or("kernel", "points", 101usize)?.max(2);
    let mut out = Outcome::default();
    let grid = |r_max: f64| -> Vec<f64> {
        (0..points)
            .map(|i| r_max * i as f64 / (points - 1) as f64)
            .collect()
    };
    match tag {
        ModelTag::Karolyhazy => {
            let kern = cfg.karolyhazy_kernel()?;
            let tau = cfg.raw.get_or("kernel", "tau", 0.0)?;
            let r_max = cfg
                .kernel_positive("r_max")?
                .unwrap_or(10.0 * kern.lambda_c);
            let mut t = Table::new(&["r", "tau", "correlator"]);
            for r in grid(r_max) {
                t.push(vec![r.into(), tau.into(), kern.correlator(r, tau)?.into()]);
            }
            out.table("kernel.csv", &t);
        }
        ModelTag::Diosi | ModelTag::Penrose => {
            let kern = DiosiKernel::new(cfg.constants);
            let r_max = cfg.kernel_positive("r_max")?.unwrap_or(1e-6);
            let mut t = Table::new(&["r", "correlator"]);
            for r in grid(r_max).into_iter().skip(1) {
                t.push(vec![r.into(), kern.correlator(r)?.into()]);
            }
            out.table("kernel.csv", &t);
        }
        ModelTag::Td => {
            let kern = cfg.td_kernel()?;
            let r_max = cfg.kernel_positive("r_max")?.unwrap_or(1e-6);
            let mut t = Table::new(&["r", "gamma", "decoherence"]);
            for r in grid(r_max).into_iter().skip(1) {
                t.push(vec![
                    r.into(),
                    kern.gamma(r)?.into(),
                    td_decoherence_kernel(&kern, r)?.into(),
                ]);
            }
            out.table("kernel.csv", &t);
        }
        ModelTag::Adler => {
            let kern = cfg.adler_kernel()?;
            let mut t = Table::new(&["x", "t", "d_re", "d_im"]);
            match &kern.preset {
                AdlerPreset::WhiteGaussian { r_c } => {
                    let r_max = cfg.kernel_positive("r_max")?.unwrap_or(5.0 * r_c);
                    for x in grid(r_max) {
                        let v = crate::kernels::adler::AdlerKernel::white_profile(*r_c, x);
                        t.push(vec![x.into(), 0.0.into(), v.into(), 0.0.into()]);
                    }
                }
                AdlerPreset::Custom(table) => {
                    for &lag in table.lags() {
                        for x in grid(table.max_separation()) {
                            let v = table.eval(x, lag)?;
                            t.push(vec![x.into(), lag.into(), v.re.into(), v.im.into()]);
                        }
                    }
                }
            }
            out.table("kernel.csv", &t);
        }
        ModelTag::Ktm | ModelTag::Sn => {
            return Err(Error::Config(format!(
                "model `{}` has no noise kernel to tabulate",
                tag.name()
            )))
        }
    }
    Ok(out)
}

fn sample_times(t_end: f64, points: usize) -> Vec<f64> {
    (0..=points)
        .map(|i| t_end * i as f64 / points as f64)
        .collect()
}

/// Master-equation time series.
pub fn evolve(cfg: &ScenarioConfig) -> Result<Outcome> {
    let tag = cfg.require_model()?;
    let t_end = cfg.t_end()?;
    let times = sample_times(t_end, cfg.points()?);
    let mut out = Outcome::default();
    if tag == ModelTag::Ktm {
        let state = cfg.ktm_state()?;
        let dt = cfg.dt()?.unwrap_or(1e-3 / state.params.fastest_rate());
        let mut t = Table::new(&[
            "t", "x1", "p1", "x2", "p2", "var_x1", "var_p1", "var_x2", "var_p2", "purity",
        ]);
        let mut s = state.clone();
        let mut prev = 0.0;
        for &ti in &times {
            if ti > prev {
                s = evolve_ktm_gaussian(&s, ti - prev, dt)?;
                prev = ti;
            }
            let mut row: Vec<Cell> = vec![ti.into()];
            row.extend(s.mean.iter().map(|v| Cell::from(*v)));
            row.extend((0..4).map(|i| Cell::from(s.cov[(i, i)])));
            row.push(s.purity().into());
            t.push(row);
        }
        out.set("final_mean", json!(s.mean.as_slice()));
        out.table("evolve.csv", &t);
        return Ok(out);
    }
    let k = &cfg.constants;
    let spec = cfg.superposition()?;
    let amps = cfg.amplitudes(spec.branch_count())?;
    let sys = PointerSystem::pure_dp(k, spec.clone(), &amps)?;
    let n = spec.branch_count();
    let mut header = vec!["t".to_string(), "purity".to_string()];
    for i in 0..n {
        for j in i + 1..n {
            header.push(format!("coherence_{i}_{j}"));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Table::new(&header_refs);
    let td = if tag == ModelTag::Td {
        Some(cfg.td_kernel()?)
    } else {
        None
    };
    let kk = if tag == ModelTag::Karolyhazy {
        Some(cfg.karolyhazy_kernel()?)
    } else {
        None
    };
    let ak = if tag == ModelTag::Adler {
        Some(cfg.adler_kernel()?)
    } else {
        None
    };
    let dt = cfg.dt()?.unwrap_or(t_end / 1000.0);
    for &ti in &times {
        let s = match tag {
            ModelTag::Diosi | ModelTag::Penrose => evolve_dp_pointer(&sys, ti)?,
            ModelTag::Td => evolve_td_pointer(&sys, td.as_ref().unwrap(), ti)?,
            ModelTag::Karolyhazy => evolve_nonmarkovian_pointer(
                &sys,
                MemoryKernel::Karolyhazy(kk.as_ref().unwrap()),
                ti,
                dt,
            )?,
            ModelTag::Adler => evolve_nonmarkovian_pointer(
                &sys,
                MemoryKernel::Adler(ak.as_ref().unwrap()),
                ti,
                dt,
            )?,
            ModelTag::Ktm | ModelTag::Sn => {
                return Err(Error::Config(format!(
                    "`evolve` does not apply to model `{}`",
                    tag.name()
                )))
            }
        };
        s.check_state()?;
        let mut row: Vec<Cell> = vec![ti.into(), s.purity().into()];
        for i in 0..n {
            for j in i + 1..n {
                row.push(s.rho[(i, j)].norm().into());
            }
        }
        t.push(row);
    }
    out.table("evolve.csv", &t);
    Ok(out)
}

fn ci_json(lo: f64, hi: f64) -> Value {
    json!([lo, hi])
}

/// Stochastic ensembles: Diósi collapse or KTM conditional dynamics.
pub fn sde(cfg: &ScenarioConfig) -> Result<Outcome> {
    let tag = cfg.require_model()?;
    let tcfg = cfg.trajectory_config()?;
    let per_trajectory = cfg.raw.get_or("solver", "trajectories", false)?;
    let mut out = Outcome::default();
    out.set("seed", json!(tcfg.seed));
    out.set("ensemble", json!(tcfg.ensemble));
    out.set("dt", json!(tcfg.dt));
    out.set("steps", json!(tcfg.steps));
    match tag {
        ModelTag::Diosi => {
            let k = &cfg.constants;
            let spec = cfg.superposition()?;
            let amps = cfg.amplitudes(spec.branch_count())?;
            let ens = run_diosi_ensemble(k, &spec, &amps, &tcfg)?;
            let n = spec.branch_count();
            let mut counts = vec![0usize; n];
            let mut traj = Table::new(&["trajectory", "branch", "weight"]);
            for (idx, c) in ens.final_amplitudes.iter().enumerate() {
                let w: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
                let best = (0..n).max_by(|a, b| w[*a].total_cmp(&w[*b])).unwrap();
                counts[best] += 1;
                if per_trajectory {
                    for (b, wb) in w.iter().enumerate() {
                        traj.push(vec![idx.into(), b.into(), (*wb).into()]);
                    }
                }
            }
            let m = tcfg.ensemble;
            let freqs: Vec<f64> = counts.iter().map(|c| *c as f64 / m as f64).collect();
            let intervals: Vec<Value> = counts
                .iter()
                .map(|c| {
                    let (lo, hi) = wilson_interval(*c, m, 3.0);
                    ci_json(lo, hi)
                })
                .collect();
            let born: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
            let rho_re: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| ens.rho[(i, j)].re).collect())
                .collect();
            let rho_im: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| ens.rho[(i, j)].im).collect())
                .collect();
            let err: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| ens.rho_std_error[(i, j)]).collect())
                .collect();
            out.set("born_weights", json!(born));
            out.set("frequencies", json!(freqs));
            out.set("frequency_intervals_3sigma", Value::Array(intervals));
            out.set("rho_re", json!(rho_re));
            out.set("rho_im", json!(rho_im));
            out.set("rho_std_error", json!(err));
            let mut t = Table::new(&["t", "coherence"]);
            for (ti, c) in ens.times.iter().zip(&ens.coherence) {
                t.push(vec![(*ti).into(), (*c).into()]);
            }
            out.table("sde_coherence.csv", &t);
            if per_trajectory {
                out.table("sde_trajectories.csv", &traj);
            }
        }
        ModelTag::Ktm => {
            let state = cfg.ktm_state()?;
            let ens = run_ktm_ensemble(&state, &tcfg)?;
            out.set("mean", json!(ens.mean.as_slice()));
            out.set("mean_std_error", json!(ens.mean_std_error.as_slice()));
            let rows = |m: &nalgebra::Matrix4<f64>| -> Vec<Vec<f64>> {
                (0..4)
                    .map(|i| (0..4).map(|j| m[(i, j)]).collect())
                    .collect()
            };
            out.set("covariance", json!(rows(&ens.covariance)));
            out.set(
                "covariance_std_error",
                json!(rows(&ens.covariance_std_error)),
            );
            out.set(
                "conditional_covariance",
                json!(rows(&ens.conditional_covariance)),
            );
            if per_trajectory {
                let mut t = Table::new(&["trajectory", "x1", "p1", "x2", "p2"]);
                for i in 0..tcfg.ensemble {
                    let tr = run_ktm_trajectory(&state, &tcfg, i)?;
                    let last = tr.means.last().expect("trajectory has samples");
                    let mut row: Vec<Cell> = vec![i.into()];
                    row.extend(last.iter().map(|v| Cell::from(*v)));
                    t.push(row);
                }
                out.table("sde_trajectories.csv", &t);
            }
        }
        other => {
            return Err(Error::Config(format!(
                "`sde` supports models dp and ktm, not `{}`",
                other.name()
            )))
        }
    }
    let summary = serde_json::to_string_pretty(&out.results).expect("summary serializes") + "\n";
    out.text("sde_summary.json", summary);
    Ok(out)
}

fn dump_state(field: &WaveField) -> String {
    let (label, amp) = match field.grid {
        Grid::Radial { .. } => ("r", "u"),
        Grid::Line { .. } => ("x", "psi"),
    };
    let mut s = format!("# {label} {amp}_re {amp}_im\n");
    for (x, a) in field.grid.points().iter().zip(&field.amplitudes) {
        let _ = writeln!(s, "{x:e} {:e} {:e}", a.re, a.im);
    }
    s
}

/// Schrödinger–Newton runs: `[sn] mode = ground | evolve | epr`.
pub fn sn(cfg: &ScenarioConfig) -> Result<Outcome> {
    let mode = cfg.raw.get_or("sn", "mode", "ground".to_string())?;
    let params = cfg.sn_params()?;
    let n = cfg.raw.get::<usize>("sn", "n")?;
    let extent = cfg.sn_positive("extent")?;
    let mut out = Outcome::default();
    match mode.as_str() {
        "ground" => {
            let defaults = GroundStateOptions::default();
            let opts = GroundStateOptions {
                n: n.unwrap_or(defaults.n),
                extent: extent.unwrap_or(defaults.extent),
                ..defaults
            };
            let gs = sn_ground_state(params, opts)?;
            let estimator = params.hbar * params.hbar / (params.g * params.mass.powi(3));
            out.set("energy", json!(gs.energy));
            out.set("kinetic", json!(gs.kinetic));
            out.set("interaction", json!(gs.interaction));
            out.set("virial_ratio", json!(gs.virial_ratio()));
            out.set("width", json!(gs.width()));
            out.set("estimator", json!(estimator));
            out.set("iterations", json!(gs.iterations));
            let mut t = Table::new(&["iteration", "energy"]);
            let stride = (gs.energy_history.len() / 1000).max(1);
            for (i, e) in gs.energy_history.iter().enumerate().step_by(stride) {
                t.push(vec![i.into(), (*e).into()]);
            }
            out.table("sn_energy.csv", &t);
            out.text("sn_state.txt", dump_state(&gs.field));
        }
        "evolve" => {
            let sigma = cfg.sn_positive("sigma")?.unwrap_or(1.0);
            let field = WaveField::radial_gaussian(
                params,
                n.unwrap_or(511),
                extent.unwrap_or(60.0),
                sigma,
            )?;
            let t_end = cfg.t_end()?;
            let dt = cfg.dt()?.unwrap_or(0.01);
            let steps = (t_end / dt).round().max(1.0) as usize;
            let stride = (steps / cfg.points()?).max(1);
            let run = sn_evolve(&field, dt, t_end, stride)?;
            let mut t = Table::new(&["t", "width", "energy"]);
            for i in 0..run.times.len() {
                t.push(vec![
                    run.times[i].into(),
                    run.widths[i].into(),
                    run.energies[i].into(),
                ]);
            }
            out.set("norm_error", json!(run.norm_error));
            out.set("energy_drift", json!(run.energy_drift()));
            out.table("sn_widths.csv", &t);
            out.text("sn_state.txt", dump_state(&run.field));
        }
        "epr" => {
            let base = EprConfig::scaled(true);
            let attraction = cfg.raw.get::<bool>("sn", "attraction")?;
            let separation = cfg.sn_positive("separation")?.unwrap_or(base.separation);
            let packet_width = cfg.sn_positive("sigma")?.unwrap_or(base.packet_width);
            let t_end = cfg.raw.get::<f64>("solver", "t_end")?.unwrap_or(base.t_end);
            let dt = cfg.dt()?.unwrap_or(base.dt);
            let mk = |on: bool| EprConfig {
                params,
                separation,
                packet_width,
                n: n.unwrap_or(base.n),
                extent: extent.unwrap_or(base.extent),
                t_end,
                dt,
                attraction: on,
                ..base
            };
            let runs: Vec<(bool, _)> = match attraction {
                Some(on) => vec![(on, epr_scenario(&mk(on))?)],
                None => vec![
                    (true, epr_scenario(&mk(true))?),
                    (false, epr_scenario(&mk(false))?),
                ],
            };
            let mut header = vec!["t"];
            for (on, _) in &runs {
                header.push(if *on {
                    "separation_on"
                } else {
                    "separation_off"
                });
            }
            let mut t = Table::new(&header);
            for i in 0..runs[0].1.times.len() {
                let mut row: Vec<Cell> = vec![runs[0].1.times[i].into()];
                row.extend(runs.iter().map(|(_, r)| Cell::from(r.separations[i])));
                t.push(row);
            }
            for (on, r) in &runs {
                let key = if *on {
                    "final_separation_on"
                } else {
                    "final_separation_off"
                };
                out.set(key, json!(r.final_separation));
            }
            out.set("grid_spacing", json!(runs[0].1.grid_spacing));
            out.table("sn_separation.csv", &t);
        }
        other => {
            return Err(Error::Config(format!(
                "[sn] mode = `{other}` is not one of ground, evolve, epr"
            )))
        }
    }
    let summary = serde_json::to_string_pretty(&out.results).expect("summary serializes") + "\n";
    out.text("sn_summary.json", summary);
    Ok(out)
}

/// The bound table, and the bounds `r0` violates when given.
pub fn bounds(
    r0: Option<f64>,
    override_path: Option<&Path>,
) -> Result<(Outcome, Vec<ExperimentBound>)> {
    let table = match override_path {
        Some(p) => bounds::load_bounds(p)?,
        None => bounds::builtin_bounds(),
    };
    let excluded = match r0 {
        Some(r) => Some(bounds::r0_excluded_by(&table, r)?),
        None => None,
    };
    let mut out = Outcome::default();
    let mut t = Table::new(&["name", "r0_lower_m", "note", "violated"]);
    for b in &table {
        let violated = match &excluded {
            Some(v) => v.iter().any(|e| e.name == b.name).to_string(),
            None => String::new(),
        };
        t.push(vec![
            b.name.clone().into(),
            b.r0_lower.into(),
            b.note.clone().into(),
            violated.into(),
        ]);
    }
    if let Some(s) = bounds::strongest_bound(&table) {
        out.set(
            "strongest",
            json!({ "name": s.name, "r0_lower_m": s.r0_lower }),
        );
    }
    if let (Some(r), Some(v)) = (r0, &excluded) {
        out.set("r0", json!(r));
        out.set(
            "violated",
            json!(v.iter().map(|b| b.name.as_str()).collect::<Vec<_>>()),
        );
    }
    out.table("bounds.csv", &t);
    Ok((out, excluded.unwrap_or(table)))
}

fn num(out: &Outcome, key: &str) -> f64 {
    out.results
        .get(key)
        .and_then(Value::as_f64)
        .unwrap_or(f64::NAN)
}

/// Runs a preset and attaches its acceptance checks.
pub fn preset(name: &str, cfg: &ScenarioConfig) -> Result<Outcome> {
    let mut out = match name {
        "proton-karolyhazy" => {
            let mut o = rates(cfg)?;
            o.checks
                .push(Check::within_factor("a_K", num(&o, "a_k"), 1e23, 10.0));
            o.checks
                .push(Check::within_factor("tau_K", num(&o, "tau_k"), 1e53, 10.0));
            o
        }
        "sphere-karolyhazy" => {
            let mut o = rates(cfg)?;
            o.checks
                .push(Check::within_factor("a_K", num(&o, "a_k"), 1e-18, 10.0));
            o.checks
                .push(Check::within_factor("tau_K", num(&o, "tau_k"), 1e-4, 10.0));
            o
        }
        "penrose-1e-12kg" => {
            let mut o = rates(cfg)?;
            let (tp, td) = (num(&o, "tau_p"), num(&o, "tau_d"));
            o.checks.push(Check::within_factor("tau_P", tp, 1e-6, 10.0));
            o.checks
                .push(Check::relative("tau_D / tau_P", td / tp, 8.0 * PI, 1e-10));
            o
        }
        "penrose-lattice" => {
            let mut o = rates(cfg)?;
            let tp = num(&o, "tau_p");
            o.checks.push(Check::new(
                "tau_P",
                tp,
                "in [1e-4, 1e-1] s",
                (1e-4..=1e-1).contains(&tp),
            ));
            o
        }
        "td-minimal" => {
            let mut o = rates(cfg)?;
            o.checks.push(Check::relative(
                "td rate / dp rate",
                num(&o, "td_rate") / num(&o, "dp_rate"),
                1.0,
                1e-6,
            ));
            o
        }
        "diosi-collapse" => {
            let mut o = sde(cfg)?;
            let freqs = o.results["frequencies"].clone();
            let born = o.results["born_weights"].clone();
            let ci = o.results["frequency_intervals_3sigma"].clone();
            for b in 0..2 {
                let f = freqs[b].as_f64().unwrap_or(f64::NAN);
                let w = born[b].as_f64().unwrap_or(f64::NAN);
                let (lo, hi) = (
                    ci[b][0].as_f64().unwrap_or(1.0),
                    ci[b][1].as_f64().unwrap_or(0.0),
                );
                o.checks.push(Check::new(
                    &format!("frequency of branch {b}"),
                    f,
                    format!("3-sigma Wilson interval contains {w}"),
                    lo <= w && w <= hi,
                ));
            }
            o
        }
        "ktm-pair" => {
            let mut o = sde(cfg)?;
            let state = cfg.ktm_state()?;
            let t_end = cfg.t_end()?;
            let dt = cfg.dt()?.unwrap_or(1e-3);
            let exact = evolve_ktm_gaussian(&state, t_end, dt)?;
            let mean = o.results["mean"].clone();
            let se = o.results["mean_std_error"].clone();
            for i in 0..4 {
                let m = mean[i].as_f64().unwrap_or(f64::NAN);
                let s = se[i].as_f64().unwrap_or(0.0);
                let diff = (m - exact.mean[i]).abs();
                o.checks.push(Check::new(
                    &format!("ensemble mean component {i}"),
                    m,
                    format!("within 3 standard errors of {:e}", exact.mean[i]),
                    diff <= 3.0 * s + 1e-12,
                ));
            }
            o
        }
        "sn-ground" => {
            let mut o = sn(cfg)?;
            let v = num(&o, "virial_ratio");
            o.checks
                .push(Check::relative("virial ratio 2T/|W|", v, 1.0, 1e-2));
            o.checks.push(Check::within_factor(
                "ground-state width",
                num(&o, "width"),
                num(&o, "estimator"),
                2.0,
            ));
            o
        }
        "sn-epr" => {
            let mut o = sn(cfg)?;
            let cells = (num(&o, "final_separation_off") - num(&o, "final_separation_on"))
                / num(&o, "grid_spacing");
            o.checks.push(Check::new(
                "on/off separation difference (cells)",
                cells,
                "> 5",
                cells > 5.0,
            ));
            o
        }
        "dp-bounds" => {
            let (mut o, v) = bounds(Some(1e-13), None)?;
            let mut names: Vec<&str> = v.iter().map(|b| b.name.as_str()).collect();
            names.sort_unstable();
            let ok = names == ["cryostat", "germanium", "neptune"];
            o.checks.push(Check::new(
                "bounds violated by R0 = 1e-13 m",
                v.len() as f64,
                "germanium, neptune, cryostat",
                ok,
            ));
            let strongest =
                bounds::strongest_bound(&bounds::builtin_bounds()).map_or(f64::NAN, |b| b.r0_lower);
            o.checks.push(Check::relative(
                "strongest bound (m)",
                strongest,
                0.54e-10,
                0.0,
            ));
            o
        }
        other => return Err(Error::Config(format!("preset `{other}` has no runner"))),
    };
    out.set("preset", json!(name));
    Ok(out)
}

/// A scenario without a preset runs the natural command for its model.
pub fn default_scenario(cfg: &ScenarioConfig) -> Result<Outcome> {
    match cfg.require_model()? {
        ModelTag::Karolyhazy | ModelTag::Diosi | ModelTag::Penrose | ModelTag::Td => rates(cfg),
        ModelTag::Adler => evolve(cfg),
        ModelTag::Ktm => sde(cfg),
        ModelTag::Sn => sn(cfg),
    }
}
