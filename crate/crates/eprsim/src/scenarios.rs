//! Named studies. Each returns its tables and a JSON summary; nothing here
//! touches the filesystem.

use std::fmt;
use std::str::FromStr;

use eprsim_core::cavity::{coupled_cavity_response, src_power_peaks, CoupledCavityPoint, OmcSpec};
use eprsim_core::geo::{
    default_frequency_grid, EprReadout, GeoConfig, GeoModel, LossBudget, PreparedScenario, Scenario, Separation,
    SensitivityCurve, SensitivityPoint,
};
use eprsim_core::optimize::{landscape, optimize_epr, optimize_epr_branches, Objective, OptimizationResult};
use eprsim_core::squeezer::{GainMode, HomodyneAngles};
use eprsim_core::twophoton::{AngularFrequency, Decibel};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::Config;
use crate::output::{col, Column, Table};
use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioName {
    Sensitivity,
    OptimizeLandscape,
    HomodyneSweep,
    SchnuppStudy,
    OmcSweep,
    LossIo,
    LossSymmetric,
    LossAsymmetric,
    CoupledCavity,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 9] = [
        ScenarioName::Sensitivity,
        ScenarioName::OptimizeLandscape,
        ScenarioName::HomodyneSweep,
        ScenarioName::SchnuppStudy,
        ScenarioName::OmcSweep,
        ScenarioName::LossIo,
        ScenarioName::LossSymmetric,
        ScenarioName::LossAsymmetric,
        ScenarioName::CoupledCavity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Sensitivity => "sensitivity",
            ScenarioName::OptimizeLandscape => "optimize-landscape",
            ScenarioName::HomodyneSweep => "homodyne-sweep",
            ScenarioName::SchnuppStudy => "schnupp-study",
            ScenarioName::OmcSweep => "omc-sweep",
            ScenarioName::LossIo => "loss-io",
            ScenarioName::LossSymmetric => "loss-symmetric",
            ScenarioName::LossAsymmetric => "loss-asymmetric",
            ScenarioName::CoupledCavity => "coupled-cavity",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = RunError;

    fn from_str(s: &str) -> Result<Self, RunError> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| RunError::UnknownScenario(s.to_string()))
    }
}

pub struct ScenarioOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
}

pub fn execute(name: ScenarioName, cfg: &Config) -> Result<ScenarioOutput, RunError> {
    cfg.validate()?;
    match name {
        ScenarioName::Sensitivity => sensitivity(cfg),
        ScenarioName::OptimizeLandscape => optimize_landscape(cfg),
        ScenarioName::HomodyneSweep => homodyne_sweep(cfg),
        ScenarioName::SchnuppStudy => schnupp_study(cfg),
        ScenarioName::OmcSweep => omc_sweep(cfg),
        ScenarioName::LossIo => loss_study(cfg, "loss_io", &cfg.study.loss_io, |l, v| {
            l.input_loss = v;
            l.output_loss = v;
        }),
        ScenarioName::LossSymmetric => loss_study(cfg, "loss_symmetric", &cfg.study.loss_symmetric, |l, v| {
            l.internal_symmetric = v;
        }),
        ScenarioName::LossAsymmetric => loss_study(cfg, "loss_asymmetric", &cfg.study.loss_asymmetric, |l, v| {
            l.internal_asymmetric = v;
        }),
        ScenarioName::CoupledCavity => coupled_cavity(cfg),
    }
}

const CURVE_COLUMNS: [Column; 4] = [
    col("noise", "vacuum units"),
    col("unsqueezed_noise", "vacuum units"),
    col("improvement_db", "dB"),
    col("asd", "1/sqrt(Hz)"),
];

fn grid(g: &GeoConfig) -> Vec<f64> {
    default_frequency_grid(g.src_detuning.hz(), g.src_half_bandwidth().hz())
}

fn points(model: &GeoModel, scenario: &Scenario, freqs: &[f64]) -> Result<(PreparedScenario, Vec<SensitivityPoint>), RunError> {
    let prepared = model.prepare(scenario)?;
    let pts = freqs
        .par_iter()
        .map(|&f| model.sensitivity_point(&prepared, f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((prepared, pts))
}

fn curve(model: &GeoModel, scenario: &Scenario, freqs: &[f64]) -> Result<SensitivityCurve, RunError> {
    let (p, pts) = points(model, scenario, freqs)?;
    Ok(model.collect_curve(&p, freqs, &pts))
}

/// `value` is the strain ASD.
fn asd_table(file: String, description: String, c: &SensitivityCurve) -> Table {
    let mut t = Table::new(file, description, "1/sqrt(Hz)", &CURVE_COLUMNS[..3]);
    for (i, db) in c.improvement_db().into_iter().enumerate() {
        t.push(vec![c.frequencies_hz[i], c.asd[i], c.noise[i], c.unsqueezed_noise[i], db]);
    }
    t
}

/// `value` is the improvement over the unsqueezed readout.
fn improvement_table(file: String, description: String, c: &SensitivityCurve) -> Table {
    let extra = [CURVE_COLUMNS[0].clone(), CURVE_COLUMNS[1].clone(), CURVE_COLUMNS[3].clone()];
    let mut t = Table::new(file, description, "dB", &extra);
    for (i, db) in c.improvement_db().into_iter().enumerate() {
        t.push(vec![c.frequencies_hz[i], db, c.noise[i], c.unsqueezed_noise[i], c.asd[i]]);
    }
    t
}

fn mean_in_band(c: &SensitivityCurve, lo: f64, hi: f64) -> f64 {
    let v: Vec<f64> = c
        .frequencies_hz
        .iter()
        .zip(c.improvement_db())
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(_, d)| d)
        .collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn result_summary(model: &GeoModel, r: &OptimizationResult) -> Value {
    let f0 = model.config.fsr_index as f64 * model.config.omega_src().hz();
    json!({
        "branch": format!("{:?}", r.branch).to_lowercase(),
        "delta_hz": r.delta_opt.hz(),
        "delta_offset_hz": r.delta_opt.hz() - f0,
        "phi_b_rad": r.phi_b_opt,
        "gain": r.k_opt,
        "noise_at_detuning_db": Decibel::from_power_ratio(r.noise_at_detuning).0,
        "objective_db": Decibel::from_power_ratio(r.objective_value).0,
    })
}

/// EPR readout from `[squeezer] delta_hz` and `[readout] phi_deg` when both
/// are set, otherwise from the optimiser.
fn epr_readout(model: &GeoModel, cfg: &Config, objective: Objective) -> Result<(Scenario, Value), RunError> {
    let g = &model.config;
    if let (Some(d), Some(phi)) = (cfg.squeezer.delta_hz, cfg.readout.phi_deg) {
        let gain = cfg.readout.gain.map_or(GainMode::OptimalPerFrequency, GainMode::Fixed);
        let readout = EprReadout {
            delta: AngularFrequency::from_hz(d),
            phi_b: phi.to_radians(),
            gain,
        };
        return Ok((Scenario::Epr(readout), json!({ "delta_hz": d, "phi_b_rad": readout.phi_b, "gain": cfg.readout.gain })));
    }
    let r = optimize_epr(model, g.fsr_index, objective, &cfg.optimizer.settings())?;
    let gain = GainMode::Fixed(cfg.readout.gain.unwrap_or(r.k_opt));
    Ok((Scenario::Epr(r.readout(gain)), result_summary(model, &r)))
}

fn sensitivity(cfg: &Config) -> Result<ScenarioOutput, RunError> {
    let g = cfg.geo()?;
    let freqs = grid(&g);
    let detuned = GeoModel::new(&g)?;
    let tuned = GeoModel::new(&GeoConfig {
        src_detuning: AngularFrequency::ZERO,
        ..g.clone()
    })?;
    let (epr, readout) = epr_readout(&detuned, cfg, cfg.optimizer.objective())?;
    let runs = [
        (&tuned, Scenario::NoSqueezing, "nosqz_tuned", "no squeezing, tuned signal recycling"),
        (&detuned, Scenario::NoSqueezing, "nosqz_detuned", "no squeezing, detuned signal recycling"),
        (&detuned, Scenario::DcReadoutFixedSqz, "dc_readout", "frequency-independent squeezing, angle fixed at the detuning"),
        (&detuned, epr, "epr_lower", "EPR squeezing, lower branch"),
    ];
    let mut tables = Vec::new();
    let mut means = serde_json::Map::new();
    for (model, sc, file, desc) in runs {
        let c = curve(model, &sc, &freqs)?;
        means.insert(file.into(), json!(mean_in_band(&c, cfg.optimizer.band_min_hz, cfg.optimizer.band_max_hz)));
        tables.push(asd_table(format!("{file}.csv"), format!("strain sensitivity: {desc}"), &c));
    }
    Ok(ScenarioOutput {
        tables,
        summary: json!({ "epr_readout": readout, "mean_improvement_db": means }),
    })
}

fn optimize_landscape(cfg: &Config) -> Result<ScenarioOutput, RunError> {
    let g = cfg.geo()?;
    let model = GeoModel::new(&g)?;
    let objective = cfg.optimizer.objective();
    let settings = cfg.optimizer.settings();
    let n = g.fsr_index;
    let f0 = n as f64 * g.omega_src().hz();
    let land = landscape(&model, n, objective, &settings)?;
    let offset = col("delta_offset_hz", "Hz");
    let mut full = Table::new(
        "landscape.csv",
        "EPR noise over (delta, phi_b) relative to the unsqueezed readout; frequency_hz is delta",
        "dB",
        &[col("phi_b_rad", "rad"), offset.clone()],
    );
    for (d, row) in land.deltas.iter().zip(&land.noise) {
        for (phi, v) in land.phis.iter().zip(row) {
            full.push(vec![d.hz(), Decibel::from_power_ratio(*v).0, *phi, d.hz() - f0]);
        }
    }
    let mut profile = Table::new(
        "profile.csv",
        "EPR noise minimised over phi_b relative to the unsqueezed readout; frequency_hz is delta",
        "dB",
        &[offset],
    );
    for (d, v) in land.deltas.iter().zip(land.profile()) {
        profile.push(vec![d.hz(), Decibel::from_power_ratio(v).0, d.hz() - f0]);
    }
    let minima: Vec<f64> = land.local_minima().iter().map(|&i| land.deltas[i].hz() - f0).collect();
    let (lower, upper) = optimize_epr_branches(&model, n, objective, &settings)?;
    Ok(ScenarioOutput {
        tables: vec![full, profile],
        summary: json!({
            "fsr_index": n,
            "center_hz": f0,
            "grid_minima_offset_hz": minima,
            "lower": result_summary(&model, &lower),
            "upper": result_summary(&model, &upper),
        }),
    })
}

fn homodyne_sweep(cfg: &Config) -> Result<ScenarioOutput, RunError> {
    let g = cfg.geo()?;
    let freqs = grid(&g);
    let mut tables = Vec::new();
    for &deg in &cfg.study.homodyne_angles_deg {
        let model = GeoModel::new(&GeoConfig {
            homodyne: HomodyneAngles::new(deg.to_radians(), g.homodyne.phi),
            ..g.clone()
        })?;
        let (_, pts) = points(&model, &Scenario::NoSqueezing, &freqs)?;
        let mut t = Table::new(
            format!("signal_theta_{}deg.csv", fmt_tag(deg)),
            format!("strain response of the signal homodyne at theta = {deg} deg, no squeezing"),
            "sqrt(W)/strain",
            &[col("asd", "1/sqrt(Hz)")],
        );
        for (f, p) in freqs.iter().zip(&pts) {
            t.push(vec![*f, p.signal, p.asd]);
        }
        tables.push(t);
    }
    Ok(ScenarioOutput {
        tables,
        summary: json!({ "theta_deg": cfg.study.homodyne_angles_deg }),
    })
}

fn dip_summary(c: &SensitivityCurve, g: &GeoConfig, f_hi: f64) -> Value {
    let lo = g.src_detuning.hz() + 3.0 * g.src_half_bandwidth().hz();
    match c.improvement_dip(lo, f_hi) {
        Some(d) => json!({ "frequency_hz": d.frequency_hz, "depth_db": d.depth_db, "area_db_hz": d.area_db_hz }),
        None => Value::Null,
    }
}

fn schnupp_study(cfg: &Config) -> Result<ScenarioOutput, RunError> {
    let base = GeoConfig {
        delta: None,
        ..cfg.geo()?
    };
    let freqs = grid(&base);
    let objective = cfg.optimizer.band_objective();
    let settings = cfg.optimizer.settings();
    let f_hi = cfg.optimizer.band_max_hz;
    let mut tables = Vec::new();
    let mut runs = Vec::new();
    let mut run = |g: GeoConfig, file: String, desc: String, tag: Value| -> Result<(), RunError> {
        let model = GeoModel::new(&g)?;
        let r = optimize_epr(&model, g.fsr_index, objective, &settings)?;
        let c = curve(&model, &r.scenario(), &freqs)?;
        runs.push(json!({
            "file": file,
            "run": tag,
            "readout": result_summary(&model, &r),
            "dip": dip_summary(&c, &g, f_hi),
        }));
        tables.push(improvement_table(file, desc, &c));
        Ok(())
    };
    for &ls in &cfg.study.schnupp_lengths_m {
        for &n in &cfg.study.schnupp_fsr_indices {
            let g = GeoConfig {
                schnupp_ls: ls,
                fsr_index: n,
                ..base.clone()
            };
            run(
                g,
                format!("schnupp_{}m_n{n}.csv", fmt_tag(ls)),
                format!("EPR improvement, Schnupp asymmetry {ls} m, idler at FSR index {n}"),
                json!({ "schnupp_m": ls, "fsr_index": n }),
            )?;
        }
    }
    let at = GeoConfig {
        schnupp_ls: cfg.study.prm_schnupp_m,
        ..base.clone()
    };
    let arm = GeoModel::new(&at)?.arm_power()?.0;
    for &t in &cfg.study.prm_transmissions {
        let g = GeoConfig { t_prm: t, ..at.clone() }.with_arm_power(arm)?;
        run(
            g.clone(),
            format!("prm_t{}.csv", fmt_tag(t)),
            format!(
                "EPR improvement, PRM transmission {t}, Schnupp asymmetry {} m, {arm:.6e} W per arm",
                at.schnupp_ls
            ),
            json!({ "t_prm": t, "schnupp_m": at.schnupp_ls, "arm_power_w": arm, "input_power_w": g.input_power }),
        )?;
    }
    Ok(ScenarioOutput {
        tables,
        summary: json!({ "runs": runs }),
    })
}

fn omc_sweep(cfg: &Config) -> Result<ScenarioOutput, RunError> {
    let base = GeoConfig {
        delta: None,
        ..cfg.geo()?
    };
    let sep = &cfg.separation;
    let spec = OmcSpec::new(
        AngularFrequency::from_hz(sep.half_width_hz),
        AngularFrequency::from_hz(sep.fsr_hz),
        sep.mode.into(),
    )?;
    let objective = cfg.optimizer.objective();
    let settings = cfg.optimizer.settings();
    let st = &cfg.study;
    let indices: Vec<u32> = (st.omc_fsr_min..=st.omc_fsr_max).step_by(st.omc_fsr_step as usize).collect();
    // (Δ, noise at the detuning relative to the unsqueezed readout)
    let best = |n: u32, separation: Separation| -> Result<(f64, f64), RunError> {
        let g = GeoConfig {
            fsr_index: n,
            separation,
            ..base.clone()
        };
        let model = GeoModel::new(&g)?;
        match optimize_epr(&model, n, objective, &settings) {
            Ok(r) => Ok((r.delta_opt.hz(), r.noise_at_detuning)),
            // No squeezing gain: report the least-bad grid point.
            Err(eprsim_core::Error::NoImprovement { .. }) => {
                let land = landscape(&model, n, Objective::NoiseAtDetuning, &settings)?;
                let p = land.profile();
                let i = (0..p.len()).min_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
                Ok((land.deltas[i].hz(), p[i]))
            }
            Err(e) => Err(e.into()),
        }
    };
    let rows = indices
        .par_iter()
        .map(|&n| {
            let ideal = best(n, Separation::Ideal { mode: spec.mode })?;
            let cavity = best(n, Separation::Cavity(spec))?;
            Ok((n, ideal, cavity))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut t = Table::new(
        "omc_sweep.csv",
        "EPR noise reduction at the detuning with the separation cavity vs idler FSR index; frequency_hz is delta",
        "dB",
        &[
            col("fsr_index", "1"),
            col("ideal_reduction_db", "dB"),
            col("degradation_db", "dB"),
            col("ideal_delta_hz", "Hz"),
        ],
    );
    for (n, (di, ideal), (dc, cavity)) in &rows {
        let (a, b) = (-Decibel::from_power_ratio(*ideal).0, -Decibel::from_power_ratio(*cavity).0);
        t.push(vec![*dc, b, *n as f64, a, a - b, *di]);
    }
    Ok(ScenarioOutput {
        tables: vec![t],
        summary: json!({
            "half_width_hz": sep.half_width_hz,
            "fsr_hz": sep.fsr_hz,
            "ideal_separation_hz": sep.fsr_hz / 2.0,
            "fsr_indices": indices,
        }),
    })
}

fn loss_study(cfg: &Config, prefix: &str, values: &[f64], apply: fn(&mut LossBudget, f64)) -> Result<ScenarioOutput, RunError> {
    let base = GeoConfig {
        schnupp_ls: cfg.study.loss_schnupp_m,
        ..cfg.geo()?
    };
    let freqs = grid(&base);
    let (lo, hi) = (cfg.optimizer.band_min_hz, cfg.optimizer.band_max_hz);
    let mut tables = Vec::new();
    let mut runs = Vec::new();
    for &v in values {
        let mut g = base.clone();
        apply(&mut g.losses, v);
        g.losses.validate()?;
        let model = GeoModel::new(&g)?;
        let (epr, readout) = epr_readout(&model, cfg, cfg.optimizer.objective())?;
        let e = curve(&model, &epr, &freqs)?;
        let fd = curve(&model, &Scenario::IdealFdSqz, &freqs)?;
        let mut t = Table::new(
            format!("{prefix}_{}.csv", fmt_tag(v)),
            format!(
                "EPR and ideal frequency-dependent squeezing improvement, losses {:?}",
                g.losses
            ),
            "dB",
            &[
                col("fd_improvement_db", "dB"),
                col("epr_asd", "1/sqrt(Hz)"),
                col("fd_asd", "1/sqrt(Hz)"),
                col("unsqueezed_asd", "1/sqrt(Hz)"),
            ],
        );
        let (edb, fdb) = (e.improvement_db(), fd.improvement_db());
        for i in 0..freqs.len() {
            let unsqueezed = e.asd[i] * (e.unsqueezed_noise[i] / e.noise[i]).sqrt();
            t.push(vec![freqs[i], edb[i], fdb[i], e.asd[i], fd.asd[i], unsqueezed]);
        }
        runs.push(json!({
            "file": t.file,
            "loss": v,
            "readout": readout,
            "mean_epr_improvement_db": mean_in_band(&e, lo, hi),
            "mean_fd_improvement_db": mean_in_band(&fd, lo, hi),
        }));
        tables.push(t);
    }
    Ok(ScenarioOutput {
        tables,
        summary: json!({ "schnupp_m": base.schnupp_ls, "band_hz": [lo, hi], "runs": runs }),
    })
}

fn coupled_cavity(cfg: &Config) -> Result<ScenarioOutput, RunError> {
    let g = cfg.geo()?;
    let st = &cfg.study;
    let f0 = g.fsr_index as f64 * g.omega_src().hz();
    let steps = (2.0 * st.coupled_span_hz / st.coupled_step_hz).round() as usize;
    let offsets: Vec<AngularFrequency> = (0..=steps)
        .map(|i| AngularFrequency::from_hz(f0 - st.coupled_span_hz + st.coupled_step_hz * i as f64))
        .collect();
    let mut tables = Vec::new();
    let mut runs = Vec::new();
    for &ls in &st.coupled_schnupp_m {
        let chunks = offsets
            .par_chunks(256)
            .map(|c| coupled_cavity_response(&g, c, &[ls]))
            .collect::<Result<Vec<_>, _>>()?;
        let pts: Vec<CoupledCavityPoint> = chunks.into_iter().flatten().collect();
        let mut t = Table::new(
            format!("coupled_{}m.csv", fmt_tag(ls)),
            format!("recycling cavity power per watt injected at the dark port, Schnupp asymmetry {ls} m; frequency_hz is the probe offset from the idler resonance"),
            "W/W",
            &[col("prc_power", "W/W"), col("src_phase_rad", "rad"), col("probe_offset_hz", "Hz")],
        );
        for p in &pts {
            t.push(vec![p.offset.hz() - f0, p.src_power, p.prc_power, p.src_phase, p.offset.hz()]);
        }
        let peaks: Vec<Value> = src_power_peaks(&pts, st.coupled_peak_threshold)
            .into_iter()
            .map(|(o, p)| json!({ "offset_hz": o.hz() - f0, "src_power": p }))
            .collect();
        runs.push(json!({ "file": t.file, "schnupp_m": ls, "src_peaks": peaks }));
        tables.push(t);
    }
    Ok(ScenarioOutput {
        tables,
        summary: json!({ "center_hz": f0, "runs": runs }),
    })
}

/// File-name fragment for a parameter value: `0.2` becomes `0p2`.
fn fmt_tag(v: f64) -> String {
    format!("{v}").replace('.', "p").replace('-', "m")
}
