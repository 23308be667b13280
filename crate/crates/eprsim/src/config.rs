//! TOML run configuration.
//!
//! Frequencies are in Hz, lengths in m, losses are power fractions,
//! squeezing is in dB and angles are in degrees. Every key except
//! `interferometer.src_detuning_hz` has a default.

use std::path::Path;

use eprsim_core::cavity::{OmcMode, OmcSpec};
use eprsim_core::geo::{GeoConfig, LossBudget, Separation};
use eprsim_core::optimize::{Objective, OptimizerSettings};
use eprsim_core::squeezer::HomodyneAngles;
use eprsim_core::twophoton::AngularFrequency;
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub interferometer: Interferometer,
    #[serde(default)]
    pub squeezer: Squeezer,
    #[serde(default)]
    pub readout: Readout,
    #[serde(default)]
    pub separation: SeparationSection,
    #[serde(default)]
    pub losses: Losses,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub study: Study,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Interferometer {
    pub arm_length_m: f64,
    pub sr_length_m: f64,
    pub pr_length_m: f64,
    pub t_prm: f64,
    pub t_srm: f64,
    pub t_bs: f64,
    pub t_etm: f64,
    pub input_power_w: f64,
    /// Overrides `input_power_w` so that each arm holds this power.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arm_power_w: Option<f64>,
    pub schnupp_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub src_detuning_hz: Option<f64>,
}

impl Default for Interferometer {
    fn default() -> Self {
        let g = GeoConfig::default();
        Interferometer {
            arm_length_m: g.arm_length,
            sr_length_m: g.sr_length,
            pr_length_m: g.pr_length,
            t_prm: g.t_prm,
            t_srm: g.t_srm,
            t_bs: g.t_bs,
            t_etm: g.t_etm,
            input_power_w: g.input_power,
            arm_power_w: None,
            schnupp_m: g.schnupp_ls,
            src_detuning_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Squeezer {
    pub epr_db: f64,
    pub epr_angle_deg: f64,
    pub fsr_index: u32,
    /// Fixed signal-idler separation; unset means optimise.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_hz: Option<f64>,
    /// Single-mode squeezing of the DC-readout baseline.
    pub dc_db: f64,
    /// Single-mode squeezing of the ideal frequency-dependent baseline.
    pub fd_db: f64,
}

impl Default for Squeezer {
    fn default() -> Self {
        let g = GeoConfig::default();
        Squeezer {
            epr_db: g.epr_squeezing_db,
            epr_angle_deg: g.epr_squeeze_angle.to_degrees(),
            fsr_index: g.fsr_index,
            delta_hz: None,
            dc_db: g.dc_squeezing_db,
            fd_db: g.fd_squeezing_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Readout {
    /// Signal homodyne angle.
    pub theta_deg: f64,
    /// Idler homodyne angle; with `squeezer.delta_hz` it skips the optimiser.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_deg: Option<f64>,
    /// Fixed recombination gain; unset means the fitted gain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
}

impl Default for Readout {
    fn default() -> Self {
        Readout {
            theta_deg: GeoConfig::default().homodyne.theta.to_degrees(),
            phi_deg: None,
            gain: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationKind {
    Ideal,
    Cavity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparationMode {
    TransmitSignal,
    TransmitIdler,
}

impl From<SeparationMode> for OmcMode {
    fn from(m: SeparationMode) -> Self {
        match m {
            SeparationMode::TransmitSignal => OmcMode::TransmitSignalReflectIdler,
            SeparationMode::TransmitIdler => OmcMode::TransmitIdlerReflectSignal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparationSection {
    pub kind: SeparationKind,
    /// HWHM of each ring cavity.
    pub half_width_hz: f64,
    pub fsr_hz: f64,
    pub mode: SeparationMode,
}

impl Default for SeparationSection {
    fn default() -> Self {
        SeparationSection {
            kind: SeparationKind::Ideal,
            half_width_hz: 1.4e6,
            fsr_hz: 435e6,
            mode: SeparationMode::TransmitSignal,
        }
    }
}

impl SeparationSection {
    pub fn to_core(&self) -> Result<Separation, RunError> {
        let mode = self.mode.into();
        Ok(match self.kind {
            SeparationKind::Ideal => Separation::Ideal { mode },
            SeparationKind::Cavity => Separation::Cavity(
                OmcSpec::new(
                    AngularFrequency::from_hz(self.half_width_hz),
                    AngularFrequency::from_hz(self.fsr_hz),
                    mode,
                )
                .map_err(|e| RunError::Config(format!("[separation] {e}")))?,
            ),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Losses {
    pub input: f64,
    pub output: f64,
    pub internal_symmetric: f64,
    pub internal_asymmetric: f64,
}

impl From<&Losses> for LossBudget {
    fn from(l: &Losses) -> Self {
        LossBudget {
            input_loss: l.input,
            output_loss: l.output,
            internal_symmetric: l.internal_symmetric,
            internal_asymmetric: l.internal_asymmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    /// Noise at the detuning frequency.
    Detuning,
    /// Mean noise over `[band_min_hz, band_max_hz]` with one fitted gain.
    Band,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub objective: ObjectiveKind,
    pub band_min_hz: f64,
    pub band_max_hz: f64,
    pub band_points: usize,
    pub delta_points: usize,
    pub phi_points: usize,
    pub rounds: usize,
    /// Scan half-width in units of the detuning.
    pub span: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let s = OptimizerSettings::default();
        OptimizerSection {
            objective: ObjectiveKind::Detuning,
            band_min_hz: 300.0,
            band_max_hz: 20e3,
            band_points: 40,
            delta_points: s.delta_points,
            phi_points: s.phi_points,
            rounds: s.rounds,
            span: s.span,
        }
    }
}

impl OptimizerSection {
    pub fn objective(&self) -> Objective {
        match self.objective {
            ObjectiveKind::Detuning => Objective::NoiseAtDetuning,
            ObjectiveKind::Band => self.band_objective(),
        }
    }

    pub fn band_objective(&self) -> Objective {
        Objective::BandIntegrated {
            f_lo: self.band_min_hz,
            f_hi: self.band_max_hz,
            points: self.band_points,
        }
    }

    pub fn settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            delta_points: self.delta_points,
            phi_points: self.phi_points,
            rounds: self.rounds,
            span: self.span,
            keep_landscape: false,
        }
    }
}

/// Sweep values of the multi-run scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Study {
    pub homodyne_angles_deg: Vec<f64>,
    pub schnupp_lengths_m: Vec<f64>,
    pub schnupp_fsr_indices: Vec<u32>,
    /// PRM transmissions compared at the arm power of the nominal PRM.
    pub prm_transmissions: Vec<f64>,
    pub prm_schnupp_m: f64,
    pub omc_fsr_min: u32,
    pub omc_fsr_max: u32,
    pub omc_fsr_step: u32,
    /// Input and output loss, applied together.
    pub loss_io: Vec<f64>,
    pub loss_symmetric: Vec<f64>,
    pub loss_asymmetric: Vec<f64>,
    /// Schnupp asymmetry of the loss studies.
    pub loss_schnupp_m: f64,
    pub coupled_schnupp_m: Vec<f64>,
    /// Probe sweep half-width around the idler resonance.
    pub coupled_span_hz: f64,
    pub coupled_step_hz: f64,
    /// Peaks below this fraction of the largest SRC power are ignored.
    pub coupled_peak_threshold: f64,
}

impl Default for Study {
    fn default() -> Self {
        Study {
            homodyne_angles_deg: vec![0.0, 45.0, 90.0, 135.0],
            schnupp_lengths_m: vec![0.03, 0.2],
            schnupp_fsr_indices: vec![1, 10, 40, 80],
            prm_transmissions: vec![900e-6, 0.003, 0.01],
            prm_schnupp_m: 0.2,
            omc_fsr_min: 10,
            omc_fsr_max: 280,
            omc_fsr_step: 10,
            loss_io: vec![0.01, 0.02, 0.05, 0.10, 0.15],
            loss_symmetric: vec![0.0001, 0.0005, 0.001, 0.002],
            loss_asymmetric: vec![0.0001, 0.0005, 0.001, 0.002],
            loss_schnupp_m: 0.05,
            coupled_schnupp_m: vec![0.0, 0.03, 0.1, 0.2, 0.3],
            coupled_span_hz: 20e3,
            coupled_step_hz: 10.0,
            coupled_peak_threshold: 0.05,
        }
    }
}

impl Config {
    /// Parses TOML text; diagnostics carry line and column.
    pub fn parse(text: &str) -> Result<Config, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text).map_err(|e| match e {
            RunError::Config(m) => RunError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Applies `section.key=value` overrides. Values are read as TOML and
    /// fall back to a bare string.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Config, RunError> {
        if overrides.is_empty() {
            return Ok(self.clone());
        }
        let mut table = toml::Table::try_from(self).map_err(|e| RunError::Config(e.to_string()))?;
        for o in overrides {
            let o = o.as_ref();
            let bad = |why: &str| RunError::Config(format!("override `{o}`: {why}"));
            let (key, raw) = o.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let (section, field) = key.trim().split_once('.').ok_or_else(|| bad("expected section.key"))?;
            let value = parse_value(raw.trim());
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match entry {
                toml::Value::Table(t) => {
                    t.insert(field.to_string(), value);
                }
                _ => return Err(bad("not a section")),
            }
        }
        Config::deserialize(table).map_err(|e| RunError::Config(format!("after overrides: {e}")))
    }

    pub fn src_detuning_hz(&self) -> Result<f64, RunError> {
        self.interferometer
            .src_detuning_hz
            .ok_or_else(|| RunError::Config("missing key `interferometer.src_detuning_hz`".into()))
    }

    /// Interferometer model described by the configuration.
    pub fn geo(&self) -> Result<GeoConfig, RunError> {
        let i = &self.interferometer;
        let s = &self.squeezer;
        let detuning = self.src_detuning_hz()?;
        let cfg = GeoConfig {
            arm_length: i.arm_length_m,
            sr_length: i.sr_length_m,
            pr_length: i.pr_length_m,
            t_prm: i.t_prm,
            t_srm: i.t_srm,
            t_bs: i.t_bs,
            t_etm: i.t_etm,
            input_power: i.input_power_w,
            schnupp_ls: i.schnupp_m,
            src_detuning: AngularFrequency::from_hz(detuning),
            epr_squeezing_db: s.epr_db,
            epr_squeeze_angle: s.epr_angle_deg.to_radians(),
            fsr_index: s.fsr_index,
            delta: s.delta_hz.map(AngularFrequency::from_hz),
            separation_center: None,
            homodyne: HomodyneAngles::new(self.readout.theta_deg.to_radians(), 0.0),
            gain: self.readout.gain,
            separation: self.separation.to_core()?,
            losses: (&self.losses).into(),
            dc_squeezing_db: s.dc_db,
            fd_squeezing_db: s.fd_db,
        };
        cfg.validate().map_err(|e| RunError::Config(e.to_string()))?;
        match i.arm_power_w {
            Some(p) => cfg.with_arm_power(p).map_err(|e| RunError::Config(e.to_string())),
            None => Ok(cfg),
        }
    }

    /// Checks everything that can be checked without running a model.
    pub fn validate(&self) -> Result<(), RunError> {
        self.geo()?;
        let o = &self.optimizer;
        if !(o.band_min_hz > 0.0 && o.band_max_hz > o.band_min_hz) {
            return Err(RunError::Config("[optimizer] need 0 < band_min_hz < band_max_hz".into()));
        }
        if o.delta_points < 3 || o.phi_points < 4 || o.span <= 0.0 {
            return Err(RunError::Config(
                "[optimizer] need delta_points >= 3, phi_points >= 4, span > 0".into(),
            ));
        }
        let st = &self.study;
        if st.omc_fsr_min == 0 || st.omc_fsr_step == 0 || st.omc_fsr_max < st.omc_fsr_min {
            return Err(RunError::Config(
                "[study] need 1 <= omc_fsr_min <= omc_fsr_max and omc_fsr_step >= 1".into(),
            ));
        }
        if st.schnupp_fsr_indices.contains(&0) {
            return Err(RunError::Config("[study] schnupp_fsr_indices must be >= 1".into()));
        }
        if !(st.coupled_step_hz > 0.0 && st.coupled_span_hz > 0.0) {
            return Err(RunError::Config("[study] coupled_span_hz and coupled_step_hz must be > 0".into()));
        }
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Configuration with every default written out and the detuning at 2 kHz.
pub fn default_config_text() -> String {
    let mut c = Config {
        interferometer: Interferometer::default(),
        squeezer: Squeezer::default(),
        readout: Readout::default(),
        separation: SeparationSection::default(),
        losses: Losses::default(),
        optimizer: OptimizerSection::default(),
        study: Study::default(),
    };
    c.interferometer.src_detuning_hz = Some(2e3);
    toml::to_string(&c).expect("default configuration serialises")
}
