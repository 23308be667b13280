//! GEO 600 style dual-recycled Michelson with EPR squeezed-light injection,
//! signal/idler separation and dual homodyne readout.
//!
//! Layout (component port numbers in brackets):
//!
//! ```text
//!  laser ─[0]PRM[1]── PR space ──[0]BS[1]── Y arm ──[0]ETMY
//!                                   [2]──── X arm ──[0]ETMX
//!                                   [3]── SR space ──[1]SRM[0]──[0]ISO
//!  squeezer ─[1]ISO[2]── separation stage ──┬── HD_A (signal band)
//!                                           └── HD_B (idler band)
//! ```
//!
//! The X arm is `L + L_s/2` long and the Y arm `L − L_s/2`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};
#[allow(unused_imports)]
use num_traits::Float;

use crate::cavity::{epr_delta, OmcMode, OmcSpec};
use crate::network::{ComponentKind, DetectionChannel, DirectSource, InputCovariance, OpticalNetwork, PortRef};
use crate::optimize::golden_section;
use crate::squeezer::{
    conditional_over_spectrum, epr_source_spectral_matrix, single_mode_squeezed, GainMode, HomodyneAngles,
    SqueezerSpec,
};
use crate::twophoton::{db_to_squeeze_factor, AngularFrequency, Channel, Decibel, SpectralDensityMatrix};
use crate::{Error, Result, C64, HBAR, SPEED_OF_LIGHT};

/// Main laser wavelength, m.
pub const WAVELENGTH: f64 = 1064e-9;

pub const SQUEEZER: &str = "squeezer";
pub const LASER: &str = "laser";
pub const HD_A: &str = "HD_A";
pub const HD_B: &str = "HD_B";

/// Local oscillator phase reference of the signal-band homodyne detector;
/// with it the tuned interferometer's signal lies entirely in `q1`.
pub const SIGNAL_LO_REFERENCE: f64 = FRAC_PI_2;

/// Fractional power losses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBudget {
    /// Between squeezer and isolator.
    pub input_loss: f64,
    /// Between isolator and the separation stage, common to both bands.
    pub output_loss: f64,
    /// Extra loss of each end mirror.
    pub internal_symmetric: f64,
    /// Extra loss of the X end mirror only.
    pub internal_asymmetric: f64,
}

impl LossBudget {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("losses.input", self.input_loss),
            ("losses.output", self.output_loss),
            ("losses.internal_symmetric", self.internal_symmetric),
            ("losses.internal_asymmetric", self.internal_asymmetric),
        ] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::invalid(name, alloc::format!("{v} outside [0, 1)")));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        *self == LossBudget::default()
    }
}

/// Signal/idler separation stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Separation {
    /// Perfect frequency router.
    Ideal { mode: OmcMode },
    /// Two ring cavities in series: the first transmits one band to its
    /// detector and reflects the other into the second.
    Cavity(OmcSpec),
}

impl Separation {
    pub fn mode(&self) -> OmcMode {
        match self {
            Separation::Ideal { mode } => *mode,
            Separation::Cavity(s) => s.mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoConfig {
    pub arm_length: f64,
    pub sr_length: f64,
    pub pr_length: f64,
    pub t_prm: f64,
    pub t_srm: f64,
    pub t_bs: f64,
    pub t_etm: f64,
    /// W
    pub input_power: f64,
    /// Differential arm length, m.
    pub schnupp_ls: f64,
    /// Signal-recycling detuning `δ_c`; the carrier sits this far above the
    /// nearest SRC resonance.
    pub src_detuning: AngularFrequency,
    /// Injected EPR squeezing.
    pub epr_squeezing_db: f64,
    /// Squeeze angle of the EPR source.
    pub epr_squeeze_angle: f64,
    /// SRC free spectral range index used for the idler.
    pub fsr_index: u32,
    /// Signal-idler separation; `None` selects `N ω_SRC − 2δ_c`.
    pub delta: Option<AngularFrequency>,
    /// Frequency at which the separation stage is centred; `None` follows
    /// `delta`.
    pub separation_center: Option<AngularFrequency>,
    pub homodyne: HomodyneAngles,
    /// Fixed recombination gain; `None` uses the gain fitted at `δ_c`.
    pub gain: Option<f64>,
    pub separation: Separation,
    pub losses: LossBudget,
    /// Squeezing of the single-mode baselines.
    pub dc_squeezing_db: f64,
    pub fd_squeezing_db: f64,
}

impl Default for GeoConfig {
    fn default() -> Self {
        GeoConfig {
            arm_length: 1200.0,
            sr_length: 1.0,
            pr_length: 1.15,
            t_prm: 900e-6,
            t_srm: 0.02,
            t_bs: 0.5,
            t_etm: 0.0,
            input_power: 2.0,
            schnupp_ls: 0.0,
            src_detuning: AngularFrequency::from_hz(2e3),
            epr_squeezing_db: 13.0,
            epr_squeeze_angle: FRAC_PI_2,
            fsr_index: 80,
            delta: None,
            separation_center: None,
            homodyne: HomodyneAngles::default(),
            gain: None,
            separation: Separation::Ideal {
                mode: OmcMode::TransmitSignalReflectIdler,
            },
            losses: LossBudget::default(),
            dc_squeezing_db: 10.0,
            fd_squeezing_db: 10.0,
        }
    }
}

impl GeoConfig {
    /// Free spectral range of the SRC, `π c / L_src` rad/s, with `L_src` the
    /// SR length plus the mean arm length.
    pub fn omega_src(&self) -> AngularFrequency {
        AngularFrequency(PI * SPEED_OF_LIGHT / self.src_length())
    }

    pub fn src_length(&self) -> f64 {
        self.sr_length + self.arm_length
    }

    /// High-finesse SRC half-bandwidth.
    pub fn src_half_bandwidth(&self) -> AngularFrequency {
        crate::cavity::half_bandwidth_high_finesse(self.t_srm, self.src_length())
    }

    pub fn epr_delta(&self) -> Result<AngularFrequency> {
        match self.delta {
            Some(d) => Ok(d),
            None => epr_delta(self.fsr_index, self.omega_src(), self.src_detuning),
        }
    }

    /// Copy with the input power rescaled so that each arm holds `target` W.
    pub fn with_arm_power(&self, target: f64) -> Result<GeoConfig> {
        if !(target > 0.0) {
            return Err(Error::invalid("arm_power", "must be > 0"));
        }
        let mut probe = self.clone();
        probe.input_power = 1.0;
        let (x, _) = GeoModel::new(&probe)?.arm_power()?;
        if !(x > 0.0) {
            return Err(Error::invalid("arm_power", "no carrier reaches the arms"));
        }
        probe.input_power = target / x;
        Ok(probe)
    }

    pub fn carrier_angular_frequency(&self) -> f64 {
        TAU * SPEED_OF_LIGHT / WAVELENGTH
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("arm_length", self.arm_length),
            ("sr_length", self.sr_length),
            ("pr_length", self.pr_length),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be a positive length"));
            }
        }
        if !(self.schnupp_ls.abs() < self.arm_length) {
            return Err(Error::invalid("schnupp_ls", "must be shorter than the arms"));
        }
        if !(self.input_power >= 0.0) {
            return Err(Error::invalid("input_power", "must be >= 0"));
        }
        if self.epr_squeezing_db < 0.0 || self.dc_squeezing_db < 0.0 || self.fd_squeezing_db < 0.0 {
            return Err(Error::invalid("squeezing_db", "must be >= 0"));
        }
        self.losses.validate()
    }
}

/// Component handles of a built interferometer.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPorts {
    pub prm: usize,
    pub bs: usize,
    pub srm: usize,
    pub etmx: usize,
    pub etmy: usize,
    pub isolator: usize,
    /// Space in front of each end mirror; port 1 faces the mirror.
    pub x_arm: usize,
    pub y_arm: usize,
    /// Open port where a probe enters the interferometer's dark port.
    pub dark_probe: PortRef,
}

/// SRM tuning that places an SRC resonance `δ_c` below the carrier.
pub fn srm_tuning(config: &GeoConfig) -> f64 {
    FRAC_PI_2 - config.src_length() * config.src_detuning.0 / SPEED_OF_LIGHT
}

/// Builds the interferometer without any losses from the budget.
pub fn build_geo(config: &GeoConfig) -> Result<(OpticalNetwork, GeoPorts)> {
    config.validate()?;
    let mut net = OpticalNetwork::new();
    let p = PortRef::new;
    let mirror = |t: f64, tuning: f64| ComponentKind::Mirror {
        transmission: t,
        loss: 0.0,
        tuning,
    };
    let prm = net.add("PRM", mirror(config.t_prm, FRAC_PI_2))?;
    let s_pr = net.add("PR", ComponentKind::Space { length: config.pr_length })?;
    let bs = net.add(
        "BS",
        ComponentKind::BeamSplitter {
            transmission: config.t_bs,
            loss: 0.0,
            tuning: 0.0,
        },
    )?;
    let x_arm = net.add(
        "XARM",
        ComponentKind::Space {
            length: config.arm_length + config.schnupp_ls / 2.0,
        },
    )?;
    let y_arm = net.add(
        "YARM",
        ComponentKind::Space {
            length: config.arm_length - config.schnupp_ls / 2.0,
        },
    )?;
    let etmx = net.add("ETMX", mirror(config.t_etm, 0.0))?;
    let etmy = net.add("ETMY", mirror(config.t_etm, 0.0))?;
    let s_sr = net.add("SR", ComponentKind::Space { length: config.sr_length })?;
    let srm = net.add("SRM", mirror(config.t_srm, srm_tuning(config)))?;
    let iso = net.add("ISO", ComponentKind::Isolator)?;

    net.connect(p(prm, 1), p(s_pr, 0))?;
    net.connect(p(s_pr, 1), p(bs, 0))?;
    net.connect(p(bs, 1), p(y_arm, 0))?;
    net.connect(p(y_arm, 1), p(etmy, 0))?;
    net.connect(p(bs, 2), p(x_arm, 0))?;
    net.connect(p(x_arm, 1), p(etmx, 0))?;
    net.connect(p(bs, 3), p(s_sr, 0))?;
    net.connect(p(s_sr, 1), p(srm, 1))?;
    net.connect(p(srm, 0), p(iso, 0))?;
    net.label_input(LASER, p(prm, 0))?;
    net.label_input(SQUEEZER, p(iso, 1))?;

    let center = match config.separation_center {
        Some(c) => c,
        None => config.epr_delta()?,
    };
    let (a_port, b_port) = build_separation(&mut net, p(iso, 2), config.separation, center)?;
    net.add_detector(HD_A, a_port)?;
    net.add_detector(HD_B, b_port)?;

    Ok((
        net,
        GeoPorts {
            prm,
            bs,
            srm,
            etmx,
            etmy,
            isolator: iso,
            x_arm,
            y_arm,
            dark_probe: p(iso, 1),
        },
    ))
}

/// Appends the separation stage at `input`; returns the open ports that
/// carry the signal band and the idler band.
fn build_separation(
    net: &mut OpticalNetwork,
    input: PortRef,
    sep: Separation,
    center: AngularFrequency,
) -> Result<(PortRef, PortRef)> {
    let p = PortRef::new;
    match sep {
        Separation::Ideal { mode } => {
            let split = net.add("SEP", ComponentKind::BandSplitter { split: center.0 / 2.0 })?;
            net.connect(input, p(split, 0))?;
            Ok(match mode {
                OmcMode::TransmitSignalReflectIdler => (p(split, 1), p(split, 2)),
                OmcMode::TransmitIdlerReflectSignal => (p(split, 2), p(split, 1)),
            })
        }
        Separation::Cavity(spec) => {
            let (first, second) = match spec.mode {
                OmcMode::TransmitSignalReflectIdler => (0.0, center.0),
                OmcMode::TransmitIdlerReflectSignal => (center.0, 0.0),
            };
            let (t1, r1) = ring_cavity(net, "OMC1", input, &spec, first)?;
            let (t2, r2) = ring_cavity(net, "OMC2", r1, &spec, second)?;
            let _ = r2;
            Ok(match spec.mode {
                OmcMode::TransmitSignalReflectIdler => (t1, t2),
                OmcMode::TransmitIdlerReflectSignal => (t2, t1),
            })
        }
    }
}

/// Two-coupler ring cavity resonant at offset `resonance`; returns its
/// (transmitted, reflected) open ports.
fn ring_cavity(
    net: &mut OpticalNetwork,
    name: &str,
    input: PortRef,
    spec: &OmcSpec,
    resonance: f64,
) -> Result<(PortRef, PortRef)> {
    let p = PortRef::new;
    let t = 1.0 - spec.coupler_reflectivity();
    let length = TAU * SPEED_OF_LIGHT / spec.fsr.0;
    let tuning = -(PI + resonance * length / SPEED_OF_LIGHT) / 2.0;
    let coupler = |tuning| ComponentKind::BeamSplitter {
        transmission: t,
        loss: 0.0,
        tuning,
    };
    let a = net.add(&alloc::format!("{name}.in"), coupler(0.0))?;
    let b = net.add(&alloc::format!("{name}.out"), coupler(tuning))?;
    let s1 = net.add(&alloc::format!("{name}.s1"), ComponentKind::Space { length: length / 2.0 })?;
    let s2 = net.add(&alloc::format!("{name}.s2"), ComponentKind::Space { length: length / 2.0 })?;
    net.connect(input, p(a, 0))?;
    net.connect(p(a, 2), p(s1, 0))?;
    net.connect(p(s1, 1), p(b, 0))?;
    net.connect(p(b, 1), p(s2, 0))?;
    net.connect(p(s2, 1), p(a, 3))?;
    Ok((p(b, 2), p(a, 1)))
}

/// Inserts the budget's losses into a network built by [`build_geo`].
pub fn apply_loss_budget(net: &OpticalNetwork, ports: &GeoPorts, budget: &LossBudget) -> Result<OpticalNetwork> {
    budget.validate()?;
    let squeezer = net.input_port(SQUEEZER)?;
    let mut out = net.attach_loss("LOSS_IN", squeezer, budget.input_loss)?;
    out = out.attach_loss("LOSS_OUT", PortRef::new(ports.isolator, 2), budget.output_loss)?;
    for (etm, extra) in [
        (ports.etmx, budget.internal_symmetric + budget.internal_asymmetric),
        (ports.etmy, budget.internal_symmetric),
    ] {
        if extra == 0.0 {
            continue;
        }
        if let ComponentKind::Mirror {
            transmission,
            loss,
            tuning,
        } = out.component(etm).kind
        {
            out.set_kind(
                etm,
                ComponentKind::Mirror {
                    transmission,
                    loss: loss + extra,
                    tuning,
                },
            )?;
        }
    }
    Ok(out)
}

/// Frequency-independent settings of the EPR readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EprReadout {
    pub delta: AngularFrequency,
    pub phi_b: f64,
    pub gain: GainMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scenario {
    NoSqueezing,
    /// Single-mode squeezing at a fixed angle chosen optimal at `δ_c`.
    DcReadoutFixedSqz,
    Epr(EprReadout),
    /// Single-mode squeezing with the angle optimised at every frequency.
    IdealFdSqz,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::NoSqueezing => "no_squeezing",
            Scenario::DcReadoutFixedSqz => "dc_readout_fixed_sqz",
            Scenario::Epr(_) => "epr",
            Scenario::IdealFdSqz => "ideal_fd_sqz",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveMetadata {
    pub scenario: String,
    pub delta_hz: Option<f64>,
    pub delta_c_hz: f64,
    pub theta: f64,
    pub phi_b: Option<f64>,
    pub gain: Option<f64>,
    pub squeeze_angle: Option<f64>,
    pub losses: LossBudget,
}

/// Strain sensitivity over a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCurve {
    pub frequencies_hz: Vec<f64>,
    /// 1/√Hz
    pub asd: Vec<f64>,
    /// Readout noise, vacuum-normalised.
    pub noise: Vec<f64>,
    /// Noise of the same readout without squeezing.
    pub unsqueezed_noise: Vec<f64>,
    pub metadata: CurveMetadata,
}

/// Dip in the improvement curve below its median, inside a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementDip {
    pub frequency_hz: f64,
    /// Median improvement minus the lowest improvement, dB.
    pub depth_db: f64,
    /// Improvement deficit below the median integrated over frequency, dB·Hz.
    pub area_db_hz: f64,
}

impl SensitivityCurve {
    /// Power improvement over the unsqueezed readout, dB (positive is better).
    pub fn improvement_db(&self) -> Vec<f64> {
        self.noise
            .iter()
            .zip(&self.unsqueezed_noise)
            .map(|(n, u)| Decibel::from_power_ratio(u / n).0)
            .collect()
    }

    /// Deepest loss of improvement within `[f_lo, f_hi]` Hz. `None` when
    /// fewer than two grid points fall inside the window.
    pub fn improvement_dip(&self, f_lo: f64, f_hi: f64) -> Option<ImprovementDip> {
        let db = self.improvement_db();
        let pts: Vec<(f64, f64)> = self
            .frequencies_hz
            .iter()
            .zip(&db)
            .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
            .map(|(f, d)| (*f, *d))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let mut sorted: Vec<f64> = pts.iter().map(|p| p.1).collect();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        let (frequency_hz, lowest) = pts.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1))?;
        let area_db_hz = pts
            .windows(2)
            .map(|w| 0.5 * ((median - w[0].1).max(0.0) + (median - w[1].1).max(0.0)) * (w[1].0 - w[0].0))
            .sum();
        Some(ImprovementDip {
            frequency_hz,
            depth_db: median - lowest,
            area_db_hz,
        })
    }
}

/// Interferometer ready for noise and signal evaluation.
#[derive(Debug, Clone)]
pub struct GeoModel {
    pub config: GeoConfig,
    pub net: OpticalNetwork,
    pub ports: GeoPorts,
    signal_sources: [DirectSource; 2],
}

impl GeoModel {
    pub fn new(config: &GeoConfig) -> Result<Self> {
        let (net, ports) = build_geo(config)?;
        let net = apply_loss_budget(&net, &ports, &config.losses)?;
        let carrier = net.solve_carrier(LASER, config.input_power)?;
        // Sideband amplitude per unit strain: i (ω_0/c)(h L/2) r E.
        let k = config.carrier_angular_frequency() / SPEED_OF_LIGHT * config.arm_length / 2.0;
        let source = |arm: usize, etm: usize, sign: f64| -> Result<DirectSource> {
            let r = match net.component(etm).kind {
                ComponentKind::Mirror { transmission, loss, .. } => (1.0 - transmission - loss).sqrt(),
                _ => unreachable!(),
            };
            let e = carrier.outgoing(PortRef::new(arm, 1));
            Ok(DirectSource {
                port: PortRef::new(etm, 0),
                amplitude: C64::i() * e * (sign * k * r),
            })
        };
        let signal_sources = [source(ports.x_arm, ports.etmx, 1.0)?, source(ports.y_arm, ports.etmy, -1.0)?];
        Ok(GeoModel {
            config: config.clone(),
            net,
            ports,
            signal_sources,
        })
    }

    /// Carrier power leaving the interferometer through the SRM.
    pub fn dark_port_power(&self) -> Result<f64> {
        let c = self.net.solve_carrier(LASER, self.config.input_power)?;
        Ok(c.power(PortRef::new(self.ports.srm, 0)))
    }

    /// Carrier power incident on each end mirror, (X, Y).
    pub fn arm_power(&self) -> Result<(f64, f64)> {
        let c = self.net.solve_carrier(LASER, self.config.input_power)?;
        Ok((
            c.power(PortRef::new(self.ports.x_arm, 1)),
            c.power(PortRef::new(self.ports.y_arm, 1)),
        ))
    }

    /// Signal quadratures at HD_A per unit strain, in the detector frame.
    pub fn signal_quadratures(&self, omega: AngularFrequency) -> Result<[C64; 2]> {
        self.net
            .signal_quadratures(HD_A, &self.signal_sources, omega, SIGNAL_LO_REFERENCE)
    }

    /// Strain-to-readout transfer at homodyne angle `θ`.
    pub fn signal_response(&self, omega: AngularFrequency, theta: f64) -> Result<C64> {
        let q = self.signal_quadratures(omega)?;
        Ok(q[0] * theta.sin() + q[1] * theta.cos())
    }

    fn signal_channel(&self) -> DetectionChannel {
        DetectionChannel {
            detector: HD_A.to_string(),
            band: AngularFrequency::ZERO,
            lo_reference: SIGNAL_LO_REFERENCE,
        }
    }

    fn idler_channel(&self, delta: AngularFrequency) -> DetectionChannel {
        DetectionChannel {
            detector: HD_B.to_string(),
            band: delta,
            lo_reference: 0.0,
        }
    }

    /// 2×2 signal-band covariance at HD_A with single-mode squeezing of
    /// factor `r` at `angle` injected (`r = 0` is vacuum).
    pub fn single_mode_covariance(&self, r: f64, angle: f64, omega: AngularFrequency) -> Result<SpectralDensityMatrix> {
        let src = InputCovariance {
            input: SQUEEZER.to_string(),
            bands: vec![AngularFrequency::ZERO],
            covariance: single_mode_squeezed(r, angle, vec![Channel::from("sq.q1"), Channel::from("sq.q2")]),
        };
        let sources = if r == 0.0 { vec![] } else { vec![src] };
        self.net
            .noise_covariance_at_detectors(&[self.signal_channel()], &sources, omega)
    }

    /// Joint 4×4 covariance of HD_A (signal band) and HD_B (idler band at
    /// `delta`) with the EPR source injected.
    pub fn epr_covariance(&self, delta: AngularFrequency, omega: AngularFrequency) -> Result<SpectralDensityMatrix> {
        let r = db_to_squeeze_factor(Decibel(self.config.epr_squeezing_db))?;
        let spec = SqueezerSpec::new(r, self.config.epr_squeeze_angle, delta)?;
        let src = InputCovariance {
            input: SQUEEZER.to_string(),
            bands: vec![AngularFrequency::ZERO, delta],
            covariance: epr_source_spectral_matrix(&spec),
        };
        self.net.noise_covariance_at_detectors(
            &[self.signal_channel(), self.idler_channel(delta)],
            &[src],
            omega,
        )
    }

    /// Unsqueezed HD_A noise at angle `θ`.
    pub fn vacuum_noise(&self, omega: AngularFrequency, theta: f64) -> Result<f64> {
        let s = self.single_mode_covariance(0.0, 0.0, omega)?;
        Ok(s.project(&[theta.sin(), theta.cos()]))
    }

    /// Single-mode squeeze angle minimising the HD_A noise at `omega`.
    pub fn best_squeeze_angle(&self, r: f64, omega: AngularFrequency, theta: f64) -> Result<f64> {
        let w = self.squeezer_readout_weights(omega, theta)?;
        Ok(best_angle(&w.0, r))
    }

    /// Real symmetric weights `P` with squeezer contribution `tr(S P)` to the
    /// HD_A readout at angle `θ`, and the remaining (vacuum) noise.
    fn squeezer_readout_weights(&self, omega: AngularFrequency, theta: f64) -> Result<([[f64; 2]; 2], f64)> {
        let u = [theta.sin(), theta.cos()];
        let base = self.single_mode_covariance(0.0, 0.0, omega)?.project(&u);
        // Probe with two orthogonal pure states to recover P.
        let probe = |r: f64, angle: f64| -> Result<f64> {
            Ok(self.single_mode_covariance(r, angle, omega)?.project(&u))
        };
        let r: f64 = 0.5;
        let (ep, em) = ((2.0 * r).exp(), (-2.0 * r).exp());
        // S(0) = diag(ep, em), S(π/2) = diag(em, ep), S(π/4) has off-diagonal (ep−em)/2
        let n0 = probe(r, 0.0)? - base;
        let n90 = probe(r, FRAC_PI_2)? - base;
        let n45 = probe(r, PI / 4.0)? - base;
        // n0 = (ep−1)P11 + (em−1)P22, n90 = (em−1)P11 + (ep−1)P22
        let det = (ep - 1.0) * (ep - 1.0) - (em - 1.0) * (em - 1.0);
        let p11 = (n0 * (ep - 1.0) - n90 * (em - 1.0)) / det;
        let p22 = (n90 * (ep - 1.0) - n0 * (em - 1.0)) / det;
        let c = (ep + em) / 2.0 - 1.0;
        let p12 = (n45 - c * (p11 + p22)) / (ep - em);
        Ok(([[p11, p12], [p12, p22]], base))
    }

    /// HD_A noise with single-mode squeezing at a given angle.
    pub fn single_mode_noise(&self, r: f64, angle: f64, omega: AngularFrequency, theta: f64) -> Result<f64> {
        Ok(self
            .single_mode_covariance(r, angle, omega)?
            .project(&[theta.sin(), theta.cos()]))
    }

    /// Evaluates one scenario on a frequency grid (Hz).
    pub fn sensitivity(&self, scenario: &Scenario, frequencies_hz: &[f64]) -> Result<SensitivityCurve> {
        let prepared = self.prepare(scenario)?;
        let mut points = Vec::with_capacity(frequencies_hz.len());
        for &f in frequencies_hz {
            points.push(self.sensitivity_point(&prepared, f)?);
        }
        Ok(self.collect_curve(&prepared, frequencies_hz, &points))
    }

    /// Frequency-independent preparation of a scenario.
    pub fn prepare(&self, scenario: &Scenario) -> Result<PreparedScenario> {
        let theta = self.config.homodyne.theta;
        let delta_c = self.config.src_detuning;
        let mut squeeze_angle = None;
        match scenario {
            Scenario::DcReadoutFixedSqz => {
                let r = db_to_squeeze_factor(Decibel(self.config.dc_squeezing_db))?;
                let at = if delta_c.0 > 0.0 { delta_c } else { AngularFrequency::from_hz(1e3) };
                squeeze_angle = Some(self.best_squeeze_angle(r, at, theta)?);
            }
            Scenario::Epr(e) if !(e.delta.0 > 0.0) => {
                return Err(Error::invalid("delta", "EPR readout needs Δ > 0"));
            }
            _ => {}
        }
        Ok(PreparedScenario {
            scenario: *scenario,
            theta,
            squeeze_angle,
        })
    }

    /// Readout noise and signal at one frequency (Hz).
    pub fn sensitivity_point(&self, p: &PreparedScenario, f_hz: f64) -> Result<SensitivityPoint> {
        let omega = AngularFrequency::from_hz(f_hz);
        let theta = p.theta;
        let h = self.signal_response(omega, theta)?.norm();
        let (noise, unsqueezed) = match p.scenario {
            Scenario::NoSqueezing => {
                let v = self.vacuum_noise(omega, theta)?;
                (v, v)
            }
            Scenario::DcReadoutFixedSqz => {
                let r = db_to_squeeze_factor(Decibel(self.config.dc_squeezing_db))?;
                let angle = p.squeeze_angle.unwrap_or(0.0);
                (
                    self.single_mode_noise(r, angle, omega, theta)?,
                    self.vacuum_noise(omega, theta)?,
                )
            }
            Scenario::IdealFdSqz => {
                let r = db_to_squeeze_factor(Decibel(self.config.fd_squeezing_db))?;
                let (w, base) = self.squeezer_readout_weights(omega, theta)?;
                let noise = |a: f64| base + squeezed_excess(&w, r, a);
                let a = minimise_angle(noise, 1e-4);
                (noise(a), self.vacuum_noise(omega, theta)?)
            }
            Scenario::Epr(e) => {
                let s = self.epr_covariance(e.delta, omega)?;
                let angles = HomodyneAngles::new(theta, e.phi_b);
                let v = conditional_over_spectrum(core::slice::from_ref(&s), &angles, e.gain)[0];
                (v, self.vacuum_noise(omega, theta)?)
            }
        };
        let asd = (HBAR * self.config.carrier_angular_frequency() * noise).sqrt() / h;
        Ok(SensitivityPoint {
            noise,
            unsqueezed_noise: unsqueezed,
            signal: h,
            asd,
        })
    }

    pub fn collect_curve(&self, p: &PreparedScenario, frequencies_hz: &[f64], points: &[SensitivityPoint]) -> SensitivityCurve {
        let (delta, phi_b, gain) = match p.scenario {
            Scenario::Epr(e) => (
                Some(e.delta.hz()),
                Some(e.phi_b),
                match e.gain {
                    GainMode::Fixed(k) => Some(k),
                    GainMode::OptimalPerFrequency => None,
                },
            ),
            _ => (None, None, None),
        };
        SensitivityCurve {
            frequencies_hz: frequencies_hz.to_vec(),
            asd: points.iter().map(|x| x.asd).collect(),
            noise: points.iter().map(|x| x.noise).collect(),
            unsqueezed_noise: points.iter().map(|x| x.unsqueezed_noise).collect(),
            metadata: CurveMetadata {
                scenario: p.scenario.name().to_string(),
                delta_hz: delta,
                delta_c_hz: self.config.src_detuning.hz(),
                theta: p.theta,
                phi_b,
                gain,
                squeeze_angle: p.squeeze_angle,
                losses: self.config.losses,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreparedScenario {
    pub scenario: Scenario,
    pub theta: f64,
    pub squeeze_angle: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityPoint {
    pub noise: f64,
    pub unsqueezed_noise: f64,
    /// |strain → readout| transfer.
    pub signal: f64,
    pub asd: f64,
}

/// Excess noise `tr((S(a) − I) P)` of a single-mode squeezed state.
fn squeezed_excess(w: &[[f64; 2]; 2], r: f64, a: f64) -> f64 {
    let (ep, em) = ((2.0 * r).exp(), (-2.0 * r).exp());
    let (c, s) = (a.cos(), a.sin());
    // S = R(a) diag(ep, em) R(a)ᵀ
    let s11 = ep * c * c + em * s * s;
    let s22 = ep * s * s + em * c * c;
    let s12 = (ep - em) * c * s;
    (s11 - 1.0) * w[0][0] + (s22 - 1.0) * w[1][1] + 2.0 * s12 * w[0][1]
}

fn best_angle(p: &[[f64; 2]; 2], r: f64) -> f64 {
    minimise_angle(|a| squeezed_excess(p, r, a), 1e-6)
}

/// Minimises a π-periodic function of an angle: coarse scan then golden
/// section on the best bracket.
fn minimise_angle<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    let n = 72;
    let step = PI / n as f64;
    let (mut best, mut best_v) = (0.0, f64::INFINITY);
    for i in 0..n {
        let a = i as f64 * step;
        let v = f(a);
        if v < best_v {
            best = a;
            best_v = v;
        }
    }
    golden_section(&f, best - step, best + step, tol).0
}

/// Default analysis grid: 300 log-spaced points over [100 Hz, 100 kHz] and
/// 100 linear points within five half-bandwidths of the detuning.
pub fn default_frequency_grid(delta_c_hz: f64, half_bandwidth_hz: f64) -> Vec<f64> {
    let mut f: Vec<f64> = (0..300)
        .map(|i| 100.0 * 1000f64.powf(i as f64 / 299.0))
        .collect();
    if delta_c_hz > 0.0 {
        let lo = (delta_c_hz - 5.0 * half_bandwidth_hz).max(100.0);
        let hi = delta_c_hz + 5.0 * half_bandwidth_hz;
        f.extend((0..100).map(|i| lo + (hi - lo) * i as f64 / 99.0));
    }
    f.sort_by(|a, b| a.total_cmp(b));
    f.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * b.abs());
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lossless() -> GeoModel {
        GeoModel::new(&GeoConfig::default()).unwrap()
    }

    #[test]
    fn table_defaults() {
        let c = GeoConfig::default();
        assert_eq!((c.arm_length, c.sr_length, c.pr_length), (1200.0, 1.0, 1.15));
        assert_eq!((c.t_prm, c.t_srm, c.t_bs, c.t_etm), (900e-6, 0.02, 0.5, 0.0));
        assert_eq!(c.input_power, 2.0);
    }

    #[test]
    fn dark_fringe_in_symmetric_model() {
        let m = lossless();
        assert!(m.dark_port_power().unwrap() < 1e-20);
        let (px, py) = m.arm_power().unwrap();
        assert!(px > 100.0 && (px - py).abs() < 1e-9 * px);
    }

    #[test]
    fn asymmetric_loss_breaks_the_dark_fringe() {
        let mut c = GeoConfig::default();
        c.losses.internal_asymmetric = 1e-3;
        let m = GeoModel::new(&c).unwrap();
        assert!(m.dark_port_power().unwrap() > 1e-9);
    }

    #[test]
    fn tuned_signal_is_in_first_quadrature() {
        let c = GeoConfig {
            src_detuning: AngularFrequency::ZERO,
            ..GeoConfig::default()
        };
        let m = GeoModel::new(&c).unwrap();
        for f in [100.0, 1e3, 1e4] {
            let q = m.signal_quadratures(AngularFrequency::from_hz(f)).unwrap();
            assert!(q[1].norm() < 1e-9 * q[0].norm(), "{f}: {q:?}");
        }
    }

    #[test]
    fn zero_strain_gives_zero_output() {
        let mut m = lossless();
        for s in m.signal_sources.iter_mut() {
            s.amplitude = C64::new(0.0, 0.0);
        }
        let h = m.signal_response(AngularFrequency::from_hz(500.0), FRAC_PI_2).unwrap();
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn lossless_vacuum_noise_is_one() {
        let m = lossless();
        for f in [100.0, 2e3, 5e4] {
            let v = m.vacuum_noise(AngularFrequency::from_hz(f), 0.3).unwrap();
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_shape() {
        let g = default_frequency_grid(2e3, 200.0);
        assert_eq!(g.len(), 400);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!((g[0] - 100.0).abs() < 1e-9 && (g[399] - 1e5).abs() < 1e-6);
    }

    #[test]
    fn zero_loss_budget_leaves_network_unchanged() {
        let (net, ports) = build_geo(&GeoConfig::default()).unwrap();
        assert_eq!(apply_loss_budget(&net, &ports, &LossBudget::default()).unwrap(), net);
    }
}
