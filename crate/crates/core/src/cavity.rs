//! Closed-form cavity responses: detuned single-sided cavities, the
//! frequency-selective output mode cleaner, and the PRC/SRC coupled-cavity
//! probe built on the network solver.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geo::{build_geo, GeoConfig, GeoPorts};
use crate::network::PortRef;
use crate::twophoton::{transfer_to_twophoton, AngularFrequency};
use crate::{Error, Result, C64, SPEED_OF_LIGHT};

/// Lossless single-sided cavity near one of its resonances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySpec {
    pub omega_c: AngularFrequency,
    /// Half-width at half-maximum.
    pub gamma_c: AngularFrequency,
    pub fsr: AngularFrequency,
    /// `ω_0 − ω_c`, with `ω_0` the reference carrier.
    pub detuning: AngularFrequency,
}

impl CavitySpec {
    pub fn new(omega_c: AngularFrequency, gamma_c: AngularFrequency, fsr: AngularFrequency) -> Result<Self> {
        if !(gamma_c.0 > 0.0) {
            return Err(Error::invalid("gamma_c", "must be > 0"));
        }
        if !(fsr.0 > 0.0) {
            return Err(Error::invalid("fsr", "must be > 0"));
        }
        Ok(CavitySpec {
            omega_c,
            gamma_c,
            fsr,
            detuning: -omega_c,
        })
    }

    /// Cavity whose response is centred `detuning` below the carrier,
    /// i.e. `ω_c = −δ_c` with the carrier as frequency origin.
    pub fn detuned(detuning: AngularFrequency, gamma_c: AngularFrequency, fsr: AngularFrequency) -> Result<Self> {
        Self::new(-detuning, gamma_c, fsr)
    }

    /// Linear cavity of one-way length `length` with a lossless input mirror
    /// of power transmission `t_in` and a perfect back mirror.
    ///
    /// The half-width is the value for which the Lorentzian agrees with the
    /// Airy response to second order in the round-trip phase.
    pub fn from_mirror(t_in: f64, length: f64, omega_c: AngularFrequency) -> Result<Self> {
        if !(t_in > 0.0 && t_in < 1.0) {
            return Err(Error::invalid("t_in", "must lie in (0, 1)"));
        }
        if !(length > 0.0) {
            return Err(Error::invalid("length", "must be > 0"));
        }
        let r = (1.0 - t_in).sqrt();
        let gamma = SPEED_OF_LIGHT / length * (1.0 - r) / (1.0 + r);
        Self::new(omega_c, AngularFrequency(gamma), AngularFrequency(PI * SPEED_OF_LIGHT / length))
    }
}

/// High-finesse half-bandwidth `T c / (4 L)` of a cavity of one-way length
/// `length`, in rad/s.
pub fn half_bandwidth_high_finesse(t_in: f64, length: f64) -> AngularFrequency {
    AngularFrequency(t_in * SPEED_OF_LIGHT / (4.0 * length))
}

/// Reflection `−(ω−ω_c−iγ)/(ω−ω_c+iγ)`, with `ω − ω_c` folded into the
/// free spectral range nearest to zero so the response repeats every FSR.
pub fn cavity_reflection(spec: &CavitySpec, omega: AngularFrequency) -> C64 {
    let fsr = spec.fsr.0;
    let mut x = (omega.0 - spec.omega_c.0) % fsr;
    if x > fsr / 2.0 {
        x -= fsr;
    } else if x < -fsr / 2.0 {
        x += fsr;
    }
    let g = spec.gamma_c.0;
    -C64::new(x, -g) / C64::new(x, g)
}

/// Mean sideband phase `(φ₊+φ₋)/2` picked up on reflection at sideband
/// frequency `Ω` about the reference carrier.
pub fn quadrature_rotation_angle(spec: &CavitySpec, omega: AngularFrequency) -> f64 {
    let (d, g) = (spec.detuning.0, spec.gamma_c.0);
    ((omega.0 + d) / g).atan() + ((-omega.0 + d) / g).atan()
}

/// Rotation angle extracted from the reflection two-photon matrix, reduced
/// to `(−π/2, π/2]`.
pub fn reflection_rotation_angle(spec: &CavitySpec, omega: AngularFrequency) -> f64 {
    let carrier = spec.omega_c.0 + spec.detuning.0;
    let up = cavity_reflection(spec, AngularFrequency(carrier + omega.0));
    let lo = cavity_reflection(spec, AngularFrequency(carrier - omega.0));
    let (_, a) = transfer_to_twophoton(up, lo).phase_and_rotation();
    reduce_half_turn(a)
}

pub(crate) fn reduce_half_turn(a: f64) -> f64 {
    let mut a = a % PI;
    if a <= -PI / 2.0 {
        a += PI;
    } else if a > PI / 2.0 {
        a -= PI;
    }
    a
}

/// Signal-idler separation `Δ = N ω_SRC − 2 δ_c` placing the idler as far
/// below the `N`-th cavity resonance as the signal is above the zeroth.
pub fn epr_delta(n: u32, omega_src: AngularFrequency, delta_c: AngularFrequency) -> Result<AngularFrequency> {
    if n == 0 {
        return Err(Error::invalid("N", "must be >= 1"));
    }
    Ok(AngularFrequency(n as f64 * omega_src.0 - 2.0 * delta_c.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmcMode {
    TransmitSignalReflectIdler,
    TransmitIdlerReflectSignal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Signal,
    Idler,
}

/// Impedance-matched, lossless separation cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmcSpec {
    /// Half width at half maximum of the transmission peak.
    pub half_width: AngularFrequency,
    pub fsr: AngularFrequency,
    pub mode: OmcMode,
}

impl OmcSpec {
    pub fn new(half_width: AngularFrequency, fsr: AngularFrequency, mode: OmcMode) -> Result<Self> {
        if !(half_width.0 > 0.0) || !(fsr.0 > 2.0 * half_width.0) {
            return Err(Error::invalid("omc", "need 0 < 2 * half_width < fsr"));
        }
        Ok(OmcSpec { half_width, fsr, mode })
    }

    pub fn finesse(&self) -> f64 {
        self.fsr.0 / (2.0 * self.half_width.0)
    }

    /// Power reflectivity of each of the two identical couplers.
    pub fn coupler_reflectivity(&self) -> f64 {
        let s = (PI * self.half_width.0 / self.fsr.0).sin();
        let u = (s * s + 1.0).sqrt() - s;
        u * u
    }

    /// Transmitted and reflected amplitudes at `offset` from the resonance.
    pub fn response(&self, offset: AngularFrequency) -> (C64, C64) {
        let big_r = self.coupler_reflectivity();
        let r = big_r.sqrt();
        let psi = 2.0 * PI * offset.0 / self.fsr.0;
        let e = C64::from_polar(1.0, psi);
        let den = C64::new(1.0, 0.0) - e * big_r;
        let t = C64::from_polar(1.0 - big_r, psi / 2.0) / den;
        let rho = (C64::new(1.0, 0.0) - e) * r / den;
        (t, rho)
    }
}

/// Transmitted and reflected amplitudes for one sideband (`Ω` signed) of
/// the given band; the transmitted band sits on resonance and the other is
/// `Δ` away.
pub fn omc_separation_transfer(spec: &OmcSpec, band: Band, omega: AngularFrequency, delta: AngularFrequency) -> (C64, C64) {
    let on_resonance = matches!(
        (spec.mode, band),
        (OmcMode::TransmitSignalReflectIdler, Band::Signal) | (OmcMode::TransmitIdlerReflectSignal, Band::Idler)
    );
    let offset = if on_resonance { omega.0 } else { omega.0 + delta.0 };
    spec.response(AngularFrequency(offset))
}

/// Classical probe response of the recycling cavities.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledCavityPoint {
    /// Probe offset from the main carrier.
    pub offset: AngularFrequency,
    pub schnupp_ls: f64,
    /// Power circulating in the PRC, W per W injected.
    pub prc_power: f64,
    /// Power circulating in the SRC, W per W injected.
    pub src_power: f64,
    /// Phase of the SRC field, rad.
    pub src_phase: f64,
}

/// Injects 1 W at the dark port for each probe offset and Schnupp length and
/// records the fields inside both recycling cavities.
pub fn coupled_cavity_response(
    config: &GeoConfig,
    offsets: &[AngularFrequency],
    schnupp: &[f64],
) -> Result<Vec<CoupledCavityPoint>> {
    let mut out = Vec::with_capacity(offsets.len() * schnupp.len());
    for &ls in schnupp {
        let mut cfg = config.clone();
        cfg.schnupp_ls = ls;
        let (net, ports) = build_geo(&cfg)?;
        for &off in offsets {
            let sol = net.solve_fields(off, &[(ports.dark_probe, C64::new(1.0, 0.0))], &[])?;
            out.push(CoupledCavityPoint {
                offset: off,
                schnupp_ls: ls,
                prc_power: sol.power(prc_probe(&ports)),
                src_power: sol.power(src_probe(&ports)),
                src_phase: sol.outgoing(src_probe(&ports)).arg(),
            });
        }
    }
    Ok(out)
}

/// Local maxima of the SRC power above `threshold` times the largest value,
/// as (offset, power) in sweep order. Points must come from one Schnupp length.
pub fn src_power_peaks(points: &[CoupledCavityPoint], threshold: f64) -> Vec<(AngularFrequency, f64)> {
    let max = points.iter().map(|p| p.src_power).fold(0.0, f64::max);
    points
        .windows(3)
        .filter(|w| w[1].src_power > w[0].src_power && w[1].src_power >= w[2].src_power)
        .filter(|w| w[1].src_power > threshold * max)
        .map(|w| (w[1].offset, w[1].src_power))
        .collect()
}

fn prc_probe(p: &GeoPorts) -> PortRef {
    PortRef::new(p.prm, 1)
}

fn src_probe(p: &GeoPorts) -> PortRef {
    PortRef::new(p.srm, 1)
}
