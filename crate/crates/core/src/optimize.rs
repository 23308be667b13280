//! Search for the idler offset `Δ` and idler homodyne phase `φ_B` that
//! minimise the conditional readout noise, and the choice between the two
//! minima found around each SRC resonance.

use alloc::vec::Vec;
use core::f64::consts::TAU;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geo::{EprReadout, GeoModel, Scenario};
use crate::squeezer::{conditional_variance, fixed_gain_noise, projected_variances, GainMode, HomodyneAngles};
use crate::twophoton::{AngularFrequency, SpectralDensityMatrix};
use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimisation of a unimodal `f` on `[a, b]`; returns the
/// abscissa and value of the best point seen.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Branch {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// Noise at `Ω = δ_c` only.
    NoiseAtDetuning,
    /// Mean noise over a log-spaced band (Hz) with one real gain fitted to
    /// the whole band.
    BandIntegrated { f_lo: f64, f_hi: f64, points: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    pub delta_points: usize,
    pub phi_points: usize,
    pub rounds: usize,
    /// Scan half-width in units of `δ_c`.
    pub span: f64,
    pub keep_landscape: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            delta_points: 161,
            phi_points: 360,
            rounds: 3,
            span: 4.0,
            keep_landscape: false,
        }
    }
}

/// Noise relative to the unsqueezed readout over the `(Δ, φ_B)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub deltas: Vec<AngularFrequency>,
    pub phis: Vec<f64>,
    /// `noise[i][j]` at `deltas[i]`, `phis[j]`.
    pub noise: Vec<Vec<f64>>,
}

impl Landscape {
    /// Minimum over `φ_B` for every `Δ`.
    pub fn profile(&self) -> Vec<f64> {
        self.noise
            .iter()
            .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
            .collect()
    }

    /// Indices of interior local minima of the profile, deepest first.
    pub fn local_minima(&self) -> Vec<usize> {
        let p = self.profile();
        let mut idx: Vec<usize> = (1..p.len().saturating_sub(1))
            .filter(|&i| p[i] <= p[i - 1] && p[i] < p[i + 1])
            .collect();
        idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        idx
    }

    pub fn min(&self) -> f64 {
        self.profile().into_iter().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub delta_opt: AngularFrequency,
    pub phi_b_opt: f64,
    pub k_opt: f64,
    pub branch: Branch,
    /// Conditional noise at `δ_c` relative to the unsqueezed readout.
    pub noise_at_detuning: f64,
    /// Minimised objective; equals `noise_at_detuning` for the default one.
    pub objective_value: f64,
    pub landscape: Option<Landscape>,
}

impl OptimizationResult {
    pub fn readout(&self, gain: GainMode) -> EprReadout {
        EprReadout {
            delta: self.delta_opt,
            phi_b: self.phi_b_opt,
            gain,
        }
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::Epr(self.readout(GainMode::Fixed(self.k_opt)))
    }
}

struct Evaluator<'a> {
    model: &'a GeoModel,
    objective: Objective,
    theta: f64,
    omega: AngularFrequency,
    band: Vec<(AngularFrequency, f64)>,
    reference: f64,
}

impl<'a> Evaluator<'a> {
    fn new(model: &'a GeoModel, objective: Objective) -> Result<Self> {
        let theta = model.config.homodyne.theta;
        let omega = detuning_probe(model);
        let reference = model.vacuum_noise(omega, theta)?;
        let band = match objective {
            Objective::NoiseAtDetuning => Vec::new(),
            Objective::BandIntegrated { f_lo, f_hi, points } => {
                let n = points.max(2);
                (0..n)
                    .map(|i| {
                        let f = f_lo * (f_hi / f_lo).powf(i as f64 / (n - 1) as f64);
                        let w = AngularFrequency::from_hz(f);
                        model.vacuum_noise(w, theta).map(|v| (w, v))
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok(Evaluator {
            model,
            objective,
            theta,
            omega,
            band,
            reference,
        })
    }

    /// Covariances needed for one `Δ`.
    fn covariances(&self, delta: AngularFrequency) -> Result<Vec<SpectralDensityMatrix>> {
        match self.objective {
            Objective::NoiseAtDetuning => Ok(alloc::vec![self.model.epr_covariance(delta, self.omega)?]),
            Objective::BandIntegrated { .. } => self
                .band
                .iter()
                .map(|(w, _)| self.model.epr_covariance(delta, *w))
                .collect(),
        }
    }

    fn value(&self, cov: &[SpectralDensityMatrix], phi: f64) -> f64 {
        let angles = HomodyneAngles::new(self.theta, phi);
        match self.objective {
            Objective::NoiseAtDetuning => conditional_variance(&cov[0], &angles).v_cond / self.reference,
            Objective::BandIntegrated { .. } => {
                let (aa, ab, bb) = self.band_sums(cov, &angles);
                let k = if bb > 0.0 { ab / bb } else { 0.0 };
                fixed_gain_noise(aa, ab, bb, k) / cov.len() as f64
            }
        }
    }

    /// Sums of the projected (co)variances over the band, each weighted by
    /// the inverse unsqueezed noise.
    fn band_sums(&self, cov: &[SpectralDensityMatrix], angles: &HomodyneAngles) -> (f64, f64, f64) {
        cov.iter().zip(&self.band).fold((0.0, 0.0, 0.0), |acc, (c, (_, v0))| {
            let (aa, ab, bb) = projected_variances(c, angles);
            (acc.0 + aa / v0, acc.1 + ab / v0, acc.2 + bb / v0)
        })
    }

    /// Real gain minimising the objective at `φ_B`.
    fn gain(&self, cov: &[SpectralDensityMatrix], phi: f64) -> f64 {
        let angles = HomodyneAngles::new(self.theta, phi);
        match self.objective {
            Objective::NoiseAtDetuning => conditional_variance(&cov[0], &angles).k_opt,
            Objective::BandIntegrated { .. } => {
                let (_, ab, bb) = self.band_sums(cov, &angles);
                if bb > 0.0 {
                    ab / bb
                } else {
                    0.0
                }
            }
        }
    }

    fn best_phi(&self, cov: &[SpectralDensityMatrix], phi_points: usize) -> (f64, f64) {
        let step = TAU / phi_points as f64;
        let (mut bp, mut bv) = (0.0, f64::INFINITY);
        for j in 0..phi_points {
            let v = self.value(cov, j as f64 * step);
            if v < bv {
                bp = j as f64 * step;
                bv = v;
            }
        }
        golden_section(|p| self.value(cov, p), bp - step, bp + step, 1e-7)
    }
}

/// Probe frequency of the default objective: `δ_c`, or the SRC half
/// bandwidth for a tuned interferometer.
fn detuning_probe(model: &GeoModel) -> AngularFrequency {
    let d = model.config.src_detuning;
    if d.0 > 0.0 {
        d
    } else {
        model.config.src_half_bandwidth()
    }
}

/// Scans `(Δ, φ_B)` around the `N`-th SRC resonance.
pub fn landscape(model: &GeoModel, n: u32, objective: Objective, settings: &OptimizerSettings) -> Result<Landscape> {
    let ev = Evaluator::new(model, objective)?;
    scan(&ev, n, settings)
}

fn scan_range(model: &GeoModel, n: u32, settings: &OptimizerSettings) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::invalid("N", "must be >= 1"));
    }
    let center = n as f64 * model.config.omega_src().0;
    let half = settings.span * detuning_probe(model).0;
    Ok((center - half, center + half))
}

fn scan(ev: &Evaluator<'_>, n: u32, settings: &OptimizerSettings) -> Result<Landscape> {
    let (lo, hi) = scan_range(ev.model, n, settings)?;
    let nd = settings.delta_points.max(3);
    let deltas: Vec<AngularFrequency> = (0..nd)
        .map(|i| AngularFrequency(lo + (hi - lo) * i as f64 / (nd - 1) as f64))
        .collect();
    let phis: Vec<f64> = (0..settings.phi_points)
        .map(|j| TAU * j as f64 / settings.phi_points as f64)
        .collect();
    let mut noise = Vec::with_capacity(nd);
    for d in &deltas {
        let cov = ev.covariances(*d)?;
        noise.push(phis.iter().map(|&p| ev.value(&cov, p)).collect());
    }
    Ok(Landscape { deltas, phis, noise })
}

fn refine(ev: &Evaluator<'_>, grid: &Landscape, i: usize, settings: &OptimizerSettings) -> Result<(f64, f64, f64)> {
    let dstep = grid.deltas[1].0 - grid.deltas[0].0;
    let row = &grid.noise[i];
    let j = (0..row.len()).min_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap_or(0);
    let mut delta = grid.deltas[i].0;
    let mut phi = grid.phis[j];
    let mut value = row[j];
    let mut cov = ev.covariances(AngularFrequency(delta))?;
    for _ in 0..settings.rounds {
        let (p, _) = ev.best_phi(&cov, settings.phi_points);
        phi = p;
        let f = |d: f64| match ev.covariances(AngularFrequency(d)) {
            Ok(c) => ev.value(&c, phi),
            Err(_) => f64::INFINITY,
        };
        let (d, _) = golden_section(f, delta - dstep, delta + dstep, dstep * 1e-4);
        delta = d;
        cov = ev.covariances(AngularFrequency(delta))?;
        let (p, v) = ev.best_phi(&cov, settings.phi_points);
        phi = p;
        value = v;
    }
    Ok((delta, crate::twophoton::wrap_angle(phi), value))
}

/// Both optimal `(Δ, φ_B, K)` choices around the `N`-th SRC resonance,
/// ordered (lower, upper) in `Δ`. When only one minimum exists both
/// entries describe it.
pub fn optimize_epr_branches(
    model: &GeoModel,
    n: u32,
    objective: Objective,
    settings: &OptimizerSettings,
) -> Result<(OptimizationResult, OptimizationResult)> {
    let ev = Evaluator::new(model, objective)?;
    let grid = scan(&ev, n, settings)?;
    let minima = grid.local_minima();
    let mut picks: Vec<usize> = minima.iter().take(2).copied().collect();
    if picks.is_empty() {
        let p = grid.profile();
        picks.push((0..p.len()).min_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0));
    }
    picks.sort_unstable();
    let mut results = Vec::new();
    for (k, &i) in picks.iter().enumerate() {
        let (delta, phi, value) = refine(&ev, &grid, i, settings)?;
        let k_opt = ev.gain(&ev.covariances(AngularFrequency(delta))?, phi);
        let cov = model.epr_covariance(AngularFrequency(delta), ev.omega)?;
        let (aa, ab, bb) = projected_variances(&cov, &HomodyneAngles::new(ev.theta, phi));
        let branch = if k == 0 { Branch::Lower } else { Branch::Upper };
        results.push(OptimizationResult {
            delta_opt: AngularFrequency(delta),
            phi_b_opt: phi,
            k_opt,
            branch,
            noise_at_detuning: match objective {
                Objective::NoiseAtDetuning => value,
                Objective::BandIntegrated { .. } => fixed_gain_noise(aa, ab, bb, k_opt) / ev.reference,
            },
            objective_value: value,
            landscape: None,
        });
    }
    let best = results.iter().map(|r| r.objective_value).fold(f64::INFINITY, f64::min);
    if !(best < 1.0) {
        return Err(Error::NoImprovement { best });
    }
    if results.len() == 1 {
        let mut upper = results[0].clone();
        upper.branch = Branch::Upper;
        results.push(upper);
    }
    if settings.keep_landscape {
        results[0].landscape = Some(grid);
    }
    let upper = results.pop().unwrap();
    let lower = results.pop().unwrap();
    Ok((lower, upper))
}

/// Optimal readout on the lower-`Δ` branch.
pub fn optimize_epr(
    model: &GeoModel,
    n: u32,
    objective: Objective,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult> {
    Ok(optimize_epr_branches(model, n, objective, settings)?.0)
}

/// Picks the branch with the larger mean improvement (dB) over a band of
/// `points` log-spaced frequencies; ties go to the lower branch.
pub fn choose_branch(
    model: &GeoModel,
    lower: &OptimizationResult,
    upper: &OptimizationResult,
    band_hz: (f64, f64),
    points: usize,
) -> Result<Branch> {
    let n = points.max(1);
    let freqs: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                band_hz.0
            } else {
                band_hz.0 * (band_hz.1 / band_hz.0).powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    let mean = |r: &OptimizationResult| -> Result<f64> {
        let c = model.sensitivity(&r.scenario(), &freqs)?;
        let db = c.improvement_db();
        Ok(db.iter().sum::<f64>() / db.len() as f64)
    };
    let (l, u) = (mean(lower)?, mean(upper)?);
    Ok(if u > l + 1e-6 { Branch::Upper } else { Branch::Lower })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, v) = golden_section(|x| (x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(v < 1e-16);
    }

    #[test]
    fn landscape_minima_are_sorted_by_depth() {
        let l = Landscape {
            deltas: (0..7).map(|i| AngularFrequency(i as f64)).collect(),
            phis: alloc::vec![0.0],
            noise: [3.0, 1.0, 2.0, 2.5, 0.5, 0.9, 4.0].iter().map(|&v| alloc::vec![v]).collect(),
        };
        assert_eq!(l.local_minima(), alloc::vec![4, 1]);
        assert_eq!(l.min(), 0.5);
    }
}
