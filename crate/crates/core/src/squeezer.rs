//! EPR source covariance, the beamsplitter entanglement model and the
//! conditional (Wiener filtered) dual-homodyne readout.
//!
//! Four-channel matrices are ordered `[a1, a2, b1, b2]`: signal band
//! quadratures first, then idler band.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
#[allow(unused_imports)]
use num_traits::Float;


use crate::linalg::CMatrix;
use crate::twophoton::{wrap_angle, AngularFrequency, Channel, SpectralDensityMatrix};
use crate::{Error, Result};

/// Output state of the two-mode squeezer: squeeze factor, squeeze angle
/// (`theta_s = 0` is phase squeezing) and the signal-idler offset Δ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezerSpec {
    pub r: f64,
    pub theta_s: f64,
    pub delta: AngularFrequency,
}

impl SqueezerSpec {
    pub fn new(r: f64, theta_s: f64, delta: AngularFrequency) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::invalid("r", "squeeze factor must be finite and >= 0"));
        }
        Ok(SqueezerSpec {
            r,
            theta_s: wrap_angle(theta_s),
            delta,
        })
    }
}

pub fn epr_channels() -> Vec<Channel> {
    vec!["a1".into(), "a2".into(), "b1".into(), "b2".into()]
}

/// Joint signal/idler covariance of the frequency-offset squeezer.
pub fn epr_source_spectral_matrix(spec: &SqueezerSpec) -> SpectralDensityMatrix {
    let ch = (2.0 * spec.r).cosh();
    let sh = (2.0 * spec.r).sinh();
    let (s2, c2) = (2.0 * spec.theta_s).sin_cos();
    let (x, y) = (c2 * sh, s2 * sh);
    let s = CMatrix::from_real_rows(&[
        [ch, 0.0, x, y],
        [0.0, ch, y, -x],
        [x, y, ch, 0.0],
        [y, -x, 0.0, ch],
    ]);
    SpectralDensityMatrix::new(epr_channels(), s).expect("EPR covariance is symmetric")
}

/// Ordinary single-band squeezed vacuum, squeezed along the quadrature at
/// `angle` (`angle = 0` squeezes the phase quadrature `q2`).
pub fn single_mode_squeezed(r: f64, angle: f64, channels: Vec<Channel>) -> SpectralDensityMatrix {
    let (s, c) = angle.sin_cos();
    let (anti, sq) = ((2.0 * r).exp(), (-2.0 * r).exp());
    // R(angle) diag(anti, sq) R(angle)ᵀ
    let m00 = c * c * anti + s * s * sq;
    let m11 = s * s * anti + c * c * sq;
    let m01 = c * s * (anti - sq);
    SpectralDensityMatrix::new(channels, CMatrix::from_real_rows(&[[m00, m01], [m01, m11]]))
        .expect("symmetric by construction")
}

/// Quadrature form of `a = (c + d)/√2`, `b = (c − d)/√2`.
pub fn beamsplitter_quadrature_matrix() -> CMatrix {
    let h = FRAC_1_SQRT_2;
    CMatrix::from_real_rows(&[
        [h, 0.0, h, 0.0],
        [0.0, h, 0.0, h],
        [h, 0.0, -h, 0.0],
        [0.0, h, 0.0, -h],
    ])
}

/// Mixes the `[c1, c2, d1, d2]` input covariance on a 50/50 beamsplitter.
pub fn beamsplitter_entangle(v_in: &SpectralDensityMatrix) -> Result<SpectralDensityMatrix> {
    if v_in.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: v_in.dim(),
        });
    }
    let b = beamsplitter_quadrature_matrix();
    // B is real, so Bᴴ = Bᵀ.
    v_in.transformed(&b, epr_channels())
}

/// Local oscillator phases of the two homodyne detectors. HD_A measures
/// `a1 sin θ + a2 cos θ`, HD_B measures `b1 sin φ + b2 cos φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneAngles {
    pub theta: f64,
    pub phi: f64,
}

impl HomodyneAngles {
    pub fn new(theta: f64, phi: f64) -> Self {
        HomodyneAngles {
            theta: wrap_angle(theta),
            phi: wrap_angle(phi),
        }
    }

    pub fn signal_projection(&self) -> [f64; 4] {
        let (s, c) = self.theta.sin_cos();
        [s, c, 0.0, 0.0]
    }

    pub fn idler_projection(&self) -> [f64; 4] {
        let (s, c) = self.phi.sin_cos();
        [0.0, 0.0, s, c]
    }
}

impl Default for HomodyneAngles {
    fn default() -> Self {
        HomodyneAngles::new(PI / 2.0, 0.0)
    }
}

/// Result of conditioning the signal quadrature on the idler quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalReadout {
    pub v_cond: f64,
    pub k_opt: f64,
    pub v_aa: f64,
    /// Real part of the signal-idler cross spectral density; only this part
    /// is usable by a real, frequency independent recombination gain.
    pub v_ab: f64,
    pub v_bb: f64,
}

/// Projected variances `(V_aa, Re V_ab, V_bb)` of a 4-channel matrix.
pub fn projected_variances(v: &SpectralDensityMatrix, angles: &HomodyneAngles) -> (f64, f64, f64) {
    let ua = angles.signal_projection();
    let ub = angles.idler_projection();
    (v.project(&ua), v.cross(&ua, &ub).re, v.project(&ub))
}

pub fn conditional_variance(v: &SpectralDensityMatrix, angles: &HomodyneAngles) -> ConditionalReadout {
    let (v_aa, v_ab, v_bb) = projected_variances(v, angles);
    conditional_from_parts(v_aa, v_ab, v_bb)
}

fn conditional_from_parts(v_aa: f64, v_ab: f64, v_bb: f64) -> ConditionalReadout {
    if v_bb <= 0.0 {
        return ConditionalReadout {
            v_cond: v_aa,
            k_opt: 0.0,
            v_aa,
            v_ab,
            v_bb,
        };
    }
    let k = v_ab / v_bb;
    ConditionalReadout {
        // clamp only removes rounding below zero
        v_cond: (v_aa - v_ab * k).max(0.0),
        k_opt: k,
        v_aa,
        v_ab,
        v_bb,
    }
}

/// Noise of `a_θ − K b_φ` for a fixed real gain.
pub fn fixed_gain_noise(v_aa: f64, v_ab: f64, v_bb: f64, k: f64) -> f64 {
    v_aa - 2.0 * k * v_ab + k * k * v_bb
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainMode {
    /// Wiener gain re-fit at every frequency (diagnostic bound).
    OptimalPerFrequency,
    /// One real gain for all frequencies.
    Fixed(f64),
}

pub fn conditional_over_spectrum(
    joint: &[SpectralDensityMatrix],
    angles: &HomodyneAngles,
    gain: GainMode,
) -> Vec<f64> {
    joint
        .iter()
        .map(|v| {
            let (aa, ab, bb) = projected_variances(v, angles);
            match gain {
                GainMode::OptimalPerFrequency => conditional_from_parts(aa, ab, bb).v_cond,
                GainMode::Fixed(k) => fixed_gain_noise(aa, ab, bb, k),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn cov_outgoing(r: f64) -> SpectralDensityMatrix {
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        SpectralDensityMatrix::new(
            epr_channels(),
            CMatrix::from_real_rows(&[
                [c, 0.0, -s, 0.0],
                [0.0, c, 0.0, s],
                [-s, 0.0, c, 0.0],
                [0.0, s, 0.0, c],
            ]),
        )
        .unwrap()
    }

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        assert_eq!(a.rows(), b.rows());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                assert!(
                    (a[(i, j)] - b[(i, j)]).norm() <= tol,
                    "({i},{j}): {} vs {}",
                    a[(i, j)],
                    b[(i, j)]
                );
            }
        }
    }

    #[test]
    fn vacuum_source_is_identity() {
        let s = epr_source_spectral_matrix(&SqueezerSpec::new(0.0, 0.3, AngularFrequency::ZERO).unwrap());
        assert_close(s.matrix(), &CMatrix::identity(4), 1e-15);
    }

    #[test]
    fn amplitude_squeezing_angle_matches_beamsplitter_output() {
        let r = 0.8;
        let s = epr_source_spectral_matrix(&SqueezerSpec::new(r, PI / 2.0, AngularFrequency::ZERO).unwrap());
        assert_close(s.matrix(), cov_outgoing(r).matrix(), 1e-14);
    }

    #[test]
    fn beamsplitter_reproduces_outgoing_covariance() {
        let r: f64 = 0.65;
        let v_in = SpectralDensityMatrix::new(
            epr_channels(),
            CMatrix::diagonal(&[
                C64::new((-2.0 * r).exp(), 0.0),
                C64::new((2.0 * r).exp(), 0.0),
                C64::new((2.0 * r).exp(), 0.0),
                C64::new((-2.0 * r).exp(), 0.0),
            ]),
        )
        .unwrap();
        let v_out = beamsplitter_entangle(&v_in).unwrap();
        assert_close(v_out.matrix(), cov_outgoing(r).matrix(), 1e-13);
        let vac = beamsplitter_entangle(&SpectralDensityMatrix::vacuum(epr_channels())).unwrap();
        assert_close(vac.matrix(), &CMatrix::identity(4), 1e-15);
    }

    #[test]
    fn beamsplitter_rejects_wrong_dimension() {
        let v = SpectralDensityMatrix::vacuum(vec!["x".into(), "y".into()]);
        assert!(matches!(
            beamsplitter_entangle(&v),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn conditional_minimum_and_gain() {
        let r = 1.1;
        let v = cov_outgoing(r);
        let theta = 0.4;
        let out = conditional_variance(&v, &HomodyneAngles::new(theta, -theta));
        assert!((out.v_cond - 1.0 / (2.0 * r).cosh()).abs() < 1e-12);
        assert!((out.k_opt.abs() - (2.0 * r).tanh()).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_vacuum_is_not_conditioned() {
        let v = SpectralDensityMatrix::vacuum(epr_channels());
        let out = conditional_variance(&v, &HomodyneAngles::new(0.3, 1.2));
        assert_eq!(out.v_cond, 1.0);
        assert_eq!(out.k_opt, 0.0);
    }

    #[test]
    fn degenerate_idler_variance() {
        let mut m = CMatrix::identity(4);
        m[(2, 2)] = C64::new(0.0, 0.0);
        m[(3, 3)] = C64::new(0.0, 0.0);
        let v = SpectralDensityMatrix::new(epr_channels(), m).unwrap();
        let out = conditional_variance(&v, &HomodyneAngles::new(0.0, 0.0));
        assert_eq!(out.v_cond, 1.0);
        assert_eq!(out.k_opt, 0.0);
    }

    #[test]
    fn zero_gain_returns_raw_variance() {
        let r = 0.5;
        let v = cov_outgoing(r);
        let noise = conditional_over_spectrum(&[v], &HomodyneAngles::new(1.0, 0.2), GainMode::Fixed(0.0));
        assert!((noise[0] - (2.0 * r).cosh()).abs() < 1e-14);
    }

    #[test]
    fn fixed_gain_quadratic_by_hand() {
        // Two frequencies with hand-picked correlations between a1 and b1.
        let mk = |aa: f64, ab: f64, bb: f64| {
            SpectralDensityMatrix::new(
                epr_channels(),
                CMatrix::from_real_rows(&[
                    [aa, 0.0, ab, 0.0],
                    [0.0, 1.0, 0.0, 0.0],
                    [ab, 0.0, bb, 0.0],
                    [0.0, 0.0, 0.0, 1.0],
                ]),
            )
            .unwrap()
        };
        let joint = [mk(3.0, 1.0, 2.0), mk(5.0, -2.0, 4.0)];
        let angles = HomodyneAngles::new(PI / 2.0, PI / 2.0);
        let k = 0.5;
        let noise = conditional_over_spectrum(&joint, &angles, GainMode::Fixed(k));
        // 3 − 2·0.5·1 + 0.25·2 = 2.5 ; 5 + 2·0.5·2 + 0.25·4 = 8
        assert!((noise[0] - 2.5).abs() < 1e-14);
        assert!((noise[1] - 8.0).abs() < 1e-14);
        let opt = conditional_over_spectrum(&joint, &angles, GainMode::OptimalPerFrequency);
        assert!((opt[0] - (3.0 - 1.0 / 2.0)).abs() < 1e-14);
        assert!((opt[1] - (5.0 - 4.0 / 4.0)).abs() < 1e-14);
    }

    #[test]
    fn single_mode_squeezing_orientation() {
        let r = 0.7;
        let s = single_mode_squeezed(r, 0.0, vec!["q1".into(), "q2".into()]);
        assert!((s.get(1, 1).re - (-2.0 * r).exp()).abs() < 1e-14);
        assert!((s.get(0, 0).re - (2.0 * r).exp()).abs() < 1e-14);
        let s = single_mode_squeezed(r, PI / 2.0, vec!["q1".into(), "q2".into()]);
        assert!((s.get(0, 0).re - (-2.0 * r).exp()).abs() < 1e-13);
    }
}
