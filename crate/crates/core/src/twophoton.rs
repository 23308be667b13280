//! Two-photon (quadrature) picture of a pair of sidebands around a carrier.
//!
//! A sideband pair `(a₊, a₋)` at `carrier ± Ω` maps to the amplitude and phase
//! quadratures
//!
//! ```text
//! q1 = (a₊ + a₋*) / √2
//! q2 = (a₊ − a₋*) / (√2 i)
//! ```
//!
//! and an element acting diagonally on the sidebands (`a₊ → t₊ a₊`,
//! `a₋ → t₋ a₋`) becomes the 2×2 [`TwoPhotonMatrix`]
//! `½ [[t₊+t₋*, i(t₊−t₋*)], [−i(t₊−t₋*), t₊+t₋*]]`.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, LN_10, PI};
use core::ops::Mul;
#[allow(unused_imports)]
use num_traits::Float;



use crate::linalg::CMatrix;
use crate::{Error, Result, C64};

/// Angular frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct AngularFrequency(pub f64);

impl AngularFrequency {
    pub const ZERO: AngularFrequency = AngularFrequency(0.0);

    pub fn from_hz(hz: f64) -> Self {
        AngularFrequency(2.0 * PI * hz)
    }

    pub fn hz(self) -> f64 {
        self.0 / (2.0 * PI)
    }

    pub fn rad_per_s(self) -> f64 {
        self.0
    }
}

impl core::ops::Add for AngularFrequency {
    type Output = AngularFrequency;
    fn add(self, rhs: Self) -> Self {
        AngularFrequency(self.0 + rhs.0)
    }
}

impl core::ops::Sub for AngularFrequency {
    type Output = AngularFrequency;
    fn sub(self, rhs: Self) -> Self {
        AngularFrequency(self.0 - rhs.0)
    }
}

impl core::ops::Neg for AngularFrequency {
    type Output = AngularFrequency;
    fn neg(self) -> Self {
        AngularFrequency(-self.0)
    }
}

impl Mul<f64> for AngularFrequency {
    type Output = AngularFrequency;
    fn mul(self, rhs: f64) -> Self {
        AngularFrequency(self.0 * rhs)
    }
}

/// Upper and lower sideband amplitudes around `carrier_offset` (0 for the
/// signal band, Δ for the idler band).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandPair {
    pub carrier_offset: AngularFrequency,
    pub upper: C64,
    pub lower: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePair {
    pub q1: C64,
    pub q2: C64,
}

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let tau = core::f64::consts::TAU;
    let r = a % tau;
    let r = if r < 0.0 { r + tau } else { r };
    // rounding can land exactly on 2π
    if r >= tau {
        0.0
    } else {
        r
    }
}

pub fn sidebands_to_quadratures(pair: &SidebandPair) -> QuadraturePair {
    let l = pair.lower.conj();
    QuadraturePair {
        q1: (pair.upper + l) * FRAC_1_SQRT_2,
        q2: (pair.upper - l) * FRAC_1_SQRT_2 / C64::i(),
    }
}

pub fn quadratures_to_sidebands(q: &QuadraturePair, carrier_offset: AngularFrequency) -> SidebandPair {
    let iq2 = C64::i() * q.q2;
    SidebandPair {
        carrier_offset,
        upper: (q.q1 + iq2) * FRAC_1_SQRT_2,
        lower: ((q.q1 - iq2) * FRAC_1_SQRT_2).conj(),
    }
}

/// 2×2 complex transfer acting on `(q1, q2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonMatrix(pub [[C64; 2]; 2]);

impl TwoPhotonMatrix {
    pub const ZERO: TwoPhotonMatrix = TwoPhotonMatrix([[C64::new(0.0, 0.0); 2]; 2]);
    pub const IDENTITY: TwoPhotonMatrix = TwoPhotonMatrix([
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
    ]);

    /// Real rotation `[[cos α, −sin α], [sin α, cos α]]`.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        TwoPhotonMatrix([
            [C64::new(c, 0.0), C64::new(-s, 0.0)],
            [C64::new(s, 0.0), C64::new(c, 0.0)],
        ])
    }

    pub fn determinant(&self) -> C64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        TwoPhotonMatrix([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn apply(&self, q: &QuadraturePair) -> QuadraturePair {
        let m = &self.0;
        QuadraturePair {
            q1: m[0][0] * q.q1 + m[0][1] * q.q2,
            q2: m[1][0] * q.q1 + m[1][1] * q.q2,
        }
    }

    /// Splits `M = e^{iχ} R(α)` for matrices of that form (any diagonal
    /// sideband transfer with `|t₊| = |t₋|`) and returns `(χ, α)`.
    pub fn phase_and_rotation(&self) -> (f64, f64) {
        let chi = self.determinant().arg() / 2.0;
        let unphase = C64::from_polar(1.0, -chi);
        let c = (self.0[0][0] * unphase).re;
        let s = (self.0[1][0] * unphase).re;
        (chi, s.atan2(c))
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_rows(&self.0)
    }
}

impl Mul for TwoPhotonMatrix {
    type Output = TwoPhotonMatrix;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TwoPhotonMatrix(out)
    }
}

/// Converts a diagonal sideband transfer (`t_upper` at carrier+Ω, `t_lower`
/// at carrier−Ω) to its quadrature matrix.
pub fn transfer_to_twophoton(t_upper: C64, t_lower: C64) -> TwoPhotonMatrix {
    let lc = t_lower.conj();
    let sum = (t_upper + lc) * 0.5;
    let diff = C64::i() * (t_upper - lc) * 0.5;
    TwoPhotonMatrix([[sum, diff], [-diff, sum]])
}

/// Label of one quadrature channel: which port, which band, which quadrature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Channel(pub String);

impl From<&str> for Channel {
    fn from(s: &str) -> Self {
        Channel(String::from(s))
    }
}

/// Hermitian matrix of single-sided cross spectral densities over a list of
/// quadrature channels. Vacuum is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensityMatrix {
    channels: Vec<Channel>,
    s: CMatrix,
}

impl SpectralDensityMatrix {
    pub fn new(channels: Vec<Channel>, s: CMatrix) -> Result<Self> {
        if !s.is_square() {
            return Err(Error::DimensionMismatch {
                expected: s.rows(),
                found: s.cols(),
            });
        }
        if s.rows() != channels.len() {
            return Err(Error::DimensionMismatch {
                expected: channels.len(),
                found: s.rows(),
            });
        }
        let scale = s.max_abs().max(1.0);
        if s.hermitian_defect() > 1e-12 * scale {
            return Err(Error::invalid("spectral density", "matrix is not Hermitian"));
        }
        Ok(SpectralDensityMatrix { channels, s })
    }

    pub fn vacuum(channels: Vec<Channel>) -> Self {
        let n = channels.len();
        SpectralDensityMatrix {
            channels,
            s: CMatrix::identity(n),
        }
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.s
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.s[(i, j)]
    }

    /// `T S Tᴴ` relabelled onto `channels`.
    pub fn transformed(&self, t: &CMatrix, channels: Vec<Channel>) -> Result<Self> {
        if t.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: t.cols(),
            });
        }
        SpectralDensityMatrix::new(channels, t.congruence(&self.s))
    }

    /// Real quadratic form `uᵀ S u` for a real projection vector `u`.
    pub fn project(&self, u: &[f64]) -> f64 {
        self.cross(u, u).re
    }

    /// `uᵀ S v` for real projection vectors.
    pub fn cross(&self, u: &[f64], v: &[f64]) -> C64 {
        assert_eq!(u.len(), self.dim());
        assert_eq!(v.len(), self.dim());
        let mut acc = C64::new(0.0, 0.0);
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            for (j, &vj) in v.iter().enumerate() {
                acc += self.s[(i, j)] * (ui * vj);
            }
        }
        acc
    }
}

/// Power ratio in decibels.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Decibel(pub f64);

impl Decibel {
    pub fn from_power_ratio(ratio: f64) -> Self {
        Decibel(10.0 * ratio.log10())
    }

    pub fn power_ratio(self) -> f64 {
        10.0_f64.powf(self.0 / 10.0)
    }
}

/// Squeeze factor `r` for which `10 log₁₀ e^{2r}` equals the given level.
pub fn db_to_squeeze_factor(db: Decibel) -> Result<f64> {
    if !(db.0 >= 0.0) {
        return Err(Error::NegativeDecibel(db.0));
    }
    Ok(db.0 * LN_10 / 20.0)
}

pub fn squeeze_factor_to_db(r: f64) -> Decibel {
    Decibel(20.0 * r / LN_10)
}
