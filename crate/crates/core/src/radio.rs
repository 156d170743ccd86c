//! Propagation, antenna, fading and noise primitives.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{ensure, Result};
use crate::math::{self, PI};

/// Transmit powers, path-loss law and receiver constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadioParams {
    /// GSM BS transmit power `P_g` (W).
    pub gsm_power: f64,
    /// LTE small-cell transmit power `P_l` (W).
    pub lte_power: f64,
    /// Path gain at 1 m, `L_0`.
    pub l0: f64,
    /// Path-loss exponent `α`.
    pub path_loss_exponent: f64,
    /// Noise power spectral density (W/Hz).
    pub noise_psd: f64,
    /// Shannon gap `η` (linear).
    pub shannon_gap: f64,
    /// Carrier wavelength (m).
    pub wavelength: f64,
}

impl RadioParams {
    /// 40 W GSM BS, 0.375 m wavelength, `α = 3`, −174 dBm/Hz noise, 3 dB gap.
    /// `lte_power` is left at zero; it is normally set by power calibration.
    pub fn table_one() -> Self {
        let wavelength = 0.375;
        RadioParams {
            gsm_power: 40.0,
            lte_power: 0.0,
            l0: Self::free_space_l0(wavelength),
            path_loss_exponent: 3.0,
            noise_psd: math::dbm_to_watts(-174.0),
            shannon_gap: math::db_to_linear(3.0),
            wavelength,
        }
    }

    /// Free-space power gain at 1 m, `(λ / 4π)²`.
    pub fn free_space_l0(wavelength: f64) -> f64 {
        let g = wavelength / (4.0 * PI);
        g * g
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.gsm_power > 0.0, "gsm_power", "must be > 0, got {}", self.gsm_power);
        ensure!(
            self.lte_power >= 0.0 && self.lte_power.is_finite(),
            "lte_power",
            "must be finite and >= 0, got {}",
            self.lte_power
        );
        ensure!(self.l0 > 0.0, "l0", "must be > 0, got {}", self.l0);
        ensure!(
            self.path_loss_exponent > 2.0,
            "path_loss_exponent",
            "must be > 2 for the interference integrals to converge, got {}",
            self.path_loss_exponent
        );
        ensure!(self.noise_psd > 0.0, "noise_psd", "must be > 0, got {}", self.noise_psd);
        ensure!(
            self.shannon_gap >= 1.0,
            "shannon_gap",
            "must be >= 1, got {}",
            self.shannon_gap
        );
        ensure!(
            self.wavelength > 0.0,
            "wavelength",
            "must be > 0, got {}",
            self.wavelength
        );
        Ok(())
    }

    /// `P̂_g = P_g · L_0`.
    pub fn gsm_power_hat(&self) -> f64 {
        self.gsm_power * self.l0
    }

    /// `P̂_l = P_l · L_0`.
    pub fn lte_power_hat(&self) -> f64 {
        self.lte_power * self.l0
    }

    /// `L_0 · r^{−α}`.
    pub fn path_gain(&self, r: f64) -> Result<f64> {
        ensure!(r > 0.0 && r.is_finite(), "r", "path gain needs r > 0, got {r}");
        Ok(self.l0 * self.distance_gain(r))
    }

    /// `r^{−α}` without the `L_0` constant.
    #[inline]
    pub fn distance_gain(&self, r: f64) -> f64 {
        if self.path_loss_exponent == 3.0 {
            1.0 / (r * r * r)
        } else {
            math::powf(r, -self.path_loss_exponent)
        }
    }

    /// Thermal noise over `bandwidth` Hz.
    pub fn noise_power(&self, bandwidth: f64) -> Result<f64> {
        ensure!(
            bandwidth > 0.0 && bandwidth.is_finite(),
            "bandwidth",
            "must be > 0, got {bandwidth}"
        );
        Ok(self.noise_psd * bandwidth)
    }
}

/// Small-scale fading of a link's power gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FadingModel {
    /// Gain fixed at 1.
    DeterministicUnit,
    /// Exponential power gain with unit mean.
    #[default]
    Rayleigh,
}

impl FadingModel {
    /// One power-gain draw.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            FadingModel::DeterministicUnit => 1.0,
            FadingModel::Rayleigh => Exp1.sample(rng),
        }
    }

    /// `E[1 − exp(−x F)] / x`, the per-interferer PGFL kernel divided by its
    /// argument. Bounded by 1 and smooth at 0.
    #[inline]
    pub fn pgfl_kernel(&self, x: f64) -> f64 {
        match self {
            FadingModel::Rayleigh => 1.0 / (1.0 + x),
            FadingModel::DeterministicUnit => {
                if x < 1e-8 {
                    1.0 - 0.5 * x
                } else {
                    -math::exp_m1(-x) / x
                }
            }
        }
    }
}

/// Horizontal antenna pattern of a macro sector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AntennaPattern {
    Omni,
    /// `−min(12 (φ/φ_3dB)², A_m)` dB.
    TriSector {
        beamwidth_deg: f64,
        floor_db: f64,
    },
    /// The 3GPP pattern with 70° beamwidth and a 20 dB floor.
    #[default]
    TriSector3gpp,
}

impl AntennaPattern {
    fn params(&self) -> Option<(f64, f64)> {
        match *self {
            AntennaPattern::Omni => None,
            AntennaPattern::TriSector {
                beamwidth_deg,
                floor_db,
            } => Some((beamwidth_deg, floor_db)),
            AntennaPattern::TriSector3gpp => Some((70.0, 20.0)),
        }
    }

    /// Gain in dB at offset `phi` (rad) from boresight.
    pub fn gain_db(&self, phi: f64) -> f64 {
        match self.params() {
            None => 0.0,
            Some((bw, floor)) => {
                let deg = math::wrap_angle(phi) * 180.0 / PI;
                let x = deg / bw;
                -(12.0 * x * x).min(floor)
            }
        }
    }

    /// Linear gain at offset `phi` (rad) from boresight.
    #[inline]
    pub fn gain(&self, phi: f64) -> f64 {
        match self {
            AntennaPattern::Omni => 1.0,
            _ => math::db_to_linear(self.gain_db(phi)),
        }
    }

    /// Offset (rad, in [0, π]) beyond which the gain sits on its floor.
    pub fn floor_angle(&self) -> Option<f64> {
        self.params()
            .map(|(bw, floor)| (bw * math::sqrt(floor / 12.0)).min(180.0) * PI / 180.0)
    }
}
