//! Stochastic-geometry analysis of the two-tier network.
//!
//! Macro BSs form a PPP. For a receiver at the origin and interferers beyond
//! `R`, the probability generating functional gives
//!
//! ```text
//! L_I(s) = exp(−λ ∫₀^{2π} ∫_R^∞ v (1 − E_F[exp(−s P̂ F G(φ) v^{−α})]) dv dφ)
//! ```
//!
//! The radial integral is evaluated after substituting `u = (R/v)^{α−2}`,
//! which maps `[R, ∞)` onto `(0, 1]` with a bounded integrand:
//!
//! ```text
//! ∫_R^∞ … dv = a R^{2−α}/(α−2) ∫₀¹ k(a R^{−α} u^{α/(α−2)}) du,   a = s P̂ G(φ)
//! ```
//!
//! where `k(x) = E[1 − e^{−xF}]/x` is the fading kernel.

use alloc::vec::Vec;

use crate::error::{ensure, Result};
use crate::geometry::{
    band_guard_radii, gsm_cochannel_radius, gsm_link_geometry, macro_density, sector_boresight, serving_sector,
    CochannelRadius, NetworkGeometry, SECTORS,
};
use crate::math::{self, PI, TAU};
use crate::plan::CARRIER_BANDWIDTH;
use crate::quadrature::{try_integrate, QuadratureSpec};
use crate::radio::{AntennaPattern, FadingModel, RadioParams};

/// A PPP of sectorised macro interferers seen from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceField {
    /// Point density (m⁻²).
    pub density: f64,
    /// Exclusion radius around the receiver (m).
    pub inner_radius: f64,
    /// Field truncation radius (m); `None` is the infinite plane.
    pub outer_radius: Option<f64>,
    /// `P̂ = P · L_0` of every interferer.
    pub tx_power_hat: f64,
    pub path_loss_exponent: f64,
    pub pattern: AntennaPattern,
    pub fading: FadingModel,
}

impl InterferenceField {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.density >= 0.0 && self.density.is_finite(),
            "density",
            "must be >= 0, got {}",
            self.density
        );
        ensure!(
            self.inner_radius > 0.0 && self.inner_radius.is_finite(),
            "inner_radius",
            "must be > 0, got {}",
            self.inner_radius
        );
        if let Some(outer) = self.outer_radius {
            ensure!(
                outer >= self.inner_radius,
                "outer_radius",
                "must be >= inner radius {}, got {outer}",
                self.inner_radius
            );
        }
        ensure!(
            self.tx_power_hat >= 0.0,
            "tx_power_hat",
            "must be >= 0, got {}",
            self.tx_power_hat
        );
        ensure!(
            self.path_loss_exponent > 2.0,
            "path_loss_exponent",
            "must be > 2, got {}",
            self.path_loss_exponent
        );
        Ok(())
    }

    fn u_lower(&self) -> f64 {
        match self.outer_radius {
            Some(outer) => math::powf(self.inner_radius / outer, self.path_loss_exponent - 2.0),
            None => 0.0,
        }
    }

    /// `∫_R^{R_out} v (1 − E[exp(−a F v^{−α})]) dv`.
    fn radial(&self, a: f64, q: &QuadratureSpec) -> Result<f64> {
        if a == 0.0 {
            return Ok(0.0);
        }
        let alpha = self.path_loss_exponent;
        let e = alpha - 2.0;
        let p = alpha / e;
        let r = self.inner_radius;
        let c = a * math::powf(r, -alpha);
        let lo = self.u_lower();
        let fading = self.fading;
        let kernel = |u: f64| {
            let up = if p == 3.0 { u * u * u } else { math::powf(u, p) };
            Ok(fading.pgfl_kernel(c * up))
        };
        // The kernel drops from 1 to 0 around c·u^p = 1.
        let knee = if c > 1.0 { math::powf(c, -1.0 / p) } else { 1.0 };
        let integral = try_integrate(kernel, lo, 1.0, &[knee], q.inner_rel_tol, q.abs_tol, q.max_subdivisions)?;
        Ok(a * math::powf(r, 2.0 - alpha) / e * integral.value)
    }

    /// `∫₀^{2π} radial(s P̂ G(φ)) dφ`.
    fn angular(&self, s: f64, q: &QuadratureSpec) -> Result<f64> {
        let base = s * self.tx_power_hat;
        match self.pattern.floor_angle() {
            None => Ok(TAU * self.radial(base, q)?),
            Some(floor) => {
                let pattern = self.pattern;
                let main = try_integrate(
                    |phi| self.radial(base * pattern.gain(phi), q),
                    0.0,
                    floor,
                    &[],
                    q.inner_rel_tol,
                    q.abs_tol,
                    q.max_subdivisions,
                )?;
                let back = (PI - floor) * self.radial(base * pattern.gain(PI), q)?;
                Ok(2.0 * (main.value + back))
            }
        }
    }

    /// `−ln L_I(s)`.
    pub fn exponent(&self, s: f64, q: &QuadratureSpec) -> Result<f64> {
        ensure!(s >= 0.0 && s.is_finite(), "s", "must be finite and >= 0, got {s}");
        self.validate()?;
        if s == 0.0 || self.density == 0.0 || self.tx_power_hat == 0.0 {
            return Ok(0.0);
        }
        Ok(self.density * self.angular(s, q)?)
    }

    /// Laplace transform `L_I(s) = E[exp(−s I)]`.
    pub fn laplace(&self, s: f64, q: &QuadratureSpec) -> Result<f64> {
        Ok(math::exp(-self.exponent(s, q)?))
    }

    /// Mean interference `E[I]` under unit-mean fading.
    pub fn mean(&self, q: &QuadratureSpec) -> Result<f64> {
        self.validate()?;
        let e = self.path_loss_exponent - 2.0;
        let radial = math::powf(self.inner_radius, -e) / e * (1.0 - self.u_lower());
        let gain = antenna_gain_integral(&self.pattern, q)?;
        Ok(self.density * self.tx_power_hat * gain * radial)
    }
}

/// `∫₀^{2π} G(φ) dφ` of a pattern.
pub fn antenna_gain_integral(pattern: &AntennaPattern, q: &QuadratureSpec) -> Result<f64> {
    match pattern.floor_angle() {
        None => Ok(TAU),
        Some(floor) => {
            let main = try_integrate(
                |phi| Ok(pattern.gain(phi)),
                0.0,
                floor,
                &[],
                q.inner_rel_tol,
                q.abs_tol,
                q.max_subdivisions,
            )?;
            Ok(2.0 * (main.value + (PI - floor) * pattern.gain(PI)))
        }
    }
}

/// `L_I(s)` for an infinite field of sectorised macro BSs transmitting at `rp.gsm_power`.
pub fn laplace_interference(
    s: f64,
    guard_radius: f64,
    density: f64,
    pattern: AntennaPattern,
    fading: FadingModel,
    rp: &RadioParams,
    q: &QuadratureSpec,
) -> Result<f64> {
    InterferenceField {
        density,
        inner_radius: guard_radius,
        outer_radius: None,
        tx_power_hat: rp.gsm_power_hat(),
        path_loss_exponent: rp.path_loss_exponent,
        pattern,
        fading,
    }
    .laplace(s, q)
}

/// One LTE band and the macro interference it sees.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LteBand {
    /// `B_i` (Hz).
    pub bandwidth: f64,
    /// `R_i` (m).
    pub guard_radius: f64,
    /// Boresight of the interfering sectors, `θ_i` (rad).
    pub sector_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandPlanAnalysis {
    pub bands: Vec<LteBand>,
    /// Macro BS density `λ` (m⁻²).
    pub lambda_bs: f64,
    /// LTE UE density `λ⁽ᵘ⁾` (m⁻²); `None` means one UE per small cell.
    pub lambda_ue: Option<f64>,
}

impl BandPlanAnalysis {
    /// Bands `B_1..B_3` with the guard radii and density implied by `g`.
    pub fn from_geometry(g: &NetworkGeometry, bandwidths: [f64; SECTORS]) -> Result<Self> {
        let radii = band_guard_radii(g)?;
        let bands = (0..SECTORS)
            .map(|i| LteBand {
                bandwidth: bandwidths[i],
                guard_radius: radii[i],
                sector_offset: sector_boresight(i),
            })
            .collect();
        Ok(BandPlanAnalysis {
            bands,
            lambda_bs: macro_density(g.macro_side),
            lambda_ue: None,
        })
    }

    /// `N_ue = max(1, λ⁽ᵘ⁾ π R_c²)`.
    pub fn expected_users(&self, coverage_radius: f64) -> f64 {
        self.lambda_ue
            .map_or(1.0, |l| l * PI * coverage_radius * coverage_radius)
            .max(1.0)
    }

    pub fn total_bandwidth(&self) -> f64 {
        self.bands.iter().map(|b| b.bandwidth).sum()
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.bands.is_empty(), "bands", "at least one band is required");
        for b in &self.bands {
            ensure!(b.bandwidth > 0.0, "bandwidth", "must be > 0, got {}", b.bandwidth);
            ensure!(
                b.guard_radius > 0.0,
                "guard_radius",
                "must be > 0, got {}",
                b.guard_radius
            );
        }
        ensure!(
            self.lambda_bs >= 0.0 && self.lambda_bs.is_finite(),
            "lambda_bs",
            "must be >= 0, got {}",
            self.lambda_bs
        );
        if let Some(l) = self.lambda_ue {
            ensure!(l >= 0.0 && l.is_finite(), "lambda_ue", "must be >= 0, got {l}");
        }
        Ok(())
    }
}

/// Everything the analytical formulas depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisContext {
    pub geometry: NetworkGeometry,
    pub radio: RadioParams,
    pub pattern: AntennaPattern,
    /// Fading of macro interferer links `F_x`.
    pub interferer_fading: FadingModel,
    pub bands: BandPlanAnalysis,
    pub cochannel_radius: CochannelRadius,
    /// Truncation radius of every interferer field; `None` is the infinite plane.
    pub field_radius: Option<f64>,
    pub quadrature: QuadratureSpec,
}

impl AnalysisContext {
    /// Default profile: `(B_1, B_2, B_3) = (2, 3, 3)` MHz, 3GPP sector pattern,
    /// Rayleigh interferers, infinite field.
    pub fn table_one(geometry: NetworkGeometry, radio: RadioParams) -> Result<Self> {
        Self::with_bands(geometry, radio, [2e6, 3e6, 3e6])
    }

    pub fn with_bands(geometry: NetworkGeometry, radio: RadioParams, bandwidths: [f64; 3]) -> Result<Self> {
        let ctx = AnalysisContext {
            bands: BandPlanAnalysis::from_geometry(&geometry, bandwidths)?,
            geometry,
            radio,
            pattern: AntennaPattern::TriSector3gpp,
            interferer_fading: FadingModel::Rayleigh,
            cochannel_radius: CochannelRadius::CellAzimuth,
            field_radius: None,
            quadrature: QuadratureSpec::default(),
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.radio.validate()?;
        self.bands.validate()?;
        self.quadrature.validate()?;
        if let Some(f) = self.field_radius {
            ensure!(f > 0.0 && f.is_finite(), "field_radius", "must be > 0, got {f}");
        }
        Ok(())
    }

    /// Macro interference on LTE band `band`.
    pub fn band_field(&self, band: usize) -> Result<InterferenceField> {
        ensure!(
            band < self.bands.bands.len(),
            "band",
            "index {band} out of range (have {})",
            self.bands.bands.len()
        );
        let field = InterferenceField {
            density: self.bands.lambda_bs,
            inner_radius: self.bands.bands[band].guard_radius,
            outer_radius: self.field_radius,
            tx_power_hat: self.radio.gsm_power_hat(),
            path_loss_exponent: self.radio.path_loss_exponent,
            pattern: self.pattern,
            fading: self.interferer_fading,
        };
        field.validate()?;
        Ok(field)
    }

    /// `R_0` used for the co-channel GSM field.
    pub fn cochannel_radius(&self) -> f64 {
        gsm_cochannel_radius(&self.geometry, self.cochannel_radius, self.geometry.small_cell_azimuth)
    }

    /// Co-channel GSM interferers of a control carrier: density `λ/3` beyond `R_0`.
    pub fn cochannel_field(&self) -> Result<InterferenceField> {
        let field = InterferenceField {
            density: self.bands.lambda_bs / 3.0,
            inner_radius: self.cochannel_radius(),
            outer_radius: self.field_radius,
            tx_power_hat: self.radio.gsm_power_hat(),
            path_loss_exponent: self.radio.path_loss_exponent,
            pattern: self.pattern,
            fading: self.interferer_fading,
        };
        field.validate()?;
        Ok(field)
    }

    /// Noise over LTE band `band`.
    pub fn band_noise(&self, band: usize) -> Result<f64> {
        self.radio.noise_power(self.bands.bands[band].bandwidth)
    }
}

fn check_link_length(r: f64, ctx: &AnalysisContext) -> Result<()> {
    ensure!(
        r > 0.0 && r <= ctx.geometry.coverage_radius,
        "r",
        "must lie in (0, R_c = {}], got {r}",
        ctx.geometry.coverage_radius
    );
    Ok(())
}

/// `P(SINR_i(r) > x)` for an LTE UE at distance `r` from its small cell.
pub fn lte_band_sinr_ccdf(r: f64, band: usize, x: f64, ctx: &AnalysisContext) -> Result<f64> {
    check_link_length(r, ctx)?;
    ensure!(x >= 0.0, "x", "SINR threshold must be >= 0, got {x}");
    if x == 0.0 {
        return Ok(1.0);
    }
    let p_hat = ctx.radio.lte_power_hat();
    if p_hat == 0.0 {
        return Ok(0.0);
    }
    let s = x / (p_hat * ctx.radio.distance_gain(r));
    let noise = ctx.band_noise(band)?;
    let field = ctx.band_field(band)?;
    Ok(math::exp(-s * noise - field.exponent(s, &ctx.quadrature)?))
}

/// `∫ P(SINR_i > η(2^t − 1)) dt = E[log₂(1 + SINR_i/η)]` for one band.
pub fn lte_band_spectral_efficiency(r: f64, band: usize, ctx: &AnalysisContext) -> Result<f64> {
    check_link_length(r, ctx)?;
    let p_hat = ctx.radio.lte_power_hat();
    if p_hat == 0.0 {
        return Ok(0.0);
    }
    let q = &ctx.quadrature;
    let eta = ctx.radio.shannon_gap;
    let noise = ctx.band_noise(band)?;
    // Beyond x_max even the interference-free CCDF is below the truncation level.
    let snr = p_hat * ctx.radio.distance_gain(r) / noise;
    let x_max = math::ln(1.0 / q.truncation_eps) * snr;
    let t_max = math::log2(1.0 + x_max / eta);
    let integral = try_integrate(
        |t| lte_band_sinr_ccdf(r, band, eta * (math::exp2(t) - 1.0), ctx),
        0.0,
        t_max,
        &[],
        q.outer_rel_tol,
        q.abs_tol,
        q.max_subdivisions,
    )?;
    Ok(integral.value)
}

/// Rate `τ(r)` (bit/s) of an LTE UE at distance `r` from its small cell.
pub fn lte_user_rate(r: f64, ctx: &AnalysisContext) -> Result<f64> {
    check_link_length(r, ctx)?;
    let mut total = 0.0;
    for (i, band) in ctx.bands.bands.iter().enumerate() {
        total += band.bandwidth * lte_band_spectral_efficiency(r, i, ctx)?;
    }
    Ok(total / ctx.bands.expected_users(ctx.geometry.coverage_radius))
}

/// `1 − P(SINR_g(r, ψ) ≥ T)` for a GSM user at `(r, ψ)` from the small cell.
/// `with_lte` adds the nearest small cell as a Rayleigh interferer.
pub fn gsm_outage(r: f64, psi: f64, threshold: f64, with_lte: bool, ctx: &AnalysisContext) -> Result<f64> {
    ensure!(
        threshold >= 0.0 && threshold.is_finite(),
        "threshold",
        "must be finite and >= 0, got {threshold}"
    );
    if threshold == 0.0 {
        return Ok(0.0);
    }
    let link = gsm_link_geometry(&ctx.geometry, r, psi)?;
    let sector = serving_sector(link.azimuth);
    let gain = ctx.pattern.gain(link.azimuth - sector_boresight(sector));
    let s = threshold / (ctx.radio.gsm_power_hat() * gain * ctx.radio.distance_gain(link.distance));
    let noise = ctx.radio.noise_power(CARRIER_BANDWIDTH)?;
    let mut log_success = -s * noise - ctx.cochannel_field()?.exponent(s, &ctx.quadrature)?;
    let p_l = ctx.radio.lte_power_hat();
    if with_lte && p_l > 0.0 {
        if r == 0.0 {
            return Ok(1.0);
        }
        log_success -= math::ln(1.0 + s * p_l * ctx.radio.distance_gain(r));
    }
    Ok(-math::exp_m1(log_success))
}

/// Deployment scenarios compared by the disk-averaged outage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Scenario {
    /// No small cell.
    NoLte,
    /// Small cell on all carriers, no puncturing.
    DirectOverlay,
    /// Users inside the guard region use punctured carriers.
    Dsr,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::NoLte, Scenario::DirectOverlay, Scenario::Dsr];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::NoLte => "no_lte",
            Scenario::DirectOverlay => "direct",
            Scenario::Dsr => "dsr",
        }
    }

    /// Whether a GSM user at distance `r` from the small cell sees LTE
    /// interference. The guard disk is closed, up to rounding of `r`.
    pub fn lte_at(self, r: f64, guard_radius: f64) -> bool {
        match self {
            Scenario::NoLte => false,
            Scenario::DirectOverlay => true,
            Scenario::Dsr => r > guard_radius * (1.0 + 1e-9),
        }
    }
}

impl core::str::FromStr for Scenario {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no_lte" => Ok(Scenario::NoLte),
            "direct" | "direct_overlay" => Ok(Scenario::DirectOverlay),
            "dsr" => Ok(Scenario::Dsr),
            other => Err(crate::Error::invalid(
                "scenario",
                alloc::format!("unknown scenario `{other}` (expected no_lte, direct or dsr)"),
            )),
        }
    }
}

/// Outage averaged uniformly over the disk of radius `R_s + ΔR_s` around the
/// small cell.
pub fn scenario_average_outage(scenario: Scenario, threshold: f64, ctx: &AnalysisContext) -> Result<f64> {
    let g = &ctx.geometry;
    let radius = g.guard_radius + g.guard_annulus;
    let q = &ctx.quadrature;
    // Inner tolerance a decade tighter so the outer estimate sees a smooth integrand.
    let inner_tol = q.outer_rel_tol / 10.0;
    let ring = |r: f64| -> Result<f64> {
        let with_lte = scenario.lte_at(r, g.guard_radius);
        let around = try_integrate(
            |psi| gsm_outage(r, psi, threshold, with_lte, ctx),
            0.0,
            TAU,
            &[PI],
            inner_tol,
            q.abs_tol,
            q.max_subdivisions,
        )?;
        Ok(r * around.value)
    };
    let total = try_integrate(
        ring,
        0.0,
        radius,
        &[g.guard_radius],
        q.outer_rel_tol,
        q.abs_tol,
        q.max_subdivisions,
    )?;
    Ok((total.value / (PI * radius * radius)).clamp(0.0, 1.0))
}

/// An outage curve over a threshold grid (dB).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutageCurve {
    pub thresholds_db: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl OutageCurve {
    /// Threshold (dB) where the curve first reaches `p`, linearly interpolated.
    pub fn threshold_at(&self, p: f64) -> Option<f64> {
        let t = &self.thresholds_db;
        let y = &self.probabilities;
        for i in 1..y.len() {
            if y[i - 1] <= p && y[i] >= p {
                if y[i] == y[i - 1] {
                    return Some(t[i - 1]);
                }
                return Some(t[i - 1] + (p - y[i - 1]) / (y[i] - y[i - 1]) * (t[i] - t[i - 1]));
            }
        }
        None
    }

    /// True if every probability lies in `[0, 1]` and the curve never decreases.
    pub fn is_valid_cdf(&self) -> bool {
        self.probabilities.iter().all(|p| (0.0..=1.0).contains(p))
            && self.probabilities.windows(2).all(|w| w[1] >= w[0])
    }
}

/// `gsm_outage` over a threshold grid in dB.
pub fn outage_curve(
    r: f64,
    psi: f64,
    thresholds_db: &[f64],
    with_lte: bool,
    ctx: &AnalysisContext,
) -> Result<OutageCurve> {
    let probabilities = thresholds_db
        .iter()
        .map(|&t| gsm_outage(r, psi, math::db_to_linear(t), with_lte, ctx))
        .collect::<Result<Vec<_>>>()?;
    Ok(OutageCurve {
        thresholds_db: thresholds_db.to_vec(),
        probabilities,
    })
}

/// `scenario_average_outage` over a threshold grid in dB.
pub fn average_outage_curve(scenario: Scenario, thresholds_db: &[f64], ctx: &AnalysisContext) -> Result<OutageCurve> {
    let probabilities = thresholds_db
        .iter()
        .map(|&t| scenario_average_outage(scenario, math::db_to_linear(t), ctx))
        .collect::<Result<Vec<_>>>()?;
    Ok(OutageCurve {
        thresholds_db: thresholds_db.to_vec(),
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::calibrate_power;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1, Poisson};

    fn context() -> AnalysisContext {
        let mut ctx =
            AnalysisContext::table_one(NetworkGeometry::with_distance(350.0), RadioParams::table_one()).unwrap();
        ctx.radio.lte_power = calibrate_power(&ctx, 1.0).unwrap();
        ctx
    }

    fn omni_field(inner: f64, outer: Option<f64>) -> InterferenceField {
        let rp = RadioParams::table_one();
        InterferenceField {
            density: macro_density(1000.0),
            inner_radius: inner,
            outer_radius: outer,
            tx_power_hat: rp.gsm_power_hat(),
            path_loss_exponent: 3.0,
            pattern: AntennaPattern::Omni,
            fading: FadingModel::Rayleigh,
        }
    }

    /// `∫_R^∞ a v/(v³ + a) dv` in closed form.
    fn rayleigh_alpha3_radial(a: f64, r: f64) -> f64 {
        let c = a.cbrt();
        let s3 = 3f64.sqrt();
        c * c
            * ((PI / 2.0 - ((2.0 * r - c) / (c * s3)).atan()) / s3
                - ((r * r - c * r + c * c) / ((r + c) * (r + c))).ln() / 6.0)
    }

    #[test]
    fn closed_form_alpha3_rayleigh() {
        let q = QuadratureSpec::default();
        for &s in &[1e9, 1e11, 1e12, 1e13, 1e15] {
            for &r in &[50.0, 450.0, 1500.0] {
                let f = omni_field(r, None);
                let a = s * f.tx_power_hat;
                let expected = f.density * TAU * rayleigh_alpha3_radial(a, r);
                let got = f.exponent(s, &q).unwrap();
                assert!((got / expected - 1.0).abs() < 1e-6, "s={s} r={r}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn pattern_gain_integral() {
        let q = QuadratureSpec::default();
        let g = antenna_gain_integral(&AntennaPattern::TriSector3gpp, &q).unwrap();
        // Midpoint oracle on a fine grid.
        let n = 200_000;
        let h = TAU / n as f64;
        let oracle: f64 = (0..n)
            .map(|k| AntennaPattern::TriSector3gpp.gain(-PI + (k as f64 + 0.5) * h) * h)
            .sum();
        assert!((g - oracle).abs() < 1e-7, "{g} vs {oracle}");
        assert!((g - 1.3309).abs() < 1e-3);
    }

    #[test]
    fn laplace_trivial_limits() {
        let q = QuadratureSpec::default();
        let f = omni_field(450.0, None);
        assert_eq!(f.laplace(0.0, &q).unwrap(), 1.0);
        let empty = InterferenceField { density: 0.0, ..f };
        assert_eq!(empty.laplace(1e15, &q).unwrap(), 1.0);
        assert!(f.laplace(-1.0, &q).is_err());
    }

    /// Average of `exp(−s Σ P̂ F G ‖x‖^{−α})` over PPP draws on an annulus.
    fn ppp_laplace_oracle(f: &InterferenceField, s: f64, draws: usize, seed: u64) -> (f64, f64) {
        let outer = f.outer_radius.unwrap();
        let inner = f.inner_radius;
        let area = PI * (outer * outer - inner * inner);
        let poisson = Poisson::new(f.density * area).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..draws {
            let n: f64 = poisson.sample(&mut rng);
            let mut interference = 0.0;
            for _ in 0..n as usize {
                let rad = (inner * inner + rng.random::<f64>() * (outer * outer - inner * inner)).sqrt();
                let phi = rng.random::<f64>() * TAU;
                let fade: f64 = Exp1.sample(&mut rng);
                interference += f.tx_power_hat * fade * f.pattern.gain(phi) * rad.powf(-f.path_loss_exponent);
            }
            let v = (-s * interference).exp();
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / draws as f64;
        let var = sum_sq / draws as f64 - mean * mean;
        (mean, (var / draws as f64).sqrt())
    }

    #[test]
    fn laplace_matches_ppp_monte_carlo() {
        let q = QuadratureSpec::default();
        let mut f = omni_field(450.0, Some(10_000.0));
        for (i, &s) in [1e8, 1e9, 1e10].iter().enumerate() {
            let analytic = f.laplace(s, &q).unwrap();
            let (mc, se) = ppp_laplace_oracle(&f, s, 40_000, 11 + i as u64);
            assert!(
                (analytic - mc).abs() < (4.0 * se).max(0.01 * analytic),
                "s={s}: {analytic} vs {mc} ± {se}"
            );
        }
        f.pattern = AntennaPattern::TriSector3gpp;
        let analytic = f.laplace(1e11, &q).unwrap();
        let (mc, se) = ppp_laplace_oracle(&f, 1e11, 40_000, 5);
        assert!(
            (analytic - mc).abs() < (4.0 * se).max(0.01 * analytic),
            "{analytic} vs {mc} ± {se}"
        );
    }

    #[test]
    fn truncated_field_is_weaker() {
        let q = QuadratureSpec::default();
        let inf = omni_field(450.0, None).laplace(1e12, &q).unwrap();
        let cut = omni_field(450.0, Some(30_000.0)).laplace(1e12, &q).unwrap();
        assert!(cut > inf);
        assert_eq!(omni_field(450.0, Some(450.0)).laplace(1e12, &q).unwrap(), 1.0);
    }

    #[test]
    fn mean_matches_small_s_slope() {
        let q = QuadratureSpec::default();
        let mut f = omni_field(450.0, Some(20_000.0));
        f.pattern = AntennaPattern::TriSector3gpp;
        let s = 1e3;
        let slope = f.exponent(s, &q).unwrap() / s;
        let mean = f.mean(&q).unwrap();
        assert!((slope / mean - 1.0).abs() < 1e-4, "{slope} vs {mean}");
    }

    #[test]
    fn deterministic_fading_kernel_is_used() {
        let q = QuadratureSpec::default();
        let mut f = omni_field(450.0, None);
        let ray = f.exponent(1e13, &q).unwrap();
        f.fading = FadingModel::DeterministicUnit;
        let det = f.exponent(1e13, &q).unwrap();
        // Jensen: E[1 − e^{−xF}] ≤ 1 − e^{−x} for unit-mean F.
        assert!(det > ray);
    }

    #[test]
    fn ccdf_limits() {
        let ctx = context();
        assert_eq!(lte_band_sinr_ccdf(25.0, 0, 0.0, &ctx).unwrap(), 1.0);
        let mut quiet = ctx.clone();
        quiet.bands.lambda_bs = 0.0;
        let x = 1e3;
        let snr = quiet.radio.lte_power_hat() * 25f64.powi(-3) / quiet.band_noise(0).unwrap();
        let got = lte_band_sinr_ccdf(25.0, 0, x, &quiet).unwrap();
        assert!((got - (-x / snr).exp()).abs() < 1e-14);
        assert!(lte_band_sinr_ccdf(60.0, 0, 1.0, &ctx).is_err());
    }

    #[test]
    fn ccdf_matches_monte_carlo() {
        let mut ctx = context();
        ctx.field_radius = Some(10_000.0);
        let r = 25.0;
        let x = 1.0e3;
        let field = ctx.band_field(0).unwrap();
        let s = x / (ctx.radio.lte_power_hat() * ctx.radio.distance_gain(r));
        let noise = ctx.band_noise(0).unwrap();
        // P(H > s (I + σ²)) = E[exp(−s σ²) exp(−s I)].
        let (mc, se) = ppp_laplace_oracle(&field, s, 40_000, 3);
        let mc = mc * (-s * noise).exp();
        let analytic = lte_band_sinr_ccdf(r, 0, x, &ctx).unwrap();
        assert!(
            (analytic - mc).abs() < (4.0 * se).max(0.01 * analytic),
            "{analytic} vs {mc}"
        );
    }

    #[test]
    fn rate_bounded_by_interference_free_rate() {
        let ctx = context();
        let r = ctx.geometry.coverage_radius;
        let rate = lte_user_rate(r, &ctx).unwrap();
        let snr = ctx.radio.lte_power_hat() * r.powi(-3) / ctx.radio.noise_power(8e6).unwrap();
        let bound = 8e6 * (1.0 + snr / ctx.radio.shannon_gap).log2();
        assert!(rate > 0.0 && rate.is_finite() && rate <= bound, "{rate} vs {bound}");
    }

    #[test]
    fn rate_matches_direct_expectation_without_interference() {
        let mut ctx = context();
        ctx.bands.lambda_bs = 0.0;
        let r: f64 = 30.0;
        let eta = ctx.radio.shannon_gap;
        // E[log2(1 + c H)] with H ~ Exp(1), by midpoint quadrature on the quantile scale.
        let mut expected = 0.0;
        for (i, b) in ctx.bands.bands.iter().enumerate() {
            let c = ctx.radio.lte_power_hat() * r.powi(-3) / ctx.band_noise(i).unwrap() / eta;
            let n = 200_000;
            let mean: f64 = (0..n)
                .map(|k| {
                    let u = (k as f64 + 0.5) / n as f64;
                    (1.0 + c * -(1.0 - u).ln()).log2()
                })
                .sum::<f64>()
                / n as f64;
            expected += b.bandwidth * mean;
        }
        let got = lte_user_rate(r, &ctx).unwrap();
        assert!((got / expected - 1.0).abs() < 1e-4, "{got} vs {expected}");
    }

    #[test]
    fn rate_depends_on_radius_only_and_decreases() {
        let ctx = context();
        let a = lte_user_rate((22.1f64).hypot(4.6), &ctx).unwrap();
        let b = lte_user_rate((4.6f64).hypot(22.1), &ctx).unwrap();
        assert_eq!(a, b);
        let mut last = f64::INFINITY;
        for r in [5.0, 15.0, 25.0, 35.0, 50.0] {
            let v = lte_user_rate(r, &ctx).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn rate_increases_with_power_and_users_divide() {
        let ctx = context();
        let base = lte_user_rate(30.0, &ctx).unwrap();
        let mut louder = ctx.clone();
        louder.radio.lte_power *= 2.0;
        assert!(lte_user_rate(30.0, &louder).unwrap() > base);
        let mut crowded = ctx.clone();
        crowded.bands.lambda_ue = Some(4.0 / (PI * 50.0 * 50.0));
        let shared = lte_user_rate(30.0, &crowded).unwrap();
        assert!((shared * 4.0 / base - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_tolerance_halving() {
        let ctx = context();
        let mut tight = ctx.clone();
        tight.quadrature = ctx.quadrature.tightened();
        let a = lte_user_rate(30.0, &ctx).unwrap();
        let b = lte_user_rate(30.0, &tight).unwrap();
        assert!((a / b - 1.0).abs() < 2.0 * ctx.quadrature.outer_rel_tol, "{a} vs {b}");
        let pa = gsm_outage(262.5, 1.0, 10.0, true, &ctx).unwrap();
        let pb = gsm_outage(262.5, 1.0, 10.0, true, &tight).unwrap();
        assert!((pa - pb).abs() < 1e-6 * pa.max(1e-3), "{pa} vs {pb}");
    }

    #[test]
    fn outage_limits_and_power_off() {
        let ctx = context();
        assert_eq!(gsm_outage(100.0, 0.5, 0.0, true, &ctx).unwrap(), 0.0);
        assert!(gsm_outage(100.0, 0.5, 1e-9, true, &ctx).unwrap() < 1e-6);
        let mut off = ctx.clone();
        off.radio.lte_power = 0.0;
        for &psi in &[0.0, 1.0, PI, 4.0] {
            let a = gsm_outage(150.0, psi, 3.0, true, &off).unwrap();
            let b = gsm_outage(150.0, psi, 3.0, false, &off).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn lte_effect_vanishes_far_away() {
        let ctx = context();
        let near =
            gsm_outage(100.0, 0.0, 10.0, true, &ctx).unwrap() - gsm_outage(100.0, 0.0, 10.0, false, &ctx).unwrap();
        let far =
            gsm_outage(600.0, 0.0, 10.0, true, &ctx).unwrap() - gsm_outage(600.0, 0.0, 10.0, false, &ctx).unwrap();
        assert!(near > 0.0 && far >= 0.0 && far < near / 10.0, "{near} {far}");
    }

    #[test]
    fn outage_curve_is_cdf_and_interpolates() {
        let ctx = context();
        let grid: Vec<f64> = (-10..=40).map(|t| t as f64).collect();
        let c = outage_curve(262.5, 0.0, &grid, true, &ctx).unwrap();
        assert!(c.is_valid_cdf());
        let t = c.threshold_at(0.1).unwrap();
        let p = gsm_outage(262.5, 0.0, math::db_to_linear(t), true, &ctx).unwrap();
        assert!((p - 0.1).abs() < 0.01);
    }

    #[test]
    fn scenario_ordering_and_limits() {
        let ctx = context();
        let t = 1.0;
        let no = scenario_average_outage(Scenario::NoLte, t, &ctx).unwrap();
        let dsr = scenario_average_outage(Scenario::Dsr, t, &ctx).unwrap();
        let direct = scenario_average_outage(Scenario::DirectOverlay, t, &ctx).unwrap();
        assert!(no <= dsr && dsr <= direct, "{no} {dsr} {direct}");
        let mut off = ctx.clone();
        off.radio.lte_power = 0.0;
        let a = scenario_average_outage(Scenario::NoLte, t, &off).unwrap();
        let b = scenario_average_outage(Scenario::DirectOverlay, t, &off).unwrap();
        let c = scenario_average_outage(Scenario::Dsr, t, &off).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        let mut thin = ctx.clone();
        thin.geometry.guard_annulus = 0.0;
        let no = scenario_average_outage(Scenario::NoLte, t, &thin).unwrap();
        let dsr = scenario_average_outage(Scenario::Dsr, t, &thin).unwrap();
        assert!((dsr - no).abs() < 1e-9);
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("both".parse::<Scenario>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn laplace_monotone(
            log_s in 9.0f64..15.0,
            inner in 100.0f64..3000.0,
            scale in 1.1f64..3.0,
        ) {
            let q = QuadratureSpec::default();
            let s = 10f64.powf(log_s);
            let mut f = omni_field(inner, None);
            f.pattern = AntennaPattern::TriSector3gpp;
            // L = e^{−E} underflows for large s, so order the exponents.
            let e = f.exponent(s, &q).unwrap();
            prop_assert!(e > 0.0 && e.is_finite());
            prop_assert!((0.0..=1.0).contains(&f.laplace(s, &q).unwrap()));
            prop_assert!(f.exponent(s * scale, &q).unwrap() > e);
            let farther = InterferenceField { inner_radius: inner * scale, ..f };
            prop_assert!(farther.exponent(s, &q).unwrap() < e);
            let denser = InterferenceField { density: f.density * scale, ..f };
            prop_assert!(denser.exponent(s, &q).unwrap() > e);
        }

        #[test]
        fn outage_monotone_and_lte_dominates(
            r in 1.0f64..400.0,
            psi in 0.0f64..TAU,
            t_db in -10.0f64..20.0,
        ) {
            let ctx = context();
            let t = math::db_to_linear(t_db);
            if let Ok(with) = gsm_outage(r, psi, t, true, &ctx) {
                let without = gsm_outage(r, psi, t, false, &ctx).unwrap();
                prop_assert!(with >= without);
                prop_assert!((0.0..=1.0).contains(&with));
                let higher = gsm_outage(r, psi, t * 1.5, true, &ctx).unwrap();
                prop_assert!(higher >= with);
            }
        }
    }
}
