//! Adaptive Gauss–Kronrod quadrature.
//!
//! Each panel is integrated with the 7-point Gauss / 15-point Kronrod pair;
//! the panel with the largest error estimate is bisected until the global
//! estimate meets `max(abs_tol, rel_tol * |I|)`. Integrands may themselves
//! fail (nested quadratures), so they return `Result`.

use alloc::vec::Vec;

use crate::error::{ensure, Error, QuadratureFailure, Result};

/// Tolerances shared by every numerical integral in the analysis engine.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuadratureSpec {
    /// Relative tolerance of inner (interference field) integrals.
    pub inner_rel_tol: f64,
    /// Relative tolerance of outer (rate, disk-average) integrals.
    pub outer_rel_tol: f64,
    /// Absolute error floor.
    pub abs_tol: f64,
    /// Panels allowed per adaptive integral.
    pub max_subdivisions: usize,
    /// Outer integrals over unbounded ranges are cut where the integrand
    /// provably falls below this value.
    pub truncation_eps: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            inner_rel_tol: 1e-6,
            outer_rel_tol: 1e-4,
            abs_tol: 1e-14,
            max_subdivisions: 400,
            truncation_eps: 1e-12,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.inner_rel_tol > 0.0,
            "inner_rel_tol",
            "must be > 0, got {}",
            self.inner_rel_tol
        );
        ensure!(
            self.outer_rel_tol > 0.0,
            "outer_rel_tol",
            "must be > 0, got {}",
            self.outer_rel_tol
        );
        ensure!(self.abs_tol > 0.0, "abs_tol", "must be > 0, got {}", self.abs_tol);
        ensure!(self.max_subdivisions >= 1, "max_subdivisions", "must be >= 1");
        ensure!(
            self.truncation_eps > 0.0 && self.truncation_eps < 1.0,
            "truncation_eps",
            "must lie in (0, 1), got {}",
            self.truncation_eps
        );
        Ok(())
    }

    /// Same spec with every tolerance halved.
    pub fn tightened(&self) -> Self {
        QuadratureSpec {
            inner_rel_tol: self.inner_rel_tol / 2.0,
            outer_rel_tol: self.outer_rel_tol / 2.0,
            abs_tol: self.abs_tol / 2.0,
            max_subdivisions: self.max_subdivisions * 2,
            truncation_eps: self.truncation_eps / 2.0,
        }
    }
}

/// Result of an adaptive integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = crate::math::powf(200.0 * scaled / res_asc, 1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

#[allow(clippy::needless_range_loop)]
fn kronrod15<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center)?;

    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let x = half * XGK[jtw];
        let f1 = f(center - x)?;
        let f2 = f(center + x)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_gauss += WG[j] * (f1 + f2);
        res_kronrod += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let x = half * XGK[jtwm1];
        let f1 = f(center - x)?;
        let f2 = f(center + x)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_kronrod += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = 0.5 * res_kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let err = (res_kronrod - res_gauss) * half;
    let abs_half = half.abs();
    let value = res_kronrod * half;
    let error = rescale_error(err, res_abs * abs_half, res_asc * abs_half);
    if !value.is_finite() {
        return Err(Error::invalid("integrand", "produced a non-finite value"));
    }
    Ok(Panel { a, b, value, error })
}

/// Integrates a fallible integrand over `[a, b]`, splitting first at `breaks`.
pub fn try_integrate<F>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<Integral>
where
    F: FnMut(f64) -> Result<f64>,
{
    ensure!(
        a.is_finite() && b.is_finite(),
        "bounds",
        "must be finite, got [{a}, {b}]"
    );
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let mut edges: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    edges.push(lo);
    edges.extend(breaks.iter().copied().filter(|&x| x > lo && x < hi));
    edges.push(hi);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut panels: Vec<Panel> = Vec::with_capacity(max_subdivisions.max(edges.len()) + 1);
    for w in edges.windows(2) {
        panels.push(kronrod15(&mut f, w[0], w[1])?);
    }
    let mut evaluations = 15 * panels.len();

    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let tol = abs_tol.max(rel_tol * total.abs());
        if err <= tol {
            return Ok(Integral {
                value: sign * total,
                abs_error: err,
                evaluations,
            });
        }
        let (worst, panel) = panels
            .iter()
            .copied()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let mid = 0.5 * (panel.a + panel.b);
        let too_narrow = mid <= panel.a || mid >= panel.b;
        if panels.len() >= max_subdivisions || too_narrow {
            return Err(Error::Quadrature(QuadratureFailure {
                estimate: sign * total,
                error_estimate: err,
                tolerance: tol,
                subdivisions: panels.len(),
            }));
        }
        let left = kronrod15(&mut f, panel.a, mid)?;
        let right = kronrod15(&mut f, mid, panel.b)?;
        evaluations += 30;
        panels[worst] = left;
        panels.push(right);
    }
}

/// Infallible-integrand convenience wrapper around [`try_integrate`].
pub fn integrate<F>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64, max_subdivisions: usize) -> Result<Integral>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, &[], rel_tol, abs_tol, max_subdivisions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    #[test]
    fn polynomials_are_exact() {
        // K15 integrates degree-22 polynomials exactly.
        let r = integrate(|x| x.powi(10) - 3.0 * x.powi(3) + 1.0, -1.0, 2.0, 1e-12, 1e-15, 10).unwrap();
        let exact = (2f64.powi(11) + 1.0) / 11.0 - 3.0 * (16.0 - 1.0) / 4.0 + 3.0;
        assert!((r.value - exact).abs() < 1e-11);
    }

    #[test]
    fn sharp_peak_converges() {
        // ∫_0^1 1/(1 + c u^3) du for large c has a boundary layer of width c^{-1/3}.
        let c = 1e9;
        let r = integrate(|u| 1.0 / (1.0 + c * u * u * u), 0.0, 1.0, 1e-10, 1e-15, 200).unwrap();
        // ∫_0^∞ 1/(1+c u^3) du = (2π / (3√3)) c^{-1/3}; the [1, ∞) tail is < 1/(2c).
        let inf = 2.0 * math::PI / (3.0 * math::sqrt(3.0)) / math::powf(c, 1.0 / 3.0);
        assert!((r.value - inf).abs() < 1e-9 * inf + 1.0 / c);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let f = |x: f64| math::exp(x);
        let fwd = integrate(f, 0.0, 1.0, 1e-12, 1e-15, 50).unwrap().value;
        let rev = integrate(f, 1.0, 0.0, 1e-12, 1e-15, 50).unwrap().value;
        assert!((fwd + rev).abs() < 1e-14);
        assert!((fwd - (math::exp(1.0) - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn kink_handled_with_break() {
        let r = try_integrate(|x| Ok((x - 0.3).abs()), 0.0, 1.0, &[0.3], 1e-13, 1e-16, 4).unwrap();
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn non_convergence_is_reported() {
        let err = integrate(|x| math::sin(1.0 / x), 1e-9, 1.0, 1e-14, 1e-18, 8).unwrap_err();
        assert!(matches!(err, Error::Quadrature(_)));
    }

    #[test]
    fn integrand_errors_propagate() {
        let err = try_integrate(|_| Err(Error::invalid("x", "boom")), 0.0, 1.0, &[], 1e-6, 1e-9, 10).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "x", .. }));
    }
}
