//! Deterministic geometry of the two-tier layout.
//!
//! Conventions: the serving macro BS sits at the origin, its first sector
//! boresight points along +x and sector `i` points at `2π/3 · i`. Macro cells
//! are flat-topped hexagons of side `R_m` (vertices at multiples of 60°), so
//! the six neighbours sit at distance `√3·R_m` in the directions 30° + k·60°.
//! A user position relative to the small cell is `(r, ψ)` with `ψ = 0`
//! pointing radially away from the serving BS.

use alloc::vec::Vec;
use core::ops::{Add, Sub};

use crate::error::{ensure, Error, Result};
use crate::math::{self, PI, TAU};

/// Number of sectors per macro site.
pub const SECTORS: usize = 3;

/// A point in the plane (metres).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn polar(radius: f64, angle: f64) -> Self {
        Point2 {
            x: radius * math::cos(angle),
            y: radius * math::sin(angle),
        }
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Azimuth in (-π, π].
    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Boresight of sector `i` (0-based).
pub fn sector_boresight(sector: usize) -> f64 {
    TAU / 3.0 * (sector % SECTORS) as f64
}

/// The sector whose boresight is nearest to `azimuth`.
pub fn serving_sector(azimuth: f64) -> usize {
    (0..SECTORS)
        .min_by(|&a, &b| {
            let da = math::wrap_angle(azimuth - sector_boresight(a)).abs();
            let db = math::wrap_angle(azimuth - sector_boresight(b)).abs();
            da.total_cmp(&db)
        })
        .unwrap_or(0)
}

/// Area of one 120° sector of a hexagonal cell with side `macro_side`.
pub fn sector_area(macro_side: f64) -> f64 {
    math::sqrt(3.0) / 2.0 * macro_side * macro_side
}

/// Macro BS density matching one BS per hexagon of side `macro_side`.
pub fn macro_density(macro_side: f64) -> f64 {
    2.0 / (3.0 * math::sqrt(3.0) * macro_side * macro_side)
}

/// Placement of the small cell inside the serving macro sector.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkGeometry {
    /// Macro hexagon side `R_m` (m).
    pub macro_side: f64,
    /// Small-cell distance `D` from the serving BS (m).
    pub small_cell_distance: f64,
    /// Small-cell azimuth `θ` w.r.t. the serving sector boresight (rad).
    pub small_cell_azimuth: f64,
    /// Coverage radius `R_c` (m).
    pub coverage_radius: f64,
    /// Guard-region radius `R_s` (m).
    pub guard_radius: f64,
    /// Evaluation annulus width `ΔR_s` beyond the guard region (m).
    pub guard_annulus: f64,
}

impl NetworkGeometry {
    pub fn new(
        macro_side: f64,
        small_cell_distance: f64,
        small_cell_azimuth: f64,
        coverage_radius: f64,
        guard_radius: f64,
        guard_annulus: f64,
    ) -> Result<Self> {
        let g = NetworkGeometry {
            macro_side,
            small_cell_distance,
            small_cell_azimuth,
            coverage_radius,
            guard_radius,
            guard_annulus,
        };
        g.validate()?;
        Ok(g)
    }

    /// Default deployment: `R_m = 1000`, `R_c = 50`, guard region a quarter of
    /// the sector area, small cell at `(D, 0)`.
    pub fn with_distance(small_cell_distance: f64) -> Self {
        let macro_side = 1000.0;
        NetworkGeometry {
            macro_side,
            small_cell_distance,
            small_cell_azimuth: 0.0,
            coverage_radius: 50.0,
            guard_radius: crate::plan::size_guard_region(sector_area(macro_side), 0.25),
            guard_annulus: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.macro_side.is_finite() && self.macro_side > 0.0,
            "macro_side",
            "must be > 0, got {}",
            self.macro_side
        );
        ensure!(
            self.coverage_radius > 0.0,
            "coverage_radius",
            "must be > 0, got {}",
            self.coverage_radius
        );
        ensure!(
            self.guard_radius >= self.coverage_radius,
            "guard_radius",
            "must be >= coverage radius {}, got {}",
            self.coverage_radius,
            self.guard_radius
        );
        ensure!(
            self.guard_annulus >= 0.0,
            "guard_annulus",
            "must be >= 0, got {}",
            self.guard_annulus
        );
        ensure!(
            self.small_cell_distance > self.coverage_radius,
            "small_cell_distance",
            "coverage disk must not contain the macro BS (D = {} <= R_c = {})",
            self.small_cell_distance,
            self.coverage_radius
        );
        ensure!(
            self.small_cell_azimuth.is_finite(),
            "small_cell_azimuth",
            "must be finite"
        );
        Ok(())
    }

    pub fn small_cell_position(&self) -> Point2 {
        Point2::polar(self.small_cell_distance, self.small_cell_azimuth)
    }

    /// Absolute position of a user at `(r, ψ)` relative to the small cell.
    pub fn user_position(&self, r: f64, psi: f64) -> Point2 {
        self.small_cell_position() + Point2::polar(r, self.small_cell_azimuth + psi)
    }

    /// Converts a BS-relative polar position into `(r, ψ)` w.r.t. the small cell.
    pub fn small_cell_relative(&self, bs_distance: f64, bs_azimuth: f64) -> (f64, f64) {
        let v = Point2::polar(bs_distance, bs_azimuth) - self.small_cell_position();
        let r = v.norm();
        let psi = if r == 0.0 {
            0.0
        } else {
            math::wrap_positive(v.angle() - self.small_cell_azimuth)
        };
        (r, psi)
    }

    /// The three GSM probe users `(D+R_s, θ)`, `(√(D²−R_s²), θ+Δθ)` and
    /// `(D−R_s, θ)` (BS-relative, `Δθ = arccos(R_s/D)`), returned as `(r, ψ)`.
    pub fn reference_probes(&self) -> Result<[(f64, f64); 3]> {
        let d = self.small_cell_distance;
        let rs = self.guard_radius;
        ensure!(
            rs < d,
            "guard_radius",
            "reference probes need R_s < D (R_s = {rs}, D = {d})"
        );
        let theta = self.small_cell_azimuth;
        let delta = math::acos_clamped(rs / d);
        Ok([
            self.small_cell_relative(d + rs, theta),
            self.small_cell_relative(math::sqrt(d * d - rs * rs), theta + delta),
            self.small_cell_relative(d - rs, theta),
        ])
    }
}

/// Interferer exclusion radii.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GuardRadii {
    /// `R_1, R_2, R_3` for the three LTE bands.
    pub bands: [f64; 3],
    /// `R_0` for the co-channel GSM field.
    pub cochannel: f64,
}

impl GuardRadii {
    pub fn new(g: &NetworkGeometry, variant: CochannelRadius) -> Result<Self> {
        let bands = band_guard_radii(g)?;
        let cochannel = gsm_cochannel_radius(g, variant, g.small_cell_azimuth);
        Ok(GuardRadii { bands, cochannel })
    }
}

/// `R_1 = D − R_c`, `R_2 = R_3 = √((3/2·R_m − D + R_c)² + 3/4·R_m²)`.
pub fn band_guard_radii(g: &NetworkGeometry) -> Result<[f64; 3]> {
    let near = g.small_cell_distance - g.coverage_radius;
    ensure!(
        near > 0.0,
        "small_cell_distance",
        "must exceed the coverage radius (D − R_c = {near})"
    );
    let rm = g.macro_side;
    let dx = 1.5 * rm - near;
    let r2 = math::sqrt(dx * dx + 0.75 * rm * rm);
    Ok([near, r2, r2])
}

/// Distance and azimuth of a GSM user w.r.t. its serving macro BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsmLink {
    /// `d(r, ψ)` (m).
    pub distance: f64,
    /// `β(r, ψ)`: azimuth relative to the first sector boresight (rad).
    pub azimuth: f64,
}

/// Law-of-cosines form of the GSM link geometry for a user at `(r, ψ)`.
pub fn gsm_link_geometry(g: &NetworkGeometry, r: f64, psi: f64) -> Result<GsmLink> {
    ensure!(r.is_finite() && r >= 0.0, "r", "must be >= 0, got {r}");
    ensure!(psi.is_finite(), "psi", "must be finite");
    let psi = math::wrap_positive(psi);
    let dd = g.small_cell_distance;
    let d2 = dd * dd + r * r - 2.0 * r * dd * math::cos(PI - psi);
    let d = math::sqrt(d2.max(0.0));
    ensure!(d > 0.0, "r", "user coincides with the macro BS");
    let beta_tilde = math::acos_clamped((dd * dd + d * d - r * r) / (2.0 * dd * d));
    let azimuth = if psi < PI {
        g.small_cell_azimuth + beta_tilde
    } else {
        g.small_cell_azimuth - beta_tilde
    };
    Ok(GsmLink { distance: d, azimuth })
}

/// Which closed form to use for the co-channel exclusion radius `R_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CochannelRadius {
    /// `√(9R_m² + D² − 6DR_m cos(2π/3 − |θ|))`.
    #[default]
    CellAzimuth,
    /// `√((√3/2·R_m − D sin β)² + (3/2·R_m + D cos β)²)`.
    UserAzimuth,
}

/// Co-channel exclusion radius `R_0`; `beta` is only used by the user-azimuth form.
pub fn gsm_cochannel_radius(g: &NetworkGeometry, variant: CochannelRadius, beta: f64) -> f64 {
    let rm = g.macro_side;
    let d = g.small_cell_distance;
    match variant {
        CochannelRadius::CellAzimuth => {
            let c = math::cos(2.0 * PI / 3.0 - g.small_cell_azimuth.abs());
            math::sqrt((9.0 * rm * rm + d * d - 6.0 * d * rm * c).max(0.0))
        }
        CochannelRadius::UserAzimuth => {
            let a = math::sqrt(3.0) / 2.0 * rm - d * math::sin(beta);
            let b = 1.5 * rm + d * math::cos(beta);
            math::sqrt(a * a + b * b)
        }
    }
}

/// True iff the guard disk lies inside the serving hexagon and inside the
/// serving 120° sector wedge.
pub fn validate_placement(g: &NetworkGeometry) -> bool {
    let d = g.small_cell_distance;
    let rs = g.guard_radius;
    if !(d > rs) {
        return false;
    }
    let half_width = math::asin(rs / d);
    if g.small_cell_azimuth.abs() + half_width > PI / 3.0 + 1e-12 {
        return false;
    }
    let c = g.small_cell_position();
    let apothem = math::sqrt(3.0) / 2.0 * g.macro_side;
    (0..6).all(|k| {
        let normal = PI / 6.0 + PI / 3.0 * k as f64;
        c.x * math::cos(normal) + c.y * math::sin(normal) + rs <= apothem + 1e-9
    })
}

/// One macro site of the hexagonal layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    /// Position relative to the typical site (m).
    pub position: Point2,
    /// Axial hex coordinates `(q, r)`.
    pub axial: (i32, i32),
}

impl Site {
    /// Colour in the 3-colouring used by the control-carrier reuse.
    pub fn reuse_color(&self) -> u8 {
        (self.axial.0 - self.axial.1).rem_euclid(3) as u8
    }
}

/// Regular `rows × cols` hexagonal layout without wraparound.
#[derive(Debug, Clone, PartialEq)]
pub struct HexGrid {
    pub rows: usize,
    pub cols: usize,
    pub side: f64,
    sites: Vec<Site>,
    typical: usize,
}

impl HexGrid {
    /// Flat-topped "odd-q" layout: column `c` at `x = 1.5·R_m·c`, odd
    /// columns shifted up by `√3/2·R_m`. The site nearest the centroid is the
    /// typical one and is moved to the origin.
    pub fn new(rows: usize, cols: usize, side: f64) -> Result<Self> {
        ensure!(
            rows >= 1 && cols >= 1,
            "grid",
            "needs at least one cell, got {rows}x{cols}"
        );
        ensure!(side > 0.0, "side", "must be > 0, got {side}");
        let sqrt3 = math::sqrt(3.0);
        let mut raw = Vec::with_capacity(rows * cols);
        for row in 0..rows {
            for col in 0..cols {
                let shift = if col % 2 == 1 { 0.5 } else { 0.0 };
                let p = Point2::new(1.5 * side * col as f64, sqrt3 * side * (row as f64 + shift));
                let q = col as i32;
                let r = row as i32 - (col as i32 - (col as i32 & 1)) / 2;
                raw.push(Site {
                    position: p,
                    axial: (q, r),
                });
            }
        }
        let n = raw.len() as f64;
        let centroid = raw.iter().fold(Point2::ORIGIN, |acc, s| acc + s.position);
        let centroid = Point2::new(centroid.x / n, centroid.y / n);
        let typical = raw
            .iter()
            .enumerate()
            .min_by(|a, b| {
                a.1.position
                    .distance(centroid)
                    .total_cmp(&b.1.position.distance(centroid))
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let origin = raw[typical].position;
        let sites = raw
            .into_iter()
            .map(|s| Site {
                position: s.position - origin,
                axial: s.axial,
            })
            .collect();
        Ok(HexGrid {
            rows,
            cols,
            side,
            sites,
            typical,
        })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn bs_positions(&self) -> impl Iterator<Item = Point2> + '_ {
        self.sites.iter().map(|s| s.position)
    }

    pub fn typical_cell_index(&self) -> usize {
        self.typical
    }

    /// Sites sharing the typical site's reuse colour, excluding the typical site.
    pub fn cochannel_sites(&self) -> impl Iterator<Item = &Site> + '_ {
        let color = self.sites[self.typical].reuse_color();
        self.sites
            .iter()
            .enumerate()
            .filter(move |(i, s)| *i != self.typical && s.reuse_color() == color)
            .map(|(_, s)| s)
    }
}

impl TryFrom<(usize, usize, f64)> for HexGrid {
    type Error = Error;
    fn try_from((rows, cols, side): (usize, usize, f64)) -> Result<Self> {
        HexGrid::new(rows, cols, side)
    }
}
