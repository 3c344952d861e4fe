//! Turbulence-strength profiles Cn^2(h), their mapping onto the slant path,
//! and the integrated path statistics consumed by the beam model: the
//! plane-wave coherence radius rho_0 and the slant weighting factor chi^2.
//!
//! Three profile models are provided:
//!
//! * an exponential profile `Cn0^2 exp(-z / (H0 sec Za))` along the path,
//! * the Hufnagel-Valley profile with the standard 5/7 parameters,
//! * the AFGL radiosonde model spliced onto the Walters-Kunkel (WK)
//!   boundary-layer scaling, driven by a tabulated wind-shear profile.

use crate::atmosphere::{lapse_rate, pressure, temperature, ATMOSPHERE_TOP};
use crate::error::{ModelError, Result};
use crate::numerics::quad::integrate;

/// Dry-air adiabatic lapse rate (K/m).
pub const DRY_ADIABATIC_LAPSE: f64 = 9.8e-3;

/// Link direction; the path coordinate xi runs from the transmitter (0) to
/// the receiver (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Downlink,
    Uplink,
}

/// Slant-path context for profile mapping and path integrals.
#[derive(Debug, Clone, Copy)]
pub struct SlantContext {
    /// refraction-corrected slant range (m)
    pub l_r: f64,
    /// apparent zenith angle (rad)
    pub apparent_zenith: f64,
    pub direction: Direction,
}

impl SlantContext {
    pub fn new(l_r: f64, apparent_zenith: f64, direction: Direction) -> Result<Self> {
        if l_r <= 0.0 {
            return Err(ModelError::Domain(format!("slant range {l_r} m must be positive")));
        }
        Ok(Self { l_r, apparent_zenith, direction })
    }

    /// sec of the apparent zenith angle, guarded near the horizon.
    pub fn sec_za(&self) -> f64 {
        1.0 / self.apparent_zenith.cos().max(1e-12)
    }

    /// Altitude above ground of the path point at normalized coordinate xi.
    pub fn altitude_at(&self, xi: f64) -> f64 {
        let along = match self.direction {
            Direction::Uplink => xi,
            Direction::Downlink => 1.0 - xi,
        };
        self.l_r * along * self.apparent_zenith.cos().max(0.0)
    }
}

/// One row of a tabulated wind-shear profile.
#[derive(Debug, Clone, Copy)]
pub struct ShearRow {
    /// altitude (m)
    pub h: f64,
    /// vertical wind shear (1/s)
    pub s: f64,
    /// lapse rate (K/km); NaN means "use the layered atmosphere value"
    pub lapse_k_per_km: f64,
}

/// Piecewise-linear wind-shear profile, the meteorological input of the
/// AFGL model.
#[derive(Debug, Clone)]
pub struct ShearProfile {
    rows: Vec<ShearRow>,
}

impl ShearProfile {
    pub fn new(rows: Vec<ShearRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(ModelError::Config("shear profile needs at least two rows".into()));
        }
        for w in rows.windows(2) {
            if w[1].h <= w[0].h {
                return Err(ModelError::Config("shear profile altitudes must strictly increase".into()));
            }
        }
        if rows.iter().any(|r| r.s < 0.0) {
            return Err(ModelError::Config("wind shear must be nonnegative".into()));
        }
        Ok(Self { rows })
    }

    /// Parses the CSV format `h_m,S_per_s,lapse_K_per_km` (header required;
    /// lines starting with '#' are comments; an empty lapse field defers to
    /// the layered atmosphere).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| ModelError::Config("empty shear profile CSV".into()))?;
        if header.trim() != "h_m,S_per_s,lapse_K_per_km" {
            return Err(ModelError::Config(format!("unexpected shear CSV header: {header}")));
        }
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(ModelError::Config(format!("shear CSV row {}: expected 3 fields", i + 2)));
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|e| ModelError::Config(format!("shear CSV row {}: bad {what}: {e}", i + 2)))
            };
            rows.push(ShearRow {
                h: parse(fields[0], "altitude")?,
                s: parse(fields[1], "shear")?,
                lapse_k_per_km: if fields[2].is_empty() { f64::NAN } else { parse(fields[2], "lapse")? },
            });
        }
        Self::new(rows)
    }

    /// Linear interpolation of (shear, lapse) at altitude `h`, clamped to
    /// the table ends.
    pub fn sample(&self, h: f64) -> (f64, f64) {
        let rows = &self.rows;
        if h <= rows[0].h {
            return (rows[0].s, rows[0].lapse_k_per_km);
        }
        if h >= rows[rows.len() - 1].h {
            let r = rows[rows.len() - 1];
            return (r.s, r.lapse_k_per_km);
        }
        let i = rows.partition_point(|r| r.h <= h) - 1;
        let (a, b) = (rows[i], rows[i + 1]);
        let f = (h - a.h) / (b.h - a.h);
        let lapse = if a.lapse_k_per_km.is_nan() || b.lapse_k_per_km.is_nan() {
            f64::NAN
        } else {
            a.lapse_k_per_km + f * (b.lapse_k_per_km - a.lapse_k_per_km)
        };
        (a.s + f * (b.s - a.s), lapse)
    }
}

/// Synthetic wind-shear profile shaped like a typical mid-latitude summer
/// night (shear 0-0.02 1/s with peaks near the tropopause and the
/// stratopause). Not measured data.
pub fn synthetic_night_shear() -> ShearProfile {
    ShearProfile::from_csv(include_str!("../data/shear_profile_synthetic.csv"))
        .expect("embedded synthetic shear profile is valid")
}

/// Turbulence-strength profile model.
#[derive(Debug, Clone)]
pub enum Cn2Model {
    /// Cn^2(z) = Cn0^2 exp(-z / (H0 sec Za)) along the path, i.e. an
    /// exponential decay with altitude scale H0.
    Exponential {
        /// ground-level structure parameter (m^-2/3)
        cn0_sq: f64,
        /// altitude scale (m)
        h0: f64,
    },
    /// Hufnagel-Valley profile with the standard (5/7-type) parameters.
    Hufnagel {
        /// rms upper-atmosphere wind speed (m/s); 21 for HV 5/7
        w_rms: f64,
        /// ground-level coefficient (m^-2/3); 1.7e-14 for HV 5/7
        a_ground: f64,
    },
    /// AFGL radiosonde model above the boundary layer, Walters-Kunkel
    /// scaling below the inversion height, spliced continuously.
    AfglWk {
        shear: ShearProfile,
        /// true for the nighttime boundary-layer scaling
        night: bool,
        /// inversion height (m); ~500 night, ~1000 day
        h_i: f64,
        /// Monin-Obukhov reference height (m); ~10 night, ~5 day
        h_0: f64,
        /// measured Cn^2 at the reference height (m^-2/3)
        cn0_sq_at_h0: f64,
    },
}

impl Cn2Model {
    /// Default nighttime AFGL+WK model with the synthetic shear profile.
    pub fn afgl_wk_night(cn0_sq_at_h0: f64) -> Self {
        Cn2Model::AfglWk {
            shear: synthetic_night_shear(),
            night: true,
            h_i: 500.0,
            h_0: 10.0,
            cn0_sq_at_h0,
        }
    }

    /// Standard Hufnagel-Valley 5/7 parameters.
    pub fn hufnagel_57() -> Self {
        Cn2Model::Hufnagel { w_rms: 21.0, a_ground: 1.7e-14 }
    }
}

/// AFGL branch boundaries: lower troposphere below 5 km, troposphere up to
/// 17 km, stratosphere above.
const AFGL_LOWER_TROPOSPHERE_TOP: f64 = 5_000.0;
const AFGL_TROPOSPHERE_TOP: f64 = 17_000.0;

/// The empirical outer-scale weight of the AFGL model: Y(h) as a polynomial
/// in the lapse rate (K/km) plus a wind-shear term (shear in 1/s).
fn afgl_y(h: f64, s: f64, lapse_k_per_km: f64) -> f64 {
    let l = lapse_k_per_km;
    if h <= AFGL_LOWER_TROPOSPHERE_TOP {
        2.9767 + 27.9804 * s + 2.9012 * l + 1.1843 * l * l + 0.1741 * l * l * l + 0.0086 * l * l * l * l
    } else if h <= AFGL_TROPOSPHERE_TOP {
        0.7152 + 30.6024 * s + 0.0003 * l - 0.0057 * l * l - 0.0016 * l * l * l + 0.0001 * l * l * l * l
    } else {
        0.6763 + 8.1569 * s - 0.0536 * l + 0.0084 * l * l - 0.0007 * l * l * l + 0.00002 * l * l * l * l
    }
}

/// Bare AFGL structure parameter (no boundary-layer correction):
/// Cn^2 = 2.8 M^2 (0.1)^(4/3) 10^Y, with
/// M = -79e-6 P[mb] (lapse + gamma)[K/m] / T^2.
fn afgl_cn2(h: f64, shear: &ShearProfile) -> Result<f64> {
    let h_c = h.clamp(0.0, ATMOSPHERE_TOP);
    let (s, lapse_csv) = shear.sample(h_c);
    let lapse_per_m = if lapse_csv.is_nan() { lapse_rate(h_c)? } else { lapse_csv * 1e-3 };
    let p_mb = pressure(h_c)? / 100.0;
    let t = temperature(h_c)?;
    let m = -79e-6 * p_mb * (lapse_per_m + DRY_ADIABATIC_LAPSE) / (t * t);
    let y = afgl_y(h_c, s, lapse_per_m * 1e3);
    Ok(2.8 * m * m * 0.1f64.powf(4.0 / 3.0) * 10f64.powf(y))
}

/// Walters-Kunkel boundary-layer scaling Cn^2(h)/Cn^2(h_0).
fn wk_ratio(h: f64, h_0: f64, h_i: f64, night: bool) -> f64 {
    let h = h.max(h_0);
    if night {
        (h / h_0).powf(-2.0 / 3.0)
    } else if h <= 0.5 * h_i {
        (h / h_0).powf(-4.0 / 3.0)
    } else if h <= 0.7 * h_i {
        (0.5 * h_i / h_0).powf(-4.0 / 3.0)
    } else {
        2.9 * (0.5 * h_i / h_0).powf(-4.0 / 3.0) * (h / h_i).powi(3)
    }
}

/// Structure parameter Cn^2 at altitude `h` (m) above ground.
pub fn cn2_at_height(model: &Cn2Model, h: f64) -> Result<f64> {
    let h = h.max(0.0);
    match model {
        Cn2Model::Exponential { cn0_sq, h0 } => Ok(cn0_sq * (-h / h0).exp()),
        Cn2Model::Hufnagel { w_rms, a_ground } => {
            let v = w_rms / 27.0;
            Ok(0.00594 * v * v * (1e-5 * h).powi(10) * (-h / 1000.0).exp()
                + 2.7e-16 * (-h / 1500.0).exp()
                + a_ground * (-h / 100.0).exp())
        }
        Cn2Model::AfglWk { shear, night, h_i, h_0, cn0_sq_at_h0 } => {
            if h <= *h_i {
                Ok(cn0_sq_at_h0 * wk_ratio(h, *h_0, *h_i, *night))
            } else {
                // splice constant makes the profile continuous at h_i
                let wk_at_hi = cn0_sq_at_h0 * wk_ratio(*h_i, *h_0, *h_i, *night);
                let afgl_at_hi = afgl_cn2(*h_i, shear)?;
                let matching = if afgl_at_hi > 0.0 { wk_at_hi / afgl_at_hi } else { 0.0 };
                Ok(matching * afgl_cn2(h, shear)?)
            }
        }
    }
}

/// Structure parameter at the path point `xi` in [0, 1] (transmitter to
/// receiver), using the small-angle altitude mapping h = L_r xi' cos Za.
pub fn cn2_along_path(model: &Cn2Model, ctx: &SlantContext, xi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(ModelError::Domain(format!("path coordinate {xi} outside [0, 1]")));
    }
    cn2_at_height(model, ctx.altitude_at(xi))
}

/// Ground-reference structure constant Cn0^2 entering rho_0 and chi^2: the
/// profile evaluated one reference height along the path,
/// Cn^2(h_ref sec Za). For the exponential model this is the model
/// parameter itself.
pub fn ground_cn0_sq(model: &Cn2Model, ctx: &SlantContext) -> Result<f64> {
    match model {
        Cn2Model::Exponential { cn0_sq, .. } => Ok(*cn0_sq),
        Cn2Model::Hufnagel { .. } => cn2_at_height(model, 10.0 * ctx.sec_za()),
        Cn2Model::AfglWk { h_0, .. } => cn2_at_height(model, h_0 * ctx.sec_za()),
    }
}

/// Effective turbulent path length: the slant distance to the altitude
/// where Cn^2 has fallen to 1e-3 of the ground value; for the exponential
/// model this is H0 sec Za by definition of the model.
pub fn turbulent_path_length(model: &Cn2Model, ctx: &SlantContext) -> Result<f64> {
    match model {
        Cn2Model::Exponential { h0, .. } => Ok((h0 * ctx.sec_za()).min(ctx.l_r)),
        _ => {
            let cn0 = ground_cn0_sq(model, ctx)?;
            if cn0 <= 0.0 {
                return Ok(0.0);
            }
            let target = 1e-3 * cn0;
            // structure profiles are non-monotone (Hufnagel has a 10 km
            // bump), so find the highest altitude still above the target
            let mut h_star = 0.0;
            let mut h = 0.0;
            while h <= 40_000.0 {
                if cn2_at_height(model, h)? > target {
                    h_star = h;
                }
                h += 50.0;
            }
            Ok((h_star * ctx.sec_za()).min(ctx.l_r))
        }
    }
}

/// Plane-wave coherence radius rho_0 = (1.5 Cn0^2 k^2 L_turb)^(-3/5).
/// Returns infinity when the ground structure constant vanishes.
pub fn coherence_radius_rho0(model: &Cn2Model, ctx: &SlantContext, wavelength: f64) -> Result<f64> {
    let cn0 = ground_cn0_sq(model, ctx)?;
    if cn0 <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let k = 2.0 * std::f64::consts::PI / wavelength;
    let l_turb = turbulent_path_length(model, ctx)?;
    if l_turb <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.5 * cn0 * k * k * l_turb).powf(-0.6))
}

/// Slant weighting factor chi^2 = (1/Cn0^2) int_0^1 Cn^2(path(xi)) xi^(5/3) dxi.
///
/// For a constant profile this is exactly 3/8.
pub fn chi_weight(model: &Cn2Model, ctx: &SlantContext) -> Result<f64> {
    let cn0 = ground_cn0_sq(model, ctx)?;
    if cn0 <= 0.0 {
        return Ok(0.0);
    }
    let q = integrate(
        |xi| {
            let xi = xi.clamp(0.0, 1.0);
            cn2_along_path(model, ctx, xi).unwrap_or(0.0) * xi.powf(5.0 / 3.0)
        },
        0.0,
        1.0,
        0.0,
        1e-8,
    );
    Ok(q.value / cn0)
}

/// Empirical outer-scale profile (m): 4 / (1 + ((h - 8500) / 2500)^2),
/// peaking at 4 m near the tropopause.
pub fn outer_scale(h: f64) -> f64 {
    let u = (h - 8500.0) / 2500.0;
    4.0 / (1.0 + u * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn ctx_down(l_r: f64, za_deg: f64) -> SlantContext {
        SlantContext::new(l_r, za_deg.to_radians(), Direction::Downlink).unwrap()
    }

    #[test]
    fn exponential_profile_anchors() {
        let m = Cn2Model::Exponential { cn0_sq: 1e-17, h0: 35_700.0 };
        assert_eq!(cn2_at_height(&m, 0.0).unwrap(), 1e-17);
        assert_relative_eq!(
            cn2_at_height(&m, 35_700.0).unwrap(),
            1e-17 / std::f64::consts::E,
            max_relative = 1e-12
        );
    }

    #[test]
    fn wk_night_power_law() {
        let m = Cn2Model::afgl_wk_night(1e-14);
        let c_h0 = cn2_at_height(&m, 10.0).unwrap();
        assert_relative_eq!(c_h0, 1e-14, max_relative = 1e-12);
        let c_4h0 = cn2_at_height(&m, 40.0).unwrap();
        assert_relative_eq!(c_4h0 / c_h0, 4f64.powf(-2.0 / 3.0), max_relative = 1e-12);
        // below the reference height the profile clamps
        assert_relative_eq!(cn2_at_height(&m, 1.0).unwrap(), c_h0, max_relative = 1e-12);
    }

    #[test]
    fn afgl_wk_is_continuous_at_the_splice() {
        let m = Cn2Model::afgl_wk_night(1e-14);
        let below = cn2_at_height(&m, 500.0 - 1e-6).unwrap();
        let above = cn2_at_height(&m, 500.0 + 1e-6).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-6);
    }

    #[test]
    fn afgl_magnitude_near_10_km_matches_radiosonde_band() {
        // free-atmosphere values at 10 km are of order 1e-17..1e-16 for
        // tropopause shear levels of ~0.02 1/s
        let m = Cn2Model::afgl_wk_night(1e-14);
        let c = cn2_at_height(&m, 10_000.0).unwrap();
        assert!(
            (1e-18..1e-15).contains(&c),
            "Cn2(10 km) = {c} outside the expected magnitude band"
        );
    }

    #[test]
    fn all_variants_nonnegative_up_to_100_km() {
        let models = [
            Cn2Model::Exponential { cn0_sq: 2.5e-17, h0: 500.0 },
            Cn2Model::hufnagel_57(),
            Cn2Model::afgl_wk_night(1e-14),
        ];
        for m in &models {
            for k in 0..=1000 {
                let c = cn2_at_height(m, k as f64 * 100.0).unwrap();
                assert!(c >= 0.0 && c.is_finite());
            }
        }
    }

    #[test]
    fn path_mapping_endpoints_and_mirror() {
        let m = Cn2Model::Exponential { cn0_sq: 1e-17, h0: 35_700.0 };
        let down = ctx_down(1e6, 30.0);
        let up = SlantContext::new(1e6, 30f64.to_radians(), Direction::Uplink).unwrap();
        // downlink: receiver end (xi=1) is on the ground
        assert_relative_eq!(cn2_along_path(&m, &down, 1.0).unwrap(), 1e-17, max_relative = 1e-12);
        // vacuum end is negligible for LEO-scale path lengths
        assert!(cn2_along_path(&m, &down, 0.0).unwrap() < 1e-17 * 1e-6);
        // uplink: transmitter end (xi=0) is on the ground
        assert_relative_eq!(cn2_along_path(&m, &up, 0.0).unwrap(), 1e-17, max_relative = 1e-12);
        // mirror: up(xi) == down(1 - xi)
        for &xi in &[0.1, 0.35, 0.8] {
            assert_relative_eq!(
                cn2_along_path(&m, &up, xi).unwrap(),
                cn2_along_path(&m, &down, 1.0 - xi).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn chi_weight_constant_profile_is_three_eighths() {
        // an exponential profile with an enormous scale height is constant
        // over any realistic path
        let m = Cn2Model::Exponential { cn0_sq: 1e-17, h0: 1e18 };
        let chi = chi_weight(&m, &ctx_down(1e6, 0.0)).unwrap();
        assert_relative_eq!(chi, 3.0 / 8.0, max_relative = 1e-8);
    }

    #[test]
    fn chi_weight_matches_trapezoid_oracle() {
        let m = Cn2Model::Exponential { cn0_sq: 2.5e-17, h0: 500.0 };
        let ctx = ctx_down(500e3, 0.0);
        let chi = chi_weight(&m, &ctx).unwrap();
        let n = 1_000_000usize;
        let mut acc = 0.0;
        for i in 0..=n {
            let xi = i as f64 / n as f64;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += w * cn2_along_path(&m, &ctx, xi).unwrap() * xi.powf(5.0 / 3.0);
        }
        let oracle = acc / n as f64 / 2.5e-17;
        assert_relative_eq!(chi, oracle, max_relative = 1e-6);
    }

    #[test]
    fn coherence_radius_reference_value_and_scaling() {
        // Cn0^2 = 2.5e-17, lambda = 847 nm, L_turb = 500 m -> rho0 ~ 0.98 m
        let m = Cn2Model::Exponential { cn0_sq: 2.5e-17, h0: 500.0 };
        let rho = coherence_radius_rho0(&m, &ctx_down(1e6, 0.0), 847e-9).unwrap();
        assert_relative_eq!(rho, 0.98, max_relative = 0.01);
        // doubling the turbulent path multiplies rho0 by 2^(-3/5)
        let m2 = Cn2Model::Exponential { cn0_sq: 2.5e-17, h0: 1000.0 };
        let rho2 = coherence_radius_rho0(&m2, &ctx_down(1e6, 0.0), 847e-9).unwrap();
        assert_relative_eq!(rho2 / rho, 2f64.powf(-0.6), max_relative = 1e-9);
        // degenerate strength
        let m0 = Cn2Model::Exponential { cn0_sq: 0.0, h0: 500.0 };
        assert!(coherence_radius_rho0(&m0, &ctx_down(1e6, 0.0), 847e-9).unwrap().is_infinite());
    }

    #[test]
    fn default_exponential_gives_13_cm_at_zenith() {
        // the parameter-table default: Cn0^2 = 1e-17 m^-2/3, H0 = 35.7 km,
        // lambda = 850 nm -> rho0(0 deg) ~ 13 cm
        let m = Cn2Model::Exponential { cn0_sq: 1e-17, h0: 35_700.0 };
        let rho = coherence_radius_rho0(&m, &ctx_down(1e6, 0.0), 850e-9).unwrap();
        assert_relative_eq!(rho, 0.13, max_relative = 0.02);
    }

    #[test]
    fn outer_scale_profile_values() {
        assert_eq!(outer_scale(8500.0), 4.0);
        assert_abs_diff_eq!(outer_scale(11_000.0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(outer_scale(0.0), 4.0 / (1.0 + 11.56), epsilon = 1e-4);
    }

    #[test]
    fn shear_csv_roundtrip_and_validation() {
        let p = ShearProfile::from_csv("h_m,S_per_s,lapse_K_per_km\n0,0.002,-6.5\n1000,0.004,\n").unwrap();
        let (s, l) = p.sample(0.0);
        assert_eq!(s, 0.002);
        assert_eq!(l, -6.5);
        let (s_mid, _) = p.sample(500.0);
        assert_relative_eq!(s_mid, 0.003, max_relative = 1e-12);
        assert!(ShearProfile::from_csv("h_m,S_per_s,lapse_K_per_km\n0,-1,0\n10,0,0\n").is_err());
        assert!(ShearProfile::from_csv("bad,header\n").is_err());
    }
}
