//! Ray tracing through the layered refractive-index profile: per-layer path
//! segments, bending angles, total astronomical refraction, path elongation
//! and the refraction-corrected slant range.
//!
//! The ray is traced with the invariant of a spherically stratified medium,
//! `n(r) r cos(elevation) = const`, integrating arc length and bending
//! through each linearly segmented layer. Segments above the profile top
//! (84.8 km) are straight lines in vacuum.

use crate::atmosphere::{refractive_index_layered, refractivity_layered, ATMOSPHERE_TOP, REFRACTIVE_NODES};
use crate::error::{ModelError, Result};
use crate::numerics::quad::integrate;
use crate::orbit::{slant_range, OrbitSpec, R_EARTH};

/// Above this apparent zenith angle the straight-segment assumption starts
/// to degrade and results are flagged as grazing.
pub const GRAZING_LIMIT: f64 = 89.9f64.to_radians();

/// Result of tracing a ray from the ground station to the satellite.
#[derive(Debug, Clone)]
pub struct RayTraceResult {
    /// Path length inside each atmospheric layer, ground up, plus the final
    /// vacuum segment (11 entries for the 10-layer profile).
    pub segment_lengths: Vec<f64>,
    /// Bending angle accumulated inside each atmospheric layer (rad).
    pub bending_angles: Vec<f64>,
    /// Local elevation angle of the ray at each layer boundary (rad),
    /// starting at the ground.
    pub elevations: Vec<f64>,
    /// Total astronomical refraction, the sum of the bending angles (rad).
    pub total_refraction: f64,
    /// Ratio of the traced path length to the geometric slant range at the
    /// same apparent zenith angle; >= 1.
    pub elongation_factor: f64,
    /// elongation_factor x geometric slant range (m).
    pub slant_range_refracted: f64,
    /// Set for apparent zenith angles beyond 89.9 degrees.
    pub grazing: bool,
}

fn check_orbit(orbit: &OrbitSpec) -> Result<()> {
    if orbit.altitude_h <= ATMOSPHERE_TOP {
        return Err(ModelError::Domain(format!(
            "satellite altitude {} m must exceed the profile top {} m",
            orbit.altitude_h, ATMOSPHERE_TOP
        )));
    }
    Ok(())
}

/// Traces the refracted ray path for an apparent zenith angle in [0, 90 deg].
///
/// Within each layer the refractive index is linear in altitude; arc length
/// and bending are integrated with the ray invariant
/// `n(r) r cos(beta) = n0 R cos(beta_0)`. The integrands have an inverse
/// square-root endpoint singularity when the ray enters a layer horizontally
/// (apparent zenith of 90 degrees), which the substitution `r = r_b + t^2`
/// removes.
pub fn trace_refracted_path(apparent_zenith: f64, orbit: &OrbitSpec) -> Result<RayTraceResult> {
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&apparent_zenith) {
        return Err(ModelError::Domain(format!(
            "apparent zenith {apparent_zenith} rad outside [0, pi/2]"
        )));
    }
    check_orbit(orbit)?;
    let za = apparent_zenith.min(std::f64::consts::FRAC_PI_2);
    let nm1_0 = refractivity_layered(0.0);
    let n0 = 1.0 + nm1_0;
    // ray invariant n(r) r cos(elevation); elevation at ground = pi/2 - Za
    let s = za.sin();
    let p = n0 * R_EARTH * s;
    // n(r) r - p rewritten without the catastrophic cancellation that
    // otherwise drowns the integrands in roundoff noise near Za = 90 deg:
    // n r - p = (r - R s) + (n-1) r - (n0-1) R s
    let nr_minus_p = move |r: f64, nm1: f64| (r - R_EARTH * s) + nm1 * r - nm1_0 * R_EARTH * s;
    let radicand = move |r: f64, nm1: f64| {
        let nr = (1.0 + nm1) * r;
        (nr_minus_p(r, nm1) * (nr + p)).max(1e-300)
    };

    let mut segment_lengths = Vec::with_capacity(REFRACTIVE_NODES.len());
    let mut bending_angles = Vec::with_capacity(REFRACTIVE_NODES.len() - 1);
    let mut elevations = Vec::with_capacity(REFRACTIVE_NODES.len());
    elevations.push(elevation_at(0.0, p)?);

    let mut path = 0.0;
    for w in REFRACTIVE_NODES.windows(2) {
        let (h_lo, h_hi) = (w[0].h, w[1].h);
        let dn_dh = (w[1].n_minus_1 - w[0].n_minus_1) / (h_hi - h_lo);
        let t_max = (h_hi - h_lo).sqrt();
        // arc length: ds = n r dr / sqrt(n^2 r^2 - p^2), r = R + h_lo + t^2
        let seg = integrate(
            |t| {
                let h = h_lo + t * t;
                let r = R_EARTH + h;
                let nm1 = refractivity_layered(h);
                2.0 * t * (1.0 + nm1) * r / radicand(r, nm1).sqrt()
            },
            0.0,
            t_max,
            1e-9,
            1e-12,
        )
        .value;
        // bending: d(bend) = -(dn/dh)/n * tan(zenith) dh,
        // tan(zenith) = p / sqrt(n^2 r^2 - p^2)
        let bend = integrate(
            |t| {
                let h = h_lo + t * t;
                let r = R_EARTH + h;
                let nm1 = refractivity_layered(h);
                -2.0 * t * dn_dh / (1.0 + nm1) * p / radicand(r, nm1).sqrt()
            },
            0.0,
            t_max,
            1e-14,
            1e-10,
        )
        .value;
        path += seg;
        segment_lengths.push(seg);
        bending_angles.push(bend);
        elevations.push(elevation_at(h_hi, p)?);
    }

    // straight vacuum segment from the profile top to the satellite
    let r_top = R_EARTH + ATMOSPHERE_TOP;
    let r_sat = R_EARTH + orbit.altitude_h;
    let vacuum = (r_sat * r_sat - p * p).sqrt() - (r_top * r_top - p * p).sqrt();
    path += vacuum;
    segment_lengths.push(vacuum);

    let geometric = slant_range(orbit, apparent_zenith)?;
    let elongation = (path / geometric).max(1.0);
    Ok(RayTraceResult {
        total_refraction: bending_angles.iter().sum(),
        elongation_factor: elongation,
        slant_range_refracted: elongation * geometric,
        grazing: apparent_zenith > GRAZING_LIMIT,
        segment_lengths,
        bending_angles,
        elevations,
    })
}

/// Local elevation angle of the ray at altitude `h`, from the invariant.
fn elevation_at(h: f64, invariant: f64) -> Result<f64> {
    let n = refractive_index_layered(h);
    let c = invariant / (n * (R_EARTH + h));
    if c > 1.0 + 1e-12 {
        return Err(ModelError::Numerical(format!(
            "ray invariant cosine {c} exceeds 1 at h={h}"
        )));
    }
    Ok(c.clamp(-1.0, 1.0).acos())
}

/// Coefficients of the degree-10 elongation fit polynomial in the apparent
/// zenith angle expressed in degrees (constant and linear terms are 0 and
/// the leading constant is 1).
pub const ELONGATION_FIT_COEFFS: [f64; 9] = [
    1.818908e-4,
    -4.066061e-5,
    3.813573e-6,
    -1.920844e-7,
    5.710429e-9,
    -1.032821e-10,
    1.117105e-12,
    -6.644358e-15,
    1.672433e-17,
];

/// Degree-10 polynomial fit for the elongation factor of the 780 km orbit,
/// as a function of the apparent zenith angle in degrees.
///
/// Evaluated with Horner's scheme on the published coefficients. Only valid
/// for the 780 km orbit; note that the fitted values grow far faster with
/// zenith angle than the ray-traced elongation of `trace_refracted_path`
/// (1.36 vs 1.018 at the horizon).
pub fn elongation_fit_poly(apparent_zenith_deg: f64) -> Result<f64> {
    if !(0.0..=90.0).contains(&apparent_zenith_deg) {
        return Err(ModelError::Domain(format!(
            "apparent zenith {apparent_zenith_deg} deg outside [0, 90]"
        )));
    }
    let z = apparent_zenith_deg.abs();
    let mut acc = 0.0;
    for &c in ELONGATION_FIT_COEFFS.iter().rev() {
        acc = acc * z + c;
    }
    Ok(1.0 + acc * z * z)
}

/// Refraction-corrected slant range: elongation factor times the geometric
/// slant range at the same apparent zenith angle.
pub fn refracted_slant_range(apparent_zenith: f64, orbit: &OrbitSpec) -> Result<f64> {
    Ok(trace_refracted_path(apparent_zenith, orbit)?.slant_range_refracted)
}

/// Empirical ray-curvature radius at altitude `h` for apparent zenith `Z_a`,
/// in units of meters: K = R / (670.87 (P/T^2)(0.034 + lapse) sin Z_a) with
/// P in mb, T in K and the lapse rate in K/m. A value well above the Earth
/// radius justifies treating rays as straight within each layer; the
/// standard profile gives a minimum of about 4.4 Earth radii at the ground
/// at the horizon.
pub fn ray_curvature_diagnostic(h: f64, apparent_zenith: f64) -> Result<f64> {
    let p_mb = crate::atmosphere::pressure(h)? / 100.0;
    let t = crate::atmosphere::temperature(h)?;
    let lapse_per_m = crate::atmosphere::lapse_rate(h)?;
    let denom = 670.87 * p_mb / (t * t) * (0.034 + lapse_per_m * 1e3 * 1e-3) * apparent_zenith.sin();
    if denom <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(R_EARTH / denom)
}
