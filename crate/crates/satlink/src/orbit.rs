//! Pure geometric relations between a ground observer and a satellite on a
//! circular polar orbit: slant range, zenith-angle domain, orbit-plane
//! inclination growth with Earth rotation, declination sweep and the
//! apparent (refraction-shifted) zenith angle.
//!
//! Internal units are SI (meters, seconds, radians) throughout; degrees and
//! kilometers appear only at I/O boundaries.

use crate::error::{ModelError, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Mean Earth radius (m).
pub const R_EARTH: f64 = 6_371_000.0;
/// Earth equatorial rotation speed (m/s); 1669.8 km/h.
pub const V_EQUATOR: f64 = 1_669.8 * 1000.0 / 3600.0;

/// Ground-station geography.
#[derive(Debug, Clone, Copy)]
pub struct ObserverGeo {
    /// geographic latitude (rad)
    pub latitude_psi: f64,
    /// altitude above sea level (m)
    pub altitude_above_sea: f64,
}

impl ObserverGeo {
    pub fn new(latitude_psi: f64, altitude_above_sea: f64) -> Result<Self> {
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&latitude_psi) {
            return Err(ModelError::Domain(format!(
                "latitude {latitude_psi} rad outside [-pi/2, pi/2]"
            )));
        }
        if altitude_above_sea < 0.0 {
            return Err(ModelError::Domain("observer altitude must be >= 0".into()));
        }
        Ok(ObserverGeo { latitude_psi, altitude_above_sea })
    }
}

/// Circular polar orbit description.
#[derive(Debug, Clone, Copy)]
pub struct OrbitSpec {
    /// orbit altitude above the surface (m)
    pub altitude_h: f64,
    /// orbit-plane inclination away from the observer meridian (rad)
    pub inclination_delta_iota: f64,
    /// orbital period (s)
    pub orbit_period_t_sat: f64,
    /// completed revolutions since the meridian-aligned pass
    pub revolutions_n: u32,
}

impl OrbitSpec {
    /// True if the altitude is in the LEO band the model targets.
    pub fn is_leo(&self) -> bool {
        (160_000.0..=2_000_000.0).contains(&self.altitude_h)
    }

    /// Orbital angular rate (rad/s).
    pub fn omega_sat(&self) -> f64 {
        2.0 * PI / self.orbit_period_t_sat
    }
}

/// Straight-line observer-to-satellite distance (m) at true zenith angle
/// `z` (rad): sqrt(H^2 + 2 H R + R^2 cos^2 Z) - R cos Z.
pub fn slant_range(orbit: &OrbitSpec, true_zenith_z: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&true_zenith_z) {
        return Err(ModelError::Domain(format!(
            "zenith angle {true_zenith_z} rad outside [0, pi/2]"
        )));
    }
    let h = orbit.altitude_h;
    let c = true_zenith_z.cos().max(0.0);
    Ok((h * h + 2.0 * h * R_EARTH + R_EARTH * R_EARTH * c * c).sqrt() - R_EARTH * c)
}

/// Minimal zenith angle over a pass with orbit-plane inclination `delta_iota`
/// relative to the observer meridian: arccos sqrt(1 - cos^2 psi sin^2 di).
pub fn min_zenith(observer: &ObserverGeo, inclination: f64) -> Result<f64> {
    if inclination.abs() >= FRAC_PI_2 {
        return Err(ModelError::Domain("inclination must satisfy |di| < pi/2".into()));
    }
    let c = observer.latitude_psi.cos() * inclination.sin();
    Ok((1.0 - c * c).sqrt().clamp(-1.0, 1.0).acos())
}

/// Orbit-plane inclination accumulated after `n` revolutions (rad):
/// n T_sat v_eq / R.
pub fn inclination_after_revolutions(orbit: &OrbitSpec) -> Result<f64> {
    if orbit.orbit_period_t_sat <= 0.0 {
        return Err(ModelError::Domain("orbit period must be positive".into()));
    }
    Ok(orbit.revolutions_n as f64 * orbit.orbit_period_t_sat * V_EQUATOR / R_EARTH)
}

/// Apparent zenith angle after refraction: arcsin(sin Z / n0) <= Z.
pub fn apparent_zenith(true_zenith_z: f64, n0: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&true_zenith_z) {
        return Err(ModelError::Domain("true zenith outside [0, pi/2]".into()));
    }
    if n0 < 1.0 {
        return Err(ModelError::Domain("refractive index must be >= 1".into()));
    }
    Ok((true_zenith_z.sin() / n0).asin())
}

/// Inverse of [`apparent_zenith`].
pub fn true_zenith(apparent_zenith_za: f64, n0: f64) -> Result<f64> {
    if n0 < 1.0 {
        return Err(ModelError::Domain("refractive index must be >= 1".into()));
    }
    let s = (apparent_zenith_za.sin() * n0).clamp(-1.0, 1.0);
    Ok(s.asin())
}

/// Zenith angle from the orbital state via spherical trigonometry:
/// cos Z = sin Psi sin delta + cos Psi cos delta cos delta_iota.
#[derive(Debug, Clone, Copy)]
pub struct ZenithState {
    pub zenith: f64,
    /// Set when the formula yields Z > pi/2 (satellite geometrically on the
    /// far side); the returned zenith is then clamped to pi/2.
    pub below_horizon: bool,
}

pub fn zenith_from_orbit_state(
    observer: &ObserverGeo,
    inclination: f64,
    declination_delta: f64,
) -> ZenithState {
    let psi = observer.latitude_psi;
    let cz = psi.sin() * declination_delta.sin()
        + psi.cos() * declination_delta.cos() * inclination.cos();
    let z = cz.clamp(-1.0, 1.0).acos();
    ZenithState { zenith: z.min(FRAC_PI_2), below_horizon: z > FRAC_PI_2 }
}

/// Central-angle width of the above-horizon window:
/// delta_com = 2 arctan(sqrt(H^2 + 2 R H) / R).
pub fn communication_arc(orbit: &OrbitSpec) -> f64 {
    let h = orbit.altitude_h;
    2.0 * ((h * h + 2.0 * R_EARTH * h).sqrt() / R_EARTH).atan()
}

/// One sample of a satellite pass.
#[derive(Debug, Clone, Copy)]
pub struct PassSample {
    /// seconds from the start of the above-horizon window
    pub time_s: f64,
    /// declination angle along the orbit (rad)
    pub declination: f64,
    /// true zenith angle seen by the observer (rad); pi/2 at the window edge
    pub zenith: f64,
    /// straight-line range to the satellite (m)
    pub slant_range: f64,
}

/// Samples the above-horizon portion of one pass at `time_step` seconds.
///
/// The satellite is above the horizon while its central angle `phi` from
/// the observer satisfies (R+H) cos phi >= R. The zenith angle reported is
/// the true geometric one, recovered from the central angle through the
/// observer-satellite-Earth-center triangle, so the window edges come out
/// at Z = 90 degrees exactly and the window length equals
/// `communication_arc / omega_sat` for a zenith pass.
pub fn pass_timeline(
    observer: &ObserverGeo,
    orbit: &OrbitSpec,
    inclination: f64,
    time_step: f64,
) -> Result<Vec<PassSample>> {
    if time_step <= 0.0 {
        return Err(ModelError::Domain("time_step must be positive".into()));
    }
    let psi = observer.latitude_psi;
    let r_sat = R_EARTH + orbit.altitude_h;
    // central angle between observer and sub-satellite point
    let cos_phi =
        |delta: f64| psi.sin() * delta.sin() + psi.cos() * delta.cos() * inclination.cos();
    // horizon condition: (R+H) cos phi = R
    let cos_phi_horizon = R_EARTH / r_sat;
    // declination of closest approach maximizes cos_phi
    let delta_star = if psi.cos().abs() < 1e-15 {
        FRAC_PI_2
    } else {
        (psi.sin()).atan2(psi.cos() * inclination.cos())
    };
    if cos_phi(delta_star) < cos_phi_horizon {
        return Ok(Vec::new()); // never rises above the horizon
    }
    // bracket the window edges on both sides of the closest approach
    let above = |delta: f64| cos_phi(delta) - cos_phi_horizon;
    let edge = |lo: f64, hi: f64| {
        crate::numerics::bisect(above, lo, hi, 1e-12)
            .unwrap_or(if above(lo) >= 0.0 { lo } else { hi })
    };
    let delta_lo = edge(delta_star - PI, delta_star);
    let delta_hi = edge(delta_star, delta_star + PI);
    let omega = orbit.omega_sat();
    let duration = (delta_hi - delta_lo) / omega;
    let n_steps = (duration / time_step).floor() as usize;
    let mut out = Vec::with_capacity(n_steps + 1);
    for k in 0..=n_steps {
        let t = (k as f64 * time_step).min(duration);
        let delta = delta_lo + omega * t;
        let cp = cos_phi(delta).clamp(-1.0, 1.0);
        let chord = (R_EARTH * R_EARTH + r_sat * r_sat - 2.0 * R_EARTH * r_sat * cp).sqrt();
        let cos_z = ((r_sat * cp - R_EARTH) / chord).clamp(-1.0, 1.0);
        out.push(PassSample {
            time_s: t,
            declination: delta,
            zenith: cos_z.acos(),
            slant_range: chord,
        });
    }
    Ok(out)
}
