//! Deterministic absorption and scattering losses along the slant path.
//!
//! The extinction coefficient is assumed to decay with altitude like the
//! relative molecular number density, `exp(-h / H0)` with `H0 = 6600 m`, so
//! the path integral has a closed form in the apparent zenith angle. A
//! direct quadrature of the path integral is provided as a cross-check and
//! for non-sea-level observers.

use crate::atmosphere::{number_density_ratio, DENSITY_SCALE_HEIGHT};
use crate::error::{ModelError, Result};
use crate::numerics::quad::integrate;

/// Extinction model parameters.
#[derive(Debug, Clone, Copy)]
pub struct ExtinctionParams {
    /// Sea-level extinction coefficient (1/km); Rayleigh plus aerosol.
    pub beta_ext_0: f64,
    /// Density scale height (m).
    pub scale_height: f64,
}

impl Default for ExtinctionParams {
    fn default() -> Self {
        Self { beta_ext_0: 5e-3, scale_height: DENSITY_SCALE_HEIGHT }
    }
}

impl ExtinctionParams {
    fn check(&self) -> Result<()> {
        if self.beta_ext_0 < 0.0 || self.scale_height <= 0.0 {
            return Err(ModelError::Config(
                "extinction coefficient must be >= 0 and scale height > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Transmission factor from extinction over a slant path of length `l_r`
/// (m) at apparent zenith angle `apparent_zenith`, for a sea-level
/// observer:
///
/// chi = exp[-beta0 (H0 sec Za / 1000)(1 - exp(-L_r / (H0 sec Za)))]
///
/// with `beta0` in 1/km and `H0` in m (the division by 1000 converts the
/// effective path to km).
pub fn extinction_factor(apparent_zenith: f64, l_r: f64, params: &ExtinctionParams) -> Result<f64> {
    params.check()?;
    if l_r <= 0.0 {
        return Err(ModelError::Domain(format!("slant path {l_r} m must be positive")));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&apparent_zenith) {
        return Err(ModelError::Domain(format!(
            "apparent zenith {apparent_zenith} rad outside [0, pi/2]"
        )));
    }
    let sec_za = 1.0 / apparent_zenith.cos().max(1e-12);
    let h_eff = params.scale_height * sec_za;
    let chi = (-params.beta_ext_0 * (h_eff / 1000.0) * (1.0 - (-l_r / h_eff).exp())).exp();
    Ok(chi.clamp(0.0, 1.0))
}

/// Same transmission factor by direct quadrature of the path integral
/// `exp[-beta0 / 1000 * int_0^{L_r} exp(-(h_obs + s cos Za)/H0) ds]`,
/// supporting an observer at altitude `h_obs` (m) above sea level.
pub fn extinction_factor_quadrature(
    apparent_zenith: f64,
    l_r: f64,
    h_obs: f64,
    params: &ExtinctionParams,
) -> Result<f64> {
    params.check()?;
    if l_r <= 0.0 || h_obs < 0.0 {
        return Err(ModelError::Domain("need L_r > 0 and observer altitude >= 0".into()));
    }
    let cos_za = apparent_zenith.cos().max(1e-12);
    let h0 = params.scale_height;
    let tau = integrate(
        |s| number_density_ratio(h_obs + s * cos_za) / h0,
        0.0,
        l_r,
        1e-12,
        1e-10,
    )
    .value;
    // tau is the path integral in units of H0; convert to km via H0/1000
    Ok((-params.beta_ext_0 * tau * h0 / 1000.0).exp().clamp(0.0, 1.0))
}
