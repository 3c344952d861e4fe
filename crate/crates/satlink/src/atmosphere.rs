//! Layered standard-atmosphere model: temperature, pressure, refractive
//! index and relative number density versus altitude, from the surface to
//! 84.8 km. Vacuum is assumed above.

use crate::error::{ModelError, Result};

/// Gravitational acceleration (m/s^2).
pub const G_ACCEL: f64 = 9.8;
/// Specific gas constant of dry air (J/(kg K)).
pub const R_AIR: f64 = 287.053;
/// Number-density scale height (m).
pub const DENSITY_SCALE_HEIGHT: f64 = 6_600.0;
/// Top of the modeled atmosphere (m).
pub const ATMOSPHERE_TOP: f64 = 84_800.0;

/// One thermodynamic layer: base altitude (m), lapse rate (K/m), base
/// temperature (K), base pressure (Pa).
#[derive(Debug, Clone, Copy)]
pub struct ThermoLayer {
    pub h_base: f64,
    pub lapse: f64,
    pub t_base: f64,
    pub p_base: f64,
}

/// Linearly segmented temperature/pressure profile, 8 anchor layers from
/// the surface to 84.8 km. Pressures are stored in Pa (table values in mb
/// times 100).
pub const THERMO_LAYERS: [ThermoLayer; 8] = [
    ThermoLayer { h_base: 0.0, lapse: -6.5e-3, t_base: 288.0, p_base: 101_300.0 },
    ThermoLayer { h_base: 11_000.0, lapse: 0.0, t_base: 217.0, p_base: 22_600.0 },
    ThermoLayer { h_base: 20_000.0, lapse: 1.0e-3, t_base: 217.0, p_base: 5_470.0 },
    ThermoLayer { h_base: 32_000.0, lapse: 2.8e-3, t_base: 229.0, p_base: 868.0 },
    ThermoLayer { h_base: 47_000.0, lapse: 0.0, t_base: 271.0, p_base: 111.0 },
    ThermoLayer { h_base: 51_000.0, lapse: -2.8e-3, t_base: 271.0, p_base: 67.0 },
    ThermoLayer { h_base: 71_000.0, lapse: -2.0e-3, t_base: 215.0, p_base: 4.0 },
    ThermoLayer { h_base: 84_800.0, lapse: 0.0, t_base: 188.0, p_base: 0.4 },
];

/// One refractive-index node: altitude (m), gradient d n/d h just below
/// the node (1/m, positive downward-increasing convention) and n - 1.
#[derive(Debug, Clone, Copy)]
pub struct RefractiveNode {
    pub h: f64,
    pub dn_dh: f64,
    pub n_minus_1: f64,
}

/// Refractive-index profile nodes, surface to 85 km. The gradient of the
/// surface node is unused (there is no segment below it).
pub const REFRACTIVE_NODES: [RefractiveNode; 11] = [
    RefractiveNode { h: 0.0, dn_dh: 0.0, n_minus_1: 27_340e-8 },
    RefractiveNode { h: 5_000.0, dn_dh: 25.68e-9, n_minus_1: 14_660e-8 },
    RefractiveNode { h: 7_000.0, dn_dh: 17.58e-9, n_minus_1: 11_142e-8 },
    RefractiveNode { h: 11_000.0, dn_dh: 12.50e-9, n_minus_1: 6_141e-8 },
    RefractiveNode { h: 15_000.0, dn_dh: 7.183e-9, n_minus_1: 3_268e-8 },
    RefractiveNode { h: 20_000.0, dn_dh: 3.565e-9, n_minus_1: 1_485e-8 },
    RefractiveNode { h: 32_000.0, dn_dh: 1.042e-9, n_minus_1: 235e-8 },
    RefractiveNode { h: 47_000.0, dn_dh: 0.134e-9, n_minus_1: 34e-8 },
    RefractiveNode { h: 51_000.0, dn_dh: 0.034e-9, n_minus_1: 21e-8 },
    RefractiveNode { h: 71_000.0, dn_dh: 0.010e-9, n_minus_1: 1e-8 },
    RefractiveNode { h: 84_800.0, dn_dh: 0.001e-9, n_minus_1: 0.1e-8 },
];

/// The last table row (84.8 km) is the profile top, not the base of a new
/// layer; the 71 km layer's hydrostatic solution extends up to it.
const N_ACTIVE_LAYERS: usize = THERMO_LAYERS.len() - 1;

fn thermo_layer_index(h: f64) -> Result<usize> {
    if !(0.0..=ATMOSPHERE_TOP).contains(&h) {
        return Err(ModelError::Domain(format!(
            "altitude {h} m outside [0, {ATMOSPHERE_TOP}] m"
        )));
    }
    Ok(THERMO_LAYERS[..N_ACTIVE_LAYERS]
        .iter()
        .rposition(|l| h >= l.h_base)
        .expect("surface layer covers h = 0"))
}

/// Temperature at each layer base obtained by chaining the lapse rates up
/// from the surface. The tabulated base temperatures are rounded to the
/// kelvin, so chaining (rather than re-anchoring per layer) is what keeps
/// the profile exactly continuous; the chained values stay within 1.2 K of
/// the tabulated ones.
fn chained_base_temperature(i: usize) -> f64 {
    let mut t = THERMO_LAYERS[0].t_base;
    for k in 1..=i {
        let prev = &THERMO_LAYERS[k - 1];
        t += prev.lapse * (THERMO_LAYERS[k].h_base - prev.h_base);
    }
    t
}

/// Temperature (K) at altitude `h` (m), piecewise linear and exactly
/// continuous across layer boundaries.
pub fn temperature(h: f64) -> Result<f64> {
    let i = thermo_layer_index(h)?;
    let l = &THERMO_LAYERS[i];
    Ok(chained_base_temperature(i) + l.lapse * (h - l.h_base))
}

/// Pressure (Pa) at altitude `h` (m).
///
/// Within each layer the hydrostatic equation with the gas law gives a
/// power law for a non-zero lapse rate and an exponential for isothermal
/// layers. Every layer is anchored at its own tabulated base pressure, so
/// tabulated values are reproduced exactly at the layer bases and the
/// profile is continuous to well under 0.5% across boundaries.
pub fn pressure(h: f64) -> Result<f64> {
    let i = thermo_layer_index(h)?;
    let l = &THERMO_LAYERS[i];
    let t_base = chained_base_temperature(i);
    let dh = h - l.h_base;
    if l.lapse.abs() > 0.0 {
        let t_ratio = 1.0 + l.lapse * dh / t_base;
        Ok(l.p_base * t_ratio.powf(-G_ACCEL / (l.lapse * R_AIR)))
    } else {
        Ok(l.p_base * (-G_ACCEL * dh / (R_AIR * t_base)).exp())
    }
}

/// Lapse rate dT/dh (K/m) of the layer containing `h`.
pub fn lapse_rate(h: f64) -> Result<f64> {
    Ok(THERMO_LAYERS[thermo_layer_index(h)?].lapse)
}

/// Air refractive index from pressure (Pa), temperature (K) and vacuum
/// wavelength (m), using the revised Edlen dispersion formula.
pub fn refractive_index_edlen(pressure_pa: f64, temperature_k: f64, wavelength: f64) -> Result<f64> {
    let lambda_um = wavelength * 1e6;
    if !(0.3..=2.0).contains(&lambda_um) {
        return Err(ModelError::Domain(format!(
            "wavelength {lambda_um} um outside Edlen validity [0.3, 2.0] um"
        )));
    }
    let sigma_sq = (1.0 / lambda_um).powi(2);
    // standard-air dispersion, (n - 1)_s x 1e8
    let ns = 8342.54 + 2_406_147.0 / (130.0 - sigma_sq) + 15_998.0 / (38.9 - sigma_sq);
    let t_c = temperature_k - 273.15;
    let n_minus_1 = (ns * 1e-8) * (pressure_pa / 96_095.43)
        * (1.0 + 1e-8 * (0.601 - 0.009_72 * t_c) * pressure_pa)
        / (1.0 + 0.003_661_0 * t_c);
    Ok(1.0 + n_minus_1)
}

/// Refractivity n - 1 at altitude `h` (m): piecewise linear between the
/// tabulated nodes, 0 above the table top. Kept separate from
/// [`refractive_index_layered`] so callers that difference refractive
/// indices do not lose precision to the leading 1.
pub fn refractivity_layered(h: f64) -> f64 {
    if h > ATMOSPHERE_TOP {
        return 0.0;
    }
    let h = h.max(0.0);
    let nodes = &REFRACTIVE_NODES;
    let i = nodes.iter().rposition(|n| h >= n.h).unwrap_or(0);
    if i + 1 >= nodes.len() {
        return nodes[i].n_minus_1;
    }
    let (lo, hi) = (&nodes[i], &nodes[i + 1]);
    let f = (h - lo.h) / (hi.h - lo.h);
    lo.n_minus_1 + f * (hi.n_minus_1 - lo.n_minus_1)
}

/// Refractive index at altitude `h` (m): piecewise linear between the
/// tabulated nodes, 1 above the table top.
pub fn refractive_index_layered(h: f64) -> f64 {
    1.0 + refractivity_layered(h)
}

/// Relative number density exp(-h / 6600 m).
pub fn number_density_ratio(h: f64) -> f64 {
    (-h.max(0.0) / DENSITY_SCALE_HEIGHT).exp()
}
