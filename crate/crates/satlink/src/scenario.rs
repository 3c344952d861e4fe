//! Scenario configuration, sweep orchestration and CSV emission.
//!
//! A [`ScenarioConfig`] bundles every module's parameters into one JSON
//! document.  The run functions sweep either a zenith-angle grid or a pass
//! timeline, evaluate the full loss chain per point (in a deterministic-order
//! parallel map) and return plain row structs; the `*_csv` helpers render
//! those rows with a `#`-prefixed metadata header that embeds the fully
//! resolved configuration and seed, so every output file is reproducible
//! from its own header.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atmosphere::refractive_index_layered;
use crate::beam::{channel_moments, BeamParams, ChannelMoments};
use crate::error::{ModelError, Result};
use crate::extinction::{extinction_factor, ExtinctionParams};
use crate::numerics::mc::McConfig;
use crate::orbit::{min_zenith, pass_timeline, true_zenith, ObserverGeo, OrbitSpec};
use crate::pdt::{build_pdt, pdt_density, PdtModel};
use crate::qkd::{key_rate, DecoyConfig, KeyRateResult};
use crate::refraction::{trace_refracted_path, GRAZING_LIMIT};
use crate::turbulence::{Cn2Model, Direction, ShearProfile, SlantContext};

/// Ground-station location.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ObserverConfig {
    pub latitude_deg: f64,
    pub altitude_m: f64,
}

/// Circular LEO orbit parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OrbitConfig {
    pub altitude_m: f64,
    /// orbit-plane inclination away from the observer meridian (degrees)
    pub inclination_deg: f64,
    pub period_s: f64,
    pub revolutions: u32,
}

/// Transmitter beam parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BeamConfig {
    pub w0_m: f64,
    pub f_curvature_m: f64,
    pub wavelength_m: f64,
}

/// Receiver parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReceiverConfig {
    pub aperture_radius_m: f64,
}

/// Turbulence-profile selection.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TurbulenceModelConfig {
    /// Exponentially decaying profile Cn^2(h) = Cn0^2 exp(-h / h0).
    Exponential { cn0_sq: f64, h0_m: f64 },
    /// Hufnagel-Valley profile parametrized by rms wind and ground strength.
    Hufnagel { w_rms: f64, a_ground: f64 },
    /// AFGL shear-based profile spliced with a Walters-Kunkel ground layer.
    AfglWk {
        /// optional path to a wind-shear CSV (header `h_m,S_per_s,lapse_K_per_km`);
        /// the built-in synthetic nighttime profile is used when absent
        shear_csv: Option<String>,
        splice_height_m: f64,
        reference_height_m: f64,
        cn0_sq_at_reference: f64,
    },
}

/// Turbulence configuration: profile plus propagation direction.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TurbulenceConfig {
    #[serde(flatten)]
    pub profile: TurbulenceModelConfig,
    pub direction: Direction,
}

/// Deterministic extinction parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExtinctionConfig {
    pub beta0_per_km: f64,
    pub scale_height_m: f64,
}

/// Phenomenological scintillation-model parameters (saturating closed form).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PhenomenologicalConfig {
    /// effective receiver radius of the scintillometer (m)
    pub aperture_m: f64,
    pub wavelength_m: f64,
    pub cn0_sq: f64,
    /// ground-layer thickness (m)
    pub layer_height_m: f64,
    /// dimensionless strength constant of the saturation model
    pub mu: f64,
}

/// Sweep and Monte Carlo controls.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SweepConfig {
    pub za_start_deg: f64,
    pub za_stop_deg: f64,
    pub za_step_deg: f64,
    /// pass-timeline sampling step (s)
    pub time_step_s: f64,
    pub seed: u64,
    pub mc_target_rel_se: f64,
    pub mc_min_samples: u64,
    pub mc_max_samples: u64,
    /// centroid-tracking precision (rad); None = no tracking correction
    pub tracking_sigma_rad: Option<f64>,
}

/// Complete scenario description; serializes to a single JSON document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioConfig {
    pub observer: ObserverConfig,
    pub orbit: OrbitConfig,
    pub beam: BeamConfig,
    pub receiver: ReceiverConfig,
    pub turbulence: TurbulenceConfig,
    pub extinction: ExtinctionConfig,
    pub phenomenological: PhenomenologicalConfig,
    pub qkd: DecoyConfig,
    pub sweep: SweepConfig,
}

impl Default for ScenarioConfig {
    /// Baseline simulation parameter set: 840 nm, W0 = 2 cm, F = 1e5 m,
    /// a = 0.5 m, Cn0^2 = 1e-17 m^(-2/3) (13 cm zenith coherence radius),
    /// observer at 48 deg N, 500 km zenith orbit.
    fn default() -> Self {
        ScenarioConfig {
            observer: ObserverConfig { latitude_deg: 48.0, altitude_m: 0.0 },
            orbit: OrbitConfig {
                altitude_m: 500e3,
                inclination_deg: 0.0,
                period_s: 5_677.0,
                revolutions: 0,
            },
            beam: BeamConfig { w0_m: 0.02, f_curvature_m: 1e5, wavelength_m: 840e-9 },
            receiver: ReceiverConfig { aperture_radius_m: 0.5 },
            turbulence: TurbulenceConfig {
                profile: TurbulenceModelConfig::Exponential { cn0_sq: 1e-17, h0_m: 35_700.0 },
                direction: Direction::Downlink,
            },
            extinction: ExtinctionConfig { beta0_per_km: 5e-3, scale_height_m: 6_600.0 },
            phenomenological: PhenomenologicalConfig {
                aperture_m: 3.2e-3,
                wavelength_m: 847e-9,
                cn0_sq: 2.5e-17,
                layer_height_m: 500.0,
                mu: 0.92,
            },
            qkd: DecoyConfig::simulation_defaults(),
            sweep: SweepConfig {
                za_start_deg: 0.0,
                za_stop_deg: 89.0,
                za_step_deg: 1.0,
                time_step_s: 20.0,
                seed: 1,
                mc_target_rel_se: 0.01,
                mc_min_samples: 1 << 16,
                mc_max_samples: 1 << 23,
                tracking_sigma_rad: Some(1e-6),
            },
        }
    }
}

/// Named figure-style presets over the default configuration.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::default();
    match name {
        // elongation-factor comparison orbit
        "fig2" => {
            cfg.orbit.altitude_m = 780e3;
            cfg.orbit.period_s = 6_000.0;
        }
        // rigorous scintillation curves per inclination
        "fig3" => {
            cfg.sweep.za_step_deg = 5.0;
        }
        // phenomenological saturating scintillation curve
        "fig5" => {
            cfg.sweep.za_step_deg = 1.0;
        }
        // beam-spread statistics over the zenith grid
        "fig6" => {
            cfg.sweep.za_step_deg = 5.0;
        }
        // QBER and key rate over a pass timeline
        "fig9" => {
            cfg.sweep.time_step_s = 20.0;
        }
        other => {
            return Err(ModelError::Config(format!(
                "unknown preset '{other}' (expected fig2|fig3|fig5|fig6|fig9)"
            )))
        }
    }
    Ok(cfg)
}

impl ScenarioConfig {
    /// Parses a JSON configuration document.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)
            .map_err(|e| ModelError::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes the fully resolved configuration to pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario config serializes")
    }

    /// Validates the configuration against every module's preconditions.
    pub fn validate(&self) -> Result<()> {
        self.observer_geo()?;
        let orbit = self.orbit_spec();
        if !orbit.is_leo() {
            return Err(ModelError::Config(format!(
                "orbit altitude {} m outside the LEO band",
                self.orbit.altitude_m
            )));
        }
        if self.orbit.period_s <= 0.0 {
            return Err(ModelError::Config("orbit period must be positive".into()));
        }
        self.beam_params()?;
        self.cn2_model()?;
        if self.extinction.beta0_per_km < 0.0 || self.extinction.scale_height_m <= 0.0 {
            return Err(ModelError::Config("invalid extinction parameters".into()));
        }
        self.qkd.validate()?;
        let s = &self.sweep;
        if !(s.za_step_deg > 0.0)
            || s.za_start_deg < 0.0
            || s.za_stop_deg > 90.0
            || s.za_stop_deg < s.za_start_deg
        {
            return Err(ModelError::Config(format!(
                "invalid zenith grid {}:{}:{}",
                s.za_start_deg, s.za_stop_deg, s.za_step_deg
            )));
        }
        if s.time_step_s <= 0.0 {
            return Err(ModelError::Config("time_step_s must be positive".into()));
        }
        if s.mc_min_samples == 0 || s.mc_max_samples < s.mc_min_samples {
            return Err(ModelError::Config("invalid Monte Carlo sample budget".into()));
        }
        Ok(())
    }

    pub fn observer_geo(&self) -> Result<ObserverGeo> {
        ObserverGeo::new(self.observer.latitude_deg.to_radians(), self.observer.altitude_m)
    }

    pub fn orbit_spec(&self) -> OrbitSpec {
        OrbitSpec {
            altitude_h: self.orbit.altitude_m,
            inclination_delta_iota: self.orbit.inclination_deg.to_radians(),
            orbit_period_t_sat: self.orbit.period_s,
            revolutions_n: self.orbit.revolutions,
        }
    }

    pub fn beam_params(&self) -> Result<BeamParams> {
        BeamParams::new(
            self.beam.w0_m,
            self.beam.f_curvature_m,
            self.beam.wavelength_m,
            self.receiver.aperture_radius_m,
        )
    }

    pub fn cn2_model(&self) -> Result<Cn2Model> {
        Ok(match &self.turbulence.profile {
            TurbulenceModelConfig::Exponential { cn0_sq, h0_m } => {
                Cn2Model::Exponential { cn0_sq: *cn0_sq, h0: *h0_m }
            }
            TurbulenceModelConfig::Hufnagel { w_rms, a_ground } => {
                Cn2Model::Hufnagel { w_rms: *w_rms, a_ground: *a_ground }
            }
            TurbulenceModelConfig::AfglWk {
                shear_csv,
                splice_height_m,
                reference_height_m,
                cn0_sq_at_reference,
            } => {
                let shear = match shear_csv {
                    Some(path) => {
                        let text = std::fs::read_to_string(path).map_err(|e| {
                            ModelError::Config(format!("cannot read shear CSV {path}: {e}"))
                        })?;
                        ShearProfile::from_csv(&text)?
                    }
                    None => crate::turbulence::synthetic_night_shear(),
                };
                Cn2Model::AfglWk {
                    shear,
                    night: true,
                    h_i: *splice_height_m,
                    h_0: *reference_height_m,
                    cn0_sq_at_h0: *cn0_sq_at_reference,
                }
            }
        })
    }

    pub fn extinction_params(&self) -> ExtinctionParams {
        ExtinctionParams {
            beta_ext_0: self.extinction.beta0_per_km,
            scale_height: self.extinction.scale_height_m,
        }
    }

    /// Monte Carlo controls with a per-sweep-point seed offset so parallel
    /// sweep points draw independent, scheduling-invariant streams.
    pub fn mc_config(&self, point_index: u64) -> McConfig {
        McConfig {
            seed: self.sweep.seed.wrapping_add(point_index.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            target_rel_se: self.sweep.mc_target_rel_se,
            min_samples: self.sweep.mc_min_samples,
            max_samples: self.sweep.mc_max_samples,
        }
    }

    /// The apparent-zenith-angle grid in degrees.
    pub fn zenith_grid(&self) -> Vec<f64> {
        let s = &self.sweep;
        let n = ((s.za_stop_deg - s.za_start_deg) / s.za_step_deg).round() as usize;
        (0..=n)
            .map(|k| (s.za_start_deg + k as f64 * s.za_step_deg).min(s.za_stop_deg))
            .collect()
    }
}

/// Geometry and deterministic losses for one apparent zenith angle.
#[derive(Debug, Clone, Copy)]
pub struct PathGeometry {
    pub apparent_zenith_rad: f64,
    pub true_zenith_rad: f64,
    /// straight-line slant range (m)
    pub slant_range_m: f64,
    /// refraction-elongated optical path length (m)
    pub path_length_m: f64,
    pub elongation: f64,
    pub chi_ext: f64,
}

/// Resolves geometry, refraction and extinction at one apparent zenith angle
/// (radians), clamped to the grazing-incidence limit of the ray tracer.
pub fn path_geometry(cfg: &ScenarioConfig, apparent_zenith: f64) -> Result<PathGeometry> {
    let za = apparent_zenith.min(GRAZING_LIMIT);
    let orbit = cfg.orbit_spec();
    let n0 = refractive_index_layered(0.0);
    let z_true = true_zenith(za, n0)?;
    let trace = trace_refracted_path(za, &orbit)?;
    let path = trace.slant_range_refracted;
    let chi = extinction_factor(za, path, &cfg.extinction_params())?;
    Ok(PathGeometry {
        apparent_zenith_rad: za,
        true_zenith_rad: z_true,
        // geometric slant range at the same apparent zenith angle, the
        // reference the elongation factor is defined against
        slant_range_m: path / trace.elongation_factor,
        path_length_m: path,
        elongation: trace.elongation_factor,
        chi_ext: chi,
    })
}

/// One loss-budget sweep row.
#[derive(Debug, Clone, Serialize)]
pub struct LossBudgetRow {
    pub za_deg: f64,
    pub slant_range_m: f64,
    pub path_length_m: f64,
    pub elongation: f64,
    pub chi_ext: f64,
    pub eta_mean: f64,
}

/// Sweeps slant range, elongation, extinction and the mean transmittance
/// over the zenith grid.
pub fn run_loss_budget(cfg: &ScenarioConfig) -> Result<Vec<LossBudgetRow>> {
    cfg.validate()?;
    let beam = cfg.beam_params()?;
    let model = cfg.cn2_model()?;
    let direction = cfg.turbulence.direction;
    cfg.zenith_grid()
        .par_iter()
        .map(|&za_deg| {
            let geo = path_geometry(cfg, za_deg.to_radians())?;
            let ctx = SlantContext::new(geo.path_length_m, geo.apparent_zenith_rad, direction)?;
            let eta_mean = crate::beam::mean_transmittance(&beam, &ctx, &model)?;
            Ok(LossBudgetRow {
                za_deg,
                slant_range_m: geo.slant_range_m,
                path_length_m: geo.path_length_m,
                elongation: geo.elongation,
                chi_ext: geo.chi_ext,
                eta_mean,
            })
        })
        .collect()
}

/// One turbulence-statistics sweep row.
#[derive(Debug, Clone, Serialize)]
pub struct TurbStatsRow {
    pub za_deg: f64,
    pub moments: ChannelMoments,
    /// saturating closed-form scintillation index for comparison
    pub scint_index_phenomenological: f64,
}

/// Sweeps the full channel-moment set (including the Monte Carlo second
/// moment) over the zenith grid.
pub fn run_turbulence_stats(cfg: &ScenarioConfig) -> Result<Vec<TurbStatsRow>> {
    cfg.validate()?;
    let beam = cfg.beam_params()?;
    let model = cfg.cn2_model()?;
    let direction = cfg.turbulence.direction;
    let p = &cfg.phenomenological;
    cfg.zenith_grid()
        .par_iter()
        .enumerate()
        .map(|(idx, &za_deg)| {
            let geo = path_geometry(cfg, za_deg.to_radians())?;
            let ctx = SlantContext::new(geo.path_length_m, geo.apparent_zenith_rad, direction)?;
            let moments = channel_moments(&beam, &ctx, &model, &cfg.mc_config(idx as u64))?;
            let pheno = crate::beam::scint_index_phenomenological(
                p.aperture_m,
                p.wavelength_m,
                p.cn0_sq,
                p.layer_height_m,
                p.mu,
                geo.apparent_zenith_rad,
            )?;
            Ok(TurbStatsRow { za_deg, moments, scint_index_phenomenological: pheno })
        })
        .collect()
}

/// Builds the PDT at one apparent zenith angle (degrees) and tabulates its
/// density on a uniform transmittance grid.
pub fn run_pdt(
    cfg: &ScenarioConfig,
    za_deg: f64,
    n_points: usize,
) -> Result<(PdtModel, Vec<(f64, f64)>)> {
    cfg.validate()?;
    let beam = cfg.beam_params()?;
    let model = cfg.cn2_model()?;
    let geo = path_geometry(cfg, za_deg.to_radians())?;
    let ctx = SlantContext::new(geo.path_length_m, geo.apparent_zenith_rad, cfg.turbulence.direction)?;
    let moments = channel_moments(&beam, &ctx, &model, &cfg.mc_config(0))?;
    let pdt = build_pdt(
        &moments,
        cfg.receiver.aperture_radius_m,
        cfg.sweep.tracking_sigma_rad,
        geo.path_length_m,
    )?;
    // tabulate over the support of interest: a few conditional means wide
    let eta_hi = (pdt.eta0 * 4.0).min(1.0).max(1e-6);
    let table: Vec<(f64, f64)> = (0..n_points)
        .map(|k| {
            let eta = eta_hi * (k as f64 + 0.5) / n_points as f64;
            (eta, pdt_density(&pdt, eta))
        })
        .collect();
    Ok((pdt, table))
}

/// One QKD pass-timeline row.
#[derive(Debug, Clone, Serialize)]
pub struct QkdPassRow {
    pub t_s: f64,
    pub za_deg: f64,
    pub result: KeyRateResult,
}

/// Evaluates QBER and key rate along one satellite pass (both halves of the
/// above-horizon window).  Pass samples beyond the grazing limit of the ray
/// tracer are evaluated at the limit.
pub fn run_qkd_pass(cfg: &ScenarioConfig) -> Result<Vec<QkdPassRow>> {
    cfg.validate()?;
    let observer = cfg.observer_geo()?;
    let orbit = cfg.orbit_spec();
    let inclination = orbit.inclination_delta_iota;
    let zmin = min_zenith(&observer, inclination)?;
    if zmin >= GRAZING_LIMIT {
        return Err(ModelError::Config(
            "orbit never rises above the grazing limit for this observer".into(),
        ));
    }
    let samples = pass_timeline(&observer, &orbit, inclination, cfg.sweep.time_step_s)?;
    let beam = cfg.beam_params()?;
    let model = cfg.cn2_model()?;
    let n0 = refractive_index_layered(0.0);
    samples
        .par_iter()
        .enumerate()
        .map(|(idx, s)| {
            let za = crate::orbit::apparent_zenith(s.zenith.min(GRAZING_LIMIT), n0)?;
            let geo = path_geometry(cfg, za)?;
            let ctx =
                SlantContext::new(geo.path_length_m, geo.apparent_zenith_rad, cfg.turbulence.direction)?;
            let moments = channel_moments(&beam, &ctx, &model, &cfg.mc_config(idx as u64))?;
            let pdt = build_pdt(
                &moments,
                cfg.receiver.aperture_radius_m,
                cfg.sweep.tracking_sigma_rad,
                geo.path_length_m,
            )?;
            let result = key_rate(&pdt, &cfg.qkd, geo.chi_ext)?;
            Ok(QkdPassRow { t_s: s.time_s, za_deg: za.to_degrees(), result })
        })
        .collect()
}

fn csv_header(cfg: &ScenarioConfig, what: &str, columns: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("# satlink {what}\n"));
    out.push_str(&format!("# seed: {}\n", cfg.sweep.seed));
    // single-line resolved config for provenance
    let compact = serde_json::to_string(cfg).expect("config serializes");
    out.push_str(&format!("# config: {compact}\n"));
    out.push_str(columns);
    out.push('\n');
    out
}

/// Renders the loss-budget sweep as CSV.
pub fn loss_budget_csv(cfg: &ScenarioConfig, rows: &[LossBudgetRow]) -> String {
    let mut out = csv_header(
        cfg,
        "loss budget",
        "Z_a_deg,slant_range_m,path_length_m,elongation,chi_ext,eta_mean",
    );
    for r in rows {
        out.push_str(&format!(
            "{:.4},{:.6e},{:.6e},{:.9},{:.9},{:.9e}\n",
            r.za_deg, r.slant_range_m, r.path_length_m, r.elongation, r.chi_ext, r.eta_mean
        ));
    }
    out
}

/// Renders the turbulence-statistics sweep as CSV.
pub fn turb_stats_csv(cfg: &ScenarioConfig, rows: &[TurbStatsRow]) -> String {
    let mut out = csv_header(
        cfg,
        "turbulence statistics",
        "Z_a_deg,eta_mean,eta2_mean,eta2_std_error,scint_index,W_LT_m,W_ST_m,sigma_BW_m,rho0_m,scint_index_phenom",
    );
    for r in rows {
        let m = &r.moments;
        out.push_str(&format!(
            "{:.4},{:.9e},{:.9e},{:.3e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
            r.za_deg,
            m.eta_mean,
            m.eta_sq_mean,
            m.eta_sq_std_error,
            m.scint_index,
            m.w_lt,
            m.w_st,
            m.sigma_bw,
            m.rho0,
            r.scint_index_phenomenological
        ));
    }
    out
}

/// Renders a PDT density table as CSV.
pub fn pdt_csv(cfg: &ScenarioConfig, za_deg: f64, model: &PdtModel, table: &[(f64, f64)]) -> String {
    let mut out = csv_header(cfg, &format!("PDT at Z_a = {za_deg} deg"), "eta,p_eta");
    out.push_str(&format!(
        "# pdt: eta0={:.9e} zeta0_sq={:.9e} R={:.9e} lambda={:.9e} sigma_centroid={:.9e}\n",
        model.eta0, model.zeta0_sq, model.r_scale, model.lambda_shape, model.sigma_centroid
    ));
    for (eta, p) in table {
        out.push_str(&format!("{eta:.9e},{p:.9e}\n"));
    }
    out
}

/// Renders the QKD pass timeline as CSV.
pub fn qkd_pass_csv(cfg: &ScenarioConfig, rows: &[QkdPassRow]) -> String {
    let mut out = csv_header(
        cfg,
        "QKD pass",
        "t_s,Z_a_deg,qber,key_rate_bits_per_s,Q_mu_s,Y1_L,e1_xU,theta_U",
    );
    for r in rows {
        let k = &r.result;
        out.push_str(&format!(
            "{:.3},{:.4},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}\n",
            r.t_s,
            r.za_deg,
            k.qber,
            k.key_rate_bits_per_s,
            k.q_mu_s_mean,
            k.y1_lower_z,
            k.e1_x_upper,
            k.theta_upper
        ));
    }
    out
}

/// One standard-atmosphere table row.
#[derive(Debug, Clone, Serialize)]
pub struct AtmosphereRow {
    pub h_m: f64,
    pub temperature_k: f64,
    pub pressure_pa: f64,
    pub refractivity: f64,
}

/// Tabulates the layered standard atmosphere on a fixed altitude grid.
pub fn run_atmosphere_tables(step_m: f64) -> Result<Vec<AtmosphereRow>> {
    if step_m <= 0.0 {
        return Err(ModelError::Config("altitude step must be positive".into()));
    }
    let mut out = Vec::new();
    let mut h = 0.0;
    while h <= crate::atmosphere::ATMOSPHERE_TOP {
        out.push(AtmosphereRow {
            h_m: h,
            temperature_k: crate::atmosphere::temperature(h)?,
            pressure_pa: crate::atmosphere::pressure(h)?,
            refractivity: crate::atmosphere::refractivity_layered(h),
        });
        h += step_m;
    }
    Ok(out)
}

/// Renders the atmosphere table as CSV.
pub fn atmosphere_csv(rows: &[AtmosphereRow]) -> String {
    let mut out = String::from("# satlink standard atmosphere\nh_m,T_K,P_Pa,n_minus_1\n");
    for r in rows {
        out.push_str(&format!(
            "{:.1},{:.6},{:.6e},{:.9e}\n",
            r.h_m, r.temperature_k, r.pressure_pa, r.refractivity
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        ScenarioConfig::default().validate().unwrap();
        for p in ["fig2", "fig3", "fig5", "fig6", "fig9"] {
            preset(p).unwrap().validate().unwrap();
        }
        assert!(preset("fig7").is_err());
    }

    #[test]
    fn config_round_trip_is_idempotent() {
        let cfg = ScenarioConfig::default();
        let json1 = cfg.to_json();
        let back = ScenarioConfig::from_json(&json1).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(json1, back.to_json());
    }

    #[test]
    fn zenith_grid_covers_requested_range() {
        let mut cfg = ScenarioConfig::default();
        cfg.sweep.za_start_deg = 0.0;
        cfg.sweep.za_stop_deg = 89.0;
        cfg.sweep.za_step_deg = 1.0;
        let g = cfg.zenith_grid();
        assert_eq!(g.len(), 90);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[89], 89.0);
    }

    #[test]
    fn loss_budget_path_length_is_monotone() {
        let mut cfg = ScenarioConfig::default();
        cfg.sweep.za_step_deg = 10.0;
        let rows = run_loss_budget(&cfg).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].path_length_m > w[0].path_length_m);
            assert!(w[1].slant_range_m > w[0].slant_range_m);
        }
    }

    #[test]
    fn vacuum_extinction_gives_unit_chi() {
        let mut cfg = ScenarioConfig::default();
        cfg.extinction.beta0_per_km = 0.0;
        cfg.sweep.za_step_deg = 30.0;
        let rows = run_loss_budget(&cfg).unwrap();
        for r in &rows {
            assert_eq!(r.chi_ext, 1.0);
        }
    }

    #[test]
    fn elongation_ordering_across_orbit_altitudes() {
        let mut elong = Vec::new();
        for h in [400e3, 780e3, 2000e3] {
            let mut cfg = ScenarioConfig::default();
            cfg.orbit.altitude_m = h;
            let geo = path_geometry(&cfg, 85f64.to_radians()).unwrap();
            elong.push(geo.elongation);
        }
        assert!(elong[0] > elong[1] && elong[1] > elong[2], "{elong:?}");
    }

    #[test]
    fn turb_stats_csv_is_deterministic() {
        let mut cfg = ScenarioConfig::default();
        cfg.sweep.za_start_deg = 0.0;
        cfg.sweep.za_stop_deg = 60.0;
        cfg.sweep.za_step_deg = 60.0;
        cfg.sweep.mc_target_rel_se = 0.0;
        cfg.sweep.mc_min_samples = 1 << 14;
        cfg.sweep.mc_max_samples = 1 << 14;
        let a = turb_stats_csv(&cfg, &run_turbulence_stats(&cfg).unwrap());
        let b = turb_stats_csv(&cfg, &run_turbulence_stats(&cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.contains("# seed: 1"));
        assert!(a.contains("# config: "));
    }

    #[test]
    fn pdt_run_produces_normalizable_table() {
        let mut cfg = ScenarioConfig::default();
        cfg.sweep.mc_target_rel_se = 0.0;
        cfg.sweep.mc_min_samples = 1 << 14;
        cfg.sweep.mc_max_samples = 1 << 14;
        let (model, table) = run_pdt(&cfg, 30.0, 64).unwrap();
        assert!(model.eta0 > 0.0 && model.eta0 < 1.0);
        assert_eq!(table.len(), 64);
        assert!(table.iter().all(|(eta, p)| *eta > 0.0 && *eta < 1.0 && *p >= 0.0));
        assert!(table.iter().any(|(_, p)| *p > 0.0));
    }

    #[test]
    fn atmosphere_table_rows_are_physical() {
        let rows = run_atmosphere_tables(5_000.0).unwrap();
        assert!(rows.len() > 10);
        for w in rows.windows(2) {
            assert!(w[1].pressure_pa < w[0].pressure_pa);
        }
        let csv = atmosphere_csv(&rows);
        assert!(csv.starts_with("# satlink standard atmosphere"));
    }

    #[test]
    fn inclined_orbit_grid_matches_zenith_grid_on_shared_domain() {
        // inclined passes reach the same loss-budget values at a shared
        // zenith angle; the geometry depends only on Z_a
        let cfg = ScenarioConfig::default();
        let mut inclined = cfg.clone();
        inclined.orbit.inclination_deg = 25.0;
        let a = path_geometry(&cfg, 50f64.to_radians()).unwrap();
        let b = path_geometry(&inclined, 50f64.to_radians()).unwrap();
        assert_eq!(a.path_length_m, b.path_length_m);
        assert_eq!(a.chi_ext, b.chi_ext);
    }
}
