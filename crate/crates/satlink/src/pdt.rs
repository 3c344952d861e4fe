//! Probability distribution of the channel transmittance (PDT).
//!
//! The PDT is built from four channel numbers — the first two transmittance
//! moments, the short-term beam radius, and the beam-wander deviation — by
//! the law of total probability: the beam centroid wanders with a Rayleigh
//! radial law, and conditioned on a centroid offset the transmittance
//! follows a truncated log-normal whose parameters decay with the offset.
//! Active tracking is modeled by replacing the wander deviation with
//! theta_tr * L_r in the centroid distribution only.

use crate::beam::ChannelMoments;
use crate::error::{ModelError, Result};
use crate::numerics::quad::integrate;
use crate::numerics::special::{bessel_i0_scaled, bessel_i1_scaled, normal_cdf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Built transmittance-distribution model.
#[derive(Debug, Clone, Copy)]
pub struct PdtModel {
    /// conditional-mean scale at zero centroid offset
    pub eta0: f64,
    /// conditional second-moment scale at zero centroid offset
    pub zeta0_sq: f64,
    /// offset decay scale R (m)
    pub r_scale: f64,
    /// offset decay exponent lambda
    pub lambda_shape: f64,
    /// deviation used in the centroid distribution: sigma_BW, or
    /// theta_tr * L_r under tracking (m)
    pub sigma_centroid: f64,
    /// turbulent beam-wander deviation entering eta0 / zeta0^2 (m)
    pub sigma_bw: f64,
    pub aperture_a: f64,
    pub w_st: f64,
}

/// Log-normal parameters of the conditional distribution at centroid
/// offset `r0`.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalParams {
    /// -mu_{r0} is the mean of ln eta
    pub mu: f64,
    /// standard deviation of ln eta
    pub sigma: f64,
    /// mass of the untruncated log-normal on [0, 1]
    pub trunc_norm: f64,
}

impl PdtModel {
    /// Conditional truncated-log-normal parameters at offset `r0`:
    /// mu = -ln(eta0^2 / zeta0) + (r0/R)^lambda, sigma^2 = ln(zeta0^2/eta0^2).
    pub fn conditional(&self, r0: f64) -> ConditionalParams {
        let sigma_sq = (self.zeta0_sq / (self.eta0 * self.eta0)).ln().max(1e-12);
        let sigma = sigma_sq.sqrt();
        let mu = -(self.eta0 * self.eta0 / self.zeta0_sq.sqrt()).ln()
            + (r0 / self.r_scale).powf(self.lambda_shape);
        let trunc_norm = normal_cdf(mu / sigma);
        ConditionalParams { mu, sigma, trunc_norm }
    }

    /// Conditional density P(eta | r0).
    fn conditional_density(&self, eta: f64, c: &ConditionalParams) -> f64 {
        if eta <= 0.0 || eta > 1.0 {
            return 0.0;
        }
        let z = (eta.ln() + c.mu) / c.sigma;
        (-(z * z) / 2.0).exp()
            / (c.trunc_norm * (2.0 * std::f64::consts::PI).sqrt() * eta * c.sigma)
    }
}

/// Offset-decay shape parameters (R, lambda) of the conditional moments,
/// from the ratio a/W_ST via modified Bessel functions:
/// lambda = 8x e^{-4x} I1(4x) / (1 - e^{-4x} I0(4x)) / ln(...),
/// R = a [ln(2 (1-e^{-2x}) / (1 - e^{-4x} I0(4x)))]^{-1/lambda}, x = a^2/W^2.
pub fn shape_params_from_geometry(aperture_a: f64, w_st: f64) -> Result<(f64, f64)> {
    if aperture_a <= 0.0 || w_st <= 0.0 {
        return Err(ModelError::Domain("aperture and beam radius must be positive".into()));
    }
    let x = aperture_a * aperture_a / (w_st * w_st);
    let denom = 1.0 - bessel_i0_scaled(4.0 * x);
    let log_arg = 2.0 * (1.0 - (-2.0 * x).exp()) / denom;
    let l = log_arg.ln();
    if !(l > 0.0) {
        return Err(ModelError::Numerical(format!(
            "degenerate shape parameters at a/W_ST = {}",
            (aperture_a / w_st)
        )));
    }
    let lambda = 8.0 * x * bessel_i1_scaled(4.0 * x) / denom / l;
    let r_scale = aperture_a * l.powf(-1.0 / lambda);
    Ok((r_scale, lambda))
}

/// Builds the PDT from the channel moments and the receiver aperture.
/// `tracking` is an optional tracking accuracy theta_tr (rad); when given,
/// the centroid deviation becomes theta_tr * l_r while eta0 / zeta0^2 keep
/// the turbulent wander deviation.
pub fn build_pdt(
    moments: &ChannelMoments,
    aperture_a: f64,
    tracking: Option<f64>,
    l_r: f64,
) -> Result<PdtModel> {
    let (em, e2) = (moments.eta_mean, moments.eta_sq_mean);
    if !(0.0 < em && em < 1.0) {
        return Err(ModelError::Domain(format!("mean transmittance {em} outside (0, 1)")));
    }
    if e2 < em * em * (1.0 - 1e-9) || e2 > em * (1.0 + 1e-9) {
        return Err(ModelError::Domain(format!(
            "second moment {e2} violates the bounds [{}, {}]",
            em * em,
            em
        )));
    }
    let e2 = e2.clamp(em * em, em);
    if moments.w_st <= 0.0 || moments.sigma_bw < 0.0 {
        return Err(ModelError::Domain("W_ST must be positive and sigma_BW nonnegative".into()));
    }
    let (r_scale, lambda_shape) = shape_params_from_geometry(aperture_a, moments.w_st)?;
    let norm = |m: f64| -> f64 {
        let s = moments.sigma_bw / r_scale;
        if s < 1e-15 {
            return 1.0;
        }
        integrate(
            |xi| xi * (-xi * xi / 2.0 - m * (s * xi).powf(lambda_shape)).exp(),
            0.0,
            12.0,
            0.0,
            1e-10,
        )
        .value
    };
    let eta0 = em / norm(1.0);
    let zeta0_sq = (e2 / norm(2.0)).max(eta0 * eta0 * (1.0 + 1e-12));
    Ok(PdtModel {
        eta0,
        zeta0_sq,
        r_scale,
        lambda_shape,
        sigma_centroid: tracking.map_or(moments.sigma_bw, |th| th * l_r),
        sigma_bw: moments.sigma_bw,
        aperture_a,
        w_st: moments.w_st,
    })
}

/// PDT density P(eta): the conditional truncated log-normal marginalized
/// over the Rayleigh centroid-offset distribution.
pub fn pdt_density(model: &PdtModel, eta: f64) -> f64 {
    if !(0.0..=1.0).contains(&eta) || eta == 0.0 {
        return 0.0;
    }
    let sig = model.sigma_centroid;
    if sig < 1e-12 * model.r_scale {
        let c = model.conditional(0.0);
        return model.conditional_density(eta, &c);
    }
    // Rayleigh radial density r0/sig^2 e^{-r0^2/(2 sig^2)}; the tail above
    // 8 sig holds < 1e-14 of the mass
    integrate(
        |r0| {
            let c = model.conditional(r0.max(0.0));
            r0 / (sig * sig) * (-r0 * r0 / (2.0 * sig * sig)).exp()
                * model.conditional_density(eta, &c)
        },
        0.0,
        8.0 * sig,
        0.0,
        1e-8,
    )
    .value
}

/// Draws `n` transmittance samples: a Rayleigh centroid offset, then a
/// truncated log-normal conditioned on it (rejection on eta <= 1).
pub fn pdt_sample(model: &PdtModel, seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let r0 = if model.sigma_centroid < 1e-12 * model.r_scale {
            0.0
        } else {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            model.sigma_centroid * (-2.0 * u.ln()).sqrt()
        };
        let c = model.conditional(r0);
        loop {
            let g: f64 = StandardNormal.sample(&mut rng);
            let ln_eta = -c.mu + c.sigma * g;
            if ln_eta <= 0.0 {
                out.push(ln_eta.exp());
                break;
            }
        }
    }
    out
}

/// Channel average <f(eta)> = int_0^1 f(eta) P(eta) d eta.
///
/// Integrated with the marginalization order swapped and the conditional
/// integral taken in t = ln(eta), where the conditional law is a plain
/// truncated Gaussian: this stays well-conditioned even when the
/// conditional mass collapses toward eta = 0 at large centroid offsets.
pub fn average_over_pdt<F: Fn(f64) -> f64>(model: &PdtModel, f: F) -> f64 {
    let inner = |r0: f64| -> f64 {
        let c = model.conditional(r0);
        // ln eta ~ N(-mu, sigma^2) truncated to t <= 0
        let t_lo = -c.mu - 10.0 * c.sigma;
        if t_lo >= 0.0 {
            // essentially all mass above eta = 1 would be truncated away;
            // the renormalized law concentrates at eta = 1
            return f(1.0);
        }
        let norm = 1.0 / (c.trunc_norm * (2.0 * std::f64::consts::PI).sqrt() * c.sigma);
        integrate(
            |t| {
                let z = (t + c.mu) / c.sigma;
                f(t.min(0.0).exp()) * (-(z * z) / 2.0).exp()
            },
            t_lo,
            0.0,
            0.0,
            1e-9,
        )
        .value
            * norm
    };
    let sig = model.sigma_centroid;
    if sig < 1e-12 * model.r_scale {
        return inner(0.0);
    }
    integrate(
        |r0| r0 / (sig * sig) * (-r0 * r0 / (2.0 * sig * sig)).exp() * inner(r0.max(0.0)),
        0.0,
        8.0 * sig,
        1e-9,
        1e-7,
    )
    .value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::ChannelMoments;
    use approx::assert_relative_eq;

    fn moments(eta: f64, eta2: f64, w_st: f64, sigma_bw: f64) -> ChannelMoments {
        ChannelMoments {
            eta_mean: eta,
            eta_sq_mean: eta2,
            eta_sq_std_error: 0.0,
            scint_index: eta2 / (eta * eta) - 1.0,
            w_lt: (w_st * w_st + 4.0 * sigma_bw * sigma_bw).sqrt(),
            w_st,
            sigma_bw,
            rho0: 0.1,
            chi_sq_weight: 0.05,
        }
    }

    fn reference_model() -> PdtModel {
        let a = 0.5;
        build_pdt(&moments(0.5, 0.26, a, 0.1 * a), a, None, 500e3).unwrap()
    }

    #[test]
    fn density_support_and_normalization() {
        let m = reference_model();
        assert_eq!(pdt_density(&m, -0.1), 0.0);
        assert_eq!(pdt_density(&m, 1.1), 0.0);
        let mass = integrate(|e| pdt_density(&m, e.clamp(0.0, 1.0)), 0.0, 1.0, 0.0, 1e-8).value;
        assert_relative_eq!(mass, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn moments_are_reproduced() {
        let m = reference_model();
        let mean = average_over_pdt(&m, |e| e);
        let second = average_over_pdt(&m, |e| e * e);
        assert_relative_eq!(mean, 0.5, max_relative = 0.02);
        assert_relative_eq!(second, 0.26, max_relative = 0.02);
    }

    #[test]
    fn zero_wander_collapses_to_truncated_log_normal() {
        let a = 0.5f64;
        let m = build_pdt(&moments(0.4, 0.17, a, 0.0), a, None, 500e3).unwrap();
        // eta0 = <eta>, zeta0^2 = <eta^2>; the density is a single truncated
        // log-normal with mu = -ln(eta0^2/zeta0), sigma^2 = ln(zeta0^2/eta0^2)
        assert_relative_eq!(m.eta0, 0.4, max_relative = 1e-12);
        assert_relative_eq!(m.zeta0_sq, 0.17, max_relative = 1e-12);
        let c = m.conditional(0.0);
        let mu_expect = -(0.4f64 * 0.4 / 0.17f64.sqrt()).ln();
        let sig_expect = (0.17f64 / 0.16).ln().sqrt();
        assert_relative_eq!(c.mu, mu_expect, max_relative = 1e-12);
        assert_relative_eq!(c.sigma, sig_expect, max_relative = 1e-6);
        for &eta in &[0.1, 0.4, 0.8] {
            let z = ((eta as f64).ln() + c.mu) / c.sigma;
            let expect = (-(z * z) / 2.0).exp()
                / (c.trunc_norm * (2.0 * std::f64::consts::PI).sqrt() * eta * c.sigma);
            assert_relative_eq!(pdt_density(&m, eta), expect, max_relative = 1e-9);
        }
    }

    #[test]
    fn concentrated_pdt_for_large_aperture() {
        // a >> W_ST with tiny wander: nearly deterministic transmittance
        let a = 0.5f64;
        let eta = 0.95;
        let eta2 = eta * eta * 1.0001;
        let m = build_pdt(&moments(eta, eta2, 0.1 * a, 1e-4 * a), a, None, 500e3).unwrap();
        let sd = (eta2 - eta * eta).sqrt();
        let inside = integrate(
            |e| pdt_density(&m, e.clamp(0.0, 1.0)),
            (eta - 3.0 * sd).max(0.0),
            (eta + 3.0 * sd).min(1.0),
            0.0,
            1e-8,
        )
        .value;
        assert!(inside >= 0.99, "mass near the mean is {inside}");
    }

    #[test]
    fn tail_vanishes_for_lossy_channels() {
        let a = 0.5f64;
        let m = build_pdt(&moments(0.2, 0.05, a, 0.2 * a), a, None, 500e3).unwrap();
        assert!(pdt_density(&m, 0.999) < 1e-3 * pdt_density(&m, 0.2));
    }

    #[test]
    fn sampler_is_reproducible_and_consistent() {
        let m = reference_model();
        let n = 1_000_000usize;
        let s1 = pdt_sample(&m, 123, n);
        let s2 = pdt_sample(&m, 123, n);
        assert_eq!(s1[..100], s2[..100]);
        let mean: f64 = s1.iter().sum::<f64>() / n as f64;
        let qmean = average_over_pdt(&m, |e| e);
        let var: f64 = s1.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - qmean).abs() < 3.0 * se + 1e-6, "mean {mean} vs quadrature {qmean}");
    }

    #[test]
    fn empirical_cdf_matches_density_cdf() {
        let m = reference_model();
        let n = 1_000_000usize;
        let mut s = pdt_sample(&m, 7, n);
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // KS distance on a 200-point grid
        let mut ks: f64 = 0.0;
        let mut cdf = 0.0;
        let mut prev = 0.0;
        for i in 1..=200 {
            let eta = i as f64 / 200.0;
            cdf += integrate(|e| pdt_density(&m, e.clamp(0.0, 1.0)), prev, eta, 0.0, 1e-9).value;
            prev = eta;
            let emp = s.partition_point(|&x| x <= eta) as f64 / n as f64;
            ks = ks.max((emp - cdf.min(1.0)).abs());
        }
        assert!(ks < 0.005, "KS distance {ks}");
    }

    #[test]
    fn zero_wander_sampling_matches_log_normal() {
        let a = 0.5f64;
        let m = build_pdt(&moments(0.4, 0.17, a, 0.0), a, None, 500e3).unwrap();
        let n = 1_000_000usize;
        let mut s = pdt_sample(&m, 99, n);
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let c = m.conditional(0.0);
        let mut ks: f64 = 0.0;
        for i in 1..=200 {
            let eta = i as f64 / 200.0;
            let cdf = normal_cdf((eta.ln() + c.mu) / c.sigma) / c.trunc_norm;
            let emp = s.partition_point(|&x| x <= eta) as f64 / n as f64;
            ks = ks.max((emp - cdf.min(1.0)).abs());
        }
        assert!(ks < 0.005, "KS distance {ks}");
    }

    #[test]
    fn tracking_replaces_centroid_deviation_only() {
        let a = 0.5f64;
        let mom = moments(0.5, 0.26, a, 0.1 * a);
        let plain = build_pdt(&mom, a, None, 500e3).unwrap();
        let tracked = build_pdt(&mom, a, Some(1.2e-6), 500e3).unwrap();
        assert_relative_eq!(tracked.sigma_centroid, 1.2e-6 * 500e3, max_relative = 1e-12);
        // eta0 / zeta0^2 keep the turbulent wander deviation
        assert_eq!(plain.eta0.to_bits(), tracked.eta0.to_bits());
        assert_eq!(plain.zeta0_sq.to_bits(), tracked.zeta0_sq.to_bits());
    }

    #[test]
    fn pdt_variance_grows_with_tracking_jitter() {
        let a = 0.5f64;
        let mom = moments(0.5, 0.26, a, 0.1 * a);
        // monotone while sigma_tr stays below the offset decay scale R;
        // for extreme jitter the mass collapses toward eta = 0 and the
        // variance shrinks again
        let mut prev = -1.0;
        for &theta in &[1e-7, 3e-7, 6e-7] {
            let m = build_pdt(&mom, a, Some(theta), 500e3).unwrap();
            let mean = average_over_pdt(&m, |e| e);
            let second = average_over_pdt(&m, |e| e * e);
            let var = second - mean * mean;
            assert!(var >= prev, "variance must not decrease with jitter");
            prev = var;
        }
    }

    #[test]
    fn averages_of_simple_functionals() {
        let m = reference_model();
        assert_relative_eq!(average_over_pdt(&m, |_| 1.0), 1.0, max_relative = 1e-6);
        let c = 3.0;
        let quad = average_over_pdt(&m, |e| 1.0 - (-c * e).exp());
        let s = pdt_sample(&m, 11, 500_000);
        let mc: f64 = s.iter().map(|&e| 1.0 - (-c * e).exp()).sum::<f64>() / s.len() as f64;
        let var: f64 = s
            .iter()
            .map(|&e| {
                let v = 1.0 - (-c * e).exp();
                (v - mc) * (v - mc)
            })
            .sum::<f64>()
            / s.len() as f64;
        let se = (var / s.len() as f64).sqrt();
        assert!((quad - mc).abs() < 3.0 * se + 1e-6);
    }

    #[test]
    fn rejects_inconsistent_moments() {
        let a = 0.5;
        assert!(build_pdt(&moments(0.5, 0.2, a, 0.0), a, None, 1e5).is_err());
        assert!(build_pdt(&moments(0.5, 0.6, a, 0.0), a, None, 1e5).is_err());
        assert!(build_pdt(&moments(1.5, 0.9, a, 0.0), a, None, 1e5).is_err());
    }

    #[test]
    fn conditional_moment_decay_matches_displaced_beam_within_tolerance() {
        // the conditional mean at offset r0 follows
        // eta0 exp[-(r0/R)^lambda]; compare against the transmittance of a
        // Gaussian beam of radius W displaced by r0 (2-D quadrature oracle)
        let a = 0.5f64;
        let w = 0.8f64;
        let (r_scale, lambda) = shape_params_from_geometry(a, w).unwrap();
        let eta_displaced = |r0: f64| {
            // eta(r0) = int over aperture of 2/(pi W^2) exp(-2|r - r0|^2/W^2)
            integrate(
                |r: f64| {
                    let ang = integrate(
                        |phi: f64| {
                            let dx = r * phi.cos() - r0;
                            let dy = r * phi.sin();
                            (-2.0 * (dx * dx + dy * dy) / (w * w)).exp()
                        },
                        0.0,
                        2.0 * std::f64::consts::PI,
                        0.0,
                        1e-9,
                    );
                    r * ang.value
                },
                0.0,
                a,
                0.0,
                1e-8,
            )
            .value
                * 2.0
                / (std::f64::consts::PI * w * w)
        };
        let eta_c = eta_displaced(0.0);
        for &r0 in &[0.2 * a, 0.5 * a, a] {
            let fit = eta_c * (-(r0 / r_scale).powf(lambda)).exp();
            let exact = eta_displaced(r0);
            assert_relative_eq!(fit, exact, max_relative = 0.03);
        }
    }
}
