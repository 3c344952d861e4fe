//! Special functions used throughout the channel model.
//!
//! Everything here is plain `f64` with accuracy targets of roughly 1e-12
//! absolute on the argument ranges the model actually exercises:
//!
//! * Bessel functions `J0`, `J1` (power series below the crossover,
//!   Hankel asymptotic expansion above),
//! * exponentially scaled modified Bessel functions `e^-x I0(x)`,
//!   `e^-x I1(x)` (needed by the truncated log-normal shape parameters,
//!   where the unscaled values overflow),
//! * the standard normal CDF via `erf`/`erfc`,
//! * the generalized hypergeometric series 2F3 with compensated summation.

use std::f64::consts::PI;

/// Crossover between the power series and the asymptotic expansion for J0/J1.
const BESSEL_J_SERIES_CUTOFF: f64 = 12.0;

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < BESSEL_J_SERIES_CUTOFF {
        // J0(x) = sum_k (-1)^k (x^2/4)^k / (k!)^2
        let q = 0.25 * x * x;
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs().max(1.0) {
            term *= -q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        bessel_j_asymptotic(x, 0)
    }
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let val = if ax < BESSEL_J_SERIES_CUTOFF {
        // J1(x) = (x/2) sum_k (-1)^k (x^2/4)^k / (k! (k+1)!)
        let q = 0.25 * ax * ax;
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        let mut k = 1.0;
        while term.abs() > 1e-18 * sum.abs().max(1.0) {
            term *= -q / (k * (k + 1.0));
            sum += term;
            k += 1.0;
        }
        0.5 * ax * sum
    } else {
        bessel_j_asymptotic(ax, 1)
    };
    if x < 0.0 {
        -val
    } else {
        val
    }
}

/// Hankel asymptotic expansion for J_nu, nu in {0, 1}, valid for large x.
///
/// J_nu(x) ~ sqrt(2/(pi x)) [P cos(x - nu pi/2 - pi/4) - Q sin(...)],
/// where P and Q collect the even/odd terms of the divergent tail. The
/// series is truncated at its smallest term, which for x >= 12 is far below
/// 1e-13.
fn bessel_j_asymptotic(x: f64, nu: u32) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..30u32 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (8.0 * kf * x);
        if term.abs() >= prev {
            break; // divergent tail reached its minimum
        }
        prev = term.abs();
        // sign pattern: terms 1,2 negative; 3,4 positive; ...
        let signed = if (k / 2) % 2 == 1 { -term } else { term };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (nu as f64) * 0.5 * PI - 0.25 * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Exponentially scaled modified Bessel function `e^-x I0(x)`, x >= 0.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 15.0 {
        // plain series times the scale factor; no overflow below x = 15
        let q = 0.25 * x * x;
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        let mut k = 1.0;
        while term > 1e-18 * sum {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // I0(x) ~ e^x/sqrt(2 pi x) sum_k a_k / x^k with a_k from the
        // standard recurrence; all terms positive for nu = 0.
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        for k in 1..30u32 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            term *= odd * odd / (8.0 * kf * x);
            sum += term;
            if term < 1e-17 {
                break;
            }
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// Exponentially scaled modified Bessel function `e^-x I1(x)`, x >= 0.
pub fn bessel_i1_scaled(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 15.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        let mut k = 1.0;
        while term > 1e-18 * sum {
            term *= q / (k * (k + 1.0));
            sum += term;
            k += 1.0;
        }
        0.5 * x * sum * (-x).exp()
    } else {
        // I1(x) ~ e^x/sqrt(2 pi x) sum_k (-1)^k a_k(1)/x^k,
        // a_k(1) = (4 - 1)(4 - 9)...(4 - (2k-1)^2)/(k! 8^k)
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        for k in 1..30u32 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            term *= -(4.0 - odd * odd) / (8.0 * kf * x);
            sum += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
        sum / (2.0 * PI * x).sqrt()
    }
}

/// Error function, |error| < 1e-15 over the real line.
pub fn erf(x: f64) -> f64 {
    1.0 - erfc(x)
}

/// Complementary error function via Maclaurin series (small x) or the
/// Lentz-evaluated continued fraction (large x).
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 1.5 {
        // erf(x) = 2/sqrt(pi) sum_k (-1)^k x^(2k+1) / (k! (2k+1))
        let mut term = x;
        let mut sum = x;
        let mut k = 1.0;
        while term.abs() > 1e-18 {
            term *= -x * x / k;
            sum += term / (2.0 * k + 1.0);
            k += 1.0;
        }
        1.0 - 2.0 / PI.sqrt() * sum
    } else {
        // erfc(x) = e^-x^2/sqrt(pi) * 1/(x + 1/(2x + 2/(x + 3/(2x + ...))))
        // evaluated bottom-up with a fixed depth that is ample for x >= 1.5.
        let mut f = x;
        for k in (1..=60u32).rev() {
            let kf = k as f64;
            if k % 2 == 1 {
                f = x + kf / f;
            } else {
                f = 2.0 * x + kf / f;
            }
        }
        (-x * x).exp() / (PI.sqrt() * f)
    }
}

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Generalized hypergeometric function 2F3(a1, a2; b1, b2, b3; x) by direct
/// power series with Kahan-compensated summation.
///
/// The series is alternating for x < 0 with terms decaying like
/// |x|^k / k!^3, so it converges for any finite x; significance loss limits
/// practical use to |x| <~ a few hundred. Callers needing very large
/// negative arguments should integrate the underlying Bessel representation
/// instead (see `beam::scintillation`).
pub fn hyp2f3(a1: f64, a2: f64, b1: f64, b2: f64, b3: f64, x: f64) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut comp = 0.0f64; // Kahan compensation
    let mut max_term = 1.0f64;
    for k in 0..500u32 {
        let kf = k as f64;
        term *= (a1 + kf) * (a2 + kf) * x / ((b1 + kf) * (b2 + kf) * (b3 + kf) * (kf + 1.0));
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        max_term = max_term.max(term.abs());
        if term.abs() < 1e-17 * sum.abs().max(1.0) && kf > a1.abs() + a2.abs() {
            break;
        }
    }
    sum
}

/// Binary (Shannon) entropy in bits, H(p) = -p log2 p - (1-p) log2 (1-p).
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}
