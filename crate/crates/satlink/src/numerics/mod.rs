//! Shared numerical machinery: quadrature, special functions, root
//! finding, spline caching and a reproducible Monte Carlo driver.

pub mod mc;
pub mod quad;
pub mod roots;
pub mod special;
pub mod spline;

pub use mc::{McConfig, McEstimate};
pub use quad::{integrate, integrate_to_inf, QuadResult};
pub use roots::bisect;
pub use special::{
    bessel_i0_scaled, bessel_i1_scaled, bessel_j0, bessel_j1, binary_entropy, erf, erfc, hyp2f3,
    normal_cdf,
};
pub use spline::CubicSpline;
