//! Trigonometric polynomials on the circle and the norms used on them.

mod norms;
mod poly;
mod weak;

pub use norms::{
    lp_norm, luxemburg_psi2, psi_a, rider_norm, sup_norm, sup_norm_on_grid, NormEstimate,
    NormMethod, OrliczConfig, MAX_QUADRATURE_POINTS, RIDER_OVERSAMPLE,
};
pub use poly::TrigPolynomial;
pub use weak::{weak_l2_norm, weak_l2_norm_with, WeakNormOptions, DEFAULT_C0};

pub(crate) use norms::solve_luxemburg;
pub(crate) use poly::{fft_in_place, grid_values};
