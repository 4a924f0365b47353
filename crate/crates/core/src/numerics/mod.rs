//! Numerical kernels shared by the models and oracles.

mod normal;
mod paths;
mod quadrature;
mod roots;

pub use normal::{norm_cdf, norm_pdf, std_normal_cdf};
pub use paths::{path_rng, simulate_gbm, PathSet, TimeGrid};
pub use quadrature::{integrate, integrate_with, Quadrature, DEFAULT_MAX_DEPTH};
pub use roots::{bisect_boundary, find_root, first_crossing};
