//! One-variable laws: logarithmic energy, single-variable free entropy,
//! change-of-variables corrections and conjugate variables.

mod conjugate;
mod energy;
mod field;
mod freeconv;
mod measure;

pub use conjugate::{conjugate_variable, inner_product_stationarity, ConjugateVariable};
pub use energy::{
    chi_from_energy, chi_single, cov_correction, histogram_log_energy, log_energy, log_energy_closed_form,
    log_energy_with, pushforward, DERIVATIVE_FLOOR,
};
pub use field::ScalarField;
pub use freeconv::{bernoulli_semicircle, bernoulli_semicircle_density};
pub use measure::{kolmogorov_distance, Discretized, SpectralMeasure, DEFAULT_CELLS};
