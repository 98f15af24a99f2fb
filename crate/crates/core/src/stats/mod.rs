//! Chi-square distribution functions, reproducible random streams, and the
//! samplers behind the simulation families.

mod chi_square;
mod rng;
mod sampling;

pub use chi_square::{chi_square_quantile, chi_square_sf, ln_gamma, ChiSquare};
pub use rng::RngStream;
pub use sampling::{sample_mvexp, sample_mvnormal, sample_mvt};
