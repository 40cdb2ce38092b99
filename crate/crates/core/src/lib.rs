pub mod error;
pub mod matcore;
pub mod microstates;
pub mod ncalg;
pub mod rng;
pub mod scalar;
pub mod spectra;
pub mod theorems;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mat32 = matcore::Mat<f32>;
pub type Mat64 = matcore::Mat<f64>;
pub type SelfAdjoint32 = matcore::SelfAdjointMatrix<f32>;
pub type SelfAdjoint64 = matcore::SelfAdjointMatrix<f64>;
pub type Tuple32 = matcore::MatrixTuple<f32>;
pub type Tuple64 = matcore::MatrixTuple<f64>;
pub type Poly32 = ncalg::NcPoly<f32>;
pub type Poly64 = ncalg::NcPoly<f64>;
pub type BiPoly32 = ncalg::NcBiPoly<f32>;
pub type BiPoly64 = ncalg::NcBiPoly<f64>;
pub type Series32 = ncalg::PowerSeries<f32>;
pub type Series64 = ncalg::PowerSeries<f64>;
