//! Shared numerical kernels.

mod fit;
mod quadrature;
mod roots;
mod sum;

pub use fit::{fit_lorentzian, LorentzianFit};
pub use quadrature::{
    integrate_adaptive, simpson_weights, AdaptiveQuadrature, QuadValue, QuadratureResult,
    UniformGrid,
};
pub use roots::find_root_bracketed;
pub use sum::{CompensatedSum, Summable};
