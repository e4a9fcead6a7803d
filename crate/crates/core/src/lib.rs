//! Classical indirect energies of fixed densities, posed as multi-marginal
//! optimal transport problems, and the uniform electron gas experiments built
//! on them.

pub mod error;
pub mod gc;
pub mod quadrature;
pub mod mmot;
pub mod monge1d;
pub mod riesz;
pub mod thermo;
pub mod trial;

pub use error::{Error, Result};
pub use riesz::{
    direct_term, kernel_constant, DiagonalRule, Domain, GridDensity, KernelMatrix, RieszKernel, SiteSet,
};

/// Library version embedded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
