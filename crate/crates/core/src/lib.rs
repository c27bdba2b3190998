//! Design, simulation and estimation for multibrand geographic advertising
//! experiments.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs and an explicit random stream; file formats,
//! parallel study orchestration and the command line live in the `geoexp`
//! crate.
//!
//! * [`design`]: balanced ±1 assignment matrices, the margin-preserving swap
//!   chain that scrambles them, correlation diagnostics, collision checks and
//!   the growth constructions for collision-free designs.
//! * [`sim`]: the Gamma sales model used to generate synthetic GEO data.
//! * [`estimation`]: weighted least squares per brand, pooled returns and the
//!   GEO-responsiveness model.
//! * [`shrinkage`]: SURE-tuned shrinkage toward the across-brand mean.
//! * [`bayes`]: a conjugate Gibbs sampler for the hierarchical model.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod bayes;
pub mod design;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod seed;
pub mod shrinkage;
pub mod sim;
pub mod special;

pub use design::{CorrelationSummary, DesignMatrix, ValidationReport};
pub use error::{Error, Result};
pub use estimation::{FitResult, GeoResponseFit, PooledEstimate};
pub use shrinkage::ShrinkageResult;
pub use sim::{Dataset, GeoProfile, SimConfig};
