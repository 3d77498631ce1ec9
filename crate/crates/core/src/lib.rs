//! Numerical laboratory for k-list estimation.
//!
//! A centralized estimator sees one observation and emits `k` candidates
//! (posterior vector quantization); the decentralized benchmark lets `k`
//! agents each apply the MMSE rule to their own conditionally i.i.d.
//! observation. Both are scored by the best-candidate distortion
//! `E[min_i ||X - X_i||^2]`.
//!
//! * [`model`]: isotropic additive Gaussian model and a radial power-law error law.
//! * [`quantizer`]: k-means++ / Lloyd codebooks and min-of-k evaluation.
//! * [`theory`]: closed-form high-rate predictions and small-ball lower bounds.
//! * [`montecarlo`]: seeded estimators for both distortions and exponent fits.
//! * [`expcli`]: sweep runner, CSV results and SVG plots behind the `klist` binary.

pub mod error;
pub mod expcli;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod quantizer;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use model::{ErrorSampler, GaussianModel, PowerLawErrorModel};
pub use quantizer::{Codebook, FitConfig};
pub use rng::Seed;
