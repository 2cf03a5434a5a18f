//! Training-data obfuscation workbench.
//!
//! Two customer-side defenses are provided in [`obfuscate`]: per-sample
//! Gaussian noise on sensitive individual samples, and negative-sample
//! augmentation of sensitive groups. [`attacks`] implements the four attacks
//! they are measured against (model memorization, membership inference, model
//! inversion, and model classification / property inference) on top of the
//! small learners in [`model`]. [`harness`] wires everything into
//! reproducible, seeded experiments driven by a JSON config.

pub mod attacks;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod obfuscate;
pub mod seed;

pub use dataset::{Dataset, Domain, GroupSpec, Sample, SensitiveSelection};
pub use error::{Error, Result};
pub use model::{Activation, Architecture, Model, ModelSpec, TrainConfig};
