//! Toolchain for sensor-level human activity recognition.
//!
//! The pipeline runs from labeled six-axis IMU recordings to a deployable
//! decision-tree configuration, and closes the loop through an emulated IMU
//! with an embedded machine-learning core and an interrupt-driven host that
//! only ever sees classification labels.
//!
//! - [`ingest`]: CSV recordings and block-average decimation
//! - [`features`]: tumbling-window inertial features, batch and streaming
//! - [`tree`]: ANOVA ranking, RFE, CART training, config compilation, metrics
//! - [`sensor`]: register-level virtual IMU with interrupt line
//! - [`host`]: interrupt-driven host and mode timeline
//! - [`sim`]: co-scheduled replay of a recording through sensor and host
//!
//! Data-parallel loops use rayon when the `parallel` feature is enabled
//! (default); [`Exec`] selects the path explicitly.

pub mod error;
pub mod features;
pub mod host;
pub mod ingest;
mod par;
pub mod sensor;
pub mod sim;
pub mod tree;

pub use error::{Error, Result};
pub use par::Exec;
