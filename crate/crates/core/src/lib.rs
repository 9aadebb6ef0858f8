pub mod classify;
pub mod config;
pub mod error;
pub mod invariants;
pub mod linalg;
pub mod map_model;
pub mod normalize;
pub mod pontryagin;
pub mod suite;

pub use config::{Config, Tolerances};
pub use error::{Error, Result};
pub use map_model::{MapSpec, SphereMapSpec};
