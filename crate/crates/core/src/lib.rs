pub mod classifiers;
pub mod data;
pub mod distance;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod model_io;
pub mod rng;
pub mod sampling;
