//! Everything around the numeric core that touches the outside world:
//! image decoding, dataset layout, experiment harness, model files and the
//! synthetic benchmark generator. The `curveface` binary is a thin CLI over
//! this library.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod imgio;
pub mod model_io;
pub mod pgm;
pub mod synthetic;

pub use error::{Error, Result};
