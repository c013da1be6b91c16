pub mod error;
pub mod kapteyn;
pub mod metrics;
pub mod optimizer;
pub mod special;
pub mod waveform;
mod trig;

pub use error::{Error, Result};
