//! Càdlàg path algebra, Skorohod moduli, first-passage time changes,
//! subordinator samplers and Monte Carlo checks for martingale central limit
//! theorems with random time-changed limits.

pub mod convtest;
pub mod counterexample;
pub mod error;
pub mod levy;
pub mod mclt;
pub mod path;
pub mod rng;
pub mod skorohod;
pub mod stats;
pub mod timechange;

pub use error::{Error, Result};
pub use path::{CadlagPath, CombineOp, Segment, TimeGrid};
pub use rng::RngStream;
