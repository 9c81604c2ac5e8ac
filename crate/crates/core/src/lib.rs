pub mod dense;
pub mod error;
pub mod fft;
pub mod grid;
pub mod inversion;
pub mod ops;
pub mod potential;
pub mod quad;
pub mod specfun;
pub mod threshold;
pub mod verify;
pub mod waveop;

pub use error::{Error, Result};
pub use num_complex::Complex64 as c64;
