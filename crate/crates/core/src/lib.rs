//! Numerical laboratory for diffraction by a glancing boundary on an
//! asymptotically anti-de Sitter half-space.
//!
//! The crate covers the Fourier-side spectral ODE (Frobenius series, outgoing
//! closure, Airy closed form), WKB phases and transport terms, the model
//! layer solvers, bicharacteristic flows, a semiclassical resolvent probe and
//! inverse Fourier synthesis of the physical field with a wavefront detector.

pub mod cli;
pub mod eikonal;
pub mod error;
pub mod frobenius;
pub mod io;
pub mod model;
pub mod normal_ops;
pub mod ode;
pub mod rays;
pub mod resolvent_probe;
pub mod specfun;
pub mod synthesis;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
