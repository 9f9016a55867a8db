//! Numerical toolkit for linear parabolic systems with time-measurable
//! coefficients on periodic space-time boxes: fractional time operators, a
//! spectral solver for the localized problem, and checks of the local
//! regularity estimates satisfied by weak solutions.

pub mod analysis;
pub mod coefficients;
pub mod config;
pub mod error;
pub mod exponents;
mod fft;
pub mod fracops;
pub mod gehring;
pub mod grid;
pub mod holder;
pub mod rng;
pub mod run;
pub mod sample;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Field, Grid, ParabolicCylinder, Shape, TimeSeries};
