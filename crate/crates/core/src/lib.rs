//! Functional time series modelling of spatial forecast errors.
//!
//! Each day's forecast errors, observed at scattered city locations, are
//! smoothed into a surface on a clamped cubic tensor-product B-spline basis.
//! The daily coefficient vectors are mean-centered and reduced by SVD to a
//! handful of spatial basis functions `φ_k`. The day-by-day weights `β_kt`
//! on those functions follow independent AR(1)+GARCH(1,1) processes with
//! Student-t innovations, which gives one-step-ahead predictions of the whole
//! error field and a way to bias-correct raw forecasts.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. File formats, configuration and the command line live in the
//! companion `ftscast` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is how NaN is rejected alongside the range check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod coefficients;
pub mod diagnostics;
mod error;
pub mod garch;
mod linalg;
pub mod model;
pub mod optim;
pub mod panel;
pub mod predict;
pub mod simulate;
pub mod spatial;
pub mod spline;
pub mod stats;
pub mod surface;

pub use error::{Error, Result};
pub use panel::{Day, Location, MaskedMatrix, ObservationPanel};
pub use spline::{KnotVector, TensorRow, TensorSplineBasis};
