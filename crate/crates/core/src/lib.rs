//! Transfer operators, invariant densities and linear response for one-dimensional
//! expanding and unimodal maps.
//!
//! The crate is organized bottom-up: [`maps`] defines the dynamical systems,
//! [`transfer`] discretizes their transfer operators, [`response`] evaluates the
//! derivative of the invariant measure along a family, and [`experiments`]
//! runs parameter scans.

pub mod dd;
pub mod error;
pub mod experiments;
pub mod family;
pub mod io;
pub mod maps;
pub mod par;
pub mod response;
pub mod transfer;

pub use error::{Error, Result};
pub use family::Family;
