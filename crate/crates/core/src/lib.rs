//! Robust scatter estimation for elliptical data: the spatial sign covariance
//! matrix, Tyler's M-estimator, the eigenvalue bias map between them and the
//! asymptotic efficiency of their eigenprojections.
//!
//! The crate is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod linalg;
mod quad;
pub mod sampling;
pub mod special;

pub use error::{Result, ScatterError};
