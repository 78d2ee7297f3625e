// SPDX-License-Identifier: Apache-2.0

//! Closed geodesics on the modular surface attached to real quadratic
//! discriminants, and experiments on how subcollections of them equidistribute.

pub mod bqf;
pub mod cache;
pub mod collections;
pub mod error;
pub mod frame;
pub mod harness;
pub mod observables;
pub mod rng;
pub mod surface;
pub mod units;

pub use error::{Error, Result};
