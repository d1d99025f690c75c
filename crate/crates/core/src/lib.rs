//! Switched adaptive control for quadrotor vertical operations.
//!
//! A quadrotor that picks up or drops payloads changes mass and inertia
//! abruptly. This crate models each payload configuration as one mode of a
//! switched Euler-Lagrange system and provides:
//!
//! - the six-DoF plant and its collocated four-DoF form ([`dynamics`]),
//! - per-mode controller synthesis and the adaptive robust control law
//!   ([`controller`], [`lyapunov`]),
//! - average-dwell-time thresholds and switching-signal certification
//!   ([`switching`]),
//! - a fixed-step closed-loop simulator and the stability monitors that
//!   check its traces ([`sim`], [`monitor`]).
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. File formats, CSV output and the command line live in the
//! `quadswitch` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so NaN fails every positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod controller;
pub mod disturbance;
pub mod dynamics;
mod error;
pub mod lyapunov;
pub mod monitor;
pub mod reference;
pub mod sim;
pub mod switching;
pub mod trajectory;

pub use error::{Error, Result};

pub type Matrix3 = nalgebra::Matrix3<f64>;
pub type Matrix4 = nalgebra::Matrix4<f64>;
pub type Matrix4x2 = nalgebra::Matrix4x2<f64>;
pub type Vector2 = nalgebra::Vector2<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type Vector4 = nalgebra::Vector4<f64>;
pub type Vector6 = nalgebra::Vector6<f64>;

/// Stacked-error dimension: four position errors followed by four rate errors.
pub type Matrix8 = nalgebra::SMatrix<f64, 8, 8>;
pub type Vector8 = nalgebra::SVector<f64, 8>;
