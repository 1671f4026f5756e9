//! Sign-agnostic learning of implicit surfaces from raw geometry.
//!
//! The crate trains a small MLP `f(x; theta)` so that its zero level set
//! approximates raw input geometry (segment soups, point clouds, triangle
//! soups) without any inside/outside labelling. Supervision compares `f`
//! and its spatial gradient against the readily available *unsigned*
//! distance field of the input, up to sign.
//!
//! Modules follow the pipeline:
//!
//! * [`geometry`] — raw inputs, exact unsigned distance queries, and
//!   training-sample generation.
//! * [`net`] — the decoder MLP, geometric initialization, forward-mode
//!   spatial gradients, and exact parameter gradients.
//! * [`loss`] — sign-agnostic similarity measures, the SAL/SALD losses,
//!   and quadrature oracles for their minimal-length property.
//! * [`train`] — Adam optimization for single shapes and mini shape
//!   spaces with auto-decoder latent codes.
//! * [`extract`] — grid evaluation, marching squares and marching cubes.
//! * [`eval`] — Chamfer and normal-angle distances with surface sampling.
//! * [`verify`] — numerical property sweeps backing the theory claims.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature enables faster float intrinsics and the `parallel` feature fans
//! batch work out over a thread pool with a fixed-order reduction, so
//! results are bitwise independent of thread count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod eval;
pub mod extract;
pub mod geometry;
pub mod linalg;
pub mod loss;
pub mod net;
pub mod train;
pub mod verify;
