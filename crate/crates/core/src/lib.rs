//! Exact desk-scale kernels for branch-indexed abelian group presentations,
//! constructive freeness and non-freeness certificates, dyadic ultrametrics on
//! permutation windows, equation-chain solving in complete metric algebras,
//! sequence codecs, Specker-group embeddings, and finite-model stability ranks.
//!
//! Everything here is computed exactly: coefficients are arbitrary-precision
//! rationals, distances are dyadic values, and every decision procedure either
//! certifies its answer on the finite window it was given or reports a typed
//! "insufficient depth"-style error. No floating point anywhere.
//!
//! The crate is `no_std`-compatible (with `alloc`); the companion CLI crate
//! carries all IO and file formats.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod eqsolver;
pub mod freeness;
pub mod freewords;
pub mod fsigma;
pub mod lattice;
pub mod metricspace;
pub mod shygroup;
pub mod specker;
pub mod stability;

pub use metricspace::DyadicDist;
