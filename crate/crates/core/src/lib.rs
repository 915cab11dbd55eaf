//! One-dimensional semiclassical Schrödinger operators `-h²Δ + V` with
//! complex absorbing barriers: banded realizations, cutoff resolvent norms,
//! the two-piece gluing parametrix, continuation off the real axis and
//! phase-space diagnostics.
//!
//! Everything is generic over the real scalar (`f32` or `f64`); the aliases
//! below fix `f64`, which the oracle tolerances assume.

// `!(x > 0)` deliberately rejects NaN; the banded kernels index two arrays per loop.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod band;
pub mod continuation;
pub mod dense;
pub mod dump;
mod error;
pub mod factor;
pub mod fit;
pub mod gluing;
pub mod grid;
pub mod layout;
pub mod linmap;
pub mod microlocal;
pub mod operator;
pub mod potential;
pub mod profile;
pub mod resolvent;
pub mod scalar;
pub mod scene;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

pub type C64 = Cplx<f64>;
pub type Grid64 = grid::Grid<f64>;
pub type Layout64 = layout::SupportLayout<f64>;
pub type Potential64 = potential::PotentialFamily<f64>;
pub type Operator64 = operator::DiscreteOperator<f64>;
pub type Scene64 = scene::Scene<f64>;
pub type Discretization64 = scene::Discretization<f64>;
pub type NormCurve64 = resolvent::NormCurve<f64>;
pub type GluingSystem64 = gluing::GluingSystem<f64>;
pub type DiskCertificate64 = continuation::DiskCertificate<f64>;
pub type PhaseGrid64 = microlocal::PhaseGrid<f64>;
pub type WavefrontMask64 = microlocal::WavefrontMask<f64>;

pub type Scene32 = scene::Scene<f32>;
pub type Discretization32 = scene::Discretization<f32>;
