//! Wavelet bases and generalised Fourier bases for fractal measures coming from
//! one-dimensional iterated function systems whose branches need not be affine.
//!
//! The crate is organised bottom-up:
//!
//! - [`ifs`]: contractions, gap-filled systems, the scaling map `σ` and digit coding.
//! - [`cell`]: exact measure algebra of the cells `τ_ω(C) + m` and quadrature
//!   against the self-similar probability measure.
//! - [`wavelet`]: filters, the operators `T` and `U`, father and mother wavelets,
//!   Gram matrices and energy decompositions.
//! - [`conjugacy`]: the homeomorphism intertwining two gap-filled systems with the
//!   same number of branches.
//! - [`fourier`]: spectra of homogeneous linear Cantor measures and their transport
//!   through a conjugacy.
//!
//! All cell measures are computed as exact rationals; only coefficients are floating
//! point.

#![forbid(unsafe_code)]

pub mod budget;
pub mod cell;
pub mod conjugacy;
pub mod error;
pub mod fourier;
pub mod ifs;
pub mod numeric;
pub mod systems;
pub mod wavelet;

pub use budget::Budget;
pub use cell::{Cell, CellFunction};
pub use conjugacy::Conjugacy;
pub use error::{Error, Result};
pub use fourier::SpectralPair;
pub use ifs::{Alphabet, Contraction, IFSystem, Membership, Word};
pub use wavelet::WaveletSystem;

/// Library version embedded in CLI reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
