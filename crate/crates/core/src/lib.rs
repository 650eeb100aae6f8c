//! Spectral quasi-Newton solver and a-posteriori verifier for hull functions
//! of Frenkel-Kontorova type chains with quasi- and almost-periodic media.
//!
//! Functions on the torus are truncated Fourier series over a weighted
//! multi-index ball ([`index_space`], [`fourier`]). The short- and long-range
//! equilibrium equations are solved by quasi-Newton iterations whose linear
//! steps reduce to constant-coefficient difference equations
//! ([`cohomology`]). [`continuation`] adds frequencies one at a time and
//! [`harness`] holds configuration, persistence and two brute-force oracles.

// negated float comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cohomology;
pub mod continuation;
pub mod diophantine;
pub mod error;
pub mod fourier;
pub mod harness;
pub mod index_space;
pub mod long_range;
pub mod report;
pub mod short_range;

pub use error::{CohomologyError, DiophantineError, IndexError, SeriesError, SolveError};
pub use fourier::{FourierSeries, FrequencyBasis};
pub use index_space::{IndexSet, MultiIndex};
