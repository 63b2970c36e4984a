//! Transformation sequential Monte Carlo.
//!
//! An SMC sampler that moves a weighted particle cloud through a sequence of
//! targets living on spaces of different dimension. Between consecutive
//! targets every particle is pushed through a deterministic transformation
//! (after drawing any auxiliary variables it needs), and the mismatch between
//! the pushed-forward density and the next target is removed gradually along
//! a geometric bridge whose exponents are placed adaptively using the
//! conditional effective sample size.
//!
//! Two applications are provided:
//!
//! * [`gmm`]: marginal likelihoods of univariate Gaussian mixtures with
//!   `k = 1, 2, ...` components, moving between models by birth or split
//!   transformations.
//! * [`coalescent`]: online inference of a coalescent time-tree and
//!   mutation rate, adding one aligned sequence per stage.
//!
//! [`io`] holds configuration, data ingestion and result emission used by the
//! `tsmc` command-line tool.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod coalescent;
pub mod error;
pub mod gmm;
pub mod io;
pub mod numeric;
pub mod smc;

pub use error::{Error, Result};
