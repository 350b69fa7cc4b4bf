//! Semantic information measures and solvers over discrete alphabets.
//!
//! The crate models the two parallel channels of a labeled source: the
//! Shannon channel P(y|x) of transition probabilities and the semantic
//! channel T(theta|x) of truth functions, one membership function per label.
//! On top of those it provides:
//!
//! - semantic Bayes prediction and truth/likelihood/distortion conversions
//!   ([`prob`]);
//! - Shannon and semantic mutual information with the exact decomposition
//!   I(X;Y) = I(X;Y_theta) + residual KL ([`measures`]);
//! - truth-function learning from sample distributions and the semantic
//!   classifier ([`learn`]);
//! - the MID alternating-minimization engine behind the rate-fidelity
//!   function R(G), rate-distortion variants, semantic channel capacity, and
//!   the gray-level compression experiment ([`rate`]);
//! - EM/EnM mixture fitting with convergence diagnostics and the semantic
//!   variational Bayes solver for latent marginals ([`mixture`]);
//! - goal-oriented information and constraint control ([`control`]);
//! - semi-supervised maximum-MI classification ([`maxmi`]);
//! - confirmation degrees from 2x2 contingency tables ([`confirm`]);
//! - capital growth entropy, the generalized Kelly ratio, and forecast
//!   information values ([`portfolio`]).
//!
//! All information quantities are reported in bits; convert with
//! [`base::LogBase`] at the boundary. Everything is deterministic and pure:
//! no interior mutability, no RNG, no wall-clock reads. With the default
//! `parallel` feature, batch entry points (`par_*`) fan out over rayon and
//! reduce with fixed tie rules, so they return bit-identical results to their
//! sequential counterparts.

pub mod base;
pub mod confirm;
pub mod control;
pub mod error;
pub mod learn;
pub mod mat;
pub mod maxmi;
pub mod measures;
pub mod mixture;
pub mod portfolio;
pub mod prob;
pub mod rate;

pub use base::LogBase;
pub use error::{Error, Result};
