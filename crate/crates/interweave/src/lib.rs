//! Numerical calculus for Markov semigroup interweaving relations.
//!
//! An *intertwining* relation between two Markov semigroups `P` and `P̃` is a
//! Markov kernel `Λ` with `P_t Λ = Λ P̃_t` for all `t ≥ 0`. An *interweaving*
//! relation strengthens this: a second kernel `Λ̃` intertwines in the reverse
//! direction and the composition factorizes the semigroup at an independent
//! random time `τ`, the *warm-up time*:
//!
//! ```text
//! Λ Λ̃ = P_τ = ∫ P_t  P(τ ∈ dt)
//! ```
//!
//! This crate makes those identities executable at desk scale:
//!
//! * [`polyop`] — exact operator calculus on degree-truncated polynomial
//!   spaces. Generators, semigroups and kernels become triangular matrices,
//!   so intertwining/interweaving identities can be checked to roundoff.
//! * [`kernels`] — the same kernels as samplers, plus the two-point-space
//!   construction with its optimal warm-up time.
//! * [`gauss`] — affine-Gaussian kernel calculus for (possibly degenerate
//!   hypoelliptic) Ornstein-Uhlenbeck semigroups.
//! * [`semigroups`] — runnable semigroups: truncated birth-death chains,
//!   exact diffusion transition sampling, Gillespie paths, subordination and
//!   the interweaving-based sampler for the Laguerre diffusion.
//! * [`warmup`] — warm-up time laws: densities, samplers, Laplace
//!   transforms, complete-monotonicity and Bernstein checks.
//! * [`ergodics`] — φ-entropies, distances, functional-inequality constants
//!   and the decay / hypercontractivity transfer experiments.
//! * [`cutoff`] — cut-off phenomenon experiments for tensorized
//!   hypoelliptic OU families.
//!
//! All stochastic operations take an explicit [`rng::Stream`]; nothing uses a
//! global RNG, so every experiment is reproducible from a seed.

pub mod cutoff;
pub mod ergodics;
pub mod error;
pub mod gauss;
pub mod kernels;
pub mod linalg;
pub mod polyop;
pub mod rng;
pub mod semigroups;
pub mod special;
pub mod stats;
pub mod warmup;

pub use error::{Error, Result};
