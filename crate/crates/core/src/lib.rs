//! Desk-scale machinery for weighted local Hardy spaces.
//!
//! The crate discretizes the constructive side of the theory on uniform
//! grids over `[-L, L]^n` (n = 1 or 2):
//!
//! - [`grid`]: cell-centered grids, cubes, midpoint quadrature, weighted norms;
//! - [`weights`]: local Muckenhoupt `A_p^loc` constants, duality/doubling
//!   diagnostics, critical-index tables, local BMO, the `A_p(phi)` class;
//! - [`maximal`]: the local Hardy-Littlewood maximal operator and grand
//!   maximal functions over finite test-function dictionaries;
//! - [`whitney`]: superlevel sets, dyadic Whitney covers, partitions of unity;
//! - [`czd`]: polynomial projections and Calderon-Zygmund decompositions at
//!   a single height;
//! - [`atoms`]: atom validation, the multi-height atomic decomposition,
//!   reconstruction, and finite decompositions;
//! - [`operators`]: strongly singular convolutions, commutators, order-zero
//!   pseudodifferential operators, and weighted boundedness harnesses;
//! - [`experiment`]: the batch experiment runner behind the CLI, with
//!   regression baselines and deterministic JSON/CSV artifacts.
//!
//! Every measured "constant" is exactly that: a measured number over an
//! exhaustively enumerated finite family, managed by regression baselines
//! rather than asserted absolutes. See the `examples/` directory for one
//! runnable program per capability.

// Guards written as `!(x > 0.0)` reject NaN, which `x <= 0.0` would let
// through; the indexed loops are deliberate in the numerical kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod atoms;
pub mod baseline;
pub mod config;
pub mod corpus;
pub mod czd;
pub mod error;
pub mod experiment;
pub mod family;
pub mod grid;
pub mod maximal;
pub mod operators;
pub mod report;
pub mod weights;
pub mod whitney;

pub use error::{Error, Result};
pub use grid::{weighted_lp_norm, Cube, Grid, SampledFunction};
pub use weights::{ap_loc_constant, ap_phi_constant, bmo_loc_norm, Weight, WeightDescriptor};
