//! A numerical laboratory for optimal-transport geodesics on model spaces.
//!
//! The crate constructs Wasserstein geodesics between discretized measures,
//! evolves Kantorovich potentials along them, slices the transport into level
//! classes of the potential, and certifies the family of inequalities and
//! identities that govern how densities decompose along those slices:
//! distortion-coefficient laws, inf-convolution evolution identities, cyclical
//! monotonicity, curvature-dimension conditions for the interpolated density
//! and for its codimension-one factor, and linearity of the level-speed
//! factor for a special transport class.
//!
//! Everything is organized around *scenarios* with closed-form backstops
//! (translations, dilations, radial collapse, weighted 1D intervals), so every
//! estimator in the crate can be cross-validated against an independent route
//! to the same number. The `harness` module wires scenarios and checks into a
//! reproducible, seedable report pipeline; the `wglab` binary exposes it on the
//! command line.
//!
//! Start with the runnable examples (`cargo run --release --example ...`):
//! each one demonstrates a single capability end to end.

pub mod decomposition;
pub mod disintegration;
pub mod distortion;
pub mod harness;
pub mod num;
pub mod ot;
pub mod potential;
pub mod scenario;
pub mod spaces;
