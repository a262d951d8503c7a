//! Exact construction and verification of tree-like path certificates.
//!
//! A path is *tree-like* when it admits a height function `h` with
//! `d(α(t), α(s)) ≤ h(t) + h(s) − 2·inf h` over `[s, t]`; equivalently (for
//! Lipschitz factorizations) when it factors through a loop in an ℝ-tree.
//! This crate builds a tower of metric simplicial trees, simplicial paths,
//! and 1-Lipschitz planar maps whose plane curves converge to a space-filling
//! curve on a right triangle, and checks all the finite-level bounds of that
//! construction exactly — there is no floating point anywhere in a
//! verification path, only dyadic rationals and elements of ℚ(√2).
//!
//! The headline computation: the leg curve and the hypotenuse curve of the
//! triangle are each certified tree-like equivalent to every level-n
//! approximant, while their concatenation (a simple closed curve) is refuted.
//!
//! Module map:
//! - [`exactnum`]: dyadic rationals, ℚ(√2), exact √-vs-quad comparison;
//! - [`mtree`]: rooted metric simplicial trees, subdivision, retractions;
//! - [`plcurve`]: tree paths, planar maps, plane paths, sup-distance, length,
//!   density;
//! - [`construct`]: the tower and its parameterization checks;
//! - [`treelike`]: height functions, the tree-like verifier, quotient
//!   dendrites, the polygonal-loop decision;
//! - [`state`]: the serialized state format with content digests;
//! - [`suite`]: the aggregated verification run used by the CLI.

pub mod construct;
pub mod exactnum;
pub mod mtree;
pub mod plcurve;
pub mod state;
pub mod suite;
pub mod treelike;
