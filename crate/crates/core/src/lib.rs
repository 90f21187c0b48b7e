//! Braids `β_{n,p}`, their metallic stretch factors, and the symmetric
//! periodic orbits of the planar `2n`-body problem that realize them.

// `!(x > y)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod braid;
pub mod exec;
pub mod extract;
pub mod nbody;
pub mod shape;
pub mod stretch;

pub use braid::{BraidError, BraidWord, Permutation};
pub use exec::Execution;
