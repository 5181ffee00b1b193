//! Max k-cut workbench: formulations, relaxation bounds, exact solvers and
//! empirical certification of relaxation-strength results.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod certify;
pub mod chordal;
pub mod combinatorics;
pub mod exact;
pub mod formulations;
pub mod graph;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod polytopes;
pub mod relaxations;
