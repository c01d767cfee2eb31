//! Simulation kernels for the critical frog model and critical first passage
//! percolation on infinite lattices and regular trees.
//!
//! Every random quantity is a pure function of a seed, a stream tag and a
//! canonical identifier (an edge, a frog and its step index, a replica), so
//! simulations are replayable bit for bit and independent of how replicas are
//! scheduled across threads.
//!
//! Module map:
//!
//! * [`substrate`]: graphs with lazy neighbour enumeration, canonical edge
//!   keys, norms and the seeded [`rng::WeightField`].
//! * [`percolation`]: p-open cluster exploration, tail surveys and the
//!   oriented crossing machinery (edge speed, correlation length, exponent fit).
//! * [`fpp`]: passage-time distributions, Dijkstra passage times, passage time
//!   to infinity traces and the summability criteria.
//! * [`frog`]: the event-driven critical frog model.
//! * [`embedded`]: the embedded subprocesses (oriented jump chain, three-walk
//!   hitting time, half-space chain, leaf Galton-Watson tree).

// `!(x > 0.0)` is how parameters reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod embedded;
pub mod error;
pub mod fpp;
pub mod frog;
pub mod percolation;
pub mod replica;
pub mod rng;
pub mod stats;
pub mod substrate;

pub use error::{Error, Result};
pub use rng::{StreamTag, WeightField};
pub use substrate::{DAryTree, EdgeId, EdgeKey, Graph, Lattice, Point, Topology, TreeVertex};
