//! Random geometric irrigation graphs on the unit torus.
//!
//! Sampling, connected components, the cell/box discretization, the
//! exploration that builds a web of node and link events, mixed site/bond
//! percolation, branching-process analysis and closed-form bounds.

pub mod bounds;
pub mod components;
pub mod error;
pub mod geometry;
pub mod gw;
pub mod harness;
pub mod irrigation;
pub mod lattice;
pub mod percolation;
pub mod rng;
pub mod web;

pub use error::{Error, Result};
pub use geometry::{neighbors_within, sample_points, torus_distance, GridIndex, Point, TorusPoints};
pub use irrigation::{sample_irrigation, undirected_view, IrrigationDigraph, OffspringLaw, SelfSelection, UndirectedGraph};
