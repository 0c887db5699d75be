//! Coupled complex Ginzburg–Landau / conservation-law dynamics on a 1D grid,
//! with energy-identity monitors and a variational standing-wave solver.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod coupling;
pub mod evolution;
pub mod grid;
pub mod io;
pub mod monitors;
pub mod standing_waves;
mod tridiag;
