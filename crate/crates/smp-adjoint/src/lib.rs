//! Gradient-based topology optimization engine for shape-memory polymers.
//!
//! The crate couples an implicit finite-element simulation of the SMP
//! thermo-mechanical programming cycle with a time-dependent adjoint
//! sensitivity sweep whose time-coupling terms are evaluated either by a
//! faithful recursive depth-first tracer or by a memoized equivalent with
//! polynomial cost. An independent finite-difference oracle verifies the
//! adjoint gradients element by element, and an optimality-criteria loop
//! consumes them for density updates.
//!
//! Start from [`config::RunConfig`] and the `examples/` directory; the
//! `smp-adjoint` binary wraps the same entry points for batch use.

pub mod adjoint;
pub mod bench;
pub mod config;
pub mod error;
pub mod fd;
pub mod fea;
pub mod material;
pub mod mesh;
pub mod io;
pub mod optimize;
pub mod problem;
pub mod run;
pub mod schedule;
pub mod voigt;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};

/// Builds a rayon thread pool with `workers` threads (0 = rayon default).
/// All element-parallel code in this crate produces bitwise-identical
/// results for any worker count; the pool only bounds parallelism.
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("failed to build worker pool: {e}")))
}
