//! Interactive Lévy-flight model of collective attention.
//!
//! Walkers perform Lévy flights on a 2-D lattice and survive only on cells
//! that hold resources, which they themselves deposit. Their trajectories
//! form an attention flow network whose growth with community size follows
//! power laws; the fitted exponents can be inverted back to the walkers'
//! deposit probability and flight exponent.

pub mod attention_flow;
pub mod cli;
pub mod empirical;
pub mod error;
pub mod inference;
pub mod interest_space;
pub mod levy_sampler;
pub mod plot;
pub mod scaling;
pub mod simulation;

pub use error::{Error, Result};

/// Runs `f` on a dedicated pool of `jobs` threads (all cores when `None`).
/// Results never depend on the thread count.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
