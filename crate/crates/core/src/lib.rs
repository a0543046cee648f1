//! Linear evolution equations with a point delay and a Volterra memory term,
//!
//! `y'(t) = A y(t) + A1 y(t-h) + int_0^t M(t-s) y(s) ds + B(t) u(t)`,
//!
//! and the machinery around their null controllability: implicit-Euler
//! simulation, the discrete adjoint, the forward/adjoint duality identity,
//! Gramian-based observability diagnostics, penalty synthesis of controls that
//! bring state and memory to rest, a 1-D heat application with a moving control
//! region, and Carleman weight evaluation.
//!
//! ```no_run
//! use delaymem::synthesis::{scalar_memory_instance, synthesize_control, SynthesisConfig};
//!
//! let sys = scalar_memory_instance(1.0 / 400.0)?;
//! let grid = sys.grid(1.0 / 400.0)?;
//! let r = synthesize_control(&sys, &grid, &SynthesisConfig::default())?;
//! assert!(r.converged);
//! # Ok::<(), delaymem::Error>(())
//! ```

pub mod adjoint;
pub mod base;
pub mod carleman;
pub mod cli;
pub mod duality;
pub mod error;
pub mod forward;
pub mod heat;
pub mod linalg;
pub mod observability;
pub mod rng;
pub mod synthesis;

pub use error::{Error, Result};
