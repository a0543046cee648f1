//! Time grids, memory kernels, histories, trajectories and the memory quadrature.

mod grid;
mod history;
pub(crate) mod kernel;
mod quadrature;
mod trajectory;

pub use grid::TimeGrid;
pub use history::{HistoryFunction, HistorySpec};
pub use kernel::{KernelSpec, MemoryKernel};
pub use quadrature::{convolve_memory, trapezoid, trapezoid_weights};
pub use trajectory::{fmt_num, Trajectory};

pub(crate) use kernel::KernelTable;
pub(crate) use quadrature::convolve_with_table;

/// Evaluate `M(t)`.
pub fn eval_kernel(kernel: &MemoryKernel, t: f64) -> crate::error::Result<crate::linalg::Mat> {
    kernel.eval(t)
}
