use crate::base::kernel::{KernelTable, MemoryKernel};
use crate::base::Trajectory;
use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Composite trapezoid weights for `count` equally spaced nodes.
pub fn trapezoid_weights(count: usize, dt: f64) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![0.0],
        _ => {
            let mut w = vec![dt; count];
            w[0] = 0.5 * dt;
            w[count - 1] = 0.5 * dt;
            w
        }
    }
}

/// Composite trapezoid of equally spaced scalar samples.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    trapezoid_weights(values.len(), dt)
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

/// Trapezoid approximation of `int_0^{t_k} M(t_k - s) y(s) ds` from the samples of `traj`.
pub fn convolve_memory(traj: &Trajectory, kernel: &MemoryKernel, t_index: usize) -> Result<Vector> {
    let k = t_index as isize;
    if !traj.contains(0) || !traj.contains(k) || t_index > traj.grid.n_steps {
        return Err(Error::Range(format!(
            "t_index {t_index} outside the trajectory's [0, T] segment"
        )));
    }
    if kernel.dim() != traj.dim() {
        return Err(Error::Shape(format!(
            "kernel is {0}x{0} but trajectory states have dimension {1}",
            kernel.dim(),
            traj.dim()
        )));
    }
    let table = KernelTable::new(kernel, traj.grid.dt, t_index + 1)?;
    Ok(convolve_with_table(&table, traj.grid.dt, t_index, |j| traj.node(j as isize)))
}

pub(crate) fn convolve_with_table<'a>(
    table: &KernelTable,
    dt: f64,
    k: usize,
    y: impl Fn(usize) -> &'a Vector,
) -> Vector {
    let mut acc = Vector::zeros(y(0).len());
    if k == 0 || table.is_zero() {
        return acc;
    }
    table.axpy(k, 0.5 * dt, y(0), &mut acc);
    for j in 1..k {
        table.axpy(k - j, dt, y(j), &mut acc);
    }
    table.axpy(0, 0.5 * dt, y(k), &mut acc);
    acc
}
