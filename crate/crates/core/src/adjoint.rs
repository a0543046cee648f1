//! Backward solver for the adjoint system
//!
//! `-w'(t) = A^T w(t) + A1^T w(t+h) + int_t^T M(s-t)^T w(s) ds - M~(T-t)^T z_T`,
//! `w(T) = w_T`, `w = 0` on `(T, T+h]`,
//!
//! with implicit Euler in reversed time and the future-memory integral by trapezoid.

use std::io::Write;

use crate::base::{fmt_num, trapezoid_weights, KernelTable, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::forward::DelaySystem;
use crate::linalg::{Mat, StepSolver, Vector};

/// Adjoint state on `[0, T+h]` and its observation `B(t)^T w(t)` on `[0, T]`.
#[derive(Debug, Clone)]
pub struct AdjointData {
    pub w_t: Vector,
    pub z_t: Vector,
    /// Nodes `0..=N+d`; zero past `N`.
    pub traj: Trajectory,
    /// `B(t_k)^T w(t_k)` for `k = 0..=N`.
    pub observation: Vec<Vector>,
    /// The same recurrence continued to nodes `-d..=-1` (empty when the
    /// kernels do not reach `T + h`).
    pub continuation: Vec<Vector>,
}

impl AdjointData {
    pub fn grid(&self) -> &TimeGrid {
        &self.traj.grid
    }

    /// `w(t_k)` for `k` in `-d..=N+d`, zero beyond `T`.
    pub fn w(&self, k: isize) -> Option<&Vector> {
        if k >= 0 {
            self.traj.at(k)
        } else {
            let d = self.continuation.len() as isize;
            if k >= -d {
                Some(&self.continuation[(k + d) as usize])
            } else {
                None
            }
        }
    }

    pub fn has_continuation(&self) -> bool {
        !self.continuation.is_empty()
    }

    /// Trapezoid `int_0^T |B^T w|^2 dt`.
    pub fn observation_energy(&self) -> f64 {
        let w = trapezoid_weights(self.observation.len(), self.grid().dt);
        w.iter()
            .zip(&self.observation)
            .map(|(w, o)| w * o.norm_squared())
            .sum()
    }

    /// CSV with header `t,w_1..w_n,obs_1..obs_m` over `[0, T+h]`; `obs` is zero past `T`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        let n = self.traj.dim();
        let m = self.observation.first().map_or(0, |o| o.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("w_{i}")));
        header.extend((1..=m).map(|i| format!("obs_{i}")));
        wr.write_record(&header)?;
        for (idx, w) in self.traj.samples.iter().enumerate() {
            let k = self.traj.first_index + idx as isize;
            let mut row = vec![fmt_num(self.grid().time(k))];
            row.extend(w.iter().map(|&x| fmt_num(x)));
            match self.observation.get(k as usize) {
                Some(o) => row.extend(o.iter().map(|&x| fmt_num(x))),
                None => row.extend((0..m).map(|_| fmt_num(0.0))),
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Precomputed operators for repeated adjoint solves on one grid.
pub(crate) struct AdjointStepper {
    grid: TimeGrid,
    n: usize,
    a1: Mat,
    sys_b: crate::forward::ControlMap,
    table: KernelTable,
    /// `M~(T - t_k)^T` for `k = -d..=N` (index `k + d`), or `0..=N` without continuation.
    forcing: Vec<Mat>,
    with_continuation: bool,
    solver: StepSolver,
}

impl AdjointStepper {
    pub fn new(sys: &DelaySystem, grid: &TimeGrid) -> Result<Self> {
        sys.check_grid(grid)?;
        let n = sys.dim();
        let d = grid.delay_steps;
        let nn = grid.n_steps;
        let dt = grid.dt;
        let reach = grid.time((nn + d) as isize);
        let covers = |k: &crate::base::MemoryKernel| k.table_end().is_none_or(|e| e >= reach - 1e-12);
        let with_continuation = covers(&sys.m) && covers(&sys.m_tilde);
        let count = if with_continuation { nn + d + 1 } else { nn + 1 };
        let table = KernelTable::new(&sys.m, dt, count)?;
        let first = if with_continuation { -(d as isize) } else { 0 };
        let forcing = (first..=nn as isize)
            .map(|k| sys.m_tilde.eval(grid.t_end - grid.time(k)).map(|m| m.transpose()))
            .collect::<Result<_>>()?;
        let q = Mat::identity(n, n) - sys.a.transpose() * dt - table.matrix(0).transpose() * (0.5 * dt * dt);
        let solver = StepSolver::new(q, "adjoint step")?;
        Ok(Self {
            grid: *grid,
            n,
            a1: sys.a1.clone(),
            sys_b: sys.b.clone(),
            table,
            forcing,
            with_continuation,
            solver,
        })
    }

    pub fn solve(&self, w_t: &Vector, z_t: &Vector) -> Result<AdjointData> {
        let n = self.n;
        if w_t.len() != n || z_t.len() != n {
            return Err(Error::Shape(format!("terminal data must be {n}-vectors")));
        }
        let d = self.grid.delay_steps as isize;
        let nn = self.grid.n_steps as isize;
        let dt = self.grid.dt;
        let first = if self.with_continuation { -d } else { 0 };
        // ws[k - first] holds w_k for k in first..=N+d
        let len = (nn + d - first + 1) as usize;
        let mut ws = vec![Vector::zeros(n); len];
        let idx = |k: isize| (k - first) as usize;
        ws[idx(nn)] = w_t.clone();
        let z_zero = z_t.iter().all(|&v| v == 0.0);
        for k in (first..nn).rev() {
            let mut rhs = ws[idx(k + 1)].clone();
            if k + d <= nn {
                rhs.gemv_tr(dt, &self.a1, &ws[idx(k + d)], 1.0);
            }
            if !self.table.is_zero() {
                let mut fut = Vector::zeros(n);
                for j in k + 1..nn {
                    self.table.axpy_t((j - k) as usize, dt, &ws[idx(j)], &mut fut);
                }
                self.table.axpy_t((nn - k) as usize, 0.5 * dt, &ws[idx(nn)], &mut fut);
                rhs.axpy(dt, &fut, 1.0);
            }
            if !z_zero {
                rhs.gemv(-dt, &self.forcing[idx(k)], z_t, 1.0);
            }
            self.solver.solve_in_place(&mut rhs)?;
            if rhs.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite adjoint state at node {k}")));
            }
            ws[idx(k)] = rhs;
        }
        let continuation: Vec<Vector> = ws.drain(..idx(0)).collect();
        let observation = (0..=nn as usize)
            .map(|k| self.sys_b.at(k).tr_mul(&ws[k]))
            .collect();
        Ok(AdjointData {
            w_t: w_t.clone(),
            z_t: z_t.clone(),
            traj: Trajectory::new(self.grid, 0, ws)?,
            observation,
            continuation,
        })
    }
}

/// Solve the adjoint system backward from `(w_T, z_T)`.
pub fn simulate_adjoint(
    sys: &DelaySystem,
    w_t: &Vector,
    z_t: &Vector,
    grid: &TimeGrid,
) -> Result<AdjointData> {
    AdjointStepper::new(sys, grid)?.solve(w_t, z_t)
}

/// Residual of the differentiated adjoint system satisfied by `phi = w'`:
///
/// `-phi' = A^T phi + A1^T phi(t+h) + int_t^T M(s-t)^T phi(s) ds - M(T-t)^T w_T + M~'(T-t)^T z_T`,
/// `phi(T) = -A^T w_T + M~(0)^T z_T`.
///
/// `phi` and `phi'` come from centered differences of `w`. Nodes within two
/// steps of `T - j h` (`j >= 0`) and of `t = 0` are skipped, since `w(t+h)`
/// jumps at `t = T - h` and the differences straddle the resulting kinks.
pub fn adjoint_time_derivative_residual(sys: &DelaySystem, adj: &AdjointData) -> Result<f64> {
    for (k, name) in [(&sys.m, "M"), (&sys.m_tilde, "M~")] {
        if !k.has_analytic_derivative() {
            return Err(Error::UnsupportedKernel(format!(
                "{name} must be zero, constant or exponential-polynomial"
            )));
        }
    }
    let grid = *adj.grid();
    let nn = grid.n_steps;
    let d = grid.delay_steps;
    let dt = grid.dt;
    let t_end = grid.t_end;
    let n = sys.dim();
    let w = |k: usize| adj.traj.node(k as isize);
    // phi on 0..=N, zero beyond
    let mut phi = vec![Vector::zeros(n); nn + d + 1];
    for k in 0..=nn {
        phi[k] = if k == nn {
            (w(nn) - w(nn - 1)) / dt
        } else if k == 0 {
            match adj.w(-1) {
                Some(wm) => (w(1) - wm) / (2.0 * dt),
                None => (w(1) - w(0)) / dt,
            }
        } else {
            (w(k + 1) - w(k - 1)) / (2.0 * dt)
        };
    }
    let table = KernelTable::new(&sys.m, dt, nn + 1)?;
    let terminal_expected = -sys.a.tr_mul(&adj.w_t) + sys.m_tilde.eval(0.0)?.tr_mul(&adj.z_t);
    let mut worst = (&phi[nn] - terminal_expected).amax();
    let near_break = |k: usize| {
        if k <= 2 {
            return true;
        }
        let mut b = nn as isize;
        while b >= -2 {
            if (k as isize - b).abs() <= 2 {
                return true;
            }
            b -= d as isize;
        }
        false
    };
    for k in 1..nn {
        if near_break(k) {
            continue;
        }
        let dphi = (&phi[k + 1] - &phi[k - 1]) / (2.0 * dt);
        let tk = grid.time(k as isize);
        let mut rhs = sys.a.tr_mul(&phi[k]);
        rhs.gemv_tr(1.0, &sys.a1, &phi[k + d], 1.0);
        let wts = trapezoid_weights(nn - k + 1, dt);
        for (i, j) in (k..=nn).enumerate() {
            table.axpy_t(j - k, wts[i], &phi[j], &mut rhs);
        }
        rhs.gemv_tr(-1.0, &sys.m.eval(t_end - tk)?, &adj.w_t, 1.0);
        rhs.gemv_tr(1.0, &sys.m_tilde.derivative(t_end - tk)?, &adj.z_t, 1.0);
        worst = worst.max((-dphi - rhs).amax());
    }
    Ok(worst)
}
