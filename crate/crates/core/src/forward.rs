//! Forward simulation of the delay/memory system
//!
//! `y'(t) = A y(t) + A1 y(t-h) + int_0^t M(t-s) y(s) ds + B(t) u(t)`, `y = phi` on `[-h, 0]`,
//!
//! by implicit Euler with the delayed sample lagged (method of steps) and the
//! memory integral by composite trapezoid. The implicit endpoint of the memory
//! sum is folded into the step matrix `P = I - dt A - (dt^2/2) M(0)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{
    convolve_with_table, fmt_num, trapezoid_weights, HistoryFunction, KernelTable, MemoryKernel,
    TimeGrid, Trajectory,
};
use crate::error::{Error, Result};
use crate::linalg::{check_square, serde_rows, Mat, StepSolver, Vector};

/// Control operator `B(t)`: constant, or one `n x m` matrix per grid node `0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMap {
    Constant(#[serde(with = "serde_rows")] Mat),
    Sampled(#[serde(with = "serde_rows::vec")] Vec<Mat>),
}

impl ControlMap {
    pub fn n_rows(&self) -> usize {
        match self {
            ControlMap::Constant(b) => b.nrows(),
            ControlMap::Sampled(bs) => bs.first().map_or(0, |b| b.nrows()),
        }
    }

    pub fn n_controls(&self) -> usize {
        match self {
            ControlMap::Constant(b) => b.ncols(),
            ControlMap::Sampled(bs) => bs.first().map_or(0, |b| b.ncols()),
        }
    }

    /// `B(t_k)`.
    pub fn at(&self, k: usize) -> &Mat {
        match self {
            ControlMap::Constant(b) => b,
            ControlMap::Sampled(bs) => &bs[k],
        }
    }

    fn check(&self, n: usize, grid: Option<&TimeGrid>) -> Result<()> {
        let m = self.n_controls();
        match self {
            ControlMap::Constant(b) => {
                if b.nrows() != n {
                    return Err(Error::Shape(format!("B has {} rows, expected {n}", b.nrows())));
                }
            }
            ControlMap::Sampled(bs) => {
                if bs.is_empty() || bs.iter().any(|b| b.nrows() != n || b.ncols() != m) {
                    return Err(Error::Shape(format!(
                        "sampled B must be a non-empty list of {n}x{m} matrices"
                    )));
                }
                if let Some(g) = grid {
                    if bs.len() != g.n_nodes() {
                        return Err(Error::Grid(format!(
                            "sampled B has {} nodes, grid has {}",
                            bs.len(),
                            g.n_nodes()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Keep only the listed columns.
    pub fn select_columns(&self, cols: &[usize]) -> ControlMap {
        let pick = |b: &Mat| b.select_columns(cols);
        match self {
            ControlMap::Constant(b) => ControlMap::Constant(pick(b)),
            ControlMap::Sampled(bs) => ControlMap::Sampled(bs.iter().map(pick).collect()),
        }
    }
}

/// The tuple `(A, A1, M, M~, B(.), h, T)` together with the history `phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaySystem {
    #[serde(with = "serde_rows")]
    pub a: Mat,
    #[serde(with = "serde_rows")]
    pub a1: Mat,
    pub m: MemoryKernel,
    pub m_tilde: MemoryKernel,
    pub b: ControlMap,
    pub h: f64,
    pub t_end: f64,
    pub history: HistoryFunction,
}

impl DelaySystem {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_controls(&self) -> usize {
        self.b.n_controls()
    }

    /// Check dimensions, `h > 0` and `T > h`.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        check_square(&self.a, n, "A")?;
        check_square(&self.a1, n, "A1")?;
        for (k, name) in [(&self.m, "M"), (&self.m_tilde, "M~")] {
            if k.dim() != n {
                return Err(Error::Shape(format!("{name} is {0}x{0}, expected {n}x{n}", k.dim())));
            }
        }
        self.b.check(n, None)?;
        if self.history.dim() != n {
            return Err(Error::Shape(format!(
                "history has dimension {}, expected {n}",
                self.history.dim()
            )));
        }
        if !(self.h > 0.0) {
            return Err(Error::Domain(format!("delay must be positive, got {}", self.h)));
        }
        if !(self.t_end > self.h) {
            return Err(Error::Domain(format!(
                "horizon T = {} must exceed the delay h = {}",
                self.t_end, self.h
            )));
        }
        if (self.history.span() - self.h).abs() > 1e-9 * self.h {
            return Err(Error::Grid(format!(
                "history covers [-{}, 0] but h = {}",
                self.history.span(),
                self.h
            )));
        }
        Ok(())
    }

    /// Grid on `[0, T]` with step `dt` aligned to the delay.
    pub fn grid(&self, dt: f64) -> Result<TimeGrid> {
        TimeGrid::new(self.t_end, dt, self.h)
    }

    pub(crate) fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        self.validate()?;
        if (grid.delay() - self.h).abs() > 1e-9 * self.h {
            return Err(Error::Grid(format!(
                "grid delay {} does not match h = {}",
                grid.delay(),
                self.h
            )));
        }
        if (grid.t_end - self.t_end).abs() > 1e-9 * self.t_end {
            return Err(Error::Grid(format!(
                "grid horizon {} does not match T = {}",
                grid.t_end, self.t_end
            )));
        }
        if grid.delay_steps == 0 {
            return Err(Error::Grid("delay must span at least one step".into()));
        }
        self.b.check(self.dim(), Some(grid))
    }

    /// History sampled at the grid nodes `-d..=0`.
    pub(crate) fn history_nodes(&self, grid: &TimeGrid) -> Result<Vec<Vector>> {
        let d = grid.delay_steps;
        let hs = self.history.samples();
        if hs.len() == d + 1 && (self.history.step() - grid.dt).abs() <= 1e-12 * grid.dt {
            return Ok(hs.to_vec());
        }
        (0..=d)
            .map(|i| self.history.eval(grid.time(i as isize - d as isize)))
            .collect()
    }

    pub fn with_history(&self, history: HistoryFunction) -> Self {
        Self {
            history,
            ..self.clone()
        }
    }
}

/// Control samples `u(t_k)` at the grid nodes `0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    pub values: Vec<Vector>,
}

impl Control {
    pub fn zeros(grid: &TimeGrid, m: usize) -> Self {
        Self {
            values: vec![Vector::zeros(m); grid.n_nodes()],
        }
    }

    pub fn from_fn(grid: &TimeGrid, f: impl Fn(f64) -> Vector) -> Self {
        Self {
            values: (0..grid.n_nodes()).map(|k| f(grid.time(k as isize))).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &Control) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b * alpha)
                .collect(),
        }
    }

    /// Trapezoid `int_0^T |u|^2 dt`.
    pub fn l2_norm_sq(&self, dt: f64) -> f64 {
        trapezoid_weights(self.values.len(), dt)
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_squared())
            .sum()
    }

    fn check(&self, grid: &TimeGrid, m: usize) -> Result<()> {
        if self.values.len() != grid.n_nodes() {
            return Err(Error::Grid(format!(
                "control has {} samples, grid has {} nodes",
                self.values.len(),
                grid.n_nodes()
            )));
        }
        if self.values.iter().any(|v| v.len() != m) {
            return Err(Error::Shape(format!("control samples must be {m}-vectors")));
        }
        Ok(())
    }

    /// CSV with header `t,u_1..u_m`.
    pub fn write_csv<W: Write>(&self, grid: &TimeGrid, out: W) -> Result<()> {
        let tr = Trajectory::new(*grid, 0, self.values.clone())?;
        tr.write_csv(out, "u")
    }
}

/// Precomputed operators for repeated forward runs on one grid.
pub(crate) struct ForwardStepper {
    pub grid: TimeGrid,
    pub n: usize,
    a1: Mat,
    b: ControlMap,
    table: KernelTable,
    solver: StepSolver,
    solver_t: StepSolver,
}

impl ForwardStepper {
    pub fn new(sys: &DelaySystem, grid: &TimeGrid) -> Result<Self> {
        sys.check_grid(grid)?;
        let n = sys.dim();
        let dt = grid.dt;
        let table = KernelTable::new(&sys.m, dt, grid.n_nodes())?;
        let p = Mat::identity(n, n) - &sys.a * dt - table.matrix(0) * (0.5 * dt * dt);
        let solver = StepSolver::new(p.clone(), "forward step")?;
        let solver_t = StepSolver::new(p.transpose(), "discrete adjoint step")?;
        Ok(Self {
            grid: *grid,
            n,
            a1: sys.a1.clone(),
            b: sys.b.clone(),
            table,
            solver,
            solver_t,
        })
    }

    /// States at nodes `-d..=N` from history nodes `-d..=0` and optional control.
    pub fn run(&self, hist: &[Vector], control: Option<&Control>) -> Result<Vec<Vector>> {
        let d = self.grid.delay_steps;
        let nn = self.grid.n_steps;
        let dt = self.grid.dt;
        let mut ys: Vec<Vector> = Vec::with_capacity(d + nn + 1);
        ys.extend(hist.iter().cloned());
        for k in 0..nn {
            // ys[d + j] holds y_j
            let mut rhs = ys[d + k].clone();
            let delayed = &ys[d + k + 1 - d];
            rhs.gemv(dt, &self.a1, delayed, 1.0);
            if !self.table.is_zero() {
                let mut mem = Vector::zeros(self.n);
                self.table.axpy(k + 1, 0.5 * dt, &ys[d], &mut mem);
                for j in 1..=k {
                    self.table.axpy(k + 1 - j, dt, &ys[d + j], &mut mem);
                }
                rhs.axpy(dt, &mem, 1.0);
            }
            if let Some(u) = control {
                rhs.gemv(dt, self.b.at(k + 1), &u.values[k + 1], 1.0);
            }
            self.solver.solve_in_place(&mut rhs)?;
            if rhs.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite state at step {}", k + 1)));
            }
            ys.push(rhs);
        }
        Ok(ys)
    }

    /// Transpose of the linear map `(y_1..y_N) -> residuals` of the scheme.
    ///
    /// Given `g_j = dF/dy_j` for `j = 1..=N` (entry 0 ignored), returns `lambda_j`
    /// with `dF/du_j = dt B_j^T lambda_j`.
    pub fn transpose_sweep(&self, g: &[Vector]) -> Result<Vec<Vector>> {
        let d = self.grid.delay_steps;
        let nn = self.grid.n_steps;
        let dt = self.grid.dt;
        let mut lam = vec![Vector::zeros(self.n); nn + 1];
        for j in (1..=nn).rev() {
            let mut rhs = g[j].clone();
            if j < nn {
                rhs += &lam[j + 1];
            }
            if j + d <= nn {
                rhs.gemv_tr(dt, &self.a1, &lam[j + d], 1.0);
            }
            if !self.table.is_zero() {
                for i in j + 1..=nn {
                    self.table.axpy_t(i - j, dt * dt, &lam[i], &mut rhs);
                }
            }
            self.solver_t.solve_in_place(&mut rhs)?;
            lam[j] = rhs;
        }
        Ok(lam)
    }

    /// Gradient of `F` with respect to the control samples, from `lambda`.
    pub fn control_gradient(&self, lam: &[Vector]) -> Control {
        let m = self.b.n_controls();
        let dt = self.grid.dt;
        let values = (0..=self.grid.n_steps)
            .map(|k| {
                if k == 0 {
                    Vector::zeros(m)
                } else {
                    self.b.at(k).tr_mul(&lam[k]) * dt
                }
            })
            .collect();
        Control { values }
    }
}

/// Simulate on `[-h, T]`; the returned trajectory starts at node `-delay_steps`.
pub fn simulate_forward(sys: &DelaySystem, control: &Control, grid: &TimeGrid) -> Result<Trajectory> {
    let stepper = ForwardStepper::new(sys, grid)?;
    control.check(grid, sys.n_controls())?;
    let hist = sys.history_nodes(grid)?;
    let ys = stepper.run(&hist, Some(control))?;
    Trajectory::new(*grid, -(grid.delay_steps as isize), ys)
}

/// `S(t_k)` on `[0, T]` together with `M_S = max_k |S(t_k)|_2`.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub grid: TimeGrid,
    pub samples: Vec<Mat>,
    pub bound: f64,
}

impl FundamentalSolution {
    /// `S(t_k)`, zero for `k < 0`.
    pub fn at(&self, k: isize) -> Mat {
        let n = self.samples[0].nrows();
        if k < 0 {
            Mat::zeros(n, n)
        } else {
            self.samples[k as usize].clone()
        }
    }

    /// Largest node-wise operator norm over `[0, t_k]`.
    pub fn bound_up_to(&self, k: usize) -> f64 {
        self.samples[..=k].iter().map(op_norm).fold(0.0, f64::max)
    }
}

pub(crate) fn op_norm(m: &Mat) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Columns of `S` from runs with `M = 0`, `u = 0` and history `e_i` at `theta = 0` only.
pub fn fundamental_solution(sys: &DelaySystem, grid: &TimeGrid) -> Result<FundamentalSolution> {
    let n = sys.dim();
    let free = DelaySystem {
        m: MemoryKernel::zero(n),
        ..sys.clone()
    };
    let stepper = ForwardStepper::new(&free, grid)?;
    let d = grid.delay_steps;
    let columns: Vec<Vec<Vector>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut hist = vec![Vector::zeros(n); d + 1];
            hist[d][i] = 1.0;
            stepper.run(&hist, None)
        })
        .collect::<Result<_>>()?;
    let samples: Vec<Mat> = (0..grid.n_nodes())
        .map(|k| Mat::from_fn(n, n, |r, c| columns[c][d + k][r]))
        .collect();
    let bound = samples.iter().map(op_norm).fold(0.0, f64::max);
    if !bound.is_finite() {
        return Err(Error::Numerical("fundamental solution is not finite".into()));
    }
    Ok(FundamentalSolution {
        grid: *grid,
        samples,
        bound,
    })
}

/// Max-norm gap between the forward trajectory and the representation
/// `y(t) = S(t) phi(0) + int_0^t S(t-s) [B u(s) + int_0^s M(s-tau) y(tau) dtau] ds`
/// over all nodes of `[0, T]`. The inner memory integral uses the simulated `y`.
pub fn mild_solution_check(sys: &DelaySystem, control: &Control, grid: &TimeGrid) -> Result<f64> {
    if !sys.history.vanishes_before_zero() {
        return Err(Error::Precondition(
            "the representation carries only phi(0); history must vanish on [-h, 0)".into(),
        ));
    }
    let traj = simulate_forward(sys, control, grid)?;
    let fs = fundamental_solution(sys, grid)?;
    let nn = grid.n_steps;
    let dt = grid.dt;
    let n = sys.dim();
    let table = KernelTable::new(&sys.m, dt, grid.n_nodes())?;
    let phi0 = sys.history_nodes(grid)?[grid.delay_steps].clone();
    // forcing f(s_j) = B u(s_j) + memory(s_j)
    let forcing: Vec<Vector> = (0..=nn)
        .map(|j| {
            let mut f = sys.b.at(j) * &control.values[j];
            f += convolve_with_table(&table, dt, j, |i| traj.node(i as isize));
            f
        })
        .collect();
    let worst = (0..=nn)
        .into_par_iter()
        .map(|k| {
            let mut rep = &fs.samples[k] * &phi0;
            if k > 0 {
                let w = trapezoid_weights(k + 1, dt);
                for j in 0..=k {
                    rep.gemv(w[j], &fs.samples[k - j], &forcing[j], 1.0);
                }
            }
            (rep - traj.node(k as isize)).amax()
        })
        .reduce(|| 0.0, f64::max);
    debug_assert_eq!(traj.dim(), n);
    Ok(worst)
}

/// CSV with header `t,y_1..y_n`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> Result<()> {
    traj.write_csv(out, "y")
}

/// CSV of `S(t)` entries, header `t,s_1_1..s_n_n` (row-major).
pub fn write_fundamental_csv<W: Write>(fs: &FundamentalSolution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = fs.samples[0].nrows();
    let mut header = vec!["t".to_string()];
    for r in 1..=n {
        for c in 1..=n {
            header.push(format!("s_{r}_{c}"));
        }
    }
    w.write_record(&header)?;
    for (k, s) in fs.samples.iter().enumerate() {
        let mut row = vec![fmt_num(fs.grid.time(k as isize))];
        for r in 0..n {
            for c in 0..n {
                row.push(fmt_num(s[(r, c)]));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_system(a: f64, a1: f64, h: f64, t_end: f64, dt: f64, phi: f64) -> DelaySystem {
        DelaySystem {
            a: Mat::from_element(1, 1, a),
            a1: Mat::from_element(1, 1, a1),
            m: MemoryKernel::zero(1),
            m_tilde: MemoryKernel::zero(1),
            b: ControlMap::Constant(Mat::from_element(1, 1, 1.0)),
            h,
            t_end,
            history: HistoryFunction::constant(Vector::from_element(1, phi), h, dt).unwrap(),
        }
    }

    #[test]
    fn exponential_decay() {
        let dt = 1.0 / 200.0;
        let sys = scalar_system(-1.0, 0.0, 0.1, 1.0, dt, 1.0);
        let g = sys.grid(dt).unwrap();
        let tr = simulate_forward(&sys, &Control::zeros(&g, 1), &g).unwrap();
        assert!((tr.terminal()[0] - (-1.0f64).exp()).abs() < 5e-3);
    }

    #[test]
    fn method_of_steps_linear_growth() {
        let dt = 1e-3;
        let sys = scalar_system(0.0, 1.0, 1.0, 1.5, dt, 1.0);
        let g = sys.grid(dt).unwrap();
        let tr = simulate_forward(&sys, &Control::zeros(&g, 1), &g).unwrap();
        let k1 = g.index_of(1.0).unwrap();
        assert!((tr.node(k1)[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn zero_data_stays_zero() {
        let dt = 0.01;
        let sys = scalar_system(-0.3, 0.7, 0.1, 1.0, dt, 0.0);
        let g = sys.grid(dt).unwrap();
        let tr = simulate_forward(&sys, &Control::zeros(&g, 1), &g).unwrap();
        assert!(tr.samples.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn singular_step_is_reported() {
        let dt = 0.01;
        let sys = scalar_system(100.0, 0.0, 0.1, 1.0, dt, 1.0);
        let g = sys.grid(dt).unwrap();
        let r = simulate_forward(&sys, &Control::zeros(&g, 1), &g);
        assert!(matches!(r, Err(Error::StepFailure(_))));
    }

    #[test]
    fn fundamental_solution_starts_at_identity() {
        let dt = 0.01;
        let sys = scalar_system(-0.5, 0.4, 0.1, 1.0, dt, 1.0);
        let fs = fundamental_solution(&sys, &sys.grid(dt).unwrap()).unwrap();
        assert_eq!(fs.samples[0], Mat::identity(1, 1));
        assert_eq!(fs.at(-3), Mat::zeros(1, 1));
        assert!(fs.bound >= 1.0);
    }

    #[test]
    fn mild_check_rejects_nonzero_history() {
        let dt = 0.01;
        let sys = scalar_system(-0.5, 0.4, 0.1, 1.0, dt, 1.0);
        let g = sys.grid(dt).unwrap();
        let r = mild_solution_check(&sys, &Control::zeros(&g, 1), &g);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn transpose_sweep_is_adjoint_of_forward_map() {
        let dt = 0.05;
        let mut sys = scalar_system(-0.5, 0.4, 0.1, 1.0, dt, 0.0);
        sys.m = MemoryKernel::scalar_exp(1, -1.0, 0.8);
        let g = sys.grid(dt).unwrap();
        let st = ForwardStepper::new(&sys, &g).unwrap();
        let u = Control::from_fn(&g, |t| Vector::from_element(1, (3.0 * t).sin()));
        let hist = vec![Vector::zeros(1); g.delay_steps + 1];
        let ys = st.run(&hist, Some(&u)).unwrap();
        let c: Vec<Vector> = (0..=g.n_steps)
            .map(|j| Vector::from_element(1, (j as f64 * 0.37).cos()))
            .collect();
        let lhs: f64 = (1..=g.n_steps)
            .map(|j| c[j].dot(&ys[g.delay_steps + j]))
            .sum();
        let lam = st.transpose_sweep(&c).unwrap();
        let grad = st.control_gradient(&lam);
        let rhs: f64 = (0..=g.n_steps).map(|k| grad.values[k].dot(&u.values[k])).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }
}
