//! One-dimensional heat equation with delay and memory on `(0, pi)`:
//!
//! `y_t = y_xx + D y(t-h) + int_0^t M(t-s) y(s) ds + chi_{omega(t)} u`,
//!
//! Dirichlet boundary, with `D` either the identity or the Laplacian. Space is
//! discretized by the centered second difference on `Nx` interior points,
//! `dx = pi / (Nx + 1)`; time by the scheme of [`crate::forward`].

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::base::{trapezoid_weights, HistoryFunction, KernelTable, MemoryKernel, TimeGrid, Trajectory};
use crate::base::fmt_num;
use crate::error::{Error, Result};
use crate::forward::{simulate_forward, Control, ControlMap, DelaySystem};
use crate::linalg::{Mat, Vector};
use crate::synthesis::{
    synthesize_control, verify_terminal_conditions, IterateRecord, SynthesisConfig, TerminalReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DelayOperator {
    /// `D = Delta`.
    Laplacian,
    /// `D = I`.
    #[default]
    Identity,
}

/// Velocity `f(t, x)` of the flow carrying the control region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum VelocityField {
    /// `f = c0 + cx x + ct t`.
    Affine { c0: f64, cx: f64, ct: f64 },
    /// `f = amplitude sin(frequency t)`.
    Oscillating { amplitude: f64, frequency: f64 },
}

impl VelocityField {
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match *self {
            VelocityField::Affine { c0, cx, ct } => c0 + cx * x + ct * t,
            VelocityField::Oscillating { amplitude, frequency } => amplitude * (frequency * t).sin(),
        }
    }
}

/// Control support `omega(t)`, a closed subinterval of `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MovingRegion {
    /// `[delta(t), delta(t) + width]` with `delta(t) = (pi - width) t / T`.
    Sweep {
        width: f64,
        #[serde(rename = "T", default = "unit_horizon")]
        t_end: f64,
    },
    /// `[start, end]` for every `t`.
    Fixed { start: f64, end: f64 },
    /// Image of `[start, end]` under the flow of `x' = f(t, x)` from time 0.
    Flow {
        start: f64,
        end: f64,
        velocity: VelocityField,
    },
}

fn unit_horizon() -> f64 {
    1.0
}

/// Largest RK4 step used to advance flow endpoints.
pub const FLOW_MAX_STEP: f64 = 1e-3;

impl MovingRegion {
    /// Sweep of width `width` from the left end at `t = 0` to the right end at `t = T`.
    pub fn sweep(width: f64, t_end: f64) -> Self {
        MovingRegion::Sweep { width, t_end }
    }

    /// Endpoints of `omega(t)`.
    pub fn interval(&self, t: f64) -> Result<(f64, f64)> {
        let (a, b) = match *self {
            MovingRegion::Sweep { width, t_end } => {
                if !(width > 0.0 && width <= PI) || !(t_end > 0.0) {
                    return Err(Error::Config(format!("sweep width {width} must lie in (0, pi]")));
                }
                let delta = (PI - width) * t / t_end;
                (delta, delta + width)
            }
            MovingRegion::Fixed { start, end } => (start, end),
            MovingRegion::Flow { start, end, velocity } => {
                (flow_rk4(&velocity, start, t), flow_rk4(&velocity, end, t))
            }
        };
        let eps = 1e-12;
        if !(a <= b) || a < -eps || b > PI + eps {
            return Err(Error::Config(format!(
                "control region [{a}, {b}] at t = {t} is not a subinterval of [0, pi]"
            )));
        }
        Ok((a, b))
    }
}

/// `X(x0, t, 0)` by classical RK4 with steps of at most [`FLOW_MAX_STEP`].
pub fn flow_rk4(f: &VelocityField, x0: f64, t: f64) -> f64 {
    let steps = (t.abs() / FLOW_MAX_STEP).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut x = x0;
    for i in 0..steps {
        let s = i as f64 * dt;
        let k1 = f.eval(s, x);
        let k2 = f.eval(s + 0.5 * dt, x + 0.5 * dt * k1);
        let k3 = f.eval(s + 0.5 * dt, x + 0.5 * dt * k2);
        let k4 = f.eval(s + dt, x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}

/// Interior grid `x_j = j dx`, `j = 1..=nx`.
pub fn x_grid(nx: usize) -> Vec<f64> {
    let dx = PI / (nx + 1) as f64;
    (1..=nx).map(|j| j as f64 * dx).collect()
}

/// Indicator of `omega(t)` on `xgrid`, closed interval, ties included.
pub fn region_mask(region: &MovingRegion, t: f64, xgrid: &[f64]) -> Result<Vec<f64>> {
    let (a, b) = region.interval(t)?;
    // absorb rounding in delta(t) so grid points on the boundary count as inside
    let tol = 1e-12 * PI;
    Ok(xgrid
        .iter()
        .map(|&x| if x >= a - tol && x <= b + tol { 1.0 } else { 0.0 })
        .collect())
}

/// Spatial profile of the history, constant in `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistoryProfile {
    /// `sin(x)`.
    #[default]
    Sine,
    /// `sin(n x)`.
    Mode { n: usize },
    Zero,
    /// Values at the interior grid points.
    Samples { values: Vec<f64> },
}

impl HistoryProfile {
    pub fn sample(&self, xgrid: &[f64]) -> Result<Vector> {
        Ok(match self {
            HistoryProfile::Sine => Vector::from_iterator(xgrid.len(), xgrid.iter().map(|x| x.sin())),
            HistoryProfile::Mode { n } => {
                Vector::from_iterator(xgrid.len(), xgrid.iter().map(|x| (*n as f64 * x).sin()))
            }
            HistoryProfile::Zero => Vector::zeros(xgrid.len()),
            HistoryProfile::Samples { values } => {
                if values.len() != xgrid.len() {
                    return Err(Error::Config(format!(
                        "history profile has {} values, grid has {} points",
                        values.len(),
                        xgrid.len()
                    )));
                }
                Vector::from_column_slice(values)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeatControl {
    /// `u(t, x) = -t exp(-pi^2 t) sin(pi x)`.
    #[default]
    Explicit,
    /// Computed by [`synthesize_control`].
    Synthesized,
    Zero,
}

/// Full description of a heat run. JSON keys follow the field names, with `T` for the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatConfig {
    pub nx: usize,
    pub nt: usize,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub h: f64,
    /// Scalar (`1x1`) kernels act pointwise; `nx x nx` kernels are used as given.
    pub kernel: MemoryKernel,
    #[serde(default)]
    pub delay_operator: DelayOperator,
    pub region: MovingRegion,
    #[serde(default)]
    pub control: HeatControl,
    #[serde(default)]
    pub history: HistoryProfile,
    /// Used when `control` is `synthesized`.
    #[serde(default)]
    pub synthesis: SynthesisConfig,
}

impl HeatConfig {
    /// The configuration of the worked experiment: `Nx = 50`, `Nt = 200`, `h = 0.1`,
    /// `T = 1`, `M(t) = exp(-t)`, history `sin(x)`, sweep of width 0.5, explicit control.
    pub fn experiment() -> Self {
        Self {
            nx: 50,
            nt: 200,
            t_end: 1.0,
            h: 0.1,
            kernel: MemoryKernel::scalar_exp(1, -1.0, 1.0),
            delay_operator: DelayOperator::Identity,
            region: MovingRegion::sweep(0.5, 1.0),
            control: HeatControl::Explicit,
            history: HistoryProfile::Sine,
            synthesis: SynthesisConfig::default(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.nt as f64
    }

    pub fn dx(&self) -> f64 {
        PI / (self.nx + 1) as f64
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        let ratio = self.nt as f64 * self.h / self.t_end;
        let d = ratio.round();
        if (ratio - d).abs() > 1e-9 * ratio.max(1.0) || d < 1.0 {
            return Err(Error::Config(format!(
                "Nt h / T = {ratio} must be a positive integer so the delay falls on grid nodes"
            )));
        }
        TimeGrid::from_steps(self.t_end, self.nt, d as usize).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 {
            return Err(Error::Config(format!("Nx must be at least 3, got {}", self.nx)));
        }
        if self.nt == 0 || !(self.t_end > 0.0) || !(self.h > 0.0) {
            return Err(Error::Config("Nt, T and h must be positive".into()));
        }
        if self.kernel.dim() != 1 && self.kernel.dim() != self.nx {
            return Err(Error::Config(format!(
                "kernel must be 1x1 or {}x{}, got {}x{}",
                self.nx,
                self.nx,
                self.kernel.dim(),
                self.kernel.dim()
            )));
        }
        let grid = self.grid()?;
        for k in 0..=grid.n_steps {
            self.region.interval(grid.time(k as isize))?;
        }
        Ok(())
    }
}

/// Dirichlet Laplacian `tridiag(1, -2, 1) / dx^2` on `nx` interior points.
pub fn laplacian(nx: usize) -> Mat {
    let dx = PI / (nx + 1) as f64;
    let c = 1.0 / (dx * dx);
    Mat::from_fn(nx, nx, |i, j| {
        if i == j {
            -2.0 * c
        } else if i.abs_diff(j) == 1 {
            c
        } else {
            0.0
        }
    })
}

/// Eigenvalues `-(2 / dx^2)(1 - cos(n dx))`, `n = 1..=nx`, of [`laplacian`].
pub fn laplacian_eigenvalues(nx: usize) -> Vec<f64> {
    let dx = PI / (nx + 1) as f64;
    (1..=nx).map(|n| -(2.0 / (dx * dx)) * (1.0 - (n as f64 * dx).cos())).collect()
}

/// Discretize the configured equation. `B(t_k)` is the diagonal mask of `omega(t_k)`.
pub fn build_heat_system(cfg: &HeatConfig) -> Result<DelaySystem> {
    cfg.validate()?;
    let nx = cfg.nx;
    let grid = cfg.grid()?;
    let xs = x_grid(nx);
    let a = laplacian(nx);
    let a1 = match cfg.delay_operator {
        DelayOperator::Identity => Mat::identity(nx, nx),
        DelayOperator::Laplacian => a.clone(),
    };
    let kernel = if cfg.kernel.dim() == 1 {
        cfg.kernel.lift_scalar(nx)?
    } else {
        cfg.kernel.clone()
    };
    let b = (0..=grid.n_steps)
        .map(|k| {
            let mask = region_mask(&cfg.region, grid.time(k as isize), &xs)?;
            Ok(Mat::from_diagonal(&Vector::from_vec(mask)))
        })
        .collect::<Result<Vec<_>>>()?;
    let profile = cfg.history.sample(&xs)?;
    let history = HistoryFunction::constant(profile, cfg.h, grid.dt)?;
    let sys = DelaySystem {
        a,
        a1,
        m: kernel.clone(),
        m_tilde: kernel,
        b: ControlMap::Sampled(b),
        h: cfg.h,
        t_end: cfg.t_end,
        history,
    };
    sys.validate()?;
    Ok(sys)
}

/// `u(t, x) = -t exp(-pi^2 t) sin(pi x)` at the grid points.
pub fn explicit_control(grid: &TimeGrid, xgrid: &[f64]) -> Control {
    Control::from_fn(grid, |t| {
        let amp = -t * (-PI * PI * t).exp();
        Vector::from_iterator(xgrid.len(), xgrid.iter().map(|x| amp * (PI * x).sin()))
    })
}

/// Discrete `L2(0, pi)` norm `sqrt(dx sum y_j^2)`.
pub fn l2_norm(y: &Vector, dx: f64) -> f64 {
    (dx * y.norm_squared()).sqrt()
}

/// Everything a heat run produces.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: HeatConfig,
    pub system: DelaySystem,
    pub grid: TimeGrid,
    pub xgrid: Vec<f64>,
    pub control: Control,
    pub trajectory: Trajectory,
    pub report: TerminalReport,
    /// `(t_k, |y(t_k)|_L2)` for every node of `[-h, T]`.
    pub norms: Vec<(f64, f64)>,
    /// `|int_0^T M~(T-s) y(s) ds|_L2`.
    pub memory_residual: f64,
    /// `max_{t_k in [T-h, T]} |y(t_k)|_L2`.
    pub window_sup: f64,
    /// Iterate log when the control was synthesized.
    pub synthesis_log: Vec<IterateRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentMetrics {
    pub final_l2: f64,
    pub memory_residual: f64,
    pub window_sup: f64,
    pub control_l2: f64,
    pub report: TerminalReport,
}

impl ExperimentResult {
    pub fn metrics(&self) -> ExperimentMetrics {
        ExperimentMetrics {
            final_l2: l2_norm(self.trajectory.terminal(), self.config.dx()),
            memory_residual: self.memory_residual,
            window_sup: self.window_sup,
            control_l2: (self.control.l2_norm_sq(self.grid.dt) * self.config.dx()).sqrt(),
            report: self.report,
        }
    }

    /// Long-format surface `t,x,y` over every node of `[-h, T]`, boundary zeros included.
    pub fn write_field_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y"])?;
        let nx = self.config.nx;
        for (t, y) in self.trajectory.times().zip(&self.trajectory.samples) {
            let ts = fmt_num(t);
            w.write_record([ts.as_str(), "0.0", "0.0"])?;
            for j in 0..nx {
                w.write_record([ts.clone(), fmt_num(self.xgrid[j]), fmt_num(y[j])])?;
            }
            w.write_record([ts, fmt_num(PI), "0.0".into()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_norms_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "l2"])?;
        for (t, v) in &self.norms {
            w.write_record([fmt_num(*t), fmt_num(*v)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Profile `x,y` at `t = T`, boundary zeros included.
    pub fn write_terminal_slice_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y"])?;
        w.write_record(["0.0", "0.0"])?;
        let y = self.trajectory.terminal();
        for j in 0..self.config.nx {
            w.write_record([fmt_num(self.xgrid[j]), fmt_num(y[j])])?;
        }
        w.write_record([fmt_num(PI), "0.0".into()])?;
        w.flush()?;
        Ok(())
    }
}

/// Build, control, simulate and measure one heat configuration.
pub fn run_experiment(cfg: &HeatConfig) -> Result<ExperimentResult> {
    let sys = build_heat_system(cfg)?;
    let grid = cfg.grid()?;
    let xs = x_grid(cfg.nx);
    let mut log = Vec::new();
    let (control, trajectory) = match cfg.control {
        HeatControl::Explicit => {
            let u = explicit_control(&grid, &xs);
            let tr = simulate_forward(&sys, &u, &grid)?;
            (u, tr)
        }
        HeatControl::Zero => {
            let u = Control::zeros(&grid, cfg.nx);
            let tr = simulate_forward(&sys, &u, &grid)?;
            (u, tr)
        }
        HeatControl::Synthesized => {
            let r = synthesize_control(&sys, &grid, &cfg.synthesis)?;
            log = r.log;
            (r.control, r.trajectory)
        }
    };
    let report = verify_terminal_conditions(
        &trajectory,
        &sys.m_tilde,
        cfg.h,
        cfg.synthesis.tol,
        cfg.synthesis.theta_samples,
    )?;
    let dx = cfg.dx();
    let norms: Vec<(f64, f64)> = trajectory
        .times()
        .zip(&trajectory.samples)
        .map(|(t, y)| (t, l2_norm(y, dx)))
        .collect();
    let nn = grid.n_steps as isize;
    let d = grid.delay_steps as isize;
    let window_sup = (nn - d..=nn).map(|k| l2_norm(trajectory.node(k), dx)).fold(0.0, f64::max);
    let memory_residual = l2_norm(&accumulated_memory(&trajectory, &sys.m_tilde)?, dx);
    Ok(ExperimentResult {
        config: cfg.clone(),
        system: sys,
        grid,
        xgrid: xs,
        control,
        trajectory,
        report,
        norms,
        memory_residual,
        window_sup,
        synthesis_log: log,
    })
}

/// `int_0^T M~(T-s) y(s) ds` by the trapezoid rule.
fn accumulated_memory(traj: &Trajectory, kernel: &MemoryKernel) -> Result<Vector> {
    let g = &traj.grid;
    let nn = g.n_steps;
    let table = KernelTable::new(kernel, g.dt, nn + 1)?;
    let w = trapezoid_weights(nn + 1, g.dt);
    let mut acc = Vector::zeros(traj.dim());
    for (s, ws) in w.iter().enumerate() {
        table.axpy(nn - s, *ws, traj.node(s as isize), &mut acc);
    }
    Ok(acc)
}

/// `psi_n(x) = sqrt(2 / pi) sin(n x)` at the grid points.
pub fn eigenfunction(n: usize, xgrid: &[f64]) -> Vector {
    let c = (2.0 / PI).sqrt();
    Vector::from_iterator(xgrid.len(), xgrid.iter().map(|x| c * (n as f64 * x).sin()))
}

/// Heat semigroup `sum_{n <= n_modes} exp(-n^2 t) <y, psi_n> psi_n` on the uniform
/// interior grid. The discrete inner product `dx sum_j` makes the sampled `psi_n`,
/// `n <= Nx`, exactly orthonormal, so `t = 0` with `n_modes = Nx` is the identity.
pub fn spectral_apply(profile: &Vector, t: f64, n_modes: usize) -> Result<Vector> {
    let nx = profile.len();
    if n_modes > nx {
        return Err(Error::Range(format!(
            "{n_modes} modes requested but the grid resolves only {nx}"
        )));
    }
    if t < 0.0 {
        return Err(Error::Domain(format!("semigroup time must be non-negative, got {t}")));
    }
    let xs = x_grid(nx);
    let dx = PI / (nx + 1) as f64;
    let mut out = Vector::zeros(nx);
    for n in 1..=n_modes {
        let psi = eigenfunction(n, &xs);
        let c = dx * psi.dot(profile);
        out.axpy(c * (-((n * n) as f64) * t).exp(), &psi, 1.0);
    }
    Ok(out)
}

/// `2 u_2 psi_1 + sum_{n >= 2} u_n psi_n`, with `coeffs[0] = u_2`.
pub fn spectral_control_map(coeffs: &[f64], xgrid: &[f64]) -> Vector {
    let mut out = Vector::zeros(xgrid.len());
    if let Some(&u2) = coeffs.first() {
        out.axpy(2.0 * u2, &eigenfunction(1, xgrid), 1.0);
    }
    for (i, &c) in coeffs.iter().enumerate() {
        if c != 0.0 {
            out.axpy(c, &eigenfunction(i + 2, xgrid), 1.0);
        }
    }
    out
}

/// Galerkin truncation to `psi_1..psi_n`: `A = A1 = diag(-k^2)`, `M = M~ = e^{-t} I`,
/// `B` maps `(u_2, .., u_n)` by [`spectral_control_map`], history `phi0` at `theta = 0`
/// and zero on the grid nodes before it.
pub fn spectral_truncation(n: usize, phi0: Vector, h: f64, t_end: f64, dt: f64) -> Result<DelaySystem> {
    if n < 2 {
        return Err(Error::Config("the truncation needs at least two modes".into()));
    }
    if phi0.len() != n {
        return Err(Error::Shape(format!("history has {} entries, expected {n}", phi0.len())));
    }
    let a = Mat::from_diagonal(&Vector::from_fn(n, |i, _| -(((i + 1) * (i + 1)) as f64)));
    let mut b = Mat::zeros(n, n - 1);
    b[(0, 0)] = 2.0;
    for c in 0..n - 1 {
        b[(c + 1, c)] = 1.0;
    }
    let kernel = MemoryKernel::scalar_exp(n, -1.0, 1.0);
    let sys = DelaySystem {
        a: a.clone(),
        a1: a,
        m: kernel.clone(),
        m_tilde: kernel,
        b: ControlMap::Constant(b),
        h,
        t_end,
        history: HistoryFunction::point(phi0, h, dt)?,
    };
    sys.validate()?;
    Ok(sys)
}

/// Coefficients of `sin(x)` in the truncated basis: `sqrt(pi / 2) e_1`.
pub fn sine_coefficients(n: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[0] = (PI / 2.0).sqrt();
    v
}
