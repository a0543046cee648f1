//! Discrete check of the pairing identity between the state and the adjoint:
//!
//! `<y(T1), w(T1)> - <w(theta), phi(theta)> = I1 + I2 + I3 + I4`
//!
//! with `I1 + I2` in the shifted-window form
//! `int_{theta-h}^{theta} <y, A1^T w(t+h)> - int_{T1-h}^{T-h} <y, A1^T w(t+h)>`,
//! `I3 = int_theta^{T1} <y, M~(T-t)^T z_T>` and `I4 = int_theta^{T1} <B u, w>`.
//!
//! For `T1 < T` the memory pairing leaves the tail
//! `-int_0^{T1} <y(s), int_{T1}^T M(t-s)^T w(t) dt> ds`, reported separately as
//! `memory_tail`; `corrected_residual` includes it. For `theta < 0` the state is
//! the history there, not a solution, and `w` is the backward continuation of the
//! adjoint recurrence, so only the `theta = 0` identity is expected to close.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjoint::AdjointStepper;
use crate::base::{trapezoid_weights, KernelTable, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::forward::{simulate_forward, Control, DelaySystem};
use crate::linalg::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub lhs: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    /// `|lhs - (i1 + i2 + i3 + i4)|`.
    pub residual: f64,
    pub memory_tail: f64,
    /// `|lhs - (i1 + i2 + i3 + i4 + memory_tail)|`.
    pub corrected_residual: f64,
    /// `<int_theta^{T1} M~(T-t) y dt, z_T>`, the second form of `I3`.
    pub i3_alt: f64,
    pub theta: f64,
    pub t1: f64,
}

/// Evaluate every term of the identity at one `(theta, T1)` pair.
#[allow(clippy::too_many_arguments)]
pub fn duality_residual(
    sys: &DelaySystem,
    control: &Control,
    w_t: &Vector,
    z_t: &Vector,
    theta: f64,
    t1: f64,
    grid: &TimeGrid,
) -> Result<DualityReport> {
    let y = simulate_forward(sys, control, grid)?;
    let adj = AdjointStepper::new(sys, grid)?.solve(w_t, z_t)?;
    let ctx = Pairing::new(sys, control, &y, &adj, grid)?;
    ctx.report(theta, t1)
}

/// Reports over a `theta x T1` grid sharing one forward and one adjoint solve.
#[allow(clippy::too_many_arguments)]
pub fn duality_sweep(
    sys: &DelaySystem,
    control: &Control,
    w_t: &Vector,
    z_t: &Vector,
    thetas: &[f64],
    t1s: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<DualityReport>> {
    let y = simulate_forward(sys, control, grid)?;
    let adj = AdjointStepper::new(sys, grid)?.solve(w_t, z_t)?;
    let ctx = Pairing::new(sys, control, &y, &adj, grid)?;
    let pairs: Vec<(f64, f64)> = thetas
        .iter()
        .flat_map(|&th| t1s.iter().map(move |&t1| (th, t1)))
        .collect();
    pairs.par_iter().map(|&(th, t1)| ctx.report(th, t1)).collect()
}

struct Pairing<'a> {
    sys: &'a DelaySystem,
    control: &'a Control,
    y: &'a Trajectory,
    adj: &'a crate::adjoint::AdjointData,
    grid: TimeGrid,
    table: KernelTable,
}

impl<'a> Pairing<'a> {
    fn new(
        sys: &'a DelaySystem,
        control: &'a Control,
        y: &'a Trajectory,
        adj: &'a crate::adjoint::AdjointData,
        grid: &TimeGrid,
    ) -> Result<Self> {
        let table = KernelTable::new(&sys.m, grid.dt, grid.n_nodes())?;
        Ok(Self {
            sys,
            control,
            y,
            adj,
            grid: *grid,
            table,
        })
    }

    /// State with zero extension below `-h`.
    fn y(&self, k: isize) -> Vector {
        self.y.at_or_zero(k)
    }

    fn w(&self, k: isize) -> Result<Vector> {
        if k > self.grid.n_steps as isize {
            return Ok(Vector::zeros(self.sys.dim()));
        }
        self.adj.w(k).cloned().ok_or_else(|| {
            Error::Precondition(format!(
                "adjoint not available at node {k}; kernels must reach T + h for theta < 0"
            ))
        })
    }

    /// Trapezoid of `f(k)` over nodes `lo..=hi`.
    fn integrate(&self, lo: isize, hi: isize, f: impl Fn(isize) -> Result<f64>) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let w = trapezoid_weights((hi - lo + 1) as usize, self.grid.dt);
        let mut acc = 0.0;
        for (i, k) in (lo..=hi).enumerate() {
            acc += w[i] * f(k)?;
        }
        Ok(acc)
    }

    fn delayed_pair(&self, k: isize) -> Result<f64> {
        let d = self.grid.delay_steps as isize;
        Ok(self.y(k).dot(&self.sys.a1.tr_mul(&self.w(k + d)?)))
    }

    fn report(&self, theta: f64, t1: f64) -> Result<DualityReport> {
        let g = &self.grid;
        let d = g.delay_steps as isize;
        let nn = g.n_steps as isize;
        let kt = g.index_of(theta)?;
        let k1 = g.index_of(t1)?;
        if kt < -d || kt > 0 {
            return Err(Error::Domain(format!("theta = {theta} outside [-h, 0]")));
        }
        if k1 < nn - d || k1 > nn {
            return Err(Error::Domain(format!("T1 = {t1} outside [T-h, T]")));
        }
        let t_end = g.t_end;
        let lhs = self.y(k1).dot(&self.w(k1)?) - self.w(kt)?.dot(&self.y(kt));
        let i1 = self.integrate(kt - d, kt, |k| self.delayed_pair(k))?;
        let i2 = -self.integrate(k1 - d, nn - d, |k| self.delayed_pair(k))?;
        let z = &self.adj.z_t;
        let i3 = self.integrate(kt, k1, |k| {
            let mt = self.sys.m_tilde.eval(t_end - g.time(k))?;
            Ok(self.y(k).dot(&mt.tr_mul(z)))
        })?;
        let i3_alt = {
            let mut acc = Vector::zeros(self.sys.dim());
            if k1 > kt {
                let w = trapezoid_weights((k1 - kt + 1) as usize, g.dt);
                for (i, k) in (kt..=k1).enumerate() {
                    let mt = self.sys.m_tilde.eval(t_end - g.time(k))?;
                    acc.gemv(w[i], &mt, &self.y(k), 1.0);
                }
            }
            acc.dot(z)
        };
        let i4 = self.integrate(kt, k1, |k| {
            if k < 0 {
                return Ok(0.0);
            }
            let ku = k as usize;
            let bu = self.sys.b.at(ku) * &self.control.values[ku];
            Ok(bu.dot(&self.w(k)?))
        })?;
        let memory_tail = self.memory_tail(k1)?;
        let sum = i1 + i2 + i3 + i4;
        Ok(DualityReport {
            lhs,
            i1,
            i2,
            i3,
            i4,
            residual: (lhs - sum).abs(),
            memory_tail,
            corrected_residual: (lhs - sum - memory_tail).abs(),
            i3_alt,
            theta,
            t1,
        })
    }

    /// `-int_0^{T1} <y(s), int_{T1}^T M(t-s)^T w(t) dt> ds`.
    fn memory_tail(&self, k1: isize) -> Result<f64> {
        let nn = self.grid.n_steps as isize;
        if k1 >= nn || self.table.is_zero() {
            return Ok(0.0);
        }
        let dt = self.grid.dt;
        let wt = trapezoid_weights((nn - k1 + 1) as usize, dt);
        let ws: Vec<Vector> = (k1..=nn).map(|k| self.w(k)).collect::<Result<_>>()?;
        let outer = self.integrate(0, k1, |s| {
            let mut inner = Vector::zeros(self.sys.dim());
            for (i, t) in (k1..=nn).enumerate() {
                self.table.axpy_t((t - s) as usize, wt[i], &ws[i], &mut inner);
            }
            Ok(self.y(s).dot(&inner))
        })?;
        Ok(-outer)
    }
}
