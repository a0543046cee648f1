//! Control synthesis for the three terminal conditions
//!
//! (a) `y(T) = 0`,
//! (b) `int_theta^{T-h} M~(T-s) y(s) ds = 0` for every `theta` in `[-h, 0]`,
//! (c) `y = 0` on `(T-h, T]`,
//!
//! by quadratic-penalty continuation on the control:
//!
//! `J_rho(u) = 1/2 int |u|^2 + rho/2 (|y(T)|^2 + sum_theta |R_b(theta)|^2 + sum_{t_k in (T-h,T]} |y(t_k)|^2 dt)`.
//!
//! For fixed `rho` the problem is linear-quadratic. Gradients come from the exact
//! transpose of the forward scheme, so they match finite differences of the
//! discrete `J_rho` to rounding.

use serde::{Deserialize, Serialize};

use crate::base::{trapezoid_weights, MemoryKernel, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::forward::{simulate_forward, Control, DelaySystem, ForwardStepper};
use crate::linalg::{Mat, Vector};
use crate::rng::InstanceRng;

/// Which terminal conditions enter the penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionSet {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

impl ConditionSet {
    pub const ALL: Self = Self {
        a: true,
        b: true,
        c: true,
    };
    /// State and memory only, no delay window.
    pub const STATE_AND_MEMORY: Self = Self {
        a: true,
        b: true,
        c: false,
    };
}

impl Default for ConditionSet {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Preconditioned conjugate gradients on the normal equations.
    #[default]
    ConjugateGradient,
    /// Steepest descent in `L2` with backtracking Armijo line search.
    GradientDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub rho: f64,
    pub growth: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Number of `theta` nodes for (b); `None` uses every grid node of `[-h, 0]`.
    pub theta_samples: Option<usize>,
    pub seed: u64,
    pub conditions: ConditionSet,
    pub method: Method,
    /// Relative gradient tolerance ending an inner solve.
    pub inner_rtol: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            rho: 10.0,
            growth: 10.0,
            tol: 1e-3,
            max_outer: 10,
            max_inner: 2000,
            theta_samples: None,
            seed: 0,
            conditions: ConditionSet::ALL,
            method: Method::ConjugateGradient,
            inner_rtol: 1e-10,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.growth > 1.0) {
            return Err(Error::Config(format!("growth factor must exceed 1, got {}", self.growth)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.inner_rtol > 0.0) {
            return Err(Error::Config("inner_rtol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Satisfied {
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

/// Residuals of the three terminal conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalReport {
    /// `|y(T)|`.
    pub res_a: f64,
    /// `max_theta |int_theta^{T-h} M~(T-s) y(s) ds|`.
    pub res_b: f64,
    /// `max_{t_k in (T-h, T]} |y(t_k)|`.
    pub res_c: f64,
    pub tol: f64,
    pub satisfied: Satisfied,
}

impl TerminalReport {
    fn new(res_a: f64, res_b: f64, res_c: f64, tol: f64) -> Self {
        Self {
            res_a,
            res_b,
            res_c,
            tol,
            satisfied: Satisfied {
                a: res_a <= tol,
                b: res_b <= tol,
                c: res_c <= tol,
            },
        }
    }

    /// Largest residual among the selected conditions.
    pub fn worst(&self, set: ConditionSet) -> f64 {
        let mut w: f64 = 0.0;
        if set.a {
            w = w.max(self.res_a);
        }
        if set.b {
            w = w.max(self.res_b);
        }
        if set.c {
            w = w.max(self.res_c);
        }
        w
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied.a && self.satisfied.b && self.satisfied.c
    }
}

/// Node offsets `theta_j` (relative to 0, non-positive) for condition (b).
fn theta_nodes(delay_steps: usize, samples: Option<usize>) -> Result<Vec<isize>> {
    let d = delay_steps;
    let s = samples.unwrap_or(d + 1);
    if s == 1 {
        return Ok(vec![0]);
    }
    if s < 1 || d % (s - 1) != 0 {
        return Err(Error::Grid(format!(
            "theta_samples = {s} does not divide the {d} delay steps into equal grid intervals"
        )));
    }
    let stride = d / (s - 1);
    Ok((0..s).map(|j| -(d as isize) + (j * stride) as isize).collect())
}

/// Evaluate the three residuals on a trajectory that carries its history segment.
pub fn verify_terminal_conditions(
    traj: &Trajectory,
    m_tilde: &MemoryKernel,
    h: f64,
    tol: f64,
    theta_samples: Option<usize>,
) -> Result<TerminalReport> {
    let g = &traj.grid;
    if g.t_end <= h {
        return Err(Error::Domain(format!(
            "delay window (T-h, T] is empty: T = {} <= h = {h}",
            g.t_end
        )));
    }
    if (g.delay() - h).abs() > 1e-9 * h {
        return Err(Error::Grid(format!("trajectory grid delay {} != h = {h}", g.delay())));
    }
    let d = g.delay_steps as isize;
    let nn = g.n_steps as isize;
    if !traj.contains(-d) || !traj.contains(nn) {
        return Err(Error::Range("trajectory must cover [-h, T]".into()));
    }
    let res_a = traj.node(nn).norm();
    let res_c = (nn - d + 1..=nn).map(|k| traj.node(k).norm()).fold(0.0, f64::max);
    let mut res_b: f64 = 0.0;
    for kt in theta_nodes(g.delay_steps, theta_samples)? {
        let hi = nn - d;
        let w = trapezoid_weights((hi - kt + 1) as usize, g.dt);
        let mut acc = Vector::zeros(traj.dim());
        for (i, s) in (kt..=hi).enumerate() {
            let mt = m_tilde.eval(g.t_end - g.time(s))?;
            acc.gemv(w[i], &mt, traj.node(s), 1.0);
        }
        res_b = res_b.max(acc.norm());
    }
    Ok(TerminalReport::new(res_a, res_b, res_c, tol))
}

/// One row of the optimization log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub outer: usize,
    pub inner: usize,
    pub rho: f64,
    pub j: f64,
    pub grad_norm: f64,
    pub res_a: f64,
    pub res_b: f64,
    pub res_c: f64,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub control: Control,
    pub trajectory: Trajectory,
    pub report: TerminalReport,
    /// Terminal residuals of the uncontrolled run.
    pub baseline: TerminalReport,
    pub log: Vec<IterateRecord>,
    pub final_rho: f64,
    pub converged: bool,
}

/// The affine residual map `u -> e(u) = e0 + L u` and its transpose.
pub(crate) struct PenaltyProblem {
    fwd: ForwardStepper,
    grid: TimeGrid,
    n: usize,
    m: usize,
    set: ConditionSet,
    theta: Vec<isize>,
    /// `M~(T - t_s)` for `s = -d..=N-d`, index `s + d`.
    mt: Vec<Mat>,
    hist: Vec<Vector>,
    weights: Vec<f64>,
}

/// Residual blocks: `[a?] ++ b(theta_j)* ++ c(t_k)*`, each an `n`-vector.
type Blocks = Vec<Vector>;

fn dot(x: &Blocks, y: &Blocks) -> f64 {
    x.iter().zip(y).map(|(a, b)| a.dot(b)).sum()
}

fn cdot(x: &Control, y: &Control) -> f64 {
    x.values.iter().zip(&y.values).map(|(a, b)| a.dot(b)).sum()
}

impl PenaltyProblem {
    pub fn new(sys: &DelaySystem, grid: &TimeGrid, cfg: &SynthesisConfig) -> Result<Self> {
        cfg.validate()?;
        let fwd = ForwardStepper::new(sys, grid)?;
        let d = grid.delay_steps as isize;
        let nn = grid.n_steps as isize;
        let theta = theta_nodes(grid.delay_steps, cfg.theta_samples)?;
        let mt = if cfg.conditions.b {
            (-d..=nn - d)
                .map(|s| sys.m_tilde.eval(grid.t_end - grid.time(s)))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            fwd,
            grid: *grid,
            n: sys.dim(),
            m: sys.n_controls(),
            set: cfg.conditions,
            theta,
            mt,
            hist: sys.history_nodes(grid)?,
            weights: trapezoid_weights(grid.n_nodes(), grid.dt),
        })
    }

    fn d(&self) -> usize {
        self.grid.delay_steps
    }

    /// Residual blocks from states at nodes `-d..=N`.
    fn residuals(&self, ys: &[Vector]) -> Blocks {
        let d = self.d();
        let nn = self.grid.n_steps;
        let dt = self.grid.dt;
        let y = |k: isize| &ys[(k + d as isize) as usize];
        let mut out = Vec::new();
        if self.set.a {
            out.push(y(nn as isize).clone());
        }
        if self.set.b {
            // suffix sums F_k = sum_{s=k}^{N-d} dt M~_s y_s - dt/2 M~_{N-d} y_{N-d}
            let hi = nn as isize - d as isize;
            let lo = -(d as isize);
            let mut suffix = vec![Vector::zeros(self.n); (hi - lo + 2) as usize];
            for s in (lo..=hi).rev() {
                let i = (s - lo) as usize;
                let mut v = suffix[i + 1].clone();
                let wt = if s == hi { 0.5 * dt } else { dt };
                v.gemv(wt, &self.mt[(s + d as isize) as usize], y(s), 1.0);
                suffix[i] = v;
            }
            for &kt in &self.theta {
                let mut r = suffix[(kt - lo) as usize].clone();
                r.gemv(-0.5 * dt, &self.mt[(kt + d as isize) as usize], y(kt), 1.0);
                out.push(r);
            }
        }
        if self.set.c {
            let sq = dt.sqrt();
            for k in nn - d + 1..=nn {
                out.push(y(k as isize) * sq);
            }
        }
        out
    }

    /// `e(u)` including the history.
    pub fn residual_of(&self, u: &Control) -> Result<Blocks> {
        Ok(self.residuals(&self.fwd.run(&self.hist, Some(u))?))
    }

    /// `L u` (zero history).
    pub fn apply_l(&self, u: &Control) -> Result<Blocks> {
        let zero = vec![Vector::zeros(self.n); self.d() + 1];
        Ok(self.residuals(&self.fwd.run(&zero, Some(u))?))
    }

    /// `L^T r` as a control (Euclidean gradient of `r . L u`).
    pub fn apply_lt(&self, r: &Blocks) -> Result<Control> {
        let d = self.d();
        let nn = self.grid.n_steps;
        let dt = self.grid.dt;
        let mut g = vec![Vector::zeros(self.n); nn + 1];
        let mut idx = 0;
        if self.set.a {
            g[nn] += &r[0];
            idx = 1;
        }
        if self.set.b {
            let mut total = Vector::zeros(self.n);
            for block in &r[idx..idx + self.theta.len()] {
                total += block;
            }
            idx += self.theta.len();
            let hi = nn - d;
            for (s, gs) in g.iter_mut().enumerate().take(hi + 1).skip(1) {
                let wt = if s == hi { 0.5 * dt } else { dt };
                gs.gemv_tr(wt, &self.mt[s + d], &total, 1.0);
            }
        }
        if self.set.c {
            let sq = dt.sqrt();
            for (i, k) in (nn - d + 1..=nn).enumerate() {
                g[k].axpy(sq, &r[idx + i], 1.0);
            }
        }
        let lam = self.fwd.transpose_sweep(&g)?;
        Ok(self.fwd.control_gradient(&lam))
    }

    fn mass(&self, u: &Control) -> Control {
        Control {
            values: u.values.iter().zip(&self.weights).map(|(v, w)| v * *w).collect(),
        }
    }

    fn mass_inv(&self, u: &Control) -> Control {
        Control {
            values: u.values.iter().zip(&self.weights).map(|(v, w)| v / *w).collect(),
        }
    }

    fn objective(&self, u: &Control, e: &Blocks, rho: f64) -> f64 {
        0.5 * cdot(u, &self.mass(u)) + 0.5 * rho * dot(e, e)
    }

    /// Euclidean gradient `C u + rho L^T e`.
    fn gradient(&self, u: &Control, e: &Blocks, rho: f64) -> Result<Control> {
        Ok(self.mass(u).add_scaled(rho, &self.apply_lt(e)?))
    }

    /// Terminal residuals read off the residual blocks.
    fn report_from(&self, e: &Blocks, tol: f64) -> (f64, f64, f64) {
        let mut idx = 0;
        let mut ra = f64::NAN;
        let mut rb = f64::NAN;
        let mut rc = f64::NAN;
        if self.set.a {
            ra = e[0].norm();
            idx = 1;
        }
        if self.set.b {
            rb = e[idx..idx + self.theta.len()].iter().map(|v| v.norm()).fold(0.0, f64::max);
            idx += self.theta.len();
        }
        if self.set.c {
            let sq = self.grid.dt.sqrt();
            rc = e[idx..].iter().map(|v| v.norm() / sq).fold(0.0, f64::max);
        }
        let _ = tol;
        (ra, rb, rc)
    }
}

fn add_blocks(x: &mut Blocks, alpha: f64, y: &Blocks) {
    for (a, b) in x.iter_mut().zip(y) {
        a.axpy(alpha, b, 1.0);
    }
}

fn worst_enforced(set: ConditionSet, r: (f64, f64, f64)) -> f64 {
    let mut w: f64 = 0.0;
    if set.a {
        w = w.max(r.0);
    }
    if set.b {
        w = w.max(r.1);
    }
    if set.c {
        w = w.max(r.2);
    }
    w
}

/// Minimize `J_rho` with increasing `rho` until every enforced residual is below `tol`.
pub fn synthesize_control(
    sys: &DelaySystem,
    grid: &TimeGrid,
    cfg: &SynthesisConfig,
) -> Result<SynthesisResult> {
    let prob = PenaltyProblem::new(sys, grid, cfg)?;
    let zero = Control::zeros(grid, prob.m);
    let base_traj = simulate_forward(sys, &zero, grid)?;
    let baseline =
        verify_terminal_conditions(&base_traj, &sys.m_tilde, sys.h, cfg.tol, cfg.theta_samples)?;

    let e0 = prob.residuals(&base_traj.samples);
    let set = cfg.conditions;
    let mut log = Vec::new();
    let finish = |u: Control, log: Vec<IterateRecord>, rho: f64| -> Result<SynthesisResult> {
        let traj = simulate_forward(sys, &u, grid)?;
        let report =
            verify_terminal_conditions(&traj, &sys.m_tilde, sys.h, cfg.tol, cfg.theta_samples)?;
        let converged = report.worst(set) <= cfg.tol;
        Ok(SynthesisResult {
            control: u,
            trajectory: traj,
            report,
            baseline,
            log,
            final_rho: rho,
            converged,
        })
    };
    if baseline.worst(set) <= cfg.tol {
        return finish(zero, log, cfg.rho);
    }

    let mut u = zero;
    let mut e = e0;
    let mut rho = cfg.rho;
    let mut best: Option<(f64, Control, f64)> = None;
    for outer in 0..cfg.max_outer {
        match cfg.method {
            Method::ConjugateGradient => cg_solve(&prob, &mut u, &mut e, rho, outer, cfg, &mut log)?,
            Method::GradientDescent => descent_solve(&prob, &mut u, &mut e, rho, outer, cfg, &mut log)?,
        }
        let w = worst_enforced(set, prob.report_from(&e, cfg.tol));
        // the penalty norm is non-increasing in rho, and unlike the worst residual it
        // keeps ranking iterates when one condition is infeasible
        let merit = if w <= cfg.tol { -1.0 } else { dot(&e, &e) };
        if best.as_ref().is_none_or(|b| merit <= b.0) {
            best = Some((merit, u.clone(), rho));
        }
        if w <= cfg.tol {
            break;
        }
        rho *= cfg.growth;
    }
    let (_, u, rho) = best.expect("at least one outer iteration");
    finish(u, log, rho)
}

fn record(
    prob: &PenaltyProblem,
    log: &mut Vec<IterateRecord>,
    outer: usize,
    inner: usize,
    rho: f64,
    j: f64,
    grad_norm: f64,
    e: &Blocks,
) {
    let (ra, rb, rc) = prob.report_from(e, 0.0);
    log.push(IterateRecord {
        outer,
        inner,
        rho,
        j,
        grad_norm,
        res_a: ra,
        res_b: rb,
        res_c: rc,
    });
}

/// Preconditioned CG on `(C + rho L^T L) u = -rho L^T e0`, warm-started from `u`.
fn cg_solve(
    prob: &PenaltyProblem,
    u: &mut Control,
    e: &mut Blocks,
    rho: f64,
    outer: usize,
    cfg: &SynthesisConfig,
    log: &mut Vec<IterateRecord>,
) -> Result<()> {
    let mut r = prob.gradient(u, e, rho)?.scaled(-1.0);
    let mut z = prob.mass_inv(&r);
    let mut rz = cdot(&r, &z);
    // reference scale: gradient at u = 0
    let g0 = {
        let lt = prob.apply_lt(&{
            let mut e0 = e.clone();
            add_blocks(&mut e0, -1.0, &prob.apply_l(u)?);
            e0
        })?;
        let b = lt.scaled(rho);
        cdot(&b, &prob.mass_inv(&b)).sqrt()
    };
    let stop = cfg.inner_rtol * g0.max(f64::MIN_POSITIVE);
    record(prob, log, outer, 0, rho, prob.objective(u, e, rho), rz.sqrt(), e);
    if rz.sqrt() <= stop {
        return Ok(());
    }
    let mut p = z.clone();
    for inner in 1..=cfg.max_inner {
        let lp = prob.apply_l(&p)?;
        let q = prob.mass(&p).add_scaled(rho, &prob.apply_lt(&lp)?);
        let pq = cdot(&p, &q);
        if !(pq > 0.0) {
            if pq.is_nan() {
                return Err(Error::Numerical("NaN curvature in conjugate gradients".into()));
            }
            break;
        }
        let alpha = rz / pq;
        *u = u.add_scaled(alpha, &p);
        add_blocks(e, alpha, &lp);
        r = r.add_scaled(-alpha, &q);
        z = prob.mass_inv(&r);
        let rz_new = cdot(&r, &z);
        let j = prob.objective(u, e, rho);
        if !j.is_finite() {
            return Err(Error::Numerical("non-finite objective".into()));
        }
        record(prob, log, outer, inner, rho, j, rz_new.sqrt(), e);
        if rz_new.sqrt() <= stop {
            break;
        }
        p = z.add_scaled(rz_new / rz, &p);
        rz = rz_new;
    }
    Ok(())
}

/// Steepest descent with backtracking Armijo (`c = 1e-4`, halving, first step 1).
fn descent_solve(
    prob: &PenaltyProblem,
    u: &mut Control,
    e: &mut Blocks,
    rho: f64,
    outer: usize,
    cfg: &SynthesisConfig,
    log: &mut Vec<IterateRecord>,
) -> Result<()> {
    let mut j = prob.objective(u, e, rho);
    let mut g0 = None;
    for inner in 0..=cfg.max_inner {
        let grad = prob.gradient(u, e, rho)?;
        let dir = prob.mass_inv(&grad).scaled(-1.0);
        let slope = cdot(&grad, &dir);
        let gnorm = (-slope).sqrt();
        record(prob, log, outer, inner, rho, j, gnorm, e);
        let reference = *g0.get_or_insert(gnorm);
        if gnorm <= cfg.inner_rtol * reference || inner == cfg.max_inner {
            break;
        }
        let ld = prob.apply_l(&dir)?;
        let mut step = 1.0;
        loop {
            let cand = u.add_scaled(step, &dir);
            let mut ec = e.clone();
            add_blocks(&mut ec, step, &ld);
            let jc = prob.objective(&cand, &ec, rho);
            if jc.is_nan() {
                return Err(Error::Numerical("NaN in line search".into()));
            }
            if jc <= j + 1e-4 * step * slope {
                *u = cand;
                *e = ec;
                j = jc;
                break;
            }
            step *= 0.5;
            if step < 1e-30 {
                return Ok(());
            }
        }
    }
    Ok(())
}

/// `J_rho(u)` and its Euclidean gradient with respect to the control samples.
pub fn penalty_objective(
    sys: &DelaySystem,
    grid: &TimeGrid,
    cfg: &SynthesisConfig,
    u: &Control,
) -> Result<(f64, Control)> {
    let prob = PenaltyProblem::new(sys, grid, cfg)?;
    let e = prob.residual_of(u)?;
    Ok((prob.objective(u, &e, cfg.rho), prob.gradient(u, &e, cfg.rho)?))
}

/// `L2` gradient `u + rho C^{-1} L^T e(u)`, the function whose samples represent `dJ`.
pub fn l2_gradient(
    sys: &DelaySystem,
    grid: &TimeGrid,
    cfg: &SynthesisConfig,
    u: &Control,
) -> Result<Control> {
    let prob = PenaltyProblem::new(sys, grid, cfg)?;
    let e = prob.residual_of(u)?;
    Ok(prob.mass_inv(&prob.gradient(u, &e, cfg.rho)?))
}

/// Largest relative gap between the adjoint gradient and central differences
/// (`eps = 1e-5`) of `J_rho` along random directions.
pub fn gradient_check(
    sys: &DelaySystem,
    grid: &TimeGrid,
    cfg: &SynthesisConfig,
    u0: &Control,
    n_directions: usize,
    seed: u64,
) -> Result<f64> {
    let prob = PenaltyProblem::new(sys, grid, cfg)?;
    let rho = cfg.rho;
    let e = prob.residual_of(u0)?;
    let grad = prob.gradient(u0, &e, rho)?;
    let mut rng = InstanceRng::new(seed);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..n_directions {
        let v = Control {
            values: u0.values.iter().map(|x| Vector::from_fn(x.len(), |_, _| rng.normal())).collect(),
        };
        let up = u0.add_scaled(eps, &v);
        let um = u0.add_scaled(-eps, &v);
        let jp = prob.objective(&up, &prob.residual_of(&up)?, rho);
        let jm = prob.objective(&um, &prob.residual_of(&um)?, rho);
        let fd = (jp - jm) / (2.0 * eps);
        let an = cdot(&grad, &v);
        let scale = an.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max((fd - an).abs() / scale);
    }
    Ok(worst)
}

/// Scalar pure-memory instance: `A = -1`, `A1 = 0`, `M = M~ = e^{-t}`, `B = 1`,
/// `h = 0.1`, `T = 1`, history 1 at `theta = 0` and zero on the grid nodes before it.
pub fn scalar_memory_instance(dt: f64) -> Result<DelaySystem> {
    let sys = DelaySystem {
        a: Mat::from_element(1, 1, -1.0),
        a1: Mat::zeros(1, 1),
        m: MemoryKernel::scalar_exp(1, -1.0, 1.0),
        m_tilde: MemoryKernel::scalar_exp(1, -1.0, 1.0),
        b: crate::forward::ControlMap::Constant(Mat::from_element(1, 1, 1.0)),
        h: 0.1,
        t_end: 1.0,
        history: crate::base::HistoryFunction::point(Vector::from_element(1, 1.0), 0.1, dt)?,
    };
    sys.validate()?;
    Ok(sys)
}

/// CSV of the iterate log.
pub fn write_log_csv<W: std::io::Write>(log: &[IterateRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in log {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}
