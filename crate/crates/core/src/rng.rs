//! Seeded random problem instances.
//!
//! Every draw comes from `ChaCha8Rng::seed_from_u64(seed)`; a uniform variate on
//! `[lo, hi)` is `lo + (hi - lo) * ((next_u64 >> 11) * 2^-53)`. Draws are taken in
//! the order documented on [`random_instance`], so other implementations of the
//! same generator reproduce the same matrices.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::base::{HistoryFunction, MemoryKernel, TimeGrid};
use crate::forward::{Control, ControlMap, DelaySystem};
use crate::linalg::{Mat, Vector};

/// Named generator used for all random instances.
pub struct InstanceRng(ChaCha8Rng);

impl InstanceRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    /// Standard normal (Box-Muller, cosine branch).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Row-major fill with uniforms on `[lo, hi)`.
    pub fn matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Mat {
        let mut m = Mat::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = self.uniform(lo, hi);
            }
        }
        m
    }

    pub fn vector(&mut self, n: usize, lo: f64, hi: f64) -> Vector {
        Vector::from_fn(n, |_, _| self.uniform(lo, hi))
    }

    /// Uniform direction on the unit sphere.
    pub fn unit_vector(&mut self, n: usize) -> Vector {
        loop {
            let v = Vector::from_fn(n, |_, _| self.normal());
            let norm = v.norm();
            if norm > 1e-12 {
                return v / norm;
            }
        }
    }
}

/// A random system with smooth history and control, plus adjoint terminal data.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub sys: DelaySystem,
    pub w_t: Vector,
    pub z_t: Vector,
    /// `u(t) = c0 sin(2 pi t) + c1 cos(3 t)`.
    pub control_coeffs: [Vector; 2],
}

impl RandomInstance {
    pub fn control(&self, grid: &TimeGrid) -> Control {
        let [c0, c1] = &self.control_coeffs;
        Control::from_fn(grid, |t| c0 * (std::f64::consts::TAU * t).sin() + c1 * (3.0 * t).cos())
    }
}

/// Horizon and delay of the random instances.
pub const RANDOM_T: f64 = 1.0;
pub const RANDOM_H: f64 = 0.1;

/// Random `n x n` system with `m` controls, `T = 1`, `h = 0.1`.
///
/// Draw order: `A` (entries on `[-0.5, 0.5)`, then shifted by `-0.5 I`), `A1`
/// (`[-0.5, 0.5)`), rate of `M` (`-[0.5, 1.5)`), its two coefficients
/// (`[-0.5, 0.5)`), the same for `M~`, `B` (`[-0.5, 0.5)`), history coefficients
/// `p, q` (`[-0.5, 0.5)`) giving `phi(theta) = p + q sin(5 theta)`, control
/// coefficients `c0, c1` (`[-0.5, 0.5)`), then `w_T` and `z_T` as unit vectors
/// (normalized standard normals, see [`InstanceRng::unit_vector`]).
/// The history is tabulated at step `h / 320`.
pub fn random_instance(n: usize, m: usize, seed: u64) -> RandomInstance {
    let mut r = InstanceRng::new(seed);
    let a = r.matrix(n, n, -0.5, 0.5) - Mat::identity(n, n) * 0.5;
    let a1 = r.matrix(n, n, -0.5, 0.5);
    let kernel = |r: &mut InstanceRng| {
        let rate = -r.uniform(0.5, 1.5);
        let c0 = r.matrix(n, n, -0.5, 0.5);
        let c1 = r.matrix(n, n, -0.5, 0.5);
        MemoryKernel::exp_poly(rate, vec![c0, c1]).expect("square coefficients")
    };
    let mk = kernel(&mut r);
    let mt = kernel(&mut r);
    let b = r.matrix(n, m, -0.5, 0.5);
    let p = r.vector(n, -0.5, 0.5);
    let q = r.vector(n, -0.5, 0.5);
    let c0 = r.vector(m, -0.5, 0.5);
    let c1 = r.vector(m, -0.5, 0.5);
    let w_t = r.unit_vector(n);
    let z_t = r.unit_vector(n);
    let history = HistoryFunction::from_fn(n, RANDOM_H, RANDOM_H / 320.0, |th| &p + &q * (5.0 * th).sin())
        .expect("aligned history");
    RandomInstance {
        sys: DelaySystem {
            a,
            a1,
            m: mk,
            m_tilde: mt,
            b: ControlMap::Constant(b),
            h: RANDOM_H,
            t_end: RANDOM_T,
            history,
        },
        w_t,
        z_t,
        control_coeffs: [c0, c1],
    }
}
