//! Observability diagnostics on terminal data `(w_T, z_T)`.
//!
//! The Gramian is `G[v, v'] = int_0^T <B^T w_v, B^T w_v'> dt` over the adjoint
//! solutions started from `v = (w_T, z_T)`. Its kernel is checked against the
//! unique-continuation condition `w_T = 0`, `M~(t)^T z_T = 0`, and the constant of
//! the observability inequality
//!
//! `|w(theta)|^2 + int_0^{theta+h} |w|^2 + int_{T1}^T |w|^2 <= K int_0^T |B^T w|^2`
//!
//! is computed exactly on the discretization as a generalized eigenvalue.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::adjoint::{AdjointData, AdjointStepper};
use crate::base::{trapezoid_weights, TimeGrid};
use crate::error::{Error, Result};
use crate::forward::DelaySystem;
use crate::linalg::{numerical_rank, serde_rows, Mat, Vector};
use crate::rng::InstanceRng;

/// Relative eigenvalue threshold separating the numerical kernel.
pub const NULL_TOL: f64 = 1e-10;
/// Number of `theta` and of `T1` samples used for the constant.
pub const K_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum ObservabilityConstant {
    Finite(f64),
    Unobservable,
}

impl ObservabilityConstant {
    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Finite(k) => Some(*k),
            Self::Unobservable => None,
        }
    }
}

impl Serialize for ObservabilityConstant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(k) => s.serialize_f64(*k),
            Self::Unobservable => s.serialize_str("unobservable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "direction", rename_all = "snake_case")]
pub enum Verdict {
    Observable,
    UnobservableDirection(#[serde(serialize_with = "ser_vec")] Vector),
}

fn ser_vec<S: Serializer>(v: &Vector, s: S) -> std::result::Result<S::Ok, S::Error> {
    v.as_slice().serialize(s)
}

fn ser_vecs<S: Serializer>(vs: &[Vector], s: S) -> std::result::Result<S::Ok, S::Error> {
    vs.iter()
        .map(|v| v.as_slice().to_vec())
        .collect::<Vec<_>>()
        .serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairConstant {
    pub theta: f64,
    pub t1: f64,
    pub k: ObservabilityConstant,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservabilityReport {
    #[serde(with = "serde_rows")]
    pub gramian: Mat,
    /// Non-increasing.
    pub eigenvalues: Vec<f64>,
    #[serde(serialize_with = "ser_vecs")]
    pub null_vectors: Vec<Vector>,
    /// Maximum of the per-pair constants.
    pub constant_k: ObservabilityConstant,
    pub k_per_pair: Vec<PairConstant>,
    pub verdict: Verdict,
}

/// Adjoint solutions from the `2n` unit terminal data, in order `w_T = e_i`, then `z_T = e_i`.
pub(crate) fn basis_solves(sys: &DelaySystem, grid: &TimeGrid) -> Result<Vec<AdjointData>> {
    let n = sys.dim();
    let stepper = AdjointStepper::new(sys, grid)?;
    (0..2 * n)
        .into_par_iter()
        .map(|i| {
            let mut w = Vector::zeros(n);
            let mut z = Vector::zeros(n);
            if i < n {
                w[i] = 1.0;
            } else {
                z[i - n] = 1.0;
            }
            stepper.solve(&w, &z)
        })
        .collect()
}

fn pairing_matrix(sols: &[AdjointData], f: impl Fn(&AdjointData, &AdjointData) -> f64 + Sync) -> Mat {
    let p = sols.len();
    let entries: Vec<(usize, usize, f64)> = (0..p)
        .into_par_iter()
        .flat_map_iter(|i| (i..p).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, f(&sols[i], &sols[j])))
        .collect();
    let mut m = Mat::zeros(p, p);
    for (i, j, v) in entries {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

fn l2_pair(a: &[Vector], b: &[Vector], dt: f64) -> f64 {
    trapezoid_weights(a.len(), dt)
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x.dot(y))
        .sum()
}

/// Assemble the Gramian, its spectrum, the unique-continuation verdict and the constant `K`.
pub fn observability_gramian(sys: &DelaySystem, grid: &TimeGrid) -> Result<ObservabilityReport> {
    if grid.n_steps == 0 {
        return Err(Error::Precondition("empty time grid".into()));
    }
    let n = sys.dim();
    let sols = basis_solves(sys, grid)?;
    let dt = grid.dt;
    let gramian = pairing_matrix(&sols, |a, b| l2_pair(&a.observation, &b.observation, dt));
    if gramian.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite Gramian entry".into()));
    }
    let (eigenvalues, vectors) = sorted_eigen(&gramian)?;
    let lmax = eigenvalues.first().cloned().unwrap_or(0.0).max(0.0);
    let thresh = NULL_TOL * lmax;
    let null_idx: Vec<usize> = (0..eigenvalues.len())
        .filter(|&i| lmax == 0.0 || eigenvalues[i] < thresh)
        .collect();
    let null_vectors: Vec<Vector> = null_idx.iter().map(|&i| vectors.column(i).into_owned()).collect();

    let verdict = match null_vectors
        .iter()
        .find(|v| !continuation_condition_holds(sys, grid, v))
    {
        Some(v) => Verdict::UnobservableDirection(v.clone()),
        None => Verdict::Observable,
    };

    // K over the (theta, T1) grid
    let d = grid.delay_steps as isize;
    let nn = grid.n_steps as isize;
    let has_cont = sols.iter().all(|s| s.has_continuation());
    let theta_idx: Vec<isize> = if has_cont {
        sample_indices(-d, 0)
    } else {
        vec![0]
    };
    let t1_idx = sample_indices(nn - d, nn);
    let range_idx: Vec<usize> = (0..eigenvalues.len()).filter(|i| !null_idx.contains(i)).collect();
    let mut k_per_pair = Vec::new();
    for &kt in &theta_idx {
        for &k1 in &t1_idx {
            let q = window_matrix(&sols, grid, kt, k1, n);
            let k = generalized_max(&q, &eigenvalues, &vectors, &range_idx, &null_idx);
            k_per_pair.push(PairConstant {
                theta: grid.time(kt),
                t1: grid.time(k1),
                k,
            });
        }
    }
    let constant_k = if matches!(verdict, Verdict::UnobservableDirection(_))
        || k_per_pair.iter().any(|p| p.k == ObservabilityConstant::Unobservable)
    {
        ObservabilityConstant::Unobservable
    } else {
        ObservabilityConstant::Finite(
            k_per_pair
                .iter()
                .filter_map(|p| p.k.value())
                .fold(0.0, f64::max),
        )
    };
    Ok(ObservabilityReport {
        gramian,
        eigenvalues,
        null_vectors,
        constant_k,
        k_per_pair,
        verdict,
    })
}

fn sample_indices(lo: isize, hi: isize) -> Vec<isize> {
    let mut v: Vec<isize> = (0..K_SAMPLES)
        .map(|i| lo + ((hi - lo) as f64 * i as f64 / (K_SAMPLES - 1) as f64).round() as isize)
        .collect();
    v.dedup();
    v
}

fn sorted_eigen(m: &Mat) -> Result<(Vec<f64>, Mat)> {
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `w_T = 0` and `M~(t)^T z_T = 0` on the grid nodes of `[0, T]`.
fn continuation_condition_holds(sys: &DelaySystem, grid: &TimeGrid, v: &Vector) -> bool {
    let n = sys.dim();
    let tol = 1e-8 * v.norm().max(1.0);
    let w_t = v.rows(0, n);
    let z_t = v.rows(n, n).into_owned();
    if w_t.amax() > tol {
        return false;
    }
    (0..=grid.n_steps).all(|k| match sys.m_tilde.eval(grid.time(k as isize)) {
        Ok(m) => m.tr_mul(&z_t).amax() <= tol * m.amax().max(1.0),
        Err(_) => false,
    })
}

/// Left-hand quadratic form of the inequality at one `(theta, T1)` pair.
fn window_matrix(sols: &[AdjointData], grid: &TimeGrid, kt: isize, k1: isize, n: usize) -> Mat {
    let d = grid.delay_steps as isize;
    let nn = grid.n_steps as isize;
    let dt = grid.dt;
    let zero = Vector::zeros(n);
    let window = |s: &AdjointData, lo: isize, hi: isize| -> Vec<Vector> {
        (lo..=hi).map(|k| s.w(k).cloned().unwrap_or_else(|| zero.clone())).collect()
    };
    let pieces: Vec<(Vector, Vec<Vector>, Vec<Vector>)> = sols
        .iter()
        .map(|s| {
            (
                s.w(kt).cloned().unwrap_or_else(|| zero.clone()),
                window(s, 0, kt + d),
                window(s, k1, nn),
            )
        })
        .collect();
    let p = sols.len();
    let mut q = Mat::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let (a0, a1, a2) = &pieces[i];
            let (b0, b1, b2) = &pieces[j];
            let v = a0.dot(b0) + l2_pair(a1, b1, dt) + l2_pair(a2, b2, dt);
            q[(i, j)] = v;
            q[(j, i)] = v;
        }
    }
    q
}

/// `sup v^T Q v / v^T G v`, infinite when `Q` does not vanish on the kernel of `G`.
fn generalized_max(
    q: &Mat,
    eigenvalues: &[f64],
    vectors: &Mat,
    range_idx: &[usize],
    null_idx: &[usize],
) -> ObservabilityConstant {
    let qscale = q.amax().max(f64::MIN_POSITIVE);
    if !null_idx.is_empty() {
        let u0 = vectors.select_columns(null_idx);
        let q0 = u0.transpose() * q * &u0;
        if q0.amax() > 1e-8 * qscale {
            return ObservabilityConstant::Unobservable;
        }
    }
    if range_idx.is_empty() {
        return ObservabilityConstant::Finite(0.0);
    }
    let ur = vectors.select_columns(range_idx);
    let scale = Mat::from_diagonal(&Vector::from_iterator(
        range_idx.len(),
        range_idx.iter().map(|&i| 1.0 / eigenvalues[i].sqrt()),
    ));
    let reduced = &scale * ur.transpose() * q * &ur * &scale;
    let sym = (&reduced + reduced.transpose()) * 0.5;
    let top = sym.symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max);
    ObservabilityConstant::Finite(top)
}

/// Controllability of the extended constant-kernel system
/// `A^ = [[A, G], [M~, 0]]`, `B^ = [B; 0]` by the Kalman rank of
/// `[B^, A^ B^, .., A^^{2n-1} B^]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KalmanRank {
    pub rank: usize,
    pub dim: usize,
}

impl KalmanRank {
    pub fn is_controllable(&self) -> bool {
        self.rank == self.dim
    }
}

/// Block matrices of the extended system.
pub fn extended_system(a: &Mat, g: &Mat, m_tilde: &Mat, b: &Mat) -> Result<(Mat, Mat)> {
    let n = a.nrows();
    crate::linalg::check_square(a, n, "A")?;
    crate::linalg::check_square(g, n, "G")?;
    crate::linalg::check_square(m_tilde, n, "M~")?;
    if b.nrows() != n {
        return Err(Error::Shape(format!("B has {} rows, expected {n}", b.nrows())));
    }
    let mut ah = Mat::zeros(2 * n, 2 * n);
    ah.view_mut((0, 0), (n, n)).copy_from(a);
    ah.view_mut((0, n), (n, n)).copy_from(g);
    ah.view_mut((n, 0), (n, n)).copy_from(m_tilde);
    let mut bh = Mat::zeros(2 * n, b.ncols());
    bh.view_mut((0, 0), (n, b.ncols())).copy_from(b);
    Ok((ah, bh))
}

/// The Kalman matrix `[B^, A^ B^, .., A^^{2n-1} B^]`.
pub fn extended_kalman_matrix(a: &Mat, g: &Mat, m_tilde: &Mat, b: &Mat) -> Result<Mat> {
    let (ah, bh) = extended_system(a, g, m_tilde, b)?;
    let dim = ah.nrows();
    let m = bh.ncols();
    let mut k = Mat::zeros(dim, dim * m);
    let mut block = bh;
    for p in 0..dim {
        k.view_mut((0, p * m), (dim, m)).copy_from(&block);
        block = &ah * block;
    }
    Ok(k)
}

pub fn kalman_rank_extended(a: &Mat, g: &Mat, m_tilde: &Mat, b: &Mat) -> Result<KalmanRank> {
    let k = extended_kalman_matrix(a, g, m_tilde, b)?;
    Ok(KalmanRank {
        rank: numerical_rank(&k, 1e-10),
        dim: k.nrows(),
    })
}

/// Kalman rank of the extended system built from a delay system whose kernels
/// are constant with `M = G M~`. `None` when the kernels or `B` vary in time or no
/// such `G` exists (`G` is the least-squares solution, accepted at relative
/// residual 1e-10).
pub fn kalman_rank_for_system(sys: &DelaySystem) -> Result<Option<KalmanRank>> {
    let (Some(m), Some(mt)) = (sys.m.constant_matrix(), sys.m_tilde.constant_matrix()) else {
        return Ok(None);
    };
    let crate::forward::ControlMap::Constant(b) = &sys.b else {
        return Ok(None);
    };
    let n = sys.dim();
    // G M~ = M  <=>  M~^T G^T = M^T
    let g = if mt.iter().all(|&v| v == 0.0) {
        if m.iter().any(|&v| v != 0.0) {
            return Ok(None);
        }
        Mat::zeros(n, n)
    } else {
        let svd = mt.transpose().svd(true, true);
        let gt = svd
            .solve(&m.transpose(), 1e-12)
            .map_err(|e| Error::Numerical(format!("least-squares factor: {e}")))?;
        let g = gt.transpose();
        let resid = (&g * &mt - &m).norm();
        if resid > 1e-10 * m.norm().max(1.0) {
            return Ok(None);
        }
        g
    };
    kalman_rank_extended(&sys.a, &g, &mt, b).map(Some)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    pub worst_ratio: f64,
    #[serde(serialize_with = "ser_vec")]
    pub worst_direction: Vector,
    pub n_samples: usize,
}

/// Minimum over random unit terminal data of
/// `|B^T w|^2_{L2} / (|w_T|^2 + (int_0^T |M~(t)^T z_T| dt)^2)`.
pub fn unique_continuation_probe(
    sys: &DelaySystem,
    grid: &TimeGrid,
    n_samples: usize,
    seed: u64,
) -> Result<ProbeResult> {
    let n = sys.dim();
    let stepper = AdjointStepper::new(sys, grid)?;
    let mut rng = InstanceRng::new(seed);
    let dirs: Vec<Vector> = (0..n_samples).map(|_| rng.unit_vector(2 * n)).collect();
    let mt: Vec<Mat> = (0..=grid.n_steps)
        .map(|k| sys.m_tilde.eval(grid.time(k as isize)))
        .collect::<Result<_>>()?;
    let ratios: Vec<(f64, usize)> = dirs
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let w_t = v.rows(0, n).into_owned();
            let z_t = v.rows(n, n).into_owned();
            let adj = stepper.solve(&w_t, &z_t)?;
            let num = adj.observation_energy();
            let norms: Vec<f64> = mt.iter().map(|m| m.tr_mul(&z_t).norm()).collect();
            let mem = crate::base::trapezoid(&norms, grid.dt);
            let den = w_t.norm_squared() + mem * mem;
            Ok((if den > 0.0 { num / den } else { f64::INFINITY }, i))
        })
        .collect::<Result<_>>()?;
    let (worst_ratio, idx) = ratios
        .into_iter()
        .fold((f64::INFINITY, 0), |acc, x| if x.0 < acc.0 { x } else { acc });
    Ok(ProbeResult {
        worst_ratio,
        worst_direction: dirs.get(idx).cloned().unwrap_or_else(|| Vector::zeros(2 * n)),
        n_samples,
    })
}
