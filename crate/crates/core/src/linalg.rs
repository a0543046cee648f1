//! Dense linear-algebra helpers shared by the solvers.
//!
//! Matrices are `nalgebra` dense matrices. At every serialization boundary
//! (JSON, CSV) they are written row-major as nested arrays.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// LU factorization (partial pivoting) of an implicit step matrix, factored once per run.
#[derive(Debug, Clone)]
pub struct StepSolver {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    dim: usize,
}

impl StepSolver {
    pub fn new(matrix: Mat, what: &str) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!("{what}: step matrix must be square")));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepFailure(format!("{what}: non-finite entries")));
        }
        let dim = matrix.nrows();
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let lu = matrix.lu();
        let u = lu.u();
        let min_pivot = (0..dim).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if dim > 0 && min_pivot <= scale * 1e3 * f64::EPSILON {
            return Err(Error::StepFailure(format!(
                "{what}: pivot {min_pivot:.3e} below tolerance"
            )));
        }
        Ok(Self { lu, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve_in_place(&self, rhs: &mut Vector) -> Result<()> {
        if self.lu.solve_mut(rhs) {
            Ok(())
        } else {
            Err(Error::StepFailure("LU solve failed".into()))
        }
    }
}

/// Numerical rank from singular values, threshold `rel_tol * sigma_max`
/// (with an absolute floor for the all-zero matrix).
pub fn numerical_rank(m: &Mat, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Max-norm of a vector (0 for empty).
pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn check_square(m: &Mat, n: usize, name: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Shape(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Row-major nested-array (de)serialization for `DMatrix<f64>`.
pub mod serde_rows {
    use super::Mat;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().cloned().collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat, String> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err("ragged matrix rows".into());
        }
        Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(D::Error::custom)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(ms: &[Mat], s: S) -> Result<S::Ok, S::Error> {
            ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Mat>, D::Error> {
            let all = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
            all.iter()
                .map(|rows| from_rows(rows).map_err(D::Error::custom))
                .collect()
        }
    }
}

/// `DVector<f64>` as a flat JSON array.
pub mod serde_vector {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::<f64>::deserialize(d)?))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(vs: &[Vector], s: S) -> Result<S::Ok, S::Error> {
            vs.iter()
                .map(|v| v.as_slice().to_vec())
                .collect::<Vec<_>>()
                .serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vector>, D::Error> {
            Ok(Vec::<Vec<f64>>::deserialize(d)?
                .into_iter()
                .map(Vector::from_vec)
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_identity_and_zero() {
        assert_eq!(numerical_rank(&Mat::identity(3, 3), 1e-12), 3);
        assert_eq!(numerical_rank(&Mat::zeros(3, 4), 1e-12), 0);
    }

    #[test]
    fn singular_step_matrix_is_rejected() {
        let m = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(StepSolver::new(m, "test"), Err(Error::StepFailure(_))));
    }

    #[test]
    fn rows_roundtrip_is_row_major() {
        let m = Mat::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let rows = serde_rows::to_rows(&m);
        assert_eq!(rows[0], vec![1.0, 2.0, 3.0]);
        assert_eq!(serde_rows::from_rows(&rows).unwrap(), m);
    }
}
