use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{serde_rows, Mat, Vector};

/// Matrix-valued memory kernel `M(t)`, `t >= 0`.
///
/// Exponential-polynomial kernels are `M(t) = e^{a t} * sum_k a_k t^k` with
/// square coefficient matrices `a_0..a_K`. Sampled kernels interpolate linearly
/// between uniformly spaced samples starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpec", into = "KernelSpec")]
pub struct MemoryKernel {
    form: KernelForm,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum KernelForm {
    Zero,
    Constant(Mat),
    ExpPoly { a: f64, coeffs: Vec<Mat> },
    Sampled { spacing: f64, samples: Vec<Mat> },
}

/// Serialized form of a [`MemoryKernel`]: `{"form": "exp_poly", "a": -1.0, "coeffs": [[[..]]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KernelSpec {
    Zero {
        dim: usize,
    },
    Constant {
        #[serde(with = "serde_rows")]
        matrix: Mat,
    },
    ExpPoly {
        a: f64,
        #[serde(with = "serde_rows::vec")]
        coeffs: Vec<Mat>,
    },
    Sampled {
        spacing: f64,
        #[serde(with = "serde_rows::vec")]
        samples: Vec<Mat>,
    },
}

impl TryFrom<KernelSpec> for MemoryKernel {
    type Error = Error;

    fn try_from(spec: KernelSpec) -> Result<Self> {
        match spec {
            KernelSpec::Zero { dim } => Ok(Self::zero(dim)),
            KernelSpec::Constant { matrix } => Self::constant(matrix),
            KernelSpec::ExpPoly { a, coeffs } => Self::exp_poly(a, coeffs),
            KernelSpec::Sampled { spacing, samples } => Self::sampled(spacing, samples),
        }
    }
}

impl From<MemoryKernel> for KernelSpec {
    fn from(k: MemoryKernel) -> Self {
        match k.form {
            KernelForm::Zero => KernelSpec::Zero { dim: k.dim },
            KernelForm::Constant(matrix) => KernelSpec::Constant { matrix },
            KernelForm::ExpPoly { a, coeffs } => KernelSpec::ExpPoly { a, coeffs },
            KernelForm::Sampled { spacing, samples } => KernelSpec::Sampled { spacing, samples },
        }
    }
}

fn common_square_dim(ms: &[Mat], what: &str) -> Result<usize> {
    let first = ms
        .first()
        .ok_or_else(|| Error::Shape(format!("{what}: at least one matrix required")))?;
    let n = first.nrows();
    for m in ms {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Shape(format!(
                "{what}: all matrices must be {n}x{n}, found {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    Ok(n)
}

fn is_scalar_identity(m: &Mat) -> bool {
    let c = if m.nrows() > 0 { m[(0, 0)] } else { 0.0 };
    m.iter().enumerate().all(|(idx, &v)| {
        let (i, j) = (idx % m.nrows(), idx / m.nrows());
        if i == j {
            v == c
        } else {
            v == 0.0
        }
    })
}

impl MemoryKernel {
    pub fn zero(dim: usize) -> Self {
        Self {
            form: KernelForm::Zero,
            dim,
        }
    }

    pub fn constant(matrix: Mat) -> Result<Self> {
        let dim = common_square_dim(std::slice::from_ref(&matrix), "constant kernel")?;
        Ok(Self {
            form: KernelForm::Constant(matrix),
            dim,
        })
    }

    pub fn exp_poly(a: f64, coeffs: Vec<Mat>) -> Result<Self> {
        let dim = common_square_dim(&coeffs, "exp-poly kernel")?;
        if !a.is_finite() {
            return Err(Error::Domain(format!("exp-poly rate must be finite, got {a}")));
        }
        Ok(Self {
            form: KernelForm::ExpPoly { a, coeffs },
            dim,
        })
    }

    pub fn sampled(spacing: f64, samples: Vec<Mat>) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::Domain(format!("sample spacing must be positive, got {spacing}")));
        }
        let dim = common_square_dim(&samples, "sampled kernel")?;
        Ok(Self {
            form: KernelForm::Sampled { spacing, samples },
            dim,
        })
    }

    /// Scalar kernel `e^{a t} * c` acting as `c e^{a t} I` on `R^dim`.
    pub fn scalar_exp(dim: usize, a: f64, c: f64) -> Self {
        Self::exp_poly(a, vec![Mat::identity(dim, dim) * c]).expect("identity is square")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        match &self.form {
            KernelForm::Zero => true,
            KernelForm::Constant(m) => m.iter().all(|&v| v == 0.0),
            KernelForm::ExpPoly { coeffs, .. } => coeffs.iter().all(|m| m.iter().all(|&v| v == 0.0)),
            KernelForm::Sampled { samples, .. } => samples.iter().all(|m| m.iter().all(|&v| v == 0.0)),
        }
    }

    /// The matrix of a time-independent kernel, `None` otherwise.
    pub fn constant_matrix(&self) -> Option<Mat> {
        match &self.form {
            KernelForm::Zero => Some(Mat::zeros(self.dim, self.dim)),
            KernelForm::Constant(m) => Some(m.clone()),
            _ => None,
        }
    }

    /// True when every coefficient matrix is a multiple of the identity.
    pub fn is_scalar_identity(&self) -> bool {
        match &self.form {
            KernelForm::Zero => true,
            KernelForm::Constant(m) => is_scalar_identity(m),
            KernelForm::ExpPoly { coeffs, .. } => coeffs.iter().all(is_scalar_identity),
            KernelForm::Sampled { samples, .. } => samples.iter().all(is_scalar_identity),
        }
    }

    /// Upper end of the sampled table, `None` for analytic forms.
    pub fn table_end(&self) -> Option<f64> {
        match &self.form {
            KernelForm::Sampled { spacing, samples } => Some(spacing * (samples.len() - 1) as f64),
            _ => None,
        }
    }

    /// Lift a `1x1` kernel to `dim x dim` by tensoring with the identity.
    pub fn lift_scalar(&self, dim: usize) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::Shape(format!(
                "only 1x1 kernels can be lifted, this one is {}x{}",
                self.dim, self.dim
            )));
        }
        let lift = |m: &Mat| Mat::identity(dim, dim) * m[(0, 0)];
        let form = match &self.form {
            KernelForm::Zero => KernelForm::Zero,
            KernelForm::Constant(m) => KernelForm::Constant(lift(m)),
            KernelForm::ExpPoly { a, coeffs } => KernelForm::ExpPoly {
                a: *a,
                coeffs: coeffs.iter().map(lift).collect(),
            },
            KernelForm::Sampled { spacing, samples } => KernelForm::Sampled {
                spacing: *spacing,
                samples: samples.iter().map(lift).collect(),
            },
        };
        Ok(Self { form, dim })
    }

    /// `M(t)`.
    pub fn eval(&self, t: f64) -> Result<Mat> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("kernel evaluated at t = {t} < 0")));
        }
        let n = self.dim;
        match &self.form {
            KernelForm::Zero => Ok(Mat::zeros(n, n)),
            KernelForm::Constant(m) => Ok(m.clone()),
            KernelForm::ExpPoly { a, coeffs } => {
                // Horner in t, then the exponential factor.
                let mut acc = Mat::zeros(n, n);
                for c in coeffs.iter().rev() {
                    acc *= t;
                    acc += c;
                }
                Ok(acc * (a * t).exp())
            }
            KernelForm::Sampled { spacing, samples } => {
                let end = spacing * (samples.len() - 1) as f64;
                let x = t / spacing;
                let i = x.floor() as usize;
                if i + 1 >= samples.len() {
                    // exactly at the last node is allowed
                    if (t - end).abs() <= 1e-12 * end.max(1.0) {
                        return Ok(samples[samples.len() - 1].clone());
                    }
                    return Err(Error::Range(format!(
                        "t = {t} beyond sampled kernel table end {end}"
                    )));
                }
                let w = x - i as f64;
                Ok(&samples[i] * (1.0 - w) + &samples[i + 1] * w)
            }
        }
    }

    /// `M'(t)`; defined for the analytic forms only.
    pub fn derivative(&self, t: f64) -> Result<Mat> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("kernel derivative at t = {t} < 0")));
        }
        let n = self.dim;
        match &self.form {
            KernelForm::Zero | KernelForm::Constant(_) => Ok(Mat::zeros(n, n)),
            KernelForm::ExpPoly { a, coeffs } => {
                let mut poly = Mat::zeros(n, n);
                let mut dpoly = Mat::zeros(n, n);
                for (k, c) in coeffs.iter().enumerate().rev() {
                    poly *= t;
                    poly += c;
                    if k > 0 {
                        dpoly *= t;
                        dpoly += c * k as f64;
                    }
                }
                Ok((poly * *a + dpoly) * (a * t).exp())
            }
            KernelForm::Sampled { .. } => Err(Error::UnsupportedKernel(
                "derivative of a sampled kernel".into(),
            )),
        }
    }

    pub(crate) fn has_analytic_derivative(&self) -> bool {
        !matches!(self.form, KernelForm::Sampled { .. })
    }
}

/// `M(j dt)` for `j = 0..count`, stored compactly when the kernel is a multiple of `I`.
#[derive(Debug, Clone)]
pub(crate) struct KernelTable {
    dim: usize,
    repr: TableRepr,
}

#[derive(Debug, Clone)]
enum TableRepr {
    Zero,
    Scalar(Vec<f64>),
    Dense(Vec<Mat>),
}

impl KernelTable {
    pub fn new(kernel: &MemoryKernel, dt: f64, count: usize) -> Result<Self> {
        let dim = kernel.dim();
        let repr = if kernel.is_zero() {
            TableRepr::Zero
        } else if kernel.is_scalar_identity() && dim > 0 {
            TableRepr::Scalar(
                (0..count)
                    .map(|j| kernel.eval(j as f64 * dt).map(|m| m[(0, 0)]))
                    .collect::<Result<_>>()?,
            )
        } else {
            TableRepr::Dense(
                (0..count)
                    .map(|j| kernel.eval(j as f64 * dt))
                    .collect::<Result<_>>()?,
            )
        };
        Ok(Self { dim, repr })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, TableRepr::Zero)
    }

    pub fn matrix(&self, j: usize) -> Mat {
        match &self.repr {
            TableRepr::Zero => Mat::zeros(self.dim, self.dim),
            TableRepr::Scalar(c) => Mat::identity(self.dim, self.dim) * c[j],
            TableRepr::Dense(ms) => ms[j].clone(),
        }
    }

    /// `out += alpha * M_j x`.
    pub fn axpy(&self, j: usize, alpha: f64, x: &Vector, out: &mut Vector) {
        match &self.repr {
            TableRepr::Zero => {}
            TableRepr::Scalar(c) => out.axpy(alpha * c[j], x, 1.0),
            TableRepr::Dense(ms) => out.gemv(alpha, &ms[j], x, 1.0),
        }
    }

    /// `out += alpha * M_j^T x`.
    pub fn axpy_t(&self, j: usize, alpha: f64, x: &Vector, out: &mut Vector) {
        match &self.repr {
            TableRepr::Zero => {}
            TableRepr::Scalar(c) => out.axpy(alpha * c[j], x, 1.0),
            TableRepr::Dense(ms) => out.gemv_tr(alpha, &ms[j], x, 1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn scalar(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    #[test]
    fn constant_kernel_is_constant() {
        let g = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let k = MemoryKernel::constant(g.clone()).unwrap();
        assert_eq!(k.eval(0.0).unwrap(), g);
        assert_eq!(k.eval(7.5).unwrap(), g);
    }

    #[test]
    fn exp_poly_values() {
        let k = MemoryKernel::exp_poly(-1.0, vec![scalar(1.0)]).unwrap();
        assert_eq!(k.eval(0.0).unwrap()[(0, 0)], 1.0);
        assert_relative_eq!(k.eval(2f64.ln()).unwrap()[(0, 0)], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn zero_kernel_and_domain_errors() {
        let k = MemoryKernel::zero(3);
        assert_eq!(k.eval(1.0).unwrap(), Mat::zeros(3, 3));
        assert!(matches!(k.eval(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn sampled_interpolates_and_range_checks() {
        let k = MemoryKernel::sampled(0.5, vec![scalar(0.0), scalar(1.0), scalar(3.0)]).unwrap();
        assert_relative_eq!(k.eval(0.25).unwrap()[(0, 0)], 0.5);
        assert_relative_eq!(k.eval(0.75).unwrap()[(0, 0)], 2.0);
        assert_relative_eq!(k.eval(1.0).unwrap()[(0, 0)], 3.0);
        assert!(matches!(k.eval(1.01), Err(Error::Range(_))));
    }

    #[test]
    fn mismatched_coefficients_rejected() {
        let r = MemoryKernel::exp_poly(0.0, vec![Mat::zeros(2, 2), Mat::zeros(3, 3)]);
        assert!(matches!(r, Err(Error::Shape(_))));
        assert!(MemoryKernel::constant(Mat::zeros(2, 3)).is_err());
    }

    #[test]
    fn json_shape_matches_documented_form() {
        let k = MemoryKernel::exp_poly(-1.0, vec![scalar(1.0), scalar(0.5)]).unwrap();
        let js = serde_json::to_value(&k).unwrap();
        assert_eq!(js["form"], "exp_poly");
        assert_eq!(js["a"], -1.0);
        assert_eq!(js["coeffs"][1][0][0], 0.5);
        let back: MemoryKernel = serde_json::from_value(js).unwrap();
        assert_eq!(back, k);
        let bad = serde_json::json!({"form": "exp_poly", "a": 1.0, "coeffs": [[[1.0, 2.0]]]});
        assert!(serde_json::from_value::<MemoryKernel>(bad).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let c0 = Mat::from_row_slice(2, 2, &[1.0, -0.5, 0.2, 0.3]);
        let c1 = Mat::from_row_slice(2, 2, &[0.1, 0.4, -0.7, 1.1]);
        let k = MemoryKernel::exp_poly(-0.8, vec![c0, c1]).unwrap();
        let t = 0.6;
        let eps = 1e-6;
        let fd = (k.eval(t + eps).unwrap() - k.eval(t - eps).unwrap()) / (2.0 * eps);
        assert!((k.derivative(t).unwrap() - fd).amax() < 1e-8);
    }

    proptest! {
        #[test]
        fn exp_poly_matches_direct_formula(
            a in -3.0f64..1.0,
            c in proptest::collection::vec(-2.0f64..2.0, 3),
            t in 0.0f64..5.0,
        ) {
            let coeffs: Vec<Mat> = c.iter().map(|&v| scalar(v)).collect();
            let k = MemoryKernel::exp_poly(a, coeffs).unwrap();
            let direct = (a * t).exp() * (c[0] + c[1] * t + c[2] * t * t);
            let got = k.eval(t).unwrap()[(0, 0)];
            prop_assert!((got - direct).abs() <= 1e-12 * direct.abs().max(1e-300) + 1e-300);
        }
    }
}
