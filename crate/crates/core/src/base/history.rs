use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{serde_vector, Vector};

/// Initial history `phi` on `[-h, 0]`, sampled uniformly and interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HistorySpec", into = "HistorySpec")]
pub struct HistoryFunction {
    step: f64,
    values: Vec<Vector>,
}

/// JSON form: `{"step": 0.005, "values": [[..], ..]}` with samples at `-h, -h+step, .., 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistorySpec {
    pub step: f64,
    #[serde(with = "serde_vector::vec")]
    pub values: Vec<Vector>,
}

impl TryFrom<HistorySpec> for HistoryFunction {
    type Error = Error;
    fn try_from(s: HistorySpec) -> Result<Self> {
        Self::new(s.step, s.values)
    }
}

impl From<HistoryFunction> for HistorySpec {
    fn from(h: HistoryFunction) -> Self {
        HistorySpec {
            step: h.step,
            values: h.values,
        }
    }
}

impl HistoryFunction {
    pub fn new(step: f64, values: Vec<Vector>) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Domain(format!("history step must be positive, got {step}")));
        }
        let n = values
            .first()
            .ok_or_else(|| Error::Shape("history needs at least one sample".into()))?
            .len();
        if values.iter().any(|v| v.len() != n) {
            return Err(Error::Shape("history samples have differing dimensions".into()));
        }
        Ok(Self { step, values })
    }

    /// `phi(theta) = value` on `[-h, 0]`.
    pub fn constant(value: Vector, h: f64, step: f64) -> Result<Self> {
        let count = steps(h, step)? + 1;
        Self::new(step, vec![value; count])
    }

    /// Zero on the grid nodes of `[-h, 0)`, `value` at `theta = 0`.
    pub fn point(value: Vector, h: f64, step: f64) -> Result<Self> {
        let count = steps(h, step)? + 1;
        let mut values = vec![Vector::zeros(value.len()); count];
        values[count - 1] = value;
        Self::new(step, values)
    }

    pub fn from_fn(dim: usize, h: f64, step: f64, f: impl Fn(f64) -> Vector) -> Result<Self> {
        let d = steps(h, step)?;
        let values: Vec<Vector> = (0..=d).map(|i| f(-h + i as f64 * step)).collect();
        if values.iter().any(|v| v.len() != dim) {
            return Err(Error::Shape(format!("history function must return {dim}-vectors")));
        }
        Self::new(step, values)
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Delay length covered by the samples.
    pub fn span(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn samples(&self) -> &[Vector] {
        &self.values
    }

    /// `phi(theta)` for `theta` in `[-h, 0]`.
    pub fn eval(&self, theta: f64) -> Result<Vector> {
        let h = self.span();
        let slack = 1e-12 * h.max(1.0);
        if theta < -h - slack || theta > slack {
            return Err(Error::Domain(format!(
                "history evaluated at theta = {theta} outside [-{h}, 0]"
            )));
        }
        let x = ((theta + h) / self.step).clamp(0.0, (self.values.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.values.len().saturating_sub(2));
        if self.values.len() == 1 {
            return Ok(self.values[0].clone());
        }
        let w = x - i as f64;
        Ok(&self.values[i] * (1.0 - w) + &self.values[i + 1] * w)
    }

    /// True when every sample strictly before `theta = 0` is zero.
    pub fn vanishes_before_zero(&self) -> bool {
        self.values[..self.values.len() - 1]
            .iter()
            .all(|v| v.iter().all(|&x| x == 0.0))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            step: self.step,
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }
}

fn steps(h: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || h < 0.0 {
        return Err(Error::Domain(format!("invalid history span h = {h}, step = {step}")));
    }
    let r = h / step;
    let k = r.round();
    if (r - k).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::Grid(format!("history span {h} is not a multiple of {step}")));
    }
    Ok(k as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_count_and_interpolation() {
        let h = HistoryFunction::from_fn(1, 0.1, 0.01, |t| Vector::from_element(1, t)).unwrap();
        assert_eq!(h.len(), 11);
        assert!((h.eval(-0.055).unwrap()[0] + 0.055).abs() < 1e-14);
        assert!((h.eval(0.0).unwrap()[0]).abs() < 1e-14);
        assert!(matches!(h.eval(0.01), Err(Error::Domain(_))));
        assert!(matches!(h.eval(-0.2), Err(Error::Domain(_))));
    }

    #[test]
    fn point_history_vanishes_before_zero() {
        let h = HistoryFunction::point(Vector::from_element(2, 1.0), 0.1, 0.05).unwrap();
        assert!(h.vanishes_before_zero());
        assert_eq!(h.eval(0.0).unwrap()[1], 1.0);
        let c = HistoryFunction::constant(Vector::from_element(2, 1.0), 0.1, 0.05).unwrap();
        assert!(!c.vanishes_before_zero());
    }

    #[test]
    fn json_roundtrip() {
        let h = HistoryFunction::constant(Vector::from_vec(vec![1.0, 2.0]), 0.1, 0.05).unwrap();
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.contains("\"step\":0.05"));
        let back: HistoryFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
    }
}
