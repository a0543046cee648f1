use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when checking that a length is an integer number of steps.
const ALIGN_TOL: f64 = 1e-9;

/// Uniform time grid on `[t_start, t_end]` with an attached delay length.
///
/// Node `k` sits at `t_start + k * dt`; negative indices address the history
/// segment `[-h, 0]` and indices past `n_steps` the adjoint extension `(T, T+h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub delay_steps: usize,
}

fn integer_ratio(num: f64, den: f64, what: &str) -> Result<usize> {
    let r = num / den;
    let k = r.round();
    if !r.is_finite() || k < 0.0 || (r - k).abs() > ALIGN_TOL * r.abs().max(1.0) {
        return Err(Error::Grid(format!(
            "{what} = {num} is not an integer multiple of dt = {den}"
        )));
    }
    Ok(k as usize)
}

impl TimeGrid {
    /// Grid on `[0, t_end]` with step `dt` and delay `h`; both `t_end` and `h`
    /// must be integer multiples of `dt`.
    pub fn new(t_end: f64, dt: f64, h: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Grid(format!("dt must be positive, got {dt}")));
        }
        if !(t_end > 0.0) {
            return Err(Error::Grid(format!("t_end must be positive, got {t_end}")));
        }
        if h < 0.0 {
            return Err(Error::Grid(format!("delay must be non-negative, got {h}")));
        }
        let n_steps = integer_ratio(t_end, dt, "horizon")?;
        let delay_steps = integer_ratio(h, dt, "delay")?;
        if n_steps == 0 {
            return Err(Error::Grid("grid has no steps".into()));
        }
        Ok(Self {
            t_start: 0.0,
            t_end,
            dt,
            n_steps,
            delay_steps,
        })
    }

    /// Grid on `[0, t_end]` with `n_steps` steps and a delay of `delay_steps` steps.
    pub fn from_steps(t_end: f64, n_steps: usize, delay_steps: usize) -> Result<Self> {
        if n_steps == 0 || !(t_end > 0.0) {
            return Err(Error::Grid("grid needs t_end > 0 and n_steps > 0".into()));
        }
        Ok(Self {
            t_start: 0.0,
            t_end,
            dt: t_end / n_steps as f64,
            n_steps,
            delay_steps,
        })
    }

    /// Delay length `h = delay_steps * dt`.
    pub fn delay(&self) -> f64 {
        self.delay_steps as f64 * self.dt
    }

    pub fn time(&self, k: isize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    /// Index of a grid-aligned time (may be negative or beyond `n_steps`).
    pub fn index_of(&self, t: f64) -> Result<isize> {
        let r = (t - self.t_start) / self.dt;
        let k = r.round();
        if (r - k).abs() > ALIGN_TOL * r.abs().max(1.0) {
            return Err(Error::Grid(format!("t = {t} is not on the grid (dt = {})", self.dt)));
        }
        Ok(k as isize)
    }

    /// Same grid with the step halved (delay and horizon stay aligned).
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            dt: self.dt / factor as f64,
            n_steps: self.n_steps * factor,
            delay_steps: self.delay_steps * factor,
            ..*self
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_grid_aligns() {
        let g = TimeGrid::new(1.0, 1.0 / 200.0, 0.1).unwrap();
        assert_eq!(g.n_steps, 200);
        assert_eq!(g.delay_steps, 20);
        assert!((g.delay() - 0.1).abs() < 1e-15);
        assert!((g.t_end - g.t_start - g.n_steps as f64 * g.dt).abs() <= g.n_steps as f64 * f64::EPSILON);
    }

    #[test]
    fn rejects_non_integer_delay() {
        assert!(matches!(TimeGrid::new(1.0, 0.01, 0.105), Err(Error::Grid(_))));
        assert!(matches!(TimeGrid::new(1.0, 0.03, 0.09), Err(Error::Grid(_))));
    }

    #[test]
    fn index_of_roundtrips() {
        let g = TimeGrid::new(1.0, 0.01, 0.1).unwrap();
        assert_eq!(g.index_of(-0.1).unwrap(), -10);
        assert_eq!(g.index_of(0.37).unwrap(), 37);
        assert!(g.index_of(0.375).is_err());
    }
}
