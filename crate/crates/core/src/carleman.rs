//! Carleman weights and the weighted functionals `I_H`, `I_O` evaluated on
//! gridded space-time fields.
//!
//! `g` is `1/t` near 0, 1 on `[delta, T/2]`, mirrored about `T/2`, with a monotone
//! cubic bridge on `(delta/2, delta)`. The weights are
//! `phi = g (e^{lambda |psi|_inf} - e^{lambda psi})` and `theta = g e^{lambda psi}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::base::fmt_num;
use crate::error::{Error, Result};
use crate::heat::MovingRegion;

/// `g(t)` on `(0, T)`.
pub fn weight_g(t: f64, delta: f64, t_end: f64) -> Result<f64> {
    check_delta(delta, t_end)?;
    if !(t > 0.0 && t < t_end) {
        return Err(Error::Domain(format!("g is defined on (0, {t_end}), got t = {t}")));
    }
    let t = if t > 0.5 * t_end { t_end - t } else { t };
    Ok(if t < 0.5 * delta {
        1.0 / t
    } else if t < delta {
        bridge(t, delta)
    } else {
        1.0
    })
}

fn check_delta(delta: f64, t_end: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5 * t_end) {
        return Err(Error::Domain(format!("delta must lie in (0, T/2), got {delta}")));
    }
    // a decreasing bridge from 2/delta down to 1 needs 2/delta > 1
    if delta >= 2.0 {
        return Err(Error::Domain(format!(
            "delta = {delta} >= 2 leaves 1/t below 1 at delta/2; no decreasing bridge exists"
        )));
    }
    Ok(())
}

/// Cubic Hermite from `(delta/2, 2/delta, -4/delta^2)` to `(delta, 1, 0)`.
///
/// When the Hermite slopes would overshoot (`delta > 4/3`) they are scaled back
/// by the Fritsch-Carlson rule, which keeps the bridge monotone at the cost of a
/// slope jump at `delta/2`.
fn bridge(t: f64, delta: f64) -> f64 {
    let (x0, x1) = (0.5 * delta, delta);
    let (y0, y1) = (2.0 / delta, 1.0);
    let len = x1 - x0;
    let secant = (y1 - y0) / len;
    let mut m0 = -4.0 / (delta * delta);
    let m1 = 0.0;
    let alpha = m0 / secant;
    if alpha > 3.0 {
        m0 = 3.0 * secant;
    }
    let s = (t - x0) / len;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * y0 + h10 * len * m0 + h01 * y1 + h11 * len * m1
}

/// Spatial weight profile `psi(t, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PsiProfile {
    /// `1 - epsilon dist(x, centre of omega(t))^2`. With `epsilon <= 1/(4 pi^2)`
    /// the profile stays within `[3/4, 1]` on `[0, pi]`. A heuristic diagnostic
    /// profile, not a certified weight.
    Default {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        region: MovingRegion,
    },
    Constant { value: f64 },
    /// Bilinear interpolation of gridded values.
    Field { field: SpaceTimeField },
}

fn default_epsilon() -> f64 {
    1.0 / (4.0 * PI * PI)
}

impl PsiProfile {
    pub fn default_for(region: MovingRegion) -> Self {
        PsiProfile::Default {
            epsilon: default_epsilon(),
            region,
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        match self {
            PsiProfile::Default { epsilon, region } => {
                let (a, b) = region.interval(t)?;
                let d = x - 0.5 * (a + b);
                Ok(1.0 - epsilon * d * d)
            }
            PsiProfile::Constant { value } => Ok(*value),
            PsiProfile::Field { field } => field.interpolate(t, x),
        }
    }

    /// `|psi|_inf`. For the default profile the centre is always in `[0, pi]`, so it is 1.
    pub fn sup_norm(&self) -> f64 {
        match self {
            PsiProfile::Default { .. } => 1.0,
            PsiProfile::Constant { value } => value.abs(),
            PsiProfile::Field { field } => field.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

/// Parameters of the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub delta: f64,
    pub lambda: f64,
    pub s: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub psi: PsiProfile,
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta, self.t_end)?;
        if !(self.lambda >= 0.0) || !(self.s > 0.0) {
            return Err(Error::Config("lambda must be non-negative and s positive".into()));
        }
        Ok(())
    }

    /// Whether `psi >= 3/4 |psi|_inf` holds at every listed point.
    pub fn psi_lower_bound_holds(&self, points: &[(f64, f64)]) -> Result<bool> {
        let sup = self.psi.sup_norm();
        for &(t, x) in points {
            if self.psi.eval(t, x)? < 0.75 * sup {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `(phi, theta)` at one point.
pub fn eval_weights(spec: &WeightSpec, t: f64, x: f64) -> Result<(f64, f64)> {
    let g = weight_g(t, spec.delta, spec.t_end)?;
    let psi = spec.psi.eval(t, x)?;
    let top = (spec.lambda * spec.psi.sup_norm()).exp();
    let e = (spec.lambda * psi).exp();
    Ok((g * (top - e), g * e))
}

/// Scalar field on a uniform grid `t_i = t0 + i dt`, `x_j = x0 + j dx`, stored
/// row-major by time. Boundary nodes of the spatial interval are included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    pub values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn new(t0: f64, dt: f64, nt: usize, x0: f64, dx: f64, nx: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nt * nx {
            return Err(Error::Shape(format!("{} values for a {nt}x{nx} grid", values.len())));
        }
        if !(dt > 0.0 && dx > 0.0) || nt == 0 || nx == 0 {
            return Err(Error::Grid("field grid spacings must be positive and non-empty".into()));
        }
        Ok(Self { t0, dt, nt, x0, dx, nx, values })
    }

    pub fn from_fn(t0: f64, dt: f64, nt: usize, x0: f64, dx: f64, nx: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(nt * nx);
        for i in 0..nt {
            for j in 0..nx {
                values.push(f(t0 + i as f64 * dt, x0 + j as f64 * dx));
            }
        }
        Self { t0, dt, nt, x0, dx, nx, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nx + j]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn t_last(&self) -> f64 {
        self.time(self.nt - 1)
    }

    fn locate(v: f64, v0: f64, step: f64, count: usize) -> Result<(usize, f64)> {
        let pos = (v - v0) / step;
        let last = (count - 1) as f64;
        if pos < -1e-9 || pos > last + 1e-9 {
            return Err(Error::Domain(format!("{v} outside the field grid")));
        }
        let pos = pos.clamp(0.0, last);
        let i = (pos.floor() as usize).min(count.saturating_sub(2));
        Ok((i, pos - i as f64))
    }

    /// Bilinear interpolation.
    pub fn interpolate(&self, t: f64, x: f64) -> Result<f64> {
        let (i, a) = Self::locate(t, self.t0, self.dt, self.nt)?;
        let (j, b) = Self::locate(x, self.x0, self.dx, self.nx)?;
        let i1 = (i + 1).min(self.nt - 1);
        let j1 = (j + 1).min(self.nx - 1);
        Ok((1.0 - a) * ((1.0 - b) * self.at(i, j) + b * self.at(i, j1))
            + a * ((1.0 - b) * self.at(i1, j) + b * self.at(i1, j1)))
    }

    /// Long-format CSV `t,x,<name>`; the header names the value column.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.len() < 3 || &headers[0] != "t" || &headers[1] != "x" {
            return Err(Error::Config("field CSV must have columns t,x,<value>".into()));
        }
        let mut rows: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        let mut ts = Vec::new();
        let mut xs = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Config("short CSV row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad number in field CSV: {e}")))
            };
            let (t, x, v) = (parse(0)?, parse(1)?, parse(2)?);
            ts.push(t);
            xs.push(x);
            rows.insert((key(t), key(x)), v);
        }
        let tgrid = uniform_axis(&mut ts, "t")?;
        let xgrid = uniform_axis(&mut xs, "x")?;
        let mut values = Vec::with_capacity(tgrid.2 * xgrid.2);
        for i in 0..tgrid.2 {
            for j in 0..xgrid.2 {
                let t = tgrid.0 + i as f64 * tgrid.1;
                let x = xgrid.0 + j as f64 * xgrid.1;
                let v = rows
                    .get(&(key(t), key(x)))
                    .ok_or_else(|| Error::Config(format!("field CSV is missing (t, x) = ({t}, {x})")))?;
                values.push(*v);
            }
        }
        Self::new(tgrid.0, tgrid.1, tgrid.2, xgrid.0, xgrid.1, xgrid.2, values)
    }

    pub fn write_csv<W: Write>(&self, out: W, name: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", name])?;
        for i in 0..self.nt {
            for j in 0..self.nx {
                w.write_record([fmt_num(self.time(i)), fmt_num(self.x(j)), fmt_num(self.at(i, j))])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Coordinates rounded to 1e-9 so values printed by different writers match.
fn key(v: f64) -> i64 {
    (v * 1e9).round() as i64
}

fn uniform_axis(vals: &mut Vec<f64>, name: &str) -> Result<(f64, f64, usize)> {
    vals.sort_by(f64::total_cmp);
    vals.dedup_by(|a, b| key(*a) == key(*b));
    match vals.len() {
        0 => Err(Error::Config(format!("field CSV has no {name} values"))),
        1 => Ok((vals[0], 1.0, 1)),
        n => {
            let step = (vals[n - 1] - vals[0]) / (n - 1) as f64;
            for (i, v) in vals.iter().enumerate() {
                if (v - (vals[0] + i as f64 * step)).abs() > 1e-6 * step {
                    return Err(Error::Config(format!("{name} values are not uniformly spaced")));
                }
            }
            Ok((vals[0], step, n))
        }
    }
}

/// The five weighted terms of `I_H` and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IhComponents {
    /// `(s theta)^{-1} |Delta p(t)|^2`.
    pub laplacian: f64,
    /// `(s theta)^{-1} |Delta p(t-h)|^2`.
    pub delayed_laplacian: f64,
    /// `(s theta)^{-1} |p_t|^2`.
    pub time_derivative: f64,
    /// `lambda^2 s theta |grad p|^2`.
    pub gradient: f64,
    /// `lambda^4 (s theta)^3 |p|^2`.
    pub zero_order: f64,
    pub total: f64,
}

/// Weighted-quadrature nodes: time nodes in `[0, T]` and interior spatial nodes.
///
/// Times `0` and `T` (where `g` is infinite) and the two spatial boundary nodes
/// (where second differences are unavailable) carry zero weight; the others use
/// trapezoid weights `dt` and `dx`.
struct Quadrature {
    /// `(i, t_i, weight)`.
    times: Vec<(usize, f64, f64)>,
}

impl Quadrature {
    fn new(field: &SpaceTimeField, t_end: f64) -> Result<Self> {
        if field.nx < 3 {
            return Err(Error::Grid(format!(
                "second differences need at least 3 spatial nodes, got {}",
                field.nx
            )));
        }
        if field.t0 > 1e-12 || field.t_last() < t_end - 1e-9 {
            return Err(Error::Range(format!(
                "field covers [{}, {}], need [0, {t_end}]",
                field.t0,
                field.t_last()
            )));
        }
        let tol = 1e-9 * field.dt;
        let times = (0..field.nt)
            .filter_map(|i| {
                let t = field.time(i);
                (t > tol && t < t_end - tol).then_some((i, t, field.dt))
            })
            .collect();
        Ok(Self { times })
    }
}

fn laplacian_at(f: &SpaceTimeField, i: usize, j: usize) -> f64 {
    (f.at(i, j - 1) - 2.0 * f.at(i, j) + f.at(i, j + 1)) / (f.dx * f.dx)
}

fn time_derivative_at(f: &SpaceTimeField, i: usize, j: usize) -> f64 {
    if f.nt < 2 {
        0.0
    } else if i == 0 {
        (f.at(1, j) - f.at(0, j)) / f.dt
    } else if i == f.nt - 1 {
        (f.at(i, j) - f.at(i - 1, j)) / f.dt
    } else {
        (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * f.dt)
    }
}

/// `I_H(p)` term by term. `p(t - h)` is read from the field where it has data before
/// `t - h` and is zero otherwise; `h` must be a multiple of the field's time step.
pub fn functional_ih(p: &SpaceTimeField, h: f64, spec: &WeightSpec) -> Result<IhComponents> {
    spec.validate()?;
    let q = Quadrature::new(p, spec.t_end)?;
    let shift = (h / p.dt).round();
    if h < 0.0 || (shift * p.dt - h).abs() > 1e-9 * h.max(p.dt) {
        return Err(Error::Grid(format!("delay {h} is not a multiple of the field step {}", p.dt)));
    }
    let shift = shift as usize;
    let (lam, s) = (spec.lambda, spec.s);
    let mut c = IhComponents {
        laplacian: 0.0,
        delayed_laplacian: 0.0,
        time_derivative: 0.0,
        gradient: 0.0,
        zero_order: 0.0,
        total: 0.0,
    };
    for &(i, t, wt) in &q.times {
        for j in 1..p.nx - 1 {
            let (phi, theta) = eval_weights(spec, t, p.x(j))?;
            let damp = (-2.0 * s * phi).exp();
            let w = wt * p.dx * damp;
            if w == 0.0 {
                continue;
            }
            let st = s * theta;
            let lap = laplacian_at(p, i, j);
            let lap_d = if i >= shift { laplacian_at(p, i - shift, j) } else { 0.0 };
            let pt = time_derivative_at(p, i, j);
            let grad = (p.at(i, j + 1) - p.at(i, j - 1)) / (2.0 * p.dx);
            let v = p.at(i, j);
            c.laplacian += w * lap * lap / st;
            c.delayed_laplacian += w * lap_d * lap_d / st;
            c.time_derivative += w * pt * pt / st;
            c.gradient += w * lam * lam * st * grad * grad;
            c.zero_order += w * lam.powi(4) * st.powi(3) * v * v;
        }
    }
    c.total = c.laplacian + c.delayed_laplacian + c.time_derivative + c.gradient + c.zero_order;
    Ok(c)
}

/// `I_O(q) = lambda^(2 s) int theta |q|^2 e^{-2 s phi}`, with the prefactor exactly as stated
/// for the observation functional.
pub fn functional_io(q: &SpaceTimeField, spec: &WeightSpec) -> Result<f64> {
    spec.validate()?;
    let quad = Quadrature::new(q, spec.t_end)?;
    let s = spec.s;
    let mut acc = 0.0;
    for &(i, t, wt) in &quad.times {
        for j in 1..q.nx - 1 {
            let (phi, theta) = eval_weights(spec, t, q.x(j))?;
            let v = q.at(i, j);
            acc += wt * q.dx * theta * v * v * (-2.0 * s * phi).exp();
        }
    }
    Ok(spec.lambda.powf(2.0 * s) * acc)
}

/// `phi` and `theta` on the field's nodes strictly inside `(0, T)`, as `t,x,phi,theta`.
pub fn write_weights_csv<W: Write>(grid: &SpaceTimeField, spec: &WeightSpec, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "phi", "theta"])?;
    for i in 0..grid.nt {
        let t = grid.time(i);
        if t <= 0.0 || t >= spec.t_end {
            continue;
        }
        for j in 0..grid.nx {
            let (phi, theta) = eval_weights(spec, t, grid.x(j))?;
            w.write_record([fmt_num(t), fmt_num(grid.x(j)), fmt_num(phi), fmt_num(theta)])?;
        }
    }
    w.flush()?;
    Ok(())
}
