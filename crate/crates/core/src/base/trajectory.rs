use std::io::Write;

use crate::base::TimeGrid;
use crate::error::{Error, Result};
use crate::linalg::Vector;

/// State samples on a contiguous run of grid nodes `first_index..=last_index`.
///
/// Forward trajectories start at `-delay_steps` (history attached); adjoint
/// trajectories run up to `n_steps + delay_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub first_index: isize,
    pub samples: Vec<Vector>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, first_index: isize, samples: Vec<Vector>) -> Result<Self> {
        let n = samples.first().map_or(0, |v| v.len());
        if samples.iter().any(|v| v.len() != n) {
            return Err(Error::Shape("trajectory samples have differing dimensions".into()));
        }
        Ok(Self {
            grid,
            first_index,
            samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |v| v.len())
    }

    pub fn last_index(&self) -> isize {
        self.first_index + self.samples.len() as isize - 1
    }

    pub fn contains(&self, k: isize) -> bool {
        k >= self.first_index && k <= self.last_index()
    }

    pub fn at(&self, k: isize) -> Option<&Vector> {
        if self.contains(k) {
            Some(&self.samples[(k - self.first_index) as usize])
        } else {
            None
        }
    }

    /// Sample at node `k`; panics when `k` is outside the stored range.
    pub fn node(&self, k: isize) -> &Vector {
        self.at(k)
            .unwrap_or_else(|| panic!("node {k} outside trajectory range"))
    }

    /// Sample at node `k`, zero outside the stored range.
    pub fn at_or_zero(&self, k: isize) -> Vector {
        self.at(k).cloned().unwrap_or_else(|| Vector::zeros(self.dim()))
    }

    /// Terminal sample `y(T)`.
    pub fn terminal(&self) -> &Vector {
        self.node(self.grid.n_steps as isize)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (self.first_index..=self.last_index()).map(|k| self.grid.time(k))
    }

    /// Max-norm distance over the common node range.
    pub fn max_diff(&self, other: &Trajectory) -> f64 {
        let lo = self.first_index.max(other.first_index);
        let hi = self.last_index().min(other.last_index());
        (lo..=hi)
            .map(|k| (self.node(k) - other.node(k)).amax())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,<prefix>_1..<prefix>_n`, one row per node.
    pub fn write_csv<W: Write>(&self, out: W, prefix: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("{prefix}_{i}")));
        w.write_record(&header)?;
        for (t, v) in self.times().zip(&self.samples) {
            let mut row = vec![fmt_num(t)];
            row.extend(v.iter().map(|&x| fmt_num(x)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal representation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_with_history_offset() {
        let g = TimeGrid::new(1.0, 0.5, 0.5).unwrap();
        let s = (0..4).map(|i| Vector::from_element(1, i as f64)).collect();
        let tr = Trajectory::new(g, -1, s).unwrap();
        assert_eq!(tr.node(-1)[0], 0.0);
        assert_eq!(tr.terminal()[0], 3.0);
        assert!(tr.at(3).is_none());
        assert_eq!(tr.at_or_zero(5)[0], 0.0);
    }

    #[test]
    fn csv_header_and_rows() {
        let g = TimeGrid::new(1.0, 0.5, 0.5).unwrap();
        let s = (0..3).map(|i| Vector::from_vec(vec![i as f64, 1.0])).collect();
        let tr = Trajectory::new(g, 0, s).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, "y").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,y_1,y_2");
        assert_eq!(lines[2], "0.5,1.0,1.0");
        assert_eq!(lines.len(), 4);
    }
}
