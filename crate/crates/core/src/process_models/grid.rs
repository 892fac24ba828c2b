use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{IdtError, Result};
use crate::fmt::float17;
use crate::rng::SeedInfo;

/// Relative slack used when matching computed times against grid points.
const TIME_EPS: f64 = 1e-12;

fn slack(t: f64) -> f64 {
    TIME_EPS * t.abs().max(1.0)
}

/// Strictly increasing observation times starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(IdtError::InvalidGrid("empty grid".into()));
        }
        if times[0] != 0.0 {
            return Err(IdtError::InvalidGrid(format!("first time must be 0, got {}", times[0])));
        }
        if let Some(bad) = times.iter().find(|t| !t.is_finite()) {
            return Err(IdtError::InvalidGrid(format!("non-finite time {bad}")));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(IdtError::InvalidGrid(format!("times not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(Self { times })
    }

    /// Grid through 0 and every (nonnegative) requested time.
    pub fn through(times: &[f64]) -> Result<Self> {
        let mut all = Vec::with_capacity(times.len() + 1);
        all.push(0.0);
        for &t in times {
            if !(t.is_finite() && t >= 0.0) {
                return Err(IdtError::InvalidGrid(format!("requested time {t} is not a finite nonnegative number")));
            }
            all.push(t);
        }
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| (*a - *b).abs() <= slack(*b));
        Self::new(all)
    }

    /// `cells` equal steps on `[0, t_max]`.
    pub fn uniform(t_max: f64, cells: usize) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) || cells == 0 {
            return Err(IdtError::InvalidGrid(format!("uniform grid needs t_max > 0 and cells > 0 (got {t_max}, {cells})")));
        }
        let h = t_max / cells as f64;
        let mut times: Vec<f64> = (0..=cells).map(|k| k as f64 * h).collect();
        times[cells] = t_max;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.times.last().expect("grid is never empty")
    }

    /// Index of the grid point equal to `t` (up to rounding slack).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = self.times.partition_point(|&x| x < t - slack(t));
        (i < self.times.len() && (self.times[i] - t).abs() <= slack(t)).then_some(i)
    }

    /// Index of the last grid point not after `t` (càdlàg lookup).
    pub fn locate(&self, t: f64) -> Result<usize> {
        if t > self.last() + slack(self.last()) {
            return Err(IdtError::HorizonExceeded { time: t, horizon: self.last() });
        }
        if t < 0.0 {
            return Err(IdtError::InvalidGrid(format!("negative time {t}")));
        }
        let i = self.times.partition_point(|&x| x <= t + slack(t));
        Ok(i.saturating_sub(1))
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(IdtError::InvalidGrid(format!("scale factor {factor} must be positive")));
        }
        Self::new(self.times.iter().map(|t| t * factor).collect())
    }

    /// Sorted union of two grids (points closer than the rounding slack merge).
    pub fn union(&self, other: &TimeGrid) -> Self {
        let mut all: Vec<f64> = self.times.iter().chain(other.times.iter()).copied().collect();
        all.sort_by(f64::total_cmp);
        all.dedup_by(|a, b| (*a - *b).abs() <= slack(*b));
        Self { times: all }
    }
}

impl TryFrom<Vec<f64>> for TimeGrid {
    type Error = IdtError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TimeGrid::new(v)
    }
}

impl From<TimeGrid> for Vec<f64> {
    fn from(g: TimeGrid) -> Self {
        g.times
    }
}

/// One càdlàg path observed on a grid, with its jumps when the sampler knows them.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub grid: Arc<TimeGrid>,
    pub values: Vec<f64>,
    pub jumps: Option<Vec<(f64, f64)>>,
}

impl SamplePath {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>, jumps: Option<Vec<(f64, f64)>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(IdtError::InvalidGrid(format!("{} values for {} grid points", values.len(), grid.len())));
        }
        if let Some(js) = &jumps {
            if let Some(&(t, _)) = js.iter().find(|(t, _)| !(*t >= 0.0 && *t <= grid.last())) {
                return Err(IdtError::InvalidGrid(format!("jump time {t} outside [0, {}]", grid.last())));
            }
        }
        Ok(Self { grid, values, jumps })
    }

    /// Previous-value evaluation.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.grid.locate(t)?])
    }
}

/// `m` paths on one shared grid, reproducible from `seed_info`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub grid: Arc<TimeGrid>,
    pub paths: Vec<SamplePath>,
    pub seed_info: SeedInfo,
}

impl PathEnsemble {
    pub fn new(grid: Arc<TimeGrid>, paths: Vec<SamplePath>, seed_info: SeedInfo) -> Result<Self> {
        if let Some(p) = paths.iter().find(|p| !Arc::ptr_eq(&p.grid, &grid) && *p.grid != *grid) {
            return Err(IdtError::InvalidGrid(format!("path grid of length {} differs from ensemble grid", p.grid.len())));
        }
        Ok(Self { grid, paths, seed_info })
    }

    /// Builds an ensemble from raw value rows.
    pub fn from_rows(grid: TimeGrid, rows: Vec<Vec<f64>>, seed_info: SeedInfo) -> Result<Self> {
        let grid = Arc::new(grid);
        let paths = rows
            .into_iter()
            .map(|v| SamplePath::new(grid.clone(), v, None))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, paths, seed_info })
    }

    pub fn m(&self) -> usize {
        self.paths.len()
    }

    /// Values of every path at the grid time `t`.
    pub fn values_at(&self, t: f64) -> Result<Vec<f64>> {
        let i = self.grid.index_of(t).ok_or(IdtError::GridMismatch(t))?;
        Ok(self.paths.iter().map(|p| p.values[i]).collect())
    }

    pub fn has_jumps(&self) -> bool {
        !self.paths.is_empty() && self.paths.iter().all(|p| p.jumps.is_some())
    }

    /// Writes `path_id,time,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "path_id,time,value")?;
        for (id, p) in self.paths.iter().enumerate() {
            for (t, v) in self.grid.times().iter().zip(&p.values) {
                writeln!(out, "{id},{},{}", float17(*t), float17(*v))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![0.5, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, f64::INFINITY]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 2.0]).is_ok());
    }

    #[test]
    fn cadlag_lookup() {
        let g = Arc::new(TimeGrid::new(vec![0.0, 1.0, 2.0]).unwrap());
        let p = SamplePath::new(g, vec![0.0, 5.0, 7.0], None).unwrap();
        assert_eq!(p.value_at(0.5).unwrap(), 0.0);
        assert_eq!(p.value_at(1.0).unwrap(), 5.0);
        assert_eq!(p.value_at(0.1 * 3.0 / 0.3).unwrap(), 5.0);
        assert_eq!(p.value_at(2.0).unwrap(), 7.0);
        assert!(matches!(p.value_at(2.5), Err(IdtError::HorizonExceeded { .. })));
    }

    #[test]
    fn through_merges_and_sorts() {
        let g = TimeGrid::through(&[2.0, 0.5, 2.0, 0.0]).unwrap();
        assert_eq!(g.times(), &[0.0, 0.5, 2.0]);
        assert_eq!(g.index_of(0.5), Some(1));
        assert_eq!(g.index_of(0.75), None);
    }

    #[test]
    fn csv_header_and_rows() {
        let e = PathEnsemble::from_rows(
            TimeGrid::new(vec![0.0, 1.0]).unwrap(),
            vec![vec![0.0, 1.5]],
            SeedInfo::new(1),
        )
        .unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "path_id,time,value");
        assert_eq!(lines[2], "0,1.0000000000000000e0,1.5000000000000000e0");
    }
}
