use crate::error::{Error, Result};

/// Path sampled on the dyadic grid `t_j = s + j (t - s) 2^{-level}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    start: f64,
    end: f64,
    level: u32,
    dim: usize,
    values: Vec<f64>,
}

impl GridPath {
    /// `values` holds `2^level + 1` points, row-major with `dim` coordinates each.
    pub fn new(interval: (f64, f64), level: u32, dim: usize, values: Vec<f64>) -> Result<Self> {
        let (s, t) = interval;
        if !(s.is_finite() && t.is_finite() && s < t) {
            return Err(Error::InvalidPath(format!("empty or non-finite interval [{s}, {t}]")));
        }
        if dim == 0 {
            return Err(Error::InvalidPath("dimension must be positive".into()));
        }
        if level > 30 {
            return Err(Error::SizeLimit(format!("level {level} exceeds 30")));
        }
        let n = (1usize << level) + 1;
        if values.len() != n * dim {
            return Err(Error::InvalidPath(format!(
                "expected {} values for {} points of dimension {}, got {}",
                n * dim,
                n,
                dim,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("non-finite coordinate".into()));
        }
        Ok(GridPath { start: s, end: t, level, dim, values })
    }

    pub fn from_fn(interval: (f64, f64), level: u32, dim: usize, f: impl Fn(f64, &mut [f64])) -> Result<Self> {
        let n = 1usize << level;
        let mut values = vec![0.0; (n + 1) * dim];
        for j in 0..=n {
            let t = interval.0 + (interval.1 - interval.0) * j as f64 / n as f64;
            f(t, &mut values[j * dim..(j + 1) * dim]);
        }
        GridPath::new(interval, level, dim, values)
    }

    pub fn constant(interval: (f64, f64), level: u32, point: &[f64]) -> Result<Self> {
        GridPath::from_fn(interval, level, point.len(), |_, out| out.copy_from_slice(point))
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_steps(&self) -> usize {
        1usize << self.level
    }

    pub fn n_points(&self) -> usize {
        self.n_steps() + 1
    }

    pub fn dt(&self) -> f64 {
        (self.end - self.start) / self.n_steps() as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        self.start + (self.end - self.start) * j as f64 / self.n_steps() as f64
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn first(&self) -> &[f64] {
        self.point(0)
    }

    pub fn last(&self) -> &[f64] {
        self.point(self.n_steps())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn increment(&self, a: usize, b: usize) -> Vec<f64> {
        let (pa, pb) = (self.point(a), self.point(b));
        pb.iter().zip(pa).map(|(y, x)| y - x).collect()
    }

    pub fn check_range(&self, a: usize, b: usize) -> Result<()> {
        if a > b || b > self.n_steps() {
            return Err(Error::OutOfRange { a, b, n: self.n_steps() });
        }
        Ok(())
    }

    /// Grid index of time `t`, rejecting times off the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.start) / self.dt();
        let j = x.round();
        let tol = 1e-9 * (1.0 + x.abs());
        if (x - j).abs() > tol || j < 0.0 || j > self.n_steps() as f64 {
            return Err(Error::OffGrid(t));
        }
        Ok(j as usize)
    }

    /// Restriction to the coarser dyadic grid of the given level.
    pub fn subsample(&self, level: u32) -> Result<GridPath> {
        if level > self.level {
            return Err(Error::InvalidPath(format!("cannot refine level {} to {}", self.level, level)));
        }
        let stride = 1usize << (self.level - level);
        let mut values = Vec::with_capacity(((1usize << level) + 1) * self.dim);
        for j in (0..=self.n_steps()).step_by(stride) {
            values.extend_from_slice(self.point(j));
        }
        GridPath::new(self.interval(), level, self.dim, values)
    }

    /// Sub-path on grid indices `a..=b`; `b - a` must be a power of two.
    pub fn window(&self, a: usize, b: usize) -> Result<GridPath> {
        self.check_range(a, b)?;
        let len = b - a;
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::InvalidPath(format!("window length {len} is not a power of two")));
        }
        GridPath::new(
            (self.time(a), self.time(b)),
            len.trailing_zeros(),
            self.dim,
            self.values[a * self.dim..(b + 1) * self.dim].to_vec(),
        )
    }

    /// Spatial translation by `offset`.
    pub fn shifted(&self, offset: &[f64]) -> GridPath {
        assert_eq!(offset.len(), self.dim);
        let mut p = self.clone();
        for (i, v) in p.values.iter_mut().enumerate() {
            *v += offset[i % self.dim];
        }
        p
    }

    /// Same values on the interval translated by `dt`.
    pub fn time_shifted(&self, dt: f64) -> GridPath {
        let mut p = self.clone();
        p.start += dt;
        p.end += dt;
        p
    }

    /// Joins two adjacent paths of equal length and matching endpoint.
    pub fn join(&self, other: &GridPath) -> Result<GridPath> {
        if self.dim != other.dim || self.level != other.level {
            return Err(Error::InvalidPath("joined paths must share dimension and level".into()));
        }
        if (self.end - other.start).abs() > 1e-12 * (1.0 + self.end.abs()) || self.last() != other.first() {
            return Err(Error::InvalidPath("joined paths must be contiguous".into()));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values[self.dim..]);
        GridPath::new((self.start, other.end), self.level + 1, self.dim, values)
    }

    /// Concatenates `2^k` contiguous paths of equal length.
    pub fn concat(parts: &[GridPath]) -> Result<GridPath> {
        if parts.is_empty() || !parts.len().is_power_of_two() {
            return Err(Error::InvalidPath("concatenation needs a power-of-two number of parts".into()));
        }
        let mut cur: Vec<GridPath> = parts.to_vec();
        while cur.len() > 1 {
            cur = cur.chunks(2).map(|c| c[0].join(&c[1])).collect::<Result<_>>()?;
        }
        Ok(cur.pop().unwrap())
    }
}
