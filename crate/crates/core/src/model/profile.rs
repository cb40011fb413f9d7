use std::io::{Read, Write};
use std::sync::Arc;

use super::grid::Grid;
use super::polynomial::QuadraticPolynomial;
use crate::error::{Error, Result};

/// Nodal values of a function on a [`Grid`].
///
/// Axisymmetric profiles are even in `x₁`; values at mirrored nodes are kept
/// bit-identical.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at the nodes with `x₁ ≥ 0` and mirrors the result.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 3]) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        for (i, v) in values.iter_mut().enumerate() {
            let p = grid.point(i);
            if p[0] >= 0.0 {
                *v = f(p);
            }
        }
        let mut out = Self { grid, values };
        out.symmetrize();
        out
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at_origin(&self) -> f64 {
        self.values[self.grid.origin()]
    }

    /// Copies values from `x₁ ≥ 0` onto the mirrored nodes.
    pub fn symmetrize(&mut self) {
        if let Grid::Axisymmetric(g) = &*self.grid {
            let nb = g.n_rho();
            let last = g.x1().len() - 1;
            for k in 0..g.half() {
                let (dst, src) = (k * nb, (last - k) * nb);
                let (lo, hi) = self.values.split_at_mut(src);
                lo[dst..dst + nb].copy_from_slice(&hi[..nb]);
            }
        }
    }

    /// True when mirrored nodes carry bit-identical values.
    pub fn is_even_exact(&self) -> bool {
        (0..self.len()).all(|i| self.values[i].to_bits() == self.values[self.grid.mirror(i)].to_bits())
    }

    /// `sup |v(x)| / (1 + |x|)` over the nodes.
    pub fn x_norm(&self) -> f64 {
        x_norm(self)
    }

    pub fn sample(&self, x: [f64; 3]) -> Option<f64> {
        self.grid.sample(&self.values, x)
    }

    pub fn map(&self, f: impl Fn([f64; 3], f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| f(self.grid.point(i), v))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn plus_polynomial(&self, p: &QuadraticPolynomial) -> Self {
        self.map(|x, v| v + p.evaluate(x))
    }

    pub fn minus_polynomial(&self, p: &QuadraticPolynomial) -> Self {
        self.map(|x, v| v - p.evaluate(x))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|self − other|` over nodes with `|x| ≤ radius`.
    pub fn sup_diff_within(&self, other: &Profile, radius: f64) -> f64 {
        (0..self.len())
            .filter(|&i| self.grid.radius(i) <= radius)
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max)
    }

    fn header(&self) -> &'static [&'static str] {
        match &*self.grid {
            Grid::Radial(_) => &["r", "value"],
            Grid::Axisymmetric(_) => &["x1", "rho", "value"],
        }
    }

    /// Writes `r,value` (radial) or `x1,rho,value` (axisymmetric) rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(self.header())?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            match &*self.grid {
                Grid::Radial(_) => wr.write_record([p[0].to_string(), v.to_string()])?,
                Grid::Axisymmetric(_) => wr.write_record([p[0].to_string(), p[1].to_string(), v.to_string()])?,
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a profile written by [`Profile::write_csv`] and checks that its
    /// nodes coincide with `grid`.
    pub fn read_csv<R: Read>(grid: Arc<Grid>, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let expected: Vec<&str> = match &*grid {
            Grid::Radial(_) => vec!["r", "value"],
            Grid::Axisymmetric(_) => vec!["x1", "rho", "value"],
        };
        let headers: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if headers != expected {
            return Err(Error::GridMismatch(format!(
                "expected columns {expected:?}, found {headers:?}"
            )));
        }
        let mut values = Vec::with_capacity(grid.len());
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::GridMismatch(format!("row {}: {e}", i + 1)))?;
            if i >= grid.len() {
                return Err(Error::GridMismatch(format!("more than {} rows in profile", grid.len())));
            }
            let p = grid.point(i);
            let coords = &nums[..nums.len() - 1];
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
            if !coords.iter().zip(p).all(|(&a, b)| close(a, b)) {
                return Err(Error::GridMismatch(format!(
                    "row {} at {coords:?} does not match grid node {p:?}",
                    i + 1
                )));
            }
            values.push(nums[nums.len() - 1]);
        }
        Self::new(grid, values)
    }
}

/// Weighted sup norm `‖v‖_X = sup |v(x)| / (1 + |x|)`.
pub fn x_norm(v: &Profile) -> f64 {
    v.values
        .iter()
        .enumerate()
        .map(|(i, val)| val.abs() / (1.0 + v.grid.radius(i)))
        .fold(0.0, f64::max)
}
