//! Uniform node grids on `[0,M]^d` and nodal functions.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::advance_odometer;

/// `m` nodes per axis on `[0,M]^d`; node `i` sits at `i·h`, `h = M/(m−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    nodes: usize,
    side: f64,
}

impl Grid {
    pub fn new(dim: usize, nodes: usize, side: f64) -> Result<Self> {
        if dim < 2 {
            return Err(invalid("d", "must be at least 2"));
        }
        if nodes < 2 {
            return Err(invalid("m", "need at least 2 nodes per axis"));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(invalid("M", "must be positive"));
        }
        if nodes.checked_pow(dim as u32).is_none() {
            return Err(invalid("m", "grid too large"));
        }
        Ok(Self { dim, nodes, side })
    }

    pub fn unit(dim: usize, nodes: usize) -> Result<Self> {
        Self::new(dim, nodes, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.side / (self.nodes - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nodes.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node index `i` along any axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        if i + 1 == self.nodes {
            self.side
        } else {
            i as f64 * self.spacing()
        }
    }

    /// Row-major flat index (last axis fastest).
    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.nodes + i)
    }

    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for k in (0..self.dim).rev() {
            out[k] = flat % self.nodes;
            flat /= self.nodes;
        }
    }

    pub fn node_coords(&self, flat: usize, out: &mut [f64]) {
        let mut idx = vec![0; self.dim];
        self.unflatten(flat, &mut idx);
        for (o, &i) in out.iter_mut().zip(&idx) {
            *o = self.coord(i);
        }
    }

    /// Flat-index stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim];
        for k in (0..self.dim - 1).rev() {
            s[k] = s[k + 1] * self.nodes;
        }
        s
    }

    /// Smallest node index whose coordinate is `≥ c`, or `None` when `c`
    /// exceeds the box.
    pub fn ceil_index(&self, c: f64) -> Option<usize> {
        if c > self.side {
            return None;
        }
        if c <= 0.0 {
            return Some(0);
        }
        let mut i = ((c / self.spacing()).ceil() as usize).min(self.nodes - 1);
        while i + 1 < self.nodes && self.coord(i) < c {
            i += 1;
        }
        while i > 0 && self.coord(i - 1) >= c {
            i -= 1;
        }
        Some(i)
    }

    /// Calls `f(flat, coords)` for every node in row-major order.
    pub fn for_each_node(&self, mut f: impl FnMut(usize, &[f64])) {
        let mut idx = vec![0usize; self.dim];
        let mut x = vec![0.0; self.dim];
        let mut flat = 0;
        loop {
            for (xk, &i) in x.iter_mut().zip(&idx) {
                *xk = self.coord(i);
            }
            f(flat, &x);
            flat += 1;
            if !advance_odometer(&mut idx, 0, self.nodes - 1) {
                break;
            }
        }
    }
}

/// Nodal values over a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("expected {} values, got {}", grid.len(), values.len()),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut values = vec![0.0; grid.len()];
        grid.for_each_node(|flat, x| values[flat] = f(x));
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.values[self.grid.flat(idx)]
    }

    /// CSV with columns `i0..i{d-1}, x0..x{d-1}, value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.grid.dim();
        let mut header: Vec<String> = (0..d).map(|k| format!("i{k}")).collect();
        header.extend((0..d).map(|k| format!("x{k}")));
        header.push("value".into());
        writeln!(w, "{}", header.join(","))?;
        let mut idx = vec![0usize; d];
        for (flat, v) in self.values.iter().enumerate() {
            self.grid.unflatten(flat, &mut idx);
            let mut line = String::new();
            for &i in &idx {
                line.push_str(&format!("{i},"));
            }
            for &i in &idx {
                line.push_str(&format!("{:.16e},", self.grid.coord(i)));
            }
            line.push_str(&format!("{v:.16e}"));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, side: f64) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid file".into()))??;
        let cols = header.split(',').count();
        if cols < 5 || (cols - 1) % 2 != 0 {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let d = (cols - 1) / 2;
        let mut rows: Vec<(Vec<usize>, f64)> = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split(',').collect();
            if toks.len() != cols {
                return Err(Error::Parse(format!("bad row {line:?}")));
            }
            let idx = toks[..d]
                .iter()
                .map(|t| t.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            let v = toks[cols - 1]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            rows.push((idx, v));
        }
        let m = (rows.len() as f64).powf(1.0 / d as f64).round() as usize;
        let grid = Grid::new(d, m, side)?;
        if rows.len() != grid.len() {
            return Err(Error::Parse("row count is not m^d".into()));
        }
        let mut values = vec![f64::NAN; grid.len()];
        for (idx, v) in rows {
            if idx.iter().any(|&i| i >= m) {
                return Err(Error::Parse(format!("node index {idx:?} out of range")));
            }
            values[grid.flat(&idx)] = v;
        }
        Self::from_values(grid, values)
    }

    /// Flat binary: `d` and `m` as little-endian u64, then row-major f64 values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.grid.dim() as u64).to_le_bytes())?;
        w.write_all(&(self.grid.nodes() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R, side: f64) -> Result<Self> {
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let d = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let m = u64::from_le_bytes(word) as usize;
        let grid = Grid::new(d, m, side)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut word)?;
            values.push(f64::from_le_bytes(word));
        }
        Self::from_values(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_coordinates_are_exact_multiples() {
        let g = Grid::unit(2, 5).unwrap();
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.coord(3), 0.75);
        assert_eq!(g.coord(4), 1.0);
        let mut x = [0.0; 2];
        g.node_coords(g.flat(&[1, 3]), &mut x);
        assert_eq!(x, [0.25, 0.75]);
    }

    #[test]
    fn ceil_index_matches_definition() {
        let g = Grid::unit(2, 11).unwrap();
        for &c in &[0.0, 0.05, 0.1, 0.1000001, 0.3, 0.99, 1.0] {
            let i = g.ceil_index(c).unwrap();
            assert!(g.coord(i) >= c);
            assert!(i == 0 || g.coord(i - 1) < c);
        }
        assert_eq!(g.ceil_index(1.01), None);
    }

    #[test]
    fn flat_and_unflatten_agree() {
        let g = Grid::unit(3, 4).unwrap();
        let mut idx = [0; 3];
        for flat in 0..g.len() {
            g.unflatten(flat, &mut idx);
            assert_eq!(g.flat(&idx), flat);
        }
    }

    #[test]
    fn serialization_round_trips() {
        let g = Grid::unit(2, 6).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] * 3.0 - x[1].sqrt());
        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        assert_eq!(GridFunction::read_csv(csv.as_slice(), 1.0).unwrap(), f);
        let mut bin = Vec::new();
        f.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 16 + 8 * g.len());
        assert_eq!(GridFunction::read_binary(bin.as_slice(), 1.0).unwrap(), f);
    }
}
