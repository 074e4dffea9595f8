//! Sample batches with a cached polar decomposition, and their CSV form.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::{polar, wrap_angle, Direction};

/// An ordered collection of nonzero points of `R^d`.
///
/// Coordinates, norms and unit directions are stored column-major. Points
/// sent to the origin by a transform are dropped and counted in
/// `zero_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    dim: usize,
    seed: Option<u64>,
    coords: Vec<Vec<f64>>,
    norms: Vec<f64>,
    dirs: Vec<Vec<f64>>,
    /// Angles in `[0, 2π)` when `dim = 2`.
    angles: Vec<f64>,
    zero_count: usize,
}

impl SampleBatch {
    /// Builds a batch from row-major coordinates. Zero rows are dropped and
    /// counted.
    pub fn from_rows(dim: usize, rows: &[f64], seed: Option<u64>) -> Result<Self> {
        if dim < 2 || !rows.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rows.len() % dim.max(1),
            });
        }
        let n = rows.len() / dim;
        let mut norms = Vec::with_capacity(n);
        let mut dirs = vec![Vec::with_capacity(n); dim];
        let mut coords = vec![Vec::with_capacity(n); dim];
        let mut zero_count = 0;
        for row in rows.chunks_exact(dim) {
            match polar(row) {
                Ok((r, d)) => {
                    norms.push(r);
                    for j in 0..dim {
                        dirs[j].push(d.coords()[j]);
                        coords[j].push(row[j]);
                    }
                }
                Err(Error::DegeneratePoint) => zero_count += 1,
                Err(e) => return Err(e),
            }
        }
        let angles = if dim == 2 {
            (0..norms.len())
                .map(|i| wrap_angle(dirs[1][i].atan2(dirs[0][i])))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            dim,
            seed,
            coords,
            norms,
            dirs,
            angles,
            zero_count,
        })
    }

    /// Builds a batch from norms and unit directions; coordinates are
    /// `norm · direction`.
    pub(crate) fn from_polar(
        dim: usize,
        seed: Option<u64>,
        norms: Vec<f64>,
        dirs: Vec<Vec<f64>>,
        angles: Vec<f64>,
        zero_count: usize,
    ) -> Self {
        let coords = dirs
            .iter()
            .map(|col| col.iter().zip(&norms).map(|(u, r)| u * r).collect())
            .collect();
        Self {
            dim,
            seed,
            coords,
            norms,
            dirs,
            angles,
            zero_count,
        }
    }

    /// Builds a batch from all cached columns at once.
    pub(crate) fn from_parts(
        dim: usize,
        seed: Option<u64>,
        coords: Vec<Vec<f64>>,
        norms: Vec<f64>,
        dirs: Vec<Vec<f64>>,
        angles: Vec<f64>,
        zero_count: usize,
    ) -> Self {
        Self {
            dim,
            seed,
            coords,
            norms,
            dirs,
            angles,
            zero_count,
        }
    }

    /// An empty batch in dimension `dim`.
    pub fn empty(dim: usize, seed: Option<u64>, zero_count: usize) -> Self {
        Self::from_polar(
            dim,
            seed,
            Vec::new(),
            vec![Vec::new(); dim],
            Vec::new(),
            zero_count,
        )
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn zero_count(&self) -> usize {
        self.zero_count
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Coordinate column `j`.
    pub fn coord(&self, j: usize) -> &[f64] {
        &self.coords[j]
    }

    /// Direction column `j`.
    pub fn dir_coord(&self, j: usize) -> &[f64] {
        &self.dirs[j]
    }

    /// Angles of the directions when `d = 2`.
    pub fn angles(&self) -> Option<&[f64]> {
        (self.dim == 2).then_some(self.angles.as_slice())
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.coords.iter().map(|c| c[i]).collect()
    }

    pub fn direction(&self, i: usize) -> Direction {
        Direction::from_unit_unchecked(self.dirs.iter().map(|c| c[i]).collect())
    }

    /// Row-major coordinates.
    pub fn rows(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() * self.dim);
        for i in 0..self.len() {
            out.extend(self.coords.iter().map(|c| c[i]));
        }
        out
    }

    /// Recomputes the polar cache from the stored coordinates, exactly as
    /// [`read_csv`](Self::read_csv) does on load.
    pub fn rematerialize(&self) -> Result<Self> {
        let mut b = Self::from_rows(self.dim, &self.rows(), self.seed)?;
        b.zero_count += self.zero_count;
        Ok(b)
    }

    /// Indices of the `k` largest norms, largest first. Equal norms keep
    /// sample order.
    pub fn top_indices(&self, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.norms[b].total_cmp(&self.norms[a]).then(a.cmp(&b)));
        idx.truncate(k);
        idx
    }

    /// Writes the `x1,...,xd` CSV form with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
        writeln!(w, "{}", header.join(","))?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            for j in 0..self.dim {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:.16e}", self.coords[j][i]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing CSV header".into()))??;
        let dim = header.split(',').count();
        for (j, name) in header.split(',').enumerate() {
            if name.trim() != format!("x{}", j + 1) {
                return Err(Error::Parse(format!("unexpected CSV column {name:?}")));
            }
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let before = rows.len();
            for field in line.split(',') {
                rows.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?,
                );
            }
            if rows.len() - before != dim {
                return Err(Error::Parse(format!(
                    "line {} has {} fields, expected {dim}",
                    lineno + 2,
                    rows.len() - before
                )));
            }
        }
        Self::from_rows(dim, &rows, None)
    }
}
