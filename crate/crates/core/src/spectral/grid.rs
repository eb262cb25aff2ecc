use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::SolverError;

/// A periodic grid of `n_1 x ... x n_g` cubic cells. The grid may have fewer
/// axes than the physics; missing axes carry `k = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub dims: Vec<usize>,
    #[serde(default = "unit")]
    pub cell_size: f64,
    #[serde(default)]
    pub omega: f64,
}

fn unit() -> f64 {
    1.0
}

impl Grid {
    pub fn new(dims: &[usize], cell_size: f64, omega: f64) -> Result<Self, SolverError> {
        let g = Grid {
            dims: dims.to_vec(),
            cell_size,
            omega,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.dims.is_empty() || self.dims.len() > 3 {
            return Err(SolverError::Grid(format!(
                "grid must have 1 to 3 axes, got {}",
                self.dims.len()
            )));
        }
        if let Some(n) = self.dims.iter().find(|n| **n < 2) {
            return Err(SolverError::Grid(format!("each axis needs at least 2 cells, got {n}")));
        }
        if !(self.cell_size.is_finite() && self.cell_size > 0.0) {
            return Err(SolverError::Grid(format!("cell size must be positive, got {}", self.cell_size)));
        }
        if !self.omega.is_finite() {
            return Err(SolverError::Grid("omega must be finite".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.dims.iter().product()
    }

    /// Multi-index of a cell; the last axis runs fastest.
    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (axis, n) in self.dims.iter().enumerate().rev() {
            out[axis] = index % n;
            index /= n;
        }
        out
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (i, n)| acc * n + (i % n))
    }

    /// Cell-corner position `x = h * i`.
    pub fn position(&self, index: usize) -> Vec<f64> {
        self.coords(index)
            .iter()
            .map(|i| *i as f64 * self.cell_size)
            .collect()
    }

    /// Signed frequency of index `i` on an axis of `n` cells. The Nyquist
    /// index of an even axis is mapped to `0` so that real fields stay real.
    pub fn frequency(i: usize, n: usize) -> i64 {
        if 2 * i < n {
            i as i64
        } else if 2 * i == n {
            0
        } else {
            i as i64 - n as i64
        }
    }

    /// Wavevector of Fourier mode `index`, padded with zeros to `dim` axes.
    pub fn wavevector(&self, index: usize, dim: usize) -> Vec<f64> {
        let mut k = vec![0.0; dim];
        for (axis, i) in self.coords(index).into_iter().enumerate() {
            let n = self.dims[axis];
            k[axis] = 2.0 * PI * Grid::frequency(i, n) as f64 / (n as f64 * self.cell_size);
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Space,
    Fourier,
}

/// `ncomp` complex values per cell, stored cell by cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub ncomp: usize,
    pub domain: Domain,
    pub data: Vec<Complex64>,
}

impl GridField {
    pub fn zeros(grid: &Grid, ncomp: usize, domain: Domain) -> Self {
        GridField {
            grid: grid.clone(),
            ncomp,
            domain,
            data: vec![Complex64::new(0.0, 0.0); grid.cells() * ncomp],
        }
    }

    /// Space-domain field from a per-cell generator.
    pub fn from_fn(grid: &Grid, ncomp: usize, mut f: impl FnMut(usize) -> Vec<Complex64>) -> Result<Self, SolverError> {
        let mut data = Vec::with_capacity(grid.cells() * ncomp);
        for cell in 0..grid.cells() {
            let v = f(cell);
            if v.len() != ncomp {
                return Err(SolverError::FieldMismatch {
                    expected: ncomp,
                    got: v.len(),
                });
            }
            data.extend(v);
        }
        Ok(GridField {
            grid: grid.clone(),
            ncomp,
            domain: Domain::Space,
            data,
        })
    }

    /// The same vector in every cell.
    pub fn constant(grid: &Grid, value: &[Complex64]) -> Self {
        let data = (0..grid.cells()).flat_map(|_| value.iter().copied()).collect();
        GridField {
            grid: grid.clone(),
            ncomp: value.len(),
            domain: Domain::Space,
            data,
        }
    }

    pub fn cell(&self, index: usize) -> &[Complex64] {
        &self.data[index * self.ncomp..(index + 1) * self.ncomp]
    }

    pub fn cell_mut(&mut self, index: usize) -> &mut [Complex64] {
        &mut self.data[index * self.ncomp..(index + 1) * self.ncomp]
    }

    /// Grid norm `sqrt(sum |x|^2)`, summed in storage order.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `sum conj(x) y` over all cells.
    pub fn inner(&self, other: &GridField) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| x.conj() * y)
            .sum()
    }

    pub fn mean(&self) -> Vec<Complex64> {
        let mut m = vec![Complex64::new(0.0, 0.0); self.ncomp];
        for cell in self.data.chunks(self.ncomp) {
            for (a, b) in m.iter_mut().zip(cell) {
                *a += b;
            }
        }
        let n = self.grid.cells() as f64;
        m.iter_mut().for_each(|z| *z /= n);
        m
    }

    pub fn axpy(&mut self, alpha: Complex64, x: &GridField) {
        for (a, b) in self.data.iter_mut().zip(&x.data) {
            *a += alpha * b;
        }
    }

    pub fn sub(&self, other: &GridField) -> GridField {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other);
        out
    }

    /// Largest imaginary magnitude, to decide whether an imaginary sidecar is
    /// worth writing.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn check_like(&self, grid: &Grid, ncomp: usize) -> Result<(), SolverError> {
        if self.ncomp != ncomp {
            return Err(SolverError::FieldMismatch {
                expected: ncomp,
                got: self.ncomp,
            });
        }
        if self.grid.dims != grid.dims || self.data.len() != grid.cells() * ncomp {
            return Err(SolverError::Grid(format!(
                "field grid {:?} does not match {:?}",
                self.grid.dims, grid.dims
            )));
        }
        Ok(())
    }
}

/// Unitary n-dimensional FFT on a fixed grid.
pub struct Transform {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    scale: f64,
}

impl Transform {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        Transform {
            dims: grid.dims.clone(),
            forward: grid.dims.iter().map(|n| planner.plan_fft_forward(*n)).collect(),
            inverse: grid.dims.iter().map(|n| planner.plan_fft_inverse(*n)).collect(),
            scale: 1.0 / (grid.cells() as f64).sqrt(),
        }
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        let plans = if inverse { &self.inverse } else { &self.forward };
        let total = buf.len();
        for (axis, n) in self.dims.iter().enumerate() {
            let stride: usize = self.dims[axis + 1..].iter().product();
            let mut line = vec![Complex64::new(0.0, 0.0); *n];
            for outer in 0..total / (n * stride) {
                for inner in 0..stride {
                    let base = outer * n * stride + inner;
                    for (i, z) in line.iter_mut().enumerate() {
                        *z = buf[base + i * stride];
                    }
                    plans[axis].process(&mut line);
                    for (i, z) in line.iter().enumerate() {
                        buf[base + i * stride] = *z;
                    }
                }
            }
        }
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }

    fn apply(&self, f: &GridField, inverse: bool) -> GridField {
        let cells = f.grid.cells();
        let ncomp = f.ncomp;
        let comps: Vec<Vec<Complex64>> = (0..ncomp)
            .into_par_iter()
            .map(|j| {
                let mut buf: Vec<Complex64> = (0..cells).map(|c| f.data[c * ncomp + j]).collect();
                self.run(&mut buf, inverse);
                buf
            })
            .collect();
        let mut data = vec![Complex64::new(0.0, 0.0); cells * ncomp];
        for (j, comp) in comps.iter().enumerate() {
            for (c, z) in comp.iter().enumerate() {
                data[c * ncomp + j] = *z;
            }
        }
        GridField {
            grid: f.grid.clone(),
            ncomp,
            domain: if inverse { Domain::Space } else { Domain::Fourier },
            data,
        }
    }

    pub fn to_fourier(&self, f: &GridField) -> GridField {
        debug_assert_eq!(f.domain, Domain::Space);
        self.apply(f, false)
    }

    pub fn to_space(&self, f: &GridField) -> GridField {
        debug_assert_eq!(f.domain, Domain::Fourier);
        self.apply(f, true)
    }
}

fn header(ncomp: usize) -> Vec<String> {
    std::iter::once("cell_index".to_string())
        .chain((0..ncomp).map(|j| format!("comp_{j}")))
        .collect()
}

/// Writes the real (or imaginary) parts of a space-domain field.
pub fn write_field_csv(path: &Path, f: &GridField, imaginary: bool) -> Result<(), SolverError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| SolverError::Io(e.to_string()))?;
    w.write_record(header(f.ncomp))
        .map_err(|e| SolverError::Io(e.to_string()))?;
    for cell in 0..f.grid.cells() {
        let row = std::iter::once(cell.to_string()).chain(f.cell(cell).iter().map(|z| {
            let x = if imaginary { z.im } else { z.re };
            format!("{x:e}")
        }));
        w.write_record(row).map_err(|e| SolverError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| SolverError::Io(e.to_string()))
}

/// Reads a real field written by [`write_field_csv`].
pub fn read_field_csv(path: &Path, grid: &Grid, ncomp: usize) -> Result<GridField, SolverError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| SolverError::Io(e.to_string()))?;
    let hdr = r.headers().map_err(|e| SolverError::Io(e.to_string()))?;
    if hdr.len() != ncomp + 1 {
        return Err(SolverError::FieldMismatch {
            expected: ncomp,
            got: hdr.len().saturating_sub(1),
        });
    }
    let mut f = GridField::zeros(grid, ncomp, Domain::Space);
    let mut seen = vec![false; grid.cells()];
    for rec in r.records() {
        let rec = rec.map_err(|e| SolverError::Io(e.to_string()))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| SolverError::Io(format!("bad number `{s}`: {e}")))
        };
        let cell = rec[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| SolverError::Io(format!("bad cell index: {e}")))?;
        if cell >= grid.cells() {
            return Err(SolverError::Io(format!("cell index {cell} out of range")));
        }
        seen[cell] = true;
        for j in 0..ncomp {
            f.cell_mut(cell)[j] = Complex64::new(parse(&rec[j + 1])?, 0.0);
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(SolverError::Io(format!("cell {missing} missing from field file")));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coords_round_trip() {
        let g = Grid::new(&[3, 4, 2], 1.0, 0.0).unwrap();
        for i in 0..g.cells() {
            assert_eq!(g.index_of(&g.coords(i)), i);
        }
        assert_eq!(g.coords(1), vec![0, 0, 1]);
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(&[1, 4], 1.0, 0.0).is_err());
        assert!(Grid::new(&[4, 4], 0.0, 0.0).is_err());
        assert!(Grid::new(&[], 1.0, 0.0).is_err());
    }

    #[test]
    fn frequencies() {
        let f: Vec<i64> = (0..6).map(|i| Grid::frequency(i, 6)).collect();
        assert_eq!(f, vec![0, 1, 2, 0, -2, -1]);
        let f: Vec<i64> = (0..5).map(|i| Grid::frequency(i, 5)).collect();
        assert_eq!(f, vec![0, 1, 2, -2, -1]);
        let g = Grid::new(&[4], 0.5, 0.0).unwrap();
        assert!((g.wavevector(1, 3)[0] - PI).abs() < 1e-15);
        assert_eq!(g.wavevector(1, 3)[1], 0.0);
    }

    #[test]
    fn fft_round_trip_and_parseval() {
        let g = Grid::new(&[4, 3, 2], 1.0, 0.0).unwrap();
        let f = GridField::from_fn(&g, 2, |c| {
            vec![
                Complex64::new((c as f64).sin(), 0.3 * c as f64),
                Complex64::new(1.0 / (1.0 + c as f64), 0.0),
            ]
        })
        .unwrap();
        let t = Transform::new(&g);
        let hat = t.to_fourier(&f);
        assert!((hat.norm() - f.norm()).abs() < 1e-12 * f.norm());
        let back = t.to_space(&hat);
        assert!(back.sub(&f).norm() < 1e-12 * f.norm());
        // mean mode carries sqrt(M) * mean
        let m = f.mean();
        assert!((hat.cell(0)[0] - m[0] * (g.cells() as f64).sqrt()).norm() < 1e-12);
    }

    #[test]
    fn fft_plane_wave() {
        let g = Grid::new(&[8], 1.0, 0.0).unwrap();
        let f = GridField::from_fn(&g, 1, |c| vec![Complex64::from_polar(1.0, 2.0 * PI * c as f64 / 8.0)]).unwrap();
        let hat = Transform::new(&g).to_fourier(&f);
        assert!((hat.cell(1)[0].norm() - 8f64.sqrt()).abs() < 1e-12);
        assert!((hat.norm() - hat.cell(1)[0].norm()).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("gamma-grid-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        let g = Grid::new(&[2, 3], 1.0, 0.0).unwrap();
        let f = GridField::from_fn(&g, 2, |c| vec![Complex64::new(c as f64 * 0.1, 0.0), Complex64::new(-1.5e-7, 0.0)]).unwrap();
        write_field_csv(&path, &f, false).unwrap();
        let back = read_field_csv(&path, &g, 2).unwrap();
        assert_eq!(back, f);
        assert!(read_field_csv(&path, &g, 3).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
