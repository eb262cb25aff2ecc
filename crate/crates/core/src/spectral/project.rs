use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Domain, Grid, GridField, Transform};
use super::SolverError;
use crate::symbols::{canonical_basis, layout_of, PhysicsId, SpectralPoint};
use crate::tensor::{ComplexMatrix, ComplexVector};

/// Treatment of the uniform (`k = 0`) Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanMode {
    /// The mean is prescribed data; the projection removes it.
    #[default]
    Fluctuation,
    /// The mean is projected with `Gamma_1(0, omega)`.
    Retain,
}

/// `Gamma_1` on one grid: orthonormal fiber bases for every mode plus the
/// FFT plans.
pub struct SpectralOperator {
    pub physics: PhysicsId,
    pub grid: Grid,
    pub mean_mode: MeanMode,
    pub(crate) bases: Vec<ComplexMatrix>,
    pub(crate) transform: Transform,
}

impl SpectralOperator {
    pub fn new(physics: PhysicsId, grid: &Grid, mean_mode: MeanMode) -> Result<Self, SolverError> {
        grid.validate()?;
        let d = physics.spatial_dim();
        if grid.dims.len() > d {
            return Err(SolverError::Grid(format!(
                "{physics} is {d}-dimensional but the grid has {} axes",
                grid.dims.len()
            )));
        }
        if physics.is_static() && grid.omega != 0.0 {
            return Err(SolverError::Grid(format!("{physics} is static; omega must be 0")));
        }
        let n = layout_of(physics).total_dim;
        let bases = (0..grid.cells())
            .into_par_iter()
            .map(|m| {
                if m == 0 && mean_mode == MeanMode::Fluctuation {
                    return Ok(ComplexMatrix::zeros(n, 0));
                }
                let pt = SpectralPoint::new(&grid.wavevector(m, d), grid.omega);
                canonical_basis(physics, &pt)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SpectralOperator {
            physics,
            grid: grid.clone(),
            mean_mode,
            bases,
            transform: Transform::new(grid),
        })
    }

    pub fn ncomp(&self) -> usize {
        layout_of(self.physics).total_dim
    }

    pub fn basis(&self, mode: usize) -> &ComplexMatrix {
        &self.bases[mode]
    }

    /// Range dimension summed over modes.
    pub fn range_dim(&self) -> usize {
        self.bases.iter().map(|q| q.ncols()).sum()
    }

    pub fn to_fourier(&self, f: &GridField) -> GridField {
        self.transform.to_fourier(f)
    }

    pub fn to_space(&self, f: &GridField) -> GridField {
        self.transform.to_space(f)
    }

    /// Multiplies each mode of a Fourier-domain field by its projector.
    pub fn project_fourier(&self, f: &GridField) -> GridField {
        let n = f.ncomp;
        let data: Vec<Complex64> = f
            .data
            .par_chunks(n)
            .zip(self.bases.par_iter())
            .flat_map_iter(|(cell, q)| {
                if q.ncols() == 0 {
                    return vec![Complex64::new(0.0, 0.0); n];
                }
                let v = ComplexVector::from_column_slice(cell);
                let out = q * (q.adjoint() * v);
                out.as_slice().to_vec()
            })
            .collect();
        GridField {
            grid: f.grid.clone(),
            ncomp: n,
            domain: Domain::Fourier,
            data,
        }
    }

    /// `Gamma_1 f` for a space-domain field.
    pub fn project(&self, f: &GridField) -> Result<GridField, SolverError> {
        f.check_like(&self.grid, self.ncomp())?;
        if f.domain != Domain::Space {
            return Err(SolverError::Grid("expected a space-domain field".into()));
        }
        Ok(self.to_space(&self.project_fourier(&self.to_fourier(f))))
    }
}

/// One-shot `Gamma_1 f`.
pub fn project_grid_field(
    f: &GridField,
    physics: PhysicsId,
    mean_mode: MeanMode,
) -> Result<GridField, SolverError> {
    SpectralOperator::new(physics, &f.grid, mean_mode)?.project(f)
}

/// Splits a 3-vector field into its longitudinal (curl-free) and transverse
/// (divergence-free) parts. The uniform mode is assigned to the curl-free
/// part.
pub fn helmholtz_split(w: &GridField) -> Result<(GridField, GridField), SolverError> {
    if w.ncomp != 3 {
        return Err(SolverError::FieldMismatch {
            expected: 3,
            got: w.ncomp,
        });
    }
    let t = Transform::new(&w.grid);
    let hat = t.to_fourier(w);
    let mut long = hat.clone();
    for m in 0..w.grid.cells() {
        let k = w.grid.wavevector(m, 3);
        let k2: f64 = k.iter().map(|x| x * x).sum();
        if k2 == 0.0 {
            continue;
        }
        let v = hat.cell(m);
        let kv: Complex64 = k.iter().zip(v).map(|(a, b)| b * *a).sum();
        for a in 0..3 {
            long.cell_mut(m)[a] = kv * (k[a] / k2);
        }
    }
    let trans = hat.sub(&long);
    Ok((t.to_space(&long), t.to_space(&trans)))
}
