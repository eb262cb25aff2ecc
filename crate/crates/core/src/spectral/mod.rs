//! Periodic-grid solver for `J = L E - s`, `Gamma_1 E = E`, `Gamma_1 J = 0`.
//!
//! Fields live cell by cell on a periodic grid. `Gamma_1` is applied mode by
//! mode after a unitary FFT; `L` is applied cell by cell in space.

mod grid;
mod project;
mod solve;

pub use grid::{read_field_csv, write_field_csv, Domain, Grid, GridField, Transform};
pub use project::{helmholtz_split, project_grid_field, MeanMode, SpectralOperator};
pub use solve::{
    direct_solve, effective_operator, fixed_point_solve, reference_constant, residuals, solve,
    DirectSystem, MaterialField, Residuals, SolveConfig, SolveMethod, SolveOutcome, SolveReport,
};

use num_complex::Complex64;
use thiserror::Error;

use crate::materials::MaterialError;
use crate::symbols::{PhysicsId, SymbolError};
use crate::tensor::LayoutError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("grid: {0}")]
    Grid(String),
    #[error("expected {expected} components, got {got}")]
    FieldMismatch { expected: usize, got: usize },
    #[error("dense system of size {size} exceeds the cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("a prescribed mean requires the fluctuation mean-mode policy")]
    MeanWithRetain,
    #[error("seepage sources must vanish in the first block (norm {norm:.3e})")]
    SeepageSource { norm: f64 },
    #[error("projected operator is singular")]
    Singular,
    #[error("i/o: {0}")]
    Io(String),
}

/// `grad P'` and `-curl j'` recovered from an MHD flux field: the divergence
/// of the first `J` block, split into curl-free and divergence-free parts.
pub fn mhd_pressure_and_current(j: &GridField) -> Result<(GridField, GridField), SolverError> {
    let n = crate::symbols::layout_of(PhysicsId::MhdPerturbed).total_dim;
    if j.ncomp != n {
        return Err(SolverError::FieldMismatch {
            expected: n,
            got: j.ncomp,
        });
    }
    let t = Transform::new(&j.grid);
    let hat = t.to_fourier(j);
    let mut div = GridField::zeros(&j.grid, 3, Domain::Fourier);
    for m in 0..j.grid.cells() {
        let k = j.grid.wavevector(m, 3);
        let cell = hat.cell(m);
        for b in 0..3 {
            let v: Complex64 = (0..3).map(|a| Complex64::new(0.0, k[a]) * cell[3 * a + b]).sum();
            div.cell_mut(m)[b] = v;
        }
    }
    helmholtz_split(&t.to_space(&div))
}

#[cfg(test)]
mod tests;
