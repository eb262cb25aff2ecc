use std::path::Path;

use gamma_core::spectral::{effective_operator, SpectralOperator};
use gamma_core::symbols::{layout_of, PhysicsId};
use gamma_core::{Complex64, ComplexMatrix};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::report::Results;
use crate::solve::{grid_of, imag_name, material_field};
use crate::{Outcome, RunError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveResults {
    pub physics: PhysicsId,
    pub ncomp: usize,
    pub cells: usize,
    /// Row-major effective operator.
    pub matrix: Vec<Vec<Complex64>>,
    pub first_block_coefficient: Complex64,
    pub inputs_self_adjoint: bool,
    /// `||L* - L*^dagger||_F / ||L*||_F`.
    pub self_adjoint_defect: f64,
    /// Single-phase media only: `||L* - L||_F / ||L||_F`.
    pub homogeneous_echo_defect: Option<f64>,
}

fn write_matrix(path: &Path, m: &ComplexMatrix, imaginary: bool) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| RunError::Io(e.to_string()))?;
    let header: Vec<String> = std::iter::once("row".to_string())
        .chain((0..m.ncols()).map(|j| format!("col_{j}")))
        .collect();
    w.write_record(&header).map_err(|e| RunError::Io(e.to_string()))?;
    for i in 0..m.nrows() {
        let row = std::iter::once(i.to_string()).chain((0..m.ncols()).map(|j| {
            let z = m[(i, j)];
            format!("{:e}", if imaginary { z.im } else { z.re })
        }));
        w.write_record(row).map_err(|e| RunError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| RunError::Io(e.to_string()))
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Outcome, RunError> {
    let physics = cfg.single_physics()?;
    let grid = grid_of(cfg)?;
    let n = layout_of(physics).total_dim;
    let op = SpectralOperator::new(physics, &grid, cfg.solver.mean_mode)?;
    let l = material_field(cfg, physics, &grid)?;
    let eff = effective_operator(&op, &l, cfg.solver.dense_cap)?;
    let scale = eff.norm().max(f64::MIN_POSITIVE);
    let self_adjoint_defect = (&eff - eff.adjoint()).norm() / scale;
    let inputs_self_adjoint = l.phases.iter().all(|p| p.selfadjoint);
    let homogeneous_echo_defect = if l.phases.len() == 1 {
        let m = &l.phases[0].matrix;
        Some((&eff - m).norm() / m.norm().max(f64::MIN_POSITIVE))
    } else {
        None
    };
    let mut passed = !inputs_self_adjoint || self_adjoint_defect <= 1e-8;
    if let Some(d) = homogeneous_echo_defect {
        passed &= d <= 1e-10;
    }
    let name = &cfg.outputs.effective;
    write_matrix(&out.join(name), &eff, false)?;
    let mut outputs = vec![name.clone()];
    if eff.iter().any(|z| z.im != 0.0) {
        let im = imag_name(name);
        write_matrix(&out.join(&im), &eff, true)?;
        outputs.push(im);
    }
    Ok(Outcome {
        passed,
        results: Results::Effective(EffectiveResults {
            physics,
            ncomp: n,
            cells: grid.cells(),
            matrix: (0..n).map(|i| (0..n).map(|j| eff[(i, j)]).collect()).collect(),
            first_block_coefficient: eff[(0, 0)],
            inputs_self_adjoint,
            self_adjoint_defect,
            homogeneous_echo_defect,
        }),
        findings: Vec::new(),
        outputs,
    })
}
