use std::path::Path;

use gamma_core::materials::build_material_law;
use gamma_core::spectral::{
    read_field_csv, solve, write_field_csv, Grid, GridField, MaterialField, SolveReport,
    SpectralOperator,
};
use gamma_core::symbols::{layout_of, PhysicsId};
use gamma_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{complex_vec, Microstructure, RunConfig, SourceSpec};
use crate::report::Results;
use crate::{Outcome, RunError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResults {
    pub physics: PhysicsId,
    pub ncomp: usize,
    pub cells: usize,
    pub phases: usize,
    pub report: SolveReport,
    pub mean_e: Vec<Complex64>,
    pub mean_j: Vec<Complex64>,
}

pub(crate) fn grid_of(cfg: &RunConfig) -> Result<Grid, RunError> {
    let g = cfg
        .grid
        .clone()
        .ok_or_else(|| RunError::Config("missing `grid`".into()))?;
    g.validate()?;
    Ok(g)
}

pub(crate) fn phase_map(m: &Microstructure, grid: &Grid, phases: usize) -> Result<Vec<usize>, RunError> {
    let cells = grid.cells();
    let map = match m {
        Microstructure::Homogeneous => vec![0; cells],
        Microstructure::Checkerboard { tiles } => {
            if *tiles == 0 || grid.dims.iter().any(|n| n % tiles != 0) {
                return Err(RunError::Config(format!("{tiles} tiles do not divide the grid")));
            }
            (0..cells)
                .map(|i| {
                    let t: usize = grid.coords(i).iter().zip(&grid.dims).map(|(x, n)| x * tiles / n).sum();
                    t % phases
                })
                .collect()
        }
        Microstructure::Laminate { axis, fractions } => {
            let n = *grid
                .dims
                .get(*axis)
                .ok_or_else(|| RunError::Config(format!("laminate axis {axis} outside the grid")))?;
            if fractions.len() != phases {
                return Err(RunError::Config(format!(
                    "{} laminate fractions for {phases} phases",
                    fractions.len()
                )));
            }
            let total: f64 = fractions.iter().sum();
            if fractions.iter().any(|f| !(*f >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(RunError::Config("laminate fractions must be nonnegative and sum to 1".into()));
            }
            // slab boundaries at rounded cumulative fractions
            let mut bounds = Vec::with_capacity(phases);
            let mut acc = 0.0;
            for f in fractions {
                acc += f;
                bounds.push((acc * n as f64).round() as usize);
            }
            (0..cells)
                .map(|i| {
                    let x = grid.coords(i)[*axis];
                    bounds.iter().position(|b| x < *b).unwrap_or(phases - 1)
                })
                .collect()
        }
        Microstructure::Explicit { phase_of_cell } => {
            if phase_of_cell.len() != cells {
                return Err(RunError::Config(format!(
                    "phase_of_cell has {} entries for {cells} cells",
                    phase_of_cell.len()
                )));
            }
            phase_of_cell.clone()
        }
    };
    Ok(map)
}

pub(crate) fn material_field(cfg: &RunConfig, physics: PhysicsId, grid: &Grid) -> Result<MaterialField, RunError> {
    let spec = cfg
        .materials
        .as_ref()
        .ok_or_else(|| RunError::Config("missing `materials`".into()))?;
    if spec.phases.is_empty() {
        return Err(RunError::Config("`materials.phases` is empty".into()));
    }
    let laws = spec
        .phases
        .iter()
        .map(|p| build_material_law(physics, p))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| RunError::Config(e.to_string()))?;
    let map = phase_map(&spec.microstructure, grid, laws.len())?;
    Ok(MaterialField::new(laws, map)?)
}

fn sized(v: Vec<Complex64>, n: usize, what: &str) -> Result<Vec<Complex64>, RunError> {
    if v.len() != n {
        return Err(RunError::Config(format!("{what} has {} components, expected {n}", v.len())));
    }
    Ok(v)
}

pub(crate) fn source_field(
    cfg: &RunConfig,
    base: &Path,
    grid: &Grid,
    ncomp: usize,
    l: &MaterialField,
) -> Result<GridField, RunError> {
    Ok(match &cfg.source {
        SourceSpec::Zero => GridField::constant(grid, &vec![Complex64::new(0.0, 0.0); ncomp]),
        SourceSpec::Constant { values } => GridField::constant(grid, &sized(complex_vec(values), ncomp, "source")?),
        SourceSpec::Unit { component, scale } => {
            if *component >= ncomp {
                return Err(RunError::Config(format!("source component {component} >= {ncomp}")));
            }
            let mut v = vec![Complex64::new(0.0, 0.0); ncomp];
            v[*component] = Complex64::new(*scale, 0.0);
            GridField::constant(grid, &v)
        }
        SourceSpec::PerPhase { values } => {
            if values.len() != l.phases.len() {
                return Err(RunError::Config(format!(
                    "{} per-phase sources for {} phases",
                    values.len(),
                    l.phases.len()
                )));
            }
            let per: Vec<Vec<Complex64>> = values
                .iter()
                .map(|v| sized(complex_vec(v), ncomp, "source"))
                .collect::<Result<_, _>>()?;
            GridField::from_fn(grid, ncomp, |i| per[l.phase_of_cell[i]].clone())?
        }
        SourceSpec::PlaneWave { values, mode } => {
            let amp = sized(complex_vec(values), ncomp, "source")?;
            if mode.len() != grid.dims.len() {
                return Err(RunError::Config(format!(
                    "plane-wave mode has {} entries for a {}-axis grid",
                    mode.len(),
                    grid.dims.len()
                )));
            }
            GridField::from_fn(grid, ncomp, |i| {
                let phase: f64 = grid
                    .coords(i)
                    .iter()
                    .zip(mode)
                    .zip(&grid.dims)
                    .map(|((x, m), n)| std::f64::consts::TAU * (*m as f64) * (*x as f64) / *n as f64)
                    .sum();
                let e = Complex64::from_polar(1.0, phase);
                amp.iter().map(|a| a * e).collect()
            })?
        }
        SourceSpec::File { path, imag_path } => {
            let mut f = read_field_csv(&base.join(path), grid, ncomp)?;
            if let Some(ip) = imag_path {
                let im = read_field_csv(&base.join(ip), grid, ncomp)?;
                for (z, y) in f.data.iter_mut().zip(&im.data) {
                    z.im = y.re;
                }
            }
            f
        }
    })
}

/// Writes `E` and `J`, plus `*_imag` companions for time-harmonic or
/// complex fields.
fn write_fields(cfg: &RunConfig, out: &Path, e: &GridField, j: &GridField) -> Result<Vec<String>, RunError> {
    let mut written = Vec::new();
    let imag = e.grid.omega != 0.0 || e.max_imag() > 0.0 || j.max_imag() > 0.0;
    for (name, f) in [(&cfg.outputs.e, e), (&cfg.outputs.j, j)] {
        write_field_csv(&out.join(name), f, false)?;
        written.push(name.clone());
        if imag {
            let im = imag_name(name);
            write_field_csv(&out.join(&im), f, true)?;
            written.push(im);
        }
    }
    Ok(written)
}

pub(crate) fn imag_name(name: &str) -> String {
    match name.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}_imag.{ext}"),
        None => format!("{name}_imag"),
    }
}

pub fn run(cfg: &RunConfig, base: &Path, out: &Path) -> Result<crate::Outcome, RunError> {
    let physics = cfg.single_physics()?;
    let grid = grid_of(cfg)?;
    let ncomp = layout_of(physics).total_dim;
    let op = SpectralOperator::new(physics, &grid, cfg.solver.mean_mode)?;
    let l = material_field(cfg, physics, &grid)?;
    let s = source_field(cfg, base, &grid, ncomp, &l)?;
    let mean = match &cfg.mean_e {
        Some(v) => Some(sized(complex_vec(v), ncomp, "mean_e")?),
        None => None,
    };
    let res = solve(&op, &l, &s, mean.as_deref(), &cfg.solver)?;
    let outputs = write_fields(cfg, out, &res.e, &res.j)?;
    Ok(Outcome {
        passed: res.report.converged,
        results: Results::Solve(SolveResults {
            physics,
            ncomp,
            cells: grid.cells(),
            phases: l.phases.len(),
            mean_e: res.e.mean(),
            mean_j: res.j.mean(),
            report: res.report,
        }),
        findings: Vec::new(),
        outputs,
    })
}
