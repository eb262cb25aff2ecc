use std::f64::consts::PI;

use nalgebra::LU;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Domain, GridField};
use super::project::{MeanMode, SpectralOperator};
use super::SolverError;
use crate::materials::MaterialLaw;
use crate::symbols::PhysicsId;
use crate::tensor::{ComplexMatrix, ComplexVector};

/// Piecewise-constant law: one [`MaterialLaw`] per phase and a phase index
/// per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    pub physics: PhysicsId,
    pub phases: Vec<MaterialLaw>,
    pub phase_of_cell: Vec<usize>,
}

impl MaterialField {
    pub fn new(phases: Vec<MaterialLaw>, phase_of_cell: Vec<usize>) -> Result<Self, SolverError> {
        let physics = phases
            .first()
            .ok_or_else(|| SolverError::Grid("at least one phase is required".into()))?
            .physics;
        if phases.iter().any(|p| p.physics != physics) {
            return Err(SolverError::Grid("phases belong to different physics".into()));
        }
        if let Some(bad) = phase_of_cell.iter().find(|i| **i >= phases.len()) {
            return Err(SolverError::Grid(format!("phase index {bad} out of range")));
        }
        Ok(MaterialField {
            physics,
            phases,
            phase_of_cell,
        })
    }

    pub fn homogeneous(law: MaterialLaw, cells: usize) -> Self {
        MaterialField {
            physics: law.physics,
            phases: vec![law],
            phase_of_cell: vec![0; cells],
        }
    }

    /// `L(x) E(x)` cell by cell.
    pub fn apply(&self, e: &GridField) -> GridField {
        let n = e.ncomp;
        let data: Vec<Complex64> = e
            .data
            .par_chunks(n)
            .zip(self.phase_of_cell.par_iter())
            .flat_map_iter(|(cell, phase)| {
                let v = &self.phases[*phase].matrix * ComplexVector::from_column_slice(cell);
                v.as_slice().to_vec()
            })
            .collect();
        GridField {
            grid: e.grid.clone(),
            ncomp: n,
            domain: Domain::Space,
            data,
        }
    }

    /// Extreme eigenvalues of the Hermitian parts over all phases in use.
    pub fn hermitian_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, law) in self.phases.iter().enumerate() {
            if !self.phase_of_cell.contains(&i) {
                continue;
            }
            let h = (&law.matrix + law.matrix.adjoint()).unscale(2.0);
            for ev in h.symmetric_eigenvalues().iter() {
                lo = lo.min(*ev);
                hi = hi.max(*ev);
            }
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    #[default]
    FixedPoint,
    Direct,
}

fn default_tolerance() -> f64 {
    1e-10
}
fn default_max_iterations() -> usize {
    10_000
}
fn default_cap() -> usize {
    20_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    #[serde(default)]
    pub method: SolveMethod,
    /// Reference constant `c`; defaults to the midpoint of the Hermitian
    /// spectrum of `L`.
    #[serde(default)]
    pub reference: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Largest `N x cells` accepted by the dense solver.
    #[serde(default = "default_cap")]
    pub dense_cap: usize,
    #[serde(default)]
    pub mean_mode: MeanMode,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            method: SolveMethod::default(),
            reference: None,
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
            dense_cap: default_cap(),
            mean_mode: MeanMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub mean_mode: MeanMode,
    pub iterations: usize,
    pub converged: bool,
    /// The dense system had no usable LU factorization.
    pub singular: bool,
    /// Some phase has a Hermitian part that is not positive definite.
    pub indefinite: bool,
    pub reference: Option<f64>,
    pub unknowns: Option<usize>,
    /// `||E - Gamma E|| / ||E||` (mean restored under the fluctuation policy).
    pub residual_range: f64,
    /// `||Gamma J|| / (||L E|| + ||s||)`.
    pub residual_constraint: f64,
    /// `||J - (L E - s)|| / (||L E|| + ||s||)`.
    pub residual_constitutive: f64,
    /// Seepage only: norm of the first block of `J`.
    pub seepage_first_block: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub e: GridField,
    pub j: GridField,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub range: f64,
    pub constraint: f64,
    pub constitutive: f64,
    pub seepage_first_block: Option<f64>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

/// Residual norms of a candidate solution.
pub fn residuals(
    op: &SpectralOperator,
    l: &MaterialField,
    e: &GridField,
    j: &GridField,
    s: &GridField,
) -> Result<Residuals, SolverError> {
    let n = op.ncomp();
    for f in [e, j, s] {
        f.check_like(&op.grid, n)?;
    }
    let mut pe = op.project(e)?;
    if op.mean_mode == MeanMode::Fluctuation {
        let mean = e.mean();
        for cell in 0..op.grid.cells() {
            for (x, m) in pe.cell_mut(cell).iter_mut().zip(&mean) {
                *x += m;
            }
        }
    }
    let le = l.apply(e);
    let scale = le.norm() + s.norm();
    let exact = le.sub(s);
    let seepage_first_block = (op.physics == PhysicsId::Seepage).then(|| {
        (0..op.grid.cells())
            .map(|c| j.cell(c)[..3].iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    });
    Ok(Residuals {
        range: ratio(e.sub(&pe).norm(), e.norm()),
        constraint: ratio(op.project(j)?.norm(), scale),
        constitutive: ratio(j.sub(&exact).norm(), scale),
        seepage_first_block,
    })
}

fn check_source(op: &SpectralOperator, s: &GridField) -> Result<(), SolverError> {
    s.check_like(&op.grid, op.ncomp())?;
    if op.physics == PhysicsId::Seepage {
        let norm = (0..op.grid.cells())
            .map(|c| s.cell(c)[..3].iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            return Err(SolverError::SeepageSource { norm });
        }
    }
    Ok(())
}

fn mean_field(op: &SpectralOperator, mean_e: Option<&[Complex64]>) -> Result<GridField, SolverError> {
    let n = op.ncomp();
    match mean_e {
        None => Ok(GridField::zeros(&op.grid, n, Domain::Space)),
        Some(m) if m.len() != n => Err(SolverError::FieldMismatch {
            expected: n,
            got: m.len(),
        }),
        Some(m) if op.mean_mode == MeanMode::Retain && m.iter().any(|z| z.norm() > 0.0) => {
            Err(SolverError::MeanWithRetain)
        }
        Some(m) => Ok(GridField::constant(&op.grid, m)),
    }
}

/// Default reference constant and whether the law is indefinite.
pub fn reference_constant(l: &MaterialField) -> (f64, bool) {
    let (lo, hi) = l.hermitian_bounds();
    let c = 0.5 * (lo + hi);
    let floor = hi.abs().max(1.0) * 1e-12;
    (c.max(floor), lo <= 0.0)
}

/// `E <- E - Gamma_1(L E - s) / c`, started from the prescribed mean.
pub fn fixed_point_solve(
    op: &SpectralOperator,
    l: &MaterialField,
    s: &GridField,
    mean_e: Option<&[Complex64]>,
    cfg: &SolveConfig,
) -> Result<SolveOutcome, SolverError> {
    check_source(op, s)?;
    let (auto_c, indefinite) = reference_constant(l);
    let c = cfg.reference.unwrap_or(auto_c);
    if !(c.is_finite() && c > 0.0) {
        return Err(SolverError::Grid(format!("reference constant must be positive, got {c}")));
    }
    if !(cfg.tolerance > 0.0) {
        return Err(SolverError::Grid("tolerance must be positive".into()));
    }
    let mut e = mean_field(op, mean_e)?;
    let s_norm = s.norm();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let le = l.apply(&e);
        let j = le.sub(s);
        let g = op.project_fourier(&op.to_fourier(&j));
        let res = ratio(g.norm(), le.norm() + s_norm);
        if !res.is_finite() {
            break;
        }
        if res <= cfg.tolerance {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iterations {
            break;
        }
        e.axpy(Complex64::new(-1.0 / c, 0.0), &op.to_space(&g));
        iterations += 1;
    }
    let j = l.apply(&e).sub(s);
    let r = residuals(op, l, &e, &j, s)?;
    Ok(SolveOutcome {
        report: SolveReport {
            method: SolveMethod::FixedPoint,
            mean_mode: op.mean_mode,
            iterations,
            converged,
            singular: false,
            indefinite,
            reference: Some(c),
            unknowns: None,
            residual_range: r.range,
            residual_constraint: r.constraint,
            residual_constitutive: r.constitutive,
            seepage_first_block: r.seepage_first_block,
        },
        e,
        j,
    })
}

/// The projected operator `Q^dagger F L F^{-1} Q` assembled over all range
/// coefficients and factorized once.
pub struct DirectSystem<'a> {
    op: &'a SpectralOperator,
    l: &'a MaterialField,
    offsets: Vec<usize>,
    lu: Option<LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>>,
    unknowns: usize,
}

impl<'a> DirectSystem<'a> {
    pub fn assemble(op: &'a SpectralOperator, l: &'a MaterialField, cap: usize) -> Result<Self, SolverError> {
        let n = op.ncomp();
        let size = n * op.grid.cells();
        if size > cap {
            return Err(SolverError::CapExceeded { size, cap });
        }
        let mut offsets = Vec::with_capacity(op.grid.cells() + 1);
        offsets.push(0);
        for q in &op.bases {
            offsets.push(offsets.last().unwrap() + q.ncols());
        }
        let unknowns = *offsets.last().unwrap();
        let mut sys = DirectSystem {
            op,
            l,
            offsets,
            lu: None,
            unknowns,
        };
        let columns: Vec<Vec<Complex64>> = (0..unknowns)
            .into_par_iter()
            .map(|u| sys.column(u))
            .collect();
        let a = ComplexMatrix::from_fn(unknowns, unknowns, |i, j| columns[j][i]);
        sys.lu = Some(a.lu());
        Ok(sys)
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    fn mode_of(&self, u: usize) -> (usize, usize) {
        let m = self.offsets.partition_point(|o| *o <= u) - 1;
        (m, u - self.offsets[m])
    }

    /// Applies the projected operator to a single range basis vector. The
    /// inverse transform of one Fourier mode is written out directly.
    fn column(&self, u: usize) -> Vec<Complex64> {
        let (m, col) = self.mode_of(u);
        let grid = &self.op.grid;
        let q = self.op.basis(m).column(col);
        let mc = grid.coords(m);
        let scale = 1.0 / (grid.cells() as f64).sqrt();
        let e = GridField::from_fn(grid, q.len(), |cell| {
            let cc = grid.coords(cell);
            let phase: f64 = mc
                .iter()
                .zip(&cc)
                .zip(&grid.dims)
                .map(|((a, b), n)| 2.0 * PI * ((a * b) % n) as f64 / *n as f64)
                .sum();
            let z = Complex64::from_polar(scale, phase);
            q.iter().map(|x| x * z).collect()
        })
        .expect("basis length matches layout");
        let le = self.op.to_fourier(&self.l.apply(&e));
        self.restrict(&le)
    }

    /// `Q_m^dagger f_m` stacked over modes.
    fn restrict(&self, f_hat: &GridField) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.unknowns);
        for (m, q) in self.op.bases.iter().enumerate() {
            if q.ncols() == 0 {
                continue;
            }
            let v = q.adjoint() * ComplexVector::from_column_slice(f_hat.cell(m));
            out.extend(v.iter());
        }
        out
    }

    fn expand(&self, a: &ComplexVector) -> GridField {
        let mut f = GridField::zeros(&self.op.grid, self.op.ncomp(), Domain::Fourier);
        for (m, q) in self.op.bases.iter().enumerate() {
            if q.ncols() == 0 {
                continue;
            }
            let v = q * a.rows(self.offsets[m], q.ncols());
            f.cell_mut(m).copy_from_slice(v.as_slice());
        }
        self.op.to_space(&f)
    }

    /// Solves for the fluctuation given the mean field `e0`; `None` when the
    /// system is singular.
    pub fn solve(&self, s: &GridField, e0: &GridField) -> Option<GridField> {
        let rhs_field = s.sub(&self.l.apply(e0));
        let b = ComplexVector::from_vec(self.restrict(&self.op.to_fourier(&rhs_field)));
        if self.unknowns == 0 {
            return Some(e0.clone());
        }
        let lu = self.lu.as_ref()?;
        let a = lu.solve(&b)?;
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return None;
        }
        let mut e = self.expand(&a);
        e.axpy(Complex64::new(1.0, 0.0), e0);
        Some(e)
    }
}

/// Dense oracle: solves `Gamma_1 (L E - s) = 0` for `E` in range with
/// prescribed mean `mean_e`.
pub fn direct_solve(
    op: &SpectralOperator,
    l: &MaterialField,
    s: &GridField,
    mean_e: Option<&[Complex64]>,
    cfg: &SolveConfig,
) -> Result<SolveOutcome, SolverError> {
    check_source(op, s)?;
    let e0 = mean_field(op, mean_e)?;
    let (_, indefinite) = reference_constant(l);
    let sys = DirectSystem::assemble(op, l, cfg.dense_cap)?;
    let (e, singular) = match sys.solve(s, &e0) {
        Some(e) => (e, false),
        None => (e0, true),
    };
    let j = l.apply(&e).sub(s);
    let r = residuals(op, l, &e, &j, s)?;
    let tol = cfg.tolerance.max(1e-8);
    Ok(SolveOutcome {
        report: SolveReport {
            method: SolveMethod::Direct,
            mean_mode: op.mean_mode,
            iterations: 1,
            converged: !singular && r.constraint <= tol && r.range <= tol,
            singular,
            indefinite,
            reference: None,
            unknowns: Some(sys.unknowns()),
            residual_range: r.range,
            residual_constraint: r.constraint,
            residual_constitutive: r.constitutive,
            seepage_first_block: r.seepage_first_block,
        },
        e,
        j,
    })
}

/// Dispatches on `cfg.method`.
pub fn solve(
    op: &SpectralOperator,
    l: &MaterialField,
    s: &GridField,
    mean_e: Option<&[Complex64]>,
    cfg: &SolveConfig,
) -> Result<SolveOutcome, SolverError> {
    match cfg.method {
        SolveMethod::FixedPoint => fixed_point_solve(op, l, s, mean_e, cfg),
        SolveMethod::Direct => direct_solve(op, l, s, mean_e, cfg),
    }
}

/// Column `j` is the cell average of `J` when the mean of `E` is `e_j` and
/// there is no source.
pub fn effective_operator(
    op: &SpectralOperator,
    l: &MaterialField,
    dense_cap: usize,
) -> Result<ComplexMatrix, SolverError> {
    if op.mean_mode != MeanMode::Fluctuation {
        return Err(SolverError::MeanWithRetain);
    }
    let n = op.ncomp();
    let sys = DirectSystem::assemble(op, l, dense_cap)?;
    let zero = GridField::zeros(&op.grid, n, Domain::Space);
    let mut out = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        let mut ej = vec![Complex64::new(0.0, 0.0); n];
        ej[col] = Complex64::new(1.0, 0.0);
        let e0 = GridField::constant(&op.grid, &ej);
        let e = sys.solve(&zero, &e0).ok_or(SolverError::Singular)?;
        let j = l.apply(&e);
        for (row, v) in j.mean().into_iter().enumerate() {
            out[(row, col)] = v;
        }
    }
    Ok(out)
}
