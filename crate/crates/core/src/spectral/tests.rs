use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::materials::{build_material_law, MaterialLaw, MaterialParams, SeepageParams};
use crate::symbols::{layout_of, potential_symbol, SpectralPoint};
use crate::tensor::ComplexVector;

fn z(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_field(grid: &Grid, n: usize, seed: u64) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GridField::from_fn(grid, n, |_| {
        (0..n)
            .map(|_| z(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    })
    .unwrap()
}

/// A field in the range of `Gamma_1` built from random potentials mode by
/// mode (mean mode left empty).
fn range_field(physics: PhysicsId, grid: &Grid, seed: u64) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lay = layout_of(physics);
    let t = Transform::new(grid);
    let mut hat = GridField::zeros(grid, lay.total_dim, Domain::Fourier);
    for m in 1..grid.cells() {
        let pt = SpectralPoint::new(&grid.wavevector(m, physics.spatial_dim()), grid.omega);
        if pt.is_degenerate() {
            continue;
        }
        let p = potential_symbol(physics, &pt).unwrap();
        let c = ComplexVector::from_fn(lay.potential_dim, |_, _| {
            z(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        hat.cell_mut(m).copy_from_slice((p * c).as_slice());
    }
    t.to_space(&hat)
}

fn block_diag(physics: PhysicsId, values: &[f64]) -> MaterialLaw {
    build_material_law(
        physics,
        &MaterialParams::BlockDiagonal {
            values: values.to_vec(),
        },
    )
    .unwrap()
}

fn identity(physics: PhysicsId, c: f64) -> MaterialLaw {
    build_material_law(physics, &MaterialParams::IsotropicIdentity { scale: c }).unwrap()
}

#[test]
fn range_field_is_invariant() {
    let phys = PhysicsId::Cosserat;
    let grid = Grid::new(&[4, 3, 2], 0.7, 1.3).unwrap();
    let f = range_field(phys, &grid, 1);
    let pf = project_grid_field(&f, phys, MeanMode::Fluctuation).unwrap();
    assert!(pf.sub(&f).norm() <= 1e-10 * f.norm());
}

#[test]
fn projection_idempotent_and_selfadjoint() {
    let phys = PhysicsId::Grad2Elasticity;
    let grid = Grid::new(&[4, 4, 2], 1.0, 0.0).unwrap();
    let op = SpectralOperator::new(phys, &grid, MeanMode::Fluctuation).unwrap();
    let f = random_field(&grid, 36, 2);
    let g = random_field(&grid, 36, 3);
    let pf = op.project(&f).unwrap();
    assert!(op.project(&pf).unwrap().sub(&pf).norm() <= 1e-12 * f.norm());
    let lhs = pf.inner(&g);
    let rhs = f.inner(&op.project(&g).unwrap());
    assert!((lhs - rhs).norm() <= 1e-10 * f.norm() * g.norm());
}

#[test]
fn constant_field_vanishes_under_fluctuation() {
    let phys = PhysicsId::Seepage;
    let grid = Grid::new(&[4, 4], 1.0, 2.0).unwrap();
    let f = GridField::constant(&grid, &[z(1.0, 0.5); 8]);
    let fl = project_grid_field(&f, phys, MeanMode::Fluctuation).unwrap();
    assert!(fl.norm() < 1e-13);
    let kept = project_grid_field(&f, phys, MeanMode::Retain).unwrap();
    assert!(kept.norm() > 0.1);
}

#[test]
fn rejects_bad_grid() {
    let g = Grid::new(&[4, 4, 4], 1.0, 0.0).unwrap();
    assert!(SpectralOperator::new(PhysicsId::Mindlin, &g, MeanMode::Fluctuation).is_err());
    let g = Grid::new(&[4], 1.0, 1.0).unwrap();
    assert!(SpectralOperator::new(PhysicsId::Grad2Electrostatics, &g, MeanMode::Fluctuation).is_err());
}

#[test]
fn homogeneous_fixed_point() {
    let phys = PhysicsId::Flexoelectric;
    let grid = Grid::new(&[4, 4], 1.0, 0.0).unwrap();
    let op = SpectralOperator::new(phys, &grid, MeanMode::Fluctuation).unwrap();
    let c = 2.5;
    let l = MaterialField::homogeneous(identity(phys, c), grid.cells());
    let s = random_field(&grid, 48, 4);
    let out = fixed_point_solve(&op, &l, &s, None, &SolveConfig::default()).unwrap();
    assert!(out.report.converged);
    assert!(out.report.iterations <= 2);
    let mut expected = op.project(&s).unwrap();
    expected.data.iter_mut().for_each(|x| *x /= c);
    assert!(out.e.sub(&expected).norm() <= 1e-10 * expected.norm());
}

#[test]
fn zero_source_gives_zero() {
    let phys = PhysicsId::Grad2Electrostatics;
    let grid = Grid::new(&[4, 4], 1.0, 0.0).unwrap();
    let op = SpectralOperator::new(phys, &grid, MeanMode::Fluctuation).unwrap();
    let l = MaterialField::homogeneous(block_diag(phys, &[1.0, 0.5]), grid.cells());
    let s = GridField::zeros(&grid, 12, Domain::Space);
    let out = fixed_point_solve(&op, &l, &s, None, &SolveConfig::default()).unwrap();
    assert_eq!(out.e.norm(), 0.0);
    assert_eq!(out.report.iterations, 0);
}

fn two_phase(grid: &Grid, a: MaterialLaw, b: MaterialLaw) -> MaterialField {
    let phases = (0..grid.cells())
        .map(|c| {
            let x = grid.coords(c);
            usize::from(x.iter().take(2).map(|i| i * 2 / grid.dims[0]).sum::<usize>() % 2 == 1)
        })
        .collect();
    MaterialField::new(vec![a, b], phases).unwrap()
}

#[test]
fn fixed_point_matches_direct() {
    let phys = PhysicsId::KirchhoffLove;
    let grid = Grid::new(&[8, 8], 1.0, 0.8).unwrap();
    let op = SpectralOperator::new(phys, &grid, MeanMode::Fluctuation).unwrap();
    let l = two_phase(&grid, block_diag(phys, &[1.0, 1.5]), block_diag(phys, &[0.6, 1.0]));
    let s = random_field(&grid, 5, 5);
    let cfg = SolveConfig {
        tolerance: 1e-13,
        ..SolveConfig::default()
    };
    let fp = fixed_point_solve(&op, &l, &s, None, &cfg).unwrap();
    let dir = direct_solve(&op, &l, &s, None, &cfg).unwrap();
    assert!(fp.report.converged, "{:?}", fp.report);
    assert!(dir.report.converged && !dir.report.singular);
    assert!(fp.e.sub(&dir.e).norm() <= 1e-8 * dir.e.norm());
    assert!(dir.report.residual_constraint <= 1e-10);
}

#[test]
fn direct_uniform_mean() {
    let phys = PhysicsId::Grad2Electrostatics;
    let grid = Grid::new(&[4, 2], 1.0, 0.0).unwrap();
    let op = SpectralOperator::new(phys, &grid, MeanMode::Fluctuation).unwrap();
    let law = block_diag(phys, &[2.0, 0.1]);
    let l = MaterialField::homogeneous(law.clone(), grid.cells());
    let mean: Vec<Complex64> = (0..12).map(|i| z(i as f64, 0.0)).collect();
    let s = GridField::zeros(&grid, 12, Domain::Space);
    let out = direct_solve(&op, &l, &s, Some(&mean), &SolveConfig::default()).unwrap();
    let lm = &law.matrix * ComplexVector::from_vec(mean.clone());
    for c in 0..grid.cells() {
        for i in 0..12 {
            assert!((out.e.cell(c)[i] - mean[i]).norm() < 1e-12);
            assert!((out.j.cell(c)[i] - lm[i]).norm() < 1e-12);
        }
    }
}

#[test]
fn direct_respects_cap() {
    let phys = PhysicsId::Grad2Electrostatics;
    let grid = Grid::new(&[8, 8], 1.0, 0.0).unwrap();
    let op = SpectralOperator::new(phys, &grid, MeanMode::Fluctuation).unwrap();
    let l = MaterialField::homogeneous(identity(phys, 1.0), grid.cells());
    let s = GridField::zeros(&grid, 12, Domain::Space);
    let cfg = SolveConfig {
        dense_cap: 100,
        ..SolveConfig::default()
    };
    assert!(matches!(
        direct_solve(&op, &l, &s, None, &cfg),
        Err(SolverError::CapExceeded { .. })
    ));
}

#[test]
fn effective_of_homogeneous_is_itself() {
    let phys = PhysicsId::Mindlin;
    let grid = Grid::new(&[4, 4], 1.0, 0.9).unwrap();
    let op = SpectralOperator::new(phys, &grid, MeanMode::Fluctuation).unwrap();
    let law = block_diag(phys, &[1.0, 2.0, 3.0, 0.5]);
    let l = MaterialField::homogeneous(law.clone(), grid.cells());
    let eff = effective_operator(&op, &l, 20_000).unwrap();
    assert!((eff - law.matrix).norm() < 1e-10);
}

fn laminate(n: usize) -> (SpectralOperator, MaterialField) {
    let phys = PhysicsId::Grad2Electrostatics;
    let grid = Grid::new(&[n], 1.0, 0.0).unwrap();
    let op = SpectralOperator::new(phys, &grid, MeanMode::Fluctuation).unwrap();
    let phases = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    let l = MaterialField::new(
        vec![block_diag(phys, &[1.0, 1e-6]), block_diag(phys, &[2.0, 1e-6])],
        phases,
    )
    .unwrap();
    (op, l)
}

#[test]
fn laminate_harmonic_mean() {
    let mut prev: Option<f64> = None;
    for n in [8, 16, 32] {
        let (op, l) = laminate(n);
        let eff = effective_operator(&op, &l, 20_000).unwrap();
        let v = eff[(0, 0)].re;
        assert!((v - 4.0 / 3.0).abs() < 1e-3, "{n}: {v}");
        assert!((eff[(1, 1)].re - 1.5).abs() < 1e-12);
        assert!((&eff - eff.adjoint()).norm() < 1e-8);
        if let Some(p) = prev {
            assert!((v - p).abs() < 1e-6, "{n}: {v} vs {p}");
        }
        prev = Some(v);
    }
}

#[test]
fn effective_is_translation_invariant() {
    let (op, l) = laminate(8);
    let eff = effective_operator(&op, &l, 20_000).unwrap();
    let mut shifted = l.clone();
    shifted.phase_of_cell.rotate_left(3);
    let eff2 = effective_operator(&op, &shifted, 20_000).unwrap();
    assert!((eff - eff2).norm() < 1e-8);
}

#[test]
fn seepage_source_block() {
    let phys = PhysicsId::Seepage;
    let grid = Grid::new(&[4, 4], 1.0, 1.5).unwrap();
    let op = SpectralOperator::new(phys, &grid, MeanMode::Fluctuation).unwrap();
    let law = build_material_law(
        phys,
        &MaterialParams::Seepage(SeepageParams {
            beta0: 2.0,
            k1: 3.0,
            mu: 1.5,
            eta: 0.25,
        }),
    )
    .unwrap();
    let l = MaterialField::homogeneous(law, grid.cells());
    let mut s = random_field(&grid, 8, 6);
    assert!(matches!(
        direct_solve(&op, &l, &s, None, &SolveConfig::default()),
        Err(SolverError::SeepageSource { .. })
    ));
    for c in 0..grid.cells() {
        s.cell_mut(c)[..3].fill(z(0.0, 0.0));
    }
    let out = direct_solve(&op, &l, &s, None, &SolveConfig::default()).unwrap();
    assert!(out.report.seepage_first_block.unwrap() <= 1e-10);
}

#[test]
fn residuals_detect_perturbation() {
    let phys = PhysicsId::Grad2Electrostatics;
    let grid = Grid::new(&[4, 4], 1.0, 0.0).unwrap();
    let op = SpectralOperator::new(phys, &grid, MeanMode::Fluctuation).unwrap();
    let l = MaterialField::homogeneous(block_diag(phys, &[1.0, 0.5]), grid.cells());
    let s = random_field(&grid, 12, 7);
    let out = direct_solve(&op, &l, &s, None, &SolveConfig::default()).unwrap();
    assert!(out.report.residual_range < 1e-12 && out.report.residual_constraint < 1e-12);
    let mut e = out.e.clone();
    e.cell_mut(3)[0] += z(0.1, 0.0);
    let j = l.apply(&e).sub(&s);
    let r = residuals(&op, &l, &e, &j, &s).unwrap();
    assert!(r.range > 1e-4);
}

#[test]
fn helmholtz_parts() {
    let grid = Grid::new(&[6, 4, 4], 1.0, 0.0).unwrap();
    let t = Transform::new(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut grad = GridField::zeros(&grid, 3, Domain::Fourier);
    let mut curl = GridField::zeros(&grid, 3, Domain::Fourier);
    for m in 0..grid.cells() {
        let k = grid.wavevector(m, 3);
        let phi = z(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let a: Vec<Complex64> = (0..3).map(|_| z(rng.random_range(-1.0..1.0), 0.0)).collect();
        for i in 0..3 {
            grad.cell_mut(m)[i] = z(0.0, k[i]) * phi;
            let (j, l) = ((i + 1) % 3, (i + 2) % 3);
            curl.cell_mut(m)[i] = z(0.0, k[j]) * a[l] - z(0.0, k[l]) * a[j];
        }
    }
    let grad = t.to_space(&grad);
    let curl = t.to_space(&curl);
    let (cf, df) = helmholtz_split(&grad).unwrap();
    assert!(df.norm() <= 1e-10 * grad.norm());
    assert!(cf.sub(&grad).norm() <= 1e-10 * grad.norm());
    let (cf, df) = helmholtz_split(&curl).unwrap();
    assert!(cf.norm() <= 1e-10 * curl.norm());
    let mut sum = cf.clone();
    sum.axpy(z(1.0, 0.0), &df);
    assert!(sum.sub(&curl).norm() <= 1e-12 * curl.norm());
    assert!(helmholtz_split(&GridField::zeros(&grid, 2, Domain::Space)).is_err());
}

#[test]
fn mhd_post_process_shapes() {
    let grid = Grid::new(&[4, 2, 2], 1.0, 1.0).unwrap();
    let j = random_field(&grid, 33, 9);
    let (gp, cj) = mhd_pressure_and_current(&j).unwrap();
    assert_eq!(gp.ncomp, 3);
    assert_eq!(cj.data.len(), grid.cells() * 3);
    assert!(mhd_pressure_and_current(&random_field(&grid, 3, 1)).is_err());
}
