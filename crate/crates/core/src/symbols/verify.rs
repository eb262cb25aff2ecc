use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    canonical_basis, layout_of, potential_symbol, printed_projector, PhysicsId, PrintedVariant,
    SpectralPoint, SymbolError,
};
use crate::tensor::{hermiticity_defect, idempotency_defect, projector_from_basis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolTolerances {
    pub idempotency: f64,
    pub hermiticity: f64,
    /// Relative: `||Gamma_1 P - P|| <= range ||P||`.
    pub range: f64,
    pub printed: f64,
}

impl Default for SymbolTolerances {
    fn default() -> Self {
        SymbolTolerances {
            idempotency: 1e-10,
            hermiticity: 1e-12,
            range: 1e-10,
            printed: 1e-10,
        }
    }
}

/// Pass/fail flags of one [`SymbolReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolVerdicts {
    pub idempotency: bool,
    pub hermiticity: bool,
    pub range: bool,
    /// Every sample has rank equal to the potential dimension.
    pub rank: bool,
    /// Default printed variant agrees with the canonical projector.
    pub printed_matches_canonical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrintedVariantReport {
    pub variant: PrintedVariant,
    pub max_idempotency_defect: f64,
    pub max_hermiticity_defect: f64,
    /// `max ||G_printed - Gamma_1||_F`.
    pub max_vs_canonical: f64,
    /// `max ||G_printed P - P|| / ||P||`: zero when the printed range
    /// contains the canonical one.
    pub max_range_defect: f64,
    pub idempotent: bool,
    pub hermitian: bool,
    pub matches_canonical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolReport {
    pub physics: PhysicsId,
    pub samples: usize,
    pub seed: u64,
    pub max_idempotency_defect: f64,
    pub max_hermiticity_defect: f64,
    pub max_range_defect: f64,
    /// Deviation of the default printed variant.
    pub max_printed_vs_canonical: f64,
    /// rank -> number of samples
    pub rank_histogram: BTreeMap<usize, usize>,
    pub printed: Vec<PrintedVariantReport>,
    pub verdicts: SymbolVerdicts,
}

/// Seeded spectral points drawn uniformly from `k in [0.1, 10]^d`,
/// `omega in [0.1, 10]` (`omega = 0` for static systems). Each physics uses
/// its own random stream so results do not depend on which other systems are
/// verified.
pub fn sample_points(physics: PhysicsId, count: usize, seed: u64) -> Vec<SpectralPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(physics.index() as u64);
    let d = physics.spatial_dim();
    (0..count)
        .map(|_| {
            let k: Vec<f64> = (0..d).map(|_| rng.random_range(0.1..=10.0)).collect();
            let omega = if physics.is_static() {
                0.0
            } else {
                rng.random_range(0.1..=10.0)
            };
            SpectralPoint { k, omega }
        })
        .collect()
}

struct VariantSample {
    idem: f64,
    herm: f64,
    dev: f64,
    range: f64,
}

struct Sample {
    idem: f64,
    herm: f64,
    range: f64,
    rank: usize,
    variants: Vec<VariantSample>,
}

fn check_sample(physics: PhysicsId, pt: &SpectralPoint) -> Result<Sample, SymbolError> {
    let p = potential_symbol(physics, pt)?;
    let q = canonical_basis(physics, pt)?;
    let g = projector_from_basis(&q);
    let pnorm = p.norm().max(f64::MIN_POSITIVE);
    let variants = PrintedVariant::available(physics)
        .iter()
        .map(|v| {
            let gp = printed_projector(physics, pt, Some(*v))?;
            Ok(VariantSample {
                idem: idempotency_defect(&gp),
                herm: hermiticity_defect(&gp),
                dev: (&gp - &g).norm(),
                range: (&gp * &p - &p).norm() / pnorm,
            })
        })
        .collect::<Result<Vec<_>, SymbolError>>()?;
    Ok(Sample {
        idem: idempotency_defect(&g),
        herm: hermiticity_defect(&g),
        range: (&g * &p - &p).norm() / pnorm,
        rank: q.ncols(),
        variants,
    })
}

/// Checks the canonical projector and every printed variant at
/// `sample_count` seeded modes and aggregates the worst defects.
pub fn verify_symbol(
    physics: PhysicsId,
    sample_count: usize,
    seed: u64,
    tol: &SymbolTolerances,
) -> Result<SymbolReport, SymbolError> {
    let points = sample_points(physics, sample_count.max(1), seed);
    let samples: Vec<Sample> = points
        .par_iter()
        .map(|pt| check_sample(physics, pt))
        .collect::<Result<_, _>>()?;

    let fold = |f: &dyn Fn(&Sample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    let mut rank_histogram = BTreeMap::new();
    for s in &samples {
        *rank_histogram.entry(s.rank).or_insert(0) += 1;
    }
    let printed: Vec<PrintedVariantReport> = PrintedVariant::available(physics)
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let vf = |f: &dyn Fn(&VariantSample) -> f64| {
                samples.iter().map(|s| f(&s.variants[i])).fold(0.0, f64::max)
            };
            let idem = vf(&|s| s.idem);
            let herm = vf(&|s| s.herm);
            let dev = vf(&|s| s.dev);
            PrintedVariantReport {
                variant: *v,
                max_idempotency_defect: idem,
                max_hermiticity_defect: herm,
                max_vs_canonical: dev,
                max_range_defect: vf(&|s| s.range),
                idempotent: idem <= tol.idempotency,
                hermitian: herm <= tol.printed,
                matches_canonical: dev <= tol.printed,
            }
        })
        .collect();

    let max_idem = fold(&|s| s.idem);
    let max_herm = fold(&|s| s.herm);
    let max_range = fold(&|s| s.range);
    let p = layout_of(physics).potential_dim;
    let verdicts = SymbolVerdicts {
        idempotency: max_idem <= tol.idempotency,
        hermiticity: max_herm <= tol.hermiticity,
        range: max_range <= tol.range,
        rank: samples.iter().all(|s| s.rank == p),
        printed_matches_canonical: printed[0].matches_canonical,
    };
    Ok(SymbolReport {
        physics,
        samples: samples.len(),
        seed,
        max_idempotency_defect: max_idem,
        max_hermiticity_defect: max_herm,
        max_range_defect: max_range,
        max_printed_vs_canonical: printed[0].max_vs_canonical,
        rank_histogram,
        printed,
        verdicts,
    })
}
