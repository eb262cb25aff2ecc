use gamma_core::symbols::{
    mindlin_middle_inverse_check, sample_points, verify_symbol, PhysicsId, PrintedVariant,
    SymbolReport, SymbolTolerances,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::report::{Finding, Results};
use crate::{Outcome, RunError};

/// Worst values of the Mindlin middle-matrix comparison over the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MindlinSweep {
    pub samples: usize,
    pub max_gram_defect: f64,
    pub max_literal_gram_defect: f64,
    pub max_numeric_inverse_residual: f64,
    /// `closed_form * literal_middle - I`.
    pub max_closed_form_residual_literal: f64,
    /// `closed_form * middle - I`.
    pub max_closed_form_residual_gram: f64,
    /// `closed_form - inv(literal_middle)`.
    pub max_closed_form_vs_numeric: f64,
    /// Samples where the closed form is undefined.
    pub closed_form_undefined: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantDefect {
    pub variant: PrintedVariant,
    pub max_idempotency_defect: f64,
    pub idempotent: bool,
}

/// The Cosserat prefactor variant that yields a projector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosseratResolution {
    pub variants: Vec<VariantDefect>,
    pub passing: usize,
    pub exactly_one_passes: bool,
    pub resolved: Option<PrintedVariant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyResults {
    pub canonical_pass: bool,
    pub symbols: Vec<SymbolReport>,
    pub mindlin_sweep: Option<MindlinSweep>,
    pub cosserat: Option<CosseratResolution>,
}

pub fn mindlin_sweep(count: usize, seed: u64) -> Result<MindlinSweep, RunError> {
    let mut s = MindlinSweep {
        samples: 0,
        max_gram_defect: 0.0,
        max_literal_gram_defect: 0.0,
        max_numeric_inverse_residual: 0.0,
        max_closed_form_residual_literal: 0.0,
        max_closed_form_residual_gram: 0.0,
        max_closed_form_vs_numeric: 0.0,
        closed_form_undefined: 0,
    };
    for pt in sample_points(PhysicsId::Mindlin, count.max(1), seed) {
        let c = mindlin_middle_inverse_check(&pt).map_err(|e| RunError::Check(e.to_string()))?;
        s.samples += 1;
        s.max_gram_defect = s.max_gram_defect.max(c.gram_defect);
        s.max_literal_gram_defect = s.max_literal_gram_defect.max(c.literal_gram_defect);
        s.max_numeric_inverse_residual = s.max_numeric_inverse_residual.max(c.numeric_inverse_residual);
        match (c.deviation, c.closed_form_residual_gram, c.closed_form_vs_numeric) {
            (Some(a), Some(b), Some(d)) => {
                s.max_closed_form_residual_literal = s.max_closed_form_residual_literal.max(a);
                s.max_closed_form_residual_gram = s.max_closed_form_residual_gram.max(b);
                s.max_closed_form_vs_numeric = s.max_closed_form_vs_numeric.max(d);
            }
            _ => s.closed_form_undefined += 1,
        }
    }
    Ok(s)
}

fn cosserat_resolution(r: &SymbolReport) -> CosseratResolution {
    let variants: Vec<VariantDefect> = r
        .printed
        .iter()
        .map(|v| VariantDefect {
            variant: v.variant,
            max_idempotency_defect: v.max_idempotency_defect,
            idempotent: v.idempotent,
        })
        .collect();
    let passing: Vec<PrintedVariant> = variants.iter().filter(|v| v.idempotent).map(|v| v.variant).collect();
    CosseratResolution {
        passing: passing.len(),
        exactly_one_passes: passing.len() == 1,
        resolved: if passing.len() == 1 { Some(passing[0]) } else { None },
        variants,
    }
}

fn symbol_findings(r: &SymbolReport, tol: &SymbolTolerances, out: &mut Vec<Finding>) {
    for v in &r.printed {
        let subject = Finding::physics(r.physics, v.variant.name());
        let metrics = |f: Finding| {
            f.metric("max_vs_canonical", v.max_vs_canonical)
                .metric("max_idempotency_defect", v.max_idempotency_defect)
                .metric("max_hermiticity_defect", v.max_hermiticity_defect)
                .metric("max_range_defect", v.max_range_defect)
        };
        if !v.idempotent || !v.hermitian {
            out.push(metrics(Finding::new(
                "printed-not-projector",
                subject.clone(),
                v.max_idempotency_defect.max(v.max_hermiticity_defect),
                "printed form is not an orthogonal projector",
            )));
        }
        if v.max_range_defect > tol.range {
            out.push(metrics(Finding::new(
                "printed-range-mismatch",
                subject.clone(),
                v.max_range_defect,
                "printed form does not preserve the admissible fields",
            )));
        }
        if !v.matches_canonical {
            out.push(metrics(Finding::new(
                "printed-vs-canonical",
                subject,
                v.max_vs_canonical,
                "printed form differs from the canonical projector",
            )));
        }
    }
}

fn mindlin_findings(s: &MindlinSweep, tol: &SymbolTolerances, out: &mut Vec<Finding>) {
    let metrics = |f: Finding| {
        f.metric("max_closed_form_vs_numeric", s.max_closed_form_vs_numeric)
            .metric("max_closed_form_residual_literal", s.max_closed_form_residual_literal)
            .metric("max_closed_form_residual_gram", s.max_closed_form_residual_gram)
            .metric("max_literal_gram_defect", s.max_literal_gram_defect)
    };
    if s.max_closed_form_vs_numeric > tol.printed || s.max_closed_form_residual_gram > tol.printed {
        out.push(metrics(Finding::new(
            "closed-form-middle-inverse",
            "mindlin",
            s.max_closed_form_vs_numeric,
            "closed-form middle inverse differs from the numerical inverse",
        )));
    }
    if s.max_literal_gram_defect > tol.printed {
        out.push(metrics(Finding::new(
            "literal-middle-not-gram",
            "mindlin",
            s.max_literal_gram_defect,
            "middle matrix with a literal k (x) k term is not B^T B",
        )));
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, RunError> {
    let mut physics = cfg.physics.to_vec();
    if physics.is_empty() {
        physics = PhysicsId::ALL.to_vec();
    }
    if cfg.sample_count == 0 {
        return Err(RunError::Config("sample_count must be positive".into()));
    }
    let tol = cfg.tolerances;
    let mut findings = Vec::new();
    let mut symbols = Vec::new();
    let mut mindlin = None;
    let mut cosserat = None;
    for p in physics {
        let r = verify_symbol(p, cfg.sample_count, cfg.seed, &tol).map_err(|e| RunError::Check(e.to_string()))?;
        symbol_findings(&r, &tol, &mut findings);
        match p {
            PhysicsId::Mindlin => {
                let s = mindlin_sweep(cfg.sample_count, cfg.seed)?;
                mindlin_findings(&s, &tol, &mut findings);
                mindlin = Some(s);
            }
            PhysicsId::Cosserat => {
                let c = cosserat_resolution(&r);
                if !c.exactly_one_passes {
                    findings.push(Finding::new(
                        "prefactor-ambiguous",
                        "cosserat",
                        c.passing as f64,
                        "number of prefactor variants that give a projector is not one",
                    ));
                }
                cosserat = Some(c);
            }
            _ => {}
        }
        symbols.push(r);
    }
    let canonical_pass = symbols.iter().all(|r| {
        let v = &r.verdicts;
        v.idempotency && v.hermiticity && v.range && v.rank
    });
    Ok(Outcome {
        passed: canonical_pass,
        results: Results::Verify(VerifyResults {
            canonical_pass,
            symbols,
            mindlin_sweep: mindlin,
            cosserat,
        }),
        findings,
        outputs: Vec::new(),
    })
}
