//! Closed-form projectors as they are printed for each system, kept as
//! literal transcriptions so they can be checked against the canonical
//! projector rather than trusted.

use std::fmt;

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};

use super::{check_point, layout_of, PhysicsId, SpectralPoint, SymbolError};
use crate::tensor::{c, re, set_block, ComplexMatrix};

/// Alternative readings of a printed formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrintedVariant {
    /// The formula exactly as printed.
    AsPrinted,
    /// Cosserat: the rotation block `S` taken with its own normalization
    /// only, dropping the repeated outer prefactor.
    SinglePrefactor,
    /// Mindlin: middle matrix read as the Gram matrix of the left factor
    /// (`grad psi` block gives `k^2 I`), inverted numerically.
    GramMiddle,
    /// Mindlin: middle matrix with the `k (x) k` entry taken literally,
    /// inverted numerically.
    LiteralMiddle,
    /// Mindlin: middle inverse from the printed closed-form constants.
    ClosedFormMiddle,
}

impl PrintedVariant {
    pub fn name(self) -> &'static str {
        match self {
            PrintedVariant::AsPrinted => "as-printed",
            PrintedVariant::SinglePrefactor => "single-prefactor",
            PrintedVariant::GramMiddle => "gram-middle",
            PrintedVariant::LiteralMiddle => "literal-middle",
            PrintedVariant::ClosedFormMiddle => "closed-form-middle",
        }
    }

    /// Variants available for a physics; the first is the default.
    pub fn available(physics: PhysicsId) -> &'static [PrintedVariant] {
        match physics {
            PhysicsId::Mindlin => &[
                PrintedVariant::GramMiddle,
                PrintedVariant::LiteralMiddle,
                PrintedVariant::ClosedFormMiddle,
            ],
            PhysicsId::Cosserat => &[PrintedVariant::AsPrinted, PrintedVariant::SinglePrefactor],
            _ => &[PrintedVariant::AsPrinted],
        }
    }
}

impl fmt::Display for PrintedVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The grad2 rank-one projector `V(k)` on `(grad phi, grad grad phi)`,
/// expanded with an identity on `ncomp` potential components.
fn v_of_k(k: &[f64], ncomp: usize) -> ComplexMatrix {
    let d = k.len();
    let k2: f64 = k.iter().map(|x| x * x).sum();
    let denom = k2 + k2 * k2;
    let g = d * ncomp;
    let n = g + d * d * ncomp;
    let mut m = ComplexMatrix::zeros(n, n);
    if denom == 0.0 {
        return m;
    }
    let gi = |a: usize, j: usize| a * ncomp + j;
    let hi = |a: usize, b: usize, j: usize| g + (a * d + b) * ncomp + j;
    for j in 0..ncomp {
        for a in 0..d {
            for cc in 0..d {
                m[(gi(a, j), gi(cc, j))] = re(k[a] * k[cc] / denom);
                for dd in 0..d {
                    m[(gi(a, j), hi(cc, dd, j))] = c(0.0, -k[a] * k[cc] * k[dd] / denom);
                    m[(hi(cc, dd, j), gi(a, j))] = c(0.0, k[a] * k[cc] * k[dd] / denom);
                }
            }
            for b in 0..d {
                for cc in 0..d {
                    for dd in 0..d {
                        m[(hi(a, b, j), hi(cc, dd, j))] =
                            re(k[a] * k[b] * k[cc] * k[dd] / denom);
                    }
                }
            }
        }
    }
    m
}

/// The rank-`3` block `S(k, omega)` on `(grad phi, d phi/dt, phi)` for a
/// vector potential, expanded with an identity on the potential index.
/// `scale` multiplies the printed `1/(1 + k^2 + omega^2)` normalization.
fn s_block(k: &[f64], w: f64, scale: f64) -> ComplexMatrix {
    let k2: f64 = k.iter().map(|x| x * x).sum();
    let f = scale / (1.0 + k2 + w * w);
    let mut m = ComplexMatrix::zeros(15, 15);
    for j in 0..3 {
        let g = |a: usize| 3 * a + j;
        let t = 9 + j;
        let z = 12 + j;
        for a in 0..3 {
            for b in 0..3 {
                m[(g(a), g(b))] = re(f * k[a] * k[b]);
            }
            m[(g(a), t)] = re(-f * w * k[a]);
            m[(g(a), z)] = c(0.0, f * k[a]);
            m[(t, g(a))] = re(-f * w * k[a]);
            m[(z, g(a))] = c(0.0, -f * k[a]);
        }
        m[(t, t)] = re(f * w * w);
        m[(t, z)] = c(0.0, -f * w);
        m[(z, t)] = c(0.0, f * w);
        m[(z, z)] = re(f);
    }
    m
}

/// Outer product `g g^dagger / denom`.
fn outer(g: &ComplexMatrix, denom: f64) -> ComplexMatrix {
    (g * g.adjoint()).unscale(denom)
}

/// Printed left factor of the Mindlin projector (`9 x 3`, real).
pub fn mindlin_left_factor(k: &[f64], w: f64) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(9, 3);
    for j in 0..2 {
        for a in 0..2 {
            b[(2 * a + j, j)] = -k[a];
        }
        b[(4 + j, j)] = w;
        b[(6 + j, j)] = w;
    }
    for a in 0..2 {
        b[(4 + a, 2)] = k[a];
    }
    b[(8, 2)] = w;
    b
}

fn mindlin_middle(k: &[f64], w: f64, literal: bool) -> Matrix3<f64> {
    let k2 = k[0] * k[0] + k[1] * k[1];
    let mut m = Matrix3::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let kk = if literal {
                k[a] * k[b]
            } else if a == b {
                k2
            } else {
                0.0
            };
            m[(a, b)] = kk + if a == b { 2.0 * w * w } else { 0.0 };
        }
        m[(a, 2)] = w * k[a];
        m[(2, a)] = w * k[a];
    }
    m[(2, 2)] = k2 + w * w;
    m
}

/// Closed-form middle inverse with the printed constants `c1, c2, c3`;
/// `None` at `omega = 0` where `c2` is undefined.
fn mindlin_closed_form_inverse(k: &[f64], w: f64) -> Option<Matrix3<f64>> {
    if w == 0.0 {
        return None;
    }
    let k2 = k[0] * k[0] + k[1] * k[1];
    let c1 = -w * w / (k2 * k2 + 2.0 * w * w + 2.0 * w.powi(4));
    let c2 = -(k2 + 2.0 * w * w) * c1 / w;
    let c3 = 1.0 - w * k2 * c2 / (k2 + w * w);
    let mut m = Matrix3::zeros();
    for a in 0..2 {
        for b in 0..2 {
            m[(a, b)] = c1 * k[a] * k[b] + if a == b { w * w } else { 0.0 };
        }
        m[(a, 2)] = c2 * k[a];
        m[(2, a)] = c2 * k[a];
    }
    m[(2, 2)] = c3;
    Some(m)
}

/// Quantified comparison of the Mindlin middle matrix and its inverses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiddleInverseCheck {
    /// Middle matrix in the Gram reading (row-major 3x3).
    pub middle: [[f64; 3]; 3],
    /// Middle matrix with `k (x) k` taken literally.
    pub literal_middle: [[f64; 3]; 3],
    /// `|| middle - B^T B ||_F`.
    pub gram_defect: f64,
    /// `|| literal_middle - B^T B ||_F`.
    pub literal_gram_defect: f64,
    /// `|| inv(middle) middle - I ||_F`.
    pub numeric_inverse_residual: f64,
    /// `|| closed_form literal_middle - I ||_F`.
    pub deviation: Option<f64>,
    /// `|| closed_form middle - I ||_F`.
    pub closed_form_residual_gram: Option<f64>,
    /// `|| closed_form - inv(literal_middle) ||_F`.
    pub closed_form_vs_numeric: Option<f64>,
}

fn rows3(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    out
}

pub fn mindlin_middle_inverse_check(pt: &SpectralPoint) -> Result<MiddleInverseCheck, SymbolError> {
    check_point(PhysicsId::Mindlin, pt)?;
    if pt.is_degenerate() {
        return Err(SymbolError::SingularMiddle);
    }
    let k = pt.k.as_slice();
    let w = pt.omega;
    let b = mindlin_left_factor(k, w);
    let btb = b.transpose() * &b;
    let btb3 = Matrix3::from_fn(|i, j| btb[(i, j)]);
    let middle = mindlin_middle(k, w, false);
    let literal = mindlin_middle(k, w, true);
    let inv = middle.try_inverse().ok_or(SymbolError::SingularMiddle)?;
    let literal_inv = literal.try_inverse();
    let closed = mindlin_closed_form_inverse(k, w);
    let id = Matrix3::identity();
    Ok(MiddleInverseCheck {
        middle: rows3(&middle),
        literal_middle: rows3(&literal),
        gram_defect: (middle - btb3).norm(),
        literal_gram_defect: (literal - btb3).norm(),
        numeric_inverse_residual: (inv * middle - id).norm(),
        deviation: closed.map(|cf| (cf * literal - id).norm()),
        closed_form_residual_gram: closed.map(|cf| (cf * middle - id).norm()),
        closed_form_vs_numeric: match (closed, literal_inv) {
            (Some(cf), Some(li)) => Some((cf - li).norm()),
            _ => None,
        },
    })
}

fn mindlin_printed(k: &[f64], w: f64, variant: PrintedVariant) -> Result<ComplexMatrix, SymbolError> {
    let middle_inv = match variant {
        PrintedVariant::GramMiddle => mindlin_middle(k, w, false).try_inverse(),
        PrintedVariant::LiteralMiddle => mindlin_middle(k, w, true).try_inverse(),
        PrintedVariant::ClosedFormMiddle => mindlin_closed_form_inverse(k, w),
        _ => unreachable!(),
    }
    .ok_or(SymbolError::SingularMiddle)?;
    let b = mindlin_left_factor(k, w);
    let mi = DMatrix::from_fn(3, 3, |i, j| middle_inv[(i, j)]);
    let g = &b * mi * b.transpose();
    Ok(g.map(re))
}

/// The printed closed-form `Gamma_1(k, omega)` of a physics.
///
/// Grad2 elasticity and the flexo systems use the block rule "`V(k)` acts on
/// the first index"; they are expanded here with an identity on the
/// displacement index.
pub fn printed_projector(
    physics: PhysicsId,
    pt: &SpectralPoint,
    variant: Option<PrintedVariant>,
) -> Result<ComplexMatrix, SymbolError> {
    check_point(physics, pt)?;
    let variant = variant.unwrap_or(PrintedVariant::available(physics)[0]);
    if !PrintedVariant::available(physics).contains(&variant) {
        return Err(SymbolError::NoPrintedForm { physics, variant });
    }
    let n = layout_of(physics).total_dim;
    let k = pt.k.as_slice();
    let w = pt.omega;
    let k2 = pt.k_squared();
    if pt.is_degenerate() {
        return Ok(ComplexMatrix::zeros(n, n));
    }
    let out = match physics {
        PhysicsId::Grad2Electrostatics => v_of_k(k, 1),
        PhysicsId::Grad2Elasticity => v_of_k(k, 3),
        PhysicsId::Flexoelectric => {
            let mut m = ComplexMatrix::zeros(n, n);
            set_block(&mut m, 0, 0, &v_of_k(k, 1));
            set_block(&mut m, 12, 12, &v_of_k(k, 3));
            m
        }
        PhysicsId::Flexomagnetoelectric => {
            let mut m = ComplexMatrix::zeros(n, n);
            set_block(&mut m, 0, 0, &v_of_k(k, 1));
            set_block(&mut m, 12, 12, &v_of_k(k, 1));
            set_block(&mut m, 24, 24, &v_of_k(k, 3));
            m
        }
        PhysicsId::KirchhoffLove => {
            let denom = k2 * k2 + w * w;
            let mut m = ComplexMatrix::zeros(5, 5);
            for a in 0..2 {
                for b in 0..2 {
                    let kk = k[a] * k[b];
                    for cc in 0..2 {
                        for dd in 0..2 {
                            m[(2 * a + b, 2 * cc + dd)] = re(kk * k[cc] * k[dd] / denom);
                        }
                    }
                    m[(2 * a + b, 4)] = c(0.0, -w * kk / denom);
                    m[(4, 2 * a + b)] = c(0.0, w * kk / denom);
                }
            }
            m[(4, 4)] = re(w * w / denom);
            m
        }
        PhysicsId::Mindlin => mindlin_printed(k, w, variant)?,
        PhysicsId::Cosserat => {
            // u part: (ik, omega k, -omega^2, 0) (x) I
            let mut g = ComplexMatrix::zeros(n, 3);
            for j in 0..3 {
                for a in 0..3 {
                    g[(3 * a + j, j)] = c(0.0, k[a]);
                    g[(9 + 3 * a + j, j)] = re(w * k[a]);
                }
                g[(18 + j, j)] = re(-w * w);
            }
            let mut m = outer(&g, k2 + k2 * w * w + w.powi(4));
            let outer_factor = match variant {
                PrintedVariant::AsPrinted => 1.0 / (k2 + w * w + 1.0),
                _ => 1.0,
            };
            let s = s_block(k, w, outer_factor);
            let mut tail = m.view_mut((21, 21), (15, 15));
            tail += &s;
            m
        }
        PhysicsId::Seepage => {
            let mut g = ComplexMatrix::zeros(8, 1);
            for a in 0..3 {
                g[(a, 0)] = re(w * k[a]);
                g[(3 + a, 0)] = c(0.0, k[a]);
            }
            g[(6, 0)] = c(0.0, -w);
            g[(7, 0)] = re(1.0);
            outer(&g, w * w * k2 + k2 + w * w + 1.0)
        }
        PhysicsId::MhdPerturbed => {
            let mut m = ComplexMatrix::zeros(n, n);
            set_block(&mut m, 0, 0, &s_block(k, w, 1.0));
            // (0, -k (x) k, ik, -i omega, 1) acting on v'
            let mut h = ComplexMatrix::zeros(n, 3);
            for j in 0..3 {
                for a in 0..3 {
                    h[(15 + a, j)] = re(-k[a] * k[j]);
                    h[(18 + 3 * a + j, j)] = c(0.0, k[a]);
                }
                h[(27 + j, j)] = c(0.0, -w);
                h[(30 + j, j)] = re(1.0);
            }
            m + outer(&h, k2 * k2 + k2 + w * w + 1.0)
        }
    };
    Ok(out)
}
