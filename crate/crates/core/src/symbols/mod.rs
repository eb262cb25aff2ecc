//! Fourier symbols of the nine higher-gradient systems.
//!
//! For each physics the admissible fields `E` are generated by a small set of
//! potentials (`V`, `u`, `theta`, `b'`, ...). Substituting `grad -> ik` and
//! `d/dt -> -i omega` turns the potential-to-field map into a matrix
//! `P(k, omega)` of size `N x p`; the projection `Gamma_1(k, omega)` is the
//! orthogonal projector onto its range and `Gamma_1 J = 0` is equivalent to
//! `P^dagger J = 0`.
//!
//! Block order of every layout follows the field lists of the constitutive
//! laws. `grad` produces a field whose first index belongs to `grad`, so
//! `(grad u)_{aj} = d_a u_j` is stored at `a * 3 + j`.

mod printed;
mod verify;

pub use printed::{
    mindlin_left_factor, mindlin_middle_inverse_check, printed_projector, MiddleInverseCheck,
    PrintedVariant,
};
pub use verify::{
    sample_points, verify_symbol, PrintedVariantReport, SymbolReport, SymbolTolerances,
    SymbolVerdicts,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{
    self, c, orthonormal_range, re, BlockSpec, ComplexMatrix, ComplexVector, FieldLayout,
    LayoutError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("{physics} expects a {expected}-dimensional wavevector, got {got}")]
    Dimension {
        physics: PhysicsId,
        expected: usize,
        got: usize,
    },
    #[error("spectral point has non-finite entries")]
    NonFinite,
    #[error("{physics} is static; omega must be 0 (got {omega})")]
    StaticOmega { physics: PhysicsId, omega: f64 },
    #[error("no printed projector `{variant}` for {physics}")]
    NoPrintedForm {
        physics: PhysicsId,
        variant: PrintedVariant,
    },
    #[error("middle matrix is singular at k = 0, omega = 0")]
    SingularMiddle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhysicsId {
    Grad2Electrostatics,
    Grad2Elasticity,
    KirchhoffLove,
    Mindlin,
    Cosserat,
    Flexoelectric,
    Flexomagnetoelectric,
    Seepage,
    MhdPerturbed,
}

impl PhysicsId {
    pub const ALL: [PhysicsId; 9] = [
        PhysicsId::Grad2Electrostatics,
        PhysicsId::Grad2Elasticity,
        PhysicsId::KirchhoffLove,
        PhysicsId::Mindlin,
        PhysicsId::Cosserat,
        PhysicsId::Flexoelectric,
        PhysicsId::Flexomagnetoelectric,
        PhysicsId::Seepage,
        PhysicsId::MhdPerturbed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhysicsId::Grad2Electrostatics => "grad2-electrostatics",
            PhysicsId::Grad2Elasticity => "grad2-elasticity",
            PhysicsId::KirchhoffLove => "kirchhoff-love",
            PhysicsId::Mindlin => "mindlin",
            PhysicsId::Cosserat => "cosserat",
            PhysicsId::Flexoelectric => "flexoelectric",
            PhysicsId::Flexomagnetoelectric => "flexomagnetoelectric",
            PhysicsId::Seepage => "seepage",
            PhysicsId::MhdPerturbed => "mhd-perturbed",
        }
    }

    /// Position in [`PhysicsId::ALL`]; used as the random stream id.
    pub fn index(self) -> usize {
        PhysicsId::ALL.iter().position(|p| *p == self).unwrap()
    }

    pub fn is_static(self) -> bool {
        matches!(
            self,
            PhysicsId::Grad2Electrostatics
                | PhysicsId::Grad2Elasticity
                | PhysicsId::Flexoelectric
                | PhysicsId::Flexomagnetoelectric
        )
    }

    pub fn spatial_dim(self) -> usize {
        match self {
            PhysicsId::KirchhoffLove | PhysicsId::Mindlin => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for PhysicsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhysicsId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PhysicsId::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown physics `{s}`"))
    }
}

/// One Fourier mode `(k, omega)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub k: Vec<f64>,
    pub omega: f64,
}

impl SpectralPoint {
    pub fn new(k: &[f64], omega: f64) -> Self {
        SpectralPoint {
            k: k.to_vec(),
            omega,
        }
    }

    pub fn stat(k: &[f64]) -> Self {
        SpectralPoint::new(k, 0.0)
    }

    pub fn k_squared(&self) -> f64 {
        self.k.iter().map(|x| x * x).sum()
    }

    pub fn is_degenerate(&self) -> bool {
        self.omega == 0.0 && self.k.iter().all(|x| *x == 0.0)
    }
}

pub(crate) fn check_point(physics: PhysicsId, pt: &SpectralPoint) -> Result<(), SymbolError> {
    let d = physics.spatial_dim();
    if pt.k.len() != d {
        return Err(SymbolError::Dimension {
            physics,
            expected: d,
            got: pt.k.len(),
        });
    }
    if !pt.omega.is_finite() || pt.k.iter().any(|x| !x.is_finite()) {
        return Err(SymbolError::NonFinite);
    }
    if physics.is_static() && pt.omega != 0.0 {
        return Err(SymbolError::StaticOmega {
            physics,
            omega: pt.omega,
        });
    }
    Ok(())
}

fn blocks(specs: &[(&str, &[usize])]) -> Vec<BlockSpec> {
    specs
        .iter()
        .map(|(n, s)| BlockSpec::new(n, s).expect("static block spec"))
        .collect()
}

/// Field layout of `E` (and `J`) for one physics.
pub fn layout_of(physics: PhysicsId) -> FieldLayout {
    let (specs, p): (Vec<(&str, &[usize])>, usize) = match physics {
        PhysicsId::Grad2Electrostatics => (vec![("grad_V", &[3]), ("hess_V", &[3, 3])], 1),
        PhysicsId::Grad2Elasticity => (vec![("grad_u", &[3, 3]), ("hess_u", &[3, 3, 3])], 3),
        PhysicsId::KirchhoffLove => (vec![("neg_hess_v", &[2, 2]), ("dv_dt", &[1])], 1),
        PhysicsId::Mindlin => (
            vec![
                ("grad_psi_dot", &[2, 2]),
                ("psi_dot_minus_grad_w_dot", &[2]),
                ("psi_dot", &[2]),
                ("dw_dot_dt", &[1]),
            ],
            3,
        ),
        PhysicsId::Cosserat => (
            vec![
                ("grad_u", &[3, 3]),
                ("grad_v", &[3, 3]),
                ("dv_dt", &[3]),
                ("grad_theta", &[3, 3]),
                ("dtheta_dt", &[3]),
                ("theta", &[3]),
            ],
            6,
        ),
        PhysicsId::Flexoelectric => (
            vec![
                ("neg_grad_V", &[3]),
                ("neg_hess_V", &[3, 3]),
                ("grad_u", &[3, 3]),
                ("hess_u", &[3, 3, 3]),
            ],
            4,
        ),
        PhysicsId::Flexomagnetoelectric => (
            vec![
                ("neg_grad_V", &[3]),
                ("neg_hess_V", &[3, 3]),
                ("neg_grad_psi", &[3]),
                ("neg_hess_psi", &[3, 3]),
                ("grad_u", &[3, 3]),
                ("hess_u", &[3, 3, 3]),
            ],
            5,
        ),
        PhysicsId::Seepage => (
            vec![
                ("dt_grad_P", &[3]),
                ("grad_P", &[3]),
                ("dP_dt", &[1]),
                ("P", &[1]),
            ],
            1,
        ),
        PhysicsId::MhdPerturbed => (
            vec![
                ("grad_b", &[3, 3]),
                ("db_dt", &[3]),
                ("b", &[3]),
                ("grad_div_v", &[3]),
                ("grad_v", &[3, 3]),
                ("dv_dt", &[3]),
                ("v", &[3]),
            ],
            6,
        ),
    };
    FieldLayout::new(physics.name(), physics.spatial_dim(), blocks(&specs), p)
        .expect("static layout")
}

/// Writes the symbol of `(grad phi, grad grad phi) * sign` for a potential
/// with `ncomp` components into `m`, potential component `comp` landing in
/// column `col`.
#[allow(clippy::too_many_arguments)]
fn put_grad2(
    m: &mut ComplexMatrix,
    k: &[f64],
    grad_offset: usize,
    hess_offset: usize,
    col: usize,
    comp: usize,
    ncomp: usize,
    sign: f64,
) {
    let d = k.len();
    for a in 0..d {
        m[(grad_offset + a * ncomp + comp, col)] = c(0.0, sign * k[a]);
        for b in 0..d {
            m[(hess_offset + (a * d + b) * ncomp + comp, col)] = re(-sign * k[a] * k[b]);
        }
    }
}

/// Potential-to-field symbol `P(k, omega)`, an `N x p` matrix.
pub fn potential_symbol(
    physics: PhysicsId,
    pt: &SpectralPoint,
) -> Result<ComplexMatrix, SymbolError> {
    check_point(physics, pt)?;
    let layout = layout_of(physics);
    let n = layout.total_dim;
    let p = layout.potential_dim;
    let k = pt.k.as_slice();
    let w = pt.omega;
    // d/dt -> -i omega
    let dt = c(0.0, -w);
    let mut m = ComplexMatrix::zeros(n, p);
    match physics {
        PhysicsId::Grad2Electrostatics => put_grad2(&mut m, k, 0, 3, 0, 0, 1, 1.0),
        PhysicsId::Grad2Elasticity => {
            for j in 0..3 {
                put_grad2(&mut m, k, 0, 9, j, j, 3, 1.0);
            }
        }
        PhysicsId::Flexoelectric => {
            put_grad2(&mut m, k, 0, 3, 0, 0, 1, -1.0);
            for j in 0..3 {
                put_grad2(&mut m, k, 12, 21, 1 + j, j, 3, 1.0);
            }
        }
        PhysicsId::Flexomagnetoelectric => {
            put_grad2(&mut m, k, 0, 3, 0, 0, 1, -1.0);
            put_grad2(&mut m, k, 12, 15, 1, 0, 1, -1.0);
            for j in 0..3 {
                put_grad2(&mut m, k, 24, 33, 2 + j, j, 3, 1.0);
            }
        }
        PhysicsId::KirchhoffLove => {
            // E = (-grad grad v, dv/dt)
            for a in 0..2 {
                for b in 0..2 {
                    m[(2 * a + b, 0)] = re(k[a] * k[b]);
                }
            }
            m[(4, 0)] = dt;
        }
        PhysicsId::Mindlin => {
            // potentials (psi_1, psi_2, w)
            for j in 0..2 {
                for a in 0..2 {
                    // grad(d psi/dt) = (ik)(-i omega) psi
                    m[(2 * a + j, j)] = re(w * k[a]);
                }
                m[(4 + j, j)] = dt;
                m[(6 + j, j)] = dt;
            }
            for a in 0..2 {
                // -grad(dw/dt)
                m[(4 + a, 2)] = re(-w * k[a]);
            }
            m[(8, 2)] = dt * dt;
        }
        PhysicsId::Cosserat => {
            // potentials (u, theta); v = du/dt
            for j in 0..3 {
                for a in 0..3 {
                    m[(3 * a + j, j)] = c(0.0, k[a]);
                    m[(9 + 3 * a + j, j)] = c(0.0, k[a]) * dt;
                    m[(21 + 3 * a + j, 3 + j)] = c(0.0, k[a]);
                }
                m[(18 + j, j)] = dt * dt;
                m[(30 + j, 3 + j)] = dt;
                m[(33 + j, 3 + j)] = re(1.0);
            }
        }
        PhysicsId::Seepage => {
            for a in 0..3 {
                m[(a, 0)] = c(0.0, k[a]) * dt;
                m[(3 + a, 0)] = c(0.0, k[a]);
            }
            m[(6, 0)] = dt;
            m[(7, 0)] = re(1.0);
        }
        PhysicsId::MhdPerturbed => {
            // potentials (b', v')
            for j in 0..3 {
                for a in 0..3 {
                    m[(3 * a + j, j)] = c(0.0, k[a]);
                    m[(15 + a, 3 + j)] = re(-k[a] * k[j]);
                    m[(18 + 3 * a + j, 3 + j)] = c(0.0, k[a]);
                }
                m[(9 + j, j)] = dt;
                m[(12 + j, j)] = re(1.0);
                m[(27 + j, 3 + j)] = dt;
                m[(30 + j, 3 + j)] = re(1.0);
            }
        }
    }
    Ok(m)
}

/// Orthonormal basis of the admissible-field fiber at one mode; empty at the
/// degenerate mode `k = 0, omega = 0`.
pub fn canonical_basis(
    physics: PhysicsId,
    pt: &SpectralPoint,
) -> Result<ComplexMatrix, SymbolError> {
    let p = potential_symbol(physics, pt)?;
    if pt.is_degenerate() {
        return Ok(ComplexMatrix::zeros(p.nrows(), 0));
    }
    Ok(orthonormal_range(&p))
}

/// `Gamma_1(k, omega)`: orthogonal projection onto `range P(k, omega)`,
/// defined as zero at `k = 0, omega = 0`.
pub fn canonical_projector(
    physics: PhysicsId,
    pt: &SpectralPoint,
) -> Result<ComplexMatrix, SymbolError> {
    let q = canonical_basis(physics, pt)?;
    Ok(tensor::projector_from_basis(&q))
}

/// `Gamma_2 = I - Gamma_1`.
pub fn gamma2(physics: PhysicsId, pt: &SpectralPoint) -> Result<ComplexMatrix, SymbolError> {
    let g1 = canonical_projector(physics, pt)?;
    let n = g1.nrows();
    Ok(ComplexMatrix::identity(n, n) - g1)
}

/// `P(k, omega)^dagger J`: zero iff `J` satisfies the differential
/// constraints of the physics at this mode.
pub fn constraint_residual(
    physics: PhysicsId,
    j_hat: &ComplexVector,
    pt: &SpectralPoint,
) -> Result<ComplexVector, SymbolError> {
    let layout = layout_of(physics);
    layout.check_len(j_hat.len())?;
    let p = potential_symbol(physics, pt)?;
    Ok(p.adjoint() * j_hat)
}
