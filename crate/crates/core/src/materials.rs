//! Constitutive tensors `L` for each system, laid out on the field layouts of
//! [`crate::symbols::layout_of`].

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symbols::{layout_of, PhysicsId, SpectralPoint, SymbolError};
use crate::tensor::{c, isotropic_projectors, ComplexMatrix, ComplexVector, LayoutError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("{what}: expected {expected}, got {got}")]
    Shape {
        what: String,
        expected: String,
        got: String,
    },
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} is not finite")]
    NonFinite { name: &'static str },
    #[error("{name} violates its minor symmetries (defect {defect:.3e})")]
    Symmetry { name: &'static str, defect: f64 },
    #[error("matrix is not square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has imaginary entries (max {max_imag:.3e})")]
    NotReal { max_imag: f64 },
    #[error("parameters `{kind}` do not apply to {physics}")]
    WrongPhysics { physics: PhysicsId, kind: &'static str },
    #[error("coupling tensor varies between cells")]
    SpatiallyVarying,
    #[error("operation not supported for {0}")]
    Unsupported(PhysicsId),
}

/// One cell's constitutive matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialLaw {
    pub physics: PhysicsId,
    pub matrix: ComplexMatrix,
    pub selfadjoint: bool,
}

impl MaterialLaw {
    pub fn new(physics: PhysicsId, matrix: ComplexMatrix) -> Result<Self, MaterialError> {
        let n = layout_of(physics).total_dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(MaterialError::Shape {
                what: format!("{physics} law"),
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(MaterialError::NonFinite { name: "law" });
        }
        let scale = matrix.norm().max(1.0);
        let selfadjoint = (&matrix - matrix.adjoint()).norm() <= 1e-14 * scale;
        Ok(MaterialLaw {
            physics,
            matrix,
            selfadjoint,
        })
    }

    pub fn from_real(physics: PhysicsId, m: &DMatrix<f64>) -> Result<Self, MaterialError> {
        MaterialLaw::new(physics, m.map(|x| c(x, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `L + other`, for laws of the same physics.
    pub fn plus(&self, other: &MaterialLaw) -> Result<MaterialLaw, MaterialError> {
        if other.physics != self.physics {
            return Err(MaterialError::WrongPhysics {
                physics: self.physics,
                kind: "sum",
            });
        }
        MaterialLaw::new(self.physics, &self.matrix + &other.matrix)
    }
}

/// A fourth-order tensor on `d x d` matrices, stored as a `d^2 x d^2`
/// row-major matrix: entry `[(i*d + j), (k*d + l)]` is `T_ijkl`.
pub type Rigidity = Vec<Vec<f64>>;

/// `d kappa Lambda_h + 2 mu Lambda_s` on `d x d` matrices.
pub fn isotropic_rigidity(d: usize, kappa: f64, mu: f64) -> Result<Rigidity, MaterialError> {
    let p = isotropic_projectors(d)?;
    let m = p.lambda_h.map(|z| z.re) * (d as f64 * kappa) + p.lambda_s.map(|z| z.re) * (2.0 * mu);
    Ok(rows_of(&m))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn matrix_of(name: &str, rows: &[Vec<f64>], nr: usize, nc: usize) -> Result<DMatrix<f64>, MaterialError> {
    let shape_err = || MaterialError::Shape {
        what: name.to_string(),
        expected: format!("{nr}x{nc}"),
        got: format!(
            "{}x{}",
            rows.len(),
            rows.first().map(|r| r.len()).unwrap_or(0)
        ),
    };
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        return Err(shape_err());
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

fn check_rigidity(name: &'static str, t: &Rigidity, d: usize) -> Result<DMatrix<f64>, MaterialError> {
    let m = matrix_of(name, t, d * d, d * d)?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(MaterialError::NonFinite { name });
    }
    let mut defect: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let v = m[(i * d + j, k * d + l)];
                    defect = defect
                        .max((v - m[(j * d + i, k * d + l)]).abs())
                        .max((v - m[(i * d + j, l * d + k)]).abs());
                }
            }
        }
    }
    if defect > 1e-12 * m.norm().max(1.0) {
        return Err(MaterialError::Symmetry { name, defect });
    }
    Ok(m)
}

fn positive(name: &'static str, value: f64) -> Result<f64, MaterialError> {
    if !value.is_finite() {
        return Err(MaterialError::NonFinite { name });
    }
    if value <= 0.0 {
        return Err(MaterialError::NonPositive { name, value });
    }
    Ok(value)
}

fn finite(name: &'static str, value: f64) -> Result<f64, MaterialError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(MaterialError::NonFinite { name })
    }
}

/// Kirchhoff-Love plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateParams {
    /// Bending rigidity `D` (4x4, minor symmetric).
    pub rigidity: Rigidity,
    pub thickness: f64,
    pub density: f64,
}

fn default_shear_factor() -> f64 {
    5.0 / 6.0
}

/// Mindlin plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MindlinParams {
    pub rigidity: Rigidity,
    /// Shear modulus tensor (2x2).
    pub shear_modulus: [[f64; 2]; 2],
    pub thickness: f64,
    pub density: f64,
    #[serde(default = "default_shear_factor")]
    pub shear_correction_factor: f64,
}

/// Cosserat medium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosseratParams {
    /// Elasticity `C` (9x9).
    pub elasticity: Rigidity,
    /// Couple-stress moduli `C~` (9x9).
    pub couple_elasticity: Rigidity,
    pub density: f64,
    pub alpha: f64,
    /// Inertia moment density `R` (3x3).
    pub inertia: [[f64; 3]; 3],
}

impl CosseratParams {
    pub fn isotropic(
        kappa: f64,
        mu: f64,
        kappa_t: f64,
        mu_t: f64,
        alpha: f64,
        density: f64,
        inertia: f64,
    ) -> Result<Self, MaterialError> {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = inertia;
        }
        Ok(CosseratParams {
            elasticity: isotropic_rigidity(3, kappa, mu)?,
            couple_elasticity: isotropic_rigidity(3, kappa_t, mu_t)?,
            density,
            alpha,
            inertia: r,
        })
    }
}

/// Seepage in fissured rock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeepageParams {
    pub beta0: f64,
    pub k1: f64,
    pub mu: f64,
    pub eta: f64,
}

fn default_lambda() -> f64 {
    1e6
}

/// Background state about which the MHD equations are linearized.
/// Gradients follow the layout convention `grad_b[a][j] = d_a b_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhdBackground {
    #[serde(default)]
    pub b: [f64; 3],
    #[serde(default)]
    pub v: [f64; 3],
    pub rho: f64,
    #[serde(default)]
    pub grad_b: [[f64; 3]; 3],
    #[serde(default)]
    pub grad_v: [[f64; 3]; 3],
    #[serde(default)]
    pub div_v: f64,
    #[serde(default)]
    pub dv_dt: [f64; 3],
    /// `(v . grad) v`
    #[serde(default)]
    pub advective: [f64; 3],
    pub mu0: f64,
    pub sigma0: f64,
    #[serde(default = "default_lambda")]
    pub lambda_b: f64,
    #[serde(default = "default_lambda")]
    pub lambda_v: f64,
}

impl MhdBackground {
    /// Fluid at rest with no background field.
    pub fn quiescent(rho: f64, mu0: f64, sigma0: f64) -> Self {
        MhdBackground {
            b: [0.0; 3],
            v: [0.0; 3],
            rho,
            grad_b: [[0.0; 3]; 3],
            grad_v: [[0.0; 3]; 3],
            div_v: 0.0,
            dv_dt: [0.0; 3],
            advective: [0.0; 3],
            mu0,
            sigma0,
            lambda_b: default_lambda(),
            lambda_v: default_lambda(),
        }
    }
}

/// One block of a user-assembled law: `values` maps the `col` block of `E`
/// into the `row` block of `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockEntry {
    pub row: String,
    pub col: String,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockLaw {
    pub entries: Vec<BlockEntry>,
    /// Replace the assembled matrix by its symmetric part.
    #[serde(default = "yes")]
    pub symmetrize: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialParams {
    /// `scale * I`.
    IsotropicIdentity { scale: f64 },
    /// One scalar per block, times the identity on that block.
    BlockDiagonal { values: Vec<f64> },
    Blocks(BlockLaw),
    KirchhoffLove(PlateParams),
    Mindlin(MindlinParams),
    Cosserat(CosseratParams),
    Seepage(SeepageParams),
    Mhd(MhdBackground),
}

impl MaterialParams {
    pub fn kind(&self) -> &'static str {
        match self {
            MaterialParams::IsotropicIdentity { .. } => "isotropic_identity",
            MaterialParams::BlockDiagonal { .. } => "block_diagonal",
            MaterialParams::Blocks(_) => "blocks",
            MaterialParams::KirchhoffLove(_) => "kirchhoff_love",
            MaterialParams::Mindlin(_) => "mindlin",
            MaterialParams::Cosserat(_) => "cosserat",
            MaterialParams::Seepage(_) => "seepage",
            MaterialParams::Mhd(_) => "mhd",
        }
    }
}

/// `(raw + raw^T) / 2`: the unique symmetric matrix with the same quadratic
/// form.
pub fn symmetrize_energy_law(raw: &ComplexMatrix) -> Result<ComplexMatrix, MaterialError> {
    if raw.nrows() != raw.ncols() {
        return Err(MaterialError::NotSquare {
            rows: raw.nrows(),
            cols: raw.ncols(),
        });
    }
    let max_imag = raw.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max_imag > 0.0 {
        return Err(MaterialError::NotReal { max_imag });
    }
    Ok((raw + raw.transpose()).unscale(2.0))
}

fn put(target: &mut DMatrix<f64>, row: usize, col: usize, m: &DMatrix<f64>) {
    let mut v = target.view_mut((row, col), (m.nrows(), m.ncols()));
    v += m;
}

/// The alternating-tensor contraction `eta(M)_j = eps_jab M_ab` (3 x 9).
pub fn levi_civita_contraction() -> DMatrix<f64> {
    let mut m = DMatrix::zeros(3, 9);
    for (j, a, b, s) in [
        (0, 1, 2, 1.0),
        (0, 2, 1, -1.0),
        (1, 2, 0, 1.0),
        (1, 0, 2, -1.0),
        (2, 0, 1, 1.0),
        (2, 1, 0, -1.0),
    ] {
        m[(j, 3 * a + b)] = s;
    }
    m
}

/// `eta(j') = mu0 [(grad b')^T - grad b']`, antisymmetric by construction.
pub fn eta_of_gradb(mu0: f64, grad_b: &Matrix3<f64>) -> Matrix3<f64> {
    (grad_b.transpose() - grad_b) * mu0
}

fn law_block_diagonal(physics: PhysicsId, values: &[f64]) -> Result<DMatrix<f64>, MaterialError> {
    let layout = layout_of(physics);
    if values.len() != layout.blocks.len() {
        return Err(MaterialError::Shape {
            what: "block_diagonal values".into(),
            expected: layout.blocks.len().to_string(),
            got: values.len().to_string(),
        });
    }
    let mut m = DMatrix::zeros(layout.total_dim, layout.total_dim);
    for (i, v) in values.iter().enumerate() {
        let v = finite("block value", *v)?;
        for r in layout.block_range(i) {
            m[(r, r)] = v;
        }
    }
    Ok(m)
}

fn law_blocks(physics: PhysicsId, law: &BlockLaw) -> Result<DMatrix<f64>, MaterialError> {
    let layout = layout_of(physics);
    let mut m = DMatrix::zeros(layout.total_dim, layout.total_dim);
    for e in &law.entries {
        let ri = layout.block_range(layout.block_index(&e.row)?);
        let ci = layout.block_range(layout.block_index(&e.col)?);
        let block = matrix_of(&format!("block ({}, {})", e.row, e.col), &e.values, ri.len(), ci.len())?;
        if block.iter().any(|x| !x.is_finite()) {
            return Err(MaterialError::NonFinite { name: "block entry" });
        }
        put(&mut m, ri.start, ci.start, &block);
    }
    if law.symmetrize {
        m = (&m + m.transpose()) / 2.0;
    }
    Ok(m)
}

fn law_plate(p: &PlateParams) -> Result<DMatrix<f64>, MaterialError> {
    let d = check_rigidity("rigidity", &p.rigidity, 2)?;
    let h = positive("thickness", p.thickness)?;
    let rho = positive("density", p.density)?;
    let mut m = DMatrix::zeros(5, 5);
    put(&mut m, 0, 0, &(d * -h.powi(3)));
    m[(4, 4)] = h * rho;
    Ok(m)
}

fn law_mindlin(p: &MindlinParams) -> Result<DMatrix<f64>, MaterialError> {
    let d = check_rigidity("rigidity", &p.rigidity, 2)?;
    let h = positive("thickness", p.thickness)?;
    let rho = positive("density", p.density)?;
    let kf = positive("shear_correction_factor", p.shear_correction_factor)?;
    let mu = DMatrix::from_fn(2, 2, |i, j| p.shear_modulus[i][j]);
    if mu.iter().any(|x| !x.is_finite()) {
        return Err(MaterialError::NonFinite { name: "shear_modulus" });
    }
    let mut m = DMatrix::zeros(9, 9);
    put(&mut m, 0, 0, &(d * -h.powi(3)));
    put(&mut m, 4, 4, &(mu * (kf * h)));
    for i in 6..8 {
        m[(i, i)] = rho * h.powi(3) / 12.0;
    }
    m[(8, 8)] = rho * h;
    Ok(m)
}

fn law_cosserat(p: &CosseratParams) -> Result<DMatrix<f64>, MaterialError> {
    let cc = check_rigidity("elasticity", &p.elasticity, 3)?;
    let ct = check_rigidity("couple_elasticity", &p.couple_elasticity, 3)?;
    let rho = positive("density", p.density)?;
    let alpha = finite("alpha", p.alpha)?;
    let r = DMatrix::from_fn(3, 3, |i, j| p.inertia[i][j]);
    if r.iter().any(|x| !x.is_finite()) {
        return Err(MaterialError::NonFinite { name: "inertia" });
    }
    let eta = levi_civita_contraction() * (-2.0 * alpha);
    // blocks: grad_u 0, grad_v 9, dv_dt 18, grad_theta 21, dtheta_dt 30, theta 33
    let mut m = DMatrix::zeros(36, 36);
    put(&mut m, 9, 9, &(cc * -1.0));
    put(&mut m, 18, 18, &(DMatrix::identity(3, 3) * rho));
    put(&mut m, 18, 21, &eta);
    put(&mut m, 21, 21, &ct);
    put(&mut m, 30, 30, &(r * -1.0));
    put(&mut m, 33, 0, &eta);
    put(&mut m, 33, 33, &(DMatrix::identity(3, 3) * (4.0 * alpha)));
    Ok(m)
}

fn law_seepage(p: &SeepageParams) -> Result<DMatrix<f64>, MaterialError> {
    let beta0 = finite("beta0", p.beta0)?;
    let k1 = finite("k1", p.k1)?;
    let mu = positive("mu", p.mu)?;
    let eta = finite("eta", p.eta)?;
    // rows/cols: dt_grad_P 0..3, grad_P 3..6, dP_dt 6, P 7
    let mut m = DMatrix::zeros(8, 8);
    for a in 0..3 {
        m[(3 + a, a)] = eta * beta0;
        m[(3 + a, 3 + a)] = k1 / mu;
    }
    m[(6, 7)] = beta0;
    Ok(m)
}

fn mat3(a: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| a[i][j])
}

/// Row vector acting on a flattened 3x3 matrix `M` as `x^T M - y Tr(M)`,
/// written as a 3 x 9 block.
fn contract_minus_trace(x: &[f64; 3], y: &[f64; 3]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(3, 9);
    for j in 0..3 {
        for a in 0..3 {
            m[(j, 3 * a + j)] += x[a];
            m[(j, 3 * a + a)] -= y[j];
        }
    }
    m
}

/// The linearized MHD law about `bg` (33 x 33).
pub fn build_mhd_law(bg: &MhdBackground) -> Result<MaterialLaw, MaterialError> {
    let scalars = [
        ("rho", bg.rho),
        ("div_v", bg.div_v),
        ("mu0", bg.mu0),
        ("sigma0", bg.sigma0),
    ];
    for (name, v) in scalars {
        finite(name, v)?;
    }
    let vectors = [bg.b, bg.v, bg.dv_dt, bg.advective];
    let tensors = [bg.grad_b, bg.grad_v];
    if vectors.iter().flatten().any(|x| !x.is_finite())
        || tensors.iter().flatten().flatten().any(|x| !x.is_finite())
    {
        return Err(MaterialError::NonFinite { name: "background" });
    }
    let lambda_b = positive("lambda_b", bg.lambda_b)?;
    let lambda_v = positive("lambda_v", bg.lambda_v)?;
    let mu0 = positive("mu0", bg.mu0)?;
    let s0m0 = bg.sigma0 * mu0;
    let rho = bg.rho;
    let iso = isotropic_projectors(3)?;
    let lh = iso.lambda_h.map(|z| z.re);
    let la = iso.lambda_a.map(|z| z.re);
    let gb = mat3(&bg.grad_b);
    let gv = mat3(&bg.grad_v);
    let id3 = DMatrix::<f64>::identity(3, 3);
    let dyn3 = |m: Matrix3<f64>| DMatrix::from_fn(3, 3, |i, j| m[(i, j)]);

    // row 3 pieces
    let zero3 = [0.0; 3];
    let row3_gradb = contract_minus_trace(&bg.b, &bg.b) / mu0 - contract_minus_trace(&bg.v, &zero3) * s0m0;
    let big_r = (gb.transpose() - gb) / mu0 - (Matrix3::identity() * bg.div_v - gv.transpose()) * s0m0;
    let accel: [f64; 3] = std::array::from_fn(|i| bg.dv_dt[i] + bg.advective[i]);
    let small_r = contract_minus_trace(&bg.v, &zero3) * rho
        + contract_minus_trace(&zero3, &accel) * -lambda_v
        + contract_minus_trace(&bg.b, &bg.b) * s0m0;

    // blocks: grad_b 0, db_dt 9, b 12, grad_div_v 15, grad_v 18, dv_dt 27, v 30
    let mut m = DMatrix::zeros(33, 33);
    put(&mut m, 0, 0, &(lh * lambda_b + la * (2.0 * mu0)));
    put(&mut m, 12, 0, &row3_gradb);
    put(&mut m, 12, 9, &(&id3 * -s0m0));
    put(&mut m, 12, 12, &dyn3(big_r));
    put(&mut m, 12, 18, &(small_r * -1.0));
    put(&mut m, 12, 27, &(&id3 * -rho + dyn3(gb.transpose()) * s0m0));
    put(&mut m, 12, 30, &(dyn3(gv.transpose()) * -rho));
    put(&mut m, 18, 18, &(iso.lambda_h.map(|z| z.re) * lambda_v));
    put(&mut m, 27, 30, &(&id3 * rho));
    // continuity: a scalar row, carried in the first component of the last block
    for a in 0..3 {
        m[(30, 15 + a)] = -lambda_v * bg.v[a];
        m[(30, 18 + 4 * a)] = -lambda_v * bg.div_v;
    }
    MaterialLaw::from_real(PhysicsId::MhdPerturbed, &m)
}

/// Assembles `L` for one cell.
pub fn build_material_law(
    physics: PhysicsId,
    params: &MaterialParams,
) -> Result<MaterialLaw, MaterialError> {
    let wrong = || MaterialError::WrongPhysics {
        physics,
        kind: params.kind(),
    };
    let m = match params {
        MaterialParams::IsotropicIdentity { scale } => {
            let n = layout_of(physics).total_dim;
            DMatrix::identity(n, n) * finite("scale", *scale)?
        }
        MaterialParams::BlockDiagonal { values } => law_block_diagonal(physics, values)?,
        MaterialParams::Blocks(b) => law_blocks(physics, b)?,
        MaterialParams::KirchhoffLove(p) if physics == PhysicsId::KirchhoffLove => law_plate(p)?,
        MaterialParams::Mindlin(p) if physics == PhysicsId::Mindlin => law_mindlin(p)?,
        MaterialParams::Cosserat(p) if physics == PhysicsId::Cosserat => law_cosserat(p)?,
        MaterialParams::Seepage(p) if physics == PhysicsId::Seepage => law_seepage(p)?,
        MaterialParams::Mhd(bg) if physics == PhysicsId::MhdPerturbed => return build_mhd_law(bg),
        _ => return Err(wrong()),
    };
    MaterialLaw::from_real(physics, &m)
}

/// Which coupling of a gauge-equivalent pair is taken as the starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeDirection {
    /// From the `(d, grad grad V)` coupling to the `(q, grad V)` one.
    ToQ,
    /// From the `(q, grad V)` coupling to the `(d, grad grad V)` one.
    ToD,
}

/// A pair of law increments giving the same total displacement field.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugePair {
    pub from: MaterialLaw,
    pub to: MaterialLaw,
}

/// For a constant third-order tensor `A` (`a[9a + 3b + c] = A_abc`), the
/// coupling `q += -A grad V` and the coupling `d += A grad grad V`
/// contribute identically to `d_T = d - div q`.
///
/// `cells` holds `A` for every cell; all must coincide.
pub fn gauge_move_coupling(
    cells: &[[f64; 27]],
    direction: GaugeDirection,
) -> Result<GaugePair, MaterialError> {
    let a = cells.first().ok_or(MaterialError::Shape {
        what: "coupling tensor cells".into(),
        expected: ">= 1".into(),
        got: "0".into(),
    })?;
    if cells.iter().any(|x| x != a) {
        return Err(MaterialError::SpatiallyVarying);
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(MaterialError::NonFinite { name: "coupling tensor" });
    }
    let mut to_q = DMatrix::zeros(12, 12);
    let mut to_d = DMatrix::zeros(12, 12);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let v = a[9 * i + 3 * j + k];
                to_q[(3 + 3 * i + j, k)] = -v;
                to_d[(j, 3 + 3 * i + k)] = v;
            }
        }
    }
    let q = MaterialLaw::from_real(PhysicsId::Grad2Electrostatics, &to_q)?;
    let d = MaterialLaw::from_real(PhysicsId::Grad2Electrostatics, &to_d)?;
    Ok(match direction {
        GaugeDirection::ToD => GaugePair { from: q, to: d },
        GaugeDirection::ToQ => GaugePair { from: d, to: q },
    })
}

/// `(first-order block, second-order block, components)` pairs of a grad2
/// system.
fn flux_pairs(physics: PhysicsId) -> Result<Vec<(usize, usize, usize)>, MaterialError> {
    Ok(match physics {
        PhysicsId::Grad2Electrostatics => vec![(0, 3, 1)],
        PhysicsId::Grad2Elasticity => vec![(0, 9, 3)],
        PhysicsId::Flexoelectric => vec![(0, 3, 1), (12, 21, 3)],
        PhysicsId::Flexomagnetoelectric => vec![(0, 3, 1), (12, 15, 1), (24, 33, 3)],
        other => return Err(MaterialError::Unsupported(other)),
    })
}

/// Modewise total fluxes `J_1 + s_1 - i k . J_2` of a second-gradient
/// system, concatenated over its potentials (`d_T`, then `sigma_T`, ...).
/// `s` is the source in `J = L E - s`.
pub fn total_flux(
    physics: PhysicsId,
    j: &ComplexVector,
    s: &ComplexVector,
    pt: &SpectralPoint,
) -> Result<ComplexVector, MaterialError> {
    let pairs = flux_pairs(physics)?;
    let layout = layout_of(physics);
    layout.check_len(j.len())?;
    layout.check_len(s.len())?;
    crate::symbols::potential_symbol(physics, pt)?;
    let k = &pt.k;
    let len: usize = pairs.iter().map(|(_, _, n)| 3 * n).sum();
    let mut out = ComplexVector::zeros(len);
    let mut at = 0;
    for (g, h, n) in pairs {
        for b in 0..3 {
            for comp in 0..n {
                let idx = b * n + comp;
                let mut v = j[g + idx] + s[g + idx];
                for (a, ka) in k.iter().enumerate() {
                    v -= c(0.0, *ka) * j[h + (a * 3 + b) * n + comp];
                }
                out[at + idx] = v;
            }
        }
        at += 3 * n;
    }
    Ok(out)
}

/// `i k . F` for fluxes laid out as in [`total_flux`].
pub fn flux_divergence(
    physics: PhysicsId,
    flux: &ComplexVector,
    pt: &SpectralPoint,
) -> Result<ComplexVector, MaterialError> {
    let pairs = flux_pairs(physics)?;
    let len: usize = pairs.iter().map(|(_, _, n)| *n).sum();
    let mut out = ComplexVector::zeros(len);
    let (mut at, mut pos) = (0, 0);
    for (_, _, n) in pairs {
        for comp in 0..n {
            for (a, ka) in pt.k.iter().enumerate() {
                out[pos + comp] += c(0.0, *ka) * flux[at + a * n + comp];
            }
        }
        at += 3 * n;
        pos += n;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{canonical_basis, constraint_residual, gamma2};
    use crate::tensor::re;

    fn real(m: &ComplexMatrix) -> DMatrix<f64> {
        m.map(|z| z.re)
    }

    #[test]
    fn symmetrize_example() {
        let raw = DMatrix::from_row_slice(2, 2, &[1., 2., 0., 1.]).map(re);
        let s = symmetrize_energy_law(&raw).unwrap();
        assert_eq!(real(&s), DMatrix::from_row_slice(2, 2, &[1., 1., 1., 1.]));
        assert_eq!(symmetrize_energy_law(&s).unwrap(), s);
        assert!(matches!(
            symmetrize_energy_law(&ComplexMatrix::zeros(2, 3)),
            Err(MaterialError::NotSquare { .. })
        ));
    }

    #[test]
    fn seepage_entries() {
        let p = SeepageParams {
            beta0: 2.0,
            k1: 3.0,
            mu: 1.5,
            eta: 0.25,
        };
        let l = real(&build_material_law(PhysicsId::Seepage, &MaterialParams::Seepage(p)).unwrap().matrix);
        let mut expected = DMatrix::zeros(8, 8);
        for a in 0..3 {
            expected[(3 + a, a)] = 0.5;
            expected[(3 + a, 3 + a)] = 2.0;
        }
        expected[(6, 7)] = 2.0;
        assert_eq!(l, expected);
    }

    #[test]
    fn plate_unit_moduli() {
        let d = isotropic_rigidity(2, 0.5, 0.5).unwrap();
        let p = PlateParams {
            rigidity: d.clone(),
            thickness: 1.0,
            density: 1.0,
        };
        let l = real(&build_material_law(PhysicsId::KirchhoffLove, &MaterialParams::KirchhoffLove(p)).unwrap().matrix);
        let dm = matrix_of("d", &d, 4, 4).unwrap();
        assert_eq!(l.view((0, 0), (4, 4)), -dm);
        assert_eq!(l[(4, 4)], 1.0);
        assert_eq!(l.row(4).iter().filter(|x| **x != 0.0).count(), 1);
    }

    #[test]
    fn plate_rejects_bad_input() {
        let mut d = isotropic_rigidity(2, 1.0, 1.0).unwrap();
        let p = PlateParams {
            rigidity: d.clone(),
            thickness: -1.0,
            density: 1.0,
        };
        assert!(matches!(
            build_material_law(PhysicsId::KirchhoffLove, &MaterialParams::KirchhoffLove(p)),
            Err(MaterialError::NonPositive { name: "thickness", .. })
        ));
        d[1][0] += 1.0;
        let p = PlateParams {
            rigidity: d,
            thickness: 1.0,
            density: 1.0,
        };
        assert!(matches!(
            build_material_law(PhysicsId::KirchhoffLove, &MaterialParams::KirchhoffLove(p.clone())),
            Err(MaterialError::Symmetry { .. })
        ));
        assert!(matches!(
            build_material_law(PhysicsId::Mindlin, &MaterialParams::KirchhoffLove(p)),
            Err(MaterialError::WrongPhysics { .. })
        ));
    }

    #[test]
    fn mindlin_layout() {
        let p = MindlinParams {
            rigidity: isotropic_rigidity(2, 1.0, 1.0).unwrap(),
            shear_modulus: [[2.0, 0.0], [0.0, 2.0]],
            thickness: 2.0,
            density: 3.0,
            shear_correction_factor: default_shear_factor(),
        };
        let l = real(&build_material_law(PhysicsId::Mindlin, &MaterialParams::Mindlin(p)).unwrap().matrix);
        assert!((l[(4, 4)] - 5.0 / 6.0 * 2.0 * 2.0).abs() < 1e-15);
        assert!((l[(6, 6)] - 3.0 * 8.0 / 12.0).abs() < 1e-15);
        assert_eq!(l[(8, 8)], 6.0);
        assert!((l[(0, 0)] + 8.0 * (1.0 + 1.0)).abs() < 1e-14);
        assert_eq!(l.view((0, 4), (4, 5)).norm(), 0.0);
    }

    fn cosserat(alpha: f64) -> MaterialLaw {
        let p = CosseratParams::isotropic(1.0, 0.7, 0.3, 0.2, alpha, 2.0, 0.5).unwrap();
        build_material_law(PhysicsId::Cosserat, &MaterialParams::Cosserat(p)).unwrap()
    }

    #[test]
    fn cosserat_structure() {
        let l = real(&cosserat(0.4).matrix);
        assert_eq!(l.rows(0, 9).norm(), 0.0);
        let eta = levi_civita_contraction() * -0.8;
        assert_eq!(l.view((18, 21), (3, 9)), eta);
        assert_eq!(l.view((33, 0), (3, 9)), eta);
        assert!((l.view((33, 33), (3, 3)) - DMatrix::identity(3, 3) * 1.6).norm() < 1e-15);
        assert_eq!(l[(30, 30)], -0.5);
        assert!(!cosserat(0.4).selfadjoint);
    }

    #[test]
    fn cosserat_decouples_without_alpha() {
        let l = real(&cosserat(0.0).matrix);
        let theta = [21..30, 30..33, 33..36];
        let u = [0..9, 9..18, 18..21];
        for r in theta.iter().chain(&u) {
            for cols in if theta.contains(r) { &u } else { &theta } {
                for i in r.clone() {
                    for j in cols.clone() {
                        assert_eq!(l[(i, j)], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn levi_civita_gives_curl() {
        // grad theta for theta = (0, 0, x): only d_x theta_z = 1 -> curl = (0, -1, 0)
        let mut g = DMatrix::zeros(9, 1);
        g[(2, 0)] = 1.0;
        let curl = levi_civita_contraction() * g;
        assert_eq!(curl.as_slice(), &[0.0, -1.0, 0.0]);
    }

    #[test]
    fn mhd_quiescent() {
        let bg = MhdBackground::quiescent(1.0, 2.0, 0.5);
        let l = real(&build_mhd_law(&bg).unwrap().matrix);
        assert_eq!(l.view((12, 9), (3, 3)), DMatrix::identity(3, 3) * -1.0);
        assert_eq!(l.view((12, 27), (3, 3)), DMatrix::identity(3, 3) * -1.0);
        assert_eq!(l.view((12, 18), (3, 9)).norm(), 0.0);
        assert_eq!(l.view((12, 0), (3, 9)).norm(), 0.0);
        assert_eq!(l.view((12, 30), (3, 3)).norm(), 0.0);
        assert_eq!(l.rows(30, 3).norm(), 0.0);
        assert_eq!(l.view((27, 30), (3, 3)), DMatrix::identity(3, 3));
    }

    #[test]
    fn mhd_background_terms() {
        let mut bg = MhdBackground::quiescent(1.5, 2.0, 0.5);
        bg.b = [1.0, 0.0, 0.0];
        bg.v = [0.0, 1.0, 0.0];
        bg.div_v = 0.3;
        let l = real(&build_mhd_law(&bg).unwrap().matrix);
        // (b^T - b Tr)/mu0 on grad_b: row j=0 picks M_00 * b_0 - b_0 Tr M
        assert!((l[(12, 0)] - (0.5 - 0.5)).abs() < 1e-15);
        assert!((l[(12, 4)] + 0.5).abs() < 1e-15);
        // -sigma0 mu0 v^T: a = 1, j = 0 -> column 3
        assert!((l[(12, 3)] + 1.0).abs() < 1e-15);
        assert!((l[(30, 16)] + 1e6).abs() < 1e-6);
        assert!((l[(30, 18)] + 0.3e6).abs() < 1e-6);
        assert!((l[(30, 22)] + 0.3e6).abs() < 1e-6);
    }

    #[test]
    fn mhd_lambda_scaling() {
        let mut bg = MhdBackground::quiescent(1.0, 1.0, 1.0);
        bg.lambda_v = 10.0;
        let a = real(&build_mhd_law(&bg).unwrap().matrix);
        bg.lambda_v = 20.0;
        let b = real(&build_mhd_law(&bg).unwrap().matrix);
        let lh = real(&isotropic_projectors(3).unwrap().lambda_h);
        assert!((a.view((18, 18), (9, 9)) - &lh * 10.0).norm() < 1e-13);
        assert!((b.view((18, 18), (9, 9)) - &lh * 20.0).norm() < 1e-13);
    }

    #[test]
    fn eta_is_antisymmetric() {
        let g = Matrix3::new(1.0, 2.0, 3.0, -4.0, 5.0, 0.5, 7.0, 8.0, -9.0);
        let e = eta_of_gradb(1.3, &g);
        assert!((e + e.transpose()).norm() < 1e-15);
    }

    #[test]
    fn block_law_symmetrizes() {
        let law = BlockLaw {
            entries: vec![
                BlockEntry {
                    row: "grad_V".into(),
                    col: "grad_V".into(),
                    values: vec![vec![1., 0., 0.], vec![0., 1., 0.], vec![0., 0., 1.]],
                },
                BlockEntry {
                    row: "grad_V".into(),
                    col: "hess_V".into(),
                    values: vec![vec![1.0; 9], vec![0.0; 9], vec![0.0; 9]],
                },
            ],
            symmetrize: true,
        };
        let l = build_material_law(PhysicsId::Grad2Electrostatics, &MaterialParams::Blocks(law.clone()))
            .unwrap();
        assert!(l.selfadjoint);
        assert_eq!(l.matrix[(0, 3)], re(0.5));
        assert_eq!(l.matrix[(3, 0)], re(0.5));
        let mut bad = law;
        bad.entries[1].values.pop();
        assert!(matches!(
            build_material_law(PhysicsId::Grad2Electrostatics, &MaterialParams::Blocks(bad)),
            Err(MaterialError::Shape { .. })
        ));
    }

    #[test]
    fn gauge_move_scalar_reduction() {
        // A_xxx = a, mode along x: both routes give d_T,x = -k^2 a V
        let mut a = [0.0; 27];
        a[0] = 0.7;
        let k = 1.3;
        let pair = gauge_move_coupling(&[a], GaugeDirection::ToD).unwrap();
        let pt = SpectralPoint::stat(&[k, 0., 0.]);
        let e = canonical_basis(PhysicsId::Grad2Electrostatics, &pt).unwrap();
        let pot = crate::symbols::potential_symbol(PhysicsId::Grad2Electrostatics, &pt).unwrap();
        let v = c(0.4, -0.1);
        let e_field = pot.column(0) * v;
        let zero = ComplexVector::zeros(12);
        for law in [&pair.from, &pair.to] {
            let j = &law.matrix * &e_field;
            let dt = total_flux(PhysicsId::Grad2Electrostatics, &j, &zero, &pt).unwrap();
            assert!((dt[0] - v * (-k * k * 0.7)).norm() < 1e-14);
        }
        assert_eq!(e.ncols(), 1);
    }

    #[test]
    fn gauge_move_zero_and_varying() {
        let pair = gauge_move_coupling(&[[0.0; 27]], GaugeDirection::ToQ).unwrap();
        assert_eq!(pair.from.matrix.norm() + pair.to.matrix.norm(), 0.0);
        let mut b = [0.0; 27];
        b[5] = 1.0;
        assert!(matches!(
            gauge_move_coupling(&[[0.0; 27], b], GaugeDirection::ToQ),
            Err(MaterialError::SpatiallyVarying)
        ));
    }

    #[test]
    fn total_flux_without_quadrupoles() {
        let pt = SpectralPoint::stat(&[0.3, 0.2, 0.9]);
        let mut j = ComplexVector::zeros(12);
        let mut s = ComplexVector::zeros(12);
        for i in 0..3 {
            j[i] = c(i as f64, 1.0);
            s[i] = c(0.5, -(i as f64));
        }
        let dt = total_flux(PhysicsId::Grad2Electrostatics, &j, &s, &pt).unwrap();
        for i in 0..3 {
            assert_eq!(dt[i], j[i] + s[i]);
        }
        assert!(matches!(
            total_flux(PhysicsId::Seepage, &ComplexVector::zeros(8), &ComplexVector::zeros(8), &SpectralPoint::new(&[1., 0., 0.], 1.)),
            Err(MaterialError::Unsupported(_))
        ));
    }

    #[test]
    fn constrained_flux_is_divergence_free() {
        for phys in [
            PhysicsId::Grad2Electrostatics,
            PhysicsId::Grad2Elasticity,
            PhysicsId::Flexoelectric,
            PhysicsId::Flexomagnetoelectric,
        ] {
            let pt = SpectralPoint::stat(&[0.4, -1.1, 0.6]);
            let n = layout_of(phys).total_dim;
            let raw = ComplexVector::from_fn(n, |i, _| c((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
            let j = gamma2(phys, &pt).unwrap() * raw;
            assert!(constraint_residual(phys, &j, &pt).unwrap().norm() < 1e-12);
            let s = ComplexVector::from_fn(n, |i, _| c(0.1 * i as f64, 0.0));
            let flux = total_flux(phys, &j, &s, &pt).unwrap();
            let div = flux_divergence(phys, &flux, &pt).unwrap();
            let div_s = flux_divergence(phys, &total_flux(phys, &ComplexVector::zeros(n), &s, &pt).unwrap(), &pt)
                .unwrap();
            assert!((div - div_s).norm() < 1e-12, "{phys}");
        }
    }
}
