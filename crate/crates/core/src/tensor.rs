//! Field layouts, small dense complex linear algebra and the isotropic
//! projectors on `d x d` matrices.
//!
//! Every field handled by this crate is a flattened vector of complex
//! numbers. A [`FieldLayout`] records how that vector splits into tensor
//! blocks: blocks appear in layout order and each block is stored row-major.
//! The inner product on these vectors is the plain componentwise one
//! (Frobenius on each tensor block), which is the inner product in which all
//! the projection operators built here are Hermitian.

use nalgebra::{DMatrix, DVector};
use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use thiserror::Error;

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Relative numerical-rank threshold used by [`orthonormal_range`].
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("expected {expected} blocks, got {got}")]
    BlockCount { expected: usize, got: usize },
    #[error("block `{name}` has shape {got:?}, layout expects {expected:?}")]
    BlockShape {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("vector of length {got} does not match layout dimension {expected}")]
    Length { expected: usize, got: usize },
    #[error("invalid block `{name}`: {reason}")]
    InvalidBlock { name: String, reason: String },
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
    #[error("isotropic projectors are only defined for d = 2 or 3, got {0}")]
    UnsupportedDimension(usize),
}

/// One named tensor block of a field layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl BlockSpec {
    pub fn new(name: &str, shape: &[usize]) -> Result<Self, LayoutError> {
        if shape.is_empty() || shape.len() > 4 {
            return Err(LayoutError::InvalidBlock {
                name: name.to_string(),
                reason: format!("rank {} outside 1..=4", shape.len()),
            });
        }
        if shape.contains(&0) {
            return Err(LayoutError::InvalidBlock {
                name: name.to_string(),
                reason: "zero-sized dimension".into(),
            });
        }
        Ok(BlockSpec {
            name: name.to_string(),
            shape: shape.to_vec(),
        })
    }

    pub fn count(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Ordered block descriptor of the flattened field space of one physics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldLayout {
    pub physics: String,
    pub spatial_dim: usize,
    pub blocks: Vec<BlockSpec>,
    pub total_dim: usize,
    pub potential_dim: usize,
}

impl FieldLayout {
    pub fn new(
        physics: &str,
        spatial_dim: usize,
        blocks: Vec<BlockSpec>,
        potential_dim: usize,
    ) -> Result<Self, LayoutError> {
        if potential_dim == 0 {
            return Err(LayoutError::InvalidBlock {
                name: physics.to_string(),
                reason: "potential dimension must be at least 1".into(),
            });
        }
        let total_dim = blocks.iter().map(BlockSpec::count).sum();
        Ok(FieldLayout {
            physics: physics.to_string(),
            spatial_dim,
            blocks,
            total_dim,
            potential_dim,
        })
    }

    /// Start offset of every block in the flattened vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.count();
                o
            })
            .collect()
    }

    pub fn block_index(&self, name: &str) -> Result<usize, LayoutError> {
        self.blocks
            .iter()
            .position(|b| b.name == name)
            .ok_or_else(|| LayoutError::UnknownBlock(name.to_string()))
    }

    /// Index range of a block in the flattened vector.
    pub fn block_range(&self, index: usize) -> std::ops::Range<usize> {
        let start = self.offsets()[index];
        start..start + self.blocks[index].count()
    }

    pub fn check_len(&self, len: usize) -> Result<(), LayoutError> {
        if len != self.total_dim {
            return Err(LayoutError::Length {
                expected: self.total_dim,
                got: len,
            });
        }
        Ok(())
    }
}

/// Concatenates row-major block values in layout order.
pub fn flatten(
    block_values: &[ArrayD<Complex64>],
    layout: &FieldLayout,
) -> Result<ComplexVector, LayoutError> {
    if block_values.len() != layout.blocks.len() {
        return Err(LayoutError::BlockCount {
            expected: layout.blocks.len(),
            got: block_values.len(),
        });
    }
    let mut out = Vec::with_capacity(layout.total_dim);
    for (value, spec) in block_values.iter().zip(&layout.blocks) {
        if value.shape() != spec.shape.as_slice() {
            return Err(LayoutError::BlockShape {
                name: spec.name.clone(),
                expected: spec.shape.clone(),
                got: value.shape().to_vec(),
            });
        }
        // logical (row-major) iteration order regardless of memory layout
        out.extend(value.iter().copied());
    }
    Ok(ComplexVector::from_vec(out))
}

pub fn unflatten(
    x: &ComplexVector,
    layout: &FieldLayout,
) -> Result<Vec<ArrayD<Complex64>>, LayoutError> {
    layout.check_len(x.len())?;
    let mut out = Vec::with_capacity(layout.blocks.len());
    let mut offset = 0;
    for spec in &layout.blocks {
        let n = spec.count();
        let data = x.as_slice()[offset..offset + n].to_vec();
        offset += n;
        let arr = ArrayD::from_shape_vec(IxDyn(&spec.shape), data).map_err(|e| {
            LayoutError::InvalidBlock {
                name: spec.name.clone(),
                reason: e.to_string(),
            }
        })?;
        out.push(arr);
    }
    Ok(out)
}

/// `(x, y) = sum conj(x_i) y_i`.
pub fn inner_product(x: &ComplexVector, y: &ComplexVector) -> Result<Complex64, LayoutError> {
    if x.len() != y.len() {
        return Err(LayoutError::Length {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(x.dotc(y))
}

/// Orthonormal basis of the numerical column space of `p`.
///
/// Column-pivoted modified Gram-Schmidt with a second orthogonalization pass
/// on every accepted vector. A column is accepted while its remaining norm
/// exceeds `RANK_TOLERANCE` times the largest column norm of `p`.
pub fn orthonormal_range(p: &ComplexMatrix) -> ComplexMatrix {
    let rows = p.nrows();
    let max_norm = p
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    if max_norm == 0.0 || !max_norm.is_finite() {
        return ComplexMatrix::zeros(rows, 0);
    }
    let threshold = RANK_TOLERANCE * max_norm;

    let mut remaining: Vec<ComplexVector> = p.column_iter().map(|c| c.into_owned()).collect();
    let mut basis: Vec<ComplexVector> = Vec::with_capacity(remaining.len().min(rows));

    while !remaining.is_empty() && basis.len() < rows {
        let (pivot, pivot_norm) = remaining
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_norm <= threshold {
            break;
        }
        let mut v = remaining.swap_remove(pivot);
        for q in &basis {
            let coeff = q.dotc(&v);
            v.axpy(-coeff, q, Complex64::new(1.0, 0.0));
        }
        let norm = v.norm();
        if norm <= threshold {
            break;
        }
        v.unscale_mut(norm);
        for w in remaining.iter_mut() {
            let coeff = v.dotc(w);
            w.axpy(-coeff, &v, Complex64::new(1.0, 0.0));
        }
        basis.push(v);
    }

    if basis.is_empty() {
        return ComplexMatrix::zeros(rows, 0);
    }
    ComplexMatrix::from_columns(&basis)
}

/// Orthogonal projector `QQ^dagger` onto the column space of `p`.
pub fn projector_from_columns(p: &ComplexMatrix) -> ComplexMatrix {
    let q = orthonormal_range(p);
    projector_from_basis(&q)
}

pub(crate) fn projector_from_basis(q: &ComplexMatrix) -> ComplexMatrix {
    if q.ncols() == 0 {
        return ComplexMatrix::zeros(q.nrows(), q.nrows());
    }
    q * q.adjoint()
}

/// Projectors onto the rotationally invariant subspaces of `d x d` matrices:
/// multiples of the identity, trace-free symmetric, and antisymmetric.
/// Each acts on row-major flattened matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotropicProjectors {
    pub dim: usize,
    pub lambda_h: ComplexMatrix,
    pub lambda_s: ComplexMatrix,
    pub lambda_a: ComplexMatrix,
}

pub fn isotropic_projectors(d: usize) -> Result<IsotropicProjectors, LayoutError> {
    if d != 2 && d != 3 {
        return Err(LayoutError::UnsupportedDimension(d));
    }
    let n = d * d;
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut h = ComplexMatrix::zeros(n, n);
    let mut s = ComplexMatrix::zeros(n, n);
    let mut a = ComplexMatrix::zeros(n, n);
    let inv_d = 1.0 / d as f64;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let row = i * d + j;
                    let col = k * d + l;
                    let hyd = delta(i, j) * delta(k, l) * inv_d;
                    let sym = 0.5 * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
                    let skew = 0.5 * (delta(i, k) * delta(j, l) - delta(i, l) * delta(j, k));
                    h[(row, col)] = Complex64::new(hyd, 0.0);
                    s[(row, col)] = Complex64::new(sym - hyd, 0.0);
                    a[(row, col)] = Complex64::new(skew, 0.0);
                }
            }
        }
    }
    Ok(IsotropicProjectors {
        dim: d,
        lambda_h: h,
        lambda_s: s,
        lambda_a: a,
    })
}

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub(crate) fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Frobenius norm of `a^2 - a`.
pub fn idempotency_defect(a: &ComplexMatrix) -> f64 {
    (a * a - a).norm()
}

/// Frobenius norm of `a - a^dagger`.
pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

/// Embeds `m` into the `(rows, cols)` block of `target`.
pub(crate) fn set_block(target: &mut ComplexMatrix, row: usize, col: usize, m: &ComplexMatrix) {
    target
        .view_mut((row, col), (m.nrows(), m.ncols()))
        .copy_from(m);
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;
    use ndarray::Array2;

    fn layout_vec_mat() -> FieldLayout {
        FieldLayout::new(
            "test",
            3,
            vec![
                BlockSpec::new("v", &[3]).unwrap(),
                BlockSpec::new("m", &[3, 3]).unwrap(),
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn flatten_vector_and_identity() {
        let layout = layout_vec_mat();
        let v = arr1(&[re(1.0), re(2.0), re(3.0)]).into_dyn();
        let m = Array2::from_shape_fn((3, 3), |(i, j)| re(if i == j { 1.0 } else { 0.0 })).into_dyn();
        let x = flatten(&[v, m], &layout).unwrap();
        let expected = [1., 2., 3., 1., 0., 0., 0., 1., 0., 0., 0., 1.];
        assert_eq!(x.len(), 12);
        for (a, b) in x.iter().zip(expected) {
            assert_eq!(*a, re(b));
        }
    }

    #[test]
    fn flatten_zero_blocks_gives_zero() {
        let layout = layout_vec_mat();
        let v = ArrayD::zeros(IxDyn(&[3]));
        let m = ArrayD::zeros(IxDyn(&[3, 3]));
        let x = flatten(&[v, m], &layout).unwrap();
        assert!(x.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn flatten_shape_mismatch() {
        let layout = layout_vec_mat();
        let v = ArrayD::zeros(IxDyn(&[2]));
        let m = ArrayD::zeros(IxDyn(&[3, 3]));
        assert!(matches!(
            flatten(&[v, m], &layout),
            Err(LayoutError::BlockShape { .. })
        ));
        assert!(matches!(
            flatten(&[], &layout),
            Err(LayoutError::BlockCount { .. })
        ));
    }

    #[test]
    fn flatten_transposed_view_is_row_major() {
        let layout = FieldLayout::new("t", 2, vec![BlockSpec::new("m", &[2, 2]).unwrap()], 1).unwrap();
        let m = Array2::from_shape_vec((2, 2), vec![re(1.), re(2.), re(3.), re(4.)]).unwrap();
        let t = m.t().to_owned().into_dyn();
        let x = flatten(&[m.reversed_axes().into_dyn()], &layout).unwrap();
        let y = flatten(&[t], &layout).unwrap();
        assert_eq!(x, y);
        assert_eq!(x[1], re(3.));
    }

    #[test]
    fn block_spec_rejects_rank_five() {
        assert!(BlockSpec::new("x", &[1, 1, 1, 1, 1]).is_err());
        assert!(BlockSpec::new("x", &[]).is_err());
    }

    #[test]
    fn inner_product_examples() {
        let mut e0 = ComplexVector::zeros(4);
        e0[0] = re(1.0);
        let mut e1 = ComplexVector::zeros(4);
        e1[1] = re(1.0);
        assert_eq!(inner_product(&e0, &e0).unwrap(), re(1.0));
        assert_eq!(inner_product(&e0, &e1).unwrap(), re(0.0));
        let mut x = ComplexVector::zeros(4);
        x[0] = c(1.0, 1.0);
        assert_eq!(inner_product(&x, &e0).unwrap(), c(1.0, -1.0));
        assert!(inner_product(&x, &ComplexVector::zeros(3)).is_err());
    }

    #[test]
    fn range_of_unit_column() {
        let p = ComplexMatrix::from_column_slice(2, 1, &[re(1.0), re(0.0)]);
        let q = orthonormal_range(&p);
        assert_eq!(q.ncols(), 1);
        assert!((q[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(q[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn range_detects_dependent_columns() {
        let col = [c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)];
        let p = ComplexMatrix::from_fn(3, 2, |i, _| col[i]);
        assert_eq!(orthonormal_range(&p).ncols(), 1);
        assert_eq!(orthonormal_range(&ComplexMatrix::zeros(3, 2)).ncols(), 0);
    }

    #[test]
    fn projector_examples() {
        let mut p = ComplexMatrix::zeros(3, 1);
        p[(0, 0)] = re(2.0);
        let pi = projector_from_columns(&p);
        let mut expected = ComplexMatrix::zeros(3, 3);
        expected[(0, 0)] = re(1.0);
        assert!((pi - expected).norm() < 1e-15);
        let zero = projector_from_columns(&ComplexMatrix::zeros(3, 2));
        assert_eq!(zero, ComplexMatrix::zeros(3, 3));
    }

    #[test]
    fn isotropic_projector_examples() {
        let iso = isotropic_projectors(3).unwrap();
        let id = ComplexVector::from_fn(9, |r, _| re(if r % 4 == 0 { 1.0 } else { 0.0 }));
        assert!((&iso.lambda_h * &id - &id).norm() < 1e-15);
        assert!((iso.lambda_h.trace() - re(1.0)).norm() < 1e-14);
        assert!((iso.lambda_s.trace() - re(5.0)).norm() < 1e-14);
        assert!((iso.lambda_a.trace() - re(3.0)).norm() < 1e-14);

        // antisymmetric matrix
        let mut m = ComplexVector::zeros(9);
        m[1] = re(2.0);
        m[3] = re(-2.0);
        m[5] = re(0.5);
        m[7] = re(-0.5);
        assert!((&iso.lambda_h * &m).norm() < 1e-15);
        assert!((&iso.lambda_s * &m).norm() < 1e-15);
        assert!((&iso.lambda_a * &m - &m).norm() < 1e-15);

        assert!(isotropic_projectors(4).is_err());
        let iso2 = isotropic_projectors(2).unwrap();
        assert!((iso2.lambda_s.trace() - re(2.0)).norm() < 1e-14);
        assert!((iso2.lambda_a.trace() - re(1.0)).norm() < 1e-14);
    }

    #[test]
    fn isotropic_projectors_partition_identity() {
        for d in [2, 3] {
            let iso = isotropic_projectors(d).unwrap();
            let sum = &iso.lambda_h + &iso.lambda_s + &iso.lambda_a;
            assert!((sum - ComplexMatrix::identity(d * d, d * d)).norm() < 1e-14);
            let ps = [&iso.lambda_h, &iso.lambda_s, &iso.lambda_a];
            for (i, a) in ps.iter().enumerate() {
                assert!(idempotency_defect(a) < 1e-14);
                assert!(hermiticity_defect(a) < 1e-14);
                for (j, b) in ps.iter().enumerate() {
                    if i != j {
                        assert!((*a * *b).norm() < 1e-14);
                    }
                }
            }
        }
    }
}
