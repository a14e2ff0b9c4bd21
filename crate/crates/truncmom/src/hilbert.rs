//! The associated Hilbert space of a moment sequence.
//!
//! Monomial classes `[t^{k_0}], ..., [t^{k_rho}]` carry the inner product
//! `<p, q> = sum a_j conj(b_m) s_{k_j+k_m}`; Gram-Schmidt in strict index
//! order with skip-on-degeneracy produces an orthonormal basis of the
//! quotient space `H`. `H_0` is the span of the classes whose index survives
//! every coordinate shift, the common domain of the multiplication operators
//! `M_l : [t^k] -> [t^{k+e_l}]`. The defect `i_s = dim H - dim H_0` is the
//! index of nonself-adjointness.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat, RVec};
use crate::moments::MomentSequence;
use crate::multiindex::AdmissibleSet;

/// Quotient space data: orthonormal basis coefficients over the monomial
/// classes, dimensions, and the index of nonself-adjointness.
#[derive(Debug, Clone)]
pub struct AssociatedSpace {
    set: AdmissibleSet,
    gram: RMat,
    /// Row `i` holds the coefficients of basis vector `g_i` over the classes
    /// `[t^{k_j}]`; support never extends past the pivot column.
    basis_coeffs: RMat,
    pivot_indices: Vec<usize>,
    omega0: Vec<usize>,
    dim_h0: usize,
}

impl AssociatedSpace {
    pub fn set(&self) -> &AdmissibleSet {
        &self.set
    }

    pub fn gram(&self) -> &RMat {
        &self.gram
    }

    pub fn basis_coeffs(&self) -> &RMat {
        &self.basis_coeffs
    }

    pub fn pivot_indices(&self) -> &[usize] {
        &self.pivot_indices
    }

    pub fn omega0(&self) -> &[usize] {
        &self.omega0
    }

    /// `dim H`, the rank of the moment matrix.
    pub fn dim_h(&self) -> usize {
        self.basis_coeffs.nrows()
    }

    /// `dim H_0 = d + 1`, the rank of the principal Gram block on `Omega_0`.
    pub fn dim_h0(&self) -> usize {
        self.dim_h0
    }

    /// The index of nonself-adjointness `i_s = dim H - dim H_0`.
    pub fn index(&self) -> usize {
        self.dim_h() - self.dim_h0
    }

    pub fn is_dimensionally_stable(&self) -> bool {
        self.index() == 0
    }

    /// Basis coordinates of the class of the constant polynomial `1`:
    /// `[1] = |x_0| g_0`, i.e. `sqrt(s_0)` on the first basis vector.
    pub fn unit_class_coords(&self) -> RVec {
        let mut e0 = RVec::zeros(self.dim_h());
        if self.dim_h() > 0 {
            debug_assert_eq!(self.pivot_indices[0], 0);
            e0[0] = self.gram[(0, 0)].sqrt();
        }
        e0
    }

    /// Expansion coordinates of every monomial class in the basis: column `a`
    /// holds `(<x_a, g_i>)_i`.
    pub(crate) fn class_coords(&self) -> RMat {
        &self.basis_coeffs * &self.gram
    }

    /// Whether the first `dim H_0` basis vectors are supported on `Omega_0`
    /// classes, which is what the block construction needs. Holds for
    /// triangular truncations with the standard indexation.
    fn h0_prefix_supported(&self) -> bool {
        let omega0: std::collections::HashSet<usize> = self.omega0.iter().copied().collect();
        (0..self.dim_h0).all(|l| {
            (0..self.set.len())
                .all(|j| self.basis_coeffs[(l, j)] == 0.0 || omega0.contains(&j))
        })
    }
}

/// Builds the associated Hilbert space by Gram-Schmidt over the monomial
/// classes in index order. A class whose residual squared norm is at most
/// `tol * (1 + Gamma_jj)` lies in the span of its predecessors and is
/// skipped; a residual below the negated threshold flags a non-PSD moment
/// matrix. One re-orthogonalization pass keeps the basis orthonormal when
/// the moment matrix is ill-conditioned.
pub fn build_space(s: &MomentSequence, tol: f64) -> Result<AssociatedSpace> {
    let gram = s.gram_matrix();
    let n = gram.nrows();
    let mut rows: Vec<RVec> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for j in 0..n {
        let mut v = RVec::zeros(n);
        v[j] = 1.0;
        for _ in 0..2 {
            for c in &rows {
                let h = c.dot(&(&gram * &v));
                v -= c * h;
            }
        }
        let norm2 = v.dot(&(&gram * &v));
        let threshold = tol * (1.0 + gram[(j, j)]);
        if norm2 <= threshold {
            if norm2 < -threshold {
                return Err(Error::NotPositiveSemidefinite {
                    detail: format!(
                        "residual norm^2 = {norm2:.3e} for class {} is negative",
                        s.set().element(j)
                    ),
                });
            }
            continue;
        }
        rows.push(v / norm2.sqrt());
        pivots.push(j);
    }
    let mut basis_coeffs = RMat::zeros(rows.len(), n);
    for (i, r) in rows.iter().enumerate() {
        basis_coeffs.set_row(i, &r.transpose());
    }
    let omega0 = s.set().omega(0)?;
    let sub = DMatrix::from_fn(omega0.len(), omega0.len(), |a, b| {
        gram[(omega0[a], omega0[b])]
    });
    let dim_h0 = linalg::symmetric_rank(&sub, tol);
    debug_assert!(dim_h0 <= rows.len(), "H_0 cannot exceed H");
    Ok(AssociatedSpace {
        set: s.set().clone(),
        gram,
        basis_coeffs,
        pivot_indices: pivots,
        omega0,
        dim_h0: dim_h0.min(rows.len()),
    })
}

/// The blocks of the symmetric multiplication operators in the orthonormal
/// basis: `A_k` is the compression to `H_0` (size `d+1`), `B_k` the coupling
/// into the orthogonal complement (size `i_s x (d+1)`). Everything is
/// computed from the prescribed moments alone.
#[derive(Debug, Clone)]
pub struct OperatorBlocks {
    pub a: Vec<CMat>,
    pub b: Vec<CMat>,
    /// Per axis: basis coordinates of `[t^{k_j + e_k}]` for `j in Omega_0`,
    /// one column per `Omega_0` position.
    pub shift_table: Vec<RMat>,
    pub dim_h0: usize,
    pub index: usize,
}

impl OperatorBlocks {
    pub fn axes(&self) -> usize {
        self.a.len()
    }

    /// Stacks `A_k` over `B_k`: the basis coordinates of `M_k g_l` by column.
    pub fn stacked(&self, axis: usize) -> CMat {
        let a = &self.a[axis];
        let b = &self.b[axis];
        let mut out = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
        out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
        out.view_mut((a.nrows(), 0), (b.nrows(), b.ncols())).copy_from(b);
        out
    }
}

/// Assembles `A_k` and `B_k` for every axis. For each `j in Omega_0` the
/// shifted class `[t^{k_j + e_k}]` is expanded in the orthonormal basis; the
/// expansion of `M_k g_l` follows by linearity of the basis coefficients.
pub fn operator_blocks(space: &AssociatedSpace, s: &MomentSequence) -> Result<OperatorBlocks> {
    if s.set() != space.set() || s.gram_matrix() != *space.gram() {
        return Err(Error::NotAdmissible {
            reason: "space was built from a different moment sequence".into(),
        });
    }
    if !space.h0_prefix_supported() {
        return Err(Error::BlocksUnavailable);
    }
    let set = space.set();
    let n_axes = set.dim();
    let dim_h = space.dim_h();
    let d1 = space.dim_h0();
    let class_coords = space.class_coords();
    let mut a_blocks = Vec::with_capacity(n_axes);
    let mut b_blocks = Vec::with_capacity(n_axes);
    let mut shift_tables = Vec::with_capacity(n_axes);

    for axis in 1..=n_axes {
        let mut table = RMat::zeros(dim_h, space.omega0().len());
        for (col, &j) in space.omega0().iter().enumerate() {
            let shifted = set.element(j).shift(axis)?;
            let pos = set
                .position(&shifted)
                .expect("Omega_0 membership guarantees the shift stays in K");
            table.set_column(col, &class_coords.column(pos));
        }
        let mut ak = RMat::zeros(d1, d1);
        let mut bk = RMat::zeros(dim_h - d1, d1);
        for l in 0..d1 {
            let mut coords = RVec::zeros(dim_h);
            for (col, &j) in space.omega0().iter().enumerate() {
                let c = space.basis_coeffs()[(l, j)];
                if c == 0.0 {
                    continue;
                }
                coords += table.column(col) * c;
            }
            for r in 0..d1 {
                ak[(r, l)] = coords[r];
            }
            for r in d1..dim_h {
                bk[(r - d1, l)] = coords[r];
            }
        }
        a_blocks.push(ak.map(|x| Complex64::new(x, 0.0)));
        b_blocks.push(bk.map(|x| Complex64::new(x, 0.0)));
        shift_tables.push(table);
    }
    Ok(OperatorBlocks {
        a: a_blocks,
        b: b_blocks,
        shift_table: shift_tables,
        dim_h0: d1,
        index: dim_h - d1,
    })
}

/// Complete self-adjointness at the matrix level: the multiplication
/// operators are everywhere defined (`i_s = 0`) and their full matrices
/// pairwise commute.
pub fn is_completely_selfadjoint(
    space: &AssociatedSpace,
    blocks: &OperatorBlocks,
    tol: f64,
) -> bool {
    if !space.is_dimensionally_stable() {
        return false;
    }
    for a in 0..blocks.axes() {
        for b in (a + 1)..blocks.axes() {
            let comm = &blocks.a[a] * &blocks.a[b] - &blocks.a[b] * &blocks.a[a];
            if linalg::fro(&comm) > tol {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::AtomicMeasure;
    use crate::multiindex::MultiIndex;
    use crate::RANK_TOL;
    use std::collections::HashMap;

    fn example1() -> MomentSequence {
        crate::problem::tests::example1_sequence()
    }

    fn example2() -> MomentSequence {
        crate::problem::tests::example2_sequence()
    }

    #[test]
    fn example1_space_dimensions_and_basis() {
        let s = example1();
        let space = build_space(&s, RANK_TOL).unwrap();
        assert_eq!(space.dim_h(), 4);
        assert_eq!(space.dim_h0(), 3);
        assert_eq!(space.index(), 1);
        assert_eq!(space.pivot_indices(), &[0, 1, 2, 5]);
        assert_eq!(space.omega0(), &[0, 1, 2]);

        let c = space.basis_coeffs();
        // g_0 = (1/3) x_0
        assert!((c[(0, 0)] - 1.0 / 3.0).abs() < 1e-12);
        // g_3 = sqrt(2/3) (x_5 - x_0/4 - x_1/4)
        let f = (2.0f64 / 3.0).sqrt();
        assert!((c[(3, 0)] + f / 4.0).abs() < 1e-12);
        assert!((c[(3, 1)] + f / 4.0).abs() < 1e-12);
        assert!((c[(3, 5)] - f).abs() < 1e-12);
    }

    #[test]
    fn example2_space_dimensions_and_basis() {
        let s = example2();
        let space = build_space(&s, RANK_TOL).unwrap();
        assert_eq!(space.dim_h(), 5);
        assert_eq!(space.dim_h0(), 3);
        assert_eq!(space.index(), 2);
        let c = space.basis_coeffs();
        // g_0 = x_0 / (2 sqrt 2)
        assert!((c[(0, 0)] - 1.0 / (2.0 * 2.0f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn single_atom_space_is_flat() {
        let set = AdmissibleSet::triangular(2, 2);
        let mu = AtomicMeasure::new(2, vec![(vec![0.7, -0.3], 2.0)]).unwrap();
        let s = MomentSequence::from_measure(set, &mu).unwrap();
        let space = build_space(&s, RANK_TOL).unwrap();
        assert_eq!(space.dim_h(), 1);
        assert_eq!(space.index(), 0);
        assert!(space.is_dimensionally_stable());
    }

    #[test]
    fn orthonormality_in_gram_inner_product() {
        for s in [example1(), example2()] {
            let space = build_space(&s, RANK_TOL).unwrap();
            let c = space.basis_coeffs();
            let grammed = c * space.gram() * c.transpose();
            let id = RMat::identity(space.dim_h(), space.dim_h());
            assert!((grammed - id).norm() < 1e-8);
        }
    }

    #[test]
    fn pivot_class_reconstruction() {
        // expanding [t^{k_j}] for pivot j in the basis reproduces its inner
        // products with every monomial class
        for s in [example1(), example2()] {
            let space = build_space(&s, RANK_TOL).unwrap();
            let coords = space.class_coords();
            for &j in space.pivot_indices() {
                let expansion = coords.column(j);
                // inner products of the reconstructed class with each x_m
                let rebuilt = coords.transpose() * expansion;
                for m in 0..space.set().len() {
                    assert!(
                        (rebuilt[m] - space.gram()[(m, j)]).abs() < 1e-8,
                        "class {j}, inner product with class {m}"
                    );
                }
            }
        }
    }

    #[test]
    fn example1_blocks_match_closed_forms() {
        let s = example1();
        let space = build_space(&s, RANK_TOL).unwrap();
        let blocks = operator_blocks(&space, &s).unwrap();
        let r22 = 2.0 * 2.0f64.sqrt() / 9.0;
        let a1 = [
            [-1.0 / 9.0, r22, 0.0],
            [r22, -8.0 / 9.0, 0.0],
            [0.0, 0.0, 0.0],
        ];
        let s23 = 2.0f64.sqrt() / 3.0;
        let a2 = [
            [0.0, 0.0, s23],
            [0.0, 0.0, 1.0 / 6.0],
            [s23, 1.0 / 6.0, 0.0],
        ];
        for m in 0..3 {
            for j in 0..3 {
                assert!((blocks.a[0][(m, j)].re - a1[m][j]).abs() < 1e-12);
                assert!((blocks.a[1][(m, j)].re - a2[m][j]).abs() < 1e-12);
                assert_eq!(blocks.a[0][(m, j)].im, 0.0);
            }
        }
        let b2 = [0.0, 0.0, 3.0f64.sqrt() / 2.0];
        for j in 0..3 {
            assert!(blocks.b[0][(0, j)].norm() < 1e-12, "B_1 vanishes");
            assert!((blocks.b[1][(0, j)].re - b2[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn example2_blocks_match_closed_forms() {
        let s = example2();
        let space = build_space(&s, RANK_TOL).unwrap();
        let blocks = operator_blocks(&space, &s).unwrap();
        let a1 = [[0.0, 0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let a2 = [[0.0, 0.0, 0.5], [0.0, 0.0, 0.0], [0.5, 0.0, 0.0]];
        for m in 0..3 {
            for j in 0..3 {
                assert!((blocks.a[0][(m, j)].re - a1[m][j]).abs() < 1e-12);
                assert!((blocks.a[1][(m, j)].re - a2[m][j]).abs() < 1e-12);
            }
        }
        let b1 = [[0.0, 3.0f64.sqrt() / 2.0, 0.0], [0.0, 0.0, 0.0]];
        // the (1,2) entry follows from Parseval on the expansion of [t^{(0,2)}]
        let b2 = [
            [0.0, 0.0, -1.0 / (2.0 * 3.0f64.sqrt())],
            [0.0, 0.0, (2.0f64 / 3.0).sqrt()],
        ];
        for m in 0..2 {
            for j in 0..3 {
                assert!((blocks.b[0][(m, j)].re - b1[m][j]).abs() < 1e-12);
                assert!(
                    (blocks.b[1][(m, j)].re - b2[m][j]).abs() < 1e-12,
                    "B_2 entry ({m},{j})"
                );
            }
        }
    }

    #[test]
    fn blocks_symmetric_and_coupling_for_index_one() {
        let set = AdmissibleSet::triangular(2, 1);
        let mu = AtomicMeasure::new(
            2,
            vec![(vec![0.3, 0.4], 1.0), (vec![-0.5, 0.1], 2.0)],
        )
        .unwrap();
        let s = MomentSequence::from_measure(set, &mu).unwrap();
        let space = build_space(&s, RANK_TOL).unwrap();
        // K_1 with two generic atoms: dim H = 2, dim H_0 = 1
        assert_eq!(space.index(), 1);
        let blocks = operator_blocks(&space, &s).unwrap();
        for ax in 0..2 {
            let h = &blocks.a[ax] - blocks.a[ax].adjoint();
            assert!(linalg::fro(&h) < 1e-9, "A_{} symmetric", ax + 1);
        }
    }

    #[test]
    fn flat_space_has_empty_b_blocks() {
        let set = AdmissibleSet::triangular(2, 2);
        let mu = AtomicMeasure::new(
            2,
            vec![(vec![0.3, 0.4], 1.0), (vec![-0.5, 0.1], 2.0)],
        )
        .unwrap();
        let s = MomentSequence::from_measure(set, &mu).unwrap();
        let space = build_space(&s, RANK_TOL).unwrap();
        assert!(space.is_dimensionally_stable());
        let blocks = operator_blocks(&space, &s).unwrap();
        for ax in 0..2 {
            assert_eq!(blocks.b[ax].nrows(), 0);
        }
    }

    #[test]
    fn dimensionally_stable_instances_commute() {
        // dimensional stability forces commuting blocks, on oracle measures
        let mut rng = crate::oracle::SeedRng::new(2024);
        let mut checked = 0;
        for trial in 0..50 {
            let n_atoms = 1 + trial % 3;
            let mu = crate::oracle::random_measure(&mut rng, 2, n_atoms, 1.0);
            let set = AdmissibleSet::triangular(2, 2);
            let s = MomentSequence::from_measure(set, &mu).unwrap();
            let space = build_space(&s, RANK_TOL).unwrap();
            if !space.is_dimensionally_stable() {
                continue;
            }
            let blocks = operator_blocks(&space, &s).unwrap();
            assert!(is_completely_selfadjoint(&space, &blocks, 1e-7));
            checked += 1;
        }
        assert!(checked >= 45, "most few-atom instances are flat, got {checked}");
    }

    #[test]
    fn index_range_for_triangular_instances() {
        // 0 <= i_s <= r + 1 for K_r with n = 2
        let mut rng = crate::oracle::SeedRng::new(99);
        for r in 1..=3u32 {
            for trial in 0..10usize {
                let mu = crate::oracle::random_measure(&mut rng, 2, 1 + trial % 8, 1.0);
                let set = AdmissibleSet::triangular(2, r);
                let s = MomentSequence::from_measure(set, &mu).unwrap();
                let space = build_space(&s, RANK_TOL).unwrap();
                assert!(space.index() <= (r + 1) as usize);
            }
        }
    }

    #[test]
    fn golden_spaces_are_not_completely_selfadjoint() {
        for s in [example1(), example2()] {
            let space = build_space(&s, RANK_TOL).unwrap();
            let blocks = operator_blocks(&space, &s).unwrap();
            assert!(!is_completely_selfadjoint(&space, &blocks, 1e-9));
        }
    }

    #[test]
    fn non_psd_rejected() {
        let set = AdmissibleSet::triangular(1, 1);
        let mut values = HashMap::new();
        values.insert(MultiIndex::new(vec![0]), 1.0);
        values.insert(MultiIndex::new(vec![1]), 2.0);
        values.insert(MultiIndex::new(vec![2]), 1.0);
        let s = MomentSequence::new(set, values).unwrap();
        assert!(matches!(
            build_space(&s, RANK_TOL),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }
}
