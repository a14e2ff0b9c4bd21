//! Joint spectral decomposition of a commuting Hermitian tuple and the
//! extraction of the atomic representing measure.
//!
//! The atoms of a canonical solution are the joint eigenvalue tuples
//! `(lambda_{1;j_1}, ..., lambda_{n;j_n})` and the masses are
//! `<P_{1;j_1} ... P_{n;j_n} [1], [1]>`, the expectation of the projection
//! product against the class of the constant polynomial.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec};
use crate::moments::{AtomicMeasure, MomentSequence};
use crate::EIG_CLUSTER_TOL;

/// Distinct eigenvalues and spectral projections of each operator in a
/// commuting tuple.
#[derive(Debug, Clone)]
pub struct JointSpectrum {
    dim: usize,
    /// Per axis: the distinct eigenvalues in increasing order.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Per axis: the orthogonal projection onto each eigenspace.
    pub projections: Vec<Vec<CMat>>,
}

impl JointSpectrum {
    pub fn axes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Splits eigenvalues (given ascending) into clusters separated by more than
/// the tolerance.
fn cluster_ascending(vals: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if v - vals[g[0]] <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Simultaneously diagonalizes commuting Hermitian matrices by recursive
/// invariant-subspace splitting: diagonalize the first operator, cluster its
/// eigenvalues, compress the next operator onto each cluster subspace, and
/// recurse. Robust for exactly commuting tuples carrying rounding noise and
/// free of genericity assumptions.
pub fn joint_diagonalize(operators: &[CMat], tol: f64) -> Result<JointSpectrum> {
    let n_axes = operators.len();
    let dim = operators.first().map(|m| m.nrows()).unwrap_or(0);
    for m in operators {
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: m.nrows() });
        }
    }
    for a in 0..n_axes {
        for b in (a + 1)..n_axes {
            let comm = &operators[a] * &operators[b] - &operators[b] * &operators[a];
            let norm = linalg::fro(&comm);
            let scale = 1.0 + linalg::fro(&operators[a]) * linalg::fro(&operators[b]);
            if norm > tol * scale {
                return Err(Error::NotCommuting {
                    detail: format!("|[R_{}, R_{}]| = {norm:.3e}", a + 1, b + 1),
                });
            }
        }
    }

    // leaves of the splitting: orthonormal bases of joint invariant
    // subspaces, each tagged with its eigenvalue tuple
    let mut subspaces: Vec<(CMat, Vec<f64>)> = vec![(CMat::identity(dim, dim), Vec::new())];
    for op in operators {
        let op_scale = linalg::fro(op);
        let eps = EIG_CLUSTER_TOL * (1.0 + op_scale);
        let mut next: Vec<(CMat, Vec<f64>)> = Vec::new();
        for (basis, tuple) in &subspaces {
            let compressed = basis.adjoint() * op * basis;
            let (vals, vecs) = linalg::hermitian_eigen(&compressed);
            for group in cluster_ascending(&vals, eps) {
                let mut sub = CMat::zeros(basis.ncols(), group.len());
                for (col, &i) in group.iter().enumerate() {
                    sub.set_column(col, &vecs.column(i));
                }
                let mean = group.iter().map(|&i| vals[i]).sum::<f64>() / group.len() as f64;
                let mut tagged = tuple.clone();
                tagged.push(mean);
                next.push((basis * sub, tagged));
            }
        }
        subspaces = next;
    }

    // per-axis eigenvalue lists with enforced distinctness, then projections
    // as sums of leaf projectors
    let mut eigenvalues = Vec::with_capacity(n_axes);
    let mut projections = Vec::with_capacity(n_axes);
    for axis in 0..n_axes {
        let eps = EIG_CLUSTER_TOL * (1.0 + linalg::fro(&operators[axis]));
        let mut axis_vals: Vec<f64> = subspaces.iter().map(|(_, t)| t[axis]).collect();
        axis_vals.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        let mut distinct: Vec<f64> = Vec::new();
        for v in axis_vals {
            if distinct.last().map(|&d| v - d > eps).unwrap_or(true) {
                distinct.push(v);
            }
        }
        let mut projs = vec![CMat::zeros(dim, dim); distinct.len()];
        for (basis, tuple) in &subspaces {
            let v = tuple[axis];
            let j = distinct
                .iter()
                .position(|&d| (v - d).abs() <= eps)
                .expect("leaf eigenvalue belongs to a cluster");
            projs[j] += basis * basis.adjoint();
        }
        eigenvalues.push(distinct);
        projections.push(projs);
    }
    Ok(JointSpectrum { dim, eigenvalues, projections })
}

/// Reads the atomic measure off the spectrum: one candidate atom per joint
/// eigenvalue tuple, mass the expectation of the ordered projection product
/// against `e0`, the coordinates of the class `[1]`. Atoms with negligible
/// mass are pruned; a significantly negative or non-real mass indicates a
/// corrupted spectrum and is an error.
pub fn extract_measure(spectrum: &JointSpectrum, e0: &CVec) -> Result<AtomicMeasure> {
    let n_axes = spectrum.axes();
    let total_mass = e0.dotc(e0).re; // |e0|^2 = s_0
    let floor = AtomicMeasure::prune_floor(total_mass);
    let guard = 1e-8 * total_mass.max(1e-300);
    let counts: Vec<usize> = spectrum.eigenvalues.iter().map(|e| e.len()).collect();
    let tuples: usize = counts.iter().product();
    let mut atoms: Vec<(Vec<f64>, f64)> = Vec::new();
    for index in 0..tuples {
        let mut flat = index;
        let point: Vec<usize> = counts
            .iter()
            .map(|&c| {
                let p = flat % c;
                flat /= c;
                p
            })
            .collect();
        // apply the projections right to left
        let mut v = e0.clone();
        for axis in (0..n_axes).rev() {
            v = &spectrum.projections[axis][point[axis]] * v;
        }
        let mass = e0.dotc(&v); // <P_1 ... P_n e0, e0>
        if mass.im.abs() > guard || mass.re < -guard {
            return Err(Error::InvalidMass { value: format!("{mass}") });
        }
        if mass.re > floor {
            let coords: Vec<f64> = (0..n_axes)
                .map(|ax| spectrum.eigenvalues[ax][point[ax]])
                .collect();
            atoms.push((coords, mass.re));
        }
    }
    let mu = AtomicMeasure::from_extraction(n_axes, atoms, floor)?;
    let sum = mu.total_mass();
    if (sum - total_mass).abs() > 1e-8 * (1.0 + total_mass) {
        return Err(Error::InvalidMass {
            value: format!("masses sum to {sum}, expected {total_mass}"),
        });
    }
    Ok(mu)
}

/// Compares the moments of a candidate measure against the prescribed
/// sequence over `K + K`.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn verify_solution(mu: &AtomicMeasure, s: &MomentSequence, tol: f64) -> VerifyReport {
    let deviation = mu.moment_deviation(s);
    let scale = s
        .set()
        .minkowski_double()
        .iter()
        .map(|k| s.value(k).abs())
        .fold(0.0, f64::max);
    let tolerance = tol * (1.0 + scale);
    VerifyReport { max_deviation: deviation, tolerance, pass: deviation <= tolerance }
}

/// Convenience for real symmetric operators stored as complex.
pub fn unit_class_complex(space: &crate::hilbert::AssociatedSpace) -> CVec {
    let e0 = space.unit_class_coords();
    CVec::from_iterator(e0.len(), e0.iter().map(|&x| Complex64::new(x, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_space, operator_blocks};
    use crate::solver::{solve_canonical, SolveStatus};
    use crate::{RANK_TOL, SOLVE_TOL};
    use nalgebra::DVector;

    fn diag(values: &[f64]) -> CMat {
        CMat::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&x| Complex64::new(x, 0.0)),
        ))
    }

    #[test]
    fn diagonal_input_splits_by_eigenvalue() {
        let r1 = diag(&[1.0, 2.0]);
        let r2 = diag(&[3.0, 3.0]);
        let spec = joint_diagonalize(&[r1, r2], SOLVE_TOL).unwrap();
        assert_eq!(spec.eigenvalues[0], vec![1.0, 2.0]);
        assert_eq!(spec.eigenvalues[1], vec![3.0]);
        assert_eq!(spec.projections[0].len(), 2);
        for p in &spec.projections[0] {
            // rank-one orthogonal projections
            let trace: Complex64 = p.trace();
            assert!((trace.re - 1.0).abs() < 1e-12);
            assert!(linalg::fro(&(p * p - p)) < 1e-12);
        }
        let identity: CMat = &spec.projections[1][0] - CMat::identity(2, 2);
        assert!(linalg::fro(&identity) < 1e-12);
    }

    #[test]
    fn zero_one_by_one_pair_is_a_single_origin_atom() {
        let z = diag(&[0.0]);
        let spec = joint_diagonalize(&[z.clone(), z], SOLVE_TOL).unwrap();
        assert_eq!(spec.eigenvalues[0], vec![0.0]);
        assert_eq!(spec.eigenvalues[1], vec![0.0]);
        assert_eq!(spec.projections[0][0][(0, 0)], Complex64::new(1.0, 0.0));
        let e0 = CVec::from_vec(vec![Complex64::new(2.0, 0.0)]);
        let mu = extract_measure(&spec, &e0).unwrap();
        assert_eq!(mu.len(), 1);
        assert_eq!(mu.atoms()[0].point, vec![0.0, 0.0]);
        assert!((mu.atoms()[0].mass - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_noncommuting_input() {
        let r1 = CMat::from_row_slice(2, 2, &[
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]);
        let r2 = diag(&[1.0, -1.0]);
        assert!(matches!(
            joint_diagonalize(&[r1, r2], 1e-10),
            Err(Error::NotCommuting { .. })
        ));
    }

    #[test]
    fn spectrum_invariants_on_solved_example1() {
        let s = crate::problem::tests::example1_sequence();
        let space = build_space(&s, RANK_TOL).unwrap();
        let blocks = operator_blocks(&space, &s).unwrap();
        let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
        assert_eq!(outcome.status, SolveStatus::Solved);
        let exts = outcome.extensions.unwrap();
        let spec = joint_diagonalize(&exts, SOLVE_TOL).unwrap();
        for axis in 0..2 {
            // projections resolve the identity and reconstruct the operator
            let mut sum = CMat::zeros(4, 4);
            let mut rebuilt = CMat::zeros(4, 4);
            for (j, p) in spec.projections[axis].iter().enumerate() {
                assert!(linalg::fro(&(p * p - p)) < 1e-9, "idempotent");
                assert!(linalg::fro(&(p - &p.adjoint())) < 1e-9, "self-adjoint");
                sum += p;
                rebuilt += p * Complex64::new(spec.eigenvalues[axis][j], 0.0);
            }
            assert!(linalg::fro(&(&sum - CMat::identity(4, 4))) < 1e-9);
            assert!(linalg::fro(&(rebuilt - &exts[axis])) < 1e-8);
        }
        // cross-axis commutation of the projections
        for p in &spec.projections[0] {
            for q in &spec.projections[1] {
                assert!(linalg::fro(&(p * q - q * p)) < 1e-8);
            }
        }
    }

    #[test]
    fn extract_single_atom() {
        let r1 = diag(&[0.25]);
        let r2 = diag(&[-2.0]);
        let spec = joint_diagonalize(&[r1, r2], SOLVE_TOL).unwrap();
        let e0 = CVec::from_vec(vec![Complex64::new(3.0f64.sqrt(), 0.0)]);
        let mu = extract_measure(&spec, &e0).unwrap();
        assert_eq!(mu.len(), 1);
        assert!((mu.atoms()[0].point[0] - 0.25).abs() < 1e-12);
        assert!((mu.atoms()[0].point[1] + 2.0).abs() < 1e-12);
        assert!((mu.atoms()[0].mass - 3.0).abs() < 1e-12);
    }

    #[test]
    fn example1_measure_matches_hand_solution() {
        let s = crate::problem::tests::example1_sequence();
        let space = build_space(&s, RANK_TOL).unwrap();
        let blocks = operator_blocks(&space, &s).unwrap();
        let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
        let exts = outcome.extensions.unwrap();
        let spec = joint_diagonalize(&exts, SOLVE_TOL).unwrap();
        let mu = extract_measure(&spec, &unit_class_complex(&space)).unwrap();
        // atoms (-1,0):1, (0,-1):1, (0,0):6, (0,1):1
        assert_eq!(mu.len(), 4);
        assert!((mu.total_mass() - 9.0).abs() < 1e-9);
        let expected = [
            ([-1.0, 0.0], 1.0),
            ([0.0, -1.0], 1.0),
            ([0.0, 0.0], 6.0),
            ([0.0, 1.0], 1.0),
        ];
        for (atom, (pt, mass)) in mu.atoms().iter().zip(expected) {
            assert!((atom.point[0] - pt[0]).abs() < 1e-8);
            assert!((atom.point[1] - pt[1]).abs() < 1e-8);
            assert!((atom.mass - mass).abs() < 1e-8);
        }
        let report = verify_solution(&mu, &s, 1e-9);
        assert!(report.pass, "deviation {}", report.max_deviation);
    }

    #[test]
    fn example2_measure_matches_hand_solution() {
        let s = crate::problem::tests::example2_sequence();
        let space = build_space(&s, RANK_TOL).unwrap();
        let blocks = operator_blocks(&space, &s).unwrap();
        let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
        let exts = outcome.extensions.unwrap();
        let spec = joint_diagonalize(&exts, SOLVE_TOL).unwrap();
        let mu = extract_measure(&spec, &unit_class_complex(&space)).unwrap();
        assert_eq!(mu.len(), 5);
        assert!((mu.total_mass() - 8.0).abs() < 1e-9);
        let expected = [
            ([-1.0, 0.0], 1.0),
            ([0.0, -1.0], 1.0),
            ([0.0, 0.0], 4.0),
            ([0.0, 1.0], 1.0),
            ([1.0, 0.0], 1.0),
        ];
        for (atom, (pt, mass)) in mu.atoms().iter().zip(expected) {
            assert!((atom.point[0] - pt[0]).abs() < 1e-8);
            assert!((atom.point[1] - pt[1]).abs() < 1e-8);
            assert!((atom.mass - mass).abs() < 1e-8);
        }
        let report = verify_solution(&mu, &s, 1e-9);
        assert!(report.pass, "deviation {}", report.max_deviation);
    }

    #[test]
    fn cross_verification_fails_between_examples() {
        let s1 = crate::problem::tests::example1_sequence();
        let s2 = crate::problem::tests::example2_sequence();
        let space = build_space(&s1, RANK_TOL).unwrap();
        let blocks = operator_blocks(&space, &s1).unwrap();
        let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
        let exts = outcome.extensions.unwrap();
        let spec = joint_diagonalize(&exts, SOLVE_TOL).unwrap();
        let mu = extract_measure(&spec, &unit_class_complex(&space)).unwrap();
        let report = verify_solution(&mu, &s2, 1e-9);
        assert!(!report.pass);
        assert!(report.max_deviation >= 1.0 - 1e-9, "mass differs by one");
    }

    #[test]
    fn atom_count_bounded_by_dimension() {
        let mut rng = crate::oracle::SeedRng::new(31);
        for n_atoms in 1..=3usize {
            let mu0 = crate::oracle::random_measure(&mut rng, 2, n_atoms, 1.0);
            let set = crate::multiindex::AdmissibleSet::triangular(2, 2);
            let s = MomentSequence::from_measure(set, &mu0).unwrap();
            let space = build_space(&s, RANK_TOL).unwrap();
            let blocks = operator_blocks(&space, &s).unwrap();
            let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
            assert_eq!(outcome.status, SolveStatus::Solved);
            let spec = joint_diagonalize(&outcome.extensions.unwrap(), SOLVE_TOL).unwrap();
            let mu = extract_measure(&spec, &unit_class_complex(&space)).unwrap();
            assert!(mu.len() <= space.dim_h());
            let report = verify_solution(&mu, &s, SOLVE_TOL);
            assert!(report.pass);
        }
    }

    #[test]
    fn three_axis_diagonal_tuple() {
        let r1 = diag(&[1.0, 1.0, 2.0]);
        let r2 = diag(&[5.0, 6.0, 5.0]);
        let r3 = diag(&[0.0, 0.0, 0.0]);
        let spec = joint_diagonalize(&[r1, r2, r3], SOLVE_TOL).unwrap();
        assert_eq!(spec.eigenvalues[0].len(), 2);
        assert_eq!(spec.eigenvalues[1].len(), 2);
        assert_eq!(spec.eigenvalues[2].len(), 1);
        let e0 = CVec::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ]);
        let mu = extract_measure(&spec, &e0).unwrap();
        assert_eq!(mu.len(), 3);
        assert!((mu.total_mass() - 3.0).abs() < 1e-10);
    }
}
