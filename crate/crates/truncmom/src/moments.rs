//! Moment sequences over `K + K`, moment (Gram) matrices, the necessary
//! solvability conditions, and direct integration of explicit atomic measures.

use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::multiindex::{AdmissibleSet, MultiIndex};
use crate::{ATOM_TOL, MASS_TOL, RANK_TOL};

/// Prescribed real moments `s_k` for every `k` in `K + K`.
#[derive(Debug, Clone)]
pub struct MomentSequence {
    set: AdmissibleSet,
    values: HashMap<MultiIndex, f64>,
}

impl MomentSequence {
    /// Validates that the value map covers exactly `K + K`, that every value
    /// is finite, and that the mass `s_0` is nonnegative.
    pub fn new(set: AdmissibleSet, values: HashMap<MultiIndex, f64>) -> Result<Self> {
        let domain = set.minkowski_double();
        for k in &domain {
            match values.get(k) {
                None => return Err(Error::MissingMoment { index: k.clone() }),
                Some(v) if !v.is_finite() => {
                    return Err(Error::NonFiniteMoment { index: k.clone() })
                }
                _ => {}
            }
        }
        for k in values.keys() {
            if !domain.contains(k) {
                return Err(Error::ExtraneousMoment { index: k.clone() });
            }
        }
        let mass = values[&MultiIndex::origin(set.dim())];
        if mass < 0.0 {
            return Err(Error::NegativeMass { value: mass });
        }
        Ok(Self { set, values })
    }

    /// Moments of an explicit atomic measure over `K + K` — the brute-force
    /// oracle route.
    pub fn from_measure(set: AdmissibleSet, measure: &AtomicMeasure) -> Result<Self> {
        if measure.dim() != set.dim() {
            return Err(Error::DimensionMismatch { expected: set.dim(), got: measure.dim() });
        }
        let values = measure.moments(&set.minkowski_double());
        Self::new(set, values)
    }

    pub fn set(&self) -> &AdmissibleSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn value(&self, k: &MultiIndex) -> f64 {
        self.values[k]
    }

    pub fn get(&self, k: &MultiIndex) -> Option<f64> {
        self.values.get(k).copied()
    }

    /// Total mass `s_0`.
    pub fn mass(&self) -> f64 {
        self.values[&MultiIndex::origin(self.set.dim())]
    }

    /// The moment matrix `Gamma` with entry `(m, j)` equal to `s_{k_j + k_m}`.
    /// Symmetric by construction: both entries read the same map slot.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        let n = self.set.len();
        DMatrix::from_fn(n, n, |m, j| {
            self.values[&self.set.element(j).add(self.set.element(m))]
        })
    }

    /// The localized pair `(Gamma_l, GammaHat_l)` on `Omega_l`, both indexed
    /// in increasing `Omega_l` order. `GammaHat_l` carries the doubly shifted
    /// moments `s_{k_j + e_l + k_m + e_l}`.
    pub fn localized_matrices(&self, l: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if l == 0 || l > self.dim() {
            return Err(Error::AxisOutOfRange { axis: l, dim: self.dim() });
        }
        let omega = self.set.omega(l)?;
        let q = omega.len();
        let gamma = DMatrix::from_fn(q, q, |m, j| {
            self.values[&self.set.element(omega[j]).add(self.set.element(omega[m]))]
        });
        let hat = DMatrix::from_fn(q, q, |m, j| {
            let a = self.set.element(omega[j]).shift(l).expect("axis checked");
            let b = self.set.element(omega[m]).shift(l).expect("axis checked");
            self.values[&a.add(&b)]
        });
        Ok((gamma, hat))
    }

    /// Checks the necessary solvability conditions: `Gamma >= 0` and
    /// `Ker Gamma_l` contained in `Ker GammaHat_l` for every axis. A failing
    /// report is a result, not an error.
    pub fn necessary_conditions(&self, tol: f64) -> Result<NecessaryReport> {
        let gamma = self.gram_matrix();
        let (eigs, _) = linalg::symmetric_eigen(&gamma);
        let scale = eigs.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        let min_eig = eigs.iter().fold(f64::INFINITY, |a, &x| a.min(x));
        let psd_ok = min_eig >= -tol * (1.0 + scale);

        let mut kernel_ok = Vec::with_capacity(self.dim());
        let mut kernel_residuals = Vec::with_capacity(self.dim());
        for l in 1..=self.dim() {
            let (gl, ghat) = self.localized_matrices(l)?;
            if gl.nrows() == 0 {
                kernel_ok.push(true);
                kernel_residuals.push(0.0);
                continue;
            }
            let (w, v) = linalg::symmetric_eigen(&gl);
            let wmax = w.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            let hat_scale = 1.0 + ghat.norm();
            let mut worst = 0.0f64;
            for (i, &lam) in w.iter().enumerate() {
                if lam.abs() <= RANK_TOL * wmax.max(1.0) {
                    let vec = v.column(i).into_owned();
                    worst = worst.max((&ghat * vec).norm() / hat_scale);
                }
            }
            kernel_ok.push(worst <= tol);
            kernel_residuals.push(worst);
        }
        Ok(NecessaryReport { psd_ok, min_eigenvalue: min_eig, kernel_ok, kernel_residuals })
    }
}

/// Outcome of the necessary-condition checks.
#[derive(Debug, Clone)]
pub struct NecessaryReport {
    pub psd_ok: bool,
    pub min_eigenvalue: f64,
    /// Per axis `l = 1..=n`: whether `Ker Gamma_l` is contained in
    /// `Ker GammaHat_l` at the tolerance.
    pub kernel_ok: Vec<bool>,
    pub kernel_residuals: Vec<f64>,
}

impl NecessaryReport {
    pub fn all_ok(&self) -> bool {
        self.psd_ok && self.kernel_ok.iter().all(|&b| b)
    }
}

/// A finitely atomic measure on `R^n`: points with positive masses.
#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

#[derive(Debug, Clone)]
pub struct Atom {
    pub point: Vec<f64>,
    pub mass: f64,
}

impl AtomicMeasure {
    /// Builds a measure from raw atoms: rejects nonpositive masses, merges
    /// points closer than the atom tolerance, sorts atoms lexicographically by
    /// coordinates.
    pub fn new(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let mut cleaned: Vec<Atom> = Vec::with_capacity(atoms.len());
        for (point, mass) in atoms {
            if point.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: point.len() });
            }
            if !(mass > 0.0) {
                return Err(Error::NonPositiveAtomMass { mass });
            }
            match cleaned.iter_mut().find(|a| point_dist(&a.point, &point) <= ATOM_TOL) {
                Some(existing) => existing.mass += mass,
                None => cleaned.push(Atom { point, mass }),
            }
        }
        cleaned.sort_by(|a, b| a.point.partial_cmp(&b.point).expect("finite coordinates"));
        Ok(Self { dim, atoms: cleaned })
    }

    /// As [`AtomicMeasure::new`] but silently dropping atoms whose mass is at
    /// or below `floor` (used by the spectral extraction, where projection
    /// products produce numerically zero masses for non-atoms).
    pub(crate) fn from_extraction(
        dim: usize,
        atoms: Vec<(Vec<f64>, f64)>,
        floor: f64,
    ) -> Result<Self> {
        let kept = atoms.into_iter().filter(|(_, m)| *m > floor).collect();
        Self::new(dim, kept)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `s_k = sum over atoms of mass * point^k` for each requested index.
    pub fn moments(&self, indices: &BTreeSet<MultiIndex>) -> HashMap<MultiIndex, f64> {
        indices
            .iter()
            .map(|k| {
                let s = self
                    .atoms
                    .iter()
                    .map(|a| a.mass * k.monomial_at(&a.point))
                    .sum();
                (k.clone(), s)
            })
            .collect()
    }

    /// Largest absolute deviation between this measure's moments and the
    /// prescribed sequence, over `K + K`.
    pub fn moment_deviation(&self, s: &MomentSequence) -> f64 {
        let mine = self.moments(&s.set().minkowski_double());
        mine.iter()
            .map(|(k, v)| (v - s.value(k)).abs())
            .fold(0.0, f64::max)
    }

    /// Mass floor for pruning: `MASS_TOL` relative to the total mass.
    pub(crate) fn prune_floor(total_mass: f64) -> f64 {
        MASS_TOL * total_mass.max(1e-300)
    }
}

fn point_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::MultiIndex;

    fn example1() -> MomentSequence {
        crate::problem::tests::example1_sequence()
    }

    fn example2() -> MomentSequence {
        crate::problem::tests::example2_sequence()
    }

    #[test]
    fn gram_matrix_of_example1() {
        let g = example1().gram_matrix();
        let expected = [
            [9.0, -1.0, 0.0, 1.0, 0.0, 2.0],
            [-1.0, 1.0, 0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, 2.0, 0.0, 0.0, 0.0],
            [1.0, -1.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0, 0.0, 0.0, 2.0],
        ];
        for m in 0..6 {
            for j in 0..6 {
                assert_eq!(g[(m, j)], expected[m][j], "entry ({m},{j})");
            }
        }
    }

    #[test]
    fn gram_matrix_of_example2() {
        let g = example2().gram_matrix();
        let expected = [
            [8.0, 0.0, 0.0, 2.0, 0.0, 2.0],
            [0.0, 2.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 2.0, 0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0, 2.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [2.0, 0.0, 0.0, 0.0, 0.0, 2.0],
        ];
        for m in 0..6 {
            for j in 0..6 {
                assert_eq!(g[(m, j)], expected[m][j], "entry ({m},{j})");
            }
        }
    }

    #[test]
    fn gram_matrix_single_point() {
        let set = AdmissibleSet::from_elements(2, vec![MultiIndex::origin(2)]).unwrap();
        let mut values = HashMap::new();
        values.insert(MultiIndex::origin(2), 5.0);
        let s = MomentSequence::new(set, values).unwrap();
        let g = s.gram_matrix();
        assert_eq!(g.nrows(), 1);
        assert_eq!(g[(0, 0)], 5.0);
    }

    #[test]
    fn localized_matrices_of_example1() {
        let s = example1();
        let (g1, h1) = s.localized_matrices(1).unwrap();
        let expected_g = [[9.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 2.0]];
        let expected_h = [[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
        for m in 0..3 {
            for j in 0..3 {
                assert_eq!(g1[(m, j)], expected_g[m][j]);
                assert_eq!(h1[(m, j)], expected_h[m][j]);
            }
        }
        let (_, h2) = s.localized_matrices(2).unwrap();
        let expected_h2 = [[2.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]];
        for m in 0..3 {
            for j in 0..3 {
                assert_eq!(h2[(m, j)], expected_h2[m][j]);
            }
        }
    }

    #[test]
    fn localized_matrices_of_example2() {
        let s = example2();
        let (g2, h2) = s.localized_matrices(2).unwrap();
        for m in 0..3 {
            for j in 0..3 {
                let eg = if m == j { [8.0, 2.0, 2.0][m] } else { 0.0 };
                let eh = if m == j { [2.0, 0.0, 2.0][m] } else { 0.0 };
                assert_eq!(g2[(m, j)], eg);
                assert_eq!(h2[(m, j)], eh);
            }
        }
    }

    #[test]
    fn localized_matrices_empty_omega() {
        let set = AdmissibleSet::from_elements(2, vec![MultiIndex::origin(2)]).unwrap();
        let mut values = HashMap::new();
        values.insert(MultiIndex::origin(2), 1.0);
        let s = MomentSequence::new(set, values).unwrap();
        let (g, h) = s.localized_matrices(1).unwrap();
        assert_eq!(g.nrows(), 0);
        assert_eq!(h.nrows(), 0);
    }

    #[test]
    fn necessary_conditions_pass_on_examples() {
        assert!(example1().necessary_conditions(1e-9).unwrap().all_ok());
        assert!(example2().necessary_conditions(1e-9).unwrap().all_ok());
    }

    #[test]
    fn moments_of_single_atom_at_origin() {
        let mu = AtomicMeasure::new(2, vec![(vec![0.0, 0.0], 3.5)]).unwrap();
        let set = AdmissibleSet::triangular(2, 1);
        let m = mu.moments(&set.minkowski_double());
        for (k, v) in &m {
            if k.is_origin() {
                assert_eq!(*v, 3.5);
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn moments_of_symmetric_pair() {
        let mu =
            AtomicMeasure::new(2, vec![(vec![1.0, 0.0], 2.0), (vec![-1.0, 0.0], 2.0)]).unwrap();
        let set = AdmissibleSet::triangular(2, 2);
        let m = mu.moments(&set.minkowski_double());
        let at = |a: u32, b: u32| m[&MultiIndex::new(vec![a, b])];
        assert_eq!(at(0, 0), 4.0);
        assert_eq!(at(2, 0), 4.0);
        assert_eq!(at(1, 0), 0.0);
        for b in 1..=4u32 {
            assert_eq!(at(0, b), 0.0);
        }
    }

    #[test]
    fn missing_moment_rejected() {
        let set = AdmissibleSet::triangular(2, 1);
        let mut values: HashMap<MultiIndex, f64> = set
            .minkowski_double()
            .into_iter()
            .map(|k| (k, 0.0))
            .collect();
        values.insert(MultiIndex::origin(2), 1.0);
        values.remove(&MultiIndex::new(vec![2, 0]));
        assert!(matches!(
            MomentSequence::new(set, values),
            Err(Error::MissingMoment { .. })
        ));
    }

    #[test]
    fn measure_merges_coincident_atoms() {
        let mu = AtomicMeasure::new(
            1,
            vec![(vec![1.0], 1.0), (vec![1.0 + 1e-12], 2.0), (vec![0.0], 1.0)],
        )
        .unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.total_mass(), 4.0);
    }

    #[test]
    fn measure_rejects_nonpositive_mass() {
        assert!(AtomicMeasure::new(1, vec![(vec![0.0], 0.0)]).is_err());
        assert!(AtomicMeasure::new(1, vec![(vec![0.0], -1.0)]).is_err());
    }
}
