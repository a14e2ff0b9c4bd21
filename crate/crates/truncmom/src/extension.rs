//! The correspondence between canonical solutions and dimensionally stable
//! close extensions of the moments.
//!
//! A canonical solution integrates to a moment table over
//! `Ext K + Ext K` whose associated space is dimensionally stable; in the
//! other direction a dimensionally stable extension carries everywhere
//! defined commuting multiplication operators whose spectral measure solves
//! the original problem. The two maps invert each other, which is checked
//! here numerically on concrete solutions.

use crate::error::{Error, Result};
use crate::hilbert::{build_space, operator_blocks};
use crate::moments::{AtomicMeasure, MomentSequence};
use crate::multiindex::AdmissibleSet;
use crate::spectral::{extract_measure, joint_diagonalize, unit_class_complex};
use crate::{RANK_TOL, SOLVE_TOL};

/// Moments over `Ext K + Ext K` whose restriction to `K + K` is the base
/// sequence, with the indexation of `K` continued into `Ext K`.
#[derive(Debug, Clone)]
pub struct ExtendedMoments {
    base: MomentSequence,
    extended: MomentSequence,
}

impl ExtendedMoments {
    /// Validates that `extended` lives on the close extension of the base
    /// set with the base indexation preserved as a prefix (any admissible
    /// ordering of the new elements is accepted), and that it restricts to
    /// the base values exactly.
    pub fn new(base: MomentSequence, extended: MomentSequence) -> Result<Self> {
        let ext = base.set().close_extension();
        let same_set = ext.len() == extended.set().len()
            && ext.elements().iter().all(|k| extended.set().contains(k));
        let prefix_kept = (0..base.set().len())
            .all(|j| base.set().element(j) == extended.set().element(j));
        if !same_set || !prefix_kept {
            return Err(Error::NotAdmissible {
                reason: "extended sequence does not live on Ext K with the continued indexation"
                    .into(),
            });
        }
        for k in base.set().minkowski_double() {
            if extended.value(&k) != base.value(&k) {
                return Err(Error::NotAdmissible {
                    reason: format!("extension disagrees with the base at {k}"),
                });
            }
        }
        Ok(Self { base, extended })
    }

    pub fn base(&self) -> &MomentSequence {
        &self.base
    }

    pub fn extended(&self) -> &MomentSequence {
        &self.extended
    }
}

/// Integrates a canonical solution over `Ext K + Ext K`. The base values are
/// recomputed through the same summation, so the restriction agrees exactly.
pub fn extend_via_solution(mu: &AtomicMeasure, set: &AdmissibleSet) -> Result<ExtendedMoments> {
    let ext = set.close_extension();
    let base = MomentSequence::from_measure(set.clone(), mu)?;
    let extended = MomentSequence::from_measure(ext, mu)?;
    ExtendedMoments::new(base, extended)
}

/// Builds the canonical solution attached to a dimensionally stable
/// extension: the extension's multiplication operators are everywhere
/// defined and commute, and their joint spectral measure against the class
/// of `1` reproduces the base moments.
pub fn canonical_from_extension(ext: &ExtendedMoments) -> Result<AtomicMeasure> {
    if !ext.base().set().ext_border_condition() {
        return Err(Error::BorderConditionFails);
    }
    let report = ext.extended().necessary_conditions(SOLVE_TOL)?;
    if !report.all_ok() {
        return Err(Error::NotPositiveSemidefinite {
            detail: "extension fails the necessary solvability conditions".into(),
        });
    }
    let space = build_space(ext.extended(), RANK_TOL)?;
    if !space.is_dimensionally_stable() {
        return Err(Error::NotDimensionallyStable { index: space.index() });
    }
    let blocks = operator_blocks(&space, ext.extended())?;
    let operators: Vec<_> = blocks.a.clone();
    let spectrum = joint_diagonalize(&operators, SOLVE_TOL)?;
    let mu = extract_measure(&spectrum, &unit_class_complex(&space))?;
    let deviation = mu.moment_deviation(ext.base());
    let scale = 1.0 + ext.base().mass();
    if deviation > SOLVE_TOL * scale {
        return Err(Error::MomentMismatch { deviation });
    }
    Ok(mu)
}

/// Per-solution outcome of the correspondence check.
#[derive(Debug, Clone)]
pub struct BijectionEntry {
    pub dimensionally_stable: bool,
    pub roundtrip_deviation: f64,
    pub roundtrip_ok: bool,
}

/// Report of [`check_bijection`]: the two constructive maps compose to the
/// identity on moments, and distinct solutions give distinct extensions.
#[derive(Debug, Clone)]
pub struct BijectionReport {
    pub entries: Vec<BijectionEntry>,
    /// For each pair of listed solutions, the largest gap between their
    /// extended moment tables; positive gaps witness injectivity.
    pub pairwise_gaps: Vec<((usize, usize), f64)>,
    pub injective: bool,
    pub pass: bool,
}

/// Exercises the correspondence on concrete solutions of `s`: each measure
/// is mapped to its extension and back, and distinct measures must produce
/// moment tables differing somewhere on `Ext K + Ext K`.
pub fn check_bijection(
    s: &MomentSequence,
    solutions: &[AtomicMeasure],
    tol: f64,
) -> Result<BijectionReport> {
    let mut entries = Vec::with_capacity(solutions.len());
    let mut extensions = Vec::with_capacity(solutions.len());
    for mu in solutions {
        let ext = extend_via_solution(mu, s.set())?;
        let stable = build_space(ext.extended(), RANK_TOL)?.is_dimensionally_stable();
        let (deviation, ok) = if stable {
            let back = canonical_from_extension(&ext)?;
            let dev = back.moment_deviation(ext.extended());
            (dev, dev <= tol * (1.0 + s.mass()))
        } else {
            (f64::INFINITY, false)
        };
        entries.push(BijectionEntry {
            dimensionally_stable: stable,
            roundtrip_deviation: deviation,
            roundtrip_ok: ok,
        });
        extensions.push(ext);
    }
    let mut pairwise_gaps = Vec::new();
    let mut injective = true;
    for i in 0..extensions.len() {
        for j in (i + 1)..extensions.len() {
            let domain = extensions[i].extended().set().minkowski_double();
            let gap = domain
                .iter()
                .map(|k| (extensions[i].extended().value(k) - extensions[j].extended().value(k)).abs())
                .fold(0.0, f64::max);
            let distinct_inputs = measures_differ(&solutions[i], &solutions[j], tol);
            if distinct_inputs && gap <= tol * (1.0 + s.mass()) {
                injective = false;
            }
            pairwise_gaps.push(((i, j), gap));
        }
    }
    let pass = injective && entries.iter().all(|e| e.dimensionally_stable && e.roundtrip_ok);
    Ok(BijectionReport { entries, pairwise_gaps, injective, pass })
}

fn measures_differ(a: &AtomicMeasure, b: &AtomicMeasure, tol: f64) -> bool {
    if a.len() != b.len() {
        return true;
    }
    a.atoms().iter().zip(b.atoms()).any(|(x, y)| {
        (x.mass - y.mass).abs() > tol
            || x.point
                .iter()
                .zip(&y.point)
                .any(|(p, q)| (p - q).abs() > tol)
    })
}
