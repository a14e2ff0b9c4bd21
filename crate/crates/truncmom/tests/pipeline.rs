//! End-to-end pipeline runs over the checked-in fixture files: parse, check,
//! build, solve, extract, verify.

use std::fs;
use std::path::PathBuf;

use truncmom::extension::{canonical_from_extension, extend_via_solution};
use truncmom::hilbert::{build_space, operator_blocks};
use truncmom::moments::MomentSequence;
use truncmom::problem::parse_problem;
use truncmom::solver::{solve_canonical, SolveStatus};
use truncmom::spectral::{extract_measure, joint_diagonalize, unit_class_complex, verify_solution};
use truncmom::{Error, RANK_TOL, SOLVE_TOL};

fn fixture(name: &str) -> MomentSequence {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    let text = fs::read_to_string(path).expect("fixture exists");
    parse_problem(&text).expect("fixture parses").to_sequence().expect("fixture validates")
}

#[test]
fn example1_full_pipeline() {
    let s = fixture("example1.txt");
    assert!(s.necessary_conditions(RANK_TOL).unwrap().all_ok());
    let space = build_space(&s, RANK_TOL).unwrap();
    assert_eq!((space.dim_h(), space.index()), (4, 1));
    let blocks = operator_blocks(&space, &s).unwrap();
    let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
    assert_eq!(outcome.status, SolveStatus::Solved);
    let spectrum = joint_diagonalize(&outcome.extensions.unwrap(), SOLVE_TOL).unwrap();
    let mu = extract_measure(&spectrum, &unit_class_complex(&space)).unwrap();
    assert!((mu.total_mass() - 9.0).abs() < 1e-9);
    let report = verify_solution(&mu, &s, 1e-9);
    assert!(report.pass, "deviation {}", report.max_deviation);
}

#[test]
fn example2_full_pipeline_with_roundtrip() {
    let s = fixture("example2.txt");
    let space = build_space(&s, RANK_TOL).unwrap();
    assert_eq!((space.dim_h(), space.index()), (5, 2));
    let blocks = operator_blocks(&space, &s).unwrap();
    let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
    assert_eq!(outcome.status, SolveStatus::Solved);
    let spectrum = joint_diagonalize(&outcome.extensions.unwrap(), SOLVE_TOL).unwrap();
    let mu = extract_measure(&spectrum, &unit_class_complex(&space)).unwrap();
    assert!((mu.total_mass() - 8.0).abs() < 1e-9);
    assert!(verify_solution(&mu, &s, 1e-9).pass);

    let ext = extend_via_solution(&mu, s.set()).unwrap();
    let ext_space = build_space(ext.extended(), RANK_TOL).unwrap();
    assert!(ext_space.is_dimensionally_stable());
    let back = canonical_from_extension(&ext).unwrap();
    assert!(back.moment_deviation(ext.extended()) < 1e-7);
}

#[test]
fn no_canonical_fixture_is_refuted() {
    let s = fixture("no_canonical.txt");
    assert!(s.necessary_conditions(RANK_TOL).unwrap().all_ok(), "conditions must pass");
    let space = build_space(&s, RANK_TOL).unwrap();
    assert_eq!(space.index(), 1);
    let blocks = operator_blocks(&space, &s).unwrap();
    // the block-level necessary checks hold; the refutation is deeper
    assert!(truncmom::solver::necessary_block_checks(&blocks, SOLVE_TOL));
    let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
    assert_eq!(outcome.status, SolveStatus::NoCanonicalSolution, "{:?}", outcome.diagnostics);
}

#[test]
fn no_canonical_fixture_inconsistency_is_genuine() {
    // brute-force corroboration, independent of the solver's linear algebra:
    // scan a grid of corner scalars and confirm the commutation equation
    // residual never approaches zero
    let s = fixture("no_canonical.txt");
    let space = build_space(&s, RANK_TOL).unwrap();
    let blocks = operator_blocks(&space, &s).unwrap();
    let mut best = f64::INFINITY;
    let n = 160;
    for i in 0..=n {
        for j in 0..=n {
            let c1 = -8.0 + 16.0 * i as f64 / n as f64;
            let c2 = -8.0 + 16.0 * j as f64 / n as f64;
            let m1 = nalgebra::DMatrix::from_element(1, 1, num_complex::Complex64::new(c1, 0.0));
            let m2 = nalgebra::DMatrix::from_element(1, 1, num_complex::Complex64::new(c2, 0.0));
            let res = truncmom::solver::commutation_residuals(&blocks, &m1, &m2).unwrap();
            best = best.min(res.iter().fold(0.0f64, |a, &x| a.max(x)));
        }
    }
    assert!(best > 0.05, "grid minimum {best} should stay far from zero");
}

#[test]
fn kernel_violation_fixture_fails_checks() {
    let s = fixture("kernel_violation.txt");
    let report = s.necessary_conditions(RANK_TOL).unwrap();
    assert!(report.psd_ok);
    assert!(!report.kernel_ok[0], "axis 1 inclusion must fail");
    assert!(!report.all_ok());
}

#[test]
fn not_psd_fixture_rejected_at_build() {
    let s = fixture("not_psd.txt");
    let report = s.necessary_conditions(RANK_TOL).unwrap();
    assert!(!report.psd_ok);
    assert!(matches!(
        build_space(&s, RANK_TOL),
        Err(Error::NotPositiveSemidefinite { .. })
    ));
}

#[test]
fn index_three_fixture_is_undecided() {
    let s = fixture("index_three.txt");
    assert!(s.necessary_conditions(RANK_TOL).unwrap().all_ok());
    let space = build_space(&s, RANK_TOL).unwrap();
    assert_eq!(space.index(), 3);
    let blocks = operator_blocks(&space, &s).unwrap();
    let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
    assert_eq!(outcome.status, SolveStatus::Undecided);
}

#[test]
fn oracle_roundtrip_through_files() {
    // materialize an oracle instance as a document, read it back, solve it
    let mut rng = truncmom::oracle::SeedRng::new(42);
    let mu = truncmom::oracle::random_measure(&mut rng, 2, 3, 1.0);
    let set = truncmom::multiindex::AdmissibleSet::triangular(2, 2);
    let s = MomentSequence::from_measure(set, &mu).unwrap();
    let text = truncmom::problem::write_problem(&s);
    let back = parse_problem(&text).unwrap().to_sequence().unwrap();
    assert!(back.necessary_conditions(RANK_TOL).unwrap().all_ok());
    let space = build_space(&back, RANK_TOL).unwrap();
    let blocks = operator_blocks(&space, &back).unwrap();
    let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
    assert_eq!(outcome.status, SolveStatus::Solved);
    let spectrum = joint_diagonalize(&outcome.extensions.unwrap(), SOLVE_TOL).unwrap();
    let got = extract_measure(&spectrum, &unit_class_complex(&space)).unwrap();
    // the measure itself comes back: flat instance, same atoms
    assert_eq!(got.len(), mu.len());
    for (a, b) in got.atoms().iter().zip(mu.atoms()) {
        for (x, y) in a.point.iter().zip(&b.point) {
            assert!((x - y).abs() < 1e-6);
        }
        assert!((a.mass - b.mass).abs() < 1e-6);
    }
}

#[test]
fn degree_zero_truncation_solves_to_a_point_mass() {
    // the smallest possible problem: only the mass is prescribed
    let text = "dimension 2\ntruncation triangular 0\nmoment 0 0 2.5\n";
    let s = parse_problem(text).unwrap().to_sequence().unwrap();
    let space = build_space(&s, RANK_TOL).unwrap();
    assert_eq!(space.dim_h(), 1);
    assert_eq!(space.dim_h0(), 0);
    assert_eq!(space.index(), 1);
    let blocks = operator_blocks(&space, &s).unwrap();
    let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
    assert_eq!(outcome.status, SolveStatus::Solved);
    let spectrum = joint_diagonalize(&outcome.extensions.unwrap(), SOLVE_TOL).unwrap();
    let mu = extract_measure(&spectrum, &unit_class_complex(&space)).unwrap();
    assert_eq!(mu.len(), 1);
    assert_eq!(mu.atoms()[0].point, vec![0.0, 0.0]);
    assert!((mu.atoms()[0].mass - 2.5).abs() < 1e-12);
}

#[test]
fn rectangular_truncation_without_prefix_refuses_blocks() {
    // for the 1 x 2 box the surviving indices are not an indexation prefix,
    // so the block construction cannot represent the operators and says so
    let set = truncmom::multiindex::AdmissibleSet::rectangular(&[1, 2]);
    let mu = truncmom::moments::AtomicMeasure::new(
        2,
        vec![
            (vec![0.3, 0.7], 1.0),
            (vec![-0.6, 0.2], 0.5),
            (vec![0.9, -0.4], 1.5),
            (vec![-0.1, -0.8], 2.0),
            (vec![0.5, 0.5], 0.7),
            (vec![-0.9, 0.9], 1.1),
        ],
    )
    .unwrap();
    let s = MomentSequence::from_measure(set, &mu).unwrap();
    let space = build_space(&s, RANK_TOL).unwrap();
    assert!(matches!(
        operator_blocks(&space, &s),
        Err(Error::BlocksUnavailable)
    ));
}

#[test]
fn three_variable_flat_instances_recover_their_measures() {
    // the flat path is not limited to two variables: a few atoms on the
    // degree-two truncation in R^3 stay dimensionally stable and the joint
    // spectrum walks all three axes
    let mut rng = truncmom::oracle::SeedRng::new(333);
    for n_atoms in [1usize, 2, 3, 4] {
        let mu = truncmom::oracle::random_measure(&mut rng, 3, n_atoms, 1.0);
        let set = truncmom::multiindex::AdmissibleSet::triangular(3, 2);
        let s = MomentSequence::from_measure(set, &mu).unwrap();
        let space = build_space(&s, RANK_TOL).unwrap();
        assert!(space.is_dimensionally_stable(), "{n_atoms} atoms stay flat");
        let blocks = operator_blocks(&space, &s).unwrap();
        let outcome = solve_canonical(&space, &blocks, SOLVE_TOL).unwrap();
        assert_eq!(outcome.status, SolveStatus::Solved);
        let exts = outcome.extensions.unwrap();
        assert_eq!(exts.len(), 3);
        let spectrum = joint_diagonalize(&exts, SOLVE_TOL).unwrap();
        let got = extract_measure(&spectrum, &unit_class_complex(&space)).unwrap();
        assert_eq!(got.len(), n_atoms);
        for (a, b) in got.atoms().iter().zip(mu.atoms()) {
            for (x, y) in a.point.iter().zip(&b.point) {
                assert!((x - y).abs() < 1e-7);
            }
            assert!((a.mass - b.mass).abs() < 1e-7);
        }
    }
}
