//! Search for commuting self-adjoint extensions of the multiplication
//! operators inside the associated space.
//!
//! With the orthonormal basis split along `H_0` and its complement, a
//! self-adjoint extension pair has block matrices
//!
//! ```text
//! R_k = | A_k  B_k^* |
//!       | B_k  C_k   |        k = 1, 2,
//! ```
//!
//! where `A_k`, `B_k` are determined by the moments and the Hermitian corner
//! blocks `C_k` of size `i_s` are free. The pair commutes exactly when
//!
//! ```text
//! (I)   A_1 A_2 + B_1^* B_2 = A_2 A_1 + B_2^* B_1
//! (II)  B_2^* C_1 - B_1^* C_2 = A_1 B_2^* - A_2 B_1^*
//! (III) C_1 C_2 - C_2 C_1 = B_2 B_1^* - B_1 B_2^*
//! ```
//!
//! (I) and the vanishing of `Tr(B_2 B_1^* - B_1 B_2^*)` are necessary and
//! involve no unknowns. For `i_s = 1` the unknowns are two real scalars and
//! (II) is a real linear system. For `i_s = 2` a unitary rotation normalizes
//! the right side of (III) to `diag(ir, -ir)`; the rotated system splits into
//! a real linear part and the scalar quadratic `c''g' - c'g'' = r/2`, with
//! case analysis on `r` and on the vanishing patterns of the off-diagonal
//! unknowns.

mod quadratic;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::{AssociatedSpace, OperatorBlocks};
use crate::linalg::{self, CMat, RMat, RVec};
use quadratic::AffineQuadratic;

/// Rank cutoff for the solver's linear systems, relative to the largest
/// singular value.
const SYSTEM_RANK_TOL: f64 = 1e-10;

/// Seed for the deterministic multi-start search in the many-unknown
/// quadratic case.
const SEARCH_SEED: u64 = 0x746d_6f6d;

/// Outcome classification of the canonical-solution search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Commuting self-adjoint extensions found and verified.
    Solved,
    /// Proven that no Hermitian corner blocks satisfy the commutation
    /// equations.
    NoCanonicalSolution,
    /// Outside the implemented case analysis (index three or more, or a
    /// quadratic in three or more unknowns whose real roots were not found).
    Undecided,
}

/// The Hermitian corner blocks certifying a solution, with the rotated
/// scalar data of the `i_s = 2` analysis when it applies.
#[derive(Debug, Clone)]
pub struct HermitianPair {
    pub c1: CMat,
    pub c2: CMat,
    /// Unitary normalizing `B_2 B_1^* - B_1 B_2^*` to `diag(ir, -ir)`.
    pub rotation: Option<CMat>,
    /// The nonnegative rate `r` of the normalized commutator.
    pub skew_rate: Option<f64>,
    /// The real parameter of the proportionality substitution `c = beta g`,
    /// when that branch produced the solution.
    pub beta: Option<f64>,
}

/// Result of the search: status, the full extension matrices on success, the
/// corner-block certificate, and a branch trail for diagnostics.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub extensions: Option<Vec<CMat>>,
    pub certificate: Option<HermitianPair>,
    pub diagnostics: Vec<String>,
}

impl SolveOutcome {
    fn solved(extensions: Vec<CMat>, certificate: HermitianPair, diag: Vec<String>) -> Self {
        Self {
            status: SolveStatus::Solved,
            extensions: Some(extensions),
            certificate: Some(certificate),
            diagnostics: diag,
        }
    }

    fn failed(reason: impl Into<String>, mut diag: Vec<String>) -> Self {
        diag.push(reason.into());
        Self {
            status: SolveStatus::NoCanonicalSolution,
            extensions: None,
            certificate: None,
            diagnostics: diag,
        }
    }

    fn undecided(reason: impl Into<String>, mut diag: Vec<String>) -> Self {
        diag.push(reason.into());
        Self {
            status: SolveStatus::Undecided,
            extensions: None,
            certificate: None,
            diagnostics: diag,
        }
    }
}

fn block_scale(blocks: &OperatorBlocks) -> f64 {
    let mut s = 1.0f64;
    for m in blocks.a.iter().chain(blocks.b.iter()) {
        s = s.max(linalg::fro(m));
    }
    s
}

/// The two necessary conditions involving no unknowns: (I) and the vanishing
/// trace of `B_2 B_1^* - B_1 B_2^*`.
pub fn necessary_block_checks(blocks: &OperatorBlocks, tol: f64) -> bool {
    assert_eq!(blocks.axes(), 2, "block conditions are stated for n = 2");
    let scale = block_scale(blocks);
    let (a1, a2) = (&blocks.a[0], &blocks.a[1]);
    let (b1, b2) = (&blocks.b[0], &blocks.b[1]);
    let lhs = a1 * a2 + b1.adjoint() * b2 - a2 * a1 - b2.adjoint() * b1;
    if linalg::fro(&lhs) > tol * scale {
        return false;
    }
    let d = b2 * b1.adjoint() - b1 * b2.adjoint();
    d.trace().norm() <= tol * scale
}

/// Frobenius norms of the residuals of (I), (II), (III) for a candidate
/// corner pair.
pub fn commutation_residuals(
    blocks: &OperatorBlocks,
    c1: &CMat,
    c2: &CMat,
) -> Result<[f64; 3]> {
    let i_s = blocks.index;
    for c in [c1, c2] {
        if c.nrows() != i_s || c.ncols() != i_s {
            return Err(Error::DimensionMismatch { expected: i_s, got: c.nrows() });
        }
    }
    let (a1, a2) = (&blocks.a[0], &blocks.a[1]);
    let (b1, b2) = (&blocks.b[0], &blocks.b[1]);
    let r16 = a1 * a2 + b1.adjoint() * b2 - a2 * a1 - b2.adjoint() * b1;
    let r18 = b2.adjoint() * c1 - b1.adjoint() * c2 - a1 * b2.adjoint() + a2 * b1.adjoint();
    let r20 = c1 * c2 - c2 * c1 - b2 * b1.adjoint() + b1 * b2.adjoint();
    Ok([linalg::fro(&r16), linalg::fro(&r18), linalg::fro(&r20)])
}

/// Assembles the full extension matrix from the blocks and a corner.
fn assemble_extension(blocks: &OperatorBlocks, axis: usize, c: &CMat) -> CMat {
    let a = &blocks.a[axis];
    let b = &blocks.b[axis];
    let d1 = a.nrows();
    let i_s = b.nrows();
    let mut r = CMat::zeros(d1 + i_s, d1 + i_s);
    r.view_mut((0, 0), (d1, d1)).copy_from(a);
    r.view_mut((d1, 0), (i_s, d1)).copy_from(b);
    r.view_mut((0, d1), (d1, i_s)).copy_from(&b.adjoint());
    r.view_mut((d1, d1), (i_s, i_s)).copy_from(c);
    r
}

fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Flat case: the multiplication operators are everywhere defined and the
/// extensions are the `A_k` themselves. Solvable exactly when they pairwise
/// commute.
pub fn solve_flat(blocks: &OperatorBlocks, tol: f64) -> Result<SolveOutcome> {
    if blocks.index != 0 {
        return Err(Error::WrongIndex { expected: 0, got: blocks.index });
    }
    let scale = block_scale(blocks);
    for a in 0..blocks.axes() {
        for b in (a + 1)..blocks.axes() {
            let comm = &blocks.a[a] * &blocks.a[b] - &blocks.a[b] * &blocks.a[a];
            let norm = linalg::fro(&comm);
            if norm > tol * scale {
                return Ok(SolveOutcome::failed(
                    format!("flat operators do not commute: |[A_{}, A_{}]| = {norm:.3e}",
                        a + 1, b + 1),
                    vec!["case i_s = 0".into()],
                ));
            }
        }
    }
    let empty = CMat::zeros(0, 0);
    let extensions = (0..blocks.axes()).map(|ax| blocks.a[ax].clone()).collect();
    Ok(SolveOutcome::solved(
        extensions,
        HermitianPair {
            c1: empty.clone(),
            c2: empty,
            rotation: None,
            skew_rate: None,
            beta: None,
        },
        vec!["case i_s = 0: extensions are the A blocks".into()],
    ))
}

/// Index-one case: the corners are two real scalars and (II) splits into a
/// real linear system; (III) reduces to `B_2 B_1^* = B_1 B_2^*`, checked
/// directly.
pub fn solve_is1(blocks: &OperatorBlocks, tol: f64) -> Result<SolveOutcome> {
    if blocks.index != 1 {
        return Err(Error::WrongIndex { expected: 1, got: blocks.index });
    }
    let mut diag = vec!["case i_s = 1".into()];
    let scale = block_scale(blocks);
    let (b1, b2) = (&blocks.b[0], &blocks.b[1]);
    let skew = b2 * b1.adjoint() - b1 * b2.adjoint();
    if linalg::fro(&skew) > tol * scale {
        return Ok(SolveOutcome::failed(
            format!("B_2 B_1^* - B_1 B_2^* = {:.3e} must vanish", linalg::fro(&skew)),
            diag,
        ));
    }
    // rhs and columns of the real split system
    let rhs_c = &blocks.a[0] * b2.adjoint() - &blocks.a[1] * b1.adjoint();
    let d1 = blocks.dim_h0;
    let mut m = RMat::zeros(2 * d1, 2);
    let mut rhs = RVec::zeros(2 * d1);
    for row in 0..d1 {
        let (p2, p1) = (b2.adjoint()[(row, 0)], b1.adjoint()[(row, 0)]);
        m[(row, 0)] = p2.re;
        m[(row, 1)] = -p1.re;
        m[(d1 + row, 0)] = p2.im;
        m[(d1 + row, 1)] = -p1.im;
        rhs[row] = rhs_c[(row, 0)].re;
        rhs[d1 + row] = rhs_c[(row, 0)].im;
    }
    let sol = linalg::affine_solve(&m, &rhs, SYSTEM_RANK_TOL);
    if !sol.consistent(tol * scale) {
        return Ok(SolveOutcome::failed(
            format!("linear system for (c_1, c_2) inconsistent, residual {:.3e}", sol.residual),
            diag,
        ));
    }
    // minimum-norm solution; the free directions stay at zero
    let c1 = CMat::from_element(1, 1, Complex64::new(sol.particular[0], 0.0));
    let c2 = CMat::from_element(1, 1, Complex64::new(sol.particular[1], 0.0));
    diag.push(format!(
        "solved with c_1 = {:.6e}, c_2 = {:.6e} ({} free direction(s))",
        sol.particular[0],
        sol.particular[1],
        sol.free_dims()
    ));
    let extensions = vec![
        assemble_extension(blocks, 0, &c1),
        assemble_extension(blocks, 1, &c2),
    ];
    Ok(SolveOutcome::solved(
        extensions,
        HermitianPair { c1, c2, rotation: None, skew_rate: None, beta: None },
        diag,
    ))
}

/// Normalizes the skew-Hermitian matrix `D = B_2 B_1^* - B_1 B_2^*` of an
/// index-two problem to `U diag(ir, -ir) U^*` with `r >= 0` and unitary `U`.
/// Fails when the trace of `D` is not negligible (its eigenvalues then are
/// not opposite).
pub fn normalize_commutator(blocks: &OperatorBlocks, tol: f64) -> Result<(CMat, f64)> {
    if blocks.index != 2 {
        return Err(Error::WrongIndex { expected: 2, got: blocks.index });
    }
    let (b1, b2) = (&blocks.b[0], &blocks.b[1]);
    let d = b2 * b1.adjoint() - b1 * b2.adjoint();
    let scale = 1.0 + linalg::fro(&d);
    let trace = d.trace();
    if trace.norm() > tol * scale {
        return Err(Error::TraceConditionViolated { value: trace.norm() });
    }
    if linalg::fro(&d) <= tol * scale {
        return Ok((CMat::identity(2, 2), 0.0));
    }
    // -iD is Hermitian with eigenvalues r, -r
    let herm = d.map(|z| z * Complex64::new(0.0, -1.0));
    let (vals, vecs) = linalg::hermitian_eigen(&herm);
    let r = (vals[1] - vals[0]) / 2.0;
    let mut u = CMat::zeros(2, 2);
    u.set_column(0, &vecs.column(1)); // eigenvalue +r first
    u.set_column(1, &vecs.column(0));
    debug_assert!({
        let ir = Complex64::new(0.0, r);
        let rebuilt = &u
            * CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![ir, -ir]))
            * u.adjoint();
        linalg::fro(&(rebuilt - &d)) <= 1e-10 * scale
    });
    Ok((u, r))
}

/// Index-two case: rotate by the normalizing unitary, split into the real
/// linear system plus the quadratic, and run the case analysis on `r`.
pub fn solve_is2(blocks: &OperatorBlocks, tol: f64) -> Result<SolveOutcome> {
    let (u, r) = normalize_commutator(blocks, tol)?;
    Ok(solve_is2_rotated(blocks, &u, r, tol))
}

/// The rotated 8-unknown system. Unknown order throughout:
/// `(a, b, d, f, c', c'', g', g'')` where the rotated corners are
/// `C_1 = [[a, c],[conj c, b]]`, `C_2 = [[d, g],[conj g, f]]`.
pub(crate) fn solve_is2_rotated(
    blocks: &OperatorBlocks,
    u: &CMat,
    r: f64,
    tol: f64,
) -> SolveOutcome {
    let scale = block_scale(blocks);
    let cal_b1 = blocks.b[0].adjoint() * u;
    let cal_b2 = blocks.b[1].adjoint() * u;
    let cal_d = (&blocks.a[0] * blocks.b[1].adjoint() - &blocks.a[1] * blocks.b[0].adjoint()) * u;
    let (m, rhs) = linear_system(&cal_b1, &cal_b2, &cal_d);
    let mut diag = vec![format!("case i_s = 2, r = {r:.6e}")];

    if r.abs() > tol * scale {
        // r != 0 forces f = d and a = b
        let mut rows = vec![constraint_row(2, -1.0, 3, 1.0), constraint_row(0, 1.0, 1, -1.0)];
        let sys = stack_rows(&m, &rhs, &mut rows);
        let sol = linalg::affine_solve(&sys.0, &sys.1, SYSTEM_RANK_TOL);
        if !sol.consistent(tol * scale) {
            return SolveOutcome::failed(
                format!("case r != 0: linear system inconsistent, residual {:.3e}", sol.residual),
                diag,
            );
        }
        diag.push(format!(
            "case r != 0: linear part consistent with {} free direction(s)",
            sol.free_dims()
        ));
        let quad = AffineQuadratic::on_affine_set(&sol, r / 2.0);
        match quad.solve(tol, SEARCH_SEED) {
            quadratic::QuadraticOutcome::Root(z) => {
                let point = sol.point(&z);
                diag.push(format!("quadratic c''g' - c'g'' = r/2 solved in {} unknown(s)", z.len()));
                finish_rotated(blocks, u, r, &point, None, diag)
            }
            quadratic::QuadraticOutcome::NoRealRoot => SolveOutcome::failed(
                "quadratic c''g' - c'g'' = r/2 has no real solution on the affine set",
                diag,
            ),
            quadratic::QuadraticOutcome::Unresolved => SolveOutcome::undecided(
                format!(
                    "quadratic in {} unknowns: bounded search found no real root",
                    sol.free_dims()
                ),
                diag,
            ),
        }
    } else {
        // r = 0: try the vanishing branches in the documented order, then the
        // proportionality substitution c = beta g
        let branches: [(&str, Vec<RVec>); 4] = [
            ("g = 0, c = 0", vec![unit_row(6), unit_row(7), unit_row(4), unit_row(5)]),
            ("g = 0, f = d", vec![unit_row(6), unit_row(7), constraint_row(2, -1.0, 3, 1.0)]),
            ("c = 0, g = 0", vec![unit_row(4), unit_row(5), unit_row(6), unit_row(7)]),
            ("c = 0, a = b", vec![unit_row(4), unit_row(5), constraint_row(0, 1.0, 1, -1.0)]),
        ];
        for (name, extra) in branches {
            let mut rows = extra;
            let sys = stack_rows(&m, &rhs, &mut rows);
            let sol = linalg::affine_solve(&sys.0, &sys.1, SYSTEM_RANK_TOL);
            if sol.consistent(tol * scale) {
                let point = minimum_frobenius_point(&sol);
                diag.push(format!("branch {name}: consistent"));
                return finish_rotated(blocks, u, r, &point, None, diag);
            }
            diag.push(format!("branch {name}: inconsistent (residual {:.3e})", sol.residual));
        }
        match solve_beta_branch(&m, &rhs, tol * scale) {
            Some((beta, point)) => {
                diag.push(format!("branch c = beta g: consistent at beta = {beta:.6e}"));
                finish_rotated(blocks, u, r, &point, Some(beta), diag)
            }
            None => SolveOutcome::failed("all r = 0 branches exhausted", diag),
        }
    }
}

/// Real split of the rotated linear equation: 8 columns for the unknowns, one
/// block of rows per real/imaginary part of each matrix entry.
fn linear_system(cal_b1: &CMat, cal_b2: &CMat, cal_d: &CMat) -> (RMat, RVec) {
    let rows_c = cal_d.nrows() * cal_d.ncols();
    let mut m = RMat::zeros(2 * rows_c, 8);
    let mut rhs = RVec::zeros(2 * rows_c);
    for unknown in 0..8 {
        let mut e = RVec::zeros(8);
        e[unknown] = 1.0;
        let (c1, c2) = corners_from_unknowns(&e);
        let lhs = cal_b2 * c1 - cal_b1 * c2;
        for (flat, value) in lhs.iter().enumerate() {
            m[(flat, unknown)] = value.re;
            m[(rows_c + flat, unknown)] = value.im;
        }
    }
    for (flat, value) in cal_d.iter().enumerate() {
        rhs[flat] = value.re;
        rhs[rows_c + flat] = value.im;
    }
    (m, rhs)
}

/// Builds the rotated corner matrices from the 8 real unknowns.
fn corners_from_unknowns(u: &RVec) -> (CMat, CMat) {
    let c = Complex64::new(u[4], u[5]);
    let g = Complex64::new(u[6], u[7]);
    let c1 = CMat::from_row_slice(2, 2, &[
        Complex64::new(u[0], 0.0),
        c,
        c.conj(),
        Complex64::new(u[1], 0.0),
    ]);
    let c2 = CMat::from_row_slice(2, 2, &[
        Complex64::new(u[2], 0.0),
        g,
        g.conj(),
        Complex64::new(u[3], 0.0),
    ]);
    (c1, c2)
}

fn unit_row(i: usize) -> RVec {
    let mut row = RVec::zeros(8);
    row[i] = 1.0;
    row
}

fn constraint_row(i: usize, wi: f64, j: usize, wj: f64) -> RVec {
    let mut row = RVec::zeros(8);
    row[i] = wi;
    row[j] = wj;
    row
}

fn stack_rows(m: &RMat, rhs: &RVec, extra: &mut Vec<RVec>) -> (RMat, RVec) {
    let mut out = RMat::zeros(m.nrows() + extra.len(), m.ncols());
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    for (i, row) in extra.iter().enumerate() {
        out.set_row(m.nrows() + i, &row.transpose());
    }
    let mut rhs_out = RVec::zeros(rhs.len() + extra.len());
    rhs_out.rows_mut(0, rhs.len()).copy_from(rhs);
    (out, rhs_out)
}

/// Frobenius weight of the 8 unknowns: off-diagonal entries appear twice in
/// each corner matrix.
fn frobenius_weights() -> RVec {
    RVec::from_vec(vec![1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0])
}

/// The point of the affine solution set minimizing the Frobenius norm of the
/// corner pair.
fn minimum_frobenius_point(sol: &linalg::AffineSolution) -> RVec {
    let w = frobenius_weights();
    let p = sol.free_dims();
    if p == 0 {
        return sol.particular.clone();
    }
    let n = &sol.nullspace;
    let mut g = RMat::zeros(p, p);
    let mut h = RVec::zeros(p);
    for i in 0..p {
        for j in 0..p {
            g[(i, j)] = (0..8).map(|k| w[k] * n[(k, i)] * n[(k, j)]).sum();
        }
        h[i] = (0..8).map(|k| w[k] * n[(k, i)] * sol.particular[k]).sum();
    }
    let z = linalg::affine_solve(&g, &(-h), SYSTEM_RANK_TOL).particular;
    sol.point(&z)
}

/// Rotates the solved corners back and packages the outcome; the full
/// commutation residuals are re-checked by `solve_canonical`.
fn finish_rotated(
    blocks: &OperatorBlocks,
    u: &CMat,
    r: f64,
    unknowns: &RVec,
    beta: Option<f64>,
    mut diag: Vec<String>,
) -> SolveOutcome {
    let (rc1, rc2) = corners_from_unknowns(unknowns);
    let c1 = hermitize(&(u * rc1 * u.adjoint()));
    let c2 = hermitize(&(u * rc2 * u.adjoint()));
    diag.push(format!(
        "corners: a = {:.4e}, b = {:.4e}, d = {:.4e}, f = {:.4e}, c = {:.4e}+{:.4e}i, g = {:.4e}+{:.4e}i",
        unknowns[0], unknowns[1], unknowns[2], unknowns[3],
        unknowns[4], unknowns[5], unknowns[6], unknowns[7],
    ));
    let extensions = vec![
        assemble_extension(blocks, 0, &c1),
        assemble_extension(blocks, 1, &c2),
    ];
    SolveOutcome::solved(
        extensions,
        HermitianPair {
            c1,
            c2,
            rotation: Some(u.clone()),
            skew_rate: Some(r),
            beta,
        },
        diag,
    )
}

/// The proportionality branch: substitute `c' = beta g'`, `c'' = beta g''`
/// and append `beta (f - d) + a - b = 0`, leaving six unknowns
/// `(a, b, d, f, g', g'')` and one real parameter. Consistency as a function
/// of `beta` is polynomial; candidate roots come from interpolated minors and
/// each candidate is verified by an actual solve.
fn solve_beta_branch(m: &RMat, rhs: &RVec, tol: f64) -> Option<(f64, RVec)> {
    let rows = m.nrows();
    // M(beta) = m0 + beta m1 on (a, b, d, f, g', g''), rhs gains a zero row
    let mut m0 = RMat::zeros(rows + 1, 6);
    let mut m1 = RMat::zeros(rows + 1, 6);
    for row in 0..rows {
        for (dst, src) in [(0usize, 0usize), (1, 1), (2, 2), (3, 3), (4, 6), (5, 7)] {
            m0[(row, dst)] = m[(row, src)];
        }
        // c' and c'' columns turn into beta-weighted g' and g'' columns
        m1[(row, 4)] = m[(row, 4)];
        m1[(row, 5)] = m[(row, 5)];
    }
    m0[(rows, 0)] = 1.0;
    m0[(rows, 1)] = -1.0;
    m1[(rows, 2)] = -1.0;
    m1[(rows, 3)] = 1.0;
    let mut rhs_full = RVec::zeros(rows + 1);
    rhs_full.rows_mut(0, rows).copy_from(rhs);

    let eval = |beta: f64| -> RMat { &m0 + &m1 * beta };
    let mut candidates = beta_candidates(&eval, &rhs_full);
    candidates.extend_from_slice(&[0.0, 1.0, -1.0]);
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite candidates"));
    candidates.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));

    let mut best: Option<(f64, RVec, f64)> = None;
    for beta in candidates {
        let mb = eval(beta);
        let sol = linalg::affine_solve(&mb, &rhs_full, SYSTEM_RANK_TOL);
        if !sol.consistent(tol) {
            continue;
        }
        // minimize the Frobenius norm of the corner pair over the free
        // directions, with c = beta g folded into the weights
        let gw = 2.0 * (1.0 + beta * beta);
        let w = RVec::from_vec(vec![1.0, 1.0, 1.0, 1.0, gw, gw]);
        let point = weighted_min_point(&sol, &w);
        let u = expand_beta_point(beta, &point);
        let norm = (0..8)
            .map(|k| frobenius_weights()[k] * u[k] * u[k])
            .sum::<f64>();
        if best.as_ref().map(|(_, _, n)| norm < *n).unwrap_or(true) {
            best = Some((beta, u, norm));
        }
    }
    best.map(|(beta, u, _)| (beta, u))
}

fn weighted_min_point(sol: &linalg::AffineSolution, w: &RVec) -> RVec {
    let p = sol.free_dims();
    if p == 0 {
        return sol.particular.clone();
    }
    let dim = sol.particular.len();
    let n = &sol.nullspace;
    let mut g = RMat::zeros(p, p);
    let mut h = RVec::zeros(p);
    for i in 0..p {
        for j in 0..p {
            g[(i, j)] = (0..dim).map(|k| w[k] * n[(k, i)] * n[(k, j)]).sum();
        }
        h[i] = (0..dim).map(|k| w[k] * n[(k, i)] * sol.particular[k]).sum();
    }
    let z = linalg::affine_solve(&g, &(-h), SYSTEM_RANK_TOL).particular;
    sol.point(&z)
}

fn expand_beta_point(beta: f64, v: &RVec) -> RVec {
    RVec::from_vec(vec![v[0], v[1], v[2], v[3], beta * v[4], beta * v[5], v[4], v[5]])
}

/// Candidate roots for the proportionality parameter: real roots of the
/// pivot-block determinant (rank-drop points) and of the first nontrivial
/// bordered minor (consistency condition at generic rank).
fn beta_candidates(eval: &dyn Fn(f64) -> RMat, rhs: &RVec) -> Vec<f64> {
    const PROBES: [f64; 3] = [0.739085133215, -0.414213562373, 1.618033988750];
    let numerical_rank = |m: RMat| -> usize {
        let ncols = m.ncols();
        let qr = m.col_piv_qr();
        let r = qr.r();
        let diag_max = (0..r.nrows().min(ncols))
            .map(|i| r[(i, i)].abs())
            .fold(0.0f64, f64::max);
        (0..r.nrows().min(ncols))
            .take_while(|&i| r[(i, i)].abs() > SYSTEM_RANK_TOL * diag_max.max(1.0))
            .count()
    };
    let (probe, rank) = PROBES
        .iter()
        .map(|&b| (b, numerical_rank(eval(b))))
        .max_by_key(|&(_, r)| r)
        .expect("probe list nonempty");
    if rank == 0 {
        return Vec::new();
    }
    let sample = eval(probe);
    let (pivot_rows, pivot_cols) = complete_pivot_selection(&sample, rank);
    let mut candidates = Vec::new();

    // rank-drop points of the pivot block
    let det_block = |beta: f64| -> f64 {
        let mb = eval(beta);
        submatrix(&mb, &pivot_rows, &pivot_cols).determinant()
    };
    let coeffs = linalg::fit_polynomial(rank, 2.0, det_block);
    for root in linalg::real_roots(&coeffs) {
        candidates.push(newton_refine(&det_block, root));
    }

    // consistency minors: border the pivot block with one extra row and the
    // right-hand column
    let all_rows: Vec<usize> = (0..rhs.len()).filter(|r| !pivot_rows.contains(r)).collect();
    for extra in all_rows {
        let mut rows = pivot_rows.clone();
        rows.push(extra);
        let minor = |beta: f64| -> f64 {
            let mb = eval(beta);
            let mut bordered = DMatrix::zeros(rank + 1, rank + 1);
            for (i, &row) in rows.iter().enumerate() {
                for (j, &col) in pivot_cols.iter().enumerate() {
                    bordered[(i, j)] = mb[(row, col)];
                }
                bordered[(i, rank)] = rhs[row];
            }
            bordered.determinant()
        };
        let coeffs = linalg::fit_polynomial(rank + 1, 2.0, minor);
        let magnitude = coeffs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let scale = {
            let samp = submatrix(&sample, &rows, &pivot_cols);
            let s = samp.norm().max(rhs.norm()).max(1.0);
            s.powi(rank as i32 + 1)
        };
        if magnitude <= 1e-11 * scale {
            continue; // identically consistent row, no condition on beta
        }
        for root in linalg::real_roots(&coeffs) {
            candidates.push(newton_refine(&minor, root));
        }
        break;
    }
    candidates
}

/// Newton polish of an approximate root against the exact function; the
/// interpolated polynomials only need to localize roots, the determinant
/// evaluations pin them down.
fn newton_refine<F: Fn(f64) -> f64>(f: &F, mut x: f64) -> f64 {
    for _ in 0..40 {
        let h = 1e-6 * (1.0 + x.abs());
        let fx = f(x);
        let df = (f(x + h) - f(x - h)) / (2.0 * h);
        if df.abs() < 1e-300 {
            break;
        }
        let step = fx / df;
        x -= step;
        if step.abs() <= 1e-14 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

fn submatrix(m: &RMat, rows: &[usize], cols: &[usize]) -> RMat {
    RMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Greedy complete pivoting: picks `rank` rows and columns giving a
/// well-conditioned square block.
fn complete_pivot_selection(m: &RMat, rank: usize) -> (Vec<usize>, Vec<usize>) {
    let mut work = m.clone();
    let mut rows = Vec::with_capacity(rank);
    let mut cols = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut best = (0usize, 0usize, -1.0f64);
        for i in 0..work.nrows() {
            if rows.contains(&i) {
                continue;
            }
            for j in 0..work.ncols() {
                if cols.contains(&j) {
                    continue;
                }
                if work[(i, j)].abs() > best.2 {
                    best = (i, j, work[(i, j)].abs());
                }
            }
        }
        if best.2 <= 0.0 {
            break;
        }
        let (pi, pj, _) = best;
        rows.push(pi);
        cols.push(pj);
        let pivot = work[(pi, pj)];
        for i in 0..work.nrows() {
            if rows.contains(&i) {
                continue;
            }
            let factor = work[(i, pj)] / pivot;
            for j in 0..work.ncols() {
                work[(i, j)] -= factor * work[(pi, j)];
            }
        }
    }
    rows.sort_unstable();
    cols.sort_unstable();
    (rows, cols)
}

/// Dispatch on the index of nonself-adjointness, then verify the candidate
/// extensions commute before reporting success.
pub fn solve_canonical(
    space: &AssociatedSpace,
    blocks: &OperatorBlocks,
    tol: f64,
) -> Result<SolveOutcome> {
    let i_s = blocks.index;
    if i_s == 0 {
        let outcome = solve_flat(blocks, tol)?;
        return Ok(verify_solved(blocks, outcome, tol));
    }
    if space.set().dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: space.set().dim() });
    }
    if !space.set().is_triangular() {
        return Err(Error::NotAdmissible {
            reason: "the index > 0 search is implemented for triangular truncations".into(),
        });
    }
    if i_s >= 3 {
        return Ok(SolveOutcome::undecided(
            format!("index i_s = {i_s} exceeds the implemented case analysis"),
            vec![],
        ));
    }
    if !necessary_block_checks(blocks, tol) {
        return Ok(SolveOutcome::failed(
            "necessary block conditions (operator commutator or trace) violated",
            vec![],
        ));
    }
    let outcome = match i_s {
        1 => solve_is1(blocks, tol)?,
        2 => solve_is2(blocks, tol)?,
        _ => unreachable!(),
    };
    Ok(verify_solved(blocks, outcome, tol))
}

/// Demotes a claimed solution that fails the full commutation residuals;
/// guards against any gap in the case analysis.
fn verify_solved(blocks: &OperatorBlocks, outcome: SolveOutcome, tol: f64) -> SolveOutcome {
    if outcome.status != SolveStatus::Solved {
        return outcome;
    }
    let scale = block_scale(blocks);
    let pair = outcome.certificate.as_ref().expect("solved outcomes carry corners");
    let resid = commutation_residuals(blocks, &pair.c1, &pair.c2)
        .expect("corner dimensions match the blocks");
    let worst = resid.iter().fold(0.0f64, |a, &x| a.max(x));
    if worst > tol.max(crate::SOLVE_TOL) * scale {
        let mut diag = outcome.diagnostics.clone();
        diag.push(format!("verification failed: residuals {resid:?}"));
        return SolveOutcome {
            status: SolveStatus::Undecided,
            extensions: None,
            certificate: None,
            diagnostics: diag,
        };
    }
    if let Some(exts) = &outcome.extensions {
        for (ax, ext) in exts.iter().enumerate() {
            debug_assert!(
                {
                    let d1 = blocks.dim_h0;
                    let top = ext.view((0, 0), (d1, d1)).clone_owned();
                    let bottom = ext.view((d1, 0), (blocks.index, d1)).clone_owned();
                    top == blocks.a[ax] && bottom == blocks.b[ax]
                },
                "extensions embed the blocks exactly"
            );
        }
    }
    outcome
}

/// Deterministic multi-start root search used by the many-unknown quadratic
/// case; exposed to the quadratic module.
pub(crate) fn search_rng(seed: u64) -> impl Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
