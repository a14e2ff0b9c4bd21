//! Small shared numerics: Hermitian eigendecompositions, rank-revealing
//! affine solves, and polynomial root localization via companion matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

fn ascending_order(vals: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("finite eigenvalues"));
    order
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(m: &RMat) -> (Vec<f64>, RMat) {
    if m.nrows() == 0 {
        return (Vec::new(), RMat::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let decomp = sym.symmetric_eigen();
    let vals: Vec<f64> = decomp.eigenvalues.iter().copied().collect();
    let order = ascending_order(&vals);
    let sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut vecs = RMat::zeros(m.nrows(), vals.len());
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &decomp.eigenvectors.column(src));
    }
    (sorted, vecs)
}

/// Eigendecomposition of a complex Hermitian matrix, eigenvalues ascending,
/// eigenvector phases normalized so the largest-magnitude component is real
/// positive (for reproducible output).
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    if m.nrows() == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let decomp = herm.symmetric_eigen();
    let vals: Vec<f64> = decomp.eigenvalues.iter().copied().collect();
    let order = ascending_order(&vals);
    let sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut vecs = CMat::zeros(m.nrows(), vals.len());
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &decomp.eigenvectors.column(src));
    }
    for j in 0..vecs.ncols() {
        let mut best = 0usize;
        let mut best_norm = 0.0;
        for i in 0..vecs.nrows() {
            let a = vecs[(i, j)].norm();
            if a > best_norm {
                best_norm = a;
                best = i;
            }
        }
        if best_norm > 0.0 {
            let phase = vecs[(best, j)] / best_norm;
            for i in 0..vecs.nrows() {
                let val = vecs[(i, j)] / phase;
                vecs[(i, j)] = val;
            }
        }
    }
    (sorted, vecs)
}

/// Numerical rank of a real symmetric PSD-ish matrix: eigenvalues above
/// `tol * max(1, |lambda|_max)` count.
pub fn symmetric_rank(m: &RMat, tol: f64) -> usize {
    let (w, _) = symmetric_eigen(m);
    let scale = w.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
    w.iter().filter(|&&x| x.abs() > tol * scale).count()
}

/// Frobenius norm of a complex matrix; zero for empty matrices.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// The affine solution set of `M x = rhs` for a real system, computed by
/// rank-revealing column-pivoted QR.
pub struct AffineSolution {
    /// Minimum-norm particular solution (valid only when `consistent`).
    pub particular: RVec,
    /// Orthonormal basis of the null space, one column per free direction.
    pub nullspace: RMat,
    /// Residual `|M x - rhs|` of the least-squares solution.
    pub residual: f64,
}

impl AffineSolution {
    pub fn consistent(&self, tol: f64) -> bool {
        self.residual <= tol
    }

    pub fn free_dims(&self) -> usize {
        self.nullspace.ncols()
    }

    pub fn point(&self, z: &RVec) -> RVec {
        debug_assert_eq!(z.len(), self.nullspace.ncols());
        &self.particular + &self.nullspace * z
    }
}

/// Solves `M x = rhs` in the least-squares sense via column-pivoted QR,
/// returning the minimum-norm particular solution together with an
/// orthonormal nullspace basis.
pub fn affine_solve(m: &RMat, rhs: &RVec, rank_tol: f64) -> AffineSolution {
    let ncols = m.ncols();
    if ncols == 0 {
        return AffineSolution {
            particular: RVec::zeros(0),
            nullspace: RMat::zeros(0, 0),
            residual: rhs.norm(),
        };
    }
    if m.nrows() == 0 {
        return AffineSolution {
            particular: RVec::zeros(ncols),
            nullspace: RMat::identity(ncols, ncols),
            residual: 0.0,
        };
    }
    let qr = m.clone().col_piv_qr();
    let r = qr.r();
    let diag_max = (0..r.nrows().min(ncols))
        .map(|i| r[(i, i)].abs())
        .fold(0.0f64, f64::max);
    let cutoff = rank_tol * diag_max.max(1.0);
    let rank = (0..r.nrows().min(ncols))
        .take_while(|&i| r[(i, i)].abs() > cutoff)
        .count();

    // basic solution on the pivot columns: R11 w = (Q^T rhs)[..rank]
    let qt_rhs = qr.q().transpose() * rhs;
    let mut w = RVec::zeros(rank);
    for i in (0..rank).rev() {
        let mut acc = qt_rhs[i];
        for j in (i + 1)..rank {
            acc -= r[(i, j)] * w[j];
        }
        w[i] = acc / r[(i, i)];
    }
    let mut x_perm = RVec::zeros(ncols);
    for i in 0..rank {
        x_perm[i] = w[i];
    }
    let mut x = x_perm.clone();
    qr.p().inv_permute_rows(&mut x);

    // nullspace: P [ -R11^{-1} R12 ; I ], orthonormalized
    let free = ncols - rank;
    let mut nullspace = RMat::zeros(ncols, free);
    let mut basis: Vec<RVec> = Vec::with_capacity(free);
    for k in 0..free {
        let mut v_perm = RVec::zeros(ncols);
        v_perm[rank + k] = 1.0;
        for i in (0..rank).rev() {
            let mut acc = -r[(i, rank + k)];
            for j in (i + 1)..rank {
                acc -= r[(i, j)] * v_perm[j];
            }
            v_perm[i] = acc / r[(i, i)];
        }
        let mut v = v_perm;
        qr.p().inv_permute_rows(&mut v);
        for _ in 0..2 {
            for b in &basis {
                let h = b.dot(&v);
                v -= b * h;
            }
        }
        let n = v.norm();
        if n > 0.0 {
            v /= n;
        }
        nullspace.set_column(k, &v);
        basis.push(v);
    }

    // project out the nullspace component for the minimum-norm solution
    for b in &basis {
        let h = b.dot(&x);
        x -= b * h;
    }
    let residual = (m * &x - rhs).norm();
    AffineSolution { particular: x, nullspace, residual }
}

/// Real roots of the polynomial `c_0 + c_1 x + ... + c_d x^d`, via the
/// eigenvalues of the companion matrix. Returns an empty list for (near-)zero
/// or constant polynomials.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale = coeffs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].abs() <= 1e-12 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    if deg == 1 {
        return vec![-coeffs[0] / coeffs[1]];
    }
    let lead = coeffs[deg];
    let mut companion = RMat::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let eigs = companion.complex_eigenvalues();
    let mut roots: Vec<f64> = eigs
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * (1.0 + b.abs()));
    roots
}

/// Recovers the coefficients of a polynomial of degree at most `deg` from
/// evaluations, sampling at scaled Chebyshev nodes.
pub fn fit_polynomial<F: FnMut(f64) -> f64>(deg: usize, half_width: f64, mut f: F) -> Vec<f64> {
    let n_samples = 2 * (deg + 1);
    let mut a = RMat::zeros(n_samples, deg + 1);
    let mut b = RVec::zeros(n_samples);
    for s in 0..n_samples {
        let theta = std::f64::consts::PI * (s as f64 + 0.5) / n_samples as f64;
        let x = half_width * theta.cos();
        let mut p = 1.0;
        for j in 0..=deg {
            a[(s, j)] = p;
            p *= x;
        }
        b[s] = f(x);
    }
    let sol = affine_solve(&a, &b, 1e-13);
    sol.particular.iter().copied().collect()
}
