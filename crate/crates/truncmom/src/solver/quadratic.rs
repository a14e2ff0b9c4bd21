//! The scalar quadratic `c''g' - c'g'' = r/2` restricted to the affine
//! solution set of the linear part.
//!
//! With `p` free directions the restriction is a real quadratic
//! `z^T Q z + b^T z + c = 0` in `p` unknowns. One unknown is a scalar
//! quadratic, two reduce to a conic that is decided exactly by eigenvalue
//! classification, and three or more fall back to a bounded deterministic
//! multi-start search that can confirm roots but never refute them.

use rand::Rng;

use crate::linalg::{self, AffineSolution, RMat, RVec};

/// Indices of `(c', c'', g', g'')` in the 8-unknown layout.
const CP: usize = 4;
const CPP: usize = 5;
const GP: usize = 6;
const GPP: usize = 7;

const NEWTON_ITERS: usize = 60;
const MULTISTART: usize = 200;
const SEARCH_BOX: f64 = 1e3;

pub(crate) enum QuadraticOutcome {
    Root(RVec),
    NoRealRoot,
    Unresolved,
}

/// `z^T Q z + b^T z + c`, plus the weighted norm data used to pick among
/// multiple roots.
pub(crate) struct AffineQuadratic {
    q: RMat,
    b: RVec,
    c: f64,
    /// Gram matrix of the free directions in the Frobenius weighting.
    norm_g: RMat,
    /// Cross term against the particular solution.
    norm_h: RVec,
}

fn bilinear(x: &RVec, y: &RVec) -> f64 {
    x[CPP] * y[GP] - x[CP] * y[GPP]
}

impl AffineQuadratic {
    /// Restricts `c''g' - c'g'' - target = 0` to `u = particular + N z`.
    pub(crate) fn on_affine_set(sol: &AffineSolution, target: f64) -> Self {
        let p = sol.free_dims();
        let n = &sol.nullspace;
        let u0 = &sol.particular;
        let col = |i: usize| n.column(i).into_owned();
        let mut q = RMat::zeros(p, p);
        let mut b = RVec::zeros(p);
        for i in 0..p {
            let ni = col(i);
            for j in 0..p {
                let nj = col(j);
                q[(i, j)] = 0.5 * (bilinear(&ni, &nj) + bilinear(&nj, &ni));
            }
            b[i] = bilinear(u0, &ni) + bilinear(&ni, u0);
        }
        let c = bilinear(u0, u0) - target;

        let w = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0];
        let mut norm_g = RMat::zeros(p, p);
        let mut norm_h = RVec::zeros(p);
        for i in 0..p {
            for j in 0..p {
                norm_g[(i, j)] = (0..8).map(|k| w[k] * n[(k, i)] * n[(k, j)]).sum();
            }
            norm_h[i] = (0..8).map(|k| w[k] * n[(k, i)] * u0[k]).sum();
        }
        Self { q, b, c, norm_g, norm_h }
    }

    pub(crate) fn eval(&self, z: &RVec) -> f64 {
        z.dot(&(&self.q * z)) + self.b.dot(z) + self.c
    }

    fn grad(&self, z: &RVec) -> RVec {
        &self.q * z * 2.0 + &self.b
    }

    fn weighted_norm(&self, z: &RVec) -> f64 {
        z.dot(&(&self.norm_g * z)) + 2.0 * self.norm_h.dot(z)
    }

    fn coefficient_scale(&self) -> f64 {
        1.0 + self.q.norm() + self.b.norm() + self.c.abs()
    }

    /// Newton iteration for the scalar constraint along its gradient.
    fn polish(&self, z: &mut RVec, atol: f64) -> bool {
        for _ in 0..NEWTON_ITERS {
            let val = self.eval(z);
            if val.abs() <= atol {
                return true;
            }
            let g = self.grad(z);
            let gn = g.norm_squared();
            if gn < 1e-300 {
                return false;
            }
            *z -= g * (val / gn);
        }
        self.eval(z).abs() <= atol
    }

    /// Decides solvability and returns a root, preferring small Frobenius
    /// norm of the resulting corner pair.
    pub(crate) fn solve(&self, tol: f64, seed: u64) -> QuadraticOutcome {
        let p = self.b.len();
        let atol = tol * self.coefficient_scale();
        match p {
            0 => {
                if self.c.abs() <= atol {
                    QuadraticOutcome::Root(RVec::zeros(0))
                } else {
                    QuadraticOutcome::NoRealRoot
                }
            }
            1 => self.solve_univariate(atol),
            2 => self.solve_conic(atol),
            _ => self.solve_multistart(atol, seed),
        }
    }

    fn pick_best(&self, mut roots: Vec<RVec>, atol: f64) -> QuadraticOutcome {
        roots.retain(|z| self.eval(z).abs() <= atol.max(1e-12 * self.coefficient_scale()));
        roots
            .into_iter()
            .min_by(|a, b| {
                self.weighted_norm(a)
                    .partial_cmp(&self.weighted_norm(b))
                    .expect("finite norms")
            })
            .map(QuadraticOutcome::Root)
            .unwrap_or(QuadraticOutcome::NoRealRoot)
    }

    fn solve_univariate(&self, atol: f64) -> QuadraticOutcome {
        let (a, b, c) = (self.q[(0, 0)], self.b[0], self.c);
        let scale = self.coefficient_scale();
        let mut roots: Vec<RVec> = Vec::new();
        if a.abs() <= 1e-13 * scale {
            if b.abs() <= 1e-13 * scale {
                if c.abs() <= atol {
                    roots.push(RVec::zeros(1));
                }
            } else {
                roots.push(RVec::from_vec(vec![-c / b]));
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc >= -atol * scale {
                let sq = disc.max(0.0).sqrt();
                // the numerically stable pair of roots
                let q = -0.5 * (b + b.signum() * sq);
                let r1 = if q != 0.0 { c / q } else { -b / (2.0 * a) };
                let r2 = if a != 0.0 { q / a } else { r1 };
                roots.push(RVec::from_vec(vec![r1]));
                roots.push(RVec::from_vec(vec![r2]));
            }
        }
        for z in &mut roots {
            self.polish(z, atol);
        }
        self.pick_best(roots, atol)
    }

    /// Conic case. Classification by the eigenvalues of `Q` decides whether
    /// real points exist; candidates for the minimum-norm point come from the
    /// Lagrange stationarity polynomial, singular pencil lines, and an
    /// explicit witness from the classification.
    fn solve_conic(&self, atol: f64) -> QuadraticOutcome {
        let scale = self.coefficient_scale();
        let eps = 1e-11 * scale;
        let mut candidates: Vec<RVec> = Vec::new();

        let witness = self.conic_witness(eps, atol);
        let solvable = witness.is_some();
        if let Some(w) = witness {
            candidates.push(w);
        }
        if !solvable {
            return QuadraticOutcome::NoRealRoot;
        }

        // stationary points of the weighted norm on the conic:
        // (G + lambda Q) z = -(h + lambda b / 2), cleared by the adjugate
        let adj = |m: &RMat| -> RMat {
            RMat::from_row_slice(2, 2, &[m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]])
        };
        let pencil = |lambda: f64| &self.norm_g + &self.q * lambda;
        let numerator = |lambda: f64| -> RVec {
            adj(&pencil(lambda)) * -(&self.norm_h + &self.b * (lambda / 2.0))
        };
        let phi = |lambda: f64| -> f64 {
            let zn = numerator(lambda);
            let det = pencil(lambda).determinant();
            zn.dot(&(&self.q * &zn)) + det * self.b.dot(&zn) + det * det * self.c
        };
        let coeffs = linalg::fit_polynomial(4, 2.0, phi);
        for lambda in linalg::real_roots(&coeffs) {
            let det = pencil(lambda).determinant();
            if det.abs() > 1e-10 * scale {
                candidates.push(numerator(lambda) / det);
            }
        }
        // singular pencil values: solutions live on lines there
        let det_coeffs = linalg::fit_polynomial(2, 2.0, |l| pencil(l).determinant());
        for lambda in linalg::real_roots(&det_coeffs) {
            let sol = linalg::affine_solve(
                &pencil(lambda),
                &-(&self.norm_h + &self.b * (lambda / 2.0)),
                1e-10,
            );
            match sol.free_dims() {
                0 => candidates.push(sol.particular.clone()),
                _ => {
                    // restrict the conic to the line, scalar quadratic in t
                    let dir = sol.nullspace.column(0).into_owned();
                    let base = sol.particular.clone();
                    let a2 = dir.dot(&(&self.q * &dir));
                    let a1 = 2.0 * base.dot(&(&self.q * &dir)) + self.b.dot(&dir);
                    let a0 = self.eval(&base);
                    for t in linalg::real_roots(&[a0, a1, a2]) {
                        candidates.push(&base + &dir * t);
                    }
                }
            }
        }
        // unconstrained norm minimizer, in case it already sits on the conic
        let unconstrained = linalg::affine_solve(&self.norm_g, &-self.norm_h.clone(), 1e-10);
        candidates.push(unconstrained.particular);

        for z in &mut candidates {
            self.polish(z, atol * 1e-2);
        }
        self.pick_best(candidates, atol)
    }

    /// Exact solvability decision for the conic, returning a point when one
    /// exists. Works in the principal axes of `Q`.
    fn conic_witness(&self, eps: f64, atol: f64) -> Option<RVec> {
        let (vals, vecs) = linalg::symmetric_eigen(&self.q);
        let (l1, l2) = (vals[0], vals[1]);
        let beta = vecs.transpose() * &self.b;
        let back = |w1: f64, w2: f64| -> RVec { &vecs * RVec::from_vec(vec![w1, w2]) };

        if l1.abs() <= eps && l2.abs() <= eps {
            // linear or constant
            let bn = self.b.norm();
            if bn <= eps {
                return (self.c.abs() <= atol).then(|| RVec::zeros(2));
            }
            return Some(-self.b.clone() * (self.c / (bn * bn)));
        }
        if l1 < -eps && l2 > eps {
            // hyperbola: one principal axis always crosses zero
            let disc1 = beta[0] * beta[0] - 4.0 * l1 * self.c;
            if disc1 >= 0.0 {
                let w1 = (-beta[0] - beta[0].signum().max(0.5).signum() * disc1.sqrt())
                    / (2.0 * l1);
                return Some(back(w1, 0.0));
            }
            let disc2 = beta[1] * beta[1] - 4.0 * l2 * self.c;
            // c > 0 here, so this discriminant is positive
            let w2 = (-beta[1] + disc2.max(0.0).sqrt()) / (2.0 * l2);
            return Some(back(0.0, w2));
        }
        if l1.abs() > eps && l2.abs() > eps {
            // definite: compare the extremal value with zero
            let w1v = -beta[0] / (2.0 * l1);
            let w2v = -beta[1] / (2.0 * l2);
            let m = self.eval(&back(w1v, w2v));
            let sign = l2.signum();
            if m * sign > atol {
                return None; // strictly one-signed
            }
            let step = (-m / l2).max(0.0).sqrt();
            return Some(back(w1v, w2v + step));
        }
        // exactly one eigenvalue vanishes; put it first
        let (lk, bk, bfree, flip) = if l1.abs() <= eps {
            (l2, beta[1], beta[0], false)
        } else {
            (l1, beta[0], beta[1], true)
        };
        if bfree.abs() > eps {
            // parabola: solve the linear direction at curve parameter zero
            let wfree = -self.c / bfree;
            return Some(if flip { back(0.0, wfree) } else { back(wfree, 0.0) });
        }
        // pair of parallel lines (or none): scalar quadratic in the curved axis
        let disc = bk * bk - 4.0 * lk * self.c;
        if disc < -atol {
            return None;
        }
        let wk = (-bk + disc.max(0.0).sqrt()) / (2.0 * lk);
        Some(if flip { back(wk, 0.0) } else { back(0.0, wk) })
    }

    /// Bounded deterministic multi-start projected-Newton search; confirms
    /// roots, never refutes. Three or more unknowns only.
    fn solve_multistart(&self, atol: f64, seed: u64) -> QuadraticOutcome {
        let p = self.b.len();
        let mut rng = super::search_rng(seed);
        let mut found: Vec<RVec> = Vec::new();
        let unconstrained = linalg::affine_solve(&self.norm_g, &-self.norm_h.clone(), 1e-10);
        let mut starts: Vec<RVec> = vec![RVec::zeros(p), unconstrained.particular];
        for _ in 0..MULTISTART {
            starts.push(RVec::from_fn(p, |_, _| rng.gen_range(-SEARCH_BOX..SEARCH_BOX)));
        }
        for mut z in starts {
            if self.polish(&mut z, atol * 1e-2) {
                found.push(z);
                if found.len() >= 8 {
                    break;
                }
            }
        }
        if found.is_empty() {
            return QuadraticOutcome::Unresolved;
        }
        self.pick_best(found, atol)
    }
}
