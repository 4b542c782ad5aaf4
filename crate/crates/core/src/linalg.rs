//! Eigensolvers used by the spectrum and Chern code.
//!
//! Dense Hermitian problems go through `nalgebra`. Band edges only need
//! eigenvalues of the periodic tridiagonal `H(k)`; for large `q`,
//! [`PeriodicTridiagonal`] counts eigenvalues below a shift in `O(q)` and
//! isolates every eigenvalue by bisection.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Largest dimension solved densely by [`PeriodicTridiagonal::eigenvalues`].
pub const DENSE_MAX: usize = 48;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues ascending with matching eigenvectors as columns.
pub fn hermitian_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = m.nrows();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn determinant(m: &CMatrix) -> Complex64 {
    m.clone().lu().determinant()
}

/// Hermitian matrix with nonzero entries only on the diagonal, the
/// subdiagonal and the two corners: `H[(m+1) mod q][m] = sub[m]`.
#[derive(Debug, Clone)]
pub struct PeriodicTridiagonal {
    diag: Vec<f64>,
    sub: Vec<Complex64>,
    sub_sq: Vec<f64>,
}

impl PeriodicTridiagonal {
    /// For `q <= 2` the cyclic entries coincide with ordinary ones; they are
    /// folded into a dense matrix by [`Self::to_dense`].
    pub fn new(diag: Vec<f64>, sub: Vec<Complex64>) -> Self {
        assert_eq!(diag.len(), sub.len(), "diag and sub must have length q");
        assert!(!diag.is_empty(), "empty matrix");
        let sub_sq = sub.iter().map(|b| b.norm_sqr()).collect();
        PeriodicTridiagonal { diag, sub, sub_sq }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let q = self.dim();
        let mut h = CMatrix::zeros(q, q);
        for m in 0..q {
            h[(m, m)] += Complex64::new(self.diag[m], 0.0);
            let r = (m + 1) % q;
            h[(r, m)] += self.sub[m];
            h[(m, r)] += self.sub[m].conj();
        }
        h
    }

    /// Gershgorin radius around zero.
    pub fn bound(&self) -> f64 {
        let q = self.dim();
        (0..q)
            .map(|m| {
                let prev = (m + q - 1) % q;
                self.diag[m].abs() + self.sub[m].norm() + self.sub[prev].norm()
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below `x` (inertia of `H - x`).
    ///
    /// Pairing rows `b` and `q-1-b` turns the cyclic matrix into an ordinary
    /// block tridiagonal one with 2x2 blocks (a 1x1 block in the middle for
    /// odd `q`), whose couplings are diagonal. The inertia is the sum of the
    /// inertias of the block pivots `D_{b+1} = B_{b+1} - x - C_b D_b^{-1} C_b^*`.
    pub fn count_below(&self, x: f64) -> usize {
        let q = self.dim();
        debug_assert!(q >= 3);
        let pivmin = f64::MIN_POSITIVE * self.sub_sq.iter().copied().fold(1.0, f64::max);
        let fix = |d: f64| if d.abs() < pivmin { -pivmin } else { d };
        let half = q / 2;
        let mut neg = 0usize;
        // current pivot [[a, z], [conj z, c]] on rows (b, q-1-b)
        let (mut a, mut c, mut z) = (self.diag[0] - x, self.diag[q - 1] - x, self.sub[q - 1]);
        let mut det = fix(a * c - z.norm_sqr());
        neg += if det < 0.0 { 1 } else { 2 * (a < 0.0) as usize };
        for b in 1..half {
            let k = q - 1 - b;
            let (c1, c2) = (self.sub[b - 1], self.sub[k]);
            let inner = if k == b + 1 { self.sub[b].conj() } else { Complex64::new(0.0, 0.0) };
            let na = self.diag[b] - x - self.sub_sq[b - 1] * c / det;
            let nc = self.diag[k] - x - self.sub_sq[k] * a / det;
            z = inner + c1 * z * c2 / det;
            (a, c) = (na, nc);
            det = fix(a * c - z.norm_sqr());
            neg += if det < 0.0 { 1 } else { 2 * (a < 0.0) as usize };
        }
        if q % 2 == 1 {
            let m = half;
            let (c1, c2) = (self.sub[m - 1], self.sub[m]);
            let quad = (self.sub_sq[m - 1] * c + self.sub_sq[m] * a - 2.0 * (c1 * z * c2).re) / det;
            neg += (fix(self.diag[m] - x - quad) < 0.0) as usize;
        }
        neg
    }

    /// All eigenvalues, ascending. Up to `DENSE_MAX` the dense solver is faster;
    /// above it every eigenvalue is isolated by bisection on
    /// [`Self::count_below`].
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() <= DENSE_MAX {
            return hermitian_eigenvalues(&self.to_dense());
        }
        self.bisect_all()
    }

    pub fn bisect_all(&self) -> Vec<f64> {
        let q = self.dim();
        if q < 3 {
            return hermitian_eigenvalues(&self.to_dense());
        }
        let r = self.bound() * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        let tol_abs = 2.0 * f64::EPSILON * r;
        let mut out = vec![0.0; q];
        let mut stack = vec![(-r, r, 0usize, q)];
        while let Some((lo, hi, clo, chi)) = stack.pop() {
            if clo == chi {
                continue;
            }
            let mid = 0.5 * (lo + hi);
            let width = hi - lo;
            if width <= tol_abs.max(2.0 * f64::EPSILON * lo.abs().max(hi.abs()))
                || mid <= lo
                || mid >= hi
            {
                for v in &mut out[clo..chi] {
                    *v = mid;
                }
                continue;
            }
            let cm = self.count_below(mid).clamp(clo, chi);
            stack.push((lo, mid, clo, cm));
            stack.push((mid, hi, cm, chi));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_periodic(seed: &[f64]) -> PeriodicTridiagonal {
        let q = seed.len() / 3;
        let diag = seed[..q].to_vec();
        let sub = (0..q)
            .map(|i| Complex64::new(seed[q + i], seed[2 * q + i]))
            .collect();
        PeriodicTridiagonal::new(diag, sub)
    }

    #[test]
    fn eigh_sorted_and_orthonormal() {
        let m = random_periodic(&[0.3, -1.0, 2.0, 0.5, 1.0, 0.2, -0.7, 0.1, 0.9, 0.4, 0.0, -0.3])
            .to_dense();
        let (vals, vecs) = hermitian_eigh(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let id = vecs.adjoint() * &vecs;
        for r in 0..4 {
            for c in 0..4 {
                let e = if r == c { 1.0 } else { 0.0 };
                assert!((id[(r, c)] - Complex64::new(e, 0.0)).norm() < 1e-12);
            }
        }
        for (i, &v) in vals.iter().enumerate() {
            let col = vecs.column(i).into_owned();
            let res = &m * &col - col * Complex64::new(v, 0.0);
            assert!(res.norm() < 1e-12);
        }
    }

    #[test]
    fn count_handles_exact_eigenvalue() {
        // 3x3 cyclic with all hops 1: eigenvalues 2, -1, -1
        let p = PeriodicTridiagonal::new(vec![0.0; 3], vec![Complex64::new(1.0, 0.0); 3]);
        assert_eq!(p.count_below(-1.0 - 1e-6), 0);
        assert_eq!(p.count_below(-1.0 + 1e-6), 2);
        assert_eq!(p.count_below(2.0 + 1e-9), 3);
        let ev = p.bisect_all();
        assert!((ev[0] + 1.0).abs() < 1e-13 && (ev[1] + 1.0).abs() < 1e-13);
        assert!((ev[2] - 2.0).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn bisection_matches_dense(q in 1usize..24, seed in prop::collection::vec(-2.0f64..2.0, 72)) {
            let p = random_periodic(&seed[..3 * q]);
            let dense = hermitian_eigenvalues(&p.to_dense());
            let fast = p.bisect_all();
            for (a, b) in dense.iter().zip(&fast) {
                prop_assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
        }
    }
}
