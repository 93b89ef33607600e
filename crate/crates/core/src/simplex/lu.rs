//! Dense LU factorization with partial pivoting, used for the non-trivial
//! kernel of the simplex basis.

/// LU factors of a square matrix, `PA = LU` with unit-diagonal `L`.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    /// Row-major combined storage: strict lower = L, upper incl. diagonal = U.
    lu: Vec<f64>,
    /// Row permutation applied to the input (pivoting history).
    perm: Vec<usize>,
}

impl DenseLu {
    /// Factors a row-major `n x n` matrix. Returns `None` on (numerical)
    /// singularity.
    pub fn factor(mut a: Vec<f64>, n: usize) -> Option<DenseLu> {
        debug_assert_eq!(a.len(), n * n);
        let mut perm: Vec<usize> = (0..n).collect();
        for j in 0..n {
            // partial pivot on column j
            let mut best = j;
            let mut best_abs = a[j * n + j].abs();
            for i in j + 1..n {
                let v = a[i * n + j].abs();
                if v > best_abs {
                    best_abs = v;
                    best = i;
                }
            }
            if best_abs < 1e-12 {
                return None;
            }
            if best != j {
                perm.swap(j, best);
                for k in 0..n {
                    a.swap(j * n + k, best * n + k);
                }
            }
            let pivot = a[j * n + j];
            for i in j + 1..n {
                let l = a[i * n + j] / pivot;
                a[i * n + j] = l;
                if l != 0.0 {
                    let (upper, lower) = a.split_at_mut(i * n);
                    let src = &upper[j * n + j + 1..j * n + n];
                    let dst = &mut lower[j + 1..n];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d -= l * s;
                    }
                }
            }
        }
        Some(DenseLu { n, lu: a, perm })
    }

    /// Solves `A x = rhs` in place.
    pub fn solve(&self, rhs: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(rhs.len(), n);
        // apply permutation
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        // forward: L y = Pb
        for i in 1..n {
            let mut acc = x[i];
            let row = &self.lu[i * n..i * n + i];
            for (k, &l) in row.iter().enumerate() {
                acc -= l * x[k];
            }
            x[i] = acc;
        }
        // backward: U x = y
        for i in (0..n).rev() {
            let mut acc = x[i];
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            for (k, &u) in row.iter().enumerate() {
                acc -= u * x[i + 1 + k];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        rhs.copy_from_slice(&x);
    }

    /// Solves `A^T x = rhs` in place.
    pub fn solve_transpose(&self, rhs: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(rhs.len(), n);
        // A^T = U^T L^T P, solve U^T y = rhs first
        for i in 0..n {
            let mut acc = rhs[i];
            for k in 0..i {
                acc -= self.lu[k * n + i] * rhs[k];
            }
            rhs[i] = acc / self.lu[i * n + i];
        }
        // then L^T z = y
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for k in i + 1..n {
                acc -= self.lu[k * n + i] * rhs[k];
            }
            rhs[i] = acc;
        }
        // x = P^T z
        let mut out = vec![0.0; n];
        for (j, &p) in self.perm.iter().enumerate() {
            out[p] = rhs[j];
        }
        rhs.copy_from_slice(&out);
    }
}
