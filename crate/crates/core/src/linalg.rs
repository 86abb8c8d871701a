//! Small dense solvers for the 2×2 and 3×3 normal equations used in fits.

/// Row-major square matrix of dimension `n`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Square {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Square {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }

    /// Cholesky factor L (lower) of a symmetric positive definite matrix.
    /// Returns `None` when a pivot is not positive relative to `rel_tol`.
    pub fn cholesky(&self, rel_tol: f64) -> Option<Square> {
        let n = self.n;
        let scale = (0..n).map(|i| self.at(i, i).abs()).fold(0.0, f64::max);
        let mut l = Square::zeros(n);
        for j in 0..n {
            let mut d = self.at(j, j);
            for k in 0..j {
                d -= l.at(j, k) * l.at(j, k);
            }
            if !(d > rel_tol * scale) {
                return None;
            }
            let d = d.sqrt();
            *l.at_mut(j, j) = d;
            for i in j + 1..n {
                let mut s = self.at(i, j);
                for k in 0..j {
                    s -= l.at(i, k) * l.at(j, k);
                }
                *l.at_mut(i, j) = s / d;
            }
        }
        Some(l)
    }

    pub fn solve_spd(&self, b: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
        let l = self.cholesky(rel_tol)?;
        Some(l.cholesky_solve(b))
    }

    fn cholesky_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.at(i, k) * y[k];
            }
            y[i] /= self.at(i, i);
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= self.at(k, i) * y[k];
            }
            y[i] /= self.at(i, i);
        }
        y
    }

    /// Inverse of an SPD matrix via its Cholesky factor.
    pub fn inverse_spd(&self, rel_tol: f64) -> Option<Square> {
        let l = self.cholesky(rel_tol)?;
        let mut inv = Square::zeros(self.n);
        for j in 0..self.n {
            let mut e = vec![0.0; self.n];
            e[j] = 1.0;
            let col = l.cholesky_solve(&e);
            for (i, v) in col.into_iter().enumerate() {
                *inv.at_mut(i, j) = v;
            }
        }
        Some(inv)
    }
}
