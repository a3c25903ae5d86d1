//! Dense complex matrices sized for descriptor work (3×3 and 5×5).
//!
//! The descriptor pipeline only ever needs small Hermitian matrices, so the
//! factorizations here favour robustness over scalability: Cholesky with an
//! explicit pivot check and a cyclic Jacobi eigenvalue sweep for Hermitian
//! input.

use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let n = rows.len();
        let mut m = CMat::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "square matrix expected");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = CMat::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(*v, 0.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        let mut out = CMat::zeros(self.n);
        for i in 0..self.n {
            for k in 0..self.n {
                let aik = self[(i, k)];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..self.n {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> CMat {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    /// Replaces the matrix by its Hermitian part (M + M†)/2.
    pub fn hermitize(&mut self) {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let avg = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
            let d = self[(i, i)];
            self[(i, i)] = Complex64::new(d.re, 0.0);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Lower-triangular L with self = L·L†. Fails on a non-positive pivot.
    pub fn cholesky(&self) -> Result<CMat> {
        let n = self.n;
        let mut l = CMat::zeros(n);
        for j in 0..n {
            let mut pivot = self[(j, j)].re;
            for k in 0..j {
                pivot -= l[(j, k)].norm_sqr();
            }
            if pivot <= 0.0 || !pivot.is_finite() {
                return Err(Error::NonPd(pivot));
            }
            let ljj = pivot.sqrt();
            l[(j, j)] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(l)
    }

    /// Solves L·X = B for lower-triangular L (self), returning X.
    pub fn forward_solve(&self, b: &CMat) -> CMat {
        let n = self.n;
        let mut x = b.clone();
        for col in 0..n {
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s -= self[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / self[(i, i)];
            }
        }
        x
    }

    /// Eigenvalues of a Hermitian matrix, ascending. Cyclic Jacobi sweeps
    /// with complex rotations; quadratic convergence makes a generous sweep
    /// cap safe for the matrix sizes used here.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = self.clone();
        a.hermitize();
        let scale = a.max_abs().max(1e-300);
        let tol = 1e-30 * scale * scale;
        for _sweep in 0..60 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let r = apq.norm();
                    if r <= 1e-300 {
                        continue;
                    }
                    let phase = apq / r;
                    let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    a[(p, p)] = Complex64::new(app * c * c + aqq * s * s - 2.0 * s * c * r, 0.0);
                    a[(q, q)] = Complex64::new(app * s * s + aqq * c * c + 2.0 * s * c * r, 0.0);
                    a[(p, q)] = Complex64::new(0.0, 0.0);
                    a[(q, p)] = Complex64::new(0.0, 0.0);
                    for i in 0..n {
                        if i == p || i == q {
                            continue;
                        }
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        let new_ip = aip * c - aiq * phase.conj() * s;
                        let new_iq = aip * phase * s + aiq * c;
                        a[(i, p)] = new_ip;
                        a[(p, i)] = new_ip.conj();
                        a[(i, q)] = new_iq;
                        a[(q, i)] = new_iq.conj();
                    }
                }
            }
        }
        let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eigs
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues of M1⁻¹·M2 for Hermitian positive-definite M1, M2, computed by
/// whitening: with M1 = L·L†, the eigenvalues of L⁻¹·M2·L⁻† are returned in
/// ascending order. M1 is never inverted explicitly.
pub fn generalized_eigenvalues(m1: &CMat, m2: &CMat) -> Result<Vec<f64>> {
    let l = m1.cholesky().map_err(|_| {
        let min = m1.hermitian_eigenvalues()[0];
        Error::NonPd(min)
    })?;
    Ok(whitened(&l, m2).hermitian_eigenvalues())
}

/// L⁻¹·M·L⁻† for lower-triangular L.
pub fn whitened(l: &CMat, m: &CMat) -> CMat {
    let half = l.forward_solve(m); // L⁻¹ M
    let mut b = l.forward_solve(&half.adjoint()).adjoint(); // (L⁻¹ (L⁻¹M)†)† = L⁻¹ M L⁻†
    b.hermitize();
    b
}
