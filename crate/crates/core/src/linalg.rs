//! Dense row-major complex matrices, Cholesky factorization and inversion.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per rayon task below which loops stay sequential.
const PAR_MIN: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyReport {
    pub succeeded: bool,
    pub min_pivot: f64,
    pub failure_index: Option<usize>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C64 + Sync) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        data.par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = f(i, j);
                }
            });
        CMatrix { n, data }
    }

    pub fn from_vec(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(CMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z * a).collect(),
        }
    }

    /// Replace M by (M + M†)/2.
    pub fn hermitize(&mut self) {
        let n = self.n;
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in i + 1..n {
                let a = self.data[i * n + j];
                let b = self.data[j * n + i];
                let h = (a + b.conj()) * 0.5;
                self.data[i * n + j] = h;
                self.data[j * n + i] = h.conj();
            }
        }
    }

    /// max |M_ij - conj(M_ji)| relative to max |M_ij|.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.n;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev / scale
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn matvec(&self, v: &[C64], out: &mut [C64]) {
        let n = self.n;
        assert_eq!(v.len(), n);
        assert_eq!(out.len(), n);
        let row_dot = |(i, o): (usize, &mut C64)| {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            *o = acc;
        };
        if n >= PAR_MIN {
            out.par_iter_mut().enumerate().for_each(row_dot);
        } else {
            out.iter_mut().enumerate().for_each(row_dot);
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        let n = self.n;
        assert_eq!(other.n, n);
        let bt = other.transpose();
        CMatrix::from_fn(n, |i, j| {
            let a = self.row(i);
            let b = bt.row(j);
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        })
    }

    /// Lower-triangular L with M = L L†. The matrix must be Hermitian.
    pub fn cholesky(&self) -> (CholeskyReport, Option<CMatrix>) {
        let n = self.n;
        let mut l = CMatrix::zeros(n);
        let mut min_pivot = f64::INFINITY;
        for j in 0..n {
            let (head, tail) = l.data.split_at_mut((j + 1) * n);
            let row_j = &mut head[j * n..(j + 1) * n];
            let mut d = self[(j, j)].re;
            for v in &row_j[..j] {
                d -= v.norm_sqr();
            }
            min_pivot = min_pivot.min(d);
            if !(d > 0.0) {
                return (
                    CholeskyReport {
                        succeeded: false,
                        min_pivot: d,
                        failure_index: Some(j),
                    },
                    None,
                );
            }
            let ljj = d.sqrt();
            row_j[j] = C64::new(ljj, 0.0);
            let row_j = &row_j[..j];
            let a = &self.data;
            let update = |(k, row_i): (usize, &mut [C64])| {
                let i = j + 1 + k;
                let mut s = a[i * n + j];
                for (x, y) in row_i[..j].iter().zip(row_j) {
                    s -= x * y.conj();
                }
                row_i[j] = s / ljj;
            };
            if n - j > PAR_MIN {
                tail.par_chunks_mut(n).enumerate().for_each(update);
            } else {
                tail.chunks_mut(n).enumerate().for_each(update);
            }
        }
        if n == 0 {
            min_pivot = 0.0;
        }
        (
            CholeskyReport {
                succeeded: true,
                min_pivot,
                failure_index: None,
            },
            Some(l),
        )
    }

    /// Inverse of a Hermitian positive-definite matrix via Cholesky.
    pub fn inverse_hpd(&self) -> Result<CMatrix> {
        let (report, l) = self.cholesky();
        let l = l.ok_or(Error::NotPositiveDefinite {
            index: report.failure_index.unwrap_or(0),
            pivot: report.min_pivot,
        })?;
        let n = self.n;
        let u = l.adjoint();
        // column c of the inverse: solve L y = e_c, then L† x = y
        let cols: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|c| {
                let mut y = vec![C64::new(0.0, 0.0); n];
                for i in c..n {
                    let row = l.row(i);
                    let mut s = if i == c {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    for k in c..i {
                        s -= row[k] * y[k];
                    }
                    y[i] = s / row[i].re;
                }
                for i in (0..n).rev() {
                    let row = u.row(i);
                    let mut s = y[i];
                    for k in i + 1..n {
                        s -= row[k] * y[k];
                    }
                    y[i] = s / row[i].re;
                }
                y
            })
            .collect();
        let mut inv = CMatrix::from_fn(n, |i, j| cols[j][i]);
        inv.hermitize();
        Ok(inv)
    }

    /// ‖A·B − I‖_max.
    pub fn identity_residual(&self, other: &CMatrix) -> f64 {
        self.matmul(other)
            .max_abs_diff(&CMatrix::identity(self.n))
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.dim();
    let a = nalgebra::DMatrix::from_fn(n, n, |i, j| m[(i, j)]);
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Zero the negative eigenvalues of a Hermitian matrix. Returns the
/// projected matrix and the max-norm of the change.
pub fn project_psd(m: &CMatrix) -> (CMatrix, f64) {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.dim();
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
    let mut p = CMatrix::from_fn(n, |i, j| {
        (0..n)
            .map(|k| vecs[(i, k)] * clipped[k] * vecs[(j, k)].conj())
            .sum()
    });
    p.hermitize();
    let change = p.max_abs_diff(m);
    (p, change)
}
