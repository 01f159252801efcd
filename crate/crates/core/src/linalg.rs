//! Small complex vector kernels and the operator abstraction used by the
//! eigensolver.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

/// `<a, b>`, conjugate-linear in `a`.
#[inline]
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha x`
#[inline]
pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(a: &mut [Complex64], s: f64) {
    for x in a {
        *x *= s;
    }
}

pub fn random_vector<R: Rng>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

/// Remove the components of `v` along the orthonormal set `basis`, twice.
pub fn orthogonalize(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
}

/// A Hermitian linear map on `C^dim`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, Default)]
pub struct CsrMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub values: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.cols[k] as usize];
            }
            *yi = acc;
        });
    }
}

/// Dense row-major matrix, used for small problems and oracles.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl DenseMatrix {
    /// Materialize an operator column by column.
    pub fn from_operator(op: &dyn LinearOperator) -> Self {
        let n = op.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = Complex64::new(1.0, 0.0);
            op.apply(&e, &mut col);
            e[j] = Complex64::new(0.0, 0.0);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
        DenseMatrix { dim: n, data }
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<Complex64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Ascending eigenvalues and matching eigenvectors (as columns).
    pub fn eigh(&self) -> (Vec<f64>, Vec<Vec<Complex64>>) {
        hermitian_eigh(self.to_nalgebra())
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.data[i * self.dim..(i + 1) * self.dim]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix, sorted ascending.
pub fn hermitian_eigh(m: nalgebra::DMatrix<Complex64>) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    (values, vectors)
}
