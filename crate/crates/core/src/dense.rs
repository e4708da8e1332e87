//! Dense brute-force counterparts of the sparse kernels, used as oracles in
//! tests and as the exact coarsest-level solver on small matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub fn to_dense(a: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.iter() {
        d[(i, j)] += v;
    }
    d
}

pub fn from_dense(d: &DMatrix<f64>) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            if d[(i, j)] != 0.0 {
                t.push((i, j, d[(i, j)]));
            }
        }
    }
    CsrMatrix::from_triplets(d.nrows(), d.ncols(), &t).expect("in-range triplets")
}

pub fn matvec(d: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (d * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// Dense LU solve with partial pivoting.
pub fn solve(d: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    d.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| Error::NotSpd("dense matrix is singular".into()))
}

/// Eigenvalues of a symmetric matrix, ascending. Only the lower triangle is read.
pub fn symmetric_eigenvalues(d: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = d.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Spectral radius estimate by power iteration on `|| E^k v ||` growth. Returns
/// the last Rayleigh-free ratio `|| E v_{k+1} || / || v_k ||` with `v_k` normalized.
pub fn power_iteration(e: &DMatrix<f64>, iters: usize, seed_vec: &[f64]) -> f64 {
    let mut v = DVector::from_column_slice(seed_vec);
    let n0 = v.norm();
    if n0 == 0.0 {
        return 0.0;
    }
    v /= n0;
    let mut ratio = 0.0;
    for _ in 0..iters {
        let w = e * &v;
        ratio = w.norm();
        if ratio == 0.0 {
            return 0.0;
        }
        v = w / ratio;
    }
    ratio
}

/// Dense Cholesky-based exact solver kept for small coarsest levels.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    factor: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl DenseCholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let d = to_dense(a);
        let factor = d
            .cholesky()
            .ok_or_else(|| Error::NotSpd("Cholesky factorization of the coarsest matrix failed".into()))?;
        Ok(Self { factor })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.factor.solve(&DVector::from_column_slice(b)).as_slice().to_vec()
    }
}
