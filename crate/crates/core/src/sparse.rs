//! Compressed sparse row storage and the kernels every other module builds on.
//!
//! All matrices are kept in canonical form: column indices strictly increasing
//! within each row and no duplicate entries. Every kernel sums in a fixed
//! left-to-right order so repeated runs are bit-identical.

use crate::error::{Error, Result};

/// Dense vectors are plain `Vec<f64>`; kernels borrow them as slices.
pub type DenseVector = Vec<f64>;

/// Equality compares shape, structure and values; the symmetry hint is
/// ignored.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric_hint: bool,
}

impl PartialEq for CsrMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_offsets == other.row_offsets
            && self.col_indices == other.col_indices
            && self.values == other.values
    }
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, rejecting anything that is not in
    /// canonical form.
    pub fn try_new(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != nrows + 1 {
            return Err(Error::Malformed(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                nrows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(Error::Malformed("row_offsets[0] != 0".into()));
        }
        if col_indices.len() != values.len() || row_offsets[nrows] != values.len() {
            return Err(Error::Malformed(
                "row_offsets[nrows], col_indices and values disagree on nnz".into(),
            ));
        }
        for i in 0..nrows {
            let (start, end) = (row_offsets[i], row_offsets[i + 1]);
            if start > end {
                return Err(Error::Malformed(format!("row_offsets decreases at row {i}")));
            }
            let cols = &col_indices[start..end];
            if let Some(&c) = cols.iter().find(|&&c| c >= ncols) {
                return Err(Error::Malformed(format!("column {c} out of range in row {i}")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Malformed(format!(
                    "row {i} is not sorted or holds duplicate columns"
                )));
            }
        }
        Ok(Self::from_parts(nrows, ncols, row_offsets, col_indices, values))
    }

    pub(crate) fn from_parts(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        let m = Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
            symmetric_hint: false,
        };
        debug_assert!(m.is_canonical());
        m
    }

    /// Assembles from `(row, col, value)` triplets. Duplicates are summed in
    /// the order they appear in `triplets`.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= nrows || j >= ncols) {
            return Err(Error::Malformed(format!(
                "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
            )));
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // stable: duplicates keep their input order
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));

        let mut row_offsets = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self::from_parts(nrows, ncols, row_offsets, col_indices, values))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::from_parts(n, n, (0..=n).collect(), (0..n).collect(), diag.to_vec());
        m.symmetric_hint = true;
        m
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_parts(nrows, ncols, vec![0; nrows + 1], Vec::new(), Vec::new())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Replaces the stored values while keeping the sparsity structure.
    pub fn with_values(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a pattern with {} entries",
                values.len(),
                self.values.len()
            )));
        }
        self.values = values;
        Ok(self)
    }

    /// Advisory only: nothing in the crate trusts this flag without checking.
    pub fn symmetric_hint(&self) -> bool {
        self.symmetric_hint
    }

    pub fn with_symmetric_hint(mut self, hint: bool) -> Self {
        self.symmetric_hint = hint;
        self
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    /// Stored value at `(i, j)`, or zero when the entry is structurally absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn is_canonical(&self) -> bool {
        self.row_offsets.len() == self.nrows + 1
            && self.row_offsets[0] == 0
            && self.row_offsets[self.nrows] == self.values.len()
            && self.col_indices.len() == self.values.len()
            && (0..self.nrows).all(|i| {
                let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
                s <= e
                    && self.col_indices[s..e].windows(2).all(|w| w[0] < w[1])
                    && self.col_indices[s..e].iter().all(|&c| c < self.ncols)
            })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// `max |a_ij - a_ji| <= rel_tol * max |a_ij|`, checked over the union of
    /// both patterns.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.is_square() && self.asymmetry() <= rel_tol * self.max_abs()
    }

    /// Largest `|a_ij - a_ji|` over the stored pattern.
    pub fn asymmetry(&self) -> f64 {
        let t = transpose(self);
        max_abs_diff(self, &t).unwrap_or(f64::INFINITY)
    }

    /// Pattern union of `A` and `A^T` with values `(a_ij + a_ji) / 2`.
    pub fn symmetrized(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("symmetrizing a non-square matrix".into()));
        }
        let t = transpose(self);
        let mut m = add_scaled(0.5, self, 0.5, &t)?;
        m.symmetric_hint = true;
        Ok(m)
    }

    /// Extracts `A[rows, cols]` where `col_map[g]` gives the local column of
    /// global column `g` (or `None` if the column is not kept).
    pub fn submatrix(&self, rows: &[usize], col_map: &[Option<usize>], ncols: usize) -> Self {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for &i in rows {
            scratch.clear();
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if let Some(lj) = col_map[j] {
                    scratch.push((lj, v));
                }
            }
            scratch.sort_by_key(|e| e.0);
            for &(lj, v) in &scratch {
                col_indices.push(lj);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Self::from_parts(rows.len(), ncols, row_offsets, col_indices, values)
    }

    /// `y = A x` into a caller-provided buffer.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "spmv: x has wrong length");
        assert_eq!(y.len(), self.nrows, "spmv: y has wrong length");
        for (i, yi) in y.iter_mut().enumerate() {
            let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
    }

    /// `r = b - A x` into a caller-provided buffer.
    pub fn residual_into(&self, b: &[f64], x: &[f64], r: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(b.len(), self.nrows);
        for (i, ri) in r.iter_mut().enumerate() {
            let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = 0.0;
            for k in s..e {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *ri = b[i] - acc;
        }
    }
}

/// `y = A x`, each row summed over its stored entries in column order.
pub fn spmv(a: &CsrMatrix, x: &[f64]) -> Result<DenseVector> {
    if a.ncols != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "spmv: matrix has {} columns, vector has length {}",
            a.ncols,
            x.len()
        )));
    }
    let mut y = vec![0.0; a.nrows];
    a.spmv_into(x, &mut y);
    Ok(y)
}

/// Computes only the rows in `rows`, writing `y[k] = (A x)[rows[k]]`. Used by the
/// rank simulator to evaluate disjoint row blocks independently.
pub fn spmv_rows(a: &CsrMatrix, x: &[f64], rows: &[usize]) -> Result<DenseVector> {
    if a.ncols != x.len() {
        return Err(Error::DimensionMismatch("spmv_rows: vector length".into()));
    }
    Ok(rows
        .iter()
        .map(|&i| {
            let (cols, vals) = a.row(i);
            cols.iter().zip(vals).fold(0.0, |acc, (&j, &v)| acc + v * x[j])
        })
        .collect())
}

pub fn transpose(a: &CsrMatrix) -> CsrMatrix {
    let mut counts = vec![0usize; a.ncols + 1];
    for &j in &a.col_indices {
        counts[j + 1] += 1;
    }
    for j in 0..a.ncols {
        counts[j + 1] += counts[j];
    }
    let row_offsets = counts.clone();
    let mut next = counts;
    let mut col_indices = vec![0usize; a.nnz()];
    let mut values = vec![0.0; a.nnz()];
    // rows visited in ascending order keep each output row sorted
    for i in 0..a.nrows {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let k = next[j];
            col_indices[k] = i;
            values[k] = v;
            next[j] += 1;
        }
    }
    let mut t = CsrMatrix::from_parts(a.ncols, a.nrows, row_offsets, col_indices, values);
    t.symmetric_hint = a.symmetric_hint;
    t
}

/// Sparse product `A B` (row-wise Gustavson). No entry is dropped: every
/// structurally produced position is kept, including exact cancellations.
pub fn spgemm(a: &CsrMatrix, b: &CsrMatrix) -> Result<CsrMatrix> {
    if a.ncols != b.nrows {
        return Err(Error::DimensionMismatch(format!(
            "spgemm: {}x{} times {}x{}",
            a.nrows, a.ncols, b.nrows, b.ncols
        )));
    }
    let n = b.ncols;
    let mut marker = vec![usize::MAX; n];
    let mut acc = vec![0.0; n];
    let mut row_cols: Vec<usize> = Vec::new();
    let mut row_offsets = Vec::with_capacity(a.nrows + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::with_capacity(a.nnz().max(b.nnz()));
    let mut values = Vec::with_capacity(a.nnz().max(b.nnz()));
    for i in 0..a.nrows {
        row_cols.clear();
        let (acols, avals) = a.row(i);
        for (&k, &aik) in acols.iter().zip(avals) {
            let (bcols, bvals) = b.row(k);
            for (&j, &bkj) in bcols.iter().zip(bvals) {
                if marker[j] != i {
                    marker[j] = i;
                    acc[j] = aik * bkj;
                    row_cols.push(j);
                } else {
                    acc[j] += aik * bkj;
                }
            }
        }
        row_cols.sort_unstable();
        for &j in &row_cols {
            col_indices.push(j);
            values.push(acc[j]);
        }
        row_offsets.push(col_indices.len());
    }
    Ok(CsrMatrix::from_parts(a.nrows, n, row_offsets, col_indices, values))
}

/// `alpha A + beta B` over the union pattern.
pub fn add_scaled(alpha: f64, a: &CsrMatrix, beta: f64, b: &CsrMatrix) -> Result<CsrMatrix> {
    if a.nrows != b.nrows || a.ncols != b.ncols {
        return Err(Error::DimensionMismatch("add_scaled: shapes differ".into()));
    }
    let mut row_offsets = Vec::with_capacity(a.nrows + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::with_capacity(a.nnz() + b.nnz());
    let mut values = Vec::with_capacity(a.nnz() + b.nnz());
    for i in 0..a.nrows {
        let (ac, av) = a.row(i);
        let (bc, bv) = b.row(i);
        let (mut p, mut q) = (0, 0);
        while p < ac.len() || q < bc.len() {
            let take_a = q >= bc.len() || (p < ac.len() && ac[p] <= bc[q]);
            let take_b = p >= ac.len() || (q < bc.len() && bc[q] <= ac[p]);
            if take_a && take_b {
                col_indices.push(ac[p]);
                values.push(alpha * av[p] + beta * bv[q]);
                p += 1;
                q += 1;
            } else if take_a {
                col_indices.push(ac[p]);
                values.push(alpha * av[p]);
                p += 1;
            } else {
                col_indices.push(bc[q]);
                values.push(beta * bv[q]);
                q += 1;
            }
        }
        row_offsets.push(col_indices.len());
    }
    Ok(CsrMatrix::from_parts(a.nrows, a.ncols, row_offsets, col_indices, values))
}

/// `max |a_ij - b_ij|` over the union of both patterns.
pub fn max_abs_diff(a: &CsrMatrix, b: &CsrMatrix) -> Result<f64> {
    let d = add_scaled(1.0, a, -1.0, b)?;
    Ok(d.max_abs())
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).fold(0.0, |acc, (a, b)| acc + a * b)
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `sqrt(x^T A x)`. A quadratic form more negative than `-1e-12` relative to
/// `sum |a_ij x_i x_j|` is reported as a non-SPD matrix.
pub fn a_norm(a: &CsrMatrix, x: &[f64]) -> Result<f64> {
    if !a.is_square() || a.ncols != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "A-norm: {}x{} matrix with vector of length {}",
            a.nrows,
            a.ncols,
            x.len()
        )));
    }
    let mut q = 0.0;
    let mut scale = 0.0;
    for i in 0..a.nrows {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let t = v * x[i] * x[j];
            q += t;
            scale += t.abs();
        }
    }
    if q < -1e-12 * scale {
        return Err(Error::NotSpd(format!("x^T A x = {q:e} is negative")));
    }
    Ok(q.max(0.0).sqrt())
}

/// `y += alpha x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
