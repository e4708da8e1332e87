//! Incomplete LU factorization with level-of-fill control, ILU(k). The
//! coarsest-level block-Jacobi solver uses ILU(1).

use std::collections::BTreeMap;
use std::ops::Bound::{Excluded, Unbounded};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct IluFactor {
    /// Unit lower triangle, diagonal stored explicitly.
    l: CsrMatrix,
    /// Upper triangle including the pivots.
    u: CsrMatrix,
    level: usize,
}

pub type Ilu1Factor = IluFactor;

/// Level-of-fill pattern: for every row, `(col, level)` pairs with
/// `level <= max_level`, ascending in `col`. Original entries have level 0 and
/// a fill entry `(i, j)` created through pivot `k` gets
/// `lev(i, k) + lev(k, j) + 1`, minimized over all `k`.
pub fn symbolic_fill(a: &CsrMatrix, max_level: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("ILU needs a square block".into()));
    }
    let n = a.nrows();
    let mut upper: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut lev: BTreeMap<usize, usize> = a.row(i).0.iter().map(|&j| (j, 0)).collect();
        lev.entry(i).or_insert(0);
        let mut cursor = lev.range(..i).next().map(|(&k, _)| k);
        while let Some(k) = cursor {
            let lik = lev[&k];
            for &(j, lkj) in &upper[k] {
                if j <= k {
                    continue;
                }
                let new = lik + lkj + 1;
                if new <= max_level {
                    lev.entry(j).and_modify(|l| *l = (*l).min(new)).or_insert(new);
                }
            }
            cursor = lev.range((Excluded(k), Unbounded)).next().map(|(&c, _)| c).filter(|&c| c < i);
        }
        upper.push(lev.range(i..).map(|(&j, &l)| (j, l)).collect());
        rows.push(lev.into_iter().collect());
    }
    Ok(rows)
}

impl IluFactor {
    /// ILU(k) by IKJ elimination restricted to the level-`k` pattern, without
    /// pivoting.
    pub fn new(a: &CsrMatrix, level: usize) -> Result<Self> {
        let pattern = symbolic_fill(a, level)?;
        let n = a.nrows();
        let mut l_off = vec![0usize];
        let mut l_col = Vec::new();
        let mut l_val = Vec::new();
        let mut u_off = vec![0usize];
        let mut u_col: Vec<usize> = Vec::new();
        let mut u_val: Vec<f64> = Vec::new();
        let mut diag_pos = vec![0usize; n];
        let mut pos = vec![usize::MAX; n];
        let mut work: Vec<f64> = Vec::new();

        for (i, row_pat) in pattern.iter().enumerate() {
            work.clear();
            for (k, &(j, _)) in row_pat.iter().enumerate() {
                pos[j] = k;
                work.push(0.0);
            }
            let (ac, av) = a.row(i);
            for (&j, &v) in ac.iter().zip(av) {
                work[pos[j]] = v;
            }
            for (idx, &(k, _)) in row_pat.iter().enumerate() {
                if k >= i {
                    break;
                }
                let lik = work[idx] / u_val[diag_pos[k]];
                work[idx] = lik;
                for p in diag_pos[k] + 1..u_off[k + 1] {
                    let j = u_col[p];
                    if pos[j] != usize::MAX {
                        work[pos[j]] -= lik * u_val[p];
                    }
                }
            }
            for (idx, &(j, _)) in row_pat.iter().enumerate() {
                if j < i {
                    l_col.push(j);
                    l_val.push(work[idx]);
                } else {
                    if j == i {
                        if work[idx] == 0.0 {
                            return Err(Error::ZeroPivot { row: i });
                        }
                        diag_pos[i] = u_col.len();
                    }
                    u_col.push(j);
                    u_val.push(work[idx]);
                }
            }
            l_col.push(i);
            l_val.push(1.0);
            l_off.push(l_col.len());
            u_off.push(u_col.len());
            for &(j, _) in row_pat {
                pos[j] = usize::MAX;
            }
        }
        Ok(Self {
            l: CsrMatrix::from_parts(n, n, l_off, l_col, l_val),
            u: CsrMatrix::from_parts(n, n, u_off, u_col, u_val),
            level,
        })
    }

    pub fn l(&self) -> &CsrMatrix {
        &self.l
    }

    pub fn u(&self) -> &CsrMatrix {
        &self.u
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `L U z = r` in place.
    pub fn solve_in_place(&self, z: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let (cols, vals) = self.l.row(i);
            let mut s = z[i];
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    s -= v * z[j];
                }
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let (cols, vals) = self.u.row(i);
            let mut s = z[i];
            for (&j, &v) in cols[1..].iter().zip(&vals[1..]) {
                s -= v * z[j];
            }
            z[i] = s / vals[0];
        }
    }

    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        let mut z = r.to_vec();
        self.solve_in_place(&mut z);
        z
    }
}

pub fn ilu1_factor(a: &CsrMatrix) -> Result<Ilu1Factor> {
    IluFactor::new(a, 1)
}
