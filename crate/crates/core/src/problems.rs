//! Model problems: finite-difference Poisson operators on the unit cube with
//! homogeneous Dirichlet boundary, in assembled and in partial-row form.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{PartialRowMatrix, RankPartition};
use crate::sparse::{norm2, spmv, CsrMatrix};

/// Largest number of unknowns a generator will produce.
pub const MAX_UNKNOWNS: usize = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Poisson1d,
    Poisson2d,
    Poisson3d,
}

impl ProblemKind {
    pub fn dim(self) -> usize {
        match self {
            ProblemKind::Poisson1d => 1,
            ProblemKind::Poisson2d => 2,
            ProblemKind::Poisson3d => 3,
        }
    }

    pub fn from_dim(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(ProblemKind::Poisson1d),
            2 => Ok(ProblemKind::Poisson2d),
            3 => Ok(ProblemKind::Poisson3d),
            _ => Err(Error::Config(format!("dimension {dim} is not 1, 2 or 3"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Poisson1d => "poisson1d",
            ProblemKind::Poisson2d => "poisson2d",
            ProblemKind::Poisson3d => "poisson3d",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ProblemKind::Poisson1d, ProblemKind::Poisson2d, ProblemKind::Poisson3d]
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown problem {s:?} (expected poisson1d, poisson2d or poisson3d)")))
    }
}

/// Grid shape `[n; dim]`, fastest index first.
pub fn grid_dims(dim: usize, n: usize) -> Result<Vec<usize>> {
    ProblemKind::from_dim(dim)?;
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 points per side, got {n}")));
    }
    match n.checked_pow(dim as u32) {
        Some(total) if total <= MAX_UNKNOWNS => Ok(vec![n; dim]),
        _ => Err(Error::Config(format!("{n}^{dim} unknowns exceeds the limit of {MAX_UNKNOWNS}"))),
    }
}

fn coords(mut index: usize, n: usize, dim: usize) -> [usize; 3] {
    let mut c = [0; 3];
    for slot in c.iter_mut().take(dim) {
        *slot = index % n;
        index /= n;
    }
    c
}

/// Grid edges `(i, i + stride)` in ascending `(i, axis)` order, and for each
/// node the number of stencil neighbours cut off by the boundary.
fn edges_and_cuts(dim: usize, n: usize) -> Result<(Vec<(usize, usize)>, Vec<u8>)> {
    let total = grid_dims(dim, n)?.iter().product();
    let mut edges = Vec::with_capacity(dim * total);
    let mut cuts = vec![0u8; total];
    for i in 0..total {
        let c = coords(i, n, dim);
        let mut stride = 1;
        for &ck in c.iter().take(dim) {
            if ck + 1 < n {
                edges.push((i, i + stride));
            } else {
                cuts[i] += 1;
            }
            if ck == 0 {
                cuts[i] += 1;
            }
            stride *= n;
        }
    }
    Ok((edges, cuts))
}

/// The `2 dim + 1`-point Laplacian (unit spacing) on `n^dim` interior nodes.
pub fn poisson_matrix(dim: usize, n: usize) -> Result<CsrMatrix> {
    let total: usize = grid_dims(dim, n)?.iter().product();
    let diag = 2.0 * dim as f64;
    let mut t = Vec::with_capacity(total * (2 * dim + 1));
    for i in 0..total {
        let c = coords(i, n, dim);
        let mut stride = 1;
        for &ck in c.iter().take(dim) {
            if ck > 0 {
                t.push((i, i - stride, -1.0));
            }
            if ck + 1 < n {
                t.push((i, i + stride, -1.0));
            }
            stride *= n;
        }
        t.push((i, i, diag));
    }
    Ok(CsrMatrix::from_triplets(total, total, &t)?.with_symmetric_hint(true))
}

/// Smooth, non-separable reference solution `prod_k t_k (1 - t_k) * (1 + t_0)`
/// sampled at `t_k = (c_k + 1) / (n + 1)`.
pub fn reference_solution(dim: usize, n: usize) -> Result<Vec<f64>> {
    let total: usize = grid_dims(dim, n)?.iter().product();
    let h = 1.0 / (n + 1) as f64;
    Ok((0..total)
        .map(|i| {
            let c = coords(i, n, dim);
            let t0 = (c[0] + 1) as f64 * h;
            c.iter().take(dim).map(|&ck| (ck + 1) as f64 * h).map(|t| t * (1.0 - t)).product::<f64>() * (1.0 + t0)
        })
        .collect())
}

/// Poisson matrix and `rhs = A x*` for [`reference_solution`].
pub fn gen_poisson(dim: usize, n: usize) -> Result<(CsrMatrix, Vec<f64>)> {
    let a = poisson_matrix(dim, n)?;
    let rhs = spmv(&a, &reference_solution(dim, n)?)?;
    Ok((a, rhs))
}

/// The Poisson matrix as unassembled edge-element contributions. Each grid
/// edge contributes `[[1, -1], [-1, 1]]` and is held by the owner of its lower
/// node; each boundary cut adds `1` to the diagonal on the owner of the node.
/// The contributions sum to [`poisson_matrix`] exactly.
pub fn poisson_partial_rows(dim: usize, n: usize, part: &RankPartition) -> Result<PartialRowMatrix> {
    let (edges, cuts) = edges_and_cuts(dim, n)?;
    let total = cuts.len();
    if part.n() != total {
        return Err(Error::DimensionMismatch(format!(
            "partition of {} indices for {total} unknowns",
            part.n()
        )));
    }
    let mut per_rank: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); part.n_ranks()];
    for (i, &c) in cuts.iter().enumerate() {
        if c > 0 {
            per_rank[part.owner_of(i)].push((i, i, c as f64));
        }
    }
    for &(i, j) in &edges {
        let t = &mut per_rank[part.owner_of(i)];
        t.extend([(i, i, 1.0), (i, j, -1.0), (j, i, -1.0), (j, j, 1.0)]);
    }
    PartialRowMatrix::from_rank_triplets(total, &per_rank)
}

/// Seeded smooth right-hand-side change for time step `step`: a sum of three
/// Gaussian bumps with random centres and amplitudes, scaled to
/// `scale * ||b0||`. Step 0 is unperturbed.
pub fn rhs_perturbation(dim: usize, n: usize, seed: u64, step: usize, scale: f64, b0_norm: f64) -> Result<Vec<f64>> {
    let total: usize = grid_dims(dim, n)?.iter().product();
    if step == 0 || scale == 0.0 {
        return Ok(vec![0.0; total]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let bumps: Vec<([f64; 3], f64)> = (0..3)
        .map(|_| {
            let centre = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            (centre, rng.gen_range(-1.0..1.0))
        })
        .collect();
    let h = 1.0 / (n + 1) as f64;
    let inv_two_sigma_sq = 1.0 / (2.0 * 0.15 * 0.15);
    let mut f: Vec<f64> = (0..total)
        .map(|i| {
            let c = coords(i, n, dim);
            bumps
                .iter()
                .map(|(centre, amp)| {
                    let d2: f64 = (0..dim).map(|k| ((c[k] + 1) as f64 * h - centre[k]).powi(2)).sum();
                    amp * (-d2 * inv_two_sigma_sq).exp()
                })
                .sum()
        })
        .collect();
    let norm = norm2(&f);
    if norm > 0.0 {
        let s = scale * b0_norm / norm;
        f.iter_mut().for_each(|v| *v *= s);
    }
    Ok(f)
}
