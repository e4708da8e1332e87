//! Multilevel hierarchy: tentative and smoothed prolongators, composition of
//! pairwise matchings into larger aggregates, and Galerkin coarse operators
//! `A_{l+1} = P_l^T A_l P_l`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aggregation::{decoupled_aggregation_global, default_theta};
use crate::config::{CoarseMethod, PrecLabel, PreconditionerConfig};
use crate::error::{Error, Result};
use crate::matching::{build_edge_weights, half_approx_matching, matching_to_aggregates, AggregationMap, Matching};
use crate::partition::RankPartition;
use crate::smoother::BlockSmoother;
use crate::sparse::{spgemm, spmv, transpose, CsrMatrix};
use crate::vcycle::CoarseSolver;

/// Relative tolerance of the symmetry check done before building.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProlongatorKind {
    Tentative,
    Smoothed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prolongator {
    pub p: CsrMatrix,
    pub kind: ProlongatorKind,
    /// Jacobi damping used to smooth it, for smoothed prolongators.
    pub omega: Option<f64>,
}

impl Prolongator {
    pub fn n_fine(&self) -> usize {
        self.p.nrows()
    }

    pub fn n_coarse(&self) -> usize {
        self.p.ncols()
    }
}

/// Piecewise-constant interpolation from an aggregation: column `g` holds
/// `w_i / ||w_g||` on the members `i` of aggregate `g`. Columns are
/// orthonormal and `P c = w` for `c_g = ||w_g||`.
pub fn tentative_from_aggregates(agg: &AggregationMap, w: &[f64]) -> Result<Prolongator> {
    if w.len() != agg.n_fine {
        return Err(Error::DimensionMismatch(format!(
            "test vector of length {} for {} fine indices",
            w.len(),
            agg.n_fine
        )));
    }
    let norms = aggregate_norms(agg, w);
    if let Some(g) = norms.iter().position(|&s| s == 0.0 || !s.is_finite()) {
        return Err(Error::ZeroTestVector { aggregate: g });
    }
    let n = agg.n_fine;
    let values = (0..n)
        .map(|i| {
            let g = agg.assign[i];
            if agg.aggregate_sizes[g] == 1 {
                w[i].signum()
            } else {
                w[i] / norms[g]
            }
        })
        .collect();
    let p = CsrMatrix::from_parts(n, agg.n_coarse, (0..=n).collect(), agg.assign.clone(), values);
    Ok(Prolongator { p, kind: ProlongatorKind::Tentative, omega: None })
}

/// `||w_g||_2` per aggregate (`|w_s|` for singletons).
pub fn aggregate_norms(agg: &AggregationMap, w: &[f64]) -> Vec<f64> {
    let mut sq = vec![0.0; agg.n_coarse];
    let mut single = vec![0.0; agg.n_coarse];
    for (i, &g) in agg.assign.iter().enumerate() {
        sq[g] += w[i] * w[i];
        single[g] = w[i].abs();
    }
    sq.iter()
        .zip(&agg.aggregate_sizes)
        .zip(&single)
        .map(|((&s, &size), &abs)| if size == 1 { abs } else { s.sqrt() })
        .collect()
}

pub fn build_tentative_prolongator(m: &Matching, w: &[f64]) -> Result<Prolongator> {
    tentative_from_aggregates(&matching_to_aggregates(m), w)
}

/// Recovers the aggregation of a tentative prolongator (one entry per row).
pub fn aggregation_of(p_hat: &CsrMatrix) -> Result<AggregationMap> {
    let mut assign = Vec::with_capacity(p_hat.nrows());
    for i in 0..p_hat.nrows() {
        match p_hat.row(i).0 {
            [g] => assign.push(*g),
            cols => {
                return Err(Error::Malformed(format!(
                    "tentative prolongator row {i} has {} entries",
                    cols.len()
                )))
            }
        }
    }
    AggregationMap::from_assign(assign, p_hat.ncols())
}

/// `P = (I - omega D^{-1} A) P_hat` with `omega = 1 / ||D^{-1} A||_inf`.
pub fn smooth_prolongator(a: &CsrMatrix, p_hat: &Prolongator) -> Result<Prolongator> {
    if !a.is_square() || a.ncols() != p_hat.n_fine() {
        return Err(Error::DimensionMismatch(format!(
            "smoothing a {}x{} prolongator with a {}x{} matrix",
            p_hat.n_fine(),
            p_hat.n_coarse(),
            a.nrows(),
            a.ncols()
        )));
    }
    let diag = a.diagonal();
    if let Some(row) = diag.iter().position(|&d| d == 0.0) {
        return Err(Error::ZeroDiagonal { row });
    }
    let norm = (0..a.nrows())
        .map(|i| a.row(i).1.iter().map(|v| (v / diag[i]).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let omega = 1.0 / norm;

    // S = I - omega D^{-1} A on the pattern of A plus the diagonal
    let n = a.nrows();
    let mut t = Vec::with_capacity(a.nnz() + n);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i {
                t.push((i, j, -omega * v / diag[i]));
            }
        }
        t.push((i, i, 1.0 - omega));
    }
    let s = CsrMatrix::from_triplets(n, n, &t)?;
    let p = spgemm(&s, &p_hat.p)?;
    if p.values().iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroProlongator);
    }
    Ok(Prolongator { p, kind: ProlongatorKind::Smoothed, omega: Some(omega) })
}

/// `P^T A P`.
pub fn galerkin_product(a: &CsrMatrix, p: &CsrMatrix) -> Result<CsrMatrix> {
    let ap = spgemm(a, p)?;
    let mut c = spgemm(&transpose(p), &ap)?;
    c = c.with_symmetric_hint(a.symmetric_hint());
    Ok(c)
}

#[derive(Debug, Clone)]
pub struct Composition {
    /// Product of the per-round tentative prolongators.
    pub p_hat: Prolongator,
    /// `P_hat^T w`, the test vector for the coarse level.
    pub w_coarse: Vec<f64>,
    pub rounds: usize,
    /// A round found nothing to match and the composition stopped early.
    pub stalled: bool,
}

/// Composes `sweeps` rounds of weighted matching. Each round matches on the
/// current working matrix and test vector, then coarsens both with the
/// round's tentative prolongator; aggregate sizes stay below `2^sweeps`.
pub fn compose_pairwise(a: &CsrMatrix, w: &[f64], sweeps: usize) -> Result<Composition> {
    if sweeps == 0 {
        return Err(Error::Config("compose_pairwise needs at least one sweep".into()));
    }
    let mut work = a.clone();
    let mut w_work = w.to_vec();
    let mut composed: Option<CsrMatrix> = None;
    let mut rounds = 0;
    let mut stalled = false;
    for _ in 0..sweeps {
        let graph = build_edge_weights(&work, &w_work)?;
        let m = half_approx_matching(&graph);
        if m.pairs.is_empty() {
            stalled = true;
            break;
        }
        let round = build_tentative_prolongator(&m, &w_work)?;
        w_work = spmv(&transpose(&round.p), &w_work)?;
        work = galerkin_product(&work, &round.p)?;
        composed = Some(match composed {
            None => round.p,
            Some(c) => spgemm(&c, &round.p)?,
        });
        rounds += 1;
    }
    let p = composed.unwrap_or_else(|| CsrMatrix::identity(a.nrows()));
    Ok(Composition {
        p_hat: Prolongator { p, kind: ProlongatorKind::Tentative, omega: None },
        w_coarse: w_work,
        rounds,
        stalled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CoarseSizeReached,
    MaxLevels,
    /// Aggregation could not reduce the size any further.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct Level {
    pub a: CsrMatrix,
    pub p: Prolongator,
    pub(crate) r: CsrMatrix,
    pub aggregates: AggregationMap,
    pub owner: Vec<usize>,
    pub smoother: BlockSmoother,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AmgHierarchy {
    pub(crate) levels: Vec<Level>,
    pub(crate) coarsest: CsrMatrix,
    pub(crate) coarsest_owner: Vec<usize>,
    pub(crate) coarsest_w: Vec<f64>,
    pub(crate) coarse_solver: CoarseSolver,
    pub(crate) config: PreconditionerConfig,
    pub(crate) n_ranks: usize,
    pub(crate) stop_reason: StopReason,
    pub(crate) setup_seconds: f64,
}

fn check_spd_input(a: &CsrMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSpd(format!("matrix is {}x{}", a.nrows(), a.ncols())));
    }
    if let Some(i) = a.diagonal().iter().position(|&d| !(d > 0.0)) {
        return Err(Error::NotSpd(format!("non-positive diagonal at row {i}")));
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL * a.max_abs() {
        return Err(Error::NotSpd(format!("asymmetry {asym:e} exceeds tolerance")));
    }
    Ok(())
}

/// Builds the hierarchy with the constant test vector.
pub fn build_hierarchy(a: &CsrMatrix, part: &RankPartition, config: &PreconditionerConfig) -> Result<AmgHierarchy> {
    build_hierarchy_with_test_vector(a, part, config, &vec![1.0; a.nrows()])
}

pub fn build_hierarchy_with_test_vector(
    a: &CsrMatrix,
    part: &RankPartition,
    config: &PreconditionerConfig,
    w: &[f64],
) -> Result<AmgHierarchy> {
    let start = Instant::now();
    config.validate()?;
    if !config.label.is_amg() {
        return Err(Error::Config(format!("{} is not a multigrid preconditioner", config.label)));
    }
    check_spd_input(a)?;
    if part.n() != a.nrows() || w.len() != a.nrows() {
        return Err(Error::DimensionMismatch("partition or test vector does not match the matrix".into()));
    }
    let n_ranks = part.n_ranks();
    let threshold = config.coarse_size_per_rank * n_ranks;

    let mut levels = Vec::new();
    let mut a_l = a.clone();
    let mut owner_l = part.owner().to_vec();
    let mut w_l = w.to_vec();
    let stop_reason = loop {
        if a_l.nrows() <= threshold {
            break StopReason::CoarseSizeReached;
        }
        if levels.len() + 1 >= config.max_levels {
            break StopReason::MaxLevels;
        }
        let level_index = levels.len();
        let (p_hat, aggregates, coarse_owner, w_next) = match config.label {
            PrecLabel::Mlvsmatch3 | PrecLabel::Mlvsmatch4 => {
                let comp = compose_pairwise(&a_l, &w_l, config.matching_sweeps)?;
                let agg = aggregation_of(&comp.p_hat.p)?;
                let mut coarse_owner = vec![usize::MAX; agg.n_coarse];
                for (i, &g) in agg.assign.iter().enumerate() {
                    if coarse_owner[g] == usize::MAX {
                        coarse_owner[g] = owner_l[i];
                    }
                }
                (comp.p_hat, agg, coarse_owner, comp.w_coarse)
            }
            PrecLabel::Mlvsbm => {
                let part_l = RankPartition::from_owner(owner_l.clone(), n_ranks)?;
                let theta = config.theta.unwrap_or_else(|| default_theta(level_index));
                let (agg, coarse_owner) = decoupled_aggregation_global(&a_l, &part_l, theta)?;
                let p_hat = tentative_from_aggregates(&agg, &w_l)?;
                let w_next = spmv(&transpose(&p_hat.p), &w_l)?;
                (p_hat, agg, coarse_owner, w_next)
            }
            PrecLabel::Jacobi | PrecLabel::None => unreachable!("checked above"),
        };
        if aggregates.n_coarse >= a_l.nrows() {
            break StopReason::Stalled;
        }
        let p = smooth_prolongator(&a_l, &p_hat)?;
        let a_next = galerkin_product(&a_l, &p.p)?;
        let smoother = BlockSmoother::new(&a_l, &owner_l, config.smoother)?;
        let r = transpose(&p.p);
        let a_prev = std::mem::replace(&mut a_l, a_next);
        let owner_prev = std::mem::replace(&mut owner_l, coarse_owner);
        let w_prev = std::mem::replace(&mut w_l, w_next);
        levels.push(Level { a: a_prev, p, r, aggregates, owner: owner_prev, smoother, w: w_prev });
    };

    let coarse_solver = CoarseSolver::new(&a_l, &owner_l, n_ranks, &config.coarsest)?;
    Ok(AmgHierarchy {
        levels,
        coarsest: a_l,
        coarsest_owner: owner_l,
        coarsest_w: w_l,
        coarse_solver,
        config: config.clone(),
        n_ranks,
        stop_reason,
        setup_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub size: usize,
    pub nnz: usize,
    /// `histogram[s]` aggregates of size `s` were formed on this level; absent
    /// on the coarsest level.
    pub aggregate_size_histogram: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchySummary {
    pub label: PrecLabel,
    pub n_ranks: usize,
    pub n_levels: usize,
    pub operator_complexity: f64,
    pub stop_reason: StopReason,
    pub coarsest_method: CoarseMethod,
    pub levels: Vec<LevelSummary>,
    pub setup_seconds: f64,
}

impl AmgHierarchy {
    /// Number of levels including the coarsest.
    pub fn n_levels(&self) -> usize {
        self.levels.len() + 1
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// `A_l` for `l` in `0..n_levels()`.
    pub fn matrix(&self, l: usize) -> &CsrMatrix {
        if l == self.levels.len() {
            &self.coarsest
        } else {
            &self.levels[l].a
        }
    }

    pub fn prolongator(&self, l: usize) -> &Prolongator {
        &self.levels[l].p
    }

    pub fn owner(&self, l: usize) -> &[usize] {
        if l == self.levels.len() {
            &self.coarsest_owner
        } else {
            &self.levels[l].owner
        }
    }

    pub fn test_vector(&self, l: usize) -> &[f64] {
        if l == self.levels.len() {
            &self.coarsest_w
        } else {
            &self.levels[l].w
        }
    }

    pub fn coarsest(&self) -> &CsrMatrix {
        &self.coarsest
    }

    pub fn config(&self) -> &PreconditionerConfig {
        &self.config
    }

    pub fn n_ranks(&self) -> usize {
        self.n_ranks
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop_reason
    }

    pub fn setup_seconds(&self) -> f64 {
        self.setup_seconds
    }

    /// `sum_l nnz(A_l) / nnz(A_0)`.
    pub fn operator_complexity(&self) -> f64 {
        let total: usize = (0..self.n_levels()).map(|l| self.matrix(l).nnz()).sum();
        total as f64 / self.matrix(0).nnz().max(1) as f64
    }

    pub fn summary(&self) -> HierarchySummary {
        let levels = (0..self.n_levels())
            .map(|l| LevelSummary {
                level: l,
                size: self.matrix(l).nrows(),
                nnz: self.matrix(l).nnz(),
                aggregate_size_histogram: self.levels.get(l).map(|lv| lv.aggregates.size_histogram()),
            })
            .collect();
        HierarchySummary {
            label: self.config.label,
            n_ranks: self.n_ranks,
            n_levels: self.n_levels(),
            operator_complexity: self.operator_complexity(),
            stop_reason: self.stop_reason,
            coarsest_method: self.config.coarsest.method,
            levels,
            setup_seconds: self.setup_seconds,
        }
    }
}
