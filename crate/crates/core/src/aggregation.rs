//! Decoupled classic smoothed aggregation: every rank aggregates its own
//! diagonal block, so aggregates never cross rank boundaries.

use crate::error::{Error, Result};
use crate::matching::AggregationMap;
use crate::partition::RankPartition;
use crate::sparse::CsrMatrix;

/// Strength threshold used at level `level` when none is configured.
pub fn default_theta(level: usize) -> f64 {
    0.08 * 0.5f64.powi(level as i32)
}

/// Greedy three-pass aggregation of one square block.
///
/// Strong neighbours of `i` are the `j != i` with
/// `|a_ij| >= theta * sqrt(a_ii a_jj)`. Pass one makes an aggregate of every
/// vertex whose whole strong neighbourhood is still free; pass two attaches
/// each leftover vertex to the pass-one aggregate it is most strongly tied to;
/// pass three groups whatever remains with its free strong neighbours.
/// Returns `(assign, n_aggregates)` in local numbering.
pub fn aggregate_block(a: &CsrMatrix, theta: f64) -> Result<(Vec<usize>, usize)> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::Config(format!("strength threshold {theta} outside [0, 1)")));
    }
    let n = a.nrows();
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| d <= 0.0) {
        return Err(Error::NotSpd(format!("non-positive diagonal at local row {i}")));
    }
    let strong: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let (cols, vals) = a.row(i);
            cols.iter()
                .zip(vals)
                .filter_map(|(&j, &v)| {
                    let scale = (diag[i] * diag[j]).sqrt();
                    (j != i && v != 0.0 && v.abs() >= theta * scale).then_some((j, v.abs() / scale))
                })
                .collect()
        })
        .collect();

    const FREE: usize = usize::MAX;
    let mut assign = vec![FREE; n];
    let mut n_agg = 0;

    for i in 0..n {
        if assign[i] == FREE && strong[i].iter().all(|&(j, _)| assign[j] == FREE) {
            assign[i] = n_agg;
            for &(j, _) in &strong[i] {
                assign[j] = n_agg;
            }
            n_agg += 1;
        }
    }

    let after_first = assign.clone();
    for i in 0..n {
        if assign[i] != FREE {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for &(j, s) in &strong[i] {
            let g = after_first[j];
            if g == FREE {
                continue;
            }
            best = match best {
                Some((bs, bg)) if bs > s || (bs == s && bg <= g) => Some((bs, bg)),
                _ => Some((s, g)),
            };
        }
        if let Some((_, g)) = best {
            assign[i] = g;
        }
    }

    for i in 0..n {
        if assign[i] != FREE {
            continue;
        }
        assign[i] = n_agg;
        for &(j, _) in &strong[i] {
            if assign[j] == FREE {
                assign[j] = n_agg;
            }
        }
        n_agg += 1;
    }
    Ok((assign, n_agg))
}

/// Aggregates every rank-local block independently. Fine indices are the
/// local indices of block 0, then block 1, and so on; coarse ids are numbered
/// rank by rank in the same way.
pub fn decoupled_smoothed_aggregation(blocks: &[CsrMatrix], theta: f64) -> Result<AggregationMap> {
    let mut assign = Vec::new();
    let mut offset = 0;
    for b in blocks {
        let (local, count) = aggregate_block(b, theta)?;
        assign.extend(local.into_iter().map(|g| g + offset));
        offset += count;
    }
    AggregationMap::from_assign(assign, offset)
}

/// Decoupled aggregation of a globally indexed matrix under `part`. Returns
/// the aggregation over global indices and the owning rank of every
/// aggregate.
pub fn decoupled_aggregation_global(
    a: &CsrMatrix,
    part: &RankPartition,
    theta: f64,
) -> Result<(AggregationMap, Vec<usize>)> {
    let blocks = part.diagonal_blocks(a);
    let mut assign = vec![0usize; a.nrows()];
    let mut owners = Vec::new();
    for (p, b) in blocks.iter().enumerate() {
        let (local, count) = aggregate_block(b, theta)?;
        let offset = owners.len();
        for (k, &g) in local.iter().enumerate() {
            assign[part.local_rows(p)[k]] = g + offset;
        }
        owners.extend(std::iter::repeat_n(p, count));
    }
    let n_coarse = owners.len();
    Ok((AggregationMap::from_assign(assign, n_coarse)?, owners))
}
