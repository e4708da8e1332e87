//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use matching_amg::matching::WeightedGraph;
use matching_amg::sparse::CsrMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Best total `ln c` over all matchings, by exhaustive enumeration.
pub fn brute_force_matching_weight(g: &WeightedGraph) -> f64 {
    let n = g.n_vertices();
    let mut w = vec![vec![None; n]; n];
    for e in g.edges() {
        if e.weight > 1.0 {
            w[e.i][e.j] = Some(e.weight.ln());
            w[e.j][e.i] = Some(e.weight.ln());
        }
    }
    fn go(v: usize, used: &mut [bool], w: &[Vec<Option<f64>>]) -> f64 {
        let n = used.len();
        let Some(v) = (v..n).find(|&u| !used[u]) else { return 0.0 };
        used[v] = true;
        let mut best = go(v + 1, used, w);
        for u in v + 1..n {
            if let (false, Some(x)) = (used[u], w[v][u]) {
                used[u] = true;
                best = best.max(x + go(v + 1, used, w));
                used[u] = false;
            }
        }
        used[v] = false;
        best
    }
    go(0, &mut vec![false; n], &w)
}

fn to_map(a: &CsrMatrix) -> HashMap<(usize, usize), f64> {
    a.iter().map(|(i, j, v)| ((i, j), v)).collect()
}

/// Entrywise `max |a - b|` over the union of both patterns.
pub fn max_diff(a: &CsrMatrix, b: &CsrMatrix) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let (ma, mb) = (to_map(a), to_map(b));
    ma.keys()
        .chain(mb.keys())
        .map(|k| (ma.get(k).copied().unwrap_or(0.0) - mb.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

/// `P^T A P` by row-wise map accumulation.
pub fn triple_product(a: &CsrMatrix, p: &CsrMatrix) -> CsrMatrix {
    let mut ap: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); a.nrows()];
    for (i, k, v) in a.iter() {
        let (cols, vals) = p.row(k);
        for (&c, &pv) in cols.iter().zip(vals) {
            *ap[i].entry(c).or_insert(0.0) += v * pv;
        }
    }
    let mut out: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, r, pv) in p.iter() {
        for (&c, &v) in &ap[i] {
            *out.entry((r, c)).or_insert(0.0) += pv * v;
        }
    }
    let t: Vec<(usize, usize, f64)> = out.into_iter().map(|((r, c), v)| (r, c, v)).collect();
    CsrMatrix::from_triplets(p.ncols(), p.ncols(), &t).unwrap()
}

/// `sqrt(x^T A x)`.
pub fn a_norm(a: &CsrMatrix, x: &[f64]) -> f64 {
    a.iter().map(|(i, j, v)| x[i] * v * x[j]).sum::<f64>().max(0.0).sqrt()
}

/// Kept ILU(k) pattern by dense level-of-fill simulation.
pub fn dense_fill_levels(a: &CsrMatrix, k: usize) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let inf = usize::MAX / 4;
    let mut lev = vec![vec![inf; n]; n];
    for (i, j, _) in a.iter() {
        lev[i][j] = 0;
    }
    for (i, row) in lev.iter_mut().enumerate() {
        row[i] = 0;
    }
    for i in 0..n {
        for p in 0..i {
            if lev[i][p] > k {
                continue;
            }
            for j in p + 1..n {
                let cand = lev[i][p] + lev[p][j] + 1;
                if cand < lev[i][j] {
                    lev[i][j] = cand;
                }
            }
        }
        for j in 0..n {
            if lev[i][j] > k {
                lev[i][j] = inf;
            }
        }
    }
    lev.iter().map(|row| (0..n).filter(|&j| row[j] <= k).collect()).collect()
}

/// Sparse symmetric diagonally dominant matrix of size at most `max_n` and a
/// random right-hand side.
pub fn random_spd(seed: u64, max_n: usize) -> (CsrMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(10..=max_n);
    let mut t = Vec::new();
    let mut row_sum = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(4.0 / n as f64) {
                let v: f64 = -rng.gen_range(0.1..1.0);
                t.push((i, j, v));
                t.push((j, i, v));
                row_sum[i] += v.abs();
                row_sum[j] += v.abs();
            }
        }
    }
    for (i, s) in row_sum.iter().enumerate() {
        t.push((i, i, s + rng.gen_range(0.05..2.0)));
    }
    let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
    let b = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (a, b)
}

const TIMING_KEYS: &[&str] =
    &["setup_seconds", "solve_seconds", "total_solve_seconds", "time_per_iteration", "speedup", "scaled_speedup"];

/// Removes wall-clock derived fields from a report.
pub fn strip_timings(v: Value) -> Value {
    match v {
        Value::Object(map) => Value::Object(
            map.into_iter()
                .filter(|(k, _)| !TIMING_KEYS.contains(&k.as_str()))
                .map(|(k, v)| (k, strip_timings(v)))
                .collect(),
        ),
        Value::Array(items) => Value::Array(items.into_iter().map(strip_timings).collect()),
        other => other,
    }
}
