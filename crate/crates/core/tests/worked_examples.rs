mod common;

use common::{a_norm, max_diff, random_spd, triple_product};
use matching_amg::config::{PrecLabel, PreconditionerConfig};
use matching_amg::dense::{self, to_dense};
use matching_amg::hierarchy::{
    build_hierarchy, compose_pairwise, smooth_prolongator, tentative_from_aggregates, ProlongatorKind,
};
use matching_amg::krylov::{cg_solve, fcg_solve, CgPreconditioner, SolveOptions};
use matching_amg::matching::{build_edge_weights, AggregationMap};
use matching_amg::partition::{assemble_full_rows, discover_halo, make_partition, PartialRowMatrix, PartitionScheme};
use matching_amg::problems::{gen_poisson, poisson_matrix};
use matching_amg::smoother::{hybrid_gs_apply, Direction, SmootherKind, SmootherSpec};
use matching_amg::sparse::{spgemm, spmv, transpose, CsrMatrix};
use matching_amg::vcycle::v_cycle_apply;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn edge_weights_match_dense_formula() {
    let (a, _) = random_spd(3, 12);
    let d = to_dense(&a);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let w: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(0.5..2.0)).collect();
    let g = build_edge_weights(&a, &w).unwrap();
    let mut seen = 0;
    for e in g.edges() {
        let (i, j) = (e.i, e.j);
        let num = 2.0 * d[(i, j)] * w[i] * w[j];
        let den = d[(i, i)] * w[i] * w[i] + d[(j, j)] * w[j] * w[j];
        assert!(rel(e.weight, 1.0 - num / den) < 1e-14, "edge ({i},{j})");
        seen += 1;
    }
    let off = (0..a.nrows())
        .flat_map(|i| (i + 1..a.nrows()).map(move |j| (i, j)))
        .filter(|&(i, j)| d[(i, j)] != 0.0)
        .count();
    assert_eq!(seen, off);
}

#[test]
fn tridiag_squared_is_pentadiagonal() {
    let a = poisson_matrix(1, 3).unwrap();
    let a2 = spgemm(&a, &a).unwrap();
    let d = to_dense(&a);
    let oracle = &d * &d;
    assert_eq!(a2.diagonal(), vec![5.0, 6.0, 5.0]);
    assert_eq!(to_dense(&a2), oracle);
}

#[test]
fn three_sweeps_bound_aggregates_by_eight() {
    let a = poisson_matrix(1, 64).unwrap();
    let w = vec![1.0; 64];
    let c3 = compose_pairwise(&a, &w, 3).unwrap();
    let agg3 = matching_amg::hierarchy::aggregation_of(&c3.p_hat.p).unwrap();
    assert!(agg3.n_coarse >= 8);
    assert!(agg3.max_size() <= 8);
    let c4 = compose_pairwise(&a, &w, 4).unwrap();
    let agg4 = matching_amg::hierarchy::aggregation_of(&c4.p_hat.p).unwrap();
    assert!(agg4.max_size() <= 16);
    assert!(agg4.n_coarse <= agg3.n_coarse);
}

#[test]
fn poisson_hierarchy_is_galerkin_and_shrinks() {
    let (a, _) = gen_poisson(3, 16).unwrap();
    let part = make_partition(a.nrows(), 1, PartitionScheme::Contiguous, None).unwrap();
    let h = build_hierarchy(&a, &part, &PreconditionerConfig::new(PrecLabel::Mlvsmatch3)).unwrap();
    assert!(h.n_levels() >= 2);
    for l in 0..h.n_levels() - 1 {
        let (fine, p) = (h.matrix(l), &h.prolongator(l).p);
        let coarse = h.matrix(l + 1);
        assert!(coarse.nrows() < fine.nrows());
        let oracle = triple_product(fine, p);
        assert!(max_diff(coarse, &oracle) <= 1e-12 * oracle.max_abs(), "level {l}");
    }
}

#[test]
fn four_sweeps_coarsen_at_least_as_fast_as_three() {
    let (a, _) = gen_poisson(3, 16).unwrap();
    let part = make_partition(a.nrows(), 1, PartitionScheme::Contiguous, None).unwrap();
    let h3 = build_hierarchy(&a, &part, &PreconditionerConfig::new(PrecLabel::Mlvsmatch3)).unwrap();
    let h4 = build_hierarchy(&a, &part, &PreconditionerConfig::new(PrecLabel::Mlvsmatch4)).unwrap();
    let ratio = |h: &matching_amg::hierarchy::AmgHierarchy| h.matrix(0).nrows() as f64 / h.matrix(1).nrows() as f64;
    assert!(ratio(&h4) >= ratio(&h3));
}

#[test]
fn smoothed_prolongator_matches_dense_formula() {
    let a = poisson_matrix(1, 4).unwrap();
    let agg = AggregationMap::from_assign(vec![0, 0, 1, 1], 2).unwrap();
    let p_hat = tentative_from_aggregates(&agg, &[1.0; 4]).unwrap();
    let p = smooth_prolongator(&a, &p_hat).unwrap();
    assert_eq!(p.kind, ProlongatorKind::Smoothed);

    let d = to_dense(&a);
    let dinv = DMatrix::from_diagonal(&d.diagonal().map(|x| 1.0 / x));
    let da = &dinv * &d;
    let norm_inf = (0..4).map(|i| da.row(i).iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let omega = 1.0 / norm_inf;
    assert!(rel(p.omega.unwrap(), omega) < 1e-15);
    let oracle = (DMatrix::identity(4, 4) - da * omega) * to_dense(&p_hat.p);
    assert!((to_dense(&p.p) - oracle).abs().max() < 1e-15);
}

#[test]
fn two_rank_hybrid_gs_is_block_diagonal_solve() {
    let a = poisson_matrix(1, 8).unwrap();
    let part = make_partition(8, 2, PartitionScheme::Contiguous, None).unwrap();
    let spec = SmootherSpec { kind: SmootherKind::HybridFgs, sweeps: 1, omega: 1.0 };
    let r: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
    let z = hybrid_gs_apply(&a, &part, &spec, &r, Direction::Forward).unwrap();

    let d = to_dense(&a);
    let mut m = DMatrix::zeros(8, 8);
    for i in 0..8 {
        for j in 0..=i {
            if part.owner_of(i) == part.owner_of(j) {
                m[(i, j)] = d[(i, j)];
            }
        }
    }
    let oracle = dense::solve(&m, &r).unwrap();
    for (x, y) in z.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn cg_reaches_dense_solution() {
    let a = poisson_matrix(1, 32).unwrap();
    let b: Vec<f64> = (0..32).map(|i| 1.0 + i as f64 / 32.0).collect();
    let (x, rep) = cg_solve(&a, &b, CgPreconditioner::None, &SolveOptions::with_tol(1e-12, 100), &vec![0.0; 32]).unwrap();
    assert!(rep.converged);
    let oracle = dense::solve(&to_dense(&a), &b).unwrap();
    let err: Vec<f64> = x.iter().zip(&oracle).map(|(u, v)| u - v).collect();
    assert!(a_norm(&a, &err) <= 1e-9 * a_norm(&a, &oracle));
}

#[test]
fn amg_fcg_converges_quickly_on_poisson3d() {
    let (a, b) = gen_poisson(3, 16).unwrap();
    let part = make_partition(a.nrows(), 1, PartitionScheme::Contiguous, None).unwrap();
    let h = build_hierarchy(&a, &part, &PreconditionerConfig::new(PrecLabel::Mlvsmatch3)).unwrap();
    let (_, rep) = fcg_solve(&a, &b, &h, &SolveOptions::with_tol(1e-6, 200), &vec![0.0; a.nrows()]).unwrap();
    assert!(rep.converged);
    assert!(rep.iterations <= 20, "{} iterations", rep.iterations);
}

#[test]
fn coarsest_only_hierarchy_applies_coarse_solver() {
    let a = poisson_matrix(1, 50).unwrap();
    let part = make_partition(50, 1, PartitionScheme::Contiguous, None).unwrap();
    let mut cfg = PreconditionerConfig::new(PrecLabel::Mlvsmatch3);
    cfg.coarsest.method = matching_amg::config::CoarseMethod::Exact;
    let h = build_hierarchy(&a, &part, &cfg).unwrap();
    assert_eq!(h.n_levels(), 1);
    let r: Vec<f64> = (0..50).map(|i| (i % 7) as f64 - 3.0).collect();
    let z = v_cycle_apply(&h, &r).unwrap();
    let oracle = dense::solve(&to_dense(&a), &r).unwrap();
    for (x, y) in z.iter().zip(&oracle) {
        assert!((x - y).abs() < 1e-10 * (1.0 + y.abs()));
    }
}

#[test]
fn tentative_prolongator_reproduces_test_vector_on_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let w: Vec<f64> = (0..6).map(|_| rng.gen_range(0.2..3.0)).collect();
    let agg = AggregationMap::from_assign(vec![0, 0, 1, 1, 2, 2], 3).unwrap();
    let p = tentative_from_aggregates(&agg, &w).unwrap();
    let pt = transpose(&p.p);
    let coeffs = spmv(&pt, &w).unwrap();
    let back = spmv(&p.p, &coeffs).unwrap();
    for (x, y) in back.iter().zip(&w) {
        assert!((x - y).abs() < 1e-14);
    }
    let ptp = spgemm(&pt, &p.p).unwrap();
    assert!(max_diff(&ptp, &CsrMatrix::identity(3)) < 1e-15);
}

#[test]
fn split_element_assembly_matches_global_tridiag() {
    let part = make_partition(5, 2, PartitionScheme::Contiguous, None).unwrap();
    let mut per_rank: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(), Vec::new()];
    for e in 0..4 {
        let owner = part.owner_of(e);
        for (i, j, v) in [(e, e, 1.0), (e, e + 1, -1.0), (e + 1, e, -1.0), (e + 1, e + 1, 1.0)] {
            per_rank[owner].push((i, j, v));
        }
    }
    per_rank[0].push((0, 0, 1.0));
    per_rank[part.owner_of(4)].push((4, 4, 1.0));
    let pm = PartialRowMatrix::from_rank_triplets(5, &per_rank).unwrap();
    let part = discover_halo(&pm, &part).unwrap();
    let full = assemble_full_rows(&pm, &part).unwrap().to_global();
    assert_eq!(full, poisson_matrix(1, 5).unwrap());
}

#[test]
fn cli_identity_solve_takes_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("id3.mtx");
    std::fs::write(&mtx, "%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n").unwrap();
    let out = dir.path().join("report.json");
    let code = matching_amg::cli::cli_main([
        "amgbench",
        "solve",
        "--matrix",
        mtx.to_str().unwrap(),
        "--prec",
        "none",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["iterations"], 1);
    assert_eq!(report["converged"], true);
}

#[test]
fn cli_bench_on_four_ranks_converges() {
    let dir = tempfile::tempdir().unwrap();
    let code = matching_amg::cli::cli_main([
        "amgbench",
        "bench",
        "--problem",
        "poisson3d",
        "--n",
        "16",
        "--prec",
        "mlvsmatch3",
        "--ranks",
        "4",
        "--tol",
        "1e-6",
        "--steps",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["cells"][0]["converged"], true);
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("config,problem,n,ranks,step,iters,solve_s,setup_s"));
    assert_eq!(csv.lines().count(), 3);
}
