//! Writes a Poisson matrix in MatrixMarket form, reads it back and solves
//! with it.
//!
//! `cargo run --example matrix_market_io -- out.mtx`

use matching_amg::config::{PrecLabel, PreconditionerConfig};
use matching_amg::hierarchy::build_hierarchy;
use matching_amg::krylov::{fcg_solve, SolveOptions};
use matching_amg::mtx::{read_matrix_market_file, write_matrix_market_file, MtxSymmetry};
use matching_amg::partition::RankPartition;
use matching_amg::problems::poisson_matrix;

fn main() -> matching_amg::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| std::env::temp_dir().join("poisson2d.mtx").display().to_string());
    let a = poisson_matrix(2, 40)?;
    write_matrix_market_file(&a, MtxSymmetry::Symmetric, &path)?;
    let back = read_matrix_market_file(&path)?;
    println!("wrote {path}: {}x{} with {} stored entries, round trip exact: {}", back.nrows(), back.ncols(), back.nnz(), back == a);
    let h = build_hierarchy(&back, &RankPartition::single(back.nrows()), &PreconditionerConfig::new(PrecLabel::Mlvsmatch4))?;
    let b = vec![1.0; back.nrows()];
    let (_, rep) = fcg_solve(&back, &b, &h, &SolveOptions::with_tol(1e-8, 200), &vec![0.0; back.nrows()])?;
    println!("MLVSMATCH4: {} iterations", rep.iterations);
    Ok(())
}
