//! Factors a 2D Laplacian with ILU(1), shows the fill, and uses the block
//! Jacobi version as a CG preconditioner.

use matching_amg::ilu::ilu1_factor;
use matching_amg::krylov::{pcg_solve, SolveOptions};
use matching_amg::partition::{make_partition, PartitionScheme};
use matching_amg::problems::gen_poisson;
use matching_amg::vcycle::BlockJacobiIlu;

fn main() -> matching_amg::Result<()> {
    let (a, b) = gen_poisson(2, 32)?;
    let f = ilu1_factor(&a)?;
    println!("A: {} nnz, L: {} nnz, U: {} nnz", a.nnz(), f.l().nnz(), f.u().nnz());
    for ranks in [1, 2, 8] {
        let part = make_partition(a.nrows(), ranks, PartitionScheme::Contiguous, None)?;
        let prec = BlockJacobiIlu::new(&a, &part, 1)?;
        let (_, rep) = pcg_solve(&a, &b, &prec, &SolveOptions::with_tol(1e-8, 500), &vec![0.0; a.nrows()])?;
        println!("{} blocks: {} iterations", prec.n_blocks(), rep.iterations);
    }
    Ok(())
}
