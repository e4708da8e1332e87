//! Solves a 3D Poisson problem with each preconditioner and prints iteration
//! counts.
//!
//! `cargo run --release --example poisson_solve -- 24`

use matching_amg::config::{PrecLabel, PreconditionerConfig};
use matching_amg::hierarchy::build_hierarchy;
use matching_amg::krylov::{cg_solve, fcg_solve, CgPreconditioner, SolveOptions};
use matching_amg::partition::RankPartition;
use matching_amg::problems::{gen_poisson, reference_solution};

fn main() -> matching_amg::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let (a, b) = gen_poisson(3, n)?;
    let exact = reference_solution(3, n)?;
    let x0 = vec![0.0; a.nrows()];
    let opts = SolveOptions::with_tol(1e-8, 2000);
    println!("poisson3d n={n} ({} unknowns)", a.nrows());
    for label in PrecLabel::ALL {
        let (x, report) = if label.is_amg() {
            let h = build_hierarchy(&a, &RankPartition::single(a.nrows()), &PreconditionerConfig::new(label))?;
            println!("  {label}: {} levels, operator complexity {:.2}", h.n_levels(), h.operator_complexity());
            fcg_solve(&a, &b, &h, &opts, &x0)?
        } else {
            let p = if label == PrecLabel::Jacobi { CgPreconditioner::Jacobi } else { CgPreconditioner::None };
            cg_solve(&a, &b, p, &opts, &x0)?
        };
        let err = x.iter().zip(&exact).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        println!(
            "  {label:<10} iterations {:>4}  converged {}  max error {err:.2e}  solve {:.3}s",
            report.iterations, report.converged, report.solve_seconds
        );
    }
    Ok(())
}
