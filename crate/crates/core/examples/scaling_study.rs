//! Runs a small strong-scaling study and writes the CSV table to stdout.
//! Ranks are simulated in one process, so times do not shrink with ranks.

use matching_amg::config::{PrecLabel, PreconditionerConfig};
use matching_amg::problems::ProblemKind;
use matching_amg::study::{run_study, StudySpec};

fn main() -> matching_amg::Result<()> {
    let spec = StudySpec {
        problem: ProblemKind::Poisson3d,
        sizes: vec![16, 20],
        ranks: vec![1, 2, 4],
        tol: 1e-6,
        time_steps: 3,
        ..Default::default()
    };
    let configs: Vec<_> = [PrecLabel::Mlvsmatch3, PrecLabel::Mlvsbm].into_iter().map(PreconditionerConfig::new).collect();
    let report = run_study(&spec, &configs)?;
    for c in &report.cells {
        eprintln!(
            "{:<10} n={:<3} ranks={} avg iters {:.2} speedup {:.2}",
            c.config, c.n, c.ranks, c.avg_iterations, c.speedup.unwrap_or(f64::NAN)
        );
    }
    report.write_csv(std::io::stdout())?;
    Ok(())
}
