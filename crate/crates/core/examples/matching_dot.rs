//! Computes the weighted matching of a small 2D Laplacian and prints it in
//! Graphviz DOT form; matched edges are drawn bold.
//!
//! `cargo run --example matching_dot | dot -Tsvg > matching.svg`

use matching_amg::matching::{build_edge_weights, half_approx_matching};
use matching_amg::problems::poisson_matrix;

fn main() -> matching_amg::Result<()> {
    let a = poisson_matrix(2, 6)?;
    let w: Vec<f64> = (0..a.nrows()).map(|i| 1.0 + 0.1 * (i % 5) as f64).collect();
    let graph = build_edge_weights(&a, &w)?;
    let m = half_approx_matching(&graph);
    eprintln!("{} pairs, {} singletons", m.pairs.len(), m.singletons.len());
    print!("{}", graph.to_dot(Some(&m)));
    Ok(())
}
