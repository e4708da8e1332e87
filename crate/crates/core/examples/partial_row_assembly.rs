//! Builds a 2D Poisson matrix from per-rank element contributions, exchanges
//! the off-rank rows and checks the result against the global assembly.

use matching_amg::partition::{assemble_full_rows, discover_halo, make_partition, PartitionScheme};
use matching_amg::problems::{grid_dims, poisson_matrix, poisson_partial_rows};

fn main() -> matching_amg::Result<()> {
    let (n, ranks) = (16, 4);
    let dims = grid_dims(2, n)?;
    let part = make_partition(n * n, ranks, PartitionScheme::SfcMorton, Some(&dims))?;
    let pm = poisson_partial_rows(2, n, &part)?;
    let part = discover_halo(&pm, &part)?;
    for r in 0..ranks {
        println!("rank {r}: {} rows, {} halo contributions", part.local_rows(r).len(), part.halo_map(r).len());
    }
    for m in part.discovery_messages() {
        println!("  {:?} {} -> {}: {} entries", m.phase, m.from, m.to, m.entries);
    }
    let full = assemble_full_rows(&pm, &part)?;
    let same = full.to_global() == poisson_matrix(2, n)?;
    println!("assembled matrix equals global assembly: {same}");

    // A values-only update reuses the discovered halo.
    let scaled: Vec<Vec<f64>> =
        (0..ranks).map(|r| pm.fragment(r).values().iter().map(|v| 2.0 * v).collect()).collect();
    let pm2 = pm.with_values(scaled)?;
    assert_eq!(pm2.structure_fingerprint(), pm.structure_fingerprint());
    let full2 = assemble_full_rows(&pm2, &part)?;
    println!("values-only update: max entry {}", full2.to_global().max_abs());
    Ok(())
}
