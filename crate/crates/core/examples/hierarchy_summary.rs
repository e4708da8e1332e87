//! Prints the level sizes and aggregate statistics of the three AMG
//! hierarchies on a 3D Poisson matrix.

use matching_amg::config::{PrecLabel, PreconditionerConfig};
use matching_amg::hierarchy::build_hierarchy;
use matching_amg::partition::{make_partition, PartitionScheme};
use matching_amg::problems::{grid_dims, poisson_matrix};

fn main() -> matching_amg::Result<()> {
    let n = 24;
    let a = poisson_matrix(3, n)?;
    let part = make_partition(a.nrows(), 2, PartitionScheme::SfcMorton, Some(&grid_dims(3, n)?))?;
    for label in [PrecLabel::Mlvsmatch3, PrecLabel::Mlvsmatch4, PrecLabel::Mlvsbm] {
        let h = build_hierarchy(&a, &part, &PreconditionerConfig::new(label))?;
        let s = h.summary();
        println!("{label}: {} levels, OC {:.3}, stop {:?}", s.n_levels, s.operator_complexity, s.stop_reason);
        for l in &s.levels {
            println!("  level {}: {:>6} rows {:>8} nnz  aggregates {:?}", l.level, l.size, l.nnz, l.aggregate_size_histogram);
        }
    }
    Ok(())
}
