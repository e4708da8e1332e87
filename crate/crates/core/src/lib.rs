//! Algebraic multigrid preconditioners built on compatible weighted matching,
//! together with the sparse kernels, a simulated row-block rank model, Krylov
//! drivers and a Poisson scaling bench.
//!
//! ```
//! use matching_amg::config::{PrecLabel, PreconditionerConfig};
//! use matching_amg::hierarchy::build_hierarchy;
//! use matching_amg::krylov::{fcg_solve, SolveOptions};
//! use matching_amg::partition::RankPartition;
//! use matching_amg::problems::gen_poisson;
//!
//! let (a, b) = gen_poisson(2, 24).unwrap();
//! let part = RankPartition::single(a.nrows());
//! let h = build_hierarchy(&a, &part, &PreconditionerConfig::new(PrecLabel::Mlvsmatch3)).unwrap();
//! let (_x, report) = fcg_solve(&a, &b, &h, &SolveOptions::with_tol(1e-8, 100), &vec![0.0; a.nrows()]).unwrap();
//! assert!(report.converged);
//! ```

pub mod aggregation;
pub mod cli;
pub mod config;
pub mod dense;
pub mod error;
pub mod hierarchy;
pub mod ilu;
pub mod krylov;
pub mod matching;
pub mod mtx;
pub mod partition;
pub mod problems;
pub mod smoother;
pub mod sparse;
pub mod study;
pub mod vcycle;

pub use error::{Error, Result};
