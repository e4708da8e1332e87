//! Preconditioner recipes.
//!
//! | label        | aggregation                          | max aggregate |
//! |--------------|--------------------------------------|---------------|
//! | `MLVSMATCH3` | coupled, 3 pairwise matching sweeps  | 8             |
//! | `MLVSMATCH4` | coupled, 4 pairwise matching sweeps  | 16            |
//! | `MLVSBM`     | decoupled classic smoothed aggregation | -           |
//!
//! All three use a V-cycle with 4 hybrid forward Gauss-Seidel pre-smoothing
//! sweeps, 4 hybrid backward post-smoothing sweeps, and FCG preconditioned by
//! block-Jacobi/ILU(1) on the coarsest level (relative tolerance 1e-3, at most
//! 30 iterations). `JACOBI` and `NONE` select plain CG.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoother::{SmootherKind, SmootherSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrecLabel {
    #[serde(rename = "MLVSMATCH3")]
    Mlvsmatch3,
    #[serde(rename = "MLVSMATCH4")]
    Mlvsmatch4,
    #[serde(rename = "MLVSBM")]
    Mlvsbm,
    #[serde(rename = "JACOBI")]
    Jacobi,
    #[serde(rename = "NONE")]
    None,
}

impl PrecLabel {
    pub const ALL: [PrecLabel; 5] =
        [PrecLabel::Mlvsmatch3, PrecLabel::Mlvsmatch4, PrecLabel::Mlvsbm, PrecLabel::Jacobi, PrecLabel::None];

    pub fn is_amg(self) -> bool {
        matches!(self, PrecLabel::Mlvsmatch3 | PrecLabel::Mlvsmatch4 | PrecLabel::Mlvsbm)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrecLabel::Mlvsmatch3 => "MLVSMATCH3",
            PrecLabel::Mlvsmatch4 => "MLVSMATCH4",
            PrecLabel::Mlvsbm => "MLVSBM",
            PrecLabel::Jacobi => "JACOBI",
            PrecLabel::None => "NONE",
        }
    }
}

impl fmt::Display for PrecLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrecLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PrecLabel::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preconditioner {s:?} (expected one of mlvsmatch3, mlvsmatch4, mlvsbm, jacobi, none)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseMethod {
    /// FCG preconditioned by block-Jacobi with ILU block solvers.
    Fcg,
    /// Dense Cholesky; exact, for analysis on small problems.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarsestSolverSpec {
    pub method: CoarseMethod,
    pub ilu_level: usize,
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for CoarsestSolverSpec {
    fn default() -> Self {
        Self { method: CoarseMethod::Fcg, ilu_level: 1, rel_tol: 1e-3, max_iters: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionerConfig {
    pub label: PrecLabel,
    /// Pairwise matching sweeps composed per level (aggregates up to
    /// `2^sweeps`). Ignored by `MLVSBM`.
    pub matching_sweeps: usize,
    /// Strength threshold for `MLVSBM`; `None` uses `0.08 * 0.5^level`.
    pub theta: Option<f64>,
    pub smoother: SmootherSpec,
    pub coarsest: CoarsestSolverSpec,
    pub max_levels: usize,
    /// Hierarchy stops once the coarse size is at most this times the rank
    /// count.
    pub coarse_size_per_rank: usize,
}

impl PreconditionerConfig {
    pub fn new(label: PrecLabel) -> Self {
        Self {
            label,
            matching_sweeps: match label {
                PrecLabel::Mlvsmatch4 => 4,
                _ => 3,
            },
            theta: None,
            smoother: SmootherSpec { kind: SmootherKind::HybridFgs, sweeps: 4, omega: 1.0 },
            coarsest: CoarsestSolverSpec::default(),
            max_levels: 20,
            coarse_size_per_rank: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.smoother.validate()?;
        if self.label.is_amg() {
            if self.matching_sweeps == 0 {
                return Err(Error::Config("matching sweeps must be at least 1".into()));
            }
            if self.max_levels == 0 || self.coarse_size_per_rank == 0 {
                return Err(Error::Config("max_levels and coarse_size_per_rank must be positive".into()));
            }
            if let Some(t) = self.theta {
                if !(0.0..1.0).contains(&t) {
                    return Err(Error::Config(format!("theta {t} outside [0, 1)")));
                }
            }
            if !(self.coarsest.rel_tol > 0.0) || self.coarsest.max_iters == 0 {
                return Err(Error::Config("coarsest solver needs positive tolerance and iterations".into()));
            }
        }
        Ok(())
    }

    /// Upper bound on aggregate size implied by the recipe, if any.
    pub fn aggregate_bound(&self) -> Option<usize> {
        matches!(self.label, PrecLabel::Mlvsmatch3 | PrecLabel::Mlvsmatch4).then(|| 1 << self.matching_sweeps)
    }
}
