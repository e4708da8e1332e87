//! Strong and weak scaling studies over simulated ranks.
//!
//! Every cell assembles the problem through the partial-row to full-row path,
//! builds the preconditioner once, then solves `time_steps` systems whose
//! right-hand sides differ by seeded smooth perturbations, each warm-started
//! from the previous solution.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{PrecLabel, PreconditionerConfig};
use crate::error::{Error, Result};
use crate::hierarchy::build_hierarchy;
use crate::krylov::{cg_solve, fcg_solve, CgPreconditioner, SolveOptions, SolveReport};
use crate::partition::{assemble_full_rows, discover_halo, make_partition, PartitionScheme};
use crate::problems::{grid_dims, poisson_partial_rows, reference_solution, rhs_perturbation, ProblemKind};
use crate::sparse::{norm2, spmv};

/// Header of the per-step CSV output.
pub const CSV_HEADER: &str = "config,problem,n,ranks,step,iters,solve_s,setup_s";

/// Label written into reports to make clear time steps are emulated.
pub const RHS_MODEL: &str = "seeded smooth rhs perturbation per step, warm start from previous step";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyMode {
    /// Every size is run at every rank count.
    Strong,
    /// `sizes[k]` is run at `ranks[k]`; unknowns per rank must match.
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySpec {
    pub mode: StudyMode,
    pub problem: ProblemKind,
    /// Points per side.
    pub sizes: Vec<usize>,
    pub ranks: Vec<usize>,
    pub tol: f64,
    pub max_iters: usize,
    pub time_steps: usize,
    pub seed: u64,
    pub partition: PartitionScheme,
    /// Perturbation size relative to `||b0||`.
    pub perturbation: f64,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            mode: StudyMode::Strong,
            problem: ProblemKind::Poisson3d,
            sizes: vec![16],
            ranks: vec![1],
            tol: 1e-3,
            max_iters: 1000,
            time_steps: 20,
            seed: 42,
            partition: PartitionScheme::Contiguous,
            perturbation: 1e-2,
        }
    }
}

impl StudySpec {
    /// `(n, ranks)` pairs in run order.
    pub fn cells(&self) -> Result<Vec<(usize, usize)>> {
        if self.sizes.is_empty() || self.ranks.is_empty() {
            return Err(Error::Config("study needs at least one size and one rank count".into()));
        }
        if !(self.tol > 0.0) || self.time_steps == 0 || self.max_iters == 0 {
            return Err(Error::Config("study needs positive tol, time_steps and max_iters".into()));
        }
        if self.ranks.contains(&0) {
            return Err(Error::Config("rank counts must be positive".into()));
        }
        let dim = self.problem.dim();
        for &n in &self.sizes {
            grid_dims(dim, n)?;
        }
        match self.mode {
            StudyMode::Strong => Ok(self.sizes.iter().flat_map(|&n| self.ranks.iter().map(move |&p| (n, p))).collect()),
            StudyMode::Weak => {
                if self.sizes.len() != self.ranks.len() {
                    return Err(Error::Config("weak study pairs sizes with ranks; lengths differ".into()));
                }
                let cells: Vec<(usize, usize)> = self.sizes.iter().copied().zip(self.ranks.iter().copied()).collect();
                let per_rank = |(n, p): (usize, usize)| (n.pow(dim as u32), p);
                let (t0, p0) = per_rank(cells[0]);
                for &c in &cells[1..] {
                    let (t, p) = per_rank(c);
                    if t * p0 != t0 * p {
                        return Err(Error::Config(format!(
                            "weak study: {}^{dim} on {} ranks does not keep unknowns per rank fixed",
                            c.0, c.1
                        )));
                    }
                }
                Ok(cells)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub step: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_relative_residual: f64,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub config: PrecLabel,
    pub problem: ProblemKind,
    pub n: usize,
    pub n_rows: usize,
    pub ranks: usize,
    pub n_levels: usize,
    pub operator_complexity: f64,
    pub steps: Vec<StepResult>,
    pub total_iterations: usize,
    pub avg_iterations: f64,
    pub converged: bool,
    /// Set when the cell could not be run at all.
    pub error: Option<String>,
    pub setup_seconds: f64,
    pub total_solve_seconds: f64,
    pub time_per_iteration: f64,
    /// `T_{p_min} / T_p` within the cell's comparison group.
    pub speedup: Option<f64>,
    /// `(p / p_min) * T_{p_min} / T_p`.
    pub scaled_speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub spec: StudySpec,
    pub rhs_model: String,
    pub cells: Vec<CellResult>,
}

/// Runs one cell. Only input errors are returned; solver failures are
/// recorded in the result.
pub fn run_cell(spec: &StudySpec, config: &PreconditionerConfig, n: usize, ranks: usize) -> Result<CellResult> {
    config.validate()?;
    let dim = spec.problem.dim();
    let grid = grid_dims(dim, n)?;
    let total: usize = grid.iter().product();
    let part = make_partition(total, ranks, spec.partition, Some(&grid))?;
    let pm = poisson_partial_rows(dim, n, &part)?;
    let part = discover_halo(&pm, &part)?;
    let a = assemble_full_rows(&pm, &part)?.to_global().with_symmetric_hint(true);
    let b0 = spmv(&a, &reference_solution(dim, n)?)?;
    let b0_norm = norm2(&b0);

    let mut cell = CellResult {
        config: config.label,
        problem: spec.problem,
        n,
        n_rows: total,
        ranks,
        n_levels: 0,
        operator_complexity: 1.0,
        steps: Vec::with_capacity(spec.time_steps),
        total_iterations: 0,
        avg_iterations: 0.0,
        converged: false,
        error: None,
        setup_seconds: 0.0,
        total_solve_seconds: 0.0,
        time_per_iteration: 0.0,
        speedup: None,
        scaled_speedup: None,
    };

    let opts = SolveOptions::with_tol(spec.tol, spec.max_iters);
    let setup_start = Instant::now();
    let hierarchy = if config.label.is_amg() {
        match build_hierarchy(&a, &part, config) {
            Ok(h) => {
                cell.n_levels = h.n_levels();
                cell.operator_complexity = h.operator_complexity();
                Some(h)
            }
            Err(e) => {
                cell.error = Some(e.to_string());
                return Ok(cell);
            }
        }
    } else {
        None
    };
    cell.setup_seconds = setup_start.elapsed().as_secs_f64();

    let mut x = vec![0.0; total];
    for step in 0..spec.time_steps {
        let delta = rhs_perturbation(dim, n, spec.seed, step, spec.perturbation, b0_norm)?;
        let b: Vec<f64> = b0.iter().zip(&delta).map(|(u, v)| u + v).collect();
        let solved: Result<(Vec<f64>, SolveReport)> = match (&hierarchy, config.label) {
            (Some(h), _) => fcg_solve(&a, &b, h, &opts, &x),
            (None, PrecLabel::Jacobi) => cg_solve(&a, &b, CgPreconditioner::Jacobi, &opts, &x),
            (None, _) => cg_solve(&a, &b, CgPreconditioner::None, &opts, &x),
        };
        match solved {
            Ok((x_new, report)) => {
                x = x_new;
                cell.steps.push(StepResult {
                    step,
                    iterations: report.iterations,
                    converged: report.converged,
                    final_relative_residual: report.final_relative_residual(),
                    solve_seconds: report.solve_seconds,
                });
            }
            Err(e) => {
                cell.error = Some(format!("step {step}: {e}"));
                break;
            }
        }
    }
    cell.total_iterations = cell.steps.iter().map(|s| s.iterations).sum();
    cell.avg_iterations = cell.total_iterations as f64 / spec.time_steps as f64;
    cell.total_solve_seconds = cell.steps.iter().map(|s| s.solve_seconds).sum();
    cell.time_per_iteration = if cell.total_iterations > 0 {
        cell.total_solve_seconds / cell.total_iterations as f64
    } else {
        0.0
    };
    cell.converged = cell.error.is_none() && cell.steps.iter().all(|s| s.converged);
    Ok(cell)
}

/// Fills `speedup` and `scaled_speedup`. Cells are compared within groups of
/// equal config (and equal size, in strong mode); the reference is the first
/// cell with the smallest rank count in the group and gets exactly 1.
pub fn compute_speedups(mode: StudyMode, cells: &mut [CellResult]) {
    let mut groups: BTreeMap<(String, usize), Vec<usize>> = BTreeMap::new();
    for (k, c) in cells.iter().enumerate() {
        let size_key = if mode == StudyMode::Strong { c.n } else { 0 };
        groups.entry((c.config.to_string(), size_key)).or_default().push(k);
    }
    for members in groups.values() {
        let Some(&reference) = members.iter().min_by_key(|&&k| (cells[k].ranks, k)) else {
            continue;
        };
        let (p_min, t_ref) = (cells[reference].ranks, cells[reference].total_solve_seconds);
        for &k in members {
            let c = &mut cells[k];
            let sp = if k == reference {
                1.0
            } else if c.total_solve_seconds > 0.0 {
                t_ref / c.total_solve_seconds
            } else {
                f64::NAN
            };
            c.speedup = Some(sp);
            c.scaled_speedup = Some(c.ranks as f64 / p_min as f64 * sp);
        }
    }
}

pub fn run_study(spec: &StudySpec, configs: &[PreconditionerConfig]) -> Result<StudyReport> {
    let cells_spec = spec.cells()?;
    let mut cells = Vec::with_capacity(cells_spec.len() * configs.len());
    for config in configs {
        for &(n, ranks) in &cells_spec {
            cells.push(run_cell(spec, config, n, ranks)?);
        }
    }
    compute_speedups(spec.mode, &mut cells);
    Ok(StudyReport { spec: spec.clone(), rhs_model: RHS_MODEL.into(), cells })
}

impl StudyReport {
    pub fn all_converged(&self) -> bool {
        self.cells.iter().all(|c| c.converged)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per (cell, step) under [`CSV_HEADER`].
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for c in &self.cells {
            for s in &c.steps {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{:.6e},{:.6e}",
                    c.config, c.problem, c.n, c.ranks, s.step, s.iterations, s.solve_seconds, c.setup_seconds
                )?;
            }
        }
        Ok(())
    }

    /// Copy with every wall-clock derived field zeroed, for comparing runs.
    pub fn without_timings(&self) -> StudyReport {
        let mut r = self.clone();
        for c in &mut r.cells {
            c.setup_seconds = 0.0;
            c.total_solve_seconds = 0.0;
            c.time_per_iteration = 0.0;
            c.speedup = None;
            c.scaled_speedup = None;
            for s in &mut c.steps {
                s.solve_seconds = 0.0;
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(config: PrecLabel, n: usize, ranks: usize, t: f64) -> CellResult {
        CellResult {
            config,
            problem: ProblemKind::Poisson2d,
            n,
            n_rows: n * n,
            ranks,
            n_levels: 1,
            operator_complexity: 1.0,
            steps: vec![],
            total_iterations: 0,
            avg_iterations: 0.0,
            converged: true,
            error: None,
            setup_seconds: 0.0,
            total_solve_seconds: t,
            time_per_iteration: 0.0,
            speedup: None,
            scaled_speedup: None,
        }
    }

    #[test]
    fn reference_speedup_is_one() {
        let mut cells = vec![cell(PrecLabel::Jacobi, 8, 1, 0.3), cell(PrecLabel::Jacobi, 8, 1, 0.2)];
        compute_speedups(StudyMode::Strong, &mut cells);
        assert_eq!(cells[0].speedup, Some(1.0));
        assert_eq!(cells[1].speedup, Some(0.3 / 0.2));
    }

    #[test]
    fn scaled_speedup_arithmetic() {
        let mut cells = vec![cell(PrecLabel::Mlvsbm, 8, 1, 2.0), cell(PrecLabel::Mlvsbm, 16, 4, 4.0)];
        compute_speedups(StudyMode::Weak, &mut cells);
        assert_eq!(cells[1].speedup, Some(0.5));
        assert_eq!(cells[1].scaled_speedup, Some(2.0));
    }

    #[test]
    fn weak_cells_must_keep_load() {
        let spec = StudySpec { mode: StudyMode::Weak, sizes: vec![8, 16], ranks: vec![1, 8], ..Default::default() };
        assert_eq!(spec.cells().unwrap(), vec![(8, 1), (16, 8)]);
        let bad = StudySpec { ranks: vec![1, 4], ..spec };
        assert!(bad.cells().is_err());
    }

    #[test]
    fn small_strong_study_runs() {
        let spec = StudySpec {
            problem: ProblemKind::Poisson2d,
            sizes: vec![8],
            ranks: vec![1, 2],
            time_steps: 3,
            tol: 1e-6,
            ..Default::default()
        };
        let r = run_study(&spec, &[PreconditionerConfig::new(PrecLabel::Jacobi)]).unwrap();
        assert_eq!(r.cells.len(), 2);
        assert!(r.all_converged());
        let mut csv = Vec::new();
        r.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 3);
        assert!(text.starts_with(CSV_HEADER));
    }
}
