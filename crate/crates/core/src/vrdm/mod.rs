//! Variational 2-RDM minimization under the 2-positivity conditions.
//!
//! Blocks in the plain formulation are `D`, `Q` and `G`. With spin
//! adaptation (singlet states, even `N`) they are `D00`, `D1`, `Q00`, `Q1`,
//! `G00` and `G1`, where the `1` blocks hold one representative of the three
//! identical triplet components.

mod build;
mod expr;

pub use build::{build_problem, VrdmProblem};
pub use expr::LinExpr;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrals::{build_reduced_hamiltonian, freeze_core, IntegralSet, ReducedHamiltonian};
use crate::linalg::{numeric_rank, RANK_THRESHOLD};
use crate::rdm::{energy, TwoRdm};
use crate::sdp::{residuals, solve_with_observer, OuterRecord, Residuals, SolveStatus, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankRestriction {
    None,
    /// `r_s(r_s+1)/2` columns on `G00`, the rank of an AGP particle-hole
    /// singlet block.
    Theoretical,
    /// Column caps by block name.
    Explicit(Vec<(String, usize)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrdmConfig {
    pub spin_adapted: bool,
    pub rank: RankRestriction,
    pub solver: SolverOptions,
    pub n_frozen: usize,
}

impl Default for VrdmConfig {
    fn default() -> Self {
        Self {
            spin_adapted: false,
            rank: RankRestriction::None,
            solver: SolverOptions::default(),
            n_frozen: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockReport {
    pub name: String,
    pub dim: usize,
    pub cap: Option<usize>,
    pub attained_rank: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VrdmResult {
    /// `Tr(K2 D) + core` from the extracted `D`.
    pub energy: f64,
    /// Solver objective `c·x` plus the core energy.
    pub objective: f64,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub blocks: Vec<BlockReport>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub restarts: usize,
    pub constraints: usize,
    pub dropped_constraints: usize,
    pub n_spin: usize,
    pub n_electrons: usize,
    pub spin_adapted: bool,
    pub elapsed_seconds: f64,
    #[serde(skip)]
    pub rdm: TwoRdm,
    #[serde(skip)]
    pub history: Vec<OuterRecord>,
}

impl VrdmResult {
    pub fn block(&self, name: &str) -> Option<&BlockReport> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Solves and reports whatever the solver reached, converged or not.
pub fn minimize_with_observer<F>(
    h: &ReducedHamiltonian,
    n_electrons: usize,
    config: &VrdmConfig,
    observer: F,
) -> Result<VrdmResult>
where
    F: FnMut(&OuterRecord),
{
    let start = Instant::now();
    let problem = build_problem(h, n_electrons, config)?;
    let sol = solve_with_observer(&problem.sdp, &config.solver, observer)?;
    let x = sol.x(&problem.sdp);
    let rdm = TwoRdm::new(problem.n_spin, n_electrons, problem.d_matrix(&x))?;
    let e = energy(h, &rdm)?;
    let res = residuals(&sol, &problem.sdp);
    let blocks = problem
        .sdp
        .blocks()
        .iter()
        .zip(sol.block_matrices())
        .map(|(b, m)| BlockReport {
            name: b.name.clone(),
            dim: b.dim,
            cap: b.cap,
            attained_rank: numeric_rank(&m, RANK_THRESHOLD),
        })
        .collect();
    Ok(VrdmResult {
        energy: e,
        objective: res.objective + h.core_energy(),
        status: sol.status,
        residuals: res,
        blocks,
        outer_iterations: sol.history.len(),
        inner_iterations: sol.history.iter().map(|r| r.inner_iterations).sum(),
        restarts: sol.restarts,
        constraints: problem.sdp.n_rows(),
        dropped_constraints: problem.sdp.removed_rows().len(),
        n_spin: problem.n_spin,
        n_electrons,
        spin_adapted: problem.spin_adapted,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        rdm,
        history: sol.history,
    })
}

/// Like [`minimize_with_observer`] but an unconverged solve is an error.
pub fn minimize(h: &ReducedHamiltonian, n_electrons: usize, config: &VrdmConfig) -> Result<VrdmResult> {
    let result = minimize_with_observer(h, n_electrons, config, |_| {})?;
    into_converged(result)
}

pub fn into_converged(result: VrdmResult) -> Result<VrdmResult> {
    if result.converged() {
        return Ok(result);
    }
    let caps: Vec<String> = result
        .blocks
        .iter()
        .filter_map(|b| b.cap.map(|c| format!("{}<={c}", b.name)))
        .collect();
    Err(Error::SolverFailed {
        status: result.status.to_string(),
        outer_iterations: result.outer_iterations,
        primal: result.residuals.primal,
        stationarity: result.residuals.stationarity,
        context: format!(
            "r = {}, N = {}, {} constraints, spin adapted: {}, caps: [{}]",
            result.n_spin,
            result.n_electrons,
            result.constraints,
            result.spin_adapted,
            caps.join(", ")
        ),
    })
}

/// Freezes `config.n_frozen` core orbitals, then solves for the remaining
/// electrons. Unconverged solves are returned, not rejected.
pub fn run<F>(integrals: &IntegralSet, n_electrons: usize, config: &VrdmConfig, observer: F) -> Result<VrdmResult>
where
    F: FnMut(&OuterRecord),
{
    let (set, active_n) = active_space(integrals, n_electrons, config.n_frozen)?;
    let h = build_reduced_hamiltonian(&set, active_n)?;
    minimize_with_observer(&h, active_n, config, observer)
}

/// Integrals and electron count after freezing `n_frozen` doubly occupied
/// orbitals.
pub fn active_space(integrals: &IntegralSet, n_electrons: usize, n_frozen: usize) -> Result<(IntegralSet, usize)> {
    if 2 * n_frozen > n_electrons {
        return Err(Error::ElectronCount(format!(
            "cannot freeze {n_frozen} orbitals with {n_electrons} electrons"
        )));
    }
    if n_frozen == 0 {
        return Ok((integrals.clone(), n_electrons));
    }
    Ok((freeze_core(integrals, n_frozen)?, n_electrons - 2 * n_frozen))
}

/// Percentage of the correlation energy `E_FCI - E_HF` recovered by `e`.
pub fn correlation_percentage(e: f64, e_hf: f64, e_fci: f64) -> Result<f64> {
    if e_fci >= e_hf {
        return Err(Error::InvalidArgument(format!(
            "no correlation energy to measure: E_FCI = {e_fci} >= E_HF = {e_hf}"
        )));
    }
    Ok(100.0 * (e_hf - e) / (e_hf - e_fci))
}

/// Spread `max - min` of the errors along a curve.
pub fn non_parallelity_error(errors: &[f64]) -> Result<f64> {
    if errors.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two points, got {}",
            errors.len()
        )));
    }
    let max = errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::hubbard;

    #[test]
    fn correlation_arithmetic() {
        assert_eq!(correlation_percentage(-1.5, -1.0, -1.5).unwrap(), 100.0);
        assert_eq!(correlation_percentage(-1.0, -1.0, -1.5).unwrap(), 0.0);
        let p = correlation_percentage(-100.19, -100.0, -100.2).unwrap();
        assert!((p - 95.0).abs() < 1e-9);
        assert!(correlation_percentage(-1.0, -1.0, -1.0).is_err());
    }

    #[test]
    fn non_parallelity_arithmetic() {
        assert_eq!(non_parallelity_error(&[0.02, 0.02, 0.02]).unwrap(), 0.0);
        assert!((non_parallelity_error(&[0.010, 0.023]).unwrap() - 0.013).abs() < 1e-15);
        assert!((non_parallelity_error(&[-0.003, 0.001, 0.004]).unwrap() - 0.007).abs() < 1e-15);
        assert!(non_parallelity_error(&[]).is_err());
        assert!(non_parallelity_error(&[1.0]).is_err());
    }

    #[test]
    fn dimer_problem_shape() {
        let set = hubbard(2, 1.0, 4.0, false).unwrap();
        let h = build_reduced_hamiltonian(&set, 2).unwrap();
        let p = build_problem(&h, 2, &VrdmConfig::default()).unwrap();
        let dims: Vec<usize> = p.sdp.blocks().iter().map(|b| b.dim).collect();
        assert_eq!(dims, vec![6, 6, 16]);
        assert_eq!(p.assembled_rows, 1 + 21 + 136);
    }

    #[test]
    fn adapted_problem_shape_and_caps() {
        let set = hubbard(6, 1.0, 4.0, true).unwrap();
        let h = build_reduced_hamiltonian(&set, 6).unwrap();
        let cfg = VrdmConfig {
            spin_adapted: true,
            rank: RankRestriction::Theoretical,
            ..Default::default()
        };
        let p = build_problem(&h, 6, &cfg).unwrap();
        let g00 = p.sdp.block_index("G00").unwrap();
        assert_eq!(p.sdp.blocks()[g00].dim, 36);
        assert_eq!(p.sdp.blocks()[g00].cap, Some(21));
        assert_eq!(p.sdp.blocks()[p.sdp.block_index("G1").unwrap()].dim, 36);

        let plain = VrdmConfig {
            rank: RankRestriction::Theoretical,
            ..Default::default()
        };
        assert!(build_problem(&h, 6, &plain).is_err());
        let odd = VrdmConfig {
            spin_adapted: true,
            ..Default::default()
        };
        let h5 = build_reduced_hamiltonian(&set, 5).unwrap();
        assert!(build_problem(&h5, 5, &odd).is_err());
        let unknown = VrdmConfig {
            rank: RankRestriction::Explicit(vec![("X".into(), 1)]),
            ..Default::default()
        };
        assert!(build_problem(&h, 6, &unknown).is_err());
    }
}
