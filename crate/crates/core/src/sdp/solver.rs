use std::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::lbfgs::{self, LbfgsExit, LbfgsOptions};
use super::{packed_index, SdpProblem};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Bound on `‖Ax-b‖₂ / (1+‖b‖₂)`.
    pub feas_tol: f64,
    /// Bound on `‖∇_R L‖∞ / (1+‖c‖∞)`.
    pub grad_tol: f64,
    pub mu_init: f64,
    pub mu_growth: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub seed: u64,
    pub restart_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-5,
            grad_tol: 1e-5,
            mu_init: 1.0,
            mu_growth: 5.0,
            max_outer: 100,
            max_inner: 2000,
            seed: 0,
            restart_scale: 1e-2,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("feas_tol", self.feas_tol),
            ("grad_tol", self.grad_tol),
            ("mu_init", self.mu_init),
            ("restart_scale", self.restart_scale),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.mu_growth > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mu_growth must exceed 1, got {}",
                self.mu_growth
            )));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidArgument("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Stalled,
    RankInfeasible,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::Stalled => "stalled",
            SolveStatus::RankInfeasible => "rank-infeasible",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub outer: usize,
    pub inner_iterations: usize,
    pub objective: f64,
    pub primal: f64,
    pub stationarity: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct FactorizedSolution {
    pub factors: Vec<DMatrix<f64>>,
    pub multipliers: Vec<f64>,
    pub mu: f64,
    pub history: Vec<OuterRecord>,
    pub status: SolveStatus,
    pub restarts: usize,
}

impl FactorizedSolution {
    /// `R Rᵀ` for every block.
    pub fn block_matrices(&self) -> Vec<DMatrix<f64>> {
        self.factors.iter().map(|r| r * r.transpose()).collect()
    }

    pub fn x(&self, problem: &SdpProblem) -> Vec<f64> {
        let mut x = vec![0.0; problem.n_vars()];
        for (k, m) in self.block_matrices().iter().enumerate() {
            problem.pack_block(k, m, &mut x);
        }
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub stationarity: f64,
    pub objective: f64,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, a| m.max(a.abs()))
}

/// Flat storage for the factors, each block column-major.
struct Layout {
    starts: Vec<usize>,
    shapes: Vec<(usize, usize)>,
}

impl Layout {
    fn new(problem: &SdpProblem) -> Self {
        let mut starts = Vec::new();
        let mut shapes = Vec::new();
        let mut at = 0;
        for b in problem.blocks() {
            starts.push(at);
            shapes.push((b.dim, b.columns()));
            at += b.dim * b.columns();
        }
        starts.push(at);
        Self { starts, shapes }
    }

    fn split(&self, flat: &[f64]) -> Vec<DMatrix<f64>> {
        self.shapes
            .iter()
            .enumerate()
            .map(|(k, &(n, q))| DMatrix::from_column_slice(n, q, &flat[self.starts[k]..self.starts[k + 1]]))
            .collect()
    }

    fn join(&self, factors: &[DMatrix<f64>]) -> Vec<f64> {
        factors.iter().flat_map(|f| f.as_slice().iter().copied()).collect()
    }
}

/// `x(R)`: packed upper triangles of `R Rᵀ`.
fn packed_x(problem: &SdpProblem, factors: &[DMatrix<f64>]) -> Vec<f64> {
    let mut x = vec![0.0; problem.n_vars()];
    for (k, r) in factors.iter().enumerate() {
        let m = r * r.transpose();
        problem.pack_block(k, &m, &mut x);
    }
    x
}

/// `2 S R` per block, with `S_ii = g_ii` and `S_ij = g_ij / 2` from the
/// packed gradient `g` with respect to `x`.
fn chain_rule(problem: &SdpProblem, factors: &[DMatrix<f64>], g: &[f64]) -> Vec<DMatrix<f64>> {
    factors
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let dim = problem.blocks()[k].dim;
            let off = problem.block_offset(k);
            let s = DMatrix::from_fn(dim, dim, |i, j| {
                let v = g[off + packed_index(i, j, dim)];
                if i == j {
                    v
                } else {
                    0.5 * v
                }
            });
            s * r * 2.0
        })
        .collect()
}

/// `L = c·x − λ·(Ax−b) + (μ/2)‖Ax−b‖²` at `x = x(R)` and its gradient with
/// respect to every factor.
pub fn augmented_lagrangian_value_and_gradient(
    factors: &[DMatrix<f64>],
    lambda: &[f64],
    mu: f64,
    problem: &SdpProblem,
) -> (f64, Vec<DMatrix<f64>>) {
    let x = packed_x(problem, factors);
    let r = problem.residual(&x);
    let value = problem.objective(&x) - lambda.iter().zip(&r).map(|(l, ri)| l * ri).sum::<f64>()
        + 0.5 * mu * r.iter().map(|v| v * v).sum::<f64>();
    let y: Vec<f64> = lambda.iter().zip(&r).map(|(l, ri)| l - mu * ri).collect();
    let g = problem.reduced_cost(&y);
    (value, chain_rule(problem, factors, &g))
}

/// Primal infeasibility, Lagrangian stationarity at the stored multipliers,
/// and `c·x`.
pub fn residuals(solution: &FactorizedSolution, problem: &SdpProblem) -> Residuals {
    let x = packed_x(problem, &solution.factors);
    residuals_at(problem, &solution.factors, &x, &solution.multipliers)
}

fn residuals_at(problem: &SdpProblem, factors: &[DMatrix<f64>], x: &[f64], lambda: &[f64]) -> Residuals {
    let r = problem.residual(x);
    let primal = norm2(&r) / (1.0 + norm2(problem.b()));
    let g = problem.reduced_cost(lambda);
    let grads = chain_rule(problem, factors, &g);
    let ginf = grads.iter().map(|m| m.amax()).fold(0.0, f64::max);
    Residuals {
        primal,
        stationarity: ginf / (1.0 + inf_norm(problem.c())),
        objective: problem.objective(x),
    }
}

fn initial_factors(problem: &SdpProblem, rng: &mut ChaCha8Rng) -> Vec<DMatrix<f64>> {
    problem
        .blocks()
        .iter()
        .map(|b| {
            let mut r: DMatrix<f64> = DMatrix::from_fn(b.dim, b.columns(), |_, _| StandardNormal.sample(rng));
            let fro2 = r.norm_squared();
            let target = b.target_trace.filter(|t| *t > 0.0).unwrap_or(1.0);
            if fro2 > 0.0 {
                r *= (target / fro2).sqrt();
            }
            r
        })
        .collect()
}

fn perturb(factors: &mut [DMatrix<f64>], scale: f64, rng: &mut ChaCha8Rng) {
    for r in factors.iter_mut() {
        let rms = (r.norm_squared() / r.len().max(1) as f64).sqrt().max(1e-3);
        for v in r.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += scale * rms * z;
        }
    }
}

/// Saddle escapes allowed per solve.
const MAX_ESCAPES: usize = 20;

/// Eigenvalue of the dual slack below which a rank-deficient factor is
/// treated as sitting on a saddle, relative to `1 + ‖c‖∞`.
const SADDLE_TOL: f64 = 1e-3;

/// A stationary `R` with a column null space is a saddle whenever the dual
/// slack `S = c - Aᵀλ` has a negative eigenvalue: moving along `v wᵀ`, with
/// `v` the eigenvector and `w` a null direction of `R`, lowers `Tr(S R Rᵀ)`.
/// Capped blocks are left alone since their slack need not be positive.
fn escape_saddles(problem: &SdpProblem, factors: &mut [DMatrix<f64>], lambda: &[f64], c_scale: f64) -> bool {
    let g = problem.reduced_cost(lambda);
    let mut moved = false;
    for (k, r) in factors.iter_mut().enumerate() {
        let blk = &problem.blocks()[k];
        if blk.is_capped() {
            continue;
        }
        let dim = blk.dim;
        let off = problem.block_offset(k);
        let s = DMatrix::from_fn(dim, dim, |i, j| g[off + packed_index(i, j, dim)]);
        let eig = s.symmetric_eigen();
        let (imin, &lmin) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty block");
        if lmin >= -SADDLE_TOL * c_scale {
            continue;
        }
        let svd = r.clone().svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let (jmin, &smin) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty factor");
        if smin > 1e-6 * smax && smax > 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(imin);
        let w = v_t.row(jmin);
        let scale = r.norm_squared().max(blk.target_trace.unwrap_or(1.0)).sqrt();
        *r += (v * w) * (0.1 * scale);
        moved = true;
    }
    moved
}

pub fn solve(problem: &SdpProblem, options: &SolverOptions) -> Result<FactorizedSolution> {
    solve_with_observer(problem, options, |_| {})
}

/// Augmented-Lagrangian loop over the factors with an L-BFGS inner solve.
/// `observer` sees every outer record as it is produced.
pub fn solve_with_observer<F>(
    problem: &SdpProblem,
    options: &SolverOptions,
    mut observer: F,
) -> Result<FactorizedSolution>
where
    F: FnMut(&OuterRecord),
{
    options.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let layout = Layout::new(problem);
    let mut factors = initial_factors(problem, &mut rng);
    let mut lambda = vec![0.0; problem.n_rows()];
    let mut mu = options.mu_init;
    let c_scale = 1.0 + inf_norm(problem.c());
    let capped = problem.blocks().iter().any(|b| b.is_capped());

    let mut history = Vec::new();
    let mut restarts = 0;
    let mut stalls = 0;
    let mut escapes = 0;
    let mut escape_from: Option<f64> = None;
    let mut status = SolveStatus::MaxIterations;
    let mut prev_primal = {
        let x = packed_x(problem, &factors);
        norm2(&problem.residual(&x)) / (1.0 + norm2(problem.b()))
    };

    for outer in 1..=options.max_outer {
        let mut flat = layout.join(&factors);
        let inner_opts = LbfgsOptions {
            max_iterations: options.max_inner,
            grad_tol: 0.5 * options.grad_tol * c_scale,
            memory: 10,
        };
        let report = lbfgs::minimize(
            |z, grad| {
                let fs = layout.split(z);
                let (v, gs) = augmented_lagrangian_value_and_gradient(&fs, &lambda, mu, problem);
                let mut at = 0;
                for gm in &gs {
                    let s = gm.as_slice();
                    grad[at..at + s.len()].copy_from_slice(s);
                    at += s.len();
                }
                v
            },
            &mut flat,
            &inner_opts,
        );
        factors = layout.split(&flat);

        let x = packed_x(problem, &factors);
        let r = problem.residual(&x);
        for (l, ri) in lambda.iter_mut().zip(&r) {
            *l -= mu * ri;
        }
        let res = residuals_at(problem, &factors, &x, &lambda);
        let record = OuterRecord {
            outer,
            inner_iterations: report.iterations,
            objective: res.objective,
            primal: res.primal,
            stationarity: res.stationarity,
            mu,
        };
        observer(&record);
        history.push(record);

        // an escape that did not lower the objective was chasing dual noise
        if let Some(before) = escape_from.take() {
            if res.objective > before - options.feas_tol * c_scale {
                escapes = MAX_ESCAPES;
            }
        }
        let escaped = escapes < MAX_ESCAPES && escape_saddles(problem, &mut factors, &lambda, c_scale);
        // judged only from near-feasible points, where the objective is meaningful
        if escaped && res.primal <= options.feas_tol {
            escape_from = Some(res.objective);
        }
        if escaped {
            escapes += 1;
        } else if res.primal <= options.feas_tol && res.stationarity <= options.grad_tol {
            status = SolveStatus::Converged;
            break;
        }
        if res.primal > options.feas_tol {
            // an unfinished inner solve says little about the penalty
            let inner_done = report.exit != LbfgsExit::MaxIterations;
            if res.primal > 0.25 * prev_primal && inner_done {
                mu *= options.mu_growth;
            }
            if res.primal > 0.9 * prev_primal && inner_done {
                stalls += 1;
            } else {
                stalls = 0;
            }
        } else {
            stalls = 0;
        }
        if stalls >= 3 {
            if capped && restarts == 0 {
                perturb(&mut factors, options.restart_scale, &mut rng);
                restarts += 1;
                stalls = 0;
            } else {
                status = if capped {
                    SolveStatus::RankInfeasible
                } else {
                    SolveStatus::Stalled
                };
                break;
            }
        }
        prev_primal = res.primal;
    }

    Ok(FactorizedSolution {
        factors,
        multipliers: lambda,
        mu,
        history,
        status,
        restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{assemble, BlockSpec};

    fn scalar_problem() -> SdpProblem {
        assemble(vec![1.0], vec![vec![(0, 1.0)]], vec![1.0], vec![BlockSpec::new("m", 1)]).unwrap()
    }

    #[test]
    fn scalar_sdp() {
        let p = scalar_problem();
        let opts = SolverOptions {
            feas_tol: 1e-10,
            grad_tol: 1e-10,
            ..Default::default()
        };
        let sol = solve(&p, &opts).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        let res = residuals(&sol, &p);
        assert!((res.objective - 1.0).abs() < 1e-8);
        assert!(res.stationarity < 1e-8);
    }

    #[test]
    fn empty_constraint_set() {
        let p = assemble(vec![0.0; 3], vec![], vec![], vec![BlockSpec::new("m", 2)]).unwrap();
        let sol = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Converged);
        assert_eq!(residuals(&sol, &p).objective, 0.0);
    }

    #[test]
    fn penalty_free_limit_is_objective() {
        let p = assemble(
            vec![1.0, -0.5, 2.0],
            vec![vec![(0, 1.0), (2, 1.0)]],
            vec![1.0],
            vec![BlockSpec::new("m", 2)],
        )
        .unwrap();
        let r = DMatrix::from_row_slice(2, 2, &[0.3, -0.2, 0.7, 0.1]);
        let (v, _) = augmented_lagrangian_value_and_gradient(std::slice::from_ref(&r), &[0.0], 0.0, &p);
        let x = packed_x(&p, &[r]);
        assert!((v - p.objective(&x)).abs() < 1e-15);
    }

    #[test]
    fn feasible_point_has_no_penalty() {
        let p = assemble(
            vec![1.0, -0.5, 2.0],
            vec![vec![(0, 1.0), (2, 1.0)]],
            vec![1.0],
            vec![BlockSpec::new("m", 2)],
        )
        .unwrap();
        let r = DMatrix::from_row_slice(2, 2, &[0.6, 0.0, 0.0, 0.8]);
        let x = packed_x(&p, std::slice::from_ref(&r));
        for mu in [0.0, 1.0, 1e6] {
            let (v, _) = augmented_lagrangian_value_and_gradient(std::slice::from_ref(&r), &[3.0], mu, &p);
            assert!((v - p.objective(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_options_rejected() {
        let p = scalar_problem();
        let bad = SolverOptions {
            feas_tol: 0.0,
            ..Default::default()
        };
        assert!(solve(&p, &bad).is_err());
        let bad = SolverOptions {
            mu_growth: 1.0,
            ..Default::default()
        };
        assert!(solve(&p, &bad).is_err());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let p = assemble(
            vec![1.0, 0.3, -1.0],
            vec![vec![(0, 1.0), (2, 1.0)]],
            vec![2.0],
            vec![BlockSpec::new("m", 2)],
        )
        .unwrap();
        let opts = SolverOptions {
            seed: 9,
            ..Default::default()
        };
        let a = solve(&p, &opts).unwrap();
        let b = solve(&p, &opts).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.status, SolveStatus::Converged);
        // min c·x with tr M = 2 is 2 λ_min(C), C = [[1, .15], [.15, -1]]
        let lam = -(1.0f64 + 0.15 * 0.15).sqrt();
        assert!((a.history.last().unwrap().objective - 2.0 * lam).abs() < 1e-4);
    }
}
