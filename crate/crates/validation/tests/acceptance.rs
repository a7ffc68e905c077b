//! One line per acceptance criterion. Exits non-zero when any criterion fails.
//!
//! Run alone with `cargo test -p v2rdm-validation --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use v2rdm::basis::{agp_g_rank, hf_g_rank, spin_block_ranks};
use v2rdm::fock::{
    agp_state, check_agp_annihilators_with_sign, fci_ground_state, g_from_state, hf_state, numeric_rank,
    q_from_state, rdm_from_state, FockState,
};
use v2rdm::integrals::{
    build_reduced_hamiltonian, hubbard, pairing_hamiltonian, random_integral_set, read_fcidump, IntegralSet,
};
use v2rdm::linalg::RANK_THRESHOLD;
use v2rdm::rdm::{
    contract_to_1rdm, d_to_g, d_to_q, g_to_d, q_to_d, singlet_contraction, spin_adapt_d, spin_adapt_g,
    triplet_contraction, TwoRdm,
};
use v2rdm::sdp::{assemble, augmented_lagrangian_value_and_gradient, BlockSpec, SolveStatus, SolverOptions};
use v2rdm::vrdm::{
    active_space, correlation_percentage, minimize_with_observer, non_parallelity_error, run, RankRestriction,
    VrdmConfig, VrdmResult,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn tight() -> SolverOptions {
    SolverOptions {
        feas_tol: 1e-7,
        grad_tol: 1e-6,
        max_inner: 5000,
        max_outer: 200,
        ..Default::default()
    }
}

fn solve(set: &IntegralSet, n: usize, config: &VrdmConfig) -> VrdmResult {
    let h = build_reduced_hamiltonian(set, n).expect("hamiltonian");
    minimize_with_observer(&h, n, config, |_| {}).expect("solve")
}

fn fci(set: &IntegralSet, n: usize) -> f64 {
    fci_ground_state(set, n).expect("fci").0
}

fn random_levels(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut eps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eps
}

fn pairing_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases = [(3, 0.2), (3, 1.0), (4, 0.5), (4, 1.0), (5, 0.2), (5, 0.5)];
    let config = VrdmConfig {
        solver: tight(),
        ..Default::default()
    };
    let mut worst = 0.0f64;
    let mut worst_case = String::new();
    let mut unconverged = 0;
    for (rs, g) in cases {
        let eps = random_levels(&mut rng, rs);
        let n = 2 * rs.div_ceil(2);
        let set = pairing_hamiltonian(&eps, g).unwrap();
        let exact = fci(&set, n);
        let res = solve(&set, n, &config);
        if !res.converged() {
            unconverged += 1;
        }
        let gap = (res.energy - exact).abs();
        if gap > worst {
            worst = gap;
            worst_case = format!("rs={rs} N={n} g={g}");
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-4 && unconverged == 0 && secs <= 300.0,
        format!(
            "pairing |E - E_FCI| < 1e-4 on {} random-level instances: max {worst:.3e} ({worst_case}), {unconverged} unconverged, {secs:.1} s",
            cases.len()
        ),
    )
}

fn lower_bound() -> Outcome {
    let config = VrdmConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let instances: Vec<(String, IntegralSet, usize)> = vec![
        ("random rs=3 N=2".into(), random_integral_set(3, 2, 1), 2),
        ("random rs=3 N=4".into(), random_integral_set(3, 4, 2), 4),
        ("random rs=4 N=2".into(), random_integral_set(4, 2, 3), 2),
        ("random rs=4 N=4".into(), random_integral_set(4, 4, 4), 4),
        ("random rs=5 N=4".into(), random_integral_set(5, 4, 5), 4),
        ("hubbard ring L=4 U=4".into(), hubbard(4, 1.0, 4.0, true).unwrap(), 4),
        ("hubbard chain L=4 U=8".into(), hubbard(4, 1.0, 8.0, false).unwrap(), 4),
        ("hubbard chain L=5 U=2".into(), hubbard(5, 1.0, 2.0, false).unwrap(), 4),
        ("hubbard ring L=6 U=4".into(), hubbard(6, 1.0, 4.0, true).unwrap(), 6),
        (
            "pairing rs=5 N=4".into(),
            pairing_hamiltonian(&random_levels(&mut rng, 5), 0.7).unwrap(),
            4,
        ),
    ];
    let mut violations = Vec::new();
    let mut unconverged = 0;
    let mut worst = f64::NEG_INFINITY;
    for (name, set, n) in &instances {
        let res = solve(set, *n, &config);
        if !res.converged() {
            unconverged += 1;
        }
        let diff = res.energy - fci(set, *n);
        worst = worst.max(diff);
        if diff > 1e-4 {
            violations.push(format!("{name}: {diff:+.3e}"));
        }
    }
    verdict(
        violations.is_empty() && unconverged == 0,
        format!(
            "E_2RDM <= E_FCI + 1e-4 on {} instances (r <= 12, N <= 6): max E - E_FCI {worst:+.3e}, {unconverged} unconverged{}",
            instances.len(),
            if violations.is_empty() {
                String::new()
            } else {
                format!("; violations: {}", violations.join(", "))
            }
        ),
    )
}

fn gamma(rng: &mut ChaCha8Rng, rs: usize) -> Vec<f64> {
    (0..rs).map(|_| rng.gen_range(0.2..1.2)).collect()
}

fn rank_formulas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bad = Vec::new();
    let mut checked = 0;
    for r in [6, 8, 10] {
        for n in [2, 4] {
            let occ: Vec<usize> = (0..n).collect();
            let hf = g_from_state(&hf_state(r, &occ).unwrap()).unwrap();
            let got = numeric_rank(&hf, RANK_THRESHOLD);
            let want = hf_g_rank(r, n).unwrap();
            if got != want {
                bad.push(format!("HF r={r} N={n}: {got} != {want}"));
            }
            let agp = g_from_state(&agp_state(&gamma(&mut rng, r / 2), n).unwrap()).unwrap();
            let got = numeric_rank(&agp, RANK_THRESHOLD);
            let want = agp_g_rank(r).unwrap();
            if got != want {
                bad.push(format!("AGP r={r} N={n}: {got} != {want}"));
            }
            checked += 2;
        }
    }
    for rs in [3, 4, 5] {
        for n in [2, 4] {
            if n > 2 * rs - 2 {
                continue;
            }
            let g = g_from_state(&agp_state(&gamma(&mut rng, rs), n).unwrap()).unwrap();
            let blocks = spin_adapt_g(&g, n).unwrap();
            let want = spin_block_ranks(rs);
            let got = numeric_rank(&blocks.singlet, RANK_THRESHOLD);
            if got != want.singlet {
                bad.push(format!("singlet rs={rs} N={n}: {got} != {}", want.singlet));
            }
            for (k, t) in blocks.triplets.iter().enumerate() {
                let got = numeric_rank(t, RANK_THRESHOLD);
                if got != want.triplet {
                    bad.push(format!("triplet {k} rs={rs} N={n}: {got} != {}", want.triplet));
                }
            }
            checked += 4;
        }
    }
    verdict(
        bad.is_empty(),
        format!(
            "HF, AGP and spin-block G ranks match their formulas at threshold 1e-8: {checked} checks{}",
            if bad.is_empty() {
                String::new()
            } else {
                format!("; {}", bad.join(", "))
            }
        ),
    )
}

fn annihilators() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut counts_ok = true;
    for _ in 0..10 {
        let g = gamma(&mut rng, 4);
        let (norm, count) = check_agp_annihilators_with_sign(&g, 4, 1.0).unwrap();
        worst = worst.max(norm);
        counts_ok &= count == 8 * 6 / 2;
    }
    verdict(
        worst < 1e-12 && counts_ok,
        format!("AGP annihilator residuals, 10 random gamma at rs=4: max {worst:.2e} (< 1e-12), 24 operators each: {counts_ok}"),
    )
}

fn test_states(rng: &mut ChaCha8Rng) -> Vec<(String, FockState)> {
    let mut states = vec![
        ("HF r=8 N=4".to_string(), hf_state(8, &[0, 1, 2, 3]).unwrap()),
        ("AGP r=8 N=4".to_string(), agp_state(&gamma(rng, 4), 4).unwrap()),
        ("AGP r=10 N=6".to_string(), agp_state(&gamma(rng, 5), 6).unwrap()),
    ];
    let (_, s) = fci_ground_state(&hubbard(4, 1.0, 4.0, true).unwrap(), 4).unwrap();
    states.push(("Hubbard ring L=4".into(), s));
    let (_, s) = fci_ground_state(&random_integral_set(4, 3, 9), 3).unwrap();
    states.push(("random rs=4 N=3".into(), s));
    states
}

fn max_abs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

fn mappings() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_map = 0.0f64;
    let mut worst_trace = 0.0f64;
    let mut worst_spin = 0.0f64;
    for (_, state) in test_states(&mut rng) {
        let d = rdm_from_state(&state).unwrap();
        let r = d.n_spin();
        let n = d.n_electrons();
        let (rf, nf) = (r as f64, n as f64);
        let q = d_to_q(&d).unwrap();
        let g = d_to_g(&d).unwrap();
        worst_map = worst_map
            .max(max_abs(&q, &q_from_state(&state).unwrap()))
            .max(max_abs(&g, &g_from_state(&state).unwrap()))
            .max(max_abs(q_to_d(&q, r, n).unwrap().matrix(), d.matrix()))
            .max(max_abs(g_to_d(&g, r, n).unwrap().matrix(), d.matrix()));
        worst_trace = worst_trace
            .max((d.trace() - nf * (nf - 1.0)).abs())
            .max((q.trace() - (rf - nf) * (rf - nf - 1.0)).abs())
            .max((g.trace() - nf * (rf - nf + 1.0)).abs());
        if n.is_multiple_of(2) {
            worst_spin = worst_spin.max(spin_identities(&d));
        }
    }
    verdict(
        worst_map < 1e-12 && worst_trace < 1e-12 && worst_spin < 1e-12,
        format!(
            "D<->Q, D<->G against direct evaluation and round trips {worst_map:.1e}, traces {worst_trace:.1e}, spin-block traces and contractions {worst_spin:.1e} (all < 1e-12)"
        ),
    )
}

/// Largest deviation in the singlet spin-block trace and contraction identities.
fn spin_identities(d: &TwoRdm) -> f64 {
    let ns = d.n_spin() / 2;
    let n = d.n_electrons() as f64;
    let half = n / 2.0;
    let blocks = spin_adapt_d(d).unwrap();
    let d1 = contract_to_1rdm(d).unwrap();
    let d1a = DMatrix::from_fn(ns, ns, |i, j| d1.matrix[(2 * i, 2 * j)]);
    let mut worst = (blocks.singlet.trace() - half * (half + 1.0)).abs();
    for t in &blocks.triplets {
        worst = worst.max((t.trace() - half * (half - 1.0)).abs());
    }
    worst = worst.max(max_abs(&singlet_contraction(&blocks.singlet, ns), &(&d1a * (half + 1.0))));
    for t in &blocks.triplets {
        worst = worst.max(max_abs(&triplet_contraction(t, ns), &(&d1a * (half - 1.0))));
    }
    worst
}

fn gradient_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dim = 6;
    let len = dim * (dim + 1) / 2;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n_rows = 5;
        let rows: Vec<Vec<(usize, f64)>> = (0..n_rows)
            .map(|_| (0..len).map(|j| (j, rng.gen_range(-1.0..1.0))).collect())
            .collect();
        let b: Vec<f64> = (0..n_rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let problem = assemble(c, rows, b, vec![BlockSpec::new("M", dim)]).unwrap();
        let lambda: Vec<f64> = (0..problem.n_rows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mu = rng.gen_range(0.5..5.0);
        let factor = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let (_, grad) = augmented_lagrangian_value_and_gradient(std::slice::from_ref(&factor), &lambda, mu, &problem);
        let mut err = 0.0f64;
        for k in 0..factor.len() {
            let mut plus = factor.clone();
            plus[k] += h;
            let mut minus = factor.clone();
            minus[k] -= h;
            let fp = augmented_lagrangian_value_and_gradient(&[plus], &lambda, mu, &problem).0;
            let fm = augmented_lagrangian_value_and_gradient(&[minus], &lambda, mu, &problem).0;
            err = err.max(((fp - fm) / (2.0 * h) - grad[0][k]).abs());
        }
        worst = worst.max(err / grad[0].amax().max(1.0));
    }
    verdict(
        worst < 1e-6,
        format!("augmented Lagrangian gradient vs central differences (step 1e-5), 20 random 6x6 blocks: max relative error {worst:.2e} (< 1e-6)"),
    )
}

fn rank_restriction() -> Outcome {
    let adapted = |rank| VrdmConfig {
        spin_adapted: true,
        rank,
        solver: tight(),
        ..Default::default()
    };
    let cases: Vec<(&str, IntegralSet, usize)> = vec![
        ("hubbard ring L=4 U=4", hubbard(4, 1.0, 4.0, true).unwrap(), 4),
        ("hubbard chain L=4 U=8", hubbard(4, 1.0, 8.0, false).unwrap(), 4),
        ("pairing rs=4 g=0.5", pairing_hamiltonian(&[0.0, 0.4, 1.1, 1.5], 0.5).unwrap(), 4),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    let mut compared = 0;
    let mut worst = f64::INFINITY;
    for (name, set, n) in &cases {
        let full = solve(set, *n, &adapted(RankRestriction::None));
        if !full.converged() {
            notes.push(format!("{name}: full rank {}", full.status));
            continue;
        }
        let restrictions = [
            RankRestriction::Theoretical,
            RankRestriction::Explicit(vec![("G00".into(), 9)]),
        ];
        for rank in restrictions {
            let res = solve(set, *n, &adapted(rank.clone()));
            let g00 = res.block("G00").unwrap();
            let cap = g00.cap.unwrap();
            if g00.attained_rank > cap {
                ok = false;
                notes.push(format!("{name}: G00 rank {} > cap {cap}", g00.attained_rank));
            }
            if !res.converged() {
                notes.push(format!("{name} cap {cap}: {}", res.status));
                continue;
            }
            let diff = res.energy - full.energy;
            worst = worst.min(diff);
            compared += 1;
            if diff < -1e-5 {
                ok = false;
                notes.push(format!("{name} cap {cap}: restricted below full by {:.2e}", -diff));
            }
        }
    }
    let dimer = VrdmConfig {
        rank: RankRestriction::Explicit(vec![("G".into(), 1)]),
        ..Default::default()
    };
    let res = solve(&hubbard(2, 1.0, 4.0, false).unwrap(), 2, &dimer);
    let infeasible = res.status == SolveStatus::RankInfeasible;
    ok &= infeasible && compared > 0;
    verdict(
        ok,
        format!(
            "E_restricted >= E_full - 1e-5 on {compared} converged capped solves (min difference {worst:+.2e}), G00 rank <= cap, dimer with G cap 1: {}{}",
            res.status,
            if notes.is_empty() {
                String::new()
            } else {
                format!("; {}", notes.join(", "))
            }
        ),
    )
}

fn statistics() -> Outcome {
    let checks = [
        correlation_percentage(-1.5, -1.0, -1.5).unwrap() == 100.0,
        correlation_percentage(-1.0, -1.0, -1.5).unwrap() == 0.0,
        (correlation_percentage(-100.19, -100.0, -100.2).unwrap() - 95.0).abs() < 1e-9,
        correlation_percentage(-1.0, -1.0, -1.0).is_err(),
        non_parallelity_error(&[0.02, 0.02, 0.02]).unwrap() == 0.0,
        (non_parallelity_error(&[0.010, 0.023]).unwrap() - 0.013).abs() < 1e-15,
        (non_parallelity_error(&[-0.003, 0.001, 0.004]).unwrap() - 0.007).abs() < 1e-15,
        non_parallelity_error(&[1.0]).is_err(),
    ];
    let passed = checks.iter().filter(|c| **c).count();
    verdict(
        passed == checks.len(),
        format!("percent correlation and non-parallelity error arithmetic: {passed}/{} examples", checks.len()),
    )
}

fn hydrogen_fluoride() -> Outcome {
    let Ok(path) = std::env::var("V2RDM_HF_FCIDUMP") else {
        return Outcome::Skip("HF STO-6G percent correlation: set V2RDM_HF_FCIDUMP to an FCIDUMP file".into());
    };
    let env = |name: &str, default: usize| {
        std::env::var(name)
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(default)
    };
    let n = env("V2RDM_HF_NELEC", 10);
    let frozen = env("V2RDM_HF_FROZEN", 1);
    let set = match read_fcidump(&path) {
        Ok(p) => p.integrals,
        Err(e) => return Outcome::Fail(format!("cannot read {path}: {e}")),
    };
    let (active, na) = active_space(&set, n, frozen).unwrap();
    let e_fci = fci(&active, na);
    let e_hf = v2rdm::fock::reference_energy(&active, na).unwrap();
    let mut pcts = Vec::new();
    for rank in [RankRestriction::None, RankRestriction::Theoretical] {
        let config = VrdmConfig {
            spin_adapted: true,
            rank,
            n_frozen: frozen,
            solver: tight(),
        };
        let res = run(&set, n, &config, |_| {}).unwrap();
        pcts.push(correlation_percentage(res.energy, e_hf, e_fci).unwrap());
    }
    verdict(
        (pcts[0] - 100.0).abs() <= 2.0 && (pcts[1] - 99.7).abs() <= 2.0,
        format!(
            "HF STO-6G percent correlation: full {:.1} (target 100.0), theoretical rank {:.1} (target 99.7), within 2 points",
            pcts[0], pcts[1]
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1", pairing_exactness),
        ("2", lower_bound),
        ("3", rank_formulas),
        ("4", annihilators),
        ("5", mappings),
        ("6", gradient_checks),
        ("7", rank_restriction),
        ("8", statistics),
        ("9", hydrogen_fluoride),
    ];
    let mut failed = 0;
    for (id, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {id}: {tag} [{secs:.1} s] {detail}");
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
