use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use v2rdm::basis::{agp_g_rank, hf_g_rank, spin_block_ranks};
use v2rdm::fock::{
    agp_state, binomial, fci_ground_state, g_from_state, hf_state, numeric_rank, rdm_from_state, reference_energy,
    MAX_FCI_DIM,
};
use v2rdm::integrals::IntegralSet;
use v2rdm::linalg::RANK_THRESHOLD;
use v2rdm::rdm::{spin_adapt_g, write_matrix_dump, MatrixDump, MatrixKind};
use v2rdm::vrdm::{active_space, correlation_percentage, non_parallelity_error, run, VrdmResult};

use crate::record::{fmt_energy, read_specs, write_records, OutputFormat, SolveRecord};
use crate::spec::{InputSource, RunSpec};
use crate::{CurveArgs, FciArgs, Model, RanksArgs, SolveArgs, SystemArgs, VerifyArgs};

/// Exit code 1 for bad input, 2 for a solver that did not converge.
#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Solver(anyhow::Error),
}

impl Failure {
    pub fn input_msg(msg: impl Into<String>) -> Self {
        Failure::Input(anyhow!(msg.into()))
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Solver(_) => 2,
        }
    }

    /// Output closed early by the reader, as in `v2rdm ranks ... | head`.
    pub fn is_broken_pipe(&self) -> bool {
        match self {
            Failure::Input(e) | Failure::Solver(e) => e
                .chain()
                .any(|c| c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)),
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Input(e) | Failure::Solver(e) => format!("{e:#}"),
        }
    }
}

impl From<v2rdm::Error> for Failure {
    fn from(e: v2rdm::Error) -> Self {
        match e {
            v2rdm::Error::SolverFailed { .. } => Failure::Solver(e.into()),
            other => Failure::Input(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn resolve_electrons(set: &IntegralSet, nelec: Option<usize>) -> usize {
    nelec.unwrap_or_else(|| set.n_electrons())
}

fn load_system(system: &SystemArgs) -> Result<(InputSource, IntegralSet, usize), Failure> {
    let source = system.input_source()?;
    let set = source.load()?;
    let n = resolve_electrons(&set, system.nelec);
    Ok((source, set, n))
}

struct Solved {
    record: SolveRecord,
    result: VrdmResult,
}

fn execute(spec: &RunSpec, set: &IntegralSet, label: String) -> Result<Solved, Failure> {
    let n = spec.n_electrons;
    let e_hf = reference_energy(set, n)?;
    let e_fci = if spec.with_fci {
        let (active, active_n) = active_space(set, n, spec.config.n_frozen)?;
        let (e, _) = fci_ground_state(&active, active_n).context("FCI reference")?;
        Some(e)
    } else {
        None
    };
    let result = run(set, n, &spec.config, |_| {})?;
    let error = e_fci.map(|f| result.energy - f);
    let percent_correlation = e_fci.and_then(|f| correlation_percentage(result.energy, e_hf, f).ok());
    let record = SolveRecord {
        spec: spec.clone(),
        label,
        n_spin: result.n_spin,
        n_active_electrons: result.n_electrons,
        energy: result.energy,
        objective: result.objective,
        e_hf,
        e_fci,
        error,
        percent_correlation,
        status: result.status,
        primal: result.residuals.primal,
        stationarity: result.residuals.stationarity,
        outer_iterations: result.outer_iterations,
        inner_iterations: result.inner_iterations,
        restarts: result.restarts,
        constraints: result.constraints,
        dropped_constraints: result.dropped_constraints,
        blocks: result.blocks.clone(),
        elapsed_seconds: result.elapsed_seconds,
    };
    Ok(Solved { record, result })
}

fn not_converged(r: &SolveRecord) -> Failure {
    Failure::Solver(anyhow!(
        "{}: solver stopped with status {} after {} outer iterations (primal {:.2e}, stationarity {:.2e})",
        r.label,
        r.status,
        r.outer_iterations,
        r.primal,
        r.stationarity
    ))
}

fn write_dump(path: &Path, dump: &MatrixDump) -> Result<(), Failure> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_matrix_dump(dump, BufWriter::new(f))?;
    Ok(())
}

pub fn solve(a: SolveArgs) -> Result<(), Failure> {
    let (source, set, n) = load_system(&a.system)?;
    let spec = RunSpec {
        source,
        n_electrons: n,
        config: a.solver.config(a.system.frozen)?,
        with_fci: a.fci,
    };
    let label = spec.source.to_string();
    let Solved { record, result } = execute(&spec, &set, label)?;

    write_records(std::slice::from_ref(&record), a.format, open_output(a.output.as_deref())?)?;
    if let Some(path) = &a.trace_csv {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        w.write_record(["outer", "inner_iterations", "objective", "primal", "stationarity", "mu"])
            .map_err(anyhow::Error::from)?;
        for h in &result.history {
            w.write_record([
                h.outer.to_string(),
                h.inner_iterations.to_string(),
                format!("{:.12e}", h.objective),
                format!("{:.6e}", h.primal),
                format!("{:.6e}", h.stationarity),
                format!("{:e}", h.mu),
            ])
            .map_err(anyhow::Error::from)?;
        }
        w.flush()?;
    }
    if let Some(path) = &a.dump_d {
        let dump = MatrixDump {
            kind: MatrixKind::D,
            n_spin: result.n_spin,
            n_electrons: result.n_electrons,
            matrix: result.rdm.into_matrix(),
        };
        write_dump(path, &dump)?;
    }
    if !record.status_is_converged() {
        return Err(not_converged(&record));
    }
    Ok(())
}

#[derive(Serialize)]
struct FciRecord {
    system: String,
    n_electrons: usize,
    n_frozen: usize,
    n_spin: usize,
    determinants: usize,
    e_fci: f64,
    e_hf: f64,
    correlation_energy: f64,
}

pub fn fci(a: FciArgs) -> Result<(), Failure> {
    let (source, set, n) = load_system(&a.system)?;
    let (active, active_n) = active_space(&set, n, a.system.frozen)?;
    let (e_fci, state) = fci_ground_state(&active, active_n)?;
    let e_hf = reference_energy(&set, n)?;
    let rec = FciRecord {
        system: source.to_string(),
        n_electrons: n,
        n_frozen: a.system.frozen,
        n_spin: active.n_spin(),
        determinants: state.basis().len(),
        e_fci,
        e_hf,
        correlation_energy: e_fci - e_hf,
    };
    let mut out = io::stdout().lock();
    match a.format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &rec).map_err(anyhow::Error::from)?;
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            writeln!(out, "system,n_electrons,n_frozen,n_spin,determinants,e_fci,e_hf,correlation_energy")?;
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                rec.system.clone(),
                rec.n_electrons.to_string(),
                rec.n_frozen.to_string(),
                rec.n_spin.to_string(),
                rec.determinants.to_string(),
                fmt_energy(rec.e_fci),
                fmt_energy(rec.e_hf),
                fmt_energy(rec.correlation_energy),
            ])
            .map_err(anyhow::Error::from)?;
            w.flush()?;
        }
        OutputFormat::Table => {
            writeln!(out, "system          {}", rec.system)?;
            writeln!(out, "electrons       {} ({} frozen orbitals)", rec.n_electrons, rec.n_frozen)?;
            writeln!(out, "determinants    {}", rec.determinants)?;
            writeln!(out, "E_FCI           {}", fmt_energy(rec.e_fci))?;
            writeln!(out, "E_HF            {}", fmt_energy(rec.e_hf))?;
            writeln!(out, "correlation     {}", fmt_energy(rec.correlation_energy))?;
        }
    }
    if let Some(path) = &a.dump_d {
        let dump = MatrixDump {
            kind: MatrixKind::D,
            n_spin: active.n_spin(),
            n_electrons: active_n,
            matrix: rdm_from_state(&state)?.into_matrix(),
        };
        write_dump(path, &dump)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RanksRecord {
    rs: usize,
    r: usize,
    n_electrons: usize,
    hf_g_rank: usize,
    agp_g_rank: usize,
    g00_full: usize,
    g00_theoretical: usize,
    g1_agp: usize,
    measured: Option<MeasuredRanks>,
}

#[derive(Serialize)]
struct MeasuredRanks {
    hf_g: usize,
    agp_g: Option<usize>,
    agp_g00: Option<usize>,
    agp_g1: Option<usize>,
}

fn measure_ranks(rs: usize, n: usize, seed: u64) -> Result<MeasuredRanks, Failure> {
    let r = 2 * rs;
    let agp_dets = binomial(rs, n / 2);
    if agp_dets > MAX_FCI_DIM || r > 24 {
        return Err(v2rdm::Error::BasisTooLarge {
            count: agp_dets.max(binomial(r, n)),
            limit: MAX_FCI_DIM,
        }
        .into());
    }
    let occupied: Vec<usize> = (0..n).collect();
    let hf_g = numeric_rank(&g_from_state(&hf_state(r, &occupied)?)?, RANK_THRESHOLD);
    if !n.is_multiple_of(2) || n == 0 {
        return Ok(MeasuredRanks {
            hf_g,
            agp_g: None,
            agp_g00: None,
            agp_g1: None,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma: Vec<f64> = (0..rs).map(|_| rng.gen_range(0.2..1.2)).collect();
    let g = g_from_state(&agp_state(&gamma, n)?)?;
    let blocks = spin_adapt_g(&g, n)?;
    Ok(MeasuredRanks {
        hf_g,
        agp_g: Some(numeric_rank(&g, RANK_THRESHOLD)),
        agp_g00: Some(numeric_rank(&blocks.singlet, RANK_THRESHOLD)),
        agp_g1: Some(numeric_rank(&blocks.triplets[2], RANK_THRESHOLD)),
    })
}

pub fn ranks(a: RanksArgs) -> Result<(), Failure> {
    let r = 2 * a.rs;
    let sb = spin_block_ranks(a.rs);
    let rec = RanksRecord {
        rs: a.rs,
        r,
        n_electrons: a.nelec,
        hf_g_rank: hf_g_rank(r, a.nelec)?,
        agp_g_rank: agp_g_rank(r)?,
        g00_full: sb.block_dim,
        g00_theoretical: sb.singlet,
        g1_agp: sb.triplet,
        measured: if a.numeric {
            Some(measure_ranks(a.rs, a.nelec, a.seed)?)
        } else {
            None
        },
    };
    let mut out = io::stdout().lock();
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    match a.format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &rec).map_err(anyhow::Error::from)?;
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            writeln!(
                out,
                "rs,r,n_electrons,g00_full,g00_theoretical,g1_agp,hf_g_rank,agp_g_rank,hf_g_measured,agp_g_measured,agp_g00_measured,agp_g1_measured"
            )?;
            let m = rec.measured.as_ref();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                rec.rs,
                rec.r,
                rec.n_electrons,
                rec.g00_full,
                rec.g00_theoretical,
                rec.g1_agp,
                rec.hf_g_rank,
                rec.agp_g_rank,
                opt(m.map(|m| m.hf_g)),
                opt(m.and_then(|m| m.agp_g)),
                opt(m.and_then(|m| m.agp_g00)),
                opt(m.and_then(|m| m.agp_g1)),
            )?;
        }
        OutputFormat::Table => {
            writeln!(out, "r_s = {}, r = {}, N = {}", rec.rs, rec.r, rec.n_electrons)?;
            writeln!(out, "G(0,0) full | theoretical: {} | {}", rec.g00_full, rec.g00_theoretical)?;
            let m = rec.measured.as_ref();
            let rows = [
                ("HF G rank (r-N)N+1", rec.hf_g_rank, m.map(|m| m.hf_g)),
                ("AGP G rank r(r-1)/2", rec.agp_g_rank, m.and_then(|m| m.agp_g)),
                ("AGP G(0,0) rank", rec.g00_theoretical, m.and_then(|m| m.agp_g00)),
                ("AGP G(1,m) rank", rec.g1_agp, m.and_then(|m| m.agp_g1)),
            ];
            writeln!(out, "{:<22} {:>8} {:>9}", "quantity", "formula", "measured")?;
            for (name, formula, measured) in rows {
                writeln!(out, "{name:<22} {formula:>8} {:>9}", opt(measured))?;
            }
        }
    }
    Ok(())
}

fn curve_points(a: &CurveArgs) -> Result<Vec<(String, InputSource)>, Failure> {
    let mut points: Vec<(String, InputSource)> = Vec::new();
    if !a.fcidumps.is_empty() {
        for p in &a.fcidumps {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            points.push((stem, InputSource::Fcidump { path: p.clone() }));
        }
    } else {
        match a.model {
            Some(Model::Hubbard) => {
                if a.u_values.is_empty() {
                    return Err(Failure::input_msg("a Hubbard curve needs --u-values"));
                }
                let mut m = a.model_args.clone();
                for &u in &a.u_values {
                    m.repulsion = Some(u);
                    points.push((format!("U={u}"), m.source(Model::Hubbard)?));
                }
            }
            Some(Model::Pairing) => {
                if a.g_values.is_empty() {
                    return Err(Failure::input_msg("a pairing curve needs --g-values"));
                }
                let mut m = a.model_args.clone();
                for &g in &a.g_values {
                    m.coupling = Some(g);
                    points.push((format!("g={g}"), m.source(Model::Pairing)?));
                }
            }
            None => return Err(Failure::input_msg("give --fcidump per point or --model")),
        }
    }
    if points.len() < 2 {
        return Err(Failure::input_msg(format!("a curve needs at least 2 points, got {}", points.len())));
    }
    if !a.labels.is_empty() {
        if a.labels.len() != points.len() {
            return Err(Failure::input_msg(format!(
                "{} labels for {} points",
                a.labels.len(),
                points.len()
            )));
        }
        for (p, l) in points.iter_mut().zip(&a.labels) {
            p.0 = l.clone();
        }
    }
    Ok(points)
}

#[derive(Serialize)]
struct CurveOutput<'a> {
    points: &'a [SolveRecord],
    non_parallelity_error: Option<f64>,
    complete: bool,
}

fn write_curve<W: Write>(records: &[SolveRecord], npe: Option<f64>, complete: bool, format: OutputFormat, mut out: W) -> Result<(), Failure> {
    match format {
        OutputFormat::Json => {
            let c = CurveOutput {
                points: records,
                non_parallelity_error: npe,
                complete,
            };
            serde_json::to_writer_pretty(&mut out, &c).map_err(anyhow::Error::from)?;
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            {
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(["label", "e_fci", "e_2rdm", "error", "percent_correlation", "status", "spec"])
                    .map_err(anyhow::Error::from)?;
                for r in records {
                    w.write_record([
                        r.label.clone(),
                        r.e_fci.map(fmt_energy).unwrap_or_default(),
                        fmt_energy(r.energy),
                        r.error.map(fmt_energy).unwrap_or_default(),
                        r.percent_correlation.map(|p| format!("{p:.1}")).unwrap_or_default(),
                        r.status.to_string(),
                        serde_json::to_string(&r.spec).map_err(anyhow::Error::from)?,
                    ])
                    .map_err(anyhow::Error::from)?;
                }
                w.flush()?;
            }
            if let Some(npe) = npe {
                writeln!(out, "# non_parallelity_error,{}", fmt_energy(npe))?;
            }
        }
        OutputFormat::Table => {
            writeln!(
                out,
                "{:<14} {:>14} {:>14} {:>11} {:>7}  status",
                "point", "E_FCI", "E_2RDM", "error", "%corr"
            )?;
            for r in records {
                writeln!(
                    out,
                    "{:<14} {:>14} {:>14} {:>11} {:>7}  {}",
                    r.label,
                    r.e_fci.map(fmt_energy).unwrap_or_default(),
                    fmt_energy(r.energy),
                    r.error.map(fmt_energy).unwrap_or_default(),
                    r.percent_correlation.map(|p| format!("{p:.1}")).unwrap_or_default(),
                    r.status
                )?;
            }
            if let Some(npe) = npe {
                writeln!(out, "non-parallelity error: {}", fmt_energy(npe))?;
            }
        }
    }
    Ok(())
}

pub fn curve(a: CurveArgs) -> Result<(), Failure> {
    let points = curve_points(&a)?;
    let config = a.solver.config(a.frozen)?;
    let mut jobs = Vec::with_capacity(points.len());
    for (label, source) in points {
        let set = source.load()?;
        let spec = RunSpec {
            n_electrons: resolve_electrons(&set, a.nelec),
            source,
            config: config.clone(),
            with_fci: !a.no_fci,
        };
        jobs.push((label, spec, set));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(anyhow::Error::from)?;
    let results: Vec<Result<SolveRecord, Failure>> = pool.install(|| {
        jobs.par_iter()
            .map(|(label, spec, set)| execute(spec, set, label.clone()).map(|s| s.record))
            .collect()
    });

    let mut done = Vec::new();
    let mut failure = None;
    for r in results {
        match r {
            Ok(rec) if rec.status_is_converged() => done.push(rec),
            Ok(rec) => {
                failure = Some(not_converged(&rec));
                break;
            }
            Err(f) => {
                failure = Some(f);
                break;
            }
        }
    }
    let complete = failure.is_none();
    let errors: Option<Vec<f64>> = done.iter().map(|r| r.error).collect();
    let npe = match errors {
        Some(e) if complete => Some(non_parallelity_error(&e)?),
        _ => None,
    };
    write_curve(&done, npe, complete, a.format, open_output(a.output.as_deref())?)?;
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

pub fn verify(a: VerifyArgs) -> Result<(), Failure> {
    if !a.record.exists() {
        return Err(Failure::input_msg(format!("record file not found: {}", a.record.display())));
    }
    let text = std::fs::read_to_string(&a.record).with_context(|| format!("cannot read {}", a.record.display()))?;
    let specs = read_specs(&text).with_context(|| format!("cannot parse record {}", a.record.display()))?;
    let mut out = io::stdout().lock();
    let mut worst = 0.0f64;
    for (mut spec, recorded) in specs {
        spec.with_fci = false;
        let set = spec.source.load()?;
        let label = spec.source.to_string();
        let Solved { record, .. } = execute(&spec, &set, label)?;
        if !record.status_is_converged() {
            return Err(not_converged(&record));
        }
        let diff = (record.energy - recorded).abs();
        worst = worst.max(diff);
        writeln!(
            out,
            "{}: recorded {} rerun {} difference {:.2e} {}",
            record.label,
            fmt_energy(recorded),
            fmt_energy(record.energy),
            diff,
            if diff <= a.tol { "ok" } else { "MISMATCH" }
        )?;
    }
    if worst > a.tol {
        return Err(Failure::Solver(anyhow!(
            "rerun energies differ from the record by up to {worst:.2e} (tolerance {:.1e})",
            a.tol
        )));
    }
    Ok(())
}

impl SolveRecord {
    fn status_is_converged(&self) -> bool {
        self.status == v2rdm::sdp::SolveStatus::Converged
    }
}
