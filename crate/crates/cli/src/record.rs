use std::io::Write;

use serde::{Deserialize, Serialize};
use v2rdm::sdp::SolveStatus;
use v2rdm::vrdm::{BlockReport, RankRestriction};

use crate::spec::RunSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRecord {
    pub spec: RunSpec,
    pub label: String,
    pub n_spin: usize,
    /// Active electrons seen by the solver.
    pub n_active_electrons: usize,
    pub energy: f64,
    pub objective: f64,
    pub e_hf: f64,
    pub e_fci: Option<f64>,
    /// `energy - e_fci`.
    pub error: Option<f64>,
    pub percent_correlation: Option<f64>,
    pub status: SolveStatus,
    pub primal: f64,
    pub stationarity: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub restarts: usize,
    pub constraints: usize,
    pub dropped_constraints: usize,
    pub blocks: Vec<BlockReport>,
    pub elapsed_seconds: f64,
}

pub fn fmt_energy(e: f64) -> String {
    let s = format!("{e:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn fmt_opt_energy(e: Option<f64>) -> String {
    e.map(fmt_energy).unwrap_or_default()
}

fn fmt_opt_percent(p: Option<f64>) -> String {
    p.map(|p| format!("{p:.1}")).unwrap_or_default()
}

pub fn rank_label(rank: &RankRestriction) -> String {
    match rank {
        RankRestriction::None => "full".into(),
        RankRestriction::Theoretical => "theoretical".into(),
        RankRestriction::Explicit(caps) => {
            let parts: Vec<String> = caps.iter().map(|(n, k)| format!("{n}={k}")).collect();
            format!("explicit({})", parts.join(";"))
        }
    }
}

fn blocks_compact(blocks: &[BlockReport]) -> String {
    blocks
        .iter()
        .map(|b| {
            let cap = b.cap.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
            format!("{}:{}:{}:{}", b.name, b.dim, cap, b.attained_rank)
        })
        .collect::<Vec<_>>()
        .join(";")
}

const CSV_HEADER: [&str; 21] = [
    "label",
    "n_spin",
    "n_electrons",
    "n_frozen",
    "spin_adapted",
    "rank",
    "energy",
    "e_hf",
    "e_fci",
    "error",
    "percent_correlation",
    "status",
    "outer_iterations",
    "inner_iterations",
    "primal",
    "stationarity",
    "restarts",
    "constraints",
    "elapsed_seconds",
    "blocks",
    "spec",
];

impl SolveRecord {
    fn csv_row(&self) -> anyhow::Result<Vec<String>> {
        let cfg = &self.spec.config;
        Ok(vec![
            self.label.clone(),
            self.n_spin.to_string(),
            self.spec.n_electrons.to_string(),
            cfg.n_frozen.to_string(),
            cfg.spin_adapted.to_string(),
            rank_label(&cfg.rank),
            fmt_energy(self.energy),
            fmt_energy(self.e_hf),
            fmt_opt_energy(self.e_fci),
            fmt_opt_energy(self.error),
            fmt_opt_percent(self.percent_correlation),
            self.status.to_string(),
            self.outer_iterations.to_string(),
            self.inner_iterations.to_string(),
            format!("{:.3e}", self.primal),
            format!("{:.3e}", self.stationarity),
            self.restarts.to_string(),
            self.constraints.to_string(),
            format!("{:.3}", self.elapsed_seconds),
            blocks_compact(&self.blocks),
            serde_json::to_string(&self.spec)?,
        ])
    }

    fn write_table<W: Write>(&self, out: &mut W) -> anyhow::Result<()> {
        let cfg = &self.spec.config;
        writeln!(out, "system          {}", self.spec.source)?;
        writeln!(
            out,
            "electrons       {} ({} active, {} frozen orbitals)",
            self.spec.n_electrons, self.n_active_electrons, cfg.n_frozen
        )?;
        writeln!(out, "spin orbitals   {}", self.n_spin)?;
        writeln!(
            out,
            "rank            {}{}",
            rank_label(&cfg.rank),
            if cfg.spin_adapted { ", spin adapted" } else { "" }
        )?;
        writeln!(out, "energy          {}", fmt_energy(self.energy))?;
        writeln!(out, "E_HF            {}", fmt_energy(self.e_hf))?;
        if let Some(e) = self.e_fci {
            writeln!(out, "E_FCI           {}", fmt_energy(e))?;
        }
        if let Some(e) = self.error {
            writeln!(out, "error           {}", fmt_energy(e))?;
        }
        if let Some(p) = self.percent_correlation {
            writeln!(out, "% correlation   {p:.1}")?;
        }
        writeln!(out, "status          {}", self.status)?;
        writeln!(
            out,
            "iterations      {} outer, {} inner, {} restarts",
            self.outer_iterations, self.inner_iterations, self.restarts
        )?;
        writeln!(
            out,
            "residuals       primal {:.2e}, stationarity {:.2e}",
            self.primal, self.stationarity
        )?;
        writeln!(
            out,
            "constraints     {} ({} dropped as redundant)",
            self.constraints, self.dropped_constraints
        )?;
        writeln!(out, "time            {:.2} s", self.elapsed_seconds)?;
        writeln!(out, "block  dim  cap  rank")?;
        for b in &self.blocks {
            let cap = b.cap.map(|c| c.to_string()).unwrap_or_else(|| "-".into());
            writeln!(out, "{:<6} {:>4} {:>4} {:>5}", b.name, b.dim, cap, b.attained_rank)?;
        }
        Ok(())
    }
}

pub fn write_records<W: Write>(records: &[SolveRecord], format: OutputFormat, mut out: W) -> anyhow::Result<()> {
    match format {
        OutputFormat::Json => {
            if records.len() == 1 {
                serde_json::to_writer_pretty(&mut out, &records[0])?;
            } else {
                serde_json::to_writer_pretty(&mut out, records)?;
            }
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(CSV_HEADER)?;
            for r in records {
                w.write_record(r.csv_row()?)?;
            }
            w.flush()?;
        }
        OutputFormat::Table => {
            for (i, r) in records.iter().enumerate() {
                if i > 0 {
                    writeln!(out)?;
                }
                r.write_table(&mut out)?;
            }
        }
    }
    Ok(())
}

/// Recovers the run specifications embedded in a JSON or CSV record file.
pub fn read_specs(text: &str) -> anyhow::Result<Vec<(RunSpec, f64)>> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        #[derive(Deserialize)]
        struct Points {
            points: Vec<SolveRecord>,
        }
        if let Ok(c) = serde_json::from_str::<Points>(trimmed) {
            return Ok(c.points.into_iter().map(|r| (r.spec, r.energy)).collect());
        }
        let r: SolveRecord = serde_json::from_str(trimmed)?;
        return Ok(vec![(r.spec, r.energy)]);
    }
    if trimmed.starts_with('[') {
        let rs: Vec<SolveRecord> = serde_json::from_str(trimmed)?;
        return Ok(rs.into_iter().map(|r| (r.spec, r.energy)).collect());
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(trimmed.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow::anyhow!("record has no '{name}' column"))
    };
    let spec_col = col("spec")?;
    let energy_col = col("energy").or_else(|_| col("e_2rdm"))?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row?;
        let spec: RunSpec = serde_json::from_str(&row[spec_col])?;
        let energy: f64 = row[energy_col].parse()?;
        out.push((spec, energy));
    }
    if out.is_empty() {
        anyhow::bail!("record file holds no records");
    }
    Ok(out)
}
