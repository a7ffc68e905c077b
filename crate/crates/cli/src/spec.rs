use std::fmt;
use std::path::PathBuf;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use v2rdm::integrals::{hubbard, pairing_hamiltonian, read_fcidump, IntegralSet};
use v2rdm::vrdm::VrdmConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputSource {
    Fcidump { path: PathBuf },
    Hubbard { sites: usize, t: f64, u: f64, periodic: bool },
    Pairing { levels: Vec<f64>, g: f64 },
}

impl InputSource {
    pub fn load(&self) -> anyhow::Result<IntegralSet> {
        match self {
            InputSource::Fcidump { path } => {
                if !path.exists() {
                    anyhow::bail!("FCIDUMP file not found: {}", path.display());
                }
                let parsed = read_fcidump(path).with_context(|| format!("cannot parse FCIDUMP {}", path.display()))?;
                Ok(parsed.integrals)
            }
            InputSource::Hubbard { sites, t, u, periodic } => Ok(hubbard(*sites, *t, *u, *periodic)?),
            InputSource::Pairing { levels, g } => Ok(pairing_hamiltonian(levels, *g)?),
        }
    }
}

impl fmt::Display for InputSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSource::Fcidump { path } => write!(f, "fcidump {}", path.display()),
            InputSource::Hubbard { sites, t, u, periodic } => write!(
                f,
                "hubbard sites={sites} t={t} u={u} {}",
                if *periodic { "periodic" } else { "open" }
            ),
            InputSource::Pairing { levels, g } => {
                let eps: Vec<String> = levels.iter().map(|e| e.to_string()).collect();
                write!(f, "pairing levels={} g={g}", eps.join(","))
            }
        }
    }
}

/// Everything needed to reproduce a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub source: InputSource,
    /// Total electron count, frozen core included.
    pub n_electrons: usize,
    pub config: VrdmConfig,
    /// Also run the FCI oracle on the active space.
    pub with_fci: bool,
}
