//! Orbital and pair indexing.
//!
//! Spin orbitals interleave spins: spatial orbital `i` carries `α` at `2i` and
//! `β` at `2i + 1`. Every other module relies on this convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Alpha,
    Beta,
}

/// Spin orbital index of `spatial` with the given spin.
pub fn spin_orbital(spatial: usize, spin: Spin, n_spatial: usize) -> Result<usize> {
    if spatial >= n_spatial {
        return Err(Error::OutOfRange {
            what: "spatial orbital",
            index: spatial,
            limit: n_spatial,
        });
    }
    Ok(match spin {
        Spin::Alpha => 2 * spatial,
        Spin::Beta => 2 * spatial + 1,
    })
}

/// Inverse of [`spin_orbital`].
pub fn split_spin_orbital(p: usize) -> (usize, Spin) {
    let spin = if p.is_multiple_of(2) { Spin::Alpha } else { Spin::Beta };
    (p / 2, spin)
}

/// Active orbital space of a calculation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitalBasis {
    n_spatial: usize,
    n_electrons: usize,
    n_frozen: usize,
}

impl OrbitalBasis {
    pub fn new(n_spatial: usize, n_electrons: usize, n_frozen: usize) -> Result<Self> {
        if n_electrons > 2 * n_spatial {
            return Err(Error::ElectronCount(format!(
                "{n_electrons} electrons do not fit in {} spin orbitals",
                2 * n_spatial
            )));
        }
        if 2 * n_frozen > n_electrons {
            return Err(Error::ElectronCount(format!(
                "{n_frozen} frozen orbitals need {} electrons, only {n_electrons} available",
                2 * n_frozen
            )));
        }
        Ok(Self {
            n_spatial,
            n_electrons,
            n_frozen,
        })
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_spin(&self) -> usize {
        2 * self.n_spatial
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn n_frozen(&self) -> usize {
        self.n_frozen
    }

    /// The basis left after removing the frozen core.
    pub fn active(&self) -> OrbitalBasis {
        OrbitalBasis {
            n_spatial: self.n_spatial - self.n_frozen,
            n_electrons: self.n_electrons - 2 * self.n_frozen,
            n_frozen: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairKind {
    /// `p < q`, enumerated lexicographically; dimension `r(r-1)/2`.
    Antisymmetric,
    /// All `(p, q)`, row-major `r p + q`; dimension `r²`.
    Ordered,
}

/// Two-index basis over `r` spin orbitals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairBasis {
    kind: PairKind,
    n_orbitals: usize,
    pairs: Vec<(usize, usize)>,
    lookup: Vec<Option<usize>>,
}

impl PairBasis {
    pub fn antisymmetric(n_orbitals: usize) -> Self {
        Self::build(PairKind::Antisymmetric, n_orbitals)
    }

    pub fn ordered(n_orbitals: usize) -> Self {
        Self::build(PairKind::Ordered, n_orbitals)
    }

    fn build(kind: PairKind, r: usize) -> Self {
        let mut pairs = Vec::new();
        let mut lookup = vec![None; r * r];
        for p in 0..r {
            let start = match kind {
                PairKind::Antisymmetric => p + 1,
                PairKind::Ordered => 0,
            };
            for q in start..r {
                lookup[p * r + q] = Some(pairs.len());
                pairs.push((p, q));
            }
        }
        Self {
            kind,
            n_orbitals: r,
            pairs,
            lookup,
        }
    }

    pub fn kind(&self) -> PairKind {
        self.kind
    }

    pub fn n_orbitals(&self) -> usize {
        self.n_orbitals
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    /// Flat index of `(p, q)` and the sign picked up by reordering it.
    ///
    /// For the antisymmetric kind `(q, p)` maps to the index of `(p, q)` with
    /// sign `-1`.
    pub fn index(&self, p: usize, q: usize) -> Result<(usize, f64)> {
        let r = self.n_orbitals;
        for &i in &[p, q] {
            if i >= r {
                return Err(Error::OutOfRange {
                    what: "spin orbital",
                    index: i,
                    limit: r,
                });
            }
        }
        match self.kind {
            PairKind::Ordered => Ok((r * p + q, 1.0)),
            PairKind::Antisymmetric => {
                if p == q {
                    return Err(Error::DiagonalPair(p));
                }
                let (a, b, sign) = if p < q { (p, q, 1.0) } else { (q, p, -1.0) };
                Ok((self.lookup[a * r + b].expect("p < q is always enumerated"), sign))
            }
        }
    }

    /// Like [`PairBasis::index`] but returns `None` for out-of-range or
    /// diagonal antisymmetric pairs.
    pub fn try_index(&self, p: usize, q: usize) -> Option<(usize, f64)> {
        self.index(p, q).ok()
    }

    pub fn pair(&self, index: usize) -> (usize, usize) {
        self.pairs[index]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// Rank of the particle-hole matrix of a single determinant: `(r - N) N + 1`.
pub fn hf_g_rank(n_spin: usize, n_electrons: usize) -> Result<usize> {
    if n_electrons == 0 || n_electrons > n_spin {
        return Err(Error::ElectronCount(format!(
            "need 0 < N <= r, got N = {n_electrons}, r = {n_spin}"
        )));
    }
    Ok((n_spin - n_electrons) * n_electrons + 1)
}

/// Maximum rank of the particle-hole matrix of an AGP state, `r(r-1)/2`.
///
/// This is the non-degenerate maximum; degenerate geminal coefficients can
/// lower it.
pub fn agp_g_rank(n_spin: usize) -> Result<usize> {
    if n_spin < 2 || !n_spin.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "AGP rank needs an even number of spin orbitals >= 2, got {n_spin}"
        )));
    }
    Ok(n_spin * (n_spin - 1) / 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinBlockRanks {
    pub singlet: usize,
    pub triplet: usize,
    pub block_dim: usize,
}

/// AGP ranks of the spin blocks of the particle-hole matrix.
pub fn spin_block_ranks(n_spatial: usize) -> SpinBlockRanks {
    SpinBlockRanks {
        singlet: n_spatial * (n_spatial + 1) / 2,
        triplet: n_spatial * n_spatial.saturating_sub(1) / 2,
        block_dim: n_spatial * n_spatial,
    }
}
