//! One- and two-electron integrals and the two-electron reduced Hamiltonian.
//!
//! Spatial integrals are stored in chemist notation `(ij|kl)` in Hartree
//! atomic units. The reduced Hamiltonian lives on the antisymmetric
//! spin-orbital pair basis and pairs with the 2-RDM through
//! `E = Tr(K2 D) + core_energy`.

mod fcidump;
mod models;

pub use fcidump::{parse_fcidump, read_fcidump, write_fcidump, ParsedFcidump};
pub use models::{hubbard, pairing_hamiltonian, random_integral_set};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::basis::{OrbitalBasis, PairBasis};
use crate::error::{Error, Result};

/// Which index permutations leave the two-electron tensor invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PermutationalSymmetry {
    /// All eight permutations of real orbitals; the only class FCIDUMP can hold.
    Eightfold,
    /// `(ij|kl) = (kl|ij) = (ji|lk)`. Needed by model Hamiltonians such as
    /// the reduced pairing interaction, which couples time-reversed partners.
    Fourfold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    n_spatial: usize,
    n_electrons: usize,
    ms2: i32,
    one_body: DMatrix<f64>,
    two_body: Vec<f64>,
    core_energy: f64,
    symmetry: PermutationalSymmetry,
    orbsym: Vec<u32>,
}

const SYMMETRY_TOL: f64 = 1e-12;

impl IntegralSet {
    /// Empty (all-zero) integral set.
    pub fn zeros(n_spatial: usize, n_electrons: usize, symmetry: PermutationalSymmetry) -> Self {
        Self {
            n_spatial,
            n_electrons,
            ms2: 0,
            one_body: DMatrix::zeros(n_spatial, n_spatial),
            two_body: vec![0.0; n_spatial.pow(4)],
            core_energy: 0.0,
            symmetry,
            orbsym: vec![1; n_spatial],
        }
    }

    /// Builds a set from a full `(ij|kl)` tensor, flattened as
    /// `((i n + j) n + k) n + l`, validating the declared symmetry.
    pub fn new(
        n_electrons: usize,
        one_body: DMatrix<f64>,
        two_body: Vec<f64>,
        core_energy: f64,
        symmetry: PermutationalSymmetry,
    ) -> Result<Self> {
        let n = one_body.nrows();
        if one_body.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                found: one_body.ncols(),
            });
        }
        if two_body.len() != n.pow(4) {
            return Err(Error::Dimension {
                expected: n.pow(4),
                found: two_body.len(),
            });
        }
        let set = Self {
            n_spatial: n,
            n_electrons,
            ms2: 0,
            one_body,
            two_body,
            core_energy,
            symmetry,
            orbsym: vec![1; n],
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<()> {
        if !self.core_energy.is_finite()
            || self.one_body.iter().any(|v| !v.is_finite())
            || self.two_body.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument("non-finite integral".into()));
        }
        let n = self.n_spatial;
        let scale = 1.0 + self.one_body.amax();
        for i in 0..n {
            for j in 0..i {
                if (self.one_body[(i, j)] - self.one_body[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidArgument(format!(
                        "one-body integrals not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let scale = 1.0 + self.two_body.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self.eri(i, j, k, l);
                        for (a, b, c, d) in self.symmetry_images(i, j, k, l) {
                            if (self.eri(a, b, c, d) - v).abs() > SYMMETRY_TOL * scale {
                                return Err(Error::InvalidArgument(format!(
                                    "two-body integrals violate {:?} symmetry at ({i}{j}|{k}{l})",
                                    self.symmetry
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn symmetry_images(
        &self,
        i: usize,
        j: usize,
        k: usize,
        l: usize,
    ) -> Vec<(usize, usize, usize, usize)> {
        match self.symmetry {
            PermutationalSymmetry::Eightfold => eightfold_images(i, j, k, l).to_vec(),
            PermutationalSymmetry::Fourfold => {
                vec![(i, j, k, l), (k, l, i, j), (j, i, l, k), (l, k, j, i)]
            }
        }
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

    pub fn ms2(&self) -> i32 {
        self.ms2
    }

    pub fn core_energy(&self) -> f64 {
        self.core_energy
    }

    pub fn symmetry(&self) -> PermutationalSymmetry {
        self.symmetry
    }

    pub fn one_body(&self) -> &DMatrix<f64> {
        &self.one_body
    }

    pub fn orbsym(&self) -> &[u32] {
        &self.orbsym
    }

    /// Chemist-notation `(ij|kl)` over spatial orbitals.
    #[inline]
    pub fn eri(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n_spatial;
        self.two_body[((i * n + j) * n + k) * n + l]
    }

    pub fn two_body(&self) -> &[f64] {
        &self.two_body
    }

    pub fn with_electrons(mut self, n_electrons: usize) -> Self {
        self.n_electrons = n_electrons;
        self
    }

    pub fn with_core_energy(mut self, core_energy: f64) -> Self {
        self.core_energy = core_energy;
        self
    }

    pub fn set_one_body(&mut self, i: usize, j: usize, value: f64) {
        self.one_body[(i, j)] = value;
        self.one_body[(j, i)] = value;
    }

    /// Sets `(ij|kl)` and every entry related to it by the set's symmetry.
    pub fn set_eri(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        let n = self.n_spatial;
        for (a, b, c, d) in self.symmetry_images(i, j, k, l) {
            self.two_body[((a * n + b) * n + c) * n + d] = value;
        }
    }

    pub(crate) fn set_metadata(&mut self, ms2: i32, orbsym: Vec<u32>) {
        self.ms2 = ms2;
        if orbsym.len() == self.n_spatial {
            self.orbsym = orbsym;
        }
    }

    /// One-body integral between spin orbitals.
    #[inline]
    pub fn h_spin(&self, p: usize, s: usize) -> f64 {
        if p % 2 != s % 2 {
            0.0
        } else {
            self.one_body[(p / 2, s / 2)]
        }
    }

    /// Physicist-notation `<pq|st>` between spin orbitals, `(p̄s̄|q̄t̄)` when the
    /// spins match.
    #[inline]
    pub fn phys_spin(&self, p: usize, q: usize, s: usize, t: usize) -> f64 {
        if p % 2 != s % 2 || q % 2 != t % 2 {
            0.0
        } else {
            self.eri(p / 2, s / 2, q / 2, t / 2)
        }
    }
}

pub(crate) fn eightfold_images(
    i: usize,
    j: usize,
    k: usize,
    l: usize,
) -> [(usize, usize, usize, usize); 8] {
    [
        (i, j, k, l),
        (j, i, k, l),
        (i, j, l, k),
        (j, i, l, k),
        (k, l, i, j),
        (l, k, i, j),
        (k, l, j, i),
        (l, k, j, i),
    ]
}

/// Folds the `n_frozen` lowest spatial orbitals, doubly occupied, into the core
/// energy and an effective one-body operator for the remaining orbitals.
pub fn freeze_core(integrals: &IntegralSet, n_frozen: usize) -> Result<IntegralSet> {
    if 2 * n_frozen > integrals.n_electrons || n_frozen > integrals.n_spatial {
        return Err(Error::ElectronCount(format!(
            "cannot freeze {n_frozen} orbitals with {} electrons in {} orbitals",
            integrals.n_electrons, integrals.n_spatial
        )));
    }
    if n_frozen == 0 {
        return Ok(integrals.clone());
    }
    let n = integrals.n_spatial;
    let na = n - n_frozen;
    let core = 0..n_frozen;

    let mut e_core = integrals.core_energy;
    for c in core.clone() {
        e_core += 2.0 * integrals.one_body[(c, c)];
        for d in core.clone() {
            e_core += 2.0 * integrals.eri(c, c, d, d) - integrals.eri(c, d, d, c);
        }
    }

    let mut one_body = DMatrix::zeros(na, na);
    for a in 0..na {
        for b in 0..na {
            let (ga, gb) = (a + n_frozen, b + n_frozen);
            let mut v = integrals.one_body[(ga, gb)];
            for c in core.clone() {
                v += 2.0 * integrals.eri(ga, gb, c, c) - integrals.eri(ga, c, c, gb);
            }
            one_body[(a, b)] = v;
        }
    }

    let mut two_body = vec![0.0; na.pow(4)];
    for i in 0..na {
        for j in 0..na {
            for k in 0..na {
                for l in 0..na {
                    two_body[((i * na + j) * na + k) * na + l] =
                        integrals.eri(i + n_frozen, j + n_frozen, k + n_frozen, l + n_frozen);
                }
            }
        }
    }

    Ok(IntegralSet {
        n_spatial: na,
        n_electrons: integrals.n_electrons - 2 * n_frozen,
        ms2: integrals.ms2,
        one_body,
        two_body,
        core_energy: e_core,
        symmetry: integrals.symmetry,
        orbsym: integrals.orbsym[n_frozen..].to_vec(),
    })
}

/// Two-electron reduced Hamiltonian over the antisymmetric spin-orbital pair
/// basis.
#[derive(Debug, Clone)]
pub struct ReducedHamiltonian {
    k2: DMatrix<f64>,
    core_energy: f64,
    basis: OrbitalBasis,
    pairs: PairBasis,
}

impl ReducedHamiltonian {
    pub fn k2(&self) -> &DMatrix<f64> {
        &self.k2
    }

    pub fn core_energy(&self) -> f64 {
        self.core_energy
    }

    pub fn basis(&self) -> &OrbitalBasis {
        &self.basis
    }

    pub fn pairs(&self) -> &PairBasis {
        &self.pairs
    }

    pub fn n_spin(&self) -> usize {
        self.basis.n_spin()
    }

    pub fn n_electrons(&self) -> usize {
        self.basis.n_electrons()
    }
}

/// Assembles `K2` such that `Tr(K2 D) + core` is the energy of any 2-RDM `D`
/// stored with the pair-basis normalization `D[(pq),(st)] = 2<a†p a†q a_t a_s>`.
///
/// The one-body operator is spread over both pair slots with weight
/// `1/(N-1)` so that `K2` is symmetric.
pub fn build_reduced_hamiltonian(
    integrals: &IntegralSet,
    n_electrons: usize,
) -> Result<ReducedHamiltonian> {
    if n_electrons < 2 {
        return Err(Error::ElectronCount(format!(
            "the reduced Hamiltonian needs N >= 2, got {n_electrons}"
        )));
    }
    let basis = OrbitalBasis::new(integrals.n_spatial, n_electrons, 0)?;
    let r = basis.n_spin();
    let pairs = PairBasis::antisymmetric(r);
    let dim = pairs.dim();
    let inv = 1.0 / (n_electrons as f64 - 1.0);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };

    let mut k2 = DMatrix::zeros(dim, dim);
    for (a, &(p, q)) in pairs.pairs().iter().enumerate() {
        for (b, &(s, t)) in pairs.pairs().iter().enumerate().skip(a) {
            let two = integrals.phys_spin(p, q, s, t) - integrals.phys_spin(p, q, t, s);
            let one = integrals.h_spin(p, s) * delta(q, t) - integrals.h_spin(q, s) * delta(p, t)
                - integrals.h_spin(p, t) * delta(q, s)
                + integrals.h_spin(q, t) * delta(p, s);
            let v = 0.5 * (two + inv * one);
            k2[(a, b)] = v;
            k2[(b, a)] = v;
        }
    }
    Ok(ReducedHamiltonian {
        k2,
        core_energy: integrals.core_energy,
        basis,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_integrals_give_zero_k2() {
        let set = IntegralSet::zeros(3, 2, PermutationalSymmetry::Eightfold).with_core_energy(1.5);
        let h = build_reduced_hamiltonian(&set, 2).unwrap();
        assert_eq!(h.k2().amax(), 0.0);
        assert_eq!(h.core_energy(), 1.5);
        assert_eq!(h.k2().nrows(), 15);
    }

    #[test]
    fn reduced_hamiltonian_needs_two_electrons() {
        let set = IntegralSet::zeros(2, 1, PermutationalSymmetry::Eightfold);
        assert!(matches!(
            build_reduced_hamiltonian(&set, 1),
            Err(Error::ElectronCount(_))
        ));
    }

    #[test]
    fn freeze_nothing_is_identity() {
        let set = random_integral_set(3, 4, 7);
        assert_eq!(freeze_core(&set, 0).unwrap(), set);
    }

    #[test]
    fn freeze_single_orbital_closed_form() {
        let set = random_integral_set(2, 2, 11).with_core_energy(0.25);
        let frozen = freeze_core(&set, 1).unwrap();
        assert_eq!(frozen.n_spatial(), 1);
        assert_eq!(frozen.n_electrons(), 0);
        let expected = 0.25 + 2.0 * set.one_body()[(0, 0)] + set.eri(0, 0, 0, 0);
        assert!((frozen.core_energy() - expected).abs() < 1e-14);
        let h11 = set.one_body()[(1, 1)] + 2.0 * set.eri(1, 1, 0, 0) - set.eri(1, 0, 0, 1);
        assert!((frozen.one_body()[(0, 0)] - h11).abs() < 1e-14);
        assert_eq!(frozen.eri(0, 0, 0, 0), set.eri(1, 1, 1, 1));
    }

    #[test]
    fn freeze_too_many() {
        let set = random_integral_set(3, 2, 1);
        assert!(freeze_core(&set, 2).is_err());
    }

    #[test]
    fn symmetry_validation_rejects_broken_tensor() {
        let mut t = vec![0.0; 16];
        t[1] = 0.3; // (00|01) without its partners
        let err = IntegralSet::new(
            2,
            DMatrix::zeros(2, 2),
            t,
            0.0,
            PermutationalSymmetry::Eightfold,
        );
        assert!(err.is_err());
    }

    #[test]
    fn k2_linear_in_two_body() {
        let a = random_integral_set(2, 2, 3);
        let b = random_integral_set(2, 2, 4);
        let (alpha, beta) = (0.7, -1.3);
        let mut mix = IntegralSet::zeros(2, 2, PermutationalSymmetry::Eightfold);
        let mut only_one = IntegralSet::zeros(2, 2, PermutationalSymmetry::Eightfold);
        for i in 0..2 {
            for j in 0..2 {
                mix.set_one_body(i, j, a.one_body()[(i, j)]);
                only_one.set_one_body(i, j, a.one_body()[(i, j)]);
            }
        }
        let mut a_fixed = a.clone();
        let mut b_fixed = b.clone();
        for i in 0..2 {
            for j in 0..2 {
                b_fixed.set_one_body(i, j, a.one_body()[(i, j)]);
                a_fixed.set_one_body(i, j, a.one_body()[(i, j)]);
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        mix.two_body[((i * 2 + j) * 2 + k) * 2 + l] =
                            alpha * a.eri(i, j, k, l) + beta * b.eri(i, j, k, l);
                    }
                }
            }
        }
        let k = |s: &IntegralSet| build_reduced_hamiltonian(s, 2).unwrap().k2().clone();
        let k1 = k(&only_one);
        let lhs = k(&mix) - &k1;
        let rhs = (k(&a_fixed) - &k1) * alpha + (k(&b_fixed) - &k1) * beta;
        assert!((lhs - rhs).amax() < 1e-13);
    }
}
