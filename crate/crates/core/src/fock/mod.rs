//! Brute-force configuration interaction over occupation bitmasks.
//!
//! A determinant `|b⟩` is `a†_{p1} a†_{p2} … a†_{pk} |0⟩` with
//! `p1 < p2 < … < pk` the set bits of `b`. Creating or annihilating `p`
//! picks up `(-1)^{#occupied orbitals below p}`.

mod agp;

pub use agp::{agp_state, check_agp_annihilators, check_agp_annihilators_with_sign};
pub use crate::linalg::numeric_rank;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::basis::PairBasis;
use crate::error::{Error, Result};
use crate::integrals::IntegralSet;
use crate::rdm::{OneRdm, TwoRdm};

/// Largest determinant space diagonalized densely.
pub const MAX_FCI_DIM: usize = 20_000;

/// Largest space enumerated at all.
const MAX_ENUMERATED: usize = 5_000_000;

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Create(usize),
    Annihilate(usize),
}

#[inline]
fn parity_below(bits: u64, p: usize) -> f64 {
    if (bits & ((1u64 << p) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[inline]
pub fn create(bits: u64, p: usize) -> Option<(u64, f64)> {
    if bits & (1 << p) != 0 {
        None
    } else {
        Some((bits | (1 << p), parity_below(bits, p)))
    }
}

#[inline]
pub fn annihilate(bits: u64, p: usize) -> Option<(u64, f64)> {
    if bits & (1 << p) == 0 {
        None
    } else {
        Some((bits & !(1 << p), parity_below(bits, p)))
    }
}

/// Applies an operator string right to left, so `ops[last]` acts first.
pub fn apply_ops(bits: u64, ops: &[Op]) -> Option<(u64, f64)> {
    let mut b = bits;
    let mut sign = 1.0;
    for op in ops.iter().rev() {
        let (nb, s) = match *op {
            Op::Create(p) => create(b, p)?,
            Op::Annihilate(p) => annihilate(b, p)?,
        };
        b = nb;
        sign *= s;
    }
    Some((b, sign))
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc.min(usize::MAX as u128) as usize
}

/// Occupation bitmasks in ascending numeric order.
#[derive(Debug, Clone)]
pub struct DeterminantBasis {
    n_spin: usize,
    n_electrons: usize,
    dets: Vec<u64>,
    lookup: HashMap<u64, usize>,
}

impl DeterminantBasis {
    /// All `C(r, N)` determinants.
    pub fn full(n_spin: usize, n_electrons: usize) -> Result<Self> {
        Self::enumerate(n_spin, n_electrons, |_| true, binomial(n_spin, n_electrons))
    }

    /// Determinants with equal numbers of α (even) and β (odd) electrons.
    pub fn sz_zero(n_spin: usize, n_electrons: usize) -> Result<Self> {
        if !n_electrons.is_multiple_of(2) || !n_spin.is_multiple_of(2) {
            return Err(Error::ElectronCount(format!(
                "Sz = 0 needs even N and r, got N = {n_electrons}, r = {n_spin}"
            )));
        }
        let half = binomial(n_spin / 2, n_electrons / 2);
        let alpha_mask = (0..n_spin).step_by(2).fold(0u64, |m, p| m | 1 << p);
        Self::enumerate(
            n_spin,
            n_electrons,
            |b| (b & alpha_mask).count_ones() as usize * 2 == n_electrons,
            half.saturating_mul(half),
        )
    }

    /// Arbitrary determinant list; duplicates and wrong electron counts are
    /// rejected.
    pub fn from_dets(n_spin: usize, n_electrons: usize, mut dets: Vec<u64>) -> Result<Self> {
        check_sizes(n_spin, n_electrons)?;
        dets.sort_unstable();
        for w in dets.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidArgument(format!("duplicate determinant {:#b}", w[0])));
            }
        }
        for &d in &dets {
            if d.count_ones() as usize != n_electrons || (n_spin < 64 && d >> n_spin != 0) {
                return Err(Error::InvalidArgument(format!(
                    "determinant {d:#b} does not hold {n_electrons} electrons in {n_spin} orbitals"
                )));
            }
        }
        Ok(Self::with_dets(n_spin, n_electrons, dets))
    }

    fn with_dets(n_spin: usize, n_electrons: usize, dets: Vec<u64>) -> Self {
        let lookup = dets.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        Self {
            n_spin,
            n_electrons,
            dets,
            lookup,
        }
    }

    fn enumerate(
        n_spin: usize,
        n_electrons: usize,
        keep: impl Fn(u64) -> bool,
        expected: usize,
    ) -> Result<Self> {
        check_sizes(n_spin, n_electrons)?;
        if expected > MAX_ENUMERATED {
            return Err(Error::BasisTooLarge {
                count: expected,
                limit: MAX_ENUMERATED,
            });
        }
        let mut dets = Vec::with_capacity(expected);
        if n_electrons == 0 {
            dets.push(0);
        } else {
            // Gosper's hack walks N-bit masks in increasing order.
            let mut b: u64 = (1u64 << n_electrons) - 1;
            let limit = if n_spin == 64 { u64::MAX } else { 1u64 << n_spin };
            while b < limit {
                if keep(b) {
                    dets.push(b);
                }
                let c = b & b.wrapping_neg();
                let r = b + c;
                if r == 0 {
                    break;
                }
                b = (((r ^ b) >> 2) / c) | r;
            }
        }
        Ok(Self::with_dets(n_spin, n_electrons, dets))
    }

    pub fn n_spin(&self) -> usize {
        self.n_spin
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn len(&self) -> usize {
        self.dets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dets.is_empty()
    }

    pub fn dets(&self) -> &[u64] {
        &self.dets
    }

    pub fn det(&self, i: usize) -> u64 {
        self.dets[i]
    }

    pub fn index_of(&self, bits: u64) -> Option<usize> {
        self.lookup.get(&bits).copied()
    }
}

fn check_sizes(n_spin: usize, n_electrons: usize) -> Result<()> {
    if n_spin > 63 {
        return Err(Error::OutOfRange {
            what: "spin orbital count",
            index: n_spin,
            limit: 63,
        });
    }
    if n_electrons > n_spin {
        return Err(Error::ElectronCount(format!(
            "{n_electrons} electrons in {n_spin} spin orbitals"
        )));
    }
    Ok(())
}

/// A real wavefunction over a determinant basis. Determinants outside the
/// basis have zero amplitude.
#[derive(Debug, Clone)]
pub struct FockState {
    basis: DeterminantBasis,
    coefficients: DVector<f64>,
}

impl FockState {
    pub fn new(basis: DeterminantBasis, coefficients: DVector<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::Dimension {
                expected: basis.len(),
                found: coefficients.len(),
            });
        }
        Ok(Self {
            basis,
            coefficients,
        })
    }

    pub fn basis(&self) -> &DeterminantBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn coefficient(&self, bits: u64) -> f64 {
        self.basis
            .index_of(bits)
            .map_or(0.0, |i| self.coefficients[i])
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.norm()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        self.coefficients /= n;
        Ok(())
    }

    fn require_normalized(&self) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    /// `ops |Ψ⟩` as a sparse map from determinant to amplitude.
    pub fn apply(&self, ops: &[Op]) -> HashMap<u64, f64> {
        let mut out = HashMap::new();
        for (&b, &c) in self.basis.dets.iter().zip(self.coefficients.iter()) {
            if c == 0.0 {
                continue;
            }
            if let Some((nb, s)) = apply_ops(b, ops) {
                *out.entry(nb).or_insert(0.0) += s * c;
            }
        }
        out
    }

    /// `⟨Ψ| ops |Ψ⟩`.
    pub fn expectation(&self, ops: &[Op]) -> f64 {
        let mut acc = 0.0;
        for (&b, &c) in self.basis.dets.iter().zip(self.coefficients.iter()) {
            if c == 0.0 {
                continue;
            }
            if let Some((nb, s)) = apply_ops(b, ops) {
                acc += s * c * self.coefficient(nb);
            }
        }
        acc
    }

    /// `⟨Ψ|Ĥ|Ψ⟩` including the core energy.
    pub fn energy(&self, integrals: &IntegralSet) -> f64 {
        let mut acc = 0.0;
        for (&b, &c) in self.basis.dets.iter().zip(self.coefficients.iter()) {
            if c == 0.0 {
                continue;
            }
            for (nb, v) in apply_hamiltonian(integrals, b) {
                acc += c * v * self.coefficient(nb);
            }
        }
        acc / self.coefficients.norm_squared() + integrals.core_energy()
    }
}

/// `Ĥ|b⟩` without the core energy, built from chemist-notation spatial
/// integrals with explicit spin sums:
/// `Σ h_pq a†pσ a_qσ + ½ Σ (pq|rs) a†pσ a†rτ a_sτ a_qσ`.
pub fn apply_hamiltonian(integrals: &IntegralSet, bits: u64) -> Vec<(u64, f64)> {
    let r = integrals.n_spin();
    let h = integrals.one_body();
    let mut out: Vec<(u64, f64)> = Vec::new();
    let occupied: Vec<usize> = (0..r).filter(|&p| bits >> p & 1 == 1).collect();
    for &q in &occupied {
        let (b1, s1) = annihilate(bits, q).expect("occupied");
        for p in (q % 2..r).step_by(2) {
            let v = h[(p / 2, q / 2)];
            if v == 0.0 {
                continue;
            }
            if let Some((b2, s2)) = create(b1, p) {
                out.push((b2, v * s1 * s2));
            }
        }
    }
    for &q in &occupied {
        let (b1, s1) = annihilate(bits, q).expect("occupied");
        for &s in &occupied {
            if s == q {
                continue;
            }
            let (b2, s2) = annihilate(b1, s).expect("occupied");
            for rr in (s % 2..r).step_by(2) {
                let Some((b3, s3)) = create(b2, rr) else {
                    continue;
                };
                for p in (q % 2..r).step_by(2) {
                    let v = integrals.eri(p / 2, q / 2, rr / 2, s / 2);
                    if v == 0.0 {
                        continue;
                    }
                    if let Some((b4, s4)) = create(b3, p) {
                        out.push((b4, 0.5 * v * s1 * s2 * s3 * s4));
                    }
                }
            }
        }
    }
    out
}

/// Dense Hamiltonian over `basis`, core energy on the diagonal.
pub fn hamiltonian_matrix(integrals: &IntegralSet, basis: &DeterminantBasis) -> Result<DMatrix<f64>> {
    if basis.n_spin() != integrals.n_spin() {
        return Err(Error::Dimension {
            expected: integrals.n_spin(),
            found: basis.n_spin(),
        });
    }
    let n = basis.len();
    let mut m = DMatrix::zeros(n, n);
    for (j, &b) in basis.dets.iter().enumerate() {
        for (nb, v) in apply_hamiltonian(integrals, b) {
            if let Some(i) = basis.index_of(nb) {
                m[(i, j)] += v;
            }
        }
        m[(j, j)] += integrals.core_energy();
    }
    Ok(m)
}

/// Lowest eigenpair over the given basis.
pub fn ground_state_in(integrals: &IntegralSet, basis: DeterminantBasis) -> Result<(f64, FockState)> {
    if basis.len() > MAX_FCI_DIM {
        return Err(Error::BasisTooLarge {
            count: basis.len(),
            limit: MAX_FCI_DIM,
        });
    }
    if basis.is_empty() {
        return Err(Error::InvalidArgument("empty determinant basis".into()));
    }
    let h = hamiltonian_matrix(integrals, &basis)?;
    let eig = h.symmetric_eigen();
    let (k, &e) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let mut v = eig.eigenvectors.column(k).into_owned();
    // fix the overall sign so runs are reproducible
    if let Some(big) = v.iter().cloned().max_by(|a, b| a.abs().total_cmp(&b.abs())) {
        if big < 0.0 {
            v = -v;
        }
    }
    Ok((e, FockState::new(basis, v)?))
}

/// Full CI ground state over all `C(r, N)` determinants.
pub fn fci_ground_state(integrals: &IntegralSet, n_electrons: usize) -> Result<(f64, FockState)> {
    let count = binomial(integrals.n_spin(), n_electrons);
    if count > MAX_FCI_DIM {
        return Err(Error::BasisTooLarge {
            count,
            limit: MAX_FCI_DIM,
        });
    }
    ground_state_in(integrals, DeterminantBasis::full(integrals.n_spin(), n_electrons)?)
}

/// Full CI restricted to `Sz = 0`.
pub fn fci_ground_state_sz_zero(integrals: &IntegralSet, n_electrons: usize) -> Result<(f64, FockState)> {
    let half = binomial(integrals.n_spatial(), n_electrons / 2);
    if half.saturating_mul(half) > MAX_FCI_DIM {
        return Err(Error::BasisTooLarge {
            count: half.saturating_mul(half),
            limit: MAX_FCI_DIM,
        });
    }
    ground_state_in(integrals, DeterminantBasis::sz_zero(integrals.n_spin(), n_electrons)?)
}

/// Energy of a single determinant given by its occupied spin orbitals.
pub fn determinant_energy(integrals: &IntegralSet, occupied: &[usize]) -> Result<f64> {
    let state = hf_state(integrals.n_spin(), occupied)?;
    Ok(state.energy(integrals))
}

/// Energy of the closed-shell determinant filling the lowest `N/2` spatial
/// orbitals (the lowest `N` spin orbitals for odd `N`).
pub fn reference_energy(integrals: &IntegralSet, n_electrons: usize) -> Result<f64> {
    let occ: Vec<usize> = (0..n_electrons).collect();
    determinant_energy(integrals, &occ)
}

/// Single determinant with the listed spin orbitals occupied.
pub fn hf_state(n_spin: usize, occupied: &[usize]) -> Result<FockState> {
    let mut bits = 0u64;
    for &p in occupied {
        if p >= n_spin {
            return Err(Error::OutOfRange {
                what: "spin orbital",
                index: p,
                limit: n_spin,
            });
        }
        if bits >> p & 1 == 1 {
            return Err(Error::InvalidArgument(format!("orbital {p} listed twice")));
        }
        bits |= 1 << p;
    }
    let basis = DeterminantBasis::from_dets(n_spin, occupied.len(), vec![bits])?;
    FockState::new(basis, DVector::from_element(1, 1.0))
}

/// `¹D^p_s = ⟨a†p a_s⟩`.
pub fn one_rdm_from_state(state: &FockState) -> Result<OneRdm> {
    state.require_normalized()?;
    let r = state.basis.n_spin;
    let mut m = DMatrix::zeros(r, r);
    for (&b, &c) in state.basis.dets.iter().zip(state.coefficients.iter()) {
        if c == 0.0 {
            continue;
        }
        for s in (0..r).filter(|&s| b >> s & 1 == 1) {
            let (b1, s1) = annihilate(b, s).expect("occupied");
            for p in 0..r {
                if let Some((b2, s2)) = create(b1, p) {
                    m[(p, s)] += c * s1 * s2 * state.coefficient(b2);
                }
            }
        }
    }
    Ok(OneRdm::from_matrix(m))
}

/// `D[(pq),(st)] = 2 ⟨a†p a†q a_t a_s⟩` over `p<q`, `s<t`.
pub fn rdm_from_state(state: &FockState) -> Result<TwoRdm> {
    state.require_normalized()?;
    let r = state.basis.n_spin;
    let pairs = PairBasis::antisymmetric(r);
    let mut d = DMatrix::zeros(pairs.dim(), pairs.dim());
    for (&b, &c) in state.basis.dets.iter().zip(state.coefficients.iter()) {
        if c == 0.0 {
            continue;
        }
        for (col, &(s, t)) in pairs.pairs().iter().enumerate() {
            let Some((b1, s1)) = apply_ops(b, &[Op::Annihilate(t), Op::Annihilate(s)]) else {
                continue;
            };
            for (row, &(p, q)) in pairs.pairs().iter().enumerate() {
                if let Some((b2, s2)) = apply_ops(b1, &[Op::Create(p), Op::Create(q)]) {
                    d[(row, col)] += 2.0 * c * s1 * s2 * state.coefficient(b2);
                }
            }
        }
    }
    TwoRdm::new(r, state.basis.n_electrons, d)
}

/// `Q[(pq),(st)] = 2 ⟨a_p a_q a†t a†s⟩` evaluated directly.
pub fn q_from_state(state: &FockState) -> Result<DMatrix<f64>> {
    state.require_normalized()?;
    let r = state.basis.n_spin;
    let pairs = PairBasis::antisymmetric(r);
    let dim = pairs.dim();
    Ok(DMatrix::from_fn(dim, dim, |i, j| {
        let (p, q) = pairs.pair(i);
        let (s, t) = pairs.pair(j);
        2.0 * state.expectation(&[
            Op::Annihilate(p),
            Op::Annihilate(q),
            Op::Create(t),
            Op::Create(s),
        ])
    }))
}

/// `G[(pq),(st)] = ⟨a†p a_q a†t a_s⟩` evaluated directly.
pub fn g_from_state(state: &FockState) -> Result<DMatrix<f64>> {
    state.require_normalized()?;
    let r = state.basis.n_spin;
    Ok(DMatrix::from_fn(r * r, r * r, |i, j| {
        let (p, q) = (i / r, i % r);
        let (s, t) = (j / r, j % r);
        state.expectation(&[Op::Create(p), Op::Annihilate(q), Op::Create(t), Op::Annihilate(s)])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::{hubbard, pairing_hamiltonian, random_integral_set};
    use crate::linalg::min_eigenvalue;
    use crate::rdm::{contract_to_1rdm, d_to_g, d_to_q, energy};
    use crate::integrals::build_reduced_hamiltonian;

    /// List-based reference: a state is a list of creation operators in
    /// application order, normalized by bubble sort.
    fn reference_apply(occ: &[usize], op: Op) -> Option<(Vec<usize>, f64)> {
        match op {
            Op::Create(p) => {
                if occ.contains(&p) {
                    return None;
                }
                let mut list = vec![p];
                list.extend_from_slice(occ);
                let mut sign = 1.0;
                for i in 0..list.len() {
                    for j in 0..list.len() - 1 - i {
                        if list[j] > list[j + 1] {
                            list.swap(j, j + 1);
                            sign = -sign;
                        }
                    }
                }
                Some((list, sign))
            }
            Op::Annihilate(p) => {
                let pos = occ.iter().position(|&x| x == p)?;
                let mut list = occ.to_vec();
                list.remove(pos);
                Some((list, if pos % 2 == 0 { 1.0 } else { -1.0 }))
            }
        }
    }

    fn to_list(bits: u64) -> Vec<usize> {
        (0..64).filter(|&p| bits >> p & 1 == 1).collect()
    }

    #[test]
    fn two_body_parity_matches_reference_exhaustively() {
        let r = 8;
        for bits in 0u64..(1 << r) {
            for p in 0..r {
                for q in 0..r {
                    for s in 0..r {
                        for t in 0..r {
                            let ops = [Op::Create(p), Op::Create(q), Op::Annihilate(t), Op::Annihilate(s)];
                            let fast = apply_ops(bits, &ops);
                            let mut slow = Some((to_list(bits), 1.0));
                            for &op in ops.iter().rev() {
                                slow = slow.and_then(|(l, sg)| {
                                    reference_apply(&l, op).map(|(nl, s2)| (nl, sg * s2))
                                });
                            }
                            match (fast, slow) {
                                (None, None) => {}
                                (Some((b, s1)), Some((l, s2))) => {
                                    assert_eq!(to_list(b), l);
                                    assert_eq!(s1, s2);
                                }
                                _ => panic!("mismatch at {bits:#b} {ops:?}"),
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn basis_sizes_and_lookup() {
        let b = DeterminantBasis::full(8, 4).unwrap();
        assert_eq!(b.len(), 70);
        assert!(b.dets().windows(2).all(|w| w[0] < w[1]));
        for (i, &d) in b.dets().iter().enumerate() {
            assert_eq!(b.index_of(d), Some(i));
        }
        assert_eq!(DeterminantBasis::sz_zero(8, 4).unwrap().len(), 36);
        assert_eq!(DeterminantBasis::full(4, 0).unwrap().len(), 1);
        assert!(DeterminantBasis::sz_zero(8, 3).is_err());
        assert!(DeterminantBasis::from_dets(4, 2, vec![3, 3]).is_err());
        assert!(DeterminantBasis::from_dets(4, 2, vec![7]).is_err());
    }

    #[test]
    fn hubbard_dimer_fci() {
        let h = hubbard(2, 1.0, 4.0, false).unwrap();
        let (e, _) = fci_ground_state(&h, 2).unwrap();
        let exact = 2.0 - (4.0f64 + 4.0).sqrt();
        assert!((e - exact).abs() < 1e-12);
        let free = hubbard(2, 1.0, 0.0, false).unwrap();
        assert!((fci_ground_state(&free, 2).unwrap().0 + 2.0).abs() < 1e-12);
    }

    #[test]
    fn uncoupled_pairing_fills_lowest_levels() {
        let p = pairing_hamiltonian(&[0.0, 1.0, 2.0, 3.0], 0.0).unwrap();
        let (e, _) = fci_ground_state(&p, 4).unwrap();
        assert!((e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_pairing_closed_form() {
        // -g k (Ω - k + 1) for k pairs in Ω degenerate levels
        let p = pairing_hamiltonian(&[0.0; 4], 0.5).unwrap();
        let (e, _) = fci_ground_state(&p, 4).unwrap();
        assert!((e + 3.0).abs() < 1e-12);
    }

    #[test]
    fn guard_reports_count() {
        let h = hubbard(10, 1.0, 1.0, true).unwrap();
        match fci_ground_state(&h, 10) {
            Err(Error::BasisTooLarge { count, limit }) => {
                assert_eq!(count, 184_756);
                assert_eq!(limit, MAX_FCI_DIM);
            }
            other => panic!("expected guard, got {other:?}"),
        }
    }

    #[test]
    fn determinant_rdm() {
        let s = hf_state(4, &[1, 2]).unwrap();
        let d = rdm_from_state(&s).unwrap();
        let pairs = PairBasis::antisymmetric(4);
        let (k, _) = pairs.index(1, 2).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == k && j == k { 2.0 } else { 0.0 };
                assert_eq!(d.matrix()[(i, j)], want);
            }
        }
        assert!(hf_state(4, &[1, 1]).is_err());
        assert!(hf_state(4, &[5]).is_err());
        assert_eq!(hf_state(4, &[0, 1]).unwrap().basis().det(0), 0b0011);
    }

    #[test]
    fn unnormalized_state_rejected() {
        let basis = DeterminantBasis::full(4, 2).unwrap();
        let s = FockState::new(basis, DVector::from_element(6, 1.0)).unwrap();
        assert!(matches!(rdm_from_state(&s), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn rdms_of_random_states_match_direct_evaluation() {
        let set = random_integral_set(3, 2, 11);
        let (e, psi) = fci_ground_state(&set, 2).unwrap();
        let d = rdm_from_state(&psi).unwrap();
        let one = one_rdm_from_state(&psi).unwrap();
        assert!((contract_to_1rdm(&d).unwrap().matrix - &one.matrix).amax() < 1e-12);
        assert!((d_to_q(&d).unwrap() - q_from_state(&psi).unwrap()).amax() < 1e-12);
        assert!((d_to_g(&d).unwrap() - g_from_state(&psi).unwrap()).amax() < 1e-12);

        let h = build_reduced_hamiltonian(&set, 2).unwrap();
        assert!((energy(&h, &d).unwrap() - e).abs() < 1e-10);
        assert!((psi.energy(&set) - e).abs() < 1e-10);
        for m in [d.matrix().clone(), d_to_q(&d).unwrap(), d_to_g(&d).unwrap()] {
            assert!(min_eigenvalue(&m) > -1e-10);
        }
    }

    #[test]
    fn determinant_energy_matches_slater_rules() {
        let set = random_integral_set(3, 2, 4);
        let e = reference_energy(&set, 2).unwrap();
        let h = set.one_body();
        let want = 2.0 * h[(0, 0)] + set.eri(0, 0, 0, 0) + set.core_energy();
        assert!((e - want).abs() < 1e-12);
    }
}
