//! Model Hamiltonians expressed as integral sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{IntegralSet, PermutationalSymmetry};
use crate::error::{Error, Result};

/// One-band Hubbard chain: `-t` between nearest neighbours and `U` on site.
///
/// The chain wraps when `periodic` and `sites > 2`; a two-site ring would
/// double-count its single bond. The electron count defaults to half filling.
pub fn hubbard(sites: usize, t: f64, u: f64, periodic: bool) -> Result<IntegralSet> {
    if sites < 2 {
        return Err(Error::InvalidArgument(format!(
            "Hubbard model needs at least 2 sites, got {sites}"
        )));
    }
    let mut set = IntegralSet::zeros(sites, sites, PermutationalSymmetry::Eightfold);
    for i in 0..sites - 1 {
        set.set_one_body(i, i + 1, -t);
    }
    if periodic && sites > 2 {
        set.set_one_body(sites - 1, 0, -t);
    }
    for i in 0..sites {
        set.set_eri(i, i, i, i, u);
    }
    Ok(set)
}

/// Reduced pairing Hamiltonian
/// `H = Σᵢ εᵢ (n_iα + n_iβ) - g Σᵢⱼ a†_iα a†_iβ a_jβ a_jα`.
///
/// The pair-hopping integrals `(ij|ij) = -g` are not invariant under the
/// full eightfold permutation group, so the set is [`PermutationalSymmetry::Fourfold`].
/// The electron count defaults to `levels.len()`.
pub fn pairing_hamiltonian(levels: &[f64], g: f64) -> Result<IntegralSet> {
    let n = levels.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "pairing model needs at least 2 levels, got {n}"
        )));
    }
    let mut set = IntegralSet::zeros(n, n, PermutationalSymmetry::Fourfold);
    for (i, &e) in levels.iter().enumerate() {
        set.set_one_body(i, i, e);
    }
    for i in 0..n {
        for j in 0..n {
            set.set_eri(i, j, i, j, -g);
        }
    }
    Ok(set)
}

/// Random eightfold-symmetric integrals with a positive semidefinite
/// two-electron tensor, `(ij|kl) = Σ_P L^P_ij L^P_kl`, for stress testing.
pub fn random_integral_set(n_spatial: usize, n_electrons: usize, seed: u64) -> IntegralSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_spatial;
    let mut set = IntegralSet::zeros(n, n_electrons, PermutationalSymmetry::Eightfold);
    for i in 0..n {
        set.set_one_body(i, i, -2.0 + 0.5 * i as f64 + rng.gen_range(-0.2..0.2));
        for j in 0..i {
            set.set_one_body(i, j, rng.gen_range(-0.3..0.3));
        }
    }
    let n_aux = n * (n + 1) / 2;
    let mut factors = vec![vec![0.0; n * n]; n_aux];
    for f in factors.iter_mut() {
        for i in 0..n {
            for j in 0..=i {
                let scale = if i == j { 0.6 } else { 0.2 };
                let v = rng.gen_range(-scale..scale);
                f[i * n + j] = v;
                f[j * n + i] = v;
            }
        }
    }
    for i in 0..n {
        for j in 0..=i {
            for k in 0..n {
                for l in 0..=k {
                    let v: f64 = factors
                        .iter()
                        .map(|f| f[i * n + j] * f[k * n + l])
                        .sum();
                    set.set_eri(i, j, k, l, v);
                }
            }
        }
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hubbard_structure() {
        let h = hubbard(4, 1.0, 8.0, true).unwrap();
        assert_eq!(h.one_body()[(0, 1)], -1.0);
        assert_eq!(h.one_body()[(3, 0)], -1.0);
        assert_eq!(h.one_body()[(0, 2)], 0.0);
        assert_eq!(h.eri(2, 2, 2, 2), 8.0);
        assert_eq!(h.eri(0, 0, 1, 1), 0.0);
        assert_eq!(h.core_energy(), 0.0);

        let open = hubbard(4, 1.0, 8.0, false).unwrap();
        assert_eq!(open.one_body()[(3, 0)], 0.0);

        let dimer = hubbard(2, 1.0, 4.0, true).unwrap();
        assert_eq!(dimer.one_body()[(0, 1)], -1.0);
        assert!(hubbard(1, 1.0, 1.0, false).is_err());
    }

    #[test]
    fn pairing_structure() {
        let p = pairing_hamiltonian(&[0.0, 1.0, 2.0], 0.5).unwrap();
        assert_eq!(p.one_body()[(2, 2)], 2.0);
        assert_eq!(p.eri(0, 1, 0, 1), -0.5);
        assert_eq!(p.eri(1, 0, 1, 0), -0.5);
        assert_eq!(p.eri(1, 1, 1, 1), -0.5);
        assert_eq!(p.eri(1, 0, 0, 1), 0.0);
        assert!(pairing_hamiltonian(&[1.0], 0.1).is_err());
    }

    #[test]
    fn random_sets_are_eightfold() {
        let s = random_integral_set(3, 2, 5);
        let rebuilt = IntegralSet::new(
            2,
            s.one_body().clone(),
            s.two_body().to_vec(),
            0.0,
            PermutationalSymmetry::Eightfold,
        );
        assert!(rebuilt.is_ok());
    }
}
