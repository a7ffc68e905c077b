//! Antisymmetrized geminal power states and their annihilators.
//!
//! Signed spatial labels `+i` and `-i` stand for `iα` and `iβ`.

use nalgebra::DVector;

use super::{DeterminantBasis, FockState, Op};
use crate::error::{Error, Result};

/// `(Σ_i γ_i a†_{iα} a†_{iβ})^{N/2} |0⟩`, normalized. The amplitude of a
/// seniority-zero determinant is the product of the `γ_i` of its pairs.
pub fn agp_state(gamma: &[f64], n_electrons: usize) -> Result<FockState> {
    if !n_electrons.is_multiple_of(2) {
        return Err(Error::ElectronCount(format!(
            "AGP needs an even electron count, got {n_electrons}"
        )));
    }
    let k = n_electrons / 2;
    let nonzero = gamma.iter().filter(|g| **g != 0.0).count();
    if nonzero < k {
        return Err(Error::InvalidArgument(format!(
            "{k} pairs need at least {k} nonzero amplitudes, got {nonzero}"
        )));
    }
    let n = gamma.len();
    let mut dets = Vec::new();
    let mut amps = Vec::new();
    for mask in 0u64..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let mut bits = 0u64;
        let mut a = 1.0;
        for i in (0..n).filter(|&i| mask >> i & 1 == 1) {
            bits |= 0b11 << (2 * i);
            a *= gamma[i];
        }
        if a != 0.0 {
            dets.push(bits);
            amps.push((bits, a));
        }
    }
    let basis = DeterminantBasis::from_dets(2 * n, n_electrons, dets)?;
    let mut c = DVector::zeros(basis.len());
    for (bits, a) in amps {
        c[basis.index_of(bits).expect("listed")] = a;
    }
    let mut state = FockState::new(basis, c)?;
    state.normalize()?;
    Ok(state)
}

fn spin_orbital(label: i64) -> usize {
    let i = (label.unsigned_abs() - 1) as usize;
    if label > 0 {
        2 * i
    } else {
        2 * i + 1
    }
}

/// Largest norm of `Q̂†_ij |Ψ_AGP⟩` over the `r(r-2)/2` distinct operators
/// `Q̂†_ij = γ_i a†_i a_j - sign(ij) γ_j a†_{-j} a_{-i}`.
pub fn check_agp_annihilators(gamma: &[f64], n_electrons: usize) -> Result<f64> {
    Ok(annihilator_norms(gamma, n_electrons, 1.0)?.0)
}

/// As [`check_agp_annihilators`] with the second term multiplied by `sign`;
/// `sign = -1` gives operators that must not annihilate the state. Also
/// returns the number of operators applied.
pub fn check_agp_annihilators_with_sign(
    gamma: &[f64],
    n_electrons: usize,
    sign: f64,
) -> Result<(f64, usize)> {
    annihilator_norms(gamma, n_electrons, sign)
}

fn annihilator_norms(gamma: &[f64], n_electrons: usize, flip: f64) -> Result<(f64, usize)> {
    let state = agp_state(gamma, n_electrons)?;
    let n = gamma.len() as i64;
    let labels: Vec<i64> = (1..=n).flat_map(|i| [i, -i]).collect();
    let g = |l: i64| gamma[(l.unsigned_abs() - 1) as usize];
    let mut worst = 0.0f64;
    let mut count = 0;
    for &i in &labels {
        for &j in &labels {
            if i == j || i == -j {
                continue;
            }
            // (i, j) and (-j, -i) give the same operator up to sign
            if (-j, -i) < (i, j) {
                continue;
            }
            count += 1;
            let sign_ij = (i.signum() * j.signum()) as f64;
            let mut out = state.apply(&[Op::Create(spin_orbital(i)), Op::Annihilate(spin_orbital(j))]);
            for v in out.values_mut() {
                *v *= g(i);
            }
            let second = state.apply(&[Op::Create(spin_orbital(-j)), Op::Annihilate(spin_orbital(-i))]);
            for (b, v) in second {
                *out.entry(b).or_insert(0.0) -= flip * sign_ij * g(j) * v;
            }
            let norm = out.values().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(norm);
        }
    }
    Ok((worst, count))
}
