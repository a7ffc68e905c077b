//! Spin adaptation of the pair metric matrices.
//!
//! Spin orbitals are interleaved, `2i` is `iα` and `2i+1` is `iβ`. Triplet
//! blocks are always listed in the order `(1,-1)`, `(1,0)`, `(1,+1)`.

use nalgebra::DMatrix;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::basis::PairBasis;
use crate::error::{Error, Result};

use super::TwoRdm;

/// Index of the spatial pair `i <= j` among all such pairs, lexicographic.
pub fn singlet_pair_index(i: usize, j: usize, n_spatial: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n_spatial - i * (i + 1) / 2 + j
}

fn singlet_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// Orthogonal map from the antisymmetric spin-orbital pair basis to
/// two-electron spin eigenfunctions. Rows: singlets `(i<=j)`, then the
/// `ββ`, `(αβ+βα)/√2` and `αα` triplets over `i<j`.
pub fn d_spin_transform(n_spatial: usize) -> DMatrix<f64> {
    let n = n_spatial;
    let r = 2 * n;
    let pairs = PairBasis::antisymmetric(r);
    let spatial = PairBasis::antisymmetric(n);
    let ns = n * (n + 1) / 2;
    let nt = spatial.dim();
    let col = |p: usize, q: usize| pairs.index(p, q).expect("in range").0;
    let mut t = DMatrix::zeros(pairs.dim(), pairs.dim());
    for (row, &(i, j)) in singlet_pairs(n).iter().enumerate() {
        if i == j {
            t[(row, col(2 * i, 2 * i + 1))] = 1.0;
        } else {
            t[(row, col(2 * i, 2 * j + 1))] = FRAC_1_SQRT_2;
            t[(row, col(2 * i + 1, 2 * j))] = -FRAC_1_SQRT_2;
        }
    }
    for (k, &(i, j)) in spatial.pairs().iter().enumerate() {
        t[(ns + k, col(2 * i + 1, 2 * j + 1))] = 1.0;
        t[(ns + nt + k, col(2 * i, 2 * j + 1))] = FRAC_1_SQRT_2;
        t[(ns + nt + k, col(2 * i + 1, 2 * j))] = FRAC_1_SQRT_2;
        t[(ns + 2 * nt + k, col(2 * i, 2 * j))] = 1.0;
    }
    t
}

#[derive(Debug, Clone)]
pub struct SpinBlockedD {
    pub singlet: DMatrix<f64>,
    pub triplets: [DMatrix<f64>; 3],
}

impl SpinBlockedD {
    pub fn n_spatial(&self) -> usize {
        let ns = self.singlet.nrows();
        // ns = n(n+1)/2
        ((((8 * ns + 1) as f64).sqrt() as usize) - 1) / 2
    }
}

/// Diagonal blocks of `T D Tᵀ` with `T` from [`d_spin_transform`].
pub fn spin_adapt_d(d: &TwoRdm) -> Result<SpinBlockedD> {
    if !d.n_spin().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "odd number of spin orbitals: {}",
            d.n_spin()
        )));
    }
    let n = d.n_spin() / 2;
    let t = d_spin_transform(n);
    let m = &t * d.matrix() * t.transpose();
    let ns = n * (n + 1) / 2;
    let nt = n * n.saturating_sub(1) / 2;
    let block = |start: usize, len: usize| m.view((start, start), (len, len)).into_owned();
    Ok(SpinBlockedD {
        singlet: block(0, ns),
        triplets: [block(ns, nt), block(ns + nt, nt), block(ns + 2 * nt, nt)],
    })
}

/// Coefficients `(row, col, c)` such that
/// `Σ_k D00_{ik;jk} = Σ c · singlet[row, col]`.
pub fn singlet_contraction_terms(i: usize, j: usize, n_spatial: usize) -> Vec<(usize, usize, f64)> {
    let f = |a: usize, b: usize| if a == b { std::f64::consts::SQRT_2 } else { 1.0 };
    (0..n_spatial)
        .map(|k| {
            (
                singlet_pair_index(i, k, n_spatial),
                singlet_pair_index(j, k, n_spatial),
                0.5 * f(i, k) * f(j, k),
            )
        })
        .collect()
}

/// Coefficients `(row, col, c)` such that
/// `Σ_k T_{ik;jk} = Σ c · triplet[row, col]` for any triplet component.
pub fn triplet_contraction_terms(i: usize, j: usize, n_spatial: usize) -> Vec<(usize, usize, f64)> {
    let spatial = PairBasis::antisymmetric(n_spatial);
    (0..n_spatial)
        .filter(|&k| k != i && k != j)
        .map(|k| {
            let (a, sa) = spatial.index(i, k).expect("in range");
            let (b, sb) = spatial.index(j, k).expect("in range");
            (a, b, 0.5 * sa * sb)
        })
        .collect()
}

fn contract(block: &DMatrix<f64>, n: usize, terms: fn(usize, usize, usize) -> Vec<(usize, usize, f64)>) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        terms(i, j, n)
            .into_iter()
            .map(|(a, b, c)| c * block[(a, b)])
            .sum()
    })
}

/// `Σ_k D00_{ik;jk}`, equal to `(N_s+1) ¹D_α` for a singlet.
pub fn singlet_contraction(singlet: &DMatrix<f64>, n_spatial: usize) -> DMatrix<f64> {
    contract(singlet, n_spatial, singlet_contraction_terms)
}

/// `Σ_k T_{ik;jk}`, equal to `(N_s-1) ¹D_α` for a singlet.
pub fn triplet_contraction(triplet: &DMatrix<f64>, n_spatial: usize) -> DMatrix<f64> {
    contract(triplet, n_spatial, triplet_contraction_terms)
}

/// Orthogonal map on the ordered spin-orbital pair basis. Row blocks, each
/// `r_s²` long and indexed `i r_s + j`:
///
/// * `(0,0)`: `(αα + ββ)/√2`
/// * `(1,-1)`: `βα`
/// * `(1,0)`: `(αα - ββ)/√2`
/// * `(1,+1)`: `αβ`
///
/// where `σσ'` names the ordered pair `(iσ, jσ')`.
pub fn g_spin_transform(n_spatial: usize) -> DMatrix<f64> {
    let n = n_spatial;
    let r = 2 * n;
    let b = n * n;
    let col = |p: usize, q: usize| p * r + q;
    let mut u = DMatrix::zeros(r * r, r * r);
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let (ia, ib, ja, jb) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
            u[(k, col(ia, ja))] = FRAC_1_SQRT_2;
            u[(k, col(ib, jb))] = FRAC_1_SQRT_2;
            u[(b + k, col(ib, ja))] = 1.0;
            u[(2 * b + k, col(ia, ja))] = FRAC_1_SQRT_2;
            u[(2 * b + k, col(ib, jb))] = -FRAC_1_SQRT_2;
            u[(3 * b + k, col(ia, jb))] = 1.0;
        }
    }
    u
}

#[derive(Debug, Clone)]
pub struct SpinBlockedG {
    pub singlet: DMatrix<f64>,
    pub triplets: [DMatrix<f64>; 3],
    /// Singlet rows by `(1,0)` columns. Vanishes for spin eigenstates; kept so
    /// that [`SpinBlockedG::reassemble`] is exact for any `Ŝz`-conserving `G`.
    pub singlet_triplet: DMatrix<f64>,
}

impl SpinBlockedG {
    pub fn n_spatial(&self) -> usize {
        (self.singlet.nrows() as f64).sqrt().round() as usize
    }

    pub fn trace(&self) -> f64 {
        self.singlet.trace() + self.triplets.iter().map(|t| t.trace()).sum::<f64>()
    }

    /// Undoes [`spin_adapt_g`].
    pub fn reassemble(&self) -> DMatrix<f64> {
        let n = self.n_spatial();
        let b = n * n;
        let mut m = DMatrix::zeros(4 * b, 4 * b);
        m.view_mut((0, 0), (b, b)).copy_from(&self.singlet);
        for (k, t) in self.triplets.iter().enumerate() {
            let s = (k + 1) * b;
            m.view_mut((s, s), (b, b)).copy_from(t);
        }
        m.view_mut((0, 2 * b), (b, b)).copy_from(&self.singlet_triplet);
        m.view_mut((2 * b, 0), (b, b))
            .copy_from(&self.singlet_triplet.transpose());
        let u = g_spin_transform(n);
        u.transpose() * m * u
    }
}

/// Blocks `U G Uᵀ` with `U` from [`g_spin_transform`]. Couplings between
/// different `m_s` vanish whenever `Ŝz` is conserved and are not stored.
pub fn spin_adapt_g(g: &DMatrix<f64>, n_electrons: usize) -> Result<SpinBlockedG> {
    if !n_electrons.is_multiple_of(2) {
        return Err(Error::ElectronCount(format!(
            "spin-adapted blocks need an even electron count, got {n_electrons}"
        )));
    }
    let r = (g.nrows() as f64).sqrt().round() as usize;
    if r * r != g.nrows() || g.ncols() != g.nrows() || !r.is_multiple_of(2) {
        return Err(Error::Dimension {
            expected: r * r,
            found: g.nrows(),
        });
    }
    let n = r / 2;
    let b = n * n;
    let u = g_spin_transform(n);
    let m = &u * g * u.transpose();
    let block = |a: usize, c: usize| m.view((a * b, c * b), (b, b)).into_owned();
    Ok(SpinBlockedG {
        singlet: block(0, 0),
        triplets: [block(1, 1), block(2, 2), block(3, 3)],
        singlet_triplet: block(0, 2),
    })
}
