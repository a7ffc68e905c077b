//! Reduced density matrices and the linear maps between their metric forms.
//!
//! Conventions, fixed across the crate:
//!
//! * `D` lives on the antisymmetric pair basis with
//!   `D[(pq),(st)] = 2 <a†p a†q a_t a_s>`, so `Tr D = N(N-1)`.
//! * `Q` uses the same basis with `Q[(pq),(st)] = 2 <a_p a_q a†t a†s>`, so
//!   `Tr Q = (r-N)(r-N-1)`.
//! * `G` lives on the ordered pair basis with
//!   `G[(pq),(st)] = <a†p a_q a†t a_s>`, so `Tr G = N(r-N+1)`.
//! * `¹D^p_s = <a†p a_s>`.
//!
//! Projecting a four-index tensor onto the antisymmetric pair basis multiplies
//! it by two, which is what lets the two-hole map
//! `Q = 2 ²I - 4 ¹D∧¹I + D` be applied verbatim.

mod dump;
pub mod spin;

pub use dump::{read_matrix_dump, write_matrix_dump, MatrixDump, MatrixKind};
pub use spin::{
    d_spin_transform, g_spin_transform, singlet_contraction, spin_adapt_d, spin_adapt_g,
    triplet_contraction, SpinBlockedD, SpinBlockedG,
};

use nalgebra::DMatrix;

use crate::basis::PairBasis;
use crate::error::{Error, Result};
use crate::integrals::ReducedHamiltonian;

/// Relative tolerance on `Tr D = N(N-1)` before a map refuses the input.
const TRACE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct TwoRdm {
    n_spin: usize,
    n_electrons: usize,
    pairs: PairBasis,
    d: DMatrix<f64>,
}

impl TwoRdm {
    pub fn new(n_spin: usize, n_electrons: usize, d: DMatrix<f64>) -> Result<Self> {
        let pairs = PairBasis::antisymmetric(n_spin);
        if d.nrows() != pairs.dim() || d.ncols() != pairs.dim() {
            return Err(Error::Dimension {
                expected: pairs.dim(),
                found: d.nrows().max(d.ncols()),
            });
        }
        if n_electrons > n_spin {
            return Err(Error::ElectronCount(format!(
                "{n_electrons} electrons in {n_spin} spin orbitals"
            )));
        }
        Ok(Self {
            n_spin,
            n_electrons,
            pairs,
            d,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.d
    }

    pub fn n_spin(&self) -> usize {
        self.n_spin
    }

    pub fn n_electrons(&self) -> usize {
        self.n_electrons
    }

    pub fn pairs(&self) -> &PairBasis {
        &self.pairs
    }

    pub fn trace(&self) -> f64 {
        self.d.trace()
    }

    /// `<a†p a†q a_t a_s>` for arbitrary spin orbitals.
    pub fn tensor(&self, p: usize, q: usize, s: usize, t: usize) -> f64 {
        pair_tensor(&self.pairs, &self.d, p, q, s, t)
    }

    fn check_trace(&self) -> Result<()> {
        let n = self.n_electrons as f64;
        let expected = n * (n - 1.0);
        if (self.trace() - expected).abs() > TRACE_TOL * expected.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "Tr D = {} is inconsistent with N = {} (expected {expected})",
                self.trace(),
                self.n_electrons
            )));
        }
        Ok(())
    }
}

/// Four-index element of a pair-basis matrix stored with the factor-two
/// normalization.
pub(crate) fn pair_tensor(
    pairs: &PairBasis,
    m: &DMatrix<f64>,
    p: usize,
    q: usize,
    s: usize,
    t: usize,
) -> f64 {
    if p == q || s == t {
        return 0.0;
    }
    let (a, sa) = pairs.index(p, q).expect("orbital in range");
    let (b, sb) = pairs.index(s, t).expect("orbital in range");
    0.5 * sa * sb * m[(a, b)]
}

#[derive(Debug, Clone)]
pub struct OneRdm {
    pub matrix: DMatrix<f64>,
    /// Natural occupation numbers, descending.
    pub occupations: Vec<f64>,
}

impl OneRdm {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let mut occupations = crate::linalg::symmetric_eigenvalues(&matrix);
        occupations.reverse();
        Self {
            matrix,
            occupations,
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }
}

/// `¹D^p_s = (1/(N-1)) Σ_q <a†p a†q a_q a_s>`.
pub fn contract_to_1rdm(d: &TwoRdm) -> Result<OneRdm> {
    if d.n_electrons < 2 {
        return Err(Error::ElectronCount(format!(
            "contraction divides by N-1, got N = {}",
            d.n_electrons
        )));
    }
    let r = d.n_spin;
    let inv = 1.0 / (d.n_electrons as f64 - 1.0);
    let mut one = DMatrix::zeros(r, r);
    for p in 0..r {
        for s in 0..r {
            let sum: f64 = (0..r).map(|q| d.tensor(p, q, s, q)).sum();
            one[(p, s)] = inv * sum;
        }
    }
    Ok(OneRdm::from_matrix(one))
}

/// Grassmann wedge product of two one-particle matrices projected onto the
/// antisymmetric pair basis:
/// `2 · ¼ (A_ps B_qt - A_pt B_qs - A_qs B_pt + A_qt B_ps)` for `p<q`, `s<t`.
pub fn wedge(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = a.nrows();
    for m in [a, b] {
        if m.nrows() != r || m.ncols() != r {
            return Err(Error::Dimension {
                expected: r,
                found: m.nrows().max(m.ncols()),
            });
        }
    }
    let pairs = PairBasis::antisymmetric(r);
    let dim = pairs.dim();
    let mut w = DMatrix::zeros(dim, dim);
    for (i, &(p, q)) in pairs.pairs().iter().enumerate() {
        for (j, &(s, t)) in pairs.pairs().iter().enumerate() {
            w[(i, j)] = 0.5
                * (a[(p, s)] * b[(q, t)] - a[(p, t)] * b[(q, s)] - a[(q, s)] * b[(p, t)]
                    + a[(q, t)] * b[(p, s)]);
        }
    }
    Ok(w)
}

/// The vacuum has a zero 1-RDM; a single electron leaves it undetermined by `D`.
fn one_body_of(d: &TwoRdm) -> Result<DMatrix<f64>> {
    match d.n_electrons {
        0 => Ok(DMatrix::zeros(d.n_spin, d.n_spin)),
        _ => Ok(contract_to_1rdm(d)?.matrix),
    }
}

/// Two-hole matrix `Q = 2 ²I - 4 ¹D∧¹I + D`.
pub fn d_to_q(d: &TwoRdm) -> Result<DMatrix<f64>> {
    d.check_trace()?;
    let r = d.n_spin;
    let one = one_body_of(d)?;
    let identity = DMatrix::identity(r, r);
    let w = wedge(&one, &identity)?;
    let dim = d.pairs.dim();
    Ok(DMatrix::<f64>::identity(dim, dim) * 2.0 - w * 4.0 + &d.d)
}

/// Inverts [`d_to_q`]: recovers the one-hole matrix by contracting `Q`, then
/// solves for `D`. Needs at least two holes.
pub fn q_to_d(q: &DMatrix<f64>, n_spin: usize, n_electrons: usize) -> Result<TwoRdm> {
    if n_spin < n_electrons + 2 {
        return Err(Error::ElectronCount(format!(
            "Q contraction needs r - N >= 2, got r = {n_spin}, N = {n_electrons}"
        )));
    }
    let pairs = PairBasis::antisymmetric(n_spin);
    if q.nrows() != pairs.dim() {
        return Err(Error::Dimension {
            expected: pairs.dim(),
            found: q.nrows(),
        });
    }
    let r = n_spin;
    let inv = 1.0 / (n_spin - n_electrons - 1) as f64;
    let mut one = DMatrix::zeros(r, r);
    for p in 0..r {
        for s in 0..r {
            let one_hole: f64 = inv * (0..r).map(|k| pair_tensor(&pairs, q, p, k, s, k)).sum::<f64>();
            one[(p, s)] = if p == s { 1.0 } else { 0.0 } - one_hole;
        }
    }
    let w = wedge(&one, &DMatrix::identity(r, r))?;
    let dim = pairs.dim();
    let d = q - DMatrix::<f64>::identity(dim, dim) * 2.0 + w * 4.0;
    TwoRdm::new(n_spin, n_electrons, d)
}

/// Particle-hole matrix `G^{pq}_{st} = δ_qt ¹D^p_s - D^{pt}_{sq}` on the
/// ordered pair basis (`r² × r²`).
pub fn d_to_g(d: &TwoRdm) -> Result<DMatrix<f64>> {
    d.check_trace()?;
    let r = d.n_spin;
    let one = one_body_of(d)?;
    let mut g = DMatrix::zeros(r * r, r * r);
    for p in 0..r {
        for q in 0..r {
            for s in 0..r {
                for t in 0..r {
                    let mut v = -d.tensor(p, t, s, q);
                    if q == t {
                        v += one[(p, s)];
                    }
                    g[(p * r + q, s * r + t)] = v;
                }
            }
        }
    }
    Ok(g)
}

/// Inverts [`d_to_g`]: `¹D = (1/(r-N+1)) Σ_q G^{pq}_{sq}`, then
/// `D^{pt}_{sq} = δ_qt ¹D^p_s - G^{pq}_{st}`.
pub fn g_to_d(g: &DMatrix<f64>, n_spin: usize, n_electrons: usize) -> Result<TwoRdm> {
    let r = n_spin;
    if g.nrows() != r * r || g.ncols() != r * r {
        return Err(Error::Dimension {
            expected: r * r,
            found: g.nrows(),
        });
    }
    let inv = 1.0 / (r + 1 - n_electrons) as f64;
    let mut one = DMatrix::zeros(r, r);
    for p in 0..r {
        for s in 0..r {
            one[(p, s)] = inv * (0..r).map(|q| g[(p * r + q, s * r + q)]).sum::<f64>();
        }
    }
    let pairs = PairBasis::antisymmetric(r);
    let mut d = DMatrix::zeros(pairs.dim(), pairs.dim());
    for (i, &(a, b)) in pairs.pairs().iter().enumerate() {
        for (j, &(c, e)) in pairs.pairs().iter().enumerate() {
            // D^{ab}_{ce} with p=a, t=b, s=c, q=e
            let mut v = -g[(a * r + e, c * r + b)];
            if e == b {
                v += one[(a, c)];
            }
            d[(i, j)] = 2.0 * v;
        }
    }
    TwoRdm::new(n_spin, n_electrons, d)
}

/// `Tr(K2 D) + core_energy`.
pub fn energy(h: &ReducedHamiltonian, d: &TwoRdm) -> Result<f64> {
    let k = h.k2();
    if k.nrows() != d.d.nrows() {
        return Err(Error::Dimension {
            expected: k.nrows(),
            found: d.d.nrows(),
        });
    }
    Ok(k.component_mul(&d.d).sum() + h.core_energy())
}
