//! Assembly of the 2-positivity program.
//!
//! Every metric-matrix entry is written as an affine form in the SDP
//! variables: `D` directly (or through the spin transform), then `¹D`, `Q`
//! and `G` by the linear maps of [`crate::rdm`]. `Q` and `G` get blocks of
//! their own plus one equality row per packed entry tying them to `D`.

use nalgebra::DMatrix;

use super::expr::LinExpr;
use super::{RankRestriction, VrdmConfig};
use crate::basis::PairBasis;
use crate::error::{Error, Result};
use crate::integrals::ReducedHamiltonian;
use crate::rdm::spin::{
    d_spin_transform, g_spin_transform, singlet_contraction_terms, triplet_contraction_terms,
};
use crate::sdp::{assemble, packed_index, BlockSpec, Row, SdpProblem};

/// A built program and the map back from its variables to `D`.
#[derive(Debug, Clone)]
pub struct VrdmProblem {
    pub sdp: SdpProblem,
    /// `D[(a),(b)]` over the antisymmetric pair basis, packed `a <= b`.
    pub d_exprs: Vec<LinExpr>,
    pub n_spin: usize,
    pub n_electrons: usize,
    pub spin_adapted: bool,
    /// Constraint rows before redundant ones were dropped.
    pub assembled_rows: usize,
}

impl VrdmProblem {
    /// `D` on the antisymmetric pair basis at the point `x`.
    pub fn d_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let dim = self.n_spin * (self.n_spin - 1) / 2;
        DMatrix::from_fn(dim, dim, |a, b| self.d_exprs[packed_index(a, b, dim)].eval(x))
    }
}

struct Blocks {
    specs: Vec<BlockSpec>,
    offsets: Vec<usize>,
}

impl Blocks {
    fn new(specs: Vec<BlockSpec>) -> Self {
        let mut offsets = Vec::new();
        let mut at = 0;
        for s in &specs {
            offsets.push(at);
            at += s.packed_len();
        }
        Self { specs, offsets }
    }

    fn x(&self, block: usize, i: usize, j: usize) -> usize {
        self.offsets[block] + packed_index(i, j, self.specs[block].dim)
    }

    fn n_vars(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) + self.specs.last().map_or(0, |s| s.packed_len())
    }
}

/// Affine forms for every `D` entry plus the derived `¹D`.
struct DForms {
    r: usize,
    pairs: PairBasis,
    packed: Vec<LinExpr>,
    one: Vec<LinExpr>,
}

impl DForms {
    fn new(r: usize, n_electrons: usize, packed: Vec<LinExpr>) -> Self {
        let pairs = PairBasis::antisymmetric(r);
        let mut forms = Self {
            r,
            pairs,
            packed,
            one: Vec::new(),
        };
        let inv = 1.0 / (n_electrons as f64 - 1.0);
        let mut one = Vec::with_capacity(r * r);
        for p in 0..r {
            for s in 0..r {
                let mut e = LinExpr::default();
                for q in 0..r {
                    e.add_scaled(&forms.tensor(p, q, s, q), inv);
                }
                one.push(e.simplify());
            }
        }
        forms.one = one;
        forms
    }

    fn pair(&self, a: usize, b: usize) -> &LinExpr {
        &self.packed[packed_index(a, b, self.pairs.dim())]
    }

    /// `<a†p a†q a_t a_s>`.
    fn tensor(&self, p: usize, q: usize, s: usize, t: usize) -> LinExpr {
        if p == q || s == t {
            return LinExpr::default();
        }
        let (a, sa) = self.pairs.index(p, q).expect("in range");
        let (b, sb) = self.pairs.index(s, t).expect("in range");
        let mut e = LinExpr::default();
        e.add_scaled(self.pair(a, b), 0.5 * sa * sb);
        e
    }

    fn one(&self, p: usize, s: usize) -> &LinExpr {
        &self.one[p * self.r + s]
    }

    /// `Q[(pq),(st)] = 2δ - 2(δ_qt ¹D_ps - δ_qs ¹D_pt - δ_pt ¹D_qs + δ_ps ¹D_qt) + D`.
    fn q(&self, a: usize, b: usize) -> LinExpr {
        let (p, q) = self.pairs.pair(a);
        let (s, t) = self.pairs.pair(b);
        let mut e = self.pair(a, b).clone();
        if a == b {
            e.constant += 2.0;
        }
        if q == t {
            e.add_scaled(self.one(p, s), -2.0);
        }
        if q == s {
            e.add_scaled(self.one(p, t), 2.0);
        }
        if p == t {
            e.add_scaled(self.one(q, s), 2.0);
        }
        if p == s {
            e.add_scaled(self.one(q, t), -2.0);
        }
        e
    }

    /// `G[(pq),(st)] = δ_qt ¹D_ps - <a†p a†t a_q a_s>`.
    fn g(&self, p: usize, q: usize, s: usize, t: usize) -> LinExpr {
        let mut e = self.tensor(p, t, s, q);
        for term in e.terms.iter_mut() {
            term.1 = -term.1;
        }
        if q == t {
            e.add_scaled(self.one(p, s), 1.0);
        }
        e
    }
}

fn pin_row(x_index: usize, expr: &LinExpr) -> (Row, f64) {
    let mut row: Row = vec![(x_index, 1.0)];
    row.extend(expr.terms.iter().map(|&(k, v)| (k, -v)));
    (row, expr.constant)
}

/// Sparse rows of a dense orthogonal transform.
fn sparse_rows(t: &DMatrix<f64>) -> Vec<Vec<(usize, f64)>> {
    (0..t.nrows())
        .map(|i| {
            (0..t.ncols())
                .filter(|&j| t[(i, j)] != 0.0)
                .map(|j| (j, t[(i, j)]))
                .collect()
        })
        .collect()
}

fn resolve_caps(specs: &mut [BlockSpec], rank: &RankRestriction, spin_adapted: bool, n_spatial: usize) -> Result<()> {
    match rank {
        RankRestriction::None => Ok(()),
        RankRestriction::Theoretical => {
            if !spin_adapted {
                return Err(Error::InvalidArgument(
                    "the theoretical rank applies to the singlet G block and needs spin adaptation".into(),
                ));
            }
            let g = specs.iter_mut().find(|s| s.name == "G00").expect("G00 exists");
            g.cap = Some(n_spatial * (n_spatial + 1) / 2);
            Ok(())
        }
        RankRestriction::Explicit(caps) => {
            for (name, cap) in caps {
                let names: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();
                let spec = specs.iter_mut().find(|s| &s.name == name).ok_or_else(|| {
                    Error::InvalidArgument(format!("no block named '{name}' (blocks: {})", names.join(", ")))
                })?;
                spec.cap = Some(*cap);
            }
            Ok(())
        }
    }
}

pub fn build_problem(h: &ReducedHamiltonian, n_electrons: usize, config: &VrdmConfig) -> Result<VrdmProblem> {
    let r = h.n_spin();
    if n_electrons < 2 {
        return Err(Error::ElectronCount(format!("need N >= 2, got {n_electrons}")));
    }
    if n_electrons > r {
        return Err(Error::ElectronCount(format!("{n_electrons} electrons in {r} spin orbitals")));
    }
    if config.spin_adapted && !n_electrons.is_multiple_of(2) {
        return Err(Error::ElectronCount(format!(
            "spin adaptation needs an even electron count, got {n_electrons}"
        )));
    }
    if config.spin_adapted {
        build_adapted(h, n_electrons, config)
    } else {
        build_plain(h, n_electrons, config)
    }
}

fn build_plain(h: &ReducedHamiltonian, n_electrons: usize, config: &VrdmConfig) -> Result<VrdmProblem> {
    let r = h.n_spin();
    let (n, rf) = (n_electrons as f64, r as f64);
    let pdim = r * (r - 1) / 2;
    let mut specs = vec![
        BlockSpec::new("D", pdim).with_target_trace(n * (n - 1.0)),
        BlockSpec::new("Q", pdim).with_target_trace((rf - n) * (rf - n - 1.0)),
        BlockSpec::new("G", r * r).with_target_trace(n * (rf - n + 1.0)),
    ];
    resolve_caps(&mut specs, &config.rank, false, r / 2)?;
    let blocks = Blocks::new(specs);

    let mut packed = vec![LinExpr::default(); pdim * (pdim + 1) / 2];
    for a in 0..pdim {
        for b in a..pdim {
            packed[packed_index(a, b, pdim)] = LinExpr::var(blocks.x(0, a, b));
        }
    }
    let d = DForms::new(r, n_electrons, packed);

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    rows.push((0..pdim).map(|a| (blocks.x(0, a, a), 1.0)).collect());
    rhs.push(n * (n - 1.0));
    for a in 0..pdim {
        for b in a..pdim {
            let (row, c) = pin_row(blocks.x(1, a, b), &d.q(a, b).simplify());
            rows.push(row);
            rhs.push(c);
        }
    }
    for i in 0..r * r {
        for j in i..r * r {
            let (p, q, s, t) = (i / r, i % r, j / r, j % r);
            let (row, c) = pin_row(blocks.x(2, i, j), &d.g(p, q, s, t).simplify());
            rows.push(row);
            rhs.push(c);
        }
    }

    let mut c = vec![0.0; blocks.n_vars()];
    let k2 = h.k2();
    for a in 0..pdim {
        for b in 0..pdim {
            c[blocks.x(0, a, b)] += k2[(a, b)];
        }
    }
    finish(blocks, c, rows, rhs, d.packed, r, n_electrons, false)
}

fn build_adapted(h: &ReducedHamiltonian, n_electrons: usize, config: &VrdmConfig) -> Result<VrdmProblem> {
    let r = h.n_spin();
    let ns_orb = r / 2;
    let half = (n_electrons / 2) as f64;
    let holes = ns_orb as f64 - half;
    let n_single = ns_orb * (ns_orb + 1) / 2;
    let n_trip = ns_orb * ns_orb.saturating_sub(1) / 2;
    let gdim = ns_orb * ns_orb;
    let g_total = n_electrons as f64 * (r as f64 - n_electrons as f64 + 1.0);

    let mut specs = vec![
        BlockSpec::new("D00", n_single).with_target_trace(half * (half + 1.0)),
        BlockSpec::new("D1", n_trip.max(1)).with_target_trace(half * (half - 1.0)),
        BlockSpec::new("Q00", n_single).with_target_trace(holes * (holes + 1.0)),
        BlockSpec::new("Q1", n_trip.max(1)).with_target_trace(holes * (holes - 1.0)),
        BlockSpec::new("G00", gdim).with_target_trace(0.25 * g_total),
        BlockSpec::new("G1", gdim).with_target_trace(0.25 * g_total),
    ];
    if n_trip == 0 {
        return Err(Error::InvalidArgument(
            "spin adaptation needs at least two spatial orbitals".into(),
        ));
    }
    resolve_caps(&mut specs, &config.rank, true, ns_orb)?;
    let blocks = Blocks::new(specs);

    // row of the spin transform -> (block, local index); triplet rows of all
    // three components share the D1/Q1 block
    let t = d_spin_transform(ns_orb);
    let t_rows = sparse_rows(&t);
    let t_cols = sparse_rows(&t.transpose());
    let row_block = |i: usize, base: usize| -> (usize, usize, usize) {
        if i < n_single {
            (base, 0, i)
        } else {
            let k = i - n_single;
            (base + 1, 1 + k / n_trip, k % n_trip)
        }
    };

    let pdim = r * (r - 1) / 2;
    let mut packed = vec![LinExpr::default(); pdim * (pdim + 1) / 2];
    for a in 0..pdim {
        for b in a..pdim {
            let mut e = LinExpr::default();
            for &(i, ci) in &t_cols[a] {
                for &(j, cj) in &t_cols[b] {
                    let (bi, mi, li) = row_block(i, 0);
                    let (bj, mj, lj) = row_block(j, 0);
                    if bi == bj && mi == mj {
                        e.add_term(blocks.x(bi, li, lj), ci * cj);
                    }
                }
            }
            packed[packed_index(a, b, pdim)] = e.simplify();
        }
    }
    let d = DForms::new(r, n_electrons, packed);

    let mut rows: Vec<Row> = Vec::new();
    let mut rhs = Vec::new();
    rows.push((0..n_single).map(|i| (blocks.x(0, i, i), 1.0)).collect());
    rhs.push(half * (half + 1.0));
    rows.push((0..n_trip).map(|i| (blocks.x(1, i, i), 1.0)).collect());
    rhs.push(half * (half - 1.0));

    // (N_s+1) Σ_k T_{ik;jk} = (N_s-1) Σ_k D00_{ik;jk}
    for i in 0..ns_orb {
        for j in i..ns_orb {
            let mut row: Row = Vec::new();
            for (a, b, cf) in triplet_contraction_terms(i, j, ns_orb) {
                row.push((blocks.x(1, a, b), (half + 1.0) * cf));
            }
            for (a, b, cf) in singlet_contraction_terms(i, j, ns_orb) {
                row.push((blocks.x(0, a, b), -(half - 1.0) * cf));
            }
            rows.push(row);
            rhs.push(0.0);
        }
    }

    // Q blocks: singlet rows and the αα triplet component
    let q_rows = |local: usize, singlet: bool| -> &Vec<(usize, f64)> {
        if singlet {
            &t_rows[local]
        } else {
            &t_rows[n_single + 2 * n_trip + local]
        }
    };
    for (block, singlet, len) in [(2, true, n_single), (3, false, n_trip)] {
        for i in 0..len {
            for j in i..len {
                let mut e = LinExpr::default();
                for &(a, ca) in q_rows(i, singlet) {
                    for &(b, cb) in q_rows(j, singlet) {
                        e.add_scaled(&d.q(a, b), ca * cb);
                    }
                }
                let (row, c) = pin_row(blocks.x(block, i, j), &e.simplify());
                rows.push(row);
                rhs.push(c);
            }
        }
    }

    // G blocks: singlet rows and the αβ (1,+1) component
    let u = g_spin_transform(ns_orb);
    let u_rows = sparse_rows(&u);
    for (block, start) in [(4, 0), (5, 3 * gdim)] {
        for i in 0..gdim {
            for j in i..gdim {
                let mut e = LinExpr::default();
                for &(a, ca) in &u_rows[start + i] {
                    for &(b, cb) in &u_rows[start + j] {
                        e.add_scaled(&d.g(a / r, a % r, b / r, b % r), ca * cb);
                    }
                }
                let (row, c) = pin_row(blocks.x(block, i, j), &e.simplify());
                rows.push(row);
                rhs.push(c);
            }
        }
    }

    let mut c = vec![0.0; blocks.n_vars()];
    let k2 = h.k2();
    for a in 0..pdim {
        for b in 0..pdim {
            let k = k2[(a, b)];
            if k == 0.0 {
                continue;
            }
            for &(idx, v) in &d.pair(a, b).terms {
                c[idx] += k * v;
            }
        }
    }
    finish(blocks, c, rows, rhs, d.packed, r, n_electrons, true)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    blocks: Blocks,
    c: Vec<f64>,
    rows: Vec<Row>,
    rhs: Vec<f64>,
    d_exprs: Vec<LinExpr>,
    n_spin: usize,
    n_electrons: usize,
    spin_adapted: bool,
) -> Result<VrdmProblem> {
    let assembled_rows = rows.len();
    let sdp = assemble(c, rows, rhs, blocks.specs)?;
    Ok(VrdmProblem {
        sdp,
        d_exprs,
        n_spin,
        n_electrons,
        spin_adapted,
        assembled_rows,
    })
}
