//! Block-diagonal semidefinite programs in factorized form.
//!
//! The variable `x` concatenates the upper triangles (row-major, `i <= j`)
//! of the symmetric blocks of `M(x)`. The program is
//! `min c·x` subject to `A x = b` and `M(x) ⪰ 0`, with each block written as
//! `R Rᵀ` so positivity holds by construction.

pub mod lbfgs;
mod solver;

pub use solver::{
    augmented_lagrangian_value_and_gradient, residuals, solve, solve_with_observer,
    FactorizedSolution, OuterRecord, Residuals, SolveStatus, SolverOptions,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative size below which an eliminated row counts as dependent.
const DEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub name: String,
    pub dim: usize,
    /// Column cap on the factor; `None` means full rank.
    pub cap: Option<usize>,
    /// Trace the block is expected to have, used to scale the starting point.
    pub target_trace: Option<f64>,
}

impl BlockSpec {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self {
            name: name.into(),
            dim,
            cap: None,
            target_trace: None,
        }
    }

    pub fn with_cap(mut self, cap: Option<usize>) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_target_trace(mut self, trace: f64) -> Self {
        self.target_trace = Some(trace);
        self
    }

    pub fn packed_len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    /// Columns of the factor.
    pub fn columns(&self) -> usize {
        self.cap.unwrap_or(self.dim)
    }

    pub fn is_capped(&self) -> bool {
        self.columns() < self.dim
    }
}

/// Sparse row: `(x index, coefficient)`.
pub type Row = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct SdpProblem {
    c: Vec<f64>,
    rows: Vec<Row>,
    b: Vec<f64>,
    blocks: Vec<BlockSpec>,
    offsets: Vec<usize>,
    /// Original indices of the kept rows.
    kept: Vec<usize>,
    removed: Vec<usize>,
}

/// Position of `(i, j)` in a row-major upper-triangular packing of side `dim`.
#[inline]
pub fn packed_index(i: usize, j: usize, dim: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

/// Validates the data and drops linearly dependent rows. A dependent row
/// whose right-hand side disagrees with the rows it depends on makes
/// `Ax = b` infeasible and is reported with those rows' indices.
pub fn assemble(c: Vec<f64>, rows: Vec<Row>, b: Vec<f64>, blocks: Vec<BlockSpec>) -> Result<SdpProblem> {
    let mut offsets = Vec::with_capacity(blocks.len() + 1);
    let mut n = 0;
    for blk in &blocks {
        if blk.dim == 0 {
            return Err(Error::InvalidArgument(format!("block '{}' is empty", blk.name)));
        }
        if let Some(cap) = blk.cap {
            if cap == 0 || cap > blk.dim {
                return Err(Error::InvalidArgument(format!(
                    "block '{}': cap {cap} outside [1, {}]",
                    blk.name, blk.dim
                )));
            }
        }
        offsets.push(n);
        n += blk.packed_len();
    }
    offsets.push(n);
    if c.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: c.len(),
        });
    }
    if rows.len() != b.len() {
        return Err(Error::Dimension {
            expected: rows.len(),
            found: b.len(),
        });
    }
    for row in &rows {
        for &(k, _) in row {
            if k >= n {
                return Err(Error::OutOfRange {
                    what: "constraint column",
                    index: k,
                    limit: n,
                });
            }
        }
    }
    let rows: Vec<Row> = rows.into_iter().map(merge_duplicates).collect();
    let (kept, removed) = independent_rows(&rows, &b, n)?;
    let keep_rows = kept.iter().map(|&i| rows[i].clone()).collect();
    let keep_b = kept.iter().map(|&i| b[i]).collect();
    Ok(SdpProblem {
        c,
        rows: keep_rows,
        b: keep_b,
        blocks,
        offsets,
        kept,
        removed,
    })
}

fn merge_duplicates(mut row: Row) -> Row {
    row.sort_by_key(|e| e.0);
    let mut out: Row = Vec::with_capacity(row.len());
    for (k, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += v,
            _ => out.push((k, v)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

/// Splits rows into a maximal independent set and the rest.
///
/// Rows owning a column no other remaining row touches are independent of
/// everything else and are peeled first; the small remainder goes through
/// dense elimination in original order.
fn independent_rows(rows: &[Row], b: &[f64], n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let m = rows.len();
    let mut col_count = vec![0usize; n];
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for &(k, _) in row {
            col_count[k] += 1;
            col_rows[k].push(i);
        }
    }
    let mut alive = vec![true; m];
    let mut stack: Vec<usize> = (0..n).filter(|&k| col_count[k] == 1).collect();
    while let Some(k) = stack.pop() {
        if col_count[k] != 1 {
            continue;
        }
        let Some(&i) = col_rows[k].iter().find(|&&i| alive[i]) else {
            continue;
        };
        alive[i] = false;
        for &(kk, _) in &rows[i] {
            col_count[kk] -= 1;
            if col_count[kk] == 1 {
                stack.push(kk);
            }
        }
    }

    let rest: Vec<usize> = (0..m).filter(|&i| alive[i]).collect();
    let mut independent = vec![false; m];
    for i in 0..m {
        if !alive[i] {
            independent[i] = true;
        }
    }

    // dense elimination over the columns the remaining rows touch
    let mut cols: Vec<usize> = rest.iter().flat_map(|&i| rows[i].iter().map(|e| e.0)).collect();
    cols.sort_unstable();
    cols.dedup();
    let col_pos = |k: usize| cols.binary_search(&k).expect("collected");
    let nc = cols.len();
    // reduced rows: (dense coefficients, rhs, combination over original rows, pivot)
    let mut basis: Vec<(Vec<f64>, f64, Vec<(usize, f64)>, usize)> = Vec::new();
    for &i in &rest {
        let mut v = vec![0.0; nc];
        for &(k, a) in &rows[i] {
            v[col_pos(k)] = a;
        }
        let scale = v.iter().fold(0.0f64, |s, a| s.max(a.abs()));
        let mut rhs = b[i];
        let mut combo: Vec<(usize, f64)> = vec![(i, 1.0)];
        for (bv, brhs, bcombo, piv) in &basis {
            let f = v[*piv];
            if f == 0.0 {
                continue;
            }
            for (x, y) in v.iter_mut().zip(bv) {
                *x -= f * y;
            }
            rhs -= f * brhs;
            for &(r, c) in bcombo {
                combo.push((r, -f * c));
            }
        }
        let (piv, big) = v
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (k, a)| if a.abs() > acc.1 { (k, a.abs()) } else { acc });
        if big <= DEPENDENCE_TOL * scale.max(1.0) {
            if rhs.abs() > 1e-8 * (1.0 + b[i].abs()) {
                let mut deps: Vec<usize> = merge_duplicates(combo)
                    .into_iter()
                    .filter(|&(r, c)| r != i && c.abs() > DEPENDENCE_TOL)
                    .map(|(r, _)| r)
                    .collect();
                deps.sort_unstable();
                return Err(Error::InconsistentConstraints { row: i, basis: deps });
            }
            continue;
        }
        let p = v[piv];
        for x in v.iter_mut() {
            *x /= p;
        }
        let combo = merge_duplicates(combo)
            .into_iter()
            .map(|(r, c)| (r, c / p))
            .collect();
        basis.push((v, rhs / p, combo, piv));
        independent[i] = true;
    }
    let kept = (0..m).filter(|&i| independent[i]).collect();
    let removed = (0..m).filter(|&i| !independent[i]).collect();
    Ok((kept, removed))
}

impl SdpProblem {
    pub fn n_vars(&self) -> usize {
        *self.offsets.last().expect("sentinel")
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn block_offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    /// Original indices of the rows kept after preprocessing.
    pub fn kept_rows(&self) -> &[usize] {
        &self.kept
    }

    /// Original indices of rows dropped as linearly dependent.
    pub fn removed_rows(&self) -> &[usize] {
        &self.removed
    }

    /// Index in `x` of entry `(i, j)` of `block`.
    pub fn x_index(&self, block: usize, i: usize, j: usize) -> usize {
        self.offsets[block] + packed_index(i, j, self.blocks[block].dim)
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    /// `A x - b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| row.iter().map(|&(k, a)| a * x[k]).sum::<f64>() - bi)
            .collect()
    }

    /// `c - Aᵀ y`.
    pub fn reduced_cost(&self, y: &[f64]) -> Vec<f64> {
        let mut g = self.c.clone();
        for (row, yi) in self.rows.iter().zip(y) {
            if *yi == 0.0 {
                continue;
            }
            for &(k, a) in row {
                g[k] -= a * yi;
            }
        }
        g
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Packs the symmetric `m` as the upper triangle of `block`.
    pub fn pack_block(&self, block: usize, m: &DMatrix<f64>, x: &mut [f64]) {
        let dim = self.blocks[block].dim;
        let off = self.offsets[block];
        for i in 0..dim {
            for j in i..dim {
                x[off + packed_index(i, j, dim)] = m[(i, j)];
            }
        }
    }

    pub fn unpack_block(&self, block: usize, x: &[f64]) -> DMatrix<f64> {
        let dim = self.blocks[block].dim;
        let off = self.offsets[block];
        DMatrix::from_fn(dim, dim, |i, j| x[off + packed_index(i, j, dim)])
    }
}

/// Cost vector entries for `Tr(K M)` on a packed block: `K_ii` on the
/// diagonal and `2 K_ij` above it.
pub fn pack_cost(k: &DMatrix<f64>) -> Vec<f64> {
    let dim = k.nrows();
    let mut out = vec![0.0; dim * (dim + 1) / 2];
    for i in 0..dim {
        for j in i..dim {
            out[packed_index(i, j, dim)] = if i == j { k[(i, i)] } else { k[(i, j)] + k[(j, i)] };
        }
    }
    out
}
