//! Matrix product operators for window-local operator sums.
//!
//! The MPO is a finite-state machine over bond channels: channel 0 means no
//! term has started, channel 1 means a term has been completed, and every
//! window owns a block of channels carrying the operator-Schmidt
//! decomposition of its (identity-free) operator. Identity coefficients are
//! returned separately as a scalar shift.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::linalg;
use crate::pauli::{window_operator, WindowOperatorSum};

/// One MPO site: `ops[l * right + r]` is the `d × d` operator on the
/// transition from left channel `l` to right channel `r`, if any.
#[derive(Debug, Clone)]
pub(crate) struct MpoSite {
    pub left: usize,
    pub right: usize,
    pub ops: Vec<Option<DMatrix<C64>>>,
}

impl MpoSite {
    fn new(left: usize, right: usize) -> Self {
        MpoSite { left, right, ops: vec![None; left * right] }
    }

    pub fn get(&self, l: usize, r: usize) -> Option<&DMatrix<C64>> {
        self.ops[l * self.right + r].as_ref()
    }

    fn add(&mut self, l: usize, r: usize, op: DMatrix<C64>) {
        let slot = &mut self.ops[l * self.right + r];
        match slot {
            Some(m) => *m += op,
            None => *slot = Some(op),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Mpo {
    pub sites: Vec<MpoSite>,
    /// Sum of identity coefficients times the identity normalization.
    pub shift: f64,
}

/// Splits a `d^k × d^k` operator into `k` site pieces by successive SVDs in
/// operator space. Piece `t` is indexed `[r_in][r_out]` with `d × d` entries.
fn operator_pieces(op: &DMatrix<C64>, k: usize, d: usize) -> Vec<Vec<Vec<DMatrix<C64>>>> {
    let dd = d * d;
    let dim = op.nrows();
    // vectorize as (s_1 t_1)(s_2 t_2)...: index = Σ (s_j d + t_j) (d²)^{k-1-j}
    let total = dd.pow(k as u32);
    let mut vecd = vec![C64::new(0.0, 0.0); total];
    for row in 0..dim {
        for col in 0..dim {
            let v = op[(row, col)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let mut idx = 0;
            for j in 0..k {
                let p = d.pow((k - 1 - j) as u32);
                let s = (row / p) % d;
                let t = (col / p) % d;
                idx = idx * dd + s * d + t;
            }
            vecd[idx] = v;
        }
    }
    let mut pieces = Vec::with_capacity(k);
    let mut rest = DMatrix::from_row_slice(1, total, &vecd);
    let mut left = 1;
    for j in 0..k {
        let cols = rest.ncols() / dd;
        let m = DMatrix::from_fn(left * dd, cols, |r, c| rest[(r / dd, (r % dd) * cols + c)]);
        if j == k - 1 {
            pieces.push(split_piece(&m, left, 1, d));
            break;
        }
        let dec = linalg::svd(&m);
        let rank = dec.rank(1e-13);
        if rank == 0 {
            return Vec::new();
        }
        let dec = dec.truncate(rank);
        pieces.push(split_piece(&dec.u, left, rank, d));
        rest = DMatrix::from_fn(rank, dec.vt.ncols(), |r, c| dec.vt[(r, c)] * dec.s[r]);
        left = rank;
    }
    pieces
}

fn split_piece(m: &DMatrix<C64>, left: usize, right: usize, d: usize) -> Vec<Vec<DMatrix<C64>>> {
    let dd = d * d;
    (0..left)
        .map(|a| {
            (0..right)
                .map(|b| DMatrix::from_fn(d, d, |s, t| m[(a * dd + s * d + t, b)]))
                .collect()
        })
        .collect()
}

impl Mpo {
    /// MPO of a qubit window-operator sum.
    pub fn from_opsum(opsum: &WindowOperatorSum) -> Mpo {
        let n = opsum.n_sites();
        let k = opsum.window_size();
        let d = 2;
        let mut shift = 0.0;
        let mut decomps = Vec::with_capacity(opsum.n_windows());
        for coeffs in opsum.windows() {
            shift += coeffs[0];
            let mut c = coeffs.clone();
            c[0] = 0.0;
            if c.iter().all(|&x| x == 0.0) {
                decomps.push(Vec::new());
            } else {
                decomps.push(operator_pieces(&window_operator(k, &c), k, d));
            }
        }
        // channel offsets per bond: bond b sits between sites b-1 and b
        let mut offsets: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + 1];
        let mut widths = vec![2usize; n + 1];
        for (w, pieces) in decomps.iter().enumerate() {
            if pieces.is_empty() {
                continue;
            }
            for t in 0..k - 1 {
                let b = w + t + 1;
                let rank = pieces[t][0].len();
                offsets[b].push((w, widths[b]));
                widths[b] += rank;
            }
        }
        let channel = |b: usize, w: usize| offsets[b].iter().find(|(x, _)| *x == w).map(|&(_, o)| o).unwrap();
        let eye = DMatrix::<C64>::identity(d, d);
        let mut sites: Vec<MpoSite> = (0..n).map(|j| MpoSite::new(widths[j], widths[j + 1])).collect();
        for (j, site) in sites.iter_mut().enumerate() {
            site.add(0, 0, eye.clone());
            site.add(1, 1, eye.clone());
            for (w, pieces) in decomps.iter().enumerate() {
                if pieces.is_empty() || j < w || j >= w + k {
                    continue;
                }
                let t = j - w;
                let piece = &pieces[t];
                let lin: Vec<usize> = if t == 0 { vec![0] } else { (0..piece.len()).map(|r| channel(j, w) + r).collect() };
                let rout: Vec<usize> = if t == k - 1 { vec![1] } else { (0..piece[0].len()).map(|r| channel(j + 1, w) + r).collect() };
                for (a, &l) in lin.iter().enumerate() {
                    for (b, &r) in rout.iter().enumerate() {
                        site.add(l, r, piece[a][b].clone());
                    }
                }
            }
        }
        // boundaries: only channel 0 enters from the left, only channel 1 leaves to the right
        let first = &sites[0];
        let mut s0 = MpoSite::new(1, first.right);
        for r in 0..first.right {
            if let Some(op) = first.get(0, r) {
                s0.add(0, r, op.clone());
            }
        }
        sites[0] = s0;
        let last = &sites[n - 1];
        let mut sl = MpoSite::new(last.left, 1);
        for l in 0..last.left {
            if let Some(op) = last.get(l, 1) {
                sl.add(l, 0, op.clone());
            }
        }
        if n == 1 {
            // single site: the left boundary row already selected channel 0
            let mut s = MpoSite::new(1, 1);
            if let Some(op) = sites[0].get(0, 1) {
                s.add(0, 0, op.clone());
            }
            sites[0] = s;
        } else {
            sites[n - 1] = sl;
        }
        Mpo { sites, shift }
    }

    /// Contracts sites `j .. j + m` into a block whose operators act on
    /// `d^m` dimensional spaces.
    pub fn block(&self, j: usize, m: usize) -> MpoSite {
        let mut acc = self.sites[j].clone();
        for site in &self.sites[j + 1..j + m] {
            let mut next = MpoSite::new(acc.left, site.right);
            for l in 0..acc.left {
                for z in 0..acc.right {
                    let Some(a) = acc.get(l, z) else { continue };
                    for r in 0..site.right {
                        if let Some(b) = site.get(z, r) {
                            next.add(l, r, linalg::kron(a, b));
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// Dense operator, for tests.
    #[cfg(test)]
    pub fn to_dense(&self) -> DMatrix<C64> {
        let whole = self.block(0, self.sites.len());
        let dim = whole.get(0, 0).map(|m| m.nrows()).unwrap_or(1 << self.sites.len());
        let mut m = whole.get(0, 0).cloned().unwrap_or_else(|| DMatrix::zeros(dim, dim));
        for i in 0..dim {
            m[(i, i)] += C64::new(self.shift, 0.0);
        }
        m
    }
}
