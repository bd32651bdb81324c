//! Classical and quantum Reed-Muller codes and GF(2) rank/kernel routines.

use crate::bits::{BitMatrix, BitVec};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Block length, dimension and (optionally) distances of a code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub d: Option<usize>,
    pub d_x: Option<usize>,
    pub d_z: Option<usize>,
}

/// A CSS code given by its check matrices and one logical pair per encoded qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CssCode {
    pub z_checks: BitMatrix,
    pub x_checks: BitMatrix,
    pub logical_x: BitMatrix,
    pub logical_z: BitMatrix,
}

impl CssCode {
    pub fn n(&self) -> usize {
        self.x_checks.n_cols()
    }

    /// `n - rank(X) - rank(Z)`.
    pub fn k(&self) -> usize {
        self.n() - gf2_rank(&self.x_checks) - gf2_rank(&self.z_checks)
    }

    /// Every z-check has even overlap with every x-check and every logical X,
    /// and logical X_i overlaps logical Z_j oddly iff `i == j`.
    pub fn is_consistent(&self) -> bool {
        let even = |a: &BitMatrix, b: &BitMatrix| a.mul(&b.transpose()).is_zero();
        if !even(&self.z_checks, &self.x_checks) || !even(&self.z_checks, &self.logical_x) || !even(&self.x_checks, &self.logical_z) {
            return false;
        }
        let pairing = self.logical_x.mul(&self.logical_z.transpose());
        pairing == BitMatrix::identity(self.logical_x.n_rows())
    }

    /// Minimum weight of `logical_x[0]` plus the x-check span, by enumeration.
    pub fn x_distance(&self) -> Result<usize> {
        let r = self.x_checks.n_rows();
        if r > 24 {
            return Err(crate::Error::ResourceLimit(format!(
                "x-check span of {r} generators too large to enumerate"
            )));
        }
        let gens = self.x_checks.rows();
        let base = self.logical_x.row(0);
        Ok(span_weights(&gens, &base).into_iter().min().unwrap_or(0))
    }

    /// Minimum weight of a Z-operator that commutes with all x-checks but
    /// anticommutes with `logical_x[0]`, searched up to weight `max_w`.
    pub fn z_distance(&self, max_w: usize) -> Option<usize> {
        let n = self.n();
        let cols: Vec<BitVec> = (0..n)
            .map(|c| {
                let mut v = BitVec::zeros(self.x_checks.n_rows() + 1);
                for r in 0..self.x_checks.n_rows() {
                    if self.x_checks.get(r, c) {
                        v.set(r, true);
                    }
                }
                if self.logical_x.get(0, c) {
                    v.set(self.x_checks.n_rows(), true);
                }
                v
            })
            .collect();
        let mut target = BitVec::zeros(self.x_checks.n_rows() + 1);
        target.set(self.x_checks.n_rows(), true);
        (1..=max_w.min(n)).find(|&w| subset_sums_hit(&cols, w, &target))
    }

    pub fn params(&self) -> CodeParams {
        CodeParams {
            n: self.n(),
            k: self.k(),
            d: None,
            d_x: self.x_distance().ok(),
            d_z: self.z_distance(4),
        }
    }
}

fn subset_sums_hit(cols: &[BitVec], w: usize, target: &BitVec) -> bool {
    fn rec(cols: &[BitVec], start: usize, left: usize, acc: &mut BitVec, target: &BitVec) -> bool {
        if left == 0 {
            return acc == target;
        }
        for i in start..cols.len() {
            acc.xor_assign(&cols[i]);
            let hit = rec(cols, i + 1, left - 1, acc, target);
            acc.xor_assign(&cols[i]);
            if hit {
                return true;
            }
        }
        false
    }
    let mut acc = BitVec::zeros(target.len());
    rec(cols, 0, w, &mut acc, target)
}

/// Weights of `base + span(gens)` over all `2^|gens|` combinations (Gray-code order).
pub fn span_weights(gens: &[BitVec], base: &BitVec) -> Vec<usize> {
    let mut acc = base.clone();
    let total = 1usize << gens.len();
    let mut out = Vec::with_capacity(total);
    out.push(acc.count_ones());
    for i in 1..total {
        let bit = i.trailing_zeros() as usize;
        acc.xor_assign(&gens[bit]);
        out.push(acc.count_ones());
    }
    out
}

/// Bit `i` (0-based, most significant first) of the lexicographic input with index `col`.
#[inline]
pub fn input_bit(col: usize, i: usize, m: usize) -> bool {
    (col >> (m - 1 - i)) & 1 == 1
}

/// Monomials of degree at most `r` in `m` variables, ordered by degree and then
/// lexicographically by variable indices.
pub fn monomials(r: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for deg in 1..=r {
        let mut combo: Vec<usize> = (0..deg).collect();
        loop {
            out.push(combo.clone());
            let mut i = deg;
            while i > 0 && combo[i - 1] == m - deg + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..deg {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    out
}

/// Generator matrix of RM(r, m): one row per monomial, one column per binary input.
///
/// # Errors
///
/// `InvalidParameter` when `m == 0` or `r > m`.
pub fn rm_generator(r: usize, m: usize) -> Result<BitMatrix> {
    if m == 0 || r > m {
        return invalid(format!("RM({r},{m}) requires 1 <= m and r <= m"));
    }
    if m > 24 {
        return invalid(format!("m = {m} exceeds the supported block length"));
    }
    let n = 1usize << m;
    let monos = monomials(r, m);
    let mut g = BitMatrix::zeros(monos.len(), n);
    for (row, mono) in monos.iter().enumerate() {
        for col in 0..n {
            if mono.iter().all(|&i| input_bit(col, i, m)) {
                g.set(row, col, true);
            }
        }
    }
    Ok(g)
}

/// Checks `RM(r,m) ⟂ RM(m-r-1,m)` and that their dimensions add to `2^m`.
pub fn check_duality(r: usize, m: usize) -> Result<bool> {
    if m == 0 || r + 1 > m {
        return invalid(format!("duality needs 0 <= r <= m-1, got r={r}, m={m}"));
    }
    let g = rm_generator(r, m)?;
    let h = rm_generator(m - r - 1, m)?;
    let orthogonal = g.mul(&h.transpose()).is_zero();
    Ok(orthogonal && gf2_rank(&g) + gf2_rank(&h) == 1usize << m)
}

/// The shortened quantum Reed-Muller code on `2^m - 1` qubits encoding one qubit.
///
/// X-checks are the degree-one monomial rows of RM(1,m) with the all-zero input
/// punctured; logical X is all-ones; z-checks span everything orthogonal to both.
pub fn shortened_qrm(m: usize) -> Result<CssCode> {
    if m < 3 {
        return invalid(format!("shortened QRM needs m >= 3, got {m}"));
    }
    let g = rm_generator(1, m)?;
    let n = (1usize << m) - 1;
    let cols: Vec<usize> = (1..=n).collect();
    let punctured = g.select_columns(&cols);
    let mut x_checks = BitMatrix::zeros(0, n);
    for r in 1..punctured.n_rows() {
        x_checks.push_row(&punctured.row(r));
    }
    let logical_x = BitMatrix::from_bitvecs(&[BitVec::ones(n)], n);
    let z_checks = gf2_kernel(&x_checks.vstack(&logical_x));
    // inputs e_1, e_2 and e_1 + e_2, shifted by the punctured column
    let e1 = 1usize << (m - 1);
    let e2 = 1usize << (m - 2);
    let logical_z = BitMatrix::from_supports(&[[e1 - 1, e2 - 1, (e1 | e2) - 1]], n);
    Ok(CssCode {
        z_checks,
        x_checks,
        logical_x,
        logical_z,
    })
}

/// Row rank over GF(2).
pub fn gf2_rank(matrix: &BitMatrix) -> usize {
    let mut m = matrix.clone();
    m.rref().len()
}

/// Basis of the right null space `{x : A x = 0}` as matrix rows.
pub fn gf2_kernel(matrix: &BitMatrix) -> BitMatrix {
    let n = matrix.n_cols();
    let mut m = matrix.clone();
    let pivots = m.rref();
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut out = BitMatrix::zeros(0, n);
    for free in (0..n).filter(|&c| !is_pivot[c]) {
        let mut v = BitVec::zeros(n);
        v.set(free, true);
        for (r, &p) in pivots.iter().enumerate() {
            if m.get(r, free) {
                v.set(p, true);
            }
        }
        out.push_row(&v);
    }
    out
}

/// Binomial coefficient as `u128`; `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}
