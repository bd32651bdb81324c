//! Packed GF(2) vectors and matrices.
//!
//! Rows are stored as `u64` words so that row operations during elimination touch
//! 64 entries at a time.

use serde::{Deserialize, Serialize};
use std::fmt;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = Self::zeros(len);
        for i in 0..len {
            v.set(i, true);
        }
        v
    }

    pub fn from_indices(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in ones {
            v.flip(i);
        }
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn xor_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn and_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn and_count(&self, other: &BitVec) -> usize {
        assert_eq!(self.len, other.len, "length mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    /// Indices of set bits in increasing order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let t = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + t)
                }
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect();
        write!(f, "BitVec({s})")
    }
}

/// Dense matrix over GF(2) with packed rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    n_rows: usize,
    n_cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        let stride = words_for(n_cols);
        BitMatrix {
            n_rows,
            n_cols,
            stride,
            data: vec![0; n_rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows of 0/1 entries.
    ///
    /// # Panics
    ///
    /// Panics if the rows have different lengths.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R], n_cols: usize) -> Self {
        let mut m = Self::zeros(rows.len(), n_cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), n_cols, "row {r} has wrong length");
            for (c, &b) in row.iter().enumerate() {
                if b & 1 == 1 {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Builds a matrix whose rows have ones at the listed column indices.
    pub fn from_supports<S: AsRef<[usize]>>(supports: &[S], n_cols: usize) -> Self {
        let mut m = Self::zeros(supports.len(), n_cols);
        for (r, s) in supports.iter().enumerate() {
            for &c in s.as_ref() {
                m.flip(r, c);
            }
        }
        m
    }

    pub fn from_bitvecs(rows: &[BitVec], n_cols: usize) -> Self {
        let mut m = Self::zeros(0, n_cols);
        for r in rows {
            m.push_row(r);
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.n_rows && c < self.n_cols);
        (self.data[r * self.stride + (c >> 6)] >> (c & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.n_rows && c < self.n_cols);
        let w = &mut self.data[r * self.stride + (c >> 6)];
        let mask = 1u64 << (c & 63);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.stride + (c >> 6)] ^= 1u64 << (c & 63);
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVec {
        BitVec {
            len: self.n_cols,
            words: self.row_words(r).to_vec(),
        }
    }

    pub fn rows(&self) -> Vec<BitVec> {
        (0..self.n_rows).map(|r| self.row(r)).collect()
    }

    pub fn row_weight(&self, r: usize) -> usize {
        self.row_words(r).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn row_support(&self, r: usize) -> Vec<usize> {
        self.row(r).iter_ones().collect()
    }

    pub fn push_row(&mut self, row: &BitVec) {
        assert_eq!(row.len(), self.n_cols, "row length mismatch");
        self.data.extend_from_slice(row.words());
        self.n_rows += 1;
    }

    /// `rows[dst] ^= rows[src]`.
    #[inline]
    pub fn xor_row_into(&mut self, src: usize, dst: usize) {
        if src == dst {
            for w in &mut self.data[dst * self.stride..(dst + 1) * self.stride] {
                *w = 0;
            }
            return;
        }
        let s = self.stride;
        let (a, b) = if src < dst {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&lo[src * s..(src + 1) * s], &mut hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&hi[..s], &mut lo[dst * s..(dst + 1) * s])
        };
        for (d, x) in b.iter_mut().zip(a) {
            *d ^= x;
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.n_cols, self.n_rows);
        for r in 0..self.n_rows {
            for c in self.row(r).iter_ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    /// Matrix product `self * other` over GF(2).
    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.n_cols, other.n_rows, "dimension mismatch");
        let mut out = BitMatrix::zeros(self.n_rows, other.n_cols);
        for r in 0..self.n_rows {
            for k in self.row(r).iter_ones() {
                let src = other.row_words(k);
                let dst = &mut out.data[r * out.stride..(r + 1) * out.stride];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d ^= s;
                }
            }
        }
        out
    }

    /// `self * v` for a column vector `v`.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(self.n_cols, v.len(), "dimension mismatch");
        let mut out = BitVec::zeros(self.n_rows);
        for r in 0..self.n_rows {
            let parity: u32 = self.row_words(r).iter().zip(v.words()).map(|(a, b)| (a & b).count_ones()).sum();
            if parity & 1 == 1 {
                out.set(r, true);
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &BitMatrix) -> BitMatrix {
        assert_eq!(self.n_cols, other.n_cols, "column mismatch");
        let mut m = self.clone();
        m.data.extend_from_slice(&other.data);
        m.n_rows += other.n_rows;
        m
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> BitMatrix {
        let mut m = BitMatrix::zeros(self.n_rows, cols.len());
        for r in 0..self.n_rows {
            for (j, &c) in cols.iter().enumerate() {
                if self.get(r, c) {
                    m.set(r, j, true);
                }
            }
        }
        m
    }

    /// In-place reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.n_cols {
            if row == self.n_rows {
                break;
            }
            let Some(p) = (row..self.n_rows).find(|&r| self.get(r, col)) else {
                continue;
            };
            self.swap_rows(p, row);
            for r in 0..self.n_rows {
                if r != row && self.get(r, col) {
                    self.xor_row_into(row, r);
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.n_rows, self.n_cols)?;
        for r in 0..self.n_rows {
            let s: String = (0..self.n_cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect();
            writeln!(f, "  {s}")?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct BitMatrixRepr {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<usize>>,
}

impl Serialize for BitMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        BitMatrixRepr {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            rows: (0..self.n_rows).map(|r| self.row_support(r)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BitMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = BitMatrixRepr::deserialize(d)?;
        if repr.rows.len() != repr.n_rows {
            return Err(serde::de::Error::custom("row count mismatch"));
        }
        if repr.rows.iter().flatten().any(|&c| c >= repr.n_cols) {
            return Err(serde::de::Error::custom("column index out of range"));
        }
        Ok(BitMatrix::from_supports(&repr.rows, repr.n_cols))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_rows_both_directions() {
        let mut m = BitMatrix::from_rows(&[[1u8, 0, 1], [0, 1, 1]], 3);
        m.xor_row_into(0, 1);
        assert_eq!(m.row_support(1), vec![0, 1]);
        m.xor_row_into(1, 0);
        assert_eq!(m.row_support(0), vec![1, 2]);
    }

    #[test]
    fn iter_ones_crosses_words() {
        let v = BitVec::from_indices(130, [0, 63, 64, 129]);
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(v.count_ones(), 4);
    }

    #[test]
    fn serde_round_trip() {
        let m = BitMatrix::from_rows(&[[1u8, 1, 0, 1], [0, 0, 1, 1]], 4);
        let s = serde_json::to_string(&m).unwrap();
        let back: BitMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}
