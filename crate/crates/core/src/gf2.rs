//! Dense GF(2) matrices, bit-packed row-major.

use std::fmt;

use crate::bits::{words_for, BitVec, WORD_BITS};

/// A dense matrix over GF(2). Each row occupies `⌈cols/64⌉` words, LSB-first;
/// padding bits past `cols` are kept zero.
#[derive(Clone, PartialEq, Eq)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

/// Result of a Gauss-Jordan reduction: the reduced matrix and, for each
/// nonzero row `r`, the column holding its leading one.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub matrix: Gf2Matrix,
    pub pivots: Vec<usize>,
}

impl Reduced {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[BitVec]) -> Self {
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "row {r} has wrong length");
            m.row_words_mut(r).copy_from_slice(row.words());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD_BITS] >> (c % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.stride + c / WORD_BITS];
        let mask = 1u64 << (c % WORD_BITS);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    #[inline]
    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    fn row_words_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    pub fn row(&self, r: usize) -> BitVec {
        BitVec::from_words(self.cols, self.row_words(r))
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.stride {
            self.data.swap(a * self.stride + w, b * self.stride + w);
        }
    }

    /// row[dst] ^= row[src]
    #[inline]
    pub fn xor_row(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let s = self.stride;
        let (d0, s0) = (dst * s, src * s);
        for w in 0..s {
            let v = self.data[s0 + w];
            self.data[d0 + w] ^= v;
        }
    }

    /// `M · v`, one parity bit per row.
    pub fn mul_vec(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.cols, "vector length mismatch");
        let mut out = BitVec::zeros(self.rows);
        for r in 0..self.rows {
            if v.dot_words(self.row_words(r)) {
                out.set(r, true);
            }
        }
        out
    }

    /// `v · M`: XOR of the rows selected by `v`.
    pub fn vec_mul(&self, v: &BitVec) -> BitVec {
        assert_eq!(v.len(), self.rows, "vector length mismatch");
        let mut acc = vec![0u64; self.stride];
        for r in v.ones() {
            for (a, b) in acc.iter_mut().zip(self.row_words(r)) {
                *a ^= *b;
            }
        }
        BitVec::from_words(self.cols, &acc)
    }

    pub fn transpose(&self) -> Gf2Matrix {
        let mut t = Gf2Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in self.row(r).ones() {
                t.set(c, r, true);
            }
        }
        t
    }

    pub fn mul(&self, other: &Gf2Matrix) -> Gf2Matrix {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Gf2Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let prod = other.vec_mul(&self.row(r));
            out.row_words_mut(r).copy_from_slice(prod.words());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    /// Copy with columns rearranged so that new column `j` is old column `perm[j]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Gf2Matrix {
        assert_eq!(perm.len(), self.cols);
        let mut out = Gf2Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (j, &src) in perm.iter().enumerate() {
                if self.get(r, src) {
                    out.set(r, j, true);
                }
            }
        }
        out
    }

    /// Gauss-Jordan elimination visiting columns in `order`. A column with no
    /// available pivot is skipped. The result is in reduced row-echelon form
    /// with respect to the visited order; zero rows sit at the bottom.
    pub fn reduce_in_order(&self, order: &[usize]) -> Reduced {
        let mut m = self.clone();
        let mut pivots = Vec::with_capacity(self.rows.min(self.cols));
        for &c in order {
            let rank = pivots.len();
            if rank == m.rows {
                break;
            }
            let Some(p) = (rank..m.rows).find(|&r| m.get(r, c)) else {
                continue;
            };
            m.swap_rows(rank, p);
            for r in 0..m.rows {
                if r != rank && m.get(r, c) {
                    m.xor_row(r, rank);
                }
            }
            pivots.push(c);
        }
        Reduced { matrix: m, pivots }
    }

    pub fn rank(&self) -> usize {
        let order: Vec<usize> = (0..self.cols).collect();
        self.reduce_in_order(&order).rank()
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Gf2Matrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r))?;
        }
        Ok(())
    }
}
