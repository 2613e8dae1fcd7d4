//! Bit-level linear algebra over GF(2).
//!
//! A [`BitString`] is a row vector over GF(2). Bit index 0 is the leftmost
//! character of the textual form, so `"101"` has bits 1, 0, 1 at indices
//! 0, 1, 2. A [`BitMatrix`] is a list of equal-length rows; its textual form
//! joins the rows with `';'`.
//!
//! Products always treat a bit string as a row vector: [`BitMatrix::mat_vec`]
//! returns `x · Mᵀ`, i.e. one parity per row of `M`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{check_len, invalid, Error, Result};

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// Fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

impl BitString {
    /// All-zero string of the given length.
    pub fn zeros(len: usize) -> Self {
        BitString {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// All-one string of the given length.
    pub fn ones(len: usize) -> Self {
        let mut s = Self::zeros(len);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.mask_tail();
        s
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut s = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    /// Builds a string from an integer whose most significant of `len` bits
    /// is index 0. Enumerating `0..2^len` therefore walks the strings in
    /// lexicographic order.
    ///
    /// # Panics
    /// Panics if `len > 64`.
    pub fn from_index(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_index supports at most 64 bits");
        let mut s = Self::zeros(len);
        for i in 0..len {
            if (value >> (len - 1 - i)) & 1 == 1 {
                s.set(i, true);
            }
        }
        s
    }

    /// Inverse of [`BitString::from_index`].
    ///
    /// # Panics
    /// Panics if the string is longer than 64 bits.
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64, "to_index supports at most 64 bits");
        (0..self.len).fold(0u64, |acc, i| (acc << 1) | self.get(i) as u64)
    }

    /// Uniformly random string.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut s = Self::zeros(len);
        for w in s.words.iter_mut() {
            *w = rng.random();
        }
        s.mask_tail();
        s
    }

    /// Uniformly random string of exact Hamming weight `weight`.
    pub fn random_with_weight<R: Rng + ?Sized>(
        len: usize,
        weight: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if weight > len {
            return Err(invalid(format!("weight {weight} exceeds length {len}")));
        }
        let positions = rand::seq::index::sample(rng, len, weight);
        let mut s = Self::zeros(len);
        for p in positions.iter() {
            s.set(p, true);
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// # Panics
    /// Panics if `i` is out of range.
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    /// # Panics
    /// Panics if `i` is out of range.
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        let mask = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    /// # Panics
    /// Panics if `i` is out of range.
    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// Number of 1-bits.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        check_len(self.len, other.len)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitString {
            len: self.len,
            words,
        })
    }

    pub fn and(&self, other: &BitString) -> Result<BitString> {
        check_len(self.len, other.len)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        Ok(BitString {
            len: self.len,
            words,
        })
    }

    /// Bitwise complement.
    pub fn not(&self) -> BitString {
        let mut s = BitString {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        s.mask_tail();
        s
    }

    /// In-place XOR. Lengths must match.
    pub fn xor_assign(&mut self, other: &BitString) -> Result<()> {
        check_len(self.len, other.len)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    /// Inner product `a · b` over GF(2).
    pub fn dot(&self, other: &BitString) -> Result<bool> {
        check_len(self.len, other.len)?;
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        Ok(ones % 2 == 1)
    }

    /// Hamming distance.
    pub fn hamming(&self, other: &BitString) -> Result<usize> {
        check_len(self.len, other.len)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Substring made of the bits at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> BitString {
        BitString::from_bits(indices.iter().map(|&i| self.get(i)))
    }

    /// Indices of the 1-bits, ascending.
    pub fn ones_positions(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }

    /// Indices of the 0-bits, ascending.
    pub fn zeros_positions(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| !self.get(i)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Packed 64-bit words, bit `i` at word `i / 64`, position `i % 64`.
    pub(crate) fn to_words(&self) -> Vec<u64> {
        self.words.clone()
    }

    /// Packs a string of at most 64 bits into one word, bit `i` at position `i`.
    pub(crate) fn to_word(&self) -> u64 {
        debug_assert!(self.len <= 64);
        self.words.first().copied().unwrap_or(0)
    }

    /// Inverse of [`BitString::to_word`].
    pub(crate) fn from_word(word: u64, len: usize) -> Self {
        debug_assert!(len <= 64);
        let mut s = BitString {
            len,
            words: vec![word; words_for(len)],
        };
        s.mask_tail();
        s
    }

    fn mask_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.trim().chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(Error::InvalidBit(other)),
            }
        }
        Ok(BitString::from_bits(bits))
    }
}

/// Dense matrix over GF(2), stored as rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitString>,
}

impl BitMatrix {
    /// Builds a matrix from rows that must all have length `cols`.
    pub fn from_rows(rows: Vec<BitString>, cols: usize) -> Result<Self> {
        for r in &rows {
            check_len(cols, r.len())?;
        }
        Ok(BitMatrix { cols, rows })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            cols,
            rows: vec![BitString::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut r = BitString::zeros(n);
                r.set(i, true);
                r
            })
            .collect();
        BitMatrix { cols: n, rows }
    }

    /// Matrix with independent uniform entries.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        BitMatrix {
            cols,
            rows: (0..rows).map(|_| BitString::random(cols, rng)).collect(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitString {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BitString] {
        &self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    /// Returns `x · Mᵀ`: bit `i` of the result is the parity of `row_i ∧ x`.
    pub fn mat_vec(&self, x: &BitString) -> Result<BitString> {
        check_len(self.cols, x.len())?;
        let mut out = BitString::zeros(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            if row.dot(x)? {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    /// Row rank over GF(2).
    pub fn rank(&self) -> usize {
        let mut rows: Vec<Vec<u64>> = self.rows.iter().map(|r| r.words.clone()).collect();
        eliminate(&mut rows, self.cols).len()
    }

    /// Stacks `self` on top of `other`.
    pub fn stack(&self, other: &BitMatrix) -> Result<BitMatrix> {
        check_len(self.cols, other.cols)?;
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        Ok(BitMatrix {
            cols: self.cols,
            rows,
        })
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            for j in row.ones_positions() {
                t.rows[j].set(i, true);
            }
        }
        t
    }

    /// Basis (as rows) of `{x : x · Mᵀ = 0}`.
    pub fn kernel_basis(&self) -> BitMatrix {
        let mut rows: Vec<Vec<u64>> = self.rows.iter().map(|r| r.words.clone()).collect();
        let pivots = eliminate(&mut rows, self.cols);
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = BitString::zeros(self.cols);
            v.set(free, true);
            // Reduced row echelon form: each pivot variable is the parity of the
            // free variables present in its row.
            for (r, &p) in pivots.iter().enumerate() {
                if (rows[r][free / WORD] >> (free % WORD)) & 1 == 1 {
                    v.set(p, true);
                }
            }
            basis.push(v);
        }
        BitMatrix {
            cols: self.cols,
            rows: basis,
        }
    }

    /// Some `x` with `x · Mᵀ = target`, or `None` if the system is inconsistent.
    pub fn solve(&self, target: &BitString) -> Result<Option<BitString>> {
        check_len(self.rows.len(), target.len())?;
        // Augment each row with its right-hand side bit in an extra column.
        let aug_cols = self.cols + 1;
        let mut rows: Vec<Vec<u64>> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut b = BitString::zeros(aug_cols);
                for c in r.ones_positions() {
                    b.set(c, true);
                }
                b.set(self.cols, target.get(i));
                b.words
            })
            .collect();
        let pivots = eliminate(&mut rows, aug_cols);
        let mut x = BitString::zeros(self.cols);
        for (r, &p) in pivots.iter().enumerate() {
            if p == self.cols {
                return Ok(None);
            }
            let rhs = (rows[r][self.cols / WORD] >> (self.cols % WORD)) & 1 == 1;
            x.set(p, rhs);
        }
        Ok(Some(x))
    }

    /// Extends linearly independent rows to a basis of GF(2)^cols by appending
    /// unit vectors. Fails if the rows are dependent.
    pub fn extend_to_basis(&self) -> Result<BitMatrix> {
        if self.rank() != self.rows.len() {
            return Err(invalid("rows are linearly dependent"));
        }
        let mut out = self.clone();
        for c in 0..self.cols {
            if out.rows.len() == self.cols {
                break;
            }
            let mut e = BitString::zeros(self.cols);
            e.set(c, true);
            out.rows.push(e);
            if out.rank() != out.rows.len() {
                out.rows.pop();
            }
        }
        Ok(out)
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.rows.iter().map(|r| r.to_string()).collect();
        f.write_str(&parts.join(";"))
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix[{}x{}]({self})", self.rows.len(), self.cols)
    }
}

impl FromStr for BitMatrix {
    type Err = Error;

    /// Parses rows joined by `';'`. The empty string is the 0×0 matrix.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(BitMatrix::zeros(0, 0));
        }
        let rows: Vec<BitString> = s.split(';').map(str::parse).collect::<Result<_>>()?;
        let cols = rows[0].len();
        BitMatrix::from_rows(rows, cols)
    }
}

/// Gauss-Jordan elimination in place. Returns the pivot column of each of the
/// leading rows; rows beyond the rank are left as zero.
fn eliminate(rows: &mut [Vec<u64>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let (w, bit) = (c / WORD, 1u64 << (c % WORD));
        let Some(p) = (r..rows.len()).find(|&i| rows[i][w] & bit != 0) else {
            continue;
        };
        rows.swap(r, p);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row[w] & bit != 0 {
                for (a, b) in row.iter_mut().zip(&pivot_row) {
                    *a ^= b;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Draws `(P_C, P_K)` of shapes `r×n` and `m×n` whose stacked `(r+m)×n`
/// matrix has full rank `r+m`, uniformly among all such pairs.
///
/// Uniformity comes from rejection: a uniform `(r+m)×n` matrix is redrawn
/// until it has full rank.
pub fn random_stacked_full_rank<R: Rng + ?Sized>(
    r: usize,
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<(BitMatrix, BitMatrix)> {
    if r + m > n {
        return Err(invalid(format!("r + m = {} exceeds n = {n}", r + m)));
    }
    loop {
        let stacked = BitMatrix::random(r + m, n, rng);
        if stacked.rank() == r + m {
            let mut rows = stacked.rows;
            let pk_rows = rows.split_off(r);
            return Ok((
                BitMatrix { cols: n, rows },
                BitMatrix {
                    cols: n,
                    rows: pk_rows,
                },
            ));
        }
    }
}

/// Every ordered tuple of `k` linearly independent vectors of GF(2)^n, as
/// `k×n` matrices, in lexicographic order of their row indices.
///
/// The count is `∏_{i<k} (2^n − 2^i)`; intended for `n ≤ 4`.
pub fn enumerate_full_rank(k: usize, n: usize) -> Result<Vec<BitMatrix>> {
    if n > 6 || k > n {
        return Err(Error::TooLarge(format!(
            "enumerate_full_rank(k={k}, n={n})"
        )));
    }
    let mut out = Vec::new();
    let mut current: Vec<BitString> = Vec::new();
    fn rec(k: usize, n: usize, current: &mut Vec<BitString>, out: &mut Vec<BitMatrix>) {
        if current.len() == k {
            out.push(BitMatrix {
                cols: n,
                rows: current.clone(),
            });
            return;
        }
        for v in 0..(1u64 << n) {
            current.push(BitString::from_index(v, n));
            let m = BitMatrix {
                cols: n,
                rows: current.clone(),
            };
            if m.rank() == current.len() {
                rec(k, n, current, out);
            }
            current.pop();
        }
    }
    rec(k, n, &mut current, &mut out);
    Ok(out)
}
