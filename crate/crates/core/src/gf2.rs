//! Dense linear algebra over GF(2).
//!
//! Vectors are bit-packed into `u64` words so row operations are word-parallel
//! XORs. Elimination always pivots on the leftmost column and, within that
//! column, on the lowest-index remaining row, which makes ranks, kernels and
//! particular solutions deterministic for a given input.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const WORD: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("kernel vectors are linearly dependent")]
    DependentKernel,
    #[error("selected coordinates do not form an invertible block")]
    SingularSelection,
    #[error("coordinate {index} is out of range or repeated (n = {n})")]
    InvalidCoordinate { index: usize, n: usize },
    #[error("invalid bit character {0:?}")]
    InvalidBit(char),
}

fn check_len(expected: usize, found: usize) -> Result<(), Gf2Error> {
    if expected == found {
        Ok(())
    } else {
        Err(Gf2Error::LengthMismatch { expected, found })
    }
}

/// A fixed-length vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BinVec {
    len: usize,
    words: Vec<u64>,
}

impl BinVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(WORD)],
        }
    }

    /// The `i`-th standard basis vector.
    pub fn unit(len: usize, i: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(i, true);
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

    /// Builds a vector from the low `len` bits of `value`, bit `i` of the
    /// integer becoming coordinate `len - 1 - i` (most significant first).
    pub fn from_index(value: u64, len: usize) -> Self {
        assert!(len <= 64, "index vectors are limited to 64 coordinates");
        let mut v = Self::zeros(len);
        for i in 0..len {
            if (value >> (len - 1 - i)) & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    /// Inverse of [`BinVec::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(
            self.len <= 64,
            "index vectors are limited to 64 coordinates"
        );
        (0..self.len).fold(0u64, |acc, i| (acc << 1) | u64::from(self.get(i)))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
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

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(
            i < self.len,
            "bit index {i} out of range for length {}",
            self.len
        );
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &BinVec) {
        assert_eq!(self.len, other.len, "xor of vectors with different lengths");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &BinVec) -> BinVec {
        let mut out = self.clone();
        out.xor_assign(other);
        out
    }

    /// Inner product modulo 2.
    pub fn dot(&self, other: &BinVec) -> bool {
        assert_eq!(self.len, other.len, "dot of vectors with different lengths");
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        ones & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Indices of the set coordinates, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let tz = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD + tz)
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }

    /// Reorders coordinates: output position `i` takes coordinate `map[i]`.
    pub fn gather(&self, map: &[usize]) -> BinVec {
        let mut out = BinVec::zeros(map.len());
        for (i, &src) in map.iter().enumerate() {
            if self.get(src) {
                out.set(i, true);
            }
        }
        out
    }
}

impl Ord for BinVec {
    /// Lexicographic in coordinate order, shorter vectors first.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for BinVec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BinVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinVec[{self}]")
    }
}

impl FromStr for BinVec {
    type Err = Gf2Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Gf2Error::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BinVec::from_bools(&bits))
    }
}

/// A dense row-major matrix over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinMatrix {
    cols: usize,
    rows: Vec<BinVec>,
}

impl BinMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            rows: vec![BinVec::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            cols: n,
            rows: (0..n).map(|i| BinVec::unit(n, i)).collect(),
        }
    }

    pub fn from_rows(rows: Vec<BinVec>, cols: usize) -> Result<Self, Gf2Error> {
        for r in &rows {
            check_len(cols, r.len())?;
        }
        Ok(Self { cols, rows })
    }

    /// Parses one bit string per row, e.g. `["110", "011"]`.
    pub fn from_strs(rows: &[&str]) -> Result<Self, Gf2Error> {
        let parsed = rows
            .iter()
            .map(|r| r.parse::<BinVec>())
            .collect::<Result<Vec<_>, _>>()?;
        let cols = parsed.first().map_or(0, BinVec::len);
        Self::from_rows(parsed, cols)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BinVec {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[BinVec] {
        &self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value);
    }

    pub fn column(&self, c: usize) -> BinVec {
        let mut out = BinVec::zeros(self.nrows());
        for (i, row) in self.rows.iter().enumerate() {
            if row.get(c) {
                out.set(i, true);
            }
        }
        out
    }

    pub fn transpose(&self) -> BinMatrix {
        BinMatrix {
            cols: self.nrows(),
            rows: (0..self.cols).map(|c| self.column(c)).collect(),
        }
    }

    pub fn matvec(&self, v: &BinVec) -> Result<BinVec, Gf2Error> {
        check_len(self.cols, v.len())?;
        let mut out = BinVec::zeros(self.nrows());
        for (i, row) in self.rows.iter().enumerate() {
            if row.dot(v) {
                out.set(i, true);
            }
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        Elimination::run(self, None).pivots.len()
    }

    /// A basis of the null space, one vector per free column in ascending
    /// column order. Each vector has a single 1 among the free columns.
    pub fn kernel_basis(&self) -> Vec<BinVec> {
        Elimination::run(self, None).kernel()
    }

    /// Some `x` with `self · x = b`, or `None` if the system is inconsistent.
    pub fn solve_particular(&self, b: &BinVec) -> Result<Option<BinVec>, Gf2Error> {
        Ok(match self.solve_affine(b)? {
            AffineSolution::Consistent { particular, .. } => Some(particular),
            AffineSolution::Inconsistent { .. } => None,
        })
    }

    /// Full description of `{x : self · x = b}` from a single elimination.
    pub fn solve_affine(&self, b: &BinVec) -> Result<AffineSolution, Gf2Error> {
        check_len(self.nrows(), b.len())?;
        let elim = Elimination::run(self, Some(b));
        if let Some(witness) = elim.inconsistency() {
            return Ok(AffineSolution::Inconsistent { witness });
        }
        Ok(AffineSolution::Consistent {
            particular: elim.particular(),
            kernel: elim.kernel(),
            rank: elim.pivots.len(),
        })
    }
}

impl fmt::Debug for BinMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinMatrix {}x{} [", self.nrows(), self.cols)?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        write!(f, "]")
    }
}

/// Solution set of a linear system over GF(2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AffineSolution {
    Consistent {
        particular: BinVec,
        kernel: Vec<BinVec>,
        rank: usize,
    },
    /// The listed rows XOR to `0 = 1`.
    Inconsistent { witness: Vec<usize> },
}

/// Reduced row echelon form with the row combinations that produced it.
struct Elimination {
    cols: usize,
    rows: Vec<BinVec>,
    rhs: Vec<bool>,
    combos: Vec<BinVec>,
    pivots: Vec<usize>,
}

impl Elimination {
    fn run(m: &BinMatrix, b: Option<&BinVec>) -> Self {
        let nrows = m.nrows();
        let mut rows = m.rows.clone();
        let mut rhs: Vec<bool> = match b {
            Some(b) => b.iter().collect(),
            None => vec![false; nrows],
        };
        let track = b.is_some();
        let mut combos: Vec<BinVec> = if track {
            (0..nrows).map(|i| BinVec::unit(nrows, i)).collect()
        } else {
            Vec::new()
        };
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..m.cols {
            if r == nrows {
                break;
            }
            let Some(p) = (r..nrows).find(|&i| rows[i].get(col)) else {
                continue;
            };
            rows.swap(r, p);
            rhs.swap(r, p);
            if track {
                combos.swap(r, p);
            }
            let (pivot_row, pivot_rhs) = (rows[r].clone(), rhs[r]);
            let pivot_combo = track.then(|| combos[r].clone());
            for i in 0..nrows {
                if i != r && rows[i].get(col) {
                    rows[i].xor_assign(&pivot_row);
                    rhs[i] ^= pivot_rhs;
                    if let Some(pc) = &pivot_combo {
                        combos[i].xor_assign(pc);
                    }
                }
            }
            pivots.push(col);
            r += 1;
        }
        Self {
            cols: m.cols,
            rows,
            rhs,
            combos,
            pivots,
        }
    }

    fn inconsistency(&self) -> Option<Vec<usize>> {
        let rank = self.pivots.len();
        (rank..self.rows.len())
            .find(|&i| self.rhs[i])
            .map(|i| self.combos[i].ones().collect())
    }

    fn particular(&self) -> BinVec {
        let mut x = BinVec::zeros(self.cols);
        for (i, &p) in self.pivots.iter().enumerate() {
            if self.rhs[i] {
                x.set(p, true);
            }
        }
        x
    }

    fn kernel(&self) -> Vec<BinVec> {
        let mut is_pivot = vec![false; self.cols];
        for &p in &self.pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut x = BinVec::unit(self.cols, free);
                for (i, &p) in self.pivots.iter().enumerate() {
                    if self.rows[i].get(free) {
                        x.set(p, true);
                    }
                }
                x
            })
            .collect()
    }
}

/// Permuted parameterisation of an affine space `{ Σ vᵢ ξᵢ ⊕ ξ̄ }`.
///
/// With `x_P[i] = x[perm[i]]`, every member of the space is
/// `x_P = (v', H v' ⊕ ξ̄')` for exactly one `v'` of length `k`: the first `k`
/// permuted coordinates are free, the remaining `n − k` are affine functions
/// of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardForm {
    perm: Vec<usize>,
    h: BinMatrix,
    xi_bar_prime: BinVec,
}

impl StandardForm {
    /// Uses the leftmost pivot columns of the kernel (as a `k × n` row
    /// matrix) as the free coordinates.
    pub fn new(kernel: &[BinVec], xi_bar: &BinVec) -> Result<Self, Gf2Error> {
        let n = xi_bar.len();
        for v in kernel {
            check_len(n, v.len())?;
        }
        let kt = BinMatrix::from_rows(kernel.to_vec(), n)?;
        let pivots = Elimination::run(&kt, None).pivots;
        if pivots.len() < kernel.len() {
            return Err(Gf2Error::DependentKernel);
        }
        Self::with_free_coordinates(kernel, xi_bar, &pivots)
    }

    /// Builds the form with `free[j]` as the `j`-th free coordinate.
    ///
    /// Fails with [`Gf2Error::SingularSelection`] unless the kernel
    /// restricted to `free` is invertible.
    pub fn with_free_coordinates(
        kernel: &[BinVec],
        xi_bar: &BinVec,
        free: &[usize],
    ) -> Result<Self, Gf2Error> {
        let n = xi_bar.len();
        let k = kernel.len();
        check_len(k, free.len())?;
        let mut is_free = vec![false; n];
        for &c in free {
            if c >= n || is_free[c] {
                return Err(Gf2Error::InvalidCoordinate { index: c, n });
            }
            is_free[c] = true;
        }
        let mut rows = kernel.to_vec();
        for r in &rows {
            check_len(n, r.len())?;
        }
        // Bring the k x k block at `free` to the identity.
        for (j, &c) in free.iter().enumerate() {
            let p = (j..k)
                .find(|&i| rows[i].get(c))
                .ok_or(Gf2Error::SingularSelection)?;
            rows.swap(j, p);
            let pivot = rows[j].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != j && row.get(c) {
                    row.xor_assign(&pivot);
                }
            }
        }
        // Shift the offset so it vanishes on the free coordinates.
        let mut offset = xi_bar.clone();
        for (j, &c) in free.iter().enumerate() {
            if xi_bar.get(c) {
                offset.xor_assign(&rows[j]);
            }
        }
        let dependent: Vec<usize> = (0..n).filter(|&c| !is_free[c]).collect();
        let mut h = BinMatrix::zeros(dependent.len(), k);
        for (i, &d) in dependent.iter().enumerate() {
            for (j, row) in rows.iter().enumerate() {
                if row.get(d) {
                    h.set(i, j, true);
                }
            }
        }
        let perm: Vec<usize> = free.iter().copied().chain(dependent).collect();
        let xi_bar_prime = offset.gather(&perm);
        Ok(Self {
            perm,
            h,
            xi_bar_prime,
        })
    }

    /// Number of free coordinates `k`.
    pub fn dim(&self) -> usize {
        self.h.ncols()
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// `perm[i]` is the original coordinate placed at permuted position `i`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn h(&self) -> &BinMatrix {
        &self.h
    }

    /// The permuted offset; its first `k` entries are zero and its tail is ξ̄′.
    pub fn xi_bar_prime(&self) -> &BinVec {
        &self.xi_bar_prime
    }

    pub fn free_coordinates(&self) -> &[usize] {
        &self.perm[..self.dim()]
    }

    pub fn dependent_coordinates(&self) -> &[usize] {
        &self.perm[self.dim()..]
    }

    /// Offset bit of the `i`-th dependent coordinate.
    pub fn dependent_offset(&self, i: usize) -> bool {
        self.xi_bar_prime.get(self.dim() + i)
    }

    /// The member of the affine space with free block `v_prime`, in the
    /// original coordinate order.
    pub fn expand(&self, v_prime: &BinVec) -> Result<BinVec, Gf2Error> {
        let k = self.dim();
        check_len(k, v_prime.len())?;
        let mut x = BinVec::zeros(self.n());
        for (j, &c) in self.free_coordinates().iter().enumerate() {
            if v_prime.get(j) {
                x.set(c, true);
            }
        }
        for (i, &d) in self.dependent_coordinates().iter().enumerate() {
            if self.h.row(i).dot(v_prime) ^ self.dependent_offset(i) {
                x.set(d, true);
            }
        }
        Ok(x)
    }
}
