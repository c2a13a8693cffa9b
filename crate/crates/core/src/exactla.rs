//! Exact rational linear algebra.
//!
//! Everything downstream reduces to three primitives: reduced row-echelon
//! form, kernels, and canonical subspace arithmetic.  Scalars are
//! arbitrary-precision rationals, so every rank decision is exact — no
//! floating point anywhere.
//!
//! Subspaces are kept in canonical form (the unique RREF basis of the row
//! space, zero rows dropped), which makes subspace equality a plain
//! structural comparison.
//!
//! The elimination core is fraction-free: rows are scaled to primitive
//! integer vectors and combined by cross-multiplication, with a gcd
//! reduction after every step to bound coefficient growth; pivots are
//! normalized to 1 only when the reduced matrix is assembled.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Zero};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Scalar type: arbitrary-precision rational, kept in lowest terms with a
/// positive denominator by the underlying representation.
pub type Rational = BigRational;

/// Errors produced by the linear-algebra layer.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinAlgError {
    /// Two objects that must agree on a dimension do not.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// A string could not be parsed as a rational number.
    #[error("cannot parse {text:?} as a rational (expected \"p\" or \"p/q\" with q nonzero)")]
    ParseRational { text: String },
    /// A nested list of rows was not rectangular.
    #[error("ragged rows: row {row} has {got} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },
}

/// Rational from an integer.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Rational from a numerator/denominator pair (`den` must be nonzero).
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Canonical string form: `"p"` for integers, `"p/q"` otherwise (q > 0).
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p"` or `"p/q"`; the sign may sit on either part and the result
/// is normalized to lowest terms with a positive denominator.
pub fn parse_rational(s: &str) -> Result<Rational, LinAlgError> {
    let text = s.trim();
    let err = || LinAlgError::ParseRational { text: s.to_string() };
    match text.split_once('/') {
        None => BigInt::from_str(text)
            .map(Rational::from_integer)
            .map_err(|_| err()),
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| err())?;
            let q = BigInt::from_str(q.trim()).map_err(|_| err())?;
            if q.is_zero() {
                return Err(err());
            }
            Ok(Rational::new(p, q))
        }
    }
}

/// Dense row-major matrix over the rationals.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    /// The `rows × cols` zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    /// The `n × n` identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// Builds a matrix entry by entry from a closure over `(row, col)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    /// Zero rows yield a `0 × 0` matrix.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self, LinAlgError> {
        let n = rows.len();
        let cols = rows.first().map_or(0, |r| r.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(LinAlgError::RaggedRows {
                    row: i,
                    expected: cols,
                    got: r.len(),
                });
            }
        }
        Ok(Self {
            rows: n,
            cols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    /// Convenience constructor from integer literals; panics on ragged rows.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let data: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| r.iter().map(|&n| rat(n)).collect())
            .collect();
        Self::from_rows(data).expect("integer literal rows must be rectangular")
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Borrow of the entry at `(r, c)`.
    pub fn entry(&self, r: usize, c: usize) -> &Rational {
        &self.entries[r * self.cols + c]
    }

    /// Overwrites the entry at `(r, c)`.
    pub fn set(&mut self, r: usize, c: usize, value: Rational) {
        self.entries[r * self.cols + c] = value;
    }

    /// Borrow of row `r` as a slice.
    pub fn row(&self, r: usize) -> &[Rational] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// All rows as owned vectors (serialization helper).
    pub fn row_vecs(&self) -> Vec<Vec<Rational>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    /// True when every entry is zero.
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Rational::is_zero)
    }

    /// The transpose.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.entry(c, r).clone())
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Result<Self, LinAlgError> {
        if self.cols != other.rows {
            return Err(LinAlgError::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entry(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.entry(k, c);
                    if b.is_zero() {
                        continue;
                    }
                    out.entries[r * other.cols + c] += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Matrix–vector product `self · v`.
    pub fn apply(&self, v: &[Rational]) -> Result<Vec<Rational>, LinAlgError> {
        if v.len() != self.cols {
            return Err(LinAlgError::DimensionMismatch {
                context: "matrix-vector product",
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = vec![Rational::zero(); self.rows];
        for r in 0..self.rows {
            for c in 0..self.cols {
                let a = self.entry(r, c);
                if !a.is_zero() && !v[c].is_zero() {
                    out[r] += a * &v[c];
                }
            }
        }
        Ok(out)
    }

    /// Entry-wise sum.
    pub fn add(&self, other: &Self) -> Result<Self, LinAlgError> {
        self.zip_entries(other, "matrix sum", |a, b| a + b)
    }

    /// Entry-wise difference.
    pub fn sub(&self, other: &Self) -> Result<Self, LinAlgError> {
        self.zip_entries(other, "matrix difference", |a, b| a - b)
    }

    fn zip_entries(
        &self,
        other: &Self,
        context: &'static str,
        f: impl Fn(&Rational, &Rational) -> Rational,
    ) -> Result<Self, LinAlgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinAlgError::DimensionMismatch {
                context,
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Entry-wise negation.
    pub fn neg(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|a| -a.clone()).collect(),
        }
    }

    /// Entry-wise scaling.
    pub fn scale(&self, s: &Rational) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|a| a * s).collect(),
        }
    }

    /// Vertical stacking: `self` on top of `below` (column counts must match).
    pub fn stack(&self, below: &Self) -> Result<Self, LinAlgError> {
        if self.cols != below.cols {
            return Err(LinAlgError::DimensionMismatch {
                context: "vertical stack",
                expected: self.cols,
                got: below.cols,
            });
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&below.entries);
        Ok(Self {
            rows: self.rows + below.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Horizontal stacking: `self` to the left of `right` (row counts must match).
    pub fn hstack(&self, right: &Self) -> Result<Self, LinAlgError> {
        if self.rows != right.rows {
            return Err(LinAlgError::DimensionMismatch {
                context: "horizontal stack",
                expected: self.rows,
                got: right.rows,
            });
        }
        Ok(Self::from_fn(self.rows, self.cols + right.cols, |r, c| {
            if c < self.cols {
                self.entry(r, c).clone()
            } else {
                right.entry(r, c - self.cols).clone()
            }
        }))
    }

    /// The contiguous column block `[start, start + len)` as a matrix.
    pub fn column_block(&self, start: usize, len: usize) -> Self {
        assert!(
            start + len <= self.cols,
            "column block out of range: {}..{} of {}",
            start,
            start + len,
            self.cols
        );
        Self::from_fn(self.rows, len, |r, c| self.entry(r, start + c).clone())
    }

    /// The first `k` rows as a matrix.
    pub fn top_rows(&self, k: usize) -> Self {
        assert!(k <= self.rows, "row prefix out of range: {} of {}", k, self.rows);
        Self {
            rows: k,
            cols: self.cols,
            entries: self.entries[..k * self.cols].to_vec(),
        }
    }

    /// Rank (number of pivots in the reduced form).
    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Reduced row-echelon form together with the pivot columns.
    ///
    /// The result keeps the input shape (zero rows sort to the bottom),
    /// every pivot is 1 with zeros above and below, and the pivot column
    /// list is strictly increasing.  The RREF of a matrix is unique, so the
    /// output depends only on the row space and the row count.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut rows: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|r| primitive_integer_row(self.row(r)))
            .collect();
        let mut pivots: Vec<usize> = Vec::new();
        for col in 0..self.cols {
            let next = pivots.len();
            if next == self.rows {
                break;
            }
            let Some(p) = (next..self.rows).find(|&r| !rows[r][col].is_zero()) else {
                continue;
            };
            rows.swap(next, p);
            let pivot_row = rows[next].clone();
            let pivot = pivot_row[col].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r == next || row[col].is_zero() {
                    continue;
                }
                let factor = row[col].clone();
                for (c, v) in row.iter_mut().enumerate() {
                    *v = &pivot * &*v - &factor * &pivot_row[c];
                }
                reduce_row_content(row);
            }
            pivots.push(col);
        }
        let mut out = Self::zeros(self.rows, self.cols);
        for (i, &pc) in pivots.iter().enumerate() {
            let pivot = rows[i][pc].clone();
            for c in 0..self.cols {
                if !rows[i][c].is_zero() {
                    out.set(i, c, Rational::new(rows[i][c].clone(), pivot.clone()));
                }
            }
        }
        (out, pivots)
    }

    /// Basis of the right null space `{ v : self · v = 0 }` in canonical form.
    pub fn kernel(&self) -> Subspace {
        let (reduced, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut generators: Vec<Vec<Rational>> = Vec::new();
        for f in 0..self.cols {
            if is_pivot[f] {
                continue;
            }
            let mut v = vec![Rational::zero(); self.cols];
            v[f] = Rational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -reduced.entry(i, f).clone();
            }
            generators.push(v);
        }
        Subspace::from_generators(self.cols, generators)
            .expect("kernel generators have the ambient length by construction")
    }

    /// Column span of the matrix, as a subspace of the row-index space.
    pub fn column_space(&self) -> Subspace {
        Subspace::from_matrix_rows(&self.transpose())
    }

    /// Row span of the matrix.
    pub fn row_space(&self) -> Subspace {
        Subspace::from_matrix_rows(self)
    }

    /// The preimage `{ v : self · v ∈ s }` of a subspace under this matrix.
    pub fn preimage(&self, s: &Subspace) -> Result<Subspace, LinAlgError> {
        if s.ambient_dim() != self.rows {
            return Err(LinAlgError::DimensionMismatch {
                context: "preimage",
                expected: self.rows,
                got: s.ambient_dim(),
            });
        }
        Ok(s.constraints().mul(self)?.kernel())
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let texts: Vec<String> = self.entries.iter().map(format_rational).collect();
        let mut widths = vec![0usize; self.cols];
        for r in 0..self.rows {
            for c in 0..self.cols {
                widths[c] = widths[c].max(texts[r * self.cols + c].len());
            }
        }
        for r in 0..self.rows {
            write!(f, "[")?;
            for c in 0..self.cols {
                if c > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{:>width$}", texts[r * self.cols + c], width = widths[c])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

/// Scales a rational row to a primitive integer vector (cleared
/// denominators, entries divided by their gcd).
fn primitive_integer_row(row: &[Rational]) -> Vec<BigInt> {
    let mut denom_lcm = BigInt::one();
    for v in row {
        denom_lcm = denom_lcm.lcm(v.denom());
    }
    let mut ints: Vec<BigInt> = row
        .iter()
        .map(|v| v.numer() * (&denom_lcm / v.denom()))
        .collect();
    reduce_row_content(&mut ints);
    ints
}

/// Divides an integer row by the gcd of its entries (no-op on zero rows).
fn reduce_row_content(row: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for v in row.iter() {
        g = g.gcd(v);
        if g.is_one() {
            return;
        }
    }
    if g.is_zero() || g.is_one() {
        return;
    }
    for v in row.iter_mut() {
        *v = &*v / &g;
    }
}

/// A linear subspace of ℚ^ambient in canonical form.
///
/// The stored basis is the unique RREF of any spanning set with zero rows
/// dropped, so two values compare equal exactly when they describe the same
/// subspace.  `pivots[i]` is the pivot column of basis row `i`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Subspace {
    ambient_dim: usize,
    basis: RationalMatrix,
    pivots: Vec<usize>,
}

impl Subspace {
    /// The zero subspace of ℚ^ambient.
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: RationalMatrix::zeros(0, ambient_dim),
            pivots: Vec::new(),
        }
    }

    /// All of ℚ^ambient.
    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: RationalMatrix::identity(ambient_dim),
            pivots: (0..ambient_dim).collect(),
        }
    }

    /// The span of the given generators inside ℚ^ambient.
    pub fn from_generators(
        ambient_dim: usize,
        generators: Vec<Vec<Rational>>,
    ) -> Result<Self, LinAlgError> {
        for g in &generators {
            if g.len() != ambient_dim {
                return Err(LinAlgError::DimensionMismatch {
                    context: "subspace generator",
                    expected: ambient_dim,
                    got: g.len(),
                });
            }
        }
        let m = RationalMatrix::from_rows(generators)?;
        if m.rows() == 0 {
            return Ok(Self::zero(ambient_dim));
        }
        Ok(Self::from_matrix_rows(&m))
    }

    /// The row space of a matrix (ambient = column count).
    pub fn from_matrix_rows(m: &RationalMatrix) -> Self {
        let (reduced, pivots) = m.rref();
        let dim = pivots.len();
        Self {
            ambient_dim: m.cols(),
            basis: reduced.top_rows(dim),
            pivots,
        }
    }

    /// Dimension of the surrounding space.
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Dimension of the subspace.
    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Canonical basis matrix (one basis vector per row, RREF).
    pub fn basis(&self) -> &RationalMatrix {
        &self.basis
    }

    /// Borrow of basis row `i`.
    pub fn basis_row(&self, i: usize) -> &[Rational] {
        self.basis.row(i)
    }

    /// Pivot column of each basis row (strictly increasing).
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// True for the zero subspace.
    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    /// True when the subspace is all of the ambient space.
    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    /// Expresses `v` in basis coordinates; `None` when `v` lies outside.
    ///
    /// In RREF each basis row is the only one with a nonzero entry in its
    /// pivot column, so candidate coordinates are read off the pivot columns
    /// and then verified by reconstructing `v`.
    pub fn coordinates_of(&self, v: &[Rational]) -> Result<Option<Vec<Rational>>, LinAlgError> {
        if v.len() != self.ambient_dim {
            return Err(LinAlgError::DimensionMismatch {
                context: "subspace membership",
                expected: self.ambient_dim,
                got: v.len(),
            });
        }
        let coords: Vec<Rational> = self.pivots.iter().map(|&pc| v[pc].clone()).collect();
        for c in 0..self.ambient_dim {
            let mut acc = Rational::zero();
            for (i, coord) in coords.iter().enumerate() {
                if !coord.is_zero() {
                    acc += coord * self.basis.entry(i, c);
                }
            }
            if acc != v[c] {
                return Ok(None);
            }
        }
        Ok(Some(coords))
    }

    /// Membership test.
    pub fn contains(&self, v: &[Rational]) -> Result<bool, LinAlgError> {
        Ok(self.coordinates_of(v)?.is_some())
    }

    /// True when every basis vector of `self` lies in `other`.
    pub fn is_subspace_of(&self, other: &Subspace) -> Result<bool, LinAlgError> {
        if other.ambient_dim != self.ambient_dim {
            return Err(LinAlgError::DimensionMismatch {
                context: "subspace inclusion",
                expected: self.ambient_dim,
                got: other.ambient_dim,
            });
        }
        for i in 0..self.dim() {
            if !other.contains(self.basis_row(i))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Rows spanning the annihilator: `v` lies in the subspace iff
    /// `constraints() · v = 0`.  Shape: `(ambient − dim) × ambient`.
    pub fn constraints(&self) -> RationalMatrix {
        self.basis.kernel().basis.clone()
    }

    /// Intersection of two subspaces of the same ambient space.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace, LinAlgError> {
        if other.ambient_dim != self.ambient_dim {
            return Err(LinAlgError::DimensionMismatch {
                context: "subspace intersection",
                expected: self.ambient_dim,
                got: other.ambient_dim,
            });
        }
        Ok(self.constraints().stack(&other.constraints())?.kernel())
    }

    /// Sum (join) of two subspaces of the same ambient space.
    pub fn sum(&self, other: &Subspace) -> Result<Subspace, LinAlgError> {
        if other.ambient_dim != self.ambient_dim {
            return Err(LinAlgError::DimensionMismatch {
                context: "subspace sum",
                expected: self.ambient_dim,
                got: other.ambient_dim,
            });
        }
        Ok(Self::from_matrix_rows(&self.basis.stack(&other.basis)?))
    }

    /// Image of this subspace under a linear map (`m.cols` = ambient).
    pub fn apply_map(&self, m: &RationalMatrix) -> Result<Subspace, LinAlgError> {
        if m.cols() != self.ambient_dim {
            return Err(LinAlgError::DimensionMismatch {
                context: "subspace image",
                expected: self.ambient_dim,
                got: m.cols(),
            });
        }
        let image_rows = self.basis.mul(&m.transpose())?;
        Ok(Self::from_matrix_rows(&image_rows))
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}-dim subspace of Q^{}", self.dim(), self.ambient_dim)?;
        write!(f, "{}", self.basis)
    }
}
