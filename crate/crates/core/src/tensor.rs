//! Exact dense tensors over the rationals: W-state builders, Kronecker
//! products, flattenings, mode maps, and exact matrix rank.
//!
//! Conventions used throughout (and relied on by golden-file tests):
//! entries are stored row-major with the last index fastest; flattening
//! columns fuse the remaining modes in ascending mode order with the same
//! convention; Kronecker index pairing is big-endian, i.e. the left factor
//! supplies the high-order digit of each mode index. Modes are numbered
//! from 0.

use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense tensor of exact rationals with at least one mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    entries: Vec<BigRational>,
}

/// Decode a flat offset into a multi-index under the row-major layout.
fn unravel(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0usize; shape.len()];
    for (pos, &dim) in shape.iter().enumerate().rev() {
        idx[pos] = flat % dim;
        flat /= dim;
    }
    idx
}

fn checked_volume(shape: &[usize]) -> Result<usize> {
    let mut total = 1usize;
    for &dim in shape {
        if dim == 0 {
            return Err(Error::invalid("tensor dimensions must be >= 1"));
        }
        total = total
            .checked_mul(dim)
            .ok_or_else(|| Error::invalid("tensor volume overflows usize"))?;
    }
    Ok(total)
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, entries: Vec<BigRational>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::invalid("tensor must have at least one mode"));
        }
        let total = checked_volume(&shape)?;
        if entries.len() != total {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for shape {:?}, got {}",
                total,
                shape,
                entries.len()
            )));
        }
        Ok(DenseTensor { shape, entries })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::invalid("tensor must have at least one mode"));
        }
        let total = checked_volume(&shape)?;
        Ok(DenseTensor {
            shape,
            entries: vec![BigRational::zero(); total],
        })
    }

    /// The W-state tensor of order `k`: shape 2 x ... x 2 with entry 1 at the
    /// `k` positions whose multi-index contains a single 1, and 0 elsewhere.
    pub fn wstate(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::invalid("wstate: order k must be >= 2"));
        }
        let mut t = Self::zeros(vec![2; k])?;
        for i in 0..k {
            let flat = 1usize << (k - 1 - i);
            t.entries[flat] = BigRational::one();
        }
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "index length {} does not match order {}",
                idx.len(),
                self.shape.len()
            )));
        }
        let mut flat = 0usize;
        for (pos, (&i, &dim)) in idx.iter().zip(&self.shape).enumerate() {
            if i >= dim {
                return Err(Error::invalid(format!(
                    "index {i} out of range for mode {pos} of dimension {dim}"
                )));
            }
            flat = flat * dim + i;
        }
        Ok(flat)
    }

    pub fn get(&self, idx: &[usize]) -> Result<&BigRational> {
        Ok(&self.entries[self.flat_index(idx)?])
    }

    pub fn set(&mut self, idx: &[usize], value: BigRational) -> Result<()> {
        let flat = self.flat_index(idx)?;
        self.entries[flat] = value;
        Ok(())
    }

    /// Nonzero entries as (multi-index, value) pairs in row-major order.
    pub fn iter_nonzero(&self) -> impl Iterator<Item = (Vec<usize>, &BigRational)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(flat, v)| (unravel(&self.shape, flat), v))
    }

    /// Tensor Kronecker product: both operands must have the same order; the
    /// result has mode dimensions `dim_i(self) * dim_i(other)` and pairs mode
    /// indices big-endian as `a_i * dim_i(other) + b_i`.
    pub fn kronecker(&self, other: &Self) -> Result<Self> {
        if self.order() != other.order() {
            return Err(Error::ShapeMismatch(format!(
                "kronecker: order {} vs {}",
                self.order(),
                other.order()
            )));
        }
        let shape: Vec<usize> = self
            .shape
            .iter()
            .zip(&other.shape)
            .map(|(&a, &b)| a * b)
            .collect();
        let mut out = Self::zeros(shape)?;
        for (a_idx, a_val) in self.iter_nonzero() {
            for (b_idx, b_val) in other.iter_nonzero() {
                let idx: Vec<usize> = a_idx
                    .iter()
                    .zip(&b_idx)
                    .zip(&other.shape)
                    .map(|((&a, &b), &bd)| a * bd + b)
                    .collect();
                let flat = out.flat_index(&idx)?;
                out.entries[flat] = a_val * b_val;
            }
        }
        Ok(out)
    }

    /// `n`-fold Kronecker power; `n = 1` returns the tensor unchanged.
    pub fn kron_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("kron_power: n must be >= 1"));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.kronecker(self)?;
        }
        Ok(acc)
    }

    /// Mode-`mode` flattening: rows are indexed by that mode, columns by the
    /// remaining modes fused in ascending order (last fastest).
    pub fn flattening(&self, mode: usize) -> Result<ExactMatrix> {
        if mode >= self.order() {
            return Err(Error::invalid(format!(
                "flattening: mode {mode} out of range for order {}",
                self.order()
            )));
        }
        let rows = self.shape[mode];
        let cols = self.entries.len() / rows;
        let mut m = ExactMatrix::zeros(rows, cols)?;
        for (flat, value) in self.entries.iter().enumerate() {
            let idx = unravel(&self.shape, flat);
            let mut col = 0usize;
            for (i, &x) in idx.iter().enumerate() {
                if i != mode {
                    col = col * self.shape[i] + x;
                }
            }
            m.set(idx[mode], col, value.clone());
        }
        Ok(m)
    }

    /// Per-mode conciseness flags: mode `i` is concise iff its flattening has
    /// full rank `shape[i]`.
    pub fn conciseness(&self) -> Result<ConcisenessReport> {
        let mut ranks = Vec::with_capacity(self.order());
        let mut per_mode = Vec::with_capacity(self.order());
        for mode in 0..self.order() {
            let rank = self.flattening(mode)?.rank();
            per_mode.push(rank == self.shape[mode]);
            ranks.push(rank);
        }
        let concise = per_mode.iter().all(|&b| b);
        Ok(ConcisenessReport {
            ranks,
            per_mode,
            concise,
        })
    }

    /// Contract a matrix against one mode: the result replaces `shape[mode]`
    /// with `m.rows()`, with `out[.., r, ..] = sum_c m[r][c] t[.., c, ..]`.
    pub fn apply_mode_map(&self, mode: usize, m: &ExactMatrix) -> Result<Self> {
        if mode >= self.order() {
            return Err(Error::invalid(format!(
                "apply_mode_map: mode {mode} out of range for order {}",
                self.order()
            )));
        }
        if m.cols() != self.shape[mode] {
            return Err(Error::ShapeMismatch(format!(
                "apply_mode_map: matrix has {} columns, mode {mode} has dimension {}",
                m.cols(),
                self.shape[mode]
            )));
        }
        let before: usize = self.shape[..mode].iter().product();
        let at = self.shape[mode];
        let after: usize = self.shape[mode + 1..].iter().product();
        let mut shape = self.shape.clone();
        shape[mode] = m.rows();
        let mut out = Self::zeros(shape)?;
        for b in 0..before {
            for r in 0..m.rows() {
                for a in 0..after {
                    let mut acc = BigRational::zero();
                    for c in 0..at {
                        let coeff = m.get(r, c);
                        if !coeff.is_zero() {
                            acc += coeff * &self.entries[(b * at + c) * after + a];
                        }
                    }
                    out.entries[(b * m.rows() + r) * after + a] = acc;
                }
            }
        }
        Ok(out)
    }
}

/// Result of the per-mode conciseness test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcisenessReport {
    /// Exact flattening rank per mode.
    pub ranks: Vec<usize>,
    /// Whether each mode's flattening has full rank.
    pub per_mode: Vec<bool>,
    /// True iff every mode is concise.
    pub concise: bool,
}

/// Dense matrix of exact rationals, row-major. Dimensions are at least 1x1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigRational>,
}

impl ExactMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigRational>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be >= 1"));
        }
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(ExactMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![BigRational::zero(); rows.saturating_mul(cols)])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        Ok(m)
    }

    /// Build from integer rows; all rows must have the same length.
    pub fn from_int_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|row| row.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let entries = rows
            .iter()
            .flatten()
            .map(|&v| BigRational::from_integer(BigInt::from(v)))
            .collect();
        Self::new(r, c, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry access; panics if out of range.
    pub fn get(&self, r: usize, c: usize) -> &BigRational {
        assert!(r < self.rows && c < self.cols, "matrix index out of range");
        &self.entries[r * self.cols + c]
    }

    /// Entry assignment; panics if out of range.
    pub fn set(&mut self, r: usize, c: usize, value: BigRational) {
        assert!(r < self.rows && c < self.cols, "matrix index out of range");
        self.entries[r * self.cols + c] = value;
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    /// Matrix Kronecker product (block structure, left factor high-order).
    pub fn kronecker(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zeros(self.rows * other.rows, self.cols * other.cols)?;
        for ra in 0..self.rows {
            for ca in 0..self.cols {
                let a = self.get(ra, ca);
                if a.is_zero() {
                    continue;
                }
                for rb in 0..other.rows {
                    for cb in 0..other.cols {
                        let b = other.get(rb, cb);
                        if !b.is_zero() {
                            out.set(ra * other.rows + rb, ca * other.cols + cb, a * b);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn kron_power(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("kron_power: n must be >= 1"));
        }
        let mut acc = self.clone();
        for _ in 1..n {
            acc = acc.kronecker(self)?;
        }
        Ok(acc)
    }

    /// Exact rank over the rationals via fraction-free (Bareiss) elimination.
    ///
    /// Rows are first scaled to integers by the lcm of their denominators;
    /// pivoting picks the first row with a nonzero entry in column order, so
    /// the result is deterministic and involves no tolerances.
    pub fn rank(&self) -> usize {
        let mut a: Vec<Vec<BigInt>> = (0..self.rows)
            .map(|r| {
                let row = &self.entries[r * self.cols..(r + 1) * self.cols];
                let lcm = row
                    .iter()
                    .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
                row.iter()
                    .map(|v| v.numer() * (&lcm / v.denom()))
                    .collect()
            })
            .collect();
        let mut rank = 0usize;
        let mut prev = BigInt::one();
        for col in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let Some(p) = (rank..self.rows).find(|&r| !a[r][col].is_zero()) else {
                continue;
            };
            a.swap(rank, p);
            let pivot_row = a[rank].clone();
            let pivot = pivot_row[col].clone();
            for row in a.iter_mut().skip(rank + 1) {
                let factor = std::mem::replace(&mut row[col], BigInt::zero());
                // Nothing to eliminate and no rescaling pending: the row is
                // unchanged. This makes sparse 0/1 matrices near-linear.
                if factor.is_zero() && pivot == prev {
                    continue;
                }
                for c in col + 1..self.cols {
                    let num = &pivot * &row[c] - &factor * &pivot_row[c];
                    debug_assert!((&num % &prev).is_zero(), "fraction-free step not exact");
                    row[c] = num / &prev;
                }
            }
            prev = pivot;
            rank += 1;
        }
        rank
    }
}

/// On-disk tensor document: either a dense entry array or a sparse list of
/// (multi-index, value) pairs. Values are exact rationals written as "p/q"
/// or plain integer strings.
#[derive(Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase")]
enum TensorFile {
    Dense {
        shape: Vec<usize>,
        entries: Vec<String>,
    },
    Sparse {
        shape: Vec<usize>,
        entries: Vec<(Vec<usize>, String)>,
    },
}

/// Parse an exact rational written as "p/q" or a plain integer.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational {s:?}"));
    match s.split_once('/') {
        None => Ok(BigRational::from_integer(
            BigInt::from_str(s).map_err(|_| bad())?,
        )),
        Some((num, den)) => {
            let numer = BigInt::from_str(num).map_err(|_| bad())?;
            let denom = BigInt::from_str(den).map_err(|_| bad())?;
            if denom.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(numer, denom))
        }
    }
}

impl DenseTensor {
    /// Serialize with the full entry array, row-major.
    pub fn to_dense_text(&self) -> String {
        let doc = TensorFile::Dense {
            shape: self.shape.clone(),
            entries: self.entries.iter().map(|v| v.to_string()).collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    /// Serialize listing only nonzero entries as (multi-index, value) pairs.
    pub fn to_sparse_text(&self) -> String {
        let doc = TensorFile::Sparse {
            shape: self.shape.clone(),
            entries: self
                .iter_nonzero()
                .map(|(idx, v)| (idx, v.to_string()))
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    /// Parse either tensor document variant.
    pub fn from_text(text: &str) -> Result<Self> {
        let doc: TensorFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("tensor file: {e}")))?;
        match doc {
            TensorFile::Dense { shape, entries } => {
                let values = entries
                    .iter()
                    .map(|s| parse_rational(s))
                    .collect::<Result<Vec<_>>>()?;
                Self::new(shape, values)
            }
            TensorFile::Sparse { shape, entries } => {
                let mut t = Self::zeros(shape)?;
                let mut seen = std::collections::BTreeSet::new();
                for (idx, s) in &entries {
                    let flat = t.flat_index(idx)?;
                    if !seen.insert(flat) {
                        return Err(Error::Parse(format!("duplicate sparse index {idx:?}")));
                    }
                    t.entries[flat] = parse_rational(s)?;
                }
                Ok(t)
            }
        }
    }

    /// Human-oriented listing of the nonzero entries, one per line.
    pub fn describe_nonzero(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "shape {:?}, {} nonzero of {} entries",
            self.shape,
            self.iter_nonzero().count(),
            self.entries.len()
        );
        for (idx, v) in self.iter_nonzero() {
            let _ = writeln!(out, "  {idx:?} = {v}");
        }
        out
    }
}
