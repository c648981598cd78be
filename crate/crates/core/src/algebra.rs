//! The truncated monomial algebra A(d, n) = (C[x]/(x^d))^(tensor n): basis
//! indexing, multiplication, structure tensors, and nilradical power
//! dimensions.
//!
//! Basis elements are monomials indexed by exponent vectors in {0..d-1}^n,
//! ordered big-endian mixed radix: vector a maps to `sum_i a_i d^(n-i)`.
//! Under that order the structure tensor of A(d, n) is literally the n-th
//! Kronecker power of the structure tensor of A(d, 1).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::combinatorics::partial_sum_ext_binom;
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, ExactMatrix};

/// Caps on how large a tensor the exact layers will materialize.
///
/// `structure_tensor` bounds the side length d^n of an order-3 structure
/// tensor (dense storage is cubic in it); `rank_check` bounds the side
/// length for which exact flattening ranks are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeBudget {
    pub structure_tensor: u64,
    pub rank_check: u64,
}

impl Default for SizeBudget {
    fn default() -> Self {
        SizeBudget {
            structure_tensor: 4096,
            rank_check: 64,
        }
    }
}

impl SizeBudget {
    pub(crate) fn check_structure(&self, dim: u128) -> Result<()> {
        if dim > self.structure_tensor as u128 {
            return Err(Error::BudgetExceeded {
                what: "structure tensor side length",
                required: dim,
                budget: self.structure_tensor as u128,
            });
        }
        Ok(())
    }

    pub(crate) fn check_rank(&self, dim: u128) -> Result<()> {
        if dim > self.rank_check as u128 {
            return Err(Error::BudgetExceeded {
                what: "exact rank check side length",
                required: dim,
                budget: self.rank_check as u128,
            });
        }
        Ok(())
    }
}

/// Result of a basis-element product: either another basis element or zero
/// (some exponent exceeded the cap). Zero is a distinguished sentinel, not
/// index 0; index 0 is the unit monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisProduct {
    Basis(usize),
    Zero,
}

/// The algebra A(d, n) with d >= 2 and n >= 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialAlgebra {
    d: u32,
    n: u32,
    /// d^n when it fits a usize; basis-level operations need it.
    dim_flat: Option<usize>,
}

impl MonomialAlgebra {
    pub fn new(d: u32, n: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("MonomialAlgebra: power cap d must be >= 2"));
        }
        if n == 0 {
            return Err(Error::invalid(
                "MonomialAlgebra: variable count n must be >= 1",
            ));
        }
        let dim_flat = (0..n).try_fold(1usize, |acc, _| acc.checked_mul(d as usize));
        Ok(MonomialAlgebra { d, n, dim_flat })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// d^n as a big integer.
    pub fn dim(&self) -> BigInt {
        BigInt::from(self.d).pow(self.n)
    }

    fn dim_flat(&self) -> Result<usize> {
        self.dim_flat
            .ok_or_else(|| Error::invalid("algebra dimension d^n does not fit a machine index"))
    }

    /// Exponent vector of a basis index (big-endian digits base d).
    pub fn exponents(&self, index: usize) -> Result<Vec<u32>> {
        let dim = self.dim_flat()?;
        if index >= dim {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut rest = index;
        let mut exps = vec![0u32; self.n as usize];
        for pos in (0..self.n as usize).rev() {
            exps[pos] = (rest % self.d as usize) as u32;
            rest /= self.d as usize;
        }
        Ok(exps)
    }

    /// Basis index of an exponent vector.
    pub fn index_of(&self, exponents: &[u32]) -> Result<usize> {
        if exponents.len() != self.n as usize {
            return Err(Error::ShapeMismatch(format!(
                "expected {} exponents, got {}",
                self.n,
                exponents.len()
            )));
        }
        let mut index = 0usize;
        for &e in exponents {
            if e >= self.d {
                return Err(Error::invalid(format!(
                    "exponent {e} out of range for cap {}",
                    self.d - 1
                )));
            }
            index = index * self.d as usize + e as usize;
        }
        Ok(index)
    }

    /// Multiply two basis monomials: exponent vectors add; if any coordinate
    /// reaches d the product is zero in the truncated algebra.
    pub fn multiply_basis(&self, i: usize, j: usize) -> Result<BasisProduct> {
        let a = self.exponents(i)?;
        let b = self.exponents(j)?;
        let mut index = 0usize;
        for (&x, &y) in a.iter().zip(&b) {
            let sum = x + y;
            if sum >= self.d {
                return Ok(BasisProduct::Zero);
            }
            index = index * self.d as usize + sum as usize;
        }
        Ok(BasisProduct::Basis(index))
    }

    /// The order-3 structure tensor T with T[i][j][k] = 1 iff e_i e_j = e_k.
    pub fn structure_tensor(&self, budget: &SizeBudget) -> Result<DenseTensor> {
        budget.check_structure(BigInt::from(self.d).pow(self.n).try_into().unwrap_or(u128::MAX))?;
        let dim = self.dim_flat()?;
        // Precompute exponent vectors once; the pair loop is quadratic.
        let exps: Vec<Vec<u32>> = (0..dim).map(|i| self.exponents(i)).collect::<Result<_>>()?;
        let mut t = DenseTensor::zeros(vec![dim, dim, dim])?;
        let one = BigRational::one();
        for i in 0..dim {
            'pair: for j in 0..dim {
                let mut k = 0usize;
                for (&x, &y) in exps[i].iter().zip(&exps[j]) {
                    let sum = x + y;
                    if sum >= self.d {
                        continue 'pair;
                    }
                    k = k * self.d as usize + sum as usize;
                }
                t.set(&[i, j, k], one.clone())?;
            }
        }
        Ok(t)
    }
}

/// dim N^m for the nilradical N of A(d, n): d^n for m = 0, otherwise
/// d^n minus the number of monomials of degree < m, and 0 once m exceeds
/// the top degree n(d-1).
pub fn nilradical_power_dim(d: u32, n: u32, m: u64) -> Result<BigInt> {
    if d < 2 {
        return Err(Error::invalid("nilradical_power_dim: d must be >= 2"));
    }
    if n == 0 {
        return Err(Error::invalid("nilradical_power_dim: n must be >= 1"));
    }
    let full = BigInt::from(d).pow(n);
    if m == 0 {
        return Ok(full);
    }
    let below = partial_sum_ext_binom(n as u64, m - 1, (d - 1) as u64)?;
    Ok(full - below)
}

/// The full ladder dim N^0 >= dim N^1 >= ... down to the first zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NilpotentProfile {
    pub d: u32,
    pub n: u32,
    /// dims[m] = dim N^m for m = 0 ..= n(d-1)+1; the last entry is 0.
    pub dims: Vec<BigInt>,
}

impl NilpotentProfile {
    pub fn new(d: u32, n: u32) -> Result<Self> {
        let top = n as u64 * (d as u64 - 1) + 1;
        let dims = (0..=top)
            .map(|m| nilradical_power_dim(d, n, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(NilpotentProfile { d, n, dims })
    }
}

/// Outcome of the change-of-basis check relating A(2, n) to W-state powers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WstateEquivalence {
    /// structure_tensor(A(2, n)) with the swap map applied to the third mode.
    pub transformed: DenseTensor,
    /// kron_power(wstate(3), n).
    pub wstate_power: DenseTensor,
    /// Exact entrywise equality of the two.
    pub equal: bool,
}

/// Apply the n-fold Kronecker power of the 2x2 swap to the third mode of the
/// structure tensor of A(2, n) and compare with the n-th Kronecker power of
/// the order-3 W-state.
pub fn wstate_basis_equivalence(n: u32, budget: &SizeBudget) -> Result<WstateEquivalence> {
    if n == 0 {
        return Err(Error::invalid("wstate_basis_equivalence: n must be >= 1"));
    }
    let alg = MonomialAlgebra::new(2, n)?;
    let t = alg.structure_tensor(budget)?;
    let swap = ExactMatrix::from_int_rows(&[vec![0, 1], vec![1, 0]])?;
    let map = swap.kron_power(n as usize)?;
    let transformed = t.apply_mode_map(2, &map)?;
    let wstate_power = DenseTensor::wstate(3)?.kron_power(n as usize)?;
    let equal = transformed == wstate_power;
    Ok(WstateEquivalence {
        transformed,
        wstate_power,
        equal,
    })
}
