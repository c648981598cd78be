//! Sparse multivariate polynomials over exact rationals, plus the fixed
//! arity-9 machinery for the order-3 cube argument: the generic 3x3
//! determinant, the six bilinear relation polynomials, their re-derivation
//! from the truncated algebra, and the syzygy certificate.
//!
//! The nine variables are the entries of a generic 3x3 matrix in row-major
//! order: A11, A12, A13, A21, ..., A33.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Sparse polynomial in a fixed number of variables; the map from
/// multidegree to coefficient never stores zeros, so equality of the maps
/// is equality of polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    arity: usize,
    terms: BTreeMap<Vec<u16>, BigRational>,
}

impl Polynomial {
    pub fn zero(arity: usize) -> Self {
        Polynomial {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(arity: usize, c: BigRational) -> Self {
        let mut p = Self::zero(arity);
        if !c.is_zero() {
            p.terms.insert(vec![0; arity], c);
        }
        p
    }

    /// The variable with index `i`, as a degree-1 monomial.
    pub fn var(arity: usize, i: usize) -> Result<Self> {
        if i >= arity {
            return Err(Error::invalid(format!(
                "variable index {i} out of range for arity {arity}"
            )));
        }
        let mut exps = vec![0u16; arity];
        exps[i] = 1;
        let mut p = Self::zero(arity);
        p.terms.insert(exps, BigRational::one());
        Ok(p)
    }

    pub fn monomial(arity: usize, exps: Vec<u16>, coeff: BigRational) -> Result<Self> {
        if exps.len() != arity {
            return Err(Error::invalid("monomial: exponent vector length != arity"));
        }
        let mut p = Self::zero(arity);
        if !coeff.is_zero() {
            p.terms.insert(exps, coeff);
        }
        Ok(p)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &BigRational)> {
        self.terms.iter()
    }

    fn check_arity(&self, other: &Self) -> Result<()> {
        if self.arity != other.arity {
            return Err(Error::invalid(format!(
                "arity mismatch: {} vs {}",
                self.arity, other.arity
            )));
        }
        Ok(())
    }

    fn insert_term(terms: &mut BTreeMap<Vec<u16>, BigRational>, exps: Vec<u16>, c: BigRational) {
        use std::collections::btree_map::Entry;
        match terms.entry(exps) {
            Entry::Vacant(e) => {
                if !c.is_zero() {
                    e.insert(c);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        let mut terms = self.terms.clone();
        for (exps, c) in &other.terms {
            Self::insert_term(&mut terms, exps.clone(), c.clone());
        }
        Ok(Polynomial {
            arity: self.arity,
            terms,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        let mut terms = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u16> = ea.iter().zip(eb).map(|(&a, &b)| a + b).collect();
                Self::insert_term(&mut terms, exps, ca * cb);
            }
        }
        Ok(Polynomial {
            arity: self.arity,
            terms,
        })
    }

    pub fn neg(&self) -> Self {
        Polynomial {
            arity: self.arity,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.arity);
        }
        Polynomial {
            arity: self.arity,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn eval(&self, point: &[BigRational]) -> Result<BigRational> {
        if point.len() != self.arity {
            return Err(Error::invalid(format!(
                "eval: point length {} != arity {}",
                point.len(),
                self.arity
            )));
        }
        let mut acc = BigRational::zero();
        for (exps, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(exps) {
                for _ in 0..e {
                    term *= x;
                }
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Render with the given variable names, terms in the canonical map
    /// order. The zero polynomial prints as "0".
    pub fn to_string_with(&self, names: &[&str]) -> Result<String> {
        if names.len() != self.arity {
            return Err(Error::invalid("to_string_with: wrong number of names"));
        }
        if self.terms.is_empty() {
            return Ok("0".into());
        }
        let mut out = String::new();
        for (i, (exps, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    out.push('-');
                }
            } else if c.is_negative() {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || exps.iter().all(|&e| e == 0) {
                factors.push(mag.to_string());
            }
            for (name, &e) in names.iter().zip(exps) {
                match e {
                    0 => {}
                    1 => factors.push((*name).into()),
                    _ => factors.push(format!("{name}^{e}")),
                }
            }
            out.push_str(&factors.join("*"));
        }
        Ok(out)
    }
}

/// Variable names for the arity-9 generic-matrix polynomials.
pub const GENERIC3_VARS: [&str; 9] = [
    "A11", "A12", "A13", "A21", "A22", "A23", "A31", "A32", "A33",
];

/// The matrix-entry variable A_ij (1-based indices).
fn entry(i: usize, j: usize) -> Polynomial {
    debug_assert!((1..=3).contains(&i) && (1..=3).contains(&j));
    Polynomial::var(9, (i - 1) * 3 + (j - 1)).expect("index in range")
}

fn rational(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// The 6-term signed expansion of the generic 3x3 determinant.
pub fn det3_generic() -> Polynomial {
    // (permutation of columns, sign)
    let perms: [([usize; 3], i64); 6] = [
        ([1, 2, 3], 1),
        ([2, 3, 1], 1),
        ([3, 1, 2], 1),
        ([1, 3, 2], -1),
        ([3, 2, 1], -1),
        ([2, 1, 3], -1),
    ];
    let mut det = Polynomial::zero(9);
    for (cols, sign) in perms {
        let mut term = Polynomial::constant(9, rational(sign));
        for (row, &col) in cols.iter().enumerate() {
            term = term.mul(&entry(row + 1, col)).expect("arity 9");
        }
        det = det.add(&term).expect("arity 9");
    }
    det
}

/// The six bilinear relation polynomials of the cube argument, in the order
/// f1, f2, f3, g1, g2, g3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSet {
    pub f: [Polynomial; 3],
    pub g: [Polynomial; 3],
}

impl RelationSet {
    /// The relations paired with their conventional labels.
    pub fn labelled(&self) -> impl Iterator<Item = (&'static str, &Polynomial)> {
        ["f1", "f2", "f3"]
            .into_iter()
            .zip(&self.f)
            .chain(["g1", "g2", "g3"].into_iter().zip(&self.g))
    }
}

/// The stated relation polynomials:
/// f1 = A11 A22 + A12 A21, f2 = A11 A23 + A13 A21, f3 = A12 A23 + A13 A22,
/// g1 = A11 A32 + A12 A31, g2 = A11 A33 + A13 A31, g3 = A12 A33 + A13 A32.
pub fn relation_polys() -> RelationSet {
    let pair = |i: usize, a: usize, b: usize| {
        entry(1, a)
            .mul(&entry(i, b))
            .and_then(|p| p.add(&entry(1, b).mul(&entry(i, a))?))
            .expect("arity 9")
    };
    RelationSet {
        f: [pair(2, 1, 2), pair(2, 1, 3), pair(2, 2, 3)],
        g: [pair(3, 1, 2), pair(3, 1, 3), pair(3, 2, 3)],
    }
}

/// Relations recomputed from scratch, with the flag recording whether they
/// coincide with [`relation_polys`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedRelations {
    pub relations: RelationSet,
    pub matches_stated: bool,
}

/// Expand x_a x_b symbolically in C[x,y,z]/(x^2, y^2, z^2), where
/// x_i = A_i1 x + A_i2 y + A_i3 z modulo the radical squared, and collect
/// the coefficients of xy, xz, yz.
///
/// The correction terms p_i of radical-degree 2 only contribute products of
/// degree >= 3, which vanish against the degree-2 truncation used here, so
/// modelling x_i as purely linear is exact for these coefficients.
fn bilinear_coefficients(row_a: usize, row_b: usize) -> [Polynomial; 3] {
    // Basis monomial masks: bit 0 = x, bit 1 = y, bit 2 = z.
    let mut buckets: BTreeMap<u8, Polynomial> = BTreeMap::new();
    for s in 0..3usize {
        for t in 0..3usize {
            if s == t {
                // x_s^2 = 0 in the truncated algebra.
                continue;
            }
            let mask = (1u8 << s) | (1u8 << t);
            let contribution = entry(row_a, s + 1).mul(&entry(row_b, t + 1)).expect("arity 9");
            let slot = buckets.entry(mask).or_insert_with(|| Polynomial::zero(9));
            *slot = slot.add(&contribution).expect("arity 9");
        }
    }
    let take = |mask: u8| buckets.get(&mask).cloned().unwrap_or_else(|| Polynomial::zero(9));
    [take(0b011), take(0b101), take(0b110)] // xy, xz, yz
}

/// Re-derive the relation polynomials from the products x1 x2 and x1 x3 and
/// compare with the stated ones.
pub fn derive_relations() -> DerivedRelations {
    let f = bilinear_coefficients(1, 2);
    let g = bilinear_coefficients(1, 3);
    let relations = RelationSet { f, g };
    let matches_stated = relations == relation_polys();
    DerivedRelations {
        relations,
        matches_stated,
    }
}

/// The verified combination writing -A11 det(A) in terms of the relations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyzygyCertificate {
    /// Multiplier for each relation, labelled f1..f3, g1..g3.
    pub multipliers: Vec<(&'static str, Polynomial)>,
    /// The target -A11 * det(A).
    pub target: Polynomial,
    /// Combination minus target; the certificate is valid iff this is the
    /// zero polynomial.
    pub residual: Polynomial,
}

impl SyzygyCertificate {
    pub fn is_valid(&self) -> bool {
        self.residual.is_zero()
    }

    /// Human-readable report: the multipliers, the target, and either
    /// "RESIDUAL = 0" or the offending terms.
    pub fn to_text(&self) -> String {
        let names = &GENERIC3_VARS[..];
        let mut s = String::from("syzygy certificate for -A11*det(A)\n");
        for (label, m) in &self.multipliers {
            s.push_str(&format!(
                "  multiplier of {label}: {}\n",
                m.to_string_with(names).expect("arity 9")
            ));
        }
        s.push_str(&format!(
            "  target: {}\n",
            self.target.to_string_with(names).expect("arity 9")
        ));
        if self.is_valid() {
            s.push_str("RESIDUAL = 0\n");
        } else {
            s.push_str(&format!(
                "RESIDUAL = {}\n",
                self.residual.to_string_with(names).expect("arity 9")
            ));
        }
        s
    }
}

/// Combine the relations with the stated multipliers
/// (A13 A31 - A11 A33, -3 A12 A31 - A11 A32, 0, 2 A11 A23, 2 A12 A21, 0)
/// and subtract -A11 det(A); a zero residual certifies the identity.
pub fn verify_syzygy() -> SyzygyCertificate {
    let m_f1 = entry(1, 3)
        .mul(&entry(3, 1))
        .and_then(|p| p.sub(&entry(1, 1).mul(&entry(3, 3))?))
        .expect("arity 9");
    let m_f2 = entry(1, 2)
        .mul(&entry(3, 1))
        .map(|p| p.scale(&rational(-3)))
        .and_then(|p| p.sub(&entry(1, 1).mul(&entry(3, 2))?))
        .expect("arity 9");
    let m_f3 = Polynomial::zero(9);
    let m_g1 = entry(1, 1)
        .mul(&entry(2, 3))
        .map(|p| p.scale(&rational(2)))
        .expect("arity 9");
    let m_g2 = entry(1, 2)
        .mul(&entry(2, 1))
        .map(|p| p.scale(&rational(2)))
        .expect("arity 9");
    let m_g3 = Polynomial::zero(9);
    build_certificate([m_f1, m_f2, m_f3, m_g1, m_g2, m_g3])
}

/// Assemble the certificate for an arbitrary choice of multipliers (in the
/// order f1, f2, f3, g1, g2, g3); used by tests to show perturbed
/// multipliers fail.
pub fn build_certificate(multipliers: [Polynomial; 6]) -> SyzygyCertificate {
    let relations = relation_polys();
    let labels = ["f1", "f2", "f3", "g1", "g2", "g3"];
    let rels: Vec<&Polynomial> = relations.f.iter().chain(relations.g.iter()).collect();
    let mut combination = Polynomial::zero(9);
    for (m, r) in multipliers.iter().zip(&rels) {
        combination = combination.add(&m.mul(r).expect("arity 9")).expect("arity 9");
    }
    let target = entry(1, 1).mul(&det3_generic()).expect("arity 9").neg();
    let residual = combination.sub(&target).expect("arity 9");
    SyzygyCertificate {
        multipliers: labels.into_iter().zip(multipliers).collect(),
        target,
        residual,
    }
}
