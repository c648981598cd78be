//! Rank and border-rank bound formulas for A(d, n) and W-state tensor
//! powers, plus the two summary tables and their text/CSV/structured
//! emitters.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::algebra::{MonomialAlgebra, SizeBudget};
use crate::combinatorics::{binomial, ext_binom};
use crate::error::{Error, Result};
use crate::tensor::parse_rational;

/// Largest exponent (n-1)*B accepted by [`lehmkuhl_lickteig_upper`]; beyond
/// this the result would have hundreds of thousands of digits.
pub const LL_MAX_EXPONENT: u64 = 100_000;

/// Which tensor a [`BoundReport`] describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instance {
    /// Structure tensor of the truncated algebra A(d, n).
    Algebra { d: u32, n: u32 },
    /// n-th Kronecker power of the order-k W-state.
    Wstate { k: u32, n: u32 },
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instance::Algebra { d, n } => write!(f, "algebra(d={d}, n={n})"),
            Instance::Wstate { k, n } => write!(f, "wstate(k={k}, n={n})"),
        }
    }
}

/// Generic nilradical-based lower bound: dim A - dim N^(2m-1) + 2 dim N^m.
pub fn blaser_generic(dim_a: &BigInt, dim_n_2m1: &BigInt, dim_n_m: &BigInt) -> Result<BigInt> {
    if dim_n_2m1.is_negative() || dim_n_2m1 > dim_n_m || dim_n_m > dim_a {
        return Err(Error::invalid(format!(
            "blaser_generic: need 0 <= dim N^(2m-1) <= dim N^m <= dim A, got {dim_n_2m1}, {dim_n_m}, {dim_a}"
        )));
    }
    Ok(dim_a - dim_n_2m1 + 2 * dim_n_m)
}

/// The rank lower bound for A(d, n) together with its maximizing radical
/// power m.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlaserBound {
    pub value: BigInt,
    pub best_m: u64,
}

/// Maximize `2 d^n + sum_{b<=2m-2} ext_binom(n, b, d-1) - 2 sum_{b<=m-1}
/// ext_binom(n, b, d-1)` over m in [1, n(d-1)+1]. Ties go to the smallest m.
pub fn blaser_bound(d: u32, n: u32) -> Result<BlaserBound> {
    if d < 2 {
        return Err(Error::invalid("blaser_bound: d must be >= 2"));
    }
    if n == 0 {
        return Err(Error::invalid("blaser_bound: n must be >= 1"));
    }
    let cap = (d - 1) as u64;
    let top = n as u64 * cap;
    let mut prefix = Vec::with_capacity(top as usize + 1);
    let mut acc = BigInt::zero();
    for b in 0..=top {
        acc += ext_binom(n as u64, b, cap)?;
        prefix.push(acc.clone());
    }
    let p = |x: u64| &prefix[x.min(top) as usize];
    let base = 2 * BigInt::from(d).pow(n);
    let mut best: Option<(BigInt, u64)> = None;
    for m in 1..=(top + 1) {
        let value = &base + p(2 * m - 2) - 2 * p(m - 1);
        match &best {
            Some((v, _)) if *v >= value => {}
            _ => best = Some((value, m)),
        }
    }
    let (value, best_m) = best.expect("scan range is nonempty");
    Ok(BlaserBound { value, best_m })
}

/// The semisimplicity lower bound 2 dim A - t for an algebra with t maximal
/// two-sided ideals. A(d, n) is local, so its callers pass t = 1.
pub fn alder_strassen(dim_a: &BigInt, t: u64) -> Result<BigInt> {
    if t == 0 {
        return Err(Error::invalid("alder_strassen: t must be >= 1"));
    }
    if dim_a < &BigInt::one() {
        return Err(Error::invalid("alder_strassen: dim A must be >= 1"));
    }
    let value: BigInt = 2 * dim_a - BigInt::from(t);
    if value.is_negative() {
        return Err(Error::invalid(format!(
            "alder_strassen: t = {t} exceeds 2 dim A = {}",
            2 * dim_a
        )));
    }
    Ok(value)
}

/// Border rank of A(d, n), which equals d^n. With `certify` set, the
/// conciseness half is verified exactly: all three flattening ranks of the
/// structure tensor must equal d^n (the matching upper bound follows from
/// submultiplicativity of border rank over tensor products and is not
/// recomputed). A certification failure is a hard error.
pub fn border_rank_algebra(
    d: u32,
    n: u32,
    certify: bool,
    budget: &SizeBudget,
) -> Result<BigInt> {
    let alg = MonomialAlgebra::new(d, n)?;
    let dim = alg.dim();
    if certify {
        let dim_u128 = u128::try_from(&dim)
            .map_err(|_| Error::invalid("border_rank_algebra: dimension out of range"))?;
        budget.check_rank(dim_u128)?;
        let report = alg.structure_tensor(budget)?.conciseness()?;
        if !report.concise {
            return Err(Error::CertificationFailed(format!(
                "structure tensor of A({d}, {n}) has flattening ranks {:?}, expected all {dim}",
                report.ranks
            )));
        }
    }
    Ok(dim)
}

/// Rank upper bound (nd + 1) d^n for A(d, n).
pub fn rank_upper(d: u32, n: u32) -> Result<BigInt> {
    if d < 2 {
        return Err(Error::invalid("rank_upper: d must be >= 2"));
    }
    if n == 0 {
        return Err(Error::invalid("rank_upper: n must be >= 1"));
    }
    Ok(BigInt::from(n as u64 * d as u64 + 1) * BigInt::from(d).pow(n))
}

/// Rank upper bound (n(k-1) + 1) 2^n for the n-th power of the order-k
/// W-state.
pub fn wstate_rank_upper(k: u32, n: u32) -> Result<BigInt> {
    if k < 3 {
        return Err(Error::invalid("wstate_rank_upper: k must be >= 3"));
    }
    if n == 0 {
        return Err(Error::invalid("wstate_rank_upper: n must be >= 1"));
    }
    Ok(BigInt::from(n as u64 * (k as u64 - 1) + 1) * (BigInt::one() << n))
}

/// Lift an order-3 lower bound lb3 to order k: lb3 + (k-3)(2^n - 1).
pub fn induction_combiner(lb3: &BigInt, k: u32, n: u32) -> Result<BigInt> {
    if k < 3 {
        return Err(Error::invalid("induction_combiner: k must be >= 3"));
    }
    if n == 0 {
        return Err(Error::invalid("induction_combiner: n must be >= 1"));
    }
    Ok(lb3 + BigInt::from(k - 3) * ((BigInt::one() << n) - 1))
}

/// Rank lower bound for the n-th Kronecker power of the order-k W-state:
/// `(k-1) 2^n + max_m [sum_{b<=2m-2} C(n,b) - 2 sum_{b<=m-1} C(n,b)] - (k-3)`.
///
/// Evaluated both directly from plain binomial prefix sums and through
/// [`induction_combiner`] applied to [`blaser_bound`]`(2, n)`; the two routes
/// must agree (a mismatch would be an implementation bug, so it panics).
pub fn wstate_bound(k: u32, n: u32) -> Result<BigInt> {
    if k < 3 {
        return Err(Error::invalid("wstate_bound: k must be >= 3"));
    }
    if n == 0 {
        return Err(Error::invalid("wstate_bound: n must be >= 1"));
    }
    // Direct route: binomial prefix sums, capped at the full row sum 2^n.
    let mut prefix = Vec::with_capacity(n as usize + 1);
    let mut acc = BigInt::zero();
    for b in 0..=n {
        acc += binomial(n as i128, b as i128);
        prefix.push(acc.clone());
    }
    let p = |x: u64| &prefix[x.min(n as u64) as usize];
    let mut inner: Option<BigInt> = None;
    for m in 1..=(n as u64 + 1) {
        let value = p(2 * m - 2) - 2 * p(m - 1);
        match &inner {
            Some(v) if *v >= value => {}
            _ => inner = Some(value),
        }
    }
    let direct = BigInt::from(k - 1) * (BigInt::one() << n) + inner.expect("nonempty scan")
        - BigInt::from(k - 3);
    let combined = induction_combiner(&blaser_bound(2, n)?.value, k, n)?;
    assert_eq!(
        direct, combined,
        "wstate_bound cross-check failed for k={k}, n={n}"
    );
    Ok(direct)
}

/// Exactly known ranks that beat the bound formulas; currently only the
/// cube of the order-3 W-state.
pub fn known_exact_rank(k: u32, n: u32) -> Option<BigInt> {
    (k == 3 && n == 3).then(|| BigInt::from(16))
}

/// Rank-to-border-rank ratio upper bound 2 * 9^((n-1) B) + 1 for concise
/// tensors in (C^n)^(x3) of border rank B. Refuses exponents above
/// [`LL_MAX_EXPONENT`].
pub fn lehmkuhl_lickteig_upper(n: u32, b: &BigInt) -> Result<BigInt> {
    if n == 0 {
        return Err(Error::invalid("lehmkuhl_lickteig_upper: n must be >= 1"));
    }
    if b < &BigInt::one() {
        return Err(Error::invalid("lehmkuhl_lickteig_upper: B must be >= 1"));
    }
    let exponent = BigInt::from(n - 1) * b;
    let exp_u64 = u64::try_from(&exponent).unwrap_or(u64::MAX);
    if exp_u64 > LL_MAX_EXPONENT {
        return Err(Error::BudgetExceeded {
            what: "ratio-bound exponent (n-1)*B",
            required: exp_u64 as u128,
            budget: LL_MAX_EXPONENT as u128,
        });
    }
    Ok(2 * BigInt::from(9).pow(exp_u64 as u32) + 1)
}

/// All bounds for one instance in one place.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub instance: Instance,
    /// d^n for algebras; the per-leg dimension 2^n for W-state powers.
    pub dim: BigInt,
    /// The nilradical-based lower bound (for W-state instances, the W-state
    /// bound built on top of it).
    pub blaser_lb: BigInt,
    /// Radical power maximizing the underlying bound.
    pub blaser_m: u64,
    /// 2 dim - 1 where the instance is (equivalent to) an algebra tensor;
    /// None for W-state powers of order above 3.
    pub alder_strassen_lb: Option<BigInt>,
    pub border_rank: BigInt,
    pub rank_ub: BigInt,
    /// Largest of the lower bounds above.
    pub best_lb: BigInt,
    /// best_lb / border_rank, exact.
    pub ratio_lb: BigRational,
    /// An exactly known rank that supersedes the formulas, when one exists.
    /// Annotation only; it does not feed best_lb or the tables.
    pub known_exact: Option<BigInt>,
}

#[allow(clippy::too_many_arguments)]
fn finish_report(
    instance: Instance,
    dim: BigInt,
    blaser_lb: BigInt,
    blaser_m: u64,
    alder_strassen_lb: Option<BigInt>,
    border_rank: BigInt,
    rank_ub: BigInt,
    known_exact: Option<BigInt>,
) -> BoundReport {
    let mut best_lb = blaser_lb.clone().max(border_rank.clone());
    if let Some(as_lb) = &alder_strassen_lb {
        best_lb = best_lb.max(as_lb.clone());
    }
    let ratio_lb = BigRational::new(best_lb.clone(), border_rank.clone());
    BoundReport {
        instance,
        dim,
        blaser_lb,
        blaser_m,
        alder_strassen_lb,
        border_rank,
        rank_ub,
        best_lb,
        ratio_lb,
        known_exact,
    }
}

/// Full bound report for A(d, n). With `certify_border` the border-rank
/// value is backed by exact flattening-rank certificates.
pub fn algebra_report(
    d: u32,
    n: u32,
    certify_border: bool,
    budget: &SizeBudget,
) -> Result<BoundReport> {
    let bb = blaser_bound(d, n)?;
    let dim = BigInt::from(d).pow(n);
    let as_lb = alder_strassen(&dim, 1)?;
    let border = border_rank_algebra(d, n, certify_border, budget)?;
    let rank_ub = rank_upper(d, n)?;
    Ok(finish_report(
        Instance::Algebra { d, n },
        dim,
        bb.value,
        bb.best_m,
        Some(as_lb),
        border,
        rank_ub,
        None,
    ))
}

/// Full bound report for the n-th power of the order-k W-state. For k = 3
/// the tensor is an algebra tensor in disguise, so the semisimplicity bound
/// applies; for larger k it does not.
pub fn wstate_report(k: u32, n: u32) -> Result<BoundReport> {
    let value = wstate_bound(k, n)?;
    let m = blaser_bound(2, n)?.best_m;
    let dim = BigInt::one() << n;
    let as_lb = if k == 3 {
        Some(alder_strassen(&dim, 1)?)
    } else {
        None
    };
    let rank_ub = wstate_rank_upper(k, n)?;
    Ok(finish_report(
        Instance::Wstate { k, n },
        dim.clone(),
        value,
        m,
        as_lb,
        dim,
        rank_ub,
        known_exact_rank(k, n),
    ))
}

/// The exact ratio wstate_bound(k, n) / 2^n together with the full report.
pub fn ratio_report(k: u32, n: u32) -> Result<(BigRational, BoundReport)> {
    let report = wstate_report(k, n)?;
    let ratio = BigRational::new(report.blaser_lb.clone(), report.border_rank.clone());
    Ok((ratio, report))
}

impl BoundReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("instance: {}\n", self.instance));
        s.push_str(&format!("dim: {}\n", self.dim));
        s.push_str(&format!("border rank: {}\n", self.border_rank));
        let label = match self.instance {
            Instance::Algebra { .. } => "blaser lower bound",
            Instance::Wstate { .. } => "wstate lower bound",
        };
        s.push_str(&format!(
            "{label}: {} (maximizing m = {})\n",
            self.blaser_lb, self.blaser_m
        ));
        match &self.alder_strassen_lb {
            Some(v) => s.push_str(&format!("alder-strassen lower bound: {v}\n")),
            None => s.push_str("alder-strassen lower bound: n/a\n"),
        }
        s.push_str(&format!("best lower bound: {}\n", self.best_lb));
        s.push_str(&format!("rank upper bound: {}\n", self.rank_ub));
        s.push_str(&format!(
            "ratio (best lower bound / border rank): {}\n",
            self.ratio_lb
        ));
        if let Some(v) = &self.known_exact {
            s.push_str(&format!("known exact rank: {v}\n"));
        }
        s
    }

    pub fn to_structured(&self) -> String {
        let mut s = String::new();
        match self.instance {
            Instance::Algebra { d, n } => s.push_str(&format!("report algebra d {d} n {n}\n")),
            Instance::Wstate { k, n } => s.push_str(&format!("report wstate k {k} n {n}\n")),
        }
        s.push_str(&format!("dim {}\n", self.dim));
        s.push_str(&format!("blaser_lb {}\n", self.blaser_lb));
        s.push_str(&format!("blaser_m {}\n", self.blaser_m));
        if let Some(v) = &self.alder_strassen_lb {
            s.push_str(&format!("alder_strassen_lb {v}\n"));
        }
        s.push_str(&format!("border_rank {}\n", self.border_rank));
        s.push_str(&format!("rank_ub {}\n", self.rank_ub));
        s.push_str(&format!("best_lb {}\n", self.best_lb));
        s.push_str(&format!("ratio_lb {}\n", self.ratio_lb));
        if let Some(v) = &self.known_exact {
            s.push_str(&format!("known_exact {v}\n"));
        }
        s
    }

    /// Parse the structured form back; inverse of [`Self::to_structured`].
    pub fn from_structured(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let head: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Parse("empty report".into()))?
            .split_whitespace()
            .collect();
        let instance = match head.as_slice() {
            ["report", "algebra", "d", d, "n", n] => Instance::Algebra {
                d: parse_u32(d)?,
                n: parse_u32(n)?,
            },
            ["report", "wstate", "k", k, "n", n] => Instance::Wstate {
                k: parse_u32(k)?,
                n: parse_u32(n)?,
            },
            _ => return Err(Error::Parse("bad report header".into())),
        };
        let mut fields = std::collections::BTreeMap::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("bad report line {line:?}")))?;
            fields.insert(key.to_string(), value.trim().to_string());
        }
        let get = |key: &str| -> Result<String> {
            fields
                .get(key)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("missing report field {key}")))
        };
        let big = |key: &str| -> Result<BigInt> { parse_bigint(&get(key)?) };
        Ok(BoundReport {
            instance,
            dim: big("dim")?,
            blaser_lb: big("blaser_lb")?,
            blaser_m: get("blaser_m")?
                .parse()
                .map_err(|_| Error::Parse("bad blaser_m".into()))?,
            alder_strassen_lb: fields
                .get("alder_strassen_lb")
                .map(|v| parse_bigint(v))
                .transpose()?,
            border_rank: big("border_rank")?,
            rank_ub: big("rank_ub")?,
            best_lb: big("best_lb")?,
            ratio_lb: parse_rational(&get("ratio_lb")?)?,
            known_exact: fields
                .get("known_exact")
                .map(|v| parse_bigint(v))
                .transpose()?,
        })
    }
}

fn parse_u32(s: &str) -> Result<u32> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad integer {s:?}")))
}

fn parse_bigint(s: &str) -> Result<BigInt> {
    BigInt::from_str(s).map_err(|_| Error::Parse(format!("bad integer {s:?}")))
}

/// A labelled grid of bound values, with sharpness flags on the entries
/// known (from the literature) to be exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundTable {
    /// 1 or 2.
    pub index: u8,
    /// Symbol labelling the rows ("n" or "k").
    pub row_symbol: &'static str,
    /// Symbol labelling the columns ("d" or "n").
    pub col_symbol: &'static str,
    pub row_labels: Vec<u32>,
    pub col_labels: Vec<u32>,
    /// cells[r][c] is the bound at (row_labels[r], col_labels[c]).
    pub cells: Vec<Vec<BigInt>>,
    /// sharp[r][c] marks entries whose exact rank is known to match.
    pub sharp: Vec<Vec<bool>>,
}

/// Lower bounds for rank(A(d, n)), rows n = 1..6, columns d = 2..6.
/// Sharp entries: the whole n = 1 row and (d = 2, n = 2).
pub fn table1() -> Result<BoundTable> {
    let row_labels: Vec<u32> = (1..=6).collect();
    let col_labels: Vec<u32> = (2..=6).collect();
    let mut cells = Vec::new();
    let mut sharp = Vec::new();
    for &n in &row_labels {
        let mut row = Vec::new();
        let mut row_sharp = Vec::new();
        for &d in &col_labels {
            row.push(blaser_bound(d, n)?.value);
            row_sharp.push(n == 1 || (n == 2 && d == 2));
        }
        cells.push(row);
        sharp.push(row_sharp);
    }
    Ok(BoundTable {
        index: 1,
        row_symbol: "n",
        col_symbol: "d",
        row_labels,
        col_labels,
        cells,
        sharp,
    })
}

/// Lower bounds for rank of W-state powers, rows k = 3..10, columns
/// n = 1..10. Sharp entries: the n <= 2 columns.
pub fn table2() -> Result<BoundTable> {
    let row_labels: Vec<u32> = (3..=10).collect();
    let col_labels: Vec<u32> = (1..=10).collect();
    let mut cells = Vec::new();
    let mut sharp = Vec::new();
    for &k in &row_labels {
        let mut row = Vec::new();
        let mut row_sharp = Vec::new();
        for &n in &col_labels {
            row.push(wstate_bound(k, n)?);
            row_sharp.push(n <= 2);
        }
        cells.push(row);
        sharp.push(row_sharp);
    }
    Ok(BoundTable {
        index: 2,
        row_symbol: "k",
        col_symbol: "n",
        row_labels,
        col_labels,
        cells,
        sharp,
    })
}

impl BoundTable {
    fn corner(&self) -> String {
        format!("{}\\{}", self.row_symbol, self.col_symbol)
    }

    /// Plain CSV: header row with the corner label and column labels, then
    /// one row per row label. Values only; sharpness is not encoded.
    pub fn to_csv(&self) -> String {
        let mut s = self.corner();
        for label in &self.col_labels {
            s.push(',');
            s.push_str(&label.to_string());
        }
        s.push('\n');
        for (r, row) in self.cells.iter().enumerate() {
            s.push_str(&self.row_labels[r].to_string());
            for cell in row {
                s.push(',');
                s.push_str(&cell.to_string());
            }
            s.push('\n');
        }
        s
    }

    /// Aligned human-readable table; sharp entries carry a trailing `*`.
    pub fn to_text(&self) -> String {
        let cell_str = |r: usize, c: usize| {
            let mut s = self.cells[r][c].to_string();
            if self.sharp[r][c] {
                s.push('*');
            }
            s
        };
        let mut widths: Vec<usize> = self
            .col_labels
            .iter()
            .map(|l| l.to_string().len())
            .collect();
        for r in 0..self.cells.len() {
            for (c, width) in widths.iter_mut().enumerate() {
                *width = (*width).max(cell_str(r, c).len());
            }
        }
        let label_width = self
            .row_labels
            .iter()
            .map(|l| l.to_string().len())
            .chain([self.corner().len()])
            .max()
            .unwrap_or(1);
        let mut s = format!("{:<label_width$}", self.corner());
        for (c, label) in self.col_labels.iter().enumerate() {
            s.push_str(&format!("  {:>width$}", label, width = widths[c]));
        }
        s.push('\n');
        for r in 0..self.cells.len() {
            s.push_str(&format!("{:<label_width$}", self.row_labels[r]));
            for (c, &width) in widths.iter().enumerate() {
                s.push_str(&format!("  {:>width$}", cell_str(r, c)));
            }
            s.push('\n');
        }
        s.push_str("(* = known sharp)\n");
        s
    }

    /// Line-oriented structured form; inverse of [`Self::from_structured`].
    pub fn to_structured(&self) -> String {
        let mut s = format!("table {}\n", self.index);
        s.push_str(&format!("rows {}", self.row_symbol));
        for l in &self.row_labels {
            s.push_str(&format!(" {l}"));
        }
        s.push('\n');
        s.push_str(&format!("cols {}", self.col_symbol));
        for l in &self.col_labels {
            s.push_str(&format!(" {l}"));
        }
        s.push('\n');
        for (r, row) in self.cells.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                s.push_str(&format!(
                    "cell {} {} {}{}\n",
                    self.row_labels[r],
                    self.col_labels[c],
                    cell,
                    if self.sharp[r][c] { " sharp" } else { "" }
                ));
            }
        }
        s
    }

    pub fn from_structured(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |what: &str| Error::Parse(format!("table: {what}"));
        let head = lines.next().ok_or_else(|| bad("empty"))?;
        let index: u8 = head
            .strip_prefix("table ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad("bad header"))?;
        let parse_axis = |line: &str, prefix: &str| -> Result<(&'static str, Vec<u32>)> {
            let rest = line
                .strip_prefix(prefix)
                .ok_or_else(|| bad("bad axis line"))?;
            let mut toks = rest.split_whitespace();
            let symbol = match toks.next() {
                Some("n") => "n",
                Some("d") => "d",
                Some("k") => "k",
                _ => return Err(bad("unknown axis symbol")),
            };
            let labels = toks.map(parse_u32).collect::<Result<Vec<u32>>>()?;
            Ok((symbol, labels))
        };
        let (row_symbol, row_labels) = parse_axis(lines.next().ok_or_else(|| bad("truncated"))?, "rows ")?;
        let (col_symbol, col_labels) = parse_axis(lines.next().ok_or_else(|| bad("truncated"))?, "cols ")?;
        let mut cells = vec![vec![BigInt::zero(); col_labels.len()]; row_labels.len()];
        let mut sharp = vec![vec![false; col_labels.len()]; row_labels.len()];
        let mut filled = vec![vec![false; col_labels.len()]; row_labels.len()];
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let (row_l, col_l, value, is_sharp) = match toks.as_slice() {
                ["cell", r, c, v] => (parse_u32(r)?, parse_u32(c)?, parse_bigint(v)?, false),
                ["cell", r, c, v, "sharp"] => (parse_u32(r)?, parse_u32(c)?, parse_bigint(v)?, true),
                _ => return Err(bad("bad cell line")),
            };
            let r = row_labels
                .iter()
                .position(|&l| l == row_l)
                .ok_or_else(|| bad("unknown row label"))?;
            let c = col_labels
                .iter()
                .position(|&l| l == col_l)
                .ok_or_else(|| bad("unknown column label"))?;
            cells[r][c] = value;
            sharp[r][c] = is_sharp;
            filled[r][c] = true;
        }
        if filled.iter().flatten().any(|&f| !f) {
            return Err(bad("missing cells"));
        }
        Ok(BoundTable {
            index,
            row_symbol,
            col_symbol,
            row_labels,
            col_labels,
            cells,
            sharp,
        })
    }
}
