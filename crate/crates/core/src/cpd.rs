//! Numerical CP-decomposition search over the complex field: alternating
//! least squares with seeded restarts, a divergence probe that watches
//! factor norms grow when the target rank sits below the true rank, and the
//! epsilon-degeneration witness for the border rank of W-states.
//!
//! Everything here is floating point and produces numerical evidence only;
//! exact bounds live in the other modules.

use std::fmt::Write as _;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Relative pivot threshold for the rank-revealing QR inside the
/// least-squares solves.
const QR_REL_TOL: f64 = 1e-12;

/// Disclaimer attached to every certification report.
pub const NUMERICAL_EVIDENCE_NOTE: &str =
    "numerical evidence only, not an exact rank certificate";

/// Dense complex tensor, row-major entries (last index fastest), converted
/// from an exact tensor.
#[derive(Clone, Debug)]
pub struct FloatTensor {
    shape: Vec<usize>,
    entries: Vec<Complex64>,
}

impl FloatTensor {
    pub fn from_exact(t: &DenseTensor) -> Result<Self> {
        let entries = t
            .entries()
            .iter()
            .map(|v| {
                v.to_f64()
                    .map(|x| Complex64::new(x, 0.0))
                    .ok_or_else(|| Error::Numerical("entry does not fit f64".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FloatTensor {
            shape: t.shape().to_vec(),
            entries,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Dense complex matrix, column-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r + c * self.rows]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r + c * self.rows] = v;
    }

    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    fn col_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    fn col_norm(&self, c: usize) -> f64 {
        self.col(c).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn scale_col(&mut self, c: usize, s: f64) {
        for v in self.col_mut(c) {
            *v *= s;
        }
    }

    pub fn max_col_norm(&self) -> f64 {
        (0..self.cols)
            .map(|c| self.col_norm(c))
            .fold(0.0, f64::max)
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// One CP decomposition: factor matrices (dim_i x rank), the relative
/// residual it achieves, and the provenance needed to reproduce it.
#[derive(Clone, Debug)]
pub struct CpDecomposition {
    pub shape: Vec<usize>,
    pub rank: usize,
    pub factors: Vec<ComplexMatrix>,
    /// ||T - reconstruction||_F / ||T||_F.
    pub residual: f64,
    pub max_col_norm: f64,
    /// Sweeps executed by the run that produced this decomposition.
    pub iterations: usize,
    /// Seed of the restart that produced this decomposition.
    pub seed: u64,
}

/// Settings for [`als_decompose`].
#[derive(Clone, Debug)]
pub struct AlsConfig {
    /// Sweep limit per restart.
    pub max_iters: usize,
    /// Stop a restart once the residual improves by less than this over 10
    /// sweeps; 0 disables the plateau stop.
    pub tol: f64,
    /// Number of independent random initializations.
    pub restarts: usize,
    /// Restart i draws its initialization from seed + i.
    pub seed: u64,
    /// Spread component scales evenly over the factors after each sweep.
    pub rebalance: bool,
    /// Stop everything (current restart and remaining restarts) once the
    /// best residual drops below this.
    pub target_residual: Option<f64>,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            max_iters: 2000,
            tol: 1e-12,
            restarts: 20,
            seed: 0,
            rebalance: true,
            target_residual: None,
        }
    }
}

/// Result of a multi-restart ALS search.
#[derive(Clone, Debug)]
pub struct AlsOutcome {
    pub best: CpDecomposition,
    pub restarts_run: usize,
    /// Restarts abandoned because a non-finite value appeared.
    pub aborted_restarts: usize,
}

struct RunOptions {
    max_iters: usize,
    tol: f64,
    rebalance: bool,
    target_residual: Option<f64>,
    /// Stop when residual < .0 and max column norm > .1.
    stop_when: Option<(f64, f64)>,
    /// Record (sweep, residual, max column norm) every `trace_stride`
    /// sweeps; 0 disables tracing.
    trace_stride: usize,
}

struct RunResult {
    factors: Vec<ComplexMatrix>,
    residual: f64,
    iterations: usize,
    aborted: bool,
    max_col_norm: f64,
    trace_sweeps: Vec<usize>,
    trace_residuals: Vec<f64>,
    trace_norms: Vec<f64>,
}

/// Shared buffers for repeated ALS runs on one target tensor.
struct Engine<'a> {
    t: &'a FloatTensor,
    shape: Vec<usize>,
    order: usize,
    rank: usize,
    total: usize,
    tnorm: f64,
    /// Per mode: the unfolding as a column-major (total/dim) x dim matrix;
    /// row = remaining modes fused ascending (last fastest), column = index
    /// along the mode.
    unfoldings: Vec<Vec<Complex64>>,
    // Scratch reused across sweeps; no per-sweep allocation.
    kr: Vec<Complex64>,
    rhs: Vec<Complex64>,
    sol: Vec<Complex64>,
    reflector: Vec<Complex64>,
    perm: Vec<usize>,
    recon: Vec<Complex64>,
    odometer: Vec<usize>,
}

impl<'a> Engine<'a> {
    fn new(t: &'a FloatTensor, rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::invalid("cp rank must be >= 1"));
        }
        let shape = t.shape().to_vec();
        let order = shape.len();
        if order < 2 {
            return Err(Error::invalid("cp decomposition needs order >= 2"));
        }
        let total = t.entries().len();
        let tnorm = t.frobenius_norm();
        if tnorm == 0.0 {
            return Err(Error::invalid("cannot decompose the zero tensor"));
        }
        let mut unfoldings = Vec::with_capacity(order);
        for mode in 0..order {
            let dim = shape[mode];
            let rest = total / dim;
            let mut unf = vec![Complex64::ZERO; total];
            let mut idx = vec![0usize; order];
            for flat in 0..total {
                let mut row = 0usize;
                for (i, &x) in idx.iter().enumerate() {
                    if i != mode {
                        row = row * shape[i] + x;
                    }
                }
                unf[row + idx[mode] * rest] = t.entries()[flat];
                advance(&mut idx, &shape);
            }
            unfoldings.push(unf);
        }
        let max_dim = *shape.iter().max().expect("order >= 1");
        let max_rest = total / shape.iter().min().expect("order >= 1");
        Ok(Engine {
            t,
            order,
            rank,
            total,
            tnorm,
            unfoldings,
            kr: vec![Complex64::ZERO; max_rest * rank],
            rhs: vec![Complex64::ZERO; max_rest * max_dim],
            sol: vec![Complex64::ZERO; rank * max_dim],
            reflector: vec![Complex64::ZERO; max_rest],
            perm: vec![0; rank],
            recon: vec![Complex64::ZERO; total],
            odometer: vec![0; order],
            shape,
        })
    }

    /// Fill `self.kr` with the Khatri-Rao product of all factors except
    /// `mode` (ascending mode order, last fastest), column by column.
    fn build_khatri_rao(&mut self, factors: &[ComplexMatrix], mode: usize) -> usize {
        let rest = self.total / self.shape[mode];
        for j in 0..self.rank {
            let col = &mut self.kr[j * rest..(j + 1) * rest];
            col[0] = Complex64::ONE;
            let mut len = 1usize;
            for (i, factor) in factors.iter().enumerate() {
                if i == mode {
                    continue;
                }
                let f = factor.col(j);
                let dim = f.len();
                // Expand in place: new[a*dim + b] = old[a] * f[b]. Writing
                // backwards keeps unread old entries intact.
                for a in (0..len).rev() {
                    let base = col[a];
                    for b in (0..dim).rev() {
                        col[a * dim + b] = base * f[b];
                    }
                }
                len *= dim;
            }
        }
        rest
    }

    fn reconstruction_residual(&mut self, factors: &[ComplexMatrix]) -> f64 {
        self.recon.fill(Complex64::ZERO);
        for j in 0..self.rank {
            self.odometer.fill(0);
            for flat in 0..self.total {
                let mut p = Complex64::ONE;
                for (i, factor) in factors.iter().enumerate() {
                    p *= factor.col(j)[self.odometer[i]];
                }
                self.recon[flat] += p;
                advance(&mut self.odometer, &self.shape);
            }
        }
        let mut diff = 0.0;
        for (r, t) in self.recon.iter().zip(self.t.entries()) {
            diff += (r - t).norm_sqr();
        }
        diff.sqrt() / self.tnorm
    }

    fn random_factors(&self, seed: u64) -> Vec<ComplexMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        self.shape
            .iter()
            .map(|&dim| {
                let mut m = ComplexMatrix::zeros(dim, self.rank);
                for v in &mut m.data {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *v = Complex64::new(re * scale, im * scale);
                }
                m
            })
            .collect()
    }

    fn run(&mut self, seed: u64, opts: &RunOptions) -> RunResult {
        let mut factors = self.random_factors(seed);
        let mut result = RunResult {
            factors: Vec::new(),
            residual: f64::INFINITY,
            iterations: 0,
            aborted: false,
            max_col_norm: 0.0,
            trace_sweeps: Vec::new(),
            trace_residuals: Vec::new(),
            trace_norms: Vec::new(),
        };
        // Residuals from 1..=10 sweeps ago, for the plateau stop.
        let mut history = [f64::INFINITY; 11];
        let track_norms = opts.trace_stride > 0 || opts.stop_when.is_some();
        for sweep in 1..=opts.max_iters {
            for mode in 0..self.order {
                let dim = self.shape[mode];
                let rest = self.build_khatri_rao(&factors, mode);
                self.rhs[..self.total].copy_from_slice(&self.unfoldings[mode]);
                solve_least_squares(
                    &mut self.kr[..rest * self.rank],
                    rest,
                    self.rank,
                    &mut self.rhs[..rest * dim],
                    dim,
                    &mut self.sol[..self.rank * dim],
                    &mut self.reflector,
                    &mut self.perm,
                    QR_REL_TOL,
                );
                let factor = &mut factors[mode];
                for c in 0..dim {
                    for j in 0..self.rank {
                        factor.set(c, j, self.sol[j + c * self.rank]);
                    }
                }
                // Push the new factor's scale forward to the next solve;
                // the sweep's last factor keeps it until the rebalance.
                if mode + 1 != self.order {
                    for j in 0..self.rank {
                        let norm = factor.col_norm(j);
                        if norm > 0.0 {
                            factor.scale_col(j, 1.0 / norm);
                        }
                    }
                }
            }
            if opts.rebalance {
                rebalance(&mut factors);
            }
            let residual = self.reconstruction_residual(&factors);
            result.iterations = sweep;
            if !residual.is_finite() || factors.iter().any(|f| !f.is_finite()) {
                result.aborted = true;
                result.residual = f64::INFINITY;
                result.factors = factors;
                return result;
            }
            result.residual = residual;
            let max_norm = if track_norms {
                factors.iter().map(ComplexMatrix::max_col_norm).fold(0.0, f64::max)
            } else {
                0.0
            };
            if opts.trace_stride > 0 && sweep % opts.trace_stride == 0 {
                result.trace_sweeps.push(sweep);
                result.trace_residuals.push(residual);
                result.trace_norms.push(max_norm);
            }
            if let Some(target) = opts.target_residual {
                if residual < target {
                    break;
                }
            }
            if let Some((res_below, norm_above)) = opts.stop_when {
                if residual < res_below && max_norm > norm_above {
                    break;
                }
            }
            // history slot (sweep+1) % 11 still holds the residual from 10
            // sweeps ago.
            if opts.tol > 0.0 && history[(sweep + 1) % 11] - residual < opts.tol {
                break;
            }
            history[sweep % 11] = residual;
        }
        result.max_col_norm = factors
            .iter()
            .map(ComplexMatrix::max_col_norm)
            .fold(0.0, f64::max);
        result.factors = factors;
        result
    }
}

/// Row-major odometer step over `shape`.
fn advance(idx: &mut [usize], shape: &[usize]) {
    for pos in (0..idx.len()).rev() {
        idx[pos] += 1;
        if idx[pos] < shape[pos] {
            return;
        }
        idx[pos] = 0;
    }
}

/// Spread each component's scale evenly over the factors: with all but the
/// last factor's columns at unit norm, move the last factor's column norm s
/// to s^(1/k) on every factor. The reconstruction is unchanged.
fn rebalance(factors: &mut [ComplexMatrix]) {
    let order = factors.len();
    let rank = factors[0].cols;
    for j in 0..rank {
        let s = factors[order - 1].col_norm(j);
        if s > 0.0 {
            let g = s.powf(1.0 / order as f64);
            for factor in factors.iter_mut().take(order - 1) {
                factor.scale_col(j, g);
            }
            factors[order - 1].scale_col(j, g / s);
        }
    }
}

/// Minimize ||A X - B||_F column by column. `a` is column-major m x n and
/// `b` column-major m x nrhs; both are destroyed. The solution lands in
/// `x` (column-major n x nrhs). Uses Householder QR with column pivoting;
/// pivots below `rel_tol` times the first pivot are truncated and their
/// solution rows set to zero (a basic solution). Returns the rank used.
#[allow(clippy::too_many_arguments)]
fn solve_least_squares(
    a: &mut [Complex64],
    m: usize,
    n: usize,
    b: &mut [Complex64],
    nrhs: usize,
    x: &mut [Complex64],
    reflector: &mut [Complex64],
    perm: &mut [usize],
    rel_tol: f64,
) -> usize {
    for (i, p) in perm.iter_mut().enumerate().take(n) {
        *p = i;
    }
    let kmax = m.min(n);
    let mut rank = kmax;
    let mut first_pivot = 0.0;
    for j in 0..kmax {
        // Pivot: bring the column with the largest remaining norm to j.
        let mut best_c = j;
        let mut best_ssq = 0.0;
        for c in j..n {
            let ssq: f64 = a[c * m + j..(c + 1) * m].iter().map(|z| z.norm_sqr()).sum();
            if ssq > best_ssq {
                best_ssq = ssq;
                best_c = c;
            }
        }
        let beta = best_ssq.sqrt();
        if j == 0 {
            first_pivot = beta;
        }
        if beta == 0.0 || beta < rel_tol * first_pivot {
            rank = j;
            break;
        }
        if best_c != j {
            for r in 0..m {
                a.swap(r + j * m, r + best_c * m);
            }
            perm.swap(j, best_c);
        }
        // Householder vector u = col + phase * beta * e_j acting on rows j..m.
        let alpha = a[j + j * m];
        let phase = if alpha == Complex64::ZERO {
            Complex64::ONE
        } else {
            alpha / alpha.norm()
        };
        let len = m - j;
        reflector[..len].copy_from_slice(&a[j + j * m..(j + 1) * m]);
        reflector[0] += phase * beta;
        let unorm2: f64 = reflector[..len].iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / unorm2;
        for c in j + 1..n {
            apply_reflector(&reflector[..len], tau, &mut a[j + c * m..(c + 1) * m]);
        }
        for c in 0..nrhs {
            apply_reflector(&reflector[..len], tau, &mut b[j + c * m..(c + 1) * m]);
        }
        a[j + j * m] = -phase * beta;
    }
    x.fill(Complex64::ZERO);
    // Back-substitute R[0..rank, 0..rank] z = b and scatter through the
    // column permutation.
    for c in 0..nrhs {
        for i in (0..rank).rev() {
            let mut acc = b[i + c * m];
            for l in i + 1..rank {
                acc -= a[i + l * m] * x[perm[l] + c * n];
            }
            x[perm[i] + c * n] = acc / a[i + i * m];
        }
    }
    rank
}

/// v -= tau * u * (u^H v).
fn apply_reflector(u: &[Complex64], tau: f64, v: &mut [Complex64]) {
    let mut s = Complex64::ZERO;
    for (uu, vv) in u.iter().zip(v.iter()) {
        s += uu.conj() * vv;
    }
    s *= tau;
    for (uu, vv) in u.iter().zip(v.iter_mut()) {
        *vv -= s * uu;
    }
}

/// Multi-restart ALS search for a rank-`rank` approximation of `t`.
/// Deterministic given the config: restart i is seeded with `seed + i` and
/// the best run is selected by (residual, restart index).
pub fn als_decompose(t: &FloatTensor, rank: usize, cfg: &AlsConfig) -> Result<AlsOutcome> {
    if cfg.restarts == 0 || cfg.max_iters == 0 {
        return Err(Error::invalid("als: restarts and max_iters must be >= 1"));
    }
    let mut engine = Engine::new(t, rank)?;
    let opts = RunOptions {
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        rebalance: cfg.rebalance,
        target_residual: cfg.target_residual,
        stop_when: None,
        trace_stride: 0,
    };
    let mut best: Option<(RunResult, u64)> = None;
    let mut aborted = 0usize;
    let mut restarts_run = 0usize;
    for i in 0..cfg.restarts {
        let seed = cfg.seed.wrapping_add(i as u64);
        let run = engine.run(seed, &opts);
        restarts_run = i + 1;
        if run.aborted {
            aborted += 1;
        }
        let better = match &best {
            None => true,
            Some((b, _)) => run.residual < b.residual,
        };
        if better {
            best = Some((run, seed));
        }
        if let (Some(target), Some((b, _))) = (cfg.target_residual, &best) {
            if b.residual < target {
                break;
            }
        }
    }
    let (run, seed) = best.expect("at least one restart ran");
    if !run.residual.is_finite() {
        return Err(Error::Numerical(
            "all restarts aborted with non-finite values".into(),
        ));
    }
    Ok(AlsOutcome {
        best: CpDecomposition {
            shape: t.shape().to_vec(),
            rank,
            factors: run.factors,
            residual: run.residual,
            max_col_norm: run.max_col_norm,
            iterations: run.iterations,
            seed,
        },
        restarts_run,
        aborted_restarts: aborted,
    })
}

/// Relative Frobenius distance between `t` and the reconstruction of `d`.
pub fn residual(t: &FloatTensor, d: &CpDecomposition) -> Result<f64> {
    if t.shape() != d.shape.as_slice() {
        return Err(Error::ShapeMismatch(format!(
            "tensor shape {:?} vs decomposition shape {:?}",
            t.shape(),
            d.shape
        )));
    }
    if d.factors.len() != d.shape.len() {
        return Err(Error::ShapeMismatch("factor count != order".into()));
    }
    for (i, f) in d.factors.iter().enumerate() {
        if f.rows() != d.shape[i] || f.cols() != d.rank {
            return Err(Error::ShapeMismatch(format!(
                "factor {i} is {}x{}, expected {}x{}",
                f.rows(),
                f.cols(),
                d.shape[i],
                d.rank
            )));
        }
    }
    let tnorm = t.frobenius_norm();
    if tnorm == 0.0 {
        return Err(Error::invalid("residual: zero target tensor"));
    }
    let shape = t.shape();
    let total = t.entries().len();
    let mut diff = 0.0;
    let mut idx = vec![0usize; shape.len()];
    for flat in 0..total {
        let mut value = Complex64::ZERO;
        for j in 0..d.rank {
            let mut p = Complex64::ONE;
            for (i, f) in d.factors.iter().enumerate() {
                p *= f.col(j)[idx[i]];
            }
            value += p;
        }
        diff += (value - t.entries()[flat]).norm_sqr();
        advance(&mut idx, shape);
    }
    Ok(diff.sqrt() / tnorm)
}

/// Outcome of a numerical rank-upper-bound check.
#[derive(Clone, Debug)]
pub struct CertifyReport {
    pub pass: bool,
    pub rank: usize,
    pub threshold: f64,
    pub best_residual: f64,
    pub restarts_run: usize,
    pub aborted_restarts: usize,
    /// Always [`NUMERICAL_EVIDENCE_NOTE`]: a small residual is evidence for
    /// rank <= `rank`, not a proof.
    pub note: &'static str,
    pub decomposition: CpDecomposition,
}

impl CertifyReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "rank <= {} check: {}",
            self.rank,
            if self.pass { "PASS" } else { "NOT ATTAINED" }
        );
        let _ = writeln!(
            s,
            "best residual {:.3e} vs threshold {:.3e} ({} restarts, {} aborted)",
            self.best_residual, self.threshold, self.restarts_run, self.aborted_restarts
        );
        let _ = writeln!(s, "note: {}", self.note);
        s
    }
}

/// Search for a rank-`rank` decomposition with residual below `threshold`.
pub fn certify_upper(
    t: &FloatTensor,
    rank: usize,
    threshold: f64,
    cfg: &AlsConfig,
) -> Result<CertifyReport> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::invalid("certify_upper: threshold must be positive"));
    }
    let mut cfg = cfg.clone();
    cfg.target_residual = Some(threshold);
    let outcome = als_decompose(t, rank, &cfg)?;
    Ok(CertifyReport {
        pass: outcome.best.residual < threshold,
        rank,
        threshold,
        best_residual: outcome.best.residual,
        restarts_run: outcome.restarts_run,
        aborted_restarts: outcome.aborted_restarts,
        note: NUMERICAL_EVIDENCE_NOTE,
        decomposition: outcome.best,
    })
}

/// The epsilon-degeneration of the order-k W-state: for each epsilon the
/// exact rank-2 tensor (1/eps) ((e0 + eps e1)^(x k) - e0^(x k)), recorded
/// with its relative distance to W_k.
#[derive(Clone, Debug)]
pub struct DegenerationWitness {
    pub k: usize,
    /// (epsilon, relative residual to wstate(k)) pairs, in input order.
    pub pairs: Vec<(f64, f64)>,
}

impl DegenerationWitness {
    /// Least-squares slope of log(residual) against log(epsilon); None with
    /// fewer than two points.
    pub fn loglog_slope(&self) -> Option<f64> {
        if self.pairs.len() < 2 {
            return None;
        }
        let logs: Vec<(f64, f64)> = self
            .pairs
            .iter()
            .map(|&(e, r)| (e.ln(), r.ln()))
            .collect();
        let n = logs.len() as f64;
        let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
        let cov: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
        let var: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
        Some(cov / var)
    }
}

/// Build the rank-2 degeneration witnesses of W_k for each epsilon and
/// measure how fast they approach the W-state. The residual scales
/// linearly in epsilon, which is the border-rank-2 phenomenon.
pub fn degeneration_witness(k: usize, eps_list: &[f64]) -> Result<DegenerationWitness> {
    if k < 3 {
        return Err(Error::invalid("degeneration_witness: k must be >= 3"));
    }
    let w = FloatTensor::from_exact(&DenseTensor::wstate(k)?)?;
    let mut pairs = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::invalid(format!(
                "degeneration_witness: epsilon must be positive and finite, got {eps}"
            )));
        }
        // Component 0: (1/eps) (e0 + eps e1)^(x k); the 1/eps sits on the
        // first leg. Component 1: -(1/eps) e0^(x k).
        let mut factors = Vec::with_capacity(k);
        for mode in 0..k {
            let mut f = ComplexMatrix::zeros(2, 2);
            if mode == 0 {
                f.set(0, 0, Complex64::new(1.0 / eps, 0.0));
                f.set(1, 0, Complex64::ONE);
                f.set(0, 1, Complex64::new(-1.0 / eps, 0.0));
            } else {
                f.set(0, 0, Complex64::ONE);
                f.set(1, 0, Complex64::new(eps, 0.0));
                f.set(0, 1, Complex64::ONE);
            }
            factors.push(f);
        }
        let witness = CpDecomposition {
            shape: vec![2; k],
            rank: 2,
            factors,
            residual: 0.0,
            max_col_norm: 0.0,
            iterations: 0,
            seed: 0,
        };
        pairs.push((eps, residual(&w, &witness)?));
    }
    Ok(DegenerationWitness { k, pairs })
}

/// Settings for [`divergence_probe`]: a single traced ALS run with the
/// rebalancing and the plateau stop disabled, so a border-rank gap shows up
/// as factor norms growing while the residual keeps falling.
#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub max_iters: usize,
    pub seed: u64,
    /// Record every `trace_stride`-th sweep (1 = every sweep).
    pub trace_stride: usize,
    /// Stop early once residual < .0 and max column norm > .1.
    pub stop_when: Option<(f64, f64)>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            max_iters: 2000,
            seed: 0,
            trace_stride: 1,
            stop_when: None,
        }
    }
}

/// Traces recorded by [`divergence_probe`].
#[derive(Clone, Debug)]
pub struct ProbeTrace {
    pub sweeps: Vec<usize>,
    pub residuals: Vec<f64>,
    pub max_col_norms: Vec<f64>,
    pub sweeps_run: usize,
    pub final_residual: f64,
    pub final_max_norm: f64,
    pub aborted: bool,
}

/// Run ALS at a fixed rank and record, per sweep, the residual and the
/// largest factor column norm.
pub fn divergence_probe(t: &FloatTensor, rank: usize, cfg: &ProbeConfig) -> Result<ProbeTrace> {
    if cfg.max_iters == 0 || cfg.trace_stride == 0 {
        return Err(Error::invalid(
            "probe: max_iters and trace_stride must be >= 1",
        ));
    }
    let mut engine = Engine::new(t, rank)?;
    let opts = RunOptions {
        max_iters: cfg.max_iters,
        tol: 0.0,
        rebalance: false,
        target_residual: None,
        stop_when: cfg.stop_when,
        trace_stride: cfg.trace_stride,
    };
    let run = engine.run(cfg.seed, &opts);
    let final_residual = if run.aborted {
        *run.trace_residuals.last().unwrap_or(&f64::INFINITY)
    } else {
        run.residual
    };
    Ok(ProbeTrace {
        sweeps: run.trace_sweeps,
        residuals: run.trace_residuals,
        max_col_norms: run.trace_norms,
        sweeps_run: run.iterations,
        final_residual,
        final_max_norm: run.max_col_norm,
        aborted: run.aborted,
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_complex(z: Complex64) -> String {
    format!("({},{})", fmt_f64(z.re), fmt_f64(z.im))
}

impl CpDecomposition {
    /// Serialize as a line-oriented text document with complex entries as
    /// "(re,im)" pairs at 17 significant digits; [`Self::from_text`] plus
    /// [`residual`] re-verify a stored decomposition without rerunning ALS.
    pub fn to_text(&self) -> String {
        let mut s = String::from("cpd\n");
        let _ = writeln!(
            s,
            "shape {}",
            self.shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        );
        let _ = writeln!(s, "rank {}", self.rank);
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "iterations {}", self.iterations);
        let _ = writeln!(s, "residual {}", fmt_f64(self.residual));
        for (i, f) in self.factors.iter().enumerate() {
            let _ = writeln!(s, "factor {i} rows {} cols {}", f.rows(), f.cols());
            for r in 0..f.rows() {
                let row: Vec<String> = (0..f.cols()).map(|c| fmt_complex(f.get(r, c))).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("decomposition file: {what}"));
        let mut lines = text.lines();
        if lines.next() != Some("cpd") {
            return Err(bad("missing cpd header"));
        }
        let parse_f64 = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| bad(&format!("bad number {s:?}")))
        };
        let parse_usize = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| bad(&format!("bad integer {s:?}")))
        };
        let mut expect_kv = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad("truncated"))?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_string)
                .ok_or_else(|| bad(&format!("expected {key} line")))
        };
        let shape = expect_kv("shape")?
            .split_whitespace()
            .map(parse_usize)
            .collect::<Result<Vec<_>>>()?;
        if shape.is_empty() || shape.contains(&0) {
            return Err(bad("bad shape"));
        }
        let rank = parse_usize(&expect_kv("rank")?)?;
        let seed = expect_kv("seed")?
            .parse::<u64>()
            .map_err(|_| bad("bad seed"))?;
        let iterations = parse_usize(&expect_kv("iterations")?)?;
        let residual = parse_f64(&expect_kv("residual")?)?;
        let mut factors = Vec::with_capacity(shape.len());
        for (i, &dim) in shape.iter().enumerate() {
            let head = lines.next().ok_or_else(|| bad("truncated factors"))?;
            let expected = format!("factor {i} rows {dim} cols {rank}");
            if head != expected {
                return Err(bad(&format!(
                    "expected {expected:?}, found {head:?}"
                )));
            }
            let mut f = ComplexMatrix::zeros(dim, rank);
            for r in 0..dim {
                let line = lines.next().ok_or_else(|| bad("truncated factor rows"))?;
                let cells: Vec<&str> = line.split_whitespace().collect();
                if cells.len() != rank {
                    return Err(bad("wrong entry count in factor row"));
                }
                for (c, cell) in cells.iter().enumerate() {
                    let inner = cell
                        .strip_prefix('(')
                        .and_then(|s| s.strip_suffix(')'))
                        .ok_or_else(|| bad(&format!("bad complex entry {cell:?}")))?;
                    let (re, im) = inner
                        .split_once(',')
                        .ok_or_else(|| bad(&format!("bad complex entry {cell:?}")))?;
                    f.set(r, c, Complex64::new(parse_f64(re)?, parse_f64(im)?));
                }
            }
            factors.push(f);
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(bad("trailing content"));
        }
        let max_col_norm = factors
            .iter()
            .map(ComplexMatrix::max_col_norm)
            .fold(0.0, f64::max);
        Ok(CpDecomposition {
            shape,
            rank,
            factors,
            residual,
            max_col_norm,
            iterations,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    fn wstate_float(k: usize) -> FloatTensor {
        FloatTensor::from_exact(&DenseTensor::wstate(k).unwrap()).unwrap()
    }

    fn rank1_tensor() -> FloatTensor {
        let mut t = DenseTensor::zeros(vec![2, 2, 2]).unwrap();
        t.set(&[0, 0, 0], BigRational::from_integer(BigInt::from(1)))
            .unwrap();
        FloatTensor::from_exact(&t).unwrap()
    }

    #[test]
    fn least_squares_recovers_known_solutions() {
        // Square well-conditioned system.
        let m = 4;
        let n = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = vec![Complex64::ZERO; m * n];
        for (i, v) in a.iter_mut().enumerate() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v = Complex64::new(re, im);
            if i % (m + 1) == 0 {
                *v += 3.0;
            }
        }
        let x_true: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(i as f64 + 0.5, -(i as f64)))
            .collect();
        let mut b = vec![Complex64::ZERO; m];
        for c in 0..n {
            for r in 0..m {
                b[r] += a[r + c * m] * x_true[c];
            }
        }
        let mut x = vec![Complex64::ZERO; n];
        let mut u = vec![Complex64::ZERO; m];
        let mut perm = vec![0usize; n];
        let a_copy = a.clone();
        let rank = solve_least_squares(&mut a, m, n, &mut b, 1, &mut x, &mut u, &mut perm, 1e-12);
        assert_eq!(rank, 4);
        for i in 0..n {
            assert!((x[i] - x_true[i]).norm() < 1e-10, "i={i}");
        }
        drop(a_copy);
    }

    #[test]
    fn least_squares_handles_rank_deficiency() {
        // Two identical columns; consistent rhs. The basic solution must
        // still reproduce b.
        let m = 3;
        let n = 2;
        let mut a = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let b_orig = [
            Complex64::new(2.0, 0.0),
            Complex64::new(4.0, 0.0),
            Complex64::new(0.0, 2.0),
        ];
        let mut b = b_orig.to_vec();
        let mut x = vec![Complex64::ZERO; n];
        let mut u = vec![Complex64::ZERO; m];
        let mut perm = vec![0usize; n];
        let a_copy = a.clone();
        let rank = solve_least_squares(&mut a, m, n, &mut b, 1, &mut x, &mut u, &mut perm, 1e-12);
        assert_eq!(rank, 1);
        for r in 0..m {
            let mut acc = Complex64::ZERO;
            for c in 0..n {
                acc += a_copy[r + c * m] * x[c];
            }
            assert!((acc - b_orig[r]).norm() < 1e-10);
        }
    }

    #[test]
    fn decomposes_rank_one_tensor_exactly() {
        let t = rank1_tensor();
        let cfg = AlsConfig {
            restarts: 3,
            max_iters: 200,
            ..AlsConfig::default()
        };
        let out = als_decompose(&t, 1, &cfg).unwrap();
        assert!(out.best.residual < 1e-12, "residual {}", out.best.residual);
        assert_eq!(out.aborted_restarts, 0);
    }

    #[test]
    fn decomposes_wstate_at_its_rank() {
        let w = wstate_float(3);
        let cfg = AlsConfig {
            restarts: 5,
            max_iters: 500,
            target_residual: Some(1e-10),
            ..AlsConfig::default()
        };
        let out = als_decompose(&w, 3, &cfg).unwrap();
        assert!(out.best.residual < 1e-10, "residual {}", out.best.residual);
        // Attained rank means bounded factors.
        assert!(out.best.max_col_norm < 50.0);
    }

    #[test]
    fn als_is_deterministic() {
        let w = wstate_float(3);
        let cfg = AlsConfig {
            restarts: 2,
            max_iters: 50,
            tol: 0.0,
            ..AlsConfig::default()
        };
        let a = als_decompose(&w, 2, &cfg).unwrap();
        let b = als_decompose(&w, 2, &cfg).unwrap();
        assert_eq!(a.best.residual.to_bits(), b.best.residual.to_bits());
        assert_eq!(a.best.seed, b.best.seed);
        let other = als_decompose(
            &w,
            2,
            &AlsConfig {
                seed: 1,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_ne!(a.best.residual.to_bits(), other.best.residual.to_bits());
    }

    #[test]
    fn residual_pinned_cases() {
        // W_2 = e0 x e1 + e1 x e0 reconstructed exactly.
        let w2 = wstate_float(2);
        let mut f0 = ComplexMatrix::zeros(2, 2);
        f0.set(0, 0, Complex64::ONE);
        f0.set(1, 1, Complex64::ONE);
        let mut f1 = ComplexMatrix::zeros(2, 2);
        f1.set(1, 0, Complex64::ONE);
        f1.set(0, 1, Complex64::ONE);
        let exact = CpDecomposition {
            shape: vec![2, 2],
            rank: 2,
            factors: vec![f0.clone(), f1.clone()],
            residual: 0.0,
            max_col_norm: 1.0,
            iterations: 0,
            seed: 0,
        };
        assert_eq!(residual(&w2, &exact).unwrap(), 0.0);

        // All-zero factors give relative residual exactly 1.
        let zero = CpDecomposition {
            shape: vec![2, 2],
            rank: 2,
            factors: vec![ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(2, 2)],
            residual: 1.0,
            max_col_norm: 0.0,
            iterations: 0,
            seed: 0,
        };
        assert_eq!(residual(&w2, &zero).unwrap(), 1.0);

        // Shape mismatch is rejected.
        assert!(residual(&wstate_float(3), &exact).is_err());

        // Perturbing one entry by delta moves the residual by O(delta).
        let mut probe_res = Vec::new();
        for delta in [1e-6, 1e-4] {
            let mut f0p = f0.clone();
            f0p.set(0, 0, Complex64::new(1.0 + delta, 0.0));
            let perturbed = CpDecomposition {
                factors: vec![f0p, f1.clone()],
                ..exact.clone()
            };
            probe_res.push(residual(&w2, &perturbed).unwrap());
        }
        let ratio = probe_res[1] / probe_res[0];
        assert!((30.0..300.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn reported_residual_matches_reverification() {
        let w = wstate_float(3).clone();
        let w2 = FloatTensor::from_exact(
            &DenseTensor::wstate(3).unwrap().kron_power(2).unwrap(),
        )
        .unwrap();
        for (t, rank) in [(&w, 3usize), (&w2, 4)] {
            let cfg = AlsConfig {
                restarts: 2,
                max_iters: 100,
                ..AlsConfig::default()
            };
            let out = als_decompose(t, rank, &cfg).unwrap();
            let check = residual(t, &out.best).unwrap();
            assert!(
                (check - out.best.residual).abs() < 1e-12,
                "reported {} recomputed {check}",
                out.best.residual
            );
        }
    }

    #[test]
    fn sweep_residuals_never_increase() {
        let w = wstate_float(3);
        let w2 = FloatTensor::from_exact(
            &DenseTensor::wstate(3).unwrap().kron_power(2).unwrap(),
        )
        .unwrap();
        for (t, rank) in [(&w, 2usize), (&w, 3), (&w2, 7)] {
            let trace = divergence_probe(
                t,
                rank,
                &ProbeConfig {
                    max_iters: 200,
                    seed: 11,
                    ..ProbeConfig::default()
                },
            )
            .unwrap();
            assert!(!trace.aborted);
            for w in trace.residuals.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "increase {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn certify_upper_reports() {
        let t = rank1_tensor();
        let report = certify_upper(&t, 1, 1e-10, &AlsConfig::default()).unwrap();
        assert!(report.pass);
        assert!(report.best_residual < 1e-10);
        assert_eq!(report.note, NUMERICAL_EVIDENCE_NOTE);
        assert!(report.to_text().contains("numerical evidence"));

        let w = wstate_float(3);
        let report = certify_upper(&w, 3, 1e-8, &AlsConfig::default()).unwrap();
        assert!(report.pass);

        // Rank 1 cannot approximate the W-state well.
        let report = certify_upper(
            &w,
            1,
            1e-3,
            &AlsConfig {
                restarts: 3,
                max_iters: 300,
                ..AlsConfig::default()
            },
        )
        .unwrap();
        assert!(!report.pass);
        assert!(report.to_text().contains("NOT ATTAINED"));
    }

    #[test]
    fn degeneration_residuals_scale_linearly() {
        let witness = degeneration_witness(3, &[1e-1, 1e-2, 1e-3]).unwrap();
        assert_eq!(witness.pairs.len(), 3);
        let r0 = witness.pairs[0].1;
        assert!((r0 / 1e-1 - 1.0).abs() < 0.05, "r0 {r0}");
        for w in witness.pairs.windows(2) {
            let ratio = w[0].1 / w[1].1;
            assert!((9.0..11.0).contains(&ratio), "ratio {ratio}");
        }

        let w4 = degeneration_witness(4, &[1e-3]).unwrap();
        assert!(w4.pairs[0].1 < 1e-2);

        for k in 3..=5usize {
            let eps: Vec<f64> = [1e-1, 1e-2, 1e-3, 1e-4].to_vec();
            let slope = degeneration_witness(k, &eps).unwrap().loglog_slope().unwrap();
            assert!((slope - 1.0).abs() < 0.1, "k={k} slope {slope}");
        }

        assert!(degeneration_witness(2, &[0.1]).is_err());
        assert!(degeneration_witness(3, &[0.0]).is_err());
        assert!(degeneration_witness(3, &[-0.5]).is_err());
    }

    #[test]
    fn probe_traces_behave_by_rank() {
        // Rank attained: norms stay bounded, residual goes to zero.
        let t = rank1_tensor();
        let trace = divergence_probe(&t, 1, &ProbeConfig::default()).unwrap();
        assert!(trace.final_residual < 1e-10);
        assert!(trace.final_max_norm < 10.0);

        let w = wstate_float(3);
        let trace = divergence_probe(
            &w,
            3,
            &ProbeConfig {
                max_iters: 500,
                seed: 1,
                ..ProbeConfig::default()
            },
        )
        .unwrap();
        assert!(trace.final_max_norm < 100.0);

        // Below the rank but at the border rank: residual falls while the
        // norms keep growing.
        let trace = divergence_probe(
            &w,
            2,
            &ProbeConfig {
                max_iters: 2000,
                seed: 0,
                ..ProbeConfig::default()
            },
        )
        .unwrap();
        assert_eq!(trace.sweeps.len(), 2000);
        assert!(trace.final_residual < 1e-2);
        let early = trace.max_col_norms[9];
        assert!(trace.final_max_norm > 2.0 * early);
        let mid = trace.residuals[999];
        assert!(trace.final_residual < mid);
    }

    #[test]
    fn probe_trace_stride_subsamples() {
        let w = wstate_float(3);
        let trace = divergence_probe(
            &w,
            2,
            &ProbeConfig {
                max_iters: 100,
                trace_stride: 10,
                ..ProbeConfig::default()
            },
        )
        .unwrap();
        assert_eq!(trace.sweeps, (1..=10).map(|i| i * 10).collect::<Vec<_>>());
        assert_eq!(trace.residuals.len(), 10);
    }

    #[test]
    fn decomposition_file_roundtrip() {
        let w = wstate_float(3);
        let out = als_decompose(
            &w,
            3,
            &AlsConfig {
                restarts: 2,
                max_iters: 100,
                ..AlsConfig::default()
            },
        )
        .unwrap();
        let text = out.best.to_text();
        let back = CpDecomposition::from_text(&text).unwrap();
        assert_eq!(back.shape, out.best.shape);
        assert_eq!(back.rank, out.best.rank);
        assert_eq!(back.seed, out.best.seed);
        assert_eq!(back.iterations, out.best.iterations);
        assert_eq!(back.residual.to_bits(), out.best.residual.to_bits());
        for (a, b) in back.factors.iter().zip(&out.best.factors) {
            assert_eq!(a, b);
        }
        // Re-verification from the file alone reproduces the residual.
        let check = residual(&w, &back).unwrap();
        assert!((check - back.residual).abs() < 1e-12);
        // And the serialization is stable.
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn malformed_decomposition_files_are_rejected() {
        assert!(CpDecomposition::from_text("").is_err());
        assert!(CpDecomposition::from_text("nope\n").is_err());
        let w = wstate_float(3);
        let out = als_decompose(
            &w,
            2,
            &AlsConfig {
                restarts: 1,
                max_iters: 10,
                ..AlsConfig::default()
            },
        )
        .unwrap();
        let good = out.best.to_text();
        let truncated: String = good.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(CpDecomposition::from_text(&truncated).is_err());
        let corrupted = good.replace("(", "[");
        assert!(CpDecomposition::from_text(&corrupted).is_err());
    }

    #[test]
    fn zero_tensor_and_bad_configs_are_rejected() {
        let zero = FloatTensor::from_exact(&DenseTensor::zeros(vec![2, 2, 2]).unwrap()).unwrap();
        assert!(als_decompose(&zero, 1, &AlsConfig::default()).is_err());
        let w = wstate_float(3);
        assert!(als_decompose(&w, 0, &AlsConfig::default()).is_err());
        assert!(als_decompose(
            &w,
            1,
            &AlsConfig {
                restarts: 0,
                ..AlsConfig::default()
            }
        )
        .is_err());
    }
}
