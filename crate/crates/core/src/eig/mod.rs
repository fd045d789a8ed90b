//! Dense eigensolver for real non-symmetric matrices.
//!
//! Pipeline: Osborne balancing, Householder reduction to Hessenberg form,
//! Francis double-shift QR, then eigenvectors either from the Schur form
//! ([`eigendecompose`]) or on demand by inverse iteration
//! ([`Eigensystem::eigenvector`]). Every eigenvector handed out is checked
//! against `‖Hv - λv‖₂ ≤ tol·‖H‖∞` on the original operator.
//!
//! Only real-valued operators are accepted. Eigenvalues are sorted by real
//! part, ties broken by imaginary part, and complex ones come in exact
//! conjugate pairs.

mod balance;
mod hessenberg;
mod inverse;
mod schur;

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_complex::Complex64;

use crate::math;
use crate::model::SparseOperator;
use hessenberg::Hessenberg;

/// Largest dimension handled by default (dense storage grows as `n²`).
pub const DEFAULT_DENSE_CAPACITY: usize = 12_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EigError {
    #[error("matrix dimension {dimension} exceeds the dense capacity {capacity}")]
    Capacity { dimension: usize, capacity: usize },
    #[error("operator has complex entries; only real matrices are supported")]
    ComplexEntries,
    #[error("tolerance must be positive and finite")]
    InvalidTolerance,
    #[error("QR iteration did not converge for {} eigenvalue(s), first index {}", indices.len(), indices.first().copied().unwrap_or(0))]
    NoConvergence { indices: Vec<usize> },
    #[error("{} eigenvector(s) failed the residual check, worst residual {worst:e} > {bound:e}", indices.len())]
    Unverified { indices: Vec<usize>, worst: f64, bound: f64 },
    #[error("eigenvalue index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default))]
pub struct EigOptions {
    /// Relative residual tolerance.
    pub tol: f64,
    /// Largest dimension accepted.
    pub capacity: usize,
    /// QR sweeps allowed per eigenvalue before giving up.
    pub max_iterations: usize,
    pub balance: bool,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions { tol: DEFAULT_TOLERANCE, capacity: DEFAULT_DENSE_CAPACITY, max_iterations: 100, balance: true }
    }
}

/// Full eigendecomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Complex64>,
    /// Unit-norm right eigenvectors, `right_eigenvectors[k]` pairs with
    /// `eigenvalues[k]`. The largest-magnitude component is real positive.
    pub right_eigenvectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    /// Infinity norm of the input.
    pub matrix_norm: f64,
}

impl SpectrumResult {
    pub fn max_imag(&self) -> f64 {
        max_imag(&self.eigenvalues)
    }

    pub fn is_real(&self, eps_im: f64) -> bool {
        is_spectrum_real(&self.eigenvalues, eps_im)
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Largest imaginary part, `-inf` for an empty slice.
pub fn max_imag(eigenvalues: &[Complex64]) -> f64 {
    eigenvalues.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_spectrum_real(eigenvalues: &[Complex64], eps_im: f64) -> bool {
    eigenvalues.iter().all(|z| z.im.abs() <= eps_im)
}

/// Default reality threshold `max(1e-9, 1e-12 ‖H‖∞)`.
pub fn default_eps_im(matrix_norm: f64) -> f64 {
    f64::max(1e-9, 1e-12 * matrix_norm)
}

/// Total order on eigenvalues: real part, then imaginary part.
pub fn compare_eigenvalues(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn check(op: &SparseOperator, opts: &EigOptions) -> Result<Vec<(usize, usize, f64)>, EigError> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(EigError::InvalidTolerance);
    }
    if op.dimension() > opts.capacity {
        return Err(EigError::Capacity { dimension: op.dimension(), capacity: opts.capacity });
    }
    if !op.is_real() {
        return Err(EigError::ComplexEntries);
    }
    Ok(op.entries().iter().map(|&(r, c, v)| (r, c, v.re)).collect())
}

fn residual(op: &SparseOperator, lambda: Complex64, v: &[Complex64]) -> f64 {
    let hv = op.matvec(v);
    math::sqrt(hv.iter().zip(v).map(|(a, &b)| (a - lambda * b).norm_sqr()).sum())
}

/// Unscale, normalize to unit 2-norm and rotate the largest component onto
/// the positive real axis.
fn finish_vector(mut v: Vec<Complex64>, scale: &[f64]) -> Vec<Complex64> {
    for (z, &d) in v.iter_mut().zip(scale) {
        *z *= d;
    }
    let big = v.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if big > 0.0 && big.is_finite() {
        v.iter_mut().for_each(|z| *z /= big);
    }
    let norm = math::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
    if norm > 0.0 {
        v.iter_mut().for_each(|z| *z /= norm);
    }
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (k, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = k;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / best_abs;
        v.iter_mut().for_each(|z| *z *= phase);
        v[best] = Complex64::new(v[best].norm(), 0.0);
    }
    v
}

/// Eigenvalues plus the reduced form needed to produce eigenvectors on demand.
pub struct Eigensystem<'a> {
    op: &'a SparseOperator,
    eigenvalues: Vec<Complex64>,
    matrix_norm: f64,
    tol: f64,
    scale: Vec<f64>,
    hessenberg: Hessenberg,
    reduced: Vec<f64>,
    reduced_norm: f64,
}

fn hessenberg_norm(n: usize, h: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..n {
        let s: f64 = h[i * n + i.saturating_sub(1)..(i + 1) * n].iter().map(|x| x.abs()).sum();
        best = best.max(s);
    }
    best
}

fn collect_eigenvalues(re: &[f64], im: &[f64]) -> Vec<Complex64> {
    re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect()
}

/// Eigenvalues only, sorted.
pub fn eigenvalues(op: &SparseOperator, opts: &EigOptions) -> Result<Vec<Complex64>, EigError> {
    Ok(Eigensystem::new(op, opts)?.eigenvalues)
}

impl<'a> Eigensystem<'a> {
    pub fn new(op: &'a SparseOperator, opts: &EigOptions) -> Result<Self, EigError> {
        let entries = check(op, opts)?;
        let n = op.dimension();
        let balanced = balance::balance(n, &entries, opts.balance);
        let hessenberg = Hessenberg::new(n, balanced.matrix);
        let reduced = hessenberg.matrix();
        let mut work = reduced.clone();
        let out = schur::hqr(n, &mut work, None, opts.max_iterations)
            .map_err(|u| EigError::NoConvergence { indices: u.0 })?;
        let mut eigenvalues = collect_eigenvalues(&out.re, &out.im);
        eigenvalues.sort_by(compare_eigenvalues);
        Ok(Eigensystem {
            op,
            eigenvalues,
            matrix_norm: op.norm_inf(),
            tol: opts.tol,
            scale: balanced.scale,
            reduced_norm: hessenberg_norm(n, &reduced),
            hessenberg,
            reduced,
        })
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn into_eigenvalues(self) -> Vec<Complex64> {
        self.eigenvalues
    }

    pub fn matrix_norm(&self) -> f64 {
        self.matrix_norm
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Right eigenvector of `eigenvalues()[index]` with its residual.
    pub fn eigenvector(&self, index: usize) -> Result<(Vec<Complex64>, f64), EigError> {
        let n = self.dimension();
        let lambda = *self
            .eigenvalues
            .get(index)
            .ok_or(EigError::IndexOutOfRange { index, dimension: n })?;
        let (v, res) = self.eigenvector_for(lambda);
        let bound = self.tol * self.matrix_norm;
        if res > bound {
            return Err(EigError::Unverified { indices: vec![index], worst: res, bound });
        }
        Ok((v, res))
    }

    /// Inverse iteration for an arbitrary shift, returning the normalized
    /// vector and its residual `‖Hv - λv‖₂` for that shift.
    pub fn eigenvector_for(&self, lambda: Complex64) -> (Vec<Complex64>, f64) {
        refine(self.op, &self.hessenberg, &self.reduced, self.reduced_norm, &self.scale, lambda, self.tol * self.matrix_norm)
    }
}

fn refine(
    op: &SparseOperator,
    hs: &Hessenberg,
    reduced: &[f64],
    reduced_norm: f64,
    scale: &[f64],
    lambda: Complex64,
    bound: f64,
) -> (Vec<Complex64>, f64) {
    let n = op.dimension();
    let mut best: Option<(Vec<Complex64>, f64)> = None;
    // a second attempt nudges the shift off an exactly singular pivot pattern
    for (attempt, steps) in [(0usize, 3usize), (1, 6)] {
        let nudge = if attempt == 0 { 0.0 } else { 8.0 * f64::EPSILON * reduced_norm.max(1.0) };
        let shift = lambda + Complex64::new(nudge, 0.0);
        let mut w = inverse::inverse_iteration(n, reduced, shift, reduced_norm, steps);
        hs.apply_q(&mut w);
        let v = finish_vector(w, scale);
        let r = residual(op, lambda, &v);
        let better = best.as_ref().map_or(true, |b| r < b.1);
        if better {
            best = Some((v, r));
        }
        if r <= bound {
            break;
        }
    }
    best.unwrap_or((Vec::new(), 0.0))
}

/// All eigenpairs with verified residuals.
pub fn eigendecompose(op: &SparseOperator, opts: &EigOptions) -> Result<SpectrumResult, EigError> {
    let entries = check(op, opts)?;
    let n = op.dimension();
    let matrix_norm = op.norm_inf();
    let balanced = balance::balance(n, &entries, opts.balance);
    let hs = Hessenberg::new(n, balanced.matrix);
    let reduced = hs.matrix();
    let reduced_norm = hessenberg_norm(n, &reduced);
    let mut t = reduced.clone();
    let mut v = hs.q();
    let out = schur::hqr(n, &mut t, Some(&mut v), opts.max_iterations)
        .map_err(|u| EigError::NoConvergence { indices: u.0 })?;
    drop(t);

    let column = |k: usize| -> Vec<f64> { (0..n).map(|i| v[i * n + k]).collect() };
    let mut pairs: Vec<(Complex64, Vec<Complex64>)> = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        let lambda = Complex64::new(out.re[k], out.im[k]);
        if out.im[k] == 0.0 {
            let vec = column(k).into_iter().map(|x| Complex64::new(x, 0.0)).collect();
            pairs.push((lambda, finish_vector(vec, &balanced.scale)));
            k += 1;
        } else {
            let (re, im) = (column(k), column(k + 1));
            let up: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
            let down: Vec<Complex64> = up.iter().map(|z| z.conj()).collect();
            pairs.push((lambda, finish_vector(up, &balanced.scale)));
            pairs.push((lambda.conj(), finish_vector(down, &balanced.scale)));
            k += 2;
        }
    }
    drop(v);

    let bound = opts.tol * matrix_norm;
    let mut residuals = Vec::with_capacity(n);
    let mut failed = Vec::new();
    let mut worst = 0.0f64;
    for (idx, (lambda, vec)) in pairs.iter_mut().enumerate() {
        let mut r = residual(op, *lambda, vec);
        if r > bound {
            let (w, rw) = refine(op, &hs, &reduced, reduced_norm, &balanced.scale, *lambda, bound);
            if rw < r {
                *vec = w;
                r = rw;
            }
        }
        if r > bound {
            failed.push(idx);
            worst = worst.max(r);
        }
        residuals.push(r);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| compare_eigenvalues(&pairs[a].0, &pairs[b].0));
    if !failed.is_empty() {
        let mut indices: Vec<usize> = failed.iter().map(|&f| order.iter().position(|&o| o == f).unwrap_or(f)).collect();
        indices.sort_unstable();
        return Err(EigError::Unverified { indices, worst, bound });
    }
    let mut eigenvalues = Vec::with_capacity(n);
    let mut right_eigenvectors = Vec::with_capacity(n);
    let mut sorted_residuals = Vec::with_capacity(n);
    let mut slots: Vec<Option<(Complex64, Vec<Complex64>)>> = pairs.into_iter().map(Some).collect();
    for &o in &order {
        let (lambda, vec) = slots[o].take().expect("each index appears once");
        eigenvalues.push(lambda);
        right_eigenvectors.push(vec);
        sorted_residuals.push(residuals[o]);
    }
    Ok(SpectrumResult { eigenvalues, right_eigenvectors, residuals: sorted_residuals, matrix_norm })
}

#[cfg(test)]
mod tests;
