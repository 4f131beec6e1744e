//! Single-parameter bistochastic randomization matrices.
//!
//! A matrix in this class is a convex combination of the identity and the
//! uniform (perfect-privacy) matrix: `lambda * I + (1 - lambda) * U/n`.
//! It is never stored densely on the hot path; the parameter pair
//! `(lambda, n)` determines every entry, the entropy rate, and an exact
//! closed-form inverse, so application and inversion run in O(n) with no
//! numerical matrix inversion.

use crate::error::{Error, Result};

/// Below this weight the closed-form inverse is still exact, but `1/lambda`
/// amplifies sampling noise enough that callers should be warned.
pub const LAMBDA_GUARD: f64 = 1e-6;

/// Bistochasticity tolerance for matrices read from files.
pub const INPUT_TOLERANCE: f64 = 1e-9;

/// Bistochasticity tolerance for internally constructed matrices.
pub const INTERNAL_TOLERANCE: f64 = 1e-12;

/// Default cap on dense materialization (entries, not bytes).
pub const DENSE_ENTRY_CAP: usize = 100_000_000;

/// A bistochastic matrix `lambda * I + (1 - lambda) * U/n`, where `U` is the
/// all-ones matrix. Represented only by its weight and size.
///
/// Diagonal entries equal `lambda + (1 - lambda)/n`, off-diagonal entries
/// equal `(1 - lambda)/n`. The matrix is symmetric, so its transpose inverse
/// coincides with its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaMatrix {
    lambda: f64,
    size: usize,
}

impl LambdaMatrix {
    /// Builds the matrix for a weight `0 < lambda <= 1` and `n >= 2` categories.
    pub fn new(lambda: f64, size: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) || lambda.is_nan() {
            return Err(Error::InvalidLambda(lambda));
        }
        if size < 2 {
            return Err(Error::InvalidSize(size));
        }
        Ok(Self { lambda, size })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// True when the weight sits below [`LAMBDA_GUARD`]; the inverse then
    /// amplifies estimation noise by more than a factor of `1/LAMBDA_GUARD`.
    pub fn below_guard(&self) -> bool {
        self.lambda < LAMBDA_GUARD
    }

    /// Probability of keeping a value unchanged: the diagonal entry.
    pub fn diagonal(&self) -> f64 {
        self.lambda + (1.0 - self.lambda) / self.size as f64
    }

    /// Probability of transitioning to one specific other category.
    pub fn off_diagonal(&self) -> f64 {
        (1.0 - self.lambda) / self.size as f64
    }

    /// Entry `(i, j)` of the represented matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diagonal()
        } else {
            self.off_diagonal()
        }
    }

    /// Multiplies the matrix by `v` without materializing it:
    /// `lambda * v + (1 - lambda) * mean(v) * ones`. Preserves `sum(v)`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mean = v.iter().sum::<f64>() / self.size as f64;
        let shift = (1.0 - self.lambda) * mean;
        Ok(v.iter().map(|&x| self.lambda * x + shift).collect())
    }

    /// Applies the exact closed-form inverse:
    /// `(1/lambda) * (v - mean(v) * ones) + mean(v) * ones`.
    ///
    /// Undoes [`LambdaMatrix::apply`] to machine precision without inverting
    /// any matrix numerically.
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mean = v.iter().sum::<f64>() / self.size as f64;
        let inv = 1.0 / self.lambda;
        Ok(v.iter().map(|&x| inv * (x - mean) + mean).collect())
    }

    /// Entropy rate in bits: the Shannon entropy of any row (all rows are
    /// identical). Zero at `lambda = 1`, approaching `log2(n)` as
    /// `lambda -> 0`.
    pub fn entropy_rate(&self) -> f64 {
        let p = self.diagonal();
        let q = self.off_diagonal();
        plogp(p) + (self.size as f64 - 1.0) * plogp(q)
    }

    /// Randomization strength as a fraction of the maximum achievable
    /// entropy `log2(n)`.
    pub fn strength_beta(&self) -> f64 {
        self.entropy_rate() / (self.size as f64).log2()
    }

    /// Materializes the matrix. Errors when `n * n` exceeds `cap` entries.
    pub fn dense_with_cap(&self, cap: usize) -> Result<DenseBistochastic> {
        let n = self.size;
        let requested = n.checked_mul(n).ok_or(Error::CapExceeded {
            what: "dense materialization",
            requested: usize::MAX,
            cap,
        })?;
        if requested > cap {
            return Err(Error::CapExceeded {
                what: "dense materialization",
                requested,
                cap,
            });
        }
        let q = self.off_diagonal();
        let mut entries = vec![q; requested];
        let p = self.diagonal();
        for i in 0..n {
            entries[i * n + i] = p;
        }
        DenseBistochastic::new(n, entries, INTERNAL_TOLERANCE)
    }

    /// Materializes the matrix under the default entry cap.
    pub fn dense(&self) -> Result<DenseBistochastic> {
        self.dense_with_cap(DENSE_ENTRY_CAP)
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// Finds the weight whose strength hits `beta_target` for size `n`,
/// by bisection on the strictly decreasing map `lambda -> beta`.
///
/// The result satisfies `|strength_beta - beta_target| <= 1e-9`. A target of
/// exactly zero returns `lambda = 1`; targets at or above one are rejected
/// since perfect privacy needs `lambda = 0`, outside the invertible class.
pub fn solve_lambda(beta_target: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    if !(0.0..1.0).contains(&beta_target) {
        return Err(Error::BetaUnreachable(beta_target));
    }
    if beta_target == 0.0 {
        return Ok(1.0);
    }
    let beta_of = |lambda: f64| LambdaMatrix { lambda, size: n }.strength_beta();
    // beta(1) = 0 and beta -> 1 as lambda -> 0+, decreasing in between.
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let beta = beta_of(mid);
        if (beta - beta_target).abs() <= 1e-12 {
            return Ok(mid);
        }
        if beta > beta_target {
            lo = mid; // too much entropy: raise lambda
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    debug_assert!((beta_of(lambda) - beta_target).abs() <= 1e-9);
    Ok(lambda)
}

/// A dense validated bistochastic matrix: nonnegative entries, every row and
/// column summing to one within the construction tolerance.
///
/// Used as the input carrier for identity-weight extraction and as the output
/// of dense materialization. Extraction residuals may carry zero entries, so
/// strict positivity is checked separately where the ergodicity assumption
/// matters ([`DenseBistochastic::is_strictly_positive`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBistochastic {
    size: usize,
    entries: Vec<f64>,
}

impl DenseBistochastic {
    /// Validates and wraps a row-major `n x n` grid of entries.
    pub fn new(size: usize, entries: Vec<f64>, tol: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidSize(size));
        }
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                got: entries.len(),
            });
        }
        for (k, &e) in entries.iter().enumerate() {
            if !e.is_finite() || e < -tol {
                return Err(Error::NotBistochastic(format!(
                    "entry ({}, {}) = {e} is negative beyond tolerance {tol:.1e}",
                    k / size,
                    k % size
                )));
            }
        }
        for i in 0..size {
            let row: f64 = entries[i * size..(i + 1) * size].iter().sum();
            if (row - 1.0).abs() > tol {
                return Err(Error::NotBistochastic(format!(
                    "row {i} sums to {row}, off by {:.3e} (tolerance {tol:.1e})",
                    (row - 1.0).abs()
                )));
            }
        }
        for j in 0..size {
            let col: f64 = (0..size).map(|i| entries[i * size + j]).sum();
            if (col - 1.0).abs() > tol {
                return Err(Error::NotBistochastic(format!(
                    "column {j} sums to {col}, off by {:.3e} (tolerance {tol:.1e})",
                    (col - 1.0).abs()
                )));
            }
        }
        Ok(Self { size, entries })
    }

    /// Parses a square numeric CSV grid (no header) under [`INPUT_TOLERANCE`].
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut entries = Vec::new();
        let mut size = None;
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let width = row.len();
            match size {
                None => size = Some(width),
                Some(n) if n != width => {
                    return Err(Error::Data(format!(
                        "row {i} has {width} fields, expected {n}"
                    )))
                }
                _ => {}
            }
            for (j, field) in row.iter().enumerate() {
                let value: f64 = field.parse().map_err(|_| {
                    Error::Data(format!("entry ({i}, {j}) is not a number: {field:?}"))
                })?;
                entries.push(value);
            }
        }
        let n = size.ok_or_else(|| Error::Data("empty matrix file".into()))?;
        if entries.len() != n * n {
            return Err(Error::Data(format!(
                "matrix is {} x {n}, expected a square grid",
                entries.len() / n
            )));
        }
        Self::new(n, entries, INPUT_TOLERANCE)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    /// True when every entry is strictly positive (the ergodic case).
    pub fn is_strictly_positive(&self) -> bool {
        self.entries.iter().all(|&e| e > 0.0)
    }

    pub fn min_diagonal(&self) -> f64 {
        (0..self.size)
            .map(|i| self.entry(i, i))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of pulling the identity component out of a dense bistochastic
/// matrix: `input = lambda * I + (1 - lambda) * residual`.
#[derive(Debug, Clone)]
pub struct IdentityExtraction {
    /// Weight of the identity matrix, the minimum diagonal entry.
    pub lambda: f64,
    /// Bistochastic remainder with at least one zero on its diagonal.
    /// `None` when the input is the identity itself (`lambda = 1`).
    pub residual: Option<DenseBistochastic>,
}

/// Decomposes `d` as `lambda * I + (1 - lambda) * R` with `lambda` the
/// minimum diagonal entry and `R` bistochastic.
///
/// Every bistochastic matrix with a strictly positive diagonal admits this
/// decomposition, which isolates the no-randomization component: `lambda` is
/// exactly the weight with which respondents report truthfully. The identity
/// input is degenerate (`R` would be 0/0) and yields `lambda = 1` with no
/// residual.
pub fn extract_identity_weight(d: &DenseBistochastic) -> Result<IdentityExtraction> {
    let lambda = d.min_diagonal();
    if lambda <= 0.0 {
        return Err(Error::NotBistochastic(format!(
            "minimum diagonal entry is {lambda}; a positive identity weight needs a \
             strictly positive diagonal"
        )));
    }
    if lambda >= 1.0 {
        return Ok(IdentityExtraction {
            lambda: 1.0,
            residual: None,
        });
    }
    let n = d.size();
    let scale = 1.0 / (1.0 - lambda);
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let shift = if i == j { lambda } else { 0.0 };
            // Clamp the roundoff of (min-diag - lambda) so the residual
            // revalidates at internal tolerance.
            entries.push(((d.entry(i, j) - shift) * scale).max(0.0));
        }
    }
    let residual = DenseBistochastic::new(n, entries, INTERNAL_TOLERANCE)?;
    Ok(IdentityExtraction {
        lambda,
        residual: Some(residual),
    })
}

/// `x * log2(x)` with the convention `0 * log2(0) = 0`, negated.
fn plogp(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}
