//! The DQI tridiagonal matrix and its leading eigenpair.
//!
//! The matrix `A_q^(m,ℓ,d)` is real symmetric tridiagonal of size
//! `(ℓ+1) × (ℓ+1)` with diagonal `α_k = k·d` and off-diagonal
//! `a_{k+1} = sqrt((q−1)(k+1)(m−k))`. Its largest eigenvalue λ_max is
//! simple and the leading eigenvector is strictly positive (all
//! off-diagonals are positive, so the characteristic polynomials of the
//! leading principal submatrices form a Sturm chain).
//!
//! λ_max is found by Sturm-sequence sign-count bisection on the Gershgorin
//! interval, followed by one Rayleigh-quotient polish. The eigenvector is
//! built from the three-term recurrence, swept from both ends and matched
//! at the peak: the forward sweep is stable only while the solution grows,
//! so for interior peaks (negative offsets `d`, degree ratios past the
//! symbol maximum) the decaying right side must come from a backward sweep.

use crate::{DqiError, Result};

/// Instance parameters `(m, ℓ, q, d)` of a DQI matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DqiParams {
    /// Constraint count m ≥ 1.
    pub m: usize,
    /// Polynomial degree ℓ, 0 ≤ ℓ ≤ m.
    pub ell: usize,
    /// Field order q ≥ 2.
    pub q: u32,
    /// Diagonal offset d.
    pub d: f64,
}

impl DqiParams {
    pub fn new(m: usize, ell: usize, q: u32, d: f64) -> Result<Self> {
        if m == 0 {
            return Err(DqiError::ParamDomain("m must be positive".into()));
        }
        if ell > m {
            return Err(DqiError::ParamDomain(format!(
                "degree ell = {ell} exceeds constraint count m = {m}"
            )));
        }
        if q < 2 {
            return Err(DqiError::ParamDomain(format!("field order q = {q} < 2")));
        }
        if !d.is_finite() {
            return Err(DqiError::ParamDomain(format!("offset d = {d} not finite")));
        }
        Ok(Self { m, ell, q, d })
    }

    /// Degree ratio μ = ℓ/m ∈ [0, 1].
    pub fn mu(&self) -> f64 {
        self.ell as f64 / self.m as f64
    }
}

/// Symmetric tridiagonal DQI matrix, stored as its two bands.
#[derive(Debug, Clone)]
pub struct TridiagonalMatrix {
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

/// Build `A_q^(m,ℓ,d)`: diagonal `k·d`, off-diagonal `sqrt((q−1)(k+1)(m−k))`.
pub fn build_matrix(params: &DqiParams) -> TridiagonalMatrix {
    let dim = params.ell + 1;
    let qm1 = (params.q - 1) as f64;
    let diag = (0..dim).map(|k| k as f64 * params.d).collect();
    let offdiag = (0..params.ell)
        .map(|k| (qm1 * (k + 1) as f64 * (params.m - k) as f64).sqrt())
        .collect();
    TridiagonalMatrix { diag, offdiag }
}

impl TridiagonalMatrix {
    /// Matrix size ℓ+1.
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries `a_1 ... a_ℓ` (empty when dim = 1).
    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// Construct from raw bands. Off-diagonal entries must be strictly
    /// positive (the positivity and simplicity guarantees rely on it).
    pub fn from_bands(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(DqiError::ParamDomain("empty diagonal".into()));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(DqiError::DimensionMismatch {
                expected: diag.len() - 1,
                got: offdiag.len(),
            });
        }
        if offdiag.iter().any(|&a| a.is_nan() || a <= 0.0) {
            return Err(DqiError::ParamDomain(
                "off-diagonal entries must be strictly positive".into(),
            ));
        }
        Ok(Self { diag, offdiag })
    }

    /// y = A·x.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        debug_assert_eq!(x.len(), n);
        debug_assert_eq!(y.len(), n);
        for k in 0..n {
            let mut s = self.diag[k] * x[k];
            if k > 0 {
                s += self.offdiag[k - 1] * x[k - 1];
            }
            if k + 1 < n {
                s += self.offdiag[k] * x[k + 1];
            }
            y[k] = s;
        }
    }

    /// Gershgorin enclosure of the spectrum.
    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for k in 0..n {
            let left = if k > 0 {
                self.offdiag[k - 1].abs()
            } else {
                0.0
            };
            let right = if k + 1 < n {
                self.offdiag[k].abs()
            } else {
                0.0
            };
            lo = lo.min(self.diag[k] - left - right);
            hi = hi.max(self.diag[k] + left + right);
        }
        (lo, hi)
    }
}

/// Number of eigenvalues strictly below `x`, from the signs of the LDLT
/// pivots (Sturm sequence).
fn sturm_count(diag: &[f64], offdiag: &[f64], x: f64) -> usize {
    const PIVOT_GUARD: f64 = 1e-300;
    let n = diag.len();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < PIVOT_GUARD {
            if q >= 0.0 {
                PIVOT_GUARD
            } else {
                -PIVOT_GUARD
            }
        } else {
            q
        };
        q = (diag[i] - x) - offdiag[i - 1] * offdiag[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric tridiagonal matrix.
///
/// Sturm bisection on the Gershgorin interval down to an absolute width of
/// `1e-13` times the interval size, then one Rayleigh-quotient polish with
/// the matched recurrence vector. Deterministic: identical inputs give
/// bit-identical output.
pub fn lambda_max(matrix: &TridiagonalMatrix) -> f64 {
    let n = matrix.dim();
    if n == 1 {
        return matrix.diag[0];
    }
    let (lo, hi) = matrix.gershgorin();
    let width = (hi - lo).max(1.0);
    let tol = 1e-13 * width;
    let mut a = lo - 1e-8 * width;
    let mut b = hi + 1e-8 * width;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if sturm_count(&matrix.diag, &matrix.offdiag, mid) < n {
            a = mid;
        } else {
            b = mid;
        }
    }
    let lambda = 0.5 * (a + b);
    rayleigh_quotient(matrix, &recurrence_vector(matrix, lambda))
}

fn rayleigh_quotient(matrix: &TridiagonalMatrix, w: &[f64]) -> f64 {
    let mut aw = vec![0.0; w.len()];
    matrix.apply(w, &mut aw);
    let num = kahan_dot(w, &aw);
    let den = kahan_dot(w, w);
    num / den
}

fn kahan_dot(x: &[f64], y: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let term = a * b - c;
        let t = sum + term;
        c = (t - sum) - term;
        sum = t;
    }
    sum
}

/// Magnitude ceiling before a sweep rescales its whole prefix. Prefix
/// entries shrink by the same factor; far-tail entries may underflow to
/// subnormals or zero, which is their correct normalized value.
const RESCALE_AT: f64 = 1e200;
const RESCALE_BY: f64 = 1e-200;

/// Unnormalized eigenvector of `matrix` at eigenvalue `lambda`, from the
/// three-term recurrence swept from both ends and glued at the peak.
fn recurrence_vector(matrix: &TridiagonalMatrix, lambda: f64) -> Vec<f64> {
    let n = matrix.dim();
    if n == 1 {
        return vec![1.0];
    }
    let diag = &matrix.diag;
    let off = &matrix.offdiag;

    // Forward sweep: stable while the solution grows. Stop shortly after
    // the values turn over; past the peak the sweep drifts onto the
    // growing (wrong) solution, which would eventually overtake the true
    // peak and hijack the match point.
    let mut fwd: Vec<f64> = Vec::with_capacity(n);
    fwd.push(1.0);
    let mut peak_idx = 0usize;
    let mut peak_val = 1.0f64;
    for k in 0..n - 1 {
        let prev = if k == 0 { 0.0 } else { off[k - 1] * fwd[k - 1] };
        let next = ((lambda - diag[k]) * fwd[k] - prev) / off[k];
        fwd.push(next);
        let mut mag = next.abs();
        if mag > peak_val {
            peak_val = mag;
            peak_idx = k + 1;
        }
        if mag > RESCALE_AT {
            for v in fwd.iter_mut() {
                *v *= RESCALE_BY;
            }
            peak_val *= RESCALE_BY;
            mag *= RESCALE_BY;
        }
        if mag < peak_val * 1e-4 {
            break;
        }
    }

    if fwd.len() == n && peak_idx + 1 >= n {
        // Peak at the right boundary: the forward sweep never left its
        // stable regime.
        let peak = fwd[peak_idx];
        for v in fwd.iter_mut() {
            *v /= peak;
        }
        return fwd;
    }

    // Backward sweep from the right boundary down to the matching index.
    let join = peak_idx;
    let len_b = n - join;
    let mut bwd: Vec<f64> = vec![0.0; len_b];
    bwd[len_b - 1] = 1.0;
    if len_b >= 2 {
        bwd[len_b - 2] = (lambda - diag[n - 1]) / off[n - 2];
    }
    for k in (join + 1..n - 1).rev() {
        let val = ((lambda - diag[k]) * bwd[k - join] - off[k] * bwd[k + 1 - join]) / off[k - 1];
        bwd[k - 1 - join] = val;
        if val.abs() > RESCALE_AT {
            for v in bwd.iter_mut() {
                *v *= RESCALE_BY;
            }
        }
    }

    let mut w = fwd;
    w.truncate(join + 1);
    let scale = w[join] / bwd[0];
    w.extend(bwd[1..].iter().map(|&b| b * scale));
    // Scale the peak to 1 so that norms of the result cannot overflow;
    // entries whose true relative size is below f64 range flush to zero.
    let peak = w[join];
    for v in w.iter_mut() {
        *v /= peak;
    }
    w
}

/// Leading eigenpair: λ_max plus the normalized strictly positive
/// eigenvector, with the peak index and eigen-equation residual.
#[derive(Debug, Clone)]
pub struct SpectralPair {
    /// Largest eigenvalue.
    pub lambda_max: f64,
    /// Unit-norm leading eigenvector, length ℓ+1. All entries are
    /// non-negative; far tails may underflow to subnormal/zero on
    /// instances whose true components fall below f64 range.
    pub w: Vec<f64>,
    /// Index of the largest squared component.
    pub k_peak: usize,
    /// ‖Aw − λw‖∞ of the returned pair.
    pub residual: f64,
}

impl SpectralPair {
    /// Squared component w_k².
    pub fn weight(&self, k: usize) -> f64 {
        self.w[k] * self.w[k]
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }
}

/// Compute the normalized leading eigenvector for `lambda` (the value
/// returned by [`lambda_max`]).
///
/// The vector is validated, not assumed: any negative component or a
/// residual above `1e-9·max(1, |λ|)` is a spectral failure.
pub fn leading_eigenvector(matrix: &TridiagonalMatrix, lambda: f64) -> Result<SpectralPair> {
    let mut w = recurrence_vector(matrix, lambda);
    let norm = kahan_dot(&w, &w).sqrt();
    if !norm.is_finite() || norm <= 0.0 {
        return Err(DqiError::SpectralFailure(format!(
            "eigenvector norm {norm} is not positive and finite"
        )));
    }
    for v in w.iter_mut() {
        *v /= norm;
    }

    let mut k_peak = 0;
    let mut best = -1.0;
    for (k, &v) in w.iter().enumerate() {
        if v < 0.0 {
            return Err(DqiError::SpectralFailure(format!(
                "eigenvector component w[{k}] = {v} is negative"
            )));
        }
        let sq = v * v;
        if sq > best {
            best = sq;
            k_peak = k;
        }
    }

    let mut aw = vec![0.0; w.len()];
    matrix.apply(&w, &mut aw);
    let mut residual = 0.0f64;
    for k in 0..w.len() {
        residual = residual.max((aw[k] - lambda * w[k]).abs());
    }
    let tol = 1e-9 * lambda.abs().max(1.0);
    if residual > tol {
        return Err(DqiError::SpectralFailure(format!(
            "residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )));
    }

    Ok(SpectralPair {
        lambda_max: lambda,
        w,
        k_peak,
        residual,
    })
}

/// Convenience: build the matrix for `params` and solve for its leading
/// eigenpair.
pub fn spectral_pair(params: &DqiParams) -> Result<SpectralPair> {
    let matrix = build_matrix(params);
    let lambda = lambda_max(&matrix);
    leading_eigenvector(&matrix, lambda)
}

/// Large-m eigenvalue approximation `m·(2·sqrt((q−1)μ(1−μ)) + μd)`.
///
/// At μ ∈ {0, 1} the square-root term vanishes and the degenerate limit
/// `m·μ·d` is returned.
pub fn lambda_max_asymptotic(params: &DqiParams) -> f64 {
    let mu = params.mu();
    let m = params.m as f64;
    let qm1 = (params.q - 1) as f64;
    m * (2.0 * (qm1 * mu * (1.0 - mu)).sqrt() + mu * params.d)
}

/// Peak index and effective width (standard deviation of the distribution
/// `{w_k²}` over k).
pub fn concentration_stats(pair: &SpectralPair) -> (usize, f64) {
    let mut mean = 0.0;
    let mut mean_sq = 0.0;
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    for (k, &v) in pair.w.iter().enumerate() {
        let p = v * v;
        let kf = k as f64;
        let t1 = kf * p - c1;
        let s1 = mean + t1;
        c1 = (s1 - mean) - t1;
        mean = s1;
        let t2 = kf * kf * p - c2;
        let s2 = mean_sq + t2;
        c2 = (s2 - mean_sq) - t2;
        mean_sq = s2;
    }
    let var = (mean_sq - mean * mean).max(0.0);
    (pair.k_peak, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m: usize, ell: usize, q: u32, d: f64) -> DqiParams {
        DqiParams::new(m, ell, q, d).unwrap()
    }

    #[test]
    fn build_small_binary() {
        // (m=4, ℓ=2, q=2, d=0): diag (0,0,0), offdiag (2, √6)
        let mat = build_matrix(&params(4, 2, 2, 0.0));
        assert_eq!(mat.dim(), 3);
        assert_eq!(mat.diag(), &[0.0, 0.0, 0.0]);
        assert!((mat.offdiag()[0] - 2.0).abs() < 1e-15);
        assert!((mat.offdiag()[1] - 6.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn build_ternary_with_offset() {
        // (m=4, ℓ=2, q=3, d=1): diag (0,1,2), offdiag (√8, √12)
        let mat = build_matrix(&params(4, 2, 3, 1.0));
        assert_eq!(mat.diag(), &[0.0, 1.0, 2.0]);
        assert!((mat.offdiag()[0] - 8.0f64.sqrt()).abs() < 1e-15);
        assert!((mat.offdiag()[1] - 12.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn build_large_dimension() {
        let mat = build_matrix(&params(5000, 650, 2, 0.0));
        assert_eq!(mat.dim(), 651);
        assert!((mat.offdiag()[0] - 5000.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn params_rejected() {
        assert!(matches!(
            DqiParams::new(4, 7, 2, 0.0),
            Err(DqiError::ParamDomain(_))
        ));
        assert!(matches!(
            DqiParams::new(4, 2, 1, 0.0),
            Err(DqiError::ParamDomain(_))
        ));
        assert!(matches!(
            DqiParams::new(0, 0, 2, 0.0),
            Err(DqiError::ParamDomain(_))
        ));
    }

    #[test]
    fn ell_equal_m_allowed() {
        let p = params(6, 6, 2, 0.0);
        let mat = build_matrix(&p);
        // a_ℓ = sqrt((q−1)·ℓ·(m−ℓ+1)) = sqrt(6) > 0
        assert!((mat.offdiag()[5] - 6.0f64.sqrt()).abs() < 1e-15);
        let pair = spectral_pair(&p).unwrap();
        assert!(pair.w.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn lambda_three_by_three_closed_form() {
        // zero diagonal, offdiag (2, √6): λ_max = √(4+6) = √10
        let mat = build_matrix(&params(4, 2, 2, 0.0));
        let lambda = lambda_max(&mat);
        assert!((lambda - 10.0f64.sqrt()).abs() < 1e-12 * 10.0f64.sqrt());
    }

    #[test]
    fn lambda_two_by_two_closed_form() {
        // diag (0, d), offdiag (a): λ_max = (d + √(d²+4a²))/2
        for &(d, m, q) in &[(1.5f64, 7usize, 2u32), (-0.75, 12, 3), (0.0, 5, 5)] {
            let p = params(m, 1, q, d);
            let mat = build_matrix(&p);
            let a = mat.offdiag()[0];
            let expect = 0.5 * (d + (d * d + 4.0 * a * a).sqrt());
            let lambda = lambda_max(&mat);
            assert!(
                (lambda - expect).abs() <= 1e-12 * expect.abs().max(1.0),
                "d={d}: got {lambda}, expected {expect}"
            );
        }
    }

    #[test]
    fn lambda_scalar_matrix() {
        let mat = build_matrix(&params(4, 0, 2, 3.0));
        assert_eq!(mat.dim(), 1);
        assert_eq!(lambda_max(&mat), 0.0);
    }

    #[test]
    fn eigenvector_three_by_three_hand_solved() {
        // w² = (0.2, 0.5, 0.3) from 2w₁ = √10·w₀ and √6·w₁ = √10·w₂.
        let mat = build_matrix(&params(4, 2, 2, 0.0));
        let lambda = lambda_max(&mat);
        let pair = leading_eigenvector(&mat, lambda).unwrap();
        let expect = [0.2f64, 0.5, 0.3];
        for (k, &e) in expect.iter().enumerate() {
            assert!(
                (pair.weight(k) - e).abs() < 1e-12,
                "w²[{k}] = {}, expected {e}",
                pair.weight(k)
            );
        }
        assert_eq!(pair.k_peak, 1);
        assert!(pair.residual <= 1e-9 * lambda);
    }

    #[test]
    fn eigenvector_scalar() {
        let mat = build_matrix(&params(4, 0, 2, 0.0));
        let pair = leading_eigenvector(&mat, lambda_max(&mat)).unwrap();
        assert_eq!(pair.w, vec![1.0]);
        assert_eq!(pair.k_peak, 0);
    }

    #[test]
    fn eigenvector_positive_across_offsets() {
        for &d in &[-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
            for &q in &[2u32, 3, 5] {
                let p = params(200, 80, q, d);
                let pair = spectral_pair(&p).unwrap();
                let min = pair.w.iter().cloned().fold(f64::MAX, f64::min);
                assert!(min > 0.0, "q={q} d={d}: min w = {min}");
                assert!((kahan_dot(&pair.w, &pair.w) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interior_peak_negative_offset() {
        // d = −2 pushes the peak well inside the index range; the decaying
        // right tail exercises the backward sweep.
        let p = params(400, 160, 2, -2.0);
        let pair = spectral_pair(&p).unwrap();
        assert!(pair.k_peak > 0 && pair.k_peak < 160);
        assert!(pair.residual <= 1e-9 * pair.lambda_max.abs().max(1.0));
        assert!(pair.w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn asymptotic_formula_values() {
        // d=0, μ=0.5, q=2 → exactly m
        let p = params(1000, 500, 2, 0.0);
        assert!((lambda_max_asymptotic(&p) - 1000.0).abs() < 1e-9);
        // q=2, d=1, μ=0.5 → 1.5·m
        let p = params(1000, 500, 2, 1.0);
        assert!((lambda_max_asymptotic(&p) - 1500.0).abs() < 1e-9);
        // (m=5000, ℓ=635, q=2, d=0) → 5000·2·√(0.127·0.873)
        let p = params(5000, 635, 2, 0.0);
        let expect = 10000.0 * (0.127f64 * 0.873).sqrt();
        assert!((lambda_max_asymptotic(&p) - expect).abs() < 1e-9);
        assert!((expect - 3329.7).abs() < 0.1);
    }

    #[test]
    fn asymptotic_degenerate_mu() {
        let p = params(100, 0, 2, 2.0);
        assert_eq!(lambda_max_asymptotic(&p), 0.0);
        let p = params(100, 100, 2, 2.0);
        assert!((lambda_max_asymptotic(&p) - 200.0).abs() < 1e-12);
    }

    #[test]
    fn concentration_scalar() {
        let mat = build_matrix(&params(4, 0, 2, 0.0));
        let pair = leading_eigenvector(&mat, lambda_max(&mat)).unwrap();
        assert_eq!(concentration_stats(&pair), (0, 0.0));
    }

    #[test]
    fn lambda_deterministic() {
        let mat = build_matrix(&params(3000, 390, 2, 0.5));
        let a = lambda_max(&mat);
        let b = lambda_max(&mat);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn from_bands_validation() {
        assert!(TridiagonalMatrix::from_bands(vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(TridiagonalMatrix::from_bands(vec![1.0, 2.0], vec![1.0, 1.0]).is_err());
        assert!(TridiagonalMatrix::from_bands(vec![1.0, 2.0], vec![1.0]).is_ok());
    }
}
