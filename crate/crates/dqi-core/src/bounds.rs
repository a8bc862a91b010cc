//! Lower bounds on the expected MAX-LINSAT objective under imperfect
//! decoding, in objective-f units and satisfaction-ratio (s/m) units.
//!
//! With λ the largest DQI eigenvalue, w its positive unit eigenvector and
//! ε_k the per-layer failure rates:
//!
//! - weighted-rate (master) bound: `f ≥ (λ(1−2ε̄) + 2dη̄)/(1−ε̄)`;
//! - Jordan relaxed: `f ≥ λ − 2ε(q−1)(m+1)`, the operator-norm penalty
//!   with the worst layer rate ε;
//! - Jordan tight: the same numerator over the exact denominator `1−ε̄`;
//! - semicircle: the perfect-decoding value (finite-m: λ itself).
//!
//! All f values convert to ratios by `s/m = 1/q + (q−1)/(2q)·(f/m)`;
//! random assignment sits at `1/q`. Regime classification happens in
//! ratio units.

use crate::profile::{weighted_rates, FailureProfile, WeightedRates};
use crate::spectral::{
    build_matrix, lambda_max, leading_eigenvector, DqiParams, SpectralPair, TridiagonalMatrix,
};
use crate::{DqiError, Result};

/// Weighted-rate lower bound `(λ(1−2ε̄) + 2dη̄)/(1−ε̄)` in f units.
pub fn master_bound(lambda: f64, rates: &WeightedRates, d: f64) -> Result<f64> {
    check_eps_bar(rates.eps_bar)?;
    Ok((lambda * (1.0 - 2.0 * rates.eps_bar) + 2.0 * d * rates.eta_bar) / (1.0 - rates.eps_bar))
}

/// Worst-layer bound `λ − 2ε(q−1)(m+1)` in f units.
pub fn jordan_relaxed(lambda: f64, eps_max: f64, q: u32, m: usize) -> f64 {
    lambda - 2.0 * eps_max * (q - 1) as f64 * (m as f64 + 1.0)
}

/// Worst-layer bound with the exact denominator:
/// `(λ − 2ε(q−1)(m+1)) / (1−ε̄)`.
pub fn jordan_tight(lambda: f64, eps_max: f64, eps_bar: f64, q: u32, m: usize) -> Result<f64> {
    check_eps_bar(eps_bar)?;
    Ok(jordan_relaxed(lambda, eps_max, q, m) / (1.0 - eps_bar))
}

fn check_eps_bar(eps_bar: f64) -> Result<()> {
    if eps_bar >= 1.0 {
        Err(DqiError::DegenerateProfile { eps_bar })
    } else {
        Ok(())
    }
}

/// Worst-case error quadratic form `wᵀEw` with the off-diagonal entries
/// of E saturated at `(ε_k + ε_{k+1})·a_{k+1}`:
///
/// `2·Σ_{k=0}^{ℓ−1} (ε_k + ε_{k+1})·w_k·a_{k+1}·w_{k+1}`
///
/// For the exact eigenpair this equals `2(λ·ε̄ − d·η̄)` identically — the
/// cancellation identity that the acceptance suite checks as a dual route
/// through λ, w, ε̄ and η̄.
pub fn exact_error_quadform(
    matrix: &TridiagonalMatrix,
    pair: &SpectralPair,
    profile: &FailureProfile,
) -> Result<f64> {
    let n = matrix.dim();
    if pair.dim() != n {
        return Err(DqiError::DimensionMismatch {
            expected: n,
            got: pair.dim(),
        });
    }
    let off = matrix.offdiag();
    let mut sum = 0.0;
    let mut c = 0.0;
    #[allow(clippy::needless_range_loop)]
    for k in 0..n - 1 {
        let term = (profile.rate(k) + profile.rate(k + 1)) * pair.w[k] * off[k] * pair.w[k + 1] - c;
        let t = sum + term;
        c = (t - sum) - term;
        sum = t;
    }
    Ok(2.0 * sum)
}

/// Perfect-decoding satisfaction ratio in the large-m limit:
/// `1/q + ((q−1)/q)·sqrt((q−1)·μ(1−μ))`.
pub fn semicircle_ratio(mu: f64, q: u32) -> f64 {
    let qf = q as f64;
    let qm1 = qf - 1.0;
    1.0 / qf + (qm1 / qf) * (qm1 * mu * (1.0 - mu)).sqrt()
}

/// Asymptotic weighted-rate satisfaction ratio:
/// `1/q + ((q−1)/q)·sqrt((q−1)μ(1−μ))·(1−2ε̄)/(1−ε̄)`.
pub fn asymptotic_master_ratio(mu: f64, q: u32, eps_bar: f64) -> Result<f64> {
    check_eps_bar(eps_bar)?;
    let qf = q as f64;
    let qm1 = qf - 1.0;
    Ok(1.0 / qf
        + (qm1 / qf) * (qm1 * mu * (1.0 - mu)).sqrt() * (1.0 - 2.0 * eps_bar) / (1.0 - eps_bar))
}

/// Asymptotic worst-layer satisfaction ratio:
/// `1/q + ((q−1)/q)·(sqrt((q−1)μ(1−μ)) − ε(q−1))`.
pub fn asymptotic_jordan_ratio(mu: f64, q: u32, eps_max: f64) -> f64 {
    let qf = q as f64;
    let qm1 = qf - 1.0;
    1.0 / qf + (qm1 / qf) * ((qm1 * mu * (1.0 - mu)).sqrt() - eps_max * qm1)
}

/// Uniform failure rate at which the worst-layer bound crosses the random
/// baseline: `ε_crit = sqrt((q−1)μ(1−μ))/(q−1)`.
pub fn epsilon_crit(mu: f64, q: u32) -> f64 {
    let qm1 = q as f64 - 1.0;
    (qm1 * mu * (1.0 - mu)).sqrt() / qm1
}

/// Asymptotic ratio-unit gap between the weighted-rate and worst-layer
/// bounds, with its two structural factors.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ImprovementDelta {
    /// `((q−1)/q)·[ε(q−1) − sqrt((q−1)μ(1−μ))·ε̄/(1−ε̄)]`.
    pub delta: f64,
    /// Max-to-weighted shrinkage ε̄/ε, `None` when ε = 0.
    pub shrinkage: Option<f64>,
    /// Norm-to-Rayleigh rescaling `λ/((m+1)(q−1))` in the large-m limit,
    /// i.e. `2·sqrt((q−1)μ(1−μ))/(q−1)`.
    pub rescale: f64,
}

/// Decomposed improvement of the weighted-rate bound over the relaxed
/// worst-layer bound (asymptotic, ratio units).
pub fn improvement_delta(mu: f64, q: u32, eps_max: f64, eps_bar: f64) -> Result<ImprovementDelta> {
    check_eps_bar(eps_bar)?;
    let qf = q as f64;
    let qm1 = qf - 1.0;
    let root = (qm1 * mu * (1.0 - mu)).sqrt();
    let delta = (qm1 / qf) * (eps_max * qm1 - root * eps_bar / (1.0 - eps_bar));
    let shrinkage = if eps_max > 0.0 {
        Some(eps_bar / eps_max)
    } else {
        None
    };
    Ok(ImprovementDelta {
        delta,
        shrinkage,
        rescale: 2.0 * root / qm1,
    })
}

/// Convert an objective-f bound to a satisfaction ratio:
/// `s/m = 1/q + (q−1)/(2q)·(f/m)`.
pub fn f_to_ratio(f: f64, m: usize, q: u32) -> f64 {
    let qf = q as f64;
    1.0 / qf + (qf - 1.0) / (2.0 * qf) * (f / m as f64)
}

/// Validity pattern of the two bound families against the random
/// baseline 1/q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Regime {
    /// Both the weighted-rate and the worst-layer bound certify advantage.
    BothValid,
    /// Only the weighted-rate bound certifies advantage.
    BlindSpot,
    /// Neither does.
    BothVacuous,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::BothValid => "BothValid",
            Regime::BlindSpot => "BlindSpot",
            Regime::BothVacuous => "BothVacuous",
        };
        f.write_str(s)
    }
}

fn classify(sm_master: f64, sm_jordan_relaxed: f64, q: u32) -> Regime {
    let baseline = 1.0 / q as f64;
    match (sm_jordan_relaxed > baseline, sm_master > baseline) {
        (true, true) => Regime::BothValid,
        (false, true) => Regime::BlindSpot,
        _ => Regime::BothVacuous,
    }
}

/// Every bound for one instance, in f units and ratio units.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BoundReport {
    pub params: DqiParams,
    pub mu: f64,
    pub lambda_max: f64,
    pub rates: WeightedRates,
    pub f_master: f64,
    pub f_jordan_tight: f64,
    pub f_jordan_relaxed: f64,
    pub f_semicircle: f64,
    pub f_exact_quadform: f64,
    pub sm_master: f64,
    pub sm_jordan_tight: f64,
    pub sm_jordan_relaxed: f64,
    pub sm_semicircle: f64,
    pub sm_exact_quadform: f64,
    pub regime: Regime,
    /// sm_master − sm_jordan_relaxed.
    pub delta_improvement: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str =
        "ell,mu,eps,eps_bar,ratio,jordan_relaxed,jordan_tight,master,semicircle,exact,regime";

    /// Flat CSV row (ratio units, 6 significant digits).
    pub fn csv_row(&self) -> String {
        use crate::fmt::sig6;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.params.ell,
            sig6(self.mu),
            sig6(self.rates.eps_max),
            sig6(self.rates.eps_bar),
            self.rates.ratio.map(sig6).unwrap_or_default(),
            sig6(self.sm_jordan_relaxed),
            sig6(self.sm_jordan_tight),
            sig6(self.sm_master),
            sig6(self.sm_semicircle),
            sig6(self.sm_exact_quadform),
            self.regime
        )
    }

    /// Structured JSON object (full precision).
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialization cannot fail")
    }
}

/// Evaluate every bound for `params` against `profile`.
pub fn full_report(params: &DqiParams, profile: &FailureProfile) -> Result<BoundReport> {
    let matrix = build_matrix(params);
    let lambda = lambda_max(&matrix);
    let pair = leading_eigenvector(&matrix, lambda)?;
    report_for_pair(params, &matrix, &pair, profile)
}

/// Same as [`full_report`] with a precomputed eigenpair (grid drivers
/// reuse the pair across several bound evaluations).
pub fn report_for_pair(
    params: &DqiParams,
    matrix: &TridiagonalMatrix,
    pair: &SpectralPair,
    profile: &FailureProfile,
) -> Result<BoundReport> {
    let lambda = pair.lambda_max;
    let rates = weighted_rates(profile, pair, params.ell)?;
    let f_master = master_bound(lambda, &rates, params.d)?;
    let f_jordan_relaxed = jordan_relaxed(lambda, rates.eps_max, params.q, params.m);
    let f_jordan_tight = jordan_tight(lambda, rates.eps_max, rates.eps_bar, params.q, params.m)?;
    let f_semicircle = lambda;
    let quadform = exact_error_quadform(matrix, pair, profile)?;
    let f_exact_quadform = (lambda - quadform) / (1.0 - rates.eps_bar);

    let (m, q) = (params.m, params.q);
    let sm_master = f_to_ratio(f_master, m, q);
    let sm_jordan_relaxed = f_to_ratio(f_jordan_relaxed, m, q);
    let sm_jordan_tight = f_to_ratio(f_jordan_tight, m, q);
    let sm_semicircle = f_to_ratio(f_semicircle, m, q);
    let sm_exact_quadform = f_to_ratio(f_exact_quadform, m, q);
    let regime = classify(sm_master, sm_jordan_relaxed, q);

    Ok(BoundReport {
        params: *params,
        mu: params.mu(),
        lambda_max: lambda,
        rates,
        f_master,
        f_jordan_tight,
        f_jordan_relaxed,
        f_semicircle,
        f_exact_quadform,
        sm_master,
        sm_jordan_tight,
        sm_jordan_relaxed,
        sm_semicircle,
        sm_exact_quadform,
        regime,
        delta_improvement: sm_master - sm_jordan_relaxed,
    })
}
