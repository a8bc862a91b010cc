//! Per-Hamming-layer decoding failure rates ε_k and their
//! eigenvector-weighted summaries.
//!
//! Profiles come from two sources: parsed belief-propagation shot logs
//! (lines `k: r_k (n_k)`, with ε_k = 1 − r_k) or a three-stage parametric
//! threshold model. Either way the scalar inputs to the bounds are
//!
//! - ε  = max_{0≤k≤ℓ} ε_k          (worst layer),
//! - ε̄  = Σ_k ε_k w_k²             (weighted rate),
//! - η̄  = Σ_k k ε_k w_k²           (weighted moment).

use crate::spectral::SpectralPair;
use crate::{DqiError, Result};

/// One parsed shot-log line: `k: r_k (n_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotRecord {
    /// Hamming weight.
    pub k: usize,
    /// Empirical decode success rate, in [0, 1].
    pub r: f64,
    /// Shot count, ≥ 1.
    pub n: u64,
}

/// Shot-log parse result: records plus non-fatal warnings (duplicate
/// layers, out-of-range layers are reported by the profile builder).
#[derive(Debug, Clone, Default)]
pub struct ShotLog {
    pub records: Vec<ShotRecord>,
    pub warnings: Vec<String>,
}

/// Parse a line-oriented shot log.
///
/// Each non-empty line must match `k: r (n)`; surrounding whitespace is
/// tolerated. Duplicate weights keep the last occurrence and emit a
/// warning. Empty input yields an empty record list.
pub fn parse_shot_log(text: &str) -> Result<ShotLog> {
    let mut log = ShotLog::default();
    let mut seen_at: Vec<(usize, usize)> = Vec::new(); // (k, index into records)
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let rec = parse_line(line).ok_or_else(|| DqiError::ShotLogParse {
            line: line_no,
            text: raw.to_string(),
        })?;
        match seen_at.iter().find(|(k, _)| *k == rec.k) {
            Some(&(_, pos)) => {
                log.warnings.push(format!(
                    "line {line_no}: duplicate weight k={}, keeping last occurrence",
                    rec.k
                ));
                log.records[pos] = rec;
            }
            None => {
                seen_at.push((rec.k, log.records.len()));
                log.records.push(rec);
            }
        }
    }
    Ok(log)
}

fn parse_line(line: &str) -> Option<ShotRecord> {
    let (k_part, rest) = line.split_once(':')?;
    let k: usize = k_part.trim().parse().ok()?;
    let rest = rest.trim();
    let (r_part, n_part) = rest.split_once('(')?;
    let r: f64 = r_part.trim().parse().ok()?;
    let n_str = n_part.trim().strip_suffix(')')?;
    let n: u64 = n_str.trim().parse().ok()?;
    if !(0.0..=1.0).contains(&r) || n == 0 {
        return None;
    }
    Some(ShotRecord { k, r, n })
}

/// How a profile was produced, which also fixes its extension rule for
/// layers above `k_max`.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Parsed shot data; unrecorded layers (inside or beyond the data
    /// range) have ε_k = 0.
    ShotData { source: String },
    /// Three-stage parametric model; layers beyond `k_max` evaluate the
    /// model.
    Parametric(BpModelParams),
    /// Directly supplied rates; zero beyond `k_max`.
    Synthetic,
}

/// Per-layer failure rates ε_k for k = 0..k_max, each in [0, 1].
#[derive(Debug, Clone)]
pub struct FailureProfile {
    eps: Vec<f64>,
    provenance: Provenance,
}

impl FailureProfile {
    /// Build from explicit rates (ε_k for k = 0..eps.len()−1).
    pub fn from_eps(eps: Vec<f64>) -> Result<Self> {
        if eps.is_empty() {
            return Err(DqiError::ParamDomain("empty failure profile".into()));
        }
        if eps.iter().any(|&e| !(0.0..=1.0).contains(&e)) {
            return Err(DqiError::ParamDomain(
                "failure rates must lie in [0, 1]".into(),
            ));
        }
        Ok(Self {
            eps,
            provenance: Provenance::Synthetic,
        })
    }

    /// Largest layer with an explicitly stored rate.
    pub fn k_max(&self) -> usize {
        self.eps.len() - 1
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// ε_k, applying the provenance extension rule above `k_max`.
    pub fn rate(&self, k: usize) -> f64 {
        if k < self.eps.len() {
            return self.eps[k];
        }
        match &self.provenance {
            Provenance::Parametric(bp) => bp.eval(k),
            Provenance::ShotData { .. } | Provenance::Synthetic => 0.0,
        }
    }

    /// Stored rates, k = 0..k_max.
    pub fn rates(&self) -> &[f64] {
        &self.eps
    }

    /// CSV export, header `k,eps_k`, one row per stored layer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,eps_k\n");
        for (k, &e) in self.eps.iter().enumerate() {
            out.push_str(&format!("{k},{}\n", crate::fmt::sig6(e)));
        }
        out
    }
}

/// Build a profile from shot records: ε_k = 1 − r_k for recorded layers
/// up to `k_cap`, zero elsewhere. Records above `k_cap` are dropped with
/// a warning.
pub fn profile_from_shots(records: &[ShotRecord], k_cap: usize) -> (FailureProfile, Vec<String>) {
    let mut eps = vec![0.0; k_cap + 1];
    let mut warnings = Vec::new();
    let mut source_range = (usize::MAX, 0usize);
    for rec in records {
        if rec.k > k_cap {
            warnings.push(format!(
                "record at weight k={} exceeds data range bound {k_cap}; dropped",
                rec.k
            ));
            continue;
        }
        eps[rec.k] = (1.0 - rec.r).clamp(0.0, 1.0);
        source_range.0 = source_range.0.min(rec.k);
        source_range.1 = source_range.1.max(rec.k);
    }
    let profile = FailureProfile {
        eps,
        provenance: Provenance::ShotData {
            source: if source_range.0 == usize::MAX {
                "empty".to_string()
            } else {
                format!("k in [{}, {}]", source_range.0, source_range.1)
            },
        },
    };
    (profile, warnings)
}

/// Wilson score upper confidence bound (z = 1.96) for a failure
/// probability estimated as `failures / n`. Optional pessimistic
/// replacement for the raw ε_k = 1 − r_k when shot counts are small.
pub fn wilson_upper(failures: f64, n: f64) -> f64 {
    const Z: f64 = 1.959963984540054;
    if n <= 0.0 {
        return 1.0;
    }
    let p = (failures / n).clamp(0.0, 1.0);
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center + half) / denom).clamp(0.0, 1.0)
}

/// Build a profile from shot records with each ε_k replaced by its Wilson
/// upper confidence bound. Layers without records stay at zero.
pub fn profile_from_shots_wilson(
    records: &[ShotRecord],
    k_cap: usize,
) -> (FailureProfile, Vec<String>) {
    let (mut base, warnings) = profile_from_shots(records, k_cap);
    for rec in records {
        if rec.k <= k_cap {
            let failures = (1.0 - rec.r) * rec.n as f64;
            base.eps[rec.k] = wilson_upper(failures, rec.n as f64);
        }
    }
    (base, warnings)
}

/// Three-stage parametric threshold model for belief-propagation decoding.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BpModelParams {
    /// Below this weight decoding is perfect (ε_k = 0).
    pub k_perf: usize,
    /// Quadratic onset ends here with ε = eps_low.
    pub k_thresh: usize,
    /// Geometric growth ends here with ε = eps_high; saturation follows.
    pub k_fail: usize,
    pub eps_low: f64,
    pub eps_high: f64,
}

impl BpModelParams {
    pub fn new(
        k_perf: usize,
        k_thresh: usize,
        k_fail: usize,
        eps_low: f64,
        eps_high: f64,
    ) -> Result<Self> {
        if !(k_perf < k_thresh && k_thresh < k_fail) {
            return Err(DqiError::ParamDomain(format!(
                "model thresholds must satisfy k_perf < k_thresh < k_fail, got {k_perf}, {k_thresh}, {k_fail}"
            )));
        }
        if !(eps_low > 0.0 && eps_low < eps_high && eps_high < 1.0) {
            return Err(DqiError::ParamDomain(format!(
                "model rates must satisfy 0 < eps_low < eps_high < 1, got {eps_low}, {eps_high}"
            )));
        }
        Ok(Self {
            k_perf,
            k_thresh,
            k_fail,
            eps_low,
            eps_high,
        })
    }

    /// Reference parameters for m = 50000.
    pub fn reference() -> Self {
        Self {
            k_perf: 6000,
            k_thresh: 6400,
            k_fail: 7500,
            eps_low: 0.003,
            eps_high: 0.5,
        }
    }

    /// Reference parameters rescaled to another constraint count;
    /// thresholds scale linearly in m so the stages keep their μ
    /// positions (m = 5000 → 600 / 640 / 750).
    pub fn scaled_to(m: usize) -> Self {
        let r = Self::reference();
        let scale = |k: usize| ((k * m) as f64 / 50000.0).round() as usize;
        Self {
            k_perf: scale(r.k_perf),
            k_thresh: scale(r.k_thresh),
            k_fail: scale(r.k_fail),
            eps_low: r.eps_low,
            eps_high: r.eps_high,
        }
    }

    /// Evaluate ε_k.
    ///
    /// Stage 1: 0 below `k_perf`. Stage 2: quadratic ramp to `eps_low` at
    /// `k_thresh`. Stage 3: geometric interpolation to `eps_high` at
    /// `k_fail`. Stage 4: saturation `1 − (1 − eps_high)·exp(−(k−k_fail)/s)`
    /// with `s = 4.5·(k_fail − k_thresh)`, continuous at `k_fail` and tending
    /// to 1. The saturation scale is calibrated against the positive-offset
    /// expansion of the advantage region (a faster tail makes the region
    /// edge insensitive to the offset).
    pub fn eval(&self, k: usize) -> f64 {
        let v = if k < self.k_perf {
            0.0
        } else if k < self.k_thresh {
            let t = (k - self.k_perf) as f64 / (self.k_thresh - self.k_perf) as f64;
            self.eps_low * t * t
        } else if k < self.k_fail {
            let t = (k - self.k_thresh) as f64 / (self.k_fail - self.k_thresh) as f64;
            self.eps_low * (self.eps_high / self.eps_low).powf(t)
        } else {
            let s = 4.5 * (self.k_fail - self.k_thresh) as f64;
            1.0 - (1.0 - self.eps_high) * (-((k - self.k_fail) as f64) / s).exp()
        };
        v.clamp(0.0, 1.0)
    }
}

/// Materialize the parametric model on layers 0..k_max.
pub fn parametric_profile(bp: &BpModelParams, k_max: usize) -> FailureProfile {
    let eps = (0..=k_max).map(|k| bp.eval(k)).collect();
    FailureProfile {
        eps,
        provenance: Provenance::Parametric(*bp),
    }
}

/// Scalar failure summaries against a leading eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WeightedRates {
    /// ε = max_{0≤k≤ℓ} ε_k.
    pub eps_max: f64,
    /// ε̄ = Σ_k ε_k w_k².
    pub eps_bar: f64,
    /// η̄ = Σ_k k ε_k w_k².
    pub eta_bar: f64,
    /// ε̄/ε, `None` when ε = 0.
    pub ratio: Option<f64>,
}

/// Compute ε, ε̄, η̄ over layers 0..ℓ. The eigenvector must have dimension
/// ℓ+1; the profile extends to ℓ via its provenance rule.
pub fn weighted_rates(
    profile: &FailureProfile,
    pair: &SpectralPair,
    ell: usize,
) -> Result<WeightedRates> {
    if pair.dim() != ell + 1 {
        return Err(DqiError::DimensionMismatch {
            expected: ell + 1,
            got: pair.dim(),
        });
    }
    let mut eps_max = 0.0f64;
    let mut eps_bar = 0.0;
    let mut eta_bar = 0.0;
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    for k in 0..=ell {
        let e = profile.rate(k);
        eps_max = eps_max.max(e);
        let wk2 = pair.weight(k);
        let t1 = e * wk2 - c1;
        let s1 = eps_bar + t1;
        c1 = (s1 - eps_bar) - t1;
        eps_bar = s1;
        let t2 = k as f64 * e * wk2 - c2;
        let s2 = eta_bar + t2;
        c2 = (s2 - eta_bar) - t2;
        eta_bar = s2;
    }
    let ratio = if eps_max > 0.0 {
        Some(eps_bar / eps_max)
    } else {
        None
    };
    Ok(WeightedRates {
        eps_max,
        eps_bar,
        eta_bar,
        ratio,
    })
}
