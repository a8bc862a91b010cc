//! Deterministic grid-scan drivers: blind-spot scans over ℓ, uniform-rate
//! phase diagrams, operating-point optimization, field-order comparisons,
//! offset sweeps, finite-vs-asymptotic agreement, eigenvector verification
//! and weighted-rate scans.
//!
//! Every grid point is an independent pure evaluation; drivers fan out
//! over available workers and merge results in grid order, so output is
//! byte-identical for any worker count. Each driver emits a CSV table and
//! a JSON summary.

use crate::bounds::{
    self, asymptotic_jordan_ratio, f_to_ratio, improvement_delta, BoundReport, Regime,
};
use crate::exec::map_ordered;
use crate::fmt::sig6;
use crate::profile::{
    parametric_profile, weighted_rates, BpModelParams, FailureProfile, WeightedRates,
};
use crate::spectral::{
    build_matrix, concentration_stats, lambda_max, lambda_max_asymptotic, leading_eigenvector,
    DqiParams,
};
use crate::{DqiError, Result};
use serde_json::json;

/// Inclusive floating grid `start, start+step, ..., stop`.
pub fn float_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(DqiError::ParamDomain(format!(
            "invalid grid {start}:{stop}:{step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Inclusive integer grid.
pub fn int_grid(start: usize, stop: usize, step: usize) -> Result<Vec<usize>> {
    if step == 0 || stop < start {
        return Err(DqiError::ParamDomain(format!(
            "invalid grid {start}:{stop}:{step}"
        )));
    }
    Ok((start..=stop).step_by(step).collect())
}

/// A family of failure profiles indexed by the degree ℓ.
#[derive(Debug, Clone)]
pub enum ProfileFamily {
    /// Perfect decoding at every layer.
    Zero,
    /// The same rate at every layer.
    Uniform(f64),
    /// Three-stage parametric model, evaluated out to layer ℓ.
    Parametric(BpModelParams),
}

impl ProfileFamily {
    pub fn profile(&self, ell: usize) -> FailureProfile {
        match self {
            ProfileFamily::Zero => {
                FailureProfile::from_eps(vec![0.0; ell + 1]).expect("zero profile is always valid")
            }
            ProfileFamily::Uniform(e) => {
                FailureProfile::from_eps(vec![*e; ell + 1]).expect("validated uniform rate")
            }
            ProfileFamily::Parametric(bp) => parametric_profile(bp, ell),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProfileFamily::Zero => "zero".to_string(),
            ProfileFamily::Uniform(e) => format!("uniform({e})"),
            ProfileFamily::Parametric(_) => "parametric".to_string(),
        }
    }
}

/// One scan row: the independent variable plus the full bound report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanRow {
    pub experiment: &'static str,
    pub var: &'static str,
    pub value: f64,
    pub report: BoundReport,
}

impl ScanRow {
    pub fn csv_header() -> String {
        format!("experiment,var,value,{}", BoundReport::CSV_HEADER)
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.experiment,
            self.var,
            sig6(self.value),
            self.report.csv_row()
        )
    }
}

fn rows_csv(rows: &[ScanRow]) -> String {
    let mut out = ScanRow::csv_header();
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}

/// Evaluate a report, mapping a fully saturated profile (ε̄ = 1, every
/// bound with a 1−ε̄ denominator diverges to −∞) to a vacuous row instead
/// of an error, so scans keep one row per grid point.
fn report_lenient(params: &DqiParams, profile: &FailureProfile) -> Result<BoundReport> {
    match bounds::full_report(params, profile) {
        Err(DqiError::DegenerateProfile { .. }) => {
            let matrix = build_matrix(params);
            let lambda = lambda_max(&matrix);
            let pair = leading_eigenvector(&matrix, lambda)?;
            let rates = weighted_rates(profile, &pair, params.ell)?;
            let f_jordan_relaxed =
                bounds::jordan_relaxed(lambda, rates.eps_max, params.q, params.m);
            let sm_jordan_relaxed = f_to_ratio(f_jordan_relaxed, params.m, params.q);
            Ok(BoundReport {
                params: *params,
                mu: params.mu(),
                lambda_max: lambda,
                rates,
                f_master: f64::NEG_INFINITY,
                f_jordan_tight: f64::NEG_INFINITY,
                f_jordan_relaxed,
                f_semicircle: lambda,
                f_exact_quadform: f64::NEG_INFINITY,
                sm_master: f64::NEG_INFINITY,
                sm_jordan_tight: f64::NEG_INFINITY,
                sm_jordan_relaxed,
                sm_semicircle: f_to_ratio(lambda, params.m, params.q),
                sm_exact_quadform: f64::NEG_INFINITY,
                regime: Regime::BothVacuous,
                delta_improvement: f64::NEG_INFINITY,
            })
        }
        other => other,
    }
}

/// Longest run of consecutive rows classified as [`Regime::BlindSpot`].
/// Ties keep the earliest run. Returns `(start_ell, stop_ell, count)`.
fn blind_spot_interval(rows: &[ScanRow]) -> Option<(usize, usize, usize)> {
    let regimes: Vec<(usize, Regime)> = rows
        .iter()
        .map(|r| (r.report.params.ell, r.report.regime))
        .collect();
    longest_blind_run(&regimes)
}

fn longest_blind_run(rows: &[(usize, Regime)]) -> Option<(usize, usize, usize)> {
    let mut best: Option<(usize, usize, usize)> = None;
    let mut start: Option<usize> = None;
    for (i, &(_, regime)) in rows.iter().enumerate() {
        let blind = regime == Regime::BlindSpot;
        if blind && start.is_none() {
            start = Some(i);
        }
        if !blind || i + 1 == rows.len() {
            if let Some(s) = start.take() {
                let e = if blind { i } else { i - 1 };
                let count = e - s + 1;
                if best.is_none_or(|(_, _, c)| count > c) {
                    best = Some((rows[s].0, rows[e].0, count));
                }
            }
        }
    }
    best
}

/// Blind-spot scan over a grid of degrees ℓ against a fixed profile.
#[derive(Debug)]
pub struct BlindspotScan {
    pub rows: Vec<ScanRow>,
    /// `(first_ell, last_ell, points)` of the longest blind-spot run.
    pub interval: Option<(usize, usize, usize)>,
}

pub fn blindspot_scan(
    m: usize,
    q: u32,
    d: f64,
    ells: &[usize],
    profile: &FailureProfile,
) -> Result<BlindspotScan> {
    let profile_ref = &profile;
    let reports: Vec<Result<BoundReport>> = map_ordered(ells.to_vec(), move |ell| {
        let params = DqiParams::new(m, ell, q, d)?;
        report_lenient(&params, profile_ref)
    });
    let mut rows = Vec::with_capacity(reports.len());
    for rep in reports {
        let report = rep?;
        rows.push(ScanRow {
            experiment: "blindspot",
            var: "ell",
            value: report.params.ell as f64,
            report,
        });
    }
    let interval = blind_spot_interval(&rows);
    Ok(BlindspotScan { rows, interval })
}

impl BlindspotScan {
    pub fn to_csv(&self) -> String {
        rows_csv(&self.rows)
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "experiment": "blindspot",
            "rows": self.rows.len(),
            "blind_spot": self.interval.map(|(a, b, n)| json!({
                "ell_start": a, "ell_stop": b, "points": n
            })),
        })
    }

    /// One-line human summary.
    pub fn headline(&self) -> String {
        match self.interval {
            Some((a, b, n)) => format!("blind spot: ell in [{a}, {b}] ({n} points)"),
            None => "blind spot: none".to_string(),
        }
    }
}

/// One cell of the uniform-rate phase diagram.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PhaseCell {
    pub mu: f64,
    pub eps_uniform: f64,
    pub regime: Regime,
    pub delta: f64,
}

/// Phase diagram in the (μ, uniform ε) plane, classified with the
/// asymptotic ratios.
#[derive(Debug)]
pub struct PhaseDiagram {
    pub m: usize,
    pub q: u32,
    pub cells: Vec<PhaseCell>,
    /// Cells where the improvement Δ comes out negative (a small-ε
    /// numerical effect; recorded, never suppressed).
    pub negative_delta: usize,
}

pub fn phase_diagram(mu_grid: &[f64], eps_grid: &[f64], m: usize, q: u32) -> Result<PhaseDiagram> {
    if mu_grid.iter().any(|&mu| !(0.0 < mu && mu < 1.0))
        || eps_grid.iter().any(|&e| !(0.0..1.0).contains(&e))
    {
        return Err(DqiError::ParamDomain(
            "phase diagram grids must have mu in (0,1) and eps in [0,1)".into(),
        ));
    }
    let points: Vec<(f64, f64)> = mu_grid
        .iter()
        .flat_map(|&mu| eps_grid.iter().map(move |&e| (mu, e)))
        .collect();
    let cells = map_ordered(points, |(mu, eps)| {
        let master = bounds::asymptotic_master_ratio(mu, q, eps).expect("eps < 1 checked above");
        let jordan = asymptotic_jordan_ratio(mu, q, eps);
        let baseline = 1.0 / q as f64;
        let regime = match (jordan > baseline, master > baseline) {
            (true, true) => Regime::BothValid,
            (false, true) => Regime::BlindSpot,
            _ => Regime::BothVacuous,
        };
        let delta = improvement_delta(mu, q, eps, eps)
            .expect("eps < 1 checked above")
            .delta;
        PhaseCell {
            mu,
            eps_uniform: eps,
            regime,
            delta,
        }
    });
    let negative_delta = cells.iter().filter(|c| c.delta < 0.0).count();
    Ok(PhaseDiagram {
        m,
        q,
        cells,
        negative_delta,
    })
}

impl PhaseDiagram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu,eps,regime,delta\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{}\n",
                sig6(c.mu),
                sig6(c.eps_uniform),
                c.regime,
                sig6(c.delta)
            ));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        let count = |r: Regime| self.cells.iter().filter(|c| c.regime == r).count();
        json!({
            "experiment": "phase",
            "m": self.m,
            "q": self.q,
            "cells": self.cells.len(),
            "both_valid": count(Regime::BothValid),
            "blind_spot": count(Regime::BlindSpot),
            "both_vacuous": count(Regime::BothVacuous),
            "negative_delta_cells": self.negative_delta,
        })
    }
}

/// Operating-point optimization: argmax of the weighted-rate bound over μ.
#[derive(Debug)]
pub struct OptimalMu {
    pub rows: Vec<ScanRow>,
    pub mu_star: f64,
    pub ratio_star: f64,
}

pub fn optimal_mu(
    m: usize,
    q: u32,
    d: f64,
    family: &ProfileFamily,
    mu_grid: &[f64],
) -> Result<OptimalMu> {
    let rows = scan_mu("optimal-mu", m, q, d, family, mu_grid)?;
    // argmax with ties broken toward smaller mu (strict improvement only)
    let mut mu_star = f64::NAN;
    let mut ratio_star = f64::NEG_INFINITY;
    for row in &rows {
        if row.report.sm_master > ratio_star {
            ratio_star = row.report.sm_master;
            mu_star = row.value;
        }
    }
    Ok(OptimalMu {
        rows,
        mu_star,
        ratio_star,
    })
}

impl OptimalMu {
    pub fn to_csv(&self) -> String {
        rows_csv(&self.rows)
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "experiment": "optimal-mu",
            "mu_star": self.mu_star,
            "ratio_star": self.ratio_star,
            "rows": self.rows.len(),
        })
    }
}

fn scan_mu(
    experiment: &'static str,
    m: usize,
    q: u32,
    d: f64,
    family: &ProfileFamily,
    mu_grid: &[f64],
) -> Result<Vec<ScanRow>> {
    let reports: Vec<Result<(f64, BoundReport)>> = map_ordered(mu_grid.to_vec(), |mu| {
        let ell = ((m as f64) * mu).round() as usize;
        let params = DqiParams::new(m, ell, q, d)?;
        let profile = family.profile(ell);
        Ok((mu, report_lenient(&params, &profile)?))
    });
    let mut rows = Vec::with_capacity(reports.len());
    for rep in reports {
        let (mu, report) = rep?;
        rows.push(ScanRow {
            experiment,
            var: "mu",
            value: mu,
            report,
        });
    }
    Ok(rows)
}

/// First grid μ at which a bound drops to (or below) the 1/q baseline
/// after having certified advantage at some smaller μ.
fn vacuity_onset(values: &[(f64, f64)], baseline: f64) -> Option<f64> {
    let mut seen_valid = false;
    for &(mu, v) in values {
        if v > baseline {
            seen_valid = true;
        } else if seen_valid {
            return Some(mu);
        }
    }
    None
}

/// Per-field-order comparison of both bounds over μ.
#[derive(Debug)]
pub struct QComparison {
    pub rows: Vec<ScanRow>,
    /// `(q, jordan_onset, master_onset)` vacuity onsets in μ.
    pub onsets: Vec<(u32, Option<f64>, Option<f64>)>,
}

pub fn q_comparison(
    m: usize,
    qs: &[u32],
    d: f64,
    family: &ProfileFamily,
    mu_grid: &[f64],
) -> Result<QComparison> {
    let mut rows = Vec::new();
    let mut onsets = Vec::new();
    for &q in qs {
        let q_rows = scan_mu("qcompare", m, q, d, family, mu_grid)?;
        let baseline = 1.0 / q as f64;
        let jordan: Vec<(f64, f64)> = q_rows
            .iter()
            .map(|r| (r.value, r.report.sm_jordan_relaxed))
            .collect();
        let master: Vec<(f64, f64)> = q_rows
            .iter()
            .map(|r| (r.value, r.report.sm_master))
            .collect();
        onsets.push((
            q,
            vacuity_onset(&jordan, baseline),
            vacuity_onset(&master, baseline),
        ));
        rows.extend(q_rows);
    }
    Ok(QComparison { rows, onsets })
}

impl QComparison {
    pub fn to_csv(&self) -> String {
        let mut out = format!("q,{}\n", ScanRow::csv_header());
        for row in &self.rows {
            out.push_str(&format!("{},{}\n", row.report.params.q, row.csv_row()));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "experiment": "qcompare",
            "onsets": self.onsets.iter().map(|(q, j, ma)| json!({
                "q": q, "jordan_vacuity_mu": j, "master_vacuity_mu": ma
            })).collect::<Vec<_>>(),
        })
    }
}

/// Advantage-region measurement for one diagonal offset.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DSweepLine {
    pub d: f64,
    /// Measure (grid-cell sum) of {μ : weighted-rate bound > 1/q + 1e−9}.
    pub advantage_width: f64,
    pub sm_at_mu_127: f64,
    pub sm_at_mu_130: f64,
}

/// Diagonal-offset sweep.
#[derive(Debug)]
pub struct DSweep {
    pub rows: Vec<ScanRow>,
    pub lines: Vec<DSweepLine>,
    mu_step: f64,
}

pub fn d_sweep(
    m: usize,
    q: u32,
    ds: &[f64],
    family: &ProfileFamily,
    mu_grid: &[f64],
) -> Result<DSweep> {
    if mu_grid.len() < 2 {
        return Err(DqiError::ParamDomain(
            "d-sweep needs at least 2 grid points".into(),
        ));
    }
    let mu_step = mu_grid[1] - mu_grid[0];
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for &d in ds {
        let d_rows = scan_mu("dsweep", m, q, d, family, mu_grid)?;
        let baseline = 1.0 / q as f64;
        let advantage_width = d_rows
            .iter()
            .filter(|r| r.report.sm_master > baseline + 1e-9)
            .count() as f64
            * mu_step;
        let spot = |mu: f64| -> Result<f64> {
            let ell = ((m as f64) * mu).round() as usize;
            let params = DqiParams::new(m, ell, q, d)?;
            Ok(report_lenient(&params, &family.profile(ell))?.sm_master)
        };
        lines.push(DSweepLine {
            d,
            advantage_width,
            sm_at_mu_127: spot(0.127)?,
            sm_at_mu_130: spot(0.130)?,
        });
        rows.extend(d_rows);
    }
    Ok(DSweep {
        rows,
        lines,
        mu_step,
    })
}

impl DSweep {
    /// CSV with the offset and the `2dη̄` correction appended per row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("d,{},correction_2d_eta\n", ScanRow::csv_header());
        for row in &self.rows {
            let corr = 2.0 * row.report.params.d * row.report.rates.eta_bar;
            out.push_str(&format!(
                "{},{},{}\n",
                sig6(row.report.params.d),
                row.csv_row(),
                sig6(corr)
            ));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "experiment": "dsweep",
            "mu_step": self.mu_step,
            "lines": self.lines,
        })
    }
}

/// Per-ℓ finite-m and asymptotic bound values.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FiniteAsymRow {
    pub ell: usize,
    pub mu: f64,
    pub sm_master_finite: f64,
    pub sm_master_asym: f64,
    pub sm_jordan_finite: f64,
    pub sm_jordan_asym: f64,
    pub regime_finite: Regime,
    pub regime_asym: Regime,
}

/// Agreement test between the finite-m computation and the asymptotic
/// formulas over a degree grid.
#[derive(Debug)]
pub struct FiniteVsAsym {
    pub rows: Vec<FiniteAsymRow>,
    pub max_gap_master: f64,
    pub max_gap_jordan: f64,
    pub interval_finite: Option<(usize, usize, usize)>,
    pub interval_asym: Option<(usize, usize, usize)>,
}

pub fn finite_vs_asymptotic(
    m: usize,
    q: u32,
    d: f64,
    ells: &[usize],
    profile: &FailureProfile,
) -> Result<FiniteVsAsym> {
    let profile_ref = &profile;
    let computed: Vec<Result<FiniteAsymRow>> = map_ordered(ells.to_vec(), move |ell| {
        let params = DqiParams::new(m, ell, q, d)?;
        let report = report_lenient(&params, profile_ref)?;
        let rates = report.rates;
        let lambda_asym = lambda_max_asymptotic(&params);
        let baseline = 1.0 / q as f64;
        let sm_master_asym = if rates.eps_bar < 1.0 {
            f_to_ratio(
                (lambda_asym * (1.0 - 2.0 * rates.eps_bar) + 2.0 * d * rates.eta_bar)
                    / (1.0 - rates.eps_bar),
                m,
                q,
            )
        } else {
            f64::NEG_INFINITY
        };
        let sm_jordan_asym = f_to_ratio(
            bounds::jordan_relaxed(lambda_asym, rates.eps_max, q, m),
            m,
            q,
        );
        let regime_asym = match (sm_jordan_asym > baseline, sm_master_asym > baseline) {
            (true, true) => Regime::BothValid,
            (false, true) => Regime::BlindSpot,
            _ => Regime::BothVacuous,
        };
        Ok(FiniteAsymRow {
            ell,
            mu: params.mu(),
            sm_master_finite: report.sm_master,
            sm_master_asym,
            sm_jordan_finite: report.sm_jordan_relaxed,
            sm_jordan_asym,
            regime_finite: report.regime,
            regime_asym,
        })
    });
    let mut rows = Vec::with_capacity(computed.len());
    for r in computed {
        rows.push(r?);
    }
    let gap = |a: f64, b: f64| {
        if a.is_finite() && b.is_finite() {
            (a - b).abs()
        } else {
            0.0
        }
    };
    let max_gap_master = rows
        .iter()
        .map(|r| gap(r.sm_master_finite, r.sm_master_asym))
        .fold(0.0, f64::max);
    let max_gap_jordan = rows
        .iter()
        .map(|r| gap(r.sm_jordan_finite, r.sm_jordan_asym))
        .fold(0.0, f64::max);
    let finite: Vec<(usize, Regime)> = rows.iter().map(|r| (r.ell, r.regime_finite)).collect();
    let asym: Vec<(usize, Regime)> = rows.iter().map(|r| (r.ell, r.regime_asym)).collect();
    Ok(FiniteVsAsym {
        max_gap_master,
        max_gap_jordan,
        interval_finite: longest_blind_run(&finite),
        interval_asym: longest_blind_run(&asym),
        rows,
    })
}

impl FiniteVsAsym {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "ell,mu,master_finite,master_asym,jordan_finite,jordan_asym,regime_finite,regime_asym\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.ell,
                sig6(r.mu),
                sig6(r.sm_master_finite),
                sig6(r.sm_master_asym),
                sig6(r.sm_jordan_finite),
                sig6(r.sm_jordan_asym),
                r.regime_finite,
                r.regime_asym
            ));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "experiment": "finite-asym",
            "max_gap_master": self.max_gap_master,
            "max_gap_jordan": self.max_gap_jordan,
            "interval_finite": self.interval_finite,
            "interval_asym": self.interval_asym,
            "intervals_identical": self.interval_finite == self.interval_asym,
        })
    }
}

/// Per-instance eigenpair diagnostics.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EigVerifyRow {
    pub m: usize,
    pub ell: usize,
    pub q: u32,
    pub d: f64,
    pub lambda: f64,
    pub lambda_asym: f64,
    pub lambda_rel_err: f64,
    pub min_w: f64,
    pub residual: f64,
    pub k_peak: usize,
    pub width: f64,
    /// Strict positivity and residual tolerance both hold.
    pub pass: bool,
}

/// Eigenvector verification sweep.
#[derive(Debug)]
pub struct EigVerification {
    pub rows: Vec<EigVerifyRow>,
    pub failures: usize,
}

/// The default verification grid: m ∈ {100, 500, 1000, 5000} ×
/// q ∈ {2, 3, 5} × d ∈ {−1, 0, 0.5, 1} at ℓ = m/10.
///
/// The degree ratio is fixed at 0.1 so that even the deepest left tail of
/// the m = 5000 eigenvectors stays inside f64 range; at larger μ the true
/// far-tail components fall below the smallest subnormal and the strict
/// positivity check stops being representable.
pub fn experiment1_grid() -> Vec<DqiParams> {
    let mut grid = Vec::new();
    for &m in &[100usize, 500, 1000, 5000] {
        for &q in &[2u32, 3, 5] {
            for &d in &[-1.0, 0.0, 0.5, 1.0] {
                grid.push(DqiParams::new(m, m / 10, q, d).expect("static grid is valid"));
            }
        }
    }
    grid
}

pub fn eigenvector_verification(grid: &[DqiParams]) -> EigVerification {
    let rows = map_ordered(grid.to_vec(), |params| {
        let matrix = build_matrix(&params);
        let lambda = lambda_max(&matrix);
        match leading_eigenvector(&matrix, lambda) {
            Ok(pair) => {
                let (k_peak, width) = concentration_stats(&pair);
                let min_w = pair.w.iter().cloned().fold(f64::MAX, f64::min);
                let lambda_asym = lambda_max_asymptotic(&params);
                let tol = 1e-9 * lambda.abs().max(1.0);
                EigVerifyRow {
                    m: params.m,
                    ell: params.ell,
                    q: params.q,
                    d: params.d,
                    lambda,
                    lambda_asym,
                    lambda_rel_err: ((lambda - lambda_asym) / lambda).abs(),
                    min_w,
                    residual: pair.residual,
                    k_peak,
                    width,
                    pass: min_w > 0.0 && pair.residual <= tol,
                }
            }
            Err(_) => EigVerifyRow {
                m: params.m,
                ell: params.ell,
                q: params.q,
                d: params.d,
                lambda,
                lambda_asym: lambda_max_asymptotic(&params),
                lambda_rel_err: f64::NAN,
                min_w: f64::NAN,
                residual: f64::NAN,
                k_peak: 0,
                width: f64::NAN,
                pass: false,
            },
        }
    });
    let failures = rows.iter().filter(|r| !r.pass).count();
    EigVerification { rows, failures }
}

impl EigVerification {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "m,ell,q,d,lambda,lambda_asym,lambda_rel_err,min_w,residual,k_peak,width,pass\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{:e},{:e},{},{},{}\n",
                r.m,
                r.ell,
                r.q,
                sig6(r.d),
                sig6(r.lambda),
                sig6(r.lambda_asym),
                sig6(r.lambda_rel_err),
                r.min_w,
                r.residual,
                r.k_peak,
                sig6(r.width),
                r.pass
            ));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "experiment": "verify-eig",
            "points": self.rows.len(),
            "failures": self.failures,
            "worst_residual": self.rows.iter().map(|r| r.residual).fold(0.0, f64::max),
        })
    }
}

/// One weighted-rate scan row.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RateScanRow {
    pub mu: f64,
    pub ell: usize,
    pub eps_max: f64,
    pub eps_bar: f64,
    pub ratio: Option<f64>,
}

/// ε, ε̄ and their ratio over a μ grid.
#[derive(Debug)]
pub struct RateScan {
    pub rows: Vec<RateScanRow>,
    /// μ positions of the model thresholds (`None` for non-parametric
    /// families).
    pub mu_perf: Option<f64>,
    pub mu_thresh: Option<f64>,
}

pub fn weighted_rate_scan(
    m: usize,
    q: u32,
    d: f64,
    family: &ProfileFamily,
    mu_grid: &[f64],
) -> Result<RateScan> {
    let computed: Vec<Result<RateScanRow>> = map_ordered(mu_grid.to_vec(), |mu| {
        let ell = ((m as f64) * mu).round() as usize;
        let params = DqiParams::new(m, ell, q, d)?;
        let matrix = build_matrix(&params);
        let pair = leading_eigenvector(&matrix, lambda_max(&matrix))?;
        let profile = family.profile(ell);
        let rates: WeightedRates = weighted_rates(&profile, &pair, ell)?;
        Ok(RateScanRow {
            mu,
            ell,
            eps_max: rates.eps_max,
            eps_bar: rates.eps_bar,
            ratio: rates.ratio,
        })
    });
    let mut rows = Vec::with_capacity(computed.len());
    for r in computed {
        rows.push(r?);
    }
    let (mu_perf, mu_thresh) = match family {
        ProfileFamily::Parametric(bp) => (
            Some(bp.k_perf as f64 / m as f64),
            Some(bp.k_thresh as f64 / m as f64),
        ),
        _ => (None, None),
    };
    Ok(RateScan {
        rows,
        mu_perf,
        mu_thresh,
    })
}

impl RateScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mu,ell,eps,eps_bar,ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                sig6(r.mu),
                r.ell,
                sig6(r.eps_max),
                sig6(r.eps_bar),
                r.ratio.map(sig6).unwrap_or_default()
            ));
        }
        out
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "experiment": "rate-scan",
            "rows": self.rows.len(),
            "mu_perf": self.mu_perf,
            "mu_thresh": self.mu_thresh,
        })
    }
}
