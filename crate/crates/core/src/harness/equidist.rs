// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::DecayFit;
use crate::bqf::Discriminant;
use crate::collections::{
    build_full, measure, ratios, subcollection, CollectionKind, GeodesicCollection,
    SubcollectionRule, SubcollectionSpec,
};
use crate::error::{Error, Result};
use crate::observables::TestFunction;

/// Column order of the flat CSV emission.
pub const CSV_COLUMNS: [&str; 13] = [
    "d",
    "f_id",
    "kind",
    "q_or_r",
    "n_members",
    "total_length",
    "phi",
    "psi",
    "mu_I",
    "mu_X",
    "discrepancy",
    "step",
    "seed",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub d: i128,
    pub f_id: String,
    pub kind: CollectionKind,
    pub q_or_r: Option<f64>,
    pub n_members: usize,
    pub total_length: f64,
    pub phi: f64,
    pub psi: f64,
    #[serde(rename = "mu_I")]
    pub mu_i: f64,
    #[serde(rename = "mu_X")]
    pub mu_x: f64,
    pub discrepancy: f64,
    #[serde(rename = "T_window", skip_serializing_if = "Option::is_none", default)]
    pub t_window: Option<f64>,
    pub step: f64,
    pub seed: u64,
    /// `|mu_I(step) - mu_I(2 step)|`, when computed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quadrature_error: Option<f64>,
}

impl DiscrepancyReport {
    pub fn csv_record(&self) -> Vec<String> {
        let kind = serde_json::to_value(self.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        vec![
            self.d.to_string(),
            self.f_id.clone(),
            kind,
            self.q_or_r.map(|v| v.to_string()).unwrap_or_default(),
            self.n_members.to_string(),
            self.total_length.to_string(),
            self.phi.to_string(),
            self.psi.to_string(),
            self.mu_i.to_string(),
            self.mu_x.to_string(),
            self.discrepancy.to_string(),
            self.step.to_string(),
            self.seed.to_string(),
        ]
    }
}

fn q_or_r(i: &GeodesicCollection) -> Option<f64> {
    match i.kind {
        CollectionKind::Full => Some(1.0),
        _ => match i.spec.as_ref().map(|s| &s.rule) {
            Some(SubcollectionRule::RandomFraction { q }) => Some(*q),
            Some(SubcollectionRule::Tube { r, .. }) => Some(*r),
            _ => None,
        },
    }
}

/// `|mu_I(f) - mu_X(f)|` for `I` inside `full`, with `mu_X(f)` supplied.
pub fn discrepancy(
    i: &GeodesicCollection,
    full: &GeodesicCollection,
    f: &TestFunction,
    mu_x: f64,
    step: f64,
    seed: u64,
) -> Result<DiscrepancyReport> {
    let mu_i = measure(i, f, step)?;
    let (phi, psi) = ratios(i, full)?;
    Ok(DiscrepancyReport {
        d: i.d.value(),
        f_id: f.id.clone(),
        kind: i.kind,
        q_or_r: q_or_r(i),
        n_members: i.len(),
        total_length: i.total_length,
        phi,
        psi,
        mu_i,
        mu_x,
        discrepancy: (mu_i - mu_x).abs(),
        t_window: None,
        step,
        seed,
        quadrature_error: None,
    })
}

fn with_quadrature_error(
    mut report: DiscrepancyReport,
    i: &GeodesicCollection,
    f: &TestFunction,
) -> Result<DiscrepancyReport> {
    let coarse = 2.0 * report.step;
    if coarse <= i.period() / 10.0 {
        let mu = measure(i, f, coarse)?;
        report.quadrature_error = Some((mu - report.mu_i).abs());
    }
    Ok(report)
}

/// Full collections for every `d`, built in parallel, in input order.
pub fn build_all(d_list: &[i128]) -> Result<Vec<GeodesicCollection>> {
    d_list
        .par_iter()
        .map(|&d| Ok(build_full(&Discriminant::new(d)?)))
        .collect()
}

/// `n` fundamental discriminants near log-spaced targets in `[lo, hi]`: the
/// first unused fundamental discriminant at or above each target.
pub fn fundamental_log_spaced(lo: i128, hi: i128, n: usize) -> Result<Vec<i128>> {
    if !(lo >= 5 && hi > lo && n >= 2) {
        return Err(Error::InvalidInput(format!(
            "bad range {lo}..{hi} with {n} points"
        )));
    }
    let (l0, l1) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<i128> = Vec::with_capacity(n);
    for k in 0..n {
        let target = (l0 + (l1 - l0) * k as f64 / (n - 1) as f64).exp().round() as i128;
        let mut d = target.max(out.last().map_or(lo, |&p| p + 1));
        while !Discriminant::new(d).is_ok_and(|x| x.is_fundamental()) {
            d += 1;
        }
        out.push(d);
    }
    Ok(out)
}

/// Fit of `ln l(G_d)` against `ln d`.
pub fn length_growth(fulls: &[GeodesicCollection]) -> Result<DecayFit> {
    DecayFit::log_log(fulls.iter().map(|g| (g.d.value() as f64, g.total_length)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DukeSweep {
    pub reports: Vec<DiscrepancyReport>,
    /// Discriminants dropped from the fit because the discrepancy was below
    /// ten times the quadrature error estimate.
    pub censored: Vec<i128>,
    pub fit: DecayFit,
    pub gamma_hat: f64,
}

/// Fits `ln |mu_d(f) - mu_X(f)|` against `ln d` over full collections.
pub fn duke_sweep(
    fulls: &[GeodesicCollection],
    f: &TestFunction,
    mu_x: f64,
    step: f64,
    seed: u64,
) -> Result<DukeSweep> {
    if fulls.len() < 8 {
        return Err(Error::InvalidInput(format!(
            "a sweep needs at least 8 discriminants, got {}",
            fulls.len()
        )));
    }
    let reports: Vec<DiscrepancyReport> = fulls
        .par_iter()
        .map(|g| with_quadrature_error(discrepancy(g, g, f, mu_x, step, seed)?, g, f))
        .collect::<Result<_>>()?;
    let mut censored = Vec::new();
    let mut pts = Vec::new();
    for r in &reports {
        let floor = 10.0 * r.quadrature_error.unwrap_or(0.0);
        if r.discrepancy > 0.0 && r.discrepancy >= floor {
            pts.push((r.d as f64, r.discrepancy));
        } else {
            censored.push(r.d);
        }
    }
    let fit = DecayFit::log_log(pts)?;
    Ok(DukeSweep {
        gamma_hat: -fit.slope,
        reports,
        censored,
        fit,
    })
}

/// Fraction schedule `q(d)` for random subcollections.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "schedule", rename_all = "snake_case")]
pub enum QSchedule {
    Constant {
        q: f64,
    },
    /// `q = scale * (ln d)^(-exponent)`, capped at 1.
    LogPower {
        scale: f64,
        exponent: f64,
    },
}

impl QSchedule {
    pub fn q(&self, d: i128) -> f64 {
        match *self {
            QSchedule::Constant { q } => q,
            QSchedule::LogPower { scale, exponent } => {
                (scale * (d as f64).ln().powf(-exponent)).min(1.0)
            }
        }
    }

    /// `psi` if the fraction were met exactly: `1 / (q ln d)`.
    pub fn nominal_psi(&self, d: i128) -> f64 {
        1.0 / (self.q(d) * (d as f64).ln())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubcollectionBoundReport {
    pub schedule: QSchedule,
    pub reports: Vec<DiscrepancyReport>,
    pub nominal_psi_first: f64,
    pub nominal_psi_last: f64,
    /// Number of leading points used to fit `C`.
    pub fit_count: usize,
    pub c_fit: Option<f64>,
    /// Held-out discriminants with `discrepancy > C sqrt(psi)`.
    pub violations: Vec<i128>,
    pub verdict: Verdict,
}

/// Random subcollections along `schedule`; `C` is the largest
/// `discrepancy / sqrt(psi)` on the first half (in increasing `d`), and the
/// verdict checks `discrepancy <= C sqrt(psi)` on the second half.
pub fn subcollection_bound_experiment(
    fulls: &[GeodesicCollection],
    schedule: QSchedule,
    f: &TestFunction,
    mu_x: f64,
    step: f64,
    seed: u64,
) -> Result<SubcollectionBoundReport> {
    if fulls.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "need at least 4 discriminants, got {}",
            fulls.len()
        )));
    }
    let mut order: Vec<&GeodesicCollection> = fulls.iter().collect();
    order.sort_by_key(|g| g.d.value());
    let reports: Vec<DiscrepancyReport> = order
        .par_iter()
        .map(|g| {
            let spec = SubcollectionSpec {
                rule: SubcollectionRule::RandomFraction {
                    q: schedule.q(g.d.value()),
                },
                seed,
            };
            let sub = subcollection(g, &spec)?;
            discrepancy(&sub, g, f, mu_x, step, seed)
        })
        .collect::<Result<_>>()?;
    let first = schedule.nominal_psi(reports[0].d);
    let last = schedule.nominal_psi(reports[reports.len() - 1].d);
    let fit_count = reports.len() / 2;
    let mut report = SubcollectionBoundReport {
        schedule,
        nominal_psi_first: first,
        nominal_psi_last: last,
        fit_count,
        c_fit: None,
        violations: Vec::new(),
        verdict: Verdict::NotApplicable,
        reports,
    };
    if !(last <= 0.9 * first) {
        return Ok(report);
    }
    let c = report.reports[..fit_count]
        .iter()
        .map(|r| r.discrepancy / r.psi.sqrt())
        .fold(0.0, f64::max);
    report.violations = report.reports[fit_count..]
        .iter()
        .filter(|r| r.discrepancy > c * r.psi.sqrt() * (1.0 + 1e-12))
        .map(|r| r.d)
        .collect();
    report.verdict = if report.violations.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    report.c_fit = Some(c);
    Ok(report)
}
