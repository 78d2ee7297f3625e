// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::equidist::DiscrepancyReport;
use super::fit::DecayFit;
use crate::bqf::Discriminant;
use crate::collections::{build_full, CollectionKind, TubeDetector};
use crate::error::{Error, Result};
use crate::frame::Mat2;
use crate::observables::{haar_monte_carlo, orbit_neighborhood, HaarEstimate, OrbitNeighborhood};
use crate::rng;
use crate::surface::{dwell_interval, fold, ClosedGeodesic, OrbitTube, TubeIndex, TRUST_RADIUS};

/// Odd `n` in `[lo, hi]`; each gives the discriminant `n^2 + 4`, whose
/// regulator is `2 ln((n + sqrt(n^2 + 4)) / 2)`.
pub fn n2plus4_family(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|n| n % 2 == 1).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialConfig {
    /// Tube radius selecting the subcollection.
    pub r: f64,
    /// Radius of the probe neighborhood whose mass is measured.
    pub probe_r0: f64,
    /// Target exponent offset: lengths are compared with `d^(1/2 - a)`.
    pub a: f64,
    /// Quadrature step for dwell fractions.
    pub step: f64,
    /// Monte-Carlo samples for the Haar mass of the probe.
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        AdversarialConfig {
            r: 0.05,
            probe_r0: 0.1,
            a: 0.1,
            step: 1e-2,
            n_samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialRow {
    pub n: u64,
    pub d: i128,
    pub class_count: usize,
    pub n_members: usize,
    pub period: f64,
    pub length_i: f64,
    pub length_g: f64,
    /// `ln l(I) / ln d`.
    pub exponent: f64,
    pub target_exponent: f64,
    /// `mu_I(U_r0)` as the fraction of quadrature samples inside the probe.
    pub tube_mass: f64,
    /// `mu_G(U_r0)` for the full collection.
    pub full_mass: f64,
    /// Smallest per-member dwell fraction in `U_r0`.
    pub min_member_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarialReport {
    pub orbit_d: i128,
    pub config: AdversarialConfig,
    pub rows: Vec<AdversarialRow>,
    /// `(n, d)` with an empty tube subcollection.
    pub skipped: Vec<(u64, i128)>,
    pub probe_id: String,
    pub mu_x: HaarEstimate,
    pub inf_tube_mass: Option<f64>,
    /// `inf_tube_mass / mu_x`.
    pub mass_ratio: Option<f64>,
}

impl AdversarialReport {
    /// One flat row per discriminant, with `mu_I` the tube-subcollection mass
    /// of the probe.
    pub fn reports(&self) -> Vec<DiscrepancyReport> {
        self.rows
            .iter()
            .map(|row| {
                let phi = row.length_g / row.length_i;
                DiscrepancyReport {
                    d: row.d,
                    f_id: self.probe_id.clone(),
                    kind: CollectionKind::Tube,
                    q_or_r: Some(self.config.r),
                    n_members: row.n_members,
                    total_length: row.length_i,
                    phi,
                    psi: phi / (row.d as f64).ln(),
                    mu_i: row.tube_mass,
                    mu_x: self.mu_x.value,
                    discrepancy: (row.tube_mass - self.mu_x.value).abs(),
                    t_window: None,
                    step: self.config.step,
                    seed: self.config.seed,
                    quadrature_error: None,
                }
            })
            .collect()
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("radius {r} must be positive")));
    }
    if r > TRUST_RADIUS {
        return Err(Error::RadiusTooLarge {
            radius: r,
            limit: TRUST_RADIUS,
        });
    }
    Ok(())
}

/// For each `d = n^2 + 4`, the members of `G_d` entering `U_r(P)` and the
/// fraction of their length spent in `U_{r0}(P)`.
pub fn adversarial_experiment(
    ns: &[u64],
    orbit: &ClosedGeodesic,
    config: &AdversarialConfig,
) -> Result<AdversarialReport> {
    check_radius(config.r)?;
    check_radius(config.probe_r0)?;
    if let Some(n) = ns.iter().find(|&&n| n % 2 == 0) {
        return Err(Error::InvalidInput(format!("n = {n} is not odd")));
    }
    let detect = TubeDetector::new(orbit, config.r)?;
    let probe = OrbitNeighborhood::new(orbit, config.probe_r0)?;

    let outcomes: Vec<(u64, i128, Option<AdversarialRow>)> = ns
        .par_iter()
        .map(|&n| {
            let d = (n as i128) * (n as i128) + 4;
            let full = build_full(&Discriminant::new(d)?);
            let sub = match detect.select(&full) {
                Ok(s) => s,
                Err(Error::EmptySubcollection) => return Ok((n, d, None)),
                Err(e) => return Err(e),
            };
            let fractions: Vec<f64> = full
                .members
                .iter()
                .map(|m| -> Result<f64> {
                    let (_, pts) = m.midpoint_samples(config.step)?;
                    let inside = pts.iter().filter(|p| probe.contains(p)).count();
                    Ok(inside as f64 / pts.len() as f64)
                })
                .collect::<Result<_>>()?;
            let picked: Vec<f64> = sub
                .members
                .iter()
                .map(|m| fractions[m.class_index])
                .collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let row = AdversarialRow {
                n,
                d,
                class_count: full.len(),
                n_members: sub.len(),
                period: full.period(),
                length_i: sub.total_length,
                length_g: full.total_length,
                exponent: sub.total_length.ln() / (d as f64).ln(),
                target_exponent: 0.5 - config.a,
                tube_mass: mean(&picked),
                full_mass: mean(&fractions),
                min_member_fraction: picked.iter().copied().fold(f64::INFINITY, f64::min),
            };
            Ok((n, d, Some(row)))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (n, d, row) in outcomes {
        match row {
            Some(r) => rows.push(r),
            None => skipped.push((n, d)),
        }
    }
    let probe_fn = orbit_neighborhood(orbit, config.probe_r0)?;
    let mu_x = haar_monte_carlo(
        &probe_fn,
        config.n_samples,
        rng::derive(config.seed, &[rng::label("adversarial_probe")]),
    );
    let inf = rows.iter().map(|r| r.tube_mass).min_by(f64::total_cmp);
    Ok(AdversarialReport {
        orbit_d: orbit.d.value(),
        config: config.clone(),
        rows,
        skipped,
        probe_id: probe_fn.id.clone(),
        mass_ratio: inf.map(|m| m / mu_x.value),
        inf_tube_mass: inf,
        mu_x,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowingRow {
    pub r: f64,
    pub outer: f64,
    pub dwell_times: Vec<f64>,
    pub mean_dwell: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShadowingReport {
    pub orbit_d: i128,
    pub dt: f64,
    pub seed: u64,
    pub rows: Vec<ShadowingRow>,
    /// Mean dwell time against `-ln r`.
    pub fit: Option<DecayFit>,
    /// Slopes between consecutive radii.
    pub slopes: Vec<f64>,
    /// Largest over smallest of `slopes`.
    pub slope_ratio: Option<f64>,
}

/// Starts `n_starts` orbits at frame distance about `r` from random points of
/// `P`, displaced along both horocycle directions, and measures how long each
/// stays in `U_{sqrt r}(P)`.
pub fn shadowing_experiment(
    orbit: &ClosedGeodesic,
    radii: &[f64],
    n_starts: usize,
    dt: f64,
    seed: u64,
) -> Result<ShadowingReport> {
    if n_starts == 0 || !(dt > 0.0) {
        return Err(Error::InvalidInput("need starts and a positive dt".into()));
    }
    let mut rows = Vec::new();
    for &r in radii {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidInput(format!("radius {r} not in (0, 1)")));
        }
        let outer = r.sqrt();
        check_radius(outer)?;
        let tube = OrbitTube::new(orbit, outer)?;
        let index = TubeIndex::new(&tube, outer + tube.delta);
        let max_time = 20.0 * (1.0 - r.ln()) + orbit.period;
        let mut stream = rng::stream(seed, &[rng::label("shadowing"), r.to_bits()]);
        let starts: Vec<_> = (0..n_starts)
            .map(|_| {
                let t0 = stream.random::<f64>() * orbit.period;
                let s = r / 2f64.sqrt();
                let s1 = if stream.random::<bool>() { s } else { -s };
                let s2 = if stream.random::<bool>() { s } else { -s };
                (t0, s1, s2)
            })
            .collect();
        let dwell_times: Vec<f64> = starts
            .par_iter()
            .map(|&(t0, s1, s2)| {
                let base = orbit.point_at(t0)?;
                let start = fold(&(base.frame * Mat2::upper(s1) * Mat2::lower(s2)))?;
                let (back, fwd) = dwell_interval(&index, &start, outer, dt, max_time)?;
                Ok(fwd - back)
            })
            .collect::<Result<_>>()?;
        let mean_dwell = dwell_times.iter().sum::<f64>() / dwell_times.len() as f64;
        rows.push(ShadowingRow {
            r,
            outer,
            dwell_times,
            mean_dwell,
        });
    }
    let slopes: Vec<f64> = rows
        .windows(2)
        .map(|w| (w[1].mean_dwell - w[0].mean_dwell) / (w[0].r.ln() - w[1].r.ln()))
        .collect();
    let slope_ratio = if slopes.is_empty() || slopes.iter().any(|s| *s <= 0.0) {
        None
    } else {
        let hi = slopes.iter().copied().fold(f64::MIN, f64::max);
        let lo = slopes.iter().copied().fold(f64::MAX, f64::min);
        Some(hi / lo)
    };
    let fit = DecayFit::ols(rows.iter().map(|w| (-w.r.ln(), w.mean_dwell)).collect()).ok();
    Ok(ShadowingReport {
        orbit_d: orbit.d.value(),
        dt,
        seed,
        rows,
        fit,
        slopes,
        slope_ratio,
    })
}
