// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collections::GeodesicCollection;
use crate::error::{Error, Result};
use crate::observables::TestFunction;
use crate::surface::{neumaier_sum, ClosedGeodesic};

const REL_TOL: f64 = 1e-9;

/// `T = eta ln d`.
pub fn default_window(d: i128, eta: f64) -> f64 {
    eta * (d as f64).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub d: i128,
    pub f_id: String,
    #[serde(rename = "T_window")]
    pub t_window: f64,
    pub step: f64,
    pub n_members_i: usize,
    pub n_members_g: usize,
    /// `l(I) / l(G_d)`.
    pub length_ratio: f64,
    /// `mu_I((f - c)_T)`.
    pub mean_i: f64,
    /// `mu_I(|(f - c)_T|^2)`.
    pub second_moment_i: f64,
    /// `mu_G(|(f - c)_T|^2)`.
    pub second_moment_g: f64,
    pub lhs_i: f64,
    pub rhs_i: f64,
    pub holds_i: bool,
    pub lhs_ii: f64,
    pub rhs_ii: f64,
    pub holds_ii: bool,
    pub tolerance: f64,
}

impl ChainReport {
    pub fn holds(&self) -> bool {
        self.holds_i && self.holds_ii
    }
}

/// Per-member normalized integrals of `(f - c)_T` and `|(f - c)_T|^2`, with
/// `(f - c)_T(t) = (1/T) int_t^{t+T} (f - c)`, evaluated as a circular sliding
/// window of `round(T / h)` midpoint samples.
fn windowed_moments(
    phi: &ClosedGeodesic,
    f: &TestFunction,
    c: f64,
    t_window: f64,
    step: f64,
) -> Result<(f64, f64)> {
    let limit = phi.period / 10.0;
    if !(step > 0.0 && step <= limit) {
        return Err(Error::StepTooCoarse { step, limit });
    }
    let (h, pts) = phi.midpoint_samples(step)?;
    let n = pts.len();
    let g: Vec<f64> = pts.iter().map(|p| f.eval(p) - c).collect();
    let m = ((t_window / h).round() as usize).max(1);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in &g {
        acc += v;
        prefix.push(acc);
    }
    let total = prefix[n];
    let (laps, rest) = (m / n, m % n);
    let window_sum = |j: usize| -> f64 {
        let partial = if j + rest <= n {
            prefix[j + rest] - prefix[j]
        } else {
            (total - prefix[j]) + prefix[j + rest - n]
        };
        laps as f64 * total + partial
    };
    let averages: Vec<f64> = (0..n).map(|j| window_sum(j) / m as f64).collect();
    let first = neumaier_sum(averages.iter().copied()) / n as f64;
    let second = neumaier_sum(averages.iter().map(|v| v * v)) / n as f64;
    Ok((first, second))
}

fn collection_moments(
    i: &GeodesicCollection,
    f: &TestFunction,
    c: f64,
    t_window: f64,
    step: f64,
) -> Result<(f64, f64)> {
    if i.is_empty() {
        return Err(Error::EmptySubcollection);
    }
    let per: Vec<(f64, f64)> = i
        .members
        .par_iter()
        .map(|m| windowed_moments(m, f, c, t_window, step))
        .collect::<Result<_>>()?;
    let n = per.len() as f64;
    Ok((
        neumaier_sum(per.iter().map(|p| p.0)) / n,
        neumaier_sum(per.iter().map(|p| p.1)) / n,
    ))
}

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + REL_TOL * lhs.abs().max(rhs.abs())
}

/// Checks the Cauchy-Schwarz step (i) and the positivity step (ii) for a
/// subcollection `I` of `full`, with `c = mu_x`.
pub fn chain_check(
    i: &GeodesicCollection,
    full: &GeodesicCollection,
    f: &TestFunction,
    mu_x: f64,
    t_window: f64,
    step: f64,
) -> Result<ChainReport> {
    if i.d != full.d {
        return Err(Error::InvalidInput("collections of different d".into()));
    }
    if !(t_window > 0.0) {
        return Err(Error::InvalidInput(format!(
            "window {t_window} must be positive"
        )));
    }
    let (mean_i, second_i) = collection_moments(i, f, mu_x, t_window, step)?;
    let (_, second_g) = collection_moments(full, f, mu_x, t_window, step)?;
    let rho = i.total_length / full.total_length;
    let lhs_i = (rho * mean_i).powi(2);
    let rhs_i = rho * rho * second_i;
    let lhs_ii = rho * second_i;
    let rhs_ii = second_g;
    Ok(ChainReport {
        d: i.d.value(),
        f_id: f.id.clone(),
        t_window,
        step,
        n_members_i: i.len(),
        n_members_g: full.len(),
        length_ratio: rho,
        mean_i,
        second_moment_i: second_i,
        second_moment_g: second_g,
        lhs_i,
        rhs_i,
        holds_i: within(lhs_i, rhs_i),
        lhs_ii,
        rhs_ii,
        holds_ii: within(lhs_ii, rhs_ii),
        tolerance: REL_TOL,
    })
}
