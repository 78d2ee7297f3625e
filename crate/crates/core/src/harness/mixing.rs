// SPDX-License-Identifier: Apache-2.0

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::DecayFit;
use crate::error::{Error, Result};
use crate::observables::TestFunction;
use crate::rng;
use crate::surface::{flow, haar_sample, trajectory_midpoints};

const BATCH: usize = 2_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `<f - c, (f - c) o a_t>`.
    Correlation,
    /// `mu_X(|(f - c)_T|^2)`.
    Variance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub f_id: String,
    pub quantity: Quantity,
    /// `t` for correlations, `T` for variances.
    pub time: f64,
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub f_id: String,
    pub mu_x: f64,
    pub seed: u64,
    pub step: Option<f64>,
    pub estimates: Vec<MixingEstimate>,
    /// Correlations: `ln |value|` against `t` over `t > 0`. Variances:
    /// `ln value` against `ln T`. Absent when the data cannot be fitted.
    pub fit: Option<DecayFit>,
}

/// Runs `per_sample` on `n` Haar samples in fixed batches and returns, for each
/// of `k` outputs, the sum and the sum of squares.
fn batched_moments(
    n: usize,
    k: usize,
    seed: u64,
    tag: &str,
    per_sample: impl Fn(&mut ChaCha8Rng, &mut [f64]) -> Result<()> + Sync,
) -> Result<Vec<(f64, f64)>> {
    let batches = n.div_ceil(BATCH);
    let parts: Vec<Vec<(f64, f64)>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::stream(seed, &[rng::label(tag), b as u64]);
            let mut acc = vec![(0.0, 0.0); k];
            let mut out = vec![0.0; k];
            for _ in 0..BATCH.min(n - b * BATCH) {
                per_sample(&mut stream, &mut out)?;
                for (a, v) in acc.iter_mut().zip(&out) {
                    a.0 += v;
                    a.1 += v * v;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![(0.0, 0.0); k];
    for p in parts {
        for (t, v) in total.iter_mut().zip(p) {
            t.0 += v.0;
            t.1 += v.1;
        }
    }
    Ok(total)
}

fn estimate(f: &TestFunction, q: Quantity, time: f64, m: (f64, f64), n: usize) -> MixingEstimate {
    let nf = n as f64;
    let mean = m.0 / nf;
    let var = ((m.1 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    MixingEstimate {
        f_id: f.id.clone(),
        quantity: q,
        time,
        value: mean,
        std_error: (var / nf).sqrt(),
        n_samples: n,
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {n}"
        )));
    }
    Ok(())
}

/// Monte-Carlo `int (f - c)(x) (f - c)(x a_t) dmu_X(x)` for each `t`, with
/// `c = mu_x`; the same samples serve every `t`.
pub fn mixing_correlation(
    f: &TestFunction,
    t_list: &[f64],
    n_samples: usize,
    mu_x: f64,
    seed: u64,
) -> Result<MixingReport> {
    check_samples(n_samples)?;
    let moments = batched_moments(
        n_samples,
        t_list.len(),
        seed,
        "mixing_correlation",
        |r, out| {
            let x = haar_sample(r);
            let g0 = f.eval(&x) - mu_x;
            for (o, &t) in out.iter_mut().zip(t_list) {
                *o = g0 * (f.eval(&flow(&x, t)?) - mu_x);
            }
            Ok(())
        },
    )?;
    let estimates: Vec<MixingEstimate> = t_list
        .iter()
        .zip(moments)
        .map(|(&t, m)| estimate(f, Quantity::Correlation, t, m, n_samples))
        .collect();
    let pts: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.time > 0.0 && e.value != 0.0)
        .map(|e| (e.time, e.value.abs().ln()))
        .collect();
    Ok(MixingReport {
        f_id: f.id.clone(),
        mu_x,
        seed,
        step: None,
        fit: DecayFit::ols(pts).ok(),
        estimates,
    })
}

/// Monte-Carlo `mu_X(|(f - c)_T|^2)` for each `T`, where the time average is
/// the midpoint rule with step `step` along one trajectory per sample.
pub fn ergodic_variance(
    f: &TestFunction,
    windows: &[f64],
    n_samples: usize,
    step: f64,
    mu_x: f64,
    seed: u64,
) -> Result<MixingReport> {
    check_samples(n_samples)?;
    if !(step > 0.0) || windows.iter().any(|&t| !(t >= step)) {
        return Err(Error::InvalidInput(format!(
            "windows must be at least the step {step}"
        )));
    }
    let counts: Vec<usize> = windows
        .iter()
        .map(|&t| (t / step).round() as usize)
        .collect();
    let longest = counts.iter().copied().max().unwrap_or(0);
    let moments = batched_moments(
        n_samples,
        windows.len(),
        seed,
        "ergodic_variance",
        |r, out| {
            let x = haar_sample(r);
            let mut sum = 0.0;
            let mut sums = vec![0.0; longest + 1];
            trajectory_midpoints(&x, step, longest, |k, p| {
                sum += f.eval(p) - mu_x;
                sums[k + 1] = sum;
            })?;
            for (o, &m) in out.iter_mut().zip(&counts) {
                let avg = sums[m] / m as f64;
                *o = avg * avg;
            }
            Ok(())
        },
    )?;
    let estimates: Vec<MixingEstimate> = windows
        .iter()
        .zip(moments)
        .map(|(&t, m)| estimate(f, Quantity::Variance, t, m, n_samples))
        .collect();
    let fit = DecayFit::log_log(estimates.iter().map(|e| (e.time, e.value))).ok();
    Ok(MixingReport {
        f_id: f.id.clone(),
        mu_x,
        seed,
        step: Some(step),
        estimates,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::cusp_indicator;

    #[test]
    fn constant_is_all_zero() {
        let one = TestFunction::constant(1.0);
        let c = mixing_correlation(&one, &[0.0, 2.0], 1000, 1.0, 1).unwrap();
        assert!(c
            .estimates
            .iter()
            .all(|e| e.value == 0.0 && e.std_error == 0.0));
        assert!(c.fit.is_none());
        let v = ergodic_variance(&one, &[1.0, 2.0], 1000, 1e-2, 1.0, 1).unwrap();
        assert!(v.estimates.iter().all(|e| e.value == 0.0));
        assert!(v.fit.is_none());
    }

    #[test]
    fn zero_lag_is_the_variance() {
        let f = cusp_indicator(2.0, 0.0).unwrap();
        let mu = f.exact_integral.unwrap();
        let r = mixing_correlation(&f, &[0.0], 20_000, mu, 3).unwrap();
        let e = &r.estimates[0];
        let exact = mu * (1.0 - mu);
        assert!((e.value - exact).abs() < 4.0 * e.std_error + 1e-3, "{e:?}");
    }

    #[test]
    fn reproducible() {
        let f = cusp_indicator(2.0, 0.0).unwrap();
        let a = ergodic_variance(&f, &[1.0, 4.0], 3000, 1e-2, 0.47, 9).unwrap();
        let b = ergodic_variance(&f, &[1.0, 4.0], 3000, 1e-2, 0.47, 9).unwrap();
        assert_eq!(a, b);
    }
}
