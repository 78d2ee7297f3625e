// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordinary least-squares line through `(x, y)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl DecayFit {
    pub fn ols(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::DegenerateFit(format!(
                "{} points, need at least 3",
                points.len()
            )));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::DegenerateFit("non-finite point".into()));
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
        if points.iter().all(|p| p.0 == points[0].0) || sxx == 0.0 {
            return Err(Error::DegenerateFit("all abscissae equal".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r_squared = if syy == 0.0 {
            1.0
        } else {
            (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
        };
        Ok(DecayFit {
            points,
            slope,
            intercept,
            r_squared,
        })
    }

    /// Fit of `ln y` against `ln x`. Pairs with `y <= 0` are rejected.
    pub fn log_log(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut pts = Vec::new();
        for (x, y) in pairs {
            if !(x > 0.0 && y > 0.0) {
                return Err(Error::DegenerateFit(format!(
                    "cannot take logs of ({x}, {y})"
                )));
            }
            pts.push((x.ln(), y.ln()));
        }
        Self::ols(pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = DecayFit::ols(vec![(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn power_law() {
        let f = DecayFit::log_log((1..10).map(|k| (k as f64, 3.0 / k as f64))).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(DecayFit::ols(vec![(0.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(DecayFit::ols(vec![(1.0, 1.0); 4]).is_err());
        // The mean of repeated ln 40 is not exactly ln 40.
        assert!(DecayFit::log_log(vec![(40.0, 0.2); 8]).is_err());
        assert!(DecayFit::log_log(vec![(1.0, 0.0), (2.0, 1.0), (3.0, 1.0)]).is_err());
    }
}
