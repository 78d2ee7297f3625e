// SPDX-License-Identifier: Apache-2.0

//! Test functions on `X`: constants, cusp indicators, and bump functions
//! supported in thin tubes around a fixed closed orbit.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bqf::{principal_form, reduced_cycle, Discriminant};
use crate::error::{Error, Result};
use crate::frame::Mat2;
use crate::surface::{
    fold, haar_sample, lift_geodesic, ClosedGeodesic, OrbitTube, SurfacePoint, TubeIndex,
    TRUST_RADIUS,
};
use crate::units::regulator;

/// Finite-difference step used by `smoothness_estimate`.
pub const FD_STEP: f64 = 1e-4;

/// Smooth even bump on `(-half_width, half_width)` with value 1 at 0:
/// `exp(1 - w^2 / (w^2 - x^2))`.
pub fn bump(x: f64, half_width: f64) -> f64 {
    let w2 = half_width * half_width;
    let x2 = x * x;
    if x2 >= w2 {
        0.0
    } else {
        (1.0 - w2 / (w2 - x2)).exp()
    }
}

/// `int_{-1}^{1} exp(1 - 1/(1 - u^2)) du`, by composite Simpson on a fine grid.
pub fn unit_bump_integral() -> f64 {
    let n = 20_000;
    let h = 2.0 / n as f64;
    let mut s = 0.0;
    for k in 0..=n {
        let u = -1.0 + k as f64 * h;
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * bump(u, 1.0);
    }
    s * h / 3.0
}

/// The principal closed geodesic of discriminant `d`.
pub fn principal_geodesic(d: i128) -> Result<ClosedGeodesic> {
    let disc = Discriminant::new(d)?;
    let reg = regulator(&disc);
    let cyc = reduced_cycle(&principal_form(&disc));
    Ok(lift_geodesic(&disc, 0, &cyc, &reg))
}

/// `f(x) = bump(s1) bump(s2)` in stable/unstable coordinates around a closed
/// orbit `P`, with half-width `r/2` so that the support stays inside the
/// frame-distance tube `U_r(P)`.
#[derive(Debug)]
pub struct TubeBump {
    pub radius: f64,
    pub half_width: f64,
    pub tube: OrbitTube,
    index: TubeIndex,
}

/// Decomposes `h ~ I` as `a_tau u+(s1) u-(s2)`, returning `(tau, s1, s2)`.
pub fn tube_coordinates(h: &Mat2) -> (f64, f64, f64) {
    let h = if h.0[1][1] < 0.0 { h.neg() } else { *h };
    let [[_, h12], [h21, h22]] = h.0;
    (-2.0 * h22.ln(), h12 * h22, h21 / h22)
}

impl TubeBump {
    pub fn new(orbit: &ClosedGeodesic, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "radius {radius} must be positive"
            )));
        }
        let limit = TRUST_RADIUS.min(1.0);
        if radius > limit {
            return Err(Error::RadiusTooLarge { radius, limit });
        }
        let tube = OrbitTube::new(orbit, radius)?;
        let index = TubeIndex::new(&tube, radius + tube.delta);
        Ok(TubeBump {
            radius,
            half_width: 0.5 * radius,
            tube,
            index,
        })
    }

    /// Tube coordinates `(s1, s2)` of `p` relative to the nearest lift of the
    /// orbit, when `p` is within the index cutoff.
    pub fn coordinates(&self, p: &SurfacePoint) -> Option<(f64, f64)> {
        let near = self.index.nearest(p)?;
        let (_, s1, s2) = tube_coordinates(&near.displacement.inv_sl2());
        Some((s1, s2))
    }

    pub fn eval(&self, p: &SurfacePoint) -> f64 {
        match self.coordinates(p) {
            Some((s1, s2)) => bump(s1, self.half_width) * bump(s2, self.half_width),
            None => 0.0,
        }
    }

    /// Haar mass of the bump: the measure is `(1/2) dtau ds1 ds2` in tube
    /// coordinates and `X` has volume `pi^2 / 6` in the same normalization.
    pub fn tube_integral(&self) -> f64 {
        let one_d = self.half_width * unit_bump_integral();
        3.0 * self.tube.orbit.period * one_d * one_d / (PI * PI)
    }

    /// A point drawn uniformly from the coordinate box around the orbit.
    pub fn sample_box<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SurfacePoint> {
        let orbit = &self.tube.orbit;
        let t = rng.random::<f64>() * orbit.period;
        let s1 = (2.0 * rng.random::<f64>() - 1.0) * self.half_width;
        let s2 = (2.0 * rng.random::<f64>() - 1.0) * self.half_width;
        let base = orbit.point_at(t)?;
        fold(&(base.frame * Mat2::upper(s1) * Mat2::lower(s2)))
    }

    /// Haar mass of the coordinate box `|s1|, |s2| < half_width`.
    pub fn box_mass(&self) -> f64 {
        let side = 2.0 * self.half_width;
        0.5 * self.tube.orbit.period * side * side / (PI * PI / 6.0)
    }
}

/// Indicator of the frame-distance neighborhood `U_r(P)`.
#[derive(Debug)]
pub struct OrbitNeighborhood {
    pub radius: f64,
    pub tube: OrbitTube,
    index: TubeIndex,
}

impl OrbitNeighborhood {
    pub fn new(orbit: &ClosedGeodesic, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= TRUST_RADIUS) {
            return Err(Error::RadiusTooLarge {
                radius,
                limit: TRUST_RADIUS,
            });
        }
        let tube = OrbitTube::new(orbit, radius)?;
        let index = TubeIndex::new(&tube, radius + tube.delta);
        Ok(OrbitNeighborhood {
            radius,
            tube,
            index,
        })
    }

    pub fn index(&self) -> &TubeIndex {
        &self.index
    }

    pub fn contains(&self, p: &SurfacePoint) -> bool {
        self.index.distance(p).value < self.radius
    }
}

#[derive(Clone, Debug)]
pub enum FunctionKind {
    Constant(f64),
    /// Ramp from 0 at `y = height` to 1 at `y = height + smoothing`; a sharp
    /// indicator when `smoothing == 0`.
    Cusp {
        height: f64,
        smoothing: f64,
    },
    TubeBump(Arc<TubeBump>),
    Neighborhood(Arc<OrbitNeighborhood>),
}

#[derive(Clone, Debug)]
pub struct TestFunction {
    pub id: String,
    pub kind: FunctionKind,
    pub exact_integral: Option<f64>,
}

impl TestFunction {
    pub fn constant(c: f64) -> Self {
        TestFunction {
            id: format!("const:{c}"),
            kind: FunctionKind::Constant(c),
            exact_integral: Some(c),
        }
    }

    pub fn eval(&self, p: &SurfacePoint) -> f64 {
        match &self.kind {
            FunctionKind::Constant(c) => *c,
            FunctionKind::Cusp { height, smoothing } => {
                if *smoothing == 0.0 {
                    if p.y > *height {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    ((p.y - height) / smoothing).clamp(0.0, 1.0)
                }
            }
            FunctionKind::TubeBump(b) => b.eval(p),
            FunctionKind::Neighborhood(n) => {
                if n.contains(p) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, FunctionKind::Constant(_))
    }

    /// Draws a point where the function is non-trivial, for local derivative
    /// probes. `None` for functions without a localized feature.
    fn sample_feature<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Option<SurfacePoint>> {
        match &self.kind {
            FunctionKind::Constant(_) => Ok(None),
            FunctionKind::Cusp { height, smoothing } => {
                let top = height + smoothing;
                // Keep probes off the ramp's kinks: a probe of step h moves y
                // by at most about 2 h y.
                let margin = 8.0 * FD_STEP * top;
                let (lo, hi) = if *smoothing > 2.0 * margin {
                    (height + margin, top - margin)
                } else {
                    (height + margin, height + 2.0 * margin)
                };
                let y = lo + (hi - lo) * rng.random::<f64>();
                let x = rng.random::<f64>() - 0.5;
                let phi = PI * rng.random::<f64>();
                Ok(Some(fold(&Mat2::iwasawa(x, y, phi))?))
            }
            FunctionKind::TubeBump(b) => b.sample_box(rng).map(Some),
            FunctionKind::Neighborhood(_) => Ok(None),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

pub fn cusp_indicator(height: f64, smoothing: f64) -> Result<TestFunction> {
    if !(height >= 1.0) || !(smoothing >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "cusp indicator needs Y >= 1 and smoothing >= 0 (got {height}, {smoothing})"
        )));
    }
    let exact = if smoothing == 0.0 {
        3.0 / (PI * height)
    } else {
        let top = height + smoothing;
        let ramp = ((top / height).ln() + height / top - 1.0) / smoothing;
        3.0 / PI * (ramp + 1.0 / top)
    };
    let id = if smoothing == 0.0 {
        format!("cusp:{height}")
    } else {
        format!("cusp:{height}:{smoothing}")
    };
    Ok(TestFunction {
        id,
        kind: FunctionKind::Cusp { height, smoothing },
        exact_integral: Some(exact),
    })
}

pub fn tube_bump(orbit: &ClosedGeodesic, radius: f64) -> Result<TestFunction> {
    let b = TubeBump::new(orbit, radius)?;
    let exact = b.tube_integral();
    Ok(TestFunction {
        id: format!("tube:P{}:{radius}", orbit.d),
        kind: FunctionKind::TubeBump(Arc::new(b)),
        exact_integral: Some(exact),
    })
}

pub fn orbit_neighborhood(orbit: &ClosedGeodesic, radius: f64) -> Result<TestFunction> {
    let n = OrbitNeighborhood::new(orbit, radius)?;
    Ok(TestFunction {
        id: format!("near:P{}:{radius}", orbit.d),
        kind: FunctionKind::Neighborhood(Arc::new(n)),
        exact_integral: None,
    })
}

/// Parses `const[:c]`, `cusp:Y[:s]`, `tube:P<d>:r` and `near:P<d>:r`.
pub fn parse_function(spec: &str) -> Result<TestFunction> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("bad number {s:?} in {spec:?}")))
    };
    let orbit = |s: &str| -> Result<ClosedGeodesic> {
        let d = s
            .strip_prefix('P')
            .and_then(|v| v.parse::<i128>().ok())
            .ok_or_else(|| Error::InvalidInput(format!("bad orbit {s:?} in {spec:?}")))?;
        principal_geodesic(d)
    };
    match parts.as_slice() {
        ["const"] => Ok(TestFunction::constant(1.0)),
        ["const", c] => Ok(TestFunction::constant(num(c)?)),
        ["cusp", y] => cusp_indicator(num(y)?, 0.0),
        ["cusp", y, s] => cusp_indicator(num(y)?, num(s)?),
        ["tube", p, r] => tube_bump(&orbit(p)?, num(r)?),
        ["near", p, r] => orbit_neighborhood(&orbit(p)?, num(r)?),
        _ => Err(Error::InvalidInput(format!(
            "unknown function spec {spec:?}"
        ))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub id: String,
    pub description: &'static str,
    pub parameters: &'static str,
    pub exact_integral: Option<f64>,
}

/// The built-in observables with representative parameters.
pub fn catalog() -> Vec<CatalogEntry> {
    let entry = |spec: &str, description, parameters| {
        let f = parse_function(spec).expect("catalog specs parse");
        CatalogEntry {
            id: f.id.clone(),
            description,
            parameters,
            exact_integral: f.exact_integral,
        }
    };
    vec![
        entry("const", "constant function", "const[:c]"),
        entry("cusp:1", "indicator of y > Y", "cusp:Y (Y >= 1)"),
        entry("cusp:2", "indicator of y > Y", "cusp:Y (Y >= 1)"),
        entry("cusp:4", "indicator of y > Y", "cusp:Y (Y >= 1)"),
        entry(
            "cusp:2:0.5",
            "linear ramp from y = Y to y = Y + s",
            "cusp:Y:s (s >= 0)",
        ),
        entry(
            "tube:P5:0.05",
            "smooth bump in stable/unstable coordinates around the principal orbit of d",
            "tube:P<d>:r (r <= 0.3)",
        ),
        entry(
            "near:P5:0.1",
            "indicator of the frame-distance tube U_r around the principal orbit of d",
            "near:P<d>:r (r <= 0.3)",
        ),
    ]
}

/// Value of `int f dmu_X`, exact or Monte-Carlo.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub exact: bool,
}

/// Exact integral from the catalog when available, otherwise Monte-Carlo.
pub fn haar_integral(f: &TestFunction, n_samples: usize, seed: u64) -> HaarEstimate {
    match f.exact_integral {
        Some(v) => HaarEstimate {
            value: v,
            std_error: 0.0,
            n_samples: 0,
            exact: true,
        },
        None => haar_monte_carlo(f, n_samples, seed),
    }
}

/// Plain Monte-Carlo over Haar samples, batched over threads. Each batch owns
/// a derived seed; results do not depend on the thread count.
pub fn haar_monte_carlo(f: &TestFunction, n_samples: usize, seed: u64) -> HaarEstimate {
    use rayon::prelude::*;
    const BATCH: usize = 10_000;
    let batches = n_samples.div_ceil(BATCH);
    let sums: Vec<(f64, f64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(crate::rng::derive(seed, &[0x4841_4152, b as u64]));
            let n = BATCH.min(n_samples - b * BATCH);
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..n {
                let v = f.eval(&haar_sample(&mut rng));
                s += v;
                s2 += v * v;
            }
            (s, s2)
        })
        .collect();
    let n = n_samples as f64;
    let s: f64 = sums.iter().map(|x| x.0).sum();
    let s2: f64 = sums.iter().map(|x| x.1).sum();
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
    HaarEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
        n_samples,
        exact: false,
    }
}

/// Importance-sampled Haar mass of a tube bump: uniform draws from the
/// coordinate box, evaluated through the full fold/lookup path.
pub fn tube_bump_mass(b: &TubeBump, n_samples: usize, seed: u64) -> Result<HaarEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = 0.0;
    let mut s2 = 0.0;
    for _ in 0..n_samples {
        let v = b.eval(&b.sample_box(&mut rng)?);
        s += v;
        s2 += v * v;
    }
    let n = n_samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0);
    let scale = b.box_mass();
    Ok(HaarEstimate {
        value: scale * mean,
        std_error: scale * (var / n).sqrt(),
        n_samples,
        exact: false,
    })
}

/// Finite-difference smoothness proxy: the sup over a point cloud of the
/// symmetric first and second differences of `f` along the geodesic and the
/// two horocyclic directions. The cloud mixes Haar points with points drawn
/// from the function's own feature region.
pub fn smoothness_estimate(f: &TestFunction, n_points: usize, seed: u64) -> Result<f64> {
    if f.is_constant() {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = FD_STEP;
    let dirs: [fn(f64) -> Mat2; 3] = [Mat2::diag_flow, Mat2::upper, Mat2::lower];
    let mut sup: f64 = 0.0;
    for k in 0..2 * n_points {
        let p = if k % 2 == 0 {
            haar_sample(&mut rng)
        } else {
            match f.sample_feature(&mut rng)? {
                Some(p) => p,
                None => haar_sample(&mut rng),
            }
        };
        let f0 = f.eval(&p);
        for dir in &dirs {
            let fp = f.eval(&fold(&(p.frame * dir(h)))?);
            let fm = f.eval(&fold(&(p.frame * dir(-h)))?);
            let d1 = (fp - fm).abs() / (2.0 * h);
            let d2 = (fp - 2.0 * f0 + fm).abs() / (h * h);
            sup = sup.max(d1).max(d2);
        }
    }
    Ok(sup)
}
