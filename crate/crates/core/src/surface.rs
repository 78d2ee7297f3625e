// SPDX-License-Identifier: Apache-2.0

//! The unit tangent bundle `X = SL2(Z) \ SL2(R)` of the modular surface.
//!
//! A point is stored as a frame `g` whose image `g.i` lies in the standard
//! fundamental domain. The geodesic flow is right multiplication by
//! `a_t = diag(e^{t/2}, e^{-t/2})`, which moves `g.i` at unit hyperbolic speed.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bqf::{Discriminant, ReductionCycle};
use crate::error::{Error, Result};
use crate::frame::Mat2;
use crate::units::{root_minus, root_plus, RegulatorData};

/// Frame distances above this are not trusted as distances in `X`.
pub const TRUST_RADIUS: f64 = 0.3;

/// Default midpoint-quadrature step along orbits.
pub const DEFAULT_STEP: f64 = 1e-2;

const ARC_TOL: f64 = 1e-13;
const MAX_FOLD_MOVES: usize = 100_000;
const FLOW_CHUNK: f64 = 1.0;
const RENORMALIZE_EVERY: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub frame: Mat2,
    pub x: f64,
    pub y: f64,
    /// Direction of the flow at `x + iy`, in `[0, 2pi)`.
    pub theta: f64,
}

impl SurfacePoint {
    fn from_folded(frame: Mat2) -> Self {
        let (x, y) = frame.apply_to_i();
        let [_, [c, d]] = frame.0;
        let theta = (0.5 * PI - 2.0 * c.atan2(d)).rem_euclid(2.0 * PI);
        SurfacePoint { frame, x, y, theta }
    }
}

/// Folds `g` into the fundamental domain by `T^n` translations and the
/// inversion `S`. Representatives have `x` in `[-1/2, 1/2)` and, on the unit
/// arc, `x >= 0`.
pub fn fold(g: &Mat2) -> Result<SurfacePoint> {
    let [[mut a, mut b], [mut c, mut d]] = g.0;
    for _ in 0..MAX_FOLD_MOVES {
        let n2 = c * c + d * d;
        let y = 1.0 / n2;
        if !(y.is_finite() && y > 1e-280) {
            return Err(Error::NumericalDegeneracy(format!(
                "point too close to the boundary (y = {y:e})"
            )));
        }
        let x = (a * c + b * d) / n2;
        let shift = (x + 0.5).floor();
        if shift != 0.0 {
            a -= shift * c;
            b -= shift * d;
        }
        let x = x - shift;
        let r2 = x * x + y * y;
        if r2 < 1.0 - ARC_TOL {
            (a, b, c, d) = (-c, -d, a, b);
            continue;
        }
        if r2 <= 1.0 + ARC_TOL && x < 0.0 {
            (a, b, c, d) = (-c, -d, a, b);
        }
        return Ok(SurfacePoint::from_folded(Mat2::new(a, b, c, d)));
    }
    Err(Error::NumericalDegeneracy(
        "folding did not terminate".into(),
    ))
}

/// `fold(p.frame * a_t)`, advanced in unit chunks so the frame never grows
/// beyond `e^{1/2}` between folds.
pub fn flow(p: &SurfacePoint, t: f64) -> Result<SurfacePoint> {
    if t == 0.0 {
        return Ok(*p);
    }
    let chunks = (t.abs() / FLOW_CHUNK).ceil().max(1.0) as usize;
    let h = t / chunks as f64;
    let mut cur = *p;
    for k in 0..chunks {
        let mut g = cur.frame.flowed(h);
        if (k + 1) % RENORMALIZE_EVERY == 0 {
            g = g.renormalized();
        }
        cur = fold(&g)?;
    }
    Ok(cur)
}

/// Sampling step along a trajectory: calls `visit(k, point)` at times
/// `t0 + (k + 1/2) h`, `k < n`, refolding after every step.
pub fn trajectory_midpoints(
    p: &SurfacePoint,
    h: f64,
    n: usize,
    mut visit: impl FnMut(usize, &SurfacePoint),
) -> Result<()> {
    let mut cur = flow(p, 0.5 * h)?;
    for k in 0..n {
        visit(k, &cur);
        let mut g = cur.frame.flowed(h);
        if (k + 1) % RENORMALIZE_EVERY == 0 {
            g = g.renormalized();
        }
        cur = fold(&g)?;
    }
    Ok(())
}

/// A piece of a closed orbit: for `s` in `[0, duration)` the orbit point at
/// time `start + s` is `fold(frame * a_s)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Anchor {
    pub frame: Mat2,
    pub start: f64,
    pub duration: f64,
    /// Index into the cycle of the reduced form this frame was built from.
    pub form_index: usize,
}

/// A closed orbit of the geodesic flow attached to one rho-cycle.
///
/// Each reduced form of the cycle contributes a frame built from its exact
/// integer coefficients, and consecutive frames differ by an integral change
/// of basis followed by a flow time. The orbit is evaluated piecewise from
/// these anchors, so float error never compounds over long periods.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClosedGeodesic {
    pub d: Discriminant,
    pub class_index: usize,
    pub cycle: ReductionCycle,
    pub w: f64,
    pub w_conj: f64,
    pub base_frame: Mat2,
    pub period: f64,
    pub anchors: Vec<Anchor>,
    /// Period recomputed as the sum of the anchor offsets around the cycle.
    pub cycle_period: f64,
}

/// Frame with columns proportional to `(w, 1)` and `(w', 1)`, det 1.
fn form_frame(a: i128, w: f64, w_conj: f64, sqrt_d: f64) -> Mat2 {
    let c1 = (a.abs() as f64 / sqrt_d).sqrt();
    let c2 = if w > w_conj { c1 } else { -c1 };
    Mat2::new(c1 * w, c2 * w_conj, c1, c2)
}

pub fn lift_geodesic(
    d: &Discriminant,
    class_index: usize,
    cycle: &ReductionCycle,
    reg: &RegulatorData,
) -> ClosedGeodesic {
    let sqrt_d = d.sqrt_f64();
    let n = cycle.len();
    let forms = &cycle.forms;
    let roots: Vec<(f64, f64)> = forms
        .iter()
        .map(|f| (root_plus(f, sqrt_d), root_minus(f, sqrt_d)))
        .collect();
    // frame_{i+1} ~ frame_i * a_{offset_i} in X.
    let offsets: Vec<f64> = (0..n)
        .map(|i| {
            let next = &forms[(i + 1) % n];
            -2.0 * roots[i].0.abs().ln() - (forms[i].a.abs() as f64 / next.a.abs() as f64).ln()
        })
        .collect();
    let total: f64 = offsets.iter().sum();
    let sign = total.signum();
    let cycle_period = total.abs();
    let period = reg.period;

    let mut times = vec![0.0; n];
    for i in 1..n {
        times[i] = times[i - 1] + sign * offsets[i - 1];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| times[i].total_cmp(&times[j]));
    let anchors: Vec<Anchor> = order
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let start = times[i] * period / cycle_period;
            let end = order
                .get(k + 1)
                .map_or(period, |&j| times[j] * period / cycle_period);
            let (w, wc) = roots[i];
            Anchor {
                frame: form_frame(forms[i].a, w, wc, sqrt_d),
                start,
                duration: end - start,
                form_index: i,
            }
        })
        .collect();
    let (w, w_conj) = roots[0];
    ClosedGeodesic {
        d: *d,
        class_index,
        cycle: cycle.clone(),
        w,
        w_conj,
        base_frame: anchors[0].frame,
        period,
        anchors,
        cycle_period,
    }
}

impl ClosedGeodesic {
    pub fn base_point(&self) -> Result<SurfacePoint> {
        fold(&self.base_frame)
    }

    fn anchor_at(&self, t: f64) -> usize {
        self.anchors
            .partition_point(|a| a.start <= t)
            .saturating_sub(1)
    }

    /// The orbit point at time `t` (taken modulo the period).
    pub fn point_at(&self, t: f64) -> Result<SurfacePoint> {
        let t = t.rem_euclid(self.period);
        let a = &self.anchors[self.anchor_at(t)];
        fold(&a.frame.flowed(t - a.start))
    }

    /// Midpoint samples `t_j = (j + 1/2) h` with `h = period / n`,
    /// `n = ceil(period / step)`. Returns `h` and the points.
    pub fn midpoint_samples(&self, step: f64) -> Result<(f64, Vec<SurfacePoint>)> {
        let n = (self.period / step).ceil().max(1.0) as usize;
        let h = self.period / n as f64;
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        for j in 0..n {
            let t = (j as f64 + 0.5) * h;
            while k + 1 < self.anchors.len() && self.anchors[k + 1].start <= t {
                k += 1;
            }
            let a = &self.anchors[k];
            out.push(fold(&a.frame.flowed(t - a.start))?);
        }
        Ok((h, out))
    }

    /// Mismatch between where each anchor's segment ends and where the next
    /// anchor starts, measured with `distance`. Includes the wrap-around back
    /// to the base frame after one full period.
    pub fn closure_error(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let n = self.anchors.len();
        for k in 0..n {
            let a = &self.anchors[k];
            let end = fold(&a.frame.flowed(a.duration))?;
            let next = fold(&self.anchors[(k + 1) % n].frame)?;
            worst = worst.max(distance(&end, &next).value);
        }
        Ok(worst)
    }

    /// `base_frame^{-1} M base_frame` for the automorph `M` of the first form.
    pub fn conjugated_automorph(&self, m: &Mat2) -> Mat2 {
        self.base_frame.inv_sl2() * *m * self.base_frame
    }
}

pub fn integrate_along_with(
    phi: &ClosedGeodesic,
    f: impl Fn(&SurfacePoint) -> f64,
    step: f64,
) -> Result<f64> {
    let limit = phi.period / 10.0;
    if !(step > 0.0 && step <= limit) {
        return Err(Error::StepTooCoarse { step, limit });
    }
    let (_, pts) = phi.midpoint_samples(step)?;
    let sum = neumaier_sum(pts.iter().map(&f));
    Ok(sum / pts.len() as f64)
}

/// Compensated summation; fixed order keeps results reproducible.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A frame distance, flagged when it exceeds the trust radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub value: f64,
    pub trusted: bool,
}

impl Distance {
    fn new(value: f64) -> Self {
        Distance {
            value,
            trusted: value <= TRUST_RADIUS,
        }
    }
}

/// Identity plus all words of length <= 3 in `S`, `T`, `T^{-1}`, up to sign.
pub fn neighbor_words() -> &'static [Mat2] {
    static WORDS: OnceLock<Vec<Mat2>> = OnceLock::new();
    WORDS.get_or_init(|| {
        let gens: [[[i64; 2]; 2]; 3] = [[[0, -1], [1, 0]], [[1, 1], [0, 1]], [[1, -1], [0, 1]]];
        let mul = |x: [[i64; 2]; 2], y: [[i64; 2]; 2]| {
            [
                [
                    x[0][0] * y[0][0] + x[0][1] * y[1][0],
                    x[0][0] * y[0][1] + x[0][1] * y[1][1],
                ],
                [
                    x[1][0] * y[0][0] + x[1][1] * y[1][0],
                    x[1][0] * y[0][1] + x[1][1] * y[1][1],
                ],
            ]
        };
        let canon = |m: [[i64; 2]; 2]| {
            let flat = [m[0][0], m[0][1], m[1][0], m[1][1]];
            let first = flat.iter().find(|&&v| v != 0).copied().unwrap_or(1);
            if first < 0 {
                [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]]
            } else {
                m
            }
        };
        let mut words = vec![[[1, 0], [0, 1]]];
        let mut layer = vec![[[1i64, 0], [0, 1]]];
        for _ in 0..3 {
            let mut next = Vec::new();
            for w in &layer {
                for g in &gens {
                    let m = canon(mul(*w, *g));
                    if !words.contains(&m) {
                        words.push(m);
                        next.push(m);
                    }
                }
            }
            layer = next;
        }
        words.into_iter().map(Mat2::from_int).collect()
    })
}

/// `min over gamma, +-` of `||p^{-1} (+-gamma) q - I||_F`.
pub fn distance(p: &SurfacePoint, q: &SurfacePoint) -> Distance {
    let pinv = p.frame.inv_sl2();
    let mut best = f64::INFINITY;
    for g in neighbor_words() {
        let h = pinv * (*g * q.frame);
        best = best
            .min(h.dist_to_identity())
            .min(h.neg().dist_to_identity());
    }
    Distance::new(best)
}

/// Samples of a fixed closed orbit `P` at arc-step `delta <= radius / 10`.
#[derive(Clone, Debug)]
pub struct OrbitTube {
    pub orbit: ClosedGeodesic,
    pub samples: Vec<SurfacePoint>,
    pub delta: f64,
    pub radius: f64,
}

impl OrbitTube {
    pub fn new(orbit: &ClosedGeodesic, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tube radius {radius} must be positive"
            )));
        }
        let n = (orbit.period / (radius / 10.0)).ceil() as usize;
        let delta = orbit.period / n as f64;
        let samples = (0..n)
            .map(|j| orbit.point_at(j as f64 * delta))
            .collect::<Result<Vec<_>>>()?;
        Ok(OrbitTube {
            orbit: orbit.clone(),
            samples,
            delta,
            radius,
        })
    }
}

/// Minimum frame distance to the tube samples, minus the slack `delta / 2`
/// (clamped at zero).
pub fn distance_to_orbit(p: &SurfacePoint, tube: &OrbitTube) -> Distance {
    let raw = tube
        .samples
        .iter()
        .map(|s| distance(p, s).value)
        .fold(f64::INFINITY, f64::min);
    Distance::new((raw - 0.5 * tube.delta).max(0.0))
}

/// Spatial index over the lifts `+-gamma * sample` of a tube's samples.
/// Answers distance queries exactly whenever the answer is below `cutoff`.
#[derive(Clone, Debug)]
pub struct TubeIndex {
    pub delta: f64,
    cutoff: f64,
    hyp_radius: f64,
    bucket_width: f64,
    log_y_min: f64,
    /// Buckets by `ln y`; each sorted by `x`.
    buckets: Vec<Vec<Candidate>>,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    x: f64,
    y: f64,
    frame: Mat2,
}

/// The nearest orbit lift found for a query point.
#[derive(Clone, Copy, Debug)]
pub struct NearestLift {
    /// `||h - I||_F`, no slack applied.
    pub raw: f64,
    /// `h = p^{-1} * lift`: the displacement from the query frame to the lift.
    pub displacement: Mat2,
}

impl TubeIndex {
    pub fn new(tube: &OrbitTube, cutoff: f64) -> Self {
        Self::from_samples(&tube.samples, tube.delta, cutoff)
    }

    pub fn from_samples(samples: &[SurfacePoint], delta: f64, cutoff: f64) -> Self {
        let cosh_max = 1.0 + std::f64::consts::SQRT_2 * cutoff + 0.5 * cutoff * cutoff;
        let hyp_radius = cosh_max.acosh();
        let mut cands = Vec::new();
        for s in samples {
            for g in neighbor_words() {
                let k = *g * s.frame;
                let (x, y) = k.apply_to_i();
                // Only lifts that can come within hyp_radius of the domain.
                let y_floor = 0.5 * 3f64.sqrt() * (-hyp_radius).exp();
                if y >= y_floor && x.abs() <= 0.5 + 2.0 * y * hyp_radius.sinh() + 1.0 {
                    cands.push(Candidate { x, y, frame: k });
                }
            }
        }
        let bucket_width = hyp_radius.max(0.05);
        let log_y_min = cands.iter().map(|c| c.y.ln()).fold(f64::INFINITY, f64::min);
        let log_y_max = cands
            .iter()
            .map(|c| c.y.ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let nb = if cands.is_empty() {
            0
        } else {
            ((log_y_max - log_y_min) / bucket_width).floor() as usize + 1
        };
        let mut buckets = vec![Vec::new(); nb];
        for c in cands {
            let b = ((c.y.ln() - log_y_min) / bucket_width).floor() as usize;
            buckets[b.min(nb - 1)].push(c);
        }
        for b in &mut buckets {
            b.sort_by(|u, v| u.x.total_cmp(&v.x));
        }
        TubeIndex {
            delta,
            cutoff,
            hyp_radius,
            bucket_width,
            log_y_min,
            buckets,
        }
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Nearest lift with raw frame distance below `cutoff`, if any.
    pub fn nearest(&self, p: &SurfacePoint) -> Option<NearestLift> {
        let mut best: Option<NearestLift> = None;
        self.for_each_within(p, |n| {
            if best.is_none_or(|b| n.raw < b.raw) {
                best = Some(n);
            }
        });
        best
    }

    /// Every lift (with both signs) whose raw frame distance is below `cutoff`.
    pub fn lifts_within(&self, p: &SurfacePoint) -> Vec<NearestLift> {
        let mut out = Vec::new();
        self.for_each_within(p, |n| out.push(n));
        out
    }

    fn for_each_within(&self, p: &SurfacePoint, mut visit: impl FnMut(NearestLift)) {
        if self.buckets.is_empty() {
            return;
        }
        let cosh_max = self.hyp_radius.cosh();
        let ly = p.y.ln();
        let lo = ((ly - self.hyp_radius - self.log_y_min) / self.bucket_width).floor();
        let hi = ((ly + self.hyp_radius - self.log_y_min) / self.bucket_width).floor();
        if hi < 0.0 || lo >= self.buckets.len() as f64 {
            return;
        }
        let lo = lo.max(0.0) as usize;
        let hi = (hi as usize).min(self.buckets.len() - 1);
        // |x_p - x_k|^2 <= 2 y_p y_k (cosh D - 1) with y_k <= y_p e^D.
        let dx = p.y * (2.0 * self.hyp_radius.exp() * (cosh_max - 1.0)).sqrt();
        let pinv = p.frame.inv_sl2();
        for bucket in &self.buckets[lo..=hi] {
            let start = bucket.partition_point(|c| c.x < p.x - dx);
            for c in bucket[start..].iter().take_while(|c| c.x <= p.x + dx) {
                let dxy = (p.x - c.x).powi(2) + (p.y - c.y).powi(2);
                if 1.0 + dxy / (2.0 * p.y * c.y) > cosh_max {
                    continue;
                }
                let h = pinv * c.frame;
                for h in [h, h.neg()] {
                    let raw = h.dist_to_identity();
                    if raw < self.cutoff {
                        visit(NearestLift {
                            raw,
                            displacement: h,
                        });
                    }
                }
            }
        }
    }

    /// Same value as `distance_to_orbit` whenever that is below
    /// `cutoff - delta/2`; otherwise an untrusted `+inf`.
    pub fn distance(&self, p: &SurfacePoint) -> Distance {
        match self.nearest(p) {
            Some(n) => Distance::new((n.raw - 0.5 * self.delta).max(0.0)),
            None => Distance {
                value: f64::INFINITY,
                trusted: false,
            },
        }
    }
}

/// Smallest `||a_{-tau} h a_s - I||_F` over flow times `|s|, |tau| <= 6`.
///
/// With `h = p^{-1} k` for frames `p`, `k` on two geodesic orbits, this is the
/// closest the orbits come along this particular lift, so it bounds the
/// quotient distance from above. Writing `u = (s - tau)/2`, `v = (s + tau)/2`
/// the squared norm separates into `(h11 e^u - 1)^2 + (h22 e^-u - 1)^2` and
/// `h12^2 e^-2v + h21^2 e^2v`.
pub fn flow_pair_distance(h: &Mat2) -> f64 {
    let [[h11, h12], [h21, h22]] = h.0;
    const SPAN: f64 = 3.0;
    let v = if h12 == 0.0 || h21 == 0.0 {
        if h12 == 0.0 {
            -SPAN
        } else {
            SPAN
        }
    } else {
        (0.25 * (h12 * h12 / (h21 * h21)).ln()).clamp(-SPAN, SPAN)
    };
    let off = h12 * h12 * (-2.0 * v).exp() + h21 * h21 * (2.0 * v).exp();
    let g = |u: f64| (h11 * u.exp() - 1.0).powi(2) + (h22 * (-u).exp() - 1.0).powi(2);
    // Each term is unimodal in u; golden section on the sum.
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (-SPAN, SPAN);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    let diag = [g(-SPAN), g(SPAN), gc, gd, g(0.0)]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    (diag + off).sqrt()
}

/// Haar-distributed point: `x` uniform in `[-1/2, 1/2]`, `y` from the
/// density `y^{-2}` on `[sqrt(3)/2, inf)` by inverse CDF with rejection below
/// the unit arc, and a uniform rotation.
pub fn haar_sample<R: Rng + ?Sized>(rng: &mut R) -> SurfacePoint {
    let y0 = 0.5 * 3f64.sqrt();
    loop {
        let x: f64 = rng.random::<f64>() - 0.5;
        let u: f64 = 1.0 - rng.random::<f64>();
        let y = y0 / u;
        if x * x + y * y < 1.0 {
            continue;
        }
        let phi = PI * rng.random::<f64>();
        let g = Mat2::iwasawa(x, y, phi);
        let theta = (0.5 * PI - 2.0 * phi).rem_euclid(2.0 * PI);
        return SurfacePoint {
            frame: g,
            x,
            y,
            theta,
        };
    }
}

/// Probability that one proposal of `haar_sample` is accepted:
/// `(pi/3) / area of [-1/2,1/2] x [sqrt3/2, inf)` under `dx dy / y^2`.
pub fn haar_acceptance_rate() -> f64 {
    (PI / 3.0) / (2.0 / 3f64.sqrt())
}

/// Time spent within `outer` of the tube's orbit by the trajectory through
/// `start`, on the maximal interval containing `0`, scanning with step `dt` up
/// to `max_time` in each direction.
pub fn dwell_interval(
    index: &TubeIndex,
    start: &SurfacePoint,
    outer: f64,
    dt: f64,
    max_time: f64,
) -> Result<(f64, f64)> {
    let inside = |p: &SurfacePoint| index.distance(p).value < outer;
    if !inside(start) {
        return Ok((0.0, 0.0));
    }
    let mut bounds = [0.0; 2];
    for (k, dir) in [1.0, -1.0].into_iter().enumerate() {
        let mut cur = *start;
        let mut t = 0.0;
        while t < max_time {
            let next = fold(&cur.frame.flowed(dir * dt))?;
            if !inside(&next) {
                break;
            }
            cur = next;
            t += dt;
        }
        bounds[k] = t;
    }
    Ok((-bounds[1], bounds[0]))
}
