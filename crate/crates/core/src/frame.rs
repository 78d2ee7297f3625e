// SPDX-License-Identifier: Apache-2.0

//! 2x2 real matrices, used as frames in `SL2(R)`.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn from_int(m: [[i64; 2]; 2]) -> Self {
        Mat2([
            [m[0][0] as f64, m[0][1] as f64],
            [m[1][0] as f64, m[1][1] as f64],
        ])
    }

    /// The geodesic flow element `diag(e^{t/2}, e^{-t/2})`.
    pub fn diag_flow(t: f64) -> Self {
        let e = (0.5 * t).exp();
        Mat2::new(e, 0.0, 0.0, 1.0 / e)
    }

    /// Expanding-direction horocycle `[[1, s], [0, 1]]`.
    pub fn upper(s: f64) -> Self {
        Mat2::new(1.0, s, 0.0, 1.0)
    }

    /// `[[1, 0], [s, 1]]`.
    pub fn lower(s: f64) -> Self {
        Mat2::new(1.0, 0.0, s, 1.0)
    }

    /// `n_x a_y k_phi`: the frame over `x + iy` rotated by `phi`.
    pub fn iwasawa(x: f64, y: f64, phi: f64) -> Self {
        let sy = y.sqrt();
        let (s, c) = phi.sin_cos();
        Mat2::new(sy * c + x * s / sy, -sy * s + x * c / sy, s / sy, c / sy)
    }

    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        a * d - b * c
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Inverse assuming unit determinant.
    pub fn inv_sl2(&self) -> Self {
        let [[a, b], [c, d]] = self.0;
        Mat2::new(d, -b, -c, a)
    }

    pub fn neg(&self) -> Self {
        let [[a, b], [c, d]] = self.0;
        Mat2::new(-a, -b, -c, -d)
    }

    pub fn scale(&self, k: f64) -> Self {
        let [[a, b], [c, d]] = self.0;
        Mat2::new(k * a, k * b, k * c, k * d)
    }

    /// Rescales to determinant one.
    pub fn renormalized(&self) -> Self {
        self.scale(1.0 / self.det().abs().sqrt())
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `||self - I||_F`.
    pub fn dist_to_identity(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        ((a - 1.0).powi(2) + b * b + c * c + (d - 1.0).powi(2)).sqrt()
    }

    /// Max entrywise difference.
    pub fn max_diff(&self, other: &Mat2) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Right multiplication by `diag(e^{t/2}, e^{-t/2})`.
    pub fn flowed(&self, t: f64) -> Self {
        let e = (0.5 * t).exp();
        let [[a, b], [c, d]] = self.0;
        Mat2::new(a * e, b / e, c * e, d / e)
    }

    /// Möbius image of `i`: `(x, y)`.
    pub fn apply_to_i(&self) -> (f64, f64) {
        let [[a, b], [c, d]] = self.0;
        let n = c * c + d * d;
        ((a * c + b * d) / n, self.det() / n)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let [[a, b], [c, d]] = self.0;
        let [[e, f], [g, h]] = rhs.0;
        Mat2::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }
}
