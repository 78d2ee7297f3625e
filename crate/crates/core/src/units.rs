// SPDX-License-Identifier: Apache-2.0

//! Fundamental solutions of `t^2 - d u^2 = 4`, regulators and automorphs.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bqf::{principal_form, reduced_cycle, Discriminant, QuadForm, ReductionCycle};
use crate::error::{Error, Result};

/// Minimal positive solution of `t^2 - d u^2 = 4`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PellSolution {
    #[serde(with = "decimal")]
    pub t: BigInt,
    #[serde(with = "decimal")]
    pub u: BigInt,
}

impl PellSolution {
    pub fn new(t: impl Into<BigInt>, u: impl Into<BigInt>) -> Self {
        Self {
            t: t.into(),
            u: u.into(),
        }
    }

    pub fn satisfies(&self, d: &Discriminant) -> bool {
        &self.t * &self.t - BigInt::from(d.value()) * &self.u * &self.u == BigInt::from(4)
    }

    /// `log((t + u sqrt(d)) / 2)`, evaluated from `t` alone since
    /// `u sqrt(d) = sqrt(t^2 - 4)`.
    pub fn log_unit(&self) -> f64 {
        let ln_t = ln_big(&self.t);
        let inv_t2 = (-2.0 * ln_t).exp();
        ln_t + ((1.0 + (1.0 - 4.0 * inv_t2).sqrt()) / 2.0).ln()
    }
}

/// Natural log of a positive big integer, accurate to double precision.
pub fn ln_big(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive());
    let bits = x.bits();
    if bits <= 900 {
        x.to_f64().expect("fits in f64").ln()
    } else {
        let shift = bits - 64;
        let top: BigInt = x >> shift;
        top.to_f64().expect("64 bits").ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Regulator of `O_d` in the norm-one convention, and the closed-geodesic
/// period it induces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegulatorData {
    pub pell: PellSolution,
    /// `log eps` with `eps = (t + u sqrt d)/2`, the fundamental norm-one unit.
    pub regulator: f64,
    /// `2 * regulator`: the time after which `a_t` closes up on the orbit.
    pub period: f64,
    pub has_norm_minus_one_unit: bool,
}

/// Product of the rho-transformation matrices around `cycle`, i.e. the
/// generator of the automorph group of its first form (up to sign).
pub fn cycle_automorph(cycle: &ReductionCycle) -> [[BigInt; 2]; 2] {
    let mut m = [
        [BigInt::one(), BigInt::zero()],
        [BigInt::zero(), BigInt::one()],
    ];
    for delta in cycle.deltas() {
        // m <- m * [[0, -1], [1, delta]]
        let delta = BigInt::from(delta);
        let [[p, q], [r, s]] = m;
        m = [
            [q.clone(), -&p + &q * &delta],
            [s.clone(), -&r + &s * &delta],
        ];
    }
    m
}

/// Fundamental Pell-4 solution read off the principal cycle's automorph.
pub fn fundamental_pell(d: &Discriminant) -> PellSolution {
    let cycle = reduced_cycle(&principal_form(d));
    pell_from_automorph(cycle.first(), &cycle_automorph(&cycle))
}

fn pell_from_automorph(f: &QuadForm, m: &[[BigInt; 2]; 2]) -> PellSolution {
    let t = (&m[0][0] + &m[1][1]).abs();
    let u = m[1][0].abs() / BigInt::from(f.a.abs());
    PellSolution { t, u }
}

/// `x^2 - d y^2 = -4` is solvable iff the principal form represents `-1`,
/// i.e. iff its cycle contains a form with leading coefficient `-1`.
pub fn has_norm_minus_one_unit(d: &Discriminant) -> bool {
    reduced_cycle(&principal_form(d))
        .forms
        .iter()
        .any(|f| f.a == -1)
}

pub fn regulator(d: &Discriminant) -> RegulatorData {
    let cycle = reduced_cycle(&principal_form(d));
    let pell = pell_from_automorph(cycle.first(), &cycle_automorph(&cycle));
    let regulator = pell.log_unit();
    RegulatorData {
        pell,
        regulator,
        period: 2.0 * regulator,
        has_norm_minus_one_unit: cycle.forms.iter().any(|f| f.a == -1),
    }
}

/// Larger root `w = (-b + sqrt d)/2a` of `a x^2 + b x + c`, computed without
/// cancellation as `-2c / (b + sqrt d)` for reduced forms (`b > 0`).
pub fn root_plus(f: &QuadForm, sqrt_d: f64) -> f64 {
    if f.b >= 0 {
        -2.0 * f.c as f64 / (f.b as f64 + sqrt_d)
    } else {
        (-(f.b as f64) + sqrt_d) / (2.0 * f.a as f64)
    }
}

/// Conjugate root `(-b - sqrt d)/2a`.
pub fn root_minus(f: &QuadForm, sqrt_d: f64) -> f64 {
    if f.b >= 0 {
        (-(f.b as f64) - sqrt_d) / (2.0 * f.a as f64)
    } else {
        -2.0 * f.c as f64 / (f.b as f64 - sqrt_d)
    }
}

/// Regulator as `|sum log |w_i||` over the cycle: the log-sum route, which
/// never forms the unit itself.
pub fn regulator_from_cycle(cycle: &ReductionCycle, d: &Discriminant) -> f64 {
    let sqrt_d = d.sqrt_f64();
    cycle
        .forms
        .iter()
        .map(|f| root_plus(f, sqrt_d).abs().ln())
        .sum::<f64>()
        .abs()
}

/// `[[(t - b u)/2, -c u], [a u, (t + b u)/2]]`, the automorph of `f` attached
/// to `eps = (t + u sqrt d)/2`. It fixes both roots of `f`; `(w, 1)` is the
/// eigenvector of eigenvalue `eps`.
pub fn automorph(f: &QuadForm, p: &PellSolution) -> Result<[[BigInt; 2]; 2]> {
    let (a, b, c) = (BigInt::from(f.a), BigInt::from(f.b), BigInt::from(f.c));
    let two = BigInt::from(2);
    let lo = &p.t - &b * &p.u;
    if !(&lo % &two).is_zero() {
        return Err(Error::ParityViolation);
    }
    let hi = &p.t + &b * &p.u;
    Ok([[lo / &two, -&c * &p.u], [&a * &p.u, hi / two]])
}

mod decimal {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bqf::{enumerate_reduced, is_discriminant};

    fn disc(d: i128) -> Discriminant {
        Discriminant::new(d).unwrap()
    }

    fn brute_pell(d: i128, cap: i128) -> Option<(i128, i128)> {
        (1..=cap).find_map(|u: i128| {
            let t2 = 4 + d * u * u;
            let t = crate::bqf::isqrt(t2);
            (t * t == t2).then_some((t, u))
        })
    }

    #[test]
    fn pell_examples() {
        assert_eq!(fundamental_pell(&disc(5)), PellSolution::new(3, 1));
        assert_eq!(fundamental_pell(&disc(29)), PellSolution::new(27, 5));
        assert_eq!(fundamental_pell(&disc(40)), PellSolution::new(38, 6));
        assert_eq!(fundamental_pell(&disc(13)), PellSolution::new(11, 3));
        assert_eq!(fundamental_pell(&disc(8)), PellSolution::new(6, 2));
    }

    #[test]
    fn pell_matches_brute_force_small() {
        for d in (5..300).filter(|&d| is_discriminant(d)) {
            let p = fundamental_pell(&disc(d));
            match brute_pell(d, 200_000) {
                Some((t, u)) => assert_eq!(p, PellSolution::new(t, u), "d = {d}"),
                None => assert!(p.u > BigInt::from(200_000), "d = {d}"),
            }
        }
    }

    #[test]
    fn regulator_examples() {
        let r5 = regulator(&disc(5));
        assert!((r5.regulator - 0.962_423_650_119_206_9).abs() < 1e-12);
        assert!((r5.period - 1.924_847_300_238_413_8).abs() < 1e-12);
        assert!(r5.has_norm_minus_one_unit);
        let r40 = regulator(&disc(40));
        assert!((r40.regulator - (19.0 + 6.0 * 10f64.sqrt()).ln()).abs() < 1e-12);
        assert!((r40.regulator - 3.6369).abs() < 1e-4);
        assert!(r40.has_norm_minus_one_unit);
        assert!(!regulator(&disc(12)).has_norm_minus_one_unit);
        let r13 = regulator(&disc(13));
        assert!((r13.regulator - ((11.0 + 3.0 * 13f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn log_sum_route_agrees() {
        for d in (5..2000).filter(|&d| is_discriminant(d)) {
            let d = disc(d);
            let reg = regulator(&d).regulator;
            let cyc = reduced_cycle(&principal_form(&d));
            let alt = regulator_from_cycle(&cyc, &d);
            assert!((reg - alt).abs() <= 1e-9 * reg, "d = {d}: {reg} vs {alt}");
        }
    }

    #[test]
    fn norm_minus_one_flag_matches_brute_force() {
        for d in (5..400).filter(|&d| is_discriminant(d)) {
            let p = fundamental_pell(&disc(d));
            let ubound = p.u.to_i128().unwrap();
            if ubound > 1_000_000 {
                continue;
            }
            let brute = (1..=ubound).any(|y| {
                let x2 = d * y * y - 4;
                let x = crate::bqf::isqrt(x2);
                x * x == x2
            });
            assert_eq!(has_norm_minus_one_unit(&disc(d)), brute, "d = {d}");
        }
    }

    #[test]
    fn automorph_examples() {
        let m = automorph(&QuadForm::new(1, 1, -1), &PellSolution::new(3, 1)).unwrap();
        let small: Vec<i64> = m.iter().flatten().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(small, vec![1, 1, 1, 2]);
        let m = automorph(&QuadForm::new(1, 2, -1), &PellSolution::new(6, 2)).unwrap();
        let small: Vec<i128> = m.iter().flatten().map(|x| x.to_i128().unwrap()).collect();
        assert_eq!(small, vec![1, 2, 2, 5]);
        assert_eq!(
            QuadForm::new(1, 2, -1).transform([[small[0], small[1]], [small[2], small[3]]]),
            QuadForm::new(1, 2, -1)
        );
    }

    #[test]
    fn automorphs_preserve_forms() {
        for d in [5, 8, 40, 229, 1001, 4 * 94] {
            let d = disc(d);
            let p = fundamental_pell(&d);
            for f in enumerate_reduced(&d) {
                let m = automorph(&f, &p).unwrap();
                let det = &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
                assert!(det.is_one());
                if let Some(mm) = m
                    .iter()
                    .flatten()
                    .map(|x| x.to_i64().map(i128::from))
                    .collect::<Option<Vec<_>>>()
                {
                    if mm.iter().all(|x| x.abs() < 1 << 20) {
                        let g = f.transform([[mm[0], mm[1]], [mm[2], mm[3]]]);
                        assert_eq!(g, f);
                    }
                }
            }
        }
    }

    #[test]
    fn n_squared_plus_four_family() {
        for n in (3..60).step_by(2) {
            let d = disc(n * n + 4);
            assert_eq!(fundamental_pell(&d), PellSolution::new(n * n + 2, n));
        }
    }

    #[test]
    fn ln_big_handles_huge_values() {
        let x = BigInt::from(3).pow(2000);
        assert!((ln_big(&x) - 2000.0 * 3f64.ln()).abs() < 1e-9);
    }
}
