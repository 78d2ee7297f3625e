// SPDX-License-Identifier: Apache-2.0

//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

/// Minimal solution of `t^2 - d u^2 = 4` with `u > 0`, found among the
/// continued-fraction convergents `p/q` of `omega = (s + sqrt d)/2`,
/// `s = d mod 2`. Every unit `(t + u sqrt d)/2 > 1` of the order has the form
/// `p - q omega'` with `p/q` a convergent of `omega` when `d > 4`.
pub fn cf_pell(d: i64) -> (BigInt, BigInt) {
    let s = d.rem_euclid(2);
    let root = (d as f64).sqrt() as i64;
    let root = (root - 2..=root + 2).filter(|r| r * r <= d).max().unwrap();
    // omega = (P + sqrt d) / Q with Q | d - P^2.
    let (mut pp, mut qq) = (s, 2i64);
    let (mut p_prev, mut p_cur) = (BigInt::zero(), BigInt::one());
    let (mut q_prev, mut q_cur) = (BigInt::one(), BigInt::zero());
    let dd = BigInt::from(d);
    let four = BigInt::from(4);
    for _ in 0..1_000_000 {
        let a = (pp + root).div_euclid(qq);
        let p_next = BigInt::from(a) * &p_cur + &p_prev;
        let q_next = BigInt::from(a) * &q_cur + &q_prev;
        (p_prev, p_cur) = (p_cur, p_next);
        (q_prev, q_cur) = (q_cur, q_next);
        let t = BigInt::from(2) * &p_cur - BigInt::from(s) * &q_cur;
        if &t * &t - &dd * &q_cur * &q_cur == four {
            return (t, q_cur);
        }
        pp = a * qq - pp;
        qq = (d - pp * pp) / qq;
    }
    panic!("no solution found for d = {d}");
}

/// Direct search for `t^2 - d u^2 = 4` with `u <= cap`.
pub fn brute_pell(d: i64, cap: i64) -> Option<(i64, i64)> {
    (1..=cap).find_map(|u| {
        let t2 = 4 + (d as i128) * (u as i128) * (u as i128);
        let t = (t2 as f64).sqrt() as i128;
        (t - 1..=t + 1).find(|x| x * x == t2).map(|x| (x as i64, u))
    })
}

/// `ln((t + u sqrt d)/2)` from `t` alone, in floating point.
pub fn log_unit(t: &BigInt) -> f64 {
    let bits = t.bits();
    let (mant, shift) = if bits > 900 {
        let sh = bits - 64;
        (
            (t >> sh).to_f64().unwrap(),
            sh as f64 * std::f64::consts::LN_2,
        )
    } else {
        (t.to_f64().unwrap(), 0.0)
    };
    let tf = mant;
    let x = 4.0 / (t.to_f64().unwrap_or(f64::INFINITY)).powi(2);
    tf.ln() + shift + ((1.0 + (1.0 - x).sqrt()) / 2.0).ln()
}

pub fn is_discriminant(d: i64) -> bool {
    if d <= 0 || !(d % 4 == 0 || d % 4 == 1) {
        return false;
    }
    let r = (d as f64).sqrt() as i64;
    !(r - 1..=r + 1).any(|x| x * x == d)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Total time the geodesics of discriminant `d` spend above height `y >= 1`,
/// and the number of excursions. Above height 1 the surface is a quotient by
/// translations only, so each excursion is one primitive form `(a, b, c)` with
/// `b` taken mod `2|a|` and semicircle radius `sqrt(d)/(2|a|) > y`; it lasts
/// `2 arccosh(radius / y)`. Both signs of `a` occur.
pub fn cusp_time(d: i64, y: f64) -> (f64, usize) {
    let sd = (d as f64).sqrt();
    let mut total = 0.0;
    let mut count = 0;
    let mut a = 1i64;
    while sd / (2.0 * a as f64) > y {
        let radius = sd / (2.0 * a as f64);
        for b in (-a + 1)..=a {
            if (b * b - d).rem_euclid(4 * a) != 0 {
                continue;
            }
            let c = (b * b - d) / (4 * a);
            if gcd(gcd(a, b), c) != 1 {
                continue;
            }
            total += 2.0 * 2.0 * (radius / y).acosh();
            count += 2;
        }
        a += 1;
    }
    (total, count)
}
