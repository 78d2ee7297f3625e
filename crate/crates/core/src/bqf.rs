// SPDX-License-Identifier: Apache-2.0

//! Indefinite binary quadratic forms of positive non-square discriminant.
//!
//! Reduction follows the classical convention: a form `(a, b, c)` is reduced
//! when `|sqrt(d) - 2|a|| < b < sqrt(d)`. Every comparison against `sqrt(d)` is
//! done on squared integers, so no floating point enters this module.

use std::collections::HashMap;
use std::fmt;

use num_integer::{Integer, Roots};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest discriminant accepted. Keeps every composition intermediate
/// comfortably inside `i128`.
pub const MAX_DISCRIMINANT: i128 = 1_000_000_000_000_000;

/// Floor of the square root of a non-negative integer.
pub fn isqrt(n: i128) -> i128 {
    debug_assert!(n >= 0);
    n.sqrt()
}

pub fn is_discriminant(n: i128) -> bool {
    if n <= 0 {
        return false;
    }
    let m = n.rem_euclid(4);
    if m != 0 && m != 1 {
        return false;
    }
    let s = isqrt(n);
    s * s != n
}

/// A positive non-square discriminant `d = f^2 d0` with `d0` fundamental.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Discriminant {
    d: i128,
    fundamental: i128,
    conductor: i128,
}

impl Discriminant {
    pub fn new(d: i128) -> Result<Self> {
        if !is_discriminant(d) {
            return Err(Error::InvalidDiscriminant(d));
        }
        if d > MAX_DISCRIMINANT {
            return Err(Error::DiscriminantTooLarge(d));
        }
        let (squarefree, root) = squarefree_decomposition(d);
        let (fundamental, conductor) = if squarefree.rem_euclid(4) == 1 {
            (squarefree, root)
        } else {
            // d = s k^2 with s = 2, 3 (mod 4) forces k even.
            debug_assert!(root % 2 == 0);
            (4 * squarefree, root / 2)
        };
        Ok(Self {
            d,
            fundamental,
            conductor,
        })
    }

    pub fn value(&self) -> i128 {
        self.d
    }

    pub fn is_fundamental(&self) -> bool {
        self.conductor == 1
    }

    pub fn conductor(&self) -> i128 {
        self.conductor
    }

    pub fn fundamental_part(&self) -> i128 {
        self.fundamental
    }

    /// `floor(sqrt(d))`.
    pub fn isqrt(&self) -> i128 {
        isqrt(self.d)
    }

    pub fn sqrt_f64(&self) -> f64 {
        (self.d as f64).sqrt()
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.d)
    }
}

/// Writes `n = s * k^2` with `s` squarefree.
fn squarefree_decomposition(mut n: i128) -> (i128, i128) {
    let mut s = 1;
    let mut k = 1;
    let mut p = 2;
    while p * p <= n {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        for _ in 0..e / 2 {
            k *= p;
        }
        if e % 2 == 1 {
            s *= p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    (s * n, k)
}

/// A binary quadratic form `a x^2 + b x y + c y^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadForm {
    pub a: i128,
    pub b: i128,
    pub c: i128,
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

impl QuadForm {
    pub const fn new(a: i128, b: i128, c: i128) -> Self {
        Self { a, b, c }
    }

    /// Builds `(a, b, (b^2 - d) / 4a)`, checking integrality.
    pub fn from_ab(a: i128, b: i128, d: i128) -> Result<Self> {
        let num = b * b - d;
        if a == 0 || num % (4 * a) != 0 {
            return Err(Error::InvalidInput(format!(
                "no integral form with a = {a}, b = {b} of discriminant {d}"
            )));
        }
        Ok(Self::new(a, b, num / (4 * a)))
    }

    pub fn discriminant(&self) -> i128 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_primitive(&self) -> bool {
        self.a.gcd(&self.b).gcd(&self.c) == 1
    }

    /// The inverse class: `(a, -b, c)`.
    pub fn conjugate(&self) -> Self {
        Self::new(self.a, -self.b, self.c)
    }

    pub fn eval(&self, x: i128, y: i128) -> i128 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    /// The form `f(p x + q y, r x + s y)`.
    pub fn transform(&self, m: [[i128; 2]; 2]) -> Self {
        let [[p, q], [r, s]] = m;
        let (a, b, c) = (self.a, self.b, self.c);
        Self::new(
            a * p * p + b * p * r + c * r * r,
            2 * a * p * q + b * (p * s + q * r) + 2 * c * r * s,
            a * q * q + b * q * s + c * s * s,
        )
    }

    pub fn is_reduced(&self) -> bool {
        let d = self.discriminant();
        let b = self.b;
        if b <= 0 || b * b >= d {
            return false;
        }
        let two_a = 2 * self.a.abs();
        // sqrt(d) < 2|a| + b
        if (two_a + b) * (two_a + b) <= d {
            return false;
        }
        // 2|a| - b < sqrt(d)
        let lhs = two_a - b;
        lhs <= 0 || lhs * lhs < d
    }

    /// One step of the reduction operator. Also used on unreduced forms while
    /// reducing, which is why it does not check its input.
    fn rho_step(&self, d: i128, s: i128) -> (Self, i128) {
        let c = self.c;
        let m = 2 * c.abs();
        let r = if c.abs() * c.abs() > d {
            // Normalize into (-|c|, |c|]; shrinks |c| by at least half.
            let mut r = (-self.b).rem_euclid(m);
            if r > c.abs() {
                r -= m;
            }
            r
        } else {
            // Unique r = -b (mod 2|c|) with sqrt(d) - 2|c| < r < sqrt(d).
            s - (s + self.b).rem_euclid(m)
        };
        let next = Self::new(c, r, (r * r - d) / (4 * c));
        (next, (r + self.b) / (2 * c))
    }

    /// The reduction operator on reduced forms. Returns the next form of the
    /// cycle, `f o [[0, -1], [1, delta]]`.
    pub fn rho(&self) -> Result<Self> {
        if !self.is_reduced() {
            return Err(Error::NotReduced(self.a, self.b, self.c));
        }
        let d = self.discriminant();
        Ok(self.rho_step(d, isqrt(d)).0)
    }

    /// `rho` together with the `delta` of its transformation matrix.
    pub fn rho_with_delta(&self) -> Result<(Self, i128)> {
        if !self.is_reduced() {
            return Err(Error::NotReduced(self.a, self.b, self.c));
        }
        let d = self.discriminant();
        Ok(self.rho_step(d, isqrt(d)))
    }

    /// A reduced form properly equivalent to `self`.
    pub fn reduce(&self) -> Self {
        let d = self.discriminant();
        let s = isqrt(d);
        let mut f = *self;
        let mut steps = 0usize;
        while !f.is_reduced() {
            f = f.rho_step(d, s).0;
            steps += 1;
            assert!(steps < 100_000, "reduction of {self} did not terminate");
        }
        f
    }

    /// Dirichlet composition (Shanks' united-form formulas, general gcd case).
    /// The result is not reduced.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let d = self.discriminant();
        let d2 = other.discriminant();
        if d != d2 {
            return Err(Error::MixedDiscriminants(d, d2));
        }
        let (a1, b1) = (self.a, self.b);
        let (a2, b2) = (other.a, other.b);
        let beta = (b1 + b2) / 2;
        let g1 = a1.extended_gcd(&a2);
        let g = g1.gcd.extended_gcd(&beta);
        let e = g.gcd;
        let x = g.x * g1.x;
        let y = g.x * g1.y;
        let z = g.y;
        debug_assert_eq!(x * a1 + y * a2 + z * beta, e);
        let a3 = a1 * a2 / (e * e);
        let num = x * a1 * b2 + y * a2 * b1 + z * ((b1 * b2 + d) / 2);
        debug_assert_eq!(num % e, 0);
        let m = 2 * a3.abs();
        let mut b3 = (num / e).rem_euclid(m);
        if b3 > a3.abs() {
            b3 -= m;
        }
        QuadForm::from_ab(a3, b3, d)
    }
}

/// `(1, b0, (b0^2 - d)/4)` with `b0 = d mod 2`.
pub fn principal_form(d: &Discriminant) -> QuadForm {
    let b0 = d.value() % 2;
    QuadForm::new(1, b0, (b0 * b0 - d.value()) / 4)
}

/// The full rho-cycle of a reduced form, in rho order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionCycle {
    pub forms: Vec<QuadForm>,
}

impl ReductionCycle {
    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    pub fn first(&self) -> &QuadForm {
        &self.forms[0]
    }

    pub fn contains(&self, f: &QuadForm) -> bool {
        self.forms.contains(f)
    }

    /// `delta_i` with `forms[i+1] = forms[i] o [[0, -1], [1, delta_i]]`
    /// (indices mod the cycle length).
    pub fn deltas(&self) -> Vec<i128> {
        self.forms
            .iter()
            .map(|f| f.rho_with_delta().expect("cycle members are reduced").1)
            .collect()
    }
}

pub fn reduced_cycle(f: &QuadForm) -> ReductionCycle {
    let start = f.reduce();
    let mut forms = vec![start];
    let mut cur = start.rho().expect("reduced");
    while cur != start {
        forms.push(cur);
        cur = cur.rho().expect("rho preserves reducedness");
    }
    ReductionCycle { forms }
}

/// All primitive reduced forms of discriminant `d`, sorted.
pub fn enumerate_reduced(d: &Discriminant) -> Vec<QuadForm> {
    let dv = d.value();
    let s = d.isqrt();
    let mut out = Vec::new();
    let mut b = if dv % 2 == 0 { 2 } else { 1 };
    while b <= s {
        let n = (dv - b * b) / 4;
        // 2|a| must lie in (sqrt(d) - b, sqrt(d) + b); a | n.
        let mut m = 1;
        while m * m <= n {
            if n % m == 0 {
                for a in [m, n / m] {
                    if m * m == n && a != m {
                        continue;
                    }
                    for sa in [a, -a] {
                        let f = QuadForm::new(sa, b, -n / sa);
                        if f.is_reduced() && f.is_primitive() {
                            out.push(f);
                        }
                    }
                }
            }
            m += 1;
        }
        b += 2;
    }
    out.sort();
    out.dedup();
    out
}

/// Partitions the reduced forms of `d` into rho-cycles. The principal cycle
/// comes first, the rest are ordered by their smallest member.
pub fn reduced_cycles(d: &Discriminant) -> Vec<ReductionCycle> {
    let forms = enumerate_reduced(d);
    let mut seen: HashMap<QuadForm, usize> = HashMap::with_capacity(forms.len());
    let mut cycles: Vec<ReductionCycle> = Vec::new();
    let principal = reduced_cycle(&principal_form(d));
    for f in &principal.forms {
        seen.insert(*f, 0);
    }
    cycles.push(rotate_to_min(principal));
    for f in &forms {
        if seen.contains_key(f) {
            continue;
        }
        let cyc = reduced_cycle(f);
        for g in &cyc.forms {
            seen.insert(*g, cycles.len());
        }
        cycles.push(rotate_to_min(cyc));
    }
    cycles
}

/// Rotates a cycle so that its smallest form comes first. Gives every class a
/// canonical representative.
fn rotate_to_min(mut cyc: ReductionCycle) -> ReductionCycle {
    let (pos, _) = cyc
        .forms
        .iter()
        .enumerate()
        .min_by_key(|(_, f)| **f)
        .expect("nonempty cycle");
    cyc.forms.rotate_left(pos);
    cyc
}

/// The class group `Pic(O_d)` realized on rho-cycles.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassGroup {
    pub d: Discriminant,
    pub cycles: Vec<ReductionCycle>,
    /// `table[i][j]` = index of the cycle containing `reduce(rep_i * rep_j)`.
    pub table: Vec<Vec<usize>>,
}

impl ClassGroup {
    pub fn order(&self) -> usize {
        self.cycles.len()
    }

    /// Index of the cycle holding the principal form. Always 0.
    pub fn identity(&self) -> usize {
        0
    }

    pub fn lookup(&self) -> HashMap<QuadForm, usize> {
        cycle_lookup(&self.cycles)
    }

    pub fn inverse(&self, i: usize) -> usize {
        (0..self.order())
            .find(|&j| self.table[i][j] == self.identity())
            .expect("every class has an inverse")
    }

    /// Checks identity, inverses, commutativity and associativity of the table.
    pub fn verify_axioms(&self) -> std::result::Result<(), String> {
        let h = self.order();
        let e = self.identity();
        for i in 0..h {
            if self.table[e][i] != i || self.table[i][e] != i {
                return Err(format!("identity fails at {i}"));
            }
            if !(0..h).any(|j| self.table[i][j] == e) {
                return Err(format!("{i} has no inverse"));
            }
            for j in 0..h {
                if self.table[i][j] != self.table[j][i] {
                    return Err(format!("not commutative at ({i}, {j})"));
                }
                for k in 0..h {
                    if self.table[self.table[i][j]][k] != self.table[i][self.table[j][k]] {
                        return Err(format!("not associative at ({i}, {j}, {k})"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Order of the subgroup reached from the identity by repeatedly
    /// composing with cycle representatives, using form composition directly
    /// rather than the table.
    pub fn generated_order(&self) -> usize {
        let lookup = self.lookup();
        let reps: Vec<QuadForm> = self.cycles.iter().map(|c| *c.first()).collect();
        let mut reached = vec![false; self.order()];
        let mut frontier = vec![*self.cycles[0].first()];
        reached[0] = true;
        while let Some(f) = frontier.pop() {
            for g in &reps {
                let prod = f.compose(g).expect("same discriminant").reduce();
                let idx = lookup[&prod];
                if !reached[idx] {
                    reached[idx] = true;
                    frontier.push(*self.cycles[idx].first());
                }
            }
        }
        reached.iter().filter(|&&r| r).count()
    }
}

pub fn cycle_lookup(cycles: &[ReductionCycle]) -> HashMap<QuadForm, usize> {
    let mut map = HashMap::new();
    for (i, c) in cycles.iter().enumerate() {
        for f in &c.forms {
            map.insert(*f, i);
        }
    }
    map
}

pub fn class_group(d: &Discriminant) -> ClassGroup {
    let cycles = reduced_cycles(d);
    let lookup = cycle_lookup(&cycles);
    let h = cycles.len();
    let mut table = vec![vec![0usize; h]; h];
    for i in 0..h {
        for j in i..h {
            let f = cycles[i]
                .first()
                .compose(cycles[j].first())
                .expect("same d");
            let k = lookup[&f.reduce()];
            table[i][j] = k;
            table[j][i] = k;
        }
    }
    let group = ClassGroup {
        d: *d,
        cycles,
        table,
    };
    debug_assert!(group.table[0].iter().enumerate().all(|(i, &k)| i == k));
    group
}
