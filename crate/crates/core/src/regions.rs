//! Membership tests for the asymptotic regions T₀, T₁, T₂, I_d, J_d, L, M, N
//! and the integration ledgers U_M1…U_M7, U_N01…U_N14.
//!
//! The basic predicates are generic over [`Scalar`] so the same code runs on
//! `f64` (sampling) and on exact rationals (tests near thresholds).

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use num::BigRational;
use thiserror::Error;

/// Number type the predicates compute in.
pub trait Scalar: Clone + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn ratio(p: i64, q: i64) -> Self;

    fn zero() -> Self {
        Self::ratio(0, 1)
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn ratio(p: i64, q: i64) -> Self {
        p as f64 / q as f64
    }
}

impl Scalar for BigRational {
    fn ratio(p: i64, q: i64) -> Self {
        BigRational::new(p.into(), q.into())
    }
}

/// The region thresholds as `(numerator, denominator)`.
pub mod consts {
    pub const T0_LOW: (i64, i64) = (17, 35);
    pub const T0_HIGH: (i64, i64) = (18, 35);
    pub const NINE_35: (i64, i64) = (9, 35);
    pub const NINE_140: (i64, i64) = (9, 140);
    pub const NINE_70: (i64, i64) = (9, 70);
    pub const ONE_35: (i64, i64) = (1, 35);
    pub const L_N: (i64, i64) = (53, 255);
    pub const L_M: (i64, i64) = (1129, 2448);
    pub const L_MIX: (i64, i64) = (9361, 24480);
}

#[inline(always)]
fn k<S: Scalar>(c: (i64, i64)) -> S {
    S::ratio(c.0, c.1)
}

/// Whether "partitioned" admits empty groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    /// Groups may be empty (sum 0).
    #[default]
    AllowEmpty,
    /// Every group of the partition holds at least one component.
    NonEmpty,
}

pub const MAX_DIM: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("exponent tuple must have 1 to 8 components, got {0}")]
    Dimension(usize),
    #[error("exponent tuple component {index} = {value} is not in (0, 1)")]
    Component { index: usize, value: f64 },
    #[error("exponent tuple sums to {0}, which exceeds 1")]
    Sum(f64),
    #[error("unknown region {0:?}")]
    UnknownRegion(String),
    #[error("region {name} expects {expected} components, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

/// `(t₁, …, t_d)` with `1 ≤ d ≤ 8`, positive components and sum below 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentTuple {
    components: Vec<f64>,
}

impl ExponentTuple {
    pub fn new(components: Vec<f64>) -> Result<Self, RegionError> {
        if components.is_empty() || components.len() > MAX_DIM {
            return Err(RegionError::Dimension(components.len()));
        }
        for (index, &value) in components.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(RegionError::Component { index, value });
            }
        }
        let sum: f64 = components.iter().sum();
        if sum >= 1.0 + 1e-12 {
            return Err(RegionError::Sum(sum));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }
}

impl std::ops::Deref for ExponentTuple {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.components
    }
}

#[inline]
fn in_window<S: Scalar>(x: &S) -> bool {
    *x >= k::<S>(consts::T0_LOW) && *x <= k::<S>(consts::T0_HIGH)
}

pub fn in_t0<S: Scalar>(m1: &S, m2: &S) -> bool {
    in_window(m1) || in_window(m2) || in_window(&(m1.clone() + m2.clone()))
}

pub fn in_t1<S: Scalar>(m1: &S, m2: &S) -> bool {
    *m1 <= k::<S>(consts::T0_HIGH) && *m2 <= k::<S>(consts::NINE_35)
}

pub fn in_t21<S: Scalar>(m1: &S, m2: &S, m3: &S) -> bool {
    let nine = k::<S>(consts::NINE_35);
    *m1 <= k::<S>(consts::T0_HIGH)
        && m2 >= m3
        && S::ratio(3, 4) * m2.clone() + m3.clone() <= nine
        && m2.clone() + S::ratio(1, 2) * m3.clone() <= nine
        && S::ratio(7, 4) * m2.clone() + S::ratio(3, 2) * m3.clone() <= k::<S>(consts::T0_HIGH)
}

pub fn in_t22<S: Scalar>(m1: &S, m2: &S, m3: &S) -> bool {
    *m1 <= k::<S>(consts::T0_HIGH) && *m2 <= k::<S>(consts::NINE_35) && *m3 <= k::<S>(consts::NINE_140)
}

pub fn in_t23<S: Scalar>(m1: &S, m2: &S, m3: &S) -> bool {
    *m1 <= k::<S>(consts::T0_HIGH)
        && S::ratio(2, 1) * m2.clone() + m3.clone() <= k::<S>(consts::T0_HIGH)
        && *m3 <= k::<S>(consts::NINE_70)
}

pub fn in_t2<S: Scalar>(m1: &S, m2: &S, m3: &S) -> bool {
    in_t22(m1, m2, m3) || in_t23(m1, m2, m3) || in_t21(m1, m2, m3)
}

/// `t ∈ I_d` with empty groups allowed.
pub fn in_i<S: Scalar>(t: &[S]) -> bool {
    in_i_with(t, Partition::AllowEmpty)
}

/// `t ∈ I_d`: some 2-colouring of `t` has group sums in T₀. Decided through the
/// equivalent subset form: a subset whose sum lies in `[17/35, 18/35]`.
pub fn in_i_with<S: Scalar>(t: &[S], partition: Partition) -> bool {
    let d = t.len();
    if d == 0 {
        return false;
    }
    let prune = t.iter().all(|x| *x >= S::zero());
    match partition {
        Partition::AllowEmpty => subset_in_window(t, 0, S::zero(), prune, usize::MAX),
        Partition::NonEmpty => {
            if d == 1 {
                return false;
            }
            let total = t.iter().cloned().fold(S::zero(), |a, b| a + b);
            in_window(&total) || subset_in_window(t, 0, S::zero(), prune, d - 1)
        }
    }
}

/// Nonempty subsets of `t[start..]` with at most `max_size` elements, added to `base`.
fn subset_in_window<S: Scalar>(t: &[S], start: usize, base: S, prune: bool, max_size: usize) -> bool {
    if max_size == 0 {
        return false;
    }
    let high = k::<S>(consts::T0_HIGH);
    for i in start..t.len() {
        let s = base.clone() + t[i].clone();
        if prune && s > high {
            continue;
        }
        if in_window(&s) || subset_in_window(t, i + 1, s, prune, max_size - 1) {
            return true;
        }
    }
    false
}

/// `t ∈ J_d` with empty groups allowed.
pub fn in_j<S: Scalar>(t: &[S]) -> bool {
    in_j_with(t, Partition::AllowEmpty)
}

/// `t ∈ J_d`: an ordered 2-colouring with sums in T₁ or an ordered 3-colouring
/// with sums in T₂.
pub fn in_j_with<S: Scalar>(t: &[S], partition: Partition) -> bool {
    if t.is_empty() {
        return false;
    }
    let prune = t.iter().all(|x| *x >= S::zero());
    let mut search = ColourSearch {
        t,
        prune,
        partition,
        g1_cap: k::<S>(consts::T0_HIGH),
        g23_cap: k::<S>(consts::NINE_35),
    };
    search.run(0, [S::zero(), S::zero(), S::zero()], [0; 3])
}

struct ColourSearch<'a, S> {
    t: &'a [S],
    prune: bool,
    partition: Partition,
    g1_cap: S,
    g23_cap: S,
}

impl<S: Scalar> ColourSearch<'_, S> {
    // Every T₁ and T₂ member has m₁ ≤ 18/35 and m₂, m₃ ≤ 9/35, so with
    // nonnegative components a partial sum past these caps is a dead end.
    fn run(&mut self, i: usize, sums: [S; 3], counts: [usize; 3]) -> bool {
        if i == self.t.len() {
            return self.accept(&sums, &counts);
        }
        for g in 0..3 {
            let mut next = sums.clone();
            next[g] = next[g].clone() + self.t[i].clone();
            if self.prune {
                let cap = if g == 0 { &self.g1_cap } else { &self.g23_cap };
                if next[g] > *cap {
                    continue;
                }
            }
            let mut c = counts;
            c[g] += 1;
            if self.run(i + 1, next, c) {
                return true;
            }
        }
        false
    }

    fn accept(&self, sums: &[S; 3], counts: &[usize; 3]) -> bool {
        match self.partition {
            Partition::AllowEmpty => {
                in_t2(&sums[0], &sums[1], &sums[2]) || (counts[2] == 0 && in_t1(&sums[0], &sums[1]))
            }
            Partition::NonEmpty => {
                let two = counts[0] > 0 && counts[1] > 0;
                (two && counts[2] > 0 && in_t2(&sums[0], &sums[1], &sums[2]))
                    || (two && counts[2] == 0 && in_t1(&sums[0], &sums[1]))
            }
        }
    }
}

fn j3<S: Scalar>(m: &S, n: &S, partition: Partition) -> bool {
    in_j_with(&[m.clone(), n.clone(), n.clone()], partition)
}

fn l_thresholds<S: Scalar>(m: &S, n: &S) -> bool {
    *n >= k::<S>(consts::L_N)
        || *m >= k::<S>(consts::L_M)
        || S::ratio(1, 2) * m.clone() + n.clone() >= k::<S>(consts::L_MIX)
}

pub fn in_l<S: Scalar>(m: &S, n: &S) -> bool {
    in_l_with(m, n, Partition::AllowEmpty)
}

pub fn in_l_with<S: Scalar>(m: &S, n: &S, partition: Partition) -> bool {
    !in_t0(m, n) && !j3(m, n, partition) && l_thresholds(m, n)
}

pub fn in_m<S: Scalar>(m: &S, n: &S) -> bool {
    in_m_with(m, n, Partition::AllowEmpty)
}

pub fn in_m_with<S: Scalar>(m: &S, n: &S, partition: Partition) -> bool {
    !in_t0(m, n) && j3(m, n, partition)
}

pub fn in_n<S: Scalar>(m: &S, n: &S) -> bool {
    in_n_with(m, n, Partition::AllowEmpty)
}

pub fn in_n_with<S: Scalar>(m: &S, n: &S, partition: Partition) -> bool {
    !in_t0(m, n) && !in_l_with(m, n, partition) && !j3(m, n, partition)
}

/// The integration ledgers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ledger {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
    M7,
    N01,
    N02,
    N03,
    N04,
    N05,
    N06,
    N07,
    N08,
    N09,
    N10,
    N11,
    N12,
    N13,
    N14,
}

impl Ledger {
    pub const ALL: [Ledger; 21] = [
        Ledger::M1,
        Ledger::M2,
        Ledger::M3,
        Ledger::M4,
        Ledger::M5,
        Ledger::M6,
        Ledger::M7,
        Ledger::N01,
        Ledger::N02,
        Ledger::N03,
        Ledger::N04,
        Ledger::N05,
        Ledger::N06,
        Ledger::N07,
        Ledger::N08,
        Ledger::N09,
        Ledger::N10,
        Ledger::N11,
        Ledger::N12,
        Ledger::N13,
        Ledger::N14,
    ];

    /// Macro name used in spec files (`UM1`, `UN08`, …).
    pub fn name(self) -> &'static str {
        use Ledger::*;
        match self {
            M1 => "UM1",
            M2 => "UM2",
            M3 => "UM3",
            M4 => "UM4",
            M5 => "UM5",
            M6 => "UM6",
            M7 => "UM7",
            N01 => "UN01",
            N02 => "UN02",
            N03 => "UN03",
            N04 => "UN04",
            N05 => "UN05",
            N06 => "UN06",
            N07 => "UN07",
            N08 => "UN08",
            N09 => "UN09",
            N10 => "UN10",
            N11 => "UN11",
            N12 => "UN12",
            N13 => "UN13",
            N14 => "UN14",
        }
    }

    pub fn dim(self) -> usize {
        use Ledger::*;
        match self {
            M1 | N01 | N08 => 4,
            M2 | N02 | N09 | N10 => 5,
            M3 | M4 | N03 | N04 | N11 | N12 | N13 | N14 => 6,
            M5 | M6 | M7 | N05 | N06 | N07 => 8,
        }
    }
}

impl fmt::Display for Ledger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ledger {
    type Err = RegionError;

    /// Accepts `UM1`, `U_M1`, `U_N08` and the like.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|&c| c != '_').collect();
        Ledger::ALL
            .into_iter()
            .find(|l| l.name() == compact)
            .ok_or_else(|| RegionError::UnknownRegion(s.to_string()))
    }
}

/// Membership of `t` in a ledger region given by name.
pub fn in_u(name: &str, t: &[f64]) -> Result<bool, RegionError> {
    in_u_with(name.parse()?, t, Partition::AllowEmpty)
}

/// Membership of `t` in `ledger`, written out condition by condition.
pub fn in_u_with(ledger: Ledger, t: &[f64], p: Partition) -> Result<bool, RegionError> {
    if t.len() != ledger.dim() {
        return Err(RegionError::Arity {
            name: ledger.name().to_string(),
            expected: ledger.dim(),
            got: t.len(),
        });
    }
    Ok(LedgerPoint { t, p }.check(ledger))
}

struct LedgerPoint<'a> {
    t: &'a [f64],
    p: Partition,
}

const ONE_35: f64 = 1.0 / 35.0;

#[inline]
fn range(lo: f64, x: f64, hi: f64) -> bool {
    lo <= x && x < hi
}

impl LedgerPoint<'_> {
    fn t(&self, k: usize) -> f64 {
        self.t[k - 1]
    }

    /// `1 − t₁ − … − t_k`.
    fn rest(&self, k: usize) -> f64 {
        1.0 - self.t[..k].iter().sum::<f64>()
    }

    fn i(&self, xs: &[f64]) -> bool {
        in_i_with(xs, self.p)
    }

    fn j(&self, xs: &[f64]) -> bool {
        in_j_with(xs, self.p)
    }

    /// Shared opening of every ledger: t₁, t₂ in range with (t₁, t₂) in M or N,
    /// then t₃ below min(t₂, (1 − t₁ − t₂)/2) and off I₃.
    fn opening(&self, m_region: bool) -> bool {
        let (t1, t2, t3) = (self.t(1), self.t(2), self.t(3));
        let head = if m_region {
            in_m_with(&t1, &t2, self.p)
        } else {
            in_n_with(&t1, &t2, self.p)
        };
        head && range(ONE_35, t1, 17.0 / 35.0)
            && range(ONE_35, t2, t1.min((1.0 - t1) / 2.0))
            && range(ONE_35, t3, t2.min(self.rest(2) / 2.0))
            && !self.i(&[t1, t2, t3])
    }

    /// Opening of U_M* (`n0 = false`) and U_N01…U_N07 (`n0 = true`) through t₄.
    fn base_a(&self, n0: bool) -> bool {
        let (t1, t2, t3, t4) = (self.t(1), self.t(2), self.t(3), self.t(4));
        self.opening(!n0)
            && (!n0 || self.j(&[t1, t2, t3]))
            && range(ONE_35, t4, t3.min(self.rest(3) / 2.0))
            && !self.i(&[t1, t2, t3, t4])
    }

    fn j5_repeat_t4(&self) -> bool {
        let (t1, t2, t3, t4) = (self.t(1), self.t(2), self.t(3), self.t(4));
        self.j(&[t1, t2, t3, t4, t4])
    }

    fn j4_pair(&self) -> (bool, bool) {
        let (t1, t2, t3, t4) = (self.t(1), self.t(2), self.t(3), self.t(4));
        (self.j(&[t1, t2, t3, t4]), self.j(&[self.rest(4), t2, t3, t4]))
    }

    fn a1(&self, n0: bool) -> bool {
        let (a, b) = self.j4_pair();
        self.base_a(n0) && !self.j5_repeat_t4() && (!a || !b)
    }

    fn a2(&self, n0: bool) -> bool {
        let t5 = self.t(5);
        self.a1(n0) && self.t(4) < t5 && t5 < self.rest(4) / 2.0 && self.i(&self.t[..5])
    }

    /// t₅, t₆ descending with J₅(t₁…t₄, t₄) affirmed.
    fn a3_head(&self, n0: bool) -> bool {
        let (t4, t5, t6) = (self.t(4), self.t(5), self.t(6));
        self.base_a(n0)
            && self.j5_repeat_t4()
            && range(ONE_35, t5, t4.min(self.rest(4) / 2.0))
            && !self.i(&self.t[..5])
            && range(ONE_35, t6, t5.min(self.rest(5) / 2.0))
            && !self.i(&self.t[..6])
    }

    fn j7_repeat_t6(&self) -> bool {
        let mut xs = [0.0; 7];
        xs[..6].copy_from_slice(&self.t[..6]);
        xs[6] = self.t(6);
        self.j(&xs)
    }

    fn a3(&self, n0: bool) -> bool {
        self.a3_head(n0) && !self.j7_repeat_t6()
    }

    fn a5(&self, n0: bool) -> bool {
        let (t6, t7, t8) = (self.t(6), self.t(7), self.t(8));
        self.a3_head(n0)
            && self.j7_repeat_t6()
            && range(ONE_35, t7, t6.min(self.rest(6) / 2.0))
            && !self.i(&self.t[..7])
            && range(ONE_35, t8, t7.min(self.rest(7) / 2.0))
            && !self.i(&self.t[..8])
    }

    /// Role-reversed opening: J₄ pair affirmed, t₅ descending, t₆ < t₁/2.
    fn a4_head(&self, n0: bool) -> bool {
        let (t1, t2, t3, t4, t5, t6) = (self.t(1), self.t(2), self.t(3), self.t(4), self.t(5), self.t(6));
        let (a, b) = self.j4_pair();
        self.base_a(n0)
            && !self.j5_repeat_t4()
            && a
            && b
            && range(ONE_35, t5, t4.min(self.rest(4) / 2.0))
            && !self.i(&self.t[..5])
            && range(ONE_35, t6, t1 / 2.0)
            && !self.i(&[self.rest(5), t2, t3, t4, t5, t6])
    }

    fn j7_outer(&self) -> bool {
        let (t2, t3, t4, t5, t6) = (self.t(2), self.t(3), self.t(4), self.t(5), self.t(6));
        self.j(&[self.rest(5), t2, t3, t4, t5, t6, t6])
    }

    fn j7_inner(&self) -> bool {
        let (t1, t2, t3, t4, t5, t6) = (self.t(1), self.t(2), self.t(3), self.t(4), self.t(5), self.t(6));
        self.j(&[t1 - t6, t2, t3, t4, t5, t6, t5])
    }

    fn a4(&self, n0: bool) -> bool {
        self.a4_head(n0) && !self.j7_outer() && !self.j7_inner()
    }

    fn a6(&self, n0: bool) -> bool {
        let (t1, t2, t3, t4, t5, t6, t7, t8) = self.eight();
        let r5 = self.rest(5);
        self.a4_head(n0)
            && self.j7_outer()
            && range(ONE_35, t7, t6.min((t1 - t6) / 2.0))
            && !self.i(&[r5, t2, t3, t4, t5, t6, t7])
            && range(ONE_35, t8, t7.min((t1 - t6 - t7) / 2.0))
            && !self.i(&[r5, t2, t3, t4, t5, t6, t7, t8])
    }

    fn a7(&self, n0: bool) -> bool {
        let (t1, t2, t3, t4, t5, t6, t7, t8) = self.eight();
        let r5 = self.rest(5);
        self.a4_head(n0)
            && !self.j7_outer()
            && self.j7_inner()
            && range(ONE_35, t7, t5.min(r5 / 2.0))
            && !self.i(&[t1 - t6, t2, t3, t4, t5, t6, t7])
            && range(ONE_35, t8, t7.min((r5 - t7) / 2.0))
            && !self.i(&[t1 - t6, t2, t3, t4, t5, t6, t7, t8])
    }

    fn eight(&self) -> (f64, f64, f64, f64, f64, f64, f64, f64) {
        let t = self.t;
        (t[0], t[1], t[2], t[3], t[4], t[5], t[6], t[7])
    }

    /// Opening of U_N08…U_N14: (t₁, t₂, t₃) off J₃, t₄ < t₁/2, with
    /// Q = 1 − t₁ − t₂ − t₃ taking the place of t₁.
    fn base_b(&self) -> bool {
        let (t1, t2, t3, t4) = (self.t(1), self.t(2), self.t(3), self.t(4));
        self.opening(false)
            && !self.j(&[t1, t2, t3])
            && range(ONE_35, t4, t1 / 2.0)
            && !self.i(&[self.rest(3), t2, t3, t4])
    }

    fn j5_q(&self) -> bool {
        let (t2, t3, t4) = (self.t(2), self.t(3), self.t(4));
        self.j(&[self.rest(3), t2, t3, t4, t4])
    }

    fn j5_diff(&self) -> bool {
        let (t1, t2, t3, t4) = (self.t(1), self.t(2), self.t(3), self.t(4));
        self.j(&[t1 - t4, t2, t3, t4, t3])
    }

    fn j4_q_pair(&self) -> (bool, bool) {
        let (t1, t2, t3, t4) = (self.t(1), self.t(2), self.t(3), self.t(4));
        let q = self.rest(3);
        (self.j(&[q, t2, t3, t4]), self.j(&[q, t1 - t4, t3, t2.min(t4)]))
    }

    fn b08(&self) -> bool {
        let (a, b) = self.j4_q_pair();
        self.base_b() && !self.j5_q() && !self.j5_diff() && (!a || !b)
    }

    fn b09_tail(&self) -> bool {
        let (t1, t2, t3, t4, t5) = (self.t(1), self.t(2), self.t(3), self.t(4), self.t(5));
        t4 < t5 && t5 < (t1 - t4) / 2.0 && self.i(&[self.rest(3), t2, t3, t4, t5])
    }

    fn b10_tail(&self, s: f64) -> bool {
        let (t1, t2, t3, t4) = (self.t(1), self.t(2), self.t(3), self.t(4));
        t3 < s && s < self.rest(3) / 2.0 && self.i(&[t1 - t4, t2, t3, t4, s])
    }

    fn b12(&self) -> bool {
        let (t1, t2, t3, t4, t5, t6) = (self.t(1), self.t(2), self.t(3), self.t(4), self.t(5), self.t(6));
        let q = self.rest(3);
        self.base_b()
            && self.j5_q()
            && range(ONE_35, t5, t4.min((t1 - t4) / 2.0))
            && !self.i(&[q, t2, t3, t4, t5])
            && range(ONE_35, t6, t5.min((t1 - t4 - t5) / 2.0))
            && !self.i(&[q, t2, t3, t4, t5, t6])
    }

    fn b13(&self) -> bool {
        let (t1, t2, t3, t4, t5, t6) = (self.t(1), self.t(2), self.t(3), self.t(4), self.t(5), self.t(6));
        let q = self.rest(3);
        self.base_b()
            && !self.j5_q()
            && self.j5_diff()
            && range(ONE_35, t5, t3.min(q / 2.0))
            && !self.i(&[t1 - t4, t2, t3, t4, t5])
            && range(ONE_35, t6, t5.min((q - t5) / 2.0))
            && !self.i(&[t1 - t4, t2, t3, t4, t5, t6])
    }

    fn b14(&self) -> bool {
        let (t1, t2, t3, t4, t5, t6) = (self.t(1), self.t(2), self.t(3), self.t(4), self.t(5), self.t(6));
        let q = self.rest(3);
        let (a, b) = self.j4_q_pair();
        self.base_b()
            && !self.j5_q()
            && !self.j5_diff()
            && a
            && b
            && range(ONE_35, t5, t4.min((t1 - t4) / 2.0))
            && !self.i(&[q, t2, t3, t4, t5])
            && range(ONE_35, t6, t2.max(t4) / 2.0)
            && !self.i(&[q, t1 - t4 - t5, t3, t5, t6, t2.min(t4)])
    }

    fn check(&self, ledger: Ledger) -> bool {
        use Ledger::*;
        match ledger {
            M1 => self.a1(false),
            M2 => self.a2(false),
            M3 => self.a3(false),
            M4 => self.a4(false),
            M5 => self.a5(false),
            M6 => self.a6(false),
            M7 => self.a7(false),
            N01 => self.a1(true),
            N02 => self.a2(true),
            N03 => self.a3(true),
            N04 => self.a4(true),
            N05 => self.a5(true),
            N06 => self.a6(true),
            N07 => self.a7(true),
            N08 => self.b08(),
            N09 => self.b08() && self.b09_tail(),
            N10 => self.b08() && self.b10_tail(self.t(5)),
            N11 => self.b08() && self.b09_tail() && self.b10_tail(self.t(6)),
            N12 => self.b12(),
            N13 => self.b13(),
            N14 => self.b14(),
        }
    }
}
