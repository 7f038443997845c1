//! Reference predicates written from the region definitions without using the
//! library's region code.

#![allow(dead_code)]

use rand::Rng;

pub const A: f64 = 17.0 / 35.0;
pub const B: f64 = 18.0 / 35.0;
pub const C: f64 = 9.0 / 35.0;

pub fn t0(a1: f64, a2: f64) -> bool {
    let w = |x: f64| (A..=B).contains(&x);
    w(a1) || w(a2) || w(a1 + a2)
}

pub fn t1(a1: f64, a2: f64) -> bool {
    a1 <= B && a2 <= C
}

pub fn t2(a1: f64, a2: f64, a3: f64) -> bool {
    let t21 = a1 <= B
        && a2 >= a3
        && 0.75 * a2 + a3 <= C
        && a2 + 0.5 * a3 <= C
        && 1.75 * a2 + 1.5 * a3 <= B;
    let t22 = a1 <= B && a2 <= C && a3 <= 9.0 / 140.0;
    let t23 = a1 <= B && 2.0 * a2 + a3 <= B && a3 <= 9.0 / 70.0;
    t21 || t22 || t23
}

/// Group sums for the assignment encoded in base `k` by `code`.
fn sums(t: &[f64], mut code: usize, k: usize) -> [f64; 3] {
    let mut s = [0.0; 3];
    for &x in t {
        s[code % k] += x;
        code /= k;
    }
    s
}

/// Every split of `t` into two labelled groups, checked against T₀.
pub fn oracle_i(t: &[f64]) -> bool {
    (0..1usize << t.len()).any(|c| {
        let s = sums(t, c, 2);
        t0(s[0], s[1])
    })
}

/// Every labelled 2- and 3-group assignment of `t`.
pub fn oracle_j(t: &[f64]) -> bool {
    let n = t.len();
    let two = (0..1usize << n).any(|c| {
        let s = sums(t, c, 2);
        t1(s[0], s[1])
    });
    two || (0..3usize.pow(n as u32)).any(|c| {
        let s = sums(t, c, 3);
        t2(s[0], s[1], s[2])
    })
}

/// U_M1 written out directly.
pub fn oracle_um1(t: &[f64]) -> bool {
    let [t1, t2, t3, t4] = [t[0], t[1], t[2], t[3]];
    let lo = 1.0 / 35.0;
    let rest = |k: usize| 1.0 - t[..k].iter().sum::<f64>();
    let in_m = !t0(t1, t2) && oracle_j(&[t1, t2, t2]);
    in_m && lo <= t1
        && t1 < A
        && lo <= t2
        && t2 < t1.min((1.0 - t1) / 2.0)
        && lo <= t3
        && t3 < t2.min(rest(2) / 2.0)
        && !oracle_i(&[t1, t2, t3])
        && lo <= t4
        && t4 < t3.min(rest(3) / 2.0)
        && !oracle_i(&[t1, t2, t3, t4])
        && !oracle_j(&[t1, t2, t3, t4, t4])
        && !(oracle_j(&[t1, t2, t3, t4]) && oracle_j(&[rest(4), t2, t3, t4]))
}

/// A tuple whose scale varies from tuple to tuple so that both outcomes of
/// the predicates occur often.
pub fn random_tuple(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    let scale = rng.random_range(0.05..0.6);
    (0..dim).map(|_| rng.random_range(0.0..scale)).collect()
}
