mod common;

use num::{BigInt, BigRational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sieve_verifier::regions::*;

const N: usize = 100_000;

#[test]
fn i_matches_two_colouring_per_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dim in 2..=8 {
        let mut hits = 0;
        for _ in 0..N {
            let t = common::random_tuple(&mut rng, dim);
            let want = common::oracle_i(&t);
            assert_eq!(in_i(&t), want, "{t:?}");
            hits += usize::from(want);
        }
        assert!(hits > N / 100 && hits < N * 99 / 100, "dim {dim}: {hits} members");
    }
}

#[test]
fn j_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut hits = 0;
    for i in 0..N {
        let dim = 2 + i % 7;
        let t = common::random_tuple(&mut rng, dim);
        let want = common::oracle_j(&t);
        assert_eq!(in_j(&t), want, "{t:?}");
        hits += usize::from(want);
    }
    assert!(hits > N / 100 && hits < N * 99 / 100, "{hits} members");
}

/// Shrinking one coordinate of a J tuple is expected to stay in J; the
/// count of exceptions is printed rather than asserted.
#[test]
fn j_reduction_is_logged() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut tried, mut violations) = (0usize, 0usize);
    while tried < N {
        let dim = rng.random_range(2..=8);
        let t = common::random_tuple(&mut rng, dim);
        if !in_j(&t) {
            continue;
        }
        tried += 1;
        let mut s = t.clone();
        let k = rng.random_range(0..dim);
        s[k] *= rng.random_range(0.0..1.0);
        if !in_j(&s) {
            violations += 1;
            if violations <= 5 {
                println!("J reduction violated: {t:?} -> {s:?}");
            }
        }
    }
    println!("J reduction: {violations} violations in {tried} shrinks");
}

#[test]
fn i_window_is_stable_outside_the_subset() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut checked = 0;
    while checked < N / 5 {
        let dim = rng.random_range(2..=8);
        let t = common::random_tuple(&mut rng, dim);
        let Some(mask) = (1..1usize << dim).find(|m| {
            let s: f64 = (0..dim).filter(|i| m >> i & 1 == 1).map(|i| t[i]).sum();
            (common::A..=common::B).contains(&s)
        }) else {
            continue;
        };
        let mut u = t.clone();
        for (i, x) in u.iter_mut().enumerate() {
            if mask >> i & 1 == 0 {
                *x = rng.random_range(0.0..0.5);
            }
        }
        assert!(in_i(&u), "{t:?} -> {u:?}");
        checked += 1;
    }
}

#[test]
fn l_m_n_t0_partition_the_triangle() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..N {
        let m = rng.random_range(0.0..0.6);
        let n = rng.random_range(0.0..=m);
        let flags = [in_l(&m, &n), in_m(&m, &n), in_n(&m, &n), in_t0(&m, &n)];
        assert_eq!(flags.iter().filter(|&&f| f).count(), 1, "({m}, {n}): {flags:?}");
    }
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[test]
fn threshold_points_agree_between_exact_and_float() {
    let cases: [(&str, Vec<(i64, i64)>); 6] = [
        ("T22", vec![(18, 35), (9, 35), (9, 140)]),
        ("T23", vec![(18, 35), (9, 70), (9, 70)]),
        ("T0", vec![(17, 35), (1, 35)]),
        ("T0", vec![(9, 35), (9, 35)]),
        ("T1", vec![(18, 35), (9, 35)]),
        ("L", vec![(7, 20), (53, 255)]),
    ];
    for (name, pts) in cases {
        let exact: Vec<BigRational> = pts.iter().map(|&(n, d)| q(n, d)).collect();
        let float: Vec<f64> = pts.iter().map(|&(n, d)| n as f64 / d as f64).collect();
        let (e, f) = match name {
            "T22" => (in_t22(&exact[0], &exact[1], &exact[2]), in_t22(&float[0], &float[1], &float[2])),
            "T23" => (in_t23(&exact[0], &exact[1], &exact[2]), in_t23(&float[0], &float[1], &float[2])),
            "T0" => (in_t0(&exact[0], &exact[1]), in_t0(&float[0], &float[1])),
            "T1" => (in_t1(&exact[0], &exact[1]), in_t1(&float[0], &float[1])),
            _ => (in_l(&exact[0], &exact[1]), in_l(&float[0], &float[1])),
        };
        assert!(e, "{name} {pts:?} exact");
        assert_eq!(e, f, "{name} {pts:?}");
    }
}

/// Fine rational lattice; a prime denominator keeps sums off the thresholds,
/// so both evaluations must agree exactly.
#[test]
fn lattice_points_agree_between_exact_and_float() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let den = 2521;
    for _ in 0..20_000 {
        let dim = rng.random_range(2..=5);
        let nums: Vec<i64> = (0..dim).map(|_| rng.random_range(0..den / 2)).collect();
        let exact: Vec<BigRational> = nums.iter().map(|&n| q(n, den)).collect();
        let float: Vec<f64> = nums.iter().map(|&n| n as f64 / den as f64).collect();
        assert_eq!(in_i(&exact), in_i(&float), "{nums:?}");
        assert_eq!(in_j(&exact), in_j(&float), "{nums:?}");
    }
}
