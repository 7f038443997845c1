//! Buchstab's function ω(u) and the piecewise bounds used by the loss integrals.
//!
//! ω is the continuous solution of
//!
//! ```text
//!     ω(u) = 1/u              1 ≤ u ≤ 2
//!     (u ω(u))' = ω(u − 1)    u ≥ 2
//! ```
//!
//! [`BuchstabTable`] integrates the delay equation on a uniform grid. The free
//! functions [`omega_lower`], [`omega_upper`] and [`omega_simple_upper`] are the
//! closed-form bounds the integrands are allowed to use in place of ω.

use std::sync::OnceLock;

use thiserror::Error;

/// Lower bound for ω on `u ≥ 4`.
pub const TAIL_LOWER: f64 = 0.5612;
/// Upper bound for ω on `u ≥ 4`.
pub const TAIL_UPPER: f64 = 0.5617;
/// Floor of the closed form on `3 ≤ u < 4`.
pub const MID_FLOOR: f64 = 0.5607;
/// Ceiling of the closed form on `3 ≤ u < 4`.
pub const MID_CEILING: f64 = 0.5644;
/// Constant of the coarse bound `ω(u) ≤ max(1/u, 0.5672)`.
pub const SIMPLE_BOUND: f64 = 0.5672;

pub const DEFAULT_STEP: f64 = 1e-4;
pub const DEFAULT_U_MAX: f64 = 8.0;
pub const MAX_U_MAX: f64 = 40.0;
pub const MAX_STEP: f64 = 1e-3;

/// Slack allowed between the integrated table and the closed-form bounds.
pub const BOUND_SLACK: f64 = 1e-6;

const SIMPSON_PANELS: usize = 64;
const MID_CACHE_PANELS: usize = 8192;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuchstabError {
    #[error("omega is defined for u >= 1 only (got u = {0})")]
    Domain(f64),
    #[error("invalid table parameters: {0}")]
    Parameters(String),
    #[error(
        "step {step} too coarse: table value {value} at grid point u = {u} \
         lies outside [{lower}, {upper}]"
    )]
    BoundViolation {
        step: f64,
        u: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },
}

/// How the `3 ≤ u < 4` branch of ω₀/ω₁ treats its printed floor and ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MidRange {
    /// ω₀ = max(closed form, 0.5607), ω₁ = min(closed form, 0.5644).
    #[default]
    Clamped,
    /// The bare closed form for both bounds.
    Unclamped,
}

/// ω sampled at `u_start + k * step`, `k = 0, 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct BuchstabTable {
    u_start: f64,
    step: f64,
    values: Vec<f64>,
    u_max: f64,
}

impl BuchstabTable {
    /// Table with the default grid (`u_max = 8`, `step = 1e-4`).
    pub fn with_defaults() -> Self {
        Self::build(DEFAULT_U_MAX, DEFAULT_STEP).expect("default Buchstab table parameters are valid")
    }

    /// Integrates `(u ω(u))' = ω(u − 1)` forward from `u = 2` with the
    /// trapezoidal rule on `F(u) = u ω(u)`. The delay term is read from the
    /// part of the table that is already finished.
    pub fn build(u_max: f64, step: f64) -> Result<Self, BuchstabError> {
        if !(u_max.is_finite() && (4.0..=MAX_U_MAX).contains(&u_max)) {
            return Err(BuchstabError::Parameters(format!(
                "u_max must lie in [4, {MAX_U_MAX}], got {u_max}"
            )));
        }
        if !(step.is_finite() && step > 0.0 && step <= MAX_STEP) {
            return Err(BuchstabError::Parameters(format!(
                "step must lie in (0, {MAX_STEP}], got {step}"
            )));
        }

        let n = ((u_max - 1.0) / step).ceil() as usize;
        let mut table = BuchstabTable {
            u_start: 1.0,
            step,
            values: Vec::with_capacity(n + 1),
            u_max: 1.0 + n as f64 * step,
        };

        let mut prev_u = 1.0;
        let mut prev_f = 1.0;
        for k in 0..=n {
            let u = 1.0 + k as f64 * step;
            if u <= 2.0 {
                table.values.push(1.0 / u);
                prev_u = u;
                prev_f = 1.0;
                continue;
            }
            // The first step past 2 starts from F(2) = 1.
            let (start_u, start_f) = if prev_u < 2.0 { (2.0, 1.0) } else { (prev_u, prev_f) };
            let delay_start = table.interpolate(start_u - 1.0);
            let delay_end = table.interpolate(u - 1.0);
            let f = start_f + 0.5 * (u - start_u) * (delay_start + delay_end);
            table.values.push(f / u);
            prev_u = u;
            prev_f = f;
        }

        table.check_bounds()?;
        Ok(table)
    }

    fn check_bounds(&self) -> Result<(), BuchstabError> {
        for (k, &value) in self.values.iter().enumerate() {
            let u = self.grid_point(k);
            if u < 2.0 {
                continue;
            }
            let lower = lower_bound_cached(u, MidRange::Clamped) - BOUND_SLACK;
            let upper = upper_bound_cached(u, MidRange::Clamped) + BOUND_SLACK;
            if !(lower..=upper).contains(&value) {
                return Err(BuchstabError::BoundViolation {
                    step: self.step,
                    u,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    pub fn u_start(&self) -> f64 {
        self.u_start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Last grid point; beyond it [`eval`](Self::eval) returns the last value.
    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_point(&self, k: usize) -> f64 {
        self.u_start + k as f64 * self.step
    }

    /// ω(u) by linear interpolation; constant tail past `u_max`.
    pub fn eval(&self, u: f64) -> Result<f64, BuchstabError> {
        if u.is_nan() || u < 1.0 {
            return Err(BuchstabError::Domain(u));
        }
        Ok(self.interpolate(u))
    }

    /// Unchecked variant of [`eval`](Self::eval) for hot loops. `u` must be at least 1.
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        debug_assert!(u >= 1.0, "omega evaluated at u = {u}");
        self.interpolate(u)
    }

    #[inline]
    fn interpolate(&self, u: f64) -> f64 {
        let x = (u - self.u_start) / self.step;
        let last = self.values.len() - 1;
        if x >= last as f64 {
            return self.values[last];
        }
        let x = x.max(0.0);
        let lo = x as usize;
        let frac = x - lo as f64;
        let a = self.values[lo];
        if frac == 0.0 {
            return a;
        }
        a + frac * (self.values[lo + 1] - a)
    }
}

/// `∫₂^x log(t − 1)/t dt` for `2 ≤ x ≤ 3`, fixed 64-panel composite Simpson.
pub fn log_ratio_integral(x: f64) -> f64 {
    let a = 2.0;
    if x <= a {
        return 0.0;
    }
    let h = (x - a) / SIMPSON_PANELS as f64;
    let f = |t: f64| (t - 1.0).ln() / t;
    let mut sum = f(a) + f(x);
    for i in 1..SIMPSON_PANELS {
        let t = a + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 * f(t) } else { 2.0 * f(t) };
    }
    sum * h / 3.0
}

/// Unclamped closed form of ω on `3 ≤ u < 4`.
pub fn mid_closed_form(u: f64) -> f64 {
    (1.0 + (u - 1.0).ln()) / u + log_ratio_integral(u - 1.0) / u
}

fn mid_cache() -> &'static [f64] {
    static CACHE: OnceLock<Vec<f64>> = OnceLock::new();
    CACHE.get_or_init(|| {
        (0..=MID_CACHE_PANELS)
            .map(|i| mid_closed_form(3.0 + i as f64 / MID_CACHE_PANELS as f64))
            .collect()
    })
}

#[inline]
fn mid_closed_form_cached(u: f64) -> f64 {
    let cache = mid_cache();
    let x = ((u - 3.0) * MID_CACHE_PANELS as f64).clamp(0.0, MID_CACHE_PANELS as f64);
    let lo = (x as usize).min(MID_CACHE_PANELS - 1);
    let frac = x - lo as f64;
    cache[lo] + frac * (cache[lo + 1] - cache[lo])
}

fn check_domain(u: f64) -> Result<(), BuchstabError> {
    if u.is_nan() || u < 1.0 {
        Err(BuchstabError::Domain(u))
    } else {
        Ok(())
    }
}

#[inline]
fn lower_piecewise(u: f64, mode: MidRange, mid: impl Fn(f64) -> f64) -> f64 {
    if u < 2.0 {
        1.0 / u
    } else if u < 3.0 {
        (1.0 + (u - 1.0).ln()) / u
    } else if u < 4.0 {
        match mode {
            MidRange::Clamped => mid(u).max(MID_FLOOR),
            MidRange::Unclamped => mid(u),
        }
    } else {
        TAIL_LOWER
    }
}

#[inline]
fn upper_piecewise(u: f64, mode: MidRange, mid: impl Fn(f64) -> f64) -> f64 {
    if u < 2.0 {
        1.0 / u
    } else if u < 3.0 {
        (1.0 + (u - 1.0).ln()) / u
    } else if u < 4.0 {
        match mode {
            MidRange::Clamped => mid(u).min(MID_CEILING),
            MidRange::Unclamped => mid(u),
        }
    } else {
        TAIL_UPPER
    }
}

/// ω₀(u), the piecewise lower bound.
pub fn omega_lower(u: f64) -> Result<f64, BuchstabError> {
    omega_lower_with(u, MidRange::Clamped)
}

/// ω₁(u), the piecewise upper bound.
pub fn omega_upper(u: f64) -> Result<f64, BuchstabError> {
    omega_upper_with(u, MidRange::Clamped)
}

pub fn omega_lower_with(u: f64, mode: MidRange) -> Result<f64, BuchstabError> {
    check_domain(u)?;
    Ok(lower_piecewise(u, mode, mid_closed_form))
}

pub fn omega_upper_with(u: f64, mode: MidRange) -> Result<f64, BuchstabError> {
    check_domain(u)?;
    Ok(upper_piecewise(u, mode, mid_closed_form))
}

/// `max(1/u, 0.5672)`.
pub fn omega_simple_upper(u: f64) -> Result<f64, BuchstabError> {
    if u.is_nan() || u <= 0.0 {
        return Err(BuchstabError::Domain(u));
    }
    Ok(simple_bound(u))
}

#[inline]
pub(crate) fn simple_bound(u: f64) -> f64 {
    (1.0 / u).max(SIMPLE_BOUND)
}

/// ω₀ with the `[3, 4)` branch read from a precomputed grid (interpolation
/// error below 1e-9). `u ≥ 1` is assumed.
#[inline]
pub fn lower_bound_cached(u: f64, mode: MidRange) -> f64 {
    lower_piecewise(u, mode, mid_closed_form_cached)
}

/// ω₁ counterpart of [`lower_bound_cached`].
#[inline]
pub fn upper_bound_cached(u: f64, mode: MidRange) -> f64 {
    upper_piecewise(u, mode, mid_closed_form_cached)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// ω(3.5) from the closed form, evaluated to 30 digits with an
    /// independent arbitrary-precision quadrature.
    const OMEGA_3_5: f64 = 0.560_828_864_451_588_8;

    fn table() -> &'static BuchstabTable {
        static T: OnceLock<BuchstabTable> = OnceLock::new();
        T.get_or_init(BuchstabTable::with_defaults)
    }

    /// Recursive adaptive Simpson, kept independent of the fixed-panel rule.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            recurse(f, a, m, left, tol / 2.0, depth - 1) + recurse(f, m, b, right, tol / 2.0, depth - 1)
        }
        recurse(f, a, b, simpson(f, a, b), tol, 40)
    }

    #[test]
    fn closed_branch_on_unit_interval() {
        let t = table();
        assert_abs_diff_eq!(t.eval(1.5).unwrap(), 2.0 / 3.0, epsilon = 1e-9);
        assert_eq!(t.eval(1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(t.eval(2.0).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn second_branch_is_exact() {
        let expected = (1.0 + 1.5f64.ln()) / 2.5;
        assert_abs_diff_eq!(expected, 0.562186, epsilon = 1e-6);
        assert_abs_diff_eq!(table().eval(2.5).unwrap(), expected, epsilon = 1e-6);
    }

    #[test]
    fn third_branch_matches_adaptive_quadrature() {
        let f = |t: f64| (t - 1.0).ln() / t;
        let oracle = (1.0 + 2.5f64.ln()) / 3.5 + adaptive_simpson(&f, 2.0, 2.5, 1e-14) / 3.5;
        assert_abs_diff_eq!(oracle, OMEGA_3_5, epsilon = 1e-12);
        assert_abs_diff_eq!(table().eval(3.5).unwrap(), OMEGA_3_5, epsilon = 1e-6);
        assert_abs_diff_eq!(mid_closed_form(3.5), OMEGA_3_5, epsilon = 1e-10);
    }

    #[test]
    fn tail_inside_printed_bounds() {
        let v = table().eval(10.0).unwrap();
        assert!((TAIL_LOWER..=TAIL_UPPER).contains(&v), "{v}");
        for (k, &v) in table().values().iter().enumerate() {
            if table().grid_point(k) >= 4.0 {
                assert!(v >= TAIL_LOWER - 1e-6 && v <= TAIL_UPPER + 1e-6);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert_eq!(table().eval(0.99), Err(BuchstabError::Domain(0.99)));
        assert!(omega_lower(0.5).is_err());
        assert!(omega_upper(f64::NAN).is_err());
        assert!(omega_simple_upper(0.0).is_err());
    }

    #[test]
    fn bad_parameters_rejected() {
        assert!(matches!(BuchstabTable::build(3.0, 1e-4), Err(BuchstabError::Parameters(_))));
        assert!(matches!(BuchstabTable::build(8.0, 2e-3), Err(BuchstabError::Parameters(_))));
        assert!(matches!(BuchstabTable::build(8.0, 0.0), Err(BuchstabError::Parameters(_))));
        assert!(matches!(BuchstabTable::build(41.0, 1e-4), Err(BuchstabError::Parameters(_))));
    }

    #[test]
    fn coarse_step_still_within_slack() {
        // Not on a 1/step-aligned grid: the delay term is interpolated.
        let t = BuchstabTable::build(6.0, 9.7e-4).unwrap();
        assert_abs_diff_eq!(t.eval(2.5).unwrap(), (1.0 + 1.5f64.ln()) / 2.5, epsilon = 1e-6);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(omega_lower(5.0).unwrap(), 0.5612);
        assert_eq!(omega_upper(5.0).unwrap(), 0.5617);
        assert_abs_diff_eq!(omega_lower(1.7).unwrap(), 1.0 / 1.7, epsilon = 1e-15);
        assert_eq!(omega_lower(1.7).unwrap(), omega_upper(1.7).unwrap());
        let at_2_8 = (1.0 + 1.8f64.ln()) / 2.8;
        assert_abs_diff_eq!(at_2_8, 0.567067, epsilon = 1e-6);
        assert_eq!(omega_lower(2.8).unwrap(), at_2_8);
        assert_eq!(omega_upper(2.8).unwrap(), at_2_8);
        assert_abs_diff_eq!(table().eval(2.8).unwrap(), at_2_8, epsilon = 1e-6);
    }

    #[test]
    fn simple_bound_examples() {
        assert_abs_diff_eq!(omega_simple_upper(1.2).unwrap(), 1.0 / 1.2, epsilon = 1e-15);
        assert_eq!(omega_simple_upper(3.0).unwrap(), 0.5672);
        let crossover = 1.0 / 0.5672;
        assert_abs_diff_eq!(crossover, 1.76304, epsilon = 1e-5);
        assert_abs_diff_eq!(omega_simple_upper(crossover).unwrap(), 0.5672, epsilon = 1e-15);
        assert_abs_diff_eq!(omega_simple_upper(crossover - 1e-9).unwrap(), 0.5672, epsilon = 1e-9);
    }

    #[test]
    fn cached_bounds_match_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let u = rng.random_range(1.0..40.0);
            for mode in [MidRange::Clamped, MidRange::Unclamped] {
                let lo = omega_lower_with(u, mode).unwrap();
                let hi = omega_upper_with(u, mode).unwrap();
                assert_abs_diff_eq!(lower_bound_cached(u, mode), lo, epsilon = 1e-9);
                assert_abs_diff_eq!(upper_bound_cached(u, mode), hi, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn sandwich_and_simple_dominance() {
        let t = table();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let u = rng.random_range(1.0..t.u_max());
            let w = t.eval(u).unwrap();
            assert!(omega_lower(u).unwrap() - 1e-6 <= w, "lower bound fails at {u}");
            assert!(w <= omega_upper(u).unwrap() + 1e-6, "upper bound fails at {u}");
            assert!(w <= omega_simple_upper(u).unwrap() + 1e-6, "simple bound fails at {u}");
        }
    }

    #[test]
    fn lipschitz_on_grid() {
        let t = table();
        let h = t.step();
        for pair in t.values().windows(2) {
            assert!((pair[1] - pair[0]).abs() <= 2.0 * h);
        }
    }

    #[test]
    fn halving_the_step_converges() {
        let coarse = table();
        let fine = BuchstabTable::build(DEFAULT_U_MAX, DEFAULT_STEP / 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let u = rng.random_range(1.0..DEFAULT_U_MAX);
            let d = (coarse.eval(u).unwrap() - fine.eval(u).unwrap()).abs();
            assert!(d <= 1e-8, "u = {u}: {d}");
        }
    }

    #[test]
    fn clamping_is_inactive_on_table() {
        // The closed form on [3, 4) stays inside [0.5607, 0.5644].
        for i in 0..=1000 {
            let u = 3.0 + i as f64 / 1000.0 * 0.999_999;
            let c = mid_closed_form(u);
            assert!((MID_FLOOR..=MID_CEILING).contains(&c), "u = {u}: {c}");
        }
    }
}
