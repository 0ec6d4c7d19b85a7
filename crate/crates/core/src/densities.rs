//! Counting and density estimators for sets of positive integers.
//!
//! A set is anything implementing [`IntegerSet`]: a deterministic membership
//! predicate, with enumeration and counting derived from it. Implementors
//! that know their own structure (the dyadic block sets, for instance)
//! override [`IntegerSet::count_up_to`] with closed-form counting so that
//! horizons far beyond what a scan could reach remain cheap.
//!
//! All ratios are exact [`Rational`]s.

use std::collections::BTreeSet;
use std::io::Write;

use num::bigint::BigInt;
use num::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scalar::{rational_to_f64, Rational};

/// A set `A ⊆ {1, 2, 3, …}` seen through its membership predicate.
pub trait IntegerSet: Sync {
    /// Deterministic membership test. `0` is never a member.
    fn contains(&self, n: u64) -> bool;

    /// Strictly increasing list of members `≤ horizon`.
    fn members_up_to(&self, horizon: u64) -> Vec<u64> {
        (1..=horizon).filter(|&n| self.contains(n)).collect()
    }

    /// `#(A ∩ [1, horizon])`.
    fn count_up_to(&self, horizon: u64) -> u64 {
        (1..=horizon).filter(|&n| self.contains(n)).count() as u64
    }
}

impl<S: IntegerSet + ?Sized> IntegerSet for &S {
    fn contains(&self, n: u64) -> bool {
        (**self).contains(n)
    }
    fn members_up_to(&self, horizon: u64) -> Vec<u64> {
        (**self).members_up_to(horizon)
    }
    fn count_up_to(&self, horizon: u64) -> u64 {
        (**self).count_up_to(horizon)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EmptySet;

impl IntegerSet for EmptySet {
    fn contains(&self, _: u64) -> bool {
        false
    }
    fn members_up_to(&self, _: u64) -> Vec<u64> {
        Vec::new()
    }
    fn count_up_to(&self, _: u64) -> u64 {
        0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AllIntegers;

impl IntegerSet for AllIntegers {
    fn contains(&self, n: u64) -> bool {
        n >= 1
    }
    fn count_up_to(&self, horizon: u64) -> u64 {
        horizon
    }
}

/// The positive multiples of `step`.
#[derive(Debug, Clone, Copy)]
pub struct Multiples(pub u64);

impl IntegerSet for Multiples {
    fn contains(&self, n: u64) -> bool {
        n >= 1 && n % self.0 == 0
    }
    fn members_up_to(&self, horizon: u64) -> Vec<u64> {
        (self.0..=horizon).step_by(self.0 as usize).collect()
    }
    fn count_up_to(&self, horizon: u64) -> u64 {
        horizon / self.0
    }
}

/// A finite set given by its members.
#[derive(Debug, Clone, Default)]
pub struct FiniteSet(pub BTreeSet<u64>);

impl FromIterator<u64> for FiniteSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        FiniteSet(iter.into_iter().filter(|&n| n >= 1).collect())
    }
}

impl IntegerSet for FiniteSet {
    fn contains(&self, n: u64) -> bool {
        self.0.contains(&n)
    }
    fn members_up_to(&self, horizon: u64) -> Vec<u64> {
        self.0.range(1..=horizon).copied().collect()
    }
    fn count_up_to(&self, horizon: u64) -> u64 {
        self.0.range(1..=horizon).count() as u64
    }
}

/// Wraps a pure predicate.
pub struct PredicateSet<F>(pub F);

impl<F: Fn(u64) -> bool + Sync> IntegerSet for PredicateSet<F> {
    fn contains(&self, n: u64) -> bool {
        n >= 1 && (self.0)(n)
    }
}

/// `#(A ∩ [1, N])`. Requires `N ≥ 1`.
pub fn count_up_to(set: &dyn IntegerSet, horizon: u64) -> Result<u64> {
    if horizon == 0 {
        return Err(invalid("counting horizon must be at least 1"));
    }
    Ok(set.count_up_to(horizon))
}

/// One sample `#(A ∩ [1, N]) / N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensitySample {
    pub checkpoint: u64,
    pub count: u64,
}

impl DensitySample {
    /// The ratio in lowest terms.
    pub fn ratio(&self) -> Rational {
        Rational::new(BigInt::from(self.count), BigInt::from(self.checkpoint))
    }

    pub fn ratio_f64(&self) -> f64 {
        self.count as f64 / self.checkpoint as f64
    }
}

/// Finite-horizon samples of the prefix densities of a set.
///
/// `lower_estimate` and `upper_estimate` are the min and max ratio over the
/// last `tail_window` checkpoints. They are estimates of `liminf`/`limsup`,
/// nothing more.
#[derive(Debug, Clone)]
pub struct DensityReport {
    pub samples: Vec<DensitySample>,
    pub tail_window: usize,
    pub lower_estimate: Rational,
    pub upper_estimate: Rational,
}

#[derive(Debug, Serialize)]
struct DensityRow {
    checkpoint: u64,
    count: u64,
    ratio_num: String,
    ratio_den: String,
    ratio_float: f64,
}

impl DensityReport {
    pub fn ratios(&self) -> Vec<Rational> {
        self.samples.iter().map(DensitySample::ratio).collect()
    }

    /// Re-derives the tail estimates over the last `tail` samples.
    pub fn with_tail(mut self, tail: usize) -> Result<Self> {
        if tail == 0 || tail > self.samples.len() {
            return Err(invalid(format!(
                "tail window {tail} outside 1..={}",
                self.samples.len()
            )));
        }
        let ratios = self.ratios();
        let window = &ratios[ratios.len() - tail..];
        self.lower_estimate = window.iter().min().cloned().unwrap();
        self.upper_estimate = window.iter().max().cloned().unwrap();
        self.tail_window = tail;
        Ok(self)
    }

    /// CSV with columns `checkpoint,count,ratio_num,ratio_den,ratio_float`.
    /// The ratio columns hold the fraction in lowest terms.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            let r = s.ratio();
            w.serialize(DensityRow {
                checkpoint: s.checkpoint,
                count: s.count,
                ratio_num: r.numer().to_string(),
                ratio_den: r.denom().to_string(),
                ratio_float: rational_to_f64(&r),
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples `#(A ∩ [1, N]) / N` at each checkpoint. The tail window defaults
/// to the second half of the checkpoints (rounded up).
pub fn density_ratios(set: &dyn IntegerSet, checkpoints: &[u64]) -> Result<DensityReport> {
    if checkpoints.is_empty() {
        return Err(invalid("checkpoint list is empty"));
    }
    if checkpoints[0] == 0 {
        return Err(invalid("checkpoints must be positive"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("checkpoints must be strictly increasing"));
    }
    let samples: Vec<DensitySample> = checkpoints
        .iter()
        .map(|&n| DensitySample { checkpoint: n, count: set.count_up_to(n) })
        .collect();
    let tail = samples.len().div_ceil(2);
    DensityReport {
        samples,
        tail_window: tail,
        lower_estimate: Rational::zero(),
        upper_estimate: Rational::zero(),
    }
    .with_tail(tail)
}

/// Largest relative count `#(A ∩ [a, a + window)) / window` over windows
/// contained in `[1, horizon]`.
///
/// The maximum is attained either at a window starting on a member or at the
/// last admissible start, so only those starts are scanned.
pub fn upper_banach_density_estimate(
    set: &dyn IntegerSet,
    window: u64,
    horizon: u64,
) -> Result<Rational> {
    if window == 0 || window > horizon {
        return Err(invalid(format!("window {window} must lie in 1..={horizon}")));
    }
    let members = set.members_up_to(horizon);
    let last_start = horizon - window + 1;
    let in_window = |start: u64| -> usize {
        let lo = members.partition_point(|&m| m < start);
        let hi = members.partition_point(|&m| m < start + window);
        hi - lo
    };
    let best = members
        .iter()
        .copied()
        .take_while(|&m| m <= last_start)
        .chain(std::iter::once(last_start))
        .map(in_window)
        .max()
        .unwrap_or(0);
    Ok(Rational::new(BigInt::from(best), BigInt::from(window)))
}

/// Convenience for reports: `count / n` as `f64` with exact-to-float rounding.
pub fn ratio_f64(count: u64, n: u64) -> f64 {
    Rational::new(BigInt::from(count), BigInt::from(n)).to_f64().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use proptest::prelude::*;

    #[test]
    fn trivial_counts() {
        assert_eq!(count_up_to(&EmptySet, 100).unwrap(), 0);
        assert_eq!(count_up_to(&AllIntegers, 100).unwrap(), 100);
        assert!(count_up_to(&AllIntegers, 0).is_err());
    }

    #[test]
    fn full_and_even_ratios() {
        let r = density_ratios(&AllIntegers, &[10, 100]).unwrap();
        assert_eq!(r.ratios(), vec![rational(1, 1), rational(1, 1)]);
        let r = density_ratios(&Multiples(2), &[10, 100]).unwrap();
        assert_eq!(r.ratios(), vec![rational(1, 2), rational(1, 2)]);
        assert_eq!(r.lower_estimate, rational(1, 2));
        assert_eq!(r.upper_estimate, rational(1, 2));
    }

    #[test]
    fn ratio_keeps_checkpoint_denominator_before_reduction() {
        let r = density_ratios(&Multiples(2), &[10]).unwrap();
        assert_eq!(r.samples[0].checkpoint, 10);
        assert_eq!(r.samples[0].count, 5);
    }

    #[test]
    fn rejects_bad_checkpoints() {
        assert!(density_ratios(&AllIntegers, &[]).is_err());
        assert!(density_ratios(&AllIntegers, &[10, 10]).is_err());
        assert!(density_ratios(&AllIntegers, &[0, 10]).is_err());
    }

    #[test]
    fn tail_estimates() {
        let set: FiniteSet = [1, 2, 3, 4, 50].into_iter().collect();
        let r = density_ratios(&set, &[4, 10, 50, 100]).unwrap();
        assert_eq!(r.tail_window, 2);
        assert_eq!(r.lower_estimate, rational(1, 20));
        assert_eq!(r.upper_estimate, rational(1, 10));
        let r = r.with_tail(4).unwrap();
        assert_eq!(r.upper_estimate, rational(1, 1));
        assert!(r.with_tail(5).is_err());
    }

    #[test]
    fn banach_estimates() {
        assert_eq!(
            upper_banach_density_estimate(&Multiples(2), 10, 1000).unwrap(),
            rational(1, 2)
        );
        assert_eq!(upper_banach_density_estimate(&EmptySet, 10, 100).unwrap(), rational(0, 1));
        let cluster: FiniteSet = (500..510).collect();
        assert_eq!(upper_banach_density_estimate(&cluster, 10, 1000).unwrap(), rational(1, 1));
        assert!(upper_banach_density_estimate(&cluster, 0, 10).is_err());
        assert!(upper_banach_density_estimate(&cluster, 11, 10).is_err());
    }

    #[test]
    fn csv_layout() {
        let r = density_ratios(&Multiples(4), &[8, 10]).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "checkpoint,count,ratio_num,ratio_den,ratio_float\n8,2,1,4,0.25\n10,2,1,5,0.2\n"
        );
    }

    proptest! {
        #[test]
        fn counts_are_monotone(members in proptest::collection::btree_set(1u64..500, 0..60),
                               a in 1u64..600, b in 1u64..600) {
            let set = FiniteSet(members);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(set.count_up_to(lo) <= set.count_up_to(hi));
            let scanned = set.members_up_to(hi);
            prop_assert!(scanned.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(scanned.len() as u64, set.count_up_to(hi));
        }

        #[test]
        fn banach_dominates_prefix(members in proptest::collection::btree_set(1u64..400, 0..80),
                                   horizon in 1u64..400) {
            let set = FiniteSet(members);
            let prefix = Rational::new(BigInt::from(set.count_up_to(horizon)), BigInt::from(horizon));
            let ub = upper_banach_density_estimate(&set, horizon, horizon).unwrap();
            prop_assert_eq!(&ub, &prefix);
            // a partition of [1, 4w] into four windows averages to the prefix ratio
            let w = (horizon / 4).max(1);
            let h = 4 * w;
            let prefix = Rational::new(BigInt::from(set.count_up_to(h)), BigInt::from(h));
            prop_assert!(upper_banach_density_estimate(&set, w, h).unwrap() >= prefix);
        }
    }
}
