use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use crate::scalar::{self, Scalar};

type CoeffFn = dyn Fn(u64) -> Scalar + Send + Sync;

/// `|v_m| ≤ exp(log_amplitude + m · log_ratio)` for every `m` in the tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub log_amplitude: f64,
    pub log_ratio: f64,
}

impl Decay {
    pub fn new(amplitude: f64, ratio: f64) -> Self {
        Decay { log_amplitude: amplitude.ln(), log_ratio: ratio.ln() }
    }

    pub fn bound_at(&self, m: u64) -> f64 {
        (self.log_amplitude + m as f64 * self.log_ratio).exp()
    }

    fn combine(a: Decay, b: Decay) -> Decay {
        // A ρ^m + B σ^m ≤ (A + B)·max(ρ, σ)^m
        let hi = a.log_amplitude.max(b.log_amplitude);
        let lo = a.log_amplitude.min(b.log_amplitude);
        Decay {
            log_amplitude: hi + (lo - hi).exp().ln_1p(),
            log_ratio: a.log_ratio.max(b.log_ratio),
        }
    }
}

/// An unbounded support range `[start, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub start: u64,
    pub decay: Option<Decay>,
}

/// A coordinate sequence `(v_m)_{m≥0}` given by a pure coefficient function
/// and a support descriptor outside which every coefficient is zero.
#[derive(Clone)]
pub struct LazyVector {
    coeff: Arc<CoeffFn>,
    ranges: Vec<Range<u64>>,
    tail: Option<Tail>,
}

impl fmt::Debug for LazyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LazyVector")
            .field("ranges", &self.ranges)
            .field("tail", &self.tail)
            .finish_non_exhaustive()
    }
}

fn merge(mut ranges: Vec<Range<u64>>) -> Vec<Range<u64>> {
    ranges.retain(|r| r.start < r.end);
    ranges.sort_by_key(|r| r.start);
    let mut out: Vec<Range<u64>> = Vec::with_capacity(ranges.len());
    for r in ranges {
        match out.last_mut() {
            Some(last) if r.start <= last.end => last.end = last.end.max(r.end),
            _ => out.push(r),
        }
    }
    out
}

impl LazyVector {
    pub fn from_fn(
        coeff: impl Fn(u64) -> Scalar + Send + Sync + 'static,
        ranges: Vec<Range<u64>>,
        tail: Option<Tail>,
    ) -> Self {
        let mut ranges = merge(ranges);
        if let Some(t) = tail {
            // ranges fully inside the tail are redundant
            ranges.retain(|r| r.start < t.start);
            if let Some(last) = ranges.last_mut() {
                last.end = last.end.min(t.start);
            }
        }
        LazyVector { coeff: Arc::new(coeff), ranges, tail }
    }

    pub fn zero() -> Self {
        Self::from_fn(|_| scalar::zero(), Vec::new(), None)
    }

    /// `e_m`.
    pub fn unit(m: u64) -> Self {
        Self::from_terms([(m, scalar::one())])
    }

    /// A finitely supported vector. Repeated indices are summed.
    pub fn from_terms(terms: impl IntoIterator<Item = (u64, Scalar)>) -> Self {
        let mut map: BTreeMap<u64, Scalar> = BTreeMap::new();
        for (m, c) in terms {
            let slot = map.entry(m).or_insert_with(scalar::zero);
            *slot = &*slot + &c;
        }
        map.retain(|_, c| !scalar::is_zero(c));
        let ranges = map.keys().map(|&m| m..m + 1).collect();
        Self::from_fn(move |m| map.get(&m).cloned().unwrap_or_else(scalar::zero), ranges, None)
    }

    pub fn ranges(&self) -> &[Range<u64>] {
        &self.ranges
    }

    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    pub fn in_support(&self, m: u64) -> bool {
        self.tail.is_some_and(|t| m >= t.start) || self.ranges.iter().any(|r| r.contains(&m))
    }

    pub fn is_finite(&self) -> bool {
        self.tail.is_none()
    }

    /// `v_m`; zero outside the support.
    pub fn coeff(&self, m: u64) -> Scalar {
        if self.in_support(m) {
            (self.coeff)(m)
        } else {
            scalar::zero()
        }
    }

    /// Indices of the finite part, in increasing order.
    pub fn finite_indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.ranges.iter().flat_map(|r| r.clone())
    }

    pub fn scale(&self, c: &Scalar) -> LazyVector {
        let f = self.coeff.clone();
        let c2 = c.clone();
        let abs = scalar::abs_f64(c);
        let tail = self.tail.map(|t| Tail {
            start: t.start,
            decay: t.decay.map(|d| Decay { log_amplitude: d.log_amplitude + abs.ln(), ..d }),
        });
        LazyVector { coeff: Arc::new(move |m| &f(m) * &c2), ranges: self.ranges.clone(), tail }
    }

    pub fn add(&self, other: &LazyVector) -> LazyVector {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &LazyVector) -> LazyVector {
        self.combine(other, true)
    }

    fn combine(&self, other: &LazyVector, negate: bool) -> LazyVector {
        let (a, b) = (self.clone(), other.clone());
        let coeff = move |m: u64| {
            let (x, y) = (a.coeff(m), b.coeff(m));
            if negate {
                &x - &y
            } else {
                &x + &y
            }
        };
        let finite_end = |v: &LazyVector| v.ranges.last().map_or(0, |r| r.end);
        let tail = match (self.tail, other.tail) {
            (None, None) => None,
            (Some(t), None) => Some(Tail { start: t.start.max(finite_end(other)), ..t }),
            (None, Some(t)) => Some(Tail { start: t.start.max(finite_end(self)), ..t }),
            (Some(s), Some(t)) => Some(Tail {
                start: s.start.max(t.start),
                decay: match (s.decay, t.decay) {
                    (Some(x), Some(y)) => Some(Decay::combine(x, y)),
                    _ => None,
                },
            }),
        };
        let mut ranges: Vec<Range<u64>> = self.ranges.iter().chain(&other.ranges).cloned().collect();
        if let Some(t) = tail {
            for v in [self.tail, other.tail].into_iter().flatten() {
                if v.start < t.start {
                    ranges.push(v.start..t.start);
                }
            }
        }
        LazyVector::from_fn(coeff, ranges, tail)
    }

    /// Shifts coordinates down by `n` (dropping the first `n`) and rescales
    /// the decay certificate by `factor_log = ln|factor|`, the log-modulus of
    /// the scalar the caller multiplies in.
    pub(crate) fn shifted_down(&self, n: u64, factor: Scalar, factor_log: f64) -> LazyVector {
        let f = self.coeff.clone();
        let src = self.clone();
        let ranges = self
            .ranges
            .iter()
            .filter(|r| r.end > n)
            .map(|r| r.start.saturating_sub(n)..r.end - n)
            .collect();
        let tail = self.tail.map(|t| Tail {
            start: t.start.saturating_sub(n),
            decay: t.decay.map(|d| Decay {
                log_amplitude: d.log_amplitude + factor_log + n as f64 * d.log_ratio,
                log_ratio: d.log_ratio,
            }),
        });
        LazyVector::from_fn(
            move |m| {
                let idx = m + n;
                if src.in_support(idx) {
                    &f(idx) * &factor
                } else {
                    scalar::zero()
                }
            },
            ranges,
            tail,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{integer, real};

    #[test]
    fn coefficients_vanish_off_support() {
        let v = LazyVector::from_fn(|_| real(integer(7)), vec![2..4], None);
        assert!(scalar::is_zero(&v.coeff(1)));
        assert_eq!(v.coeff(3), real(integer(7)));
        assert!(scalar::is_zero(&v.coeff(4)));
    }

    #[test]
    fn sums_merge_supports() {
        let a = LazyVector::from_terms([(1, real(integer(2))), (5, real(integer(1)))]);
        let b = LazyVector::from_terms([(1, real(integer(2))), (3, real(integer(4)))]);
        let diff = a.sub(&b);
        assert!(scalar::is_zero(&diff.coeff(1)));
        assert_eq!(diff.coeff(3), real(integer(-4)));
        assert_eq!(diff.coeff(5), real(integer(1)));
        assert_eq!(a.add(&b).ranges(), &[1..2, 3..4, 5..6]);
    }

    #[test]
    fn tails_absorb_finite_parts() {
        let t = LazyVector::from_fn(|_| real(integer(1)), vec![], Some(Tail { start: 4, decay: Some(Decay::new(1.0, 0.5)) }));
        let f = LazyVector::from_terms([(10, real(integer(3)))]);
        let s = t.add(&f);
        assert_eq!(s.tail().unwrap().start, 11);
        assert_eq!(s.ranges(), &[4..11]);
        assert_eq!(s.coeff(10), real(integer(4)));
    }
}
