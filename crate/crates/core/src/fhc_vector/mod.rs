//! The assembled vector
//!
//! ```text
//! x = Σ_{s≥1} Σ_{k∈D_s} T^(-k) x_s,     x_s = Σ_{|j|≤2^s} a_j^(s) T^j x₀,
//! ```
//!
//! and everything measured on it. Expanding the chain gives
//! `x = Σ_i b_i T^(-i) x₀` with `b_i = a_{k-i}^(s)` on the covering interval
//! `I_{k,s} = [k - 2^s, k + 2^s]` and `b_i = 0` off all of them. For the
//! shift the coordinate of `x` at `m` is `b_m ω^(-m)`, so
//! `⟨e₀*, T^n x⟩ = b_n` exactly and the return set into `Re ⟨e₀*, ·⟩ > 0` is
//! `{n : Re b_n > 0}`.

mod experiment;
mod family;

use std::sync::Arc;

use num::Zero;

use crate::densities::IntegerSet;
use crate::dyadic_sets::{LevelSet, SeparationParams};
use crate::error::{invalid, Error, Result};
use crate::scalar::{self, abs_f64, modulus_sq, powi, Rational, Scalar};
use crate::shift_model::{functional_eval, Decay, LazyVector, NormEstimate, ShiftOperator, Tail};

pub use experiment::{
    CrossOracleReport, DecompositionCheck, DensityExperiment, ExperimentRow, NumericOracle, PredictedLimits,
    ReturnSet, ReturnSetView,
};
pub use family::{build_family, enumerate_dense_family, one_block_family, DyadicEnumerator, Family, FamilyVector};

/// Covering intervals are checked for disjointness up to this index when a
/// vector is assembled.
pub const CONSTRUCTION_CHECK_HORIZON: u64 = 1 << 16;

/// Largest level with a materialised coefficient block.
pub const MAX_LEVEL: u32 = 16;

/// Budget `c_s = s` together with finite-horizon evidence for the three
/// requirements on it: unbounded growth, `ε_s Σ_{s'<s} c_{s'} → 0`, and
/// convergence of `Σ c_s ε_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CSequence {
    s_max: u32,
    /// `ε_s Σ_{s'<s} c_{s'}` for `s = 1..=s_max`.
    pub beta_values: Vec<f64>,
    /// Partial sums `Σ_{s'≤s} c_{s'} ε_{s'}`.
    pub gamma_partial_sums: Vec<f64>,
    /// `c_{s_max+1} ε_{s_max+1}`, the first omitted term.
    pub gamma_next_term: f64,
}

impl CSequence {
    /// `c_s = s`, for every level (not only those up to `s_max`).
    pub fn c(&self, s: u32) -> Rational {
        scalar::integer(s as i64)
    }

    pub fn c_f64(&self, s: u32) -> f64 {
        s as f64
    }

    pub fn s_max(&self) -> u32 {
        self.s_max
    }

    /// `(α)`: the budget grows without bound; evidenced by `c_{s_max}`.
    pub fn alpha_witness(&self) -> Rational {
        self.c(self.s_max)
    }

    pub fn gamma_total(&self) -> f64 {
        *self.gamma_partial_sums.last().expect("s_max >= 1")
    }
}

/// Builds `c_s = s` and its certificates. `eps` must decay doubly
/// exponentially, `ε_{s+1} ≤ 2 ε_s²`, and the series `Σ s ε_s` must have
/// stabilised by `s_max`: the first omitted term must be below two ulps of the
/// partial sum.
pub fn build_c_sequence(eps: &dyn Fn(u32) -> f64, s_max: u32) -> Result<CSequence> {
    if s_max == 0 {
        return Err(invalid("s_max must be at least 1"));
    }
    for s in 1..=s_max {
        let (a, b) = (eps(s), eps(s + 1));
        if !(b <= 2.0 * a * a) {
            return Err(Error::Certificate(format!(
                "ε is not doubly exponential at s = {s}: ε_{s} = {a:e}, ε_{} = {b:e}",
                s + 1
            )));
        }
    }
    let mut beta_values = Vec::new();
    let mut gamma_partial_sums = Vec::new();
    let mut budget = 0.0;
    let mut partial = 0.0;
    for s in 1..=s_max {
        beta_values.push(eps(s) * budget);
        budget += s as f64;
        partial += s as f64 * eps(s);
        gamma_partial_sums.push(partial);
    }
    let gamma_next_term = (s_max + 1) as f64 * eps(s_max + 1);
    if gamma_next_term > 2.0 * f64::EPSILON * partial {
        return Err(Error::Certificate(format!(
            "Σ c_s ε_s has not stabilised by s = {s_max}: next term {gamma_next_term:e} against partial sum {partial:e}"
        )));
    }
    Ok(CSequence { s_max, beta_values, gamma_partial_sums, gamma_next_term })
}

/// `(Σ_{s<r} c_s) ε_r + Σ_{s≥r} c_s ε_s`, the bound on `‖T^n x - x_r‖` for
/// `n ∈ D_r`. The series is summed until its terms underflow.
pub fn fhc_error_bound(cseq: &CSequence, eps: &dyn Fn(u32) -> f64, r: u32) -> f64 {
    let head: f64 = (1..r).map(|s| cseq.c_f64(s)).sum::<f64>() * eps(r);
    let mut tail = 0.0;
    for s in r..r + 64 {
        let term = cseq.c_f64(s) * eps(s);
        if term == 0.0 {
            break;
        }
        tail += term;
    }
    head + tail
}

/// The coefficients `a_j^(s)`, `|j| ≤ 2^s`, of one `x_s`, each bounded by
/// `c_s` in modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBlock {
    s: u32,
    coeffs: Vec<Scalar>,
    positive: Vec<bool>,
    bound: Rational,
}

impl CoefficientBlock {
    pub fn zero(s: u32, bound: Rational) -> Result<Self> {
        Self::new(s, std::iter::empty(), bound)
    }

    /// `entries` lists `(j, a_j)`; unlisted offsets are zero.
    pub fn new(s: u32, entries: impl IntoIterator<Item = (i64, Scalar)>, bound: Rational) -> Result<Self> {
        if s == 0 || s > MAX_LEVEL {
            return Err(invalid(format!("block level {s} outside 1..={MAX_LEVEL}")));
        }
        let radius = 1i64 << s;
        let mut coeffs = vec![scalar::zero(); (2 * radius + 1) as usize];
        let bound_sq = &bound * &bound;
        for (j, a) in entries {
            if j.abs() > radius {
                return Err(invalid(format!("offset {j} outside |j| <= 2^{s}")));
            }
            if modulus_sq(&a) > bound_sq {
                return Err(Error::Construction(format!(
                    "|a_{j}^({s})| = {} exceeds c_{s} = {bound}",
                    abs_f64(&a)
                )));
            }
            coeffs[(j + radius) as usize] = a;
        }
        let positive = coeffs.iter().map(scalar::re_positive).collect();
        Ok(CoefficientBlock { s, coeffs, positive, bound })
    }

    pub fn level(&self) -> u32 {
        self.s
    }

    pub fn radius(&self) -> i64 {
        1i64 << self.s
    }

    pub fn bound(&self) -> &Rational {
        &self.bound
    }

    /// `a_j`, zero outside `|j| ≤ 2^s`.
    pub fn get(&self, j: i64) -> Scalar {
        self.try_get(j).cloned().unwrap_or_else(scalar::zero)
    }

    fn try_get(&self, j: i64) -> Option<&Scalar> {
        let r = self.radius();
        (j.abs() <= r).then(|| &self.coeffs[(j + r) as usize])
    }

    fn re_positive_at(&self, j: i64) -> bool {
        let r = self.radius();
        j.abs() <= r && self.positive[(j + r) as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(scalar::is_zero)
    }

    /// `(j, a_j)` for the non-zero coefficients.
    pub fn entries(&self) -> impl Iterator<Item = (i64, &Scalar)> {
        let r = self.radius();
        self.coeffs.iter().enumerate().filter(|(_, a)| !scalar::is_zero(a)).map(move |(i, a)| (i as i64 - r, a))
    }

    /// Offsets `j` with `Re a_j > 0`.
    pub fn positive_offsets(&self) -> Vec<i64> {
        let r = self.radius();
        (0..self.positive.len()).filter(|&i| self.positive[i]).map(|i| i as i64 - r).collect()
    }

    /// `max_j |a_j|`, as a float.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(abs_f64).fold(0.0, f64::max)
    }
}

struct Inner {
    params: SeparationParams,
    op: ShiftOperator,
    cseq: CSequence,
    blocks: Vec<CoefficientBlock>,
    sets: Vec<LevelSet>,
    max_coeff: f64,
}

/// The vector `x`, immutable and cheap to clone.
#[derive(Clone)]
pub struct AssembledVector {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for AssembledVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AssembledVector")
            .field("params", &self.inner.params)
            .field("op", &self.inner.op)
            .field("s_max", &self.s_max())
            .finish_non_exhaustive()
    }
}

/// Where an index sits: `i ∈ I_{k,s}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cover {
    pub s: u32,
    pub k: u64,
}

impl AssembledVector {
    /// `blocks[s-1]` is the block of level `s`; levels above `blocks.len()`
    /// are zero.
    pub fn new(
        params: SeparationParams,
        op: ShiftOperator,
        cseq: CSequence,
        blocks: Vec<CoefficientBlock>,
    ) -> Result<Self> {
        if blocks.is_empty() {
            return Err(invalid("at least one level is required"));
        }
        for (i, b) in blocks.iter().enumerate() {
            let s = i as u32 + 1;
            if b.level() != s {
                return Err(invalid(format!("block {i} has level {} instead of {s}", b.level())));
            }
            if b.bound() > &cseq.c(s) {
                return Err(Error::Construction(format!("block bound {} exceeds c_{s}", b.bound())));
            }
        }
        let sets = (1..=blocks.len() as u32)
            .map(|s| LevelSet::restricted(params, s))
            .collect::<Result<Vec<_>>>()?;
        let max_coeff = blocks.iter().map(CoefficientBlock::max_abs).fold(0.0, f64::max);
        let av = AssembledVector { inner: Arc::new(Inner { params, op, cseq, blocks, sets, max_coeff }) };
        av.check_covering_intervals(CONSTRUCTION_CHECK_HORIZON)?;
        Ok(av)
    }

    fn check_covering_intervals(&self, horizon: u64) -> Result<()> {
        let mut intervals: Vec<(u64, u64, u32)> = Vec::new();
        for (set, s) in self.inner.sets.iter().zip(1u32..) {
            let r = 1u64 << s;
            for k in set.members_up_to(horizon) {
                let lo = k.checked_sub(r).filter(|&lo| lo >= 1).ok_or_else(|| {
                    Error::Construction(format!("I_{{{k},{s}}} reaches below 1"))
                })?;
                intervals.push((lo, k + r, s));
            }
        }
        intervals.sort_unstable();
        let gap = 2 * self.inner.params.d() + 1;
        for w in intervals.windows(2) {
            let ((_, hi, s), (lo, _, s2)) = (w[0], w[1]);
            if lo < hi || lo - hi < gap {
                return Err(Error::Construction(format!(
                    "covering intervals of levels {s} and {s2} at {hi} and {lo} are closer than {gap}"
                )));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &SeparationParams {
        &self.inner.params
    }

    pub fn operator(&self) -> &ShiftOperator {
        &self.inner.op
    }

    pub fn c_sequence(&self) -> &CSequence {
        &self.inner.cseq
    }

    pub fn s_max(&self) -> u32 {
        self.inner.blocks.len() as u32
    }

    pub fn block(&self, s: u32) -> Option<&CoefficientBlock> {
        s.checked_sub(1).and_then(|i| self.inner.blocks.get(i as usize))
    }

    pub fn blocks(&self) -> &[CoefficientBlock] {
        &self.inner.blocks
    }

    pub fn level_set(&self, s: u32) -> Option<&LevelSet> {
        s.checked_sub(1).and_then(|i| self.inner.sets.get(i as usize))
    }

    /// The unique `(s, k)` with `k ∈ D_s` and `|i - k| ≤ 2^s`, if any.
    ///
    /// Members of `D_s` are multiples of `m_s > 2^(s+1) + 1`, so at most one
    /// multiple of `m_s` lies within `2^s` of `i`: the nearest one.
    pub fn locate(&self, i: u64) -> Option<Cover> {
        for (set, s) in self.inner.sets.iter().zip(1u32..) {
            let m = self.inner.params.modulus(s);
            let k = (i + m / 2) / m * m;
            if k >= 1 && k.abs_diff(i) <= 1u64 << s && set.contains(k) {
                return Some(Cover { s, k });
            }
        }
        None
    }

    /// `b_i`.
    pub fn coefficient_b(&self, i: u64) -> Scalar {
        match self.locate(i) {
            Some(Cover { s, k }) => self.inner.blocks[s as usize - 1].get(k as i64 - i as i64),
            None => scalar::zero(),
        }
    }

    /// `Re b_i > 0`, without materialising `b_i`.
    pub fn in_return_set(&self, i: u64) -> bool {
        match self.locate(i) {
            Some(Cover { s, k }) => self.inner.blocks[s as usize - 1].re_positive_at(k as i64 - i as i64),
            None => false,
        }
    }

    /// `⟨e₀*, T^n x⟩`, which equals `ω^n · x_n = b_n` for the shift.
    pub fn orbit_functional_analytic(&self, n: u64) -> Scalar {
        self.coefficient_b(n)
    }

    /// `x_m = b_m ω^(-m)`, exact.
    pub fn coordinate(&self, m: u64) -> Scalar {
        let b = self.coefficient_b(m);
        if scalar::is_zero(&b) {
            return b;
        }
        &b * &powi(self.inner.op.omega(), -(m as i64)).expect("ω is non-zero")
    }

    fn decay(&self) -> Decay {
        Decay::new(self.inner.max_coeff.max(f64::MIN_POSITIVE), 1.0 / self.inner.op.omega_abs())
    }

    /// `x` itself as a coordinate sequence.
    pub fn as_lazy(&self) -> LazyVector {
        let me = self.clone();
        LazyVector::from_fn(move |m| me.coordinate(m), vec![], Some(Tail { start: 0, decay: Some(self.decay()) }))
    }

    /// `T^n x`, with `(T^n x)_m = b_{n+m} ω^(-m)`.
    pub fn orbit_point(&self, n: u64) -> LazyVector {
        let me = self.clone();
        let omega = self.inner.op.omega().clone();
        LazyVector::from_fn(
            move |m| {
                let b = me.coefficient_b(n + m);
                if scalar::is_zero(&b) {
                    b
                } else {
                    &b * &powi(&omega, -(m as i64)).expect("ω is non-zero")
                }
            },
            vec![],
            Some(Tail { start: 0, decay: Some(self.decay()) }),
        )
    }

    /// `x_s = Σ_{|j|≤2^s} a_j T^j x₀`, assembled from the chain. Terms with
    /// `j > 0` vanish since `T^j x₀ = 0`.
    pub fn block_vector(&self, s: u32) -> Result<LazyVector> {
        self.chain_combination(s, 0)
    }

    /// `T^p x_s = Σ_j a_j T^(j+p) x₀` for any integer `p`, expanded through
    /// the chain.
    fn chain_combination(&self, s: u32, p: i64) -> Result<LazyVector> {
        let block = self.block(s).ok_or_else(|| invalid(format!("level {s} outside 1..={}", self.s_max())))?;
        let op = &self.inner.op;
        let mut terms = Vec::new();
        for (j, a) in block.entries() {
            let v = op.chain(-(j + p)).scale(a);
            terms.extend(v.finite_indices().map(|m| (m, v.coeff(m))));
        }
        Ok(LazyVector::from_terms(terms))
    }

    /// `r_s = #{p ∈ [-(2^s+d), 2^s+d] : Re ⟨e₀*, T^p x_s⟩ > 0}`, evaluated
    /// from the definition.
    pub fn r_value(&self, s: u32) -> Result<u64> {
        let reach = (1i64 << s) + self.inner.params.d() as i64;
        let mut count = 0;
        for p in -reach..=reach {
            if scalar::re_positive(&functional_eval(&self.chain_combination(s, p)?)) {
                count += 1;
            }
        }
        Ok(count)
    }

    /// `r_s` for `s = 1..=s_max`.
    pub fn r_values(&self) -> Result<Vec<u64>> {
        (1..=self.s_max()).map(|s| self.r_value(s)).collect()
    }

    /// `#I_{k,s}^+`, counted directly on the orbit around `k`.
    pub fn interval_positive_count(&self, s: u32, k: u64) -> u64 {
        let reach = (1u64 << s) + self.inner.params.d();
        (k.saturating_sub(reach).max(1)..=k + reach).filter(|&n| self.in_return_set(n)).count() as u64
    }

    /// Certified `‖T^n x - x_r‖` against the bound
    /// `(Σ_{s<r} c_s) ε_r + Σ_{s≥r} c_s ε_s`.
    pub fn verify_fhc_approx(&self, r: u32, n: u64, tail_tol: f64) -> Result<FhcApproxCheck> {
        let set = self.level_set(r).ok_or_else(|| invalid(format!("level {r} outside 1..={}", self.s_max())))?;
        if !set.contains(n) {
            return Err(invalid(format!("{n} is not in D_{r}")));
        }
        let diff = self.orbit_point(n).sub(&self.block_vector(r)?);
        let norm = self.inner.op.norm(&diff, tail_tol)?;
        let op = self.inner.op.clone();
        let bound = fhc_error_bound(&self.inner.cseq, &|s| op.epsilon(s), r);
        Ok(FhcApproxCheck { r, n, norm, bound, holds: norm.value + norm.tail_bound <= bound + tail_tol })
    }

    /// `Σ_{i ∈ I_s, i ≤ horizon} σ_i b_i T^(-i) x₀` with signs from `sign`.
    pub fn signed_level_sum(&self, s: u32, horizon: u64, sign: &mut dyn FnMut(u64) -> bool) -> Result<LazyVector> {
        let set = self.level_set(s).ok_or_else(|| invalid(format!("level {s} outside 1..={}", self.s_max())))?;
        let block = &self.inner.blocks[s as usize - 1];
        let r = 1u64 << s;
        let mut terms = Vec::new();
        for k in set.members_up_to(horizon + r) {
            for i in k - r..=(k + r).min(horizon) {
                let b = block.get(k as i64 - i as i64);
                if b.is_zero() {
                    continue;
                }
                let c = &b * &powi(self.inner.op.omega(), -(i as i64))?;
                terms.push((i, if sign(i) { c } else { -c }));
            }
        }
        Ok(LazyVector::from_terms(terms))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhcApproxCheck {
    pub r: u32,
    pub n: u64,
    pub norm: NormEstimate,
    pub bound: f64,
    pub holds: bool,
}
