//! Separated dyadic block families.
//!
//! For a level `s ≥ 1` and a scale `j ≥ s` the block `I_j^(s)` is the
//! half-open range
//!
//! ```text
//! [2^(j+1) - 2^(j-s+1), 2^(j+1) - 2^(j-s))
//! ```
//!
//! i.e. the integers whose binary expansion has exactly `s` leading ones,
//! followed by a zero, with the top bit at position `j`. Blocks for distinct
//! `(s, j)` are therefore disjoint, and locating the block of an integer is
//! a couple of bit operations.
//!
//! Inside each block the level set `L_j^(s)` keeps the multiples of the
//! modulus `m_s = 2^(s+1+p)` lying at distance at least `m_s` from the
//! outside of the block. The union over all scales `j ≥ 2s+p+2` is `Δ_s`;
//! restricting to scales in `J = 5ℕ ∪ (5ℕ+2)` gives `D_s`, the set whose
//! prefix densities oscillate between two different limits.

mod fact0;
mod verify;

use serde::Serialize;

use crate::densities::IntegerSet;
use crate::error::{Error, Result};
use crate::report::ParamsRecord;

pub use fact0::{fact0_table, s_limit, s_sum, write_fact0_csv, Fact0Row, FACT0_SUP};
pub use verify::{
    class_limit, verify_checkpoint_gap, verify_class_limits, verify_counting_bounds, verify_lower_density,
    verify_mass_bound, verify_separation, CLASS_LIMIT_TOLERANCE,
};

/// Largest scale for which block endpoints fit in a `u64`.
pub const MAX_SCALE: u32 = 62;

/// Half-width bound `d` and separation exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SeparationParams {
    d: u64,
    p: u32,
}

impl SeparationParams {
    /// Validated parameters: `d ≥ 1`, `p ≥ 1` and `2^(2+p) ≥ 5 + 2d`.
    pub fn new(d: u64, p: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParams("d must be at least 1".into()));
        }
        if p == 0 {
            return Err(Error::InvalidParams("p must be at least 1".into()));
        }
        if p > 40 {
            return Err(Error::InvalidParams(format!("p = {p} is out of range")));
        }
        if !Self::separates(d, p) {
            return Err(Error::InvalidParams(format!(
                "2^(s+1+p) >= 2^(s+1) + 2d + 1 fails at s = 1 for d = {d}, p = {p}"
            )));
        }
        Ok(SeparationParams { d, p })
    }

    /// The smallest admissible `p` for this `d`.
    pub fn minimal(d: u64) -> Result<Self> {
        Self::new(d, min_p_for(d)?)
    }

    /// Skips validation so that deliberately broken configurations (such as
    /// `p = 0`) can be fed to the verifiers. Sets built from these
    /// parameters are still well defined; they just fail the separation
    /// properties.
    pub fn unchecked(d: u64, p: u32) -> Self {
        SeparationParams { d, p }
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn is_valid(&self) -> bool {
        self.d >= 1 && self.p >= 1 && Self::separates(self.d, self.p)
    }

    fn separates(d: u64, p: u32) -> bool {
        // s = 1 is the binding case: 2^(s+1)·(2^p - 1) grows with s.
        (1u128 << (2 + p)) >= 5 + 2 * d as u128
    }

    /// `m_s = 2^(s+1+p)`.
    pub fn modulus(&self, s: u32) -> u64 {
        1u64 << (s + 1 + self.p)
    }

    /// Smallest scale `2s + p + 2` carrying a level set.
    pub fn first_scale(&self, s: u32) -> u32 {
        2 * s + self.p + 2
    }

    /// Gap required between members of levels `s` and `s'`:
    /// `2^(max(s,s')+1) + 2d + 1`.
    pub fn separation_threshold(&self, s: u32, s_other: u32) -> u64 {
        (1u64 << (s.max(s_other) + 1)) + 2 * self.d + 1
    }

    pub fn record(&self) -> ParamsRecord {
        ParamsRecord { d: self.d, p: self.p }
    }
}

/// Smallest `p ≥ 1` with `2^(2+p) ≥ 2d + 5`.
pub fn min_p_for(d: u64) -> Result<u32> {
    if d == 0 {
        return Err(Error::InvalidParams("d must be at least 1".into()));
    }
    (1..=61)
        .find(|&p| SeparationParams::separates(d, p))
        .ok_or_else(|| Error::InvalidParams(format!("no p fits d = {d}")))
}

/// `J = 5ℕ ∪ (5ℕ + 2)`.
pub fn in_residue_set(j: u32) -> bool {
    matches!(j % 5, 0 | 2)
}

/// `⌊log₂ n⌋`, the scale `j` with `n ∈ [2^j, 2^(j+1))`.
pub fn scale_index(n: u64) -> Result<u32> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("scale index needs n >= 2, got {n}")));
    }
    Ok(63 - n.leading_zeros())
}

/// The `(s, j)` of the block containing `n`, if any. Integers of the form
/// `2^k - 1` (all ones) lie in no block.
pub fn locate_block(n: u64) -> Option<(u32, u32)> {
    if n < 2 {
        return None;
    }
    let j = 63 - n.leading_zeros();
    let s = (n << n.leading_zeros()).leading_ones();
    (s <= j).then_some((s, j))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockInterval {
    pub s: u32,
    pub j: u32,
    pub lo: u64,
    pub hi: u64,
}

impl BlockInterval {
    pub fn width(&self) -> u64 {
        self.hi - self.lo
    }

    pub fn contains(&self, n: u64) -> bool {
        self.lo <= n && n < self.hi
    }

    /// `d(n, ℕ \ I)` for a member `n`.
    pub fn distance_to_outside(&self, n: u64) -> u64 {
        debug_assert!(self.contains(n));
        (n - (self.lo - 1)).min(self.hi - n)
    }
}

/// `I_j = [2^j, 2^(j+1))`, the block of scale `j` with no level refinement.
pub fn dyadic_interval(j: u32) -> Result<(u64, u64)> {
    if j > MAX_SCALE {
        return Err(Error::ScaleOverflow(j));
    }
    Ok((1u64 << j, 1u64 << (j + 1)))
}

/// `I_j^(s)` in closed form.
pub fn interval_ijs(s: u32, j: u32) -> Result<BlockInterval> {
    if s == 0 || j < s {
        return Err(Error::InvalidArgument(format!("block needs j >= s >= 1, got s = {s}, j = {j}")));
    }
    if j > MAX_SCALE {
        return Err(Error::ScaleOverflow(j));
    }
    let top = 1u64 << (j + 1);
    Ok(BlockInterval { s, j, lo: top - (1u64 << (j - s + 1)), hi: top - (1u64 << (j - s)) })
}

/// An arithmetic progression `first, first + step, …` of `len` terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelRun {
    pub block: BlockInterval,
    pub first: u64,
    pub step: u64,
    pub len: u64,
}

impl LevelRun {
    pub fn last(&self) -> Option<u64> {
        (self.len > 0).then(|| self.first + (self.len - 1) * self.step)
    }

    pub fn contains(&self, n: u64) -> bool {
        match self.last() {
            Some(last) => n >= self.first && n <= last && (n - self.first) % self.step == 0,
            None => false,
        }
    }

    pub fn count_up_to(&self, n: u64) -> u64 {
        if self.len == 0 || n < self.first {
            0
        } else {
            ((n - self.first) / self.step + 1).min(self.len)
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.first + i * self.step)
    }

    /// Smallest member `≥ n`.
    pub fn successor(&self, n: u64) -> Option<u64> {
        let last = self.last()?;
        if n > last {
            return None;
        }
        if n <= self.first {
            return Some(self.first);
        }
        Some(self.first + (n - self.first).div_ceil(self.step) * self.step)
    }

    /// Largest member `≤ n`.
    pub fn predecessor(&self, n: u64) -> Option<u64> {
        let last = self.last()?;
        if n < self.first {
            return None;
        }
        Some(last.min(self.first + (n - self.first) / self.step * self.step))
    }
}

/// `L_j^(s)` as a progression. Only scales `j ≥ 2s + p + 2` are accepted.
pub fn level_run(params: &SeparationParams, s: u32, j: u32) -> Result<LevelRun> {
    if s == 0 {
        return Err(Error::InvalidArgument("level s must be at least 1".into()));
    }
    if j < params.first_scale(s) {
        return Err(Error::InvalidArgument(format!(
            "level set L_j^(s) needs j >= 2s+p+2 = {}, got j = {j}",
            params.first_scale(s)
        )));
    }
    if s + 1 + params.p() > MAX_SCALE {
        return Err(Error::ScaleOverflow(s + 1 + params.p()));
    }
    let block = interval_ijs(s, j)?;
    let m = params.modulus(s);
    // i - (lo - 1) >= m and hi - i >= m, i ≡ 0 (mod m)
    let first = (block.lo - 1 + m).div_ceil(m) * m;
    let len = match block.hi.checked_sub(m) {
        Some(top) if top >= first => (top / m * m - first) / m + 1,
        _ => 0,
    };
    Ok(LevelRun { block, first, step: m, len })
}

/// `L_j^(s)` materialized.
pub fn level_set_l(params: &SeparationParams, s: u32, j: u32) -> Result<Vec<u64>> {
    Ok(level_run(params, s, j)?.iter().collect())
}

/// `D_s` (scales restricted to `J`) or `Δ_s` (all scales), represented by its
/// membership predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelSet {
    params: SeparationParams,
    s: u32,
    restricted: bool,
}

impl LevelSet {
    /// `D_s`.
    pub fn restricted(params: SeparationParams, s: u32) -> Result<Self> {
        Self::build(params, s, true)
    }

    /// `Δ_s`.
    pub fn unrestricted(params: SeparationParams, s: u32) -> Result<Self> {
        Self::build(params, s, false)
    }

    fn build(params: SeparationParams, s: u32, restricted: bool) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidArgument("level s must be at least 1".into()));
        }
        if params.first_scale(s) > MAX_SCALE {
            return Err(Error::ScaleOverflow(params.first_scale(s)));
        }
        Ok(LevelSet { params, s, restricted })
    }

    pub fn level(&self) -> u32 {
        self.s
    }

    pub fn params(&self) -> &SeparationParams {
        &self.params
    }

    pub fn is_restricted(&self) -> bool {
        self.restricted
    }

    pub fn admits_scale(&self, j: u32) -> bool {
        j >= self.params.first_scale(self.s) && j <= MAX_SCALE && (!self.restricted || in_residue_set(j))
    }

    /// Admissible scales in increasing order, up to [`MAX_SCALE`].
    pub fn scales(&self) -> impl Iterator<Item = u32> + '_ {
        (self.params.first_scale(self.s)..=MAX_SCALE).filter(|&j| self.admits_scale(j))
    }

    /// The runs whose block starts at or below `horizon`.
    pub fn runs_up_to(&self, horizon: u64) -> impl Iterator<Item = LevelRun> + '_ {
        self.scales()
            .map(|j| level_run(&self.params, self.s, j).expect("admissible scale"))
            .take_while(move |run| run.block.lo <= horizon)
    }

    /// Smallest member `≥ n`.
    pub fn successor(&self, n: u64) -> Option<u64> {
        self.scales()
            .map(|j| level_run(&self.params, self.s, j).expect("admissible scale"))
            .find_map(|run| run.successor(n))
    }

    /// Largest member `≤ n`.
    pub fn predecessor(&self, n: u64) -> Option<u64> {
        self.runs_up_to(n).filter_map(|run| run.predecessor(n)).last()
    }

    /// `d(n, D_s)`, exact.
    pub fn distance_from(&self, n: u64) -> Option<u64> {
        let below = self.predecessor(n).map(|k| n - k);
        let above = self.successor(n).map(|k| k - n);
        match (below, above) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

impl IntegerSet for LevelSet {
    fn contains(&self, n: u64) -> bool {
        match locate_block(n) {
            Some((s, j)) if s == self.s && self.admits_scale(j) => {
                let m = self.params.modulus(self.s);
                if n % m != 0 {
                    return false;
                }
                let block = interval_ijs(s, j).expect("located block");
                block.distance_to_outside(n) >= m
            }
            _ => false,
        }
    }

    fn members_up_to(&self, horizon: u64) -> Vec<u64> {
        let mut out = Vec::new();
        for run in self.runs_up_to(horizon) {
            out.extend(run.iter().take_while(|&k| k <= horizon));
        }
        out
    }

    fn count_up_to(&self, horizon: u64) -> u64 {
        self.runs_up_to(horizon).map(|run| run.count_up_to(horizon)).sum()
    }
}

/// `D_s ∩ [1, N]`.
pub fn enumerate_d(params: &SeparationParams, s: u32, horizon: u64) -> Result<Vec<u64>> {
    Ok(LevelSet::restricted(*params, s)?.members_up_to(horizon))
}

pub fn d_membership(params: &SeparationParams, s: u32, n: u64) -> Result<bool> {
    Ok(LevelSet::restricted(*params, s)?.contains(n))
}

pub fn delta_membership(params: &SeparationParams, s: u32, n: u64) -> Result<bool> {
    Ok(LevelSet::unrestricted(*params, s)?.contains(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CheckpointClass {
    /// `q_l ≡ 0 (mod 5)`.
    #[serde(rename = "CLASS1")]
    Class1,
    /// `q_l ≡ 2 (mod 5)`.
    #[serde(rename = "CLASS2")]
    Class2,
}

impl CheckpointClass {
    pub fn label(&self) -> &'static str {
        match self {
            CheckpointClass::Class1 => "CLASS1",
            CheckpointClass::Class2 => "CLASS2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Checkpoint {
    /// 1-based position `l`.
    pub l: usize,
    pub q: u32,
    /// `N_l = 2^(q_l + 1)`.
    pub n: u64,
    pub class: CheckpointClass,
}

/// The first `count` checkpoints `N_l = 2^(q_l+1)`, `q_l` running through
/// `J ∩ [p+4, ∞)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Checkpoints(pub Vec<Checkpoint>);

impl Checkpoints {
    pub fn iter(&self) -> std::slice::Iter<'_, Checkpoint> {
        self.0.iter()
    }

    pub fn values(&self) -> Vec<u64> {
        self.0.iter().map(|c| c.n).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries with `q_l` in `[q_min, q_max]`.
    pub fn in_q_range(&self, q_min: u32, q_max: u32) -> Vec<Checkpoint> {
        self.0.iter().copied().filter(|c| c.q >= q_min && c.q <= q_max).collect()
    }
}

pub fn checkpoints(params: &SeparationParams, count: usize) -> Result<Checkpoints> {
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one checkpoint".into()));
    }
    let mut out = Vec::with_capacity(count);
    let mut q = params.p() + 4;
    while out.len() < count {
        if in_residue_set(q) {
            if q + 1 > 63 {
                return Err(Error::ScaleOverflow(q + 1));
            }
            let class = if q % 5 == 0 { CheckpointClass::Class1 } else { CheckpointClass::Class2 };
            out.push(Checkpoint { l: out.len() + 1, q, n: 1u64 << (q + 1), class });
        }
        q += 1;
    }
    Ok(Checkpoints(out))
}

/// Checkpoints covering every `q ∈ J ∩ [p+4, q_max]`.
pub fn checkpoints_through(params: &SeparationParams, q_max: u32) -> Result<Checkpoints> {
    let count = (params.p() + 4..=q_max).filter(|&q| in_residue_set(q)).count();
    checkpoints(params, count.max(1))
}
